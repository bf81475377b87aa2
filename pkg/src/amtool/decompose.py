"""Graph-to-tree conversion: lossless latent dependency trees.

Stages: every edge joins the constant of one endpoint (heuristic tables),
open ends become source-marked placeholders, lexical alternations yield
ordered per-constant variants, shared arguments are discharged by request
annotations (control, coordination, raising, comparative), and the
surviving open ends orient the dependency edges.  Evaluating the output
must rebuild the input graph; otherwise the instance is rejected with a
reason code.

Placeholders keep the ids of the graph nodes they stand for, so the merges
performed during evaluation are unions of equal ids and the round trip
preserves node identity, not merely isomorphism.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field

from .algebra import (AmDepTree, AmToken, OP_IGNORE, OP_ROOT, OperationError,
                      app_op, evaluate, mod_op, op_kind, op_source)
from .graphs import (AsGraph, EMPTY_TYPE, Edge, GraphSyntaxError, RequestType,
                     SemGraph, asgraph_from_parts, semgraph_isomorphic)
from .lexical import LEX_MARK, delexicalize, modified_lemma
from .sdp import COORD_MARK
from .tables import HeuristicTable, PatternConfig

__all__ = [
    "Word", "DecompInstance", "DecomposeConfig", "NonDecomposable", "REASONS",
    "GroupedEdge", "EdgeGrouping", "group_edges", "assign_sources",
    "build_constants", "enumerate_variants", "infer_annotations",
    "extract_tree", "decompose", "delexicalize_tree",
]

REASONS = ("MultipleRootsNeeded", "UnmatchedReentrancy", "NotATree",
           "IllTyped", "RoundTripMismatch")

_OP_FAMILY = re.compile(r"^op[0-9]*$")
_O_SLOT = re.compile(r"^O([0-9]*)$")


class NonDecomposable(Exception):
    """The instance admits no tree under the current table and config."""

    def __init__(self, reason: str, message: str = "", sent_id: str | None = None):
        if reason not in REASONS:
            raise ValueError(f"unknown reason {reason!r}")
        self.reason = reason
        self.message = message
        self.sent_id = sent_id
        detail = f"{reason}: {message}" if message else reason
        if sent_id is not None:
            detail = f"[{sent_id}] {detail}"
        super().__init__(detail)


@dataclass(frozen=True)
class Word:
    form: str
    lemma: str = "_"
    pos: str = "_"
    ne: str = "O"


@dataclass
class DecompInstance:
    """One aligned sentence: graph, tokens, and a total node-to-token map."""

    sent_id: str
    graph: SemGraph
    words: list[Word]
    alignment: dict[str, int]
    text: str | None = None


@dataclass
class DecomposeConfig:
    # one variant combination is tried at a time, in global preference order
    max_variant_combos: int = 1000
    patterns: PatternConfig | None = None


@dataclass(frozen=True)
class GroupedEdge:
    edge: Edge
    owner: str
    open_end: str
    source: str
    kind: str  # APP/MOD bookkeeping from the table; orientation is decided later


@dataclass
class EdgeGrouping:
    edges: dict[Edge, GroupedEdge]
    # (owner token, open-end node) -> disambiguated source name
    slot_sources: dict[tuple[int, str], str] = field(default_factory=dict)


def _label_base(label: str | None) -> str:
    if not label:
        return ""
    return label.split("|", 1)[0].split("~", 1)[0]


def _match_label(label: str) -> str:
    if label.endswith(COORD_MARK):
        return label[:-len(COORD_MARK)]
    return label


def group_edges(graph: SemGraph, table: HeuristicTable) -> EdgeGrouping:
    """Attach every edge to one endpoint per the table's first matching rule."""
    grouped = {}
    for edge in sorted(graph.edges):
        origin, target, label = edge
        rule = table.match(_match_label(label))
        owner, open_end = (origin, target) if rule.to_origin else (target, origin)
        if _label_base(graph.nodes.get(target)) in table.target_override_labels:
            owner, open_end = target, origin
        grouped[edge] = GroupedEdge(edge, owner, open_end, rule.source, rule.kind)
    return EdgeGrouping(grouped)


def assign_sources(grouping: EdgeGrouping, alignment: dict[str, int],
                   table: HeuristicTable) -> EdgeGrouping:
    """Disambiguate duplicate source names within each token's constant.

    The first slot keeps the bare name, later ones get suffixes 2, 3, ...
    Slots are ordered by node id, or by aligned word position when the
    bank's flag asks for it.  Suffixed names never collide with other
    templates already present on the token.
    """
    templates: dict[tuple[int, str], str] = {}
    for edge in sorted(grouping.edges):
        grp = grouping.edges[edge]
        owner_token = alignment[grp.owner]
        if alignment[grp.open_end] == owner_token:
            continue
        key = (owner_token, grp.open_end)
        if key not in templates or grp.source < templates[key]:
            templates[key] = grp.source
    by_token: dict[int, list[tuple[str, str]]] = {}
    for (token, node), src in templates.items():
        by_token.setdefault(token, []).append((node, src))
    resolved: dict[tuple[int, str], str] = {}
    for token, slots in sorted(by_token.items()):
        groups: dict[str, list[str]] = {}
        for node, src in slots:
            groups.setdefault(src, []).append(node)
        taken = set(groups)
        for src in sorted(groups):
            nodes = groups[src]
            if table.word_order_sources:
                nodes.sort(key=lambda n: (alignment[n], n))
            else:
                nodes.sort()
            for rank, node in enumerate(nodes):
                if rank == 0:
                    name = src
                else:
                    bump = rank + 1
                    while f"{src}{bump}" in taken:
                        bump += 1
                    name = f"{src}{bump}"
                    taken.add(name)
                resolved[(token, node)] = name
    return EdgeGrouping(dict(grouping.edges), resolved)


def build_constants(graph: SemGraph, grouping: EdgeGrouping,
                    alignment: dict[str, int],
                    n_tokens: int | None = None) -> dict[int, AsGraph | None]:
    """Per token: aligned nodes, owned edges, placeholders for open ends.

    The constant root is the node the rest of the graph enters at (a node
    claimed by another token's edge, or the graph root).  Two distinct
    entry nodes cannot both merge outward, hence MultipleRootsNeeded.
    """
    if n_tokens is None:
        n_tokens = max(alignment.values(), default=0)
    nodes_of: dict[int, set[str]] = {}
    for node, token in alignment.items():
        if node in graph.nodes:
            nodes_of.setdefault(token, set()).add(node)
    claimed: dict[int, set[str]] = {}
    for edge in sorted(grouping.edges):
        grp = grouping.edges[edge]
        open_token = alignment[grp.open_end]
        if open_token != alignment[grp.owner]:
            claimed.setdefault(open_token, set()).add(grp.open_end)
    constants: dict[int, AsGraph | None] = {}
    for token in range(1, n_tokens + 1):
        mine = nodes_of.get(token)
        if not mine:
            constants[token] = None
            continue
        nodes: dict[str, str | None] = {n: graph.nodes[n] for n in mine}
        edges: set[Edge] = set()
        sources: dict[str, str] = {}
        for edge in graph.edges:
            grp = grouping.edges[edge]
            if alignment[grp.owner] != token:
                continue
            edges.add(edge)
            if grp.open_end not in mine:
                nodes.setdefault(grp.open_end, None)
                sources[grp.open_end] = grouping.slot_sources[(token, grp.open_end)]
        entries = set(claimed.get(token, set()))
        if graph.roots and graph.roots[0] in mine:
            entries.add(graph.roots[0])
        if len(entries) > 1:
            raise NonDecomposable(
                "MultipleRootsNeeded",
                f"token {token} is entered at nodes {sorted(entries)}")
        if entries:
            root = next(iter(entries))
        else:
            internal_targets = {t for o, t, _ in edges if o in mine and t in mine}
            free = [n for n in sorted(mine) if n not in internal_targets]
            root = free[0] if free else min(mine)
        try:
            constants[token] = asgraph_from_parts(nodes, edges, root, sources)
        except GraphSyntaxError as exc:
            raise NonDecomposable("MultipleRootsNeeded",
                                  f"token {token}: {exc}") from exc
    return constants


# -- constant variants --------------------------------------------------------


def _o_index(name: str) -> int | None:
    hit = _O_SLOT.match(name)
    if not hit:
        return None
    return int(hit.group(1) or "1")


def _o_name(index: int) -> str:
    return "O" if index == 1 else f"O{index}"


def enumerate_variants(constant: AsGraph) -> list[AsGraph]:
    """Source-renamed alternations of one constant, most preferred first.

    Moves: promote an O-family source to a lower unused index, turn the
    lowest O into S when no S is present (unaccusative), swap S with the
    lowest O (passive).  Preference: promote as far as possible, use the
    unaccusative subject, avoid passive.
    """
    base = tuple(sorted(constant.sources.items()))
    seen: dict[tuple, int] = {base: 0}
    queue = [base]
    while queue:
        state = queue.pop(0)
        swaps = seen[state]
        entry = dict(state)
        used = set(entry.values())
        o_slots = sorted((idx, node) for node, src in entry.items()
                         if (idx := _o_index(src)) is not None)
        nexts: list[tuple[dict, int]] = []
        for node, src in state:
            idx = _o_index(src)
            if idx is None:
                continue
            for lower in range(1, idx):
                if _o_name(lower) not in used:
                    step = dict(entry)
                    step[node] = _o_name(lower)
                    nexts.append((step, swaps))
        if o_slots and "S" not in used:
            _, node = o_slots[0]
            step = dict(entry)
            step[node] = "S"
            nexts.append((step, swaps))
        if o_slots and "S" in used:
            s_node = next(n for n, s in entry.items() if s == "S")
            _, o_node = o_slots[0]
            step = dict(entry)
            step[s_node], step[o_node] = entry[o_node], "S"
            nexts.append((step, swaps + 1))
        for step, cost in nexts:
            key = tuple(sorted(step.items()))
            if key not in seen or cost < seen[key]:
                seen[key] = cost
                queue.append(key)
    ranked = []
    for state, swaps in seen.items():
        entry = dict(state)
        indices = sorted(i for i in map(_o_index, entry.values()) if i is not None)
        slack = sum(indices) - sum(range(1, len(indices) + 1))
        missed = 1 if indices and "S" not in entry.values() else 0
        tag = ",".join(f"{n}={s}" for n, s in state)
        ranked.append(((slack, missed, swaps, tag), dict(state)))
    ranked.sort(key=lambda item: item[0])
    out = []
    for _, sources in ranked:
        out.append(asgraph_from_parts(dict(constant.graph.nodes),
                                      set(constant.graph.edges),
                                      constant.root, sources))
    return out


# -- claim resolution ----------------------------------------------------------


@dataclass(frozen=True)
class _Claim:
    owner: int
    node: str
    target: int
    source: str
    labels: tuple[str, ...]  # labels of the edges behind this slot, for gates


def _collect_claims(constants: dict[int, AsGraph | None],
                    grouping: EdgeGrouping,
                    alignment: dict[str, int]) -> dict[tuple[int, str], _Claim]:
    raw: dict[tuple[int, str], tuple[int, set[str]]] = {}
    for edge in sorted(grouping.edges):
        grp = grouping.edges[edge]
        owner = alignment[grp.owner]
        target = alignment[grp.open_end]
        if owner == target:
            continue
        key = (owner, grp.open_end)
        _, labels = raw.setdefault(key, (target, set()))
        labels.add(_match_label(edge[2]))
    claims = {}
    for (owner, node), (target, labels) in raw.items():
        source = constants[owner].sources[node]
        claims[(owner, node)] = _Claim(owner, node, target, source,
                                       tuple(sorted(labels)))
    return claims


class _Resolution:
    """Tree shape plus the claim dispositions that justify it."""

    def __init__(self):
        self.parent: dict[int, tuple[int, str]] = {}
        self.order: dict[int, int] = {}
        self.attach_source: dict[int, str | None] = {}
        self.realized: set[tuple[int, str]] = set()
        self.passed: list[_Claim] = []  # discharged by annotation passing
        self.shared: dict[tuple[int, str], _Claim] = {}  # modifier-side merges
        self.coord_attached: set[int] = set()

    def place(self, token: int, head: int, op: str, source: str | None):
        self.parent[token] = (head, op)
        self.order[token] = len(self.order)
        self.attach_source[token] = source

    def ancestors(self, token: int) -> list[int]:
        chain = []
        cursor = token
        while cursor in self.parent:
            cursor = self.parent[cursor][0]
            if cursor == 0:
                break
            chain.append(cursor)
        return chain

    def in_subtree(self, token: int, top: int) -> bool:
        return token == top or top in self.ancestors(token)


def _coordination_attach(res: _Resolution, target: int, bundle: list[_Claim],
                         config: PatternConfig) -> None:
    if config.coordination == "none":
        raise NonDecomposable("UnmatchedReentrancy",
                              f"{len(bundle)} simultaneous claims on token "
                              f"{target} and no coordination pattern")
    heads = {res.parent[cl.owner][0] for cl in bundle}
    if len(heads) != 1:
        raise NonDecomposable("UnmatchedReentrancy",
                              f"claimants of token {target} have no common head")
    head = next(iter(heads))
    for cl in bundle:
        op = res.parent[cl.owner][1]
        if op_kind(op) != "APP":
            raise NonDecomposable("UnmatchedReentrancy",
                                  f"conjunct token {cl.owner} is not an argument")
        if config.coordination == "edge-label" and \
                not _OP_FAMILY.match(op_source(op) or ""):
            raise NonDecomposable("UnmatchedReentrancy",
                                  f"token {cl.owner} lacks a coordination slot")
    sigmas = {cl.source for cl in bundle}
    if len(sigmas) != 1:
        raise NonDecomposable("UnmatchedReentrancy",
                              f"conjunct sources disagree: {sorted(sigmas)}")
    sigma = next(iter(sigmas))
    res.place(target, head, app_op(sigma), sigma)
    res.coord_attached.add(target)
    res.passed.extend(bundle)


def _discharge(res: _Resolution, cl: _Claim, root_token: int,
               claims: dict[tuple[int, str], _Claim],
               config: PatternConfig) -> None:
    """A claim whose owner and target both already sit in the tree."""
    head, op = res.parent[cl.owner]
    if op_kind(op) == "MOD" and (head, cl.node) in claims \
            and claims[(head, cl.node)].source == cl.source:
        # the modifier's extra source merges with the head's same-named slot
        res.shared[(cl.owner, cl.node)] = claims[(head, cl.node)]
        return
    target = cl.target
    if target == root_token:
        raise NonDecomposable("UnmatchedReentrancy",
                              f"shared argument at the graph root, token {target}")
    if res.in_subtree(cl.owner, target):
        raise NonDecomposable("UnmatchedReentrancy",
                              f"token {cl.owner} claims its own ancestor {target}")
    if cl.source != res.attach_source.get(target):
        raise NonDecomposable(
            "UnmatchedReentrancy",
            f"token {cl.owner} shares token {target} as {cl.source} but it "
            f"attaches as {res.attach_source.get(target)}")
    meet = res.parent[target][0]
    chain = [cl.owner] + res.ancestors(cl.owner)
    if meet not in chain:
        raise NonDecomposable("UnmatchedReentrancy",
                              f"tokens {cl.owner} and {target} do not meet at "
                              f"{target}'s head")
    for child in chain[:chain.index(meet)]:
        parent_token = res.parent[child][0]
        if (parent_token, cl.node) in claims:
            continue  # control: the higher head claims the shared node itself
        step_op = res.parent[child][1]
        if op_kind(step_op) != "APP":
            raise NonDecomposable("UnmatchedReentrancy",
                                  f"sharing cannot pass the modifier edge into "
                                  f"token {child}")
        slot = op_source(step_op) or ""
        if config.coordination != "none" and (
                _OP_FAMILY.match(slot) or child in res.coord_attached):
            continue  # the coordination pattern carries the shared source
        labels = _step_labels(parent_token, child, claims, res)
        if config.comparative_label and labels and \
                all(lab == config.comparative_label for lab in labels):
            continue
        if cl.source == "S" and labels and (
                config.raising_labels is None
                or all(lab in config.raising_labels for lab in labels)):
            continue
        raise NonDecomposable("UnmatchedReentrancy",
                              f"no pattern licenses passing {cl.source} from "
                              f"token {cl.owner} through token {child}")
    res.passed.append(cl)


def _step_labels(parent_token: int, child: int,
                 claims: dict[tuple[int, str], _Claim],
                 res: _Resolution) -> tuple[str, ...]:
    """Edge labels behind the tree step parent→child, for pattern gates."""
    for claim in claims.values():
        if claim.owner == parent_token and claim.target == child:
            return claim.labels
    # child was attached by a coordination: gate on the absorbed conjunct edges
    labels: list[str] = []
    for claim in res.passed:
        if claim.target == child:
            labels.extend(claim.labels)
    return tuple(sorted(set(labels)))


def _resolve(graph: SemGraph, constants: dict[int, AsGraph | None],
             grouping: EdgeGrouping, alignment: dict[str, int],
             config: PatternConfig, n_tokens: int) -> tuple[_Resolution, dict]:
    if not graph.roots:
        raise NonDecomposable("NotATree", "graph has no root")
    root_node = graph.roots[0]
    root_token = alignment[root_node]
    claims = _collect_claims(constants, grouping, alignment)
    claimed_tokens = {cl.target for cl in claims.values()}
    res = _Resolution()
    res.place(root_token, 0, OP_ROOT, None)
    while True:
        progress = False
        buckets: dict[int, list[_Claim]] = {}
        for key in sorted(claims):
            cl = claims[key]
            if cl.target in res.parent or cl.owner not in res.parent:
                continue
            buckets.setdefault(cl.target, []).append(cl)
        for target in sorted(buckets):
            bundle = buckets[target]
            if len(bundle) == 1:
                cl = bundle[0]
                res.place(target, cl.owner, app_op(cl.source), cl.source)
                res.realized.add((cl.owner, cl.node))
            else:
                _coordination_attach(res, target, bundle, config)
            progress = True
        modders = [cl for key, cl in sorted(claims.items())
                   if cl.target in res.parent and cl.owner not in res.parent]
        modders.sort(key=lambda cl: (res.order[cl.target], cl.owner))
        for cl in modders:
            # a token somebody claims waits to be placed by its claimant
            if cl.owner in res.parent or cl.owner in claimed_tokens:
                continue
            res.place(cl.owner, cl.target, mod_op(cl.source), None)
            res.realized.add((cl.owner, cl.node))
            progress = True
        if not progress:
            # deadlocked claimants (claimed tokens whose own claimants are
            # stuck too) fall back to the modifier reading, one at a time
            for cl in modders:
                if cl.owner in res.parent:
                    continue
                res.place(cl.owner, cl.target, mod_op(cl.source), None)
                res.realized.add((cl.owner, cl.node))
                progress = True
                break
        if not progress:
            break
    stranded = [t for t in range(1, n_tokens + 1)
                if constants.get(t) is not None and t not in res.parent]
    if stranded:
        raise NonDecomposable("NotATree",
                              f"tokens {stranded} are unreachable from the root")
    leftovers = [cl for key, cl in sorted(claims.items())
                 if key not in res.realized
                 and cl not in res.passed
                 and key not in res.shared]
    for cl in leftovers:
        _discharge(res, cl, root_token, claims, config)
    return res, claims


def _subtree_types(res: _Resolution, n_tokens: int) -> dict[int, RequestType]:
    """Request type each token's subtree evaluates to (its unfilled sources)."""
    memo: dict[int, RequestType] = {}
    working: set[int] = set()

    def compute(token: int) -> RequestType:
        if token in memo:
            return memo[token]
        if token in working:
            raise NonDecomposable("UnmatchedReentrancy",
                                  "cyclic argument sharing between subtrees")
        working.add(token)
        entries: dict[str, tuple[int, RequestType]] = {}
        for cl in res.passed:
            if res.in_subtree(cl.owner, token) and \
                    not res.in_subtree(cl.target, token):
                nested = compute(cl.target)
                if cl.source in entries and entries[cl.source][0] != cl.target:
                    raise NonDecomposable(
                        "UnmatchedReentrancy",
                        f"source {cl.source} left open at two different "
                        f"tokens below token {token}")
                entries[cl.source] = (cl.target, nested)
        working.discard(token)
        memo[token] = RequestType(sorted(
            (name, nested) for name, (_, nested) in entries.items()))
        return memo[token]

    for token in range(1, n_tokens + 1):
        if token in res.parent:
            compute(token)
    return memo


def _annotate(constants: dict[int, AsGraph | None], res: _Resolution,
              claims: dict[tuple[int, str], _Claim],
              n_tokens: int) -> dict[int, AsGraph | None]:
    subtree = _subtree_types(res, n_tokens)
    passed_keys = {(cl.owner, cl.node) for cl in res.passed}

    def slot_annotation(key: tuple[int, str]) -> RequestType:
        cl = claims[key]
        if key in res.realized:
            head, op = res.parent.get(cl.owner, (None, None))
            if op is not None and op_kind(op) == "MOD" and head == cl.target:
                return EMPTY_TYPE  # this slot is the modifier's own attachment
            return subtree[cl.target]
        if key in passed_keys:
            return subtree[cl.target]
        if key in res.shared:
            return slot_annotation((res.shared[key].owner, res.shared[key].node))
        raise NonDecomposable("NotATree",
                              f"slot {key} was never realized or discharged")

    annotated: dict[int, AsGraph | None] = {}
    for token in range(1, n_tokens + 1):
        constant = constants.get(token)
        if constant is None:
            annotated[token] = None
            continue
        notes = {}
        for node, name in constant.sources.items():
            notes[name] = slot_annotation((token, node))
        annotated[token] = asgraph_from_parts(
            dict(constant.graph.nodes), set(constant.graph.edges),
            constant.root, dict(constant.sources), notes)
    return annotated


def _assemble(annotated: dict[int, AsGraph | None], res: _Resolution,
              words: list[Word], sent_id: str | None,
              text: str | None) -> AmDepTree:
    tokens = []
    for index in range(1, len(words) + 1):
        word = words[index - 1]
        constant = annotated.get(index)
        if constant is None:
            tokens.append(AmToken(index, word.form, 0, OP_IGNORE,
                                  word.lemma, word.pos, word.ne))
            continue
        head, op = res.parent[index]
        tokens.append(AmToken(index, word.form, head, op,
                              word.lemma, word.pos, word.ne, constant))
    try:
        return AmDepTree(tokens, sent_id, text).validate()
    except ValueError as exc:
        raise NonDecomposable("NotATree", str(exc), sent_id) from exc


def _same_graph(result: SemGraph, graph: SemGraph) -> bool:
    if result.nodes == graph.nodes and result.edges == graph.edges \
            and set(result.roots) == set(graph.roots):
        return True
    return semgraph_isomorphic(result, graph)


def infer_annotations(graph: SemGraph, constants: dict[int, AsGraph | None],
                      grouping: EdgeGrouping, alignment: dict[str, int],
                      config: PatternConfig,
                      n_tokens: int | None = None) -> dict[int, AsGraph | None]:
    """Discharge every shared argument with request annotations, or reject."""
    if n_tokens is None:
        n_tokens = max(alignment.values(), default=0)
    res, claims = _resolve(graph, constants, grouping, alignment, config, n_tokens)
    return _annotate(constants, res, claims, n_tokens)


def extract_tree(graph: SemGraph, constants: dict[int, AsGraph | None],
                 grouping: EdgeGrouping, alignment: dict[str, int],
                 words: list[Word] | None = None,
                 config: PatternConfig | None = None,
                 sent_id: str | None = None,
                 text: str | None = None) -> AmDepTree:
    """Orient the remaining open ends into dependency edges.

    A slot whose open end lies below its owner becomes an apply edge
    (owner is the head); a slot claiming an already-placed token makes the
    owner a modifier child.  Tokens without material attach to 0 via
    IGNORE; the token holding the graph root takes the ROOT edge.
    """
    config = config or PatternConfig()
    if words is None:
        n_tokens = max(alignment.values(), default=0)
        words = [Word(f"w{i}") for i in range(1, n_tokens + 1)]
    res, claims = _resolve(graph, constants, grouping, alignment, config,
                           len(words))
    annotated = _annotate(constants, res, claims, len(words))
    return _assemble(annotated, res, words, sent_id, text)


def _variant_combos(lists: dict[int, list[AsGraph]], cap: int):
    keys = sorted(t for t, options in lists.items() if len(options) > 1)
    start = tuple(0 for _ in keys)
    heap = [(0, start)]
    seen = {start}
    emitted = 0
    while heap and emitted < cap:
        ranksum, combo = heapq.heappop(heap)
        yield dict(zip(keys, combo))
        emitted += 1
        for i, key in enumerate(keys):
            if combo[i] + 1 < len(lists[key]):
                bumped = combo[:i] + (combo[i] + 1,) + combo[i + 1:]
                if bumped not in seen:
                    seen.add(bumped)
                    heapq.heappush(heap, (ranksum + 1, bumped))


def decompose(instance: DecompInstance, table: HeuristicTable,
              config: DecomposeConfig | None = None) -> AmDepTree:
    """Convert one aligned graph to a dependency tree that evaluates back to it.

    Variant combinations are searched in global preference order until one
    admits a full resolution whose evaluation reproduces the input graph.
    """
    config = config or DecomposeConfig()
    patterns = config.patterns or table.patterns
    graph = instance.graph
    n_tokens = len(instance.words)
    if not graph.nodes:
        raise NonDecomposable("NotATree", "empty graph", instance.sent_id)
    unaligned = sorted(set(graph.nodes) - set(instance.alignment))
    if unaligned:
        raise NonDecomposable("NotATree", f"unaligned nodes {unaligned}",
                              instance.sent_id)
    try:
        grouping = assign_sources(group_edges(graph, table),
                                  instance.alignment, table)
        base = build_constants(graph, grouping, instance.alignment, n_tokens)
    except NonDecomposable as exc:
        raise NonDecomposable(exc.reason, exc.message, instance.sent_id) from exc
    options = {t: enumerate_variants(c) for t, c in base.items()
               if c is not None}
    failure: NonDecomposable | None = None
    for combo in _variant_combos(options, config.max_variant_combos):
        constants = {t: (options[t][combo.get(t, 0)] if c is not None else None)
                     for t, c in base.items()}
        try:
            res, claims = _resolve(graph, constants, grouping,
                                   instance.alignment, patterns, n_tokens)
            annotated = _annotate(constants, res, claims, n_tokens)
            tree = _assemble(annotated, res, instance.words,
                             instance.sent_id, instance.text)
            try:
                result = evaluate(tree)
            except OperationError as exc:
                raise NonDecomposable("IllTyped", str(exc)) from exc
            if not _same_graph(result, graph):
                raise NonDecomposable("RoundTripMismatch",
                                      "evaluation differs from the input graph")
            return tree
        except NonDecomposable as exc:
            if failure is None:
                failure = exc
            continue
    if failure is None:
        failure = NonDecomposable("NotATree", "no variant combination applies")
    raise NonDecomposable(failure.reason, failure.message,
                          instance.sent_id) from failure


def delexicalize_tree(tree: AmDepTree) -> AmDepTree:
    """Swap each supertag's lexical node label for a word-derived pattern.

    The lexical node is the first node (fragment root first, then the rest
    in id order) whose label contains the token's lemma, form, or modified
    lemma; its label becomes the placeholder mark and the pattern is stored
    as the token's lexical label.  Tokens whose labels share nothing with
    the word keep their literal supertag.
    """
    out = []
    for tok in tree.tokens:
        replaced = tok
        if tok.supertag is not None:
            frag = tok.supertag
            order = [frag.root] + sorted(n for n in frag.graph.nodes
                                         if n != frag.root)
            modified = modified_lemma(tok.lemma, tok.pos)
            for node in order:
                label = frag.graph.nodes[node]
                if label is None or label == LEX_MARK:
                    continue
                pattern = delexicalize(label, tok.form, tok.lemma, modified)
                if pattern == label:
                    continue
                nodes = dict(frag.graph.nodes)
                nodes[node] = LEX_MARK
                fragment = AsGraph(SemGraph(nodes, set(frag.graph.edges),
                                            frag.graph.roots),
                                   frag.root, dict(frag.sources), frag.rtype)
                replaced = AmToken(tok.index, tok.form, tok.head, tok.op,
                                   lemma=tok.lemma, pos=tok.pos, ne=tok.ne,
                                   supertag=fragment, lexlabel=pattern)
                break
        out.append(replaced)
    return AmDepTree(out, sent_id=tree.sent_id, text=tree.text)
