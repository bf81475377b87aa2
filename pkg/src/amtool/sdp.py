"""SDP 2015 corpus format and its graph-side transforms.

Instances are blocks of tab-separated rows ``ID FORM LEMMA POS TOP PRED
FRAME ARG*`` preceded by a ``#<sentence id>`` line, blocks separated by a
blank line.  The argument matrix has one column per ``+``-flagged predicate,
in token order.

Graph nodes are the 1-based token indices of tokens that are a top, a
predicate, or an argument; everything else stays out of the graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .graphs import SemGraph, weakly_connected_components

__all__ = [
    "SdpToken", "SdpInstance", "SdpError", "read_sdp", "write_sdp",
    "sdp_to_graph", "graph_to_sdp", "preprocess_sdp", "revert_preprocess",
    "PreprocessRecord", "ART_ROOT_LABEL", "ART_FORM",
    "rewrite_psd_coordination", "revert_psd_coordination", "COORD_MARK",
]

ART_ROOT_LABEL = "ART-ROOT"
ART_FORM = "ART-ROOT"
COORD_MARK = "+coord"


class SdpError(ValueError):
    pass


@dataclass(frozen=True)
class SdpToken:
    form: str
    lemma: str
    pos: str
    top: bool = False
    pred: bool = False
    frame: str = "_"


@dataclass
class SdpInstance:
    sent_id: str
    tokens: list[SdpToken]
    # one row per token; each row has one role cell per predicate column
    args: list[list[str]] = field(default_factory=list)

    @property
    def predicates(self) -> list[int]:
        """1-based indices of ``+``-flagged predicate tokens, in order."""
        return [i for i, t in enumerate(self.tokens, start=1) if t.pred]

    def validate(self) -> "SdpInstance":
        n_preds = len(self.predicates)
        if len(self.args) != len(self.tokens):
            raise SdpError(f"{self.sent_id}: {len(self.args)} arg rows for "
                           f"{len(self.tokens)} tokens")
        for i, row in enumerate(self.args, start=1):
            if len(row) != n_preds:
                raise SdpError(f"{self.sent_id}: row {i} has {len(row)} "
                               f"argument cells, expected {n_preds}")
        return self


def _flag(cell: str, lineno: int) -> bool:
    if cell not in ("+", "-"):
        raise SdpError(f"line {lineno}: flag must be + or -, got {cell!r}")
    return cell == "+"


def read_sdp(text: str) -> list[SdpInstance]:
    instances: list[SdpInstance] = []
    block_id: str | None = None
    tokens: list[SdpToken] = []
    rows: list[list[str]] = []

    def finish():
        nonlocal block_id, tokens, rows
        if block_id is None and not tokens:
            return
        if block_id is None:
            raise SdpError("token rows before any #id line")
        instances.append(SdpInstance(block_id, tokens, rows).validate())
        block_id, tokens, rows = None, [], []

    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            finish()
            continue
        if line.startswith("#"):
            if block_id is not None or tokens:
                finish()
            block_id = line[1:].strip()
            continue
        parts = line.split("\t")
        if len(parts) < 7:
            raise SdpError(f"line {lineno}: expected at least 7 columns")
        idx, form, lemma, pos, top, pred, frame = parts[:7]
        if int(idx) != len(tokens) + 1:
            raise SdpError(f"line {lineno}: token id {idx} out of order")
        tokens.append(SdpToken(form, lemma, pos, _flag(top, lineno),
                               _flag(pred, lineno), frame))
        rows.append(parts[7:])
    finish()
    for inst in instances:
        inst.validate()
    return instances


def write_sdp(instances: list[SdpInstance]) -> str:
    blocks = []
    for inst in instances:
        lines = [f"#{inst.sent_id}"]
        for i, (token, row) in enumerate(zip(inst.tokens, inst.args), start=1):
            lines.append("\t".join(
                [str(i), token.form, token.lemma, token.pos,
                 "+" if token.top else "-", "+" if token.pred else "-",
                 token.frame] + list(row)))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def sdp_to_graph(inst: SdpInstance) -> tuple[SemGraph, dict[str, int]]:
    """Graph over semantically active tokens plus the identity alignment."""
    preds = inst.predicates
    active: set[int] = set(preds)
    edges = set()
    for i, row in enumerate(inst.args, start=1):
        for col, role in enumerate(row):
            if role != "_":
                active.add(i)
                edges.add((str(preds[col]), str(i), role))
    tops = [i for i, t in enumerate(inst.tokens, start=1) if t.top]
    active.update(tops)
    nodes = {str(i): inst.tokens[i - 1].form for i in sorted(active)}
    graph = SemGraph(nodes, edges, tuple(str(t) for t in tops))
    alignment = {str(i): i for i in sorted(active)}
    return graph, alignment


def graph_to_sdp(graph: SemGraph, tokens: list[SdpToken], sent_id: str,
                 frames: dict[int, str] | None = None) -> SdpInstance:
    """Inverse of sdp_to_graph given the token row data.

    Predicates are the tokens with outgoing edges; tops come from the graph
    roots; frames default to ``_`` unless supplied."""
    frames = frames or {}
    n = len(tokens)
    out_by_token: dict[int, list] = {}
    for src, tgt, role in graph.edges:
        out_by_token.setdefault(int(src), []).append((int(tgt), role))
    # keep the pred flag of edge-less predicates whose node survived
    kept = {i for i, t in enumerate(tokens, start=1)
            if t.pred and str(i) in graph.nodes}
    preds = sorted(set(out_by_token) | kept)
    tops = {int(r) for r in graph.roots}
    new_tokens = []
    for i, token in enumerate(tokens, start=1):
        is_pred = i in preds
        frame = frames.get(i, token.frame if (is_pred and token.pred) else "_")
        new_tokens.append(replace(token, top=i in tops, pred=is_pred, frame=frame))
    rows = [["_"] * len(preds) for _ in range(n)]
    for col, p in enumerate(preds):
        for tgt, role in out_by_token.get(p, []):
            rows[tgt - 1][col] = role
    return SdpInstance(sent_id, new_tokens, rows).validate()


@dataclass
class PreprocessRecord:
    """What preprocess_sdp changed, enough to put everything back."""

    original_tops: tuple[str, ...] = ()
    removed_singletons: tuple[str, ...] = ()
    singleton_labels: dict[str, str | None] = field(default_factory=dict)
    artificial_node: str | None = None
    artificial_token_index: int | None = None
    attachment_nodes: tuple[str, ...] = ()


def _component_head(graph: SemGraph, component: set[str]) -> str:
    no_incoming = [n for n in sorted(component)
                   if not any(e[1] == n for e in graph.edges)]
    if len(no_incoming) == 1:
        return no_incoming[0]
    return min(component, key=lambda n: (len(n), n))


def preprocess_sdp(graph: SemGraph, n_tokens: int,
                   head_selector=None) -> tuple[SemGraph, PreprocessRecord]:
    """Make the graph single-rooted and free of isolated nodes.

    Single-node components are dropped (their tokens contribute nothing);
    if more than one multi-node component remains, an artificial token is
    appended and given one ART-ROOT edge per component.  The chosen root
    order: artificial node, else the first top, else the head of the first
    component.
    """
    head_selector = head_selector or _component_head
    record = PreprocessRecord(original_tops=tuple(graph.roots))
    components = weakly_connected_components(graph)
    singles = [next(iter(c)) for c in components if len(c) == 1]
    multi = [c for c in components if len(c) > 1]
    nodes = {n: l for n, l in graph.nodes.items() if n not in set(singles)}
    record.removed_singletons = tuple(singles)
    record.singleton_labels = {n: graph.nodes[n] for n in singles}
    edges = set(graph.edges)

    if len(multi) > 1:
        art = str(n_tokens + 1)
        record.artificial_node = art
        record.artificial_token_index = n_tokens + 1
        heads = tuple(head_selector(graph, c) for c in multi)
        record.attachment_nodes = heads
        nodes[art] = ART_FORM
        for head in heads:
            edges.add((art, head, ART_ROOT_LABEL))
        roots: tuple[str, ...] = (art,)
    elif multi:
        tops_in = [r for r in graph.roots if r in nodes]
        roots = (tops_in[0],) if tops_in else (head_selector(graph, multi[0]),)
    else:
        roots = ()
    out = SemGraph(nodes, edges, roots)
    if nodes:
        out.validate()
    return out, record


def revert_preprocess(graph: SemGraph, record: PreprocessRecord) -> SemGraph:
    nodes = dict(graph.nodes)
    edges = set(graph.edges)
    if record.artificial_node is not None:
        art = record.artificial_node
        nodes.pop(art, None)
        edges = {e for e in edges if e[0] != art and e[1] != art}
    for n in record.removed_singletons:
        nodes[n] = record.singleton_labels.get(n)
    roots = tuple(r for r in record.original_tops if r in nodes)
    return SemGraph(nodes, edges, roots)


def _member_map(graph: SemGraph) -> dict[str, list[str]]:
    members: dict[str, list[str]] = {}
    for src, tgt, label in graph.edges:
        if label.endswith(".member"):
            members.setdefault(src, []).append(tgt)
    return {h: sorted(m) for h, m in members.items()}


def rewrite_psd_coordination(graph: SemGraph) -> tuple[SemGraph, list[str]]:
    """Collapse per-conjunct argument edges into one marked edge.

    When a node has same-labeled edges into every member of one coordination
    head, those edges become a single ``label+coord`` edge into the head.
    Overlapping member sets are left untouched and reported.  Exact inverse:
    revert_psd_coordination.
    """
    members = _member_map(graph)
    issues: list[str] = []
    membership: dict[str, list[str]] = {}
    for head, conj in members.items():
        for c in conj:
            membership.setdefault(c, []).append(head)
    ambiguous = {c for c, heads in membership.items() if len(heads) > 1}
    if ambiguous:
        issues.append(f"conjuncts in several coordinations: {sorted(ambiguous)}")

    edges = set(graph.edges)
    by_origin_label: dict[tuple[str, str], set[str]] = {}
    for src, tgt, label in graph.edges:
        if label.endswith(".member") or label.endswith(COORD_MARK):
            continue
        by_origin_label.setdefault((src, label), set()).add(tgt)

    for (src, label), targets in sorted(by_origin_label.items()):
        remaining = set(targets)
        for head, conj in sorted(members.items()):
            if head == src or len(conj) < 2:
                continue
            if set(conj) & ambiguous:
                continue
            if set(conj) <= remaining:
                for c in conj:
                    edges.discard((src, c, label))
                    remaining.discard(c)
                edges.add((src, head, label + COORD_MARK))
    out = SemGraph(dict(graph.nodes), edges, tuple(graph.roots))
    return out, issues


def revert_psd_coordination(graph: SemGraph) -> SemGraph:
    members = _member_map(graph)
    edges = set()
    for src, tgt, label in graph.edges:
        if label.endswith(COORD_MARK):
            base = label[: -len(COORD_MARK)]
            conj = members.get(tgt, [])
            if conj:
                for c in conj:
                    edges.add((src, c, base))
            else:
                edges.add((src, tgt, base))
        else:
            edges.add((src, tgt, label))
    return SemGraph(dict(graph.nodes), edges, tuple(graph.roots))
