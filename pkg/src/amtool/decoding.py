"""Two-stage parsing: spanning arborescence, then typed assignment.

The tree shape comes from Chu-Liu-Edmonds over arc scores.  With the shape
fixed, a dynamic program picks one graph fragment per token and one
operation per edge so the result is well typed, maximizing fragment plus
operation scores.  Type states are folded child by child over subsets, so
any evaluation order the algebra admits is reachable.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from .algebra import (
    AmDepTree,
    AmToken,
    IllTyped,
    OP_IGNORE,
    OP_ROOT,
    OperationError,
    admissible_orders,
    apply_type,
    evaluate,
    modify_type,
    op_kind,
    op_source,
)
from .decompose import Word
from .graphs import EMPTY_TYPE, AsGraph, RequestType, SemGraph
from .lexical import modified_lemma, relexicalize

log = logging.getLogger(__name__)

LEX_MARK = "$LEX$"


class DecodeError(Exception):
    pass


class NoWellTypedTree(DecodeError):
    """No fragment/operation assignment types out on the fixed tree."""


class DecodeTimeout(DecodeError):
    pass


@dataclass
class ArcScores:
    """Dense arc scores: rows[head][dep], head 0..n, dep 1..n."""

    n: int
    rows: list[list[float]]

    def validate(self) -> "ArcScores":
        if len(self.rows) != self.n + 1:
            raise ValueError(f"expected {self.n + 1} rows, got {len(self.rows)}")
        for head, row in enumerate(self.rows):
            if len(row) != self.n + 1:
                raise ValueError(f"row {head} has {len(row)} cells")
            for dep in range(1, self.n + 1):
                if dep != head and not math.isfinite(row[dep]):
                    raise ValueError(f"arc ({head}, {dep}) is not finite")
        return self

    def get(self, head: int, dep: int) -> float:
        return self.rows[head][dep]


@dataclass(frozen=True)
class TagCandidate:
    """One scored fragment option; fragment None stands for no contribution."""

    fragment: AsGraph | None
    lexlabel: str | None
    score: float


@dataclass
class SupertagCandidates:
    lists: dict[int, list[TagCandidate]]

    def validate(self) -> "SupertagCandidates":
        for token, options in self.lists.items():
            scores = [c.score for c in options]
            if any(not math.isfinite(s) for s in scores):
                raise ValueError(f"token {token}: non-finite candidate score")
            if scores != sorted(scores, reverse=True):
                raise ValueError(f"token {token}: candidates not descending")
        return self

    def top(self, token: int, k: int) -> list[TagCandidate]:
        return self.lists.get(token, [])[:k]


# (head, dep) -> operation label -> score; vocabulary defines the legal ops
LabelScores = dict[tuple[int, int], dict[str, float]]


# -- maximum spanning arborescence --------------------------------------------


def _best_heads(vertices: list[int], weights: dict, root: int) -> dict[int, int]:
    best = {}
    for dep in vertices:
        if dep == root:
            continue
        options = [head for head in vertices if (head, dep) in weights]
        best[dep] = max(options, key=lambda h: (weights[(h, dep)], -h))
    return best


def _find_cycle(best: dict[int, int], root: int) -> list[int] | None:
    for start in sorted(best):
        path, node = [], start
        index = {}
        while node != root and node not in index:
            index[node] = len(path)
            path.append(node)
            node = best[node]
            if node == root:
                break
            if node == start or node in index:
                return path[index[node]:]
    return None


def _cle(vertices: list[int], weights: dict, root: int, fresh: int) -> dict[int, int]:
    best = _best_heads(vertices, weights, root)
    cycle = _find_cycle(best, root)
    if cycle is None:
        return best
    cyc = set(cycle)
    contracted = fresh
    reduced: dict[tuple[int, int], float] = {}
    enter: dict[int, tuple[int, int]] = {}
    leave: dict[int, tuple[int, int]] = {}
    for (head, dep), score in sorted(weights.items()):
        if head in cyc and dep in cyc:
            continue
        if dep in cyc:
            gain = score - weights[(best[dep], dep)]
            if (head, contracted) not in reduced or gain > reduced[(head, contracted)]:
                reduced[(head, contracted)] = gain
                enter[head] = (head, dep)
        elif head in cyc:
            if (contracted, dep) not in reduced or score > reduced[(contracted, dep)]:
                reduced[(contracted, dep)] = score
                leave[dep] = (head, dep)
        else:
            reduced[(head, dep)] = score
    remaining = [v for v in vertices if v not in cyc] + [contracted]
    sub = _cle(sorted(remaining), reduced, root, fresh + 1)
    heads: dict[int, int] = {}
    for dep, head in sub.items():
        if dep == contracted:
            entering_head, broken = enter[head]
            for v in cyc:
                heads[v] = best[v]
            heads[broken] = entering_head
        elif head == contracted:
            heads[dep] = leave[dep][0]
        else:
            heads[dep] = head
    return heads


def max_arborescence(arcs: ArcScores) -> dict[int, int]:
    """Highest-scoring 0-rooted spanning arborescence; ties prefer the
    smaller head, then the smaller dependent."""
    arcs.validate()
    n = arcs.n
    if n < 1:
        raise ValueError("need at least one token")
    weights = {(h, d): arcs.get(h, d)
               for h in range(n + 1) for d in range(1, n + 1) if h != d}
    return _cle(list(range(n + 1)), weights, 0, n + 1)


# -- fixed-tree typed assignment ----------------------------------------------


@dataclass
class _NodeStates:
    # final subtree type -> (score, candidate rank, per-child choices)
    typed: dict[RequestType, tuple[float, int, dict[int, tuple[str, object]]]]
    bot: float | None  # whole subtree contributes nothing


def _type_order(t: RequestType) -> str:
    return str(t)


def _fold_children(start_type: RequestType, base_score: float, children: list[int],
                   child_states: dict[int, _NodeStates], labels: LabelScores,
                   node: int, beam: int | None, deadline: float | None):
    """Subset DP over the node's children; yields final (type, score, choices)."""
    start = (frozenset(children), start_type)
    table: dict[tuple[frozenset, RequestType], tuple[float, dict]] = {
        start: (base_score, {})}
    for size in range(len(children), 0, -1):
        if deadline is not None and time.monotonic() > deadline:
            raise DecodeTimeout("fixed-tree decode ran over budget")
        level = [key for key in table if len(key[0]) == size]
        if beam is not None and len(level) > beam:
            level.sort(key=lambda key: (-table[key][0], sorted(key[0]),
                                        _type_order(key[1])))
            for dropped in level[beam:]:
                del table[dropped]
            level = level[:beam]
        level.sort(key=lambda key: (sorted(key[0]), _type_order(key[1])))
        for key in level:
            remaining, current = key
            score, choices = table[key]
            for child in sorted(remaining):
                rest = remaining - {child}
                scored = labels.get((node, child), {})
                states = child_states[child]
                if "IGNORE" in scored and states.bot is not None:
                    gain = states.bot + scored["IGNORE"]
                    _offer(table, (rest, current), score + gain, choices,
                           child, (OP_IGNORE, None))
                for op in sorted(scored):
                    kind = op_kind(op)
                    if kind not in ("APP", "MOD"):
                        continue
                    sigma = op_source(op)
                    for child_type in sorted(states.typed, key=_type_order):
                        child_score = states.typed[child_type][0]
                        try:
                            if kind == "APP":
                                nxt = apply_type(current, sigma, child_type)
                            else:
                                modify_type(current, sigma, child_type)
                                nxt = current
                        except OperationError:
                            continue
                        gain = child_score + scored[op]
                        _offer(table, (rest, nxt), score + gain, choices,
                               child, (op, child_type))
    empty = frozenset()
    for (remaining, final), (score, choices) in table.items():
        if remaining == empty:
            yield final, score, choices


def _offer(table, key, score, choices, child, decision):
    held = table.get(key)
    if held is None or score > held[0]:
        updated = dict(choices)
        updated[child] = decision
        table[key] = (score, updated)


def _blank_subtree(node: int, kids, words, tokens):
    tokens[node] = (None, None, OP_IGNORE)
    for child in kids.get(node, []):
        _blank_subtree(child, kids, words, tokens)


def _emit(node: int, state_type: RequestType, states: dict[int, _NodeStates],
          kids, cands: SupertagCandidates, k: int, tokens):
    score, rank, choices = states[node].typed[state_type]
    cand = cands.top(node, k)[rank]
    op = tokens[node][2]
    tokens[node] = (cand.fragment, cand.lexlabel, op)
    for child in kids.get(node, []):
        child_op, child_type = choices[child]
        if child_op == OP_IGNORE:
            _blank_subtree(child, kids, None, tokens)
        else:
            tokens[child] = (None, None, child_op)
            _emit(child, child_type, states, kids, cands, k, tokens)


def fixed_tree_decode(tree: dict[int, int], cands: SupertagCandidates,
                      label_scores: LabelScores, k: int,
                      words: list[Word] | None = None,
                      beam: int | None = None,
                      deadline: float | None = None,
                      sent_id: str | None = None) -> AmDepTree:
    """Best well-typed fragment and operation assignment on a fixed tree.

    The root child must reach the empty type; IGNORE is only allowed when
    the entire child subtree contributes nothing.  Raises NoWellTypedTree
    when no assignment within the k best candidates works.
    """
    n = len(tree)
    if sorted(tree) != list(range(1, n + 1)):
        raise ValueError("tree must map every token 1..n to a head")
    if words is not None and len(words) != n:
        raise ValueError(f"{len(words)} words for {n} tree nodes")
    cands.validate()
    if k <= 0:
        raise NoWellTypedTree("no supertag candidates admitted (k=0)")
    kids: dict[int, list[int]] = {}
    for dep in sorted(tree):
        kids.setdefault(tree[dep], []).append(dep)
    states: dict[int, _NodeStates] = {}

    def solve_into(node):
        for child in kids.get(node, []):
            solve_into(child)
        children = kids.get(node, [])
        states[node] = _solve_with(node, children)

    def _solve_with(node, children):
        child_states = {c: states[c] for c in children}
        options = cands.top(node, k)
        typed: dict[RequestType, tuple[float, int, dict]] = {}
        bot: float | None = None
        for rank, cand in enumerate(options):
            if cand.fragment is None:
                if bot is None:
                    total = cand.score
                    for child in children:
                        scored = label_scores.get((node, child), {})
                        if child_states[child].bot is None or "IGNORE" not in scored:
                            total = None
                            break
                        total += child_states[child].bot + scored["IGNORE"]
                    bot = total
                continue
            for final, score, choices in _fold_children(
                    cand.fragment.rtype, cand.score, children, child_states,
                    label_scores, node, beam, deadline):
                held = typed.get(final)
                if held is None or score > held[0]:
                    typed[final] = (score, rank, choices)
        return _NodeStates(typed, bot)

    for top in kids.get(0, []):
        solve_into(top)

    tops = kids.get(0, [])
    best = None  # (score, root_child)
    for root_child in tops:
        scored = label_scores.get((0, root_child), {})
        if "ROOT" not in scored or EMPTY_TYPE not in states[root_child].typed:
            continue
        total = states[root_child].typed[EMPTY_TYPE][0] + scored["ROOT"]
        feasible = True
        for other in tops:
            if other == root_child:
                continue
            other_scored = label_scores.get((0, other), {})
            if states[other].bot is None or "IGNORE" not in other_scored:
                feasible = False
                break
            total += states[other].bot + other_scored["IGNORE"]
        if feasible and (best is None or total > best[0]):
            best = (total, root_child)
    if best is None:
        raise NoWellTypedTree(
            "no root child reaches the empty type" if tops else "empty tree")

    tokens: dict[int, tuple[AsGraph | None, str | None, str]] = {}
    _, root_child = best
    for top in tops:
        if top == root_child:
            tokens[top] = (None, None, OP_ROOT)
            _emit(top, EMPTY_TYPE, states, kids, cands, k, tokens)
        else:
            _blank_subtree(top, kids, None, tokens)
    if words is None:
        words = [Word(f"w{i}") for i in range(1, n + 1)]
    out = []
    for i in range(1, n + 1):
        fragment, lexlabel, op = tokens[i]
        word = words[i - 1]
        out.append(AmToken(i, word.form, tree[i], op, lemma=word.lemma,
                           pos=word.pos, ne=word.ne, supertag=fragment,
                           lexlabel=lexlabel))
    return AmDepTree(out, sent_id=sent_id).validate()


def decode_objective(tree: AmDepTree, cands: SupertagCandidates,
                     label_scores: LabelScores) -> float:
    """Score a decoded tree under the same objective the decoder maximizes."""
    total = 0.0
    for token in tree.tokens:
        options = cands.lists.get(token.index, [])
        for cand in options:
            if cand.fragment == token.supertag and cand.lexlabel == token.lexlabel:
                total += cand.score
                break
        else:
            raise ValueError(f"token {token.index}: assignment not a candidate")
        total += label_scores[(token.head, token.index)][token.op]
    return total


# -- end-to-end parsing --------------------------------------------------------


@dataclass
class ParseConfig:
    k: int = 6
    time_budget_secs: float = 60.0
    beam: int | None = None


def dummy_graph() -> SemGraph:
    return SemGraph({"d0": "dummy"}, set(), ("d0",))


def _expand_lex(fragment: AsGraph, pattern: str, word: Word) -> AsGraph:
    nodes = dict(fragment.graph.nodes)
    changed = False
    for node, label in nodes.items():
        if label == LEX_MARK:
            nodes[node] = relexicalize(
                pattern, word.form, word.lemma,
                modified=modified_lemma(word.lemma, word.pos))
            changed = True
    if not changed:
        return fragment
    return AsGraph(SemGraph(nodes, set(fragment.graph.edges),
                            fragment.graph.roots),
                   fragment.root, dict(fragment.sources), fragment.rtype)


def relabel_lexical(tree: AmDepTree, words: list[Word]) -> AmDepTree:
    """Fill $LEX$ node labels from each token's lexical label template."""
    out = []
    for token in tree.tokens:
        if token.supertag is not None and token.lexlabel is not None:
            fragment = _expand_lex(token.supertag, token.lexlabel,
                                   words[token.index - 1])
            token = AmToken(token.index, token.form, token.head, token.op,
                            lemma=token.lemma, pos=token.pos, ne=token.ne,
                            supertag=fragment, lexlabel=token.lexlabel)
        out.append(token)
    return AmDepTree(out, sent_id=tree.sent_id, text=tree.text)


def evaluate_with_attribution(tree: AmDepTree) -> tuple[SemGraph, dict[str, int]]:
    """Evaluate and map every labeled node to the token that labeled it.

    A probe twin of the tree carries per-token sentinel labels; evaluated
    under the same child orders it produces identical node ids (merging
    never looks at labels), so the sentinels read back as the attribution.
    """
    orders: dict[int, list[int]] = {}
    for candidate in admissible_orders(tree, limit=1):
        orders = candidate
        break
    if not orders:
        raise IllTyped(f"{tree.sent_id or 'tree'}: no evaluation order "
                       "reaches the empty type")
    probe_tokens = []
    for tok in tree.tokens:
        if tok.supertag is None:
            probe_tokens.append(tok)
            continue
        frag = tok.supertag
        nodes = {n: (f"$TOK{tok.index}$" if label is not None else None)
                 for n, label in frag.graph.nodes.items()}
        probe_frag = AsGraph(SemGraph(nodes, set(frag.graph.edges),
                                      frag.graph.roots),
                             frag.root, dict(frag.sources), frag.rtype)
        probe_tokens.append(AmToken(tok.index, tok.form, tok.head, tok.op,
                                    lemma=tok.lemma, pos=tok.pos, ne=tok.ne,
                                    supertag=probe_frag, lexlabel=None))
    graph = evaluate(tree, orders)
    probe = evaluate(AmDepTree(probe_tokens, sent_id=tree.sent_id), orders)
    attribution = {}
    for nid, label in probe.nodes.items():
        if label and label.startswith("$TOK") and label.endswith("$"):
            attribution[nid] = int(label[4:-1])
    return graph, attribution


def parse_tree(words: list[Word], model, config: ParseConfig | None = None,
               sent_id: str | None = None) -> tuple[AmDepTree | None, int]:
    """Arborescence plus typed decode, backing off over smaller k.

    Returns (tree, k used); (None, 0) when every k fails and the caller
    should fall back to a dummy graph.
    """
    config = config or ParseConfig()
    arcs = model.arc_scores(words)
    shape = max_arborescence(arcs)
    labels: LabelScores = {(h, d): model.op_label_scores(words, h, d)
                           for d, h in shape.items()}
    cands = model.supertag_candidates(words, config.k)
    for k in range(config.k, 0, -1):
        deadline = time.monotonic() + config.time_budget_secs
        try:
            tree = fixed_tree_decode(shape, cands, labels, k, words=words,
                                     beam=config.beam, deadline=deadline,
                                     sent_id=sent_id)
            return tree, k
        except NoWellTypedTree:
            log.info("sentence %s: no well-typed tree at k=%d", sent_id, k)
        except DecodeTimeout:
            log.info("sentence %s: decode timed out at k=%d", sent_id, k)
    return None, 0


def parse(words: list[Word], model, config: ParseConfig | None = None,
          sent_id: str | None = None, postprocess=None) -> SemGraph:
    """Parse one sentence to a graph; total, never raises on model output.

    ``postprocess`` maps the evaluated graph to its final form (format
    transforms live with the caller).
    """
    tree, _ = parse_tree(words, model, config, sent_id)
    if tree is None:
        log.info("sentence %s: falling back to the dummy graph", sent_id)
        return dummy_graph()
    tree = relabel_lexical(tree, words)
    try:
        graph = evaluate(tree)
    except OperationError as exc:
        log.warning("sentence %s: evaluation failed (%s); dummy graph",
                    sent_id, exc)
        return dummy_graph()
    if postprocess is not None:
        graph = postprocess(graph)
    return graph
