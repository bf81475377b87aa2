"""Graph comparison metrics and corpus decomposability statistics.

Smatch compares rooted labeled graphs by their best node mapping; the
hill-climbing search is gated by an exhaustive oracle for small graphs.
EDM compares span-anchored tuples of EDS analyses, and the SDP score is
labeled edge F with top predictions as virtual edges.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

from .decompose import DecompInstance, DecomposeConfig, NonDecomposable, decompose
from .eds import EdsInstance, encode_label
from .graphs import SemGraph
from .sdp import SdpInstance
from .tables import HeuristicTable


class TooLarge(ValueError):
    pass


class IdMismatch(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    matched: int
    gold: int
    pred: int

    @property
    def precision(self) -> float:
        return self.matched / self.pred if self.pred else 0.0

    @property
    def recall(self) -> float:
        return self.matched / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __post_init__(self):
        if not (0 <= self.matched <= min(self.gold, self.pred)):
            raise ValueError(f"matched {self.matched} exceeds "
                             f"gold {self.gold} / pred {self.pred}")

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.matched + other.matched, self.gold + other.gold,
                   self.pred + other.pred)


# -- smatch -----------------------------------------------------------------------


def _triple_counts(graph: SemGraph):
    """Per-node instance labels, top markers, and the edge multiset."""
    labels = dict(graph.nodes)
    tops = set(graph.roots)
    edges = Counter(graph.edges)
    return labels, tops, edges


def _triple_total(graph: SemGraph) -> int:
    return len(graph.nodes) + len(graph.roots) + len(graph.edges)


def _matched(pred: SemGraph, gold: SemGraph, mapping: dict[str, str]) -> int:
    """Triples of pred matched in gold under the node mapping."""
    plabels, ptops, pedges = _triple_counts(pred)
    glabels, gtops, gedges = _triple_counts(gold)
    count = 0
    for v, w in mapping.items():
        if w is None:
            continue
        if plabels[v] == glabels.get(w):
            count += 1
            # top markers only match on nodes that already agree, so two
            # one-node graphs with different labels score zero
            if v in ptops and w in gtops:
                count += 1
    mapped_edges = Counter()
    for (o, t, r), c in pedges.items():
        mo, mt = mapping.get(o), mapping.get(t)
        if mo is not None and mt is not None:
            mapped_edges[(mo, mt, r)] += c
    count += sum((mapped_edges & gedges).values())
    return count


def _prf(matched: int, pred: SemGraph, gold: SemGraph) -> PRF:
    return PRF(matched, _triple_total(gold), _triple_total(pred))


def smatch_exact(pred: SemGraph, gold: SemGraph) -> PRF:
    """Best mapping by exhaustive enumeration.  Small graphs only."""
    small, large = sorted([pred, gold], key=lambda g: len(g.nodes))
    if len(small.nodes) > 8:
        raise TooLarge(f"{len(small.nodes)} nodes on the smaller side; "
                       "exhaustive matching is capped at 8")
    small_nodes = sorted(small.nodes)
    large_nodes = sorted(large.nodes)
    swapped = small is not pred

    best = 0
    used: set[str] = set()
    assign: dict[str, str] = {}

    def recurse(i: int):
        nonlocal best
        if i == len(small_nodes):
            mapping = assign if not swapped else {w: v for v, w in assign.items()}
            best = max(best, _matched(pred, gold, mapping))
            return
        v = small_nodes[i]
        for w in large_nodes:
            if w in used:
                continue
            used.add(w)
            assign[v] = w
            recurse(i + 1)
            used.discard(w)
            del assign[v]

    recurse(0)
    return _prf(best, pred, gold)


def _climb(pred: SemGraph, gold: SemGraph, mapping: dict[str, str]) -> int:
    """Greedy local search: single remaps and pairwise swaps."""
    pnodes = sorted(mapping)
    gnodes = sorted(gold.nodes)
    score = _matched(pred, gold, mapping)
    improved = True
    while improved:
        improved = False
        taken = {w for w in mapping.values() if w is not None}
        for v in pnodes:
            current = mapping[v]
            for w in [None, *gnodes]:
                if w == current or (w is not None and w in taken):
                    continue
                mapping[v] = w
                trial = _matched(pred, gold, mapping)
                if trial > score:
                    score = trial
                    taken.discard(current)
                    if w is not None:
                        taken.add(w)
                    current = w
                    improved = True
                else:
                    mapping[v] = current
        for i, v in enumerate(pnodes):
            for u in pnodes[i + 1:]:
                mapping[v], mapping[u] = mapping[u], mapping[v]
                trial = _matched(pred, gold, mapping)
                if trial > score:
                    score = trial
                    improved = True
                else:
                    mapping[v], mapping[u] = mapping[u], mapping[v]
        if improved:
            continue
        # coordinated pair remaps: an edge match may need both endpoints
        # moved at once, which single moves cannot see across the plateau;
        # images held by other nodes are stolen, displacing the holder
        for i, v in enumerate(pnodes):
            for u in pnodes[i + 1:]:
                for wv in [None, *gnodes]:
                    for wu in [None, *gnodes]:
                        if wv is not None and wv == wu:
                            continue
                        if (wv, wu) == (mapping[v], mapping[u]):
                            continue
                        saved = {v: mapping[v], u: mapping[u]}
                        for x in pnodes:
                            if x not in (v, u) and mapping[x] in (wv, wu) \
                                    and mapping[x] is not None:
                                saved[x] = mapping[x]
                                mapping[x] = None
                        mapping[v], mapping[u] = wv, wu
                        trial = _matched(pred, gold, mapping)
                        if trial > score:
                            score = trial
                            improved = True
                        else:
                            mapping.update(saved)
    return score


def _smart_init(pred: SemGraph, gold: SemGraph) -> dict[str, str]:
    """Label-driven greedy start: same-label nodes pair up first."""
    by_label: dict[str, list[str]] = {}
    for w in sorted(gold.nodes):
        by_label.setdefault(gold.nodes[w], []).append(w)
    mapping: dict[str, str] = {}
    leftovers = []
    for v in sorted(pred.nodes):
        pool = by_label.get(pred.nodes[v])
        if pool:
            mapping[v] = pool.pop(0)
        else:
            leftovers.append(v)
    free = [w for ws in by_label.values() for w in ws]
    free.sort()
    for v in leftovers:
        mapping[v] = free.pop(0) if free else None
    return mapping


def _random_init(pred: SemGraph, gold: SemGraph, rng: random.Random) -> dict[str, str]:
    gnodes = sorted(gold.nodes)
    rng.shuffle(gnodes)
    images = (gnodes + [None] * len(pred.nodes))[:len(pred.nodes)]
    return dict(zip(sorted(pred.nodes), images))


def smatch(pred: SemGraph, gold: SemGraph, restarts: int = 5,
           seed: int = 0) -> PRF:
    """Triple F over the best node mapping found by restarted hill-climbing.

    Triples are node labels, top markers, and labeled edges.  Precision is
    with respect to ``pred``, recall with respect to ``gold``.
    """
    rng = random.Random(seed)
    best = _climb(pred, gold, _smart_init(pred, gold))
    for _ in range(max(restarts, 0)):
        best = max(best, _climb(pred, gold, _random_init(pred, gold, rng)))
    return _prf(best, pred, gold)


# -- EDM --------------------------------------------------------------------------


@dataclass(frozen=True)
class EdmResult:
    nodes: PRF
    edges: PRF

    @property
    def combined(self) -> PRF:
        return self.nodes + self.edges


def _edm_tuples(inst: EdsInstance):
    spans = {n.id: (n.start, n.end) for n in inst.nodes}
    nodes = Counter((n.start, n.end, encode_label(n.label, n.carg))
                    for n in inst.nodes)
    edges = Counter((*spans[src], role, *spans[tgt])
                    for src, tgt, role in inst.edges)
    return nodes, edges


def edm(pred: EdsInstance, gold: EdsInstance) -> EdmResult:
    """Span-anchored tuple F: nodes as (start, end, label), edges as
    (head span, role, dependent span), matched as multisets."""
    pn, pe = _edm_tuples(pred)
    gn, ge = _edm_tuples(gold)
    return EdmResult(
        nodes=PRF(sum((pn & gn).values()), sum(gn.values()), sum(pn.values())),
        edges=PRF(sum((pe & ge).values()), sum(ge.values()), sum(pe.values())),
    )


def edm_corpus(pred: list[EdsInstance], gold: list[EdsInstance]) -> EdmResult:
    if [p.sent_id for p in pred] != [g.sent_id for g in gold]:
        raise IdMismatch("EDS corpora have different sentence ids")
    nodes = edges = PRF(0, 0, 0)
    for p, g in zip(pred, gold):
        r = edm(p, g)
        nodes += r.nodes
        edges += r.edges
    return EdmResult(nodes, edges)


# -- SDP labeled F ------------------------------------------------------------------


def _sdp_items(inst: SdpInstance, include_senses: bool) -> Counter:
    items = Counter()
    preds = inst.predicates
    for row_index, row in enumerate(inst.args, start=1):
        for col, role in enumerate(row):
            if role != "_":
                items[(preds[col], row_index, role)] += 1
    for i, token in enumerate(inst.tokens, start=1):
        if token.top:
            items[(0, i, "TOP")] += 1
        if include_senses and token.pred and token.frame != "_":
            items[("sense", i, token.frame)] += 1
    return items


def sdp_f(pred: list[SdpInstance], gold: list[SdpInstance],
          include_senses: bool = False) -> PRF:
    """Labeled dependency F; top predictions count as virtual edges.

    Sense (frame) predictions are excluded unless requested.
    """
    if [p.sent_id for p in pred] != [g.sent_id for g in gold]:
        raise IdMismatch("SDP corpora have different sentence ids")
    total = PRF(0, 0, 0)
    for p, g in zip(pred, gold):
        pi = _sdp_items(p, include_senses)
        gi = _sdp_items(g, include_senses)
        total += PRF(sum((pi & gi).values()), sum(gi.values()),
                     sum(pi.values()))
    return total


# -- decomposability ----------------------------------------------------------------


@dataclass
class DecompReport:
    total: int = 0
    decomposed: int = 0
    failures: Counter = field(default_factory=Counter)
    failed_ids: dict = field(default_factory=dict)

    @property
    def non_decomposable_percent(self) -> float:
        if not self.total:
            return 0.0
        return 100.0 * (self.total - self.decomposed) / self.total

    def lines(self) -> list[str]:
        out = [f"total {self.total}",
               f"decomposed {self.decomposed}",
               f"non-decomposable {self.non_decomposable_percent:.4f}%"]
        for reason in sorted(self.failures):
            out.append(f"  {reason} {self.failures[reason]}")
        return out


def decomposability_stats(corpus: list[DecompInstance], table: HeuristicTable,
                          config: DecomposeConfig | None = None) -> DecompReport:
    """Decompose every instance and tally failures by reason code."""
    report = DecompReport()
    for inst in corpus:
        report.total += 1
        try:
            decompose(inst, table, config)
        except NonDecomposable as exc:
            report.failures[exc.reason] += 1
            report.failed_ids.setdefault(exc.reason, []).append(inst.sent_id)
        else:
            report.decomposed += 1
    return report
