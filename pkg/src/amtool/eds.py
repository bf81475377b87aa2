"""EDS instances, their text format, and span-related transforms.

The corpus format is line-based, blocks separated by blank lines:

    #<sentence id>
    #text <raw sentence>
    top <node id>
    <id>:<label><start:end>           node, optionally ...("carg value")
    <src> <ROLE> <tgt>                edge

Inside SemGraphs a node's carg rides piggyback on the label as
``label|carg`` and the span kind as a ``~a`` (atomic, exactly one token)
or ``~c`` (multi-token) suffix, so both survive decomposition and come
back out of evaluated trees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .graphs import SemGraph, weakly_connected_components

__all__ = [
    "EdsNode", "EdsInstance", "EdsError", "UnalignableNode",
    "ChildlessComplexNode", "read_eds", "write_eds", "tokenize", "Token",
    "eds_to_graph", "graph_to_eds", "assign_eds_spans", "delete_handles",
    "restore_spans", "encode_label", "decode_label", "FLAG_ATOMIC",
    "FLAG_COMPLEX", "HANDLE_LABELS",
]

FLAG_ATOMIC = "~a"
FLAG_COMPLEX = "~c"
CARG_SEP = "|"
HANDLE_LABELS = ("R-HNDL", "L-HNDL")


class EdsError(ValueError):
    pass


class UnalignableNode(EdsError):
    pass


class ChildlessComplexNode(EdsError):
    pass


@dataclass(frozen=True)
class EdsNode:
    id: str
    label: str
    start: int
    end: int
    carg: str | None = None


@dataclass
class EdsInstance:
    sent_id: str
    text: str
    top: str
    nodes: list[EdsNode] = field(default_factory=list)
    edges: set[tuple[str, str, str]] = field(default_factory=set)

    def validate(self) -> "EdsInstance":
        ids = {n.id for n in self.nodes}
        if len(ids) != len(self.nodes):
            raise EdsError(f"{self.sent_id}: duplicate node ids")
        if self.top not in ids:
            raise EdsError(f"{self.sent_id}: top {self.top} is not a node")
        for node in self.nodes:
            if not (0 <= node.start <= node.end <= len(self.text)):
                raise EdsError(f"{self.sent_id}: span {node.start}:{node.end} "
                               f"outside text")
        for src, tgt, _ in self.edges:
            if src not in ids or tgt not in ids:
                raise EdsError(f"{self.sent_id}: edge endpoint missing")
        return self


_NODE_RE = re.compile(
    r"^(\S+):(.+)<(\d+):(\d+)>(?:\(\"([^\"]*)\"\))?$")
_EDGE_RE = re.compile(r"^(\S+)\s+(\S+)\s+(\S+)$")


def read_eds(text: str) -> list[EdsInstance]:
    instances: list[EdsInstance] = []
    cur: dict | None = None

    def finish():
        nonlocal cur
        if cur is None:
            return
        if cur["top"] is None:
            raise EdsError(f"{cur['id']}: block without top")
        instances.append(EdsInstance(cur["id"], cur["text"], cur["top"],
                                     cur["nodes"], cur["edges"]).validate())
        cur = None

    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            finish()
            continue
        if stripped.startswith("#text"):
            if cur is None:
                raise EdsError(f"line {lineno}: #text before #id")
            cur["text"] = stripped[5:].strip()
            continue
        if stripped.startswith("#"):
            finish()
            cur = {"id": stripped[1:].strip(), "text": "", "top": None,
                   "nodes": [], "edges": set()}
            continue
        if cur is None:
            raise EdsError(f"line {lineno}: content before any #id")
        if stripped.startswith("top "):
            cur["top"] = stripped[4:].strip()
            continue
        node = _NODE_RE.match(stripped)
        if node:
            nid, label, start, end, carg = node.groups()
            cur["nodes"].append(EdsNode(nid, label, int(start), int(end), carg))
            continue
        edge = _EDGE_RE.match(stripped)
        if edge:
            src, role, tgt = edge.groups()
            cur["edges"].add((src, tgt, role))
            continue
        raise EdsError(f"line {lineno}: unparseable: {stripped!r}")
    finish()
    return instances


def write_eds(instances: list[EdsInstance]) -> str:
    blocks = []
    for inst in instances:
        lines = [f"#{inst.sent_id}", f"#text {inst.text}", f"top {inst.top}"]
        for node in sorted(inst.nodes, key=lambda n: (n.start, n.end, n.id)):
            carg = f'("{node.carg}")' if node.carg is not None else ""
            lines.append(f"{node.id}:{node.label}<{node.start}:{node.end}>{carg}")
        for src, tgt, role in sorted(inst.edges):
            lines.append(f"{src} {role} {tgt}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


@dataclass(frozen=True)
class Token:
    form: str
    start: int
    end: int


_TOKEN_RE = re.compile(r"[A-Za-z0-9$%'’]+|[^\sA-Za-z0-9$%'’]")


def tokenize(text: str) -> list[Token]:
    """Whitespace/punctuation tokenizer keeping character offsets.

    Punctuation marks, hyphens included, are single-character tokens, so
    hyphenated words fall apart into their pieces."""
    return [Token(m.group(), m.start(), m.end())
            for m in _TOKEN_RE.finditer(text)]


def encode_label(label: str, carg: str | None = None, flag: str = "") -> str:
    return label + (CARG_SEP + carg if carg is not None else "") + flag


def decode_label(composite: str) -> tuple[str, str | None, str]:
    """Split a graph label back into (label, carg, span flag)."""
    flag = ""
    for candidate in (FLAG_ATOMIC, FLAG_COMPLEX):
        if composite.endswith(candidate):
            composite, flag = composite[: -len(candidate)], candidate
            break
    if CARG_SEP in composite:
        label, carg = composite.split(CARG_SEP, 1)
        return label, carg, flag
    return composite, None, flag


def eds_to_graph(inst: EdsInstance,
                 alignment: dict[str, int] | None = None,
                 token_spans: list[Token] | None = None) -> SemGraph:
    """SemGraph with carg and span-kind folded into node labels.

    With an alignment and token spans, a node whose span equals its token's
    span is flagged atomic, every other node complex; without them labels
    carry no flag."""
    nodes = {}
    for node in inst.nodes:
        flag = ""
        if alignment is not None and token_spans is not None:
            token = token_spans[alignment[node.id] - 1]
            atomic = (node.start, node.end) == (token.start, token.end)
            flag = FLAG_ATOMIC if atomic else FLAG_COMPLEX
        nodes[node.id] = encode_label(node.label, node.carg, flag)
    return SemGraph(nodes, set(inst.edges), (inst.top,)).validate()


def graph_to_eds(graph: SemGraph, spans: dict[str, tuple[int, int]],
                 text: str, sent_id: str) -> EdsInstance:
    nodes = []
    for nid, composite in graph.nodes.items():
        label, carg, _ = decode_label(composite or "")
        start, end = spans[nid]
        nodes.append(EdsNode(nid, label, start, end, carg))
    if not graph.roots:
        raise EdsError(f"{sent_id}: graph has no root")
    return EdsInstance(sent_id, text, graph.roots[0], nodes,
                       set(graph.edges)).validate()


def assign_eds_spans(inst: EdsInstance, tokens: list[Token]) -> dict[str, int]:
    """Map every node to one token (1-based index).

    Nodes whose character span is exactly one token's span anchor there;
    the rest are walked left to right and put on the token of an incident
    anchored node, or failing that on the leftmost token overlapping their
    span."""
    exact = {(t.start, t.end): i for i, t in enumerate(tokens, start=1)}
    alignment: dict[str, int] = {}
    neighbors: dict[str, set[str]] = {n.id: set() for n in inst.nodes}
    for src, tgt, _ in inst.edges:
        neighbors[src].add(tgt)
        neighbors[tgt].add(src)

    pending = []
    for node in inst.nodes:
        anchor = exact.get((node.start, node.end))
        if anchor is not None:
            alignment[node.id] = anchor
        else:
            pending.append(node)

    for node in sorted(pending, key=lambda n: (n.start, n.end, n.id)):
        anchored = sorted(
            (alignment[m] for m in neighbors[node.id] if m in alignment))
        if anchored:
            alignment[node.id] = anchored[0]
            continue
        overlap = [i for i, t in enumerate(tokens, start=1)
                   if max(t.start, node.start) < min(t.end, node.end)]
        if not overlap:
            raise UnalignableNode(
                f"{inst.sent_id}: node {node.id} span {node.start}:{node.end} "
                f"covers no token")
        alignment[node.id] = overlap[0]
    return alignment


def delete_handles(graph: SemGraph,
                   labels: tuple[str, ...] = HANDLE_LABELS) -> SemGraph:
    """Drop R-HNDL/L-HNDL edges, each only if the graph stays connected."""
    edges = set(graph.edges)
    for edge in sorted(e for e in graph.edges if e[2] in labels):
        trial = edges - {edge}
        probe = SemGraph(dict(graph.nodes), trial, tuple(graph.roots))
        if len(weakly_connected_components(probe)) == 1:
            edges = trial
    return SemGraph(dict(graph.nodes), edges, tuple(graph.roots))


def restore_spans(graph: SemGraph, node_token: dict[str, int],
                  tokens: list[Token]) -> dict[str, tuple[int, int]]:
    """Character spans from span-kind flags: atomic nodes take their token's
    span; complex nodes take min-begin/max-end over their out-neighbors."""
    spans: dict[str, tuple[int, int]] = {}
    visiting: set[str] = set()

    def span_of(nid: str) -> tuple[int, int]:
        if nid in spans:
            return spans[nid]
        _, _, flag = decode_label(graph.nodes[nid] or "")
        if flag != FLAG_COMPLEX:
            token = tokens[node_token[nid] - 1]
            spans[nid] = (token.start, token.end)
            return spans[nid]
        if nid in visiting:
            raise ChildlessComplexNode(f"complex-span cycle at {nid}")
        visiting.add(nid)
        children = [e[1] for e in graph.edges if e[0] == nid]
        if not children:
            raise ChildlessComplexNode(f"complex node {nid} has no children")
        child_spans = [span_of(c) for c in children]
        visiting.discard(nid)
        spans[nid] = (min(s for s, _ in child_spans),
                      max(e for _, e in child_spans))
        return spans[nid]

    for nid in graph.nodes:
        span_of(nid)
    return spans
