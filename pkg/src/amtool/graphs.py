"""Labeled directed graphs, graph fragments with named sources, and their text format.

Two graph flavours live here.  A ``SemGraph`` is a plain labeled digraph with a
(possibly empty) list of root nodes; it is what corpus readers produce and what
tree evaluation returns.  An ``AsGraph`` is a graph fragment used as a building
block: it has exactly one root, some of its nodes carry named sources (open
slots that later operations fill or merge), and it carries a request type that
says, for every source, which type the filling argument must have.

The text format is a compact penman-like notation::

    (w / want-01 :ARG0 (s<S>) :ARG1 (o<O[S]>))

``<NAME>`` marks a source, ``<NAME[...]>`` a source with a non-empty request,
``:role-of`` writes an edge against its direction so any weakly connected
graph can be printed from its root, and a bare identifier re-mentions a node
that is defined elsewhere in the expression.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field


class GraphSyntaxError(ValueError):
    """Raised when graph text cannot be parsed or violates an invariant."""


_SOURCE_SCAN_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*")
_SOURCE_RE = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")
_SYMBOL_RE = re.compile(r"[^\s()<>:/]+")

#: Reserved marker: never a legal source name.
ROOT_MARKER = "root"


def is_source_name(name: str) -> bool:
    return bool(_SOURCE_RE.match(name)) and name != ROOT_MARKER


def check_source_name(name: str) -> str:
    if not is_source_name(name):
        raise GraphSyntaxError(f"illegal source name: {name!r}")
    return name


class RequestType:
    """An immutable, hashable finite map from source names to request types.

    The empty request is written ``[]``.  ``[S, O[S]]`` maps S to the empty
    request and O to ``[S]``.  Equality is structural.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: object = ()):
        if isinstance(entries, RequestType):
            pairs = entries._entries
        elif isinstance(entries, dict):
            pairs = tuple(sorted((k, RequestType(v)) for k, v in entries.items()))
        else:
            pairs = tuple(sorted((k, RequestType(v)) for k, v in entries))
        seen = set()
        for name, _ in pairs:
            check_source_name(name)
            if name in seen:
                raise GraphSyntaxError(f"duplicate source in type: {name}")
            seen.add(name)
        self._entries: tuple[tuple[str, RequestType], ...] = pairs

    @property
    def entries(self) -> tuple[tuple[str, "RequestType"], ...]:
        return self._entries

    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self._entries)

    def get(self, name: str) -> "RequestType | None":
        for key, value in self._entries:
            if key == name:
                return value
        return None

    def without(self, name: str) -> "RequestType":
        return RequestType(tuple(e for e in self._entries if e[0] != name))

    def with_entry(self, name: str, request: "RequestType") -> "RequestType":
        kept = tuple(e for e in self._entries if e[0] != name)
        return RequestType(kept + ((name, RequestType(request)),))

    def is_empty(self) -> bool:
        return not self._entries

    def __contains__(self, name: str) -> bool:
        return any(key == name for key, _ in self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RequestType) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(self._entries)

    def __bool__(self) -> bool:
        return bool(self._entries)

    def render(self) -> str:
        """Bare entry list without outer brackets, e.g. ``O[S], S``... sorted."""
        parts = []
        for name, request in self._entries:
            parts.append(name if request.is_empty() else f"{name}[{request.render()}]")
        return ",".join(parts)

    def __str__(self) -> str:
        return f"[{self.render()}]"

    def __repr__(self) -> str:
        return f"RequestType({str(self)!r})"

    @staticmethod
    def parse(text: str) -> "RequestType":
        text = text.strip()
        if text.startswith("[") and text.endswith("]"):
            text = text[1:-1]
        request, pos = _parse_type_body(text, 0)
        if pos != len(text):
            raise GraphSyntaxError(f"trailing text in type: {text[pos:]!r}")
        return request


EMPTY_TYPE = RequestType()


def _parse_type_body(text: str, pos: int) -> tuple[RequestType, int]:
    entries: list[tuple[str, RequestType]] = []
    n = len(text)
    while pos < n and text[pos].isspace():
        pos += 1
    if pos >= n or text[pos] == "]":
        return RequestType(), pos
    while True:
        match = re.compile(r"[A-Za-z][A-Za-z0-9]*").match(text, pos)
        if not match:
            raise GraphSyntaxError(f"expected source name at {text[pos:]!r}")
        name = match.group()
        pos = match.end()
        request = EMPTY_TYPE
        if pos < n and text[pos] == "[":
            request, pos = _parse_type_body(text, pos + 1)
            if pos >= n or text[pos] != "]":
                raise GraphSyntaxError("unclosed '[' in type")
            pos += 1
        entries.append((name, request))
        while pos < n and text[pos].isspace():
            pos += 1
        if pos < n and text[pos] == ",":
            pos += 1
            while pos < n and text[pos].isspace():
                pos += 1
            continue
        break
    return RequestType(entries), pos


Edge = tuple[str, str, str]  # (origin, target, label)


@dataclass
class SemGraph:
    """A directed graph with optional node labels and an ordered root list.

    Parallel edges with identical (origin, target, label) collapse to one;
    node ids are opaque strings.
    """

    nodes: dict[str, str | None] = field(default_factory=dict)
    edges: set[Edge] = field(default_factory=set)
    roots: tuple[str, ...] = ()

    def validate(self) -> "SemGraph":
        for src, tgt, label in self.edges:
            if src not in self.nodes or tgt not in self.nodes:
                raise GraphSyntaxError(f"edge endpoint missing: ({src}, {label}, {tgt})")
        for root in self.roots:
            if root not in self.nodes:
                raise GraphSyntaxError(f"root not a node: {root}")
        return self

    def copy(self) -> "SemGraph":
        return SemGraph(dict(self.nodes), set(self.edges), tuple(self.roots))

    def out_edges(self, node: str) -> list[Edge]:
        return sorted(e for e in self.edges if e[0] == node)

    def in_edges(self, node: str) -> list[Edge]:
        return sorted(e for e in self.edges if e[1] == node)

    def __len__(self) -> int:
        return len(self.nodes)


def weakly_connected_components(graph: SemGraph) -> list[set[str]]:
    """Partition the node set by weak connectivity, components sorted by min id."""
    neighbours: dict[str, set[str]] = {n: set() for n in graph.nodes}
    for src, tgt, _ in graph.edges:
        neighbours[src].add(tgt)
        neighbours[tgt].add(src)
    seen: set[str] = set()
    components: list[set[str]] = []
    for start in graph.nodes:
        if start in seen:
            continue
        stack = [start]
        comp: set[str] = set()
        while stack:
            node = stack.pop()
            if node in comp:
                continue
            comp.add(node)
            stack.extend(neighbours[node] - comp)
        seen |= comp
        components.append(comp)
    components.sort(key=lambda c: min(c))
    return components


@dataclass
class AsGraph:
    """A graph fragment: one root, source-marked nodes, and a request type.

    ``sources`` maps node id to source name (each name at most once); the
    root may itself carry a source.  ``rtype``'s domain always equals the set
    of source names present, and each entry is that source's request.
    """

    graph: SemGraph
    root: str
    sources: dict[str, str] = field(default_factory=dict)
    rtype: RequestType = EMPTY_TYPE

    def validate(self) -> "AsGraph":
        self.graph.validate()
        if self.root not in self.graph.nodes:
            raise GraphSyntaxError(f"root not a node: {self.root}")
        names = sorted(self.sources.values())
        for name in names:
            check_source_name(name)
        if len(set(names)) != len(names):
            raise GraphSyntaxError(f"source name used on two nodes: {names}")
        for node in self.sources:
            if node not in self.graph.nodes:
                raise GraphSyntaxError(f"sourced node missing: {node}")
        if sorted(self.rtype.names()) != names:
            raise GraphSyntaxError(
                f"type domain {sorted(self.rtype.names())} != source names {names}")
        if self.graph.nodes and len(weakly_connected_components(self.graph)) != 1:
            raise GraphSyntaxError("fragment is not weakly connected")
        return self

    def node_of_source(self, name: str) -> str:
        for node, source in self.sources.items():
            if source == name:
                return node
        raise KeyError(name)

    def copy(self) -> "AsGraph":
        return AsGraph(self.graph.copy(), self.root, dict(self.sources), self.rtype)

    def __str__(self) -> str:
        return serialize_asgraph(self)


def type_of(fragment: AsGraph) -> RequestType:
    """The request type of a fragment (domain = its source names)."""
    return fragment.rtype


def asgraph_from_parts(
    nodes: dict[str, str | None],
    edges: set[Edge] | list[Edge],
    root: str,
    sources: dict[str, str] | None = None,
    annotations: dict[str, RequestType] | None = None,
) -> AsGraph:
    """Assemble and validate a fragment; annotations default to empty requests."""
    sources = dict(sources or {})
    annotations = annotations or {}
    stray = set(annotations) - set(sources.values())
    if stray:
        raise GraphSyntaxError(f"annotations for sources on no node: {sorted(stray)}")
    entries = []
    for name in sources.values():
        entries.append((name, annotations.get(name, EMPTY_TYPE)))
    frag = AsGraph(SemGraph(dict(nodes), set(edges), (root,)), root, sources,
                   RequestType(entries))
    return frag.validate()


# -- text format -------------------------------------------------------------


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, char: str) -> None:
        if self.peek() != char:
            raise GraphSyntaxError(
                f"expected {char!r} at position {self.pos}: ...{self.text[self.pos:self.pos + 20]!r}")
        self.pos += 1

    def symbol(self, what: str) -> str:
        match = _SYMBOL_RE.match(self.text, self.pos)
        if not match:
            raise GraphSyntaxError(f"expected {what} at position {self.pos}")
        self.pos = match.end()
        return match.group()


def parse_asgraph(text: str) -> AsGraph:
    """Parse the penman-like notation into a validated ``AsGraph``.

    The first parenthesized occurrence of an id defines the node; bare-id
    mentions (and re-parenthesized mentions) refer back to it.
    """
    cur = _Cursor(text)
    nodes: dict[str, str | None] = {}
    edges: set[Edge] = set()
    sources: dict[str, str] = {}
    annotations: dict[str, RequestType] = {}
    mentions: list[str] = []

    def parse_node() -> str:
        cur.skip_ws()
        cur.expect("(")
        cur.skip_ws()
        node_id = cur.symbol("node id")
        defined = node_id not in nodes
        nodes.setdefault(node_id, None)
        cur.skip_ws()
        if cur.peek() == "<":
            if not defined:
                raise GraphSyntaxError(f"source on re-mention of {node_id}")
            cur.expect("<")
            match = _SOURCE_SCAN_RE.match(cur.text, cur.pos)
            if not match:
                raise GraphSyntaxError(f"expected source name at position {cur.pos}")
            cur.pos = match.end()
            name = check_source_name(match.group())
            request = EMPTY_TYPE
            if cur.peek() == "[":
                cur.expect("[")
                depth = 1
                start = cur.pos
                while depth:
                    ch = cur.peek()
                    if not ch:
                        raise GraphSyntaxError("unclosed '[' in source annotation")
                    if ch == "[":
                        depth += 1
                    elif ch == "]":
                        depth -= 1
                    cur.pos += 1
                request = RequestType.parse(cur.text[start:cur.pos - 1])
            cur.expect(">")
            if name in sources.values():
                raise GraphSyntaxError(f"source name used twice: {name}")
            sources[node_id] = name
            annotations[name] = request
            cur.skip_ws()
        if cur.peek() == "/":
            if not defined:
                raise GraphSyntaxError(f"label on re-mention of {node_id}")
            cur.expect("/")
            cur.skip_ws()
            nodes[node_id] = cur.symbol("node label")
            cur.skip_ws()
        while cur.peek() == ":":
            cur.expect(":")
            role = cur.symbol("edge label")
            cur.skip_ws()
            if cur.peek() == "(":
                other = parse_node()
            else:
                other = cur.symbol("node reference")
                mentions.append(other)
            if role.endswith("-of") and len(role) > 3:
                edges.add((other, node_id, role[:-3]))
            else:
                edges.add((node_id, other, role))
            cur.skip_ws()
        cur.expect(")")
        return node_id

    root = parse_node()
    cur.skip_ws()
    if cur.pos != len(cur.text):
        raise GraphSyntaxError(f"trailing text: {cur.text[cur.pos:]!r}")
    for mention in mentions:
        if mention not in nodes:
            raise GraphSyntaxError(f"reference to undefined node: {mention}")
    return asgraph_from_parts(nodes, edges, root, sources, annotations)


def serialize_asgraph(fragment: AsGraph) -> str:
    """Canonical text: children ordered by printed edge label, then node id.

    Every edge prints exactly once, at its origin as ``:role`` whenever the
    origin is reachable from already printed material along edge directions;
    otherwise it prints at its target as ``:role-of``, defining the origin
    there.  Mentions of already defined nodes are bare references.
    """
    graph = fragment.graph
    out: dict[str, list[Edge]] = {n: [] for n in graph.nodes}
    inc: dict[str, list[Edge]] = {n: [] for n in graph.nodes}
    for edge in sorted(graph.edges):
        out[edge[0]].append(edge)
        inc[edge[1]].append(edge)

    def forward_reach(seed: set[str]) -> set[str]:
        reach = set(seed)
        stack = list(seed)
        while stack:
            for edge in out[stack.pop()]:
                if edge[1] not in reach:
                    reach.add(edge[1])
                    stack.append(edge[1])
        return reach

    printed_edges: set[Edge] = set()
    defined: set[str] = set()

    def node_text(node: str) -> str:
        defined.add(node)
        parts = [node]
        source = fragment.sources.get(node)
        if source is not None:
            request = fragment.rtype.get(source) or EMPTY_TYPE
            parts.append(f"<{source}>" if request.is_empty()
                         else f"<{source}[{request.render()}]>")
        label = graph.nodes[node]
        if label is not None:
            parts.append(f" / {label}")
        reach = forward_reach(defined | {node})
        children = []
        for edge in out[node]:
            if edge not in printed_edges:
                children.append((edge[2], edge[1], edge))
        for edge in inc[node]:
            # an origin the forward traversal will meet prints there instead
            if edge not in printed_edges and edge[0] not in reach:
                children.append((edge[2] + "-of", edge[0], edge))
        children.sort(key=lambda item: (item[0], item[1]))
        for role, other, edge in children:
            if edge in printed_edges:
                continue
            printed_edges.add(edge)
            if other in defined:
                parts.append(f" :{role} {other}")
            else:
                parts.append(f" :{role} {node_text(other)}")
        return f"({''.join(parts)})"

    text = node_text(fragment.root)
    if len(printed_edges) != len(graph.edges) or len(defined) != len(graph.nodes):
        raise GraphSyntaxError("fragment is not weakly connected from its root")
    return text


# -- isomorphism -------------------------------------------------------------


def _signature(graph: SemGraph, node: str, roots: set[str],
               sources: dict[str, str] | None) -> tuple:
    outs = sorted(label for src, _, label in graph.edges if src == node)
    ins = sorted(label for _, tgt, label in graph.edges if tgt == node)
    return (graph.nodes[node] or "", tuple(outs), tuple(ins), node in roots,
            sources.get(node, "") if sources else "")


def _isomorphism(g1: SemGraph, g2: SemGraph, roots1: set[str], roots2: set[str],
                 sources1: dict[str, str] | None = None,
                 sources2: dict[str, str] | None = None) -> dict[str, str] | None:
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return None
    sig1 = {n: _signature(g1, n, roots1, sources1) for n in g1.nodes}
    sig2 = {n: _signature(g2, n, roots2, sources2) for n in g2.nodes}
    if sorted(sig1.values()) != sorted(sig2.values()):
        return None
    order = sorted(g1.nodes, key=lambda n: (sig1[n], n))
    candidates = {n: sorted(m for m in g2.nodes if sig2[m] == sig1[n]) for n in order}
    edges2 = g2.edges
    mapping: dict[str, str] = {}
    used: set[str] = set()

    def consistent(node: str, image: str) -> bool:
        for src, tgt, label in g1.edges:
            if src == node and tgt == node:
                if (image, image, label) not in edges2:
                    return False
            elif src == node and tgt in mapping and (image, mapping[tgt], label) not in edges2:
                return False
            elif tgt == node and src in mapping and (mapping[src], image, label) not in edges2:
                return False
        return True

    def extend(index: int) -> bool:
        if index == len(order):
            return True
        node = order[index]
        for image in candidates[node]:
            if image in used or not consistent(node, image):
                continue
            mapping[node] = image
            used.add(image)
            if extend(index + 1):
                return True
            del mapping[node]
            used.discard(image)
        return False

    return mapping if extend(0) else None


def semgraph_isomorphic(g1: SemGraph, g2: SemGraph) -> bool:
    """Label/edge/root-preserving bijection test (root lists compared as sets)."""
    return _isomorphism(g1, g2, set(g1.roots), set(g2.roots)) is not None


def asgraph_isomorphic(f1: AsGraph, f2: AsGraph) -> bool:
    """Isomorphism that additionally preserves the root, sources and type."""
    if f1.rtype != f2.rtype:
        return False
    return _isomorphism(f1.graph, f2.graph, {f1.root}, {f2.root},
                        f1.sources, f2.sources) is not None
