"""The two graph-combining operations and typed dependency trees built from them.

``apply`` plugs an argument fragment into one of the head's source slots;
``modify`` attaches a modifier fragment to the head's root and leaves the
head's type unchanged.  A dependency tree whose tokens carry fragments (or the
blank marker) and whose edges carry operation labels evaluates bottom-up to a
single graph; evaluation is defined whenever the operations can be ordered so
that every step type-checks, and the result does not depend on which
admissible order is chosen.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterator

from .graphs import (
    EMPTY_TYPE,
    AsGraph,
    RequestType,
    SemGraph,
    check_source_name,
    type_of,
)


class OperationError(Exception):
    """An operation is undefined on its inputs (never a crash)."""


class MissingSource(OperationError):
    pass


class TypeMismatch(OperationError):
    pass


class NonEmptyRequest(OperationError):
    pass


class UnmatchedModifierSource(OperationError):
    pass


class LabelConflict(OperationError):
    pass


class IllTyped(OperationError):
    """No admissible evaluation order exists, or the final type is wrong."""


# -- operation labels ---------------------------------------------------------

OP_IGNORE = "IGNORE"
OP_ROOT = "ROOT"


def app_op(source: str) -> str:
    return f"APP_{check_source_name(source)}"


def mod_op(source: str) -> str:
    return f"MOD_{check_source_name(source)}"


def op_kind(op: str) -> str:
    if op in (OP_IGNORE, OP_ROOT):
        return op
    if op.startswith("APP_"):
        return "APP"
    if op.startswith("MOD_"):
        return "MOD"
    raise ValueError(f"not an operation label: {op!r}")


def op_source(op: str) -> str | None:
    return None if op in (OP_IGNORE, OP_ROOT) else check_source_name(op[4:])


# -- type-level operations ----------------------------------------------------


def apply_type(head: RequestType, alpha: str, arg: RequestType) -> RequestType:
    """Result type of apply: drop alpha, inherit the argument's unshared sources."""
    request = head.get(alpha)
    if request is None:
        raise MissingSource(f"head type {head} has no source {alpha}")
    if arg != request:
        raise TypeMismatch(f"argument type {arg} != request {request} at {alpha}")
    result = head.without(alpha)
    for name, annotation in arg.entries:
        if name not in result:
            result = result.with_entry(name, annotation)
    return result


def modify_type(head: RequestType, alpha: str, modifier: RequestType) -> RequestType:
    """Head type is unchanged; the modifier's own requests are checked here."""
    request = modifier.get(alpha)
    if request is None:
        raise MissingSource(f"modifier type {modifier} has no source {alpha}")
    if not request.is_empty():
        raise NonEmptyRequest(f"modifier source {alpha} has request {request}, not []")
    for name, annotation in modifier.entries:
        if name == alpha:
            continue
        head_annotation = head.get(name)
        if head_annotation is None:
            raise UnmatchedModifierSource(
                f"modifier source {name} absent from head type {head}")
        if head_annotation != annotation:
            raise TypeMismatch(
                f"annotation clash at shared source {name}: {head_annotation} vs {annotation}")
    return head


# -- graph-level operations ---------------------------------------------------


class _Union:
    def __init__(self):
        self.parent: dict[object, object] = {}

    def find(self, x: object) -> object:
        self.parent.setdefault(x, x)
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: object, b: object) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def _combine(head: AsGraph, other: AsGraph, unions: list[tuple[str, str]],
             drop_sources: set[tuple[str, str]], result_type: RequestType,
             root_key: tuple[str, str]) -> AsGraph:
    """Disjoint union of head and other, merging the requested node pairs.

    ``unions`` pairs (head node, other node).  ``drop_sources`` lists
    (side, node) whose source marker is consumed by the operation.  Node ids
    from the head win inside merged classes; unmerged ids from ``other`` are
    suffixed only on collision.
    """
    uf = _Union()
    for head_node, other_node in unions:
        uf.union(("h", head_node), ("o", other_node))
    classes: dict[object, list[tuple[str, str]]] = {}
    for side, graph in (("h", head), ("o", other)):
        for node in graph.graph.nodes:
            classes.setdefault(uf.find((side, node)), []).append((side, node))

    def name_priority(member: tuple[str, str]) -> tuple[int, int, str]:
        side, node = member
        graph = head if side == "h" else other
        labeled = graph.graph.nodes[node] is not None
        return (0 if labeled else 1, 0 if side == "h" else 1, node)

    names: dict[object, str] = {}
    used: set[str] = set()
    for rep in sorted(classes, key=lambda r: sorted(classes[r])):
        members = sorted(classes[rep])
        side, name = min(members, key=name_priority)
        if side == "o":
            # ids borrowed from the other side must not shadow head ids
            candidate, k = name, 2
            while candidate in used or (candidate in head.graph.nodes
                                        and ("h", candidate) not in members):
                candidate = f"{name}#{k}"
                k += 1
            name = candidate
        names[rep] = name
        used.add(name)

    def resolve(side: str, node: str) -> str:
        return names[uf.find((side, node))]

    nodes: dict[str, str | None] = {}
    for rep, members in classes.items():
        labels = set()
        for side, node in members:
            graph = head if side == "h" else other
            label = graph.graph.nodes[node]
            if label is not None:
                labels.add(label)
        if len(labels) > 1:
            raise LabelConflict(f"merged node would carry labels {sorted(labels)}")
        nodes[names[rep]] = labels.pop() if labels else None

    edges = set()
    for side, graph in (("h", head), ("o", other)):
        for src, tgt, label in graph.graph.edges:
            edges.add((resolve(side, src), resolve(side, tgt), label))

    sources: dict[str, str] = {}
    for side, graph in (("h", head), ("o", other)):
        for node, source in graph.sources.items():
            if (side, node) in drop_sources:
                continue
            node_id = resolve(side, node)
            previous = sources.get(node_id)
            if previous is not None and previous != source:
                raise OperationError(
                    f"merged node {node_id} would carry sources {previous} and {source}")
            sources[node_id] = source

    result = AsGraph(SemGraph(nodes, edges, (resolve(*root_key),)),
                     resolve(*root_key), sources, result_type)
    return result.validate()


def apply(alpha: str, head: AsGraph, arg: AsGraph) -> AsGraph:
    """Fill the head's alpha slot with the argument's root.

    The argument's type must equal the request at alpha; sources with the same
    name in head and argument merge into one node, the head keeping its
    annotation.  Conflicting labels on a merged node are an error.
    """
    result_type = apply_type(head.rtype, alpha, arg.rtype)
    plug = head.node_of_source(alpha)
    head_remaining = {name: node for node, name in head.sources.items() if node != plug}
    unions: list[tuple[str, str]] = [(plug, arg.root)]
    for node, name in sorted(arg.sources.items()):
        if name in head_remaining:
            unions.append((head_remaining[name], node))
    return _combine(head, arg, unions, {("h", plug)}, result_type, ("h", head.root))


def modify(alpha: str, head: AsGraph, modifier: AsGraph) -> AsGraph:
    """Merge the modifier's alpha node into the head's root.

    The modifier's request at alpha must be empty and its remaining sources
    must all exist in the head (same annotations); they merge name-by-name.
    The head keeps its root and its entire type.
    """
    modify_type(head.rtype, alpha, modifier.rtype)
    attach = modifier.node_of_source(alpha)
    head_by_name = {name: node for node, name in head.sources.items()}
    unions: list[tuple[str, str]] = [(head.root, attach)]
    for node, name in sorted(modifier.sources.items()):
        if node == attach:
            continue
        unions.append((head_by_name[name], node))
    return _combine(head, modifier, unions, {("o", attach)}, head.rtype,
                    ("h", head.root))


# -- dependency trees ---------------------------------------------------------


@dataclass(frozen=True)
class AmToken:
    """One sentence token with its fragment assignment and incoming tree edge.

    ``supertag`` is None for tokens without semantic contribution; those
    attach via IGNORE.  ``lexlabel`` is the lexical label template for the
    fragment's lexical node, or None.
    """

    index: int
    form: str
    head: int
    op: str
    lemma: str = "_"
    pos: str = "_"
    ne: str = "O"
    supertag: AsGraph | None = None
    lexlabel: str | None = None


@dataclass
class AmDepTree:
    """A dependency tree over tokens 1..n with an artificial root at index 0."""

    tokens: list[AmToken]
    sent_id: str | None = None
    text: str | None = None

    def token(self, index: int) -> AmToken:
        return self.tokens[index - 1]

    def children(self, head: int) -> list[AmToken]:
        return [t for t in self.tokens if t.head == head]

    def root_child(self) -> AmToken:
        roots = [t for t in self.tokens if t.op == OP_ROOT]
        if len(roots) != 1:
            raise IllTyped(f"expected exactly one ROOT edge, found {len(roots)}")
        return roots[0]

    def with_token(self, token: AmToken) -> "AmDepTree":
        tokens = list(self.tokens)
        tokens[token.index - 1] = token
        return AmDepTree(tokens, self.sent_id, self.text)

    def validate(self) -> "AmDepTree":
        n = len(self.tokens)
        for position, token in enumerate(self.tokens, start=1):
            if token.index != position:
                raise ValueError(f"token index {token.index} at position {position}")
            if not 0 <= token.head <= n:
                raise ValueError(f"head {token.head} out of range")
            if token.head == token.index:
                raise ValueError(f"token {token.index} is its own head")
            op_kind(token.op)
            if (token.op == OP_IGNORE) != (token.supertag is None):
                raise ValueError(
                    f"token {token.index}: IGNORE and blank supertag must coincide")
            if token.op == OP_ROOT and token.head != 0:
                raise ValueError("ROOT edge must come from index 0")
            if token.head == 0 and token.op not in (OP_ROOT, OP_IGNORE):
                raise ValueError(f"edge from 0 must be ROOT or IGNORE, got {token.op}")
        n_roots = sum(1 for t in self.tokens if t.op == OP_ROOT)
        if n_roots != 1:
            raise ValueError(f"expected exactly one ROOT edge, found {n_roots}")
        # every token must reach 0, which also rules out cycles
        for token in self.tokens:
            seen = set()
            node = token.index
            while node != 0:
                if node in seen:
                    raise ValueError(f"cycle through token {node}")
                seen.add(node)
                node = self.token(node).head
        for token in self.tokens:
            if token.supertag is None:
                for child in self.children(token.index):
                    if child.op != OP_IGNORE:
                        raise ValueError(
                            f"blank token {token.index} heads a non-IGNORE child")
        return self


def _step(current: RequestType, op: str, child_type: RequestType) -> RequestType:
    source = op_source(op)
    if op_kind(op) == "APP":
        return apply_type(current, source, child_type)
    return modify_type(current, source, child_type)


def _type_key(rtype: RequestType) -> tuple[int, str]:
    return (len(rtype), rtype.render())


class _TypedTree:
    """Reachable-type analysis: for every token, the set of types its subtree
    can evaluate to, with back-pointers to rebuild a witness child order for
    any reachable type.

    Per token the search walks states (frozenset of remaining child slots,
    current type); a step consumes one child at one of the child's own
    reachable types.  First-discovered back-pointers under a fixed expansion
    order keep witnesses deterministic.
    """

    def __init__(self, tree: AmDepTree):
        self.tree = tree
        self.children: dict[int, list[AmToken]] = {t.index: [] for t in tree.tokens}
        for token in tree.tokens:
            if token.head != 0:
                self.children[token.head].append(token)
        self.steps: dict[int, list[AmToken]] = {}
        self.finals: dict[int, set[RequestType]] = {}
        self.back: dict[int, dict[tuple[frozenset[int], RequestType],
                                  tuple[tuple[frozenset[int], RequestType],
                                        int, RequestType] | None]] = {}
        root = tree.root_child()
        self._analyze(root)

    def _analyze(self, token: AmToken) -> set[RequestType]:
        if token.index in self.finals:
            return self.finals[token.index]
        steps = [c for c in sorted(self.children[token.index], key=lambda t: t.index)
                 if c.op != OP_IGNORE]
        child_finals = [sorted(self._analyze(c), key=_type_key) for c in steps]
        self.steps[token.index] = steps
        start = (frozenset(range(len(steps))), type_of(token.supertag))
        back: dict = {start: None}
        frontier = [start]
        while frontier:
            frontier.sort(key=lambda s: (sorted(s[0]), _type_key(s[1])))
            next_frontier = []
            for state in frontier:
                remaining, current = state
                for position in sorted(remaining):
                    child = steps[position]
                    for child_type in child_finals[position]:
                        try:
                            nxt = _step(current, child.op, child_type)
                        except OperationError:
                            continue
                        nxt_state = (remaining - {position}, nxt)
                        if nxt_state not in back:
                            back[nxt_state] = (state, position, child_type)
                            next_frontier.append(nxt_state)
            frontier = next_frontier
        self.back[token.index] = back
        self.finals[token.index] = {
            current for remaining, current in back if not remaining}
        return self.finals[token.index]

    def witness(self, token_index: int, target: RequestType,
                into: dict[int, list[int]]) -> None:
        """Fill ``into`` with child orders so the token's subtree ends at
        ``target``; recurses into children at the types the path consumed."""
        back = self.back[token_index]
        state: tuple[frozenset[int], RequestType] = (frozenset(), target)
        if state not in back:
            raise IllTyped(f"token {token_index} cannot evaluate to type {target}")
        trail: list[tuple[int, RequestType]] = []
        while back[state] is not None:
            state, position, child_type = back[state]
            trail.append((position, child_type))
        trail.reverse()
        steps = self.steps[token_index]
        into[token_index] = [steps[p].index for p, _ in trail]
        for position, child_type in trail:
            self.witness(steps[position].index, child_type, into)
        for child in self.children[token_index]:
            if child.op == OP_IGNORE:
                into.setdefault(child.index, [])


def check_well_typed(tree: AmDepTree) -> RequestType:
    """Return the final type of the ROOT child's subtree.

    Prefers [] when reachable (full well-typedness); otherwise the smallest
    reachable final type.  Raises IllTyped when no complete child order is
    defined at some token.
    """
    root = tree.root_child()
    tree.validate()
    typed = _TypedTree(tree)
    finals = typed.finals[root.index]
    if not finals:
        raise IllTyped(f"no admissible child order at token {root.index}")
    if EMPTY_TYPE in finals:
        return EMPTY_TYPE
    return min(finals, key=_type_key)


def evaluate(tree: AmDepTree, orders: dict[int, list[int]] | None = None) -> SemGraph:
    """Evaluate the tree bottom-up to a single-rooted graph.

    IGNORE subtrees contribute nothing.  Raises IllTyped when no child order
    reaches final type [].  An explicit ``orders`` map (token index -> child
    evaluation order) overrides the search; it is how tests exercise order
    independence.
    """
    root = tree.root_child()
    tree.validate()
    if orders is None:
        typed = _TypedTree(tree)
        if EMPTY_TYPE not in typed.finals[root.index]:
            raise IllTyped(
                f"no evaluation order reaches final type [] at token {root.index}")
        orders = {}
        typed.witness(root.index, EMPTY_TYPE, orders)

    def build(token: AmToken) -> AsGraph:
        value = token.supertag
        for child_index in orders[token.index]:
            child = tree.token(child_index)
            source = op_source(child.op)
            child_value = build(child)
            try:
                if op_kind(child.op) == "APP":
                    value = apply(source, value, child_value)
                else:
                    value = modify(source, value, child_value)
            except OperationError as err:
                raise type(err)(f"token {child.index}: {err}") from err
        return value

    for token in tree.tokens:
        if token.supertag is None:
            continue
        expected = {c.index for c in tree.tokens
                    if c.head == token.index and c.op != OP_IGNORE}
        if set(orders.get(token.index, [])) != expected:
            raise ValueError(
                f"orders for token {token.index} must cover {sorted(expected)}")
    result = build(root)
    if not result.rtype.is_empty():
        raise IllTyped(f"final type {result.rtype} is not []")
    return SemGraph(dict(result.graph.nodes), set(result.graph.edges),
                    (result.root,)).validate()


def admissible_orders(tree: AmDepTree, limit: int = 50) -> Iterator[dict[int, list[int]]]:
    """Yield up to ``limit`` full per-token child orderings under which the
    tree evaluates to final type [].

    Orders at a token fix the types its children must reach, so choices are
    enumerated top-down, child assignments nested inside each path the parent
    can take.  Used by tests to confirm evaluation is order-independent.
    """
    root = tree.root_child()
    tree.validate()
    typed = _TypedTree(tree)
    if EMPTY_TYPE not in typed.finals[root.index]:
        return

    def paths(token: AmToken, target: RequestType,
              ) -> Iterator[list[tuple[int, RequestType]]]:
        """All orders (position, child type) moving the token to ``target``."""
        steps = typed.steps[token.index]
        child_finals = [sorted(typed.finals[c.index], key=_type_key) for c in steps]

        def go(remaining: frozenset[int], current: RequestType,
               acc: list[tuple[int, RequestType]],
               ) -> Iterator[list[tuple[int, RequestType]]]:
            if not remaining:
                if current == target:
                    yield list(acc)
                return
            for position in sorted(remaining):
                for child_type in child_finals[position]:
                    try:
                        nxt = _step(current, steps[position].op, child_type)
                    except OperationError:
                        continue
                    acc.append((position, child_type))
                    yield from go(remaining - {position}, nxt, acc)
                    acc.pop()

        yield from go(frozenset(range(len(steps))), type_of(token.supertag), [])

    def assignments(token: AmToken, target: RequestType,
                    ) -> Iterator[dict[int, list[int]]]:
        steps = typed.steps[token.index]
        ignored = {c.index: [] for c in typed.children[token.index]
                   if c.op == OP_IGNORE}
        for trail in paths(token, target):
            base = {token.index: [steps[p].index for p, _ in trail], **ignored}

            def nest(position: int, acc: dict[int, list[int]],
                     ) -> Iterator[dict[int, list[int]]]:
                if position == len(trail):
                    yield dict(acc)
                    return
                child_pos, child_type = trail[position]
                for sub in assignments(steps[child_pos], child_type):
                    merged = dict(acc)
                    merged.update(sub)
                    yield from nest(position + 1, merged)

            yield from nest(0, base)

    count = 0
    for assignment in assignments(root, EMPTY_TYPE):
        yield assignment
        count += 1
        if count >= limit:
            return
