"""Tests for graph-to-tree conversion: grouping, constants, resolution."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from amtool.algebra import evaluate, op_kind, op_source
from amtool.amconll import write_amconll
from amtool.decompose import (
    DecompInstance,
    DecomposeConfig,
    NonDecomposable,
    REASONS,
    Word,
    assign_sources,
    build_constants,
    decompose,
    enumerate_variants,
    group_edges,
)
from amtool.graphs import (
    SemGraph,
    asgraph_from_parts,
    parse_asgraph,
    semgraph_isomorphic,
    serialize_asgraph,
)
from amtool.tables import PatternConfig, builtin_table, parse_table

from genutil import random_tree_instance

DM = builtin_table("DM")
PAS = builtin_table("PAS")
PSD = builtin_table("PSD")
EDS = builtin_table("EDS")


def mk(sid, nodes, edges, root, words, align, bank=DM):
    graph = SemGraph(dict(nodes), {tuple(e) for e in edges}, (root,)).validate()
    ws = [Word(w, lemma=w) for w in words]
    return DecompInstance(sid, graph, ws, dict(align))


def cat_sleeps():
    return mk("s1", {"c": "cat", "t": "the", "s": "sleep"},
              [("s", "c", "ARG1"), ("t", "c", "BV")],
              "s", ["the", "cat", "sleeps"], {"t": 1, "c": 2, "s": 3})


def control():
    return mk("s2", {"w": "writer", "v": "want", "z": "sleep"},
              [("v", "w", "ARG1"), ("v", "z", "ARG2"), ("z", "w", "ARG1")],
              "v", ["writers", "want", "to", "sleep"],
              {"w": 1, "v": 2, "z": 4})


def pas_coordination():
    return mk("s3", {"d": "dog", "a": "and", "c": "cat", "s": "sleep"},
              [("s", "a", "verb_ARG1"), ("a", "d", "coord_ARG1"),
               ("a", "c", "coord_ARG2")],
              "s", ["dogs", "and", "cats", "sleep"],
              {"d": 1, "a": 2, "c": 3, "s": 4})


def heads(tree):
    return {tok.form: (tok.head, tok.op) for tok in tree.tokens}


def tags(tree):
    return {tok.form: (serialize_asgraph(tok.supertag)
                       if tok.supertag is not None else None)
            for tok in tree.tokens}


class TestGroupEdges:
    def test_origin_owned(self):
        g = SemGraph({"t": "the", "c": "cat"}, {("t", "c", "BV")}, ("c",))
        grp = group_edges(g, DM).edges[("t", "c", "BV")]
        assert (grp.owner, grp.open_end, grp.source) == ("t", "c", "D")

    def test_target_owned(self):
        g = SemGraph({"b": "buy", "s": "sell"}, {("b", "s", "_and_c")}, ("b",))
        grp = group_edges(g, DM).edges[("b", "s", "_and_c")]
        assert (grp.owner, grp.open_end, grp.source) == ("s", "b", "coord")

    def test_coordination_mark_is_transparent(self):
        g = SemGraph({"v": "laugh", "a": "and"}, {("v", "a", "ACT-arg+coord")},
                     ("v",))
        grp = group_edges(g, PSD).edges[("v", "a", "ACT-arg+coord")]
        assert (grp.owner, grp.source) == ("v", "S")
        # the stored edge keeps the marked label for the round trip
        assert grp.edge[2] == "ACT-arg+coord"

    def test_node_label_override_flips_owner(self):
        # ARG1 is origin-owned, but a covert-quantifier target takes the edge
        g = SemGraph({"x": "poss", "q": "udef_q|u~a"}, {("x", "q", "ARG1")},
                     ("x",))
        grp = group_edges(g, EDS).edges[("x", "q", "ARG1")]
        assert (grp.owner, grp.open_end) == ("q", "x")

    def test_override_reads_the_composite_label_base(self):
        g = SemGraph({"x": "poss", "q": "udef_quux"}, {("x", "q", "ARG1")},
                     ("x",))
        grp = group_edges(g, EDS).edges[("x", "q", "ARG1")]
        assert grp.owner == "x"


class TestAssignSources:
    def test_duplicates_get_numeric_suffixes(self):
        g = SemGraph({"v": "give", "a": None, "b": None, "c": None},
                     {("v", "a", "mwe2"), ("v", "b", "mwe2"), ("v", "c", "mwe2")},
                     ("v",))
        table = parse_table("mwe2\torigin\tM\tapp\n*\torigin\tX\tapp\n")
        grouping = assign_sources(group_edges(g, table),
                                  {"v": 1, "a": 2, "b": 3, "c": 4}, table)
        assert grouping.slot_sources == {(1, "a"): "M", (1, "b"): "M2",
                                         (1, "c"): "M3"}

    def test_suffix_skips_taken_names(self):
        g = SemGraph({"v": "v", "a": None, "b": None, "c": None},
                     {("v", "a", "A"), ("v", "b", "B"), ("v", "c", "C")}, ("v",))
        table = parse_table("A\torigin\tM\tapp\nB\torigin\tM\tapp\n"
                            "C\torigin\tM2\tapp\n*\torigin\tX\tapp\n")
        grouping = assign_sources(group_edges(g, table),
                                  {"v": 1, "a": 2, "b": 3, "c": 4}, table)
        # b cannot take M2: node c already holds that template
        assert grouping.slot_sources[(1, "b")] == "M3"
        assert grouping.slot_sources[(1, "c")] == "M2"

    def test_word_order_ranks_slots(self):
        g = SemGraph({"l": "laugh", "z": None, "a": None},
                     {("l", "z", "op.member"), ("l", "a", "op.member")}, ("l",))
        align = {"z": 1, "a": 2, "l": 3}
        grouping = assign_sources(group_edges(g, PSD), align, PSD)
        # aligned position wins over node id order
        assert grouping.slot_sources == {(3, "z"): "op", (3, "a"): "op2"}

    def test_node_order_without_the_flag(self):
        g = SemGraph({"l": "laugh", "z": None, "a": None},
                     {("l", "z", "mwe2"), ("l", "a", "mwe2")}, ("l",))
        table = parse_table("mwe2\torigin\tM\tapp\n*\torigin\tX\tapp\n")
        grouping = assign_sources(group_edges(g, table), {"z": 1, "a": 2, "l": 3},
                                  table)
        assert grouping.slot_sources == {(3, "a"): "M", (3, "z"): "M2"}

    def test_parallel_edges_share_one_slot(self):
        g = SemGraph({"v": "v", "x": None},
                     {("v", "x", "ARG1"), ("v", "x", "ARG3")}, ("v",))
        grouping = assign_sources(group_edges(g, DM), {"v": 1, "x": 2}, DM)
        assert grouping.slot_sources == {(1, "x"): "O2"}


class TestBuildConstants:
    def test_simple_sentence(self):
        inst = cat_sleeps()
        grouping = assign_sources(group_edges(inst.graph, DM), inst.alignment, DM)
        consts = build_constants(inst.graph, grouping, inst.alignment, 3)
        assert serialize_asgraph(consts[1]) == "(t / the :BV (c<D>))"
        assert serialize_asgraph(consts[2]) == "(c / cat)"
        assert serialize_asgraph(consts[3]) == "(s / sleep :ARG1 (c<S>))"

    def test_token_without_nodes_is_bottom(self):
        inst = control()
        grouping = assign_sources(group_edges(inst.graph, DM), inst.alignment, DM)
        consts = build_constants(inst.graph, grouping, inst.alignment, 4)
        assert consts[3] is None

    def test_placeholders_keep_graph_node_ids(self):
        inst = cat_sleeps()
        grouping = assign_sources(group_edges(inst.graph, DM), inst.alignment, DM)
        consts = build_constants(inst.graph, grouping, inst.alignment, 3)
        assert set(consts[3].graph.nodes) == {"s", "c"}

    def test_two_entry_points_rejected(self):
        g = SemGraph({"m": "m", "x": "x", "y": "y"},
                     {("m", "x", "ARG1"), ("m", "y", "ARG2")}, ("m",))
        align = {"m": 1, "x": 2, "y": 2}
        grouping = assign_sources(group_edges(g, DM), align, DM)
        with pytest.raises(NonDecomposable) as err:
            build_constants(g, grouping, align, 2)
        assert err.value.reason == "MultipleRootsNeeded"

    def test_multi_node_constant_keeps_internal_edges(self):
        g = SemGraph({"m": "many", "k": "kilometer"},
                     {("m", "k", "ARG1")}, ("m",))
        align = {"m": 1, "k": 1}
        grouping = assign_sources(group_edges(g, DM), align, DM)
        consts = build_constants(g, grouping, align, 1)
        assert serialize_asgraph(consts[1]) == "(m / many :ARG1 (k / kilometer))"


class TestEnumerateVariants:
    def probe(self, sources):
        nodes = {"r": "v"}
        nodes.update({n: None for n in sources})
        edges = {("r", n, f"e{k}") for k, n in enumerate(sorted(sources))}
        const = asgraph_from_parts(nodes, edges, "r", dict(sources))
        return [tuple(sorted(v.sources.items())) for v in
                enumerate_variants(const)]

    def test_unaccusative_subject_preferred(self):
        assert self.probe({"x": "O2"}) == [
            (("x", "S"),), (("x", "O"),), (("x", "O2"),)]

    def test_passive_ranks_after_active(self):
        assert self.probe({"x": "S", "y": "O"}) == [
            (("x", "S"), ("y", "O")), (("x", "O"), ("y", "S"))]

    def test_no_object_slots_means_no_alternation(self):
        assert self.probe({"x": "M"}) == [(("x", "M"),)]

    def test_oo_is_not_in_the_object_family(self):
        assert self.probe({"x": "OO"}) == [(("x", "OO"),)]

    def test_promotion_fills_lower_indices_first(self):
        ranked = self.probe({"x": "O", "y": "O3"})
        assert ranked[0] == (("x", "S"), ("y", "O"))
        assert ranked.index((("x", "O"), ("y", "O2"))) < \
            ranked.index((("x", "O"), ("y", "O3")))


class TestDecomposeShapes:
    def test_simple_sentence_tree(self):
        tree = decompose(cat_sleeps(), DM)
        assert heads(tree) == {"the": (2, "MOD_D"), "cat": (3, "APP_S"),
                               "sleeps": (0, "ROOT")}
        assert tags(tree)["sleeps"] == "(s / sleep :ARG1 (c<S>))"
        assert tags(tree)["the"] == "(t / the :BV (c<D>))"

    def test_adjective_becomes_modifier(self):
        inst = mk("adj", {"c": "cat", "a": "shy", "s": "sleep"},
                  [("s", "c", "ARG1"), ("a", "c", "ARG1")],
                  "s", ["shy", "cats", "sleep"], {"a": 1, "c": 2, "s": 3})
        tree = decompose(inst, DM)
        assert heads(tree)["shy"] == (2, "MOD_S")
        assert heads(tree)["cats"] == (3, "APP_S")

    def test_control_annotates_the_clausal_slot(self):
        tree = decompose(control(), DM)
        assert tags(tree)["want"] == \
            "(v / want :ARG1 (w<S>) :ARG2 (z<O[S]>))"
        assert heads(tree)["sleep"] == (2, "APP_O")

    def test_raising_chain(self):
        inst = mk("raise", {"w": "writer", "r": "seem", "v": "want",
                            "z": "sleep"},
                  [("r", "v", "ARG1"), ("v", "w", "ARG1"), ("v", "z", "ARG2"),
                   ("z", "w", "ARG1")],
                  "r", ["writers", "seem", "to", "want", "to", "sleep"],
                  {"w": 1, "r": 2, "v": 4, "z": 6})
        tree = decompose(inst, DM)
        assert heads(tree)["writers"] == (4, "APP_S")
        assert semgraph_isomorphic(evaluate(tree), inst.graph)

    def test_long_distance_subject_crosses_raising_verb(self):
        inst = mk("ldist", {"w": "writer", "v": "want", "r": "seem",
                            "z": "sleep"},
                  [("v", "w", "ARG1"), ("v", "r", "ARG2"), ("r", "z", "ARG1"),
                   ("z", "w", "ARG1")],
                  "v", ["writers", "want", "to", "seem", "to", "sleep"],
                  {"w": 1, "v": 2, "r": 4, "z": 6})
        tree = decompose(inst, DM)
        assert semgraph_isomorphic(evaluate(tree), inst.graph)

    def test_step_label_outside_the_allowed_set_blocks_passing(self):
        inst = mk("ldist2", {"w": "writer", "v": "want", "r": "seem",
                             "z": "sleep"},
                  [("v", "w", "ARG1"), ("v", "r", "ARG2"), ("r", "z", "ARG3"),
                   ("z", "w", "ARG1")],
                  "v", ["writers", "want", "to", "seem", "to", "sleep"],
                  {"w": 1, "v": 2, "r": 4, "z": 6})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, DM)
        assert err.value.reason == "UnmatchedReentrancy"

    def test_pas_has_no_bare_raising_steps(self):
        inst = mk("pasraise", {"w": "writer", "v": "want", "r": "seem",
                               "z": "sleep"},
                  [("v", "w", "verb_ARG1"), ("v", "r", "verb_ARG2"),
                   ("r", "z", "verb_ARG1"), ("z", "w", "verb_ARG1")],
                  "v", ["writers", "want", "to", "seem", "to", "sleep"],
                  {"w": 1, "v": 2, "r": 4, "z": 6})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, PAS)
        assert err.value.reason == "UnmatchedReentrancy"

    def test_coordination_attaches_shared_argument_at_the_top(self):
        tree = decompose(pas_coordination(), PAS)
        assert heads(tree) == {"dogs": (2, "APP_op1"), "and": (4, "APP_S"),
                               "cats": (2, "APP_op2"), "sleep": (0, "ROOT")}

    def test_coordination_below_control(self):
        inst = mk("nest", {"w": "writer", "v": "want", "a": "and",
                           "z": "sleep", "d": "dream"},
                  [("v", "w", "verb_ARG1"), ("v", "a", "verb_ARG2"),
                   ("a", "z", "coord_ARG1"), ("a", "d", "coord_ARG2"),
                   ("z", "w", "verb_ARG1"), ("d", "w", "verb_ARG1")],
                  "v", ["writers", "want", "to", "sleep", "and", "to", "dream"],
                  {"w": 1, "v": 2, "z": 4, "a": 5, "d": 7})
        tree = decompose(inst, PAS)
        assert "op1[S]" in tags(tree)["and"] and "op2[S]" in tags(tree)["and"]
        assert "O[S]" in tags(tree)["want"]
        assert heads(tree)["sleep"] == (5, "APP_op1")

    def test_coordinated_control_verbs_nest_annotations(self):
        inst = mk("cc", {"w": "writer", "a": "and", "v1": "want", "v2": "try",
                         "z": "sleep"},
                  [("a", "v1", "coord_ARG1"), ("a", "v2", "coord_ARG2"),
                   ("v1", "w", "verb_ARG1"), ("v2", "w", "verb_ARG1"),
                   ("v1", "z", "verb_ARG2"), ("v2", "z", "verb_ARG2"),
                   ("z", "w", "verb_ARG1")],
                  "a", ["writers", "wants", "and", "tries", "to", "sleep"],
                  {"w": 1, "v1": 2, "a": 3, "v2": 4, "z": 6})
        tree = decompose(inst, PAS)
        assert "op1[O[S],S]" in tags(tree)["and"].replace(" ", "")

    def test_copula_picks_the_unaccusative_variant(self):
        inst = mk("cop", {"c": "cat", "t": "the", "b": "be", "y": "shy"},
                  [("t", "c", "det_ARG1"), ("b", "y", "verb_ARG2"),
                   ("y", "c", "adj_ARG1")],
                  "b", ["the", "cat", "is", "shy"],
                  {"t": 1, "c": 2, "b": 3, "y": 4})
        tree = decompose(inst, PAS)
        # adj_ARG1 maps to O, yet the subject ends up as S on both verbs
        assert tags(tree)["shy"] == "(y / shy :adj_ARG1 (c<S>))"
        assert tags(tree)["is"] == "(b / be :verb_ARG2 (y<S>))"

    def test_shared_subject_verb_coordination(self):
        inst = mk("vc", {"j": "john", "b": "buy", "s": "sell", "p": "apple"},
                  [("b", "j", "ARG1"), ("s", "j", "ARG1"),
                   ("b", "p", "ARG2"), ("s", "p", "ARG2"),
                   ("b", "s", "_and_c")],
                  "b", ["john", "buys", "and", "sells", "apples"],
                  {"j": 1, "b": 2, "s": 4, "p": 5})
        tree = decompose(inst, DM)
        assert heads(tree)["sells"] == (2, "MOD_coord")
        assert semgraph_isomorphic(evaluate(tree), inst.graph)

    def test_psd_coordination_by_word_order(self):
        inst = mk("pc", {"z": "john", "a": "and", "m": "mary", "l": "laugh"},
                  [("l", "a", "ACT-arg"), ("a", "z", "op.member"),
                   ("a", "m", "op.member")],
                  "l", ["john", "and", "mary", "laugh"],
                  {"z": 1, "a": 2, "m": 3, "l": 4})
        tree = decompose(inst, PSD)
        assert heads(tree)["john"] == (2, "APP_op")
        assert heads(tree)["mary"] == (2, "APP_op2")

    def test_comparative_shares_through_the_marker(self):
        inst = mk("cpr", {"t": "tall", "n": "than", "m": "mary"},
                  [("t", "n", "CPR"), ("t", "m", "PAT-arg"),
                   ("n", "m", "PAT-arg")],
                  "t", ["taller", "than", "mary"], {"t": 1, "n": 2, "m": 3})
        tree = decompose(inst, PSD)
        assert semgraph_isomorphic(evaluate(tree), inst.graph)


class TestFailureModes:
    def test_reason_vocabulary_is_closed(self):
        assert set(REASONS) == {"MultipleRootsNeeded", "UnmatchedReentrancy",
                                "NotATree", "IllTyped", "RoundTripMismatch"}

    def test_sibling_verbs_sharing_an_argument(self):
        inst = mk("sib", {"m": "m", "u": "u", "v": "v", "p": "p"},
                  [("m", "u", "ARG1"), ("m", "v", "ARG2"),
                   ("u", "p", "ARG1"), ("v", "p", "ARG1")],
                  "m", ["m", "u", "v", "p"], {"m": 1, "u": 2, "v": 3, "p": 4})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, DM)
        assert err.value.reason == "UnmatchedReentrancy"
        assert str(err.value).startswith("[sib] ")

    def test_disconnected_graph(self):
        inst = mk("disc", {"a": "a", "b": "b"}, [], "a", ["a", "b"],
                  {"a": 1, "b": 2})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, DM)
        assert err.value.reason == "NotATree"

    def test_unaligned_node(self):
        inst = mk("una", {"a": "a", "b": "b"}, [("a", "b", "ARG1")], "a",
                  ["a"], {"a": 1})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, DM)
        assert err.value.reason == "NotATree"

    def test_empty_graph(self):
        inst = DecompInstance("e", SemGraph(), [Word("a")], {})
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, DM)
        assert err.value.reason == "NotATree"

    def test_coordination_disabled_blocks_shared_arguments(self):
        inst = mk("vp", {"d": "dog", "a": "and", "z": "sleep", "m": "dream"},
                  [("a", "z", "coord_ARG1"), ("a", "m", "coord_ARG2"),
                   ("z", "d", "verb_ARG1"), ("m", "d", "verb_ARG1")],
                  "a", ["dogs", "sleep", "and", "dream"],
                  {"d": 1, "z": 2, "a": 3, "m": 4})
        decompose(inst, PAS)  # fine with the bank's coordination pattern
        cfg = DecomposeConfig(patterns=PatternConfig(coordination="none"))
        with pytest.raises(NonDecomposable) as err:
            decompose(inst, PAS, cfg)
        assert err.value.reason == "UnmatchedReentrancy"


class TestRoundTrip:
    def test_known_shapes_reproduce_their_graph(self):
        for inst in (cat_sleeps(), control(), pas_coordination()):
            table = PAS if inst.sent_id == "s3" else DM
            tree = decompose(inst, table)
            assert evaluate(tree) == inst.graph

    @given(st.integers(0, 10_000))
    @settings(max_examples=150, deadline=None)
    def test_tree_shaped_graphs_always_decompose(self, seed):
        inst = random_tree_instance(random.Random(seed))
        tree = decompose(inst, DM)
        back = evaluate(tree)
        assert back == inst.graph or semgraph_isomorphic(back, inst.graph)

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_restricting_patterns_never_gains_coverage(self, seed):
        inst = random_tree_instance(random.Random(seed))
        tight = DecomposeConfig(patterns=PatternConfig(
            coordination="none", raising_labels=frozenset()))
        try:
            decompose(inst, DM, tight)
        except NonDecomposable:
            return  # only the converse direction must hold
        decompose(inst, DM)

    def test_determinism_is_byte_exact(self):
        insts = [cat_sleeps(), control()]
        first = write_amconll([decompose(i, DM) for i in insts])
        second = write_amconll([decompose(i, DM) for i in insts])
        assert first == second
