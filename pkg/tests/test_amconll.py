import random

import pytest

from amtool.algebra import AmDepTree, AmToken
from amtool.amconll import AmConllError, read_amconll, write_amconll
from amtool.graphs import parse_asgraph, serialize_asgraph

from genutil import random_asgraph

FIXTURE = """\
# id = s1
# text = the writer wants to sleep
1\tthe\tthe\tDT\tO\t_\t_\t2\tIGNORE
2\twriter\twriter\tNN\tO\t(w / writer)\twriter\t3\tAPP_S
3\twants\twant\tVBZ\tO\t(u / want-01 :ARG0 (s<S>) :ARG1 (o<O[S]>))\twant-01\t0\tROOT
4\tto\tto\tTO\tO\t_\t_\t3\tIGNORE
5\tsleep\tsleep\tVB\tO\t(e / sleep-01 :ARG0 (s<S>))\tsleep-01\t3\tAPP_O

# id = s2
1\tok\tok\tUH\tO\t(n / ok)\tok\t0\tROOT
"""


def test_read_fixture():
    trees = read_amconll(FIXTURE)
    assert len(trees) == 2
    first = trees[0]
    assert first.sent_id == "s1"
    assert first.text == "the writer wants to sleep"
    assert [t.form for t in first.tokens] == ["the", "writer", "wants", "to", "sleep"]
    assert first.token(1).supertag is None
    assert first.token(1).lexlabel is None
    assert first.token(3).head == 0
    assert first.token(3).op == "ROOT"
    assert str(first.token(3).supertag.rtype) == "[O[S],S]"
    assert first.token(5).lexlabel == "sleep-01"
    second = trees[1]
    assert second.sent_id == "s2"
    assert second.text is None


def test_write_read_fixture_bytes():
    trees = read_amconll(FIXTURE)
    assert write_amconll(trees) == FIXTURE


def test_write_empty():
    assert write_amconll([]) == ""


def test_column_count_error():
    with pytest.raises(AmConllError, match="columns"):
        read_amconll("1\ta\ta\tX\tO\t_\t_\t0\n")


def test_bad_supertag_error():
    bad = FIXTURE.replace("(n / ok)", "(n / ok")
    with pytest.raises(AmConllError, match="supertag"):
        read_amconll(bad)


def test_ignore_with_supertag_rejected():
    bad = FIXTURE.replace("_\t_\t2\tIGNORE", "(x / thing)\t_\t2\tIGNORE", 1)
    with pytest.raises(AmConllError, match="IGNORE"):
        read_amconll(bad)


def test_two_roots_rejected():
    bad = FIXTURE.replace("writer\t3\tAPP_S", "writer\t0\tROOT")
    with pytest.raises(AmConllError, match="ROOT"):
        read_amconll(bad)


def _random_tree(rng: random.Random, n: int, sent_id: str) -> AmDepTree:
    ops = ["APP_S", "APP_O", "MOD_M", "MOD_D", "APP_O2"]
    tokens = []
    tagged = []  # indices that carry a fragment and may head children
    for i in range(1, n + 1):
        if i == 1:
            head, op = 0, "ROOT"
        elif tagged and rng.random() < 0.75:
            head, op = rng.choice(tagged), rng.choice(ops)
        else:
            head, op = rng.choice([0] + tagged), "IGNORE"
        supertag = None
        lexlabel = None
        if op != "IGNORE":
            supertag = random_asgraph(rng, max_nodes=4)
            tagged.append(i)
            if rng.random() < 0.5:
                lexlabel = f"lex{i}"
        tokens.append(AmToken(
            index=i, form=f"w{i}", head=head, op=op,
            lemma=f"l{i}", pos="NN", ne="O",
            supertag=supertag, lexlabel=lexlabel))
    return AmDepTree(tokens, sent_id=sent_id, text=" ".join(t.form for t in tokens))


def test_random_trees_round_trip():
    rng = random.Random(7)
    trees = [_random_tree(rng, rng.randint(1, 9), f"r{k}") for k in range(60)]
    text = write_amconll(trees)
    back = read_amconll(text)
    assert write_amconll(back) == text
    assert len(back) == len(trees)
    for a, b in zip(trees, back):
        assert a.sent_id == b.sent_id
        assert len(a.tokens) == len(b.tokens)
        for ta, tb in zip(a.tokens, b.tokens):
            assert (ta.index, ta.form, ta.lemma, ta.pos, ta.ne, ta.head,
                    ta.op, ta.lexlabel) == (tb.index, tb.form, tb.lemma,
                                            tb.pos, tb.ne, tb.head, tb.op,
                                            tb.lexlabel)
            if ta.supertag is None:
                assert tb.supertag is None
            else:
                assert serialize_asgraph(ta.supertag) == serialize_asgraph(tb.supertag)


def test_supertag_survives_reserialization():
    tag = parse_asgraph("(g / give-01 :ARG0 (s<S>) :ARG2 (o<O3>))")
    tree = AmDepTree([AmToken(index=1, form="gave", head=0, op="ROOT",
                              supertag=tag, lexlabel="give-01")])
    text = write_amconll([tree])
    again = read_amconll(text)[0].token(1).supertag
    assert serialize_asgraph(again) == serialize_asgraph(tag)
