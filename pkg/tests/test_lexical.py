"""Tests for label patterns and the modified-lemma rules."""

import random
import string

from amtool.lexical import (
    delexicalize,
    modified_lemma,
    relexicalize,
    similar,
)


class TestDelexicalize:
    def test_lemma_with_suffix(self):
        assert delexicalize("want-01", "wanted", "want") == "$LEMMA$-01"

    def test_whole_label(self):
        assert delexicalize("cat", "cat", "cat") == "$LEMMA$"

    def test_form_wins_when_longer(self):
        assert delexicalize("_wanted_v_1", "wanted", "want") == "_$FORM$_v_1"

    def test_lemma_priority_on_tie(self):
        assert delexicalize("walk", "walk", "walk") == "$LEMMA$"

    def test_short_match_only_whole_label(self):
        # "go" has two characters: no substring replacement inside a label
        assert delexicalize("go-02", "goes", "go") == "go-02"
        assert delexicalize("go", "goes", "go") == "$LEMMA$"

    def test_no_match_stays_literal(self):
        assert delexicalize("udef_q", "cats", "cat") == "udef_q"
        assert delexicalize("nominalization", "ran", "run") == "nominalization"

    def test_modified_lemma_placeholder(self):
        assert delexicalize("_Tue_n_1", "Tuesday", "Tuesday",
                            modified="Tue") == "_$MODLEMMA$_n_1"

    def test_leftmost_single_replacement(self):
        assert delexicalize("dog-and-dog", "dog", "dog") == "$LEMMA$-and-dog"


class TestRelexicalize:
    def test_inverts_examples(self):
        assert relexicalize("$LEMMA$-01", "wanted", "want") == "want-01"
        assert relexicalize("_$FORM$_v_1", "wanted", "want") == "_wanted_v_1"
        assert relexicalize("_$MODLEMMA$_n_1", "Tuesday", "Tuesday",
                            modified="Tue") == "_Tue_n_1"

    def test_modified_falls_back_to_lemma(self):
        assert relexicalize("$MODLEMMA$-x", "cats", "cat") == "cat-x"

    def test_round_trip_random(self):
        rng = random.Random(11)
        alphabet = string.ascii_lowercase
        for _ in range(1000):
            lemma = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8)))
            form = lemma + rng.choice(["", "s", "ed", "ing"])
            affix = rng.choice(["", "-01", "_v_1", "-91", "_q"])
            prefix = rng.choice(["", "_"])
            label = prefix + rng.choice([lemma, form]) + affix
            modified = modified_lemma(lemma, "RB")
            pattern = delexicalize(label, form, lemma, modified)
            assert relexicalize(pattern, form, lemma, modified=modified) == label


class TestModifiedLemma:
    def test_weekday(self):
        assert modified_lemma("Tuesday") == "Tue"
        assert modified_lemma("monday") == "Mon"

    def test_adverb_needs_pos(self):
        assert modified_lemma("quickly", "RB") == "quick"
        assert modified_lemma("quickly", "NN") is None

    def test_ily(self):
        assert modified_lemma("happily", "RB") == "happy"

    def test_no_rule(self):
        assert modified_lemma("cat", "NN") is None

    def test_short_adverb_untouched(self):
        assert modified_lemma("only", "RB") is None


class TestSimilar:
    def test_eds_label(self):
        assert similar("_wanted_v_1", "wanted", "want")
        assert similar("_want_v_1", "wants", "want")
        assert not similar("_the_q", "cat", "cat")

    def test_case_insensitive(self):
        assert similar("_Tuesday_n_1", "TUESDAY", "Tuesday")

    def test_short_word_whole_part(self):
        assert similar("_go_v_1", "goes", "go")
        assert not similar("_gone_v_1", "it", "it")
