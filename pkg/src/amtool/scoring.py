"""Score models for the parser: a gold oracle and a count-based baseline.

Both implement the same protocol: per-token fragment candidates, dense arc
scores, and per-edge operation-label scores.  The count model is the
dependency-free stand-in for a learned scorer; the protocol is the
extension point.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Protocol

from .algebra import AmDepTree, OP_IGNORE, OP_ROOT
from .decoding import ArcScores, SupertagCandidates, TagCandidate
from .decompose import Word
from .graphs import AsGraph, parse_asgraph, serialize_asgraph

WRONG = -1000.0  # oracle penalty for anything that is not the gold answer

MODEL_HEADER = "amtool-count-model"
MODEL_VERSION = 1


class UnknownSentence(KeyError):
    pass


class EmptyCorpus(ValueError):
    pass


class ModelFormatError(ValueError):
    pass


class ScoreModel(Protocol):
    def supertag_candidates(self, words: list[Word], k: int) -> SupertagCandidates: ...

    def arc_scores(self, words: list[Word]) -> ArcScores: ...

    def op_label_scores(self, words: list[Word], head: int, dep: int) -> dict[str, float]: ...


def sentence_key(words: list[Word]) -> tuple[str, ...]:
    return tuple(w.form for w in words)


def distance_bucket(head: int, dep: int) -> str:
    delta = head - dep
    mag = abs(delta)
    if mag <= 3:
        size = str(mag)
    elif mag <= 6:
        size = "4-6"
    else:
        size = "7+"
    return ("+" if delta > 0 else "-") + size


def _tag_text(fragment: AsGraph | None) -> str:
    return serialize_asgraph(fragment) if fragment is not None else "-"


def _tag_value(text: str) -> AsGraph | None:
    return None if text == "-" else parse_asgraph(text)


# -- oracle --------------------------------------------------------------------


class OracleModel:
    """Scores the gold analysis at 0 and everything else far below it.

    Driving the parser with this model reproduces the gold tree exactly on
    any sentence of the corpus it was built from.
    """

    def __init__(self, corpus: list[AmDepTree]):
        self.gold: dict[tuple[str, ...], AmDepTree] = {}
        ops: set[str] = {OP_ROOT, OP_IGNORE}
        for tree in corpus:
            key = tuple(t.form for t in tree.tokens)
            self.gold[key] = tree
            ops.update(t.op for t in tree.tokens)
        self.op_vocab = sorted(ops)

    def _tree(self, words: list[Word]) -> AmDepTree:
        key = sentence_key(words)
        if key not in self.gold:
            raise UnknownSentence(" ".join(key))
        return self.gold[key]

    def supertag_candidates(self, words: list[Word], k: int) -> SupertagCandidates:
        tree = self._tree(words)
        lists = {}
        for token in tree.tokens:
            gold = TagCandidate(token.supertag, token.lexlabel, 0.0)
            extra = TagCandidate(None if token.supertag is not None else
                                 parse_asgraph("(x0 / wrong)"),
                                 None, WRONG)
            lists[token.index] = [gold, extra][:max(k, 0)] if k > 0 else []
        return SupertagCandidates(lists)

    def arc_scores(self, words: list[Word]) -> ArcScores:
        tree = self._tree(words)
        n = len(tree.tokens)
        rows = [[WRONG] * (n + 1) for _ in range(n + 1)]
        for token in tree.tokens:
            rows[token.head][token.index] = 0.0
        return ArcScores(n, rows)

    def op_label_scores(self, words: list[Word], head: int, dep: int) -> dict[str, float]:
        tree = self._tree(words)
        scored = {op: WRONG for op in self.op_vocab}
        token = tree.token(dep)
        if token.head == head:
            scored[token.op] = 0.0
        return scored


def oracle_model(corpus: list[AmDepTree]) -> OracleModel:
    return OracleModel(corpus)


# -- count model ----------------------------------------------------------------


@dataclass
class CountModel:
    """Add-alpha smoothed frequency tables over a decomposed corpus.

    Supertags condition on (lemma, pos) and back off to pos, then to the
    corpus; operation labels and arc attachment condition on head pos, dep
    pos and the signed distance bucket.
    """

    alpha: float = 0.1
    # (lemma, pos) -> Counter[(tag text, lexlabel)]
    tag_by_lemma: dict = field(default_factory=dict)
    tag_by_pos: dict = field(default_factory=dict)
    tag_global: Counter = field(default_factory=Counter)
    # (head pos, dep pos, bucket) -> Counter[op]
    op_full: dict = field(default_factory=dict)
    op_bucket: dict = field(default_factory=dict)
    op_global: Counter = field(default_factory=Counter)
    # (head pos, dep pos, bucket) -> [attached count, detached count]
    arc_table: dict = field(default_factory=dict)
    _fragments: dict = field(default_factory=dict, repr=False)

    # - queries -

    def _fragment(self, text: str) -> AsGraph | None:
        if text not in self._fragments:
            self._fragments[text] = _tag_value(text)
        return self._fragments[text]

    def tag_probs(self, lemma: str, pos: str) -> dict[tuple[str, str | None], float]:
        counts = self.tag_by_lemma.get((lemma, pos))
        if counts is None:
            counts = self.tag_by_pos.get(pos)
        if counts is None:
            counts = self.tag_global
        # the blank option is always scorable, trained on it or not
        vocab = sorted(set(self.tag_global) | {("-", None)},
                       key=lambda opt: (opt[0], opt[1] or ""))
        total = sum(counts.values()) + self.alpha * len(vocab)
        return {option: (counts.get(option, 0) + self.alpha) / total
                for option in vocab}

    def op_probs(self, head_pos: str, dep_pos: str, bucket: str) -> dict[str, float]:
        counts = self.op_full.get((head_pos, dep_pos, bucket))
        if counts is None:
            counts = self.op_bucket.get(bucket)
        if counts is None:
            counts = self.op_global
        vocab = sorted(self.op_global)
        total = sum(counts.values()) + self.alpha * len(vocab)
        return {op: (counts.get(op, 0) + self.alpha) / total for op in vocab}

    def arc_prob(self, head_pos: str, dep_pos: str, bucket: str) -> float:
        attached, detached = self.arc_table.get((head_pos, dep_pos, bucket), (0, 0))
        return (attached + self.alpha) / (attached + detached + 2 * self.alpha)

    # - protocol -

    def supertag_candidates(self, words: list[Word], k: int) -> SupertagCandidates:
        lists = {}
        for index, word in enumerate(words, start=1):
            probs = self.tag_probs(word.lemma, word.pos)
            order = lambda item: (-item[1], item[0][0], item[0][1] or "")
            ranked = sorted(probs.items(), key=order)
            top = ranked[:max(k, 0)]
            if k > 0 and all(text != "-" for (text, _), _ in top):
                top = top[:k - 1] + [(("-", None), probs[("-", None)])]
                top.sort(key=order)
            lists[index] = [TagCandidate(self._fragment(text), lex,
                                         math.log(p))
                            for (text, lex), p in top]
        return SupertagCandidates(lists)

    def _pos(self, words: list[Word], index: int) -> str:
        return "_ROOT_" if index == 0 else words[index - 1].pos

    def arc_scores(self, words: list[Word]) -> ArcScores:
        n = len(words)
        rows = [[0.0] * (n + 1) for _ in range(n + 1)]
        for head in range(n + 1):
            for dep in range(1, n + 1):
                if head == dep:
                    continue
                p = self.arc_prob(self._pos(words, head),
                                  self._pos(words, dep),
                                  distance_bucket(head, dep))
                rows[head][dep] = math.log(p)
        return ArcScores(n, rows)

    def op_label_scores(self, words: list[Word], head: int, dep: int) -> dict[str, float]:
        probs = self.op_probs(self._pos(words, head), self._pos(words, dep),
                              distance_bucket(head, dep))
        return {op: math.log(p) for op, p in probs.items()}

    # - serialization -

    def save_text(self) -> str:
        lines = [f"{MODEL_HEADER} {MODEL_VERSION}",
                 json.dumps({"alpha": self.alpha})]
        for (lemma, pos), counts in sorted(self.tag_by_lemma.items()):
            for (tag, lex), c in sorted(counts.items(),
                                        key=lambda kv: (kv[0][0], kv[0][1] or "")):
                lines.append(json.dumps(
                    ["tag-lemma", lemma, pos, tag, lex, c]))
        for pos, counts in sorted(self.tag_by_pos.items()):
            for (tag, lex), c in sorted(counts.items(),
                                        key=lambda kv: (kv[0][0], kv[0][1] or "")):
                lines.append(json.dumps(["tag-pos", pos, tag, lex, c]))
        for (tag, lex), c in sorted(self.tag_global.items(),
                                    key=lambda kv: (kv[0][0], kv[0][1] or "")):
            lines.append(json.dumps(["tag", tag, lex, c]))
        for (hp, dp, bucket), counts in sorted(self.op_full.items()):
            for op, c in sorted(counts.items()):
                lines.append(json.dumps(["op-full", hp, dp, bucket, op, c]))
        for bucket, counts in sorted(self.op_bucket.items()):
            for op, c in sorted(counts.items()):
                lines.append(json.dumps(["op-bucket", bucket, op, c]))
        for op, c in sorted(self.op_global.items()):
            lines.append(json.dumps(["op", op, c]))
        for (hp, dp, bucket), (att, det) in sorted(self.arc_table.items()):
            lines.append(json.dumps(["arc", hp, dp, bucket, att, det]))
        return "\n".join(lines) + "\n"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(self.save_text())

    @staticmethod
    def load_text(text: str) -> "CountModel":
        lines = text.splitlines()
        if not lines:
            raise ModelFormatError("empty model file")
        head = lines[0].split()
        if len(head) != 2 or head[0] != MODEL_HEADER:
            raise ModelFormatError(f"bad header: {lines[0]!r}")
        if int(head[1]) != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {head[1]}")
        meta = json.loads(lines[1])
        model = CountModel(alpha=float(meta["alpha"]))
        for line in lines[2:]:
            if not line.strip():
                continue
            row = json.loads(line)
            kind = row[0]
            if kind == "tag-lemma":
                _, lemma, pos, tag, lex, c = row
                model.tag_by_lemma.setdefault((lemma, pos), Counter())[
                    (tag, lex)] = c
            elif kind == "tag-pos":
                _, pos, tag, lex, c = row
                model.tag_by_pos.setdefault(pos, Counter())[(tag, lex)] = c
            elif kind == "tag":
                _, tag, lex, c = row
                model.tag_global[(tag, lex)] = c
            elif kind == "op-full":
                _, hp, dp, bucket, op, c = row
                model.op_full.setdefault((hp, dp, bucket), Counter())[op] = c
            elif kind == "op-bucket":
                _, bucket, op, c = row
                model.op_bucket.setdefault(bucket, Counter())[op] = c
            elif kind == "op":
                _, op, c = row
                model.op_global[op] = c
            elif kind == "arc":
                _, hp, dp, bucket, att, det = row
                model.arc_table[(hp, dp, bucket)] = (att, det)
            else:
                raise ModelFormatError(f"unknown row kind {kind!r}")
        return model

    @staticmethod
    def load(path: str) -> "CountModel":
        with open(path, encoding="utf-8") as handle:
            return CountModel.load_text(handle.read())


def train_count_model(corpus: list[AmDepTree], alpha: float = 0.1) -> CountModel:
    if not corpus:
        raise EmptyCorpus("cannot train on an empty corpus")
    model = CountModel(alpha=alpha)
    for tree in corpus:
        n = len(tree.tokens)
        heads = {t.index: t.head for t in tree.tokens}
        for token in tree.tokens:
            option = (_tag_text(token.supertag), token.lexlabel)
            model.tag_by_lemma.setdefault((token.lemma, token.pos),
                                          Counter())[option] += 1
            model.tag_by_pos.setdefault(token.pos, Counter())[option] += 1
            model.tag_global[option] += 1
            hp = "_ROOT_" if token.head == 0 else tree.token(token.head).pos
            bucket = distance_bucket(token.head, token.index)
            model.op_full.setdefault((hp, token.pos, bucket),
                                     Counter())[token.op] += 1
            model.op_bucket.setdefault(bucket, Counter())[token.op] += 1
            model.op_global[token.op] += 1
        for dep in range(1, n + 1):
            dp = tree.token(dep).pos
            for head in range(n + 1):
                if head == dep:
                    continue
                hp = "_ROOT_" if head == 0 else tree.token(head).pos
                key = (hp, dp, distance_bucket(head, dep))
                att, det = model.arc_table.get(key, (0, 0))
                if heads[dep] == head:
                    model.arc_table[key] = (att + 1, det)
                else:
                    model.arc_table[key] = (att, det + 1)
    return model


# -- random baseline -------------------------------------------------------------


class RandomModel:
    """Uniform-random scores over a trained model's inventories.

    Deterministic per (seed, sentence); the reference point experiments
    compare real models against.
    """

    def __init__(self, base: CountModel, seed: int = 0):
        self.base = base
        self.seed = seed
        self.tag_vocab = sorted(base.tag_global)
        self.op_vocab = sorted(base.op_global)

    def _rng(self, words: list[Word], *extra: int) -> random.Random:
        parts = [str(self.seed), *sentence_key(words),
                 *[str(x) for x in extra]]
        digest = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
        return random.Random(int.from_bytes(digest[:8], "big"))

    def supertag_candidates(self, words: list[Word], k: int) -> SupertagCandidates:
        rng = self._rng(words, 1)
        lists = {}
        for index in range(1, len(words) + 1):
            chosen = [self.tag_vocab[rng.randrange(len(self.tag_vocab))]
                      for _ in range(min(max(k, 0), len(self.tag_vocab)))]
            if k > 0 and all(text != "-" for text, _ in chosen):
                chosen[-1] = ("-", None)
            cands = [TagCandidate(self.base._fragment(text), lex,
                                  rng.uniform(-5, 0))
                     for text, lex in chosen]
            cands.sort(key=lambda c: -c.score)
            lists[index] = cands
        return SupertagCandidates(lists)

    def arc_scores(self, words: list[Word]) -> ArcScores:
        rng = self._rng(words, 2)
        n = len(words)
        rows = [[rng.uniform(-5, 0) for _ in range(n + 1)]
                for _ in range(n + 1)]
        return ArcScores(n, rows)

    def op_label_scores(self, words: list[Word], head: int, dep: int) -> dict[str, float]:
        rng = self._rng(words, head, dep)
        return {op: rng.uniform(-5, 0) for op in self.op_vocab}
