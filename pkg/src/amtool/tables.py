"""Edge-attachment heuristic tables, one per graphbank.

A table is an ordered list of rules; each rule maps an edge-label pattern to
the node the edge belongs to (origin or target), the source name given to the
placeholder at the edge's open end, and a nominal operation kind.  Patterns
support ``*`` (any substring) and ``$i`` (an integer, captured into the source
template, e.g. ``coord_ARG$i`` -> ``op$i``).  First match wins; every table
ends in a catch-all.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources

__all__ = [
    "SOURCE_POOL",
    "HeuristicRule",
    "PatternConfig",
    "HeuristicTable",
    "MatchedRule",
    "UnmatchedLabel",
    "TableError",
    "parse_table",
    "load_table",
    "builtin_table",
    "randomize_table",
    "BANKS",
]

#: Source names the heuristics may hand out.
SOURCE_POOL = ("S", "O", "O2", "O3", "OO", "M", "D", "comp", "poss",
               "coord", "pnct", "op", "op1", "op2")

#: Sources that plug arguments by default; everything else modifies.
_APP_SOURCES = {"S", "O", "O2", "O3", "OO", "op"}

BANKS = ("DM", "PAS", "PSD", "EDS")


class TableError(ValueError):
    """Malformed table text or missing catch-all."""


class UnmatchedLabel(KeyError):
    """No rule matched an edge label."""


def default_kind(source: str) -> str:
    base = source.rstrip("0123456789")
    return "APP" if base in _APP_SOURCES else "MOD"


@dataclass(frozen=True)
class HeuristicRule:
    pattern: str
    to_origin: bool
    source: str
    kind: str

    def __post_init__(self):
        if self.kind not in ("APP", "MOD"):
            raise TableError(f"rule kind must be APP or MOD, got {self.kind!r}")
        object.__setattr__(self, "_regex", _compile_pattern(self.pattern))

    def match(self, label: str) -> str | None:
        """Resolved source name if the label matches, else None."""
        found = self._regex.fullmatch(label)
        if not found:
            return None
        if found.groups():
            return self.source.replace("$i", found.group(1))
        return self.source

    def render(self) -> str:
        side = "origin" if self.to_origin else "target"
        return f"{self.pattern}\t{side}\t{self.source}\t{self.kind.lower()}"


def _compile_pattern(pattern: str) -> re.Pattern:
    parts = []
    i = 0
    captures = 0
    while i < len(pattern):
        ch = pattern[i]
        if ch == "*":
            parts.append(".*")
        elif pattern.startswith("$i", i):
            captures += 1
            parts.append(r"(\d+)")
            i += 1
        else:
            parts.append(re.escape(ch))
        i += 1
    if captures > 1:
        raise TableError(f"at most one $i capture per pattern: {pattern!r}")
    return re.compile("".join(parts))


@dataclass(frozen=True)
class PatternConfig:
    """Which reentrancy patterns a graphbank admits.

    coordination: "none" | "edge-label" | "common-argument".
    raising_labels: edge labels allowed on the shared-argument leg of the
    triangle pattern; None admits any label.  comparative_label names the
    PSD CPR variant of the triangle (no source condition on the shared leg).
    """

    coordination: str = "none"
    raising_labels: frozenset | None = frozenset()
    comparative_label: str | None = None

    def __post_init__(self):
        if self.coordination not in ("none", "edge-label", "common-argument"):
            raise TableError(f"unknown coordination mode {self.coordination!r}")


@dataclass(frozen=True)
class MatchedRule:
    rule: HeuristicRule
    source: str

    @property
    def to_origin(self) -> bool:
        return self.rule.to_origin

    @property
    def kind(self) -> str:
        return self.rule.kind


_BANK_FLAGS = {
    "DM": dict(
        target_override_labels=frozenset(),
        word_order_sources=False,
        patterns=PatternConfig(coordination="none",
                               raising_labels=frozenset({"ARG1", "ARG2"})),
    ),
    "PAS": dict(
        target_override_labels=frozenset(),
        word_order_sources=False,
        # long-distance passing rides on the coordination pattern in this
        # bank, so no edge label licenses a raising step on its own
        patterns=PatternConfig(coordination="edge-label",
                               raising_labels=frozenset()),
    ),
    "PSD": dict(
        target_override_labels=frozenset(),
        word_order_sources=True,
        patterns=PatternConfig(coordination="common-argument",
                               raising_labels=frozenset({"PAT-arg"}),
                               comparative_label="CPR"),
    ),
    "EDS": dict(
        target_override_labels=frozenset({"udef_q", "nominalization"}),
        word_order_sources=False,
        patterns=PatternConfig(coordination="common-argument",
                               raising_labels=None),
    ),
}


@dataclass(frozen=True)
class HeuristicTable:
    bank: str
    rules: tuple[HeuristicRule, ...]
    target_override_labels: frozenset = frozenset()
    word_order_sources: bool = False
    patterns: PatternConfig = field(default_factory=PatternConfig)

    def __post_init__(self):
        if not any(r.pattern == "*" for r in self.rules):
            raise TableError("table has no catch-all rule")

    def match(self, label: str) -> MatchedRule:
        for rule in self.rules:
            source = rule.match(label)
            if source is not None:
                return MatchedRule(rule, source)
        raise UnmatchedLabel(label)

    def render(self) -> str:
        return "".join(rule.render() + "\n" for rule in self.rules)


def parse_table(text: str, bank: str = "DM", **flags) -> HeuristicTable:
    """Parse rule lines ``PATTERN  origin|target  SOURCE  app|mod``.

    Blank lines and ``#`` comments are skipped.  Per-bank flags default from
    the bank id and may be overridden by keyword.
    """
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 3:
            parts.append(default_kind(parts[2]).lower())
        if len(parts) != 4:
            raise TableError(f"line {lineno}: expected 3 or 4 columns: {raw!r}")
        pattern, side, source, kind = parts
        if side not in ("origin", "target"):
            raise TableError(f"line {lineno}: side must be origin|target")
        rules.append(HeuristicRule(pattern, side == "origin", source, kind.upper()))
    if bank not in _BANK_FLAGS:
        raise TableError(f"unknown graphbank {bank!r}")
    merged = dict(_BANK_FLAGS[bank])
    merged.update(flags)
    return HeuristicTable(bank=bank, rules=tuple(rules), **merged)


def load_table(path: str, bank: str = "DM", **flags) -> HeuristicTable:
    with open(path, encoding="utf-8") as handle:
        return parse_table(handle.read(), bank, **flags)


def builtin_table(bank: str) -> HeuristicTable:
    bank = bank.upper()
    if bank not in _BANK_FLAGS:
        raise TableError(f"unknown graphbank {bank!r}")
    text = resources.files("amtool.data").joinpath(f"{bank.lower()}.tsv").read_text("utf-8")
    return parse_table(text, bank)


def randomize_table(labels: set[str], seed: int, bank: str = "DM") -> HeuristicTable:
    """A table that fixes a uniformly random side and source per label.

    The mapping is deterministic under the seed and consistent for a whole
    corpus; a catch-all keeps unseen labels total.  Used for the ablation
    that measures how much the curated tables matter.
    """
    rng = random.Random(seed)
    rules = []
    for label in sorted(labels):
        side = rng.random() < 0.5
        source = rng.choice(SOURCE_POOL)
        rules.append(HeuristicRule(label, side, source, default_kind(source)))
    rules.append(HeuristicRule("*", True, "M", "MOD"))
    merged = dict(_BANK_FLAGS[bank])
    return HeuristicTable(bank=bank, rules=tuple(rules), **merged)
