"""Turning node labels into word-independent patterns and back.

A pattern is the label with one substring replaced by a placeholder:
``$LEMMA$``, ``$FORM$``, or ``$MODLEMMA$`` (a rule-modified lemma, e.g.
Tuesday -> Tue).  ``$LEX$`` is not produced here; it is the stand-in label
for the lexical node inside delexicalized graph fragments.
"""

from __future__ import annotations

from typing import Callable

PLACE_LEMMA = "$LEMMA$"
PLACE_FORM = "$FORM$"
PLACE_MODLEMMA = "$MODLEMMA$"
LEX_MARK = "$LEX$"

_WEEKDAYS = {"monday", "tuesday", "wednesday", "thursday", "friday",
             "saturday", "sunday"}


def _weekday_rule(lemma: str, pos: str | None) -> str | None:
    if lemma.lower() in _WEEKDAYS:
        return lemma.capitalize()[:3]
    return None


def _adverb_rule(lemma: str, pos: str | None) -> str | None:
    # re-inflect adverbs to the adjective the label is usually built on
    if pos is None or not (pos.startswith("RB") or pos == "ADV"):
        return None
    low = lemma.lower()
    if low.endswith("ily") and len(low) > 4:
        return lemma[:-3] + "y"
    if low.endswith("ly") and len(low) > 4:
        return lemma[:-2]
    return None


#: Default modified-lemma rules, first non-None answer wins.
MODIFIED_LEMMA_RULES: tuple[Callable[[str, str | None], str | None], ...] = (
    _weekday_rule,
    _adverb_rule,
)


def modified_lemma(lemma: str, pos: str | None = None,
                   rules=MODIFIED_LEMMA_RULES) -> str | None:
    for rule in rules:
        answer = rule(lemma, pos)
        if answer is not None and answer != lemma:
            return answer
    return None


def _candidates(form: str, lemma: str, modified: str | None):
    # priority on equal match length: lemma, then form, then modified lemma
    yield 0, lemma, PLACE_LEMMA
    yield 1, form, PLACE_FORM
    if modified:
        yield 2, modified, PLACE_MODLEMMA


def delexicalize(label: str, form: str, lemma: str,
                 modified: str | None = None) -> str:
    """Replace the longest matching word substring of the label (leftmost
    occurrence) with its placeholder.  Matches shorter than 3 characters
    count only when they cover the whole label; no match leaves the label
    literal."""
    best = None
    for priority, value, placeholder in _candidates(form, lemma, modified):
        if not value or value not in label:
            continue
        if len(value) < 3 and value != label:
            continue
        key = (-len(value), priority)
        if best is None or key < best[0]:
            best = (key, value, placeholder)
    if best is None:
        return label
    _, value, placeholder = best
    return label.replace(value, placeholder, 1)


def relexicalize(pattern: str, form: str, lemma: str, *,
                 modified: str | None = None) -> str:
    """Expand placeholders; the inverse of delexicalize for derivable labels.

    ``modified`` defaults to the lemma when a $MODLEMMA$ pattern arrives
    without one.
    """
    out = pattern.replace(PLACE_LEMMA, lemma).replace(PLACE_FORM, form)
    if PLACE_MODLEMMA in out:
        out = out.replace(PLACE_MODLEMMA, modified if modified else lemma)
    return out


def _clean(label: str) -> str:
    return label.lstrip("_").lower()


def similar(label: str, form: str, lemma: str,
            modified: str | None = None, min_prefix: int = 3) -> bool:
    """Case-insensitive prefix likeness between a node label and a word.

    True when the cleaned label and any of form/lemma/modified lemma share a
    prefix of at least ``min_prefix`` characters (short words must match the
    cleaned label's own word part entirely)."""
    cleaned = _clean(label)
    for word in (lemma, form, modified or ""):
        if not word:
            continue
        low = word.lower()
        k = min(len(low), len(cleaned))
        shared = 0
        while shared < k and low[shared] == cleaned[shared]:
            shared += 1
        if shared >= min_prefix:
            return True
        if shared == len(low) and cleaned[shared:shared + 1] in ("", "_"):
            return True
    return False
