"""AM-CoNLL reading and writing.

One token per line with tab-separated columns ID, FORM, LEMMA, POS, NE,
SUPERTAG, LEXLABEL, HEAD, EDGE; ``_`` for an absent supertag or lexical
label; sentences separated by blank lines.  Comment lines ``# id = ...`` and
``# text = ...`` carry the sentence id and raw text.  The writer emits a
canonical form the reader maps back byte-identically.
"""

from __future__ import annotations

from .algebra import AmDepTree, AmToken
from .graphs import GraphSyntaxError, parse_asgraph, serialize_asgraph

__all__ = ["read_amconll", "write_amconll", "AmConllError"]

N_COLUMNS = 9


class AmConllError(ValueError):
    pass


def _finish(rows: list[AmToken], sent_id: str | None, text: str | None,
            sentences: list[AmDepTree]) -> None:
    if rows:
        sentences.append(AmDepTree(tokens=rows, sent_id=sent_id, text=text))


def read_amconll(text: str) -> list[AmDepTree]:
    sentences: list[AmDepTree] = []
    rows: list[AmToken] = []
    sent_id: str | None = None
    raw_text: str | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            _finish(rows, sent_id, raw_text, sentences)
            rows, sent_id, raw_text = [], None, None
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if body.startswith("id ="):
                sent_id = body[4:].strip()
            elif body.startswith("text ="):
                raw_text = body[6:].strip()
            continue
        parts = line.split("\t")
        if len(parts) != N_COLUMNS:
            raise AmConllError(
                f"line {lineno}: expected {N_COLUMNS} columns, got {len(parts)}")
        idx, form, lemma, pos, ne, tag, lexlabel, head, op = parts
        try:
            supertag = None if tag == "_" else parse_asgraph(tag)
        except GraphSyntaxError as err:
            raise AmConllError(f"line {lineno}: bad supertag: {err}") from err
        try:
            rows.append(AmToken(
                index=int(idx), form=form, head=int(head), op=op,
                lemma=lemma, pos=pos, ne=ne, supertag=supertag,
                lexlabel=None if lexlabel == "_" else lexlabel))
        except ValueError as err:
            raise AmConllError(f"line {lineno}: {err}") from err
    _finish(rows, sent_id, raw_text, sentences)
    for tree in sentences:
        try:
            tree.validate()
        except ValueError as err:
            raise AmConllError(f"sentence {tree.sent_id}: {err}") from err
    return sentences


def write_amconll(trees: list[AmDepTree]) -> str:
    blocks = []
    for tree in trees:
        lines = []
        if tree.sent_id is not None:
            lines.append(f"# id = {tree.sent_id}")
        if tree.text is not None:
            lines.append(f"# text = {tree.text}")
        for token in tree.tokens:
            tag = "_" if token.supertag is None else serialize_asgraph(token.supertag)
            lex = token.lexlabel if token.lexlabel is not None else "_"
            lines.append("\t".join((
                str(token.index), token.form, token.lemma, token.pos, token.ne,
                tag, lex, str(token.head), token.op)))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + ("\n" if blocks else "")
