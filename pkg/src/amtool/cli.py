"""Command-line entry point tying the toolkit together.

Subcommands: decompose (graphs to AM-CoNLL), train (fit the count model),
parse (sentences to graphs), score (metric lines), stats (decomposability
report), roundtrip (verify evaluate-after-decompose reproduces the input).
Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .algebra import AmDepTree, IllTyped, OperationError, evaluate
from .amconll import read_amconll, write_amconll
from .decoding import (ParseConfig, evaluate_with_attribution, parse_tree,
                       relabel_lexical)
from .decompose import (DecompInstance, DecomposeConfig, NonDecomposable,
                        Word, decompose, delexicalize_tree)
from .eds import (EdsInstance, EdsNode, Token, assign_eds_spans,
                  delete_handles, eds_to_graph, graph_to_eds, read_eds,
                  restore_spans, tokenize, write_eds)
from .graphs import SemGraph, semgraph_isomorphic
from .metrics import (IdMismatch, PRF, decomposability_stats, edm_corpus,
                      sdp_f, smatch)
from .scoring import (CountModel, RandomModel, UnknownSentence, oracle_model,
                      train_count_model)
from .sdp import (ART_FORM, PreprocessRecord, SdpInstance, graph_to_sdp,
                  preprocess_sdp, read_sdp, rewrite_psd_coordination,
                  sdp_to_graph, write_sdp)
from .tables import HeuristicTable, builtin_table, load_table, randomize_table

SDP_BANKS = ("dm", "pas", "psd")
BANKS = SDP_BANKS + ("eds",)

log = logging.getLogger("amtool")


@dataclass
class Loaded:
    """One aligned instance plus everything write-back needs."""

    instance: DecompInstance
    sdp: SdpInstance | None = None
    record: PreprocessRecord | None = None
    eds: EdsInstance | None = None
    tokens: list[Token] = field(default_factory=list)


def load_sdp_corpus(text: str, bank: str, psd_rewrite: bool = True) -> list[Loaded]:
    out = []
    for inst in read_sdp(text):
        graph, align = sdp_to_graph(inst)
        if bank == "psd" and psd_rewrite:
            graph, _ = rewrite_psd_coordination(graph)
        graph, record = preprocess_sdp(graph, len(inst.tokens))
        words = [Word(t.form, lemma=t.lemma, pos=t.pos) for t in inst.tokens]
        align = {n: i for n, i in align.items() if n in graph.nodes}
        if record.artificial_node is not None:
            words.append(Word(ART_FORM, lemma=ART_FORM, pos="ART"))
            align[record.artificial_node] = record.artificial_token_index
        out.append(Loaded(DecompInstance(inst.sent_id, graph, words, align),
                          sdp=inst, record=record))
    return out


def load_eds_corpus(text: str, drop_hndl: bool = False) -> list[Loaded]:
    out = []
    for inst in read_eds(text):
        tokens = tokenize(inst.text)
        align = assign_eds_spans(inst, tokens)
        graph = eds_to_graph(inst, align, tokens)
        if drop_hndl:
            graph = delete_handles(graph)
        words = [Word(t.form, lemma=t.form.lower()) for t in tokens]
        out.append(Loaded(DecompInstance(inst.sent_id, graph, words, align),
                          eds=inst, tokens=tokens))
    return out


def load_corpus(text: str, bank: str, *, psd_rewrite: bool = True,
                drop_hndl: bool = False) -> list[Loaded]:
    if bank not in BANKS:
        raise ValueError(f"unknown graphbank {bank!r}")
    if bank == "eds":
        return load_eds_corpus(text, drop_hndl=drop_hndl)
    return load_sdp_corpus(text, bank, psd_rewrite=psd_rewrite)


def decompose_corpus(loaded: list[Loaded], table: HeuristicTable,
                     config: DecomposeConfig | None = None,
                     delex: bool = True):
    """All decomposable instances as (delexicalized) trees plus failures."""
    trees: list[AmDepTree] = []
    failures: list[tuple[str, str, str]] = []
    for ld in loaded:
        try:
            tree = decompose(ld.instance, table, config)
        except NonDecomposable as exc:
            failures.append((ld.instance.sent_id, exc.reason, exc.message))
            continue
        trees.append(delexicalize_tree(tree) if delex else tree)
    return trees, failures


# -- parse write-back ---------------------------------------------------------------


def _strip_artificial(graph: SemGraph, attr: dict[str, int],
                      art_index: int) -> tuple[SemGraph, dict[str, int]]:
    """Remove a predicted artificial root; its dependents become the tops."""
    art_nodes = [n for n, t in attr.items() if t == art_index]
    if not art_nodes:
        return graph, attr
    art = art_nodes[0]
    tops = sorted((t for o, t, _ in graph.edges if o == art),
                  key=lambda n: attr.get(n, 0))
    nodes = {n: l for n, l in graph.nodes.items() if n != art}
    edges = {(o, t, r) for o, t, r in graph.edges if art not in (o, t)}
    roots = tuple(tops) if tops else tuple(sorted(nodes)[:1])
    attr = {n: t for n, t in attr.items() if n != art}
    return SemGraph(nodes, edges, roots), attr


def _empty_sdp(ld: Loaded) -> SdpInstance:
    tokens = [replace(t, top=False, pred=False, frame="_")
              for t in ld.sdp.tokens]
    return SdpInstance(ld.instance.sent_id, tokens,
                       [[] for _ in tokens]).validate()


def tree_to_sdp(tree: AmDepTree | None, ld: Loaded) -> SdpInstance:
    """Predicted SDP rows; an unparseable sentence gets an empty analysis."""
    plain = ld.sdp.tokens
    if tree is not None:
        try:
            graph, attr = evaluate_with_attribution(tree)
        except (IllTyped, OperationError, ValueError) as exc:
            log.warning("%s: evaluation failed (%s)", ld.instance.sent_id, exc)
            tree = None
    if tree is None:
        return _empty_sdp(ld)
    art_index = ld.record.artificial_token_index if ld.record else None
    if art_index is not None:
        graph, attr = _strip_artificial(graph, attr, art_index)
    remap: dict[str, str] = {}
    taken: set[str] = set()
    for node in graph.nodes:
        token = attr.get(node)
        if token is None or token > len(plain) or str(token) in taken:
            log.warning("%s: node %s has no usable token attribution",
                        ld.instance.sent_id, node)
            return _empty_sdp(ld)
        remap[node] = str(token)
        taken.add(str(token))
    mapped = SemGraph({remap[n]: l for n, l in graph.nodes.items()},
                      {(remap[o], remap[t], r) for o, t, r in graph.edges},
                      tuple(remap[r] for r in graph.roots))
    blank = [replace(t, top=False, pred=False, frame="_") for t in plain]
    return graph_to_sdp(mapped, blank, ld.instance.sent_id)


def tree_to_eds(tree: AmDepTree | None, ld: Loaded) -> EdsInstance:
    text = ld.eds.text
    if tree is not None:
        try:
            graph, attr = evaluate_with_attribution(tree)
            spans = restore_spans(graph, attr, ld.tokens)
            return graph_to_eds(graph, spans, text, ld.instance.sent_id)
        except Exception as exc:
            log.warning("%s: EDS write-back failed (%s)",
                        ld.instance.sent_id, exc)
    node = EdsNode("d0", "unknown", 0, len(text))
    return EdsInstance(ld.instance.sent_id, text, "d0", [node], set())


def _parse_one(ld: Loaded, model, pconfig: ParseConfig, bank: str):
    try:
        tree, _ = parse_tree(ld.instance.words, model, pconfig,
                             sent_id=ld.instance.sent_id)
    except UnknownSentence:
        tree = None
    if tree is not None:
        tree = relabel_lexical(tree, ld.instance.words)
    if bank == "eds":
        return tree_to_eds(tree, ld)
    return tree_to_sdp(tree, ld)


def parse_corpus(loaded: list[Loaded], model, pconfig: ParseConfig,
                 bank: str, jobs: int = 1):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_parse_one, loaded,
                                 [model] * len(loaded),
                                 [pconfig] * len(loaded),
                                 [bank] * len(loaded)))
    return [_parse_one(ld, model, pconfig, bank) for ld in loaded]


# -- shared command plumbing -----------------------------------------------------------


class CommandError(Exception):
    """Validation failure: message to stderr, exit 1."""


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as handle:
            return handle.read()
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str | None, payload: str) -> None:
    if path is None:
        sys.stdout.write(payload)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(payload)


def _table_for(args, loaded: list[Loaded]) -> HeuristicTable:
    if args.randomize_seed is not None:
        labels = {r for ld in loaded for _, _, r in ld.instance.graph.edges}
        return randomize_table(labels, args.randomize_seed, args.bank.upper())
    if args.table:
        return load_table(args.table, args.bank.upper())
    return builtin_table(args.bank)


def _load(args) -> list[Loaded]:
    return load_corpus(_read(args.infile), args.bank,
                       psd_rewrite=args.psd_rewrite,
                       drop_hndl=args.drop_hndl)


def _load_model(spec: str, bank: str):
    if spec.startswith("oracle:"):
        return oracle_model(read_amconll(_read(spec[len("oracle:"):])))
    if spec.startswith("random:"):
        rest = spec[len("random:"):]
        path, _, seed = rest.partition(":")
        return RandomModel(CountModel.load(path), int(seed or 0))
    try:
        return CountModel.load(spec)
    except OSError as exc:
        raise CommandError(f"cannot read model {spec}: {exc.strerror}") from exc


def _metric_line(name: str, r: PRF) -> str:
    return (f"{name} {r.precision:.4f} {r.recall:.4f} {r.f1:.4f} "
            f"{r.matched} {r.gold} {r.pred}")


# -- subcommands -------------------------------------------------------------------


def cmd_decompose(args) -> int:
    loaded = _load(args)
    table = _table_for(args, loaded)
    trees, failures = decompose_corpus(loaded, table,
                                       delex=not args.no_delex)
    _write(args.out, write_amconll(trees))
    report = "".join(f"{sid}\t{reason}\t{message}\n"
                     for sid, reason, message in failures)
    if args.failures:
        _write(args.failures, report)
    elif report:
        sys.stderr.write(report)
    log.info("decomposed %d/%d instances", len(trees), len(loaded))
    return 0


def cmd_train(args) -> int:
    loaded = _load(args)
    table = _table_for(args, loaded)
    trees, failures = decompose_corpus(loaded, table)
    if failures:
        log.info("skipping %d non-decomposable instances", len(failures))
    model = train_count_model(trees, alpha=args.alpha)
    model.save(args.out)
    log.info("trained on %d trees -> %s", len(trees), args.out)
    return 0


def cmd_parse(args) -> int:
    loaded = _load(args)
    model = _load_model(args.model, args.bank)
    pconfig = ParseConfig(k=args.k, time_budget_secs=args.time_budget_secs,
                          beam=args.beam)
    results = parse_corpus(loaded, model, pconfig, args.bank, jobs=args.jobs)
    if args.bank == "eds":
        _write(args.out, write_eds(results))
    else:
        _write(args.out, write_sdp(results))
    return 0


def cmd_score(args) -> int:
    gold_text, pred_text = _read(args.gold), _read(args.pred)
    lines = []
    if args.metric == "sdp":
        gold, pred = read_sdp(gold_text), read_sdp(pred_text)
        lines.append(_metric_line(
            "sdp_labeled_f", sdp_f(pred, gold,
                                   include_senses=args.include_senses)))
    elif args.metric == "edm":
        gold, pred = read_eds(gold_text), read_eds(pred_text)
        result = edm_corpus(pred, gold)
        lines.append(_metric_line("edm_nodes", result.nodes))
        lines.append(_metric_line("edm_edges", result.edges))
        lines.append(_metric_line("edm_combined", result.combined))
    else:
        if args.bank == "eds":
            gold = [eds_to_graph(i) for i in read_eds(gold_text)]
            pred = [eds_to_graph(i) for i in read_eds(pred_text)]
        else:
            gold = [sdp_to_graph(i)[0] for i in read_sdp(gold_text)]
            pred = [sdp_to_graph(i)[0] for i in read_sdp(pred_text)]
        if len(gold) != len(pred):
            raise IdMismatch(f"{len(gold)} gold vs {len(pred)} predicted")
        total = PRF(0, 0, 0)
        for g, p in zip(gold, pred):
            total += smatch(p, g, restarts=args.restarts, seed=args.seed)
        lines.append(_metric_line("smatch", total))
    _write(args.out, "".join(line + "\n" for line in lines))
    return 0


def cmd_stats(args) -> int:
    loaded = _load(args)
    table = _table_for(args, loaded)
    report = decomposability_stats([ld.instance for ld in loaded], table)
    _write(args.out, "".join(line + "\n" for line in report.lines()))
    return 0


def cmd_roundtrip(args) -> int:
    loaded = _load(args)
    table = _table_for(args, loaded)
    broken = []
    checked = 0
    for ld in loaded:
        try:
            tree = decompose(ld.instance, table)
        except NonDecomposable:
            continue
        checked += 1
        relexed = relabel_lexical(delexicalize_tree(tree), ld.instance.words)
        if not semgraph_isomorphic(evaluate(relexed), ld.instance.graph):
            broken.append(ld.instance.sent_id)
    for sid in broken:
        sys.stderr.write(f"roundtrip mismatch: {sid}\n")
    print(f"roundtrip {checked - len(broken)}/{checked} ok, "
          f"{len(loaded) - checked} non-decomposable")
    return 1 if broken else 0


# -- argument parsing ----------------------------------------------------------------


_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _coerce(sub: argparse.ArgumentParser, key: str, value: str):
    action = next((a for a in sub._actions if a.dest == key), None)
    if action is None:
        sub.error(f"unknown config key {key!r}")
    if action.nargs == 0:
        if value.lower() in _TRUE:
            return action.const
        if value.lower() in _FALSE:
            return action.default
        sub.error(f"config key {key!r} wants a boolean, got {value!r}")
    if action.type is not None:
        try:
            value = action.type(value)
        except ValueError:
            sub.error(f"config key {key!r}: bad value {value!r}")
    if action.choices is not None and value not in action.choices:
        sub.error(f"config key {key!r}: {value!r} not in "
                  f"{sorted(action.choices)}")
    action.required = False
    return value


def _apply_config_file(parser: argparse.ArgumentParser,
                       argv: list[str]) -> list[str]:
    """Config file entries become defaults; explicit flags still win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    try:
        path = argv[at + 1]
    except IndexError:
        parser.error("--config needs a path")
    command = argv[0] if argv and not argv[0].startswith("-") else None
    sub = parser.command_parsers.get(command)
    if sub is None:
        parser.error("--config needs a subcommand")
    defaults = {}
    for lineno, line in enumerate(_read(path).splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        defaults[key] = _coerce(sub, key, value.strip())
    sub.set_defaults(**defaults)
    return argv[:at] + argv[at + 2:]


def _int_or_none(text: str):
    return None if text.lower() in ("none", "") else int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amtool",
        description="Graph algebra toolkit: decompose, train, parse, score.")
    subs = parser.add_subparsers(dest="command", required=True)
    parser.command_parsers = {}

    def add_command(name, **kwargs):
        p = subs.add_parser(name, **kwargs)
        parser.command_parsers[name] = p
        return p

    def common(p, needs_bank=True):
        if needs_bank:
            p.add_argument("--bank", required=True, choices=BANKS)
            p.add_argument("--in", dest="infile", required=True,
                           help="input corpus in graphbank format")
            p.add_argument("--table", default=None,
                           help="heuristic table file overriding the builtin")
            p.add_argument("--randomize-seed", type=int, default=None,
                           help="replace the table with a seeded random one")
            p.add_argument("--no-psd-rewrite", dest="psd_rewrite",
                           action="store_false",
                           help="keep PSD coordination unrewritten")
            p.add_argument("--drop-hndl", action="store_true",
                           help="delete EDS handle edges where safe")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--config", help="key = value defaults file")

    p = add_command("decompose", help="graphs to AM-CoNLL trees")
    common(p)
    p.add_argument("--failures", default=None,
                   help="write non-decomposable log here instead of stderr")
    p.add_argument("--no-delex", action="store_true",
                   help="keep literal labels in supertags")
    p.set_defaults(func=cmd_decompose)

    p = add_command("train", help="fit the count model on a corpus")
    common(p)
    p.add_argument("--alpha", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    p = add_command("parse", help="parse a corpus with a model")
    common(p)
    p.add_argument("--model", required=True,
                   help="count-model path, oracle:<amconll>, or "
                        "random:<count-model>[:seed]")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--time-budget-secs", type=float, default=60.0)
    p.add_argument("--beam", type=_int_or_none, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    p = add_command("score", help="compare predictions against gold")
    common(p, needs_bank=False)
    p.add_argument("--metric", required=True, choices=("smatch", "edm", "sdp"))
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--bank", default="dm", choices=BANKS,
                   help="input format for smatch scoring")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--include-senses", action="store_true")
    p.set_defaults(func=cmd_score)

    p = add_command("stats", help="decomposability report")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = add_command("roundtrip", help="verify decompose-evaluate identity")
    common(p)
    p.set_defaults(func=cmd_roundtrip)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
    except CommandError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CommandError, IdMismatch, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
