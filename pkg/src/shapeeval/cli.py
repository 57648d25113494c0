"""Command-line entry point: ``shapeeval <command> ...``.

Exit status is 0 on success, 1 for usage or input errors, 2 when inputs are
fine but evaluation cannot proceed.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from shapeeval import report
from shapeeval.analysis import METRICS, compare_runs, evaluate_run, reliability_swap_rate
from shapeeval.dataset import (
    FORMATS as CLASSIFICATION_FORMATS,
    load_classification,
    parse_classification,
    serialize_classification,
    validate_classification,
)
from shapeeval.errors import EvaluationError, InputError
from shapeeval.metrics import DEFAULT_CUTOFF, DEFAULT_RECALL_LEVELS, FMeasureParams
from shapeeval.runs import (
    load_matrix,
    load_run,
    matrix_from_run,
    matrix_scores,
    parse_matrix,
    parse_run,
    ranked_lists_from_matrix,
    serialize_matrix,
    serialize_run,
)

FORMATS_HELP = """\
file formats
------------
classification, simple:       classification, cla (PSB style):
  # comment                     PSB 1
  <object_id> <class_label>     <num_classes> <num_models>
                                <class> <parent> <count>
                                <object_id>   (one per line, count times)

run file (lower score ranks first, ties by object id):
  #@ method <label>          optional
  #@ query_time_ms <number>  optional
  #@ descriptor_bytes <int>  optional
  <query_id> <object_id> <score>

dissimilarity matrix, text:   dissimilarity matrix, CSV:
  <N>                           ,<id_1>,...,<id_N>
  <id_1> ... <id_N>             <id_1>,<v11>,...,<v1N>
  <N rows of N numbers>         ...

Inputs are detected automatically; prefix a path with run: or matrix: to
force the format.
"""

_EXT = {"text": "txt", "csv": "csv", "json": "json"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _sizes(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="shapeeval",
        description="Evaluate retrieval runs against a classified shape benchmark.",
        epilog=FORMATS_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("-c", "--classification", required=True, help="ground-truth class file")
    common.add_argument(
        "--classification-format", choices=("auto", *CLASSIFICATION_FORMATS), default="auto"
    )
    common.add_argument("--cutoff", type=_positive_int, default=DEFAULT_CUTOFF,
                        help="rank cutoff for the E-measure (default %(default)s)")
    common.add_argument("--alpha", type=float, default=1.0,
                        help="F-measure precision weight (default %(default)s)")
    common.add_argument("--recall-levels", type=int, default=DEFAULT_RECALL_LEVELS,
                        help="interpolated recall levels, >= 2 (default %(default)s)")
    common.add_argument("-o", "--output-dir", help="directory for output files")
    common.add_argument("--format", choices=tuple(_EXT), default="text", dest="output_format")
    common.add_argument("--style", choices=report.STYLES, default="percent")
    common.add_argument("--strict", action="store_true",
                        help="fail on ranked objects missing from the classification")

    def add(name, help_text):
        return sub.add_parser(
            name, parents=[common], help=help_text, epilog=FORMATS_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    p = add("eval", "score runs and write summary, per-query, per-class and curve outputs")
    p.add_argument("inputs", nargs="+", help="run or matrix files")

    p = add("compare", "compare exactly two runs")
    p.add_argument("inputs", nargs="+", help="two run or matrix files")

    p = add("curve", "write precision-recall and NDCG curve data and SVG plots")
    p.add_argument("inputs", nargs="+", help="run or matrix files")
    p.add_argument("--title", default=None, help="plot title")

    p = add("reliability", "swap rate of two runs as a function of class-subset size")
    p.add_argument("inputs", nargs="+", help="two run or matrix files")
    p.add_argument("--metric", choices=METRICS, required=True)
    p.add_argument("--subset-sizes", type=_sizes, required=True, help="e.g. 2,4,8")
    p.add_argument("--trials", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("validate", help="check a classification, run or matrix file",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("path")
    p.add_argument("--kind", choices=("auto", "classification", "run", "matrix"), default="auto")

    p = sub.add_parser("convert", help="convert between matrix, run and classification formats",
                       epilog=FORMATS_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--to", required=True, choices=("run", "matrix", "matrix-csv", "simple", "cla"))
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_bytes().decode("utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot read: {exc.strerror}", str(path)) from exc
    except UnicodeDecodeError:
        raise InputError("file is not valid UTF-8", str(path)) from None


def sniff_kind(text: str) -> str:
    """Guess whether text is a classification, run or matrix file."""
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped or (stripped.startswith("#") and not stripped.startswith("#@")):
            continue
        if stripped.startswith("#@"):
            return "run"
        if "," in stripped:
            return "matrix"
        tokens = stripped.split("#", 1)[0].split()
        if tokens[0] == "PSB":
            return "classification"
        if len(tokens) == 1 and tokens[0].isdigit():
            return "matrix"
        if len(tokens) == 2:
            return "classification"
        return "run"
    raise InputError("file is empty")


def _load_input(spec: str):
    kind = None
    for prefix in ("run:", "matrix:"):
        if spec.startswith(prefix):
            kind, spec = prefix[:-1], spec[len(prefix):]
    path = Path(spec)
    if kind is None:
        try:
            kind = sniff_kind(_read(path))
        except InputError as exc:
            raise InputError(str(exc).split(": ", 1)[-1], str(path)) from None
    if kind == "matrix":
        return ranked_lists_from_matrix(load_matrix(path), name=path.stem)
    if kind == "run":
        return load_run(path)
    raise InputError("expected a run or matrix file, found a classification", str(path))


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / name
    target.write_text(text, encoding="utf-8", newline="\n")
    return target


def _evaluate_inputs(args):
    if args.recall_levels < 2:
        raise UsageError("--recall-levels must be >= 2")
    if not args.alpha > 0:
        raise UsageError("--alpha must be positive")
    c = load_classification(args.classification, args.classification_format)
    params = FMeasureParams(args.alpha, args.cutoff)
    runs = [_load_input(spec) for spec in args.inputs]
    summaries = [
        evaluate_run(run, c, params, recall_levels=args.recall_levels, strict=args.strict)
        for run in runs
    ]
    return c, params, runs, summaries


def _write_curves(out_dir: Path, summaries, title=None) -> list[Path]:
    bundle = report.CurveBundle.from_summaries(summaries)
    written = report.export_curves(bundle, out_dir / "curves")
    written.append(_write(out_dir, "pr.svg", report.render_svg(bundle, title=title)))
    written.append(_write(out_dir, "ndcg.svg", report.render_svg(bundle, title=title, kind="ndcg")))
    return written


def cmd_eval(args) -> int:
    _, _, _, summaries = _evaluate_inputs(args)
    table = report.render_summary_table(summaries, args.style, args.output_format)
    sys.stdout.write(table)
    if args.output_dir:
        out = Path(args.output_dir)
        _write(out, f"summary.{_EXT[args.output_format]}", table)
        if args.output_format != "csv":
            _write(out, "summary.csv", report.render_summary_table(summaries, args.style, "csv"))
        for idx, s in enumerate(summaries, start=1):
            stem = f"{idx:02d}_{report.slug(s.run_name)}"
            _write(out, f"{stem}_per_query.csv", report.render_per_query_csv(s))
            _write(out, f"{stem}_per_class.csv", report.render_per_class_csv(s))
        _write_curves(out, summaries)
    return 0


def _two_inputs(args):
    if len(args.inputs) != 2:
        raise UsageError(f"{args.command} needs exactly 2 inputs, got {len(args.inputs)}")


def cmd_compare(args) -> int:
    _two_inputs(args)
    _, _, _, (a, b) = _evaluate_inputs(args)
    text = report.render_comparison(compare_runs(a, b), args.output_format)
    sys.stdout.write(text)
    if args.output_dir:
        _write(Path(args.output_dir), f"comparison.{_EXT[args.output_format]}", text)
    return 0


def cmd_curve(args) -> int:
    if not args.output_dir:
        raise UsageError("curve needs --output-dir")
    _, _, _, summaries = _evaluate_inputs(args)
    for path in _write_curves(Path(args.output_dir), summaries, args.title):
        print(path)
    return 0


def cmd_reliability(args) -> int:
    _two_inputs(args)
    if args.recall_levels < 2:
        raise UsageError("--recall-levels must be >= 2")
    c = load_classification(args.classification, args.classification_format)
    a, b = (_load_input(spec) for spec in args.inputs)
    est = reliability_swap_rate(
        a, b, c, args.metric, args.subset_sizes, args.trials, args.seed,
        FMeasureParams(args.alpha, args.cutoff),
    )
    text = report.render_reliability(est, args.output_format)
    sys.stdout.write(text)
    if args.output_dir:
        _write(Path(args.output_dir), f"reliability.{_EXT[args.output_format]}", text)
    return 0


def cmd_validate(args) -> int:
    path = Path(args.path)
    text = _read(path)
    kind = sniff_kind(text) if args.kind == "auto" else args.kind
    if kind == "classification":
        c = parse_classification(text, "auto", str(path))
        diagnostics = validate_classification(c)
        for d in diagnostics:
            print(d)
        errors = sum(d.severity == "error" for d in diagnostics)
        warns = len(diagnostics) - errors
        print(f"{len(c.classes)} classes, {len(c.entries)} objects")
        print(f"{errors} errors, {warns} warnings")
        return 1 if errors else 0
    if kind == "run":
        run = parse_run(text, path.stem, str(path))
        print(f"{len(run.lists)} queries, {sum(len(x.ranking) for x in run.lists.values())} results")
    else:
        m = parse_matrix(text, str(path))
        print(f"{len(m.ids)} x {len(m.ids)} matrix")
    print("0 errors, 0 warnings")
    return 0


def cmd_convert(args) -> int:
    source = Path(args.source)
    text = _read(source)
    kind = sniff_kind(text)
    if args.to in ("simple", "cla"):
        if kind != "classification":
            raise UsageError(f"--to {args.to} needs a classification input")
        out = serialize_classification(parse_classification(text, "auto", str(source)), args.to)
    elif args.to == "run":
        if kind != "matrix":
            raise UsageError("--to run needs a matrix input")
        m = parse_matrix(text, str(source))
        out = serialize_run(ranked_lists_from_matrix(m, source.stem), matrix_scores(m))
    else:
        if kind != "run":
            raise UsageError(f"--to {args.to} needs a run input")
        m = matrix_from_run(parse_run(text, source.stem, str(source)))
        out = serialize_matrix(m, "csv" if args.to == "matrix-csv" else "text")
    Path(args.target).write_text(out, encoding="utf-8", newline="\n")
    return 0


COMMANDS = {
    "eval": cmd_eval,
    "compare": cmd_compare,
    "curve": cmd_curve,
    "reliability": cmd_reliability,
    "validate": cmd_validate,
    "convert": cmd_convert,
}

_MAX_WARNINGS = 20


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            status = COMMANDS[args.command](args)
        except UsageError as exc:
            parser.print_usage(sys.stderr)
            print(f"shapeeval: error: {exc}", file=sys.stderr)
            status = 1
        except (InputError, OSError) as exc:
            print(f"shapeeval: input error: {exc}", file=sys.stderr)
            status = 1
        except EvaluationError as exc:
            print(f"shapeeval: evaluation error: {exc}", file=sys.stderr)
            status = 2
        except Exception as exc:  # noqa: BLE001 - never show a raw traceback
            print(f"shapeeval: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
            status = 2
    for w in caught[:_MAX_WARNINGS]:
        print(f"warning: {w.message}", file=sys.stderr)
    if len(caught) > _MAX_WARNINGS:
        print(f"warning: ... {len(caught) - _MAX_WARNINGS} more", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
