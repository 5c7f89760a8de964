"""Command-line entry point.

Exit codes: 0 success, 1 invalid options, 2 bad input data. Logs go to
standard error; every artifact is written under ``--out``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from . import experiments as ex
from ._seeding import derive_seed
from ._version import __version__
from .errors import ConfigError, ConvergenceError, DataError, SkyselectError
from .evaluation import loocv
from .models import MODEL_KINDS, save_model, train_model
from .registry import FULL, DatasetCombo, combo_columns, extract_cohort, read_features, write_features
from .select import METHODS, check_proportion, median_impute, rank_features, select_top
from .stats import GroupSummary, summary_row
from .synth import CohortSpec, generate_cohort, manifest_digest
from .telemetry import load_cohort

log = logging.getLogger("skyselect")

SEED_ENV = "SKYSELECT_SEED"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2; option errors are 1 here
        raise ConfigError(f"{self.prog}: {message}")


def _proportion(text: str) -> float:
    try:
        return check_proportion(float(text))
    except (ValueError, ConfigError):
        raise argparse.ArgumentTypeError(f"proportion must be a number in (0, 1], got {text!r}") from None


def _proportions(text: str) -> tuple[float, ...]:
    return tuple(_proportion(t) for t in text.split(",") if t.strip())


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        v = 0
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        v = 0.0
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _combo(text: str) -> DatasetCombo:
    try:
        return DatasetCombo.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _summary(text: str) -> GroupSummary:
    try:
        n, mean, sd = text.split(",")
        return GroupSummary(int(n), float(mean), float(sd))
    except (ValueError, DataError):
        raise argparse.ArgumentTypeError(f"expected N,MEAN,SD with N >= 2 and SD >= 0, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="skyselect", description="Expert vs novice pilot classification pipeline.")
    p.add_argument("--version", action="version", version=f"skyselect {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV}, else 0)")
    common.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    common.add_argument("-q", "--quiet", action="store_true", help="warnings only")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic cohort")
    s.add_argument("--experts", type=_positive_int, default=23)
    s.add_argument("--novices", type=_positive_int, default=23)
    s.add_argument("--gaze-hz", type=_positive_float, default=120.0)
    s.add_argument("--flight-hz", type=_positive_float, default=30.0)
    s.add_argument("--out", required=True, type=Path)

    s = sub.add_parser("extract", parents=[common], help="feature matrix from a cohort manifest")
    s.add_argument("--manifest", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)

    def features(sp):
        sp.add_argument("--features", required=True, type=Path, help="features CSV from `extract`")
        sp.add_argument("--out", required=True, type=Path)

    def pipeline(sp, proportion=ex.GRID_PROPORTION):
        sp.add_argument("--dataset", type=_combo, default=FULL, help="e.g. aoi,em,qar or all")
        sp.add_argument("--method", choices=METHODS, default="mic")
        sp.add_argument("--proportion", type=_proportion, default=proportion)

    s = sub.add_parser("select", parents=[common], help="rank features and keep the top proportion")
    features(s)
    pipeline(s)

    s = sub.add_parser("train", parents=[common], help="fit one model on all participants")
    features(s)
    pipeline(s, 1.0)
    s.add_argument("--no-select", action="store_true", help="use every column of the dataset")
    s.add_argument("--model", choices=MODEL_KINDS, default="svm")

    s = sub.add_parser("evaluate", parents=[common], help="leave-one-out evaluation")
    features(s)
    pipeline(s)
    s.add_argument("--model", choices=MODEL_KINDS, default="svm")
    s.add_argument("--leak-compat", action="store_true", help="select features once on all rows")

    for name, helptext in (
        ("sweep", "best metrics per selection proportion"),
        ("grid", "3 selectors x 5 models"),
        ("ablate", "MIC + SVM on all seven dataset combinations"),
        ("interpret", "decision tree on the full cohort"),
    ):
        s = sub.add_parser(name, parents=[common], help=helptext)
        features(s)
        s.add_argument("--leak-compat", action="store_true", help="select features once on all rows")
        if name == "sweep":
            s.add_argument("--proportions", type=_proportions, default=ex.PROPORTIONS)
        else:
            s.add_argument("--proportion", type=_proportion, default=ex.GRID_PROPORTION)
        if name == "grid":
            s.add_argument("--dataset", type=_combo, default=FULL)

    s = sub.add_parser("stats", parents=[common], help="novice vs expert t-test rows")
    s.add_argument("--features", type=Path, help="features CSV")
    s.add_argument("--feature", action="append", help="feature name (repeatable; default: key features)")
    s.add_argument("--novice", type=_summary, help="N,MEAN,SD instead of a features file")
    s.add_argument("--expert", type=_summary, help="N,MEAN,SD instead of a features file")
    s.add_argument("--out", type=Path, help="also write stats.csv here")

    s = sub.add_parser("reproduce", parents=[common], help="synth -> extract -> all experiments")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--experts", type=_positive_int, default=23)
    s.add_argument("--novices", type=_positive_int, default=23)
    s.add_argument("--gaze-hz", type=_positive_float, default=120.0)
    s.add_argument("--flight-hz", type=_positive_float, default=30.0)
    s.add_argument("--leak-compat", action="store_true")
    return p


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None


def _settings(args, seed: int) -> ex.RunSettings:
    return ex.RunSettings(derive_seed(seed, "experiments"), getattr(args, "leak_compat", False), args.jobs)


def _out(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _read(path: Path):
    if not path.is_file():
        raise DataError(f"{path}: no such file")
    return read_features(path)


def _synth(args, seed: int, out: Path) -> Path:
    spec = CohortSpec(args.experts, args.novices, derive_seed(seed, "synth"), args.gaze_hz, args.flight_hz)
    log.info("synthesizing %d experts + %d novices into %s", args.experts, args.novices, out)
    return generate_cohort(spec, out, jobs=args.jobs)


def _extract(manifest: Path, out: Path, jobs: int) -> Path:
    if not manifest.is_file():
        raise DataError(f"{manifest}: no such manifest")
    fm = extract_cohort(load_cohort(manifest), jobs=jobs)
    dest = _out(out) / "features.csv"
    write_features(fm, dest)
    (out / "combos.csv").write_text(combo_columns())
    log.info("wrote %d x %d features to %s", fm.n, len(fm.names), dest)
    return dest


def cmd_synth(args, seed):
    _synth(args, seed, args.out)


def cmd_extract(args, seed):
    _extract(args.manifest, args.out, args.jobs)


def cmd_select(args, seed):
    fm = _read(args.features).for_combo(args.dataset)
    X, = median_impute(fm.X)
    ranked = rank_features(args.method, X, fm.y, fm.names, _settings(args, seed).selector_seed(args.dataset, args.method))
    out = _out(args.out)
    (out / "ranking.csv").write_text(ranked.to_csv())
    (out / "selected.txt").write_text("\n".join(select_top(ranked, args.proportion)) + "\n")


def cmd_train(args, seed):
    fm = _read(args.features).for_combo(args.dataset)
    cols = fm.names
    if not args.no_select:
        X, = median_impute(fm.X)
        st = _settings(args, seed)
        ranked = rank_features(args.method, X, fm.y, fm.names, st.selector_seed(args.dataset, args.method))
        chosen = set(select_top(ranked, args.proportion))
        cols = tuple(n for n in fm.names if n in chosen)
    sub = fm.columns(cols)
    X, = median_impute(sub.X)
    model = train_model(args.model, X, sub.y, cols)
    save_model(model, _out(args.out) / "model.json")


def cmd_evaluate(args, seed):
    fm = _read(args.features).for_combo(args.dataset)
    st = _settings(args, seed)
    rep = loocv(
        fm,
        args.method,
        args.proportion,
        args.model,
        args.leak_compat,
        seed=st.selector_seed(args.dataset, args.method),
        combo=args.dataset.name,
    )
    out = _out(args.out)
    (out / "metrics.csv").write_text(rep.metrics_csv())
    (out / "predictions.csv").write_text(rep.predictions_csv())
    (out / "roc.csv").write_text(rep.roc_csv())
    print(rep.metrics_csv(), end="")


def _experiment(args, seed, name):
    fm = _read(args.features)
    st = _settings(args, seed)
    out = _out(args.out)
    runner = ex.Runner(fm, st)
    extra = {"command": name}
    if name == "sweep":
        rows = ex.proportion_sweep(runner, args.proportions)
        (out / "sweep.csv").write_text(ex.sweep_csv(rows))
        extra["proportions"] = ",".join(f"{p:g}" for p in args.proportions)
    elif name == "grid":
        reps = ex.method_grid(runner, args.dataset, args.proportion)
        (out / "grid.csv").write_text(ex.grid_csv(reps))
        ex.write_reports(out, "grid", reps)
        extra.update(dataset=args.dataset.name, proportion=f"{args.proportion:g}")
    elif name == "ablate":
        reps = ex.ablation(runner, proportion=args.proportion)
        (out / "ablation.csv").write_text(ex.ablation_csv(reps))
        ex.write_reports(out, "ablation", reps)
        extra["proportion"] = f"{args.proportion:g}"
    else:
        it = ex.interpretability_report(fm, args.proportion)
        (out / "dtree.txt").write_text(it.dot)
        (out / "importances.csv").write_text(it.importances_csv())
        extra["proportion"] = f"{args.proportion:g}"
    (out / "provenance.txt").write_text(ex.provenance(st, extra))


def cmd_stats(args, seed):
    if args.novice or args.expert:
        if not (args.novice and args.expert):
            raise ConfigError("stats: --novice and --expert must be given together")
        rows = [summary_row(args.feature[0] if args.feature else "feature", args.novice, args.expert)]
    else:
        if args.features is None:
            raise ConfigError("stats: give --features or --novice/--expert summaries")
        fm = _read(args.features)
        names = args.feature or [n for n in ex.KEY_FEATURES if n in fm.names]
        unknown = [n for n in names if n not in fm.names]
        if unknown:
            raise ConfigError(f"stats: unknown --feature {unknown}")
        rows = ex.group_stats(fm, names)
    text = ex.stats_csv(rows)
    if args.out:
        (_out(args.out) / "stats.csv").write_text(text)
    print(text, end="")


def cmd_reproduce(args, seed):
    out = _out(args.out)
    t0 = time.monotonic()
    manifest = _synth(args, seed, out / "cohort")
    features = _extract(manifest, out, args.jobs)
    fm = read_features(features)
    st = _settings(args, seed)
    extra = {
        "command": "reproduce",
        "master_seed": seed,
        "cohort": f"{args.experts} experts, {args.novices} novices, gaze {args.gaze_hz:g} Hz, flight {args.flight_hz:g} Hz",
        "manifest_digest": manifest_digest(manifest),
    }
    ex.run_all(fm, out, st, extra_provenance=extra)
    log.info("reproduce finished in %.1f s; summary at %s", time.monotonic() - t0, out / "summary.md")


COMMANDS = {
    "synth": cmd_synth,
    "extract": cmd_extract,
    "select": cmd_select,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "sweep": lambda a, s: _experiment(a, s, "sweep"),
    "grid": lambda a, s: _experiment(a, s, "grid"),
    "ablate": lambda a, s: _experiment(a, s, "ablate"),
    "interpret": lambda a, s: _experiment(a, s, "interpret"),
    "stats": cmd_stats,
    "reproduce": cmd_reproduce,
}


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
        logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        seed = resolve_seed(args.seed)
        log.debug("command=%s seed=%d jobs=%d", args.command, seed, args.jobs)
        COMMANDS[args.command](args, seed)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SkyselectError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
