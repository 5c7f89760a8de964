"""Proportion sweep, selector x model grid, dataset ablation and the interpretable tree.

Every LOOCV run is a *cell* keyed by (combo, selector, model, proportion).
Fold rankings depend only on (combo, selector) and are computed once and
shared by every cell that needs them. Work is spread over a process pool
and results are always assembled in canonical key order, so outputs do not
depend on ``jobs``.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ._seeding import derive_seed
from ._version import __version__
from .evaluation import EvalReport, fold_ranking, loocv
from .models import MODEL_KINDS, dtree_export, train_dtree
from .registry import ALL_COMBOS, FULL, DatasetCombo, FeatureMatrix, registry_digest
from .select import METHODS, RankedFeatures, check_proportion, median_impute, mic_rank, select_top
from .stats import GroupSummary, summary_row

log = logging.getLogger(__name__)

PROPORTIONS: tuple[float, ...] = tuple(round(0.15 + 0.1 * i, 2) for i in range(9))
GRID_PROPORTION = 0.65
METRICS = ("acc", "f1", "auc", "precision", "recall")

# features behind the group-difference tables (flight performance, key-instrument dwell)
KEY_FEATURES: tuple[str, ...] = (
    "qar.total_flight_time",
    "qar.pitch_1s",
    "qar.dist_err_mean",
    "qar.dist_err_sd",
    "aoi.airspeed_indicator",
    "aoi.attitude_indicator",
    "aoi.vertical_speed_indicator",
    "aoi.altitude_indicator",
)

CellKey = tuple[str, str, str, float]  # (combo name, selector, model, proportion)


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    leak_compat: bool = False
    jobs: int = 1

    def selector_seed(self, combo: DatasetCombo, method: str) -> int:
        return derive_seed(self.seed, "select", combo.slug, method)

    def flags(self) -> dict[str, object]:
        # jobs is deliberately absent: it never changes results
        return {"leak_compat": self.leak_compat}


def _rank_job(args) -> RankedFeatures | None:
    fm, method, fold, seed = args
    return fold_ranking(fm, method, fold, seed)


def _cell_job(args) -> EvalReport:
    fm, selector, model, proportion, leak, rankings, combo = args
    return loocv(fm, selector, proportion, model, leak, rankings=rankings, combo=combo)


def _pmap(fn: Callable, items: Sequence, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


@dataclass
class Runner:
    """Runs and caches LOOCV cells over one feature matrix."""

    fm: FeatureMatrix
    settings: RunSettings = field(default_factory=RunSettings)
    _rankings: dict[tuple[str, str], list] = field(default_factory=dict, repr=False)
    _reports: dict[CellKey, EvalReport] = field(default_factory=dict, repr=False)

    def _ensure_rankings(self, pairs: Iterable[tuple[DatasetCombo, str]]) -> None:
        pending = [(c, m) for c, m in dict.fromkeys(pairs) if (c.name, m) not in self._rankings]
        if not pending:
            return
        folds = [-1] if self.settings.leak_compat else list(range(self.fm.n))
        jobs = [
            (self.fm.for_combo(c), m, f, self.settings.selector_seed(c, m)) for c, m in pending for f in folds
        ]
        log.info("ranking features: %d selector runs", len(jobs))
        results = _pmap(_rank_job, jobs, self.settings.jobs)
        for i, (c, m) in enumerate(pending):
            chunk = results[i * len(folds) : (i + 1) * len(folds)]
            self._rankings[(c.name, m)] = chunk * self.fm.n if self.settings.leak_compat else chunk

    def run(self, cells: Sequence[tuple[DatasetCombo, str, str, float]]) -> list[EvalReport]:
        """Reports for ``cells`` in the order given."""
        self._ensure_rankings((c, s) for c, s, _, _ in cells)
        keys = [(c.name, s, m, float(p)) for c, s, m, p in cells]
        pending = [cell for cell, k in zip(cells, keys) if k not in self._reports]
        pending = list({(c.name, s, m, float(p)): (c, s, m, p) for c, s, m, p in pending}.values())
        if pending:
            log.info("evaluating %d LOOCV cells", len(pending))
            jobs = [
                (self.fm.for_combo(c), s, m, float(p), self.settings.leak_compat, self._rankings[(c.name, s)], c.name)
                for c, s, m, p in pending
            ]
            for (c, s, m, p), rep in zip(pending, _pmap(_cell_job, jobs, self.settings.jobs)):
                self._reports[(c.name, s, m, float(p))] = rep
        return [self._reports[k] for k in keys]


# ------------------------------------------------------------------ experiments


def _csv(rows: list[dict[str, object]]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class SweepRow:
    proportion: float
    n_features: int
    best: dict[str, tuple[float, str]]  # metric -> (value, "selector+model")

    def as_dict(self) -> dict[str, object]:
        d: dict[str, object] = {"proportion": f"{self.proportion:g}", "n_features": self.n_features}
        for m in METRICS:
            v, who = self.best[m]
            d[m] = repr(v)
            d[f"{m}_by"] = who
        return d


def pairs() -> list[tuple[str, str]]:
    return list(itertools.product(METHODS, MODEL_KINDS))


def proportion_sweep(
    runner: Runner, proportions: Sequence[float] = PROPORTIONS, combo: DatasetCombo = FULL
) -> list[SweepRow]:
    """Best value of each metric over all 15 selector x model pairs, per proportion.

    Ties go to the first pair in (selector, model) canonical order.
    """
    for p in proportions:
        check_proportion(p)
    cells = [(combo, s, m, p) for p in proportions for s, m in pairs()]
    reports = runner.run(cells)
    rows = []
    per = len(pairs())
    for i, p in enumerate(proportions):
        chunk = reports[i * per : (i + 1) * per]
        best = {}
        for metric in METRICS:
            vals = [getattr(r.metrics, metric) for r in chunk]
            j = int(np.argmax(vals))
            best[metric] = (vals[j], f"{chunk[j].selector}+{chunk[j].model}")
        rows.append(SweepRow(float(p), chunk[0].n_features, best))
    return rows


def sweep_csv(rows: Sequence[SweepRow]) -> str:
    return _csv([r.as_dict() for r in rows])


def method_grid(runner: Runner, combo: DatasetCombo = FULL, proportion: float = GRID_PROPORTION) -> list[EvalReport]:
    """15 reports in (selector, model) canonical order."""
    check_proportion(proportion)
    return runner.run([(combo, s, m, proportion) for s, m in pairs()])


def _ranks(values: Sequence[float]) -> list[int]:
    """1 = best; equal values share the better rank."""
    return [1 + sum(1 for w in values if w > v) for v in values]


def grid_csv(reports: Sequence[EvalReport]) -> str:
    rows = [r.metrics_row() for r in reports]
    for key in ("acc", "auc", "f1"):
        for row, rk in zip(rows, _ranks([getattr(r.metrics, key) for r in reports])):
            row[f"rank_{key}"] = rk
    return _csv(rows)


def ablation(
    runner: Runner,
    selector: str = "mic",
    model: str = "svm",
    proportion: float = GRID_PROPORTION,
    combos: Sequence[DatasetCombo] = ALL_COMBOS,
) -> list[EvalReport]:
    return runner.run([(c, selector, model, proportion) for c in combos])


def ablation_csv(reports: Sequence[EvalReport]) -> str:
    return _csv([r.metrics_row() for r in reports])


@dataclass
class Interpretation:
    dot: str
    importances: list[tuple[str, float]]
    features: tuple[str, ...]
    root: tuple[str, float] | None

    def importances_csv(self) -> str:
        lines = ["feature,importance"] + [f"{n},{v!r}" for n, v in self.importances]
        return "\n".join(lines) + "\n"


def interpretability_report(fm: FeatureMatrix, proportion: float = GRID_PROPORTION) -> Interpretation:
    """Decision tree on the MIC-selected features of the full cohort.

    A single tree on all participants (not cross-validated); the export
    header says so.
    """
    X, = median_impute(fm.X)
    ranked = mic_rank(X, fm.y, fm.names)
    chosen = set(select_top(ranked, proportion))
    cols = tuple(n for n in fm.names if n in chosen)
    sub = fm.columns(cols)
    Xs, = median_impute(sub.X)
    model = train_dtree(Xs, sub.y, cols)
    header = (
        f"decision tree fitted on all {fm.n} participants (not cross-validated)\n"
        f"features: top {proportion:g} of {len(fm.names)} by mutual information ({len(cols)} kept)"
    )
    dot, table = dtree_export(model, header)
    table = sorted(table, key=lambda t: (-round(t[1], 12), cols.index(t[0])))
    t = model.tree
    root = (cols[t.feature[0]], t.threshold[0]) if t.left[0] >= 0 else None
    return Interpretation(dot, table, cols, root)


def group_stats(fm: FeatureMatrix, features: Sequence[str] | None = None) -> list[dict[str, object]]:
    """Novice vs expert t-test rows (NaN entries dropped per feature)."""
    rows = []
    for name in features or fm.names:
        col = fm.X[:, fm.names.index(name)]
        nov = col[(fm.y == 0) & ~np.isnan(col)]
        exp = col[(fm.y == 1) & ~np.isnan(col)]
        rows.append(summary_row(name, GroupSummary.of(nov), GroupSummary.of(exp)))
    return rows


def stats_csv(rows: Sequence[dict[str, object]]) -> str:
    return _csv(list(rows))


# ------------------------------------------------------------------ output


def provenance(settings: RunSettings, extra: dict[str, object] | None = None) -> str:
    lines = [
        f"seed: {settings.seed}",
        *(f"{k}: {v}" for k, v in settings.flags().items()),
        f"registry_digest: {registry_digest()}",
        f"version: {__version__}",
    ]
    lines += [f"{k}: {v}" for k, v in (extra or {}).items()]
    return "\n".join(lines) + "\n"


def write_reports(out: Path, name: str, reports: Sequence[EvalReport]) -> None:
    """Per-cell predictions and ROC points under ``out``."""
    (out / "roc").mkdir(parents=True, exist_ok=True)
    (out / "predictions").mkdir(parents=True, exist_ok=True)
    for r in reports:
        slug = DatasetCombo.parse(r.combo).slug
        stem = f"{slug}_{r.selector}_{r.model}_{r.proportion:g}"
        if name == "ablation":
            (out / "roc" / f"{slug}.csv").write_text(r.roc_csv())
        (out / "predictions" / f"{stem}.csv").write_text(r.predictions_csv())


def _fmt4(v: float) -> str:
    return f"{v:.4f}"


def summary_markdown(
    sweep: Sequence[SweepRow],
    grid: Sequence[EvalReport],
    abl: Sequence[EvalReport],
    interp: Interpretation,
    stats_rows: Sequence[dict[str, object]],
) -> str:
    out = ["# Run summary", ""]
    out += ["## Proportion sweep (best over 15 pairs)", "", "| proportion | k | Acc | F1 | AUC | Precision | Recall |"]
    out += ["|---|---|---|---|---|---|---|"]
    for r in sweep:
        out.append(
            f"| {r.proportion:g} | {r.n_features} | " + " | ".join(_fmt4(r.best[m][0]) for m in METRICS) + " |"
        )
    if sweep:
        top = max(sweep, key=lambda r: r.best["acc"][0])
        out += ["", f"Best accuracy at proportion {top.proportion:g} ({top.best['acc'][1]})."]
    out += ["", "## Method grid", "", "| selector | model | Acc | F1 | AUC | Precision | Recall |", "|---|---|---|---|---|---|---|"]
    for r in grid:
        out.append(f"| {r.selector} | {r.model} | " + " | ".join(_fmt4(getattr(r.metrics, m)) for m in METRICS) + " |")
    out += ["", "## Dataset ablation", "", "| dataset | k | Acc | F1 | AUC | Precision | Recall |", "|---|---|---|---|---|---|---|"]
    for r in abl:
        out.append(f"| {r.combo} | {r.n_features} | " + " | ".join(_fmt4(getattr(r.metrics, m)) for m in METRICS) + " |")
    out += ["", "## Decision tree", ""]
    if interp.root:
        out.append(f"Root split: `{interp.root[0]} <= {interp.root[1]:.4f}`.")
    out += ["", "| feature | importance |", "|---|---|"]
    out += [f"| {n} | {v:.4f} |" for n, v in interp.importances if v > 0]
    out += ["", "## Group differences (novice vs expert)", "", "| feature | novice | expert | t | p | d |", "|---|---|---|---|---|---|"]
    for r in stats_rows:
        out.append(f"| {r['feature']} | {r['novice']} | {r['expert']} | {r['t']}{r['sig']} | {r['p']} | {r['d']} |")
    return "\n".join(out) + "\n"


@dataclass
class ExperimentOutputs:
    sweep: list[SweepRow]
    grid: list[EvalReport]
    ablation: list[EvalReport]
    interpretation: Interpretation
    stats: list[dict[str, object]]


def run_all(
    fm: FeatureMatrix,
    out: str | Path,
    settings: RunSettings,
    proportions: Sequence[float] = PROPORTIONS,
    extra_provenance: dict[str, object] | None = None,
) -> ExperimentOutputs:
    """Sweep, grid, ablation, tree and statistics into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    runner = Runner(fm, settings)
    sw = proportion_sweep(runner, proportions)
    gr = method_grid(runner)
    ab = ablation(runner)
    it = interpretability_report(fm)
    st = group_stats(fm)
    (out / "sweep.csv").write_text(sweep_csv(sw))
    (out / "grid.csv").write_text(grid_csv(gr))
    write_reports(out, "grid", gr)
    (out / "ablation.csv").write_text(ablation_csv(ab))
    write_reports(out, "ablation", ab)
    (out / "dtree.txt").write_text(it.dot)
    (out / "importances.csv").write_text(it.importances_csv())
    (out / "stats.csv").write_text(stats_csv(st))
    (out / "provenance.txt").write_text(provenance(settings, extra_provenance))
    key = [r for r in st if r["feature"] in KEY_FEATURES]
    (out / "summary.md").write_text(summary_markdown(sw, gr, ab, it, key))
    return ExperimentOutputs(sw, gr, ab, it, st)
