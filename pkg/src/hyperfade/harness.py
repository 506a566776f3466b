"""Outage and capacity curves: Gamma-approximation analytics against Monte Carlo.

Each (alpha0, n_irs) cell draws one set of envelopes, which is reused for
every SNR point of that cell.  Cell streams are keyed by the cell
coordinates, so a cell's numbers do not depend on which other cells are in
the grid or on the order they run in.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata as importlib_metadata

import numpy as np

from . import irs_link, solver
from .cascade import CascadePair
from .errors import DomainError, NonConvergenceError
from .ipl import FULL_HRR_ALPHA_LIMIT
from .irs_link import IrsLinkModel, db_to_linear
from .rng import default_seed

SCHEMA_VERSION = 1

CSV_COLUMNS = (
    "alpha0", "n_irs", "snr_db",
    "op_analytic", "op_mc", "op_mc_stderr",
    "ec_analytic", "ec_mc", "ec_mc_stderr",
)


def code_version() -> str:
    try:
        return importlib_metadata.version("artifact")
    except importlib_metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class ExperimentConfig:
    alpha0_list: tuple = (0.001, 0.3159)
    n_irs_list: tuple = (2, 4, 6, 14)
    snr_db_range: tuple = (-5.0, 30.0, 5.0)
    gamma_th_db: float = 0.0
    n_samples: int = 10**6
    seed: int = field(default_factory=default_seed)
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha0_list", tuple(float(a) for a in self.alpha0_list))
        object.__setattr__(self, "n_irs_list", tuple(int(n) for n in self.n_irs_list))
        object.__setattr__(self, "snr_db_range", tuple(float(x) for x in self.snr_db_range))
        if not self.alpha0_list:
            raise DomainError("alpha0_list must not be empty", param="alpha0_list")
        for i, a in enumerate(self.alpha0_list):
            if not (0.0 < a < FULL_HRR_ALPHA_LIMIT):
                raise DomainError(
                    f"alpha0_list[{i}] = {a!r} outside (0, {FULL_HRR_ALPHA_LIMIT})",
                    param=f"alpha0_list[{i}]",
                )
        if not self.n_irs_list:
            raise DomainError("n_irs_list must not be empty", param="n_irs_list")
        for i, n in enumerate(self.n_irs_list):
            if n < 1:
                raise DomainError(f"n_irs_list[{i}] must be >= 1", param=f"n_irs_list[{i}]")
        if len(self.snr_db_range) != 3:
            raise DomainError("snr_db_range must be (lo, hi, step)", param="snr_db_range")
        lo, hi, step = self.snr_db_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise DomainError("snr_db_range needs lo < hi", param="snr_db_range")
        if not (math.isfinite(step) and step > 0):
            raise DomainError("snr_db_range step must be > 0", param="snr_db_range.step")
        if not math.isfinite(self.gamma_th_db):
            raise DomainError("gamma_th_db must be finite", param="gamma_th_db")
        if int(self.n_samples) != self.n_samples or self.n_samples < 1000:
            raise DomainError("n_samples must be an integer >= 1000", param="n_samples")
        if int(self.workers) != self.workers or self.workers < 1:
            raise DomainError("workers must be an integer >= 1", param="workers")
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "workers", int(self.workers))
        object.__setattr__(self, "seed", int(self.seed))

    def snr_grid_db(self) -> np.ndarray:
        lo, hi, step = self.snr_db_range
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(count)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha0_list"] = list(self.alpha0_list)
        d["n_irs_list"] = list(self.n_irs_list)
        d["snr_db_range"] = list(self.snr_db_range)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {"alpha0_list", "n_irs_list", "snr_db_range", "gamma_th_db", "n_samples", "seed", "workers"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise DomainError(f"unknown config field(s): {', '.join(unknown)}", param=unknown[0])
        return cls(**d)


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    op_analytic: float
    op_mc: float
    op_mc_stderr: float
    ec_analytic: float
    ec_mc: float
    ec_mc_stderr: float


@dataclass(frozen=True)
class CurveRow:
    alpha0: float
    n_irs: int
    point: CurvePoint

    def as_dict(self) -> dict:
        return {"alpha0": self.alpha0, "n_irs": self.n_irs, **asdict(self.point)}


def cell_seed(seed: int, alpha0: float, n_irs: int) -> np.random.SeedSequence:
    """Stream for one grid cell, keyed by its coordinates rather than its position."""
    return np.random.SeedSequence(int(seed), spawn_key=(int(round(alpha0 * 1e12)), int(n_irs)))


def curve_cell(alpha0: float, n_irs: int, config: ExperimentConfig, workers: int | None = None):
    """CurvePoints for one (alpha0, n_irs) cell."""
    pair = solver.equal_channel_params(alpha0)
    model = IrsLinkModel(pair, n_irs)
    ga = irs_link.gamma_approx(model)
    w = config.workers if workers is None else workers
    h = irs_link.sample_sum(model, cell_seed(config.seed, alpha0, n_irs), config.n_samples, workers=w)
    # unit-SNR image; scaled by gbar per point
    x = np.square(h) / model.second_moment
    n = x.size
    gamma_th = float(db_to_linear(config.gamma_th_db))
    points = []
    for snr_db in config.snr_grid_db():
        gbar = float(db_to_linear(snr_db))
        p = float(np.count_nonzero(gbar * x < gamma_th)) / n
        cap = np.log1p(gbar * x) / math.log(2.0)
        points.append(
            CurvePoint(
                snr_db=float(snr_db),
                op_analytic=float(irs_link.outage_exact_approx(ga, gbar, gamma_th)),
                op_mc=p,
                op_mc_stderr=math.sqrt(p * (1.0 - p) / n),
                ec_analytic=irs_link.ergodic_capacity_approx(ga, gbar),
                ec_mc=float(np.mean(cap)),
                ec_mc_stderr=float(np.std(cap, ddof=1) / math.sqrt(n)),
            )
        )
    return points


def _cell_file(checkpoint_dir, alpha0, n_irs):
    return os.path.join(checkpoint_dir, f"cell_{alpha0!r}_{n_irs}.json")


def _run_cell(alpha0, n_irs, config, checkpoint_dir):
    if checkpoint_dir is not None:
        path = _cell_file(checkpoint_dir, alpha0, n_irs)
        if os.path.exists(path):
            with open(path, encoding="utf-8") as fh:
                saved = json.load(fh)
            if saved.get("config") == config.to_dict():
                return [CurvePoint(**p) for p in saved["points"]]
    try:
        points = curve_cell(alpha0, n_irs, config)
    except (DomainError, NonConvergenceError) as exc:
        raise type(exc)(f"cell alpha0={alpha0!r}, n_irs={n_irs}: {exc}") from exc
    if checkpoint_dir is not None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump({"config": config.to_dict(), "points": [asdict(p) for p in points]}, fh)
        os.replace(tmp, path)
    return points


def run_curves(config: ExperimentConfig, checkpoint_dir: str | None = None) -> list[CurveRow]:
    """Analytic and MC outage / capacity for every grid cell.

    Rows are sorted by (alpha0, n_irs, snr_db).  With ``checkpoint_dir`` set,
    finished cells are saved there and reused when the config is unchanged,
    so an interrupted run can be resumed.
    """
    if checkpoint_dir is not None:
        os.makedirs(checkpoint_dir, exist_ok=True)
    cells = sorted({(a, n) for a in config.alpha0_list for n in config.n_irs_list})
    if config.workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=min(config.workers, len(cells))) as pool:
            results = list(pool.map(lambda c: _run_cell(c[0], c[1], config, checkpoint_dir), cells))
    else:
        results = [_run_cell(a, n, config, checkpoint_dir) for a, n in cells]
    rows = []
    for (a, n), points in zip(cells, results):
        rows.extend(CurveRow(a, n, p) for p in points)
    return rows


# ----------------------------------------------------------------------------
# Output
# ----------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))


def curves_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        d = row.as_dict()
        writer.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def curves_to_json(rows) -> str:
    return json.dumps([row.as_dict() for row in rows], indent=1) + "\n"


def metadata(config: ExperimentConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_dict(),
        "seed": config.seed,
        "workers": config.workers,
        "code_version": code_version(),
    }


def write_curves(rows, config: ExperimentConfig, path: str, fmt: str = "csv") -> str:
    """Write the table and a ``<path>.meta.json`` sidecar; returns the sidecar path."""
    text = curves_to_csv(rows) if fmt == "csv" else curves_to_json(rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    meta_path = path + ".meta.json"
    with open(meta_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(metadata(config), indent=1) + "\n")
    return meta_path


# ----------------------------------------------------------------------------
# Approximation tightness
# ----------------------------------------------------------------------------

def ks_statistic(sorted_samples: np.ndarray, cdf_values: np.ndarray) -> float:
    """Two-sided KS distance between an empirical CDF and model CDF values at its sorted points."""
    n = sorted_samples.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf_values), np.max(cdf_values - (i - 1) / n)))


def ks_critical(n: int, level: float = 0.01) -> float:
    """Asymptotic one-sample KS critical value sqrt(-ln(level / 2) / 2) / sqrt(n)."""
    return math.sqrt(-0.5 * math.log(level / 2.0)) / math.sqrt(n)


def ks_exact_vs_gamma(model: IrsLinkModel, points: int = 400) -> float:
    """sup |F_exact - F_gamma| over a log grid spanning the bulk of the law."""
    ga = irs_link.gamma_approx(model)
    h = ga.mean_h * np.logspace(-3.0, math.log10(20.0), points)
    return float(np.max(np.abs(irs_link.sum_cdf_numeric(model, h) - irs_link.sum_cdf_approx(ga, h))))


@dataclass(frozen=True)
class TightnessRow:
    n_irs: int
    alpha_hat: float
    ks_envelope: float
    ks_snr: float
    ks_exact_law: float | None
    ks_gamma_vs_exact: float | None
    ks_critical: float


@dataclass(frozen=True)
class TightnessReport:
    rows: tuple
    n_samples: int
    seed: int

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "rows": [asdict(r) for r in self.rows],
        }


def validate_approx(
    pair: CascadePair, n_irs_list, n_samples: int, seed: int, exact: bool = True, probes: int = 2000
) -> TightnessReport:
    """KS distances of the Gamma approximation for each element count.

    ``ks_envelope`` compares the sampled h with the fitted Gamma CDF and
    ``ks_snr`` the sampled SNR with the approximate SNR CDF.  With ``exact``
    set, the sample is also compared with the Gil-Pelaez CDF at ``probes``
    evenly spaced order statistics, and the Gamma CDF with the Gil-Pelaez CDF
    directly (no sampling noise).
    """
    rows = []
    for n_irs in n_irs_list:
        model = IrsLinkModel(pair, int(n_irs))
        ga = irs_link.gamma_approx(model)
        h = np.sort(irs_link.sample_sum(model, cell_seed(seed, 0.0, n_irs), n_samples))
        ks_env = ks_statistic(h, irs_link.sum_cdf_approx(ga, h))
        snr = irs_link.snr_from_envelope(model, h, 1.0)
        ks_snr = ks_statistic(snr, irs_link.snr_cdf_approx(ga, 1.0, snr))
        ks_law = ks_gap = None
        if exact:
            idx = np.unique(np.linspace(0, h.size - 1, min(probes, h.size)).astype(int))
            f = irs_link.sum_cdf_numeric(model, h[idx])
            ks_law = float(max(np.max((idx + 1) / h.size - f), np.max(f - idx / h.size)))
            ks_gap = ks_exact_vs_gamma(model)
        rows.append(
            TightnessRow(int(n_irs), ga.alpha_hat, ks_env, ks_snr, ks_law, ks_gap, ks_critical(h.size))
        )
    return TightnessReport(tuple(rows), int(n_samples), int(seed))
