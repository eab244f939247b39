"""Size and power experiments with moment-matched AR(1) and squared ARCH(1) pairs.

The two models share mean and autocovariances, so a covariance-based test
cannot tell them apart.  Each experiment simulates series under the null and
the alternative, applies the goodness-of-fit test against the null tables and
records rejection frequencies with their binomial standard errors.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from importlib import resources

import numpy as np
from scipy.stats import norm

from .bootstrap import bootstrap_samples, spectral_matrix_set
from .estimator import estimate_qsd
from .gof import null_moments, q_statistic_lag
from .indicators import default_levels
from .lag_window import LagWindow
from .null_models import (
    MCConfig,
    NullModel,
    SquaredARCH1,
    matched_ar1_for_squared_arch,
    null_tables,
    simulate,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentPlan",
    "RejectionTable",
    "model_pair",
    "run_experiment",
    "table_plan",
    "reproduce_table",
    "published_value",
]

METHODS = ("normal", "bootstrap")
CSV_COLUMNS = ("a", "M", "method", "alpha", "hypothesis", "rate", "se", "reps", "paper_value")

# (null family, T, M values) of the four published tables
TABLE_LAYOUT = {
    1: ("ar1", 100, (11, 16, 21, 25)),
    2: ("ar1", 500, (14, 21, 28, 35)),
    3: ("squared_arch1", 100, (11, 16, 21, 25)),
    4: ("squared_arch1", 500, (14, 21, 28, 35)),
}
TABLE_A_VALUES = (0.3, 0.4, 0.5, 0.55)


def model_pair(null: str, a: float, a0: float = 0.4):
    """``(null_model, alt_model)`` for the matched pair at parameter ``a``.

    ``null="ar1"`` tests the AR(1) against squared ARCH data; ``"squared_arch1"``
    reverses the roles.
    """
    arch = SquaredARCH1(a0=a0, a=a)
    ar = matched_ar1_for_squared_arch(a0, a)
    if null == "ar1":
        return ar, arch
    if null == "squared_arch1":
        return arch, ar
    raise ValueError(f"unknown null family {null!r}")


@dataclass(frozen=True)
class ExperimentPlan:
    """A grid of cells ``(a, M)`` at a fixed sample size.

    ``null`` names the null family of :func:`model_pair`; alternatively give
    ``null_model`` and ``alt_model`` explicitly (then ``a_values`` only labels rows).
    """

    null: str = "ar1"
    a_values: tuple = (0.5,)
    M_values: tuple = (11,)
    T: int = 100
    alphas: tuple = (0.1, 0.05)
    reps: int = 200
    methods: tuple = METHODS
    bootstrap_reps: int = 500
    master_seed: int = 20120512
    a0: float = 0.4
    levels: tuple | None = None
    window: str = "bartlett"
    mc_config: MCConfig = field(default_factory=MCConfig)
    null_model: NullModel | None = None
    alt_model: NullModel | None = None

    def __post_init__(self):
        if self.reps < 50:
            raise ValueError(f"reps must be at least 50, got {self.reps}")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        if (self.null_model is None) != (self.alt_model is None):
            raise ValueError("give both null_model and alt_model or neither")

    def models(self, a: float):
        if self.null_model is not None:
            return self.null_model, self.alt_model
        return model_pair(self.null, a, self.a0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mc_config"] = asdict(self.mc_config)
        d["null_model"] = None if self.null_model is None else self.null_model.to_dict()
        d["alt_model"] = None if self.alt_model is None else self.alt_model.to_dict()
        return d


@dataclass
class RejectionTable:
    """Rejection rates keyed by ``(a, M, method, alpha, hypothesis)``."""

    rows: list = field(default_factory=list)
    plan: dict = field(default_factory=dict)

    def add(self, a, M, method, alpha, hypothesis, rate, reps, paper_value=None):
        se = float(np.sqrt(rate * (1 - rate) / reps))
        self.rows.append({"a": a, "M": M, "method": method, "alpha": alpha, "hypothesis": hypothesis,
                          "rate": float(rate), "se": se, "reps": int(reps), "paper_value": paper_value})

    def get(self, a, M, method, alpha, hypothesis) -> dict:
        for row in self.rows:
            if (np.isclose(row["a"], a) and row["M"] == M and row["method"] == method
                    and np.isclose(row["alpha"], alpha) and row["hypothesis"] == hypothesis):
                return row
        raise KeyError((a, M, method, alpha, hypothesis))

    def rate(self, a, M, method, alpha, hypothesis) -> float:
        return self.get(a, M, method, alpha, hypothesis)["rate"]

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in CSV_COLUMNS})
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def format(self) -> str:
        """Plain-text side-by-side view of reproduced and published rates."""
        lines = [f"{'a':>5} {'M':>3} {'method':>9} {'alpha':>5} {'hyp':>3} {'rate':>6} {'se':>6} {'published':>9}"]
        for r in self.rows:
            pv = "" if r["paper_value"] is None else f"{r['paper_value']:.3f}"
            lines.append(f"{r['a']:>5} {r['M']:>3} {r['method']:>9} {r['alpha']:>5} {r['hypothesis']:>3} "
                         f"{r['rate']:>6.3f} {r['se']:>6.3f} {pv:>9}")
        return "\n".join(lines)


def _load_published():
    text = resources.files("qspec").joinpath("data/published_tables.json").read_text()
    return {int(k): v for k, v in json.loads(text).items()}


_PUBLISHED = None


def published_value(table_id: int, a, M, method, alpha, hypothesis):
    """Published rejection rate of a cell, or ``None`` when the cell is not tabulated."""
    global _PUBLISHED
    if _PUBLISHED is None:
        _PUBLISHED = _load_published()
    for row in _PUBLISHED.get(int(table_id), ()):
        if (np.isclose(row["a"], a) and row["M"] == M and row["method"] == method
                and np.isclose(row["alpha"], alpha) and row["hypothesis"] == hypothesis):
            return row["value"]
    return None


def _cell_statistics(plan: ExperimentPlan, a: float, M: int, cell_seed: np.random.SeedSequence):
    """Test statistics and p-values of one cell for both hypotheses."""
    null_model, alt_model = plan.models(a)
    levels = default_levels() if plan.levels is None else np.asarray(plan.levels, dtype=float)
    window = LagWindow(plan.window, M)
    tables = null_tables(null_model, levels, M, plan.mc_config)
    E, V = null_moments(tables, window, plan.T)
    s_h0, s_ha, s_boot = cell_seed.spawn(3)
    boot = None
    if "bootstrap" in plan.methods:
        mset = spectral_matrix_set(tables.spectrum(plan.T))
        boot = np.sort(bootstrap_samples(mset, window, tables.grid.weights, plan.bootstrap_reps,
                                         s_boot, C0=tables.lags(M)))
    out = {}
    for hyp, model, ss in (("H0", null_model, s_h0), ("HA", alt_model, s_ha)):
        Q = np.empty(plan.reps)
        for i, child in enumerate(ss.spawn(plan.reps)):
            x = simulate(model, plan.T, np.random.default_rng(child))
            Q[i] = q_statistic_lag(estimate_qsd(x, tables.grid, window), tables)
        p = {"normal": norm.sf((Q - E) / np.sqrt(V))}
        if boot is not None:
            exceed = boot.size - np.searchsorted(boot, Q, side="left")
            p["bootstrap"] = (1 + exceed) / (boot.size + 1)
        out[hyp] = p
    return out


def run_experiment(plan: ExperimentPlan, table_id: int | None = None, n_jobs: int = 1) -> RejectionTable:
    """Rejection rates for every feasible cell of ``plan``.

    Seeds follow the tree master -> cell ``(a, M)`` -> hypothesis -> replicate,
    so results do not depend on ``n_jobs``.
    """
    cells = []
    for ia, a in enumerate(plan.a_values):
        if plan.null_model is None and not 3 * a**2 < 1:
            logger.warning("skipping a=%s: 3a^2 >= 1, the squared ARCH has no finite variance", a)
            continue
        for iM, M in enumerate(plan.M_values):
            if 2 * M >= plan.T:
                logger.warning("skipping M=%s: need 2M < T=%s", M, plan.T)
                continue
            cells.append((a, M, np.random.SeedSequence(plan.master_seed, spawn_key=(ia, iM))))
    if n_jobs == 1:
        results = [_cell_statistics(plan, a, M, ss) for a, M, ss in cells]
    else:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=n_jobs)(delayed(_cell_statistics)(plan, a, M, ss) for a, M, ss in cells)
    table = RejectionTable(plan=plan.to_dict())
    for (a, M, _), res in zip(cells, results):
        for alpha in plan.alphas:
            for method in plan.methods:
                for hyp in ("H0", "HA"):
                    rate = float(np.mean(res[hyp][method] < alpha))
                    pv = None if table_id is None else published_value(table_id, a, M, method, alpha, hyp)
                    table.add(a, M, method, alpha, hyp, rate, plan.reps, pv)
    return table


def table_plan(table_id: int, reps: int = 200, **overrides) -> ExperimentPlan:
    """Plan covering the full grid of one of the four published tables."""
    if table_id not in TABLE_LAYOUT:
        raise ValueError(f"unknown table id {table_id}; expected one of {sorted(TABLE_LAYOUT)}")
    null, T, Ms = TABLE_LAYOUT[table_id]
    base = ExperimentPlan(null=null, a_values=TABLE_A_VALUES, M_values=Ms, T=T, reps=reps)
    return replace(base, **overrides)


def reproduce_table(table_id: int, reps_override: int | None = None, n_jobs: int = 1, **overrides) -> RejectionTable:
    """Re-run a published table (desk scale: 200 replications unless overridden)."""
    plan = table_plan(table_id, reps=reps_override or 200, **overrides)
    return run_experiment(plan, table_id=table_id, n_jobs=n_jobs)
