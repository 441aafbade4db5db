"""Ground-state preparation cost for a two-level system.

Covers the analytic side (binomial mixture of ancilla statistics, the
concentration intervals and the separation condition that gives the
``(gap * t)^-2`` law) and the Monte Carlo side (the bounded
reflect/absorb walk, the mismatched-gap variant and the optimal refresh
schedule used to fit the cost constant ``c1``).

Convention throughout: ground energy ``E0 = -gap``, excited ``E1 = 0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy.stats import binom

from . import _fastpath as fp
from ._validation import ValidationError, check_positive_int, check_probability

DEFAULT_C1 = 2.7


@dataclass(frozen=True)
class TwoLevelModel:
    e0: float
    e1: float
    p: float
    t: float = 1.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.e1 > self.e0:
            raise ValidationError(f"need E0 < E1, got E0={self.e0}, E1={self.e1}")
        check_probability(self.p, "p")

    @classmethod
    def from_gap(cls, gap: float, p: float, t: float = 1.0, gamma: float = 0.0) -> "TwoLevelModel":
        return cls(-float(gap), 0.0, p, t, gamma)

    @property
    def gap(self) -> float:
        return self.e1 - self.e0

    @property
    def a(self) -> float:
        return 0.5 * math.sin(self.e0 * self.t - self.gamma)

    @property
    def b(self) -> float:
        return 0.5 * math.sin(self.e1 * self.t - self.gamma)

    def factors(self) -> tuple[float, float, float, float]:
        """(c0, c1, h0, h1): cool/heat multipliers of the ground and excited weights."""
        s0 = 2 * self.a
        s1 = 2 * self.b
        return 1 - s0, 1 - s1, 1 + s0, 1 + s1


def mixture_pmf(model: TwoLevelModel, k: int) -> np.ndarray:
    """P(j zeros in k feedback-free modules), j = 0..k.

    ``binom.pmf`` evaluates each term without forming factorials, so it
    neither overflows nor loses digits at large k; going through
    ``exp(logpmf)`` costs about 1e-9 in normalization at k = 1e6.
    """
    if k < 0:
        raise ValidationError("k must be non-negative")
    j = np.arange(k + 1)
    ground = binom.pmf(j, k, 0.5 - model.a)
    excited = binom.pmf(j, k, 0.5 - model.b)
    return model.p * ground + (1 - model.p) * excited


def concentration_intervals(model: TwoLevelModel, k: int) -> tuple[tuple[float, float], tuple[float, float]]:
    """One-standard-deviation windows of #zeros for the ground and excited binomials."""
    k = check_positive_int(k, "k")

    def window(c):
        mid = k * (0.5 - c)
        half = math.sqrt(k) * math.sqrt(0.25 - c * c)
        return mid - half, mid + half

    return window(model.a), window(model.b)


def separation_satisfied(model: TwoLevelModel, k: int) -> bool:
    """Strict disjointness: excited window lies entirely below the ground window."""
    (g_lo, _), (_, e_hi) = concentration_intervals(model, k)
    return e_hi < g_lo


def separation_threshold(model: TwoLevelModel, k_max: int = 10**15) -> int | None:
    """Smallest k satisfying the separation condition, or None below ``k_max``.

    The condition is monotone in k (it reads sqrt(k)(b - a) > const), so an
    exponential bracket followed by bisection finds the switch point.
    """
    hi = 1
    while not separation_satisfied(model, hi):
        hi *= 2
        if hi > k_max:
            return None
    lo = hi // 2
    if lo < 1:
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if separation_satisfied(model, mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class Costs:
    pred: int
    c_bound: int
    c_abs: int


def predicted_costs(gap: float, t: float, p: float, c1: float = DEFAULT_C1) -> Costs:
    """Step budget ``c1 / ((gap t)^2 p)``, its 3x cap and the absorbing position.

    The absorbing wall sits at the expected drift after ``pred`` steps,
    ``pred * |sin(E0 t)|`` with ``E0 = -gap``.  All three are rounded to the
    nearest integer from the unrounded prediction.
    """
    if not gap * t > 0:
        raise ValidationError("gap * t must be positive")
    check_probability(p, "p", open_low=True)
    pred = c1 / ((gap * t) ** 2 * p)
    return Costs(round(pred), round(3 * pred), round(pred * abs(math.sin(-gap * t))))


@dataclass(frozen=True)
class MCConfig:
    model: TwoLevelModel
    n_samples: int
    master_seed: int = 0
    c1: float = DEFAULT_C1
    reflect_threshold: int = 0
    filter_bound_reachers: bool = False
    assumed_gap: float | None = None
    n_jobs: int = 1

    def __post_init__(self):
        check_positive_int(self.n_samples, "n_samples")
        if self.assumed_gap is not None and not self.assumed_gap > 0:
            raise ValidationError("assumed gap must be positive")

    @property
    def costs(self) -> Costs:
        gap = self.model.gap if self.assumed_gap is None else self.assumed_gap
        return predicted_costs(gap, self.model.t, self.model.p, self.c1)


@dataclass(frozen=True)
class MCSummary:
    mean_fidelity: float
    sample_std: float
    error_bar: float
    fraction_reached_bound: float
    n_samples: int
    n_counted: int
    steps_mean: float
    steps_median: float
    steps_max: int
    gap: float
    assumed_gap: float
    t: float
    p: float
    c1: float
    pred: int
    c_bound: int
    c_abs: int
    seed: int
    filtered: bool

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> list:
        return [
            self.gap, self.t, self.p, self.c1, self.pred, self.c_bound, self.c_abs,
            self.n_samples, self.mean_fidelity, self.error_bar, self.fraction_reached_bound, self.seed,
        ]


SWEEP_HEADER = [
    "gap", "t", "p", "c1", "pred", "c_bound", "c_abs",
    "n_samples", "mean_fidelity", "error_bar", "fraction_bound", "seed",
]


def error_bar(sample_std: float, n: int) -> float:
    """Half-width of the 95% normal interval for a sample mean."""
    return 1.96 * sample_std / math.sqrt(n)


def _mean_std(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return math.nan, math.nan
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def _parallel_map(fn, n: int, n_jobs: int) -> list:
    if n_jobs <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, range(n), chunksize=max(1, n // (8 * n_jobs))))


@dataclass(frozen=True)
class BoundedRuns:
    """Raw per-trajectory output of the bounded walk, before any filtering."""

    config: MCConfig
    status: np.ndarray
    fidelity: np.ndarray
    steps: np.ndarray

    def summary(self, filter_bound_reachers: bool | None = None) -> MCSummary:
        cfg = self.config
        filt = cfg.filter_bound_reachers if filter_bound_reachers is None else filter_bound_reachers
        keep = self.status == fp.ABSORBED if filt else np.ones(len(self.status), dtype=bool)
        mean, std = _mean_std(self.fidelity[keep])
        n_counted = int(keep.sum())
        costs = cfg.costs
        return MCSummary(
            mean_fidelity=mean,
            sample_std=std,
            error_bar=error_bar(std, n_counted) if n_counted else math.nan,
            fraction_reached_bound=float(np.mean(self.status == fp.BOUND)),
            n_samples=cfg.n_samples,
            n_counted=n_counted,
            steps_mean=math.fsum(self.steps) / len(self.steps),
            steps_median=float(np.median(self.steps)),
            steps_max=int(self.steps.max()),
            gap=cfg.model.gap,
            assumed_gap=cfg.model.gap if cfg.assumed_gap is None else cfg.assumed_gap,
            t=cfg.model.t,
            p=cfg.model.p,
            c1=cfg.c1,
            pred=costs.pred,
            c_bound=costs.c_bound,
            c_abs=costs.c_abs,
            seed=cfg.master_seed,
            filtered=filt,
        )


def simulate_bounded(config: MCConfig) -> BoundedRuns:
    """Run every trajectory of the reflect/absorb/bound walk.

    Trajectory i draws from ``default_rng([master_seed, i])``; the result is
    independent of ``n_jobs``.
    """
    costs = config.costs
    if costs.c_bound <= 0 or costs.c_abs <= 0:
        raise ValidationError(f"c_bound and c_abs must be positive, got {costs}")
    m = config.model
    c0, c1, h0, h1 = m.factors()

    def one(i: int):
        rng = np.random.default_rng([config.master_seed, i])
        g, x, n = m.p, 0, 0
        for u in fp.uniform_blocks(rng):
            status, g, x, n = fp.bounded_walk(
                u, g, x, n, m.p, c0, c1, h0, h1, costs.c_abs, costs.c_bound, config.reflect_threshold
            )
            if status != fp.RUNNING:
                return status, g, n

    out = _parallel_map(one, config.n_samples, config.n_jobs)
    status, fid, steps = (np.array(col) for col in zip(*out))
    return BoundedRuns(config, status.astype(int), fid.astype(float), steps.astype(np.int64))


def run_bounded_mc(config: MCConfig) -> MCSummary:
    return simulate_bounded(config).summary()


def run_mismatched_bounds_mc(true_gap: float, assumed_gap: float, config: MCConfig) -> MCSummary:
    """Dynamics use ``true_gap``; pred, c_bound and c_abs are derived from ``assumed_gap``."""
    if not (true_gap > 0 and assumed_gap > 0):
        raise ValidationError("both gaps must be positive")
    m = config.model
    model = TwoLevelModel.from_gap(true_gap, m.p, m.t, m.gamma)
    return run_bounded_mc(replace(config, model=model, assumed_gap=assumed_gap))


def sample_free_walk(model: TwoLevelModel, k: int, n_samples: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Feedback-free sequential measurement: (#zeros, final ground population) per sample."""
    c0, c1, h0, h1 = model.factors()
    zeros = np.empty(n_samples, dtype=np.int64)
    final = np.empty(n_samples)
    for i in range(n_samples):
        rng = np.random.default_rng([seed, i])
        zeros[i], final[i] = fp.free_walk(rng.random(k), model.p, c0, c1, h0, h1)
    return zeros, final


@dataclass(frozen=True)
class RefreshResult:
    model: TwoLevelModel
    target: float
    stopping_times: np.ndarray
    seed: int

    @property
    def mean(self) -> float:
        return math.fsum(self.stopping_times) / len(self.stopping_times)

    @property
    def stderr(self) -> float:
        return _mean_std(self.stopping_times.astype(float))[1] / math.sqrt(len(self.stopping_times))

    @property
    def scale(self) -> float:
        """1 / ((gap t)^2 p), the predicted cost up to the constant c1."""
        return 1.0 / ((self.model.gap * self.model.t) ** 2 * self.model.p)

    @property
    def c1(self) -> float:
        return self.mean / self.scale


def run_optimal_refresh_mc(
    model: TwoLevelModel,
    n_samples: int,
    master_seed: int,
    target: float = 0.99,
    n_jobs: int = 1,
    max_steps: int = 10**10,
) -> RefreshResult:
    """Stopping times of the refresh schedule.

    The state is replaced by the initial one whenever its ground population
    falls below the initial population; a run succeeds once the ground
    population reaches ``target``.
    """
    if not 0 < model.p < 1:
        raise ValidationError("refresh schedule needs 0 < p < 1")
    check_positive_int(n_samples, "n_samples")
    c0, c1, h0, h1 = model.factors()

    def one(i: int) -> int:
        rng = np.random.default_rng([master_seed, i])
        g, n = model.p, 0
        for u in fp.uniform_blocks(rng):
            status, g, n = fp.refresh_walk(u, g, n, model.p, c0, c1, h0, h1, target, max_steps)
            if status != fp.RUNNING:
                return n

    times = np.array(_parallel_map(one, n_samples, n_jobs), dtype=np.int64)
    return RefreshResult(model, target, times, master_seed)


@dataclass(frozen=True)
class C1Fit:
    c1: float
    cell_c1: tuple[float, ...]
    max_relative_deviation: float
    method: str


def fit_c1(results: list[RefreshResult], method: str = "relative") -> C1Fit:
    """Fit ``mean stopping time = c1 / ((gap t)^2 p)`` across a sweep.

    ``relative`` minimizes squared residuals of the scaled times
    ``T_i / X_i`` (every cell weighted equally); ``absolute`` is ordinary
    least squares through the origin on ``T_i`` against ``X_i``, which is
    dominated by the most expensive cell.
    """
    T = np.array([r.mean for r in results])
    X = np.array([r.scale for r in results])
    if method == "relative":
        c1 = float(np.mean(T / X))
    elif method == "absolute":
        c1 = float(np.dot(T, X) / np.dot(X, X))
    else:
        raise ValidationError(f"unknown fit method {method!r}")
    cells = T / X
    return C1Fit(c1, tuple(float(c) for c in cells), float(np.max(np.abs(cells / c1 - 1))), method)
