"""Seeded, chunked Monte Carlo runs and the table reproducers.

Every repetition ``r`` of a run is split into chunks of ``chunk_size`` draws,
and chunk ``c`` draws from ``RngStream(seed).substream(r).substream(c)``.
A chunk is always drawn in full and then truncated to the draws still
needed, so two runs that share (seed, chunk_size) see the same prefix of
draws whatever their budgets. The running maximum reduces associatively,
so results do not depend on how many workers execute the chunks.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import bounds
from .distributions import LinearMap
from .errors import BudgetExceededError
from .grids import SobolSpec, mesh_from_budget, sobol_max_sum
from .sampling import BLOCK_SIZE, BallKind, RngStream, sample_ball_batch

DEFAULT_SEED = 12345
DEFAULT_MAX_DRAWS = 10**9
SCATTER_CAP = 10**5
TABLE_DIMS = (1, 2, 3, 4, 5, 10, 15)
TABLE2_DIMS = (2, 3, 4, 5, 10, 15, 20)


def axis_objective(n: int, axis: int = 0) -> np.ndarray:
    c = np.zeros(n)
    c[axis] = 1.0
    return c


def diagonal_objective(n: int) -> np.ndarray:
    """The raw sum of coordinates; its maximum over the box is n."""
    return np.ones(n)


def _dual_norm(kind: BallKind, c: np.ndarray) -> float:
    # max of c^T x over the unit ball of ``kind``
    if kind is BallKind.L2:
        return float(np.linalg.norm(c))
    if kind is BallKind.LINF:
        return float(np.abs(c).sum())
    return float(np.abs(c).max())


@dataclass(frozen=True)
class ExperimentSpec:
    ball: BallKind
    n: int
    count: int
    objective: np.ndarray | None = None  # defaults to e_1 (scalar runs)
    seed: int = DEFAULT_SEED
    repetitions: int = 1
    chunk_size: int | None = None  # defaults to min(count, BLOCK_SIZE)
    max_draws: int = DEFAULT_MAX_DRAWS
    workers: int = 1
    scatter: int = 0

    def __post_init__(self):
        object.__setattr__(self, "ball", BallKind.parse(self.ball))
        if self.n < 1:
            raise ValueError(f"dimension must be >= 1, got {self.n}")
        if self.count < 1 or self.repetitions < 1:
            raise ValueError("need N >= 1 and R >= 1")
        obj = axis_objective(self.n) if self.objective is None else np.asarray(self.objective, dtype=float)
        if obj.shape[-1] != self.n or obj.ndim > 2:
            raise ValueError(f"objective must have {self.n} columns")
        if not np.all(np.isfinite(obj)) or np.any(np.linalg.norm(np.atleast_2d(obj), axis=1) == 0):
            raise ValueError("objective rows must be finite and nonzero")
        object.__setattr__(self, "objective", obj)
        chunk = min(self.count, BLOCK_SIZE) if self.chunk_size is None else self.chunk_size
        if chunk < 1:
            raise ValueError("chunk_size must be >= 1")
        object.__setattr__(self, "chunk_size", chunk)
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if not 0 <= self.scatter <= SCATTER_CAP:
            raise ValueError(f"scatter must be in [0, {SCATTER_CAP}]")
        if self.planned_draws > self.max_draws:
            raise BudgetExceededError(
                f"run would draw {self.planned_draws} points, above the cap {self.max_draws}"
            )

    @property
    def chunks(self) -> int:
        return -(-self.count // self.chunk_size)

    @property
    def planned_draws(self) -> int:
        return self.repetitions * self.chunks * self.chunk_size

    def chunk_stream(self, rep: int, chunk: int) -> RngStream:
        return RngStream(self.seed).substream(rep).substream(chunk)


@dataclass
class SampleStats:
    """Per-repetition maxima of a run.

    For scalar runs ``maxima`` holds max c^T x; for image runs it holds the
    max squared image norm eta, and ``boundary_proximity`` its square root.
    """

    maxima: np.ndarray
    true_max: float
    threshold: float | None = None
    wall_time: float = 0.0
    boundary_proximity: np.ndarray | None = None
    scatter: np.ndarray | None = field(default=None, repr=False)

    @property
    def repetitions(self) -> int:
        return self.maxima.size

    @property
    def empirical_max(self) -> float:
        return float(self.maxima.max())

    @property
    def mean_max(self) -> float:
        return float(self.maxima.mean())

    @property
    def std_max(self) -> float:
        return float(self.maxima.std(ddof=1)) if self.maxima.size > 1 else 0.0

    @property
    def success_count(self) -> int | None:
        if self.threshold is None:
            return None
        return int(np.count_nonzero(self.maxima > self.threshold))

    def as_dict(self) -> dict:
        out = {
            "repetitions": self.repetitions,
            "empirical_max": self.empirical_max,
            "mean_max": self.mean_max,
            "std_max": self.std_max,
            "true_max": self.true_max,
            "threshold": self.threshold,
            "success_count": self.success_count,
            "wall_time": self.wall_time,
            "maxima": self.maxima.tolist(),
        }
        if self.boundary_proximity is not None:
            out["boundary_proximity"] = self.boundary_proximity.tolist()
        return out


def _chunk_values(spec: ExperimentSpec, rep: int, chunk: int, take: int, image: bool):
    """Objective values (and raw images for scatter) of one chunk, truncated to ``take`` rows."""
    gen = spec.chunk_stream(rep, chunk).generator()
    c = spec.objective
    if spec.ball is BallKind.LINF and not image:
        # same stream as sample_ball_batch: x = 2u - 1, so c^T x = u^T (2c) - sum(c)
        u = gen.random((spec.chunk_size, spec.n))[:take]
        return u @ (2.0 * c) - c.sum(), None
    x = sample_ball_batch(spec.ball, spec.n, spec.chunk_size, gen)[:take]
    if not image:
        return x @ c, None
    y = x @ c.T
    return np.einsum("ij,ij->i", y, y), y


def _run(spec: ExperimentSpec, image: bool, threshold: float | None, true_max: float) -> SampleStats:
    want_scatter = image and spec.scatter > 0
    scatter = []

    def one_rep(rep: int) -> float:
        best = -math.inf
        for chunk in range(spec.chunks):
            take = min(spec.chunk_size, spec.count - chunk * spec.chunk_size)
            vals, imgs = _chunk_values(spec, rep, chunk, take, image)
            best = max(best, float(vals.max()))
            if want_scatter and rep == 0:
                have = sum(len(s) for s in scatter)
                if have < spec.scatter:
                    scatter.append(imgs[: spec.scatter - have])
        return best

    start = time.perf_counter()
    if want_scatter:
        # repetition 0 collects the scatter, so keep it on this thread
        maxima = [one_rep(0)]
        reps = range(1, spec.repetitions)
    else:
        maxima, reps = [], range(spec.repetitions)
    if spec.workers == 1:
        maxima += [one_rep(r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            maxima += list(pool.map(one_rep, reps))
    stats = SampleStats(
        maxima=np.array(maxima),
        true_max=true_max,
        threshold=threshold,
        wall_time=time.perf_counter() - start,
    )
    if image:
        stats.boundary_proximity = np.sqrt(stats.maxima)
        if want_scatter:
            stats.scatter = np.vstack(scatter)
    return stats


def run_empirical_max(spec: ExperimentSpec, threshold: float | None = None) -> SampleStats:
    """Empirical maximum of c^T x over N uniform draws, per repetition."""
    if spec.objective.ndim != 1:
        raise ValueError("run_empirical_max needs a single objective row")
    return _run(spec, False, threshold, _dual_norm(spec.ball, spec.objective))


def run_image2d(spec: ExperimentSpec, threshold: float | None = None) -> SampleStats:
    """Max squared norm of the 2D images (c_1^T x, c_2^T x) over N draws from the n-ball.

    ``threshold`` applies to the squared norm; ``spec.scatter`` keeps the
    first K images of repetition 0.
    """
    if spec.ball is not BallKind.L2:
        raise ValueError("image runs are defined on the l2 ball")
    if spec.objective.shape != (2, spec.n) or not LinearMap(spec.objective).is_orthonormal(1e-10):
        raise ValueError("image runs need a 2 x n objective with orthonormal rows")
    return _run(spec, True, threshold, 1.0)


def default_image_objective(n: int) -> np.ndarray:
    if n < 2:
        raise ValueError("image runs need n >= 2")
    return np.vstack([axis_objective(n, 0), axis_objective(n, 1)])


@dataclass(frozen=True)
class CalibrationRecord:
    empirical: float
    predicted: float
    sigma: float
    successes: int
    repetitions: int

    @property
    def band(self) -> float:
        return 3.0 * self.sigma

    @property
    def agree(self) -> bool:
        return abs(self.empirical - self.predicted) <= self.band

    def as_dict(self) -> dict:
        return {
            "empirical": self.empirical,
            "predicted": self.predicted,
            "sigma": self.sigma,
            "band": self.band,
            "agree": self.agree,
            "successes": self.successes,
            "repetitions": self.repetitions,
        }


def calibrate_probability(formula: Callable[[int, float, int], float], spec: ExperimentSpec,
                          delta: float) -> CalibrationRecord:
    """Compare formula(n, delta, N) with the simulated frequency of a delta-accurate maximum.

    A 1-row objective runs a scalar experiment and counts eta > (1 - delta) eta*;
    a 2-row objective runs an image experiment and counts kappa > 1 - delta.
    """
    if spec.repetitions < 100:
        raise ValueError("calibration needs at least 100 repetitions")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must be in (0, 1], got {delta}")
    if spec.objective.ndim == 2:
        stats = run_image2d(spec, threshold=(1.0 - delta) ** 2)
    else:
        true_max = _dual_norm(spec.ball, spec.objective)
        stats = run_empirical_max(spec, threshold=(1.0 - delta) * true_max)
    predicted = float(formula(spec.n, delta, spec.count))
    reps = spec.repetitions
    return CalibrationRecord(
        empirical=stats.success_count / reps,
        predicted=predicted,
        sigma=math.sqrt(predicted * (1.0 - predicted) / reps),
        successes=stats.success_count,
        repetitions=reps,
    )


@dataclass
class Table:
    title: str
    columns: list
    rows: dict  # label -> list of values, one per column
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        def plain(v):
            return v.to_json() if isinstance(v, bounds.SampleCount) else v

        return {
            "title": self.title,
            "columns": list(self.columns),
            "rows": {k: [plain(v) for v in vals] for k, vals in self.rows.items()},
            **self.extra,
        }


def reproduce_table1(delta: float = 0.05, p: float = 0.95, dims=TABLE_DIMS) -> Table:
    """Minimal sample sizes for the l2 ball, the box (diagonal objective) and the l1 ball."""
    return Table(
        title=f"minimal sample size, delta={delta}, p={p}",
        columns=list(dims),
        rows={
            "l2": [bounds.nmin_l2(n, delta, p) for n in dims],
            "linf": [bounds.nmin_box_diag(n, delta, p) for n in dims],
            "l1": [bounds.nmin_l1(n, delta, p) for n in dims],
        },
    )


def table2_monte_carlo(n: int, budget: int, repetitions: int, seed: int = DEFAULT_SEED,
                       workers: int = 1, max_draws: int = DEFAULT_MAX_DRAWS) -> SampleStats:
    spec = ExperimentSpec(
        BallKind.LINF, n, budget, objective=diagonal_objective(n), seed=seed,
        repetitions=repetitions, workers=workers, max_draws=max_draws,
    )
    return run_empirical_max(spec)


def reproduce_table2(budget: int = 10**6, repetitions: int = 100, seed: int = DEFAULT_SEED,
                     dims=TABLE2_DIMS, workers: int = 1, monte_carlo: bool = True) -> Table:
    """Max of sum(x) over the box for a uniform mesh, the Sobol sequence and Monte Carlo.

    The Monte Carlo entry is the mean over ``repetitions`` of the per-run maxima.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if monte_carlo and repetitions * budget * len(dims) > DEFAULT_MAX_DRAWS:
        raise BudgetExceededError("table2 Monte Carlo run exceeds the draw cap")
    rows = {
        "uniform": [mesh_from_budget(n, budget).max_sum() for n in dims],
        "sobol": [sobol_max_sum(SobolSpec(n, budget)) for n in dims],
    }
    extra = {}
    if monte_carlo:
        runs = [table2_monte_carlo(n, budget, repetitions, seed, workers) for n in dims]
        rows["monte_carlo"] = [r.mean_max for r in runs]
        extra["monte_carlo_std"] = [r.std_max for r in runs]
        extra["repetitions"] = repetitions
        extra["seed"] = seed
    return Table(title=f"max of sum(x) on [-1,1]^n, N={budget}", columns=list(dims), rows=rows, extra=extra)
