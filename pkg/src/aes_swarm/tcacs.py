"""Tabu continuous ant colony system (TCACS) for box-bounded minimisation.

Ants are drawn from normal "pheromone" distributions centred on the incumbent,
expressed in a rotated frame whose axes come from a PCA of the elite
(promising) solutions. Regions around poor solutions are excluded by shrinking
tabu balls. ``optimize`` runs the search on the unit cube and maps points back
to the caller's bounds, so tabu radii and spreads are comparable across
dimensions with very different ranges.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

log = logging.getLogger(__name__)

NAN_PENALTY = 1e9
ROULETTE_DELTA = 1e-12
SIGMA_FLOOR = 1e-6
AXIS_SCALE_LIMITS = (0.1, 10.0)


@dataclass(frozen=True)
class OptProblem:
    objective: Callable[[np.ndarray], float]
    bounds: np.ndarray
    max_evaluations: int = 300

    def __post_init__(self):
        b = np.array(self.bounds, dtype=float).reshape(-1, 2)
        if b.shape[0] < 1:
            raise ValueError("at least one decision variable is required")
        if np.any(b[:, 0] > b[:, 1]) or not np.all(np.isfinite(b)):
            raise ValueError("bounds must be finite with lo <= hi")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        object.__setattr__(self, "bounds", b)

    @property
    def dimension(self) -> int:
        return self.bounds.shape[0]

    @property
    def lo(self) -> np.ndarray:
        return self.bounds[:, 0]

    @property
    def hi(self) -> np.ndarray:
        return self.bounds[:, 1]


@dataclass(frozen=True)
class TcacsParams:
    n_ants: int = 15
    gamma: float = 0.5
    m: float = 2.0
    weighting_strategy: str = "roulette"
    # fraction of the bounds diagonal
    tabu_radius_init: float = 0.05
    tabu_list_capacity: int = 10
    # None -> 2 * n_ants
    promising_capacity: int | None = None
    seed: int = 0
    max_retries: int = 20

    def __post_init__(self):
        if self.n_ants < 2:
            raise ValueError("n_ants must be >= 2")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.weighting_strategy not in ("roulette", "rank"):
            raise ValueError(f"unknown weighting strategy {self.weighting_strategy!r}")
        if self.tabu_radius_init <= 0 or self.tabu_list_capacity < 0:
            raise ValueError("tabu radius must be > 0 and capacity >= 0")

    @property
    def promising_size(self) -> int:
        return 2 * self.n_ants if self.promising_capacity is None else self.promising_capacity


@dataclass(frozen=True)
class TabuBall:
    center: np.ndarray
    radius: float

    def contains(self, x: np.ndarray) -> bool:
        return float(np.linalg.norm(x - self.center)) < self.radius


@dataclass
class TcacsState:
    best_point: np.ndarray
    best_cost: float
    sigma: np.ndarray
    transform: np.ndarray
    axis_scale: np.ndarray
    ants: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    ant_costs: np.ndarray = field(default_factory=lambda: np.empty(0))
    tabu_list: list[TabuBall] = field(default_factory=list)
    promising: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))
    promising_costs: np.ndarray = field(default_factory=lambda: np.empty(0))
    iteration: int = 0

    @classmethod
    def initial(cls, dimension: int) -> "TcacsState":
        return cls(
            best_point=np.full(dimension, np.nan),
            best_cost=np.inf,
            sigma=np.ones(dimension),
            transform=np.eye(dimension),
            axis_scale=np.ones(dimension),
            ants=np.empty((0, dimension)),
            promising=np.empty((0, dimension)),
        )


@dataclass
class TcacsResult:
    best_point: np.ndarray
    best_cost: float
    history: list[dict]
    n_evaluations: int
    n_nan: int = 0


def _as_bounds(bounds) -> tuple[np.ndarray, np.ndarray]:
    b = np.asarray(bounds, dtype=float).reshape(-1, 2)
    return b[:, 0], b[:, 1]


# -- operators ----------------------------------------------------------------


def roulette_weights(costs: np.ndarray, best_cost: float, strategy: str = "roulette") -> np.ndarray:
    """Selection weights, larger for cheaper ants; normalised to sum to one."""
    costs = np.asarray(costs, dtype=float)
    if strategy == "rank":
        order = np.argsort(costs, kind="stable")
        w = np.empty(len(costs))
        w[order] = np.arange(len(costs), 0, -1, dtype=float)
    else:
        w = 1.0 / (costs - best_cost + ROULETTE_DELTA)
    return w / w.sum()


def pca_transform(points, m: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """Principal axes of ``points`` and per-axis sampling scales.

    Returns ``(transform, scale)``: the columns of ``transform`` are orthonormal
    principal directions sorted by decreasing variance, and ``scale[j]`` is the
    m-th root of axis j's variance over the mean variance, clipped to
    ``AXIS_SCALE_LIMITS``. Fewer than two points or a degenerate cloud give the
    identity and unit scales.
    """
    pts = np.asarray(points, dtype=float)
    d = pts.shape[1] if pts.ndim == 2 else 0
    eye = (np.eye(d), np.ones(d))
    if pts.ndim != 2 or pts.shape[0] < 2:
        return eye
    cov = np.cov(pts, rowvar=False).reshape(d, d)
    if not np.all(np.isfinite(cov)) or np.trace(cov) <= 1e-300:
        return eye
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1]
    evals = np.clip(evals[order], 0.0, None)
    evecs = evecs[:, order]
    # deterministic orientation: largest-magnitude component positive
    pivot = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivot, np.arange(d)])
    evecs = evecs * np.where(signs == 0, 1.0, signs)
    scale = np.clip((evals / evals.mean()) ** (1.0 / m), *AXIS_SCALE_LIMITS)
    return evecs, scale


def _project_out(x, balls: Sequence[TabuBall], fallback_dir):
    for ball in balls:
        if ball.contains(x):
            off = x - ball.center
            norm = float(np.linalg.norm(off))
            if norm == 0.0:
                off, norm = fallback_dir, float(np.linalg.norm(fallback_dir))
            return ball.center + off * (ball.radius * (1 + 1e-9) / norm)
    return x


def sample_ants(state: TcacsState, params: TcacsParams, bounds, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
    """Draw ``n`` candidate points (default ``params.n_ants``) inside ``bounds``.

    Before any incumbent exists the draw is uniform. Afterwards each ant is
    normal around the incumbent in the PCA frame; a candidate falling in a tabu
    ball is redrawn up to ``max_retries`` times and then pushed onto that ball's
    surface.
    """
    lo, hi = _as_bounds(bounds)
    n = params.n_ants if n is None else n
    d = lo.shape[0]
    if not np.all(np.isfinite(state.best_point)):
        return lo + rng.random((n, d)) * (hi - lo)
    std = state.sigma * state.axis_scale
    fallback = np.zeros(d)
    fallback[0] = 1.0
    ants = np.empty((n, d))
    for a in range(n):
        for _ in range(params.max_retries + 1):
            z = rng.standard_normal(d) * std
            x = np.clip(state.best_point + state.transform @ z, lo, hi)
            if not any(b.contains(x) for b in state.tabu_list):
                break
        else:
            x = np.clip(_project_out(x, state.tabu_list, fallback), lo, hi)
        ants[a] = x
    return ants


def update_pheromone(state: TcacsState, points, costs, gamma: float, bounds, strategy: str = "roulette") -> TcacsState:
    """Move the incumbent to the cheapest point seen and reset the spreads.

    ``sigma[j]`` becomes ``gamma`` times the weighted RMS offset of the ants from
    the incumbent along axis j of the current frame. Ants sitting on the
    incumbent are left out because their zero offset would swamp the roulette
    weights.
    """
    lo, hi = _as_bounds(bounds)
    points = np.asarray(points, dtype=float)
    costs = np.asarray(costs, dtype=float)
    i = int(np.argmin(costs))
    if costs[i] < state.best_cost:
        best_point, best_cost = points[i].copy(), float(costs[i])
    else:
        best_point, best_cost = state.best_point, state.best_cost
    floor = SIGMA_FLOOR * np.maximum(hi - lo, 1e-300)
    offsets = (points - best_point) @ state.transform
    keep = np.any(offsets != 0, axis=1)
    if keep.any():
        w = roulette_weights(costs[keep], best_cost, strategy)
        sigma = gamma * np.sqrt(w @ offsets[keep] ** 2)
    else:
        sigma = np.zeros_like(floor)
    return replace(state, best_point=best_point, best_cost=best_cost, sigma=np.maximum(sigma, floor))


def _exclude_best(balls: list[TabuBall], best) -> list[TabuBall]:
    out = []
    for b in balls:
        dist = float(np.linalg.norm(best - b.center))
        r = min(b.radius, 0.999 * dist)
        if r > 0:
            out.append(TabuBall(b.center, r))
    return out


def update_tabu(state: TcacsState, points, costs, params: TcacsParams, bounds) -> TcacsState:
    """Shrink existing tabu balls, add one at the worst ant, refresh the promising list."""
    lo, hi = _as_bounds(bounds)
    points = np.asarray(points, dtype=float)
    costs = np.asarray(costs, dtype=float)
    balls = [TabuBall(b.center, b.radius * params.gamma) for b in state.tabu_list]
    if params.tabu_list_capacity > 0 and len(points):
        worst = points[int(np.argmax(costs))].copy()
        balls.append(TabuBall(worst, params.tabu_radius_init * float(np.linalg.norm(hi - lo))))
        balls = balls[-params.tabu_list_capacity:]
    if np.all(np.isfinite(state.best_point)):
        balls = _exclude_best(balls, state.best_point)
    return update_promising(replace(state, tabu_list=balls), points, costs, params)


def update_promising(state: TcacsState, points, costs, params: TcacsParams) -> TcacsState:
    pts = np.concatenate([state.promising.reshape(-1, points.shape[1]), points])
    cst = np.concatenate([state.promising_costs, costs])
    order = np.argsort(cst, kind="stable")[: params.promising_size]
    return replace(state, promising=pts[order], promising_costs=cst[order])


# -- driver -------------------------------------------------------------------


def _history_row(state: TcacsState, evals: int) -> dict:
    return {
        "iter": state.iteration,
        "evals": evals,
        "best_cost": state.best_cost,
        "sigma": state.sigma.copy(),
        "tabu_count": len(state.tabu_list),
    }


def optimize(problem: OptProblem, params: TcacsParams = TcacsParams(), callback=None) -> TcacsResult:
    """Minimise ``problem.objective`` within its bounds using at most ``max_evaluations`` calls."""
    lo, hi = problem.lo, problem.hi
    width = hi - lo
    d = problem.dimension
    unit = np.stack([np.zeros(d), np.ones(d)], axis=1)
    rng = np.random.default_rng(params.seed)

    def to_problem(u):
        return lo + u * width

    evals = n_nan = 0

    def evaluate(u) -> float:
        nonlocal evals, n_nan
        evals += 1
        c = float(problem.objective(to_problem(u)))
        if np.isnan(c):
            n_nan += 1
            log.warning("objective returned NaN at %s; using penalty", to_problem(u))
            c = NAN_PENALTY
        return c

    state = TcacsState.initial(d)
    history = []
    if np.all(width == 0):
        u = np.zeros((1, d))
        cost = np.array([evaluate(u[0])])
        state = update_pheromone(replace(state, iteration=1), u, cost, params.gamma, unit, params.weighting_strategy)
        history.append(_history_row(state, evals))
        return TcacsResult(to_problem(state.best_point), state.best_cost, history, evals, n_nan)

    while evals < problem.max_evaluations:
        n = min(params.n_ants, problem.max_evaluations - evals)
        ants = sample_ants(state, params, unit, rng, n)
        costs = np.array([evaluate(u) for u in ants])
        state = replace(state, iteration=state.iteration + 1, ants=ants, ant_costs=costs)
        if state.iteration == 1:
            state = update_promising(state, ants, costs, params)
        else:
            state = update_tabu(state, ants, costs, params, unit)
        state.transform, state.axis_scale = pca_transform(state.promising, params.m)
        state = update_pheromone(state, ants, costs, params.gamma, unit, params.weighting_strategy)
        state = replace(state, tabu_list=_exclude_best(state.tabu_list, state.best_point))
        history.append(_history_row(state, evals))
        if callback is not None:
            callback(state, evals)
    return TcacsResult(to_problem(state.best_point), state.best_cost, history, evals, n_nan)
