"""Scenario runs, trajectories and the Monte-Carlo tuning objective."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import metrics as M
from .core import (
    ConfigurationError,
    IntegrationDiverged,
    ModelParams,
    NoiseSample,
    SingularityError,
    SpringNetwork,
    SwarmState,
    advance,
    build_lattice,
    force_components_batch,
    heading_vector,
    lattice_links,
)

log = logging.getLogger(__name__)

DIVERGED_PENALTY = 1e9

# Optimized model coefficients reported for the 10x10 lattice.
ALPHA_STAR, BETA_STAR, K_STAR = 0.066, 0.97, 1.28

WEIGHT_PRESETS = {
    # name -> (w1 numerator over N, w2)
    "default": (1.0, -1.0),
    "force": (10.0, -1.0),
    "align": (1.0, -10.0),
}


@dataclass(frozen=True)
class ScenarioConfig:
    rows: int = 10
    cols: int = 10
    d_init: float = 0.2
    # None -> 5% of d_init
    jitter: float | None = None
    heading_mode: str | float = "random"
    params: ModelParams = field(default_factory=ModelParams)
    t_f: float = 30.0
    seed: int = 0
    # None -> 1/N
    w1: float | None = None
    w2: float = -1.0
    n_mc: int = 10
    eps: float = M.ZERO_FORCE_EPS
    link_radius: float = 1.05

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ConfigurationError("rows and cols must be >= 1")
        if not self.d_init > 0:
            raise ConfigurationError(f"d_init must be > 0, got {self.d_init}")
        if self.jitter is not None and self.jitter < 0:
            raise ConfigurationError("jitter must be >= 0")
        if not self.t_f > 0:
            raise ConfigurationError(f"t_f must be > 0, got {self.t_f}")
        if self.n_mc < 1:
            raise ConfigurationError("n_mc must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if isinstance(self.heading_mode, str) and self.heading_mode != "random":
            raise ConfigurationError(f"heading_mode must be 'random' or an angle, got {self.heading_mode!r}")
        ratio = self.t_f / self.params.dt
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise ConfigurationError(f"t_f={self.t_f} is not a whole number of dt={self.params.dt} steps")

    @property
    def n_agents(self) -> int:
        return self.rows * self.cols

    @property
    def n_steps(self) -> int:
        return int(round(self.t_f / self.params.dt))

    @property
    def pos_jitter(self) -> float:
        return 0.05 * self.d_init if self.jitter is None else self.jitter

    @property
    def weight_force(self) -> float:
        return 1.0 / self.n_agents if self.w1 is None else self.w1

    def with_params(self, **changes) -> "ScenarioConfig":
        return replace(self, params=replace(self.params, **changes))

    def with_weights(self, preset: str) -> "ScenarioConfig":
        try:
            num, w2 = WEIGHT_PRESETS[preset]
        except KeyError:
            raise ConfigurationError(f"unknown weight preset {preset!r}") from None
        return replace(self, w1=num / self.n_agents, w2=w2)


def setup_config(setup: int, **overrides) -> ScenarioConfig:
    """Built-in configurations: 1 linear drive only, 2 rotation only, 3 both."""
    params = ModelParams(alpha=ALPHA_STAR, beta=BETA_STAR, k=K_STAR)
    if setup == 1:
        params = replace(params, omega=0.0)
    elif setup == 2:
        params = replace(params, w_l=0.0)
    elif setup != 3:
        raise ConfigurationError(f"unknown setup {setup!r}; expected 1, 2 or 3")
    return replace(ScenarioConfig(params=params), **overrides)


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(replicate)]))


@dataclass
class Trajectory:
    """Stride-sampled snapshots plus per-step metric series of one run."""

    config: ScenarioConfig
    seed: int
    stride: int
    network: SpringNetwork
    snapshot_steps: np.ndarray
    positions: np.ndarray
    headings: np.ndarray
    # per-step series, length n_steps + 1
    series: dict[str, np.ndarray]

    @property
    def times(self) -> np.ndarray:
        return self.snapshot_steps * self.config.params.dt

    @property
    def step_times(self) -> np.ndarray:
        return np.arange(self.config.n_steps + 1) * self.config.params.dt

    def state(self, index: int) -> SwarmState:
        return SwarmState(self.positions[index], self.headings[index], float(self.times[index]))

    @property
    def records(self) -> list[M.MetricsRecord]:
        s = self.series
        return [
            M.MetricsRecord(
                float(t), float(s["psi_velocity"][n]), float(s["psi_heading"][n]), float(s["psi_control"][n]),
                float(s["total_force"][n]), float(s["spring_force"][n]), int(s["n_zero_force"][n]),
            )
            for n, t in enumerate(self.step_times)
        ]


SERIES_KEYS = ("psi_velocity", "psi_heading", "psi_control", "total_force", "spring_force", "n_zero_force")


def step_metrics(positions, headings, net: SpringNetwork, params: ModelParams, eps: float, rest_lengths=None):
    """Metric values and total forces for a batch of states ``(R, N, 2)`` / ``(R, N)``."""
    total, spring = force_components_batch(positions, net, params, rest_lengths)
    n = heading_vector(headings)
    psi_i, zero = M.alignment_from_vectors(total, n, eps)
    speed = params.v0 + params.alpha * np.sum(total * n, axis=-1)
    out = {
        "psi_velocity": M.psi_velocity(speed[..., None] * n, params.v0),
        "psi_heading": M.polarization(n),
        "psi_control": psi_i.mean(axis=-1),
        "total_force": M.total_force_norm(total),
        "spring_force": M.total_force_norm(spring),
        "n_zero_force": zero.sum(axis=-1),
    }
    return out, total, n


def simulate_batch(
    config: ScenarioConfig,
    replicates: Sequence[int],
    seed: int | None = None,
    stride: int | None = None,
    params: ModelParams | None = None,
):
    """Advance several independently seeded swarms in lock step.

    Returns ``(network, series, snapshots)`` where ``series`` maps metric names to
    ``(R, n_steps + 1)`` arrays and ``snapshots`` is ``(steps, positions, headings)``
    sampled every ``stride`` steps, or None when ``stride`` is None.
    """
    seed = config.seed if seed is None else seed
    params = config.params if params is None else params
    rngs = [replicate_rng(seed, r) for r in replicates]
    R = len(rngs)
    states, nets = [], []
    for rng in rngs:
        st, net = build_lattice(
            config.rows, config.cols, config.d_init, config.pos_jitter, config.heading_mode, rng, config.link_radius
        )
        states.append(st)
        nets.append(net)
    net = nets[0]
    rest = np.stack([nt.rest_lengths for nt in nets])
    pos = np.stack([s.positions for s in states])
    th = np.stack([s.headings for s in states])
    n_steps, N = config.n_steps, config.n_agents
    series = {k: np.empty((R, n_steps + 1)) for k in SERIES_KEYS}
    snaps = None
    if stride is not None:
        if stride < 1:
            raise ConfigurationError("stride must be >= 1")
        snap_steps = np.arange(0, n_steps + 1, stride)
        snaps = (snap_steps, np.empty((len(snap_steps), R, N, 2)), np.empty((len(snap_steps), R, N)))

    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(n_steps + 1):
            if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(th))):
                raise IntegrationDiverged(s, "non-finite state")
            values, forces, unit = step_metrics(pos, th, net, params, config.eps, rest)
            for key, v in values.items():
                series[key][:, s] = v
            if snaps is not None and s % stride == 0:
                snaps[1][s // stride] = pos
                snaps[2][s // stride] = th
            if s == n_steps:
                break
            noise = NoiseSample.draw_batch(rngs, N)
            pos, th = advance(pos, th, forces, noise, params, unit)
    return net, series, snaps


def run_scenario(config: ScenarioConfig, seed: int | None = None, stride: int = 1, replicate: int = 0) -> Trajectory:
    """Run one swarm for ``t_f`` and record every metric at every step."""
    seed = config.seed if seed is None else seed
    net, series, (steps, pos, th) = simulate_batch(config, [replicate], seed, stride)
    return Trajectory(
        config=config,
        seed=seed,
        stride=stride,
        network=net,
        snapshot_steps=steps,
        positions=pos[:, 0],
        headings=th[:, 0],
        series={k: v[0] for k, v in series.items()},
    )


def run_cost(series: dict[str, np.ndarray], w1: float, w2: float) -> np.ndarray:
    """Per-replicate cost: sum over steps of ``w1 * sum|f| + w2 * psi_control``."""
    return np.sum(w1 * series["total_force"] + w2 * series["psi_control"], axis=-1)


def evaluate_objective(decision, config: ScenarioConfig, seed: int | None = None) -> float:
    """Monte-Carlo cost of the model coefficients ``(alpha, beta, k)``; lower is better.

    Diverged or singular runs return ``DIVERGED_PENALTY`` instead of raising.
    """
    alpha, beta, k = (float(v) for v in decision)
    params = config.params.with_decision(alpha, beta, k)
    try:
        _, series, _ = simulate_batch(config, range(config.n_mc), seed, None, params)
    except (IntegrationDiverged, SingularityError) as exc:
        log.warning("objective penalty at alpha=%g beta=%g k=%g: %s", alpha, beta, k, exc)
        return DIVERGED_PENALTY
    costs = run_cost(series, config.weight_force, config.w2)
    if not np.all(np.isfinite(costs)) or np.any(costs >= DIVERGED_PENALTY):
        log.warning("objective penalty at alpha=%g beta=%g k=%g: runaway cost", alpha, beta, k)
        return DIVERGED_PENALTY
    total = 0.0
    for c in costs:
        total += float(c)
    return total / config.n_mc


def network_from_initial(positions: np.ndarray, config: ScenarioConfig) -> SpringNetwork:
    """Lattice topology of ``config`` with natural lengths taken from ``positions`` at t = 0."""
    if positions.shape != (config.n_agents, 2):
        raise ConfigurationError(f"expected {config.n_agents} agents, got {positions.shape[0]}")
    pairs = lattice_links(config.rows, config.cols, config.d_init, config.link_radius)
    d = positions[pairs[:, 1]] - positions[pairs[:, 0]]
    return SpringNetwork(config.n_agents, pairs, np.hypot(d[:, 0], d[:, 1]))


def recompute_series(positions: np.ndarray, headings: np.ndarray, config: ScenarioConfig, initial_positions=None):
    """Metric series for stored snapshots ``(S, N, 2)``/``(S, N)``.

    Natural lengths come from ``initial_positions`` (default: the first snapshot,
    which must be the t = 0 state).
    """
    init = positions[0] if initial_positions is None else initial_positions
    net = network_from_initial(np.asarray(init, dtype=float), config)
    values, _, _ = step_metrics(np.asarray(positions, dtype=float), np.asarray(headings, dtype=float), net, config.params, config.eps)
    return values
