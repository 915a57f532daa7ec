"""Active elastic sheet dynamics for 2-DoF agents.

Agents sit on a permanent spring network and only move along their heading.
Neighbor spring forces plus two optional drive terms (a uniform linear pull and
a per-agent rotational field) steer both the speed and the turning rate.

The per-agent API (``spring_force``, ``total_force``, ``step``) is built on
vectorised kernels that operate on a leading replicate axis, so a batch of
independent Monte-Carlo swarms advances with the same arithmetic as a single one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

SignConvention = Literal["restoring", "literal-paper"]
SIGN_CONVENTIONS = ("restoring", "literal-paper")


class ConfigurationError(ValueError):
    """Invalid model or lattice parameters."""


class SingularityError(ArithmeticError):
    """Two linked agents coincide, so the spring direction is undefined."""

    def __init__(self, i: int, j: int, replicate: int | None = None):
        self.pair = (int(i), int(j))
        self.replicate = replicate
        where = "" if replicate is None else f" (replicate {replicate})"
        super().__init__(f"linked agents {i} and {j} coincide{where}")


class IntegrationDiverged(ArithmeticError):
    """A state component became non-finite during integration."""

    def __init__(self, step_index: int, detail: str = ""):
        self.step_index = step_index
        msg = f"integration diverged at step {step_index}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


def wrap_angle(theta):
    """Map angles onto (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    return theta - 2.0 * np.pi * np.ceil((theta - np.pi) / (2.0 * np.pi))


def heading_vector(theta) -> np.ndarray:
    """Unit vector (cos theta, sin theta); vectorised over ``theta``."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.cos(theta), np.sin(theta)], axis=-1)


def heading_normal(theta) -> np.ndarray:
    """Left-perpendicular of the heading, (-sin theta, cos theta)."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([-np.sin(theta), np.cos(theta)], axis=-1)


@dataclass(frozen=True)
class AgentState:
    position: np.ndarray
    heading_angle: float


@dataclass(frozen=True)
class SwarmState:
    """Positions ``(N, 2)`` and headings ``(N,)`` of a swarm at ``time``."""

    positions: np.ndarray
    headings: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        th = np.array(self.headings, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ConfigurationError(f"positions must have shape (N, 2), got {pos.shape}")
        if th.shape != (pos.shape[0],):
            raise ConfigurationError("headings must have one entry per agent")
        if self.time < 0:
            raise ConfigurationError("time must be non-negative")
        pos.setflags(write=False)
        th.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "headings", th)

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def agents(self) -> list[AgentState]:
        return [AgentState(p.copy(), float(t)) for p, t in zip(self.positions, self.headings)]

    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)


@dataclass(frozen=True)
class SpringNetwork:
    """Undirected links ``(i, j)`` with i < j and their natural lengths."""

    n_agents: int
    pairs: np.ndarray
    rest_lengths: np.ndarray

    def __post_init__(self):
        pairs = np.array(self.pairs, dtype=np.intp).reshape(-1, 2)
        lengths = np.array(self.rest_lengths, dtype=float).reshape(-1)
        if pairs.shape[0] != lengths.shape[0]:
            raise ConfigurationError("one rest length per link is required")
        if np.any(lengths <= 0) or not np.all(np.isfinite(lengths)):
            raise ConfigurationError("rest lengths must be positive and finite")
        if pairs.size and (pairs.min() < 0 or pairs.max() >= self.n_agents):
            raise ConfigurationError("link endpoint out of range")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise ConfigurationError("self-links are not allowed")
        # canonical orientation i < j
        swap = pairs[:, 0] > pairs[:, 1]
        pairs[swap] = pairs[swap][:, ::-1]
        if len({tuple(p) for p in pairs.tolist()}) != len(pairs):
            raise ConfigurationError("duplicate links")
        pairs.setflags(write=False)
        lengths.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "rest_lengths", lengths)

    @property
    def n_links(self) -> int:
        return self.pairs.shape[0]

    def neighbors(self, i: int) -> list[int]:
        a, b = self.pairs[:, 0], self.pairs[:, 1]
        return sorted(b[a == i].tolist() + a[b == i].tolist())

    def rest_length(self, i: int, j: int) -> float:
        lo, hi = min(i, j), max(i, j)
        hit = np.flatnonzero((self.pairs[:, 0] == lo) & (self.pairs[:, 1] == hi))
        if hit.size == 0:
            raise KeyError((i, j))
        return float(self.rest_lengths[hit[0]])

    @property
    def adjacency(self) -> dict[int, list[int]]:
        return {i: self.neighbors(i) for i in range(self.n_agents)}


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 0.066
    beta: float = 0.97
    k: float = 1.28
    v0: float = 0.05
    D_r: float = 0.5
    D_theta: float = 0.02
    dt: float = 0.05
    w_l: float = 0.8
    v_d_hat: tuple[float, float] = (-1.0, 0.0)
    w_r: float = 1.0
    omega: float = 0.7
    # "centroid" or a fixed (x, y) rotation center
    rotation_center: str | tuple[float, float] = "centroid"
    sign_convention: SignConvention = "restoring"

    def __post_init__(self):
        for name in ("alpha", "beta", "k", "D_r", "D_theta"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {v}")
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        vd = tuple(float(c) for c in self.v_d_hat)
        if len(vd) != 2:
            raise ConfigurationError("v_d_hat must be a 2-vector")
        object.__setattr__(self, "v_d_hat", vd)
        if self.w_l > 0 and abs(np.hypot(*vd) - 1.0) > 1e-9:
            raise ConfigurationError("v_d_hat must be a unit vector when w_l > 0")
        if self.sign_convention not in SIGN_CONVENTIONS:
            raise ConfigurationError(f"unknown sign convention {self.sign_convention!r}")
        if self.rotation_center != "centroid":
            xc = tuple(float(c) for c in self.rotation_center)
            if len(xc) != 2:
                raise ConfigurationError("rotation_center must be 'centroid' or a 2-vector")
            object.__setattr__(self, "rotation_center", xc)

    def with_decision(self, alpha: float, beta: float, k: float) -> "ModelParams":
        return replace(self, alpha=float(alpha), beta=float(beta), k=float(k))


@dataclass(frozen=True)
class NoiseSample:
    """Per-agent noise: unit measurement vectors and standard-normal actuation draws."""

    xi_r: np.ndarray
    xi_theta: np.ndarray

    @classmethod
    def draw(cls, rng: np.random.Generator, n: int) -> "NoiseSample":
        # negated uniform on [-pi, pi) gives (-pi, pi]
        phi = -rng.uniform(-np.pi, np.pi, n)
        xi_theta = rng.standard_normal(n)
        return cls(heading_vector(phi), xi_theta)

    @classmethod
    def draw_batch(cls, rngs, n: int) -> "NoiseSample":
        """One draw per generator, stacked on a leading axis; same values as ``draw``."""
        phi = np.empty((len(rngs), n))
        xi_theta = np.empty((len(rngs), n))
        for r, rng in enumerate(rngs):
            phi[r] = -rng.uniform(-np.pi, np.pi, n)
            xi_theta[r] = rng.standard_normal(n)
        return cls(heading_vector(phi), xi_theta)


# -- lattice ------------------------------------------------------------------


def lattice_links(rows: int, cols: int, spacing: float, radius_factor: float = 1.05) -> np.ndarray:
    """Index pairs whose unperturbed grid distance is within ``radius_factor * spacing``."""
    grid = _grid(rows, cols, spacing)
    diff = grid[None, :, :] - grid[:, None, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    i, j = np.nonzero(np.triu(dist <= radius_factor * spacing, k=1))
    return np.stack([i, j], axis=1)


def _grid(rows: int, cols: int, spacing: float) -> np.ndarray:
    r, c = np.divmod(np.arange(rows * cols), cols)
    return np.stack([c * spacing, r * spacing], axis=1).astype(float)


def build_lattice(
    rows: int,
    cols: int,
    spacing: float,
    pos_jitter: float = 0.0,
    heading_mode: str | float = "random",
    rng: np.random.Generator | None = None,
    radius_factor: float = 1.05,
) -> tuple[SwarmState, SpringNetwork]:
    """Square lattice of agents with a fixed 4-neighbour spring network.

    Agent ``r * cols + c`` starts at ``(c, r) * spacing`` plus an independent
    uniform offset in ``[-pos_jitter, pos_jitter]^2``. ``heading_mode`` is
    ``"random"`` (uniform on (-pi, pi]) or a fixed angle. Natural lengths are the
    perturbed initial distances.
    """
    if rows < 1 or cols < 1:
        raise ConfigurationError("rows and cols must be >= 1")
    if not spacing > 0:
        raise ConfigurationError(f"spacing must be > 0, got {spacing}")
    if pos_jitter < 0:
        raise ConfigurationError("pos_jitter must be >= 0")
    if rng is None:
        rng = np.random.default_rng()
    n = rows * cols
    positions = _grid(rows, cols, spacing) + rng.uniform(-pos_jitter, pos_jitter, (n, 2))
    if heading_mode == "random":
        headings = -rng.uniform(-np.pi, np.pi, n)
    else:
        headings = np.full(n, float(wrap_angle(float(heading_mode))))
    pairs = lattice_links(rows, cols, spacing, radius_factor)
    d = positions[pairs[:, 1]] - positions[pairs[:, 0]]
    lengths = np.hypot(d[:, 0], d[:, 1])
    if np.any(lengths <= 0):
        bad = pairs[np.argmin(lengths)]
        raise SingularityError(bad[0], bad[1])
    return SwarmState(positions, headings, 0.0), SpringNetwork(n, pairs, lengths)


# -- forces -------------------------------------------------------------------


def _accumulate(link_force: np.ndarray, pairs: np.ndarray, n: int) -> np.ndarray:
    """Scatter per-link forces (R, L, 2) onto agents: +f on i, -f on j."""
    R, L = link_force.shape[:2]
    offs = (np.arange(R) * n)[:, None]
    idx = np.concatenate([pairs[:, 0][None, :] + offs, pairs[:, 1][None, :] + offs], axis=1).ravel()
    out = np.empty((R, n, 2))
    for c in range(2):
        w = np.concatenate([link_force[..., c], -link_force[..., c]], axis=1).ravel()
        out[..., c] = np.bincount(idx, weights=w, minlength=R * n).reshape(R, n)
    return out


def spring_forces_batch(
    positions: np.ndarray,
    net: SpringNetwork,
    k: float,
    sign_convention: SignConvention = "restoring",
    rest_lengths: np.ndarray | None = None,
) -> np.ndarray:
    """Neighbour spring forces for positions of shape ``(R, N, 2)``.

    ``rest_lengths`` of shape ``(R, L)`` overrides the network's natural lengths
    per replicate; the topology is always taken from ``net``.
    """
    pairs = net.pairs
    R, n = positions.shape[:2]
    if pairs.shape[0] == 0:
        return np.zeros((R, n, 2))
    r = positions[:, pairs[:, 1]] - positions[:, pairs[:, 0]]
    dist = np.hypot(r[..., 0], r[..., 1])
    if not np.all(dist > 0):
        hit = np.argwhere(dist == 0)
        if hit.size:
            rep, link = hit[0]
            raise SingularityError(pairs[link, 0], pairs[link, 1], int(rep) if R > 1 else None)
    l = net.rest_lengths if rest_lengths is None else rest_lengths
    mag = (k / l) * (dist - l) / dist
    if sign_convention == "literal-paper":
        mag = -mag
    return _accumulate(mag[..., None] * r, pairs, n)


def spring_forces(state: SwarmState, net: SpringNetwork, k: float, sign_convention: SignConvention = "restoring") -> np.ndarray:
    return spring_forces_batch(state.positions[None], net, k, sign_convention)[0]


def spring_force(
    state: SwarmState, net: SpringNetwork, i: int, k: float, sign_convention: SignConvention = "restoring"
) -> np.ndarray:
    """Spring force on agent ``i`` from its linked neighbours."""
    if not 0 <= i < state.n_agents:
        raise IndexError(i)
    f = np.zeros(2)
    for j in net.neighbors(i):
        r = state.positions[j] - state.positions[i]
        d = float(np.hypot(*r))
        if d == 0:
            raise SingularityError(min(i, j), max(i, j))
        l = net.rest_length(i, j)
        f += (k / l) * (d - l) * r / d
    return -f if sign_convention == "literal-paper" else f


def aux_linear_force(w_l: float, v_d_hat) -> np.ndarray:
    return w_l * np.asarray(v_d_hat, dtype=float)


def aux_rotational_force(w_r: float, omega: float, x_i, x_c) -> np.ndarray:
    """``w_r * omega * (r_y, -r_x)`` with ``r = x_i - x_c``; vectorised over leading axes."""
    r = np.asarray(x_i, dtype=float) - np.asarray(x_c, dtype=float)
    return w_r * omega * np.stack([r[..., 1], -r[..., 0]], axis=-1)


def rotation_centers(positions: np.ndarray, params: ModelParams) -> np.ndarray:
    """Rotation center per replicate, shape ``(R, 1, 2)``."""
    if params.rotation_center == "centroid":
        return positions.mean(axis=1, keepdims=True)
    return np.broadcast_to(np.asarray(params.rotation_center, dtype=float), (positions.shape[0], 1, 2))


def force_components_batch(
    positions: np.ndarray, net: SpringNetwork, params: ModelParams, rest_lengths: np.ndarray | None = None
):
    """Return ``(total, spring)`` force arrays for positions of shape ``(R, N, 2)``."""
    spring = spring_forces_batch(positions, net, params.k, params.sign_convention, rest_lengths)
    total = spring + aux_linear_force(params.w_l, params.v_d_hat)
    if params.omega != 0 and params.w_r != 0:
        total = total + aux_rotational_force(params.w_r, params.omega, positions, rotation_centers(positions, params))
    return total, spring


def total_forces(state: SwarmState, net: SpringNetwork, params: ModelParams) -> np.ndarray:
    return force_components_batch(state.positions[None], net, params)[0][0]


def total_force(state: SwarmState, net: SpringNetwork, params: ModelParams, i: int) -> np.ndarray:
    """Neighbour, linear-drive and rotational-drive force acting on agent ``i``."""
    if params.rotation_center == "centroid":
        x_c = state.centroid()
    else:
        x_c = np.asarray(params.rotation_center)
    f = spring_force(state, net, i, params.k, params.sign_convention)
    f = f + aux_linear_force(params.w_l, params.v_d_hat)
    return f + aux_rotational_force(params.w_r, params.omega, state.positions[i], x_c)


# -- integration --------------------------------------------------------------


def velocities(headings: np.ndarray, forces: np.ndarray, params: ModelParams) -> np.ndarray:
    """Noise-free agent velocities ``v0 n + alpha (f . n) n``."""
    n = heading_vector(headings)
    return (params.v0 + params.alpha * np.sum(forces * n, axis=-1))[..., None] * n


def noise_terms(noise: NoiseSample, params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    """Additive measurement-force and turning-rate noise, scaled by 1/sqrt(dt)."""
    scale = 1.0 / np.sqrt(params.dt)
    return (params.D_r * scale) * noise.xi_r, (params.D_theta * scale) * noise.xi_theta


def advance(
    positions: np.ndarray,
    headings: np.ndarray,
    forces: np.ndarray,
    noise: NoiseSample,
    params: ModelParams,
    unit_headings: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """One Euler step given pre-step forces; arrays carry any leading batch axes."""
    dt = params.dt
    force_noise, turn_noise = noise_terms(noise, params)
    g = forces + force_noise
    n = heading_vector(headings) if unit_headings is None else unit_headings
    n_perp = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    speed = params.v0 + params.alpha * np.sum(g * n, axis=-1)
    new_pos = positions + (speed * dt)[..., None] * n
    turn = params.beta * np.sum(g * n_perp, axis=-1) + turn_noise
    new_th = wrap_angle(headings + turn * dt)
    return new_pos, new_th


def step(state: SwarmState, net: SpringNetwork, params: ModelParams, rng: np.random.Generator) -> SwarmState:
    """Advance the whole swarm synchronously by ``params.dt``."""
    forces = total_forces(state, net, params)
    noise = NoiseSample.draw(rng, state.n_agents)
    with np.errstate(over="ignore", invalid="ignore"):
        pos, th = advance(state.positions, state.headings, forces, noise, params)
    if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(th))):
        raise IntegrationDiverged(int(round(state.time / params.dt)), "non-finite state")
    return SwarmState(pos, th, state.time + params.dt)
