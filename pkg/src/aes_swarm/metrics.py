"""Order parameters for swarm alignment.

All functions accept a leading batch axis, so ``(R, N, 2)`` inputs give ``(R,)``
outputs; plain ``(N, 2)`` inputs give scalars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, heading_vector

ZERO_FORCE_EPS = 1e-9


@dataclass(frozen=True)
class MetricsRecord:
    time: float
    psi_velocity: float
    psi_heading: float
    psi_control: float
    total_force_norm: float
    spring_force_norm: float = 0.0
    # agents whose force fell below eps and were counted as aligned
    n_zero_force: int = 0


def _norm(v: np.ndarray) -> np.ndarray:
    return np.hypot(v[..., 0], v[..., 1])


def psi_velocity(velocities, v0: float):
    """Norm of the summed velocities over ``N * v0``; can exceed 1 when agents outrun v0."""
    if not v0 > 0:
        raise ConfigurationError(f"v0 must be > 0, got {v0}")
    v = np.asarray(velocities, dtype=float)
    n = v.shape[-2]
    return _norm(v.sum(axis=-2)) / (n * v0)


def psi_heading(headings):
    return polarization(heading_vector(headings))


def polarization(unit_vectors):
    """Norm of the mean of ``(..., N, 2)`` unit vectors."""
    return _norm(np.asarray(unit_vectors).mean(axis=-2))


def control_alignment(forces, headings, eps: float = ZERO_FORCE_EPS):
    """Per-agent ``|cos|`` of the force-heading angle, and a mask of zero-force agents.

    Agents with ``|f| < eps`` need no correction and count as fully aligned.
    """
    return alignment_from_vectors(forces, heading_vector(headings), eps)


def alignment_from_vectors(forces, unit_headings, eps: float = ZERO_FORCE_EPS):
    f = np.asarray(forces, dtype=float)
    n = unit_headings
    fn = _norm(f)
    zero = fn < eps
    with np.errstate(invalid="ignore", divide="ignore"):
        psi_i = np.abs(np.sum(f * n, axis=-1)) / fn
    psi_i = np.where(zero, 1.0, np.minimum(psi_i, 1.0))
    return psi_i, zero


def psi_control(forces, headings, eps: float = ZERO_FORCE_EPS):
    psi_i, _ = control_alignment(forces, headings, eps)
    return psi_i.mean(axis=-1)


def total_force_norm(forces):
    return _norm(np.asarray(forces, dtype=float)).sum(axis=-1)
