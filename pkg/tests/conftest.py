import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aes_swarm.scenario import ScenarioConfig, setup_config  # noqa: E402


def oracle_cfg(config: ScenarioConfig) -> dict:
    p = config.params
    return {
        "rows": config.rows,
        "cols": config.cols,
        "d_init": config.d_init,
        "jitter": config.pos_jitter,
        "heading": None if config.heading_mode == "random" else float(config.heading_mode),
        "alpha": p.alpha,
        "beta": p.beta,
        "k": p.k,
        "v0": p.v0,
        "D_r": p.D_r,
        "D_theta": p.D_theta,
        "dt": p.dt,
        "steps": config.n_steps,
        "w_l": p.w_l,
        "v_d": p.v_d_hat,
        "w_r": p.w_r,
        "omega": p.omega,
        "w1": config.weight_force,
        "w2": config.w2,
        "eps": config.eps,
    }


def random_config(rng: np.random.Generator) -> ScenarioConfig:
    """Small random scenario with moderate coefficients (stable under Euler)."""
    base = setup_config(3)
    params = replace(
        base.params,
        alpha=float(rng.uniform(0.001, 0.2)),
        beta=float(rng.uniform(0.05, 2.0)),
        k=float(rng.uniform(0.2, 3.0)),
        w_l=float(rng.uniform(0, 1)),
        omega=float(rng.uniform(-1, 1)),
        D_r=float(rng.uniform(0, 0.6)),
        D_theta=float(rng.uniform(0, 0.1)),
    )
    return replace(
        base,
        rows=int(rng.integers(2, 6)),
        cols=int(rng.integers(2, 6)),
        params=params,
        t_f=float(rng.integers(20, 81)) * params.dt,
        seed=int(rng.integers(0, 2**63)),
        w1=float(rng.uniform(0.01, 1.0)),
        w2=-float(rng.uniform(0.1, 10.0)),
        n_mc=1,
    )


@pytest.fixture
def quiet_config():
    """Noise-free, unperturbed, aligned lattice: every replicate is identical."""
    cfg = setup_config(3, rows=4, cols=4, jitter=0.0, heading_mode=0.0, t_f=2.0)
    return cfg.with_params(D_r=0.0, D_theta=0.0)


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance_report():
    """Record a one-line verdict for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> bool:
        ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[number])
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
