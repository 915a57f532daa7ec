"""Straight-line reference implementations used as independent test oracles.

Nothing here imports the simulation code; only the seeding contract
(``SeedSequence([seed, replicate])`` and the draw order) is shared.
"""

import math

import numpy as np


def single_run_cost(cfg: dict, seed: int, replicate: int = 0) -> float:
    """Cost of one run: sum over t of w1 * sum_i |f_i| + w2 * mean_i |cos(f_i, n_i)|.

    ``cfg`` keys: rows, cols, d_init, jitter, heading (None for random), alpha,
    beta, k, v0, D_r, D_theta, dt, steps, w_l, v_d, w_r, omega, w1, w2, eps.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, replicate]))
    rows, cols, d0 = cfg["rows"], cfg["cols"], cfg["d_init"]
    n = rows * cols
    jit = rng.uniform(-cfg["jitter"], cfg["jitter"], (n, 2))
    xs, ys = [], []
    for a in range(n):
        r, c = divmod(a, cols)
        xs.append(c * d0 + float(jit[a, 0]))
        ys.append(r * d0 + float(jit[a, 1]))
    if cfg["heading"] is None:
        th = [float(v) for v in -rng.uniform(-math.pi, math.pi, n)]
    else:
        th = [cfg["heading"]] * n
    links = []
    for a in range(n):
        r, c = divmod(a, cols)
        if c + 1 < cols:
            links.append((a, a + 1))
        if r + 1 < rows:
            links.append((a, a + cols))
    rest = {(i, j): math.hypot(xs[j] - xs[i], ys[j] - ys[i]) for i, j in links}

    k, alpha, beta, v0, dt = cfg["k"], cfg["alpha"], cfg["beta"], cfg["v0"], cfg["dt"]
    total = 0.0
    for s in range(cfg["steps"] + 1):
        cx, cy = sum(xs) / n, sum(ys) / n
        fx, fy = [0.0] * n, [0.0] * n
        for (i, j), l in rest.items():
            dx, dy = xs[j] - xs[i], ys[j] - ys[i]
            d = math.hypot(dx, dy)
            m = k / l * (d - l) / d
            fx[i] += m * dx
            fy[i] += m * dy
            fx[j] -= m * dx
            fy[j] -= m * dy
        force_sum = 0.0
        psi_sum = 0.0
        for a in range(n):
            fx[a] += cfg["w_l"] * cfg["v_d"][0] + cfg["w_r"] * cfg["omega"] * (ys[a] - cy)
            fy[a] += cfg["w_l"] * cfg["v_d"][1] - cfg["w_r"] * cfg["omega"] * (xs[a] - cx)
            norm = math.hypot(fx[a], fy[a])
            force_sum += norm
            if norm < cfg["eps"]:
                psi_sum += 1.0
            else:
                psi_sum += abs(fx[a] * math.cos(th[a]) + fy[a] * math.sin(th[a])) / norm
        total += cfg["w1"] * force_sum + cfg["w2"] * psi_sum / n
        if s == cfg["steps"]:
            break
        phi = -rng.uniform(-math.pi, math.pi, n)
        xi = rng.standard_normal(n)
        for a in range(n):
            gx = fx[a] + cfg["D_r"] / math.sqrt(dt) * math.cos(phi[a])
            gy = fy[a] + cfg["D_r"] / math.sqrt(dt) * math.sin(phi[a])
            c, sn = math.cos(th[a]), math.sin(th[a])
            speed = v0 + alpha * (gx * c + gy * sn)
            xs[a] += speed * c * dt
            ys[a] += speed * sn * dt
            th[a] += (beta * (-gx * sn + gy * c) + cfg["D_theta"] / math.sqrt(dt) * xi[a]) * dt
    return total
