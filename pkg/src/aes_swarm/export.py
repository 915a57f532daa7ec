"""CSV and manifest files for runs and optimisations."""

from __future__ import annotations

import csv
import json
import time
from pathlib import Path

import numpy as np

from .scenario import Trajectory

TRAJECTORY_HEADER = ("t", "id", "x", "y", "theta")
METRICS_HEADER = ("t", "psi_velocity", "psi_heading", "psi_control", "total_force")
METRICS_AUX_HEADER = ("t", "spring_force", "n_zero_force")
SNAPSHOT_HEADER = ("x", "y", "theta")


class TrajectoryFormatError(ValueError):
    pass


def fmt(x: float) -> str:
    # 17 significant digits round-trips doubles exactly
    return "%.17g" % x


def fmt_time(t: float) -> str:
    return "%.9g" % t


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    rows = []
    for t, pos, th in zip(traj.times, traj.positions, traj.headings):
        ts = fmt_time(t)
        rows.extend((ts, i, fmt(x), fmt(y), fmt(a)) for i, ((x, y), a) in enumerate(zip(pos, th)))
    _write_rows(path, TRAJECTORY_HEADER, rows)


def write_metrics_csv(times, series: dict, path: Path) -> None:
    cols = [series[k] for k in METRICS_HEADER[1:]]
    rows = ((fmt_time(t), *(fmt(c[n]) for c in cols)) for n, t in enumerate(times))
    _write_rows(path, METRICS_HEADER, rows)


def write_metrics_aux_csv(times, series: dict, path: Path) -> None:
    rows = ((fmt_time(t), fmt(series["spring_force"][n]), int(series["n_zero_force"][n])) for n, t in enumerate(times))
    _write_rows(path, METRICS_AUX_HEADER, rows)


def snapshot_indices(n_snapshots: int, count: int = 6) -> list[int]:
    """Evenly spaced indices into the stored snapshots, first and last included."""
    if n_snapshots <= 0:
        return []
    return sorted(set(np.round(np.linspace(0, n_snapshots - 1, count)).astype(int).tolist()))


def write_snapshots(traj: Trajectory, out_dir: Path, count: int = 6, plot: bool = False) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for n, idx in enumerate(snapshot_indices(len(traj.snapshot_steps), count)):
        path = out_dir / f"snapshot_{n}_t{fmt_time(traj.times[idx])}.csv"
        rows = ((fmt(x), fmt(y), fmt(a)) for (x, y), a in zip(traj.positions[idx], traj.headings[idx]))
        _write_rows(path, SNAPSHOT_HEADER, rows)
        paths.append(path)
    if plot:
        paths.append(plot_snapshots(traj, out_dir / "snapshots.svg", count))
    return paths


def plot_snapshots(traj: Trajectory, path: Path, count: int = 6) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    idx = snapshot_indices(len(traj.snapshot_steps), count)
    fig, axes = plt.subplots(1, len(idx), figsize=(2.2 * len(idx), 2.4), squeeze=False)
    for ax, i in zip(axes[0], idx):
        pos, th = traj.positions[i], traj.headings[i]
        ax.quiver(pos[:, 0], pos[:, 1], np.cos(th), np.sin(th), angles="xy", scale=25, width=0.006)
        ax.set_title(f"t = {traj.times[i]:.1f} s", fontsize=8)
        ax.set_aspect("equal")
        ax.tick_params(labelsize=6)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def write_history_csv(history: list[dict], path: Path) -> None:
    d = len(history[0]["sigma"]) if history else 0
    header = ("iter", "evals", "best_cost", *(f"sigma_{j + 1}" for j in range(d)), "tabu_count")
    rows = ((h["iter"], h["evals"], fmt(h["best_cost"]), *(fmt(s) for s in h["sigma"]), h["tabu_count"]) for h in history)
    _write_rows(path, header, rows)


def read_trajectory_csv(path: Path) -> list[tuple[float, str, np.ndarray, np.ndarray]]:
    """Parse a trajectory file into ``(t, t_text, positions, headings)`` per sampled time."""
    frames: list[tuple[float, str, list, list]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TrajectoryFormatError(f"{path}: empty trajectory file")
        if tuple(header) != TRAJECTORY_HEADER:
            raise TrajectoryFormatError(f"{path}:1: expected header {','.join(TRAJECTORY_HEADER)}")
        for lineno, row in enumerate(reader, 2):
            if len(row) != 5:
                raise TrajectoryFormatError(f"{path}:{lineno}: expected 5 fields, got {len(row)}")
            try:
                t = float(row[0])
                agent = int(row[1])
                x, y, th = float(row[2]), float(row[3]), float(row[4])
            except ValueError as exc:
                raise TrajectoryFormatError(f"{path}:{lineno}: {exc}") from None
            if not all(np.isfinite(v) for v in (t, x, y, th)):
                raise TrajectoryFormatError(f"{path}:{lineno}: non-finite value")
            if not frames or frames[-1][1] != row[0]:
                if frames and t <= frames[-1][0]:
                    raise TrajectoryFormatError(f"{path}:{lineno}: time does not increase")
                frames.append((t, row[0], [], []))
            _, _, pos, ths = frames[-1]
            if agent != len(pos):
                raise TrajectoryFormatError(f"{path}:{lineno}: expected agent id {len(pos)}, got {agent}")
            pos.append((x, y))
            ths.append(th)
    if not frames:
        raise TrajectoryFormatError(f"{path}: trajectory has no rows")
    return [(t, ts, np.array(p, dtype=float), np.array(h, dtype=float)) for t, ts, p, h in frames]


def write_manifest(path: Path, **fields) -> None:
    payload = {"tool": "aes-swarm", **fields}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_manifest(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read manifest {path}: {exc}") from exc


class Stopwatch:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        return False
