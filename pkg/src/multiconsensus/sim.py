"""Fixed-step RK4 simulation of the closed-loop protocols.

Single integrator: ``x' = -L x``.  Second order, stacked as ``[x; v]``::

    x' = v
    v' = a x + b v - L (k1 x + k2 v)

With ``a > 0`` the agreement values themselves grow exponentially, so the
differences inside a cluster are lost to cancellation long before they
decay.  Passing ``frame=partition`` integrates the cell-mean-removed error
``z = (R x, R v)`` instead, which evolves autonomously with ``R L`` in
place of ``L`` whenever the partition is an EEP (``R L = R L R``).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonFinite, PartitionError
from .exact import Matrix
from .partition import Partition, is_eep, r_matrix

DEFAULT_DT = 0.01
DEFAULT_HORIZON = 100.0
DEFAULT_TOL = 1e-6
DEFAULT_CAP = 1e9


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n) or (len(times), 2n)
    model: str  # "single" or "second"
    n: int
    dt: float
    integrator: str = "rk4"
    frame: str = "absolute"  # or "error"
    diverged: bool = False

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, : self.n]

    @property
    def velocities(self) -> np.ndarray | None:
        return self.states[:, self.n :] if self.model == "second" else None

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["t"] + [f"x_{i + 1}" for i in range(self.n)]
        if self.model == "second":
            head += [f"v_{i + 1}" for i in range(self.n)]
        w.writerow(head)
        for t, s in zip(self.times, self.states):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in s])
        return buf.getvalue()


def random_initial(n: int, seed: int, count: int = 1) -> np.ndarray:
    """Uniform draws in ``[-5, 5]`` from a seeded generator; ``count`` vectors stacked."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-5.0, 5.0, size=count * n)


def rk4(
    F: np.ndarray,
    y0: np.ndarray,
    dt: float,
    steps: int,
    cap: float,
    stride: int = 1,
    project: Callable[[np.ndarray], np.ndarray] | None = None,
):
    """Integrate ``y' = F y``; stop early once ``max |y| > cap``.

    ``project`` is applied after every step; it must be the identity on the
    invariant subspace the exact flow stays in.
    """
    y = np.array(y0, dtype=float)
    if project is not None:
        y = project(y)
    out = [y.copy()]
    times = [0.0]
    half = 0.5 * dt
    diverged = False
    for k in range(1, steps + 1):
        k1 = F @ y
        k2 = F @ (y + half * k1)
        k3 = F @ (y + half * k2)
        k4 = F @ (y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if project is not None:
            y = project(y)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > cap:
            diverged = True
            out.append(y.copy())
            times.append(k * dt)
            break
        if k % stride == 0 or k == steps:
            out.append(y.copy())
            times.append(k * dt)
    return np.array(times), np.array(out), diverged


def _steps(dt: float, horizon: float) -> int:
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon < dt:
        raise ValueError(f"horizon {horizon} is shorter than one step {dt}")
    return int(round(horizon / dt))


def _frame_matrix(L: Matrix, frame: Partition | None) -> tuple[np.ndarray, np.ndarray | None]:
    Lf = L.to_numpy()
    if frame is None:
        return Lf, None
    if not is_eep(L, frame):
        raise PartitionError("the error frame needs an EEP of the simulated Laplacian")
    R = r_matrix(frame, L.n)
    return (R @ L).to_numpy(), R.to_numpy()


def _mean_remover(frame: Partition, blocks: int) -> Callable[[np.ndarray], np.ndarray]:
    # Rounding leaks into the cell-mean directions, which are unstable for a > 0;
    # the exact error flow never leaves the zero-mean subspace, so reset it each step.
    n = frame.n
    idx = [np.array(c) + k * n for k in range(blocks) for c in frame.cells if len(c) > 1]
    singles = [c[0] + k * n for k in range(blocks) for c in frame.cells if len(c) == 1]

    def project(y: np.ndarray) -> np.ndarray:
        for ix in idx:
            y[ix] -= y[ix].mean()
        y[singles] = 0.0
        return y

    return project


def simulate_single(
    L_total: Matrix,
    x0: Sequence[float],
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
    frame: Partition | None = None,
    stride: int = 1,
) -> Trajectory:
    n = L_total.n
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"initial state has {x0.size} entries, expected {n}")
    Lf, R = _frame_matrix(L_total, frame)
    if R is not None:
        x0 = R @ x0
    proj = _mean_remover(frame, 1) if frame is not None else None
    times, states, diverged = rk4(-Lf, x0, dt, _steps(dt, horizon), math.inf, stride, proj)
    if diverged:
        raise NonFinite("single-integrator state became non-finite")
    return Trajectory(times, states, "single", n, dt, frame="absolute" if frame is None else "error")


def second_order_matrix(L: np.ndarray, a: float, b: float, k1: float, k2: float) -> np.ndarray:
    n = L.shape[0]
    eye = np.eye(n)
    return np.block([[np.zeros((n, n)), eye], [a * eye - k1 * L, b * eye - k2 * L]])


def simulate_second(
    L_total: Matrix,
    a: float,
    b: float,
    k1: float,
    k2: float,
    x0: Sequence[float],
    v0: Sequence[float],
    dt: float = DEFAULT_DT,
    horizon: float = DEFAULT_HORIZON,
    frame: Partition | None = None,
    cap: float = DEFAULT_CAP,
    stride: int = 1,
) -> Trajectory:
    """RK4 on the stacked ``2N`` system; runs passing ``|state| > cap`` stop and are flagged."""
    n = L_total.n
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (n,) or v0.shape != (n,):
        raise ValueError(f"initial positions and velocities need {n} entries each")
    Lf, R = _frame_matrix(L_total, frame)
    if R is not None:
        x0, v0 = R @ x0, R @ v0
    F = second_order_matrix(Lf, a, b, k1, k2)
    proj = _mean_remover(frame, 2) if frame is not None else None
    times, states, diverged = rk4(F, np.concatenate([x0, v0]), dt, _steps(dt, horizon), cap, stride, proj)
    return Trajectory(
        times, states, "second", n, dt, frame="absolute" if frame is None else "error", diverged=diverged
    )


@dataclass(frozen=True)
class ConvergenceReport:
    cells: tuple[tuple[int, ...], ...]
    times: np.ndarray
    dispersion: np.ndarray  # (len(cells), len(times))
    final_dispersion: tuple[float, ...]
    final_means: tuple[float, ...] | None  # None in the error frame
    stable: tuple[bool, ...]
    mean_gaps: tuple[tuple[int, int, float], ...]  # (cell, cell, |mean difference|)
    tol: float
    diverged: bool

    def stable_cells(self) -> list[tuple[int, ...]]:
        return [c for c, s in zip(self.cells, self.stable) if s]

    def distinct_means(self, gap: float) -> int:
        """Number of groups of final cell means separated by more than ``gap``."""
        if self.final_means is None:
            raise ValueError("cell means are not available in the error frame")
        vals = sorted(self.final_means)
        return 1 + sum(1 for x, y in zip(vals, vals[1:]) if y - x > gap)

    def to_json(self) -> dict:
        return {
            "tol": self.tol,
            "diverged": self.diverged,
            "horizon": float(self.times[-1]),
            "cells": [
                {
                    "cell": [v + 1 for v in c],
                    "final_dispersion": d,
                    "stable": s,
                    **({"final_mean": m} if self.final_means is not None else {}),
                }
                for k, (c, d, s) in enumerate(zip(self.cells, self.final_dispersion, self.stable))
                for m in [self.final_means[k] if self.final_means is not None else None]
            ],
            "mean_gaps": [[i + 1, j + 1, g] for i, j, g in self.mean_gaps],
        }


def _cell_dispersion(t: Trajectory, cell: Sequence[int]) -> np.ndarray:
    x = t.positions[:, cell]
    if t.model == "single":
        return x.max(axis=1) - x.min(axis=1)
    v = t.velocities[:, cell]
    best = np.zeros(len(t.times))
    for a in range(len(cell)):
        for b in range(a + 1, len(cell)):
            d = np.hypot(x[:, a] - x[:, b], v[:, a] - v[:, b])
            best = np.maximum(best, d)
    return best


def convergence_report(t: Trajectory, p: Partition, tol: float = DEFAULT_TOL) -> ConvergenceReport:
    if p.n != t.n:
        raise ValueError(f"partition covers {p.n} nodes, trajectory has {t.n}")
    disp = np.array([_cell_dispersion(t, list(c)) for c in p.cells])
    final = tuple(float(d[-1]) for d in disp)
    stable = tuple(bool(np.isfinite(d) and d < tol and not t.diverged) for d in final)
    if t.frame == "absolute":
        means = tuple(float(np.mean(t.positions[-1, list(c)])) for c in p.cells)
        gaps = tuple(
            (i, j, abs(means[i] - means[j])) for i in range(len(p)) for j in range(i + 1, len(p))
        )
    else:
        means, gaps = None, ()
    return ConvergenceReport(p.cells, t.times, disp, final, means, stable, gaps, tol, t.diverged)


def slowest_rate(L: Matrix) -> float:
    """Smallest positive real part among the eigenvalues of ``L``."""
    from .stability import eigenvalues

    spec = eigenvalues(L)
    rates = [z.real for z in spec.values if z.real > spec.tol]
    return min(rates) if rates else math.inf


def settling_horizon(rate: float, factor: float = 1e8, floor: float = DEFAULT_HORIZON) -> float:
    """Horizon long enough for ``exp(-rate T) < 1/factor`` (and at least ``floor``)."""
    if not rate > 0 or math.isinf(rate):
        return floor
    return max(floor, math.log(factor) / rate)
