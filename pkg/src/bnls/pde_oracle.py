"""Direct solver for i u_t + u_xx / 2 + q delta_0 u + |u|^2 u = 0 with even data.

Strang splitting: a half step of the pointwise phase rotation
u -> u e^{i |u|^2 dt / 2}, a Crank-Nicolson step of the linear part, and
another half step. Even data are evolved on x >= 0 with the mirror
condition u_{-1} = u_1, so the delta enters only the row at x = 0:
(u_1 - u_0) / h^2 + (q / h) u_0, the cell-integrated form of the jump
u_x(0+) - u_x(0-) + 2 q u(0) = 0. The far end is Dirichlet zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .core import (
    BlowUp,
    NotEven,
    SampledField,
    SpatialGrid,
    TailContamination,
)

__all__ = [
    "SimConfig",
    "Conserved",
    "simulate",
    "conserved_quantities",
    "discrete_energy",
    "robin_residual",
    "TAIL_THRESHOLD",
    "BLOWUP_FACTOR",
]

log = logging.getLogger(__name__)

TAIL_THRESHOLD = 1e-5
BLOWUP_FACTOR = 10.0
_TAIL_NODES = 5


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one simulation.

    Parameters
    ----------
    grid : SpatialGrid
        Symmetric about 0 with x = 0 as a node.
    dt : float
        Time step, 0 < dt <= h.
    t_end : float
        Final time.
    q : float
        Delta strength.
    boundary : str
        Only "even-reflection" is supported.
    tail_threshold : float
        Largest |u| allowed next to the truncation boundary.
    blowup_factor : float
        BlowUp fires when sup |u| exceeds this multiple of its initial value.
    """

    grid: SpatialGrid
    dt: float
    t_end: float
    q: float
    boundary: str = "even-reflection"
    tail_threshold: float = TAIL_THRESHOLD
    blowup_factor: float = BLOWUP_FACTOR

    def __post_init__(self):
        if not self.grid.is_symmetric():
            raise ValueError("the grid must be symmetric about 0")
        self.grid.zero_index()
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.dt > self.grid.h * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} exceeds h = {self.grid.h}")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if not self.blowup_factor > 1:
            raise ValueError("blowup_factor must exceed 1")
        if self.boundary != "even-reflection":
            raise ValueError(f"unsupported boundary {self.boundary!r}")


class Conserved(dict):
    """Mass and energy, accessible as ``c["mass"]`` or ``c.mass``."""

    __getattr__ = dict.__getitem__


def _half_operator(n: int, h: float, q: float) -> sp.csc_matrix:
    """u_xx / 2 + q delta_0 on nodes x_0 = 0, ..., x_{n-1}, with u_{-1} = u_1 and u_n = 0."""
    main = np.full(n, -1.0 / h**2)
    upper = np.full(n - 1, 0.5 / h**2)
    lower = np.full(n - 1, 0.5 / h**2)
    upper[0] = 1.0 / h**2
    main[0] += q / h
    return sp.diags([lower, main, upper], [-1, 0, 1], format="csc", dtype=complex)


def _mirror(half: np.ndarray) -> np.ndarray:
    return np.concatenate([half[:0:-1], half])


def _check_tail(half: np.ndarray, threshold: float, t: float) -> None:
    edge = float(np.max(np.abs(half[-_TAIL_NODES:])))
    if edge > threshold:
        raise TailContamination(f"|u| = {edge:.2e} near the boundary at t = {t:g}")


def simulate(u0: SampledField, cfg: SimConfig, snapshot_times, monitor: list | None = None,
             monitor_every: int = 0) -> list:
    """Evolve even data and return the field at each snapshot time.

    Parameters
    ----------
    u0 : SampledField
        Even initial data on ``cfg.grid``.
    cfg : SimConfig
    snapshot_times : sequence of float
        Non-decreasing times in [0, t_end], each a multiple of dt.
    monitor : list, optional
        Receives (t, mass, energy) at every snapshot and, if
        ``monitor_every`` > 0, every that many steps.

    Returns
    -------
    list of SampledField

    Raises
    ------
    NotEven
        If u0 is not even.
    BlowUp
        If sup |u| exceeds ``cfg.blowup_factor`` times its initial value.
    TailContamination
        If |u| next to the boundary exceeds ``cfg.tail_threshold``.
    """
    grid = cfg.grid
    if u0.grid != grid:
        raise ValueError("u0 must live on cfg.grid")
    values = np.asarray(u0.values, dtype=complex)
    if not np.array_equal(values, values[::-1]):
        dev = float(np.max(np.abs(values - values[::-1])))
        if dev > 1e-12 * max(1.0, float(np.max(np.abs(values)))):
            raise NotEven(f"sup |u0(x) - u0(-x)| = {dev:.2e}")
    times = [float(t) for t in snapshot_times]
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("snapshot times must be non-decreasing")
    if times and (times[0] < 0 or times[-1] > cfg.t_end * (1 + 1e-12)):
        raise ValueError("snapshot times must lie in [0, t_end]")
    steps = []
    for t in times:
        n = round(t / cfg.dt)
        if abs(n * cfg.dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"snapshot time {t} is not a multiple of dt = {cfg.dt}")
        steps.append(n)

    k0 = grid.zero_index()
    half = values[k0:].copy()
    n = half.size
    h, dt, q = grid.h, cfg.dt, cfg.q
    _check_tail(half, cfg.tail_threshold, 0.0)
    sup0 = float(np.max(np.abs(half)))
    L = _half_operator(n, h, q)
    eye = sp.identity(n, dtype=complex, format="csc")
    solver = splu((eye - 0.5j * dt * L).tocsc())
    rhs_op = (eye + 0.5j * dt * L).tocsr()

    def record(step, u_half):
        if monitor is not None:
            c = conserved_quantities(SampledField(grid, _mirror(u_half)), q)
            monitor.append((step * dt, c["mass"], c["energy"]))

    out = []
    step = 0
    for target in steps:
        while step < target:
            half *= np.exp(0.5j * dt * np.abs(half) ** 2)
            half = solver.solve(rhs_op @ half)
            half *= np.exp(0.5j * dt * np.abs(half) ** 2)
            step += 1
            peak = float(np.max(np.abs(half)))
            if not np.isfinite(peak) or peak > cfg.blowup_factor * max(sup0, 1e-300):
                raise BlowUp(f"sup |u| = {peak:.3g} exceeds {cfg.blowup_factor:g} x {sup0:.3g} "
                             f"at t = {step * dt:g}")
            _check_tail(half, cfg.tail_threshold, step * dt)
            if monitor_every and step % monitor_every == 0 and step != target:
                record(step, half)
        out.append(SampledField(grid, _mirror(half)))
        record(step, half)
    log.debug("simulated %d steps", step)
    return out


def _derivative4(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order central differences, one-sided fourth order at the ends."""
    d = np.empty_like(values)
    d[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12 * h)
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    for k in (0, 1):
        d[k] = np.dot(c, values[k:k + 5])
        d[-1 - k] = -np.dot(c, values[-1 - k - np.arange(5)])
    return d


def conserved_quantities(u: SampledField, q: float) -> Conserved:
    """Half-line mass and energy of an even field.

    mass = int_0^inf |u|^2 and
    energy = int_0^inf (|u_x|^2 - |u|^4) - q |u(0)|^2, by the trapezoid rule
    with fourth-order differences for u_x (one-sided at x = 0).
    """
    grid = u.grid
    if not grid.is_symmetric():
        raise ValueError("conserved quantities need a symmetric grid")
    k0 = grid.zero_index()
    vals = np.asarray(u.values, dtype=complex)
    half = vals[k0:]
    if half.size < 5:
        raise ValueError("need at least 5 nodes on x >= 0")
    # one-sided at x = 0: u is only piecewise smooth across the delta
    ux = _derivative4(half, grid.h)
    x = grid.x[k0:]
    mass = float(np.trapezoid(np.abs(half) ** 2, x))
    energy = float(np.trapezoid(np.abs(ux) ** 2 - np.abs(half) ** 4, x) - q * abs(half[0]) ** 2)
    return Conserved(mass=mass, energy=energy)


def discrete_energy(u: SampledField, q: float) -> float:
    """Energy in the form the scheme's linear step conserves exactly.

    h sum_{j>=0} |u_{j+1} - u_j|^2 / h^2 - h sum' |u_j|^4 - q |u_0|^2 on x >= 0,
    where sum' halves the x = 0 term. Strang splitting changes it by O(dt^2),
    with no contribution from the spatial truncation error.
    """
    k0 = u.grid.zero_index()
    half = np.asarray(u.values, dtype=complex)[k0:]
    h = u.grid.h
    kinetic = float(np.sum(np.abs(np.diff(half)) ** 2) / h)
    quartic = np.abs(half) ** 4
    potential = h * float(np.sum(quartic) - 0.5 * quartic[0])
    return kinetic - potential - q * abs(half[0]) ** 2


def robin_residual(u: SampledField, q: float) -> complex:
    """(u_1 - u_0) / h + q u_0, the first-order discrete u_x(0+) + q u(0)."""
    k0 = u.grid.zero_index()
    return complex((u.values[k0 + 1] - u.values[k0]) / u.grid.h + q * u.values[k0])
