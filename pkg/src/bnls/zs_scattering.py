"""Direct scattering for the Zakharov-Shabat operator.

The spectral problem is psi_x = (i z sigma + Q) psi with sigma = diag(1,-1)/2
and Q = [[0, u], [-conj(u), 0]]. Jost columns are integrated in the
phase-factored form m = psi e^{-i x z sigma}, using a Lawson (integrating
factor) variant of the classical Runge-Kutta scheme so that the free
oscillation e^{-i x z} is propagated exactly within each step.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .core import (
    CountMismatch,
    DerivativeVanishes,
    RealAxisZero,
    SampledField,
    ScatteringData,
    SpectralGrid,
    StiffnessError,
    check_tail,
)

__all__ = [
    "JostValue",
    "midpoint_values",
    "refine_samples",
    "propagate_column",
    "jost_solve",
    "jost_boundary_values",
    "jost_a",
    "scattering_coefficients",
    "jost_columns",
    "scan_spectrum",
    "find_imaginary_zeros",
    "winding_number",
    "imaginary_derivative",
]

log = logging.getLogger(__name__)

STEP_GUARD = 50.0


@dataclass(frozen=True)
class JostValue:
    """Jost data at one spectral point.

    Attributes
    ----------
    z : complex
        Spectral parameter.
    x0 : float
        Node where the columns are reported.
    m1_plus, m2_minus : ndarray
        m_1^+(x0, z) and m_2^-(x0, z) (2-vectors).
    a : complex
        det(psi_1^+, psi_2^-).
    b : complex
        det(psi_1^-, psi_1^+) for real z, NaN otherwise.
    """

    z: complex
    x0: float
    m1_plus: np.ndarray
    m2_minus: np.ndarray
    a: complex
    b: complex


def midpoint_values(values: np.ndarray) -> np.ndarray:
    """Cubic interpolation of samples to the cell midpoints (2x refinement)."""
    u = np.asarray(values, dtype=complex)
    n = u.size
    mid = np.empty(n - 1, dtype=complex)
    if n == 2:
        mid[0] = 0.5 * (u[0] + u[1])
        return mid
    if n == 3:
        mid[0] = (3 * u[0] + 6 * u[1] - u[2]) / 8
        mid[1] = (-u[0] + 6 * u[1] + 3 * u[2]) / 8
        return mid
    mid[1:-1] = (-u[:-3] + 9 * u[1:-2] + 9 * u[2:-1] - u[3:]) / 16
    mid[0] = (3 * u[0] + 6 * u[1] - u[2]) / 8
    mid[-1] = (-u[-3] + 6 * u[-2] + 3 * u[-1]) / 8
    return mid


def _lawson_step(y1, y2, h, ua, um, ub, eh, ef, lam1_h, lam2_h):
    """One integrating-factor RK4 step for m' = (Lambda + Q) m."""
    ca, cm, cb = np.conj(ua), np.conj(um), np.conj(ub)
    k1a = ua * y2
    k1b = -ca * y1
    v1 = y1 + 0.5 * h * k1a
    v2 = y2 + 0.5 * h * k1b
    k2a = um * eh * v2
    k2b = -cm / eh * v1
    v1 = y1 + 0.5 * h * k2a
    v2 = y2 + 0.5 * h * k2b
    k3a = um * eh * v2
    k3b = -cm / eh * v1
    v1 = y1 + h * k3a
    v2 = y2 + h * k3b
    k4a = ub * ef * v2
    k4b = -cb / ef * v1
    n1 = y1 + h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a)
    n2 = y2 + h / 6 * (k1b + 2 * k2b + 2 * k3b + k4b)
    return lam1_h * n1, lam2_h * n2


def refine_samples(values: np.ndarray, factor: int = 2) -> np.ndarray:
    """Samples on a grid refined ``factor`` times (factor a power of 2)."""
    vals = np.asarray(values, dtype=complex)
    while factor > 1:
        fine = np.empty(2 * vals.size - 1, dtype=complex)
        fine[0::2] = vals
        fine[1::2] = midpoint_values(vals)
        vals = fine
        factor //= 2
    return vals


def propagate_column(
    u: SampledField,
    zs,
    kind: str,
    stop_index: int | None = None,
    record: bool = False,
    refine: int = 2,
    fine_values: np.ndarray | None = None,
):
    """Integrate one normalized Jost column across the grid.

    Parameters
    ----------
    u : SampledField
        Potential.
    zs : array_like
        Spectral parameters (vectorized).
    kind : {"m1p", "m2m", "m1m", "m2p"}
        Column m_1^+ (from x_max), m_2^- (from x_min), m_1^- (from x_min) or
        m_2^+ (from x_max).
    stop_index : int, optional
        Node where the integration stops (default: the opposite end).
    record : bool
        Return the column at every node, shape (n_points, len(zs), 2).
    refine : int
        Sub-steps per grid cell; intermediate samples come from cubic
        interpolation.
    fine_values : ndarray, optional
        Precomputed ``refine_samples(u.values, refine)``.

    Returns
    -------
    ndarray
        Shape (len(zs), 2), or the recorded array.
    """
    z = np.atleast_1d(np.asarray(zs, dtype=complex))
    vals = refine_samples(u.values, refine) if fine_values is None else fine_values
    mid = midpoint_values(vals)
    n_coarse = u.grid.n_points
    n = vals.size
    h = u.grid.h / refine
    from_right = kind in ("m1p", "m2p")
    first_column = kind in ("m1p", "m1m")
    if from_right:
        start, stop = n - 1, (0 if stop_index is None else stop_index * refine)
        step = -h
    else:
        start, stop = 0, (n - 1 if stop_index is None else stop_index * refine)
        step = h
    if np.max(np.abs(z.imag)) * h > STEP_GUARD:
        raise StiffnessError(f"|Im z| * h = {np.max(np.abs(z.imag)) * h:.1f} exceeds guard")
    d = -1j * z
    eh = np.exp(d * step / 2)
    ef = eh * eh
    if first_column:
        lam1_h = np.ones_like(z)
        lam2_h = np.exp(-1j * z * step)
        y1 = np.ones_like(z)
        y2 = np.zeros_like(z)
    else:
        lam1_h = np.exp(1j * z * step)
        lam2_h = np.ones_like(z)
        y1 = np.zeros_like(z)
        y2 = np.ones_like(z)
    out = None
    if record:
        out = np.full((n_coarse, z.size, 2), np.nan, dtype=complex)
        out[start // refine, :, 0] = y1
        out[start // refine, :, 1] = y2
    if from_right:
        for j in range(start, stop, -1):
            y1, y2 = _lawson_step(y1, y2, step, vals[j], mid[j - 1], vals[j - 1],
                                  eh, ef, lam1_h, lam2_h)
            if record and (j - 1) % refine == 0:
                out[(j - 1) // refine, :, 0] = y1
                out[(j - 1) // refine, :, 1] = y2
    else:
        for j in range(start, stop):
            y1, y2 = _lawson_step(y1, y2, step, vals[j], mid[j], vals[j + 1],
                                  eh, ef, lam1_h, lam2_h)
            if record and (j + 1) % refine == 0:
                out[(j + 1) // refine, :, 0] = y1
                out[(j + 1) // refine, :, 1] = y2
    if record:
        return out
    return np.stack([y1, y2], axis=-1)


def _node(u: SampledField, x0: float) -> int:
    k = u.grid.node_index(x0)
    if k is None:
        raise ValueError(f"x0 = {x0} is not a grid node")
    return k


def _det(v, w):
    return v[..., 0] * w[..., 1] - v[..., 1] * w[..., 0]


def jost_a(u: SampledField, zs, x0: float = 0.0, tail_threshold: float = 1e-8):
    """a(z) = det(m_1^+, m_2^-) at node ``x0`` for Im z >= 0 (vectorized)."""
    check_tail(u.values, tail_threshold, "potential")
    k = _node(u, x0)
    fine = refine_samples(u.values)
    m1p = propagate_column(u, zs, "m1p", stop_index=k, fine_values=fine)
    m2m = propagate_column(u, zs, "m2m", stop_index=k, fine_values=fine)
    a = _det(m1p, m2m)
    return a if np.ndim(zs) else complex(a[0])


def scattering_coefficients(u: SampledField, zs, x0: float = 0.0, tail_threshold: float = 1e-8):
    """a(z) and b(z) for real z (vectorized)."""
    check_tail(u.values, tail_threshold, "potential")
    z = np.atleast_1d(np.asarray(zs, dtype=float))
    k = _node(u, x0)
    fine = refine_samples(u.values)
    m1p = propagate_column(u, z, "m1p", stop_index=k, fine_values=fine)
    m2m = propagate_column(u, z, "m2m", stop_index=k, fine_values=fine)
    m1m = propagate_column(u, z, "m1m", stop_index=k, fine_values=fine)
    a = _det(m1p, m2m)
    b = _det(m1m, m1p) * np.exp(1j * x0 * z)
    return a, b


def jost_solve(u: SampledField, z: complex, x0: float = 0.0,
               tail_threshold: float = 1e-8) -> JostValue:
    """Jost columns and scattering functions at a single spectral point.

    Parameters
    ----------
    u : SampledField
        Potential, negligible at both grid ends.
    z : complex
        Spectral parameter with Im z >= 0.
    x0 : float
        Grid node where the columns are reported.

    Returns
    -------
    JostValue
    """
    z = complex(z)
    if z.imag < 0:
        raise ValueError("jost_solve needs Im z >= 0")
    check_tail(u.values, tail_threshold, "potential")
    k = _node(u, x0)
    fine = refine_samples(u.values)
    m1p = propagate_column(u, [z], "m1p", stop_index=k, fine_values=fine)[0]
    m2m = propagate_column(u, [z], "m2m", stop_index=k, fine_values=fine)[0]
    a = complex(_det(m1p, m2m))
    b = complex("nan")
    if z.imag == 0.0:
        m1m = propagate_column(u, [z], "m1m", stop_index=k, fine_values=fine)[0]
        b = complex(_det(m1m, m1p) * np.exp(1j * x0 * z.real))
    return JostValue(z, float(x0), m1p, m2m, a, b)


def jost_boundary_values(u_plus: SampledField, zs, tail_threshold: float = 1e-8):
    """(A(z), B(z)) = m_1^+(0, z) for a potential supported on [0, x_max].

    The grid of ``u_plus`` must start at x = 0; the column is integrated from
    x_max down to 0.
    """
    if u_plus.grid.node_index(0.0) != 0:
        raise ValueError("half-line data must start at x = 0")
    mags = np.abs(u_plus.values)
    # only the right end is an artificial truncation
    check_tail(np.array([0.0, np.max(mags), mags[-1]]), tail_threshold, "half-line potential")
    m = propagate_column(u_plus, zs, "m1p", stop_index=0)
    if np.ndim(zs):
        return m[:, 0], m[:, 1]
    return complex(m[0, 0]), complex(m[0, 1])


def jost_columns(u: SampledField, z: complex):
    """m_1^+(x, z) and m_2^-(x, z) at every node, each of shape (n_points, 2)."""
    fine = refine_samples(u.values)
    m1p = propagate_column(u, [z], "m1p", record=True, fine_values=fine)[:, 0, :]
    m2m = propagate_column(u, [z], "m2m", record=True, fine_values=fine)[:, 0, :]
    return m1p, m2m


def _parallel_map(func, chunks, threads):
    if threads and threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(func, chunks))
    return [func(c) for c in chunks]


def check_real_axis(a_values: np.ndarray, z: np.ndarray, a_single: Callable,
                    a_min: float = 1e-6, screen: float = 0.05) -> None:
    """Raise :class:`RealAxisZero` if |a| vanishes on or between grid points.

    Grid values below ``a_min`` trip immediately. Local minima of |a| are
    refined with a bounded scalar minimization of |a(z)| when |a| or the
    vertex of the parabola through the three |a|^2 samples is below
    ``screen``.
    """
    mags = np.abs(a_values)
    k = int(np.argmin(mags))
    if mags[k] < a_min:
        raise RealAxisZero(float(z[k]), float(mags[k]))
    sq = mags * mags
    left, mid, right = sq[:-2], sq[1:-1], sq[2:]
    curv = left - 2 * mid + right
    with np.errstate(divide="ignore", invalid="ignore"):
        vertex = np.where(curv > 0, mid - (right - left) ** 2 / (8 * curv), mid)
    interior = np.arange(1, mags.size - 1)
    minima = interior[(mid <= left) & (mid <= right)
                      & ((mags[1:-1] < screen) | (vertex < screen * screen))]
    for j in minima:
        res = minimize_scalar(lambda s: abs(a_single(s)), bounds=(z[j - 1], z[j + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun < a_min:
            raise RealAxisZero(float(res.x), float(res.fun))


def scan_spectrum(u: SampledField, grid: SpectralGrid, a_min: float = 1e-6,
                  threads: int | None = None, x0: float = 0.0,
                  tail_threshold: float = 1e-8) -> ScatteringData:
    """Reflection coefficient r = conj(b)/conj(a) on a spectral grid.

    Parameters
    ----------
    u : SampledField
        Full-line potential.
    grid : SpectralGrid
        Real spectral grid.
    a_min : float
        Threshold declaring a real-axis zero of a(z).
    threads : int, optional
        Split the grid over this many worker threads.

    Returns
    -------
    ScatteringData
        r only; no zeros, beta = q = 0.
    """
    z = grid.z_values
    n_chunks = max(1, threads or 1)
    chunks = np.array_split(z, n_chunks)
    parts = _parallel_map(lambda c: scattering_coefficients(u, c, x0, tail_threshold),
                          chunks, threads)
    a = np.concatenate([p[0] for p in parts])
    b = np.concatenate([p[1] for p in parts])
    check_real_axis(a, z, lambda s: jost_a(u, np.array([s], dtype=complex), x0)[0], a_min)
    r = np.conj(b) / np.conj(a)
    return ScatteringData(grid, r, (), (), 0.0, 0.0)


def imaginary_derivative(a_func: Callable, mu: float, step: float | None = None) -> complex:
    """a'(i mu) from a fourth-order central difference along the imaginary axis."""
    d = step if step is not None else min(1e-3 * max(1.0, mu), 0.25 * mu)
    pts = 1j * (mu + d * np.array([-2.0, -1.0, 1.0, 2.0]))
    f = np.asarray(a_func(pts), dtype=complex)
    dmu = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * d)
    return complex(-1j * dmu)


def winding_number(a_func: Callable, Z: float, delta: float = 1e-3,
                   n_nodes: int = 8192) -> int:
    """Number of zeros of a inside the rectangle [-Z, Z] x [delta, Z]."""
    height = Z - delta
    perim = 4 * Z + 2 * height
    counts = [max(8, int(round(n_nodes * L / perim))) for L in (2 * Z, height, 2 * Z, height)]
    bottom = np.linspace(-Z, Z, counts[0], endpoint=False) + 1j * delta
    right = Z + 1j * np.linspace(delta, Z, counts[1], endpoint=False)
    top = np.linspace(Z, -Z, counts[2], endpoint=False) + 1j * Z
    left = -Z + 1j * np.linspace(Z, delta, counts[3], endpoint=False)
    path = np.concatenate([bottom, right, top, left])
    vals = np.asarray(a_func(path), dtype=complex)
    ratios = np.concatenate([vals[1:] / vals[:-1], [vals[0] / vals[-1]]])
    total = np.sum(np.angle(ratios))
    return int(round(total / (2 * np.pi)))


def find_imaginary_zeros(a_func: Callable, mu_max: float, n_scan: int = 2048,
                         check_winding: bool = True, delta: float = 1e-3,
                         n_contour: int = 8192, deriv_tol: float = 1e-8,
                         zero_tol: float = 1e-6):
    """Zeros of a(z) on the positive imaginary axis.

    Parameters
    ----------
    a_func : callable
        Vectorized evaluator of a(z) for Im z > 0.
    mu_max : float
        Scan (0, mu_max].
    n_scan : int
        Number of scan points.
    check_winding : bool
        Validate the count with the argument principle on the rectangle
        [-Z, Z] x [delta, Z], Z = 10 mu_max.

    Returns
    -------
    list of (float, complex)
        (mu_k, a'(i mu_k)) sorted by decreasing mu_k.
    """
    mus = mu_max * np.arange(1, n_scan + 1) / n_scan
    vals = np.asarray(a_func(1j * mus), dtype=complex)
    re = vals.real
    found = []
    for j in np.nonzero(np.sign(re[:-1]) * np.sign(re[1:]) <= 0)[0]:
        lo, hi = mus[j], mus[j + 1]
        if re[j] == 0.0:
            mu = lo
        elif re[j + 1] == 0.0:
            continue
        else:
            mu = brentq(lambda m: complex(np.asarray(a_func(np.array([1j * m])))[0]).real,
                        lo, hi, xtol=1e-14, rtol=1e-14, maxiter=200)
        val = complex(np.asarray(a_func(np.array([1j * mu])))[0])
        if abs(val) > zero_tol:
            continue
        found.append(mu)
    found = sorted(set(found), reverse=True)
    result = []
    for mu in found:
        da = imaginary_derivative(a_func, mu)
        if abs(da) < deriv_tol:
            raise DerivativeVanishes(f"|a'(i{mu:.8g})| = {abs(da):.2e}")
        result.append((float(mu), da))
    if check_winding:
        count = winding_number(a_func, 10 * mu_max, delta, n_contour)
        if count != len(result):
            raise CountMismatch(len(result), count)
    log.debug("imaginary zeros: %s", [m for m, _ in result])
    return result
