"""Reconstruction of u(x, t) from scattering data.

Three pieces are provided: the exact reflectionless solve (a finite linear
system for the residues of m), the first Born approximation of the
pole-free Riemann-Hilbert problem, and the re-dressing of the pole-free
solution by Darboux insertions of the discrete spectrum. ``solve_ivp``
chains these with the Bäcklund extension to solve the half-line problem.
"""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import fresnel

from .core import (
    NotEven,
    RegimeWarning,
    SampledField,
    ScatteringData,
    SingularLinearSystem,
    SpectralGrid,
    UnsupportedSpectrum,
    cauchy_weights,
    check_tail,
)
from .darboux import _dress, add_pole_arrays
from .spectral_data import extension_scattering

__all__ = [
    "ReflectionlessConfig",
    "FieldSolution",
    "solve_reflectionless",
    "oscillatory_weights",
    "born_reconstruct",
    "reconstruct",
    "solve_ivp",
    "TRAPEZOID_T_MAX",
    "BORN_TAIL",
]

log = logging.getLogger(__name__)

TRAPEZOID_T_MAX = 10.0
BORN_TAIL = 1e-4
BORN_REGIME = 0.2
_X_CHUNK = 256


@dataclass(frozen=True)
class ReflectionlessConfig:
    """Poles z_k in the upper half plane and their couplings c_k at t = 0.

    The residue condition is Res_{z_k} m_1 = c_k e^{-i theta(z_k)} m_2(z_k)
    with theta = x z - t z^2 / 2.
    """

    zeros: tuple = ()
    couplings: tuple = ()

    def __post_init__(self):
        zeros = tuple(complex(z) for z in self.zeros)
        couplings = tuple(complex(c) for c in self.couplings)
        if len(zeros) != len(couplings):
            raise ValueError("one coupling per pole is required")
        if any(z.imag <= 0 for z in zeros):
            raise ValueError("poles must lie in the upper half plane")
        if any(c == 0 for c in couplings):
            raise ValueError("couplings must be nonzero")
        for j in range(len(zeros)):
            for k in range(j):
                if abs(zeros[j] - zeros[k]) < 1e-12:
                    raise ValueError("poles must be distinct")
        object.__setattr__(self, "zeros", zeros)
        object.__setattr__(self, "couplings", couplings)

    @classmethod
    def from_norming(cls, mus, gammas) -> "ReflectionlessConfig":
        """Couplings c_k = gamma_k / a'(i mu_k) for the Blaschke product a."""
        poles = [1j * float(m) for m in mus]
        couplings = []
        for k, zk in enumerate(poles):
            da = 1.0 / (zk - np.conj(zk))
            for j, zj in enumerate(poles):
                if j != k:
                    da *= (zk - zj) / (zk - np.conj(zj))
            couplings.append(complex(gammas[k]) / da)
        return cls(tuple(poles), tuple(couplings))


class FieldSolution(NamedTuple):
    """Potential at the requested x and the matching frame evaluator.

    ``m_eval(z)`` returns m(x, t, z) with shape (len(x), 2, 2).
    """

    u: np.ndarray
    m_eval: Callable


def _theta(x, t, z):
    return x * z - 0.5 * t * z * z


def solve_reflectionless(config: ReflectionlessConfig, x, t: float = 0.0) -> FieldSolution:
    """Exact solution of the reflectionless Riemann-Hilbert problem.

    Parameters
    ----------
    config : ReflectionlessConfig
    x : float or array_like
        Positions.
    t : float
        Time.

    Returns
    -------
    FieldSolution
        u = -i sum_k (beta_k)_1, where beta_k is the residue of m_2 at conj z_k.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    n = len(config.zeros)
    if n == 0:
        eye = np.eye(2, dtype=complex)
        return FieldSolution(np.zeros(xs.size, dtype=complex),
                             lambda z: np.broadcast_to(eye, (xs.size, 2, 2)).copy())
    zk = np.array(config.zeros)
    ck = np.array(config.couplings)
    cx = ck[None, :] * np.exp(-1j * _theta(xs[:, None], t, zk[None, :]))
    # rows scaled by 1/max(1, |c_x|) to keep the system balanced for large |x|
    scale = 1.0 / np.maximum(1.0, np.abs(cx))
    M = np.zeros((xs.size, 2 * n, 2 * n), dtype=complex)
    rhs = np.zeros((xs.size, 2 * n, 2), dtype=complex)
    K_ab = 1.0 / (zk[:, None] - np.conj(zk)[None, :])      # 1/(z_k - conj z_j)
    K_ba = 1.0 / (np.conj(zk)[:, None] - zk[None, :])      # 1/(conj z_k - z_j)
    idx = np.arange(n)
    M[:, idx, idx] = scale
    M[:, :n, n:] = -(scale * cx)[:, :, None] * K_ab[None]
    M[:, n + idx, n + idx] = scale
    M[:, n:, :n] = (scale * np.conj(cx))[:, :, None] * K_ba[None]
    rhs[:, :n, 1] = scale * cx
    rhs[:, n:, 0] = -scale * np.conj(cx)
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularLinearSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularLinearSystem("non-finite residues")
    alpha = sol[:, :n, :]
    beta = sol[:, n:, :]
    u = -1j * np.sum(beta[:, :, 0], axis=1)

    def m_eval(z):
        z = complex(z)
        m = np.zeros((xs.size, 2, 2), dtype=complex)
        m[:, :, 0] = np.array([1.0, 0.0]) + np.sum(alpha / (z - zk)[None, :, None], axis=1)
        m[:, :, 1] = np.array([0.0, 1.0]) + np.sum(beta / (z - np.conj(zk))[None, :, None], axis=1)
        return m

    return FieldSolution(u, m_eval)


def _fresnel_cells(tau: np.ndarray, a: float, sign: int):
    """Cell integrals of e^{-i sign a tau^2} and tau e^{-i sign a tau^2}.

    ``tau`` has shape (..., n_nodes); results have shape (..., n_nodes - 1).
    """
    k = np.sqrt(2 * a / np.pi)
    S, C = fresnel(tau * k)
    F = (C - 1j * sign * S) / k
    m0 = np.diff(F, axis=-1)
    E = np.exp(-1j * sign * a * tau * tau)
    m1 = np.diff(E, axis=-1) / (-2j * sign * a)
    return m0, m1


def oscillatory_weights(s: np.ndarray, x, t: float, sign: int = 1) -> np.ndarray:
    """Weights W with W @ g = int g(s) e^{i sign theta(x, s)} ds for each x.

    For t <= TRAPEZOID_T_MAX the composite trapezoid rule is used. For
    larger t, g is interpolated linearly and each cell is integrated exactly
    against e^{-i sign t (s - x/t)^2 / 2} through Fresnel integrals.

    Returns
    -------
    ndarray
        Shape (len(x), len(s)).
    """
    s = np.asarray(s, dtype=float)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if t <= TRAPEZOID_T_MAX:
        h = np.diff(s)
        w = np.zeros(s.size)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w[None, :] * np.exp(1j * sign * _theta(xs[:, None], t, s[None, :]))
    a = 0.5 * t
    z0 = xs / t
    tau = s[None, :] - z0[:, None]
    m0, m1 = _fresnel_cells(tau, a, sign)
    h = np.diff(s)[None, :]
    i1 = m1 - tau[:, :-1] * m0
    W = np.zeros((xs.size, s.size), dtype=complex)
    W[:, :-1] += m0 - i1 / h
    W[:, 1:] += i1 / h
    return W * np.exp(1j * sign * xs * xs / (2 * t))[:, None]


def born_reconstruct(data: ScatteringData, x, t: float, r_values=None,
                     tail_threshold: float = BORN_TAIL) -> FieldSolution:
    """First Born approximation of the pole-free Riemann-Hilbert problem.

    u(x, t) = (1/2 pi) int r(s) e^{i theta} ds and
    m(z) = I + (1/2 pi i) int [[0, r e^{i theta}], [conj(r) e^{-i theta}, 0]] / (s - z) ds,
    with theta = x s - t s^2 / 2 and r the t = 0 reflection coefficient.

    Parameters
    ----------
    data : ScatteringData
        Supplies the spectral grid and, unless ``r_values`` is given, r.
    x : float or array_like
    t : float
    r_values : ndarray, optional
        Pole-free reflection coefficient on the grid.
    tail_threshold : float
        Tail guard on r.

    Returns
    -------
    FieldSolution
        ``m_eval`` accepts z off the real axis. The neglected terms are O(|r|^2).
    """
    r = np.asarray(data.r_samples if r_values is None else r_values, dtype=complex)
    s = data.z
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    rmax = float(np.max(np.abs(r))) if r.size else 0.0
    if rmax == 0.0:
        eye = np.eye(2, dtype=complex)
        return FieldSolution(np.zeros(xs.size, dtype=complex),
                             lambda z: np.broadcast_to(eye, (xs.size, 2, 2)).copy())
    check_tail(r, tail_threshold, "reflection coefficient")
    if rmax > BORN_REGIME:
        warnings.warn(f"max |r| = {rmax:.3f} exceeds {BORN_REGIME}; Born term unreliable",
                      RegimeWarning, stacklevel=2)
    u = np.empty(xs.size, dtype=complex)
    for start in range(0, xs.size, _X_CHUNK):
        sl = slice(start, start + _X_CHUNK)
        u[sl] = oscillatory_weights(s, xs[sl], t, 1) @ r / (2 * np.pi)

    def m_eval(z):
        z = complex(z)
        out = np.empty((xs.size, 2, 2), dtype=complex)
        out[:, 0, 0] = 1.0
        out[:, 1, 1] = 1.0
        if t <= TRAPEZOID_T_MAX:
            cw = cauchy_weights(s, z)
            for start in range(0, xs.size, _X_CHUNK):
                sl = slice(start, start + _X_CHUNK)
                ph = np.exp(1j * _theta(xs[sl, None], t, s[None, :]))
                out[sl, 0, 1] = (r[None, :] * ph) @ cw
                out[sl, 1, 0] = (np.conj(r)[None, :] / ph) @ cw
            return out
        g12 = r / (s - z)
        g21 = np.conj(r) / (s - z)
        for start in range(0, xs.size, _X_CHUNK):
            sl = slice(start, start + _X_CHUNK)
            out[sl, 0, 1] = oscillatory_weights(s, xs[sl], t, 1) @ g12 / (2j * np.pi)
            out[sl, 1, 0] = oscillatory_weights(s, xs[sl], t, -1) @ g21 / (2j * np.pi)
        return out

    return FieldSolution(u, m_eval)


def _chain_couplings(data: ScatteringData, t: float):
    """c_k(t) = gamma_k(t) / a_k'(z_k), a_k the product over the first k poles times e^{-l}."""
    out = []
    for k, (mu, g) in enumerate(zip(data.zeros, data.norming_constants)):
        gt = g * np.exp(-0.5j * mu * mu * t)
        out.append(gt / data.a_prime_at(k, n_poles=k + 1))
    return out


def reconstruct(data: ScatteringData, x, t: float, pole_free: bool = True,
                tail_threshold: float = BORN_TAIL):
    """u(x, t) from scattering data given at t = 0.

    The poles are stripped (r_f = r prod (z - conj z_k)/(z - z_k)), the
    pole-free problem is solved in the Born approximation, and the poles
    are inserted back by Darboux steps in order of decreasing mu_k with
    couplings c_k(t) = gamma_k(t) / a_k'(z_k).

    Parameters
    ----------
    data : ScatteringData
        Data at t = 0 with at most two zeros.
    x : float or array_like
    t : float
    pole_free : bool
        Use r_f for the Born term (True) or r itself.

    Returns
    -------
    complex or ndarray
        Same shape as ``x``.
    """
    if len(data.zeros) > 2:
        raise UnsupportedSpectrum(f"{len(data.zeros)} zeros; at most 2 are supported")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    r_f = data.pole_free_r() if pole_free else data.r_samples
    born = born_reconstruct(data, xs, t, r_values=r_f, tail_threshold=tail_threshold)
    u = born.u.copy()
    poles = data.poles
    couplings = _chain_couplings(data, t)
    dressings = []
    for zk, ck in zip(poles, couplings):
        m = born.m_eval(zk)
        for P, Pc, zj in dressings:
            m = _dress(P, Pc, zj, np.conj(zj), m, zk)
        du, P, Pc = add_pole_arrays(m, xs, zk, ck)
        u = u + du
        dressings.append((P, Pc, zk))
    return u if np.ndim(x) else complex(u[0])


def solve_ivp(u0: SampledField, q: float, times, spectral_grid: SpectralGrid | None = None,
              threads: int | None = None, even_tol: float = 1e-10) -> list:
    """Solve the half-line problem for even data through the Bäcklund extension.

    Parameters
    ----------
    u0 : SampledField
        Even initial data on a grid symmetric about 0.
    q : float
        Delta strength.
    times : sequence of float
    spectral_grid : SpectralGrid, optional
        Defaults to 4001 points on [-40, 40].
    threads : int, optional
        Worker threads over x nodes.

    Returns
    -------
    list of SampledField
        u(x, t) = u^e(|x|, t) on the grid of ``u0``.
    """
    grid = u0.grid
    if not grid.is_symmetric():
        raise NotEven("grid is not symmetric about 0")
    dev = float(np.max(np.abs(u0.values - u0.values[::-1])))
    if dev > even_tol:
        raise NotEven(f"sup |u0(x) - u0(-x)| = {dev:.2e}")
    times = [float(t) for t in times]
    if not np.any(u0.values):
        return [SampledField.zeros(grid) for _ in times]
    spectral_grid = spectral_grid or SpectralGrid.uniform(40.0, 4001)
    u_plus = u0.restrict_nonnegative()
    spec = extension_scattering(u_plus, q, spectral_grid)
    data = spec.base
    log.info("zeros %s, beta %s", data.zeros, data.beta)
    xs = u_plus.grid.x
    out = []
    for t in times:
        if threads and threads > 1:
            chunks = np.array_split(xs, threads)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                parts = list(pool.map(lambda c: reconstruct(data, c, t), chunks))
            vals = np.concatenate(parts)
        else:
            vals = reconstruct(data, xs, t)
        full = np.concatenate([vals[:0:-1], vals])
        if full.size != grid.n_points:
            raise ValueError("grid must have x = 0 as its middle node")
        out.append(SampledField(grid, full))
    return out
