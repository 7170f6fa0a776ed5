"""Scattering data of the Bäcklund extension and its time evolution.

Given half-line data u_+ on [0, x_max] with Jost boundary values
(A(z), B(z)) = m_1^+(0, z), the scattering function of the extension is

    a(z) = [(z - iq) A(z) conj(A(-conj z)) - (z + iq) B(z) conj(B(-conj z))] / (z - i beta)

and b, r and the norming constants follow in closed form. No Jost
integration over the extended line is required.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .backlund import BetaDecision, backlund_extend, beta_dichotomy, DEGENERATE_THRESHOLD
from .core import (
    BranchAmbiguous,
    DegenerateDichotomy,
    InstableNorming,
    NearDegenerateBeta,
    RemovableSingularity,
    SampledField,
    ScatteringData,
    SpectralGrid,
)
from .zs_scattering import check_real_axis, find_imaginary_zeros, jost_boundary_values

__all__ = [
    "ExtensionSpectrum",
    "extension_a",
    "extension_b",
    "extension_gamma",
    "extension_scattering",
    "extension_scattering_from_boundary",
    "evolve_data",
    "symmetry_report",
]

log = logging.getLogger(__name__)

A_BRANCH_THRESHOLD = 1e-8
INSTABLE_THRESHOLD = 1e-6
DICHOTOMY_THRESHOLD = 1e-4


def _raw_a(z, A, Am, B, Bm, q, beta):
    return ((z - 1j * q) * A * Am - (z + 1j * q) * B * Bm) / (z - 1j * beta)


def _regular_a(z, A, Am, B, Bm, q, beta):
    """a(z) with the apparent pole at z = i beta cancelled when beta = |q|."""
    if beta > 0 and q > 0:
        return A * Am - (z + 1j * q) / (z - 1j * q) * B * Bm
    if beta > 0 and q < 0:
        return (z - 1j * q) / (z + 1j * q) * A * Am - B * Bm
    return _raw_a(z, A, Am, B, Bm, q, beta)


def extension_a(z, A, Am, B, Bm, q: float, beta: float):
    """Scattering function of the extension.

    Parameters
    ----------
    z : array_like
        Points with Im z >= 0.
    A, B : array_like
        A(z), B(z).
    Am, Bm : array_like
        conj(A(-conj z)), conj(B(-conj z)).
    q, beta : float

    Returns
    -------
    ndarray
    """
    z = np.asarray(z, dtype=complex)
    return _regular_a(z, np.asarray(A), np.asarray(Am), np.asarray(B), np.asarray(Bm), q, beta)


def extension_b(z, A, A_neg, B, B_neg, q: float, beta: float):
    """b(z) = [(z+iq) A(-z) B(z) + (z-iq) A(z) B(-z)] / (z + i beta) for real z."""
    z = np.asarray(z, dtype=complex)
    return ((z + 1j * q) * A_neg * B + (z - 1j * q) * A * B_neg) / (z + 1j * beta)


def extension_gamma(zk: complex, A, Am, B, Bm, q: float, beta: float,
                    threshold: float = A_BRANCH_THRESHOLD):
    """Norming constant gamma(z_k) from the two closed-form branches.

    Returns
    -------
    gamma : complex
    info : dict
        Both branch values (None when a denominator is unsafe) and flags.
    """
    g_a = g_b = None
    if abs(A) > threshold and abs(Bm) > threshold:
        g_a = (zk - 1j * beta) / (zk + 1j * q) * A / Bm
    if abs(Am) > threshold and abs(B) > threshold and abs(zk - 1j * q) > threshold:
        g_b = (zk - 1j * beta) / (zk - 1j * q) * B / Am
    instable = abs(A) < INSTABLE_THRESHOLD and abs(Bm) < INSTABLE_THRESHOLD
    if instable:
        warnings.warn(f"norming constant at {zk} is ill conditioned", InstableNorming,
                      stacklevel=2)
    if g_a is not None and g_b is not None:
        agree = abs(g_a - g_b) <= 1e-6 * max(abs(g_a), abs(g_b))
        gamma = 0.5 * (g_a + g_b) if agree else (g_a if abs(A) > threshold else g_b)
    elif g_a is not None and abs(A) > threshold:
        gamma, agree = g_a, None
    elif g_b is not None:
        gamma, agree = g_b, None
    elif g_a is not None:
        gamma, agree = g_a, None
    else:
        raise InstableNorming(f"no safe branch for the norming constant at {zk}")
    return complex(gamma), {"branch_A": g_a, "branch_B": g_b, "agree": agree,
                            "instable": instable}


@dataclass(frozen=True)
class ExtensionSpectrum:
    """Scattering data of a Bäcklund extension together with its inputs.

    Attributes
    ----------
    base : ScatteringData
    A_samples, B_samples : ndarray
        Half-line boundary values on the spectral grid.
    a_samples, b_samples : ndarray
        a(z), b(z) on the spectral grid.
    decision : BetaDecision
    a_of : callable
        Vectorized a(z) for Im z >= 0.
    a_prime : tuple of complex
        a'(z_k) from the zero finder.
    gamma_info : tuple of dict
    """

    base: ScatteringData
    A_samples: np.ndarray
    B_samples: np.ndarray
    a_samples: np.ndarray
    b_samples: np.ndarray
    decision: BetaDecision
    a_of: Callable
    a_prime: tuple
    gamma_info: tuple


def _make_a_of(boundary: Callable, q: float, beta: float, indicator_ok: bool):
    def a_of(zs):
        z = np.atleast_1d(np.asarray(zs, dtype=complex))
        near = np.abs(z - 1j * beta) < 1e-9
        if np.any(near) and beta == abs(q):
            if not indicator_ok:
                raise RemovableSingularity(
                    "a(z) has a genuine pole at z = i beta for this branch choice")
            # average over a small symmetric stencil around the removable point
            out = np.empty(z.shape, dtype=complex)
            out[~near] = a_of(z[~near]) if np.any(~near) else out[~near]
            d = 1e-5
            ring = 1j * beta + d * np.array([1, -1, 1j, -1j])
            out[near] = np.mean(a_of(ring))
            return out
        pts = np.concatenate([z, -np.conj(z)])
        # z and -conj(z) often coincide (imaginary axis, symmetric contours)
        keys = np.round(pts.real, 12) + 1j * np.round(pts.imag, 12)
        _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
        A_u, B_u = boundary(pts[first])
        A = np.asarray(A_u)[inverse.reshape(-1)]
        B = np.asarray(B_u)[inverse.reshape(-1)]
        n = z.size
        return extension_a(z, A[:n], np.conj(A[n:]), B[:n], np.conj(B[n:]), q, beta)
    return a_of


def extension_scattering_from_boundary(
    boundary: Callable,
    q: float,
    grid: SpectralGrid,
    decision: BetaDecision,
    mu_estimate: float,
    a_min: float = 1e-6,
    n_scan: int = 2048,
    check_winding: bool = True,
) -> ExtensionSpectrum:
    """Scattering data of an extension from a boundary-value evaluator.

    Parameters
    ----------
    boundary : callable
        z -> (A(z), B(z)), vectorized, for Im z >= 0.
    q : float
    grid : SpectralGrid
    decision : BetaDecision
        Chosen beta.
    mu_estimate : float
        Upper estimate of the largest eigenvalue; sets the scan range
        mu_max = 2 max(mu_estimate, |q|) + 1.
    """
    beta = decision.beta
    z = grid.z_values
    A, B = boundary(z.astype(complex))
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    A_neg, B_neg = A[::-1], B[::-1]
    a = extension_a(z, A, np.conj(A_neg), B, np.conj(B_neg), q, beta)
    b = extension_b(z, A, A_neg, B, B_neg, q, beta)
    indicator_ok = abs(decision.indicator) < DEGENERATE_THRESHOLD or beta != abs(q)
    a_of = _make_a_of(boundary, q, beta, indicator_ok)
    check_real_axis(a, z, lambda s: a_of(np.array([s + 0j]))[0], a_min)
    r = np.conj(b) / np.conj(a)
    mu_max = 2 * max(mu_estimate, abs(q)) + 1
    zeros = find_imaginary_zeros(a_of, mu_max, n_scan=n_scan, check_winding=check_winding)
    mus, gammas, infos, primes = [], [], [], []
    for mu, da in zeros:
        zk = 1j * mu
        (Ak, Bk) = boundary(np.array([zk]))
        Ak, Bk = complex(Ak[0]), complex(Bk[0])
        # -conj(z_k) = z_k on the imaginary axis
        gamma, info = extension_gamma(zk, Ak, np.conj(Ak), Bk, np.conj(Bk), q, beta)
        if abs(mu - abs(q)) < DICHOTOMY_THRESHOLD:
            warnings.warn(f"eigenvalue {mu:.8g} within {DICHOTOMY_THRESHOLD:g} of |q|",
                          DegenerateDichotomy, stacklevel=2)
        mus.append(mu)
        gammas.append(gamma)
        infos.append(info)
        primes.append(da)
    base = ScatteringData(grid, r, tuple(mus), tuple(gammas), beta, q)
    return ExtensionSpectrum(base, A, B, a, b, decision, a_of, tuple(primes), tuple(infos))


def extension_scattering(
    u_plus: SampledField,
    q: float,
    grid: SpectralGrid,
    a_min: float = 1e-6,
    n_scan: int = 2048,
    check_winding: bool = True,
    refine: int = 2,
) -> ExtensionSpectrum:
    """Scattering data of the Bäcklund extension of half-line data.

    Parameters
    ----------
    u_plus : SampledField
        Data on [0, x_max] with x = 0 as first node.
    q : float
        Delta strength.
    grid : SpectralGrid
        Real grid for r(z).

    Returns
    -------
    ExtensionSpectrum

    Raises
    ------
    BranchAmbiguous
        When the near-degenerate beta test and the Bäcklund tail disagree.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NearDegenerateBeta)
        decision = beta_dichotomy(u_plus, q, refine=refine)
    if decision.near_degenerate and decision.tail_beta != decision.beta:
        raise BranchAmbiguous(
            f"|indicator| = {abs(decision.indicator):.2e}; threshold picks beta = "
            f"{decision.beta}, Bäcklund tail gives {decision.tail_beta}")
    ue = backlund_extend(u_plus, q, refine)
    mass = float(np.sum(np.abs(ue.values) ** 2) * ue.grid.h)
    boundary = lambda zs: jost_boundary_values(u_plus, zs)  # noqa: E731
    return extension_scattering_from_boundary(
        boundary, q, grid, decision, 0.5 * mass, a_min=a_min, n_scan=n_scan,
        check_winding=check_winding)


def evolve_data(data: ScatteringData, t: float) -> ScatteringData:
    """Scattering data at time t: r e^{-i z^2 t/2}, gamma_k e^{-i mu_k^2 t/2}."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return data
    z = data.z
    r = data.r_samples * np.exp(-0.5j * z * z * t)
    gammas = tuple(g * np.exp(-0.5j * mu * mu * t)
                   for g, mu in zip(data.norming_constants, data.zeros))
    return data.replace(r_samples=r, norming_constants=gammas)


def symmetry_report(data: ScatteringData, a_samples=None, b_samples=None) -> dict:
    """Deviations from the q-symmetry identities of the scattering data.

    Parameters
    ----------
    data : ScatteringData
    a_samples, b_samples : ndarray, optional
        a and b on the grid; when omitted, a is rebuilt from (r, zeros) and
        b = conj(r) a.

    Returns
    -------
    dict
        ``a_sym`` = sup |conj(a(-z)) - a(z)|,
        ``b_sym`` = sup |b(-z) - b(z)(z + i beta)/(z - i beta)|,
        ``gamma_sym`` = max_k | |gamma_k|^2 - (mu_k - beta)/(mu_k + beta) |.
    """
    z = data.z
    if a_samples is None:
        a_samples = data.a_of(z.astype(complex))
    if b_samples is None:
        b_samples = np.conj(data.r_samples) * a_samples
    beta = data.beta
    a_sym = float(np.max(np.abs(np.conj(a_samples[::-1]) - a_samples))) if z.size else 0.0
    factor = (z + 1j * beta) / (z - 1j * beta) if beta != 0 else np.ones_like(z)
    b_sym = float(np.max(np.abs(b_samples[::-1] - b_samples * factor)))
    g_dev = [abs(abs(g) ** 2 - (mu - beta) / (mu + beta))
             for mu, g in zip(data.zeros, data.norming_constants)]
    return {"a_sym": a_sym, "b_sym": b_sym, "gamma_sym": float(max(g_dev, default=0.0))}
