"""Bäcklund transformation and Bäcklund extension of half-line data.

The transformation is computed from its linearization: with
xi = Psi_1^0(x, iq), the first column of the fundamental ZS solution at
z = iq normalized at x = 0, the new potential is u - 2 q F(xi) where
F(b) = b_1 conj(b_2) / (|b_1|^2 + |b_2|^2). Only the ray of xi matters, so
the vector is renormalized after every step.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    NearDegenerateBeta,
    SampledField,
    SpatialGrid,
    ZeroVector,
)
from .zs_scattering import jost_boundary_values, midpoint_values, refine_samples

__all__ = [
    "PMatrixTrace",
    "ratio_functional",
    "p_matrix",
    "backlund_transform",
    "backlund_extend",
    "reflected_transform",
    "check_q_symmetry",
    "BetaDecision",
    "beta_dichotomy",
    "one_sided_derivative",
]

DEGENERATE_THRESHOLD = 1e-5
SUBDOMINANT_THRESHOLD = 1e-6


def ratio_functional(b1, b2):
    """F(b) = b_1 conj(b_2) / (|b_1|^2 + |b_2|^2)."""
    b1 = np.asarray(b1, dtype=complex)
    b2 = np.asarray(b2, dtype=complex)
    return b1 * np.conj(b2) / (np.abs(b1) ** 2 + np.abs(b2) ** 2)


def p_matrix(xi: np.ndarray, q: float) -> np.ndarray:
    """P = phi P_0 phi^{-1} in closed form from xi, shape (n, 2, 2)."""
    xi = np.asarray(xi, dtype=complex)
    n1 = np.abs(xi[:, 0]) ** 2
    n2 = np.abs(xi[:, 1]) ** 2
    norm = n1 + n2
    P = np.empty((xi.shape[0], 2, 2), dtype=complex)
    P[:, 0, 0] = (n1 - n2) / norm
    P[:, 1, 1] = -(n1 - n2) / norm
    P[:, 0, 1] = 2 * xi[:, 0] * np.conj(xi[:, 1]) / norm
    P[:, 1, 0] = 2 * np.conj(xi[:, 0]) * xi[:, 1] / norm
    return -1j * q * P


@dataclass(frozen=True)
class PMatrixTrace:
    """Record of one Bäcklund integration.

    Attributes
    ----------
    grid : SpatialGrid
    phi1 : ndarray
        Unit vectors along xi(x), shape (n, 2).
    P : ndarray
        P(x), shape (n, 2, 2).
    log_norm : ndarray
        log |xi(x)| of the unnormalized solution.
    beta_plus, beta_minus : float
        Tail signs at the right and left grid ends (NaN when the grid ends at 0).
    """

    grid: SpatialGrid
    phi1: np.ndarray
    P: np.ndarray
    log_norm: np.ndarray
    beta_plus: float
    beta_minus: float

    def growth_rate(self, side: int = 1) -> float:
        """Average exponential rate log|xi(x_end)| / |x_end|."""
        k = -1 if side > 0 else 0
        x_end = self.grid.x[k]
        if x_end == 0:
            return float("nan")
        return float(self.log_norm[k] / abs(x_end))


def _rhs(y1, y2, u, q):
    return -0.5 * q * y1 + u * y2, -np.conj(u) * y1 + 0.5 * q * y2


def _integrate_ray(fine: np.ndarray, start: int, stop: int, h: float, q: float, refine: int,
                   initial=(1.0, 0.0)):
    """Projective RK4 for xi' = (-(q/2) sigma_3 + Q) xi on the refined samples."""
    mid = midpoint_values(fine)
    direction = 1 if stop >= start else -1
    step = direction * h
    count = abs(stop - start) // refine + 1
    xi = np.empty((count, 2), dtype=complex)
    lognorm = np.empty(count)
    y1, y2 = complex(initial[0]), complex(initial[1])
    xi[0] = (y1, y2)
    lognorm[0] = 0.0
    acc = 0.0
    k = 0
    for j in range(start, stop, direction):
        ua = fine[j]
        um = mid[j] if direction > 0 else mid[j - 1]
        ub = fine[j + direction]
        a1, a2 = _rhs(y1, y2, ua, q)
        b1, b2 = _rhs(y1 + 0.5 * step * a1, y2 + 0.5 * step * a2, um, q)
        c1, c2 = _rhs(y1 + 0.5 * step * b1, y2 + 0.5 * step * b2, um, q)
        d1, d2 = _rhs(y1 + step * c1, y2 + step * c2, ub, q)
        y1 = y1 + step / 6 * (a1 + 2 * b1 + 2 * c1 + d1)
        y2 = y2 + step / 6 * (a2 + 2 * b2 + 2 * c2 + d2)
        nrm = np.hypot(abs(y1), abs(y2))
        if not np.isfinite(nrm) or nrm < 1e-280:
            raise ZeroVector(f"|xi| = {nrm!r} after renormalization at fine index {j}")
        y1 /= nrm
        y2 /= nrm
        acc += np.log(nrm)
        if (j + direction - start) % refine == 0:
            k += 1
            xi[k] = (y1, y2)
            lognorm[k] = acc
    return xi, lognorm


def _stitch_subdominant(ray: np.ndarray, fine: np.ndarray, start: int, stop: int, h: float,
                        q: float, refine: int) -> np.ndarray:
    """Replace the far part of a ray that lies on the decaying solution.

    When xi(0) = e_1 is (numerically) the decaying solution at the far end,
    forward integration amplifies round-off in the growing mode. The decaying
    solution integrated back from the far end is stable there; the two rays
    are joined where they are closest.
    """
    direction = 1 if stop >= start else -1
    decaying = (1.0, 0.0) if q * direction > 0 else (0.0, 1.0)
    back, _ = _integrate_ray(fine, stop, start, h, q, refine, decaying)
    back = back[::-1]
    if abs(back[0, 1]) > SUBDOMINANT_THRESHOLD:
        return ray
    overlap = np.abs(np.sum(np.conj(ray) * back, axis=1))
    j = int(np.argmax(overlap))
    out = ray.copy()
    out[j:] = back[j:]
    return out


def _tail_beta(v: np.ndarray, q: float) -> float:
    """beta from the dominant component of xi at a grid end."""
    return q if abs(v[0]) > abs(v[1]) else -q


def backlund_transform(u: SampledField, q: float, refine: int = 2):
    """Apply the Bäcklund transformation B_q to a sampled potential.

    Parameters
    ----------
    u : SampledField
        Potential on a grid containing x = 0.
    q : float
        Delta strength.
    refine : int
        RK4 sub-steps per grid cell.

    Returns
    -------
    u_tilde : SampledField
        u - 2 q F(xi).
    trace : PMatrixTrace
    """
    grid = u.grid
    k0 = grid.zero_index()
    n = grid.n_points
    if q == 0.0:
        xi = np.zeros((n, 2), dtype=complex)
        xi[:, 0] = 1.0
        P = np.zeros((n, 2, 2), dtype=complex)
        return u, PMatrixTrace(grid, xi, P, np.zeros(n), 0.0, 0.0)
    fine = refine_samples(u.values, refine)
    h = grid.h / refine
    xi = np.empty((n, 2), dtype=complex)
    lognorm = np.empty(n)
    right, lr = _integrate_ray(fine, k0 * refine, (n - 1) * refine, h, q, refine)
    if k0 < n - 1:
        right = _stitch_subdominant(right, fine, k0 * refine, (n - 1) * refine, h, q, refine)
    xi[k0:] = right
    lognorm[k0:] = lr
    if k0 > 0:
        left, ll = _integrate_ray(fine, k0 * refine, 0, h, q, refine)
        left = _stitch_subdominant(left, fine, k0 * refine, 0, h, q, refine)
        xi[:k0 + 1] = left[::-1]
        lognorm[:k0 + 1] = ll[::-1]
    F = ratio_functional(xi[:, 0], xi[:, 1])
    values = u.values - 2 * q * F
    values[k0] = u.values[k0]
    P = p_matrix(xi, q)
    P[k0] = np.diag([-1j * q, 1j * q])
    beta_plus = _tail_beta(xi[-1], q) if k0 < n - 1 else float("nan")
    beta_minus = _tail_beta(xi[0], q) if k0 > 0 else float("nan")
    trace = PMatrixTrace(grid, xi, P, lognorm, beta_plus, beta_minus)
    return SampledField(grid, values), trace


def reflected_transform(u: SampledField, q: float, refine: int = 2) -> SampledField:
    """R B_q u, the transformed potential composed with x -> -x."""
    ut, _ = backlund_transform(u, q, refine)
    return ut.reflect()


def backlund_extend(u_plus: SampledField, q: float, refine: int = 2) -> SampledField:
    """Bäcklund extension of half-line data to the whole line.

    Parameters
    ----------
    u_plus : SampledField
        Data on [0, x_max]; x = 0 must be the first node.
    q : float
        Delta strength.

    Returns
    -------
    SampledField
        u^e on [-x_max, x_max]: u_plus for x >= 0 and (B_q u_plus)(-x) for x < 0.
    """
    if u_plus.grid.node_index(0.0) != 0:
        raise ValueError("half-line data must start at x = 0")
    ut, _ = backlund_transform(u_plus, q, refine)
    n = u_plus.grid.n_points
    grid = SpatialGrid(-u_plus.grid.x_max, u_plus.grid.x_max, 2 * n - 1)
    values = np.concatenate([ut.values[:0:-1], u_plus.values])
    return SampledField(grid, values)


def check_q_symmetry(u: SampledField, q: float, refine: int = 2) -> dict:
    """Distance of u from R B_q u and the common tail sign.

    Returns
    -------
    dict
        ``sup_deviation`` (sup |u - R B_q u|), ``beta`` (from the right tail),
        ``beta_plus``, ``beta_minus``.
    """
    if not u.grid.is_symmetric():
        raise ValueError("q-symmetry needs a grid symmetric about 0")
    ut, trace = backlund_transform(u, q, refine)
    image = ut.values[::-1]
    dev = float(np.max(np.abs(u.values - image))) if u.values.size else 0.0
    return {
        "sup_deviation": dev,
        "beta": trace.beta_plus,
        "beta_plus": trace.beta_plus,
        "beta_minus": trace.beta_minus,
    }


@dataclass(frozen=True)
class BetaDecision:
    """Outcome of the beta dichotomy for half-line data.

    Attributes
    ----------
    beta : float
        Selected sign parameter.
    indicator : complex
        B(iq) for q > 0, A(-iq) for q < 0.
    near_degenerate : bool
        |indicator| below the degeneracy threshold.
    alternatives : tuple of float
        Both branches when near-degenerate, otherwise just ``beta``.
    tail_beta : float
        beta read from the Bäcklund tail of xi.
    """

    beta: float
    indicator: complex
    near_degenerate: bool
    alternatives: tuple
    tail_beta: float


def beta_dichotomy(u_plus: SampledField, q: float, threshold: float = DEGENERATE_THRESHOLD,
                   refine: int = 2) -> BetaDecision:
    """Decide beta = +q or -q for the extension of ``u_plus``.

    beta = q when (q > 0 and B(iq) = 0) or (q < 0 and A(-iq) != 0), and
    beta = -q otherwise. The indicator is thresholded; near the threshold
    both branches are reported and the tail of xi settles the choice.
    """
    if q == 0.0:
        return BetaDecision(0.0, 0j, False, (0.0,), 0.0)
    A, B = jost_boundary_values(u_plus, np.array([1j * abs(q)]))
    indicator = complex(B[0]) if q > 0 else complex(A[0])
    vanishes = abs(indicator) < threshold
    if q > 0:
        beta = q if vanishes else -q
    else:
        beta = -q if vanishes else q
    _, trace = backlund_transform(u_plus, q, refine)
    tail = trace.beta_plus
    near = vanishes
    alternatives = (beta, -beta) if near else (beta,)
    if near:
        warnings.warn(
            f"|indicator| = {abs(indicator):.2e} below {threshold:g}: beta branches {alternatives}",
            NearDegenerateBeta,
            stacklevel=2,
        )
    return BetaDecision(float(beta), indicator, near, alternatives, float(tail))


def one_sided_derivative(values: np.ndarray, h: float, k: int, side: int) -> complex:
    """Fourth-order one-sided difference at node k (side=+1 forward, -1 backward)."""
    c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
    idx = k + side * np.arange(5)
    return complex(side * np.dot(c, np.asarray(values)[idx]) / h)
