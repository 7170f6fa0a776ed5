"""Darboux transformations adding or removing a simple pole pair (xi, conj(xi)).

Eigenfunctions are handled in the normalized form m(x, z) = psi(x, z)
e^{-i x z sigma}, which stays bounded on the grid. A frame evaluator is a
callable z -> array of shape (n_points, 2, 2) holding m(x, z) at every node.

With b = psi(x, xi) (1, -c/(xi - conj(xi)))^T and P the orthogonal
projector onto b, the dressing matrix is
D(z) = (z - xi) P + (z - conj(xi)) (I - P), the new frame is
D(z) m(x, z) diag(z - xi, z - conj(xi))^{-1}, and the potential changes by
i (xi - conj(xi)) F(b).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .backlund import ratio_functional
from .core import NotAPole, PoleCollision, SampledField, SingularFrame
from .zs_scattering import jost_a, jost_columns

__all__ = [
    "DarbouxStep",
    "PoleSet",
    "SpectralUpdate",
    "DarbouxResult",
    "free_frame",
    "jost_frame",
    "conjugate_frame",
    "frame_vector",
    "projector",
    "complement",
    "add_pole_arrays",
    "remove_pole_arrays",
    "darboux_add",
    "darboux_remove",
    "apply_chain",
]

POLE_TOL = 1e-8

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class DarbouxStep:
    """One pole insertion or removal.

    Attributes
    ----------
    xi : complex
        Pole in the upper half plane.
    c_tilde : complex
        Coupling of the inserted pole (ignored for removal).
    direction : {"add", "remove"}
    """

    xi: complex
    c_tilde: complex = 1.0
    direction: str = "add"

    def __post_init__(self):
        if not complex(self.xi).imag > 0:
            raise ValueError(f"Im xi must be positive, got {self.xi!r}")
        if self.direction not in ("add", "remove"):
            raise ValueError(f"direction must be 'add' or 'remove', got {self.direction!r}")
        if self.direction == "add" and complex(self.c_tilde) == 0:
            raise ValueError("c_tilde must be nonzero")


@dataclass(frozen=True)
class PoleSet:
    """Upper-half-plane poles z_k with their couplings c(z_k)."""

    zeros: tuple = ()
    couplings: tuple = ()

    def __post_init__(self):
        if len(self.zeros) != len(self.couplings):
            raise ValueError("zeros and couplings must have equal length")

    def __len__(self) -> int:
        return len(self.zeros)

    def index(self, xi: complex, tol: float = POLE_TOL):
        """Position of the pole within ``tol`` of ``xi``, or None."""
        for k, zk in enumerate(self.zeros):
            if abs(complex(zk) - complex(xi)) < tol:
                return k
        return None


class SpectralUpdate(NamedTuple):
    """Effect of one Darboux step on the scattering configuration.

    Attributes
    ----------
    poles : PoleSet
        Poles and couplings after the step.
    r_factor : callable
        z -> factor multiplying the reflection coefficient.
    a_factor : callable
        z -> factor multiplying a(z).
    """

    poles: PoleSet
    r_factor: Callable
    a_factor: Callable


class DarbouxResult(NamedTuple):
    """Transformed potential, frame evaluator and spectral update."""

    u: SampledField
    m_eval: Callable
    update: SpectralUpdate


def free_frame(grid) -> Callable:
    """Frame of the zero potential, m = I."""
    n = grid.n_points

    def m_eval(z):
        return np.broadcast_to(np.eye(2, dtype=complex), (n, 2, 2)).copy()

    return m_eval


def conjugate_frame(m: np.ndarray) -> np.ndarray:
    """m(x, conj(z)) from m(x, z) by the symmetry m -> J conj(m) J^{-1}."""
    return np.einsum("ij,njk,kl->nil", _J, np.conj(m), _J.T)


def jost_frame(u: SampledField, zero_tol: float = 1e-6) -> Callable:
    """Frame (m_1^+ / a, m_2^-) of a decaying potential, any z off the real axis.

    For Im z < 0 the symmetry m(x, z) = J conj(m(x, conj z)) J^{-1} is used.
    On the real axis the boundary value from above is returned. At a zero of
    a (|a| < ``zero_tol``) the first column is NaN and the second is taken
    from m_1^+ e^{ixz} / gamma for x > 0, where it is computed stably.
    """
    x = u.grid.x

    def m_eval(z):
        z = complex(z)
        if z.imag < 0:
            return conjugate_frame(m_eval(np.conj(z)))
        m1p, m2m = jost_columns(u, z)
        a = jost_a(u, np.array([z]))[0]
        out = np.empty((u.grid.n_points, 2, 2), dtype=complex)
        out[:, :, 1] = m2m
        if abs(a) < zero_tol and z.imag > 0:
            k = u.grid.zero_index() if u.grid.x_min < 0 < u.grid.x_max else u.grid.n_points // 2
            j = int(np.argmax(np.abs(m2m[k])))
            gamma = m1p[k, j] * np.exp(1j * x[k] * z) / m2m[k, j]
            right = x > x[k]
            out[right, :, 1] = m1p[right] * np.exp(1j * x[right] * z)[:, None] / gamma
            out[:, :, 0] = np.nan
            return out
        out[:, :, 0] = m1p / a
        return out

    return m_eval


def frame_vector(m_xi: np.ndarray, x: np.ndarray, xi: complex, c: complex) -> np.ndarray:
    """b = psi(x, xi) (1, -c/(xi - conj xi))^T, rescaled by e^{-|x| Im xi / 2}.

    Only the ray of b matters, so the rescaling keeps it in range.
    """
    x = np.asarray(x, dtype=float)
    xi = complex(xi)
    damp = np.abs(x) * xi.imag / 2
    e1 = np.exp(0.5j * x * xi - damp)
    e2 = np.exp(-0.5j * x * xi - damp)
    coef = -complex(c) / (xi - np.conj(xi))
    return m_xi[:, :, 0] * e1[:, None] + coef * m_xi[:, :, 1] * e2[:, None]


def projector(b: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto b at every node; SingularFrame if |b| = 0."""
    norm = np.sum(np.abs(b) ** 2, axis=-1)
    if not np.all(np.isfinite(norm)) or np.any(norm <= 0):
        raise SingularFrame("det of the Darboux frame is not positive at some node")
    return np.einsum("ni,nj->nij", b, np.conj(b)) / norm[:, None, None]


def complement(b: np.ndarray) -> np.ndarray:
    """J conj(b) = (-conj b_2, conj b_1), orthogonal to b."""
    return np.stack([-np.conj(b[:, 1]), np.conj(b[:, 0])], axis=-1)


def _dress(P: np.ndarray, Pc: np.ndarray, lam1: complex, lam2: complex, m: np.ndarray,
           z: complex):
    """((z - lam1) P + (z - lam2) Pc) m diag(z - lam1, z - lam2)^{-1}.

    ``Pc`` is I - P, passed separately to avoid cancellation.
    """
    D = (z - lam1) * P + (z - lam2) * Pc
    out = D @ m
    with np.errstate(divide="ignore", invalid="ignore"):
        out[:, :, 0] /= z - lam1
        out[:, :, 1] /= z - lam2
    return out


def add_pole_arrays(m_xi: np.ndarray, x: np.ndarray, xi: complex, c: complex):
    """Potential increment and projector for inserting (xi, c).

    Returns
    -------
    du : ndarray
        i (xi - conj xi) F(b) at each x.
    P, Pc : ndarray
        Projectors onto b and onto J conj(b), shape (n, 2, 2).
    """
    b = frame_vector(m_xi, x, xi, c)
    P = projector(b)
    du = 1j * (xi - np.conj(xi)) * ratio_functional(b[:, 0], b[:, 1])
    return du, P, projector(complement(b))


def remove_pole_arrays(m_xi: np.ndarray, xi: complex):
    """Potential increment and projector for removing the pole at xi.

    Uses v = m_2(x, xi), the column of m that is analytic at xi.
    """
    v = np.array(m_xi[:, :, 1], dtype=complex)
    P = projector(v)
    du = 1j * (xi - np.conj(xi)) * ratio_functional(v[:, 0], v[:, 1])
    return du, P, projector(complement(v))


def darboux_add(m_eval: Callable, u: SampledField, step: DarbouxStep,
                poles: PoleSet | None = None) -> DarbouxResult:
    """Insert the pole pair (xi, conj xi) with coupling c_tilde.

    Parameters
    ----------
    m_eval : callable
        Frame evaluator of ``u`` (z -> m(x, z) on the grid of ``u``).
    u : SampledField
    step : DarbouxStep
        ``direction`` must be "add".
    poles : PoleSet, optional
        Existing poles and couplings of the configuration.

    Returns
    -------
    DarbouxResult
        New potential, frame evaluator, and the update
        r -> r (z - xi)/(z - conj xi), c(z_k) -> c(z_k)(z_k - conj xi)/(z_k - xi).
    """
    poles = poles or PoleSet()
    xi = complex(step.xi)
    c = complex(step.c_tilde)
    if step.direction != "add":
        raise ValueError("darboux_add needs an 'add' step")
    if poles.index(xi) is not None:
        raise PoleCollision(f"xi = {xi!r} is already a pole")
    x = u.grid.x
    du, P, Pc = add_pole_arrays(m_eval(xi), x, xi, c)
    xc = np.conj(xi)

    def m_new(z):
        return _dress(P, Pc, xi, xc, m_eval(z), complex(z))

    zeros = tuple(poles.zeros) + (xi,)
    couplings = tuple(ck * (zk - xc) / (zk - xi)
                      for zk, ck in zip(poles.zeros, poles.couplings)) + (c,)
    update = SpectralUpdate(
        PoleSet(zeros, couplings),
        lambda z: (np.asarray(z) - xi) / (np.asarray(z) - xc),
        lambda z: (np.asarray(z) - xi) / (np.asarray(z) - xc),
    )
    return DarbouxResult(SampledField(u.grid, u.values + du), m_new, update)


def darboux_remove(m_eval: Callable, u: SampledField, xi: complex,
                   poles: PoleSet) -> DarbouxResult:
    """Remove the pole pair (xi, conj xi) from the configuration.

    Parameters
    ----------
    m_eval : callable
        Frame evaluator of ``u``; its second column must be finite at xi.
    u : SampledField
    xi : complex
        An existing pole.
    poles : PoleSet
        Poles and couplings of the configuration.

    Returns
    -------
    DarbouxResult
        Update r -> r (z - conj xi)/(z - xi) and
        c(z_k) -> c(z_k)(z_k - xi)/(z_k - conj xi) for the remaining poles.
    """
    xi = complex(xi)
    k = poles.index(xi)
    if k is None:
        raise NotAPole(f"xi = {xi!r} is not a pole of the configuration")
    du, Pv, Pw = remove_pole_arrays(m_eval(xi), xi)
    xc = np.conj(xi)

    def m_new(z):
        return _dress(Pw, Pv, xc, xi, m_eval(z), complex(z))

    zeros = tuple(z for j, z in enumerate(poles.zeros) if j != k)
    couplings = tuple(ck * (zk - xi) / (zk - xc)
                      for j, (zk, ck) in enumerate(zip(poles.zeros, poles.couplings)) if j != k)
    update = SpectralUpdate(
        PoleSet(zeros, couplings),
        lambda z: (np.asarray(z) - xc) / (np.asarray(z) - xi),
        lambda z: (np.asarray(z) - xc) / (np.asarray(z) - xi),
    )
    return DarbouxResult(SampledField(u.grid, u.values + du), m_new, update)


def apply_chain(m_eval: Callable, u: SampledField, steps, poles: PoleSet | None = None
                ) -> DarbouxResult:
    """Apply several insertions in order of decreasing Im xi.

    Each step's ``c_tilde`` is the coupling at the moment of insertion.
    """
    poles = poles or PoleSet()
    ordered = sorted(steps, key=lambda s: -complex(s.xi).imag)
    result = DarbouxResult(u, m_eval, SpectralUpdate(poles, lambda z: 1.0, lambda z: 1.0))
    r_factors = []
    for step in ordered:
        result = darboux_add(result.m_eval, result.u, step, result.update.poles)
        r_factors.append(result.update.r_factor)

    def total(z):
        out = np.ones_like(np.asarray(z, dtype=complex))
        for f in r_factors:
            out = out * f(z)
        return out

    return DarbouxResult(result.u, result.m_eval,
                         SpectralUpdate(result.update.poles, total, total))
