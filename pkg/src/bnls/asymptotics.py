"""Closed-form long-time and intermediate-time asymptotics.

The evaluators take scattering data of the Bäcklund extension and return
the leading terms of u(x, t): a soliton dressed by the dispersive
parabolic-cylinder parameters k_1, k_2 at the stationary point
z0 = |x| / t. Parabolic cylinder functions D_a are provided for the
localized model problem.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import mpmath
import numpy as np
from scipy.special import loggamma, rgamma

from .core import (
    OutOfEnvelope,
    RegimeWarning,
    SampledField,
    ScatteringData,
    UnsupportedSpectrum,
    stationary_soliton,
)

__all__ = [
    "E0",
    "AsymptoticState",
    "AsymptoticResult",
    "LocalK",
    "MuEstimate",
    "parabolic_cylinder",
    "gamma_modulus_squared",
    "local_k",
    "l_coefficient",
    "delta_hat",
    "rho_from_norming",
    "theorem_main_eval",
    "small_q_kernel",
    "perturbation_moments",
    "theorem_small_q_eval",
    "hz_formula",
    "mu_perturbation",
]

E0 = math.sqrt(2 * math.pi) * cmath.exp(-0.25j * math.pi)

_A_MAX = 5.0
_ETA_MAX = 50.0
_SERIES_RADIUS = 6.0
_SERIES_DIGITS = 30


# ---------------------------------------------------------------------------
# Parabolic cylinder functions
# ---------------------------------------------------------------------------


def _series(a: complex, eta: complex) -> complex:
    """Kummer-function form of D_a, summed at 30 digits to survive cancellation."""
    with mpmath.workdps(_SERIES_DIGITS):
        a_ = mpmath.mpc(a)
        z = mpmath.mpc(eta)
        w = z * z / 2
        first = mpmath.sqrt(mpmath.pi) * mpmath.rgamma((1 - a_) / 2) * mpmath.hyp1f1(-a_ / 2, 0.5, w)
        second = (mpmath.sqrt(2 * mpmath.pi) * z * mpmath.rgamma(-a_ / 2)
                  * mpmath.hyp1f1((1 - a_) / 2, 1.5, w))
        return complex(mpmath.power(2, a_ / 2) * mpmath.exp(-z * z / 4) * (first - second))


def _asymptotic_sum(c: complex, eta: complex, sign: int) -> complex:
    """sum_k (sign)^k (c)_{2k} / (k! (2 eta^2)^k), truncated at its smallest term."""
    x = 1.0 / (2 * eta * eta)
    term = 1.0 + 0j
    total = term
    for k in range(200):
        nxt = term * sign * (c + 2 * k) * (c + 2 * k + 1) / (k + 1) * x
        if nxt == 0 or abs(nxt) >= abs(term):
            break
        total += nxt
        term = nxt
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _stokes_multiplier(eta: complex) -> float:
    """Weight of the subdominant term, switched on smoothly across arg eta = +-pi/2."""
    d = abs(cmath.phase(eta)) - 0.5 * math.pi
    if d <= -0.25 * math.pi:
        return 0.0
    if d >= 0.25 * math.pi:
        return 1.0
    return 0.5 * (1 + math.erf(abs(eta) * math.sin(2 * d) / (2 * math.sqrt(math.cos(2 * d)))))


def _asymptotic(a: complex, eta: complex) -> complex:
    lead = eta ** a * cmath.exp(-0.25 * eta * eta) * _asymptotic_sum(-a, eta, -1)
    weight = _stokes_multiplier(eta)
    if weight == 0.0:
        return lead
    sign = 1 if cmath.phase(eta) > 0 else -1
    tail = (math.sqrt(2 * math.pi) * rgamma(-a) * cmath.exp(sign * 1j * math.pi * a)
            * eta ** (-a - 1) * cmath.exp(0.25 * eta * eta) * _asymptotic_sum(a + 1, eta, 1))
    return lead - weight * tail


def parabolic_cylinder(a: complex, eta: complex) -> complex:
    """Parabolic cylinder function D_a(eta).

    The Kummer-function series (evaluated with mpmath) is used for
    |eta| <= 6 and the large-|eta| expansion beyond. That expansion is
    eta^a e^{-eta^2/4}, minus the subdominant term
    sqrt(2 pi)/Gamma(-a) e^{+-i pi a} eta^{-a-1} e^{eta^2/4} with an
    error-function weight that rises from 0 to 1 across arg eta = +-pi/2.

    Parameters
    ----------
    a : complex
        Order, |a| <= 5.
    eta : complex
        Argument, |eta| <= 50.

    Returns
    -------
    complex

    Raises
    ------
    OutOfEnvelope
        Outside the supported (a, eta) range.
    """
    a = complex(a)
    eta = complex(eta)
    if abs(a) > _A_MAX or abs(eta) > _ETA_MAX:
        raise OutOfEnvelope(f"D_a(eta) supported for |a| <= {_A_MAX}, |eta| <= {_ETA_MAX}")
    if abs(eta) <= _SERIES_RADIUS:
        return _series(a, eta)
    return _asymptotic(a, eta)


def gamma_modulus_squared(nu: float) -> float:
    """|Gamma(i nu)|^2 = pi / (nu sinh(pi nu)) for real nu > 0."""
    return math.pi / (nu * math.sinh(math.pi * nu))


# ---------------------------------------------------------------------------
# Stationary-point parameters
# ---------------------------------------------------------------------------


class LocalK(NamedTuple):
    """Model-problem parameters at z0.

    ``k1`` comes from |beta|^2 = nu and the phase formula. ``k1_wronskian``
    is the same quantity from the Wronskian of the parabolic cylinder
    solutions, a second route used as a check.
    """

    k1: complex
    k2: complex
    alpha0: complex
    nu: float
    beta: complex
    k1_wronskian: complex


def _log_weight(r) -> np.ndarray:
    return np.log1p(np.abs(np.asarray(r, dtype=complex)) ** 2)


def _history_integral(s, L, z0: float, L0: float) -> float:
    """int_{-inf}^{z0} log(z0 - s) dL(s), integrated by parts on the samples."""
    s = np.asarray(s, dtype=float)
    keep = s < z0 - 1e-14
    s, L = s[keep], np.asarray(L, dtype=float)[keep]
    if s.size == 0:
        return 0.0
    boundary = -math.log(z0 - s[0]) * (L[0] - L0)
    # (L(s) - L(z0)) / (z0 - s) tends to -L'(z0) at the endpoint
    g = (L - L0) / (z0 - s)
    end = -(L0 - L[-1]) / (z0 - s[-1])
    nodes = np.append(s, z0)
    vals = np.append(g, end)
    return float(boundary + np.trapezoid(vals, nodes))


def local_k(r_at_z0: complex, r_history, x: float, t: float) -> LocalK:
    """k_1, k_2 and alpha_0 of the localized problem at z0 = |x| / t.

    Parameters
    ----------
    r_at_z0 : complex
        Reflection coefficient at z0.
    r_history : tuple (s, r) of arrays or None
        Samples of r at nodes s < z0 (ascending), for the phase integral.
    x, t : float
        Position and time, t >= 1.

    Returns
    -------
    LocalK
        k_1 = beta e^{i(x^2/(2t) + nu log t)}, k_2 = -conj(beta) e^{-i(...)}.
    """
    if t < 1:
        raise ValueError("local_k needs t >= 1")
    r0 = complex(r_at_z0)
    z0 = abs(x) / t
    L0 = math.log1p(abs(r0) ** 2)
    nu = L0 / (2 * math.pi)
    if r_history is None:
        hist = 0.0
    else:
        s, r = r_history
        hist = _history_integral(s, _log_weight(r), z0, L0)
    alpha0 = cmath.exp(1j * x * x / (4 * t) + 0.5j * nu * math.log(t) + 0.5j * hist / math.pi)
    if nu == 0.0:
        return LocalK(0j, 0j, alpha0, 0.0, 0j, 0j)
    arg_gamma = float(np.imag(loggamma(1j * nu)))
    arg_beta = 0.25 * math.pi + hist / math.pi + cmath.phase(r0) - arg_gamma
    beta = math.sqrt(nu) * cmath.exp(1j * arg_beta)
    phase = cmath.exp(1j * (x * x / (2 * t) + nu * math.log(t)))
    k1 = beta * phase
    k2 = -np.conj(beta) / phase
    k1_w = (math.sqrt(2 * math.pi) * cmath.exp(0.25j * math.pi) * alpha0 ** 2
            * math.exp(0.5 * math.pi * nu) * rgamma(1j * nu) / np.conj(r0))
    return LocalK(complex(k1), complex(k2), alpha0, nu, beta, complex(k1_w))


def l_coefficient(data: ScatteringData, mu: float) -> float:
    """l_j = (1/pi) int_0^inf s / (s^2 + mu^2) log(1 + |r(s)|^2) ds."""
    s = data.z
    L = data.log_weight()
    pos = s >= 0
    return float(np.trapezoid(s[pos] / (s[pos] ** 2 + mu * mu) * L[pos], s[pos]) / math.pi)


def delta_hat(data: ScatteringData, mu: float, z0: float) -> complex:
    """exp[(1/2 pi i) int_0^{z0} log(1 + |r|^2) / (s - i mu) ds]."""
    if z0 <= 0:
        return 1.0 + 0j
    s = data.z
    L = data.log_weight()
    upper = min(z0, float(s[-1]))
    inner = s[(s > 0) & (s < upper)]
    nodes = np.concatenate([[0.0], inner, [upper]])
    vals = np.interp(nodes, s, L) / (nodes - 1j * mu)
    return complex(np.exp(np.trapezoid(vals, nodes) / (2j * math.pi)))


def rho_from_norming(data: ScatteringData) -> list[float]:
    """Phases rho_j with gamma_j = e^{-i rho_j} sqrt(R_j), arg in (-pi, pi].

    R_1 = (mu_1 + q)/(mu_1 - q) for one zero; R_j = (mu_j - q)/(mu_j + q)
    for two zeros. The principal complex square root is used, so R_j < 0
    shifts rho_j by pi/2 consistently with the evaluators.
    """
    q = data.q
    out = []
    for mu, g in zip(data.zeros, data.norming_constants):
        ratio = _norming_ratio(mu, q, len(data.zeros))
        out.append(-cmath.phase(g / ratio))
    return out


def _norming_ratio(mu: float, q: float, n_zeros: int) -> complex:
    if n_zeros == 1:
        return cmath.sqrt((mu + q) / (mu - q))
    return cmath.sqrt((mu - q) / (mu + q))


@dataclass(frozen=True)
class AsymptoticState:
    """All intermediate quantities of one Theorem-1.1-type evaluation.

    ``upsilon`` holds one tuple (v_j, v_j^x, hat v_j, hat v_j^x) per zero.
    ``s0``, ``s``, ``s1`` and ``s2`` are None with a single zero.
    """

    x: float
    t: float
    z0: float
    nu: float
    l: tuple
    delta_hat: tuple
    k1: complex
    k2: complex
    p: tuple
    upsilon: tuple
    s0: complex | None = None
    s: complex | None = None
    s1: complex | None = None
    s2: complex | None = None
    tau: float = math.inf
    alpha0: complex = 1.0 + 0j


class AsymptoticResult(NamedTuple):
    """Leading term, its reported error scale and the evaluation details.

    ``regime`` is "small", "large" or "overlap" (1/M <= |x| <= M). In the
    overlap ``u_leading`` is the large-|x| formula and both are kept.
    """

    u_leading: complex
    error_scale: float
    regime: str
    u_small: complex
    u_large: complex
    state: AsymptoticState


def _dressing(mu: float, v: complex, p1: complex, p2: complex) -> complex:
    num = (v + p1) * (np.conj(p2) * np.conj(v) + 1)
    den = abs(v + p1) ** 2 + abs(p2 * v + 1) ** 2
    return -2 * mu * num / den


def _sample(data: ScatteringData, r_f: np.ndarray, z0: float):
    s = data.z
    if z0 > s[-1]:
        return 0j, (s, r_f)
    r0 = complex(np.interp(z0, s, r_f.real) + 1j * np.interp(z0, s, r_f.imag))
    return r0, (s, r_f)


def theorem_main_eval(data: ScatteringData, rho, x: float, t: float, M: float = 4.0,
                      kappa: float = 0.2, eps: float | None = None) -> AsymptoticResult:
    """Leading long-time asymptotics for one or two imaginary zeros.

    Parameters
    ----------
    data : ScatteringData
        Data of the extension at t = 0; r is stripped of its poles internally.
    rho : sequence of float
        Phases rho_j (see ``rho_from_norming``).
    x, t : float
        t >= 1.
    M : float
        Region split: small-|x| below 1/M, large-|x| above M.
    kappa : float
        Exponent in the reported error scale eps |q|^{-1/2} t^{-(1/2 + kappa)}.
    eps : float, optional
        Perturbation size; defaults to max|r| sqrt|q|.

    Returns
    -------
    AsymptoticResult
    """
    n = len(data.zeros)
    if n not in (1, 2):
        raise UnsupportedSpectrum(f"{n} zeros; the formulas cover one or two")
    if t < 1:
        raise ValueError("the long-time formulas need t >= 1")
    q = data.q
    ax = abs(float(x))
    z0 = ax / t
    r_f = data.pole_free_r()
    r0, hist = _sample(data, r_f, z0)
    keep = hist[0] < z0
    lk = local_k(r0, (hist[0][keep], hist[1][keep]), ax, t)
    k1, k2 = lk.k1, lk.k2
    mus = data.zeros
    ls = tuple(l_coefficient(data, mu) for mu in mus)
    dh = tuple(delta_hat(data, mu, z0) for mu in mus)
    sq = math.sqrt(t)
    p = [1j * k1 / (sq * (z0 - 1j * mus[0])), -1j * k2 / (sq * (z0 - 1j * mus[0]))]
    if n == 2:
        p += [1j * k1 / (sq * (z0 - 1j * mus[1])), -1j * k2 / (sq * (z0 - 1j * mus[1]))]
    else:
        p += [0j, 0j]
    ups = []
    for j, mu in enumerate(mus):
        v = (-cmath.sqrt((mu - q) / (mu + q))
             * cmath.exp(1j * (0.5 * mu * mu * t + rho[j] + ls[j])) * dh[j] ** 2)
        vh = (mu + q) / (mu - q) * v
        decay = math.exp(-mu * ax)
        ups.append((v, v * decay, vh, vh * decay))
    phase1 = cmath.exp(1j * (0.5 * mus[0] ** 2 * t + rho[0] + ls[0]))
    p1, p2, p3, p4 = p
    s0 = s = s1 = s2 = None
    tau = abs(q) * sq
    if n == 1:
        u_small = phase1 * float(stationary_soliton(mus[0], q, ax))
        u_large = -k1 / sq + _dressing(mus[0], ups[0][1], p1, p2)
    else:
        mu1, mu2 = mus
        w1, w2 = ups[0][3], ups[1][3]
        s0 = -2 * mu1 / (mu1 - mu2) * (w1 - w2) / (abs(w1) ** 2 + 1)
        lead = phase1 * mu1 / math.cosh(mu1 * ax - math.atanh(q / mu1))
        num = (w2 - s0) * (1 + w1 * np.conj(s0))
        den = abs(w2 - s0) ** 2 + abs(1 + w1 * np.conj(s0)) ** 2
        u_small = lead - 2 * mu2 * num / den
        norm1 = abs(w1 + p1) ** 2 + abs(p2 * w1 + 1) ** 2
        s = (2 * mu1 / (mu1 - mu2)
             * ((p2 * w1 + 1) * (w2 + p3) - (w1 + p1) * (p4 * w2 + 1)) / norm1)
        s1 = w2 + p3 - (np.conj(p2) * np.conj(w1) + 1) * s
        s2 = p4 * w2 + 1 + (np.conj(w1) + np.conj(p1)) * s
        u_large = (-k1 / sq + _dressing(mu1, w1, p1, p2)
                   - 2 * mu2 * s1 * np.conj(s2) / (abs(s1) ** 2 + abs(s2) ** 2))
        s0, s, s1, s2 = complex(s0), complex(s), complex(s1), complex(s2)
    if ax < 1 / M:
        regime, u = "small", u_small
    elif ax > M:
        regime, u = "large", u_large
    else:
        regime, u = "overlap", u_large
    if eps is None:
        eps = float(np.max(np.abs(r_f))) * math.sqrt(abs(q)) if r_f.size else 0.0
    scale = eps * abs(q) ** -0.5 * t ** -(0.5 + kappa) if q != 0 else math.inf
    state = AsymptoticState(
        x=float(x), t=float(t), z0=z0, nu=lk.nu, l=ls, delta_hat=dh, k1=k1, k2=k2,
        p=tuple(complex(v) for v in p), upsilon=tuple(ups), s0=s0, s=s, s1=s1, s2=s2,
        tau=tau, alpha0=lk.alpha0,
    )
    return AsymptoticResult(complex(u), scale, regime, complex(u_small), complex(u_large), state)


# ---------------------------------------------------------------------------
# Small-q, intermediate-time formulas
# ---------------------------------------------------------------------------


def small_q_kernel(w: SampledField, mu0: float) -> Callable[[float], float]:
    """K(z) = -Re int_0^inf e^{-isz} w(s) (z^2 - 2iz mu0 tanh(mu0 s) - mu0^2)/(z^2 + mu0^2) ds.

    ``w`` is sampled on [0, x_max]; K(0) = int_0^inf w.
    """
    s = w.grid.x
    if s[0] != 0:
        raise ValueError("w must be sampled on [0, x_max]")
    vals = np.asarray(w.values, dtype=complex)
    th = np.tanh(mu0 * s)

    def K(z: float) -> float:
        z = float(z)
        kern = (z * z - 2j * z * mu0 * th - mu0 * mu0) / (z * z + mu0 * mu0)
        return float(-np.real(np.trapezoid(np.exp(-1j * s * z) * vals * kern, s)))

    return K


def perturbation_moments(w: SampledField, mu0: float, q: float) -> tuple[float, float]:
    """w_0 = int_0^inf w and w_1 = int_R Re(w) v_mu0 for even w sampled on [0, x_max]."""
    s = w.grid.x
    if s[0] != 0:
        raise ValueError("w must be sampled on [0, x_max]")
    vals = np.asarray(w.values, dtype=complex)
    w0 = float(np.real(np.trapezoid(vals, s)))
    w1 = float(2 * np.trapezoid(vals.real * stationary_soliton(mu0, q, s), s))
    return w0, w1


def theorem_small_q_eval(w0: float, K: Callable[[float], float], mu1: float, q: float,
                         x: float, t: float, M: float = 4.0) -> complex:
    """Leading behaviour for data v_mu0 + q w with q small and t << q^{-2}.

    Parameters
    ----------
    w0 : float
        int_0^inf w.
    K : callable
        The kernel z -> K(z) of ``small_q_kernel``.
    mu1 : float
        The zero of a, approximately mu0 + q w_1.
    q : float
    x, t : float
        t >= 1.
    M : float
        |x| <= M uses the explicit near-field display; otherwise the
        dressed formula with p_1, p_2 is used.

    Returns
    -------
    complex
        For t > q^{-2}/2 the stationary soliton e^{i mu1^2 t/2} v_mu1(x).
    """
    if abs(q) > 0.3:
        warnings.warn(f"|q| = {abs(q)} is outside the small-q regime", RegimeWarning,
                      stacklevel=2)
    if t < 1:
        raise ValueError("the formulas need t >= 1")
    ax = abs(float(x))
    phase = cmath.exp(0.5j * mu1 * mu1 * t)
    soliton = phase * float(stationary_soliton(mu1, q, ax))
    if q == 0 or t > 0.5 / (q * q):
        return complex(soliton)
    if ax <= M:
        omega = -ax * ax / (2 * t) + 0.5 * mu1 * mu1 * t + 0.25 * math.pi
        y = mu1 * ax
        corr = q * w0 * math.sqrt(2 / (math.pi * t)) * (
            cmath.exp(1j * omega) / math.cosh(y) ** 2 - cmath.exp(-1j * omega) * math.tanh(y) ** 2)
        return complex(soliton - phase * corr)
    z0 = ax / t
    Kz = K(z0)
    denom = math.pi * 1j * (z0 - 1j * mu1)
    p1 = -(q / math.sqrt(t)) * Kz * E0 * cmath.exp(0.5j * t * z0 * z0) / denom
    p2 = -(q / math.sqrt(t)) * Kz * np.conj(E0) * cmath.exp(-0.5j * t * z0 * z0) / denom
    v = -math.sqrt((mu1 - q) / (mu1 + q)) * phase * math.exp(-mu1 * ax)
    return complex(1j * (z0 - 1j * mu1) * p1 + _dressing(mu1, v, p1, p2))


def hz_formula(mu0: float, q: float, w0: float, w1: float, t: float) -> complex:
    """u(0, t) for data v_mu0 + q w from the Hamiltonian-systems prediction.

    lambda = mu0 + q w_1 and
    u(0, t) = e^{i lambda^2 t/2} (lambda - sqrt(2/(pi t)) e^{i(lambda^2 t/2 + pi/4)} q w_0).
    """
    lam = mu0 + q * w1
    ph = 0.5 * lam * lam * t
    return complex(cmath.exp(1j * ph) * (lam - math.sqrt(2 / (math.pi * t))
                                         * cmath.exp(1j * (ph + 0.25 * math.pi)) * q * w0))


class MuEstimate(NamedTuple):
    """Predicted zeros and the orders of their errors.

    ``mu2_est`` is NaN for q >= 0, where a second zero cannot occur.
    """

    mu1_est: float
    mu2_est: float
    w1: float
    mu1_error_order: float
    mu2_error_order: float


def mu_perturbation(w: SampledField, mu0: float, q: float, eps: float) -> MuEstimate:
    """First-order zeros of a for data v_mu0 + eps w.

    mu_1 = mu0 + eps w_1 with w_1 = int_R Re(w) v_mu0, error O(eps^2 + eps |q|);
    mu_2 = -q for q < 0, error O(eps^2 |q|).
    """
    if not mu0 > abs(q):
        raise ValueError("need mu0 > |q|")
    _, w1 = perturbation_moments(w, mu0, q)
    mu2 = -q if q < 0 else float("nan")
    return MuEstimate(mu0 + eps * w1, mu2, w1, eps * eps + eps * abs(q), eps * eps * abs(q))
