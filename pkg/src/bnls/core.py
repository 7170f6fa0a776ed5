"""Shared domain types, grids, Cauchy quadrature and file formats.

Every other module works on the types defined here: uniform spatial grids,
sampled complex fields, symmetric spectral grids and scattering data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "BnlsError",
    "TailTooLarge",
    "NonRealGrid",
    "IoError",
    "FormatError",
    "StiffnessError",
    "RealAxisZero",
    "CountMismatch",
    "DerivativeVanishes",
    "ZeroVector",
    "RemovableSingularity",
    "BranchAmbiguous",
    "PoleCollision",
    "SingularFrame",
    "NotAPole",
    "SingularLinearSystem",
    "UnsupportedSpectrum",
    "NotEven",
    "OutOfEnvelope",
    "BlowUp",
    "TailContamination",
    "ConfigError",
    "BnlsWarning",
    "RegimeWarning",
    "DegenerateDichotomy",
    "InstableNorming",
    "NearDegenerateBeta",
    "SpatialGrid",
    "SampledField",
    "SpectralGrid",
    "ScatteringData",
    "check_tail",
    "stationary_soliton",
    "cauchy_integral",
    "cauchy_weights",
    "cauchy_boundary_value",
    "save_field",
    "load_field",
    "save_spectrum",
    "load_spectrum",
    "save_scattering_data",
    "load_scattering_data",
    "format_float",
]


# ---------------------------------------------------------------------------
# Errors and warnings
# ---------------------------------------------------------------------------


class BnlsError(Exception):
    """Base class for every numerical guard raised by the package."""

    @property
    def guard(self) -> str:
        return type(self).__name__


class TailTooLarge(BnlsError):
    """Sampled data does not decay at the ends of its grid."""


class NonRealGrid(BnlsError):
    """A Cauchy integral was requested too close to the real axis."""


class IoError(BnlsError, OSError):
    """A file could not be read or written."""


class FormatError(BnlsError, ValueError):
    """A file was readable but its contents are malformed."""


class StiffnessError(BnlsError):
    """The spectral parameter makes the Jost integration overflow."""


class RealAxisZero(BnlsError):
    """The scattering function a(z) vanishes (numerically) on the real axis."""

    def __init__(self, z: float, value: float):
        super().__init__(f"|a(z)| = {value:.3e} at real z = {z:.12g}")
        self.z = z
        self.value = value


class CountMismatch(BnlsError):
    """Scan count of imaginary zeros disagrees with the argument principle."""

    def __init__(self, scan_count: int, winding_count: int):
        super().__init__(f"scan found {scan_count} zeros, winding number is {winding_count}")
        self.scan_count = scan_count
        self.winding_count = winding_count


class DerivativeVanishes(BnlsError):
    """a'(z_k) is too small for z_k to be treated as a simple zero."""


class ZeroVector(BnlsError):
    """The projective Bäcklund integration produced a null vector."""


class RemovableSingularity(BnlsError):
    """The apparent pole of a(z) at z = i*beta is not removable for this data."""


class BranchAmbiguous(BnlsError):
    """The sign parameter beta cannot be decided reliably."""


class PoleCollision(BnlsError):
    """A Darboux step inserts a pole on top of an existing one."""


class SingularFrame(BnlsError):
    """The Darboux frame matrix is not invertible at some node."""


class NotAPole(BnlsError):
    """A Darboux removal was requested for a point that is not a pole."""


class SingularLinearSystem(BnlsError):
    """The residue linear system of a reflectionless problem is singular."""


class UnsupportedSpectrum(BnlsError):
    """More discrete eigenvalues than the reconstruction supports."""


class NotEven(BnlsError):
    """Initial data are required to be even."""


class OutOfEnvelope(BnlsError):
    """Arguments outside the supported evaluation envelope."""


class BlowUp(BnlsError):
    """The PDE solution grew beyond the collapse guard."""


class TailContamination(BnlsError):
    """The PDE solution reached the truncated boundary."""


class ConfigError(BnlsError, ValueError):
    """A run configuration is invalid."""


class BnlsWarning(UserWarning):
    """Base class for package warnings."""


class RegimeWarning(BnlsWarning):
    """An approximation is used outside its small-data regime."""


class DegenerateDichotomy(BnlsWarning):
    """The second eigenvalue lies numerically on top of |q|."""


class InstableNorming(BnlsWarning):
    """Both branches of the norming-constant formula are ill conditioned."""


class NearDegenerateBeta(BnlsWarning):
    """The beta dichotomy is close to its degenerate case."""


# ---------------------------------------------------------------------------
# Grids and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform grid on [x_min, x_max] with ``n_points`` nodes.

    Parameters
    ----------
    x_min, x_max : float
        End points, ``x_min < x_max``.
    n_points : int
        Number of nodes, at least 2.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid end points must be finite")
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be smaller than x_max")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError("n_points must be an integer >= 2")
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "x_max", float(self.x_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> "SpatialGrid":
        """Grid on [-half_width, half_width]; odd ``n_points`` puts 0 on a node."""
        return cls(-half_width, half_width, n_points)

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def node_index(self, x0: float) -> int | None:
        """Index of the node at ``x0``, or None if ``x0`` is not a node."""
        k = int(round((x0 - self.x_min) / self.h))
        if k < 0 or k >= self.n_points:
            return None
        if abs(self.x[k] - x0) > 1e-9 * self.h:
            return None
        return k

    def zero_index(self) -> int:
        """Index of the node x = 0; raises ValueError when 0 is not a node."""
        k = self.node_index(0.0)
        if k is None:
            raise ValueError("grid does not contain x = 0 as a node")
        return k

    def is_symmetric(self) -> bool:
        return abs(self.x_min + self.x_max) <= 1e-12 * max(1.0, abs(self.x_max))


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples of a function on a :class:`SpatialGrid`."""

    grid: SpatialGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex).reshape(-1)
        if vals.size != self.grid.n_points:
            raise ValueError(
                f"expected {self.grid.n_points} values, got {vals.size}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: SpatialGrid, func) -> "SampledField":
        return cls(grid, np.asarray(func(grid.x), dtype=complex))

    @classmethod
    def zeros(cls, grid: SpatialGrid) -> "SampledField":
        return cls(grid, np.zeros(grid.n_points, dtype=complex))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def restrict_nonnegative(self) -> "SampledField":
        """Restriction to x >= 0 (0 must be a node)."""
        k = self.grid.zero_index()
        sub = SpatialGrid(0.0, self.grid.x_max, self.grid.n_points - k)
        return SampledField(sub, self.values[k:])

    def reflect(self) -> "SampledField":
        """The field x -> u(-x) on the mirrored grid."""
        grid = SpatialGrid(-self.grid.x_max, -self.grid.x_min, self.grid.n_points)
        return SampledField(grid, self.values[::-1])


def _symmetric_values(z: np.ndarray) -> np.ndarray:
    return 0.5 * (z - z[::-1])


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Strictly increasing real grid, symmetric about 0."""

    z_values: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.z_values, dtype=float).reshape(-1)
        if z.size < 2:
            raise ValueError("a spectral grid needs at least two points")
        if not np.all(np.diff(z) > 0):
            raise ValueError("spectral grid must be strictly increasing")
        scale = max(1.0, float(np.max(np.abs(z))))
        if np.max(np.abs(z + z[::-1])) > 4 * np.finfo(float).eps * scale:
            raise ValueError("spectral grid must be symmetric about 0")
        z = _symmetric_values(z)
        z.setflags(write=False)
        object.__setattr__(self, "z_values", z)

    @classmethod
    def uniform(cls, z_max: float, n_points: int) -> "SpectralGrid":
        """Uniform symmetric grid on [-z_max, z_max]."""
        return cls(_symmetric_values(np.linspace(-z_max, z_max, n_points)))

    @property
    def z(self) -> np.ndarray:
        return self.z_values

    def __len__(self) -> int:
        return self.z_values.size

    def mirror_index(self) -> np.ndarray:
        """Index map j -> index of -z_j."""
        return np.arange(len(self) - 1, -1, -1)


# ---------------------------------------------------------------------------
# Cauchy integrals
# ---------------------------------------------------------------------------


def check_tail(values: np.ndarray, threshold: float, what: str = "samples",
               floor: float = 1e-13) -> None:
    """Raise :class:`TailTooLarge` if the end samples are not negligible.

    The comparison is relative to max(peak, 1), so integrands that are
    small everywhere are judged on an absolute scale; end values below the
    absolute ``floor`` (round-off level) always pass.
    """
    mags = np.abs(np.asarray(values))
    peak = float(np.max(mags)) if mags.size else 0.0
    if peak == 0.0:
        return
    tail = max(float(mags[0]), float(mags[-1]))
    scale = max(peak, 1.0)
    if tail > threshold * scale and tail > floor:
        raise TailTooLarge(
            f"{what}: end magnitude {tail:.3e} exceeds {threshold:.1e} x {scale:.3e}"
        )


def _restrict(s: np.ndarray, f: np.ndarray, lower, upper):
    """Nodes and linearly interpolated samples on [lower, upper]."""
    lo = s[0] if lower is None else max(float(lower), s[0])
    hi = s[-1] if upper is None else min(float(upper), s[-1])
    if hi <= lo:
        return None, None
    inside = (s > lo) & (s < hi)
    nodes = np.concatenate(([lo], s[inside], [hi]))
    f_re = np.interp(nodes, s, f.real)
    f_im = np.interp(nodes, s, f.imag)
    vals = f_re + 1j * f_im
    # keep exact samples at interior nodes
    vals[1:-1] = f[inside]
    return nodes, vals


def _product_weights(nodes: np.ndarray, vals: np.ndarray, z: np.ndarray, logs: np.ndarray):
    """Sum over cells of the exact integral of the linear interpolant times 1/(s-z).

    ``logs`` has shape (len(z), len(nodes)) and holds a continuous branch of
    log(s - z) along the nodes.
    """
    h = np.diff(nodes)
    slope = np.diff(vals) / h
    base = vals[:-1]
    cell_log = logs[:, 1:] - logs[:, :-1]
    coef = base[None, :] + slope[None, :] * (z[:, None] - nodes[None, :-1])
    return np.sum(coef * cell_log, axis=1) + np.sum(slope * h)


def cauchy_weights(grid: SpectralGrid | np.ndarray, z: complex) -> np.ndarray:
    """Weights w with w @ f equal to :func:`cauchy_integral` of f at one point z.

    Useful when many integrands share the same nodes and z.
    """
    s = grid.z_values if isinstance(grid, SpectralGrid) else np.asarray(grid, dtype=float)
    z = complex(z)
    h = np.diff(s)
    logs = np.log(s - z)
    cell = np.diff(logs)
    frac = (z - s[:-1]) * cell / h
    w = np.zeros(s.size, dtype=complex)
    w[:-1] += cell - frac - 1.0
    w[1:] += frac + 1.0
    return w / (2j * np.pi)


def cauchy_integral(
    f,
    grid: SpectralGrid | np.ndarray,
    z,
    tail_threshold: float = 1e-8,
    eps: float = 1e-12,
    lower: float | None = None,
    upper: float | None = None,
):
    """Cauchy transform (1/2 pi i) int f(s)/(s - z) ds of sampled data.

    The samples are interpolated linearly between nodes and each cell is
    integrated exactly against the kernel, which keeps the rule accurate
    when ``z`` approaches the real axis. Outside the grid ``f`` is taken to
    vanish.

    Parameters
    ----------
    f : array_like
        Samples of f on the grid.
    grid : SpectralGrid or ndarray
        Strictly increasing nodes.
    z : complex or array_like
        Evaluation point(s) off the real axis.
    tail_threshold : float
        Relative bound on |f| at the grid ends (skipped for partial ranges).
    eps : float
        Minimum allowed |Im z|.
    lower, upper : float, optional
        Restrict the integral to [lower, upper].

    Returns
    -------
    complex or ndarray
        Same shape as ``z``.
    """
    s = grid.z_values if isinstance(grid, SpectralGrid) else np.asarray(grid, dtype=float)
    fv = np.asarray(f, dtype=complex)
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(zz.imag) < eps):
        raise NonRealGrid(f"Im z must exceed {eps:g} in magnitude")
    if lower is None and upper is None:
        check_tail(fv, tail_threshold, "cauchy_integral integrand")
        nodes, vals = s, fv
    else:
        nodes, vals = _restrict(s, fv, lower, upper)
        if nodes is None:
            return np.zeros(np.shape(z), dtype=complex) if np.ndim(z) else 0j
    flat = zz.reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(nodes.size, 1))
    for start in range(0, flat.size, chunk):
        zc = flat[start:start + chunk]
        logs = np.log(nodes[None, :] - zc[:, None])
        out[start:start + chunk] = _product_weights(nodes, vals, zc, logs)
    out /= 2j * np.pi
    return out.reshape(np.shape(z)) if np.ndim(z) else complex(out[0])


def cauchy_boundary_value(
    f,
    grid: SpectralGrid | np.ndarray,
    x,
    side: int = 1,
    tail_threshold: float = 1e-8,
    lower: float | None = None,
    upper: float | None = None,
):
    """Boundary value of the Cauchy transform on the real axis.

    Returns lim_{e -> 0+} (1/2 pi i) int f(s)/(s - x - i side e) ds, i.e. the
    principal value plus ``side * f(x)/2``, using the same product rule as
    :func:`cauchy_integral`.
    """
    s = grid.z_values if isinstance(grid, SpectralGrid) else np.asarray(grid, dtype=float)
    fv = np.asarray(f, dtype=complex)
    xx = np.atleast_1d(np.asarray(x, dtype=float))
    if lower is None and upper is None:
        check_tail(fv, tail_threshold, "cauchy_boundary_value integrand")
        nodes, vals = s, fv
    else:
        nodes, vals = _restrict(s, fv, lower, upper)
        if nodes is None:
            return np.zeros(np.shape(x), dtype=complex) if np.ndim(x) else 0j
    flat = xx.reshape(-1)
    out = np.empty(flat.size, dtype=complex)
    chunk = max(1, 2_000_000 // max(nodes.size, 1))
    for start in range(0, flat.size, chunk):
        xc = flat[start:start + chunk]
        d = nodes[None, :] - xc[:, None]
        with np.errstate(divide="ignore"):
            mod = np.log(np.abs(d))
        # log|0| appears with equal coefficients in adjacent cells and cancels
        mod[d == 0] = 0.0
        arg = np.where(d > 0, 0.0, np.where(d < 0, -np.pi * side, -0.5 * np.pi * side))
        logs = mod + 1j * arg
        out[start:start + chunk] = _product_weights(nodes, vals, xc.astype(complex), logs)
    out /= 2j * np.pi
    return out.reshape(np.shape(x)) if np.ndim(x) else complex(out[0])


def stationary_soliton(mu: float, q: float, x):
    """v_mu(x) = mu sech(mu |x| + atanh(q / mu)), the Robin-compatible profile.

    Requires mu > |q|. It satisfies v'(0+) + q v(0) = 0, and
    e^{i mu^2 t / 2} v_mu(x) solves the delta-potential NLS.
    """
    if not mu > abs(q):
        raise ValueError("need mu > |q|")
    with np.errstate(over="ignore"):
        return mu / np.cosh(mu * np.abs(np.asarray(x, dtype=float)) + np.arctanh(q / mu))


# ---------------------------------------------------------------------------
# Scattering data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Reflection coefficient samples plus discrete spectrum.

    Parameters
    ----------
    spectral_grid : SpectralGrid
        Real grid carrying ``r_samples``.
    r_samples : ndarray
        r(z) on the grid.
    zeros : sequence of float
        Positive mu_k with poles z_k = i mu_k, sorted decreasingly.
    norming_constants : sequence of complex
        gamma(z_k), same order as ``zeros``.
    beta : float
        Sign parameter, beta = +q or -q.
    q : float
        Delta strength.
    """

    spectral_grid: SpectralGrid
    r_samples: np.ndarray
    zeros: tuple = ()
    norming_constants: tuple = ()
    beta: float = 0.0
    q: float = 0.0
    tail_threshold: float = 1e-8

    def __post_init__(self):
        r = np.asarray(self.r_samples, dtype=complex).reshape(-1)
        if r.size != len(self.spectral_grid):
            raise ValueError("r_samples must match the spectral grid")
        if not np.all(np.isfinite(r)):
            raise ValueError("r_samples must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "r_samples", r)
        zeros = tuple(float(m) for m in self.zeros)
        gammas = tuple(complex(g) for g in self.norming_constants)
        if len(zeros) != len(gammas):
            raise ValueError("one norming constant per zero is required")
        if any(m <= 0 for m in zeros):
            raise ValueError("zeros are given by positive mu_k")
        order = np.argsort(zeros)[::-1]
        object.__setattr__(self, "zeros", tuple(zeros[k] for k in order))
        object.__setattr__(self, "norming_constants", tuple(gammas[k] for k in order))
        beta, q = float(self.beta), float(self.q)
        if not (math.isclose(beta, q, abs_tol=1e-14) or math.isclose(beta, -q, abs_tol=1e-14)):
            raise ValueError("beta must equal +q or -q")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "q", q)

    @property
    def z(self) -> np.ndarray:
        return self.spectral_grid.z_values

    @property
    def poles(self) -> np.ndarray:
        return 1j * np.asarray(self.zeros, dtype=float)

    def log_weight(self) -> np.ndarray:
        """Samples of log(1 + |r|^2)."""
        return np.log1p(np.abs(self.r_samples) ** 2)

    def l_of(self, z):
        """l(z) = (1/2 pi i) int log(1+|r|^2)/(s - z) ds; real z use the + side."""
        zz = np.asarray(z, dtype=complex)
        weight = self.log_weight()
        if np.ndim(zz) == 0:
            if abs(zz.imag) < 1e-12:
                return cauchy_boundary_value(weight, self.spectral_grid, zz.real,
                                             tail_threshold=self.tail_threshold)
            return cauchy_integral(weight, self.spectral_grid, zz,
                                   tail_threshold=self.tail_threshold)
        out = np.empty(zz.shape, dtype=complex)
        real = np.abs(zz.imag) < 1e-12
        if np.any(real):
            out[real] = cauchy_boundary_value(weight, self.spectral_grid, zz[real].real,
                                              tail_threshold=self.tail_threshold)
        if np.any(~real):
            out[~real] = cauchy_integral(weight, self.spectral_grid, zz[~real],
                                         tail_threshold=self.tail_threshold)
        return out

    def blaschke(self, z, exclude: int | None = None):
        """Product of (z - z_k)/(z - conj z_k), optionally skipping index ``exclude``."""
        zz = np.asarray(z, dtype=complex)
        out = np.ones_like(zz)
        for k, p in enumerate(self.poles):
            if k == exclude:
                continue
            out = out * (zz - p) / (zz - np.conj(p))
        return out

    def a_of(self, z):
        """a(z) rebuilt from the Blaschke product and e^{-l(z)} (Im z >= 0)."""
        return self.blaschke(z) * np.exp(-self.l_of(z))

    def a_prime_at(self, k: int, n_poles: int | None = None) -> complex:
        """a'(z_k) from the product formula, using only the first ``n_poles`` poles.

        With ``n_poles`` smaller than the number of zeros this is the
        derivative of the partial product used in Darboux chains.
        """
        poles = self.poles if n_poles is None else self.poles[:n_poles]
        zk = self.poles[k]
        val = 1.0 / (zk - np.conj(zk))
        for j, p in enumerate(poles):
            if j == k:
                continue
            val *= (zk - p) / (zk - np.conj(p))
        return complex(val * np.exp(-self.l_of(zk)))

    def couplings(self) -> list[complex]:
        """c_k = gamma_k / a'(z_k)."""
        return [g / self.a_prime_at(k) for k, g in enumerate(self.norming_constants)]

    def pole_free_r(self) -> np.ndarray:
        """r_f(z) = r(z) prod (z - conj z_k)/(z - z_k) on the grid."""
        zz = self.z.astype(complex)
        factor = np.ones_like(zz)
        for p in self.poles:
            factor *= (zz - np.conj(p)) / (zz - p)
        return self.r_samples * factor

    def replace(self, **changes) -> "ScatteringData":
        params = dict(
            spectral_grid=self.spectral_grid,
            r_samples=self.r_samples,
            zeros=self.zeros,
            norming_constants=self.norming_constants,
            beta=self.beta,
            q=self.q,
            tail_threshold=self.tail_threshold,
        )
        params.update(changes)
        return ScatteringData(**params)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def format_float(value: float) -> str:
    """Decimal text with 17 significant digits (round-trips doubles)."""
    return f"{float(value):.17g}"


def _write_rows(path, header: str, columns: Sequence[np.ndarray]) -> None:
    try:
        with open(path, "w", newline="") as fh:
            fh.write(header + "\n")
            for row in zip(*columns):
                fh.write(",".join(format_float(v) for v in row) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _read_rows(path, n_cols: int) -> np.ndarray:
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    rows = []
    for lineno, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = next(csv.reader([text]))
        if len(parts) != n_cols:
            raise FormatError(f"{path}:{lineno}: expected {n_cols} columns, got {len(parts)}")
        try:
            vals = [float(p) for p in parts]
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in vals):
            raise FormatError(f"{path}:{lineno}: non-finite value")
        rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def save_field(field_: SampledField, path) -> None:
    """Write a field as CSV with header ``# x,re,im``."""
    _write_rows(path, "# x,re,im", [field_.x, field_.values.real, field_.values.imag])


def load_field(path) -> SampledField:
    """Read a field written by :func:`save_field`."""
    data = _read_rows(path, 3)
    x = data[:, 0]
    if x.size < 2:
        raise FormatError(f"{path}: a field needs at least two nodes")
    try:
        grid = SpatialGrid(x[0], x[-1], x.size)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if np.max(np.abs(x - grid.x)) > 1e-9 * grid.h:
        raise FormatError(f"{path}: nodes are not uniformly spaced")
    return SampledField(grid, data[:, 1] + 1j * data[:, 2])


def save_spectrum(grid: SpectralGrid, r: np.ndarray, path) -> None:
    """Write r(z) as CSV with header ``# z,re_r,im_r``."""
    r = np.asarray(r, dtype=complex)
    _write_rows(path, "# z,re_r,im_r", [grid.z_values, r.real, r.imag])


def load_spectrum(path) -> tuple[SpectralGrid, np.ndarray]:
    data = _read_rows(path, 3)
    try:
        grid = SpectralGrid(data[:, 0])
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return grid, data[:, 1] + 1j * data[:, 2]


def save_scattering_data(data: ScatteringData, json_path, r_file: str | None = None) -> None:
    """Write the JSON sidecar and the spectrum CSV next to it."""
    json_path = Path(json_path)
    r_name = r_file or (json_path.stem + "_r.csv")
    save_spectrum(data.spectral_grid, data.r_samples, json_path.parent / r_name)
    payload = {
        "q": data.q,
        "beta": data.beta,
        "zeros": list(data.zeros),
        "gammas": [[g.real, g.imag] for g in data.norming_constants],
        "r_file": r_name,
    }
    try:
        json_path.write_text(json.dumps(payload, indent=2))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load_scattering_data(json_path) -> ScatteringData:
    json_path = Path(json_path)
    try:
        payload = json.loads(json_path.read_text())
    except OSError as exc:
        raise IoError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{json_path}: {exc}") from exc
    try:
        r_path = Path(payload["r_file"])
        if not r_path.is_absolute():
            r_path = json_path.parent / r_path
        grid, r = load_spectrum(r_path)
        gammas = [complex(re, im) for re, im in payload["gammas"]]
        return ScatteringData(grid, r, tuple(payload["zeros"]), tuple(gammas),
                              payload["beta"], payload["q"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{json_path}: {exc}") from exc
