"""Multistage Fabry-Perot etalon: cascade matrices and the closed-form z-domain model.

A stack of ``n + 1`` lossless reflectors encloses ``n`` cavities. Cavity ``m``
has a one-way optical path of ``x[m] * unit_length``; one unit of optical path
is one delay ``z^-1 = exp(-1j * 2*pi * unit_length / lambda)``, so a cavity
round trip is ``z^(-2 x[m])``.

The transmission amplitude is

    t(z) = prod(t_i) z^(-sum x) / A(z),   A(z) = sum over subsets S of the
                                          cavities of C_S z^(-2 sum_{m in S} x_m)

where ``C_S`` factors over the maximal runs of consecutive cavities in ``S``:
a run ``i..j`` contributes ``r[i-1] * r[j]``.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError

MAX_CAVITIES = 24
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Reflector:
    """Lossless reflector with power reflectivity ``R``."""

    R: float

    def __post_init__(self):
        R = float(self.R)
        if not (0.0 < R < 1.0) or not math.isfinite(R):
            raise DomainError(f"power reflectivity must satisfy 0 < R < 1, got R={self.R!r}")
        object.__setattr__(self, "R", R)

    @property
    def r(self) -> float:
        return math.sqrt(self.R)

    @property
    def t(self) -> float:
        return math.sqrt(1.0 - self.R)


def reflector_from_R(R: float) -> Reflector:
    return Reflector(R)


@dataclass(frozen=True)
class EtalonConfig:
    """Reflector stack plus integer cavity lengths.

    ``x`` is the one-way optical path of each cavity in units of
    ``unit_length`` (metres). ``group_index`` only enters the conversion to
    physical fibre length.
    """

    reflectors: tuple
    x: tuple
    unit_length: float = 0.01
    lambda0: float = 1.55e-6
    group_index: float = 1.45

    def __post_init__(self):
        refl = tuple(r if isinstance(r, Reflector) else Reflector(r) for r in self.reflectors)
        x = tuple(_as_length(v) for v in self.x)
        if len(refl) != len(x) + 1:
            raise DomainError(
                f"need len(reflectors) == len(x) + 1, got {len(refl)} reflectors for {len(x)} cavities"
            )
        if len(x) > MAX_CAVITIES:
            raise DomainError(f"at most {MAX_CAVITIES} cavities supported, got {len(x)}")
        if not self.unit_length > 0:
            raise DomainError(f"unit_length must be positive, got {self.unit_length!r}")
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be positive, got {self.lambda0!r}")
        object.__setattr__(self, "reflectors", refl)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_reflectivities(cls, R, x, **kwargs) -> "EtalonConfig":
        return cls(tuple(Reflector(v) for v in R), tuple(x), **kwargs)

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def r(self) -> np.ndarray:
        return np.array([f.r for f in self.reflectors])

    @property
    def t(self) -> np.ndarray:
        return np.array([f.t for f in self.reflectors])

    def reversed(self) -> "EtalonConfig":
        return EtalonConfig(self.reflectors[::-1], self.x[::-1], self.unit_length, self.lambda0,
                            self.group_index)


def _as_length(v) -> int:
    if isinstance(v, bool) or not isinstance(v, numbers.Real):
        raise DomainError(f"cavity length must be an integer, got {v!r}")
    if isinstance(v, numbers.Integral):
        iv = int(v)
    else:
        if not float(v).is_integer():
            raise DomainError(f"cavity length must be an integer, got {v!r}")
        iv = int(v)
    if iv < 1:
        raise DomainError(f"cavity length must be >= 1, got {v!r}")
    return iv


def unit_phase(wavelengths, unit_length: float) -> np.ndarray:
    """Phase of one delay unit, ``2*pi*unit_length/lambda`` reduced mod ``2*pi``."""
    lam = np.asarray(wavelengths, dtype=np.float64)
    if np.any(lam <= 0):
        raise DomainError("wavelengths must be positive")
    return np.mod(TWO_PI * unit_length / lam, TWO_PI)


# ---------------------------------------------------------------------------
# sparse polynomials in z^-1


@dataclass(frozen=True, eq=False)
class SparsePoly:
    """Polynomial in ``z^-1`` stored as sorted unique (exponent, coefficient) pairs.

    Terms sharing an exponent are summed at construction.
    """

    exponents: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.exponents, dtype=np.int64).ravel()
        c = np.asarray(self.coeffs, dtype=np.float64).ravel()
        if e.shape != c.shape:
            raise DomainError("exponents and coeffs must have the same length")
        if np.any(e < 0):
            raise DomainError("exponents must be nonnegative")
        uniq, inv = np.unique(e, return_inverse=True)
        summed = np.zeros(uniq.shape[0])
        np.add.at(summed, inv, c)
        object.__setattr__(self, "exponents", uniq)
        object.__setattr__(self, "coeffs", summed)

    @classmethod
    def from_terms(cls, terms) -> "SparsePoly":
        terms = list(terms)
        if not terms:
            return cls(np.zeros(0, dtype=np.int64), np.zeros(0))
        e, c = zip(*terms)
        return cls(np.array(e), np.array(c, dtype=float))

    @property
    def terms(self) -> list:
        return [(int(e), float(c)) for e, c in zip(self.exponents, self.coeffs)]

    @property
    def degree(self) -> int:
        return int(self.exponents[-1]) if self.exponents.size else 0

    def __len__(self):
        return int(self.exponents.size)

    def __repr__(self):
        return f"SparsePoly({self.terms})"

    def evaluate(self, phase) -> np.ndarray:
        """Value at ``z^-1 = exp(-1j*phase)``."""
        phase = np.atleast_1d(np.asarray(phase, dtype=np.float64))
        return kernels.sparse_eval(self.exponents, self.coeffs, phase)

    def to_dense(self, length: int | None = None) -> np.ndarray:
        """Coefficient vector indexed by exponent."""
        length = self.degree + 1 if length is None else length
        if length <= self.degree:
            raise DomainError(f"dense length {length} cannot hold degree {self.degree}")
        out = np.zeros(length)
        out[self.exponents] = self.coeffs
        return out


@dataclass(frozen=True, eq=False)
class RationalTF:
    """Structured transfer function ``numerator(z^-1) / denominator(z^-1)``."""

    numerator: SparsePoly
    denominator: SparsePoly
    unit_length: float = 0.01
    kind: str = field(default="structured")

    def response(self, wavelengths) -> np.ndarray:
        phase = unit_phase(np.atleast_1d(wavelengths), self.unit_length)
        return self.numerator.evaluate(phase) / self.denominator.evaluate(phase)

    def __call__(self, zinv):
        """Evaluate at arbitrary complex ``z^-1`` values."""
        zinv = np.asarray(zinv, dtype=np.complex128)
        num = sum(c * zinv ** e for e, c in self.numerator.terms)
        den = sum(c * zinv ** e for e, c in self.denominator.terms)
        return num / den

    @property
    def order(self) -> int:
        return self.denominator.degree

    def poles(self) -> np.ndarray:
        """Poles in the z-plane (roots of ``z^d * denominator(z^-1)``)."""
        return np.roots(self.denominator.to_dense())


# ---------------------------------------------------------------------------
# power-set denominator


def subset_masks(n: int) -> np.ndarray:
    """Membership matrix ``(2**n, n)``; row ``k`` is the bitmask ``k`` (bit m-1 = cavity m)."""
    if n > MAX_CAVITIES:
        raise DomainError(f"at most {MAX_CAVITIES} cavities supported, got {n}")
    k = np.arange(1 << n, dtype=np.int64)
    return ((k[:, None] >> np.arange(n)) & 1).astype(np.int64)


def subset_coefficient(members, r) -> float:
    """``C_S`` for a set of 1-based cavity indices; the empty set gives 1."""
    members = sorted(members)
    coeff = 1.0
    i = 0
    while i < len(members):
        j = i
        while j + 1 < len(members) and members[j + 1] == members[j] + 1:
            j += 1
        coeff *= r[members[i] - 1] * r[members[j]]
        i = j + 1
    return coeff


def subset_coefficients(r) -> np.ndarray:
    """``C_S`` for every bitmask subset of ``len(r) - 1`` cavities."""
    masks = subset_masks(len(r) - 1)
    return np.array([subset_coefficient(np.flatnonzero(row) + 1, r) for row in masks])


def denominator_terms(config: EtalonConfig) -> SparsePoly:
    masks = subset_masks(config.n)
    exps = 2 * masks @ np.asarray(config.x, dtype=np.int64)
    return SparsePoly(exps, subset_coefficients(config.r))


def z_transfer_function(config: EtalonConfig) -> RationalTF:
    num = SparsePoly([sum(config.x)], [float(np.prod(config.t))])
    return RationalTF(num, denominator_terms(config), config.unit_length)


# ---------------------------------------------------------------------------
# cascade-matrix oracle


def cascade_matrix(config: EtalonConfig, wavelength):
    """Product ``M_n ... M_1 M_0`` and the prefactor ``exp(j sum phi) / prod t``.

    Scalar wavelength gives a ``(2, 2)`` matrix and a scalar prefactor; an array
    gives ``(K, 2, 2)`` and ``(K,)``.
    """
    scalar = np.ndim(wavelength) == 0
    phase = unit_phase(np.atleast_1d(wavelength), config.unit_length)
    r = config.r
    x = np.asarray(config.x, dtype=np.float64)
    mats = kernels.cascade(r, x, phase)
    total = phase * float(sum(config.x))
    pref = np.exp(1j * total) / np.prod(config.t)
    if scalar:
        return mats[0], pref[0]
    return mats, pref


def transmission_amplitude(config: EtalonConfig, wavelength):
    """Complex field transmission from the cascade's ``(1, 1)`` entry."""
    scalar = np.ndim(wavelength) == 0
    phase = unit_phase(np.atleast_1d(wavelength), config.unit_length)
    mats = kernels.cascade(config.r, np.asarray(config.x, dtype=np.float64), phase)
    t = np.exp(-1j * phase * float(sum(config.x))) * np.prod(config.t) / mats[:, 0, 0]
    return t[0] if scalar else t


def evaluate_profile(source, grid):
    """Intensity ``|t|^2`` of a config or transfer function on a spectral grid."""
    from .spectral import TransmissionProfile

    if isinstance(source, EtalonConfig):
        source = z_transfer_function(source)
    resp = source.response(grid.wavelengths)
    return TransmissionProfile(grid, np.abs(resp) ** 2)


def physical_lengths(x, unit_length: float = 0.01, group_index: float = 1.45) -> np.ndarray:
    """Fibre lengths in metres for optical paths ``x * unit_length``."""
    return np.asarray(x, dtype=float) * unit_length / group_index
