"""Closed-form semiclassical quantities for a single non-degenerate magnetic well.

Everything here is exact arithmetic on the well's local data: the invariants
(a, d, t) of the half-Hessian of the field intensity at its minimum, the
two-term eigenvalue expansion, the harmonic-oscillator coefficients mu_{jk},
the exact spectrum of the constant-field-plus-quadratic-potential model, and
the gap constants c_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "WellData",
    "WellInvariants",
    "FlatModelParams",
    "derive_invariants",
    "mu_jk2",
    "asymptotic_eigenvalue",
    "flat_model_spectrum",
    "p_flat_spectrum",
    "gap_constant_ck",
]


@dataclass(frozen=True)
class WellData:
    """Local model of the magnetic well.

    b0 is the field minimum, (alpha1, beta1) the eigenvalues of half the
    Hessian of the intensity b at the minimum, R0 the scalar curvature there
    and x0 the location of the minimum.
    """

    b0: float
    alpha1: float
    beta1: float
    R0: float = 0.0
    x0: tuple = (0.0, 0.0)

    def __post_init__(self):
        if not (self.b0 > 0):
            raise DomainError(f"b0 must be positive, got {self.b0}")
        if not (self.alpha1 > 0 and self.beta1 > 0):
            raise DomainError("degenerate well: half-Hessian eigenvalues must be positive, "
                              f"got ({self.alpha1}, {self.beta1})")

    @property
    def invariants(self) -> "WellInvariants":
        return WellInvariants(
            a=math.sqrt(self.alpha1) + math.sqrt(self.beta1),
            d=self.alpha1 * self.beta1,
            t=self.alpha1 + self.beta1,
        )


@dataclass(frozen=True)
class WellInvariants:
    """a = sqrt(alpha1)+sqrt(beta1), d = alpha1*beta1, t = alpha1+beta1."""

    a: float
    d: float
    t: float


@dataclass(frozen=True)
class FlatModelParams:
    """Constant field b plus quadratic potential with coefficient matrix K."""

    b: float
    K: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)))

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        object.__setattr__(self, "K", K)
        if not (self.b > 0):
            raise DomainError(f"b must be positive, got {self.b}")
        if K.shape != (2, 2) or not np.allclose(K, K.T, atol=1e-12 * (1 + abs(K).max())):
            raise DomainError("K must be a symmetric 2x2 matrix")
        if np.linalg.eigvalsh(K).min() < -1e-12 * (1 + abs(K).max()):
            raise DomainError("K must be positive semi-definite")


def _check_spd(hess_half) -> np.ndarray:
    H = np.asarray(hess_half, dtype=float)
    if H.shape != (2, 2) or not np.allclose(H, H.T, atol=1e-12 * (1 + abs(H).max())):
        raise DomainError("degenerate well: half-Hessian must be a symmetric 2x2 matrix")
    ev = np.linalg.eigvalsh(H)
    if ev.min() <= 0:
        raise DomainError(f"degenerate well: half-Hessian eigenvalues {ev} not all positive")
    return ev


def derive_invariants(hess_half) -> WellInvariants:
    """Invariants (a, d, t) of a symmetric positive-definite half-Hessian."""
    lam1, lam2 = _check_spd(hess_half)
    return WellInvariants(a=math.sqrt(lam1) + math.sqrt(lam2),
                          d=lam1 * lam2, t=lam1 + lam2)


def mu_jk2(well: WellData, j: int, k: int) -> float:
    """Second-order expansion coefficient mu_{j,k,2} (equals nu_{jk}).

    (2j+1)(2k+1) sqrt(d)/b0 + (2k^2+2k+1) t/(2 b0) + (k^2+k) R0/2.
    """
    if j < 0 or k < 0:
        raise DomainError("level indices must be non-negative")
    inv = well.invariants
    return ((2 * j + 1) * (2 * k + 1) * math.sqrt(inv.d) / well.b0
            + (2 * k * k + 2 * k + 1) * inv.t / (2 * well.b0)
            + 0.5 * (k * k + k) * well.R0)


def asymptotic_eigenvalue(well: WellData, j: int, h: float) -> float:
    """Two-term expansion h*b0 + h^2 [2 sqrt(d)/b0 * j + a^2/(2 b0)]."""
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    if j < 0:
        raise DomainError("j must be non-negative")
    inv = well.invariants
    return h * well.b0 + h * h * (2 * math.sqrt(inv.d) / well.b0 * j
                                  + inv.a ** 2 / (2 * well.b0))


def _model_frequencies(t_K: float, d_K: float, b: float):
    """(s1, s2) for the constant-field + quadratic-potential model."""
    disc = (t_K + b * b) ** 2 - 4 * d_K
    if disc < -1e-12 * (t_K + b * b) ** 2:
        raise AssertionError("negative discriminant for valid flat-model parameters")
    root = math.sqrt(max(disc, 0.0))
    s1 = math.sqrt(max(t_K + b * b - root, 0.0) / 2)
    s2 = math.sqrt((t_K + b * b + root) / 2)
    return s1, s2


def _enumerate_levels(s1: float, s2: float, count: int, shift: float = 0.0):
    """`count` smallest (2n1+1)s1 + (2n2+1)s2 + shift, ties by (n2, n1)."""
    if count < 1:
        raise DomainError("count must be >= 1")
    # the value is non-decreasing in each index, so the `count` smallest
    # levels all have n1, n2 < count; this bound also caps the artificial
    # degeneracy at s1 = 0 (pure Landau levels) at `count` per level
    n1_max = count
    n2_max = count
    levels = []
    for n2 in range(n2_max + 1):
        for n1 in range(n1_max + 1):
            lam = (2 * n1 + 1) * s1 + (2 * n2 + 1) * s2 + shift
            levels.append((lam, n2, n1))
    levels.sort()
    return [(lam, n1, n2) for lam, n2, n1 in levels[:count]]


def flat_model_spectrum(params: FlatModelParams, count: int):
    """Ascending list of (eigenvalue, n1, n2) for the exact model spectrum."""
    t_K = float(np.trace(params.K))
    d_K = float(np.linalg.det(params.K))
    s1, s2 = _model_frequencies(t_K, d_K, params.b)
    return _enumerate_levels(s1, s2, count)


def p_flat_spectrum(h: float, b0: float, hess_half, count: int):
    """Ascending eigenvalues of the shifted semiclassical flat comparison operator.

    (2n1+1)s1 + (2n2+1)s2 - h*b0 with s1, s2 built from t = Tr, d = det of the
    half-Hessian; the inner discriminant uses 4*h*d, which is the value forced
    by matching K = sqrt(h) * hess_half in the exact model (d_K = h*d).
    """
    if h <= 0:
        raise DomainError(f"h must be positive, got {h}")
    if b0 <= 0:
        raise DomainError(f"b0 must be positive, got {b0}")
    ev = _check_spd(hess_half)
    t = float(ev.sum())
    d = float(ev.prod())
    inner_t = math.sqrt(h) * t
    disc = (inner_t + b0 * b0) ** 2 - 4 * h * d
    root = math.sqrt(max(disc, 0.0))
    s1 = h / math.sqrt(2) * math.sqrt(max(inner_t + b0 * b0 - root, 0.0))
    s2 = h / math.sqrt(2) * math.sqrt(inner_t + b0 * b0 + root)
    return _enumerate_levels(s1, s2, count, shift=-h * b0)


def gap_constant_ck(well: WellData, k: int) -> float:
    """Gap constant c_k; same arithmetic as mu_jk2 at j = 0."""
    if k < 0:
        raise DomainError("k must be non-negative")
    inv = well.invariants
    return ((2 * k + 1) * math.sqrt(inv.d) / well.b0
            + (2 * k * k + 2 * k + 1) * inv.t / (2 * well.b0)
            + 0.5 * (k * k + k) * well.R0)
