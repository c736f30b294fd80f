"""Quantized algebra of symmetric LLR measures on the magnitude axis.

A measure is stored by its pushforward onto m = |tanh(alpha/2)| in [0,1]:
a weight vector over the support {0, cell centers, 1}.  The endpoint
atoms carry the exact perfect/useless mass (delta at infinite / zero
LLR), the B uniform interior cells carry everything else.  In this
domain the check-node operator is the product of independent magnitudes
and the variable-node operator is a two-branch kernel from the tanh
addition law; every functional used here (entropy, Bhattacharyya, error
probability, tanh moments) is a single dot product against a fixed
table.  Symmetry of the underlying LLR measure is structural, never a
constraint to re-project.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels

DEFAULT_BINS = 4096
MOMENT_TABLE_ORDER = 200
ATANH_CLAMP = 1.0 - 2.0 ** -40

MASS_TOL = 1e-12
_COEFF_SUM_TOL = 1e-9


class GridError(ValueError):
    """Raised for invalid grids or operations mixing distinct grids."""


class MeasureError(ValueError):
    """Raised when a weight vector is not a valid quantized measure."""


class _GridArrays(NamedTuple):
    vals: np.ndarray        # support magnitudes, length B+2
    h2: np.ndarray          # binary entropy h2((1-m)/2) per support point
    bhat: np.ndarray        # sqrt(1-m^2)
    err: np.ndarray         # (1-m)/2
    upow: np.ndarray        # upow[k-1, s] = m_s^(2k), k = 1..MOMENT_TABLE_ORDER


_GRID_CACHE: dict[int, _GridArrays] = {}

#: gamma_k = 1 / (2k(2k-1) ln 2); these weights sum to 1 over k >= 1.
GAMMA = np.array(
    [1.0 / (2 * k * (2 * k - 1) * math.log(2)) for k in range(1, MOMENT_TABLE_ORDER + 1)]
)


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, 1.0)
    out = np.zeros_like(p)
    inner = (p > 0) & (p < 1)
    q = p[inner]
    out[inner] = -(q * np.log2(q) + (1 - q) * np.log2(1 - q))
    return out


def _grid_arrays(bins: int) -> _GridArrays:
    cached = _GRID_CACHE.get(bins)
    if cached is not None:
        return cached
    centers = (np.arange(bins) + 0.5) / bins
    vals = np.concatenate(([0.0], centers, [1.0]))
    h2 = _binary_entropy((1.0 - vals) / 2.0)
    bhat = np.sqrt(np.clip(1.0 - vals * vals, 0.0, None))
    err = (1.0 - vals) / 2.0
    u = vals * vals
    upow = np.empty((MOMENT_TABLE_ORDER, bins + 2))
    acc = u.copy()
    upow[0] = acc
    for k in range(1, MOMENT_TABLE_ORDER):
        acc = acc * u
        upow[k] = acc
    arrays = _GridArrays(vals, h2, bhat, err, upow)
    for a in arrays:
        a.setflags(write=False)
    _GRID_CACHE[bins] = arrays
    return arrays


@dataclass(frozen=True)
class GridSpec:
    """Uniform quantization of the magnitude axis: B interior cells on (0,1)."""

    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if not isinstance(self.bins, int) or self.bins < 2:
            raise GridError(f"need an integer bin count >= 2, got {self.bins!r}")

    @property
    def size(self) -> int:
        return self.bins + 2

    @property
    def support(self) -> np.ndarray:
        """Support magnitudes [0, centers..., 1]."""
        return _grid_arrays(self.bins).vals

    @property
    def centers(self) -> np.ndarray:
        return _grid_arrays(self.bins).vals[1:-1]

    def arrays(self) -> _GridArrays:
        return _grid_arrays(self.bins)


@dataclass(frozen=True)
class HatMeasure:
    """A quantized symmetric probability measure in the magnitude domain.

    ``weights[0]`` is the exact atom at m=0 (useless-channel content),
    ``weights[-1]`` the exact atom at m=1 (perfect-knowledge content),
    and the slice in between holds the interior cell masses.  Instances
    are immutable; all operations return fresh measures.
    """

    grid: GridSpec
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.grid.size,):
            raise MeasureError(
                f"weight vector has shape {w.shape}, grid needs ({self.grid.size},)"
            )
        if np.any(w < 0.0):
            worst = float(w.min())
            if worst < -1e-13:
                raise MeasureError(f"negative mass {worst:g}")
            w = np.clip(w, 0.0, None)
        total = float(w.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise MeasureError(f"total mass {total!r} is not 1 within {MASS_TOL:g}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def atom0(self) -> float:
        return float(self.weights[0])

    @property
    def atom1(self) -> float:
        return float(self.weights[-1])

    @property
    def interior(self) -> np.ndarray:
        return self.weights[1:-1]

    def is_atomic(self) -> bool:
        """True when all mass sits on the two endpoint atoms (BEC-type)."""
        return float(self.interior.sum()) == 0.0


def delta0(grid: GridSpec) -> HatMeasure:
    """All mass at m=0: the useless channel, identity of the variable-node op."""
    w = np.zeros(grid.size)
    w[0] = 1.0
    return HatMeasure(grid, w)


def delta_inf(grid: GridSpec) -> HatMeasure:
    """All mass at m=1: perfect knowledge, identity of the check-node op."""
    w = np.zeros(grid.size)
    w[-1] = 1.0
    return HatMeasure(grid, w)


def bec_measure(grid: GridSpec, erasure: float) -> HatMeasure:
    """Atom-only measure {erasure at m=0, rest at m=1}."""
    if not 0.0 <= erasure <= 1.0:
        raise MeasureError(f"erasure probability {erasure!r} outside [0,1]")
    w = np.zeros(grid.size)
    w[0] = erasure
    w[-1] = 1.0 - erasure
    return HatMeasure(grid, w)


def from_points(grid: GridSpec, magnitudes: Sequence[float], masses: Sequence[float]) -> HatMeasure:
    """Deposit point masses at arbitrary magnitudes (mean-preserving split)."""
    ms = np.asarray(magnitudes, dtype=np.float64)
    ws = np.asarray(masses, dtype=np.float64)
    if ms.shape != ws.shape or ms.ndim != 1:
        raise MeasureError("magnitudes and masses must be 1-D arrays of equal length")
    if np.any(ms < 0.0) or np.any(ms > 1.0):
        raise MeasureError("magnitudes must lie in [0,1]")
    if np.any(ws < 0.0):
        raise MeasureError("masses must be nonnegative")
    out = _kernels.deposit_points(ms, ws, grid.bins)
    total = out.sum()
    if total <= 0.0:
        raise MeasureError("zero total mass")
    return HatMeasure(grid, out / total)


def _check_same_grid(x: HatMeasure, y: HatMeasure) -> None:
    if x.grid.bins != y.grid.bins:
        raise GridError(f"grid mismatch: {x.grid.bins} vs {y.grid.bins} bins")


def _packed(x: HatMeasure):
    vals = x.grid.arrays().vals
    nz = np.flatnonzero(x.weights)
    return np.ascontiguousarray(vals[nz]), np.ascontiguousarray(x.weights[nz])


def _renormed(raw: np.ndarray) -> np.ndarray:
    # keep identity paths bit-exact; pull genuine drift back so repeated
    # composition cannot amplify it through high-degree mixtures
    s = raw.sum()
    if abs(s - 1.0) > 1e-13:
        return raw / s
    return raw


def _finish(grid: GridSpec, raw: np.ndarray) -> HatMeasure:
    return HatMeasure(grid, _renormed(raw))


def var_conv(x: HatMeasure, y: HatMeasure) -> HatMeasure:
    """Variable-node convolution (LLR addition) of two measures."""
    _check_same_grid(x, y)
    B = x.grid.bins
    if x is y or np.array_equal(x.weights, y.weights):
        v, w = _packed(x)
        return _finish(x.grid, _kernels.var_conv_sym_raw(v, w, B))
    v1, w1 = _packed(x)
    v2, w2 = _packed(y)
    if v1.shape[0] < v2.shape[0]:
        v1, w1, v2, w2 = v2, w2, v1, w1
    return _finish(x.grid, _kernels.var_conv_raw(v1, w1, v2, w2, B))


def check_conv(x: HatMeasure, y: HatMeasure) -> HatMeasure:
    """Check-node convolution: the product law of independent magnitudes."""
    _check_same_grid(x, y)
    B = x.grid.bins
    if x is y or np.array_equal(x.weights, y.weights):
        v, w = _packed(x)
        return _finish(x.grid, _kernels.check_conv_sym_raw(v, w, B))
    v1, w1 = _packed(x)
    v2, w2 = _packed(y)
    if v1.shape[0] < v2.shape[0]:
        v1, w1, v2, w2 = v2, w2, v1, w1
    return _finish(x.grid, _kernels.check_conv_raw(v1, w1, v2, w2, B))


def _validated_coeffs(coeffs: Sequence[float]) -> np.ndarray:
    p = np.asarray(coeffs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise MeasureError("polynomial coefficients must be a nonempty 1-D array")
    if np.any(p < 0.0):
        raise MeasureError("polynomial coefficients must be nonnegative")
    if abs(p.sum() - 1.0) > _COEFF_SUM_TOL:
        raise MeasureError(f"coefficients sum to {p.sum()!r}, expected 1")
    return p


def _canonical_power(conv, x: HatMeasure, n: int, cache: dict) -> HatMeasure:
    """n-fold self-convolution with one fixed association order everywhere.

    Even powers square the half power (hitting the symmetric kernel),
    odd powers multiply once more by the base.  Using a single canonical
    recursion keeps monomial and mixture evaluations bit-consistent, so
    DE steps and the potential terms see identical quantized measures.
    """
    got = cache.get(n)
    if got is not None:
        return got
    if n == 1:
        out = x
    elif n % 2 == 0:
        half = _canonical_power(conv, x, n // 2, cache)
        out = conv(half, half)
    else:
        out = conv(_canonical_power(conv, x, n - 1, cache), x)
    cache[n] = out
    return out


def _power(conv, x: HatMeasure, n: int) -> HatMeasure:
    return _canonical_power(conv, x, n, {})


def _poly_apply(conv, unit: HatMeasure, coeffs: np.ndarray, x: HatMeasure) -> HatMeasure:
    needed = np.flatnonzero(coeffs)
    if needed.size == 0:
        raise MeasureError("zero polynomial")
    cache: dict = {}
    if needed.size == 1:
        n = int(needed[0])
        return unit if n == 0 else _canonical_power(conv, x, n, cache)
    acc = np.zeros(x.grid.size)
    for n in needed:
        n = int(n)
        term = unit if n == 0 else _canonical_power(conv, x, n, cache)
        acc += coeffs[n] * term.weights
    return HatMeasure(x.grid, _renormed(acc))


def poly_var(coeffs: Sequence[float], x: HatMeasure) -> HatMeasure:
    """Mixture of variable-node powers; x^0 is the atom at m=0."""
    p = _validated_coeffs(coeffs)
    return _poly_apply(var_conv, delta0(x.grid), p, x)


def poly_check(coeffs: Sequence[float], x: HatMeasure) -> HatMeasure:
    """Mixture of check-node powers; x^0 is the atom at m=1."""
    p = _validated_coeffs(coeffs)
    return _poly_apply(check_conv, delta_inf(x.grid), p, x)


def _poly_apply_many(conv, unit: HatMeasure, coeff_lists, x: HatMeasure) -> list[HatMeasure]:
    """Evaluate several polynomial mixtures of one base, sharing the power cache."""
    ps = [_validated_coeffs(c) for c in coeff_lists]
    accs = [np.zeros(x.grid.size) for _ in ps]
    cache: dict = {}
    for p, acc in zip(ps, accs):
        for n in np.flatnonzero(p):
            n = int(n)
            term = unit if n == 0 else _canonical_power(conv, x, n, cache)
            acc += p[n] * term.weights
    return [HatMeasure(x.grid, _renormed(a)) for a in accs]


def poly_check_many(coeff_lists, x: HatMeasure) -> list[HatMeasure]:
    """Several check-node mixtures of the same base with one shared power chain."""
    return _poly_apply_many(check_conv, delta_inf(x.grid), coeff_lists, x)


def poly_var_many(coeff_lists, x: HatMeasure) -> list[HatMeasure]:
    """Several variable-node mixtures of the same base with one shared power chain."""
    return _poly_apply_many(var_conv, delta0(x.grid), coeff_lists, x)


def mix(parts: Sequence[HatMeasure], weights: Sequence[float]) -> HatMeasure:
    """Convex combination of measures on one grid."""
    if len(parts) == 0 or len(parts) != len(weights):
        raise MeasureError("need matching nonempty measures and weights")
    grid = parts[0].grid
    acc = np.zeros(grid.size)
    for p, a in zip(parts, weights):
        _check_same_grid(parts[0], p)
        if a < 0.0:
            raise MeasureError("mixture weights must be nonnegative")
        acc += a * p.weights
    return HatMeasure(grid, _renormed(acc))


# ---------------------------------------------------------------------------
# Linear functionals


def entropy(x: HatMeasure) -> float:
    """Conditional-entropy functional; 1 at the m=0 atom, 0 at the m=1 atom."""
    return float(x.weights @ x.grid.arrays().h2)


def bhattacharyya(x: HatMeasure) -> float:
    """Bhattacharyya functional sum of mass * sqrt(1-m^2)."""
    return float(x.weights @ x.grid.arrays().bhat)


def error_prob(x: HatMeasure) -> float:
    """Hard-decision error functional: mass-weighted (1-m)/2."""
    return float(x.weights @ x.grid.arrays().err)


def moment(k: int, x: HatMeasure) -> float:
    """2k-th tanh moment of the underlying LLR measure."""
    if k < 1:
        raise MeasureError(f"moment order must be >= 1, got {k}")
    arrays = x.grid.arrays()
    if k <= MOMENT_TABLE_ORDER:
        return float(x.weights @ arrays.upow[k - 1])
    u = arrays.vals * arrays.vals
    return float(x.weights @ (u ** k))


def moments_upto(x: HatMeasure, K: int = MOMENT_TABLE_ORDER) -> np.ndarray:
    """Vector of the first K tanh moments."""
    if K < 1:
        raise MeasureError("K must be >= 1")
    arrays = x.grid.arrays()
    if K <= MOMENT_TABLE_ORDER:
        return arrays.upow[:K] @ x.weights
    out = np.empty(K)
    out[:MOMENT_TABLE_ORDER] = arrays.upow @ x.weights
    u = arrays.vals * arrays.vals
    acc = arrays.upow[-1].copy()
    for k in range(MOMENT_TABLE_ORDER, K):
        acc = acc * u
        out[k] = acc @ x.weights
    return out


def entropy_distance_tail_bound(K: int) -> float:
    """Exact weight on moment orders above K; at most 1/(2K ln 2)."""
    if K >= MOMENT_TABLE_ORDER:
        # tail of sum gamma_k = 1: compute the remainder directly
        total = GAMMA.sum() if K == MOMENT_TABLE_ORDER else None
        if total is None:
            total = sum(
                1.0 / (2 * k * (2 * k - 1) * math.log(2)) for k in range(1, K + 1)
            )
        return max(0.0, 1.0 - float(total))
    return max(0.0, 1.0 - float(GAMMA[:K].sum()))


class EntropyDistance(NamedTuple):
    value: float
    tail_bound: float


def entropy_distance(x: HatMeasure, y: HatMeasure, K: int = MOMENT_TABLE_ORDER) -> EntropyDistance:
    """Truncated moment metric sum gamma_k |M_k(x)-M_k(y)| with its tail bound.

    For degradation-ordered arguments the untruncated value equals the
    entropy difference, so the reported tail bound is also an error bar
    on |H(x)-H(y)|.
    """
    _check_same_grid(x, y)
    if K < 1:
        raise MeasureError("K must be >= 1")
    dm = np.abs(moments_upto(x, K) - moments_upto(y, K))
    if K <= MOMENT_TABLE_ORDER:
        value = float(GAMMA[:K] @ dm)
    else:
        gam = np.array([1.0 / (2 * k * (2 * k - 1) * math.log(2)) for k in range(1, K + 1)])
        value = float(gam @ dm)
    return EntropyDistance(value, entropy_distance_tail_bound(K))


def _dh(x: HatMeasure, y: HatMeasure, K: int = MOMENT_TABLE_ORDER) -> float:
    """Fast truncated entropy distance for inner loops (no tail report)."""
    dm = np.abs(moments_upto(x, K) - moments_upto(y, K))
    return float(GAMMA[:K] @ dm)


# ---------------------------------------------------------------------------
# Degradation order


def _hinge_expectations(x: HatMeasure) -> np.ndarray:
    """E[(M-t)+] for every support threshold t (t=0 is the first entry)."""
    vals = x.grid.arrays().vals
    w = x.weights
    rw = np.cumsum(w[::-1])[::-1]
    rwm = np.cumsum((w * vals)[::-1])[::-1]
    return rwm - vals * rw


def is_degraded(x1: HatMeasure, x2: HatMeasure, slack: float = 1e-9) -> bool:
    """True when x1 is degraded (worse) with respect to x2.

    Concave non-increasing test functions of the magnitude are generated
    by constants and negated hinges -(m-t)+, and on a shared finite
    support it suffices to check hinge thresholds at the support points:
    x1 is degraded iff every upper partial expectation E[(M-t)+] under
    x1 is at most the one under x2 (within slack).
    """
    _check_same_grid(x1, x2)
    e1 = _hinge_expectations(x1)
    e2 = _hinge_expectations(x2)
    return bool(np.all(e1 <= e2 + slack))


# ---------------------------------------------------------------------------
# Serialization


def write_measure_csv(x: HatMeasure, fh) -> None:
    """CSV dump: atom rows first, then m_center,mass for interior cells."""
    fh.write("point,mass\n")
    fh.write(f"atom0,{x.atom0:.17g}\n")
    fh.write(f"atom1,{x.atom1:.17g}\n")
    centers = x.grid.centers
    for m, w in zip(centers, x.interior):
        fh.write(f"{m:.17g},{w:.17g}\n")
