"""BMS channel families ordered by degradation and parameterized by entropy.

Three families are provided: BEC (atom-only, exact), BSC (a symmetrized
LLR point pair, deposited on the magnitude grid), and BAWGN (the
Gaussian LLR density integrated exactly over the preimage of each
magnitude cell via the normal CDF).  ``param_from_entropy`` inverts the
monotone parameter-to-entropy map by bisection so that round trips are
consistent with the quantized entropy functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .measure import ATANH_CLAMP, GridSpec, HatMeasure, bec_measure, entropy, from_points

FamilyKind = Literal["bec", "bsc", "bawgn"]

_SIGMA_LO = 1e-2
_SIGMA_HI = 1e4


class ChannelError(ValueError):
    pass


def _bsc_measure(grid: GridSpec, p: float) -> HatMeasure:
    if not 0.0 <= p <= 0.5:
        raise ChannelError(f"BSC crossover must be in [0, 1/2], got {p!r}")
    return from_points(grid, [1.0 - 2.0 * p], [1.0])


def _bawgn_measure(grid: GridSpec, sigma: float) -> HatMeasure:
    """Quantized LLR magnitude density for the binary-input AWGN channel.

    Conditional on the +1 input the LLR is Normal(2/sigma^2, 4/sigma^2).
    Cell mass is the exact probability of the preimage of the magnitude
    cell under alpha = 2 atanh(m) (both LLR signs); mass of magnitudes
    beyond the atanh clamp goes to the exact m=1 atom.
    """
    if sigma <= 0.0:
        raise ChannelError(f"BAWGN noise sigma must be positive, got {sigma!r}")
    B = grid.bins
    mu = 2.0 / (sigma * sigma)
    s = 2.0 / sigma
    edges_m = np.concatenate((np.arange(B) / B, [ATANH_CLAMP]))
    edges_a = 2.0 * np.arctanh(edges_m)

    def _cdf(a: np.ndarray) -> np.ndarray:
        z = (a - mu) / (s * math.sqrt(2.0))
        from scipy.special import erf

        return 0.5 * (1.0 + erf(z))

    up = _cdf(edges_a)
    dn = _cdf(-edges_a)
    # mass with |alpha| in [edges_a[j], edges_a[j+1])
    cell = (up[1:] - up[:-1]) + (dn[:-1] - dn[1:])
    w = np.zeros(grid.size)
    w[1:-1] = cell
    w[-1] = max(0.0, (1.0 - up[-1]) + dn[-1])
    total = w.sum()
    if not 0.999999 < total < 1.000001:
        raise ChannelError(f"BAWGN quantization lost mass: total {total!r}")
    return HatMeasure(grid, w / total)


@dataclass(frozen=True)
class ChannelFamily:
    """A degradation-ordered, entropy-parameterized family of BMS channels."""

    kind: FamilyKind
    grid: GridSpec

    def __post_init__(self):
        if self.kind not in ("bec", "bsc", "bawgn"):
            raise ChannelError(f"unknown channel family {self.kind!r}")

    def density_from_param(self, p: float) -> HatMeasure:
        """Quantized LLR-magnitude measure from the family's native parameter."""
        if self.kind == "bec":
            if not 0.0 <= p <= 1.0:
                raise ChannelError(f"BEC erasure must be in [0,1], got {p!r}")
            return bec_measure(self.grid, p)
        if self.kind == "bsc":
            return _bsc_measure(self.grid, p)
        return _bawgn_measure(self.grid, p)

    def _param_bracket(self) -> tuple[float, float]:
        if self.kind == "bec":
            return 0.0, 1.0
        if self.kind == "bsc":
            return 0.0, 0.5
        return _SIGMA_LO, _SIGMA_HI

    def param_from_entropy(self, h: float, tol: float = 1e-8, max_iter: int = 200):
        """Invert entropy -> native parameter by bisection.

        Returns ``(param, iterations)``; the residual
        |entropy(density(param)) - h| is below tol on exit.
        """
        if not 0.0 <= h <= 1.0:
            raise ChannelError(f"entropy must be in [0,1], got {h!r}")
        if self.kind == "bec":
            return h, 0
        lo, hi = self._param_bracket()
        if self.kind == "bawgn":
            # bisect in log sigma; entropy is increasing in sigma
            llo, lhi = math.log(lo), math.log(hi)
            for it in range(max_iter):
                mid = 0.5 * (llo + lhi)
                hm = entropy(self.density_from_param(math.exp(mid)))
                if abs(hm - h) < tol:
                    return math.exp(mid), it + 1
                if hm < h:
                    llo = mid
                else:
                    lhi = mid
            return math.exp(0.5 * (llo + lhi)), max_iter
        for it in range(max_iter):
            mid = 0.5 * (lo + hi)
            hm = entropy(self.density_from_param(mid))
            if abs(hm - h) < tol:
                return mid, it + 1
            if hm < h:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi), max_iter

    def density_from_entropy(self, h: float, tol: float = 1e-8) -> HatMeasure:
        if self.kind == "bec":
            return bec_measure(self.grid, h)
        p, _ = self.param_from_entropy(h, tol=tol)
        return self.density_from_param(p)
