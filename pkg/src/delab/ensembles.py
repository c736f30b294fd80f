"""Degree distributions and ensemble constants.

Polynomials are stored dense, ``coeffs[n]`` multiplying t^n.  Edge
perspective distributions put the coefficient for degree-d nodes at
power d-1, node perspective at power d.  Either pair (lambda, rho) or
(L, R) determines the other; both are kept and must stay consistent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

EnsembleKind = Literal["ldpc", "ldgm"]

_CONSISTENCY_TOL = 1e-12


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class DegreePolynomial:
    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) == 0:
            raise EnsembleError("empty polynomial")
        if any(v < 0.0 for v in c):
            raise EnsembleError("polynomial coefficients must be nonnegative")
        while len(c) > 1 and c[-1] == 0.0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c)

    def __call__(self, t: float) -> float:
        acc = 0.0
        for v in reversed(self.coeffs):
            acc = acc * t + v
        return acc

    def derivative(self) -> "DegreePolynomial":
        if len(self.coeffs) == 1:
            return DegreePolynomial((0.0,))
        return DegreePolynomial(tuple(n * v for n, v in enumerate(self.coeffs) if n > 0))

    def integral(self) -> "DegreePolynomial":
        return DegreePolynomial((0.0,) + tuple(v / (n + 1) for n, v in enumerate(self.coeffs)))

    def scaled(self, a: float) -> "DegreePolynomial":
        return DegreePolynomial(tuple(a * v for v in self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)


def _coerce_coeffs(raw: Sequence) -> tuple[float, ...]:
    out = []
    for v in raw:
        if isinstance(v, dict):
            out.append(float(v["num"]) / float(v["den"]))
        else:
            out.append(float(v))
    return tuple(out)


def _normalized(p: DegreePolynomial, what: str) -> DegreePolynomial:
    s = p(1.0)
    if s <= 0.0:
        raise EnsembleError(f"{what} polynomial is not normalizable")
    if abs(s - 1.0) < 1e-15:
        return p
    return p.scaled(1.0 / s)


@dataclass(frozen=True)
class EnsembleSpec:
    """An LDPC or LDGM ensemble with both degree-distribution perspectives."""

    kind: EnsembleKind
    lam: DegreePolynomial   # edge perspective, variable/information side
    rho: DegreePolynomial   # edge perspective, check/generator side
    L: DegreePolynomial     # node perspective, variable/information side
    R: DegreePolynomial     # node perspective, check/generator side

    def __post_init__(self):
        if self.kind not in ("ldpc", "ldgm"):
            raise EnsembleError(f"unknown ensemble kind {self.kind!r}")
        if self.kind == "ldpc" and self.lam.coeffs[0] > 0.0:
            raise EnsembleError("LDPC ensembles must not have degree-one variable nodes")
        for name, edge, node in (("lambda/L", self.lam, self.L), ("rho/R", self.rho, self.R)):
            dp = node.derivative()
            dp1 = dp(1.0)
            if dp1 <= 0.0:
                raise EnsembleError(f"{name}: degenerate node polynomial")
            expect = dp.scaled(1.0 / dp1)
            a, b = expect.as_array(), edge.as_array()
            n = max(a.size, b.size)
            a = np.pad(a, (0, n - a.size))
            b = np.pad(b, (0, n - b.size))
            if np.max(np.abs(a - b)) > _CONSISTENCY_TOL:
                raise EnsembleError(f"{name}: edge and node perspectives disagree")

    @property
    def Lp1(self) -> float:
        return self.L.derivative()(1.0)

    @property
    def Rp1(self) -> float:
        return self.R.derivative()(1.0)

    def derived_constants(self) -> dict[str, float]:
        lam_d = self.lam.derivative()
        rho_d = self.rho.derivative()
        rho_dd = rho_d.derivative()
        lp1 = self.Lp1
        rp1 = self.Rp1
        consts = {
            "lambda_prime_0": lam_d(0.0),
            "lambda_prime_1": lam_d(1.0),
            "rho_prime_1": rho_d(1.0),
            "rho_second_1": rho_dd(1.0),
            "L_prime_1": lp1,
            "R_prime_1": rp1,
            "K": lp1 * (2.0 * rho_dd(1.0) + rho_d(1.0) + 2.0 * lam_d(1.0) * rho_d(1.0) ** 2),
        }
        if self.kind == "ldpc":
            consts["design_rate"] = 1.0 - lp1 / rp1
        else:
            consts["design_rate"] = rp1 / lp1
        return consts


def from_edge_perspective(lam, rho, kind: EnsembleKind) -> EnsembleSpec:
    lam = _normalized(DegreePolynomial(_coerce_coeffs(lam)), "lambda")
    rho = _normalized(DegreePolynomial(_coerce_coeffs(rho)), "rho")
    Lint = lam.integral()
    Rint = rho.integral()
    L = Lint.scaled(1.0 / Lint(1.0))
    R = Rint.scaled(1.0 / Rint(1.0))
    return EnsembleSpec(kind=kind, lam=lam, rho=rho, L=L, R=R)


def from_node_perspective(L, R, kind: EnsembleKind) -> EnsembleSpec:
    L = _normalized(DegreePolynomial(_coerce_coeffs(L)), "L")
    R = _normalized(DegreePolynomial(_coerce_coeffs(R)), "R")
    Ld = L.derivative()
    Rd = R.derivative()
    lam = Ld.scaled(1.0 / Ld(1.0))
    rho = Rd.scaled(1.0 / Rd(1.0))
    return EnsembleSpec(kind=kind, lam=lam, rho=rho, L=L, R=R)


def from_json_dict(data: dict) -> EnsembleSpec:
    kind = data.get("kind")
    if kind not in ("ldpc", "ldgm"):
        raise EnsembleError(f"ensemble config needs kind ldpc|ldgm, got {kind!r}")
    if "lambda" in data and "rho" in data:
        return from_edge_perspective(data["lambda"], data["rho"], kind)
    if "L" in data and "R" in data:
        return from_node_perspective(data["L"], data["R"], kind)
    raise EnsembleError("ensemble config needs lambda/rho or L/R")


def load_ensemble(path: str) -> EnsembleSpec:
    with open(path) as fh:
        return from_json_dict(json.load(fh))


def regular_ldpc(dv: int, dc: int) -> EnsembleSpec:
    """The (dv, dc)-regular LDPC ensemble."""
    lam = [0.0] * (dv - 1) + [1.0]
    rho = [0.0] * (dc - 1) + [1.0]
    return from_edge_perspective(lam, rho, "ldpc")
