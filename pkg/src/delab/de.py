"""Single-system density evolution: fixed points, basins, BP and stability thresholds.

The update map is ``c (*) lambda^(*)(rho^(x))`` for LDPC (channel enters
through the variable-node convolution) and ``lambda^(*)(c (x) rho^(x))``
for LDGM (channel enters at the generator nodes).  Iterations are
stopped on the truncated moment metric between successive iterates,
which for the monotone trajectories used here coincides with the
entropy difference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelFamily
from .ensembles import EnsembleSpec
from .measure import (
    GAMMA,
    HatMeasure,
    bhattacharyya,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    error_prob,
    is_degraded,
    moments_upto,
    poly_check,
    poly_var,
    var_conv,
)

#: entropy below which a trajectory is declared absorbed at the m=1 atom
PERFECT_H = 1e-6

DEFAULT_TOL_DH = 1e-9
DEFAULT_MAX_ITER = 2000
DEFAULT_DH_ORDER = 200


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DeStop:
    tol_dh: float = DEFAULT_TOL_DH
    max_iter: int = DEFAULT_MAX_ITER
    order: int = DEFAULT_DH_ORDER

    def __post_init__(self):
        if self.tol_dh <= 0 or self.max_iter < 1 or self.order < 1:
            raise ValueError("stopping parameters must be positive")


@dataclass
class DeTrace:
    """Iteration log of one DE run: per-iterate functionals and the terminal."""

    iterates: list[tuple[int, float, float, float, float]] = field(default_factory=list)
    terminal: HatMeasure | None = None
    status: str = "maxIterReached"   # or "converged"
    comparable: bool = True          # T(x0) comparable to x0 under degradation

    @property
    def iterations(self) -> int:
        return len(self.iterates)


def de_step(ens: EnsembleSpec, x: HatMeasure, c: HatMeasure) -> HatMeasure:
    """One exact application of the ensemble's DE update."""
    r = poly_check(ens.rho.coeffs, x)
    if ens.kind == "ldpc":
        return var_conv(c, poly_var(ens.lam.coeffs, r))
    return poly_var(ens.lam.coeffs, check_conv(c, r))


def _step_distance(gamma: np.ndarray, m_prev: np.ndarray, m_cur: np.ndarray) -> float:
    return float(gamma @ np.abs(m_prev - m_cur))


def de_fixed_point(
    ens: EnsembleSpec,
    x0: HatMeasure,
    c: HatMeasure,
    stop: DeStop = DeStop(),
    known_outside: HatMeasure | None = None,
    early_h: float | None = None,
) -> DeTrace:
    """Iterate DE from x0 until the successive-iterate metric drops below tol.

    ``known_outside`` short-circuits runs whose iterate becomes degraded
    with respect to a fixed point already known to lie outside the
    target basin (monotonicity then pins the limit).  ``early_h`` stops
    once the iterate's entropy falls below it (absorption shortcut).
    """
    trace = DeTrace()
    gamma = GAMMA[: stop.order]
    x = x0
    m_prev = moments_upto(x, stop.order)
    first = de_step(ens, x, c)
    trace.comparable = is_degraded(first, x, slack=1e-9) or is_degraded(x, first, slack=1e-9)
    for it in range(stop.max_iter):
        nxt = first if it == 0 else de_step(ens, x, c)
        m_cur = moments_upto(nxt, stop.order)
        dh = _step_distance(gamma, m_prev, m_cur)
        h = entropy(nxt)
        trace.iterates.append((it + 1, h, bhattacharyya(nxt), error_prob(nxt), dh))
        x = nxt
        m_prev = m_cur
        if dh < stop.tol_dh:
            trace.status = "converged"
            break
        if early_h is not None and h < early_h:
            trace.status = "converged"
            break
        if known_outside is not None and is_degraded(x, known_outside, slack=1e-12):
            trace.status = "dominates_outside_fp"
            break
    trace.terminal = x
    return trace


def minimal_fixed_point(
    ens: EnsembleSpec, c: HatMeasure, stop: DeStop = DeStop()
) -> HatMeasure:
    """Limit of DE from the all-perfect start; the LDGM error-floor fixed point."""
    if ens.kind != "ldgm":
        raise ValueError("minimal fixed point is defined for LDGM ensembles")
    trace = de_fixed_point(ens, delta_inf(c.grid), c, stop)
    if trace.status != "converged":
        raise ConvergenceError(
            f"minimal fixed point did not converge within {stop.max_iter} iterations"
        )
    return trace.terminal


def _dh_trunc(x: HatMeasure, y: HatMeasure, order: int) -> float:
    return float(GAMMA[:order] @ np.abs(moments_upto(x, order) - moments_upto(y, order)))


def in_basin(
    ens: EnsembleSpec,
    x: HatMeasure,
    c: HatMeasure,
    target: HatMeasure,
    stop: DeStop = DeStop(),
    tol: float = 1e-6,
    known_outside: HatMeasure | None = None,
) -> str:
    """Classify x against the basin of attraction of ``target``: yes/no/unknown."""
    early = PERFECT_H / 10 if target.atom1 == 1.0 else None
    trace = de_fixed_point(ens, x, c, stop, known_outside=known_outside, early_h=early)
    if trace.status == "dominates_outside_fp":
        return "no"
    if trace.status != "converged":
        return "unknown"
    if target.atom1 == 1.0 and entropy(trace.terminal) < PERFECT_H:
        return "yes"
    return "yes" if _dh_trunc(trace.terminal, target, stop.order) < tol else "no"


@dataclass
class ThresholdReport:
    kind: str
    estimator: str
    h_lo: float
    h_hi: float
    tol: float
    iterations: int
    flags: list[str] = field(default_factory=list)
    evaluations: list[tuple[float, str]] = field(default_factory=list)

    @property
    def h_mid(self) -> float:
        return 0.5 * (self.h_lo + self.h_hi)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "estimator": self.estimator,
            "h_lo": self.h_lo,
            "h_hi": self.h_hi,
            "h_mid": self.h_mid,
            "tol": self.tol,
            "iterations": self.iterations,
            "flags": list(self.flags),
            "evaluations": [{"h": h, "result": r} for h, r in self.evaluations],
        }


def _bisect_predicate(
    kind: str,
    estimator: str,
    predicate,
    lo: float,
    hi: float,
    tol_h: float,
    check_endpoints: bool = True,
) -> ThresholdReport:
    """Bisect a monotone yes-above-to-no predicate on channel entropy.

    ``predicate(h)`` returns "yes"/"no"/"unknown"; "unknown" is treated
    as "no" and flagged, never silently dropped.
    """
    report = ThresholdReport(kind=kind, estimator=estimator, h_lo=lo, h_hi=hi, tol=tol_h, iterations=0)

    def classify(h: float) -> bool:
        res = predicate(h)
        report.evaluations.append((h, res))
        if res == "unknown":
            report.flags.append(f"unknown_at_h={h:.6g}_treated_as_no")
        return res == "yes"

    if check_endpoints:
        if not classify(lo):
            report.flags.append("bracket_lower_endpoint_not_yes")
            return report
        if classify(hi):
            report.flags.append("bracket_upper_endpoint_not_no")
            report.h_lo = hi
            return report
    it = 0
    while hi - lo > tol_h:
        mid = 0.5 * (lo + hi)
        if classify(mid):
            lo = mid
        else:
            hi = mid
        it += 1
    report.h_lo, report.h_hi, report.iterations = lo, hi, it
    return report


def bp_threshold(
    ens: EnsembleSpec,
    family: ChannelFamily,
    tol_h: float = 1e-4,
    bracket: tuple[float, float] = (0.0, 1.0),
    stop: DeStop = DeStop(),
) -> ThresholdReport:
    """Largest channel entropy at which forward DE still reaches perfect decoding."""
    if ens.kind != "ldpc":
        raise ValueError("the BP threshold is defined for LDPC ensembles only")
    target = delta_inf(family.grid)

    def predicate(h: float) -> str:
        c = family.density_from_entropy(h)
        return in_basin(ens, delta0(family.grid), c, target, stop)

    return _bisect_predicate("bp", "forward-de", predicate, bracket[0], bracket[1], tol_h)


def stability_threshold(
    ens: EnsembleSpec,
    family: ChannelFamily,
    tol_h: float = 1e-4,
) -> ThresholdReport:
    """Entropy where the small-error contraction condition B(c) lam'(0) rho'(1) = 1."""
    if ens.kind != "ldpc":
        raise ValueError("the stability threshold is defined for LDPC ensembles only")
    lam_p0 = ens.lam.derivative()(0.0)
    rho_p1 = ens.rho.derivative()(1.0)
    if lam_p0 == 0.0:
        rep = ThresholdReport(
            kind="stability", estimator="closed-form", h_lo=1.0, h_hi=1.0, tol=0.0, iterations=0
        )
        rep.flags.append("no_degree_two_variable_nodes")
        return rep

    def predicate(h: float) -> str:
        c = family.density_from_entropy(h)
        return "yes" if bhattacharyya(c) * lam_p0 * rho_p1 < 1.0 else "no"

    if predicate(1.0) == "yes":
        rep = ThresholdReport(
            kind="stability", estimator="bhattacharyya", h_lo=1.0, h_hi=1.0, tol=tol_h, iterations=0
        )
        rep.flags.append("stable_on_whole_family")
        return rep
    return _bisect_predicate("stability", "bhattacharyya", predicate, 0.0, 1.0, tol_h,
                             check_endpoints=False)
