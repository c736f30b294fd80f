"""Potential functionals, energy gaps, the potential threshold, and landscape curves.

The single-system potential is a signed combination of entropy terms
whose stationary points are exactly the DE fixed points; its sign at the
forward fixed point and the sign of the energy gap give two estimators
of the potential threshold.  The energy gap is an infimum over an
infinite-dimensional complement, so any finite candidate search only
certifies an upper bound; reports say so explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channels import ChannelFamily
from .de import (
    DeStop,
    PERFECT_H,
    ThresholdReport,
    _bisect_predicate,
    _dh_trunc,
    de_step,
    in_basin,
    minimal_fixed_point,
)
from .ensembles import EnsembleSpec
from .measure import (
    GridSpec,
    HatMeasure,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    mix,
    poly_check,
    poly_var,
    var_conv,
)

_H2_GAP_CACHE: dict[int, np.ndarray] = {}


def _h2_of_m(m: np.ndarray) -> np.ndarray:
    q = np.clip((1.0 - m) / 2.0, 0.0, 1.0)
    out = np.zeros_like(q)
    inner = (q > 0) & (q < 1)
    qq = q[inner]
    out[inner] = -(qq * np.log2(qq) + (1 - qq) * np.log2(1 - qq))
    return out


def _h2_chord_gap(grid: GridSpec) -> np.ndarray:
    """Per-support bound on the entropy error of one mass deposit."""
    cached = _H2_GAP_CACHE.get(grid.bins)
    if cached is not None:
        return cached
    vals = grid.support
    gaps = np.zeros_like(vals)
    for s in range(len(vals) - 1):
        a, b = vals[s], vals[s + 1]
        ts = np.linspace(a, b, 17)
        chord = _h2_of_m(np.array([a]))[0] + (ts - a) / (b - a) * (
            _h2_of_m(np.array([b]))[0] - _h2_of_m(np.array([a]))[0]
        )
        g = float(np.max(np.abs(_h2_of_m(ts) - chord)))
        gaps[s] = max(gaps[s], g)
        gaps[s + 1] = max(gaps[s + 1], g)
    gaps.setflags(write=False)
    _H2_GAP_CACHE[grid.bins] = gaps
    return gaps


def _entropy_residual(x: HatMeasure) -> float:
    return float(x.weights @ _h2_chord_gap(x.grid))


@dataclass
class PotentialReport:
    value: float
    terms: dict[str, float]
    grid_residual: float

    def as_dict(self) -> dict:
        return {"value": self.value, "terms": dict(self.terms), "grid_residual": self.grid_residual}


def potential(ens: EnsembleSpec, x: HatMeasure, c: HatMeasure) -> PotentialReport:
    """Single-system potential, term by term; value is the exact signed sum."""
    lp1 = ens.Lp1
    rp1 = ens.Rp1
    r = poly_check(ens.rho.coeffs, x)
    if ens.kind == "ldpc":
        t = {
            "node_check": lp1 / rp1 * entropy(poly_check(ens.R.coeffs, x)),
            "edge_check": lp1 * entropy(r),
            "edge_pair": -lp1 * entropy(check_conv(x, r)),
            "decoder": -entropy(var_conv(c, poly_var(ens.L.coeffs, r))),
        }
        probe = poly_var(ens.L.coeffs, r)
    else:
        y = check_conv(c, r)
        t = {
            "node_check": lp1 / rp1 * entropy(check_conv(c, poly_check(ens.R.coeffs, x))),
            "edge_pair": -lp1 * entropy(check_conv(x, y)),
            "edge_check": lp1 * entropy(y),
            "decoder": -entropy(poly_var(ens.L.coeffs, y)),
            "channel": -lp1 / rp1 * entropy(c),
        }
        probe = y
    value = math.fsum(t.values())
    scale = lp1 / rp1 + 2.0 * lp1 + 1.0
    residual = scale * max(_entropy_residual(x), _entropy_residual(r), _entropy_residual(probe))
    return PotentialReport(value=value, terms=t, grid_residual=residual)


def _normalized_derivative(p) -> tuple[float, tuple[float, ...]]:
    d = p.derivative()
    d1 = d(1.0)
    if d1 <= 0.0:
        raise ValueError("degenerate degree polynomial")
    return d1, d.scaled(1.0 / d1).coeffs


def directional_derivative(
    ens: EnsembleSpec,
    x: HatMeasure,
    c: HatMeasure,
    y_plus: HatMeasure,
    y_minus: HatMeasure,
) -> float:
    """Derivative of the potential at x along the direction y_plus - y_minus.

    Evaluated from its closed form (update residual check-convolved with
    the normalized derivative mixture and the direction) by expanding
    the differences, so only probability measures are ever convolved.
    """
    rp1, rho_d = _normalized_derivative(ens.rho)
    rd = poly_check(rho_d, x)
    t_fwd = de_step(ens, x, c)
    if ens.kind == "ldgm":
        rd = check_conv(c, rd)
    a = check_conv(t_fwd, rd)
    b = check_conv(x, rd)
    return ens.Lp1 * rp1 * (
        entropy(check_conv(a, y_plus))
        - entropy(check_conv(a, y_minus))
        - entropy(check_conv(b, y_plus))
        + entropy(check_conv(b, y_minus))
    )


def stationarity_residual(
    ens: EnsembleSpec,
    x: HatMeasure,
    c: HatMeasure,
    directions: list[tuple[HatMeasure, HatMeasure]],
) -> float:
    """Max |directional derivative| of the potential at x over the given directions."""
    rp1, rho_d = _normalized_derivative(ens.rho)
    rd = poly_check(rho_d, x)
    t_fwd = de_step(ens, x, c)
    if ens.kind == "ldgm":
        rd = check_conv(c, rd)
    a = check_conv(t_fwd, rd)
    b = check_conv(x, rd)
    lp1 = ens.Lp1
    worst = 0.0
    for y_plus, y_minus in directions:
        val = lp1 * rp1 * (
            entropy(check_conv(a, y_plus))
            - entropy(check_conv(a, y_minus))
            - entropy(check_conv(b, y_plus))
            + entropy(check_conv(b, y_minus))
        )
        worst = max(worst, abs(val))
    return worst


@dataclass
class EnergyGapReport:
    gap: float                      # +inf encoded as math.inf
    argmin: str
    candidate_count: int
    outside_count: int
    unknown_count: int
    min_potential: float | None     # min potential over outside candidates; its
                                    # negation lower-bounds the optimal-decoder entropy rate
    floor_potential: float          # potential at the reference fixed point (0 for LDPC)
    unverified: bool
    note: str = "candidate search certifies an upper bound on the true infimum"

    def as_dict(self) -> dict:
        return {
            "gap": None if math.isinf(self.gap) else self.gap,
            "gap_is_infinite": math.isinf(self.gap),
            "argmin": self.argmin,
            "candidate_count": self.candidate_count,
            "outside_count": self.outside_count,
            "unknown_count": self.unknown_count,
            "min_potential": self.min_potential,
            "floor_potential": self.floor_potential,
            "unverified": self.unverified,
            "note": self.note,
        }


_PROBE_ENTROPIES = 32
_MIX_FRACTIONS = (0.25, 0.5, 0.75)
_TRAJ_CANDIDATE_CAP = 24


@dataclass
class _ForwardRun:
    terminal: HatMeasure
    snapshots: list[tuple[int, HatMeasure]]
    converged: bool


def _forward_run(ens, c, stop: DeStop) -> _ForwardRun:
    """Forward DE from the all-useless start, retaining subsampled iterates."""
    x = delta0(c.grid)
    snaps: list[tuple[int, HatMeasure]] = []
    keep = max(1, stop.max_iter // _TRAJ_CANDIDATE_CAP)
    from .measure import GAMMA, moments_upto

    gamma = GAMMA[: stop.order]
    m_prev = moments_upto(x, stop.order)
    converged = False
    for it in range(stop.max_iter):
        nxt = de_step(ens, x, c)
        m_cur = moments_upto(nxt, stop.order)
        dh = float(gamma @ np.abs(m_prev - m_cur))
        x, m_prev = nxt, m_cur
        if it % keep == 0:
            snaps.append((it + 1, x))
        if dh < stop.tol_dh:
            converged = True
            break
        if entropy(x) < PERFECT_H / 10:
            converged = True
            break
    return _ForwardRun(terminal=x, snapshots=snaps, converged=converged)


def energy_gap(
    ens: EnsembleSpec,
    c: HatMeasure,
    strategy: str = "probes",
    stop: DeStop = DeStop(),
    probe_entropies: int = _PROBE_ENTROPIES,
) -> EnergyGapReport:
    """Upper bound on the energy gap from a finite candidate search.

    Candidates: forward-DE iterates and their pairwise convex mixtures
    (classified once through the shared forward limit), plus, under the
    "probes" strategy, BSC- and BAWGN-family probe densities classified
    individually.  The reported gap subtracts the potential of the
    minimal fixed point for LDGM ensembles.
    """
    if strategy not in ("probes", "trajectory"):
        raise ValueError(f"unknown candidate strategy {strategy!r}")
    grid = c.grid
    if ens.kind == "ldgm":
        f0 = minimal_fixed_point(ens, c, stop)
        target = f0
        floor = potential(ens, f0, c).value
    else:
        f0 = None
        target = delta_inf(grid)
        floor = 0.0

    run = _forward_run(ens, c, stop)
    unknown = 0
    if not run.converged:
        unknown += 1
    if target.atom1 == 1.0:
        fwd_outside = entropy(run.terminal) >= PERFECT_H
    else:
        fwd_outside = _dh_trunc(run.terminal, target, stop.order) >= 1e-6

    candidates: list[tuple[str, HatMeasure, str]] = []  # (name, measure, yes/no/unknown)
    traj_class = "no" if fwd_outside else "yes"
    snaps = [m for _, m in run.snapshots] + [run.terminal]
    names = [f"forward_iterate_{i}" for i, _ in run.snapshots] + ["forward_terminal"]
    for name, m in zip(names, snaps):
        candidates.append((name, m, traj_class))
    for a, b in zip(snaps[:-1], snaps[1:]):
        for frac in _MIX_FRACTIONS:
            candidates.append(
                (f"mixture_{frac}", mix([a, b], [1.0 - frac, frac]), traj_class)
            )

    if strategy == "probes":
        known_outside = run.terminal if fwd_outside else None
        hs = (np.arange(probe_entropies) + 1.0) / (probe_entropies + 1.0)
        for fam_kind in ("bsc", "bawgn"):
            fam = ChannelFamily(fam_kind, grid)
            for h in hs:
                probe = fam.density_from_entropy(float(h), tol=1e-6)
                cls = in_basin(ens, probe, c, target, stop, known_outside=known_outside)
                candidates.append((f"{fam_kind}_probe_h={h:.4f}", probe, cls))

    best: float | None = None
    argmin = ""
    outside = 0
    for name, m, cls in candidates:
        if cls == "unknown":
            unknown += 1
            continue
        if cls == "yes":
            continue
        outside += 1
        val = potential(ens, m, c).value
        if best is None or val < best:
            best, argmin = val, name

    gap = math.inf if best is None else best - floor
    return EnergyGapReport(
        gap=gap,
        argmin=argmin if best is not None else "empty_complement",
        candidate_count=len(candidates),
        outside_count=outside,
        unknown_count=unknown,
        min_potential=best,
        floor_potential=floor,
        unverified=unknown > 0,
    )


def potential_threshold(
    ens: EnsembleSpec,
    family: ChannelFamily,
    estimator: str = "forward-fp-sign",
    tol_h: float = 1e-4,
    bracket: tuple[float, float] = (0.0, 1.0),
    stop: DeStop = DeStop(),
) -> ThresholdReport:
    """Entropy where the forward-fixed-point potential (or energy gap) changes sign."""
    if ens.kind != "ldpc":
        raise ValueError("the potential threshold is defined for LDPC ensembles only")
    if estimator not in ("forward-fp-sign", "energy-gap-sign", "both"):
        raise ValueError(f"unknown estimator {estimator!r}")

    def fwd_sign(h: float) -> str:
        c = family.density_from_entropy(h)
        run = _forward_run(ens, c, stop)
        if entropy(run.terminal) < PERFECT_H:
            return "yes"  # perfect decoding: zero potential, gap infinite
        if not run.converged:
            return "unknown"
        return "yes" if potential(ens, run.terminal, c).value > 0.0 else "no"

    def gap_sign(h: float) -> str:
        c = family.density_from_entropy(h)
        rep = energy_gap(ens, c, strategy="trajectory", stop=stop)
        if rep.unverified:
            return "unknown"
        return "yes" if rep.gap > 0.0 else "no"

    if estimator in ("forward-fp-sign", "both"):
        primary = _bisect_predicate(
            "potential", "forward-fp-sign", fwd_sign, bracket[0], bracket[1], tol_h
        )
    else:
        primary = _bisect_predicate(
            "potential", "energy-gap-sign", gap_sign, bracket[0], bracket[1], tol_h
        )
    if estimator == "both":
        secondary = _bisect_predicate(
            "potential", "energy-gap-sign", gap_sign, bracket[0], bracket[1], tol_h
        )
        primary.flags.append(f"energy_gap_sign_h_mid={secondary.h_mid:.8f}")
        if abs(primary.h_mid - secondary.h_mid) > 2.0 * tol_h:
            primary.flags.append("estimator_discrepancy")
    return primary


def gap_sign_change(
    ens: EnsembleSpec,
    family: ChannelFamily,
    bracket: tuple[float, float],
    tol_h: float = 1e-3,
    stop: DeStop = DeStop(),
) -> ThresholdReport:
    """Bisect the entropy where the (trajectory-candidate) energy gap turns negative.

    Works for either ensemble kind; for LDGM the gap is relative to the
    minimal fixed point and need not be monotone globally, so the caller
    supplies a bracket on which the sign actually flips.
    """

    def predicate(h: float) -> str:
        c = family.density_from_entropy(h)
        rep = energy_gap(ens, c, strategy="trajectory", stop=stop)
        if rep.unverified:
            return "unknown"
        return "yes" if rep.gap > 0.0 else "no"

    return _bisect_predicate("energy-gap-sign-change", "trajectory-gap", predicate,
                             bracket[0], bracket[1], tol_h)


def fixed_point_split(
    ens: EnsembleSpec,
    family: ChannelFamily,
    bracket: tuple[float, float],
    tol_h: float = 1e-3,
    stop: DeStop = DeStop(),
    split_tol: float = 1e-6,
) -> ThresholdReport:
    """Bisect the entropy where forward DE stops reaching the minimal fixed point.

    Locates the appearance of a second (LDGM) fixed point from the
    all-useless start: below the change point the forward limit and the
    minimal fixed point coincide.
    """
    if ens.kind != "ldgm":
        raise ValueError("fixed-point split detection applies to LDGM ensembles")

    def predicate(h: float) -> str:
        c = family.density_from_entropy(h)
        f0 = minimal_fixed_point(ens, c, stop)
        run = _forward_run(ens, c, stop)
        if not run.converged:
            return "unknown"
        return "yes" if _dh_trunc(run.terminal, f0, stop.order) < split_tol else "no"

    return _bisect_predicate("fixed-point-split", "forward-vs-minimal", predicate,
                             bracket[0], bracket[1], tol_h)


def area_functional(dv: int, dc: int, x: HatMeasure) -> float:
    """Area combination H(x) + (dv-1-dv/dc) H(x^(dc)) - (dv-1) H(x^(dc-1)).

    At a forward DE fixed point of the (dv,dc)-regular ensemble this
    equals the negated potential up to grid residual.
    """
    if dv < 2 or dc < 2:
        raise ValueError("regular degrees must be at least 2")
    from .measure import _power  # check-node powers via square-and-multiply

    xc1 = _power(check_conv, x, dc - 1)
    xc = check_conv(xc1, x)
    return (
        entropy(x)
        + (dv - 1 - dv / dc) * entropy(xc)
        - (dv - 1) * entropy(xc1)
    )


def potential_curve(
    ens: EnsembleSpec,
    c: HatMeasure,
    probe_family: ChannelFamily,
    probe_entropies: np.ndarray,
) -> list[tuple[float, float]]:
    """Landscape cross-section: potential of probe densities against a fixed channel."""
    rows = []
    for h in probe_entropies:
        h = float(h)
        if h <= 0.0:
            probe = delta_inf(c.grid)
        elif h >= 1.0:
            probe = delta0(c.grid)
        else:
            probe = probe_family.density_from_entropy(h, tol=1e-7)
        rows.append((h, potential(ens, probe, c).value))
    return rows
