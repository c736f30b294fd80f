"""Spatially-coupled DE chains, the saturated variant, coupled potentials, shifts.

A chain couples 2N copies of the single system through a width-w
averaging window, with perfect information fixed outside the chain
(LDPC) or the minimal fixed point at the boundary of the saturated LDGM
variant.  The saturated ("modified") system pins every position beyond
i0 = N + ceil((w-1)/2) to the value at i0 and upper-bounds the plain
chain, which is what makes the one-sided shift bound checkable.
Positions are stored full length; index i in [0, N_w) is chain position
i+1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import ChannelFamily
from .de import DeStop, PERFECT_H, minimal_fixed_point
from .ensembles import EnsembleSpec
from .measure import (
    GAMMA,
    HatMeasure,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    is_degraded,
    mix,
    moments_upto,
    poly_check,
    poly_check_many,
    poly_var,
    var_conv,
)
from .potential import energy_gap, potential


class CoupledError(ValueError):
    pass


@dataclass(frozen=True)
class CoupledSpec:
    """Chain geometry: 2N coupled copies, window w, optional saturation."""

    ensemble: EnsembleSpec
    half_len: int              # N
    width: int                 # w
    saturate: bool = False
    i0_override: int | None = None

    def __post_init__(self):
        if self.half_len < 1 or self.width < 1:
            raise CoupledError("need N >= 1 and w >= 1")

    @property
    def n_positions(self) -> int:
        return 2 * self.half_len + self.width - 1

    @property
    def n_variable(self) -> int:
        return 2 * self.half_len

    @property
    def i0(self) -> int:
        """Saturation position (1-based)."""
        if self.i0_override is not None:
            return self.i0_override
        return self.half_len + math.ceil((self.width - 1) / 2)


@dataclass(frozen=True)
class ChainProfile:
    positions: tuple[HatMeasure, ...]

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i: int) -> HatMeasure:
        return self.positions[i]

    def entropies(self) -> np.ndarray:
        return np.array([entropy(x) for x in self.positions])

    def max_entropy(self) -> float:
        return float(self.entropies().max())


def uniform_profile(spec: CoupledSpec, x: HatMeasure) -> ChainProfile:
    return ChainProfile(tuple([x] * spec.n_positions))


def delta0_profile(spec: CoupledSpec, grid) -> ChainProfile:
    return uniform_profile(spec, delta0(grid))


def _boundary(spec: CoupledSpec, grid, f0: HatMeasure | None) -> HatMeasure:
    if spec.ensemble.kind == "ldgm" and spec.saturate:
        if f0 is None:
            raise CoupledError("saturated LDGM chains need the minimal fixed point")
        return f0
    return delta_inf(grid)


def _window_inputs(spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, last_v: int):
    """Per-variable-position window measures V_v (1-based v = 1..last_v).

    For LDPC, V_v = c (*) lambda^(*)( (1/w) sum_j rho^(x)(x_{v+j}) );
    for LDGM the channel enters inside: V_v = lambda^(*)( (1/w) sum_j c (x) rho^(x)(x_{v+j}) ).
    """
    ens = spec.ensemble
    w = spec.width
    need_r = min(spec.n_positions, last_v + w - 1)
    if ens.kind == "ldpc":
        rs = [poly_check(ens.rho.coeffs, profile[u]) for u in range(need_r)]
    else:
        rs = [check_conv(c, poly_check(ens.rho.coeffs, profile[u])) for u in range(need_r)]
    frac = [1.0 / w] * w
    out = []
    for v in range(last_v):
        s = mix(rs[v : v + w], frac)
        lam_mix = poly_var(ens.lam.coeffs, s)
        out.append(var_conv(c, lam_mix) if ens.kind == "ldpc" else lam_mix)
    return out


def _average_step(
    spec: CoupledSpec,
    vwin: list[HatMeasure],
    out_of_range: HatMeasure,
    n_out: int,
) -> list[HatMeasure]:
    """Window-average the variable outputs back onto check positions 1..n_out."""
    w = spec.width
    nv = len(vwin)
    frac = 1.0 / w
    out = []
    for i in range(n_out):  # 0-based check position
        parts, weights = [], []
        miss = 0
        for k in range(w):
            v = i - k  # 0-based variable position
            if 0 <= v < nv and v < spec.n_variable:
                parts.append(vwin[v])
                weights.append(frac)
            else:
                miss += 1
        if miss:
            parts.append(out_of_range)
            weights.append(miss * frac)
        out.append(parts[0] if len(parts) == 1 and weights[0] == 1.0 else mix(parts, weights))
    return out


def coupled_step(
    spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, f0: HatMeasure | None = None
) -> ChainProfile:
    """One synchronous update of the plain spatially-coupled chain."""
    if len(profile) != spec.n_positions:
        raise CoupledError(f"profile has {len(profile)} positions, spec needs {spec.n_positions}")
    vwin = _window_inputs(spec, profile, c, min(spec.n_variable, spec.n_positions))
    boundary = delta_inf(c.grid)
    new = _average_step(spec, vwin, boundary, spec.n_positions)
    return ChainProfile(tuple(new))


def modified_step(
    spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, f0: HatMeasure | None = None
) -> ChainProfile:
    """One update of the saturated system: plain update up to i0, then pinned."""
    if not spec.saturate:
        raise CoupledError("modified_step requires a spec with saturate=True")
    i0 = spec.i0
    if i0 > spec.n_variable:
        raise CoupledError("saturation position beyond the variable range (increase N)")
    vwin = _window_inputs(spec, profile, c, min(spec.n_variable, i0))
    boundary = _boundary(spec, c.grid, f0)
    head = _average_step(spec, vwin, boundary, i0)
    new = head + [head[i0 - 1]] * (spec.n_positions - i0)
    return ChainProfile(tuple(new))


def modified_raw_update(
    spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, f0: HatMeasure | None = None
) -> ChainProfile:
    """Full-length boundary-respecting update without the saturation overwrite.

    This is the update whose residual enters the coupled-potential
    directional derivative for the saturated system.
    """
    vwin = _window_inputs(spec, profile, c, min(spec.n_variable, spec.n_positions))
    boundary = _boundary(spec, c.grid, f0)
    return ChainProfile(tuple(_average_step(spec, vwin, boundary, spec.n_positions)))


@dataclass
class CoupledTrace:
    steps: list[tuple[int, float, float]] = field(default_factory=list)  # iter, max dh, max H
    status: str = "maxIterReached"

    @property
    def iterations(self) -> int:
        return len(self.steps)


def coupled_fixed_point(
    spec: CoupledSpec,
    profile: ChainProfile,
    c: HatMeasure,
    stop: DeStop = DeStop(),
    f0: HatMeasure | None = None,
    early_h: float | None = None,
    snapshot_every: int | None = None,
    snapshots: list | None = None,
) -> tuple[ChainProfile, CoupledTrace]:
    """Iterate the chain to a fixed point; the metric is the worst per-position step."""
    step_fn = modified_step if spec.saturate else coupled_step
    trace = CoupledTrace()
    gamma = GAMMA[: stop.order]
    mom = [moments_upto(x, stop.order) for x in profile.positions]
    cur = profile
    for it in range(stop.max_iter):
        nxt = step_fn(spec, cur, c, f0)
        worst = 0.0
        for j, x in enumerate(nxt.positions):
            m = moments_upto(x, stop.order)
            d = float(gamma @ np.abs(m - mom[j]))
            mom[j] = m
            if d > worst:
                worst = d
        cur = nxt
        max_h = cur.max_entropy()
        trace.steps.append((it + 1, worst, max_h))
        if snapshots is not None and snapshot_every and (it + 1) % snapshot_every == 0:
            snapshots.append((it + 1, cur))
        if worst < stop.tol_dh:
            trace.status = "converged"
            break
        if early_h is not None and max_h < early_h:
            trace.status = "converged"
            break
    return cur, trace


@dataclass
class CoupledPotentialReport:
    value: float
    terms: dict[str, float]
    position_terms: np.ndarray    # per-position entropy-bracket contribution
    window_terms: np.ndarray      # per-window (variable-position) contribution

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "terms": dict(self.terms),
            "position_terms": self.position_terms.tolist(),
            "window_terms": self.window_terms.tolist(),
        }


def coupled_potential(
    spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, f0: HatMeasure | None = None
) -> CoupledPotentialReport:
    """Coupled potential of a profile, with per-position term breakdown."""
    if len(profile) != spec.n_positions:
        raise CoupledError("profile length mismatch")
    ens = spec.ensemble
    lp1, rp1 = ens.Lp1, ens.Rp1
    w = spec.width
    frac = [1.0 / w] * w
    nv = spec.n_variable

    pos_terms = np.zeros(spec.n_positions)
    rs = []
    if ens.kind == "ldpc":
        for i, x in enumerate(profile.positions):
            R_mix, rho_mix = poly_check_many([ens.R.coeffs, ens.rho.coeffs], x)
            rs.append(rho_mix)
            pos_terms[i] = lp1 * (
                entropy(R_mix) / rp1
                + entropy(rho_mix)
                - entropy(check_conv(x, rho_mix))
            )
        win_terms = np.zeros(nv)
        for v in range(nv):
            s = mix(rs[v : v + w], frac)
            win_terms[v] = -entropy(var_conv(c, poly_var(ens.L.coeffs, s)))
        terms = {"per_position": float(pos_terms.sum()), "window": float(win_terms.sum())}
    else:
        if f0 is None:
            raise CoupledError("the coupled LDGM potential needs the minimal fixed point")
        hc = entropy(c)
        for i, x in enumerate(profile.positions):
            R_mix, rho_mix = poly_check_many([ens.R.coeffs, ens.rho.coeffs], x)
            y = check_conv(c, rho_mix)
            rs.append(y)
            pos_terms[i] = lp1 * (
                entropy(check_conv(c, R_mix)) / rp1
                - hc / rp1
                - entropy(check_conv(x, y))
                + entropy(y)
            )
        win_terms = np.zeros(nv)
        for v in range(nv):
            s = mix(rs[v : v + w], frac)
            win_terms[v] = -entropy(poly_var(ens.L.coeffs, s))
        edge = 0.0
        for i in range(1, w):
            edge += (w - i) / w * entropy(var_conv(f0, rs[i - 1]))
            edge += i / w * entropy(var_conv(f0, rs[nv + i - 1]))
        terms = {
            "per_position": float(pos_terms.sum()),
            "window": float(win_terms.sum()),
            "boundary": -lp1 * edge,
        }
    value = math.fsum(terms.values())
    return CoupledPotentialReport(
        value=value, terms=terms, position_terms=pos_terms, window_terms=win_terms
    )


def shift_profile(profile: ChainProfile, boundary: HatMeasure) -> ChainProfile:
    """Insert the boundary value at position 1 and push everything right."""
    return ChainProfile((boundary,) + profile.positions[:-1])


def shift_direction_derivative(
    spec: CoupledSpec, profile: ChainProfile, c: HatMeasure, f0: HatMeasure | None = None
) -> float:
    """Directional derivative of the coupled potential along shift-minus-identity.

    Evaluated from the closed form: the update residual at each position,
    check-convolved with the normalized derivative mixture and the
    position's shift difference, expanded into probability-measure terms.
    Vanishes at fixed points of the saturated system.
    """
    ens = spec.ensemble
    rho_d = ens.rho.derivative()
    rp1 = rho_d(1.0)
    rho_dn = rho_d.scaled(1.0 / rp1).coeffs
    boundary = _boundary(spec, c.grid, f0)
    if spec.saturate:
        updated = modified_raw_update(spec, profile, c, f0)
    else:
        updated = coupled_step(spec, profile, c, f0)
    total = 0.0
    prev = boundary
    for i in range(spec.n_positions):
        x = profile[i]
        t = updated[i]
        y_plus, y_minus = prev, x  # direction entry: x_{i-1} - x_i
        rd = poly_check(rho_dn, x)
        if ens.kind == "ldgm":
            rd = check_conv(c, rd)
        a = check_conv(t, rd)
        b = check_conv(x, rd)
        total += (
            entropy(check_conv(a, y_plus))
            - entropy(check_conv(a, y_minus))
            - entropy(check_conv(b, y_plus))
            + entropy(check_conv(b, y_minus))
        )
        prev = x
    return ens.Lp1 * rp1 * total


@dataclass
class ShiftBoundReport:
    lhs: float           # U_c(S(x)) - U_c(x)
    rhs: float           # minus the single-system potential at the pinned
                         # position, plus the floor potential for LDGM
    slack: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + self.slack

    def as_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "slack": self.slack, "holds": self.holds}


def shift_bound_check(
    spec: CoupledSpec,
    profile: ChainProfile,
    c: HatMeasure,
    f0: HatMeasure | None = None,
    slack: float = 1e-4,
    saturation_tol: float = 1e-7,
) -> ShiftBoundReport:
    """One-sided bound on the potential change under a right shift.

    Requires a saturated profile (positions at and beyond i0 equal); for
    LDGM additionally i0 <= 2N and the right side gains the potential of
    the minimal fixed point.
    """
    ens = spec.ensemble
    i0 = spec.i0
    x_i0 = profile[i0 - 1]
    for i in range(i0 - 1, spec.n_positions):
        d = float(
            GAMMA @ np.abs(moments_upto(profile[i]) - moments_upto(x_i0))
        )
        if d > saturation_tol:
            raise CoupledError(f"profile not saturated at position {i + 1} (dh {d:.2e})")
    if ens.kind == "ldgm" and i0 > spec.n_variable:
        raise CoupledError("LDGM shift bound requires i0 <= 2N")
    boundary = _boundary(spec, c.grid, f0)
    u_here = coupled_potential(spec, profile, c, f0).value
    u_shift = coupled_potential(spec, shift_profile(profile, boundary), c, f0).value
    rhs = -potential(ens, x_i0, c).value
    if ens.kind == "ldgm":
        rhs += potential(ens, f0, c).value
    return ShiftBoundReport(lhs=u_shift - u_here, rhs=rhs, slack=slack)


@dataclass
class SweepRow:
    N: int
    w: int
    h: float
    status: str
    iterations: int
    terminal_max_h: float
    converged_perfect: bool
    below_floor: bool | None      # LDGM: every position at or below the minimal fixed point
    sufficient_w: float | None    # K/(2 dE) when the single-system gap is positive and finite

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "w": self.w,
            "h": self.h,
            "status": self.status,
            "iterations": self.iterations,
            "terminal_max_h": self.terminal_max_h,
            "converged_perfect": self.converged_perfect,
            "below_floor": self.below_floor,
            "sufficient_w": self.sufficient_w,
        }


def saturation_sweep(
    ens: EnsembleSpec,
    family: ChannelFamily,
    Ns: list[int],
    ws: list[int],
    h_grid: list[float],
    stop: DeStop = DeStop(),
    early_h: float = 1e-7,
    floor_slack: float = 1e-6,
) -> list[SweepRow]:
    """Run the chain from the all-useless start over a (N, w, h) grid.

    Each row reports whether the terminal profile reached perfect
    decoding (LDPC) or sits at or below the minimal fixed point (LDGM),
    along with the theoretical sufficient width K/(2 dE) from the
    single-system energy-gap search at that entropy.
    """
    K = ens.derived_constants()["K"]
    suff: dict[float, float | None] = {}
    f0s: dict[float, HatMeasure] = {}
    rows = []
    for h in h_grid:
        c = family.density_from_entropy(h)
        rep = energy_gap(ens, c, strategy="trajectory", stop=stop)
        if math.isinf(rep.gap):
            suff[h] = 0.0
        elif rep.gap > 0:
            suff[h] = K / (2.0 * rep.gap)
        else:
            suff[h] = None
        if ens.kind == "ldgm":
            f0s[h] = minimal_fixed_point(ens, c, stop)
    for N in Ns:
        for w in ws:
            spec = CoupledSpec(ensemble=ens, half_len=N, width=w)
            for h in h_grid:
                c = family.density_from_entropy(h)
                prof0 = delta0_profile(spec, family.grid)
                term, trace = coupled_fixed_point(
                    spec, prof0, c, stop, early_h=early_h if ens.kind == "ldpc" else None
                )
                max_h = term.max_entropy()
                below = None
                if ens.kind == "ldgm":
                    f0 = f0s[h]
                    below = all(
                        is_degraded(f0, x, slack=floor_slack) for x in term.positions
                    )
                rows.append(
                    SweepRow(
                        N=N,
                        w=w,
                        h=h,
                        status=trace.status,
                        iterations=trace.iterations,
                        terminal_max_h=max_h,
                        converged_perfect=max_h < PERFECT_H,
                        below_floor=below,
                        sufficient_w=suff[h],
                    )
                )
    return rows
