"""Batch command line: ensembles and channels in, thresholds/traces/sweeps out.

JSON goes to stdout for scalar reports, CSV for series; every artifact
embeds the fully resolved run configuration (and library version) as a
JSON header comment so a file is reproducible from its own first line.
Exit codes: 0 ok, 2 bad configuration, 3 result carries a warning flag,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .channels import ChannelError, ChannelFamily
from .coupled import (
    CoupledSpec,
    coupled_fixed_point,
    delta0_profile,
    saturation_sweep,
)
from .de import (
    ConvergenceError,
    DeStop,
    bp_threshold,
    de_fixed_point,
    minimal_fixed_point,
    stability_threshold,
)
from .ensembles import EnsembleError, EnsembleSpec, from_json_dict, load_ensemble
from .measure import GridSpec, MeasureError, bhattacharyya, delta0, entropy, error_prob
from .potential import energy_gap, potential_curve, potential_threshold

ENV_BINS = "DELAB_BINS"


class ConfigError(ValueError):
    pass


def _default_bins() -> int:
    raw = os.environ.get(ENV_BINS)
    if raw is None:
        return 4096
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"{ENV_BINS} must be an integer, got {raw!r}") from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ensemble", required=True,
                   help="path to an ensemble JSON file, or an inline JSON object")
    p.add_argument("--channel", required=True, choices=["bec", "bsc", "bawgn"])
    p.add_argument("--h", type=float, default=None, help="channel entropy")
    p.add_argument("--param", type=float, default=None, help="native channel parameter")
    p.add_argument("--bins", type=int, default=None,
                   help=f"interior magnitude cells (default {ENV_BINS} or 4096)")
    p.add_argument("--tol-dh", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None, help="output file (default stdout)")


def _load_ens(arg: str) -> EnsembleSpec:
    text = arg.strip()
    if text.startswith("{"):
        return from_json_dict(json.loads(text))
    if not os.path.exists(arg):
        raise ConfigError(f"ensemble file not found: {arg}")
    return load_ensemble(arg)


def _resolve(args) -> dict:
    bins = args.bins if args.bins is not None else _default_bins()
    cfg = {
        "version": __version__,
        "command": args.command,
        "ensemble": args.ensemble,
        "channel": args.channel,
        "bins": bins,
        "tol_dh": args.tol_dh,
        "max_iter": args.max_iter,
        "seed": args.seed,
    }
    for key in ("h", "param", "tol_h", "kind", "estimator", "N", "w", "Ns", "ws",
                "h_grid", "probe_family", "probe_points", "strategy", "snapshot_every",
                "h_lo", "h_hi", "saturate"):
        if hasattr(args, key.replace("-", "_")):
            cfg[key] = getattr(args, key.replace("-", "_"))
    return cfg


def _channel_measure(args, family: ChannelFamily):
    if args.param is not None:
        return family.density_from_param(args.param)
    if args.h is not None:
        return family.density_from_entropy(args.h)
    raise ConfigError("need --h or --param")


def _open_out(args):
    if args.output is None:
        return sys.stdout, False
    return open(args.output, "w"), True


def _emit_json(args, payload: dict) -> None:
    payload = dict(payload)
    payload["config"] = _resolve(args)
    fh, close = _open_out(args)
    json.dump(payload, fh, indent=2, sort_keys=True)
    fh.write("\n")
    if close:
        fh.close()


def _emit_csv(args, header: str, rows) -> None:
    fh, close = _open_out(args)
    fh.write("# " + json.dumps(_resolve(args), sort_keys=True) + "\n")
    fh.write(header + "\n")
    for row in rows:
        fh.write(row + "\n")
    if close:
        fh.close()


def _cmd_threshold(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    stop = DeStop(tol_dh=args.tol_dh, max_iter=args.max_iter)
    bracket = (args.h_lo, args.h_hi)
    if args.kind == "bp":
        rep = bp_threshold(ens, family, tol_h=args.tol_h, bracket=bracket, stop=stop)
    elif args.kind == "stability":
        rep = stability_threshold(ens, family, tol_h=args.tol_h)
    else:
        rep = potential_threshold(ens, family, estimator=args.estimator,
                                  tol_h=args.tol_h, bracket=bracket, stop=stop)
    _emit_json(args, rep.as_dict())
    return 3 if any("discrepancy" in f or "endpoint" in f for f in rep.flags) else 0


def _cmd_de(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    c = _channel_measure(args, family)
    stop = DeStop(tol_dh=args.tol_dh, max_iter=args.max_iter)
    trace = de_fixed_point(ens, delta0(grid), c, stop)
    rows = [
        f"{it},{h:.17g},{b:.17g},{e:.17g},{dh:.17g}"
        for it, h, b, e, dh in trace.iterates
    ]
    _emit_csv(args, "iteration,entropy,bhattacharyya,error_prob,dh_step", rows)
    return 0 if trace.status == "converged" else 4


def _cmd_coupled(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    c = _channel_measure(args, family)
    stop = DeStop(tol_dh=args.tol_dh, max_iter=args.max_iter)
    spec = CoupledSpec(ensemble=ens, half_len=args.N, width=args.w, saturate=args.saturate)
    f0 = None
    if ens.kind == "ldgm" and args.saturate:
        f0 = minimal_fixed_point(ens, c, stop)
    snapshots: list = []
    term, trace = coupled_fixed_point(
        spec, delta0_profile(spec, grid), c, stop, f0=f0,
        snapshot_every=args.snapshot_every, snapshots=snapshots,
    )
    snapshots.append((trace.iterations, term))
    rows = []
    for it, prof in snapshots:
        for pos, x in enumerate(prof.positions, start=1):
            rows.append(
                f"{it},{pos},{entropy(x):.10g},{error_prob(x):.10g},{bhattacharyya(x):.10g}"
            )
    _emit_csv(args, "iteration,position,entropy,error_prob,bhattacharyya", rows)
    return 0 if trace.status == "converged" else 4


def _cmd_sweep(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    stop = DeStop(tol_dh=args.tol_dh, max_iter=args.max_iter)
    Ns = [int(v) for v in args.Ns.split(",")]
    ws = [int(v) for v in args.ws.split(",")]
    hs = [float(v) for v in args.h_grid.split(",")]
    rows = saturation_sweep(ens, family, Ns, ws, hs, stop=stop)
    out = [
        f"{r.N},{r.w},{r.h:.10g},{r.status},{r.iterations},{r.terminal_max_h:.10g},"
        f"{int(r.converged_perfect)},"
        f"{'' if r.below_floor is None else int(r.below_floor)},"
        f"{'' if r.sufficient_w is None else format(r.sufficient_w, '.6g')}"
        for r in rows
    ]
    _emit_csv(
        args,
        "N,w,h,status,iterations,terminal_max_h,converged_perfect,below_floor,sufficient_w",
        out,
    )
    return 0


def _cmd_potential_curve(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    c = _channel_measure(args, family)
    probe = ChannelFamily(args.probe_family, grid)
    hs = np.linspace(0.0, 1.0, args.probe_points)
    rows = potential_curve(ens, c, probe, hs)
    _emit_csv(args, "h_tilde,U_s", [f"{h:.6g},{u:.6g}" for h, u in rows])
    return 0


def _cmd_energy_gap(args) -> int:
    ens = _load_ens(args.ensemble)
    grid = GridSpec(args.bins if args.bins is not None else _default_bins())
    family = ChannelFamily(args.channel, grid)
    c = _channel_measure(args, family)
    stop = DeStop(tol_dh=args.tol_dh, max_iter=args.max_iter)
    rep = energy_gap(ens, c, strategy=args.strategy, stop=stop)
    _emit_json(args, rep.as_dict())
    return 3 if rep.unverified else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="delab",
        description="density-evolution thresholds, potentials, and coupled-chain sweeps",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="BP / potential / stability threshold")
    _add_common(p)
    p.add_argument("--kind", required=True, choices=["bp", "potential", "stability"])
    p.add_argument("--estimator", default="forward-fp-sign",
                   choices=["forward-fp-sign", "energy-gap-sign", "both"])
    p.add_argument("--tol-h", type=float, default=1e-4)
    p.add_argument("--h-lo", type=float, default=0.0)
    p.add_argument("--h-hi", type=float, default=1.0)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("de", help="single-system DE trace from the all-useless start")
    _add_common(p)
    p.set_defaults(func=_cmd_de)

    p = sub.add_parser("coupled", help="coupled-chain DE profile")
    _add_common(p)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--saturate", action="store_true")
    p.add_argument("--snapshot-every", type=int, default=None)
    p.set_defaults(func=_cmd_coupled)

    p = sub.add_parser("sweep", help="saturation sweep over (N, w, h) cells")
    _add_common(p)
    p.add_argument("--Ns", required=True, help="comma-separated chain half-lengths")
    p.add_argument("--ws", required=True, help="comma-separated coupling widths")
    p.add_argument("--h-grid", required=True, help="comma-separated channel entropies")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("potential-curve", help="landscape cross-section CSV")
    _add_common(p)
    p.add_argument("--probe-family", default="bawgn", choices=["bec", "bsc", "bawgn"])
    p.add_argument("--probe-points", type=int, default=33)
    p.set_defaults(func=_cmd_potential_curve)

    p = sub.add_parser("energy-gap", help="candidate-search energy gap report")
    _add_common(p)
    p.add_argument("--strategy", default="probes", choices=["probes", "trajectory"])
    p.set_defaults(func=_cmd_energy_gap)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EnsembleError, ChannelError, MeasureError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
