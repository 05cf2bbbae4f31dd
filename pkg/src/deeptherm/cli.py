"""Command-line orchestration: reproducible runs, CSV/JSON records, figure data.

Subcommands: weingarten, exact, replica, mc, rates, figure3.  A flat
key=value config file can seed any flags (command line wins).  Errors are
reported as a machine-readable JSON object on stderr with a nonzero exit
code.  OMP_NUM_THREADS controls BLAS threading; DEEPTHERM_NUMBA=0 selects
the pure-numpy kernel lane.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from ._kernels import active_lane
from .dual_tensors import build_w
from .kim import (
    KimConfig,
    delta_k,
    dual_unitary_ensemble_check,
    entanglement_entropy,
    ising_phase_vector,
    apply_floquet,
    moment_from_state,
    plus_state,
)
from .montecarlo import McConfig, mc_moment
from .permgroup import enumerate_sym, weingarten_table
from .plotting import emit_plot
from .records import ResultRecord, RunConfig, read_csv, write_record
from .replica import (
    ReplicaSpec,
    deviation_series,
    extrapolate_to_physical,
    rate_estimate,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RUNTIME = 3


def _record(args, subcommand: str, columns, rows, params: dict) -> None:
    cfg = RunConfig(
        subcommand=subcommand,
        params=params,
        seed=getattr(args, "seed", None),
        out=args.out,
        fmt=args.format,
        artifact_version=__version__,
    )
    write_record(ResultRecord(config=cfg, columns=columns, rows=rows))


def cmd_weingarten(args) -> int:
    table = weingarten_table(
        args.m, args.d, on_singular="pseudo" if args.allow_singular else "error"
    )
    rows = []
    for rank, p in enumerate(enumerate_sym(args.m)):
        ct = "+".join(str(c) for c in p.cycle_type())
        rows.append([rank, ct, table.value(p)])
    _record(args, "weingarten", ["perm_rank", "cycle_type", "wg_value"], rows,
            {"m": args.m, "d": args.d, "allow_singular": args.allow_singular,
             "pseudo": table.pseudo, "cond": table.cond})
    return EXIT_OK


def cmd_exact(args) -> int:
    base = KimConfig(n=args.n, n_a=args.na, t=args.t, bc=args.bc, g=args.g,
                     a_offset=args.offset)
    rows = []
    state = plus_state(base.n)
    phases = ising_phase_vector(base)
    for t in range(args.t + 1):
        if t > 0:
            state = apply_floquet(state, base, phases)
        cfg_t = replace(base, t=t)
        ent = entanglement_entropy(state, base.n, base.offset, base.n_a)
        for k in range(1, args.k + 1):
            rho = moment_from_state(state, cfg_t, k)
            rows.append([base.n, base.n_a, t, base.bc, k,
                         delta_k(rho, k), ent, cfg_t.wraparound()])
    _record(args, "exact",
            ["n", "na", "t", "bc", "k", "delta_k", "entropy_bits", "wraparound_flag"],
            rows, {"n": args.n, "na": args.na, "t": args.t, "bc": args.bc,
                   "k": args.k, "g": args.g, "offset": base.offset,
                   "lane": active_lane()})
    return EXIT_OK


def _parse_tlist(text: str):
    return [int(x) for x in str(text).split(",") if x != ""]


def cmd_replica(args) -> int:
    rows = []
    for t in _parse_tlist(args.t):
        spec = ReplicaSpec(k=args.k, n=0, t=t, n_a=args.na, bc=args.bc, g=args.g)
        series = deviation_series(spec, args.nmax)
        fit = extrapolate_to_physical(series, args.k)
        for n, dev in series:
            rows.append([args.k, n, t, args.bc, dev, fit.a, fit.b, fit.c,
                         fit.estimate, fit.flagged])
    _record(args, "replica",
            ["k", "n", "t", "bc", "deviation_trace_norm", "fit_a", "fit_b",
             "fit_c", "extrapolated_norm", "fit_residual_flag"],
            rows, {"k": args.k, "nmax": args.nmax, "t": args.t, "bc": args.bc,
                   "na": args.na, "g": args.g, "lane": active_lane()})
    return EXIT_OK


def cmd_mc(args) -> int:
    cfg = McConfig(k=args.k, t=args.t, n_a=args.na, bc=args.bc, g=args.g,
                   samples=args.samples, seed=args.seed, batch_size=args.batch)
    est = mc_moment(cfg)
    ses = _checkpoint_stderrs(est, cfg)
    rows = []
    for (m_i, d_i), se in zip(est.series.points, ses):
        rows.append([args.k, args.t, args.bc, m_i, d_i, se, est.series.converged])
    _record(args, "mc",
            ["k", "t", "bc", "M_checkpoint", "delta_k", "stderr", "converged_flag"],
            rows, {"k": args.k, "t": args.t, "bc": args.bc, "na": args.na,
                   "g": args.g, "samples": args.samples, "seed": args.seed,
                   "batch": cfg.resolved_batch(), "lane": active_lane()})
    return EXIT_OK


def _checkpoint_stderrs(est, cfg) -> list:
    """Jackknife SE of delta at each checkpoint, from batch partial sums."""
    from .kim import haar_moment_operator
    from .linalg import trace_norm

    batch = cfg.resolved_batch()
    haar = haar_moment_operator(cfg.n_a, cfg.k)
    nums = np.array(est.batch_nums)
    dens = np.array(est.batch_dens)
    out = []
    done = 0
    nb = 0
    for m_i, _ in est.series.points:
        while done < m_i and nb < len(nums):
            done += min(batch, cfg.samples - done)
            nb += 1
        if nb < 2:
            out.append(float("nan"))
            continue
        num = nums[:nb].sum(axis=0)
        den = dens[:nb].sum()
        deltas = np.empty(nb)
        for i in range(nb):
            rho_i = (num - nums[i]) / (den - dens[i])
            deltas[i] = 0.5 * trace_norm(rho_i - haar)
        out.append(float(np.sqrt((nb - 1) / nb * ((deltas - deltas.mean()) ** 2).sum())))
    return out


def cmd_rates(args) -> int:
    columns, rows = read_csv(args.infile)
    if "extrapolated_norm" in columns:
        val_col, method_filter = "extrapolated_norm", None
    elif "value" in columns:
        val_col, method_filter = "value", "replica"
    else:
        raise ValueError("rates needs a replica CSV (extrapolated_norm) or points CSV (value)")
    ix = {c: columns.index(c) for c in columns}
    groups: dict = {}
    for r in rows:
        if method_filter and r[ix["method"]] != method_filter:
            continue
        key = (r[ix["k"]], r[ix["bc"]])
        groups.setdefault(key, {})[int(float(r[ix["t"]]))] = float(r[ix[val_col]])
    out_rows = []
    for (k, bc), values in sorted(groups.items()):
        v = rate_estimate(values)
        print(f"k={k} bc={bc} v={v:.2f}")
        out_rows.append([int(k), bc, v])
    if args.out:
        _record(args, "rates", ["k", "bc", "v"], out_rows, {"infile": args.infile})
    return EXIT_OK


def cmd_figure3(args) -> int:
    ts = list(range(2, args.tmax + 1))
    points = []
    rate_rows = []
    for bc in ("pbc", "obc"):
        for k in range(2, args.kmax + 1):
            nmax = 6 - k
            extrap = {}
            for t in ts:
                spec = ReplicaSpec(k=k, n=0, t=t, n_a=args.na, bc=bc, g=args.g)
                fit = extrapolate_to_physical(deviation_series(spec, nmax), k)
                extrap[t] = fit.estimate
                points.append([k, t, bc, "replica", fit.estimate])
            if len(extrap) >= 3:
                rate_rows.append([k, bc, rate_estimate(extrap)])
    if args.mc_samples > 0:
        w = build_w(args.na, args.g)
        for bc in ("pbc", "obc"):
            for t in (2, 3):
                if t > args.tmax:
                    continue
                cfg = McConfig(k=args.mc_k, t=t, n_a=args.na, bc=bc, g=args.g,
                               samples=args.mc_samples, seed=args.seed)
                est = mc_moment(cfg, w)
                points.append([args.mc_k, t, bc, "mc", 2.0 * est.series.converged_value])
    pts_path = args.out + "_points.csv"
    rates_path = args.out + "_rates.csv"
    cfg_rec = RunConfig(
        subcommand="figure3",
        params={"na": args.na, "kmax": args.kmax, "tmax": args.tmax, "g": args.g,
                "mc_samples": args.mc_samples, "mc_k": args.mc_k,
                "lane": active_lane()},
        seed=args.seed, out=pts_path, fmt=args.format, artifact_version=__version__)
    write_record(ResultRecord(config=cfg_rec, columns=["k", "t", "bc", "method", "value"],
                              rows=points))
    write_record(ResultRecord(config=replace(cfg_rec, out=rates_path),
                              columns=["k", "bc", "v"], rows=rate_rows))
    for k, bc, v in rate_rows:
        print(f"k={k} bc={bc} v={v:.3f}")
    if args.plot:
        emit_plot(pts_path, args.plot)
    return EXIT_OK


def cmd_designcheck(args) -> int:
    # small helper behind figure3: finite-bath Haar emergence distances
    rows = []
    for L in _parse_tlist(args.lengths):
        cfg = KimConfig(n=args.na + L, n_a=args.na, t=args.t, a_offset=0, g=args.g)
        rows.append([L, args.t, dual_unitary_ensemble_check(cfg, args.k)])
    for L, t, d in rows:
        print(f"L={L} t={t} dist={d:.6e}")
    if args.out:
        _record(args, "designcheck", ["bath_side", "t", "distance"], rows,
                {"na": args.na, "t": args.t, "k": args.k, "g": args.g})
    return EXIT_OK


def _coerce(text: str):
    try:
        return json.loads(text)
    except (json.JSONDecodeError, ValueError):
        return text


def _load_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as f:
        for ln in f:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            if "=" not in ln:
                raise ValueError(f"config line without '=': {ln!r}")
            key, val = ln.split("=", 1)
            out[key.strip().replace("-", "_")] = _coerce(val.strip())
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="deeptherm", description=__doc__)
    ap.add_argument("--config", help="flat key=value file seeding flag defaults")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=["csv", "json"], default="csv")

    p = sub.add_parser("weingarten", help="Weingarten table as CSV")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--allow-singular", action="store_true")
    common(p)
    p.set_defaults(func=cmd_weingarten)

    p = sub.add_parser("exact", help="finite-chain projected-ensemble metrics")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--na", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--bc", choices=["pbc", "obc"], default="pbc")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--g", type=float, default=0.3)
    p.add_argument("--offset", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("replica", help="replica deviation series and extrapolation")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--t", type=str, required=True, help="time or comma list")
    p.add_argument("--bc", choices=["pbc", "obc"], default="pbc")
    p.add_argument("--na", type=int, default=2)
    p.add_argument("--g", type=float, default=0.3)
    common(p)
    p.set_defaults(func=cmd_replica)

    p = sub.add_parser("mc", help="Monte Carlo moment estimation")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--bc", choices=["pbc", "obc"], default="pbc")
    p.add_argument("--na", type=int, default=2)
    p.add_argument("--g", type=float, default=0.3)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--batch", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("rates", help="decay-rate fit from a CSV")
    p.add_argument("--in", dest="infile", required=True)
    common(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("figure3", help="replica sweep + MC spot checks + rates")
    p.add_argument("--na", type=int, default=2)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--tmax", type=int, default=5)
    p.add_argument("--g", type=float, default=0.3)
    p.add_argument("--mc-samples", type=int, default=0, help="0 disables MC spot checks")
    p.add_argument("--mc-k", type=int, default=2)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--plot", default=None, help="write an SVG to this path")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_figure3)

    p = sub.add_parser("designcheck", help="finite-bath Haar emergence distance")
    p.add_argument("--na", type=int, default=2)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--g", type=float, default=0.3)
    p.add_argument("--lengths", type=str, default="2,3,4,5,6")
    common(p)
    p.set_defaults(func=cmd_designcheck)
    return ap


def _apply_config_defaults(ap: argparse.ArgumentParser, overrides: dict) -> None:
    def walk(parser):
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sp in action.choices.values():
                    walk(sp)
            elif action.dest in overrides:
                action.default = overrides[action.dest]
                action.required = False

    walk(ap)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    if "--config" in argv:
        i = argv.index("--config")
        _apply_config_defaults(ap, _load_config_file(argv[i + 1]))
    try:
        args = ap.parse_args(argv)
        if args.out is None and hasattr(args, "func") and args.func in (
            cmd_weingarten, cmd_exact, cmd_replica, cmd_mc,
        ):
            ap.error("--out is required for this subcommand")
        return args.func(args)
    except SystemExit as e:
        return int(e.code or 0)
    except (ValueError, OSError) as e:
        sys.stderr.write(json.dumps({"error": str(e), "type": type(e).__name__}) + "\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
