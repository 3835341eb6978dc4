"""Command-line front end.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable
or malformed files, singular kernels, failed convergence).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import code as codes
from . import gf2, processing, sim
from .analysis import (
    ConvergenceError,
    Kernel,
    compute_pdp,
    erasure_profile,
    error_exponent,
    scaling_exponent,
)
from .shortening import (
    ShorteningPattern,
    exact_pdp_of_shortening,
    find_optimal_shortening,
    parse_hex,
    pattern_to_hex,
    pd_bounds,
    shorten,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="polarkern", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-kernel", help="write an Arikan-power kernel file")
    g.add_argument("--arikan", type=int, required=True, metavar="T")
    g.add_argument("--out", default=None)

    for name, hlp in (
        ("pdp", "partial distance profile of a kernel"),
        ("exponent", "error exponent of a kernel"),
    ):
        q = sub.add_parser(name, help=hlp)
        q.add_argument("--kernel", required=True)
        q.add_argument("--report", default=None, help="write a JSON report")

    q = sub.add_parser("mu", help="heuristic BEC scaling exponent")
    q.add_argument("--kernel", required=True)
    q.add_argument("--grid", type=int, default=1024)
    q.add_argument("--tol", type=float, default=1e-7)
    q.add_argument("--allow-large", action="store_true",
                   help="permit l in (16, 32] (exponential runtime)")
    q.add_argument("--report", default=None)

    q = sub.add_parser("shorten", help="shorten a kernel on a hex pattern")
    q.add_argument("--kernel", required=True)
    q.add_argument("--pattern", required=True, metavar="HEX")
    q.add_argument("--out", required=True, help="output kernel file")
    q.add_argument("--report", default=None)

    q = sub.add_parser("search", help="optimal shortening pattern search")
    q.add_argument("--kernel", required=True)
    q.add_argument("-t", type=int, required=True, help="columns to remove")
    q.add_argument("--sampled", type=int, default=None, metavar="BUDGET",
                   help="random-subset search instead of full enumeration")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--mu", action="store_true",
                   help="rank exponent ties by scaling exponent (l' <= 16)")
    q.add_argument("--csv", default=None, help="append a CSV result row")

    q = sub.add_parser("probe-kernel", help="window-processing internals")
    q.add_argument("--kernel", required=True)
    q.add_argument("--pattern", default=None, metavar="HEX")

    q = sub.add_parser("construct", help="Monte-Carlo frozen set construction")
    q.add_argument("--spec", required=True)
    q.add_argument("--out", required=True)
    q.add_argument("--design-snr", type=float, default=None)
    q.add_argument("--budget", type=int, default=None)
    q.add_argument("--seed", type=int, default=None)

    q = sub.add_parser("simulate", help="AWGN Monte-Carlo FER simulation")
    q.add_argument("--config", default=None, help="flat key=value config file")
    q.add_argument("--spec", default=None)
    q.add_argument("--snr", default=None, metavar="A:B:STEP")
    q.add_argument("--list", type=int, default=None, dest="list_size")
    q.add_argument("--seed", type=int, default=None)
    q.add_argument("--max-frames", type=int, default=None)
    q.add_argument("--max-errors", type=int, default=None)
    q.add_argument("--out", default=None)
    q.add_argument("--batch", type=int, default=None)
    q.add_argument("--threads", type=int, default=None)
    q.add_argument("--no-resume", action="store_true")
    return p


def _load_kernel(path) -> Kernel:
    return Kernel(gf2.load_kernel(path), name=str(path))


def _write_report(path, payload: dict) -> None:
    with open(path, "w", encoding="ascii") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")


def _cmd_gen_kernel(args) -> int:
    text = gf2.format_kernel_text(gf2.arikan(args.arikan))
    if args.out:
        with open(args.out, "w", encoding="ascii") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_pdp(args) -> int:
    k = _load_kernel(args.kernel)
    pdp = compute_pdp(k)
    print(" ".join(str(d) for d in pdp))
    if args.report:
        _write_report(args.report, {"l": k.l, "pdp": pdp})
    return 0


def _cmd_exponent(args) -> int:
    k = _load_kernel(args.kernel)
    pdp = compute_pdp(k)
    e = error_exponent(pdp, k.l)
    print(f"E={e:.6f}")
    if args.report:
        _write_report(args.report, {"l": k.l, "E": e, "pdp": pdp})
    return 0


def _cmd_mu(args) -> int:
    k = _load_kernel(args.kernel)
    prof = erasure_profile(k, allow_large=args.allow_large)
    mu = scaling_exponent(prof, grid_size=args.grid, tol=args.tol)
    print(f"mu={mu:.4f}")
    if args.report:
        _write_report(args.report, {"l": k.l, "mu": mu, "grid": args.grid})
    return 0


def _cmd_shorten(args) -> int:
    k = _load_kernel(args.kernel)
    pattern = parse_hex(args.pattern, k.l)
    res = shorten(k, pattern)
    pdp = exact_pdp_of_shortening(compute_pdp(k), res)
    e = error_exponent(pdp, res.kernel.l)
    gf2.save_kernel(res.kernel.mat, args.out)
    print(f"l'={res.kernel.l} E={e:.4f}")
    print("removed_rows:", " ".join(str(r) for r in res.removed_rows))
    print("modified_rows:", " ".join(str(r) for r in sorted(res.modified_rows)))
    print("surviving_map:", " ".join(str(a) for a in res.surviving_map))
    print("pdp:", " ".join(str(d) for d in pdp))
    if args.report:
        _write_report(args.report, {
            "l": k.l, "pattern": args.pattern.upper(), "l_short": res.kernel.l,
            "E": e, "removed_rows": list(res.removed_rows),
            "modified_rows": sorted(res.modified_rows),
            "surviving_map": list(res.surviving_map), "pdp": pdp,
        })
    return 0


def _cmd_search(args) -> int:
    k = _load_kernel(args.kernel)
    out = find_optimal_shortening(
        k, args.t, sample_budget=args.sampled, seed=args.seed, mu_refine=args.mu
    )
    hexpat = pattern_to_hex(out.best_pattern)
    print(f"E={out.best_E:.3f} P={hexpat}")
    mu_val = None
    if args.mu:
        best = None
        for pat in (out.ties or [out.best_pattern]):
            res = shorten(k, pat)
            try:
                prof = erasure_profile(res.kernel)
                m = scaling_exponent(prof)
            except (ValueError, ConvergenceError):
                continue
            if best is None or m < best[0]:
                best = (m, pat)
        if best is not None:
            mu_val, mu_pat = best
            hexpat = pattern_to_hex(mu_pat)
            print(f"mu={mu_val:.3f} P={hexpat}")
    print(
        f"examined={out.patterns_examined} pruned={out.patterns_pruned} "
        f"exact={out.exact_pdp_evaluations} exhaustive={out.exhaustive}"
    )
    if args.csv:
        import os

        header = "l,t,l_short,E,mu,pattern,examined,pruned,exact_evals\n"
        need_header = not os.path.exists(args.csv)
        with open(args.csv, "a", encoding="ascii") as f:
            if need_header:
                f.write(header)
            mu_s = f"{mu_val:.4f}" if mu_val is not None else ""
            f.write(
                f"{k.l},{args.t},{k.l - args.t},{out.best_E:.6f},{mu_s},"
                f"{hexpat},{out.patterns_examined},{out.patterns_pruned},"
                f"{out.exact_pdp_evaluations}\n"
            )
    return 0


def _cmd_probe_kernel(args) -> int:
    k = _load_kernel(args.kernel)
    plan = processing.build_window_plan(k)
    print(f"l={k.l} t={plan.t}")
    print("T:")
    for i in range(plan.T.rows):
        print("  " + "".join(str(plan.T.get(i, j)) for j in range(plan.T.cols)))
    print("tau:", " ".join(str(x) for x in plan.tau))
    print("h:", " ".join(str(x) for x in plan.h))
    print("window_sizes:", " ".join(str(len(w)) for w in plan.windows))
    if args.pattern:
        pattern = parse_hex(args.pattern, k.l)
        res = shorten(k, pattern)
        eplan = processing.build_embedding(k, res)
        print(f"pattern={args.pattern.upper()} l'={res.kernel.l}")
        print("extended_phases:", " ".join(str(a) for a in res.surviving_map))
        print("forced_zero:", " ".join(str(x) for x in sorted(eplan.forced_zero)))
        reduced = [
            len([s for s in plan.windows[psi] if s not in eplan.forced_zero])
            for psi in res.surviving_map
        ]
        print("reduced_window_sizes:", " ".join(str(x) for x in reduced))
    return 0


def _cmd_construct(args) -> int:
    import os

    with open(args.spec, "r", encoding="ascii") as f:
        text = f.read()
    base = os.path.dirname(os.path.abspath(args.spec))
    entries, k, _, params = codes.parse_spec_text(text, base_dir=base)
    snr = params["design_snr"] if args.design_snr is None else args.design_snr
    budget = params["construct_frames"] if args.budget is None else args.budget
    seed = params["construct_seed"] if args.seed is None else args.seed
    frozen = codes.construct_frozen(entries, k, snr, budget, seed)
    codes.save_frozen_file(args.out, frozen)
    n = 1
    for e in entries:
        n *= e.l
    print(f"n={n} k={k} frozen={len(frozen)} design_snr={snr} budget={budget}")
    return 0


def _read_config(path) -> dict:
    out = {}
    with open(path, "r", encoding="ascii") as f:
        for raw in f:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _cmd_simulate(args) -> int:
    cfg_file = _read_config(args.config) if args.config else {}
    if "list" in cfg_file:
        cfg_file.setdefault("list_size", cfg_file.pop("list"))

    def pick(name, cast, default=None):
        cli = getattr(args, name)
        if cli is not None:
            return cli
        if name in cfg_file:
            return cast(cfg_file[name])
        return default

    spec_path = pick("spec", str)
    if spec_path is None:
        raise ValueError("no code spec given (--spec or config)")
    snr_text = pick("snr", str)
    if snr_text is None:
        raise ValueError("no SNR grid given (--snr or config)")
    spec = codes.load_code_spec(spec_path)
    cfg = sim.ExperimentConfig(
        spec=spec,
        snr_grid=sim.parse_snr_grid(snr_text),
        list_size=pick("list_size", int, 8),
        max_frames=pick("max_frames", int, 10_000),
        max_frame_errors=pick("max_errors", int, 100),
        seed=pick("seed", int, 1),
        batch=pick("batch", int, 128),
    )
    out_path = pick("out", str)
    threads = pick("threads", int, 1)

    def progress(row):
        print(
            f"snr={row.snr_db:g} frames={row.frames} errors={row.frame_errors} "
            f"fer={row.fer:.3e} ber={row.ber:.3e} ({row.wall_time_s:.1f}s)"
        )

    rows = sim.run_experiment(
        cfg, out_path=out_path, resume=not args.no_resume,
        progress=progress, threads=threads,
    )
    if out_path:
        print(f"wrote {out_path} ({len(rows)} rows)")
    return 0


_COMMANDS = {
    "gen-kernel": _cmd_gen_kernel,
    "pdp": _cmd_pdp,
    "exponent": _cmd_exponent,
    "mu": _cmd_mu,
    "shorten": _cmd_shorten,
    "search": _cmd_search,
    "probe-kernel": _cmd_probe_kernel,
    "construct": _cmd_construct,
    "simulate": _cmd_simulate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, ConvergenceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
