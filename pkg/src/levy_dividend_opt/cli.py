"""Command-line front end: model files in, solver/sweep/simulation CSVs out.

Every command is deterministic given its flags and the model file;
re-running writes byte-identical CSVs. All floats are printed with 17
significant digits. CSV files start with a versioned schema comment.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .constrained import dual_profile, solve_sn, solve_sp
from .models import (
    SIDE_SN,
    AssumptionViolated,
    laplace_exponent,
    load_model,
    model_to_dict,
    solve_roots,
)
from .optimizer import ThresholdOptimizer
from .refracted import SNFunctionals
from .scale import asymptotic_check, build_scale, refraction_identity_residual, z_change_of_measure
from .simulate import THREADS_ENV, SimConfig, simulate_sn, simulate_sp
from .spectrally_positive import SPFunctionals

SCHEMA_LINE = f"# levy-dividend-opt v{__version__} schema=1"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, float) and np.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: str, columns, rows, extra_comments=()) -> None:
    with open(path, "w") as fh:
        fh.write(SCHEMA_LINE + "\n")
        for c in extra_comments:
            fh.write(f"# {c}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def parse_grid(spec: str) -> np.ndarray:
    """min,max,count[,linear|log] -> grid array."""
    parts = spec.split(",")
    if len(parts) not in (3, 4):
        raise ValueError(f"grid must be min,max,count[,spacing], got {spec!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise ValueError("grid count must be >= 1")
    spacing = parts[3] if len(parts) == 4 else "linear"
    if spacing == "linear":
        return np.linspace(lo, hi, n)
    if spacing == "log":
        if lo <= 0:
            raise ValueError("log spacing needs min > 0")
        return np.geomspace(lo, hi, n)
    raise ValueError(f"unknown spacing {spacing!r}")


def paper_lambda_grid() -> list:
    """0.1..1, 2..10, 20..100, 200..1000, 2000..10000, 20000."""
    grid = [round(0.1 * k, 10) for k in range(1, 11)]
    grid += list(range(2, 11))
    grid += list(range(20, 101, 10))
    grid += list(range(200, 1001, 100))
    grid += list(range(2000, 10001, 1000))
    grid.append(20000)
    return [float(v) for v in grid]


def _pool():
    workers = int(os.environ.get(THREADS_ENV, "0")) or (os.cpu_count() or 1)
    return ThreadPoolExecutor(max_workers=max(1, workers))


def _parse_b(raw: str) -> float:
    return float("inf") if raw.strip().lower() == "inf" else float(raw)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_print_model(args) -> int:
    model = load_model(args.model)
    print(json.dumps(model_to_dict(model), indent=2))
    return 0


def cmd_solve_lagrangian(args) -> int:
    model = load_model(args.model)
    xs = parse_grid(args.x_grid)
    out = os.path.join(args.out, args.name or "curve.csv")
    if model.side == SIDE_SN:
        fn = SNFunctionals(model)
        opt = ThresholdOptimizer(fn)
        if model.q * args.lam + model.delta <= 0 and not args.allow_fallback:
            print(
                "error: q*lam + delta <= 0 (positivity assumption on the "
                "Lagrangian parameter); rerun with --allow-fallback for the "
                "max-rate strategy",
                file=sys.stderr,
            )
            return 2
        sol = opt.b_opt(args.lam)
        b = args.b if args.b is not None else sol.b_opt
        curve = sol.curve if args.b is None else fn.curve(b, args.lam)
        rows = []
        for x in xs:
            rows.append(
                (
                    float(x),
                    float(curve.value(x)),
                    float(curve.v_prime(x)),
                    float(curve.v_second(x, side="left")),
                    float(curve.v_second(x, side="right")),
                    fn.ruin_laplace(float(x), b),
                )
            )
        write_csv(
            out,
            ["x", "v", "vprime", "vsecond_left", "vsecond_right", "psi"],
            rows,
            extra_comments=[f"side=sn lam={_fmt(args.lam)} b={_fmt(b)} b_opt={_fmt(sol.b_opt)}"],
        )
        print(
            f"side=sn lam={_fmt(args.lam)} b_opt={_fmt(sol.b_opt)} "
            f"xi={_fmt(sol.xi_at_opt)} case={sol.boundary_case} "
            f"hjb={'pass' if sol.hjb.passed else 'FAIL'}"
        )
    else:
        spf = SPFunctionals(model)
        sol = spf.b_opt(args.lam)
        b = args.b if args.b is not None else sol.b_opt
        rows = []
        for x in xs:
            xx = float(x)
            rows.append(
                (
                    xx,
                    spf.value(xx, b, args.lam),
                    spf.v_prime(xx, b, args.lam),
                    spf.v_second(xx, b, args.lam, side="left"),
                    spf.v_second(xx, b, args.lam, side="right"),
                    spf.ruin_laplace(xx, b),
                )
            )
        write_csv(
            out,
            ["x", "v", "vprime", "vsecond_left", "vsecond_right", "psi"],
            rows,
            extra_comments=[f"side=sp lam={_fmt(args.lam)} b={_fmt(b)} b_opt={_fmt(sol.b_opt)}"],
        )
        print(
            f"side=sp lam={_fmt(args.lam)} b_opt={_fmt(sol.b_opt)} "
            f"s={_fmt(sol.s_at_opt)} case={sol.boundary_case} "
            f"verify={'pass' if sol.verification['passed'] else 'FAIL'}"
        )
    print(f"wrote {out}")
    return 0


def cmd_sweep_xi(args) -> int:
    model = load_model(args.model)
    bs = parse_grid(args.b_grid)
    out = os.path.join(args.out, args.name or "xi_sweep.csv")
    if model.side == SIDE_SN:
        fn = SNFunctionals(model)

        def row(b):
            b = float(b)
            xi = fn.xi(b, args.lam)
            g = fn.g(b, args.lam)
            return (b, xi, g, xi - g)

        comment = f"side=sn lam={_fmt(args.lam)} columns: xi=xi_lam(b) g=g_lam(b)"
    else:
        spf = SPFunctionals(model)

        def row(b):
            b = float(b)
            lt = spf.lambda_tilde(b) if b > 0 else spf.lam_tilde_at_zero
            return (b, lt, args.lam, lt - args.lam)

        comment = f"side=sp lam={_fmt(args.lam)} columns: xi=lambda_tilde(b) g=lam (smooth-fit gap)"
    with _pool() as pool:
        rows = list(pool.map(row, bs))
    write_csv(out, ["b", "xi", "g", "xi_minus_g"], rows, extra_comments=[comment])
    print(f"wrote {out}")
    return 0


def cmd_solve_constrained(args) -> int:
    model = load_model(args.model)
    xs = parse_grid(args.x_grid)
    ks = parse_grid(args.k_grid)
    out = os.path.join(args.out, args.name or "constrained.csv")
    if model.side == SIDE_SN:
        fn = SNFunctionals(model)
        opt = ThresholdOptimizer(fn)
        opt.b_zero  # prime the cache before threading

        def solve(xk):
            x, k = xk
            return solve_sn(fn, opt, float(x), float(k))
    else:
        spf = SPFunctionals(model)
        spf.b_zero

        def solve(xk):
            x, k = xk
            return solve_sp(spf, float(x), float(k))

    points = [(float(x), float(k)) for x in xs for k in ks]
    with _pool() as pool:
        sols = list(pool.map(solve, points))
    rows = []
    for (x, k), sol in zip(points, sols):
        rows.append(
            (
                x,
                k,
                sol.branch,
                sol.value,
                sol.b_star,
                sol.lambda_star,
                sol.diagnostics.get("slack"),
            )
        )
    write_csv(
        out,
        ["x", "K", "branch", "value", "b_star", "lambda_star", "slack"],
        rows,
        extra_comments=[f"side={'sn' if model.side == SIDE_SN else 'sp'}"],
    )
    print(f"wrote {out}")
    return 0


def cmd_dual_profile(args) -> int:
    model = load_model(args.model)
    lam_grid = paper_lambda_grid() if args.lam_grid == "paper" else list(parse_grid(args.lam_grid))
    out = os.path.join(args.out, args.name or "dual_profile.csv")
    if model.side == SIDE_SN:
        fn = SNFunctionals(model)
        opt = ThresholdOptimizer(fn)
        rows, argmin = dual_profile(fn, args.x, args.K, lam_grid, opt=opt)
        side = "sn"
    else:
        spf = SPFunctionals(model)
        rows, argmin = dual_profile(spf, args.x, args.K, lam_grid)
        side = "sp"
    write_csv(
        out,
        ["lam", "V"],
        rows,
        extra_comments=[f"side={side} x={_fmt(args.x)} K={_fmt(args.K)} argmin={_fmt(argmin)}"],
    )
    print(f"argmin={_fmt(argmin)}")
    print(f"wrote {out}")
    return 0


def cmd_simulate(args) -> int:
    model = load_model(args.model)
    b = float("inf") if args.no_dividends else _parse_b(args.b)
    cfg = SimConfig(
        n_paths=args.paths,
        dt=args.dt,
        horizon=args.horizon,
        seed=args.seed,
        antithetic=args.antithetic,
    )
    sim = simulate_sn if model.side == SIDE_SN else simulate_sp
    dividends, ruin, (dv, lp, tau) = sim(model, b, args.x, cfg, return_paths=True)
    for name, est in (("dividends", dividends), ("ruin_laplace", ruin)):
        print(
            f"{name} mean={_fmt(est.mean)} stderr={_fmt(est.stderr)} "
            f"n_effective={est.n_effective} truncation_bound={_fmt(est.truncation_bound)}"
        )
    if args.per_path:
        rows = [
            (i, float(tau[i]), float(dv[i]), float(lp[i]))
            for i in range(len(tau))
        ]
        write_csv(
            args.per_path,
            ["path_id", "tau_or_T", "discounted_dividends", "e_q_tau"],
            rows,
        )
        print(f"wrote {args.per_path}")
    return 0


def cmd_check_invariants(args) -> int:
    model = load_model(args.model)
    failures = []

    def check(name, ok, detail=""):
        print(f"{'ok  ' if ok else 'FAIL'} {name}{(' ' + detail) if detail else ''}")
        if not ok:
            failures.append(name)

    roots = solve_roots(model)
    res_x = abs(laplace_exponent(model, roots.phi_q) - model.q)
    res_y = abs(laplace_exponent(model, roots.varphi_q) - model.delta * roots.varphi_q - model.q)
    check("root residual psi(Phi)=q", res_x < 1e-10 * max(1.0, model.q), f"residual={res_x:.3g}")
    check("root residual psi_Y(varphi)=q", res_y < 1e-10 * max(1.0, model.q), f"residual={res_y:.3g}")
    check("ordering varphi > Phi > 0", roots.varphi_q > roots.phi_q > 0)

    pair = build_scale(model)
    from scipy.integrate import quad

    rng = np.random.default_rng(12345)
    worst = 0.0
    for theta in roots.phi_q + 0.1 + rng.uniform(0.0, 3.0, size=5):
        xmax = 60.0 / (theta - pair.x.W.max_real_exponent)
        val, _ = quad(lambda y: np.exp(-theta * y) * pair.x.W(y), 0.0, xmax, limit=400)
        closed = 1.0 / (laplace_exponent(model, theta) - model.q)
        worst = max(worst, abs(val - closed) / abs(closed))
    check("Laplace transform oracle (quadrature)", worst < 1e-6, f"rel err={worst:.3g}")

    worst = max(
        abs(refraction_identity_residual(pair, x)) / (1.0 + pair.y.Wbar(x))
        for x in (0.5, 2.0, 5.0, 10.0)
    )
    check("refraction identity", worst < 1e-9, f"residual={worst:.3g}")

    rep = asymptotic_check(pair)
    ok = all(rep[k]["increasing"] and rep[k]["below_limit"] for k in ("x", "y"))
    check("scale asymptotics monotone", ok)
    check("change-of-measure value at 0", z_change_of_measure(pair, 0.0) == 1.0)

    if model.side == SIDE_SN:
        fn = SNFunctionals(pair)
        xs = np.linspace(0.0, 10.0, 21)
        vals = [fn.ruin_laplace(1.0, float(bb)) for bb in xs]
        check("ruin transform decreasing in b", bool(np.all(np.diff(vals) < 0)))
        check("ruin transform in [0,1]", all(0.0 <= v <= 1.0 for v in vals))
    else:
        spf = SPFunctionals(pair)
        vals = [spf.ruin_laplace(1.0, float(bb)) for bb in np.linspace(0.0, 10.0, 21)]
        check("ruin transform decreasing in b", bool(np.all(np.diff(vals) < 0)))
        lo, hi = np.exp(-spf.varphi), np.exp(-spf.phi)
        check(
            "ruin transform within limit bracket",
            all(lo - 1e-12 <= v <= hi + 1e-12 for v in vals),
        )
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="levy-dividend-opt",
        description="Optimal dividend strategies for spectrally one-sided "
        "Levy models with a ruin-time constraint",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--model", required=True, help="model JSON file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--name", default=None, help="output file name override")

    sp = sub.add_parser("print-model", help="echo the parsed model file")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_print_model)

    sp = sub.add_parser("solve-lagrangian", help="optimal threshold and value curve")
    add_common(sp)
    sp.add_argument("--lam", type=float, required=True, help="terminal-value multiplier")
    sp.add_argument("--b", type=float, default=None, help="evaluate a fixed threshold instead")
    sp.add_argument("--x-grid", default="0,20,401", help="min,max,count[,spacing]")
    sp.add_argument("--allow-fallback", action="store_true",
                    help="return the max-rate strategy when q*lam + delta <= 0")
    sp.set_defaults(func=cmd_solve_lagrangian)

    sp = sub.add_parser("sweep-xi", help="threshold-selection sweep over b")
    add_common(sp)
    sp.add_argument("--lam", type=float, required=True)
    sp.add_argument("--b-grid", default="0,10,501")
    sp.set_defaults(func=cmd_sweep_xi)

    sp = sub.add_parser("solve-constrained", help="constrained problem over an (x,K) grid")
    add_common(sp)
    sp.add_argument("--x-grid", required=True)
    sp.add_argument("--k-grid", required=True)
    sp.set_defaults(func=cmd_solve_constrained)

    sp = sub.add_parser("dual-profile", help="Lagrangian dual values over a multiplier grid")
    add_common(sp)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--K", type=float, required=True)
    sp.add_argument("--lam-grid", default="paper", help="'paper' or min,max,count[,spacing]")
    sp.set_defaults(func=cmd_dual_profile)

    sp = sub.add_parser("simulate", help="Monte Carlo estimate for one (b, x)")
    sp.add_argument("--model", required=True)
    sp.add_argument("--b", default="inf", help="threshold level, or 'inf'")
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--paths", type=int, default=100_000)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.add_argument("--horizon", type=float, default=200.0)
    sp.add_argument("--seed", type=int, default=20240817)
    sp.add_argument("--antithetic", action="store_true")
    sp.add_argument("--no-dividends", action="store_true", help="do-nothing strategy (b = inf)")
    sp.add_argument("--per-path", default=None, help="write per-path CSV here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check-invariants", help="run the model validation battery")
    sp.add_argument("--model", required=True)
    sp.set_defaults(func=cmd_check_invariants)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolated as exc:
        print(f"error: assumption violated: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
