#!/usr/bin/env python3
"""Generate every CSV dataset behind the two worked examples: threshold
sweeps, value-curve dominance bundles, dual profiles across initial
capital, and the constrained-solution surfaces, for both the spectrally
negative and spectrally positive models.

The renderer in frontend/ consumes exactly these files:

    xi_<side>.csv
    optimality_<side>_opt.csv, optimality_<side>_b1..b3.csv
    dual_profile_<side>_x###.csv        (one per x grid point, K fixed)
    constrained_<side>.csv

Usage: python scripts/run_paper_cases.py [--out data] [--quick]
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from levy_dividend_opt import SNFunctionals, SPFunctionals, ThresholdOptimizer, load_model
from levy_dividend_opt.cli import main as cli

HERE = os.path.dirname(os.path.abspath(__file__))
MODELS = os.path.join(HERE, "..", "models")

LAM = 1.0
K_CONSTRAINT = 0.1


def run(out: str, quick: bool) -> None:
    os.makedirs(out, exist_ok=True)
    sn_model = os.path.join(MODELS, "case1.json")
    sp_model = os.path.join(MODELS, "sp_desk.json")

    fn = SNFunctionals(load_model(sn_model))
    opt = ThresholdOptimizer(fn)
    b_sn = opt.b_opt(LAM).b_opt
    spf = SPFunctionals(load_model(sp_model))
    b_sp = spf.b_opt(LAM).b_opt

    n_b = 201 if quick else 501
    n_x = 201 if quick else 401
    cli(["sweep-xi", "--model", sn_model, "--lam", str(LAM),
         "--b-grid", f"0,10,{n_b}", "--out", out, "--name", "xi_sn.csv"])
    cli(["sweep-xi", "--model", sp_model, "--lam", str(LAM),
         "--b-grid", f"0,10,{n_b}", "--out", out, "--name", "xi_sp.csv"])

    for side, model, b_opt_val in (("sn", sn_model, b_sn), ("sp", sp_model, b_sp)):
        cli(["solve-lagrangian", "--model", model, "--lam", str(LAM),
             "--x-grid", f"0,20,{n_x}", "--out", out,
             "--name", f"optimality_{side}_opt.csv"])
        subs = (0.0, b_opt_val / 2.0, 1.5 * b_opt_val)
        for i, b in enumerate(subs, start=1):
            cli(["solve-lagrangian", "--model", model, "--lam", str(LAM),
                 "--b", str(b), "--x-grid", f"0,20,{n_x}", "--out", out,
                 "--name", f"optimality_{side}_b{i}.csv"])

    n_profile_x = 16 if quick else 40
    for side, model, xmax in (("sn", sn_model, 8.0), ("sp", sp_model, 8.0)):
        for i in range(n_profile_x):
            x = xmax * (i + 1) / n_profile_x
            cli(["dual-profile", "--model", model, "--x", str(x),
                 "--K", str(K_CONSTRAINT), "--lam-grid", "paper", "--out", out,
                 "--name", f"dual_profile_{side}_x{i:03d}.csv"])

    nk = 21 if quick else 41   # steps of 0.05 / 0.025 so K = 0.1 is on the grid
    nx = 17 if quick else 33
    cli(["solve-constrained", "--model", sn_model,
         "--x-grid", f"0,8,{nx}", "--k-grid", f"0,1,{nk}",
         "--out", out, "--name", "constrained_sn.csv"])
    cli(["solve-constrained", "--model", sp_model,
         "--x-grid", f"0.25,8,{nx}", "--k-grid", f"0,1,{nk}",
         "--out", out, "--name", "constrained_sp.csv"])
    print(f"datasets written to {out}/")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data")
    ap.add_argument("--quick", action="store_true", help="coarser grids for smoke runs")
    args = ap.parse_args()
    run(args.out, args.quick)
