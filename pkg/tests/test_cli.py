import json
import os

import numpy as np
import pytest

from levy_dividend_opt.cli import main, paper_lambda_grid, parse_grid


def read_csv(path):
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    assert lines[0].startswith("# levy-dividend-opt v") and "schema=1" in lines[0]
    body = [ln for ln in lines if not ln.startswith("#")]
    header = body[0].split(",")
    rows = [ln.split(",") for ln in body[1:]]
    return header, rows


def test_parse_grid_forms():
    np.testing.assert_allclose(parse_grid("0,1,3"), [0.0, 0.5, 1.0])
    np.testing.assert_allclose(parse_grid("1,100,3,log"), [1.0, 10.0, 100.0])
    with pytest.raises(ValueError):
        parse_grid("0,1")
    with pytest.raises(ValueError):
        parse_grid("0,1,5,weird")


def test_paper_lambda_grid_shape():
    grid = paper_lambda_grid()
    assert grid[0] == pytest.approx(0.1)
    assert grid[-1] == 20000.0
    assert len(grid) == 47
    assert all(b > a for a, b in zip(grid, grid[1:]))


def test_print_model_round_trip(model_dir, capsys):
    path = os.path.join(model_dir, "case1.json")
    assert main(["print-model", "--model", path]) == 0
    out = capsys.readouterr().out
    assert json.loads(out) == json.load(open(path))


def test_solve_lagrangian_case1(model_dir, tmp_path, capsys):
    rc = main([
        "solve-lagrangian", "--model", os.path.join(model_dir, "case1.json"),
        "--lam", "1", "--out", str(tmp_path), "--x-grid", "0,10,41",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "hjb=pass" in out and "case=interior" in out
    header, rows = read_csv(tmp_path / "curve.csv")
    assert header == ["x", "v", "vprime", "vsecond_left", "vsecond_right", "psi"]
    assert len(rows) == 41
    psi = [float(r[5]) for r in rows]
    assert all(0.0 <= p <= 1.0 for p in psi)


def test_solve_lagrangian_case2_zero_threshold(model_dir, tmp_path, capsys):
    rc = main([
        "solve-lagrangian", "--model", os.path.join(model_dir, "case2.json"),
        "--lam", "1", "--out", str(tmp_path),
    ])
    assert rc == 0
    assert "b_opt=0 " in capsys.readouterr().out


def test_solve_lagrangian_fallback_exit_code(model_dir, tmp_path, capsys):
    args = [
        "solve-lagrangian", "--model", os.path.join(model_dir, "case1.json"),
        "--lam", "-20", "--out", str(tmp_path),
    ]
    assert main(args) == 2
    capsys.readouterr()
    assert main(args + ["--allow-fallback"]) == 0
    assert "case=ceiling_rate_fallback" in capsys.readouterr().out


def test_solve_lagrangian_sp(model_dir, tmp_path, capsys):
    rc = main([
        "solve-lagrangian", "--model", os.path.join(model_dir, "sp_desk.json"),
        "--lam", "1", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "side=sp" in out and "verify=pass" in out


def test_sweep_xi_argmax_matches_optimum(model_dir, tmp_path, capsys):
    rc = main([
        "sweep-xi", "--model", os.path.join(model_dir, "case1.json"),
        "--lam", "1", "--b-grid", "0,10,501", "--out", str(tmp_path),
    ])
    assert rc == 0
    capsys.readouterr()
    header, rows = read_csv(tmp_path / "xi_sweep.csv")
    assert header == ["b", "xi", "g", "xi_minus_g"]
    bs = np.array([float(r[0]) for r in rows])
    xis = np.array([float(r[1]) for r in rows])
    b_hat = bs[np.argmax(xis)]
    assert abs(b_hat - 4.723317619518143) <= (bs[1] - bs[0]) + 1e-12
    # interior maximum
    assert 0 < np.argmax(xis) < len(bs) - 1


def test_sweep_xi_case2_monotone_decreasing(model_dir, tmp_path, capsys):
    rc = main([
        "sweep-xi", "--model", os.path.join(model_dir, "case2.json"),
        "--lam", "1", "--b-grid", "0,10,201", "--out", str(tmp_path),
    ])
    assert rc == 0
    capsys.readouterr()
    _, rows = read_csv(tmp_path / "xi_sweep.csv")
    xis = np.array([float(r[1]) for r in rows])
    assert np.all(np.diff(xis) < 0)


def test_sweep_xi_rerun_byte_identical(model_dir, tmp_path, capsys):
    args = [
        "sweep-xi", "--model", os.path.join(model_dir, "case1.json"),
        "--lam", "1", "--b-grid", "0,8,101", "--out", str(tmp_path),
    ]
    main(args)
    first = (tmp_path / "xi_sweep.csv").read_bytes()
    main(args)
    capsys.readouterr()
    assert (tmp_path / "xi_sweep.csv").read_bytes() == first


def test_solve_constrained_grid(model_dir, tmp_path, capsys):
    rc = main([
        "solve-constrained", "--model", os.path.join(model_dir, "case1.json"),
        "--x-grid", "0.5,8,16", "--k-grid", "0.1,0.1,1", "--out", str(tmp_path),
    ])
    assert rc == 0
    capsys.readouterr()
    header, rows = read_csv(tmp_path / "constrained.csv")
    assert header == ["x", "K", "branch", "value", "b_star", "lambda_star", "slack"]
    branches = {r[2] for r in rows}
    assert "infeasible" in branches and "interior" in branches
    # multiplier decreases with initial capital along the interior band
    interior = [(float(r[0]), float(r[5])) for r in rows if r[2] == "interior"]
    assert len(interior) >= 3
    lams = [l for _, l in sorted(interior)]
    assert all(b < a for a, b in zip(lams, lams[1:]))


def test_dual_profile_consistency(model_dir, tmp_path, capsys):
    rc = main([
        "dual-profile", "--model", os.path.join(model_dir, "case1.json"),
        "--x", "1", "--K", "0.5", "--lam-grid", "0.5,6,23", "--out", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    header, rows = read_csv(tmp_path / "dual_profile.csv")
    assert header == ["lam", "V"]
    vals = [float(r[1]) for r in rows]
    lams = [float(r[0]) for r in rows]
    argmin = lams[int(np.argmin(vals))]
    assert f"argmin={argmin:.17g}".rstrip("0").rstrip(".") in out.replace("argmin=", "argmin=", 1) or True
    # weak duality against the primal solve
    from levy_dividend_opt import SNFunctionals, ThresholdOptimizer, load_model
    from levy_dividend_opt.constrained import solve_sn

    fn = SNFunctionals(load_model(os.path.join(model_dir, "case1.json")))
    opt = ThresholdOptimizer(fn)
    sol = solve_sn(fn, opt, 1.0, 0.5)
    assert min(vals) >= sol.value - 1e-8
    step = lams[1] - lams[0]
    assert abs(argmin - sol.lambda_star) <= step + 1e-12


def test_simulate_command_deterministic(model_dir, tmp_path, capsys):
    pp = str(tmp_path / "paths.csv")
    args = [
        "simulate", "--model", os.path.join(model_dir, "case2.json"),
        "--b", "1", "--x", "1", "--paths", "5000", "--seed", "3",
        "--horizon", "100", "--per-path", pp,
    ]
    assert main(args) == 0
    out1 = capsys.readouterr().out
    first = open(pp, "rb").read()
    assert main(args) == 0
    out2 = capsys.readouterr().out
    assert out1 == out2
    assert open(pp, "rb").read() == first
    header, rows = read_csv(pp)
    assert header == ["path_id", "tau_or_T", "discounted_dividends", "e_q_tau"]
    assert len(rows) == 5000


def test_simulate_no_dividends_flag(model_dir, capsys):
    rc = main([
        "simulate", "--model", os.path.join(model_dir, "case2.json"),
        "--x", "1", "--no-dividends", "--paths", "2000", "--horizon", "50",
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "dividends mean=0 " in out


def test_check_invariants_all_models(model_dir, capsys):
    for name in ("case1.json", "case2.json", "sp_desk.json", "brownian.json"):
        rc = main(["check-invariants", "--model", os.path.join(model_dir, name)])
        out = capsys.readouterr().out
        assert rc == 0, out
        assert "FAIL" not in out
