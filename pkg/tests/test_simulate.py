import numpy as np
import pytest
from numba import njit
from scipy import stats

from levy_dividend_opt import (
    JumpMixture,
    JumpTerm,
    ModelSpec,
    SimConfig,
    SNFunctionals,
    SPFunctionals,
    simulate_sn,
    simulate_sp,
)
from levy_dividend_opt.simulate import _philox_block, _zig_word


def test_philox_known_answer_vectors():
    @njit
    def block(blk, path, tag, k0, k1):
        return _philox_block(blk, path, tag, k0, k1)

    w = block(np.int64(0), np.int64(0), np.int64(0), np.uint32(0), np.uint32(0))
    assert [int(v) for v in w] == [0x6627E8D5, 0xE169C58D, 0xBC57AC4C, 0x9B00DBD8]


def test_ziggurat_samples_standard_normal():
    @njit
    def sample(n, k0, k1):
        out = np.empty(n)
        blk = np.int64(0)
        nleft = 0
        s1 = np.uint32(0)
        s2 = np.uint32(0)
        s3 = np.uint32(0)
        for i in range(n):
            if nleft == 0:
                w0, s1, s2, s3 = _philox_block(blk, np.int64(9), 0, k0, k1)
                blk += 1
                u = w0
                nleft = 3
            elif nleft == 3:
                u = s1
                nleft = 2
            elif nleft == 2:
                u = s2
                nleft = 1
            else:
                u = s3
                nleft = 0
            z, blk = _zig_word(u, blk, np.int64(9), k0, k1)
            out[i] = z
        return out

    zs = sample(200_000, np.uint32(123), np.uint32(456))
    assert abs(zs.mean()) < 0.01
    assert abs(zs.std() - 1.0) < 0.01
    assert abs(stats.skew(zs)) < 0.02
    assert abs(stats.kurtosis(zs)) < 0.05
    _, p = stats.kstest(zs[:20_000], "norm")
    assert p > 1e-4


def test_determinism_bit_identical(case2):
    cfg = SimConfig(n_paths=20_000, dt=1e-3, horizon=100.0, seed=99)
    a = simulate_sn(case2, 1.0, 1.0, cfg)
    b = simulate_sn(case2, 1.0, 1.0, cfg)
    assert a[0] == b[0]
    assert a[1] == b[1]


def test_do_nothing_sentinel_pays_nothing(case1):
    cfg = SimConfig(n_paths=512, dt=1e-3, horizon=20.0, seed=5)
    div, _ = simulate_sn(case1, np.inf, 1.0, cfg)
    assert div.mean == 0.0
    assert div.stderr == 0.0


@pytest.mark.slow
def test_do_nothing_matches_feasibility_floor(case1, fn1):
    cfg = SimConfig(n_paths=10_000, dt=1e-3, horizon=120.0, seed=314)
    _, ruin = simulate_sn(case1, np.inf, 1.0, cfg)
    kx = fn1.k_x(1.0)
    assert abs(ruin.mean - kx) < 3 * ruin.stderr + ruin.truncation_bound


def test_exact_scheme_agreement_case2(case2, fn2):
    cfg = SimConfig(n_paths=200_000, dt=1e-3, horizon=200.0, seed=7)
    div, ruin = simulate_sn(case2, 1.0, 1.0, cfg)
    assert abs(div.mean - fn2.dividends_only(1.0, 1.0)) < 3 * div.stderr + div.truncation_bound
    assert abs(ruin.mean - fn2.ruin_laplace(1.0, 1.0)) < 3 * ruin.stderr + ruin.truncation_bound


def test_exact_scheme_sp_sigma_zero():
    model = ModelSpec(
        drift=-1.0, sigma=0.0,
        jumps=JumpMixture(1.0, (JumpTerm(0.6, 1.5), JumpTerm(0.4, 4.0))),
        delta=0.5, q=0.05, side="spectrally-positive",
    )
    spf = SPFunctionals(model)
    cfg = SimConfig(n_paths=100_000, dt=1e-3, horizon=150.0, seed=2024)
    b, x = 1.5, 1.0
    div, ruin = simulate_sp(model, b, x, cfg)
    assert abs(div.mean - spf.dividends_only(x, b)) < 3 * div.stderr + div.truncation_bound
    assert abs(ruin.mean - spf.ruin_laplace(x, b)) < 3 * ruin.stderr + ruin.truncation_bound


def test_antithetic_reduces_variance_pure_bm(bm):
    wins = 0
    for rep in range(10):
        base = SimConfig(n_paths=4_000, dt=1e-3, horizon=50.0, seed=1000 + rep)
        anti = SimConfig(
            n_paths=4_000, dt=1e-3, horizon=50.0, seed=1000 + rep, antithetic=True
        )
        div_p, _ = simulate_sn(bm, 1.0, 1.0, base)
        div_a, _ = simulate_sn(bm, 1.0, 1.0, anti)
        if div_a.stderr <= div_p.stderr:
            wins += 1
    assert wins >= 6


def test_antithetic_needs_even_paths():
    with pytest.raises(ValueError):
        SimConfig(n_paths=101, antithetic=True)


def test_truncation_bound_honesty(case2, fn2):
    short = SimConfig(n_paths=50_000, dt=1e-3, horizon=100.0, seed=42)
    longer = SimConfig(n_paths=50_000, dt=1e-3, horizon=400.0, seed=42)
    d1, r1 = simulate_sn(case2, 1.0, 1.0, short)
    d2, r2 = simulate_sn(case2, 1.0, 1.0, longer)
    bound = d1.truncation_bound + 3 * float(np.hypot(d1.stderr, d2.stderr))
    assert abs(d1.mean - d2.mean) < bound
    assert d1.truncation_bound == pytest.approx(
        case2.delta / case2.q * np.exp(-case2.q * 100.0)
    )


def test_per_path_outputs_consistent(case2):
    cfg = SimConfig(n_paths=5_000, dt=1e-3, horizon=100.0, seed=12)
    div, ruin, (dv, lp, tau) = simulate_sn(case2, 1.0, 1.0, cfg, return_paths=True)
    assert len(dv) == len(lp) == len(tau) == 5_000
    assert div.mean == pytest.approx(float(np.mean(dv)), rel=1e-15)
    assert ruin.mean == pytest.approx(float(np.mean(lp)), rel=1e-15)
    assert np.all(tau <= 100.0 + 1e-12)
    # e^{-q tau} for ruined paths, 0 for survivors
    ruined = tau < 100.0
    np.testing.assert_allclose(lp[ruined], np.exp(-case2.q * tau[ruined]), rtol=1e-12)
    assert np.all(lp[~ruined] == 0.0)


def test_side_mismatch_rejected(case1, sp_desk):
    cfg = SimConfig(n_paths=16, horizon=1.0)
    with pytest.raises(ValueError):
        simulate_sp(case1, 1.0, 1.0, cfg)
    with pytest.raises(ValueError):
        simulate_sn(sp_desk, 1.0, 1.0, cfg)


@pytest.mark.slow
def test_euler_dt_refinement_shift(case1):
    coarse = SimConfig(n_paths=30_000, dt=1e-3, horizon=100.0, seed=8)
    fine = SimConfig(n_paths=30_000, dt=5e-4, horizon=100.0, seed=8)
    d1, r1 = simulate_sn(case1, 1.0, 1.0, coarse)
    d2, r2 = simulate_sn(case1, 1.0, 1.0, fine)
    assert abs(d1.mean - d2.mean) < 3 * float(np.hypot(d1.stderr, d2.stderr))
    assert abs(r1.mean - r2.mean) < 3 * float(np.hypot(r1.stderr, r2.stderr))
