"""Monte Carlo oracle for refracted paths, independent of all closed forms.

Every path owns counter-based Philox4x32-10 streams (one for the
diffusion, one for the jumps), so estimates are bit-reproducible for a
given (seed, config) regardless of thread count. Normals come from a
128-layer ziggurat fed by the Philox words.
Discounted dividends over a constant-rate interval use the exact
integral of the discount factor, never a rectangle rule.

Bounded-variation models (sigma = 0) use an exact event-driven scheme:
level crossings between jump epochs are piecewise linear and solved in
closed form. Diffusive models use Euler-Maruyama with step dt between
jumps; the boundary-crossing bias at the threshold and at ruin is
accepted and covered by the acceptance tolerances.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from numba import njit, prange, set_num_threads

THREADS_ENV = "LEVY_DIVIDEND_OPT_THREADS"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_INV53 = 1.1102230246251565e-16


@njit(cache=True, inline="always")
def _philox_block(blk, path, tag, k0, k1):
    """One 10-round Philox4x32 block keyed by the master seed; the counter
    is (block, path, stream tag)."""
    c0 = np.uint32(blk & 0xFFFFFFFF)
    c1 = np.uint32((blk >> 32) & 0xFFFFFFFF)
    c2 = np.uint32(path)
    c3 = np.uint32(tag)
    for _ in range(10):
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        hi0 = np.uint32(p0 >> np.uint64(32))
        lo0 = np.uint32(p0 & _MASK32)
        hi1 = np.uint32(p1 >> np.uint64(32))
        lo1 = np.uint32(p1 & _MASK32)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@njit(cache=True, inline="always")
def _u53(w_hi, w_lo):
    """53-bit uniform in (0, 1) from two 32-bit words."""
    a = np.uint64(w_hi) >> np.uint64(5)
    b = np.uint64(w_lo) >> np.uint64(6)
    u = (float(a) * 67108864.0 + float(b)) * _INV53
    if u <= 0.0:
        u = _INV53
    return u


# ---------------------------------------------------------------------------
# 128-layer ziggurat tables for the standard normal
# ---------------------------------------------------------------------------

def _make_ziggurat():
    m1 = 2147483648.0
    dn = 3.442619855899
    tn = dn
    vn = 9.91256303526217e-3
    kn = np.zeros(128, dtype=np.int64)
    wn = np.zeros(128, dtype=np.float64)
    fn = np.zeros(128, dtype=np.float64)
    q = vn / math.exp(-0.5 * dn * dn)
    kn[0] = int((dn / q) * m1)
    kn[1] = 0
    wn[0] = q / m1
    wn[127] = dn / m1
    fn[0] = 1.0
    fn[127] = math.exp(-0.5 * dn * dn)
    for i in range(126, 0, -1):
        dn = math.sqrt(-2.0 * math.log(vn / dn + math.exp(-0.5 * dn * dn)))
        kn[i + 1] = int((dn / tn) * m1)
        tn = dn
        fn[i] = math.exp(-0.5 * dn * dn)
        wn[i] = dn / m1
    return kn, wn, fn


_ZIG_KN, _ZIG_WN, _ZIG_FN = _make_ziggurat()
_ZIG_R = 3.442619855899


@njit(cache=True)
def _zig_slow(hz, iz, blk, path, k0, k1):
    """Ziggurat wedge/tail path; draws fresh blocks from the gauss stream."""
    while True:
        if iz == 0:
            while True:
                w0, w1, w2, w3 = _philox_block(blk, path, 0, k0, k1)
                blk += 1
                x = -math.log(_u53(w0, w1)) / _ZIG_R
                y = -math.log(_u53(w2, w3))
                if y + y >= x * x:
                    z = _ZIG_R + x if hz > 0 else -_ZIG_R - x
                    return z, blk
        x = float(hz) * _ZIG_WN[iz]
        w0, w1, w2, w3 = _philox_block(blk, path, 0, k0, k1)
        blk += 1
        if _ZIG_FN[iz] + _u53(w0, w1) * (_ZIG_FN[iz - 1] - _ZIG_FN[iz]) < math.exp(-0.5 * x * x):
            return x, blk
        hz = np.int64(np.int32(w2))
        iz = hz & 127
        if (hz if hz >= 0 else -hz) < _ZIG_KN[iz]:
            return float(hz) * _ZIG_WN[iz], blk


@njit(cache=True, inline="always")
def _zig_word(u, blk, path, k0, k1):
    """Standard normal from one 32-bit word; rare slow path draws blocks."""
    hz = np.int64(np.int32(u))
    iz = hz & 127
    if (hz if hz >= 0 else -hz) < _ZIG_KN[iz]:
        return float(hz) * _ZIG_WN[iz], blk
    return _zig_slow(hz, iz, blk, path, k0, k1)


@njit(cache=True, inline="always")
def _jump_u53(jblk, path, k0, k1):
    """One 53-bit uniform from the jump stream (one block per draw)."""
    w0, w1, w2, w3 = _philox_block(jblk, path, 1, k0, k1)
    return _u53(w0, w1), jblk + 1


@njit(cache=True, inline="always")
def _draw_jump(jblk, path, k0, k1, cum_p, rates, shapes, reflect):
    """Erlang-mixture jump size; ``reflect`` mirrors uniforms (antithetic)."""
    u, jblk = _jump_u53(jblk, path, k0, k1)
    if reflect:
        u = 1.0 - u
    idx = 0
    for i in range(len(cum_p)):
        idx = i
        if u <= cum_p[i]:
            break
    total = 0.0
    for _ in range(shapes[idx]):
        v, jblk = _jump_u53(jblk, path, k0, k1)
        if reflect:
            v = 1.0 - v
        if v <= 0.0:
            v = _INV53
        total += -math.log(v)
    return total / rates[idx], jblk


@njit(cache=True, inline="always")
def _exp_time(jblk, path, k0, k1, kappa, reflect):
    u, jblk = _jump_u53(jblk, path, k0, k1)
    if reflect:
        u = 1.0 - u
        if u <= 0.0:
            u = _INV53
    return -math.log(u) / kappa, jblk


# ---------------------------------------------------------------------------
# path kernels
# ---------------------------------------------------------------------------


@njit(cache=True)
def _path_euler(
    path, anti, x, b, drift, sigma, delta, q, T, dt,
    kappa, cum_p, rates, shapes, jump_sign, k0, k1,
):
    """Euler-Maruyama between jump epochs; (dividends, e_q_tau, tau_or_T)."""
    sign = -1.0 if anti else 1.0
    gblk = np.int64(0)
    jblk = np.int64(0)
    nleft = 0
    s1 = np.uint32(0)
    s2 = np.uint32(0)
    s3 = np.uint32(0)

    u_lvl = x
    t = 0.0
    disc = 1.0
    div = 0.0
    e_qdt = math.exp(-q * dt)
    pay_full = delta / q * (1.0 - e_qdt)
    sig_dt = sigma * math.sqrt(dt)
    drift_dt = drift * dt
    refr_dt = (drift - delta) * dt

    if kappa > 0.0:
        nj, jblk = _exp_time(jblk, path, k0, k1, kappa, False)
    else:
        nj = T + 1.0

    while True:
        seg_end = nj if nj < T else T
        n_full = int((seg_end - t) / dt)
        for _ in range(n_full):
            if nleft == 0:
                w0, s1, s2, s3 = _philox_block(gblk, path, 0, k0, k1)
                gblk += 1
                u32 = w0
                nleft = 3
            elif nleft == 3:
                u32 = s1
                nleft = 2
            elif nleft == 2:
                u32 = s2
                nleft = 1
            else:
                u32 = s3
                nleft = 0
            z, gblk = _zig_word(u32, gblk, path, k0, k1)
            if u_lvl > b:
                u_lvl += refr_dt + sig_dt * (sign * z)
                div += disc * pay_full
            else:
                u_lvl += drift_dt + sig_dt * (sign * z)
            disc *= e_qdt
            t += dt
            if u_lvl < 0.0:
                return div, disc, t
        h = seg_end - t
        if h > 1e-13:
            if nleft == 0:
                w0, s1, s2, s3 = _philox_block(gblk, path, 0, k0, k1)
                gblk += 1
                u32 = w0
                nleft = 3
            elif nleft == 3:
                u32 = s1
                nleft = 2
            elif nleft == 2:
                u32 = s2
                nleft = 1
            else:
                u32 = s3
                nleft = 0
            z, gblk = _zig_word(u32, gblk, path, k0, k1)
            eh = math.exp(-q * h)
            if u_lvl > b:
                u_lvl += (drift - delta) * h + sigma * math.sqrt(h) * (sign * z)
                div += disc * (delta / q) * (1.0 - eh)
            else:
                u_lvl += drift * h + sigma * math.sqrt(h) * (sign * z)
            disc *= eh
            t = seg_end
            if u_lvl < 0.0:
                return div, disc, t
        if nj >= T:
            return div, 0.0, T
        j, jblk = _draw_jump(jblk, path, k0, k1, cum_p, rates, shapes, False)
        u_lvl += jump_sign * j
        if u_lvl < 0.0:
            return div, disc, t
        step, jblk = _exp_time(jblk, path, k0, k1, kappa, False)
        nj += step


@njit(cache=True)
def _path_exact_sn(
    path, anti, x, b, drift, delta, q, T,
    kappa, cum_p, rates, shapes, k0, k1,
):
    """Exact event-driven SN path for sigma = 0: both slopes positive, so
    ruin can only happen at a jump and threshold crossings are upward."""
    jblk = np.int64(0)
    u_lvl = x
    t = 0.0
    div = 0.0
    slope_hi = drift - delta

    if kappa > 0.0:
        nj, jblk = _exp_time(jblk, path, k0, k1, kappa, anti)
    else:
        nj = T + 1.0
    while True:
        seg_end = nj if nj < T else T
        if u_lvl > b:
            t_pay = t
        else:
            reach = (b - u_lvl) / drift
            if t + reach >= seg_end:
                u_lvl += drift * (seg_end - t)
                t_pay = seg_end
            else:
                u_lvl = b
                t_pay = t + reach
        if t_pay < seg_end:
            div += delta / q * (math.exp(-q * t_pay) - math.exp(-q * seg_end))
            u_lvl += slope_hi * (seg_end - t_pay)
        t = seg_end
        if nj >= T:
            return div, 0.0, T
        j, jblk = _draw_jump(jblk, path, k0, k1, cum_p, rates, shapes, anti)
        u_lvl -= j
        if u_lvl < 0.0:
            return div, math.exp(-q * t), t
        step, jblk = _exp_time(jblk, path, k0, k1, kappa, anti)
        nj += step


@njit(cache=True)
def _path_exact_sp(
    path, anti, x, b, drift, delta, q, T,
    kappa, cum_p, rates, shapes, k0, k1,
):
    """Exact event-driven SP path for sigma = 0: both slopes negative
    (drift < 0), upward jumps, ruin by creeping into 0."""
    jblk = np.int64(0)
    u_lvl = x
    t = 0.0
    div = 0.0
    s_lo = drift
    s_hi = drift - delta

    if kappa > 0.0:
        nj, jblk = _exp_time(jblk, path, k0, k1, kappa, anti)
    else:
        nj = T + 1.0
    while True:
        seg_end = nj if nj < T else T
        if u_lvl > b:
            hit_b = t + (u_lvl - b) / (-s_hi)
            pay_end = hit_b if hit_b < seg_end else seg_end
            div += delta / q * (math.exp(-q * t) - math.exp(-q * pay_end))
            if hit_b >= seg_end:
                u_lvl += s_hi * (seg_end - t)
                t = seg_end
            else:
                u_lvl = b
                t = hit_b
        if t < seg_end and u_lvl <= b:
            hit_zero = t + u_lvl / (-s_lo)
            if hit_zero <= seg_end:
                return div, math.exp(-q * hit_zero), hit_zero
            u_lvl += s_lo * (seg_end - t)
            t = seg_end
        if nj >= T:
            return div, 0.0, T
        j, jblk = _draw_jump(jblk, path, k0, k1, cum_p, rates, shapes, anti)
        u_lvl += j
        step, jblk = _exp_time(jblk, path, k0, k1, kappa, anti)
        nj += step


@njit(cache=True, parallel=True)
def _run_paths(
    n, antithetic, x, b, drift, sigma, delta, q, T, dt,
    kappa, cum_p, rates, shapes, jump_sign, k0, k1, scheme,
):
    div = np.empty(n, dtype=np.float64)
    lap = np.empty(n, dtype=np.float64)
    tau = np.empty(n, dtype=np.float64)
    for i in prange(n):
        pid = i // 2 if antithetic else i
        is_anti = antithetic and (i % 2 == 1)
        if scheme == 0:
            d, l, tt = _path_euler(
                pid, is_anti, x, b, drift, sigma, delta, q, T, dt,
                kappa, cum_p, rates, shapes, jump_sign, k0, k1,
            )
        elif scheme == 1:
            d, l, tt = _path_exact_sn(
                pid, is_anti, x, b, drift, delta, q, T,
                kappa, cum_p, rates, shapes, k0, k1,
            )
        else:
            d, l, tt = _path_exact_sp(
                pid, is_anti, x, b, drift, delta, q, T,
                kappa, cum_p, rates, shapes, k0, k1,
            )
        div[i] = d
        lap[i] = l
        tau[i] = tt
    return div, lap, tau


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    dt: float = 1e-3
    horizon: float = 200.0
    seed: int = 20240817
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic estimation needs an even path count")


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n_effective: int
    truncation_bound: float


def _reduce(values: np.ndarray, antithetic: bool, bound: float) -> Estimate:
    if antithetic:
        values = 0.5 * (values[0::2] + values[1::2])
    n = len(values)
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(mean=mean, stderr=stderr, n_effective=n, truncation_bound=bound)


def _jump_arrays(model):
    terms = model.jumps.terms
    if not terms:
        return (
            np.array([1.0]),
            np.array([1.0]),
            np.array([1], dtype=np.int64),
        )
    cum = np.cumsum([t.p for t in terms])
    cum[-1] = 1.0
    return (
        cum.astype(np.float64),
        np.array([t.rho for t in terms], dtype=np.float64),
        np.array([t.k for t in terms], dtype=np.int64),
    )


def _apply_thread_env() -> None:
    raw = os.environ.get(THREADS_ENV)
    if raw:
        set_num_threads(max(1, int(raw)))


def _run(model, b, x, cfg: SimConfig, sp: bool):
    _apply_thread_env()
    cum_p, rates, shapes = _jump_arrays(model)
    k0 = np.uint32(cfg.seed & 0xFFFFFFFF)
    k1 = np.uint32((cfg.seed >> 32) & 0xFFFFFFFF)
    if sp:
        jump_sign = 1.0
        scheme = 0 if model.sigma > 0 else 2
    else:
        jump_sign = -1.0
        scheme = 0 if model.sigma > 0 else 1
    div, lap, tau = _run_paths(
        cfg.n_paths,
        cfg.antithetic,
        float(x),
        float(b),
        float(model.drift),
        float(model.sigma),
        float(model.delta),
        float(model.q),
        float(cfg.horizon),
        float(cfg.dt),
        float(model.jumps.kappa),
        cum_p,
        rates,
        shapes,
        jump_sign,
        k0,
        k1,
        scheme,
    )
    div_bound = model.delta / model.q * math.exp(-model.q * cfg.horizon)
    lap_bound = math.exp(-model.q * cfg.horizon)
    return (
        _reduce(div, cfg.antithetic, div_bound),
        _reduce(lap, cfg.antithetic, lap_bound),
        (div, lap, tau),
    )


def simulate_sn(model, b: float, x: float, cfg: SimConfig, return_paths: bool = False):
    """Estimate discounted dividends and E[e^{-q tau}] for the SN threshold
    strategy at level b (b = inf is the do-nothing strategy)."""
    if model.side != "spectrally-negative":
        raise ValueError("simulate_sn expects a spectrally negative model")
    dividends, ruin, paths = _run(model, b, x, cfg, sp=False)
    return (dividends, ruin, paths) if return_paths else (dividends, ruin)


def simulate_sp(model, b: float, x: float, cfg: SimConfig, return_paths: bool = False):
    """SP mirror of simulate_sn: downward drift, upward jumps, ruin at 0."""
    if model.side != "spectrally-positive":
        raise ValueError("simulate_sp expects a spectrally positive model")
    dividends, ruin, paths = _run(model, b, x, cfg, sp=True)
    return (dividends, ruin, paths) if return_paths else (dividends, ruin)
