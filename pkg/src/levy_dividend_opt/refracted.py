"""Closed-form functionals of the refracted spectrally negative process.

Everything is assembled from exponential-mixture primitives; the only
approximation anywhere is double-precision arithmetic. Functions of the
threshold b are precomputed as mixtures in b so sweeps cost O(#terms)
per point.

Above the threshold all identities are represented in the shifted
variable u = x - b. Boundedness of the value, dividend and ruin
functionals forces the coefficients of every growing exponential to
cancel; the cancellation is verified and the residue removed, which
keeps the evaluators accurate for large x and large b instead of
degrading with e^{varphi(q) x} roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expmix import ExpMixture, _exp_clamped
from .models import AssumptionViolated, ModelSpec
from .scale import ScalePair, build_scale

PSI_CLAMP_TOL = 1e-9    # |out-of-range| beyond this aborts, below it clamps
PURGE_REL_TOL = 1e-7    # growing-term residue must be below this (relative)


def _shift_origin(mix: ExpMixture, b: float) -> ExpMixture:
    """f(b + u) as a mixture in u >= 0."""
    return ExpMixture(
        mix.coeffs * _exp_clamped(mix.exponents * b), mix.exponents, merge=False
    )


def _purge_growing(mix: ExpMixture, what: str) -> ExpMixture:
    """Remove growing exponentials whose coefficients cancel analytically."""
    grow = mix.exponents.real > 1e-12
    if not grow.any():
        return mix
    scale = float(np.max(np.abs(mix.coeffs))) or 1.0
    worst = float(np.max(np.abs(mix.coeffs[grow])))
    if worst > PURGE_REL_TOL * scale:
        raise ArithmeticError(
            f"{what}: growing-term residue {worst:.3e} exceeds {PURGE_REL_TOL} x scale {scale:.3e}"
        )
    return ExpMixture(mix.coeffs[~grow], mix.exponents[~grow], merge=False)


@dataclass
class HJBReport:
    passed: bool
    worst_lower: float        # min of v'(x) - 1 on (0, b] (>= -1e-9 required)
    worst_upper: float        # max of v'(x) - 1 on (b, grid_max] (<= 1e-9 required)
    v0_minus_floor: float     # v(0) + lam (>= -1e-12 required)
    grid_max: float

    def summary(self) -> str:
        s = "pass" if self.passed else "FAIL"
        return (
            f"hjb {s}: min(v'-1) below b = {self.worst_lower:.3e}, "
            f"max(v'-1) above b = {self.worst_upper:.3e}, v(0)+lam = {self.v0_minus_floor:.3e}"
        )


class ValueCurve:
    """Candidate value function of the threshold strategy at level b with
    terminal-value multiplier lam; exact piecewise mixtures on both sides
    of the threshold with one-sided derivatives at b."""

    def __init__(self, fn: "SNFunctionals", b: float, lam: float, check_param: bool = True):
        if check_param and not (fn.model.q * lam + fn.model.delta > 0):
            raise AssumptionViolated("q*lam + delta must be positive")
        self.fn = fn
        self.b = float(b)
        self.lam = float(lam)
        self.xi_b = fn._xi_value(b, lam)
        fx, fy = fn.pair.x, fn.pair.y
        d, q = fn.model.delta, fn.model.q
        w_b = _shift_origin(fx.W, self.b)
        wp_b = _shift_origin(fx.Wp, self.b)
        z_b = _shift_origin(fx.Z, self.b)
        ca = fy.W.convolve_from(wp_b, 0.0)
        cb = fy.W.convolve_from(w_b, 0.0)
        val = (
            (w_b + d * ca) * self.xi_b
            - (z_b + (d * q) * cb) * self.lam
            - fy.Wbar * d
        )
        self._hi_val = _purge_growing(val, "value above threshold")
        self._hi_d1 = self._hi_val.derivative()
        self._hi_d2 = self._hi_d1.derivative()

    def value(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        fx = self.fn.pair.x
        lo = x <= self.b
        out = np.empty_like(x)
        out[lo] = self.xi_b * fx.W(x[lo]) - self.lam * fx.Z_at(x[lo])
        hi = ~lo
        if np.any(hi):
            out[hi] = self._hi_val(x[hi] - self.b)
        return out if out.size > 1 else float(out[0])

    def v_prime(self, x, side: str = "auto"):
        """First derivative; ``side`` picks the branch at x == b (the two
        one-sided values coincide there by smooth fit at optimal b)."""
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        fx = self.fn.pair.x
        q = self.fn.model.q
        lo = x < self.b if side == "right" else x <= self.b
        out = np.empty_like(x)
        out[lo] = self.xi_b * fx.Wp(x[lo]) - self.lam * q * fx.W(x[lo])
        hi = ~lo
        if np.any(hi):
            out[hi] = self._hi_d1(x[hi] - self.b)
        return out if out.size > 1 else float(out[0])

    def v_second(self, x, side: str = "left"):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        fx = self.fn.pair.x
        q = self.fn.model.q
        lo = x < self.b if side == "right" else x <= self.b
        out = np.empty_like(x)
        out[lo] = self.xi_b * fx.Wpp(x[lo]) - self.lam * q * fx.Wp(x[lo])
        hi = ~lo
        if np.any(hi):
            out[hi] = self._hi_d2(x[hi] - self.b)
        return out if out.size > 1 else float(out[0])

    def psi(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=np.float64))
        out = np.array([self.fn.ruin_laplace(v, self.b) for v in x])
        return out if out.size > 1 else float(out[0])


class SNFunctionals:
    """Dividend value, ruin-time transform and threshold-selection
    functions for a spectrally negative model."""

    def __init__(self, model_or_pair):
        pair = (
            model_or_pair
            if isinstance(model_or_pair, ScalePair)
            else build_scale(model_or_pair)
        )
        self.pair = pair
        self.model: ModelSpec = pair.model
        self.varphi = pair.roots.varphi_q
        self.phi = pair.roots.phi_q
        if not self.varphi > pair.x.W.max_real_exponent:
            raise ArithmeticError("tail integrals diverge: varphi(q) <= max root of psi = q")
        # h(b) = varphi * e^{varphi b} int_b^inf e^{-varphi y} W'(y) dy
        self._h = pair.x.Wp.tilted_tail(self.varphi) * self.varphi
        self._hp = self._h.derivative()
        # T(b) = W(b) + h(b)/varphi = varphi e^{varphi b} int_b^inf e^{-varphi y} W(y) dy
        self._tw = pair.x.W + (self._h * (1.0 / self.varphi))
        self.clamp_count = 0

    # -- threshold-selection functions ---------------------------------------

    def h(self, b: float) -> float:
        return float(self._h(b))

    def h_prime(self, b: float) -> float:
        return float(self._hp(b))

    def _ratio_tw_h(self, b: float) -> float:
        """T(b)/h(b) evaluated on exponent-shifted mixtures (safe for large b)."""
        num = self._tw.eval_shifted(b, self.phi)
        den = self._h.eval_shifted(b, self.phi)
        return float(num / den)

    def _xi_value(self, b: float, lam: float) -> float:
        q = self.model.q
        num = np.exp(-self.phi * b) + q * lam * self._tw.eval_shifted(b, self.phi)
        den = self._h.eval_shifted(b, self.phi)
        return float(num / den)

    def xi(self, b: float, lam: float) -> float:
        """Candidate slope xi_lam(b) = (1 + q*lam*(W(b) + h(b)/varphi)) / h(b)."""
        self._require_param(lam)
        return self._xi_value(b, lam)

    def xi_prime(self, b: float, lam: float) -> float:
        """xi'_lam(b) = varphi W'(b) (xi_lam(b) - g_lam(b)) / h(b)."""
        self._require_param(lam)
        return (
            self.varphi
            * float(self.pair.x.Wp(b))
            / self.h(b)
            * (self.xi(b, lam) - self.g(b, lam))
        )

    def g(self, b: float, lam: float) -> float:
        """g_lam(b) = (1 + q*lam*W(b)) / W'(b); b = 0 uses W'(0+)."""
        fx = self.pair.x
        return (1.0 + self.model.q * lam * float(fx.W(b))) / float(fx.Wp(b))

    def g_prime(self, b: float, lam: float) -> float:
        fx = self.pair.x
        q = self.model.q
        w, wp, wpp = float(fx.W(b)), float(fx.Wp(b)), float(fx.Wpp(b))
        return (q * lam * wp * wp - (1.0 + q * lam * w) * wpp) / (wp * wp)

    # -- value functionals ----------------------------------------------------

    def curve(self, b: float, lam: float, check_param: bool = True) -> ValueCurve:
        return ValueCurve(self, b, lam, check_param=check_param)

    def value(self, x: float, b: float, lam: float) -> float:
        if np.isinf(b):
            return float(lam * (-self.k_x(x)))
        return float(self.curve(b, lam).value(x))

    def _upper_mixes(self, b: float):
        """(W + delta*conv)(b + u) and the dividend/ruin mixtures in u."""
        fx, fy = self.pair.x, self.pair.y
        d = self.model.delta
        w_b = _shift_origin(fx.W, b)
        wp_b = _shift_origin(fx.Wp, b)
        z_b = _shift_origin(fx.Z, b)
        ca = fy.W.convolve_from(wp_b, 0.0)
        cb = fy.W.convolve_from(w_b, 0.0)
        a_mix = w_b + d * ca                       # W(x) + delta int_b^x WW(x-y)W'(y)dy
        b_mix = z_b + (d * self.model.q) * cb      # Z(x) + delta q int_b^x WW(x-y)W(y)dy
        return a_mix, b_mix

    def dividends_only(self, x: float, b: float) -> float:
        """Expected discounted dividends of the threshold strategy at b."""
        if np.isinf(b):
            return 0.0
        if x <= b:
            return float(self.pair.x.W(x)) / self.h(b)
        a_mix, _ = self._upper_mixes(b)
        den = self._h.eval_shifted(b, self.phi)
        mix = a_mix * (np.exp(-self.phi * b) / den) - self.pair.y.Wbar * self.model.delta
        mix = _purge_growing(mix, "dividend functional")
        return float(mix(x - b))

    def ruin_laplace(self, x: float, b: float) -> float:
        """Psi_x(b) = E_x[e^{-q tau_b}] for the threshold strategy at b."""
        if np.isinf(b):
            return self.k_x(x)
        fx = self.pair.x
        q = self.model.q
        r = q * self._ratio_tw_h(b)
        if x <= b:
            return self._clamp_unit(float(fx.Z_at(x)) - r * float(fx.W(x)))
        a_mix, b_mix = self._upper_mixes(b)
        mix = b_mix - a_mix * r
        mix = _purge_growing(mix, "ruin transform")
        return self._clamp_unit(float(mix(x - b)))

    def k_x(self, x: float) -> float:
        """Ruin transform of the do-nothing strategy: Z(x) - (q/Phi(q)) W(x)."""
        fx = self.pair.x
        return self._clamp_unit(
            float(fx.Z_at(x)) - self.model.q / self.phi * float(fx.W(x))
        )

    # -- verification ----------------------------------------------------------

    def hjb_check(self, curve: ValueCurve, grid=None) -> HJBReport:
        b = curve.b
        if grid is None:
            hi = max(50.0, 2.0 * b + 10.0)
            grid = np.linspace(1e-9, hi, 2000)
        grid = np.asarray(grid, dtype=np.float64)
        below = grid[(grid > 0) & (grid <= b)]
        above = grid[grid > b]
        worst_lower = 0.0
        if below.size:
            worst_lower = float(np.min(curve.v_prime(below) - 1.0))
        worst_upper = 0.0
        if above.size:
            worst_upper = float(np.max(curve.v_prime(above) - 1.0))
        v0 = float(curve.value(0.0))
        v0_slack = v0 + curve.lam
        passed = worst_lower >= -1e-9 and worst_upper <= 1e-9 and v0_slack >= -1e-12
        return HJBReport(
            passed=passed,
            worst_lower=worst_lower,
            worst_upper=worst_upper,
            v0_minus_floor=v0_slack,
            grid_max=float(grid[-1]),
        )

    # -- internals --------------------------------------------------------------

    def _require_param(self, lam: float) -> None:
        if not (self.model.q * lam + self.model.delta > 0):
            raise AssumptionViolated(
                f"q*lam + delta must be positive (lam={lam}, delta={self.model.delta})"
            )

    def _clamp_unit(self, val: float) -> float:
        if val < 0.0:
            if val < -PSI_CLAMP_TOL:
                raise ArithmeticError(f"ruin transform {val} outside [0,1]")
            self.clamp_count += 1
            return 0.0
        if val > 1.0:
            if val > 1.0 + PSI_CLAMP_TOL:
                raise ArithmeticError(f"ruin transform {val} outside [0,1]")
            self.clamp_count += 1
            return 1.0
        return val
