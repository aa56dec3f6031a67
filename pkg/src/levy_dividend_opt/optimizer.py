"""Optimal threshold selection and the multiplier map for the SN model.

The optimal level maximizes the slope function xi; it is located as the
first downcrossing of xi - g, restricted to [0, a] where a is the global
maximizer of g. The inverse problem (which multiplier makes a given
level optimal) is the map lam(b) = h'(b) / (q * (h(b)^2 - h'(b) T(b))),
whose numerator-mixture is built once with the analytically cancelling
leading term removed, so it stays accurate for large b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expmix import ExpMixture
from .refracted import HJBReport, SNFunctionals, ValueCurve

B_TOL = 1e-11
B_MAXITER = 60

INTERIOR = "interior"
AT_ZERO = "at_zero"
CEILING_FALLBACK = "ceiling_rate_fallback"


@dataclass
class ThresholdSolution:
    b_opt: float
    xi_at_opt: float
    lam: float
    boundary_case: str
    hjb: HJBReport
    curve: ValueCurve


@dataclass
class MultiplierCurve:
    b_zero: float
    lam_bar: float

    def __post_init__(self):
        self._eval = None

    def __call__(self, b: float) -> float:
        return self._eval(b)


class ThresholdOptimizer:
    def __init__(self, fn: SNFunctionals):
        self.fn = fn
        self.model = fn.model
        self._b_zero = None
        self._lam_num = None   # mixture h^2 - h' T, leading term removed

    # -- candidate maximizer of g ------------------------------------------

    def a_max(self, lam: float) -> float:
        """Location of the global maximum of g_lam; 0 when g falls from 0+."""
        self.fn._require_param(lam)
        gp = lambda b: self.fn.g_prime(b, lam)
        if gp(0.0) <= 0:
            return 0.0
        hi = 1.0
        for _ in range(200):
            if gp(hi) < 0:
                break
            hi *= 2.0
        else:
            raise ArithmeticError("failed to bracket the maximizer of g")
        lo = hi / 2.0 if hi > 1.0 else 0.0
        while gp(lo) <= 0 and lo > 0:
            lo /= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-13 * max(1.0, mid):
                return mid
            if gp(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # -- optimal threshold ---------------------------------------------------

    def b_opt(self, lam: float) -> ThresholdSolution:
        fn = self.fn
        q, delta = self.model.q, self.model.delta
        if q * lam + delta <= 0:
            curve = fn.curve(0.0, lam, check_param=False)
            hjb = fn.hjb_check(curve)
            return ThresholdSolution(
                b_opt=0.0,
                xi_at_opt=fn._xi_value(0.0, lam),
                lam=lam,
                boundary_case=CEILING_FALLBACK,
                hjb=hjb,
                curve=curve,
            )
        diff = lambda b: fn.xi(b, lam) - fn.g(b, lam)
        if diff(0.0) <= 0:
            b = 0.0
            case = AT_ZERO
        else:
            a = self.a_max(lam)
            b = self._first_downcrossing(diff, a)
            case = INTERIOR if b > 0 else AT_ZERO
        curve = fn.curve(b, lam)
        hjb = fn.hjb_check(curve)
        if not hjb.passed:
            raise ArithmeticError(f"verification failed at the computed optimum: {hjb.summary()}")
        return ThresholdSolution(
            b_opt=b,
            xi_at_opt=fn.xi(b, lam),
            lam=lam,
            boundary_case=case,
            hjb=hjb,
            curve=curve,
        )

    def _first_downcrossing(self, diff, a: float) -> float:
        """First root of ``diff`` (positive at 0+) on (0, a]."""
        if a <= 0:
            return 0.0
        lo, flo = 0.0, diff(0.0)
        hi = None
        # geometric grid towards a
        grid = a * np.geomspace(1e-6, 1.0, 40)
        for g in grid:
            fg = diff(g)
            if fg <= 0:
                hi = g
                break
            lo, flo = g, fg
        if hi is None:
            return 0.0
        for _ in range(B_MAXITER):
            mid = 0.5 * (lo + hi)
            if hi - lo < B_TOL:
                break
            if diff(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    # -- threshold-vs-multiplier map -----------------------------------------

    def lambda_bar(self) -> float:
        """Largest multiplier with a zero optimal threshold."""
        m = self.model
        varphi = self.fn.varphi
        if m.sigma > 0:
            return (m.sigma**2 * varphi / 2.0 - m.delta) / m.q
        kappa = m.jumps.kappa
        c = m.c_x
        ceiling = (m.q + kappa) / (c - m.delta)
        if varphi >= ceiling:
            return float("inf")
        num = varphi * c * (c - m.delta) - m.delta * (m.q + kappa)
        den = m.q * ((m.q + kappa) - varphi * (c - m.delta))
        return num / den

    @property
    def b_zero(self) -> float:
        if self._b_zero is None:
            self._b_zero = self.b_opt(0.0).b_opt
        return self._b_zero

    def lambda_of_b(self, b: float) -> float:
        """Multiplier for which ``b`` is the optimal threshold; domain b > b_zero."""
        if b <= self.b_zero:
            raise ValueError(f"lambda(b) is defined for b > b_0 = {self.b_zero}, got {b}")
        num_mix = self._lambda_numerator()
        shift = num_mix.max_real_exponent
        phi = self.fn.phi
        den = num_mix.eval_shifted(b, shift)
        hp = self.fn._hp.eval_shifted(b, phi)
        log_scale = (phi - shift) * b
        val = hp / (self.model.q * den) * np.exp(log_scale)
        if not (np.isfinite(val) and val > 0):
            raise ArithmeticError(f"multiplier map produced a non-positive value at b={b}")
        return float(val)

    def multiplier_curve(self) -> MultiplierCurve:
        mc = MultiplierCurve(b_zero=self.b_zero, lam_bar=self.lambda_bar())
        mc._eval = self.lambda_of_b
        return mc

    def _lambda_numerator(self) -> ExpMixture:
        """Mixture h^2 - h'*T with the exactly-cancelling e^{2 Phi b} term removed."""
        if self._lam_num is not None:
            return self._lam_num
        fn = self.fn
        mix = fn._h.product(fn._h) - fn._hp.product(fn._tw)
        target = 2.0 * fn.phi
        keep = np.abs(mix.exponents - target) > 1e-9
        dropped = mix.coeffs[~keep]
        scale = np.max(np.abs(mix.coeffs)) if len(mix) else 1.0
        if dropped.size and np.any(np.abs(dropped) > 1e-9 * scale):
            raise ArithmeticError("leading term of the multiplier map failed to cancel")
        self._lam_num = ExpMixture(mix.coeffs[keep], mix.exponents[keep], merge=False)
        return self._lam_num

