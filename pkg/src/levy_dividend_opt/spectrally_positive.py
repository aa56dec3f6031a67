"""Refracted spectrally positive model: value, ruin transform, smooth fit.

All identities are expressed through the dual pair (X, Y): X is the
negative of the drift-adjusted surplus and Y = X - delta*t, so Phi(q),
varphi(q), W and WW from the scale module apply directly. The central
object is the tilted function ZZ(x) = 1 + delta*Phi(q) int_0^x
e^{-Phi(q) z} WW(z) dz, with ZZ(x) = 1 for x <= 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expmix import ExpMixture
from .models import SIDE_SP, ModelSpec
from .scale import ScalePair, build_scale, change_of_measure_mixture

B_TOL = 1e-12


@dataclass
class SPThresholdSolution:
    b_opt: float
    s_at_opt: float
    lam: float
    boundary_case: str
    verification: dict


@dataclass
class SmoothFitReport:
    vprime_jump: float
    vsecond_jump: float | None
    continuous: bool


class SPFunctionals:
    def __init__(self, model_or_pair):
        pair = (
            model_or_pair
            if isinstance(model_or_pair, ScalePair)
            else build_scale(model_or_pair)
        )
        if pair.model.side != SIDE_SP:
            raise ValueError("SPFunctionals requires a spectrally positive model")
        self.pair = pair
        self.model: ModelSpec = pair.model
        self.phi = pair.roots.phi_q          # Phi(q), right inverse of psi
        self.varphi = pair.roots.varphi_q    # varphi(q), right inverse of psi_Y
        self._zc = change_of_measure_mixture(pair)
        self._zc_shift = self._zc.max_real_exponent      # = varphi - Phi
        # lam_tilde(b) = e^{Phi b} s(b) as a single mixture in b
        lifted = ExpMixture(self._zc.coeffs, self._zc.exponents + self.phi, merge=False)
        zq = pair.y.Z
        self._lam_tilde_mix = lifted * (1.0 / self.phi) - zq * (self.model.delta / self.model.q)
        self._b_zero = None

    # -- building blocks -------------------------------------------------------

    def zc(self, x) -> float:
        """Tilted second scale function; 1 on x <= 0."""
        if np.ndim(x) == 0:
            return 1.0 if x <= 0 else float(self._zc(x))
        x = np.asarray(x, dtype=np.float64)
        return np.where(x > 0, self._zc(np.maximum(x, 0.0)), 1.0)

    def _zc_ratio(self, a: float, b: float) -> float:
        """zc(a)/zc(b) via exponent-shifted mixtures (large-b safe); a <= b."""
        s = self._zc_shift
        num = 1.0 * np.exp(-s * b) if a <= 0 else self._zc.eval_shifted(a, s) * np.exp(-s * (b - a))
        den = self._zc.eval_shifted(b, s)
        return float(num / den)

    def ruin_laplace(self, x: float, b: float) -> float:
        """Ruin transform of the SP threshold strategy at level b."""
        if x < 0:
            raise ValueError("x must be >= 0")
        if np.isinf(b):
            return float(np.exp(-self.varphi * x))
        val = np.exp(-self.phi * x) * self._zc_ratio(b - x, b)
        return min(max(float(val), 0.0), 1.0)

    def kbar(self, x: float, b: float, lam: float) -> float:
        zqb = float(self.pair.y.Z_at(b))
        return self.ruin_laplace(x, b) * (self.model.delta / self.model.q * zqb + lam)

    def dividends_only(self, x: float, b: float) -> float:
        d, q = self.model.delta, self.model.q
        zq = self.pair.y.Z_at
        return d / q * (float(zq(b - x)) - float(zq(b)) * self.ruin_laplace(x, b))

    def value(self, x: float, b: float, lam: float) -> float:
        d, q = self.model.delta, self.model.q
        if x <= b:
            return d / q * float(self.pair.y.Z_at(b - x)) - self.kbar(x, b, lam)
        return d / q - self.kbar(b, b, lam) * np.exp(-self.phi * (x - b))

    def v_prime(self, x: float, b: float, lam: float, side: str = "auto") -> float:
        d = self.model.delta
        phi = self.phi
        use_left = x < b or (x == b and side in ("auto", "left"))
        if use_left:
            ww = float(self.pair.y.W(max(b - x, 0.0))) if b - x >= 0 else 0.0
            return (
                -d * ww
                + phi * (self.kbar(x, b, lam) + d * self.kbar(b, b, lam) * ww)
            )
        return phi * self.kbar(b, b, lam) * np.exp(-phi * (x - b))

    def v_second(self, x: float, b: float, lam: float, side: str = "auto") -> float:
        d = self.model.delta
        phi = self.phi
        use_left = x < b or (x == b and side in ("auto", "left"))
        if use_left:
            u = max(b - x, 0.0)
            ww = float(self.pair.y.W(u))
            wwp = float(self.pair.y.Wp(u))
            kb = self.kbar(b, b, lam)
            return (
                d * wwp
                - phi**2 * self.kbar(x, b, lam)
                - d * phi * kb * (phi * ww + wwp)
            )
        return -(phi**2) * self.kbar(b, b, lam) * np.exp(-phi * (x - b))

    # -- smooth-fit threshold ----------------------------------------------------

    def s_func(self, b: float) -> float:
        """Smooth-fit function; strictly increasing with s(0+) = 1/Phi - delta/q."""
        if b <= 0:
            return 1.0 / self.phi - self.model.delta / self.model.q
        return float(np.exp(-self.phi * b) * self.lambda_tilde(b))

    def s_prime(self, b: float) -> float:
        d, q = self.model.delta, self.model.q
        return d * self.phi * np.exp(-self.phi * b) / q * float(self.pair.y.Z_at(b))

    def lambda_tilde(self, b: float) -> float:
        """Multiplier for which b is the smooth-fit threshold."""
        mix = self._lam_tilde_mix
        s = mix.max_real_exponent
        scaled = float(mix.eval_shifted(b, s))
        if s * b > 700.0:
            return float("inf") if scaled > 0 else float("-inf")
        return scaled * np.exp(s * b)

    @property
    def lam_tilde_at_zero(self) -> float:
        return 1.0 / self.phi - self.model.delta / self.model.q

    @property
    def b_zero(self) -> float:
        """Threshold at lam = 0: root of lambda_tilde when s(0+) < 0, else 0."""
        if self._b_zero is None:
            self._b_zero = 0.0 if self.lam_tilde_at_zero >= 0 else self._invert_lambda_tilde(0.0)
        return self._b_zero

    def _invert_lambda_tilde(self, lam: float) -> float:
        lo, hi = 0.0, 1.0
        for _ in range(200):
            if self.lambda_tilde(hi) > lam:
                break
            lo = hi
            hi *= 2.0
        else:
            raise ArithmeticError("failed to bracket the smooth-fit threshold")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < B_TOL * max(1.0, mid):
                return mid
            if self.lambda_tilde(mid) < lam:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def b_opt(self, lam: float, verify_grid=None) -> SPThresholdSolution:
        if lam <= self.lam_tilde_at_zero:
            b = 0.0
            case = "at_zero"
        else:
            b = self._invert_lambda_tilde(lam)
            case = "interior"
        verification = self._verify(b, lam, verify_grid)
        return SPThresholdSolution(
            b_opt=b,
            s_at_opt=self.s_func(b) if b > 0 else self.lam_tilde_at_zero,
            lam=lam,
            boundary_case=case,
            verification=verification,
        )

    def _verify(self, b: float, lam: float, grid=None) -> dict:
        if grid is None:
            hi = max(50.0, 2.0 * b + 10.0)
            grid = np.linspace(1e-9, hi, 1000)
        grid = np.asarray(grid, dtype=np.float64)
        below = grid[(grid > 0) & (grid <= b)]
        above = grid[grid > b]
        worst_lower = 0.0
        if below.size:
            worst_lower = float(min(self.v_prime(x, b, lam) for x in below) - 1.0)
        worst_upper = 0.0
        if above.size:
            worst_upper = float(max(self.v_prime(x, b, lam, side="right") for x in above) - 1.0)
        v0 = self.value(0.0, b, lam)
        passed = worst_lower >= -1e-9 and worst_upper <= 1e-9 and v0 + lam >= -1e-12
        return {
            "passed": passed,
            "worst_lower": worst_lower,
            "worst_upper": worst_upper,
            "v0_plus_lam": v0 + lam,
        }

    def smooth_fit_check(self, b: float, lam: float) -> SmoothFitReport:
        if not b > 0:
            raise ValueError("smooth-fit check requires b > 0")
        jump1 = self.v_prime(b, b, lam, side="right") - self.v_prime(b, b, lam, side="left")
        jump2 = None
        continuous = abs(jump1) < 1e-8
        if self.model.sigma > 0:
            jump2 = self.v_second(b, b, lam, side="right") - self.v_second(b, b, lam, side="left")
            continuous = continuous and abs(jump2) < 1e-8
        return SmoothFitReport(vprime_jump=float(jump1), vsecond_jump=jump2, continuous=continuous)
