"""Ruin-constrained dividend maximization via Lagrangian duality.

The classification follows the four-branch case table: unconstrained when
the constraint does not bind at the lam = 0 threshold, interior when the
ruin transform can be inverted for the binding level, value zero exactly
at the do-nothing feasibility boundary, and minus infinity below it.
Infeasibility is a tagged branch, never an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .optimizer import ThresholdOptimizer
from .refracted import SNFunctionals
from .spectrally_positive import SPFunctionals

UNCONSTRAINED = "unconstrained"
INTERIOR = "interior"
BOUNDARY_ZERO = "boundary_zero"
INFEASIBLE = "infeasible"
LAMBAR_INF_FEASIBLE = "lambda_bar_infinite_feasible"
LAMBAR_INF_INFEASIBLE = "lambda_bar_infinite_infeasible"
X_ZERO_DEGENERATE = "x_zero_degenerate"

K_EDGE_TOL = 1e-10       # |K - K_x| below this hits the value-zero branch
SLACK_TOL = 1e-12        # target bisection residual on |Psi - K|
BRACKET_CAP = 1e4


@dataclass
class ConstrainedSolution:
    branch: str
    value: float
    b_star: float | None = None
    lambda_star: float | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return np.isfinite(self.value)


def _invert_decreasing(psi, target: float, b_lo: float):
    """Smallest b >= b_lo with psi(b) = target for strictly decreasing psi.

    Returns None when no bracket exists below the cap (target at or below
    the b -> inf limit, numerically).
    """
    lo = b_lo
    hi = b_lo + 1.0
    while psi(hi) >= target:
        lo = hi
        hi = b_lo + (hi - b_lo) * 2.0
        if hi > BRACKET_CAP:
            return None
    for _ in range(300):
        mid = 0.5 * (lo + hi)
        val = psi(mid)
        if abs(val - target) < SLACK_TOL or hi - lo < 1e-14 * max(1.0, mid):
            return mid
        if val > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def solve_sn(fn: SNFunctionals, opt: ThresholdOptimizer, x: float, K: float) -> ConstrainedSolution:
    if not (0.0 <= K <= 1.0):
        raise ValueError(f"K must lie in [0, 1], got {K}")
    if x < 0:
        raise ValueError("x must be >= 0")
    diag: dict = {}
    if x == 0.0 and fn.model.sigma > 0:
        # ruin is immediate in the transform sense: Psi_0(b) = 1 for every b
        value = 0.0 if abs(K - 1.0) <= K_EDGE_TOL else float("-inf")
        return ConstrainedSolution(X_ZERO_DEGENERATE, value, diagnostics={"psi_x_any_b": 1.0})
    if x == 0.0 and fn.model.sigma == 0:
        diag["x_zero_bounded_variation"] = True

    lam_bar = opt.lambda_bar()
    if np.isinf(lam_bar):
        psi0 = fn.ruin_laplace(x, 0.0)
        diag["psi_x_b0"] = psi0
        if K >= psi0:
            return ConstrainedSolution(
                LAMBAR_INF_FEASIBLE,
                fn.dividends_only(x, 0.0),
                b_star=0.0,
                lambda_star=0.0,
                diagnostics=diag,
            )
        return ConstrainedSolution(LAMBAR_INF_INFEASIBLE, float("-inf"), diagnostics=diag)

    b0 = opt.b_zero
    psi_b0 = fn.ruin_laplace(x, b0)
    kx = fn.k_x(x)
    diag["k_x"] = kx
    diag["psi_x_b0"] = psi_b0

    if K >= psi_b0:
        diag["slack"] = K - psi_b0
        return ConstrainedSolution(
            UNCONSTRAINED,
            fn.dividends_only(x, b0),
            b_star=b0,
            lambda_star=0.0,
            diagnostics=diag,
        )
    if abs(K - kx) <= K_EDGE_TOL:
        return ConstrainedSolution(BOUNDARY_ZERO, 0.0, diagnostics=diag)
    if K < kx:
        return ConstrainedSolution(INFEASIBLE, float("-inf"), diagnostics=diag)

    b_star = _invert_decreasing(lambda b: fn.ruin_laplace(x, b), K, b0)
    if b_star is None:
        # no bracket below the cap: K is numerically at the do-nothing limit
        return ConstrainedSolution(BOUNDARY_ZERO, 0.0, diagnostics=diag)
    lam_star = opt.lambda_of_b(b_star)
    diag["slack"] = abs(fn.ruin_laplace(x, b_star) - K)
    return ConstrainedSolution(
        INTERIOR,
        fn.dividends_only(x, b_star),
        b_star=b_star,
        lambda_star=lam_star,
        diagnostics=diag,
    )


def solve_sp(spf: SPFunctionals, x: float, K: float) -> ConstrainedSolution:
    if not (x > 0):
        raise ValueError("the SP constrained problem is posed for x > 0")
    if not (0.0 <= K <= 1.0):
        raise ValueError(f"K must lie in [0, 1], got {K}")
    diag: dict = {}
    b0 = spf.b_zero
    psi_b0 = spf.ruin_laplace(x, b0)
    floor = float(np.exp(-spf.varphi * x))
    diag["ruin_floor"] = floor
    diag["psi_x_b0"] = psi_b0

    if K >= psi_b0:
        diag["slack"] = K - psi_b0
        return ConstrainedSolution(
            UNCONSTRAINED,
            spf.dividends_only(x, b0),
            b_star=b0,
            lambda_star=0.0,
            diagnostics=diag,
        )
    if abs(K - floor) <= K_EDGE_TOL:
        return ConstrainedSolution(BOUNDARY_ZERO, 0.0, diagnostics=diag)
    if K < floor:
        return ConstrainedSolution(INFEASIBLE, float("-inf"), diagnostics=diag)

    b_star = _invert_decreasing(lambda b: spf.ruin_laplace(x, b), K, b0)
    if b_star is None:
        return ConstrainedSolution(BOUNDARY_ZERO, 0.0, diagnostics=diag)
    lam_star = spf.lambda_tilde(b_star)
    diag["slack"] = abs(spf.ruin_laplace(x, b_star) - K)
    return ConstrainedSolution(
        INTERIOR,
        spf.dividends_only(x, b_star),
        b_star=b_star,
        lambda_star=lam_star,
        diagnostics=diag,
    )


def dual_profile(fn_or_spf, x: float, K: float, lam_grid, opt: ThresholdOptimizer | None = None):
    """Rows (lam, V_lam(x) + lam*K) over the multiplier grid, plus the argmin.

    Returns (rows, argmin_lam). Works for both sides: pass the matching
    functionals object (and the optimizer for the SN side).
    """
    rows = []
    if isinstance(fn_or_spf, SPFunctionals):
        spf = fn_or_spf
        for lam in lam_grid:
            b = spf.b_opt(lam, verify_grid=np.array([1.0])).b_opt
            rows.append((float(lam), spf.value(x, b, lam) + lam * K))
    else:
        fn = fn_or_spf
        if opt is None:
            opt = ThresholdOptimizer(fn)
        for lam in lam_grid:
            sol = opt.b_opt(lam)
            rows.append((float(lam), float(sol.curve.value(x)) + lam * K))
    values = [v for _, v in rows]
    argmin = rows[int(np.argmin(values))][0]
    return rows, argmin
