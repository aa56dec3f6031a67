"""Exact scale functions as exponential mixtures.

W is recovered from the partial fractions of 1/(psi - q): with simple
roots theta_k of psi = q,

    W(x) = sum_k exp(theta_k x) / psi'(theta_k),

and the same construction with psi_Y gives the scale family of the
refracted process Y = X - delta*t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expmix import ExpMixture, LinearPlusMixture
from .models import (
    ModelSpec,
    RootSet,
    laplace_exponent,
    laplace_exponent_prime,
    solve_roots,
)


@dataclass(frozen=True)
class ScaleFamily:
    """Scale objects of one spectrally negative process at rate q."""

    W: ExpMixture
    Wp: ExpMixture
    Wpp: ExpMixture
    Wbar: ExpMixture           # int_0^x W, = 0 on x <= 0
    Z: ExpMixture              # 1 + q*Wbar on x >= 0, = 1 on x <= 0
    Zbar: LinearPlusMixture    # int_0^x Z, = x on x <= 0
    W0: float
    Wp0: float
    top_root: float            # Phi(q) or varphi(q)
    q: float

    def Z_at(self, x):
        """Z with the x <= 0 convention applied."""
        x = np.asarray(x, dtype=np.float64)
        out = np.where(x > 0, self.Z(np.maximum(x, 0.0)), 1.0)
        return float(out) if out.ndim == 0 else out

    def Zbar_at(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.where(x > 0, self.Zbar(np.maximum(x, 0.0)), x)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ScalePair:
    """Scale families for X (exponent psi) and Y (exponent psi_Y)."""

    model: ModelSpec
    roots: RootSet
    x: ScaleFamily
    y: ScaleFamily


def _family(model: ModelSpec, roots: np.ndarray, delta_shift: float, top: float) -> ScaleFamily:
    psi_p = np.array(
        [laplace_exponent_prime(model, z) - delta_shift for z in roots],
        dtype=np.complex128,
    )
    coeffs = 1.0 / psi_p
    if model.sigma > 0:
        # unbounded variation: sum of residues vanishes analytically; pin the
        # roundoff onto the fastest-decaying term so W(0) = 0 holds exactly
        adj = np.sum(coeffs)
        last = len(coeffs) - 1
        if abs(roots[last].imag) > 0:
            partner = int(np.argmin(np.abs(roots - np.conj(roots[last]))))
            coeffs[last] -= adj / 2.0
            coeffs[partner] -= adj / 2.0
        else:
            coeffs[last] -= adj
    W = ExpMixture(coeffs, roots, merge=False)
    Wp = W.derivative()
    Wbar = W.antiderivative()
    Z = Wbar * model.q
    Z = Z.with_constant(1.0)
    # Zbar: the constant part of Z integrates to a linear term.
    const = float(np.real(np.sum(Z.coeffs[np.abs(Z.exponents) < 1e-12])))
    expo_part = ExpMixture(
        Z.coeffs[np.abs(Z.exponents) >= 1e-12],
        Z.exponents[np.abs(Z.exponents) >= 1e-12],
        merge=False,
    )
    Zbar = LinearPlusMixture(const, expo_part.antiderivative())
    return ScaleFamily(
        W=W,
        Wp=Wp,
        Wpp=Wp.derivative(),
        Wbar=Wbar,
        Z=Z,
        Zbar=Zbar,
        W0=W(0.0),
        Wp0=Wp(0.0),
        top_root=top,
        q=model.q,
    )


def build_scale(model: ModelSpec) -> ScalePair:
    roots = solve_roots(model)
    fx = _family(model, roots.roots_x, 0.0, roots.phi_q)
    fy = _family(model, roots.roots_y, model.delta, roots.varphi_q)
    return ScalePair(model=model, roots=roots, x=fx, y=fy)


def refraction_identity_residual(pair: ScalePair, x: float) -> float:
    """delta * int_0^x WW(x-y) W(y) dy - (WWbar(x) - Wbar(x)); ~0 in exact math."""
    if x < 0:
        return 0.0
    if x == 0:
        return 0.0
    conv = pair.y.W.convolve_from(pair.x.W, 0.0)
    lhs = pair.model.delta * conv(x)
    rhs = pair.y.Wbar(x) - pair.x.Wbar(x)
    return float(lhs - rhs)


def change_of_measure_mixture(pair: ScalePair) -> ExpMixture:
    """ZZ(x) := 1 + delta*Phi(q) * int_0^x e^{-Phi(q) z} WW(z) dz as a mixture."""
    phi = pair.roots.phi_q
    integrand = ExpMixture(pair.y.W.coeffs, pair.y.W.exponents - phi, merge=False)
    anti = integrand.antiderivative()
    return (anti * (pair.model.delta * phi)).with_constant(1.0)


def z_change_of_measure(pair: ScalePair, x: float) -> float:
    """Evaluate ZZ(x); equals 1 for x <= 0."""
    if x <= 0:
        return 1.0
    return float(change_of_measure_mixture(pair)(x))


def asymptotic_check(pair: ScalePair, grid=(1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0)) -> dict:
    """Check e^{-top x} W(x) -> 1/psi'(top) monotonically from below."""
    out = {}
    for name, fam, shift in (
        ("x", pair.x, 0.0),
        ("y", pair.y, pair.model.delta),
    ):
        top = fam.top_root
        limit = 1.0 / (laplace_exponent_prime(pair.model, top) - shift)
        vals = np.array([fam.W.eval_shifted(g, top) for g in grid])
        out[name] = {
            "limit": limit,
            "values": vals,
            "max_deviation_at_largest": abs(vals[-1] - limit),
            "increasing": bool(np.all(np.diff(vals) > -1e-12 * abs(limit))),
            "below_limit": bool(np.all(vals <= limit * (1 + 1e-12))),
        }
    return out
