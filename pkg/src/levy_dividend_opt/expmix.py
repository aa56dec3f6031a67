"""Closed-form calculus for finite exponential mixtures.

An ExpMixture is f(x) = sum_k c_k exp(w_k x) on [0, inf), zero on
(-inf, 0), with complex terms kept in conjugate-closed sets so every
evaluation is real. Differentiation, antiderivatives, tail Laplace
integrals, pointwise products and convolutions all stay inside the
class, so no quadrature is ever needed on the solver path.
"""

from __future__ import annotations

import numpy as np

EXP_GAP_TOL = 1e-8     # minimum distance between distinct exponents
IMAG_REL_TOL = 1e-9    # tolerated imaginary residue on evaluation
EXP_CLAMP = 700.0      # exp() argument guard


def _exp_clamped(z):
    """exp for complex arrays with the real part clamped against overflow."""
    z = np.asarray(z, dtype=np.complex128)
    re = np.clip(z.real, -745.0, EXP_CLAMP)
    over = z.real > EXP_CLAMP
    if np.any(over):
        raise OverflowError("exponential mixture evaluation overflows double precision")
    return np.exp(re + 1j * z.imag)


class ExpMixture:
    """Finite sum of c_k * exp(w_k x), supported on [0, inf)."""

    __slots__ = ("coeffs", "exponents")

    def __init__(self, coeffs, exponents, merge: bool = True):
        c = np.atleast_1d(np.asarray(coeffs, dtype=np.complex128))
        w = np.atleast_1d(np.asarray(exponents, dtype=np.complex128))
        if c.shape != w.shape:
            raise ValueError("coeffs and exponents must have the same length")
        if merge and len(w) > 1:
            c, w = _merge_terms(c, w)
        order = np.argsort(-w.real, kind="stable")
        self.coeffs = c[order]
        self.exponents = w[order]

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        vals = _exp_clamped(np.multiply.outer(xv, self.exponents)) @ self.coeffs
        out = _realize(vals)
        out[xv < 0] = 0.0
        return float(out[0]) if scalar else out

    def eval_shifted(self, x, shift: float):
        """Evaluate exp(-shift*x) * f(x) without forming huge intermediates."""
        return ExpMixture(self.coeffs, self.exponents - shift, merge=False)(x)

    @property
    def max_real_exponent(self) -> float:
        return float(self.exponents.real.max())

    # -- algebra ------------------------------------------------------------

    def __add__(self, other: "ExpMixture") -> "ExpMixture":
        return ExpMixture(
            np.concatenate([self.coeffs, other.coeffs]),
            np.concatenate([self.exponents, other.exponents]),
        )

    def __mul__(self, a) -> "ExpMixture":
        return ExpMixture(self.coeffs * a, self.exponents, merge=False)

    __rmul__ = __mul__

    def __sub__(self, other: "ExpMixture") -> "ExpMixture":
        return self + (other * -1.0)

    def with_constant(self, a) -> "ExpMixture":
        return self + ExpMixture([a], [0.0])

    def derivative(self) -> "ExpMixture":
        return ExpMixture(self.coeffs * self.exponents, self.exponents, merge=False)

    def antiderivative(self) -> "ExpMixture":
        """F(x) = int_0^x f(y) dy with F(0) = 0."""
        if np.any(np.abs(self.exponents) < EXP_GAP_TOL):
            raise ValueError("antiderivative of a constant term leaves the class")
        c = self.coeffs / self.exponents
        return ExpMixture(
            np.concatenate([c, [-np.sum(c)]]),
            np.concatenate([self.exponents, [0.0]]),
        )

    def product(self, other: "ExpMixture") -> "ExpMixture":
        """Pointwise product; exponents add."""
        c = np.multiply.outer(self.coeffs, other.coeffs).ravel()
        w = np.add.outer(self.exponents, other.exponents).ravel()
        return ExpMixture(c, w)

    # -- integral transforms -------------------------------------------------

    def tail_laplace(self, s: float, b: float = 0.0) -> float:
        """int_b^inf e^{-s y} f(y) dy; requires s > max Re w_k."""
        gap = s - self.exponents.real
        if np.any(gap <= 0):
            raise ValueError("tail integral diverges: s must exceed every exponent")
        vals = self.coeffs * _exp_clamped((self.exponents - s) * b) / (s - self.exponents)
        return float(_realize(np.sum(vals))[0])

    def tilted_tail(self, s: float) -> "ExpMixture":
        """T(b) = e^{s b} int_b^inf e^{-s y} f(y) dy as a mixture in b."""
        gap = s - self.exponents.real
        if np.any(gap <= 0):
            raise ValueError("tail integral diverges: s must exceed every exponent")
        return ExpMixture(self.coeffs / (s - self.exponents), self.exponents, merge=False)

    def convolve_from(self, other: "ExpMixture", b: float) -> "ExpMixture":
        """C(x) = int_b^x self(x - y) other(y) dy, valid for x >= b.

        Exponent sets of the two factors must be disjoint.
        """
        cf, wf = self.coeffs, self.exponents
        cg, wg = other.coeffs, other.exponents
        diff = np.subtract.outer(wg, wf)          # [g, f]
        if np.any(np.abs(diff) < EXP_GAP_TOL):
            raise ValueError("convolution factors share an exponent")
        ratio = np.multiply.outer(cg, cf) / diff  # cg_j * cf_k / (wg_j - wf_k)
        # term along e^{wg_j x}
        c_g = np.sum(ratio, axis=1)
        # term along e^{wf_k x}, coefficient carries e^{(wg_j - wf_k) b}
        c_f = -np.sum(ratio * _exp_clamped(diff * b), axis=0)
        return ExpMixture(
            np.concatenate([c_g, c_f]),
            np.concatenate([wg, wf]),
        )

    # -- misc ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        parts = [f"({c:.6g})e^({w:.6g}x)" for c, w in zip(self.coeffs, self.exponents)]
        return "ExpMixture[" + " + ".join(parts) + "]"

    def dump_csv(self) -> str:
        """Debug dump: columns re_coeff, im_coeff, re_exp, im_exp."""
        lines = ["re_coeff,im_coeff,re_exp,im_exp"]
        for c, w in zip(self.coeffs, self.exponents):
            lines.append(f"{c.real:.17g},{c.imag:.17g},{w.real:.17g},{w.imag:.17g}")
        return "\n".join(lines) + "\n"


class LinearPlusMixture:
    """slope * x + mixture(x); carrier for antiderivatives of mixtures with
    a constant term (only Zbar needs it)."""

    __slots__ = ("slope", "mixture")

    def __init__(self, slope: float, mixture: ExpMixture):
        self.slope = slope
        self.mixture = mixture

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        return self.slope * x + self.mixture(x)


def _merge_terms(c: np.ndarray, w: np.ndarray):
    """Sum coefficients of exponents closer than EXP_GAP_TOL."""
    order = np.lexsort((w.imag, w.real))
    c, w = c[order], w[order]
    out_c = [c[0]]
    out_w = [w[0]]
    for ck, wk in zip(c[1:], w[1:]):
        if abs(wk - out_w[-1]) < EXP_GAP_TOL:
            out_c[-1] += ck
        else:
            out_c.append(ck)
            out_w.append(wk)
    return np.array(out_c), np.array(out_w)


def _realize(vals):
    vals = np.atleast_1d(vals)
    scale = np.maximum(np.abs(vals), 1.0)
    if np.any(np.abs(vals.imag) > IMAG_REL_TOL * scale):
        worst = np.max(np.abs(vals.imag) / scale)
        raise ArithmeticError(f"mixture evaluation has imaginary residue {worst:.3g}")
    return vals.real.copy()
