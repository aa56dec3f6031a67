"""Spectrally one-sided Levy risk models with rational Laplace exponents.

The jump part is a finite mixture of Erlang phases (k = 1 gives an
exponential phase), so every Laplace exponent is a rational function and
all scale functions downstream are finite exponential mixtures.

Conventions:
* finite-activity form with the small-jump compensator folded into the
  total drift, so psi(lam) = c*lam + sigma^2 lam^2/2 - kappa(1 - E[e^{-lam J}]);
* for a spectrally positive surplus process the stored drift is that of
  the surplus itself, and all exponents refer to the dual pair (X, Y)
  with X = -(surplus - delta*t) and Y = X - delta*t.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SIDE_SN = "spectrally-negative"
SIDE_SP = "spectrally-positive"

ROOT_ABS_TOL = 1e-12       # |psi - q| at an accepted root
ROOT_GAP_TOL = 1e-8        # closer than this => MultipleRootError
IMAG_TRUNC_TOL = 1e-10     # imaginary parts below this are dropped
MAX_NEWTON_ITER = 200


class AssumptionViolated(ValueError):
    """A standing model assumption fails for the given parameters."""


class MultipleRootError(ArithmeticError):
    """Two roots of psi - q closer than the resolvable gap."""


@dataclass(frozen=True)
class JumpTerm:
    p: float
    rho: float
    k: int = 1


@dataclass(frozen=True)
class JumpMixture:
    """Compound-Poisson jump part: arrival rate kappa, Erlang-mixture sizes."""

    kappa: float
    terms: tuple[JumpTerm, ...] = ()

    def __post_init__(self):
        if self.kappa < 0:
            raise AssumptionViolated(f"kappa must be >= 0, got {self.kappa}")
        if self.kappa == 0:
            if self.terms:
                raise AssumptionViolated("kappa = 0 requires an empty term list")
            return
        if not self.terms:
            raise AssumptionViolated("kappa > 0 requires at least one jump term")
        psum = 0.0
        prev_rho = 0.0
        for t in self.terms:
            if not (t.p > 0):
                raise AssumptionViolated(f"weights must be positive, got {t.p}")
            if not (t.rho > 0):
                raise AssumptionViolated(f"rates must be positive, got {t.rho}")
            if not (isinstance(t.k, (int, np.integer)) and t.k >= 1):
                raise AssumptionViolated(f"Erlang shape must be a positive integer, got {t.k}")
            if t.rho <= prev_rho:
                raise AssumptionViolated("rates must be strictly increasing and distinct")
            prev_rho = t.rho
            psum += t.p
        if abs(psum - 1.0) > 1e-12:
            raise AssumptionViolated(f"weights must sum to 1 within 1e-12, got {psum}")

    @property
    def hyperexponential(self) -> bool:
        return all(t.k == 1 for t in self.terms)

    def mean(self) -> float:
        return sum(t.p * t.k / t.rho for t in self.terms)

    def mgf_neg(self, lam):
        """E[e^{-lam J}] = sum p_i (rho_i/(rho_i+lam))^{k_i}; poles at lam = -rho_i."""
        lam = np.asarray(lam) if np.ndim(lam) else lam
        out = 0.0
        for t in self.terms:
            out = out + t.p * (t.rho / (t.rho + lam)) ** t.k
        return out

    def mgf_neg_d1(self, lam):
        """d/dlam E[e^{-lam J}]."""
        out = 0.0
        for t in self.terms:
            out = out - t.p * t.k * t.rho**t.k / (t.rho + lam) ** (t.k + 1)
        return out


@dataclass(frozen=True)
class ModelSpec:
    """A spectrally one-sided model with refraction rate delta and discount q.

    ``drift`` is the total drift of the surplus process itself: the SN
    process X for side = spectrally-negative, the SP process for
    side = spectrally-positive.
    """

    drift: float
    sigma: float
    jumps: JumpMixture
    delta: float
    q: float
    side: str = SIDE_SN

    def __post_init__(self):
        if self.side not in (SIDE_SN, SIDE_SP):
            raise AssumptionViolated(f"unknown side {self.side!r}")
        if not (self.sigma >= 0):
            raise AssumptionViolated("sigma must be >= 0")
        if 0 < self.sigma < 1e-6:
            # the Gaussian root sits near -2c/sigma^2, far outside the range
            # where double-precision scale functions mean anything
            raise AssumptionViolated("sigma must be 0 or >= 1e-6")
        if not (self.delta > 0):
            raise AssumptionViolated("delta must be > 0")
        if not (self.q > 0):
            raise AssumptionViolated("q must be > 0")
        if self.sigma == 0 and self.jumps.kappa == 0:
            raise AssumptionViolated("monotone paths: need sigma > 0 or kappa > 0")
        if self.side == SIDE_SN:
            if self.sigma == 0:
                if not (self.drift > 0):
                    raise AssumptionViolated("bounded variation requires drift c > 0")
                if not (self.delta < self.drift):
                    raise AssumptionViolated(
                        f"bounded variation requires delta < c (delta={self.delta}, c={self.drift})"
                    )
        else:
            # Y = -(surplus) must be spectrally negative and non-monotone.
            if self.sigma == 0 and not (-self.drift > 0):
                raise AssumptionViolated(
                    "spectrally positive side with sigma = 0 requires drift < 0"
                )

    @property
    def c_x(self) -> float:
        """Drift of the SN process X whose exponent is psi."""
        if self.side == SIDE_SN:
            return self.drift
        return self.delta - self.drift

    @property
    def c_y(self) -> float:
        """Drift of Y = X - delta*t."""
        return self.c_x - self.delta


@dataclass(frozen=True)
class RootSet:
    """All simple roots of psi = q and psi_Y = q for one model.

    ``roots_x`` / ``roots_y`` contain every root (complex128), sorted by
    descending real part, so roots_x[0] = Phi(q) and roots_y[0] = varphi(q).
    """

    phi_q: float
    varphi_q: float
    roots_x: np.ndarray
    roots_y: np.ndarray
    negative_roots_x: tuple = field(default=())
    negative_roots_y: tuple = field(default=())


def laplace_exponent(model: ModelSpec, lam):
    """psi(lam) for the SN process X (the dual of the surplus when side = SP)."""
    _check_not_pole(model, lam)
    j = model.jumps
    return model.c_x * lam + 0.5 * model.sigma**2 * lam * lam - j.kappa * (1.0 - j.mgf_neg(lam))


def laplace_exponent_prime(model: ModelSpec, lam):
    _check_not_pole(model, lam)
    j = model.jumps
    return model.c_x + model.sigma**2 * lam + j.kappa * j.mgf_neg_d1(lam)


def laplace_exponent_refracted(model: ModelSpec, theta):
    """psi_Y(theta) = psi(theta) - delta*theta."""
    return laplace_exponent(model, theta) - model.delta * theta


def _check_not_pole(model: ModelSpec, lam) -> None:
    for t in model.jumps.terms:
        if np.any(np.abs(lam + t.rho) < 1e-300):
            raise ZeroDivisionError(f"Laplace exponent pole at lambda = {-t.rho}")


def classify_variation(model: ModelSpec) -> str:
    """'unbounded' iff sigma > 0; asserts delta < c for bounded-variation SN paths."""
    if model.sigma > 0:
        return "unbounded"
    # Constructor already enforces the assumptions; re-raise for clarity on
    # hand-built instances that bypassed validation.
    if model.side == SIDE_SN and not (model.delta < model.drift):
        raise AssumptionViolated("bounded variation requires delta < c")
    return "bounded"


def _numerator_poly(model: ModelSpec, delta_shift: float) -> np.ndarray:
    """Coefficients (highest degree first) of the numerator of psi(lam)-q
    after the drift shift ``delta_shift`` (0 for X, delta for Y)."""
    j = model.jumps
    c = model.c_x - delta_shift
    # quadratic part: sigma^2/2 lam^2 + c lam - (kappa + q)
    quad = np.array([0.5 * model.sigma**2, c, -(j.kappa + model.q)])
    quad = np.trim_zeros(quad, "f")
    denom = np.array([1.0])
    for t in j.terms:
        denom = np.polymul(denom, np.polynomial.polynomial.polyfromroots([-t.rho] * t.k)[::-1])
    num = np.polymul(quad, denom)
    for i, t in enumerate(j.terms):
        other = np.array([1.0])
        for jdx, t2 in enumerate(j.terms):
            if jdx == i:
                continue
            other = np.polymul(
                other, np.polynomial.polynomial.polyfromroots([-t2.rho] * t2.k)[::-1]
            )
        num = np.polyadd(num, j.kappa * t.p * t.rho**t.k * other)
    return num


def _positive_root(model: ModelSpec, delta_shift: float) -> float:
    """Safeguarded Newton for the largest root of psi - delta_shift*lam = q."""
    q = model.q

    def f(lam):
        return laplace_exponent(model, lam) - delta_shift * lam - q

    def fp(lam):
        return laplace_exponent_prime(model, lam) - delta_shift

    hi = 1.0
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2.0
    else:
        raise ArithmeticError("failed to bracket the positive root")
    lo = 0.0
    x = hi
    for _ in range(MAX_NEWTON_ITER):
        fx = f(x)
        if abs(fx) < ROOT_ABS_TOL * max(1.0, q):
            return x
        if fx > 0:
            hi = x
        else:
            lo = x
        step = fx / fp(x)
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x


def _bisect_root(f, lo: float, hi: float) -> float:
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ArithmeticError(f"no sign change on [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0 or hi - lo < 1e-15 * max(1.0, abs(mid)):
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _negative_roots_hyperexp(model: ModelSpec, delta_shift: float, n_expected: int) -> list:
    """One real root per inter-pole interval; extra root beyond the last pole
    when sigma > 0."""
    q = model.q

    def f(lam):
        return laplace_exponent(model, lam) - delta_shift * lam - q

    rhos = [t.rho for t in model.jumps.terms]
    roots = []
    eps = 1e-13
    edges = [0.0] + [-r for r in rhos]
    for left, right in zip(edges[1:], edges[:-1]):
        a = left + max(abs(left), 1.0) * eps
        b = right - max(abs(right), 1.0) * eps
        roots.append(_bisect_root(f, a, b))
    if model.sigma > 0:
        right = edges[-1]
        b = right - max(abs(right), 1.0) * eps
        span = 1.0
        a = right - span
        for _ in range(200):
            if f(a) > 0:
                break
            span *= 2.0
            a = right - span
        roots.append(_bisect_root(f, a, b))
    if len(roots) != n_expected:
        raise ArithmeticError("interlacing produced the wrong root count")
    return [complex(r) for r in roots]


def _polish_root(model: ModelSpec, delta_shift: float, z: complex) -> complex:
    """Newton polish in the complex plane; the companion matrix is only a seed."""
    j = model.jumps
    q = model.q
    c = model.c_x - delta_shift
    for _ in range(50):
        num = 0.0 + 0.0j
        d1 = 0.0 + 0.0j
        for t in j.terms:
            num += t.p * (t.rho / (t.rho + z)) ** t.k
            d1 -= t.p * t.k * t.rho**t.k / (t.rho + z) ** (t.k + 1)
        fz = c * z + 0.5 * model.sigma**2 * z * z - j.kappa * (1.0 - num) - q
        fpz = c + model.sigma**2 * z + j.kappa * d1
        step = fz / fpz
        z = z - step
        if abs(fz) < ROOT_ABS_TOL * max(1.0, q):
            break
    return z


def _all_roots(model: ModelSpec, delta_shift: float) -> np.ndarray:
    poly = _numerator_poly(model, delta_shift)
    degree = len(poly) - 1
    top = _positive_root(model, delta_shift)
    if degree == 1:
        roots = [complex(top)]
    elif model.jumps.hyperexponential:
        roots = [complex(top)] + _negative_roots_hyperexp(model, delta_shift, degree - 1)
    else:
        raw = np.roots(poly)
        raw = sorted(raw, key=lambda z: z.real, reverse=True)
        roots = [complex(top)]
        for z in raw[1:]:
            roots.append(_polish_root(model, delta_shift, complex(z)))
    out = np.array(roots, dtype=np.complex128)
    out.imag[np.abs(out.imag) < IMAG_TRUNC_TOL] = 0.0
    order = np.argsort(-out.real)
    out = out[order]
    check_roots_distinct(out)
    if len(out) != degree:
        raise ArithmeticError("root count does not match numerator degree")
    return out


def check_roots_distinct(roots: np.ndarray) -> None:
    """Partial fractions divide by psi'(theta_k); near-multiple roots are an
    error, never a silent perturbation."""
    for i in range(len(roots)):
        for k in range(i + 1, len(roots)):
            if abs(roots[i] - roots[k]) < ROOT_GAP_TOL:
                raise MultipleRootError(
                    f"roots {roots[i]} and {roots[k]} closer than {ROOT_GAP_TOL}"
                )


def solve_roots(model: ModelSpec) -> RootSet:
    """Phi(q), varphi(q) and every root of psi = q and psi_Y = q."""
    roots_x = _all_roots(model, 0.0)
    roots_y = _all_roots(model, model.delta)
    phi = roots_x[0].real
    varphi = roots_y[0].real
    if not (varphi > phi > 0):
        raise ArithmeticError(f"expected varphi(q) > Phi(q) > 0, got {varphi}, {phi}")
    return RootSet(
        phi_q=phi,
        varphi_q=varphi,
        roots_x=roots_x,
        roots_y=roots_y,
        negative_roots_x=tuple(z for z in roots_x if z.real < 0),
        negative_roots_y=tuple(z for z in roots_y if z.real < 0),
    )


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

def model_from_dict(d: dict) -> ModelSpec:
    jumps = d.get("jumps", {"kappa": 0.0, "terms": []})
    terms = tuple(
        JumpTerm(p=float(t["p"]), rho=float(t["rho"]), k=int(t.get("k", 1)))
        for t in jumps.get("terms", [])
    )
    return ModelSpec(
        drift=float(d["drift"]),
        sigma=float(d["sigma"]),
        jumps=JumpMixture(kappa=float(jumps.get("kappa", 0.0)), terms=terms),
        delta=float(d["delta"]),
        q=float(d.get("q", 0.05)),
        side=d.get("side", SIDE_SN),
    )


def model_to_dict(model: ModelSpec) -> dict:
    return {
        "side": model.side,
        "drift": model.drift,
        "sigma": model.sigma,
        "delta": model.delta,
        "q": model.q,
        "jumps": {
            "kappa": model.jumps.kappa,
            "terms": [{"p": t.p, "rho": t.rho, "k": t.k} for t in model.jumps.terms],
        },
    }


def load_model(path: str) -> ModelSpec:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def dump_model(model: ModelSpec) -> str:
    return json.dumps(model_to_dict(model), indent=2)
