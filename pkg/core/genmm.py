"""Generalized Mahler measures m(f_1, ..., f_r).

For the three one-variable families handled here (1 - x, (1 - x)/(1 + x) and
1 + x - 1/x) |P(e(theta))| depends monotonically on a folded statistic h of
theta, so the r-dimensional integral of the maximum collapses to a 1-D
expectation over the largest of r independent draws of h.

Two conventions for phi appear: the golden relations use (1 + sqrt 5)/2,
while the golden family here uses phi = (sqrt 5 - 1)/2 so that
m(1 + x - 1/x) = -log(phi).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from scipy import integrate, optimize

from core.laurent import LaurentPolynomial, RationalFunction, parse
from core.measure import (
    MeasureResult,
    QuadratureConfig,
    mahler_jensen_reduced,
    mahler_measure,
    torus_average,
)
from core.special import Precision, li, zeta

logger = logging.getLogger(__name__)

FAMILIES = ("one_minus_x", "ratio", "golden")
FAMILY_ALIASES = {"1mx": "one_minus_x", "one_minus_x": "one_minus_x", "ratio": "ratio", "golden": "golden"}
PROFILE_CHECKS = 100
PROFILE_TOLERANCE = 1e-10
SUP_GRID = 256
SUP_MAX_POINTS = 1 << 24
GOLDEN_REALNESS_TOLERANCE = 1e-10

TorusFunction = Union[LaurentPolynomial, RationalFunction]


def canonical_family(name: str) -> str:
    try:
        return FAMILY_ALIASES[name]
    except KeyError:
        raise ValueError(f"Unknown family '{name}'; expected one of {sorted(FAMILY_ALIASES)}") from None


@dataclass(frozen=True)
class FamilySpec:
    family: str
    n: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", canonical_family(self.family))
        if self.n < 1:
            raise ValueError("A family needs at least one function")

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family, "n": self.n}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Optional["FamilySpec"]:
        try:
            return cls(family=str(data["family"]), n=int(data["n"]))
        except (KeyError, TypeError, ValueError):
            return None


@dataclass(frozen=True)
class MonotoneProfile:
    name: str
    reference: TorusFunction
    fold_map: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    quantile: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray]
    direction: str = "increasing"
    support: Tuple[float, float] = (0.0, 0.5)

    def __post_init__(self) -> None:
        if self.direction not in ("increasing", "decreasing"):
            raise ValueError(f"Unknown direction '{self.direction}'")

    def validate(self, seed: int = 0) -> None:
        """Check g(h(theta)) against |P(e(theta))| at random angles."""
        theta = np.random.default_rng(seed).random(PROFILE_CHECKS)
        expected = np.abs(self.reference.evaluate_on_torus(theta[:, None]))
        actual = self.g(self.fold_map(theta))
        mismatch = np.abs(actual - expected) > PROFILE_TOLERANCE * np.maximum(1.0, expected)
        if np.any(mismatch):
            worst = float(theta[np.argmax(np.abs(actual - expected))])
            raise ValueError(f"Profile '{self.name}' does not match |P| (e.g. at theta={worst:.6f})")
        grid = np.linspace(self.support[0], self.support[1], 257)
        values = self.cdf(grid)
        if np.any(np.diff(values) < 0) or abs(values[0]) > 1e-12 or abs(values[-1] - 1) > 1e-12:
            raise ValueError(f"Profile '{self.name}' has an invalid CDF on {self.support}")


def _fold_half(theta: np.ndarray) -> np.ndarray:
    t = np.mod(theta, 1.0)
    return np.minimum(t, 1.0 - t)


def family_profile(family: str) -> MonotoneProfile:
    family = canonical_family(family)
    if family == "one_minus_x":
        return MonotoneProfile(
            name=family,
            reference=parse("1-x"),
            fold_map=_fold_half,
            cdf=lambda t: 2.0 * np.asarray(t),
            quantile=lambda v: np.asarray(v) / 2.0,
            g=lambda h: 2.0 * np.sin(np.pi * np.asarray(h)),
        )
    if family == "ratio":
        return MonotoneProfile(
            name=family,
            reference=RationalFunction.parse("1-x", "1+x"),
            fold_map=_fold_half,
            cdf=lambda t: 2.0 * np.asarray(t),
            quantile=lambda v: np.asarray(v) / 2.0,
            g=lambda h: np.abs(np.tan(np.pi * np.asarray(h))),
        )
    return MonotoneProfile(
        name=family,
        reference=parse("1+x-x^-1"),
        fold_map=lambda theta: np.abs(np.sin(2.0 * np.pi * np.asarray(theta))),
        cdf=lambda u: 2.0 / np.pi * np.arcsin(np.clip(np.asarray(u), 0.0, 1.0)),
        quantile=lambda v: np.sin(np.pi * np.asarray(v) / 2.0),
        g=lambda u: np.sqrt(1.0 + 4.0 * np.asarray(u) ** 2),
        support=(0.0, 1.0),
    )


def family_polynomials(family: str, n: int) -> List[TorusFunction]:
    """The functions P(x_1), ..., P(x_n) of a family."""
    family = canonical_family(family)
    if n < 1:
        raise ValueError("A family needs at least one function")
    names = [f"x{k}" for k in range(1, n + 1)]
    if family == "one_minus_x":
        return [parse(f"1-{v}") for v in names]
    if family == "ratio":
        return [RationalFunction.parse(f"1-{v}", f"1+{v}") for v in names]
    return [parse(f"1+{v}-{v}^-1") for v in names]


def gmm_direct(
    polys: Sequence[TorusFunction], cfg: Optional[QuadratureConfig] = None
) -> MeasureResult:
    """Torus average of max_i log|f_i|."""
    if not polys:
        raise ValueError("gmm_direct needs at least one function")
    return torus_average(list(polys), cfg or QuadratureConfig(), "direct")


def gmm_order_stat(
    profile: MonotoneProfile, n: int, cfg: Optional[QuadratureConfig] = None
) -> MeasureResult:
    """E[log g(max of n draws)] as a 1-D integral over the CDF level v."""
    if n < 1:
        raise ValueError("n must be at least 1")
    cfg = cfg or QuadratureConfig()
    profile.validate(cfg.seed)

    if profile.direction == "increasing":
        def weight(v: float) -> float:
            return n * v ** (n - 1)
    else:
        def weight(v: float) -> float:
            return n * (1.0 - v) ** (n - 1)

    def integrand(v: float) -> float:
        level = float(profile.g(profile.quantile(v)))
        if level <= 0.0 or not math.isfinite(level):
            return 0.0
        return math.log(level) * weight(v)

    value, error, info = integrate.quad(
        integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=400, full_output=True
    )
    logger.debug("Order statistic for %s, n=%d: %.15f +/- %.1e", profile.name, n, value, error)
    return MeasureResult(
        value=float(value),
        error_estimate=float(abs(error)),
        method="order-stat",
        samples_used=max(1, int(info.get("neval", 1))),
        metadata={"family": profile.name, "n": n, "seed": cfg.seed},
    )


def gmm_via_auxiliary(
    f1: TorusFunction, f2: TorusFunction, cfg: Optional[QuadratureConfig] = None
) -> MeasureResult:
    """m(f1 + z f2) with a fresh variable z, which equals m(f1, f2)."""
    cfg = cfg or QuadratureConfig()
    one = LaurentPolynomial.constant(1)
    parts = [f if isinstance(f, RationalFunction) else RationalFunction(f, one) for f in (f1, f2)]
    used = set(parts[0].variables) | set(parts[1].variables)
    aux = "z"
    while aux in used:
        aux += "_"
    z = LaurentPolynomial.variable(aux)
    numerator = parts[0].numerator * parts[1].denominator + z * parts[1].numerator * parts[0].denominator
    denominator = parts[0].denominator * parts[1].denominator
    top = mahler_jensen_reduced(numerator, aux, cfg)
    bottom = mahler_measure(denominator, cfg)
    return MeasureResult(
        value=top.value - bottom.value,
        error_estimate=top.error_estimate + bottom.error_estimate,
        method=top.method,
        samples_used=top.samples_used + bottom.samples_used,
        metadata={**top.metadata, "auxiliary": aux},
    )


# closed forms ------------------------------------------------------------------

ZetaTerm = Tuple[Fraction, int, int]  # coefficient * pi**power * zeta(argument)


def _working_digits(magnitudes: Sequence[Fraction]) -> int:
    largest = max((abs(m) for m in magnitudes), default=Fraction(1))
    if largest < 1:
        return 30
    return 30 + len(str(largest.numerator // largest.denominator))


def _evaluate_zeta_terms(terms: Sequence[ZetaTerm]) -> float:
    """Sum the terms at a working precision that absorbs their cancellation."""
    if not terms:
        return 0.0
    prec = Precision(digits=_working_digits([c for c, _, _ in terms]))
    with mpmath.workdps(prec.digits):
        total = mpmath.mpf(0)
        for coeff, pi_power, argument in terms:
            total += mpmath.mpf(coeff.numerator) / coeff.denominator * mpmath.pi ** pi_power * zeta(argument, prec)
        return float(total)


def _odd_terms(n: int, weight: Callable[[int], int]) -> List[ZetaTerm]:
    # n = 2m - 1
    m = (n + 1) // 2
    return [
        (
            Fraction(factorial(n) * (-1) ** j * weight(j), factorial(n - 2 * j) * 4 ** j),
            -2 * j,
            2 * j + 1,
        )
        for j in range(1, m)
    ]


def _even_terms(n: int, weight: Callable[[int], int]) -> List[ZetaTerm]:
    m = n // 2
    return [
        (
            Fraction(factorial(n) * (-1) ** j * weight(j), factorial(n - 2 * j) * 4 ** j),
            -2 * j,
            2 * j + 1,
        )
        for j in range(1, m + 1)
    ]


def one_minus_x_terms(n: int) -> List[ZetaTerm]:
    if n < 1:
        raise ValueError("n must be at least 1")
    weight = lambda j: 1 - 4 ** j
    if n % 2:
        return _odd_terms(n, weight)
    m = n // 2
    head = (Fraction((-1) ** (m + 1) * factorial(n)), -n, n + 1)
    return [head] + _even_terms(n, weight)


def ratio_terms(n: int) -> List[ZetaTerm]:
    if n < 1:
        raise ValueError("n must be at least 1")
    weight = lambda j: 1 - 2 ** (2 * j + 1)
    if n % 2:
        return _odd_terms(n, weight)
    m = n // 2
    head = (Fraction((-1) ** m * factorial(n) * (1 - 2 ** (n + 1)), 4 ** m), -n, n + 1)
    return [head] + _even_terms(n, weight)


def closed_one_minus_x(n: int) -> float:
    """m(1 - x_1, ..., 1 - x_n) as a finite combination of odd zeta values."""
    return _evaluate_zeta_terms(one_minus_x_terms(n))


def closed_ratio(n: int) -> float:
    """m((1 - x_1)/(1 + x_1), ..., (1 - x_n)/(1 + x_n))."""
    return _evaluate_zeta_terms(ratio_terms(n))


def limit_series(m: int) -> float:
    """sum_{j=1}^{m-1} (-1)^j C(2m-1, 2j) (2j)! (1 - 4^j) / (2 pi)^(2j) zeta(2j + 1)."""
    if m < 1:
        raise ValueError("m must be at least 1")
    terms = [
        (Fraction((-1) ** j * comb(2 * m - 1, 2 * j) * factorial(2 * j) * (1 - 4 ** j), 4 ** j), -2 * j, 2 * j + 1)
        for j in range(1, m)
    ]
    return _evaluate_zeta_terms(terms)


def closed_golden(n: int) -> float:
    """m(1 + x_1 - 1/x_1, ..., 1 + x_n - 1/x_n) with phi = (sqrt 5 - 1)/2.

    Integrating log|1 + 2i sin(pi v / 2)| = -log(phi) + Re log(1 - phi^2 e^{i pi v})
    against n v^(n-1) by parts gives

        -log(phi) + sum_{k = 3, 5, ..., <= n+1} n! / ((n-k+1)! (i pi)^(k-1)) Li_k(-phi^2)
                  - n! / (i pi)^n Li_{n+1}(phi^2)                  (n even only)

    The even-weight terms of the same expansion carry odd powers of i pi and
    only feed the imaginary part, so the kept block must come out real; a
    residual of GOLDEN_REALNESS_TOLERANCE or more raises ArithmeticError.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    prec = Precision(digits=30 + len(str(factorial(n))))
    with mpmath.workdps(prec.digits):
        phi = (mpmath.sqrt(5) - 1) / 2
        r = phi ** 2
        i_pi = mpmath.mpc(0, mpmath.pi)
        block = mpmath.mpc(0)
        for k in range(3, n + 2, 2):
            block += factorial(n) / (factorial(n - k + 1) * i_pi ** (k - 1)) * li(k, -r, prec)
        if n % 2 == 0:
            block -= factorial(n) / i_pi ** n * li(n + 1, r, prec)
        residual = abs(block.imag)
        if residual >= GOLDEN_REALNESS_TOLERANCE:
            raise ArithmeticError(f"Golden closed form for n={n} has imaginary residual {float(residual):.2e}")
        return float(block.real - mpmath.log(phi))


def closed_form(family: str, n: int) -> float:
    family = canonical_family(family)
    if family == "one_minus_x":
        return closed_one_minus_x(n)
    if family == "ratio":
        return closed_ratio(n)
    return closed_golden(n)


# sup norm and the limit ------------------------------------------------------------


def sup_norm(p: LaurentPolynomial) -> Tuple[float, Tuple[float, ...]]:
    """Maximum of |P| on the torus and the maximizing angles (in turns)."""
    if p.is_zero:
        raise ValueError("sup_norm of the zero polynomial is undefined")
    variables = p.active_variables()
    if not variables:
        return abs(complex(p.constant_value())), ()
    dim = len(variables)
    per_dim = SUP_GRID if SUP_GRID ** dim <= SUP_MAX_POINTS else int(SUP_MAX_POINTS ** (1.0 / dim))
    axis = np.arange(per_dim) / per_dim
    best_value = -1.0
    best_point = np.zeros(dim)
    total = per_dim ** dim
    chunk = 1 << 18
    for start in range(0, total, chunk):
        index = np.arange(start, min(total, start + chunk))
        digits = np.stack([(index // per_dim ** k) % per_dim for k in range(dim)], axis=1)
        theta = axis[digits]
        values = np.abs(p.evaluate_on_torus(theta, variables))
        k = int(np.argmax(values))
        if values[k] > best_value:
            best_value = float(values[k])
            best_point = theta[k].copy()

    def negative(angles: np.ndarray) -> float:
        return -float(np.abs(p.evaluate_on_torus(angles[None, :], variables))[0])

    refined = optimize.minimize(
        negative, best_point, method="Powell", options={"xtol": 1e-12, "ftol": 1e-15}
    )
    if -refined.fun > best_value:
        best_value = float(-refined.fun)
        best_point = np.mod(refined.x, 1.0)
    logger.debug("sup |%s| = %.15f at %s", p, best_value, best_point)
    return best_value, tuple(float(t) for t in best_point)


def family_log_sup(family: str) -> float:
    family = canonical_family(family)
    if family == "ratio":
        return math.inf
    value, _ = sup_norm(family_profile(family).reference)
    return math.log(value)


def limit_table(family: str, max_n: int) -> List[Dict[str, Any]]:
    """Rows (n, value, log sup-norm, gap) for n = 1..max_n."""
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    log_sup = family_log_sup(family)
    rows = []
    for n in range(1, max_n + 1):
        value = closed_form(family, n)
        rows.append({"n": n, "value": value, "log_sup": log_sup, "gap": log_sup - value})
    return rows
