"""Scalar special functions used by the closed forms.

Branch convention: principal logarithm with arg in (-pi, pi]; Li_n has its
cut on [1, inf). On the cut the returned boundary value satisfies
Im Li_n(x) = -pi * log(x)**(n-1) / (n-1)!, which is what ``cmath.log`` gives
for n = 1 and what mpmath returns for every n.

Li_n is evaluated in three regions: the power series for |z| <= 0.5, the
inversion formula for |z| >= 2, and the expansion in log z in between. The
log expansion converges for |log z| < 2 pi, which holds on the whole annulus
0.5 < |z| < 2 (|log z| <= sqrt(log(2)**2 + pi**2) < 2 pi), so every z has a
route and no integration fallback is needed.

A ``Precision`` with ``digits`` set switches zeta and Li_n to mpmath at that
many significant digits and returns mpmath numbers; callers summing large
alternating combinations use it under a matching ``mpmath.workdps``.
"""

import cmath
import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial
from typing import List, Optional, Tuple

import mpmath

logger = logging.getLogger(__name__)

_SERIES_RADIUS = 0.5
_INVERSION_RADIUS = 2.0


@dataclass(frozen=True)
class Precision:
    target_abs_error: float = 1e-15
    max_terms: int = 10_000
    digits: int = 0

    def __post_init__(self) -> None:
        if not self.target_abs_error > 0:
            raise ValueError("target_abs_error must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be at least 1")
        if self.digits < 0:
            raise ValueError("digits must be nonnegative")


DEFAULT_PRECISION = Precision()

_bernoulli_lock = threading.Lock()
_bernoulli_table: List[Fraction] = [Fraction(1)]


def bernoulli(j: int) -> Fraction:
    """Bernoulli number B_j with B_1 = -1/2."""
    if j < 0:
        raise ValueError("Bernoulli index must be nonnegative")
    if j >= 3 and j % 2 == 1:
        return Fraction(0)
    with _bernoulli_lock:
        table = _bernoulli_table
        for m in range(len(table), j + 1):
            total = sum((comb(m + 1, k) * table[k] for k in range(m)), Fraction(0))
            table.append(-total / (m + 1))
        return table[j]


def bernoulli_poly(n: int, x: complex) -> complex:
    """Bernoulli polynomial B_n(x) = sum_k C(n,k) B_k x^(n-k)."""
    total = 0j
    for k in range(n + 1):
        b = bernoulli(k)
        if b:
            total += comb(n, k) * float(b) * x ** (n - k)
    return total


@lru_cache(maxsize=None)
def harmonic(n: int) -> Fraction:
    return sum((Fraction(1, k) for k in range(1, n + 1)), Fraction(0))


def _alternating_sum(term, terms: int) -> float:
    """Cohen-Villegas-Zagier acceleration of sum_{k>=0} (-1)^k term(k)."""
    d = (3 + math.sqrt(8)) ** terms
    d = (d + 1 / d) / 2
    b = -1.0
    c = -d
    s = 0.0
    for k in range(terms):
        c = b - c
        s += c * term(k)
        b = (k + terms) * (k - terms) * b / ((k + 0.5) * (k + 1))
    return s / d


def _acceleration_terms(prec: Precision) -> int:
    # error of the accelerated sum decays like (3 + sqrt 8)^-terms
    needed = math.ceil(math.log(4 / prec.target_abs_error) / math.log(3 + math.sqrt(8)))
    return max(4, min(needed + 2, prec.max_terms))


def zeta(k: int, prec: Optional[Precision] = None) -> float:
    """Riemann zeta at an integer k >= 2; an mpf when ``prec.digits`` is set."""
    if k < 2:
        raise ValueError(f"zeta is only provided for integers k >= 2, got {k}")
    prec = prec or DEFAULT_PRECISION
    if prec.digits:
        with mpmath.workdps(prec.digits):
            return +mpmath.zeta(k)
    if prec == DEFAULT_PRECISION:
        return _zeta_cached(k)
    return _zeta_uncached(k, prec)


@lru_cache(maxsize=256)
def _zeta_cached(k: int) -> float:
    return _zeta_uncached(k, DEFAULT_PRECISION)


def _zeta_uncached(k: int, prec: Precision) -> float:
    if k % 2 == 0:
        m = k // 2
        exact = (-1) ** (m + 1) * bernoulli(k) / (2 * factorial(k))
        return float(exact) * (2 * math.pi) ** k
    if k > 60:
        return 1.0 + 2.0 ** -k + 3.0 ** -k
    eta = _alternating_sum(lambda j: (j + 1.0) ** -k, _acceleration_terms(prec))
    return eta / (1 - 2.0 ** (1 - k))


def _zeta_at(s: int) -> float:
    """zeta at any integer s != 1, negative values via Bernoulli numbers."""
    if s >= 2:
        return zeta(s)
    if s == 0:
        return -0.5
    m = -s
    return float(-bernoulli(m + 1) / (m + 1))


def dirichlet_beta(s: int, prec: Optional[Precision] = None) -> float:
    """L(chi_-4, s) = sum_{k>=0} (-1)^k / (2k+1)^s."""
    if s < 1:
        raise ValueError(f"dirichlet_beta is only provided for s >= 1, got {s}")
    if s == 1:
        return math.pi / 4
    prec = prec or DEFAULT_PRECISION
    return _alternating_sum(lambda j: (2.0 * j + 1.0) ** -s, _acceleration_terms(prec))


def _positive_zero(value: complex) -> complex:
    """Replace a signed-zero imaginary part by +0.0."""
    if value.imag == 0:
        return complex(value.real, 0.0)
    return value


def li_with_flag(n: int, z: complex, prec: Optional[Precision] = None) -> Tuple[complex, bool]:
    """Polylogarithm Li_n(z) and whether z lies on the branch cut (1, inf)."""
    if n < 1:
        raise ValueError(f"Polylogarithm order must be >= 1, got {n}")
    prec = prec or DEFAULT_PRECISION
    if prec.digits:
        return _li_mpmath(n, z, prec.digits)
    z = _positive_zero(complex(z))
    on_cut = z.imag == 0 and z.real > 1
    if n == 1:
        if z == 1:
            raise ValueError("Li_1 has a pole at z = 1")
        return -cmath.log(_positive_zero(complex(1 - z.real, -z.imag))), on_cut
    if z == 0:
        return 0j, False
    if z == 1:
        return complex(zeta(n, prec)), False
    radius = abs(z)
    if radius <= _SERIES_RADIUS:
        return _li_series(n, z, prec), on_cut
    if radius >= _INVERSION_RADIUS:
        return _li_inversion(n, z, prec), on_cut
    return _li_log_series(n, z, prec), on_cut


def li(n: int, z: complex, prec: Optional[Precision] = None) -> complex:
    return li_with_flag(n, z, prec)[0]


def _li_mpmath(n: int, z, digits: int) -> Tuple[mpmath.mpc, bool]:
    with mpmath.workdps(digits):
        w = mpmath.mpc(z)
        on_cut = w.imag == 0 and w.real > 1
        if n == 1 and w == 1:
            raise ValueError("Li_1 has a pole at z = 1")
        return mpmath.polylog(n, w), on_cut


def _li_series(n: int, z: complex, prec: Precision) -> complex:
    total = 0j
    power = z
    for k in range(1, prec.max_terms + 1):
        term = power / k ** n
        total += term
        if abs(term) < prec.target_abs_error * 1e-2:
            break
        power *= z
    return total


def _li_inversion(n: int, z: complex, prec: Precision) -> complex:
    # Li_n(z) + (-1)^n Li_n(1/z) = -(2 pi i)^n / n! * B_n(1/2 + log(-z) / (2 pi i))
    log_minus_z = cmath.log(_positive_zero(-z))
    two_pi_i = 2j * math.pi
    shifted = 0.5 + log_minus_z / two_pi_i
    reflected = _li_series(n, 1 / z, prec)
    return -((-1) ** n) * reflected - two_pi_i ** n / factorial(n) * bernoulli_poly(n, shifted)


def _li_log_series(n: int, z: complex, prec: Precision) -> complex:
    # Li_n(e^mu) = sum_{k != n-1} zeta(n-k) mu^k / k!
    #             + mu^(n-1) / (n-1)! * (H_{n-1} - log(-mu)),  |mu| < 2 pi
    mu = cmath.log(z)
    log_minus_mu = cmath.log(_positive_zero(-mu))
    total = mu ** (n - 1) / factorial(n - 1) * (float(harmonic(n - 1)) - log_minus_mu)
    power = 1 + 0j
    tail_small = 0
    for k in range(prec.max_terms):
        if k > 0:
            power = power * mu / k
        if k == n - 1:
            continue
        z_value = _zeta_at(n - k)
        if z_value == 0:
            continue
        term = z_value * power
        total += term
        if k > n:
            if abs(term) < prec.target_abs_error * 1e-2 * max(1.0, abs(total)):
                tail_small += 1
                if tail_small >= 2:
                    break
            else:
                tail_small = 0
    return total


def bloch_wigner(z: complex) -> float:
    """D(z) = Im Li_2(z) + arg(1 - z) log|z|; zero on the real line."""
    z = complex(z)
    if z.imag == 0:
        return 0.0
    return li(2, z).imag + cmath.phase(1 - z) * math.log(abs(z))


def _zagier_sum(n: int, z: complex, prec: Precision) -> complex:
    log_abs = math.log(abs(z))
    total = 0j
    for j in range(n):
        b = bernoulli(j)
        if not b:
            continue
        weight = 2 ** j * float(b) / factorial(j) * log_abs ** j
        if weight == 0 and j > 0:
            continue
        total += weight * li(n - j, z, prec)
    return total


def zagier_L(n: int, z: complex, prec: Optional[Precision] = None) -> float:
    """Zagier's single-valued polylogarithm; Re for odd n, Im for even n."""
    if n < 2:
        raise ValueError(f"zagier_L requires n >= 2, got {n}")
    prec = prec or DEFAULT_PRECISION
    z = _positive_zero(complex(z))
    if z == 0:
        return 0.0
    if z == 1:
        return zeta(n, prec) if n % 2 else 0.0
    if n % 2 == 0:
        if z.imag == 0:
            return 0.0
        return _zagier_sum(n, z, prec).imag
    return _zagier_sum(n, z, prec).real


def zagier_Lhat(n: int, z: complex, prec: Optional[Precision] = None) -> complex:
    """Variant of :func:`zagier_L` returning Re for odd n and i*Im for even n."""
    value = zagier_L(n, z, prec)
    return complex(value, 0.0) if n % 2 else complex(0.0, value)
