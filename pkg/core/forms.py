"""Regulator forms pulled back to parametrized paths and patches.

A coordinate at a parameter point is a :class:`Jet`: its value and its
derivatives along each patch direction. From a jet,

    d log|x|   -> Re(grad / x)
    d i arg x  -> i Im(grad / x)

and a wedge of as many 1-forms as there are patch directions is the
determinant of their coefficient rows.
"""

import cmath
import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from core.measure import IntegrationError
from core.quadrature import gauss_legendre
from core.special import bernoulli, bloch_wigner, zagier_Lhat

logger = logging.getLogger(__name__)

PATH_ORDER = 10
PATCH_ORDER = 8


@dataclass(frozen=True)
class Jet:
    value: complex
    grad: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    @property
    def dim(self) -> int:
        return len(self.grad)

    def log_abs(self) -> float:
        return math.log(abs(self.value))

    def dlog_abs(self) -> np.ndarray:
        return np.real(np.asarray(self.grad) / self.value).astype(complex)

    def d_i_arg(self) -> np.ndarray:
        return 1j * np.imag(np.asarray(self.grad) / self.value)

    def one_minus(self) -> "Jet":
        return Jet(1 - self.value, -np.asarray(self.grad))


def _check_nonzero(jets: Sequence[Jet]) -> None:
    for jet in jets:
        if jet.value == 0:
            raise ValueError("Regulator form evaluated at a zero coordinate")


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def alt(fn: Callable[..., complex], args: Sequence) -> complex:
    """Signed sum of ``fn`` over all orderings of ``args``."""
    total = 0j
    for perm in itertools.permutations(range(len(args))):
        total += _permutation_sign(perm) * fn(*[args[i] for i in perm])
    return total


def wedge(one_forms: Sequence[np.ndarray]) -> complex:
    """Coefficient of the top form built from exactly ``dim`` 1-forms."""
    if not one_forms:
        return 1.0 + 0j
    matrix = np.array([np.asarray(f, dtype=complex) for f in one_forms])
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(
            f"Cannot wedge {matrix.shape[0]} one-forms on a {matrix.shape[1]}-dimensional patch"
        )
    if matrix.shape[0] == 1:
        return complex(matrix[0, 0])
    if matrix.shape[0] == 2:
        return complex(matrix[0, 0] * matrix[1, 1] - matrix[0, 1] * matrix[1, 0])
    return complex(np.linalg.det(matrix))


def beta_kp(k: int, p: int) -> Fraction:
    """beta_{k,p} for k >= 0, p >= 1."""
    if k < 0 or p < 1:
        raise ValueError(f"beta_kp needs k >= 0 and p >= 1, got ({k}, {p})")
    total = sum(
        (comb(k + p + 1, 2 * j + 1) * 2 ** (k + p - 2 * j) * bernoulli(k + p - 2 * j)
         for j in range((p - 1) // 2 + 1)),
        Fraction(0),
    )
    return (-1) ** p * Fraction(factorial(p - 1), factorial(k + p + 1)) * total


def eval_eta_nn(n: int, jets: Sequence[Jet]) -> complex:
    """Coefficient of eta_n(n)(x_1, ..., x_n) on an (n-1)-dimensional patch."""
    if len(jets) != n:
        raise ValueError(f"eta_{n}({n}) takes {n} arguments, got {len(jets)}")
    _check_nonzero(jets)

    def block(*xs: Jet) -> complex:
        total = 0j
        for p in range((n - 1) // 2 + 1):
            coeff = 1.0 / (factorial(2 * p + 1) * factorial(n - 2 * p - 1))
            forms = [x.dlog_abs() for x in xs[1:2 * p + 1]] + [x.d_i_arg() for x in xs[2 * p + 1:]]
            total += coeff * xs[0].log_abs() * wedge(forms)
        return total

    return alt(block, list(jets))


def lhat_pq(p: int, q: int, x: Jet) -> np.ndarray:
    """The 1-form Lhat_{p,q}(x)."""
    if p < 1 or q < 1:
        raise ValueError(f"Lhat_{{p,q}} needs p, q >= 1, got ({p}, {q})")
    log_x = x.log_abs()
    if p == 1:
        y = x.one_minus()
        _check_nonzero([y])
        return (log_x * y.dlog_abs() - y.log_abs() * x.dlog_abs()) * log_x ** (q - 1)
    return zagier_Lhat(p, x.value) * log_x ** (q - 1) * x.dlog_abs()


def eval_eta_nl(n: int, l: int, x: Jet, jets: Sequence[Jet]) -> complex:
    """Coefficient of eta_n(l)({x}_{n-l+1} (x) x_1 ^ ... ^ x_{l-1})."""
    if not 1 <= l < n:
        raise ValueError(f"eta_n(l) needs 1 <= l < n, got n={n}, l={l}")
    if len(jets) != l - 1:
        raise ValueError(f"eta_{n}({l}) takes {l - 1} wedge arguments, got {len(jets)}")
    _check_nonzero([x, *jets])
    weight = n - l + 1
    m = l - 1

    def first(*xs: Jet) -> complex:
        total = 0j
        for p in range(m // 2 + 1):
            coeff = 1.0 / (factorial(2 * p + 1) * factorial(m - 2 * p))
            forms = [y.dlog_abs() for y in xs[:2 * p]] + [y.d_i_arg() for y in xs[2 * p:]]
            total += coeff * wedge(forms)
        return total

    result = zagier_Lhat(weight, x.value) * alt(first, list(jets))

    for k in range(1, weight):
        correction = lhat_pq(weight - k, k, x)
        for p in range(1, m + 1):
            beta = beta_kp(k, p)
            if beta == 0:
                continue

            def second(*xs: Jet, p: int = p) -> complex:
                coeff = xs[0].log_abs() / (factorial(p - 1) * factorial(m - p))
                forms = [correction] + [y.dlog_abs() for y in xs[1:p]] + [y.d_i_arg() for y in xs[p:]]
                return coeff * wedge(forms)

            result += float(beta) * alt(second, list(jets))
    return result


def eta2(x: Jet, y: Jet) -> complex:
    """log|x| d i arg y - log|y| d i arg x."""
    _check_nonzero([x, y])
    return wedge([x.log_abs() * y.d_i_arg() - y.log_abs() * x.d_i_arg()])


def eta3(x: Jet, y: Jet, z: Jet) -> complex:
    _check_nonzero([x, y, z])
    total = 0j
    for a, b, c in ((x, y, z), (y, z, x), (z, x, y)):
        total += a.log_abs() * (
            wedge([b.dlog_abs(), c.dlog_abs()]) / 3 + wedge([b.d_i_arg(), c.d_i_arg()])
        )
    return total


def omega(x: Jet, y: Jet) -> complex:
    """i D(x) d i arg y - (log|x| dlog|1-x| - log|1-x| dlog|x|) log|y| / 3."""
    _check_nonzero([x, y])
    one_minus = x.one_minus()
    _check_nonzero([one_minus])
    correction = x.log_abs() * one_minus.dlog_abs() - one_minus.log_abs() * x.dlog_abs()
    return wedge([1j * bloch_wigner(x.value) * y.d_i_arg() - correction * y.log_abs() / 3])


# form specifications ----------------------------------------------------------

TRANSFORMS = ("id", "one_minus", "inverse", "neg")


@dataclass(frozen=True)
class Argument:
    """A form argument: a patch coordinate (optionally transformed) or a constant."""

    coord: Optional[int] = None
    constant: Optional[complex] = None
    transform: str = "id"

    def __post_init__(self) -> None:
        if (self.coord is None) == (self.constant is None):
            raise ValueError("An argument is either a coordinate index or a constant")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"Unknown transform '{self.transform}'")

    def resolve(self, coords: Sequence[Jet], dim: int) -> Jet:
        if self.coord is not None:
            if not 0 <= self.coord < len(coords):
                raise ValueError(f"Coordinate index {self.coord} out of range")
            base = coords[self.coord]
        else:
            base = Jet(complex(self.constant), np.zeros(dim, dtype=complex))
        grad = np.asarray(base.grad, dtype=complex)
        if self.transform == "one_minus":
            return Jet(1 - base.value, -grad)
        if self.transform == "inverse":
            if base.value == 0:
                raise ValueError("Inverse of a zero coordinate")
            return Jet(1 / base.value, -grad / base.value ** 2)
        if self.transform == "neg":
            return Jet(-base.value, -grad)
        return base


def coord(index: int, transform: str = "id") -> Argument:
    return Argument(coord=index, transform=transform)


def const(value: complex) -> Argument:
    return Argument(constant=value)


KINDS = ("eta_nn", "eta_nl", "eta2", "eta3", "omega")


@dataclass(frozen=True)
class FormSpec:
    kind: str
    arguments: Tuple[Argument, ...]
    n: int = 0
    l: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "arguments", tuple(self.arguments))
        if self.kind not in KINDS:
            raise ValueError(f"Unknown form kind '{self.kind}'")
        expected = {
            "eta_nn": self.n,
            "eta_nl": self.l,
            "eta2": 2,
            "eta3": 3,
            "omega": 2,
        }[self.kind]
        if self.kind == "eta_nl" and not 1 <= self.l < self.n:
            raise ValueError(f"eta_nl needs 1 <= l < n, got n={self.n}, l={self.l}")
        if self.kind == "eta_nn" and self.n < 1:
            raise ValueError("eta_nn needs n >= 1")
        if len(self.arguments) != expected:
            raise ValueError(f"{self.kind} takes {expected} arguments, got {len(self.arguments)}")

    @property
    def degree(self) -> int:
        return {
            "eta_nn": self.n - 1,
            "eta_nl": self.l - 1,
            "eta2": 1,
            "eta3": 2,
            "omega": 1,
        }[self.kind]

    def evaluate(self, coords: Sequence[Jet]) -> complex:
        dim = coords[0].dim if coords else 0
        args = [a.resolve(coords, dim) for a in self.arguments]
        if self.kind == "eta_nn":
            return eval_eta_nn(self.n, args)
        if self.kind == "eta_nl":
            return eval_eta_nl(self.n, self.l, args[0], args[1:])
        if self.kind == "eta2":
            return eta2(*args)
        if self.kind == "eta3":
            return eta3(*args)
        return omega(*args)


# integration domains ----------------------------------------------------------

PathCoordinate = Callable[[float], Tuple[complex, complex]]
PatchCoordinate = Callable[[float, float], Tuple[complex, complex, complex]]


@dataclass
class PathSpec:
    coords: Sequence[PathCoordinate]
    t0: float
    t1: float
    steps: int = 8

    def jets(self, t: float) -> List[Jet]:
        result = []
        for fn in self.coords:
            value, derivative = fn(t)
            result.append(Jet(complex(value), np.array([complex(derivative)])))
        return result

    def validate(self, samples: int = 64, tol: float = 1e-6) -> None:
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.t1 == self.t0:
            return
        h = 1e-5 * abs(self.t1 - self.t0)
        for t in np.linspace(self.t0, self.t1, samples):
            for k, fn in enumerate(self.coords):
                value, derivative = fn(t)
                if value == 0:
                    raise ValueError(f"Coordinate {k} vanishes at t={t}")
                finite_difference = (fn(t + h)[0] - fn(t - h)[0]) / (2 * h)
                if abs(finite_difference - derivative) > tol * max(1.0, abs(derivative)):
                    raise ValueError(
                        f"Derivative of coordinate {k} disagrees with finite differences at t={t}"
                    )

    def breakpoints(self, samples: int = 256) -> List[float]:
        """Parameters where a coordinate crosses the negative real axis."""
        grid = np.linspace(self.t0, self.t1, samples + 1)
        found = set()
        for fn in self.coords:
            values = [complex(fn(t)[0]) for t in grid]
            for a, b, va, vb in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
                if va.imag * vb.imag < 0 and min(va.real, vb.real) < 0:
                    found.add(_bisect_crossing(fn, float(a), float(b)))
        return sorted(t for t in found if self.t0 < t < self.t1)


def _bisect_crossing(fn: PathCoordinate, a: float, b: float) -> float:
    sign_a = math.copysign(1.0, complex(fn(a)[0]).imag)
    for _ in range(60):
        mid = 0.5 * (a + b)
        if math.copysign(1.0, complex(fn(mid)[0]).imag) == sign_a:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def _evaluate_checked(form: FormSpec, coords: Sequence[Jet], cutoff: float) -> complex:
    for jet in coords:
        if abs(jet.value) < cutoff:
            raise IntegrationError(f"Coordinate within {cutoff:g} of zero")
    try:
        return form.evaluate(coords)
    except (ValueError, ZeroDivisionError) as exc:
        raise IntegrationError(f"Form is singular at a quadrature node: {exc}") from exc


def _line_rule(form: FormSpec, path: PathSpec, pieces: Sequence[float], steps: int, cutoff: float) -> complex:
    nodes, weights = gauss_legendre(PATH_ORDER)
    total = 0j
    for a, b in zip(pieces[:-1], pieces[1:]):
        h = (b - a) / steps
        for k in range(steps):
            left = a + k * h
            for node, weight in zip(nodes, weights):
                total += weight * h * _evaluate_checked(form, path.jets(left + node * h), cutoff)
    return total


def path_integral(
    form: FormSpec,
    path: PathSpec,
    *,
    tol: float = 1e-9,
    max_doublings: int = 8,
    singular_cutoff: float = 1e-12,
) -> complex:
    """Integral of a 1-form along a path, doubling the panel count until stable."""
    if form.degree != 1:
        raise ValueError(f"path_integral needs a 1-form, got degree {form.degree}")
    path.validate()
    pieces = [path.t0, *path.breakpoints(), path.t1]
    steps = path.steps
    previous = _line_rule(form, path, pieces, steps, singular_cutoff)
    for _ in range(max_doublings):
        steps *= 2
        current = _line_rule(form, path, pieces, steps, singular_cutoff)
        delta = abs(current - previous)
        previous = current
        if delta < tol:
            break
    else:
        logger.warning("Path integral did not stabilise below %.1e", tol)
    logger.debug("Path integral of %s with %d panels: %r", form.kind, steps, previous)
    return previous


def exactness_residual(path: PathSpec) -> float:
    """|integral of omega(x, x) - (Lhat_3(x(t1)) - Lhat_3(x(t0)))| for coordinate 0."""
    form = FormSpec("omega", (coord(0), coord(0)))
    integral = path_integral(form, path)
    start = path.jets(path.t0)[0].value
    end = path.jets(path.t1)[0].value
    return abs(integral - (zagier_Lhat(3, end) - zagier_Lhat(3, start)))


@dataclass
class PatchSpec:
    coords: Sequence[PatchCoordinate]
    s0: float
    s1: float
    t0: float
    t1: float
    resolution: int = 4

    def jets(self, s: float, t: float) -> List[Jet]:
        result = []
        for fn in self.coords:
            value, ds, dt = fn(s, t)
            result.append(Jet(complex(value), np.array([complex(ds), complex(dt)])))
        return result

    def edge(self, which: str) -> PathSpec:
        """One boundary edge, parametrized in the increasing direction."""
        if which in ("bottom", "top"):
            t = self.t0 if which == "bottom" else self.t1
            coords = [_fix_t(fn, t) for fn in self.coords]
            return PathSpec(coords, self.s0, self.s1, self.resolution)
        s = self.s1 if which == "right" else self.s0
        coords = [_fix_s(fn, s) for fn in self.coords]
        return PathSpec(coords, self.t0, self.t1, self.resolution)


def _fix_t(fn: PatchCoordinate, t: float) -> PathCoordinate:
    def along(s: float) -> Tuple[complex, complex]:
        value, ds, _ = fn(s, t)
        return value, ds

    return along


def _fix_s(fn: PatchCoordinate, s: float) -> PathCoordinate:
    def along(t: float) -> Tuple[complex, complex]:
        value, _, dt = fn(s, t)
        return value, dt

    return along


def surface_integral(form: FormSpec, patch: PatchSpec, resolution: int, cutoff: float = 1e-12) -> complex:
    if form.degree != 2:
        raise ValueError(f"surface_integral needs a 2-form, got degree {form.degree}")
    nodes, weights = gauss_legendre(PATCH_ORDER)
    hs = (patch.s1 - patch.s0) / resolution
    ht = (patch.t1 - patch.t0) / resolution
    if hs == 0 or ht == 0:
        return 0j
    total = 0j
    for i in range(resolution):
        for j in range(resolution):
            for ns, ws in zip(nodes, weights):
                s = patch.s0 + (i + ns) * hs
                for nt, wt in zip(nodes, weights):
                    t = patch.t0 + (j + nt) * ht
                    total += ws * wt * hs * ht * _evaluate_checked(form, patch.jets(s, t), cutoff)
    return total


def _boundary_integral(form: FormSpec, patch: PatchSpec, resolution: int, cutoff: float) -> complex:
    sides = {}
    for which in ("bottom", "right", "top", "left"):
        edge = patch.edge(which)
        if edge.t1 == edge.t0:
            sides[which] = 0j
            continue
        sides[which] = _line_rule(form, edge, [edge.t0, edge.t1], resolution, cutoff)
    return sides["bottom"] + sides["right"] - sides["top"] - sides["left"]


def stokes_sides(
    patch: PatchSpec, *, tol: float = 1e-10, max_doublings: int = 3, singular_cutoff: float = 1e-12
) -> Tuple[complex, complex]:
    """(surface integral of eta_3(3)(x, 1-x, y), boundary integral of omega(x, y))."""
    inner = FormSpec("eta3", (coord(0), coord(0, "one_minus"), coord(1)))
    outer = FormSpec("omega", (coord(0), coord(1)))
    resolution = patch.resolution
    surface = surface_integral(inner, patch, resolution, singular_cutoff)
    boundary = _boundary_integral(outer, patch, resolution, singular_cutoff)
    for _ in range(max_doublings):
        resolution *= 2
        new_surface = surface_integral(inner, patch, resolution, singular_cutoff)
        new_boundary = _boundary_integral(outer, patch, resolution, singular_cutoff)
        settled = abs(new_surface - surface) < tol and abs(new_boundary - boundary) < tol
        surface, boundary = new_surface, new_boundary
        if settled:
            break
    return surface, boundary


def stokes_residual(patch: PatchSpec, **kwargs) -> float:
    """|surface integral of eta_3(3)(x, 1-x, y) - boundary integral of omega(x, y)|."""
    surface, boundary = stokes_sides(patch, **kwargs)
    residual = abs(surface - boundary)
    logger.debug("Stokes residual %.3e (surface %r, boundary %r)", residual, surface, boundary)
    return residual


def circle_path(radius: float = 1.0, start: float = 0.0, stop: float = math.pi, steps: int = 8) -> PathSpec:
    """x(t) = radius * e^{it}."""

    def x(t: float) -> Tuple[complex, complex]:
        value = radius * cmath.exp(1j * t)
        return value, 1j * value

    return PathSpec([x], start, stop, steps)


def segment_path(a: complex, b: complex, steps: int = 8) -> PathSpec:
    """x(t) = a + t (b - a) on [0, 1]."""
    a, b = complex(a), complex(b)

    def x(t: float) -> Tuple[complex, complex]:
        return a + t * (b - a), b - a

    return PathSpec([x], 0.0, 1.0, steps)
