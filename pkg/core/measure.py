"""Classical Mahler measure.

``mahler_1var`` is exact up to root-finding accuracy (Jensen's formula).
Multivariate polynomials have two independent estimators: ``mahler_direct``
averages log|P| over the torus, and ``mahler_jensen_reduced`` integrates the
sum of log+|alpha_j| over one fewer variable.
"""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from core.laurent import LaurentPolynomial, RationalFunction
from core.quadrature import CubatureResult, adaptive_cubature, lattice_rule, monte_carlo

logger = logging.getLogger(__name__)

METHODS = ("auto", "tensor-gauss", "quasi-mc", "mc")
STAGNATION_SWEEPS = 50


class IntegrationError(RuntimeError):
    """A numeric estimate could not be produced."""


@dataclass(frozen=True)
class QuadratureConfig:
    method: str = "auto"
    points_per_dim: int = 8
    total_samples: int = 1 << 20
    seed: int = 0
    adaptive_depth: int = 14
    singular_cutoff: float = 1e-12
    tolerance: float = 1e-7
    randomizations: int = 8
    threads: int = 1
    max_evals: int = 50_000_000

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"Unknown quadrature method '{self.method}'; expected one of {METHODS}")
        if self.total_samples < 1 or self.points_per_dim < 1:
            raise ValueError("Sample budgets must be at least 1")
        if self.singular_cutoff < 0:
            raise ValueError("singular_cutoff must be nonnegative")
        if self.randomizations < 8:
            raise ValueError("At least 8 randomizations are required")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    @classmethod
    def from_config(cls, section: Optional[Mapping[str, Any]]) -> "QuadratureConfig":
        """Build from a ``quadrature:`` config mapping; unknown keys are ignored."""
        if not section:
            return cls()
        kwargs = {}
        for name, default in asdict(cls()).items():
            if name not in section:
                continue
            value = section[name]
            expected = type(default)
            if expected is float and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            if not isinstance(value, expected) or isinstance(value, bool):
                raise TypeError(f"Config key 'quadrature.{name}' must be of type {expected.__name__}")
            kwargs[name] = value
        return cls(**kwargs)

    def with_changes(self, **changes: Any) -> "QuadratureConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def resolve_method(self, dim: int) -> str:
        if self.method != "auto":
            return self.method
        return "tensor-gauss" if dim <= 2 else "quasi-mc"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class MeasureResult:
    value: float
    error_estimate: float
    method: str
    samples_used: int
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be nonnegative")
        if self.samples_used < 1:
            raise ValueError("samples_used must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "method": self.method,
            "samples_used": self.samples_used,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Optional["MeasureResult"]:
        try:
            return cls(
                value=float(data["value"]),
                error_estimate=float(data["error_estimate"]),
                method=str(data["method"]),
                samples_used=int(data["samples_used"]),
                metadata=dict(data.get("metadata") or {}),
            )
        except (KeyError, TypeError, ValueError):
            return None


# roots ----------------------------------------------------------------------


def _initial_guesses(monic: np.ndarray) -> np.ndarray:
    count, width = monic.shape
    degree = width - 1
    magnitudes = np.abs(monic[:, :-1])
    exponents = 1.0 / (degree - np.arange(degree))
    with np.errstate(divide="ignore"):
        radius = np.max(magnitudes ** exponents[None, :], axis=1)
    radius = np.where(radius > 0, radius, 1.0)
    angles = 2 * np.pi * (np.arange(degree) + 0.25) / degree + 0.4
    return radius[:, None] * np.exp(1j * angles)[None, :]


def _horner(monic: np.ndarray, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    value = np.ones_like(z)
    derivative = np.zeros_like(z)
    for k in range(monic.shape[1] - 2, -1, -1):
        derivative = derivative * z + value
        value = value * z + monic[:, k][:, None]
    return value, derivative


def roots_batch(coeffs: np.ndarray, tol: float = 1e-14, max_sweeps: int = 500) -> np.ndarray:
    """Roots of many polynomials of equal degree; rows are coefficients low to high.

    Degrees 1 and 2 use closed forms. Higher degrees use simultaneous
    Aberth-Ehrlich iteration; a row whose residual has not decreased for
    ``STAGNATION_SWEEPS`` sweeps is finished with companion-matrix eigenvalues.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 2 or coeffs.shape[1] < 2:
        raise ValueError("Coefficient rows must have degree at least 1")
    degree = coeffs.shape[1] - 1
    lead = coeffs[:, -1]
    if np.any(np.abs(lead) < np.finfo(float).tiny):
        raise ValueError("Leading coefficient below underflow threshold")
    if degree == 1:
        return (-coeffs[:, 0] / lead)[:, None]
    if degree == 2:
        a, b, c = lead, coeffs[:, 1], coeffs[:, 0]
        disc = np.sqrt(b * b - 4 * a * c)
        flip = np.real(np.conj(b) * disc) < 0
        disc = np.where(flip, -disc, disc)
        q = -(b + disc) / 2
        safe_q = np.where(q == 0, 1.0, q)
        first = np.where(q == 0, 0.0, q / a)
        second = np.where(q == 0, 0.0, c / safe_q)
        return np.stack([first, second], axis=1)

    monic = coeffs / lead[:, None]
    z = _initial_guesses(monic)
    active = np.ones(len(monic), dtype=bool)
    best = np.full(len(monic), np.inf)
    stale = np.zeros(len(monic), dtype=int)
    eye = np.eye(degree, dtype=bool)
    scale = np.abs(monic).sum(axis=1)
    for _ in range(max_sweeps):
        rows = np.flatnonzero(active)
        if rows.size == 0:
            break
        zr = z[rows]
        value, derivative = _horner(monic[rows], zr)
        residual = np.max(np.abs(value), axis=1)
        improved = residual < best[rows]
        best[rows] = np.where(improved, residual, best[rows])
        stale[rows] = np.where(improved, 0, stale[rows] + 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = zr[:, :, None] - zr[:, None, :]
            inverse = np.where(eye[None], 0, 1 / np.where(eye[None], 1, diff))
            repulsion = inverse.sum(axis=2)
            newton = value / derivative
            step = newton / (1 - newton * repulsion)
        step = np.where(np.isfinite(step), step, 0)
        z[rows] = zr - step
        done = np.max(np.abs(step) / np.maximum(1.0, np.abs(zr)), axis=1) <= tol
        done |= residual <= tol * scale[rows]
        active[rows[done]] = False
        active[rows[stale[rows] >= STAGNATION_SWEEPS]] = False
    fallback = np.flatnonzero((stale >= STAGNATION_SWEEPS) | active)
    if fallback.size:
        logger.warning("Root iteration stagnated on %d rows; using companion eigenvalues", fallback.size)
        for row in fallback:
            z[row] = np.roots(coeffs[row, ::-1])
    return z


def roots(coeffs: Sequence[complex], prec: float = 1e-14) -> List[complex]:
    """Roots, with multiplicity, of ``sum(coeffs[k] * x**k)``."""
    array = np.asarray(list(coeffs), dtype=complex)
    if array.size == 0 or not np.any(array):
        raise ValueError("Zero polynomial has no roots")
    if array.size < 2:
        raise ValueError("Polynomial must have degree at least 1")
    return [complex(r) for r in roots_batch(array[None, :], tol=prec)[0]]


def _log_plus_sum(root_rows: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(np.abs(root_rows)), 0.0).sum(axis=1)


# one variable -----------------------------------------------------------------


def _constant_measure(p: LaurentPolynomial) -> float:
    return math.log(abs(complex(p.constant_value())))


def _constant_log(f) -> float:
    if isinstance(f, RationalFunction):
        return _constant_measure(f.numerator) - _constant_measure(f.denominator)
    return _constant_measure(f)


def mahler_1var(p: LaurentPolynomial) -> float:
    """log|a_d| + sum_j max(0, log|alpha_j|)."""
    if p.is_zero:
        raise ValueError("Mahler measure of the zero polynomial is undefined")
    active = p.active_variables()
    if not active:
        return _constant_measure(p)
    if len(active) > 1:
        raise ValueError(f"Expected a polynomial in one variable, got {active}")
    shifted, _ = p.shift_nonnegative(active[0])
    coeffs = np.array(
        [complex(a.constant_value()) for a in shifted.as_poly_in(active[0])], dtype=complex
    )
    return float(_univariate(coeffs[None, :])[0])


def _univariate(coeff_rows: np.ndarray) -> np.ndarray:
    lead = np.log(np.abs(coeff_rows[:, -1]))
    return lead + _log_plus_sum(roots_batch(coeff_rows))


# integration ------------------------------------------------------------------


def integrate(f: Callable, dim: int, cfg: QuadratureConfig) -> Tuple[CubatureResult, str]:
    method = cfg.resolve_method(dim)
    if method == "tensor-gauss":
        result = adaptive_cubature(
            f,
            dim,
            tol=cfg.tolerance,
            max_depth=cfg.adaptive_depth,
            order=cfg.points_per_dim,
            max_evals=cfg.max_evals,
            threads=cfg.threads,
        )
    elif method == "quasi-mc":
        result = lattice_rule(
            f,
            dim,
            samples=cfg.total_samples,
            randomizations=cfg.randomizations,
            seed=cfg.seed,
            threads=cfg.threads,
        )
    else:
        result = monte_carlo(
            f,
            dim,
            samples=cfg.total_samples,
            randomizations=cfg.randomizations,
            seed=cfg.seed,
            threads=cfg.threads,
        )
    if result.evaluations and result.skipped == result.evaluations:
        raise IntegrationError("Every quadrature node was excluded as singular")
    if not math.isfinite(result.value) or not math.isfinite(result.error):
        raise IntegrationError("Quadrature produced a non-finite estimate")
    return result, method


TorusFunction = Union[LaurentPolynomial, RationalFunction]


def _active_union(functions: Sequence[TorusFunction]) -> Tuple[str, ...]:
    names: List[str] = []
    for f in functions:
        for name in f.active_variables():
            if name not in names:
                names.append(name)
    return tuple(names)


def max_log_abs_kernel(
    functions: Sequence[TorusFunction], variables: Sequence[str], cutoff: float
) -> Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    """Integrand ``max_i log|f_i(e(theta))|`` with near-singular nodes excluded."""

    def kernel(theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        best = np.full(len(theta), -np.inf)
        excluded = np.zeros(len(theta), dtype=bool)
        with np.errstate(divide="ignore", invalid="ignore"):
            for f in functions:
                if isinstance(f, RationalFunction):
                    num, den = f.aligned()
                    top = np.abs(num.evaluate_on_torus(theta, variables))
                    bottom = np.abs(den.evaluate_on_torus(theta, variables))
                    excluded |= bottom < cutoff
                    logs = np.log(top) - np.log(bottom)
                else:
                    logs = np.log(np.abs(f.evaluate_on_torus(theta, variables)))
                best = np.maximum(best, logs)
        excluded |= best < math.log(cutoff) if cutoff > 0 else ~np.isfinite(best)
        return best, excluded

    return kernel


def torus_average(
    functions: Sequence[TorusFunction], cfg: QuadratureConfig, tag: str
) -> MeasureResult:
    """Average of ``max_i log|f_i|`` over the torus of the functions' variables."""
    if not functions:
        raise ValueError("At least one function is required")
    for f in functions:
        top = f.numerator if isinstance(f, RationalFunction) else f
        if top.is_zero:
            raise ValueError("Functions must not be identically zero")
    variables = _active_union(functions)
    if not variables:
        values = [_constant_log(f) for f in functions]
        return MeasureResult(max(values), 0.0, tag, 1, {"seed": cfg.seed, "variables": []})
    kernel = max_log_abs_kernel(functions, variables, cfg.singular_cutoff)
    result, method = integrate(kernel, len(variables), cfg)
    logger.info(
        "%s over %s by %s: %.12f +/- %.2e (%d nodes)",
        tag, ",".join(variables), method, result.value, result.error, result.evaluations,
    )
    return MeasureResult(
        value=result.value,
        error_estimate=result.error,
        method=f"{tag}/{method}",
        samples_used=max(1, result.evaluations),
        metadata={
            "seed": cfg.seed,
            "variables": list(variables),
            "skipped_nodes": result.skipped,
            "excluded_fraction": result.excluded_fraction,
            "converged": result.converged,
        },
    )


def mahler_direct(p: LaurentPolynomial, cfg: Optional[QuadratureConfig] = None) -> MeasureResult:
    """Torus average of log|P|."""
    if p.is_zero:
        raise ValueError("Mahler measure of the zero polynomial is undefined")
    return torus_average([p], cfg or QuadratureConfig(), "direct")


def _jensen_kernel(
    coeffs: Sequence[LaurentPolynomial], variables: Sequence[str], cutoff: float
) -> Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]:
    def kernel(theta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        matrix = np.stack([a.evaluate_on_torus(theta, variables) for a in coeffs], axis=1)
        excluded = np.abs(matrix[:, -1]) < max(cutoff, np.finfo(float).tiny)
        values = np.zeros(len(theta))
        keep = np.flatnonzero(~excluded)
        if keep.size:
            values[keep] = _log_plus_sum(roots_batch(matrix[keep]))
        return values, excluded

    return kernel


def mahler_jensen_reduced(
    p: LaurentPolynomial,
    var: Optional[str] = None,
    cfg: Optional[QuadratureConfig] = None,
) -> MeasureResult:
    """m(a_d) plus the torus integral of sum_j log+|alpha_j| with roots in ``var``."""
    cfg = cfg or QuadratureConfig()
    if p.is_zero:
        raise ValueError("Mahler measure of the zero polynomial is undefined")
    active = p.active_variables()
    if var is None:
        if not active:
            return MeasureResult(_constant_measure(p), 0.0, "exact", 1, {"seed": cfg.seed})
        var = active[-1]
    if var not in active:
        raise ValueError(f"Variable '{var}' does not occur in {p}")
    shifted, shift = p.shift_nonnegative(var)
    coeffs = shifted.as_poly_in(var)
    others = tuple(v for v in shifted.active_variables() if v != var)
    leading = _leading_measure(coeffs[-1], cfg)
    metadata: Dict[str, Any] = {
        "seed": cfg.seed,
        "reduced_in": var,
        "shift": {var: shift} if shift else {},
        "leading_measure": leading.value,
    }
    if not others:
        row = np.array([[complex(a.constant_value()) for a in coeffs]])
        value = float(_univariate(row)[0])
        metadata["skipped_nodes"] = 0
        return MeasureResult(value, 0.0, "jensen/exact", 1, metadata)

    kernel = _jensen_kernel(coeffs, others, cfg.singular_cutoff)
    result, method = integrate(kernel, len(others), cfg)
    if result.skipped:
        logger.warning(
            "Skipped %d of %d nodes where the leading coefficient is below %.1e",
            result.skipped, result.evaluations, cfg.singular_cutoff,
        )
    metadata.update(
        {
            "skipped_nodes": result.skipped,
            "excluded_fraction": result.excluded_fraction,
            "converged": result.converged,
            "leading_method": leading.method,
        }
    )
    logger.info(
        "Jensen reduction in %s over %s by %s: integral %.12f +/- %.2e, m(a_d) = %.12f",
        var, ",".join(others), method, result.value, result.error, leading.value,
    )
    return MeasureResult(
        value=leading.value + result.value,
        error_estimate=leading.error_estimate + result.error,
        method=f"jensen/{method}",
        samples_used=max(1, result.evaluations + leading.samples_used),
        metadata=metadata,
    )


def _leading_measure(a_d: LaurentPolynomial, cfg: QuadratureConfig) -> MeasureResult:
    active = a_d.active_variables()
    if not active:
        return MeasureResult(_constant_measure(a_d), 0.0, "exact", 1)
    if len(active) == 1:
        return MeasureResult(mahler_1var(a_d), 0.0, "exact", 1)
    return mahler_jensen_reduced(a_d, active[-1], cfg)


def mahler_measure(
    p: LaurentPolynomial,
    cfg: Optional[QuadratureConfig] = None,
    method: str = "auto",
    var: Optional[str] = None,
) -> MeasureResult:
    """Dispatch to the exact, Jensen-reduced or direct evaluator."""
    cfg = cfg or QuadratureConfig()
    active = p.active_variables()
    if method == "auto":
        method = "exact" if len(active) <= 1 else "jensen"
    if method == "exact":
        return MeasureResult(mahler_1var(p), 0.0, "exact", 1, {"seed": cfg.seed})
    if method == "jensen":
        return mahler_jensen_reduced(p, var, cfg)
    if method == "direct":
        return mahler_direct(p, cfg)
    raise ValueError(f"Unknown measure method '{method}'")


# boundary curve -----------------------------------------------------------------


def boundary_curve(R: RationalFunction) -> LaurentPolynomial:
    """Cleared form of R(x, y) R(1/x, 1/y) - 1, made primitive."""
    numerator, denominator = R.aligned()
    if numerator.is_complex or denominator.is_complex:
        raise ValueError("boundary_curve requires real coefficients")
    curve = (
        numerator * numerator.substitute_inverse()
        - denominator * denominator.substitute_inverse()
    )
    if curve.is_zero:
        raise ValueError(f"R(x,y) R(1/x,1/y) = 1 identically for {R}")
    for name in curve.active_variables():
        curve, _ = curve.shift_nonnegative(name)
    return curve.primitive()
