"""Registry of closed-form identities and the engine that checks them.

Closed forms are JSON-friendly S-expressions::

    ["mul", ["q", 7, 2], ["pi", -2], ["zeta", 3]]      # 7 zeta(3) / (2 pi^2)

Heads: ``q`` (rational), ``pi`` (integer power of pi), ``zeta``, ``beta``
(Dirichlet L(chi_-4, s)), ``log``, ``sqrt``, ``li`` (Li_n), ``L`` (the
single-valued L_n), ``add`` and ``mul``.

Polylog relations are checked through their L_n images only.
"""

import asyncio
import cmath
import copy
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from math import comb
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np

from core.genmm import (
    FamilySpec,
    family_polynomials,
    family_profile,
    gmm_direct,
    gmm_order_stat,
    gmm_via_auxiliary,
    limit_series,
    one_minus_x_terms,
    ratio_terms,
)
from core.forms import FormSpec, PatchCoordinate, PatchSpec, const, coord, surface_integral
from core.laurent import parse
from core.measure import IntegrationError, QuadratureConfig, mahler_measure
from core.special import dirichlet_beta, li, zagier_L, zeta
from core.utils import atomic_write_json, file_lock, run_blocking

logger = logging.getLogger(__name__)

KINDS = ("mahler", "gmm", "polylog_relation", "series")
KIND_METHODS = {
    "mahler": ("jensen", "direct"),
    "gmm": ("order_stat", "direct", "auxiliary"),
    "polylog_relation": ("residual",),
    "series": ("numeric",),
}
CLOSED_ONLY = "closed_only"
RELATION_SAMPLES = 100
RELATION_TOLERANCE = 1e-10
TAIL_LAMBDA = Fraction(1, 2)
TAIL_MAX_L = 10

ClosedForm = Union[int, float, List[Any]]


# closed forms -------------------------------------------------------------------


def _evaluate(expr: ClosedForm) -> complex:
    if isinstance(expr, bool):
        raise ValueError("Booleans are not closed forms")
    if isinstance(expr, (int, float)):
        return complex(expr)
    if not isinstance(expr, (list, tuple)) or not expr:
        raise ValueError(f"Malformed closed form: {expr!r}")
    head, *args = expr
    if head == "q":
        return complex(Fraction(int(args[0]), int(args[1])))
    if head == "pi":
        return complex(math.pi ** int(args[0]))
    if head == "zeta":
        return complex(zeta(int(args[0])))
    if head == "beta":
        return complex(dirichlet_beta(int(args[0])))
    if head == "log":
        return cmath.log(_evaluate(args[0]))
    if head == "sqrt":
        return cmath.sqrt(_evaluate(args[0]))
    if head == "li":
        return li(int(args[0]), _evaluate(args[1]))
    if head == "L":
        return complex(zagier_L(int(args[0]), _evaluate(args[1])))
    if head == "add":
        return sum((_evaluate(a) for a in args), 0j)
    if head == "mul":
        total = 1 + 0j
        for a in args:
            total *= _evaluate(a)
        return total
    raise ValueError(f"Unknown closed-form head '{head}'")


def evaluate_closed_form(expr: ClosedForm) -> float:
    """Evaluate to a finite real number."""
    value = _evaluate(expr)
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ValueError(f"Closed form {closed_form_text(expr)} is not finite")
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise ValueError(f"Closed form {closed_form_text(expr)} is not real: {value}")
    return value.real


def closed_form_text(expr: ClosedForm) -> str:
    if isinstance(expr, (int, float)) and not isinstance(expr, bool):
        return repr(expr)
    head, *args = expr
    if head == "q":
        return str(args[0]) if int(args[1]) == 1 else f"{args[0]}/{args[1]}"
    if head == "pi":
        return "pi" if int(args[0]) == 1 else f"pi^{args[0]}"
    if head in ("zeta", "beta"):
        return f"{head}({args[0]})"
    if head in ("log", "sqrt"):
        return f"{head}({closed_form_text(args[0])})"
    if head == "li":
        return f"Li{args[0]}({closed_form_text(args[1])})"
    if head == "L":
        return f"L{args[0]}({closed_form_text(args[1])})"
    if head == "add":
        return "(" + " + ".join(closed_form_text(a) for a in args) + ")"
    if head == "mul":
        return "*".join(closed_form_text(a) for a in args)
    return repr(expr)


def _q(value: Union[int, Fraction]) -> List[Any]:
    value = Fraction(value)
    return ["q", value.numerator, value.denominator]


def zeta_terms_form(terms: Sequence[Tuple[Fraction, int, int]]) -> List[Any]:
    """Closed form of a sum of coefficient * pi^power * zeta(argument) terms."""
    if not terms:
        return ["q", 0, 1]
    return ["add", *(["mul", _q(c), ["pi", p], ["zeta", s]] for c, p, s in terms)]


SQRT5 = ["sqrt", ["q", 5, 1]]
GOLDEN = ["add", ["q", 1, 2], ["mul", ["q", 1, 2], SQRT5]]              # (1 + sqrt 5)/2
GOLDEN_CONJUGATE = ["add", ["q", -1, 2], ["mul", ["q", 1, 2], SQRT5]]   # (sqrt 5 - 1)/2
GOLDEN_CONJUGATE_SQ = ["add", ["q", 3, 2], ["mul", ["q", -1, 2], SQRT5]]


# relations ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelationTerm:
    """coefficient * L_n(argument); the argument is a rational function or a constant."""

    coefficient: Fraction
    numerator: Optional[str] = None
    denominator: str = "1"
    constant: Optional[ClosedForm] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficient", Fraction(self.coefficient))
        if (self.numerator is None) == (self.constant is None):
            raise ValueError("A relation term has either a rational argument or a constant")

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"coefficient": str(self.coefficient)}
        if self.constant is not None:
            data["constant"] = self.constant
        else:
            data["numerator"] = self.numerator
            data["denominator"] = self.denominator
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RelationTerm":
        return cls(
            coefficient=Fraction(data["coefficient"]),
            numerator=data.get("numerator"),
            denominator=data.get("denominator", "1"),
            constant=data.get("constant"),
        )


@dataclass(frozen=True)
class RelationSpec:
    order: int
    terms: Tuple[RelationTerm, ...]
    variables: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.order < 2:
            raise ValueError("Relations are checked for L_n with n >= 2")
        if len(self.terms) < 2:
            raise ValueError("A relation needs at least two terms")
        for term in self.terms:
            if term.numerator is None:
                continue
            for text in (term.numerator, term.denominator):
                unknown = set(parse(text).active_variables()) - set(self.variables)
                if unknown:
                    raise ValueError(f"Relation argument uses undeclared variables {sorted(unknown)}")

    @cached_property
    def _prepared(self):
        prepared = []
        for term in self.terms:
            if term.constant is not None:
                prepared.append((float(term.coefficient), evaluate_closed_form(term.constant), None))
            else:
                num = parse(term.numerator).with_variables(self.variables)
                den = parse(term.denominator).with_variables(self.variables)
                prepared.append((float(term.coefficient), num, den))
        return prepared

    def evaluate(self, point: Sequence[complex] = ()) -> float:
        """sum_i c_i L_n(g_i(point))."""
        total = 0.0
        for coeff, num, den in self._prepared:
            total += coeff * zagier_L(self.order, _argument(num, den, point))
        return total

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order": self.order,
            "variables": list(self.variables),
            "terms": [t.to_dict() for t in self.terms],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Optional["RelationSpec"]:
        try:
            return cls(
                order=int(data["order"]),
                terms=tuple(RelationTerm.from_dict(t) for t in data["terms"]),
                variables=tuple(data.get("variables") or ()),
            )
        except (KeyError, TypeError, ValueError):
            return None


def _argument(num, den, point: Sequence[complex]) -> complex:
    if den is None:
        return complex(num)
    bottom = den.evaluate(point)
    if bottom == 0:
        raise ValueError(f"Relation argument has a pole at {tuple(point)}")
    value = num.evaluate(point) / bottom
    if value == 0:
        raise ValueError(f"Relation argument vanishes at {tuple(point)}")
    return value


def _usable(rel: RelationSpec, point: Sequence[complex]) -> bool:
    for _, num, den in rel._prepared:
        if den is None:
            continue
        bottom = den.evaluate(point)
        if abs(bottom) < 1e-3:
            return False
        value = num.evaluate(point) / bottom
        if not 1e-4 < abs(value) < 1e4 or abs(value - 1) < 1e-4:
            return False
    return True


def sample_points(rel: RelationSpec, count: int = RELATION_SAMPLES, seed: int = 0) -> List[Tuple[complex, ...]]:
    """Random complex points in [-2, 2]^2 per variable, away from singular arguments."""
    if not rel.variables:
        return [()]
    rng = np.random.default_rng(seed)
    points: List[Tuple[complex, ...]] = []
    attempts = 0
    while len(points) < count:
        attempts += 1
        if attempts > 100 * count:
            raise ValueError("Could not find sample points away from the relation's singularities")
        raw = rng.uniform(-2.0, 2.0, size=(len(rel.variables), 2))
        point = tuple(complex(re, im) for re, im in raw)
        if _usable(rel, point):
            points.append(point)
    return points


def relation_residual(
    rel: RelationSpec, points: Optional[Iterable[Sequence[complex]]] = None, seed: int = 0
) -> float:
    """max over sample points of |sum_i c_i L_n(g_i)|."""
    if points is None:
        points = sample_points(rel, seed=seed)
    worst = 0.0
    for point in points:
        worst = max(worst, abs(rel.evaluate(point)))
    return worst


def _t(coefficient, numerator: str, denominator: str = "1") -> RelationTerm:
    return RelationTerm(Fraction(coefficient), numerator=numerator, denominator=denominator)


def _c(coefficient, constant: ClosedForm) -> RelationTerm:
    return RelationTerm(Fraction(coefficient), constant=constant)


def builtin_relations() -> Dict[str, RelationSpec]:
    one, two, three = ["q", 1, 1], ["q", 2, 1], ["q", 3, 1]
    return {
        "rel_eq22": RelationSpec(3, (_c(2, three), _c(-1, ["q", -3, 1]), _c(Fraction(-13, 6), one))),
        "rel_22term": RelationSpec(
            3,
            (
                _c(4, three),
                _c(2, ["q", 1, 3]),
                _c(-3, ["q", -1, 3]),
                _c(6, ["q", -1, 1]),
                _c(-2, one),
            ),
        ),
        "rel_minus_one": RelationSpec(3, (_c(1, ["q", -1, 1]), _c(Fraction(3, 4), one))),
        "rel_two": RelationSpec(3, (_c(1, two), _c(Fraction(-7, 8), one))),
        "rel_minus_one_two": RelationSpec(3, (_c(1, ["q", -1, 1]), _c(2, two), _c(-1, one))),
        "rel_four": RelationSpec(3, (_c(1, ["q", 4, 1]), _c(-4, two), _c(-4, ["q", -2, 1]))),
        "rel_golden": RelationSpec(
            3,
            (
                _c(1, GOLDEN),
                _c(1, ["mul", ["q", -1, 1], GOLDEN]),
                _c(Fraction(-1, 5), one),
            ),
        ),
        "rel_five_term": RelationSpec(
            2,
            (
                _t(1, "x"),
                _t(1, "1-x*y"),
                _t(1, "y"),
                _t(1, "1-y", "1-x*y"),
                _t(1, "1-x", "1-x*y"),
            ),
            ("x", "y"),
        ),
        "rel_five_term_minus_one": RelationSpec(
            2,
            (
                _t(1, "x"),
                _c(1, ["q", -1, 1]),
                _t(1, "1+x"),
                _t(1, "1-x", "1+x"),
                _t(1, "2", "1+x"),
            ),
            ("x",),
        ),
        "rel_three_term": RelationSpec(
            3, (_t(1, "x"), _t(1, "1-x"), _t(1, "x-1", "x"), _c(-1, one)), ("x",)
        ),
        "rel_reflection": RelationSpec(2, (_t(1, "x"), _t(1, "1-x")), ("x",)),
        "rel_inversion_2": RelationSpec(2, (_t(1, "x"), _t(1, "1", "x")), ("x",)),
        "rel_inversion_3": RelationSpec(3, (_t(1, "x"), _t(-1, "1", "x")), ("x",)),
        "rel_distribution_3": RelationSpec(
            3, (_t(1, "x"), _t(1, "-x"), _t(Fraction(-1, 4), "x^2")), ("x",)
        ),
    }


# the log 2 block --------------------------------------------------------------------

# -eta(2, x, z) on B, with z = (1 + x + 2xy) / (1 - x) and the constant 2 as first argument
BLOCK_FORM = FormSpec("eta3", (const(2.0), coord(0), coord(1)))
BLOCK_LEVELS = 12
BLOCK_RESOLUTION = 2


def _block_coordinates(lower: bool) -> List[PatchCoordinate]:
    """x and z over one piece of B, both pieces mapped from the unit square.

    Lower piece: -pi <= alpha <= 0, -pi - alpha <= beta <= pi.
    Upper piece: 0 <= alpha <= pi, -pi <= beta <= pi - alpha.
    """

    def angles(u: float, v: float):
        if lower:
            alpha, d_alpha = -math.pi + math.pi * u, (math.pi, 0.0)
            width = 2 * math.pi + alpha
            beta, d_beta = -math.pi - alpha + v * width, (-math.pi + v * math.pi, width)
        else:
            alpha, d_alpha = math.pi * u, (math.pi, 0.0)
            width = 2 * math.pi - alpha
            beta, d_beta = -math.pi + v * width, (-math.pi * v, width)
        x = cmath.exp(1j * alpha)
        y = cmath.exp(1j * beta)
        dx = tuple(1j * x * d for d in d_alpha)
        dy = tuple(1j * y * d for d in d_beta)
        return x, dx, y, dy

    def x_coord(u: float, v: float):
        x, dx, _, _ = angles(u, v)
        return x, dx[0], dx[1]

    def z_coord(u: float, v: float):
        x, dx, y, dy = angles(u, v)
        num = 1 + x + 2 * x * y
        den = 1 - x
        dz = [
            ((dx[k] + 2 * (dx[k] * y + x * dy[k])) * den + num * dx[k]) / den ** 2
            for k in range(2)
        ]
        return num / den, dz[0], dz[1]

    return [x_coord, z_coord]


def _graded_surface(
    coords: Sequence[PatchCoordinate], corner: Tuple[float, float], cutoff: float
) -> complex:
    """Surface integral over the unit square, halving towards ``corner``.

    The integrand is bounded but discontinuous at the corner, where z vanishes.
    """
    cu, cv = corner
    u0, u1, v0, v1 = 0.0, 1.0, 0.0, 1.0
    total = 0j
    for _ in range(BLOCK_LEVELS):
        um, vm = (u0 + u1) / 2, (v0 + v1) / 2
        kept = None
        for su in ((u0, um), (um, u1)):
            for sv in ((v0, vm), (vm, v1)):
                if su[0] <= cu <= su[1] and sv[0] <= cv <= sv[1]:
                    kept = (su, sv)
                    continue
                patch = PatchSpec(coords, su[0], su[1], sv[0], sv[1])
                total += surface_integral(BLOCK_FORM, patch, BLOCK_RESOLUTION, cutoff)
        (u0, u1), (v0, v1) = kept
    return total + surface_integral(BLOCK_FORM, PatchSpec(coords, u0, u1, v0, v1), BLOCK_RESOLUTION, cutoff)


def block_integral(cfg: Optional[QuadratureConfig] = None) -> float:
    """-integral over B of eta(2, x, z) (equals 2 pi^2 log 2)."""
    cfg = cfg or QuadratureConfig()
    total = 0j
    for lower, corner in ((True, (1.0, 1.0)), (False, (0.0, 1.0))):
        total += _graded_surface(_block_coordinates(lower), corner, cfg.singular_cutoff)
    value = -total.real
    if not math.isfinite(value):
        raise IntegrationError("The log 2 block integral is not finite")
    logger.info("Block integral %.10f (imaginary part %.1e)", value, total.imag)
    return value


def log2_block(cfg: Optional[QuadratureConfig] = None) -> float:
    """-integral over B of eta(2, x, z), divided by 2 pi^2."""
    return block_integral(cfg) / (2 * math.pi ** 2)


def tail_sum(l: int, lam: Fraction = TAIL_LAMBDA) -> float:
    """sum_{k >= l} C(k, l) lam^k / k, summed until the terms vanish."""
    if l < 1:
        raise ValueError("l must be at least 1")
    lam = float(lam)
    total = 0.0
    k = l
    while True:
        term = comb(k, l) * lam ** k / k
        total += term
        if k > 2 * l and term < 1e-18 * total:
            return total
        k += 1


def tail_closed(l: int, lam: Fraction = TAIL_LAMBDA) -> float:
    """lam^l / (l (1 - lam)^l)."""
    return float(lam ** l / (l * (1 - lam) ** l))


def tail_residual(max_l: int = TAIL_MAX_L, lam: Fraction = TAIL_LAMBDA) -> float:
    return max(abs(tail_sum(l, lam) - tail_closed(l, lam)) for l in range(1, max_l + 1))


def odd_square_sum() -> float:
    """2 sum_{l >= 1} (1 - (-1)^l) / l^2; only odd l contribute."""
    with mpmath.workdps(30):
        return float(mpmath.nsum(lambda k: 4 / (2 * k + 1) ** 2, [0, mpmath.inf]))


SERIES_EVALUATORS = {
    "tail": lambda params, cfg: sum(tail_sum(l) for l in range(1, int(params.get("max_l", TAIL_MAX_L)) + 1)),
    "odd_squares": lambda params, cfg: odd_square_sum(),
    "log2_block": lambda params, cfg: log2_block(cfg),
    "limit_log2": lambda params, cfg: limit_series(int(params.get("m", 41))),
}


# records -------------------------------------------------------------------------------


@dataclass
class IdentityRecord:
    id: str
    kind: str
    input: Dict[str, Any]
    closed_form: ClosedForm
    source: str
    tolerance: float
    tolerances: Dict[str, float] = field(default_factory=dict)
    note: str = ""

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"Unknown identity kind '{self.kind}'")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")

    @property
    def methods(self) -> Tuple[str, ...]:
        return KIND_METHODS[self.kind] + (CLOSED_ONLY,)

    @property
    def default_method(self) -> str:
        return KIND_METHODS[self.kind][0]

    def tolerance_for(self, method: str) -> float:
        return self.tolerances.get(method, self.tolerance)

    def closed_value(self) -> float:
        return evaluate_closed_form(self.closed_form)

    def relation(self) -> RelationSpec:
        rel = RelationSpec.from_dict(self.input)
        if rel is None:
            raise ValueError(f"Record '{self.id}' does not carry a valid relation")
        return rel

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind,
            "input": copy.deepcopy(self.input),
            "closed_form": copy.deepcopy(self.closed_form),
            "closed_form_text": closed_form_text(self.closed_form),
            "source": self.source,
            "tolerance": self.tolerance,
            "tolerances": dict(self.tolerances),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Optional["IdentityRecord"]:
        try:
            return cls(
                id=str(data["id"]),
                kind=str(data["kind"]),
                input=dict(data["input"]),
                closed_form=data["closed_form"],
                source=str(data["source"]),
                tolerance=float(data["tolerance"]),
                tolerances={str(k): float(v) for k, v in (data.get("tolerances") or {}).items()},
                note=str(data.get("note", "")),
            )
        except (KeyError, TypeError, ValueError):
            return None


def _mahler(id_, polynomial, var, form, source, tolerance, **extra) -> IdentityRecord:
    data = {"polynomial": polynomial, "var": var}
    quadrature = extra.pop("quadrature", None)
    if quadrature:
        data["quadrature"] = quadrature
    return IdentityRecord(id_, "mahler", data, form, source, tolerance, **extra)


def _gmm(id_, family, n, form, source, tolerance=1e-8) -> IdentityRecord:
    return IdentityRecord(
        id_,
        "gmm",
        FamilySpec(family, n).to_dict(),
        form,
        source,
        tolerance,
        tolerances={"direct": 5e-3, "auxiliary": 1e-4},
    )


def _build_registry() -> List[IdentityRecord]:
    zeta3_over_pi2 = lambda c: ["mul", _q(c), ["pi", -2], ["zeta", 3]]
    records = [
        _mahler("smyth_xyz", "1+x+y+z", "z", zeta3_over_pi2(Fraction(7, 2)), "Smyth", 1e-5),
        _mahler("smyth2", "1+x+y^-1-(1+x+y)*z", "z", zeta3_over_pi2(Fraction(14, 3)), "Smyth", 1e-4,
                note="Uncleared form; the measure of 1+x+y is not zero."),
        _mahler("lalin_4_3", "(1-x)*(1-y)+(1+x)*(1+y)*z", "z", zeta3_over_pi2(7),
                "trilogarithm evaluation of (1-x)(1-y) + (1+x)(1+y)z", 1e-4),
        _mahler("lalin_log2", "1+x+2*y+(1-x)*z", "z",
                ["add", zeta3_over_pi2(Fraction(7, 2)), ["mul", ["q", 1, 2], ["log", ["q", 2, 1]]]],
                "trilogarithm evaluation with a log 2 block", 1e-4),
        _mahler("condon", "(1-y)*(1+x)+(1-x)*z", "z", zeta3_over_pi2(Fraction(28, 5)), "Condon", 1e-4),
        _mahler("fourvar", "(1+x1)*(1+x)+(1-x1)*(1+y)*z", "z",
                ["mul", ["q", 24, 1], ["pi", -3], ["beta", 4]],
                "four-variable L(chi_-4, 4) evaluation", 5e-3,
                quadrature={"method": "quasi-mc", "total_samples": 1 << 23},
                tolerances={"direct": 1e-2}),
        _gmm("gmm_ratio_2", "ratio", 2, zeta3_over_pi2(7), "generalized measure, ratio family"),
        _gmm("gmm_ratio_3", "ratio", 3, zeta_terms_form(ratio_terms(3)), "generalized measure, ratio family"),
        _gmm("gmm_golden_1", "golden", 1, ["log", GOLDEN], "generalized measure, golden family"),
        _gmm(
            "gmm_golden_2",
            "golden",
            2,
            [
                "add",
                ["mul", ["q", 2, 1], ["pi", -2], ["li", 3, GOLDEN_CONJUGATE_SQ]],
                ["mul", ["q", -2, 1], ["pi", -2], ["li", 3, ["mul", ["q", -1, 1], GOLDEN_CONJUGATE_SQ]]],
                ["mul", ["q", -1, 1], ["log", GOLDEN_CONJUGATE]],
            ],
            "generalized measure, golden family",
        ),
    ]
    for n in range(1, 5):
        records.append(
            _gmm(f"gmm_1mx_{n}", "one_minus_x", n, zeta_terms_form(one_minus_x_terms(n)),
                 "generalized measure, 1 - x family")
        )
    for name, rel in builtin_relations().items():
        records.append(
            IdentityRecord(name, "polylog_relation", rel.to_dict(), ["q", 0, 1],
                           "polylogarithm functional equation", RELATION_TOLERANCE,
                           note="Checked through L_n images; torsion in the Bloch group is invisible here.")
        )
    records.extend(
        [
            IdentityRecord("series_tail", "series", {"series": "tail", "max_l": TAIL_MAX_L},
                           _q(sum(Fraction(1, l) for l in range(1, TAIL_MAX_L + 1))),
                           "sum_{k>=l} C(k,l) / (k 2^k) = 1/l for l = 1..10", 1e-11),
            IdentityRecord("series_zeta2", "series", {"series": "odd_squares"},
                           ["mul", ["q", 1, 2], ["pi", 2]], "2 sum (1 - (-1)^l)/l^2 = pi^2/2", 1e-10),
            IdentityRecord("log2_block", "series", {"series": "log2_block"}, ["log", ["q", 2, 1]],
                           "-int_B eta(2, x, z) = 2 pi^2 log 2", 1e-4),
            IdentityRecord("limit_log2", "series", {"series": "limit_log2", "m": 41}, ["log", ["q", 2, 1]],
                           "limit of the odd 1 - x generalized measures", 1e-2),
        ]
    )
    ids = [r.id for r in records]
    if len(ids) != len(set(ids)):
        raise RuntimeError("Duplicate identity ids in the registry")
    return records


_REGISTRY: Optional[List[IdentityRecord]] = None


def registry() -> List[IdentityRecord]:
    """All built-in identities, in a fixed order. Callers get private copies."""
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build_registry()
    return copy.deepcopy(_REGISTRY)


def lookup(identity_id: str) -> IdentityRecord:
    for record in registry():
        if record.id == identity_id:
            return record
    raise KeyError(f"Unknown identity '{identity_id}'")


# verification ------------------------------------------------------------------------


@dataclass
class VerificationReport:
    id: str
    numeric_value: float
    closed_value: float
    tolerance: float
    method: str
    error_estimate: float = 0.0
    samples: int = 1
    seed: int = 0
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def abs_diff(self) -> float:
        return abs(self.numeric_value - self.closed_value)

    @property
    def passed(self) -> bool:
        return self.abs_diff <= self.tolerance

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.id,
            "numeric_value": self.numeric_value,
            "closed_value": self.closed_value,
            "abs_diff": self.abs_diff,
            "tolerance": self.tolerance,
            "pass": self.passed,
            "method": self.method,
            "error_estimate": self.error_estimate,
            "samples": self.samples,
            "seed": self.seed,
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Optional["VerificationReport"]:
        try:
            return cls(
                id=str(data["id"]),
                numeric_value=float(data["numeric_value"]),
                closed_value=float(data["closed_value"]),
                tolerance=float(data["tolerance"]),
                method=str(data["method"]),
                error_estimate=float(data.get("error_estimate", 0.0)),
                samples=int(data.get("samples", 1)),
                seed=int(data.get("seed", 0)),
                metadata=dict(data.get("metadata") or {}),
            )
        except (KeyError, TypeError, ValueError):
            return None


def _record_config(record: IdentityRecord, cfg: QuadratureConfig) -> QuadratureConfig:
    overrides = record.input.get("quadrature") or {}
    if cfg.method != "auto":
        overrides = {k: v for k, v in overrides.items() if k != "method"}
    return cfg.with_changes(**overrides)


def _numeric_mahler(record: IdentityRecord, method: str, cfg: QuadratureConfig):
    p = parse(record.input["polynomial"])
    result = mahler_measure(p, _record_config(record, cfg), method=method, var=record.input.get("var"))
    return result.value, result.error_estimate, result.samples_used, result.metadata


def _numeric_gmm(record: IdentityRecord, method: str, cfg: QuadratureConfig):
    spec = FamilySpec.from_dict(record.input)
    if spec is None:
        raise ValueError(f"Record '{record.id}' does not carry a valid family")
    if method == "order_stat":
        result = gmm_order_stat(family_profile(spec.family), spec.n, cfg)
    elif method == "direct":
        result = gmm_direct(family_polynomials(spec.family, spec.n), cfg)
    else:
        if spec.n != 2:
            raise ValueError(f"The auxiliary-variable method needs exactly two functions, '{record.id}' has {spec.n}")
        f1, f2 = family_polynomials(spec.family, 2)
        result = gmm_via_auxiliary(f1, f2, cfg)
    return result.value, result.error_estimate, result.samples_used, result.metadata


def _numeric_relation(record: IdentityRecord, cfg: QuadratureConfig):
    rel = record.relation()
    points = sample_points(rel, seed=cfg.seed)
    values = [rel.evaluate(point) for point in points]
    worst = max(values, key=abs)
    return worst, 0.0, len(points), {"order": rel.order, "sample_points": len(points)}


def _numeric_series(record: IdentityRecord, cfg: QuadratureConfig):
    name = record.input["series"]
    try:
        evaluator = SERIES_EVALUATORS[name]
    except KeyError:
        raise ValueError(f"Unknown series '{name}'") from None
    return evaluator(record.input, cfg), 0.0, 1, {"series": name}


def verify(
    identity_id: str,
    method: Optional[str] = None,
    cfg: Optional[QuadratureConfig] = None,
    tol: Optional[float] = None,
) -> VerificationReport:
    """Compare an independent numeric value with the record's closed form."""
    record = lookup(identity_id)
    cfg = cfg or QuadratureConfig()
    method = method or record.default_method
    if method not in record.methods:
        raise ValueError(
            f"Method '{method}' does not apply to {record.kind} record '{record.id}'; "
            f"expected one of {record.methods}"
        )
    closed = record.closed_value()
    tolerance = tol if tol is not None else record.tolerance_for(method)
    if method == CLOSED_ONLY:
        numeric, error, samples, metadata = record.closed_value(), 0.0, 1, {}
    elif record.kind == "mahler":
        numeric, error, samples, metadata = _numeric_mahler(record, method, cfg)
    elif record.kind == "gmm":
        numeric, error, samples, metadata = _numeric_gmm(record, method, cfg)
    elif record.kind == "polylog_relation":
        numeric, error, samples, metadata = _numeric_relation(record, cfg)
    else:
        numeric, error, samples, metadata = _numeric_series(record, cfg)
    report = VerificationReport(
        id=record.id,
        numeric_value=float(numeric),
        closed_value=closed,
        tolerance=tolerance,
        method=method,
        error_estimate=float(error),
        samples=int(samples),
        seed=cfg.seed,
        metadata=metadata,
    )
    log = logger.info if report.passed else logger.warning
    log("%s [%s]: %.12g vs %.12g (diff %.2e, tol %.1e)",
        record.id, method, report.numeric_value, closed, report.abs_diff, tolerance)
    return report


async def verify_all(
    cfg: Optional[QuadratureConfig] = None,
    threads: int = 1,
    ids: Optional[Sequence[str]] = None,
    tol: Optional[float] = None,
) -> List[VerificationReport]:
    """Verify records concurrently; reports come back in registry order."""
    cfg = cfg or QuadratureConfig()
    selected = list(ids) if ids is not None else [r.id for r in registry()]
    semaphore = asyncio.Semaphore(max(1, threads))

    async def run(identity_id: str) -> VerificationReport:
        async with semaphore:
            return await run_blocking(verify, identity_id, None, cfg, tol)

    return list(await asyncio.gather(*(run(i) for i in selected)))


def export_registry(path: Path) -> None:
    path = Path(path)
    with file_lock(path.with_suffix(path.suffix + ".lock")):
        atomic_write_json(path, [r.to_dict() for r in registry()], indent=2)


def export_reports(path: Path, reports: Sequence[VerificationReport]) -> None:
    path = Path(path)
    with file_lock(path.with_suffix(path.suffix + ".lock")):
        atomic_write_json(path, [r.to_dict() for r in reports], indent=2)
