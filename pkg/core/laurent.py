"""Sparse multivariate Laurent polynomials with exact coefficients.

Coefficients are stored as :class:`fractions.Fraction` (or
:class:`GaussianRational` for complex input) and only become floats when a
polynomial is evaluated. Variables are kept in order of first appearance.
"""

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

Exponents = Tuple[int, ...]


@dataclass(frozen=True)
class GaussianRational:
    """Exact complex number with rational real and imaginary parts."""

    re: Fraction
    im: Fraction

    def __add__(self, other):
        other = _as_gaussian(other)
        if other is None:
            return NotImplemented
        return _normalize(GaussianRational(self.re + other.re, self.im + other.im))

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        other = _as_gaussian(other)
        if other is None:
            return NotImplemented
        return _normalize(GaussianRational(self.re - other.re, self.im - other.im))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_gaussian(other)
        if other is None:
            return NotImplemented
        return _normalize(
            GaussianRational(
                self.re * other.re - self.im * other.im,
                self.re * other.im + self.im * other.re,
            )
        )

    __rmul__ = __mul__

    def inverse(self) -> "GaussianRational":
        norm = self.re * self.re + self.im * self.im
        if norm == 0:
            raise ZeroDivisionError("inverse of zero")
        return GaussianRational(self.re / norm, -self.im / norm)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational(self.re, -self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __str__(self) -> str:
        return f"({self.re}+{self.im}*i)" if self.im >= 0 else f"({self.re}-{-self.im}*i)"


Coefficient = Union[Fraction, GaussianRational]


def _as_gaussian(value) -> Optional[GaussianRational]:
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (int, Fraction)):
        return GaussianRational(Fraction(value), Fraction(0))
    return None


def _normalize(value: GaussianRational) -> Coefficient:
    if value.im == 0:
        return value.re
    return value


def _coerce(value) -> Coefficient:
    if isinstance(value, bool):
        raise TypeError("boolean is not a valid coefficient")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, GaussianRational):
        return _normalize(GaussianRational(Fraction(value.re), Fraction(value.im)))
    raise TypeError(f"Unsupported coefficient type: {type(value).__name__}")


def _invert(value: Coefficient) -> Coefficient:
    if isinstance(value, GaussianRational):
        return _normalize(value.inverse())
    return 1 / value


class ParseError(ValueError):
    """Polynomial text could not be parsed; ``position`` is a 0-based offset."""

    def __init__(self, reason: str, position: int, text: str = "") -> None:
        super().__init__(f"{reason} at position {position}")
        self.reason = reason
        self.position = position
        self.text = text

    def caret(self) -> str:
        return f"{self.text}\n{' ' * self.position}^"


class LaurentPolynomial:
    """Immutable sparse Laurent polynomial.

    Two polynomials compare equal when they have the same terms, regardless of
    the order (or presence) of variables that never occur with a nonzero
    exponent.
    """

    __slots__ = ("_vars", "_terms", "_key")

    def __init__(
        self,
        variables: Sequence[str],
        terms: Mapping[Sequence[int], object],
    ) -> None:
        variables = tuple(variables)
        if len(set(variables)) != len(variables):
            raise ValueError(f"Duplicate variable names in {variables}")
        cleaned: Dict[Exponents, Coefficient] = {}
        for exps, coeff in terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(variables):
                raise ValueError(
                    f"Exponent vector {exps} does not match {len(variables)} variables"
                )
            value = _coerce(coeff)
            if value:
                cleaned[exps] = value
        self._vars: Tuple[str, ...] = variables
        self._terms: Dict[Exponents, Coefficient] = cleaned
        self._key = None

    # construction -----------------------------------------------------

    @classmethod
    def constant(cls, value, variables: Sequence[str] = ()) -> "LaurentPolynomial":
        return cls(variables, {(0,) * len(variables): value})

    @classmethod
    def variable(cls, name: str, variables: Optional[Sequence[str]] = None) -> "LaurentPolynomial":
        variables = tuple(variables) if variables is not None else (name,)
        if name not in variables:
            raise ValueError(f"Variable '{name}' is not among {variables}")
        exps = tuple(1 if v == name else 0 for v in variables)
        return cls(variables, {exps: 1})

    # accessors --------------------------------------------------------

    @property
    def variables(self) -> Tuple[str, ...]:
        return self._vars

    @property
    def terms(self) -> Dict[Exponents, Coefficient]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_complex(self) -> bool:
        return any(isinstance(c, GaussianRational) for c in self._terms.values())

    def active_variables(self) -> Tuple[str, ...]:
        """Variables that occur with a nonzero exponent, in stored order."""
        return tuple(
            name
            for k, name in enumerate(self._vars)
            if any(exps[k] != 0 for exps in self._terms)
        )

    def is_constant(self) -> bool:
        return not self.active_variables()

    def constant_value(self) -> Coefficient:
        if not self.is_constant():
            raise ValueError("Polynomial is not constant")
        return next(iter(self._terms.values()), Fraction(0))

    def coefficient(self, monomial: Mapping[str, int]) -> Coefficient:
        """Coefficient of the monomial given as ``{var: exponent}``."""
        unknown = set(monomial) - set(self._vars)
        if any(monomial[name] for name in unknown):
            return Fraction(0)
        exps = tuple(int(monomial.get(v, 0)) for v in self._vars)
        return self._terms.get(exps, Fraction(0))

    def degree_in(self, var: str) -> int:
        k = self._index(var)
        return max(exps[k] for exps in self._terms) if self._terms else 0

    def min_exponent(self, var: str) -> int:
        k = self._index(var)
        return min(exps[k] for exps in self._terms) if self._terms else 0

    def _index(self, var: str) -> int:
        try:
            return self._vars.index(var)
        except ValueError:
            raise ValueError(f"Variable '{var}' does not occur in {self}") from None

    # equality ---------------------------------------------------------

    def _canonical(self):
        if self._key is None:
            items = []
            for exps, coeff in self._terms.items():
                monomial = frozenset((v, e) for v, e in zip(self._vars, exps) if e)
                items.append((monomial, coeff))
            self._key = frozenset(items)
        return self._key

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction, GaussianRational)):
            other = LaurentPolynomial.constant(other)
        if not isinstance(other, LaurentPolynomial):
            return NotImplemented
        return self._canonical() == other._canonical()

    def __hash__(self) -> int:
        return hash(self._canonical())

    # arithmetic -------------------------------------------------------

    def with_variables(self, variables: Sequence[str]) -> "LaurentPolynomial":
        """Re-express over ``variables``, which must contain every active variable."""
        variables = tuple(variables)
        if variables == self._vars:
            return self
        missing = [v for v in self.active_variables() if v not in variables]
        if missing:
            raise ValueError(f"Variables {missing} are missing from {variables}")
        positions = {v: k for k, v in enumerate(self._vars)}
        new_terms: Dict[Exponents, Coefficient] = {}
        for exps, coeff in self._terms.items():
            key = tuple(exps[positions[v]] if v in positions else 0 for v in variables)
            new_terms[key] = coeff
        return LaurentPolynomial(variables, new_terms)

    def _align(self, other: "LaurentPolynomial"):
        if other._vars == self._vars:
            return self, other
        merged = list(self._vars) + [v for v in other._vars if v not in self._vars]
        return self.with_variables(merged), other.with_variables(merged)

    def _lift(self, other) -> Optional["LaurentPolynomial"]:
        if isinstance(other, LaurentPolynomial):
            return other
        if isinstance(other, (int, Fraction, GaussianRational)) and not isinstance(other, bool):
            return LaurentPolynomial.constant(other, self._vars)
        return None

    def __add__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        a, b = self._align(other)
        terms = dict(a._terms)
        for exps, coeff in b._terms.items():
            terms[exps] = terms.get(exps, 0) + coeff
        return LaurentPolynomial(a._vars, terms)

    __radd__ = __add__

    def __neg__(self) -> "LaurentPolynomial":
        return LaurentPolynomial(self._vars, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is None:
            return NotImplemented
        a, b = self._align(other)
        terms: Dict[Exponents, Coefficient] = {}
        for e1, c1 in a._terms.items():
            for e2, c2 in b._terms.items():
                key = tuple(x + y for x, y in zip(e1, e2))
                terms[key] = terms.get(key, 0) + c1 * c2
        return LaurentPolynomial(a._vars, terms)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "LaurentPolynomial":
        if not isinstance(exponent, int) or isinstance(exponent, bool):
            raise ValueError("Exponent must be an integer")
        if exponent < 0:
            if len(self._terms) != 1:
                raise ValueError("Negative power of a non-monomial")
            (exps, coeff), = self._terms.items()
            inv = _invert(coeff)
            return LaurentPolynomial(
                self._vars, {tuple(-e for e in exps): inv}
            ) ** (-exponent)
        result = LaurentPolynomial.constant(1, self._vars)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def substitute_inverse(self) -> "LaurentPolynomial":
        """Return p(x_1^-1, ..., x_n^-1)."""
        return LaurentPolynomial(
            self._vars, {tuple(-e for e in exps): c for exps, c in self._terms.items()}
        )

    def conjugate_coefficients(self) -> "LaurentPolynomial":
        return LaurentPolynomial(
            self._vars,
            {
                e: (c.conjugate() if isinstance(c, GaussianRational) else c)
                for e, c in self._terms.items()
            },
        )

    def multiply_monomial(self, monomial: Mapping[str, int]) -> "LaurentPolynomial":
        names = list(self._vars) + [v for v in monomial if v not in self._vars]
        p = self.with_variables(names)
        shift = tuple(int(monomial.get(v, 0)) for v in names)
        return LaurentPolynomial(
            names,
            {tuple(x + s for x, s in zip(exps, shift)): c for exps, c in p._terms.items()},
        )

    def primitive(self) -> "LaurentPolynomial":
        """Scale to coprime integer coefficients with a positive leading term."""
        if self.is_zero:
            raise ValueError("Zero polynomial has no primitive part")
        if self.is_complex:
            raise ValueError("primitive() requires real rational coefficients")
        denominators = lcm(*(c.denominator for c in self._terms.values()))
        numerators = [int(c * denominators) for c in self._terms.values()]
        content = 0
        for value in numerators:
            content = gcd(content, value)
        scale = Fraction(denominators, content)
        lead = self._terms[max(self._terms, key=_graded_key)]
        if lead < 0:
            scale = -scale
        return LaurentPolynomial(self._vars, {e: c * scale for e, c in self._terms.items()})

    # restructuring ----------------------------------------------------

    def shift_nonnegative(self, var: str) -> Tuple["LaurentPolynomial", int]:
        """Multiply by ``var**s`` so that ``var`` has only nonnegative exponents.

        Returns the shifted polynomial and ``s``. On the torus this leaves the
        Mahler measure unchanged.
        """
        low = self.min_exponent(var)
        if low >= 0:
            return self, 0
        return self.multiply_monomial({var: -low}), -low

    def as_poly_in(self, var: str) -> List["LaurentPolynomial"]:
        """Coefficients ``[a_0, ..., a_d]`` of ``self`` viewed as a polynomial in ``var``."""
        if var not in self.active_variables():
            raise ValueError(f"Variable '{var}' does not occur in {self}")
        k = self._vars.index(var)
        if self.min_exponent(var) < 0:
            raise ValueError(
                f"Variable '{var}' has negative exponents in {self}; shift first"
            )
        rest = self._vars[:k] + self._vars[k + 1:]
        degree = self.degree_in(var)
        buckets: List[Dict[Exponents, Coefficient]] = [dict() for _ in range(degree + 1)]
        for exps, coeff in self._terms.items():
            buckets[exps[k]][exps[:k] + exps[k + 1:]] = coeff
        return [LaurentPolynomial(rest, bucket) for bucket in buckets]

    @staticmethod
    def from_coefficients(
        coefficients: Sequence["LaurentPolynomial"], var: str
    ) -> "LaurentPolynomial":
        """Reassemble ``sum(a_k * var**k)``; inverse of :meth:`as_poly_in`."""
        total = LaurentPolynomial.constant(0)
        x = LaurentPolynomial.variable(var)
        for k, coeff in enumerate(coefficients):
            total = total + coeff * x ** k
        return total

    # evaluation -------------------------------------------------------

    def evaluate(self, point: Sequence[complex]) -> complex:
        if len(point) != len(self._vars):
            raise ValueError(
                f"Expected {len(self._vars)} coordinates, got {len(point)}"
            )
        point = [complex(x) for x in point]
        total = 0j
        for exps, coeff in self._terms.items():
            term = complex(coeff)
            for x, e in zip(point, exps):
                if e == 0:
                    continue
                if x == 0 and e < 0:
                    raise ValueError("Zero coordinate with a negative exponent")
                term *= x ** e
            total += term
        return total

    def _arrays(self, variables: Optional[Sequence[str]] = None):
        variables = self._vars if variables is None else tuple(variables)
        p = self.with_variables(variables)
        if not p._terms:
            return np.zeros((0, len(variables)), dtype=np.int64), np.zeros(0, dtype=complex)
        exps = np.array(list(p._terms.keys()), dtype=np.int64).reshape(len(p._terms), len(variables))
        coeffs = np.array([complex(c) for c in p._terms.values()], dtype=complex)
        return exps, coeffs

    def evaluate_many(
        self, points: np.ndarray, variables: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        """Evaluate at each row of ``points`` (shape ``(N, len(variables))``)."""
        exps, coeffs = self._arrays(variables)
        points = np.asarray(points, dtype=complex)
        if points.ndim != 2 or points.shape[1] != exps.shape[1]:
            raise ValueError(f"Points must have shape (N, {exps.shape[1]})")
        negative = (exps < 0).any(axis=0)
        if np.any((points == 0) & negative[None, :]):
            raise ValueError("Zero coordinate with a negative exponent")
        powers = np.prod(points[:, None, :] ** exps[None, :, :], axis=2)
        return powers @ coeffs

    def evaluate_on_torus(
        self, angles: np.ndarray, variables: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        """Evaluate at ``x_k = exp(2*pi*i*angles[:, k])``."""
        exps, coeffs = self._arrays(variables)
        angles = np.asarray(angles, dtype=float)
        if angles.ndim == 1:
            angles = angles[:, None]
        if angles.shape[1] != exps.shape[1]:
            raise ValueError(f"Angles must have shape (N, {exps.shape[1]})")
        phase = angles @ exps.T.astype(float)
        return np.exp(2j * np.pi * phase) @ coeffs

    # printing ---------------------------------------------------------

    def to_text(self) -> str:
        if not self._terms:
            return "0"
        pieces: List[str] = []
        for exps in sorted(self._terms, key=_graded_key, reverse=True):
            coeff = self._terms[exps]
            factors = [
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(self._vars, exps)
                if e != 0
            ]
            negative = isinstance(coeff, Fraction) and coeff < 0
            magnitude = -coeff if negative else coeff
            if magnitude == 1 and factors:
                body = "*".join(factors)
            else:
                body = "*".join([str(magnitude)] + factors)
            if not pieces:
                pieces.append(f"-{body}" if negative else body)
            else:
                pieces.append(f" - {body}" if negative else f" + {body}")
        return "".join(pieces)

    __str__ = to_text

    def __repr__(self) -> str:
        return f"LaurentPolynomial({self.to_text()!r}, variables={self._vars})"


def _graded_key(exps: Exponents):
    return (sum(abs(e) for e in exps), exps)


@dataclass(frozen=True)
class RationalFunction:
    numerator: LaurentPolynomial
    denominator: LaurentPolynomial

    def __post_init__(self) -> None:
        if self.denominator.is_zero:
            raise ValueError("Denominator is the zero polynomial")

    @classmethod
    def parse(cls, numerator: str, denominator: str = "1") -> "RationalFunction":
        return cls(parse(numerator), parse(denominator))

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.aligned()[0].variables

    def aligned(self) -> Tuple[LaurentPolynomial, LaurentPolynomial]:
        return self.numerator._align(self.denominator)

    def active_variables(self) -> Tuple[str, ...]:
        num, den = self.aligned()
        active = set(num.active_variables()) | set(den.active_variables())
        return tuple(v for v in num.variables if v in active)

    def evaluate(self, point: Sequence[complex]) -> complex:
        num, den = self.aligned()
        bottom = den.evaluate(point)
        if bottom == 0:
            raise ValueError("Rational function evaluated at a pole")
        return num.evaluate(point) / bottom

    def evaluate_on_torus(
        self, angles: np.ndarray, variables: Optional[Sequence[str]] = None
    ) -> np.ndarray:
        num, den = self.aligned()
        variables = num.variables if variables is None else variables
        with np.errstate(divide="ignore", invalid="ignore"):
            return num.evaluate_on_torus(angles, variables) / den.evaluate_on_torus(angles, variables)

    def substitute_inverse(self) -> "RationalFunction":
        return RationalFunction(
            self.numerator.substitute_inverse(), self.denominator.substitute_inverse()
        )

    def __str__(self) -> str:
        return f"({self.numerator})/({self.denominator})"


# parsing -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?)|(?P<ident>[A-Za-z][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


@dataclass
class _Token:
    kind: str
    text: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unknown token {text[pos]!r}", pos, text)
        kind = match.lastgroup
        start = match.start(kind)
        tokens.append(_Token(kind, match.group(kind), start))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_complex: bool) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.index = 0
        self.allow_complex = allow_complex
        names: List[str] = []
        for token in self.tokens:
            if token.kind == "ident" and token.text not in names:
                if allow_complex and token.text == "i":
                    continue
                names.append(token.text)
        self.variables = tuple(names)

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def error(self, reason: str, token: Optional[_Token] = None) -> ParseError:
        token = token or self.current
        return ParseError(reason, token.position, self.text)

    def accept(self, op: str) -> Optional[_Token]:
        token = self.current
        if token.kind == "op" and token.text == op:
            self.index += 1
            return token
        return None

    def expect(self, op: str) -> _Token:
        token = self.accept(op)
        if token is None:
            found = self.current.text or "end of input"
            raise self.error(f"expected {op!r}, found {found!r}")
        return token

    def parse(self) -> LaurentPolynomial:
        if self.current.kind == "end":
            raise self.error("empty expression")
        result = self.expr()
        if self.current.kind != "end":
            raise self.error(f"unexpected {self.current.text!r}")
        return result

    def expr(self) -> LaurentPolynomial:
        negate = False
        if self.accept("-"):
            negate = True
        else:
            self.accept("+")
        total = self.term()
        if negate:
            total = -total
        while True:
            if self.accept("+"):
                total = total + self.term()
            elif self.accept("-"):
                total = total - self.term()
            else:
                return total

    def term(self) -> LaurentPolynomial:
        product = self.factor()
        while self.accept("*"):
            product = product * self.factor()
        return product

    def factor(self) -> LaurentPolynomial:
        base = self.base()
        caret = self.accept("^")
        if caret is None:
            return base
        exponent_token = self.current
        exponent = self.signed_int()
        try:
            return base ** exponent
        except ValueError as exc:
            raise self.error(str(exc), exponent_token) from None

    def signed_int(self) -> int:
        if self.accept("("):
            value = self.signed_int()
            self.expect(")")
            return value
        sign = -1 if self.accept("-") else 1
        token = self.current
        if token.kind != "number" or "." in token.text:
            raise self.error("exponent must be an integer")
        self.index += 1
        return sign * int(token.text)

    def base(self) -> LaurentPolynomial:
        token = self.current
        if token.kind == "number":
            if "." in token.text:
                raise self.error("decimal constants are not supported; use a/b")
            self.index += 1
            value = Fraction(int(token.text))
            if self.accept("/"):
                denominator = self.current
                if denominator.kind != "number" or "." in denominator.text:
                    raise self.error("expected an integer denominator")
                if int(denominator.text) == 0:
                    raise self.error("division by zero", denominator)
                self.index += 1
                value = value / int(denominator.text)
            return LaurentPolynomial.constant(value, self.variables)
        if token.kind == "ident":
            self.index += 1
            if self.allow_complex and token.text == "i":
                return LaurentPolynomial.constant(
                    GaussianRational(Fraction(0), Fraction(1)), self.variables
                )
            return LaurentPolynomial.variable(token.text, self.variables)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        found = token.text or "end of input"
        raise self.error(f"unexpected {found!r}")


def parse(text: str, *, allow_complex: bool = False) -> LaurentPolynomial:
    """Parse polynomial text such as ``"1+x+y^-1-(1+x+y)*z"``.

    With ``allow_complex`` the identifier ``i`` denotes the imaginary unit.
    """
    result = _Parser(text, allow_complex).parse()
    logger.debug("Parsed %r into %d terms over %s", text, len(result), result.variables)
    return result


def parse_many(texts: Iterable[str]) -> List[LaurentPolynomial]:
    return [parse(text) for text in texts]
