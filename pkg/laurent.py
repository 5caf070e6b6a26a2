"""Exact multivariate Laurent polynomials with integer coefficients.

Terms are kept as a sorted tuple of (exponent vector, coefficient) pairs so
values are hashable and compare structurally. Products and exact quotients
go through sympy's dense polynomials after the common monomial is split off.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping

import sympy
from sympy.parsing.sympy_parser import parse_expr
from sympy.polys.polyerrors import ExactQuotientFailed

from errors import InexactDivision, InvariantViolation

logger = logging.getLogger(__name__)

Exponents = tuple[int, ...]


def variables(n: int, prefix: str = "u") -> tuple[sympy.Symbol, ...]:
    """Symbols prefix1..prefixn."""
    return tuple(sympy.Symbol(f"{prefix}{i}") for i in range(1, n + 1))


def _display_key(exps: Exponents) -> tuple:
    return (sum(exps), tuple(-e for e in exps))


@dataclass(frozen=True)
class LaurentPoly:
    gens: tuple[sympy.Symbol, ...]
    terms: tuple[tuple[Exponents, int], ...]

    # --- construction -----------------------------------------------------

    @classmethod
    def from_terms(cls, terms: Mapping[Exponents, int] | Iterable[tuple[Exponents, int]],
                   gens: tuple[sympy.Symbol, ...]) -> LaurentPoly:
        merged: dict[Exponents, int] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for exps, coeff in items:
            exps = tuple(int(e) for e in exps)
            if len(exps) != len(gens):
                raise InvariantViolation(f"exponent vector {exps} does not match {len(gens)} generators")
            merged[exps] = merged.get(exps, 0) + int(coeff)
        return cls(gens=tuple(gens), terms=tuple(sorted((e, c) for e, c in merged.items() if c)))

    @classmethod
    def constant(cls, value: int, gens) -> LaurentPoly:
        return cls.from_terms({(0,) * len(gens): value}, gens)

    @classmethod
    def monomial(cls, exps, gens, coeff: int = 1) -> LaurentPoly:
        return cls.from_terms({tuple(exps): coeff}, gens)

    @classmethod
    def generator(cls, i: int, gens) -> LaurentPoly:
        """The i-th generator, 1-based."""
        return cls.monomial(tuple(int(k == i - 1) for k in range(len(gens))), gens)

    @classmethod
    def from_poly(cls, shift: Exponents, poly: sympy.Poly, gens) -> LaurentPoly:
        return cls.from_terms(
            ((tuple(a + b for a, b in zip(exps, shift)), int(coeff)) for exps, coeff in poly.terms()),
            gens,
        )

    @classmethod
    def parse(cls, text: str, gens) -> LaurentPoly:
        """Parse text such as ``(u2^2+1+u1)/(u1*u2)``; the denominator must be a monomial."""
        names = {str(g): g for g in gens}
        expr = parse_expr(text.replace("^", "**"), local_dict=names)
        num, den = sympy.fraction(sympy.together(expr))
        num_poly = sympy.Poly(num, *gens, domain=sympy.ZZ)
        den_poly = sympy.Poly(den, *gens, domain=sympy.ZZ)
        den_terms = den_poly.terms()
        if len(den_terms) != 1:
            raise ValueError(f"denominator of {text!r} is not a monomial")
        den_exps, den_coeff = den_terms[0]
        terms = {}
        for exps, coeff in num_poly.terms():
            value, rest = divmod(int(coeff), int(den_coeff))
            if rest:
                raise ValueError(f"{text!r} has non-integral coefficients")
            terms[tuple(a - b for a, b in zip(exps, den_exps))] = value
        return cls.from_terms(terms, gens)

    # --- inspection -------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.gens)

    def is_zero(self) -> bool:
        return not self.terms

    def as_dict(self) -> dict[Exponents, int]:
        return dict(self.terms)

    def coefficient(self, exps) -> int:
        return self.as_dict().get(tuple(exps), 0)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def is_positive(self) -> bool:
        return all(c > 0 for _, c in self.terms)

    def min_exponents(self) -> Exponents:
        if not self.terms:
            return (0,) * self.n
        return tuple(min(e[i] for e, _ in self.terms) for i in range(self.n))

    def denominator_vector(self) -> Exponents:
        """Negated componentwise minimal exponents."""
        return tuple(-e for e in self.min_exponents())

    def to_pairs(self) -> list[list]:
        """Serialization: sorted [exponents, coefficient] pairs."""
        return [[list(e), c] for e, c in self.terms]

    def _split(self) -> tuple[Exponents, sympy.Poly]:
        low = self.min_exponents()
        data = {tuple(a - b for a, b in zip(e, low)): c for e, c in self.terms}
        return low, sympy.Poly.from_dict(data or {(0,) * self.n: 0}, *self.gens, domain=sympy.ZZ)

    def _check_gens(self, other: LaurentPoly) -> None:
        if self.gens != other.gens:
            raise InvariantViolation(f"generators differ: {self.gens} vs {other.gens}")

    # --- arithmetic -------------------------------------------------------

    def _coerce(self, other) -> LaurentPoly:
        if isinstance(other, LaurentPoly):
            self._check_gens(other)
            return other
        if isinstance(other, int):
            return LaurentPoly.constant(other, self.gens)
        return NotImplemented

    def __add__(self, other) -> LaurentPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return LaurentPoly.from_terms(list(self.terms) + list(other.terms), self.gens)

    __radd__ = __add__

    def __neg__(self) -> LaurentPoly:
        return LaurentPoly(self.gens, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other) -> LaurentPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> LaurentPoly:
        return (-self) + other

    def __mul__(self, other) -> LaurentPoly:
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return LaurentPoly(self.gens, ())
        a, p = self._split()
        b, r = other._split()
        return LaurentPoly.from_poly(tuple(x + y for x, y in zip(a, b)), p * r, self.gens)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> LaurentPoly:
        if k >= 0:
            if k == 0:
                return LaurentPoly.constant(1, self.gens)
            a, p = self._split()
            return LaurentPoly.from_poly(tuple(k * x for x in a), p ** k, self.gens)
        if not self.is_monomial() or abs(self.terms[0][1]) != 1:
            raise InexactDivision(f"cannot invert {self}")
        exps, coeff = self.terms[0]
        return LaurentPoly.monomial(tuple(k * e for e in exps), self.gens, coeff ** (-k))

    def exact_div(self, other: LaurentPoly) -> LaurentPoly:
        """self / other, which must be a Laurent polynomial."""
        self._check_gens(other)
        if other.is_zero():
            raise InexactDivision("division by zero")
        if self.is_zero():
            return self
        a, p = self._split()
        b, r = other._split()
        try:
            quotient = p.exquo(r)
        except ExactQuotientFailed as exc:
            raise InexactDivision(f"({self}) / ({other}) is not a Laurent polynomial") from exc
        return LaurentPoly.from_poly(tuple(x - y for x, y in zip(a, b)), quotient, self.gens)

    # --- substitutions ----------------------------------------------------

    def evaluate(self, values: list[LaurentPoly]) -> LaurentPoly:
        """Substitute ``values[i]`` for the i-th generator."""
        if len(values) != self.n:
            raise InvariantViolation(f"need {self.n} values, got {len(values)}")
        target = values[0].gens
        result = LaurentPoly(target, ())
        for exps, coeff in self.terms:
            term = LaurentPoly.constant(coeff, target)
            for value, k in zip(values, exps):
                if k:
                    term = term * value ** k
            result = result + term
        return result

    def restrict(self, n: int) -> LaurentPoly:
        """Set every generator after the first n to 1."""
        return LaurentPoly.from_terms(((e[:n], c) for e, c in self.terms), self.gens[:n])

    def rescaled(self, scale: int) -> LaurentPoly:
        """Divide every exponent by ``scale``; all exponents must be multiples of it."""
        if any(x % scale for e, _ in self.terms for x in e):
            raise InvariantViolation(f"exponents of {self} are not multiples of {scale}")
        return LaurentPoly.from_terms(((tuple(x // scale for x in e), c) for e, c in self.terms), self.gens)

    # --- display ----------------------------------------------------------

    def _format_monomial(self, exps: Exponents, coeff: int) -> str:
        factors = [
            str(g) if e == 1 else f"{g}^{e}" for g, e in zip(self.gens, exps) if e
        ]
        if not factors:
            return str(coeff)
        body = "*".join(factors)
        if coeff == 1:
            return body
        if coeff == -1:
            return f"-{body}"
        return f"{coeff}*{body}"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        low = self.min_exponents()
        den = tuple(max(-x, 0) for x in low)
        shifted = sorted(
            ((tuple(a + b for a, b in zip(e, den)), c) for e, c in self.terms),
            key=lambda t: _display_key(t[0]),
        )
        num = ""
        for exps, coeff in shifted:
            piece = self._format_monomial(exps, coeff)
            if num and not piece.startswith("-"):
                num += "+"
            num += piece
        if not any(den):
            return num
        if len(shifted) > 1:
            num = f"({num})"
        den_text = self._format_monomial(den, 1)
        if sum(1 for x in den if x) > 1:
            den_text = f"({den_text})"
        return f"{num}/{den_text}"

    def __repr__(self) -> str:
        return f"LaurentPoly({self})"
