"""Cluster characters X_M and the verification suites built on them.

X_M is assembled as u^g F_M(z) and cross-checked against the direct sum
over rank vectors r of chi(Gr_lf(r, M)) prod_i v_i^(-<r, alpha_i> - <alpha_i, m - r>)
with v_i = u_i^(1/c_i), evaluated with exponents scaled by L = lcm(c_i).
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy

import config
from algebra_h import ModuleLift, ModuleSpec, RootSum, as_spec, ext1_dim_lf, find_rigid, hom_dim, is_rigid
from builtin_types import builtin_name_of, lifts_for_type
from cartan_core import (
    CartanDatum,
    RankVector,
    bilinear_form,
    hom_vanishing_order,
    injective_rank_vectors,
    positive_roots,
    root_partial_sum_order,
    simple_root,
)
from cluster_engine import (
    cluster_monomials,
    cluster_variable_for_root,
    exchange_graph,
    g_and_f,
    monomial_value,
    reconstruct,
)
from errors import ConfigError, CrossCheckMismatch, LfccError, NotFound, SingularBasis
from grassmannian import (
    FPolynomialValue,
    check_prop41,
    degree_bound,
    euler_char_gr,
    f_polynomial,
    filtration_exists,
    prop41_bound,
    wrong_order_counts,
)
from laurent import LaurentPoly, variables
from report import VerificationReport

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharacterResult:
    spec: ModuleSpec
    g_vector: tuple[int, ...]
    f_polynomial: FPolynomialValue
    x: LaurentPoly
    primes: tuple[int, ...] | None
    rng_seed: int


def g_vector_of_rank(datum: CartanDatum, m) -> tuple[int, ...]:
    """g_i = -m_i + sum over arrows i -> j of m_j |c_ij|."""
    return tuple(
        -m[i - 1] + sum(m[j - 1] * abs(datum.c(i, j)) for j in datum.out_neighbors(i))
        for i in datum.vertices
    )


def f_as_laurent(f: FPolynomialValue) -> LaurentPoly:
    return LaurentPoly.from_terms(f.coefficients, variables(len(f.rank), "t"))


def definition_character(datum: CartanDatum, f: FPolynomialValue) -> LaurentPoly:
    """X_M evaluated term by term in the v_i, then rewritten in the u_i."""
    scale = math.lcm(*datum.symmetrizer)
    m = f.rank
    terms: dict[tuple[int, ...], int] = {}
    for r, chi in f.coefficients.items():
        rest = tuple(a - b for a, b in zip(m, r))
        exps = []
        for i in datum.vertices:
            alpha = simple_root(datum, i)
            e = -bilinear_form(datum, r, alpha) - bilinear_form(datum, alpha, rest)
            exps.append(e * (scale // datum.d(i)))
        exps = tuple(exps)
        terms[exps] = terms.get(exps, 0) + chi
    scaled = LaurentPoly.from_terms(terms, variables(datum.n, "u"))
    if any(x % scale for e, _ in scaled.terms for x in e):
        raise CrossCheckMismatch(f"fractional exponents survive in {scaled} (scale {scale})")
    return scaled.rescaled(scale)


@lru_cache(maxsize=None)
def _character(datum: CartanDatum, spec: ModuleSpec, primes: tuple[int, ...] | None,
               rng_seed: int) -> CharacterResult:
    m = spec.rank_for(datum)
    f = f_polynomial(datum, spec, primes, rng_seed)
    g = g_vector_of_rank(datum, m)
    x = reconstruct(datum, g, f_as_laurent(f))
    direct = definition_character(datum, f)
    if direct != x:
        raise CrossCheckMismatch(f"X of {spec.label()}: u^g F(z) = {x} but the direct sum gives {direct}")
    logger.info("X_%s = %s", spec.label(), x)
    return CharacterResult(spec=spec, g_vector=g, f_polynomial=f, x=x, primes=primes, rng_seed=rng_seed)


def x_module(datum: CartanDatum, spec, prime_list=None, rng_seed: int = 0) -> CharacterResult:
    """The character X_M of a rigid sum (roots) or an integer-lift module."""
    primes = tuple(prime_list) if prime_list is not None else None
    return _character(datum, as_spec(spec), primes, rng_seed)


def x_nonrigid(datum: CartanDatum, lift: ModuleLift, prime_list=None) -> CharacterResult:
    """X_M for a module given by integer matrices; RelationViolation if a reduction breaks (H2)."""
    return x_module(datum, lift, prime_list)


def check_g_injective_decomposition(datum: CartanDatum, m) -> bool:
    """g(m) = -lambda where m = sum_k lambda_k rk(I_k).

    Raises:
        SingularBasis: the injective rank vectors do not form a basis of Z^n.
    """
    injectives = injective_rank_vectors(datum)
    basis = sympy.Matrix([list(injectives[i]) for i in datum.vertices]).T
    if basis.det() == 0:
        raise SingularBasis(f"injective rank vectors {injectives} are linearly dependent")
    solution = basis.LUsolve(sympy.Matrix(list(m)))
    if not all(x.is_integer for x in solution):
        raise SingularBasis(f"{tuple(m)} is not an integral combination of {injectives}")
    lam = tuple(int(x) for x in solution)
    return g_vector_of_rank(datum, m) == tuple(-x for x in lam)


# ---------------------------------------------------------------------------
# Verification suites
# ---------------------------------------------------------------------------


def _fmt(root) -> str:
    return "(" + ",".join(str(x) for x in root) + ")"


def verify_thm1c(datum: CartanDatum, prime_list=None, rng_seed: int = 0, label: str = "") -> VerificationReport:
    """X_{M(beta)} equals the cluster variable with denominator vector beta."""
    report = VerificationReport(suite="1c", datum_label=label or datum.label())
    report.start()
    graph = exchange_graph(datum)
    roots = positive_roots(datum)
    expected = datum.n + len(roots)
    if len(graph.variables) != expected:
        report.add("cluster variable count", False, f"{len(graph.variables)} variables, expected {expected}")
    for beta in roots:
        try:
            record = cluster_variable_for_root(datum, beta)
        except NotFound as exc:
            report.add(f"beta={_fmt(beta)}", False, str(exc))
            continue
        character = x_module(datum, beta, prime_list, rng_seed)
        same_f = character.f_polynomial.coefficients == record.f_polynomial.as_dict()
        passed = character.x == record.value and same_f
        witness = str(character.x) if passed else f"X_M = {character.x}, x(beta) = {record.value}"
        report.add(f"beta={_fmt(beta)}", passed, witness)
    return report


def _random_root_sum(rng: np.random.Generator, roots, max_parts: int) -> RootSum:
    k = int(rng.integers(0, max_parts + 1))
    return RootSum.of(*(roots[int(rng.integers(len(roots)))] for _ in range(k)))


def _random_pairs(datum: CartanDatum, trials: int, rng_seed: int, rank_cap):
    """Pairs of random rigid sums whose total rank stays under ``rank_cap``."""
    rng = np.random.default_rng(rng_seed)
    roots = positive_roots(datum)
    cap = tuple(rank_cap) if rank_cap else (3,) * datum.n
    made = 0
    for _ in range(trials * 50):
        if made == trials:
            return
        left = _random_root_sum(rng, roots, 2)
        right = _random_root_sum(rng, roots, 2)
        total = RootSum.of(*left.roots, *right.roots)
        if any(t > c for t, c in zip(total.rank_for(datum), cap)):
            continue
        made += 1
        yield left, right, total


def verify_thm1b(datum: CartanDatum, trials: int = 5, prime_list=None, rng_seed: int = 0,
                 rank_cap=None, label: str = "") -> VerificationReport:
    """X_M X_N = X_{M (+) N} on random rigid sums."""
    report = VerificationReport(suite="1b", datum_label=label or datum.label())
    report.start()
    for left, right, total in _random_pairs(datum, trials, rng_seed, rank_cap):
        product = x_module(datum, left, prime_list, rng_seed).x * x_module(datum, right, prime_list, rng_seed).x
        direct = x_module(datum, total, prime_list, rng_seed).x
        passed = product == direct
        report.add(f"{left.label()} (+) {right.label()}", passed,
                   str(direct) if passed else f"{product} != {direct}")
    if len(report.items) < trials:
        report.skip("remaining trials", f"only {len(report.items)} pairs fit under the rank cap")
    return report


def compatible_root_sets(datum: CartanDatum, q: int = config.SEARCH_PRIME,
                         rng_seed: int = 0) -> list[tuple[RankVector, ...]]:
    """Sets of roots whose modules are pairwise Ext-orthogonal in both directions."""
    roots = positive_roots(datum)
    modules = {beta: find_rigid(datum, beta, q, rng_seed) for beta in roots}
    compatible = {
        (a, b): ext1_dim_lf(datum, modules[a], modules[b]) == 0 and ext1_dim_lf(datum, modules[b], modules[a]) == 0
        for a, b in itertools.combinations(roots, 2)
    }
    sets = []
    for size in range(1, datum.n + 1):
        for subset in itertools.combinations(roots, size):
            if all(compatible[pair] for pair in itertools.combinations(subset, 2)):
                sets.append(subset)
    return sets


def maximal_compatible_sets(sets) -> list[tuple[RankVector, ...]]:
    as_sets = [set(s) for s in sets]
    return [s for s, members in zip(sets, as_sets) if not any(members < other for other in as_sets)]


def verify_thm1d(datum: CartanDatum, cap: int = 2, q: int = config.SEARCH_PRIME, prime_list=None,
                 rng_seed: int = 0, direct_height: int = 3, label: str = "") -> VerificationReport:
    """Ext-orthogonal rigid sums correspond to cluster monomials without initial variables."""
    report = VerificationReport(suite="1d", datum_label=label or datum.label())
    report.start()
    sets = compatible_root_sets(datum, q, rng_seed)
    maximal = maximal_compatible_sets(sets)
    report.add("maximal compatible sets", all(len(s) == datum.n for s in maximal),
               "; ".join("{" + ", ".join(_fmt(b) for b in s) + "}" for s in maximal))

    rigid_sums = set()
    for subset in sets:
        for mults in itertools.product(range(1, cap + 1), repeat=len(subset)):
            rigid_sums.add(tuple(sorted(zip(subset, mults))))

    graph = exchange_graph(datum)
    index_of = {record.root: record.index for record in graph.non_initial()}
    monomials = {
        tuple(sorted((graph.variables[i].root, e) for i, e in monomial))
        for monomial in cluster_monomials(graph, cap)
    }
    missing, extra = rigid_sums - monomials, monomials - rigid_sums
    report.add("bijection with cluster monomials", not missing and not extra,
               f"{len(rigid_sums)} rigid sums, {len(monomials)} monomials"
               + (f"; unmatched sums {sorted(missing)[:3]}" if missing else "")
               + (f"; unmatched monomials {sorted(extra)[:3]}" if extra else ""))

    values = {}
    for rigid_sum in sorted(rigid_sums):
        name = " + ".join(f"{m}*{_fmt(b)}" for b, m in rigid_sum)
        if any(b not in index_of for b, _ in rigid_sum):
            report.add(name, False, "a summand has no cluster variable")
            continue
        x = LaurentPoly.constant(1, variables(datum.n, "u"))
        for beta, mult in rigid_sum:
            x = x * x_module(datum, beta, prime_list, rng_seed).x ** mult
        target = monomial_value(graph, tuple(sorted((index_of[b], m) for b, m in rigid_sum)))
        passed = x == target
        witness = str(x)
        height = sum(m * sum(b) for b, m in rigid_sum)
        if passed and height <= direct_height and (len(rigid_sum) > 1 or rigid_sum[0][1] > 1):
            expanded = [b for b, m in rigid_sum for _ in range(m)]
            direct = x_module(datum, RootSum.of(*expanded), prime_list, rng_seed).x
            passed = direct == x
            witness = str(x) if passed else f"product {x} != direct {direct}"
        values[rigid_sum] = x
        report.add(name, passed, witness)
    distinct = len(set(values.values())) == len(values)
    report.add("distinct characters", distinct, f"{len(set(values.values()))} distinct of {len(values)}")
    return report


def _max_degree_bound(datum: CartanDatum, beta) -> int:
    return max(degree_bound(datum, beta, r) for r in itertools.product(*(range(x + 1) for x in beta)))


def verify_symmetrizer_independence(datum: CartanDatum, k: int = 2, prime_list=None, rng_seed: int = 0,
                                    max_bound: int | None = None, label: str = "") -> VerificationReport:
    """X_{M(beta)} is the same for D and kD."""
    if k < 1:
        raise ConfigError(f"scale factor must be positive, got {k}")
    report = VerificationReport(suite="sym", datum_label=label or datum.label())
    report.start()
    scaled = datum.scaled(k)
    for beta in positive_roots(datum):
        bound = _max_degree_bound(scaled, beta)
        if max_bound is not None and bound > max_bound:
            report.skip(f"beta={_fmt(beta)}", f"degree bound {bound} under {k}D exceeds {max_bound}")
            continue
        base = x_module(datum, beta, prime_list, rng_seed).x
        other = x_module(scaled, beta, prime_list, rng_seed).x
        passed = base == other
        report.add(f"beta={_fmt(beta)}", passed, str(base) if passed else f"D: {base}, {k}D: {other}")
    return report


def verify_g_vectors(datum: CartanDatum, label: str = "") -> VerificationReport:
    """Module g-vectors against mutation g-vectors and the injective decomposition."""
    report = VerificationReport(suite="g", datum_label=label or datum.label())
    report.start()
    for beta in positive_roots(datum):
        g = g_vector_of_rank(datum, beta)
        try:
            record = cluster_variable_for_root(datum, beta)
            mutation_g, _ = g_and_f(datum, record)
            via_injectives = check_g_injective_decomposition(datum, beta)
        except LfccError as exc:
            report.add(f"beta={_fmt(beta)}", False, str(exc))
            continue
        passed = g == mutation_g and via_injectives
        report.add(f"beta={_fmt(beta)}", passed, f"g={g}" if passed else f"g={g}, mutation g={mutation_g}")
    return report


def verify_ext_order(datum: CartanDatum, q: int = config.SEARCH_PRIME, rng_seed: int = 0,
                     label: str = "") -> VerificationReport:
    """Hom and Ext vanishing along the Hom-vanishing root order."""
    report = VerificationReport(suite="ext", datum_label=label or datum.label())
    report.start()
    order = hom_vanishing_order(datum)
    modules = [find_rigid(datum, beta, q, rng_seed) for beta in order]
    for k, l in itertools.product(range(len(order)), repeat=2):
        form = bilinear_form(datum, order[k], order[l])
        if k < l:
            hom = hom_dim(modules[k], modules[l])
            passed = hom == 0 and form <= 0
            witness = f"hom={hom} form={form}"
        else:
            ext = ext1_dim_lf(datum, modules[k], modules[l])
            passed = ext == 0 and form >= 0
            witness = f"ext={ext} form={form}"
        report.add(f"{_fmt(order[k])} vs {_fmt(order[l])}", passed, witness)
    return report


def root_decompositions(datum: CartanDatum, gamma, sizes=(2, 3)) -> list[tuple[RankVector, ...]]:
    """Multisets of positive roots with the given sizes summing to gamma."""
    gamma = tuple(gamma)
    roots = positive_roots(datum)
    out = []
    for size in sizes:
        for parts in itertools.combinations_with_replacement(roots, size):
            if tuple(sum(col) for col in zip(*parts)) == gamma:
                out.append(parts)
    return out


def verify_filtrations(datum: CartanDatum, q: int = config.SEARCH_PRIME, rng_seed: int = 0,
                       label: str = "") -> VerificationReport:
    """Filtration witnesses for 2- and 3-part decompositions and the wrong-order zero counts."""
    report = VerificationReport(suite="filt", datum_label=label or datum.label())
    report.start()
    for gamma in positive_roots(datum):
        for parts in root_decompositions(datum, gamma):
            name = f"{_fmt(gamma)} = " + " + ".join(_fmt(p) for p in parts)
            order = root_partial_sum_order(datum, parts)
            perm = filtration_exists(datum, gamma, parts, q, rng_seed)
            passed = perm is not None and order is not None
            witness = (
                "bottom-up " + ", ".join(_fmt(parts[k]) for k in perm) if perm is not None
                else "no filtration in any order"
            )
            if order is None:
                witness += "; no order with root partial sums"
            report.add(name, passed, witness)
        for case in wrong_order_counts(datum, gamma, q, rng_seed):
            name = f"{_fmt(gamma)} wrong order a={case.multiplicities}"
            passed = not case.hom_ordered_exists or case.wrong_order_count == 0
            state = "exists" if case.hom_ordered_exists else "absent"
            report.add(name, passed, f"hom-ordered filtration {state}, wrong-order chains {case.wrong_order_count}")
    return report


def verify_prop41(datum: CartanDatum, prime_list=None, rng_seed: int = 0, max_bound: int | None = None,
                  label: str = "") -> VerificationReport:
    """chi of the simple-filtration variety against chi(Gr) times the factorials, for every (beta, r)."""
    report = VerificationReport(suite="prop41", datum_label=label or datum.label())
    report.start()
    for beta in positive_roots(datum):
        for r in itertools.product(*(range(x + 1) for x in beta)):
            name = f"beta={_fmt(beta)} r={_fmt(r)}"
            bound = prop41_bound(datum, beta, r)
            if max_bound is not None and bound > max_bound:
                report.skip(name, f"filtration degree bound {bound} exceeds {max_bound}")
                continue
            report.add(name, check_prop41(datum, beta, r, prime_list, rng_seed), f"degree bound {bound}")
    return report


def verify_convolution(datum: CartanDatum, trials: int = 5, prime_list=None, rng_seed: int = 0,
                       rank_cap=None, label: str = "") -> VerificationReport:
    """chi(Gr(r, M (+) N)) = sum over s + t = r of chi(Gr(s, M)) chi(Gr(t, N))."""
    report = VerificationReport(suite="conv", datum_label=label or datum.label())
    report.start()
    rng = np.random.default_rng(rng_seed + 1)
    for left, right, total in _random_pairs(datum, trials, rng_seed, rank_cap):
        m, n = left.rank_for(datum), right.rank_for(datum)
        r = tuple(int(rng.integers(0, a + b + 1)) for a, b in zip(m, n))
        whole = euler_char_gr(datum, total, r, prime_list, rng_seed)
        split = 0
        for s in itertools.product(*(range(x + 1) for x in m)):
            t = tuple(a - b for a, b in zip(r, s))
            if any(x < 0 or x > y for x, y in zip(t, n)):
                continue
            split += euler_char_gr(datum, left, s, prime_list, rng_seed) * euler_char_gr(datum, right, t, prime_list, rng_seed)
        report.add(f"{left.label()} (+) {right.label()} r={_fmt(r)}", whole == split, f"{whole} vs {split}")
    return report


def verify_nonrigid(datum: CartanDatum, prime_list=None, rng_seed: int = 0, label: str = "") -> VerificationReport:
    """Characters of the builtin non-rigid modules of this type."""
    report = VerificationReport(suite="nonrigid", datum_label=label or datum.label())
    report.start()
    entries = lifts_for_type(builtin_name_of(datum))
    if not entries:
        report.skip("non-rigid modules", "no integer-lift modules for this type")
        return report
    cluster_values = {record.value for record in exchange_graph(datum).variables}
    for entry in entries:
        module = entry.lift.build(datum, config.SEARCH_PRIME)
        rigid = is_rigid(datum, module)
        x = x_nonrigid(datum, entry.lift, prime_list).x
        expected = x_module(datum, entry.compare_root, prime_list, rng_seed).x + entry.offset
        is_cluster = x in cluster_values
        passed = not rigid and x == expected and is_cluster == (entry.offset == 0)
        witness = f"X = {x}; {'cluster variable' if is_cluster else 'not a cluster variable'}"
        if rigid:
            witness += "; module is unexpectedly rigid"
        report.add(entry.lift.name, passed, witness)
    return report
