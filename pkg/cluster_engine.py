"""Seed mutation and exhaustive exchange-graph exploration.

Cluster variables are tracked with principal coefficients: generators
u1..un are the initial cluster and y1..yn the frozen coefficients. Setting
every y to 1 gives the coefficient-free variable; setting every u to 1
gives the F-polynomial.
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

import config
from cartan_core import CartanDatum, IntMatrix, RankVector, exchange_matrix, is_root
from errors import BudgetExceeded, InvariantViolation, NotFound, ReconstructionMismatch
from laurent import LaurentPoly, variables

logger = logging.getLogger(__name__)


def mutate_matrix(matrix, k: int) -> IntMatrix:
    """Matrix mutation at column k (1-based); rows beyond the square part are coefficient rows."""
    b = np.array(matrix, dtype=np.int64)
    rows, n = b.shape
    if not 1 <= k <= n:
        raise IndexError(f"mutation index k={k} out of bounds for size {n}")
    col = k - 1
    out = b.copy()
    for i in range(rows):
        for j in range(n):
            if i == col or j == col:
                out[i, j] = -b[i, j]
            elif b[i, col] * b[col, j] > 0:
                sign = 1 if b[i, col] > 0 else -1
                out[i, j] = b[i, j] + sign * b[i, col] * b[col, j]
    return tuple(tuple(int(x) for x in row) for row in out)


@dataclass(frozen=True)
class Seed:
    """Extended exchange matrix (n or 2n rows), cluster and the fixed symmetrizer."""

    matrix: IntMatrix
    cluster: tuple[LaurentPoly, ...]
    symmetrizer: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.cluster)

    @property
    def exchange(self) -> IntMatrix:
        return self.matrix[: self.n]

    @property
    def principal(self) -> bool:
        return len(self.matrix) > self.n

    def key(self) -> frozenset[LaurentPoly]:
        """The unordered coefficient-free cluster."""
        return frozenset(x.restrict(self.n) for x in self.cluster)


def _check_skew_symmetrizable(b: IntMatrix, symmetrizer) -> None:
    n = len(symmetrizer)
    for i in range(n):
        for j in range(n):
            if symmetrizer[i] * b[i][j] != -symmetrizer[j] * b[j][i]:
                raise InvariantViolation(f"exchange matrix {b} lost skew-symmetrizability at ({i + 1},{j + 1})")


def initial_seed(datum: CartanDatum, principal: bool = True) -> Seed:
    n = datum.n
    gens = variables(n, "u") + (variables(n, "y") if principal else ())
    b = exchange_matrix(datum)
    if principal:
        b = b + tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    cluster = tuple(LaurentPoly.generator(i, gens) for i in datum.vertices)
    return Seed(matrix=b, cluster=cluster, symmetrizer=datum.symmetrizer)


def mutate_seed(seed: Seed, k: int) -> Seed:
    """Exchange relation x_k x_k' = prod x_i^[b_ik]+ + prod x_i^[-b_ik]+."""
    gens = seed.cluster[0].gens
    extended = list(seed.cluster) + [
        LaurentPoly.generator(seed.n + i, gens) for i in range(1, len(seed.matrix) - seed.n + 1)
    ]
    plus = LaurentPoly.constant(1, gens)
    minus = LaurentPoly.constant(1, gens)
    for x, row in zip(extended, seed.matrix):
        b = row[k - 1]
        if b > 0:
            plus = plus * x ** b
        elif b < 0:
            minus = minus * x ** (-b)
    new = (plus + minus).exact_div(seed.cluster[k - 1])
    matrix = mutate_matrix(seed.matrix, k)
    _check_skew_symmetrizable(matrix[: seed.n], seed.symmetrizer)
    cluster = seed.cluster[: k - 1] + (new,) + seed.cluster[k:]
    return Seed(matrix=matrix, cluster=cluster, symmetrizer=seed.symmetrizer)


@dataclass(frozen=True)
class ClusterVariableRecord:
    index: int
    value: LaurentPoly
    principal: LaurentPoly
    denominator: RankVector
    g_vector: tuple[int, ...]
    f_polynomial: LaurentPoly
    root: RankVector | None

    @property
    def is_initial(self) -> bool:
        return self.root is None


@dataclass(frozen=True)
class ExchangeGraph:
    datum: CartanDatum
    variables: tuple[ClusterVariableRecord, ...]
    clusters: tuple[frozenset[int], ...]

    def non_initial(self) -> tuple[ClusterVariableRecord, ...]:
        return tuple(v for v in self.variables if not v.is_initial)


def denominator_vector(x: LaurentPoly) -> RankVector:
    """d_i = -(minimal exponent of u_i)."""
    return x.denominator_vector()


def _extract_g_and_f(datum: CartanDatum, principal: LaurentPoly) -> tuple[tuple[int, ...], LaurentPoly]:
    """Read g and F off a principal-coefficient variable.

    Each term u^a y^e satisfies a = g + B e, with B the initial exchange matrix.
    """
    n = datum.n
    b = exchange_matrix(datum)
    g = None
    f_terms = {}
    for exps, coeff in principal.terms:
        a, e = exps[:n], exps[n:]
        candidate = tuple(a[i] - sum(b[i][j] * e[j] for j in range(n)) for i in range(n))
        if g is None:
            g = candidate
        elif candidate != g:
            raise ReconstructionMismatch(f"{principal} is not homogeneous: degrees {g} and {candidate}")
        f_terms[e] = f_terms.get(e, 0) + coeff
    return g, LaurentPoly.from_terms(f_terms, variables(n, "t"))


def z_variables(datum: CartanDatum) -> list[LaurentPoly]:
    """z_j = prod_i u_i^{b_ij}."""
    gens = variables(datum.n, "u")
    b = exchange_matrix(datum)
    return [
        LaurentPoly.monomial(tuple(b[i][j] for i in range(datum.n)), gens) for j in range(datum.n)
    ]


def reconstruct(datum: CartanDatum, g, f: LaurentPoly) -> LaurentPoly:
    """u^g F(z)."""
    gens = variables(datum.n, "u")
    return LaurentPoly.monomial(tuple(g), gens) * f.evaluate(z_variables(datum))


@lru_cache(maxsize=None)
def exchange_graph(datum: CartanDatum, max_seeds: int = config.MAX_SEEDS) -> ExchangeGraph:
    """All cluster variables and clusters, by breadth-first mutation."""
    n = datum.n
    start = initial_seed(datum, principal=True)
    seen = {start.key(): start}
    queue = deque([start])
    principal_of: dict[LaurentPoly, LaurentPoly] = {}
    while queue:
        seed = queue.popleft()
        for x in seed.cluster:
            principal_of.setdefault(x.restrict(n), x)
        for k in range(1, n + 1):
            nxt = mutate_seed(seed, k)
            key = nxt.key()
            if key in seen:
                continue
            if len(seen) >= max_seeds:
                raise BudgetExceeded(f"more than {max_seeds} seeds for {datum.label()}")
            seen[key] = nxt
            queue.append(nxt)

    initial = [x.restrict(n) for x in start.cluster]
    others = sorted(
        (x for x in principal_of if x not in initial),
        key=lambda x: (sum(x.denominator_vector()), x.denominator_vector()),
    )
    records = []
    for index, value in enumerate(initial + others):
        principal = principal_of[value]
        g, f = _extract_g_and_f(datum, principal)
        denominator = value.denominator_vector()
        root = None if index < n else denominator
        if root is not None and not is_root(datum, root):
            logger.error("Cluster variable %s has non-root denominator %s", value, denominator)
            raise InvariantViolation(f"cluster variable {value} has denominator {denominator}, not a positive root")
        records.append(ClusterVariableRecord(
            index=index, value=value, principal=principal, denominator=denominator,
            g_vector=g, f_polynomial=f, root=root,
        ))
    position = {r.value: r.index for r in records}
    clusters = sorted({frozenset(position[x] for x in key) for key in seen}, key=sorted)
    logger.info("Exchange graph of %s: %d cluster variables, %d clusters",
                datum.label(), len(records), len(clusters))
    return ExchangeGraph(datum=datum, variables=tuple(records), clusters=tuple(clusters))


def g_and_f(datum: CartanDatum, record: ClusterVariableRecord) -> tuple[tuple[int, ...], LaurentPoly]:
    """g-vector and F-polynomial, checked by reconstructing the variable."""
    rebuilt = reconstruct(datum, record.g_vector, record.f_polynomial)
    if rebuilt != record.value:
        raise ReconstructionMismatch(f"u^g F(z) = {rebuilt} differs from {record.value}")
    return record.g_vector, record.f_polynomial


def cluster_variable_for_root(datum: CartanDatum, beta) -> ClusterVariableRecord:
    beta = tuple(beta)
    for record in exchange_graph(datum).variables:
        if record.root == beta:
            return record
    raise NotFound(f"no cluster variable of {datum.label()} has denominator vector {beta}")


Monomial = tuple[tuple[int, int], ...]


def cluster_monomials(graph: ExchangeGraph, cap: int) -> set[Monomial]:
    """Nonempty monomials in the non-initial variables of one cluster, exponents at most ``cap``.

    A monomial is a sorted tuple of (variable index, exponent).
    """
    n = graph.datum.n
    out: set[Monomial] = set()
    for cluster in graph.clusters:
        members = sorted(i for i in cluster if i >= n)
        for exps in itertools.product(range(cap + 1), repeat=len(members)):
            monomial = tuple((i, e) for i, e in zip(members, exps) if e)
            if monomial:
                out.add(monomial)
    return out


def monomial_value(graph: ExchangeGraph, monomial: Monomial) -> LaurentPoly:
    gens = variables(graph.datum.n, "u")
    value = LaurentPoly.constant(1, gens)
    for index, exponent in monomial:
        value = value * graph.variables[index].value ** exponent
    return value
