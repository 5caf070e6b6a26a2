"""Cartan data: validation, exchange matrix, homological bilinear form,
positive roots and Coxeter combinatorics.

Vertices are 1-based in every public signature. Matrices are stored as
tuples of tuples so that a ``CartanDatum`` can key caches.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import permutations

import numpy as np
import sympy

from errors import (
    BadOrientation,
    InvariantViolation,
    NotCartan,
    NotConnected,
    NotSymmetrizer,
)

logger = logging.getLogger(__name__)

IntMatrix = tuple[tuple[int, ...], ...]
RankVector = tuple[int, ...]
Arrow = tuple[int, int]


@dataclass(frozen=True)
class CartanDatum:
    """A validated triple (C, D, Omega).

    A pair ``(i, j)`` in ``orientation`` stands for an arrow ``j -> i`` of
    the quiver Q°; the corresponding arrow matrix has shape d_i x d_j.
    Build instances through :func:`validate_datum`.
    """

    cartan: IntMatrix
    symmetrizer: tuple[int, ...]
    orientation: frozenset[Arrow]

    @property
    def n(self) -> int:
        return len(self.symmetrizer)

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def c(self, i: int, j: int) -> int:
        """Cartan entry c_ij."""
        return self.cartan[i - 1][j - 1]

    def d(self, i: int) -> int:
        """Symmetrizer entry c_i (the nilpotency order of eps_i)."""
        return self.symmetrizer[i - 1]

    @cached_property
    def arrows(self) -> tuple[Arrow, ...]:
        return tuple(sorted(self.orientation))

    @cached_property
    def is_symmetric(self) -> bool:
        return all(self.c(i, j) == self.c(j, i) for i in self.vertices for j in self.vertices)

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        """Vertices j with an arrow j -> i."""
        return tuple(j for (a, j) in self.arrows if a == i)

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        """Vertices i with an arrow j -> i."""
        return tuple(i for (i, b) in self.arrows if b == j)

    def is_sink(self, v: int) -> bool:
        return not self.out_neighbors(v)

    def is_source(self, v: int) -> bool:
        return not self.in_neighbors(v)

    def scaled(self, k: int) -> CartanDatum:
        """The same Cartan matrix and orientation with symmetrizer kD."""
        return validate_datum(self.cartan, [k * d for d in self.symmetrizer], self.arrows)

    def label(self) -> str:
        """Compact deterministic description used in cache keys and reports."""
        rows = ";".join(",".join(str(x) for x in row) for row in self.cartan)
        sym = ",".join(str(d) for d in self.symmetrizer)
        arrows = ";".join(f"{i}<-{j}" for i, j in self.arrows)
        return f"C[{rows}]D[{sym}]O[{arrows}]"


@dataclass(frozen=True)
class CoxeterData:
    """Admissible sequence, Coxeter element and the Hom-vanishing root order."""

    iplus: tuple[int, ...]
    coxeter: IntMatrix
    h: int
    jminus: tuple[int, ...]
    root_order: tuple[RankVector, ...]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def validate_datum(cartan, symmetrizer, orientation) -> CartanDatum:
    """Validate (C, D, Omega) and return the frozen datum.

    Args:
        cartan: Square integer matrix (sequence of rows).
        symmetrizer: Positive integers c_1..c_n with DC symmetric.
        orientation: Iterable of 1-based pairs (i, j), one per edge.

    Raises:
        NotCartan, NotSymmetrizer, NotConnected, BadOrientation.
    """
    rows = [list(row) for row in cartan]
    n = len(rows)
    if n == 0 or any(len(row) != n for row in rows):
        raise NotCartan("Cartan matrix must be a non-empty square matrix")
    try:
        rows = [[_as_int(x) for x in row] for row in rows]
    except ValueError as exc:
        raise NotCartan(f"Cartan matrix entries must be integers: {exc}") from exc

    for i in range(n):
        if rows[i][i] != 2:
            raise NotCartan(f"diagonal entry c_{i + 1}{i + 1} = {rows[i][i]}, expected 2")
        for j in range(n):
            if i == j:
                continue
            if rows[i][j] > 0:
                raise NotCartan(f"off-diagonal entry c_{i + 1}{j + 1} = {rows[i][j]} is positive")
            if (rows[i][j] == 0) != (rows[j][i] == 0):
                raise NotCartan(f"c_{i + 1}{j + 1} and c_{j + 1}{i + 1} must vanish together")

    try:
        sym = tuple(_as_int(d) for d in symmetrizer)
    except ValueError as exc:
        raise NotSymmetrizer(f"symmetrizer entries must be integers: {exc}") from exc
    if len(sym) != n or any(d <= 0 for d in sym):
        raise NotSymmetrizer(f"symmetrizer must have {n} positive entries, got {list(sym)}")
    dc = sympy.Matrix(n, n, lambda i, j: sym[i] * rows[i][j])
    if dc != dc.T:
        raise NotSymmetrizer("DC is not symmetric")
    for k in range(1, n + 1):
        if dc[:k, :k].det() <= 0:
            raise NotSymmetrizer(f"DC is not positive definite (leading minor of order {k} is not positive)")

    if not _connected(rows):
        raise NotConnected("the Dynkin graph of C is not connected")

    pairs = set()
    for pair in orientation:
        if len(pair) != 2:
            raise BadOrientation(f"orientation entries must be pairs, got {pair!r}")
        i, j = (_as_int(x) for x in pair)
        if not (1 <= i <= n and 1 <= j <= n) or i == j:
            raise BadOrientation(f"invalid orientation pair ({i},{j})")
        pairs.add((i, j))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            forward, backward = (i, j) in pairs, (j, i) in pairs
            if rows[i - 1][j - 1] < 0:
                if forward == backward:
                    state = "both" if forward else "neither"
                    raise BadOrientation(f"edge {i}-{j} needs exactly one of ({i},{j}), ({j},{i}); got {state}")
            elif forward or backward:
                raise BadOrientation(f"orientation pair on non-edge {i}-{j}")
    if not _acyclic(n, pairs):
        raise BadOrientation("the quiver Q° has an oriented cycle")

    datum = CartanDatum(
        cartan=tuple(tuple(row) for row in rows),
        symmetrizer=sym,
        orientation=frozenset(pairs),
    )
    logger.debug("Validated Cartan datum %s", datum.label())
    return datum


def _as_int(x) -> int:
    value = int(x)
    if value != x:
        raise ValueError(f"{x!r} is not an integer")
    return value


def _connected(rows: list[list[int]]) -> bool:
    n = len(rows)
    seen = {0}
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j in range(n):
            if j not in seen and rows[i][j] < 0:
                seen.add(j)
                queue.append(j)
    return len(seen) == n


def _acyclic(n: int, pairs: set[Arrow]) -> bool:
    indegree = {v: 0 for v in range(1, n + 1)}
    for i, _ in pairs:
        indegree[i] += 1
    queue = deque(v for v, deg in indegree.items() if deg == 0)
    visited = 0
    while queue:
        j = queue.popleft()
        visited += 1
        for i, source in pairs:
            if source == j:
                indegree[i] -= 1
                if indegree[i] == 0:
                    queue.append(i)
    return visited == n


# ---------------------------------------------------------------------------
# Exchange matrix and bilinear form
# ---------------------------------------------------------------------------


def exchange_matrix(datum: CartanDatum) -> IntMatrix:
    """b_ij = c_ij if (j,i) in Omega, -c_ij if (i,j) in Omega, 0 otherwise."""
    rows = []
    for i in datum.vertices:
        row = []
        for j in datum.vertices:
            if (j, i) in datum.orientation:
                row.append(datum.c(i, j))
            elif (i, j) in datum.orientation:
                row.append(-datum.c(i, j))
            else:
                row.append(0)
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=None)
def form_matrix(datum: CartanDatum) -> IntMatrix:
    """Generator table of the bilinear form: entry (i, j) is <alpha_i, alpha_j>."""
    rows = []
    for i in datum.vertices:
        row = []
        for j in datum.vertices:
            if i == j:
                row.append(datum.d(i))
            elif (j, i) in datum.orientation:
                row.append(datum.d(i) * datum.c(i, j))
            else:
                row.append(0)
        rows.append(tuple(row))
    return tuple(rows)


def bilinear_form(datum: CartanDatum, a, b) -> int:
    """The homological bilinear form <a, b>_H."""
    table = form_matrix(datum)
    return sum(
        a[i] * table[i][j] * b[j]
        for i in range(datum.n)
        for j in range(datum.n)
        if a[i] and b[j]
    )


# ---------------------------------------------------------------------------
# Roots
# ---------------------------------------------------------------------------


def simple_root(datum: CartanDatum, i: int) -> RankVector:
    return tuple(1 if v == i else 0 for v in datum.vertices)


def reflect(datum: CartanDatum, i: int, v) -> RankVector:
    """s_i(v) = v - (sum_j c_ij v_j) alpha_i."""
    pairing = sum(datum.c(i, j) * v[j - 1] for j in datum.vertices)
    out = list(v)
    out[i - 1] -= pairing
    return tuple(out)


def _root_key(v: RankVector) -> tuple:
    return (sum(v), tuple(-x for x in v))


@lru_cache(maxsize=None)
def positive_roots(datum: CartanDatum) -> tuple[RankVector, ...]:
    """All positive roots, ordered by height then reverse-lexicographically.

    Closes the simple roots under simple reflections and keeps the
    nonnegative vectors.
    """
    start = [simple_root(datum, i) for i in datum.vertices]
    found = set(start)
    queue = deque(start)
    while queue:
        v = queue.popleft()
        for i in datum.vertices:
            w = reflect(datum, i, v)
            if any(w) and min(w) >= 0 and w not in found:
                found.add(w)
                queue.append(w)
    roots = tuple(sorted(found, key=_root_key))
    logger.debug("%d positive roots for %s", len(roots), datum.label())
    return roots


def is_root(datum: CartanDatum, v) -> bool:
    return tuple(v) in set(positive_roots(datum))


def root_partial_sum_order(datum: CartanDatum, parts) -> tuple[int, ...] | None:
    """Find an order of ``parts`` whose partial sums are all positive roots.

    Returns:
        A permutation (0-based indices into ``parts``) or None.
    """
    roots = set(positive_roots(datum))
    for order in permutations(range(len(parts))):
        total = [0] * datum.n
        for k in order:
            total = [a + b for a, b in zip(total, parts[k])]
            if tuple(total) not in roots:
                break
        else:
            return order
    return None


# ---------------------------------------------------------------------------
# Coxeter combinatorics
# ---------------------------------------------------------------------------


def reflect_orientation(orientation, v: int) -> frozenset[Arrow]:
    """s_v(Omega): reverse every arrow incident to v."""
    return frozenset((j, i) if v in (i, j) else (i, j) for i, j in orientation)


def admissible_sequence(datum: CartanDatum) -> tuple[int, ...]:
    """(+)-admissible sequence by iterated sink removal, lowest index first."""
    orientation = datum.orientation
    remaining = list(datum.vertices)
    sequence = []
    while remaining:
        sinks = [v for v in remaining if all(j != v for _, j in orientation)]
        if not sinks:
            raise InvariantViolation(f"no sink left among {remaining} for {datum.label()}")
        v = sinks[0]
        sequence.append(v)
        remaining.remove(v)
        orientation = reflect_orientation(orientation, v)
    return tuple(sequence)


def reflection_matrix(datum: CartanDatum, i: int) -> np.ndarray:
    s = np.eye(datum.n, dtype=np.int64)
    for j in datum.vertices:
        s[i - 1, j - 1] -= datum.c(i, j)
    return s


@lru_cache(maxsize=None)
def coxeter_data(datum: CartanDatum) -> CoxeterData:
    """Admissible sequence, Coxeter element, Coxeter number and root order.

    The reduced word for w_0 is found greedily along (i_n, ..., i_1)
    repeated: a letter s is kept iff w(alpha_s) is positive for the
    current prefix w. For non-symmetric C this reproduces
    (i_n, ..., i_1)^(h/2), which is asserted.
    """
    iplus = admissible_sequence(datum)
    n = datum.n
    identity = np.eye(n, dtype=np.int64)

    coxeter = identity.copy()
    for i in iplus:
        coxeter = coxeter @ reflection_matrix(datum, i)
    power, h = coxeter.copy(), 1
    while not np.array_equal(power, identity):
        power = power @ coxeter
        h += 1
        if h > 64:
            raise InvariantViolation(f"Coxeter element of {datum.label()} has no finite order")

    roots = positive_roots(datum)
    word = tuple(reversed(iplus))
    prefix = identity.copy()
    jminus: list[int] = []
    order: list[RankVector] = []
    for step in range(len(roots) * n + n):
        s = word[step % n]
        image = prefix[:, s - 1]
        if image.min() >= 0:
            jminus.append(s)
            order.append(tuple(int(x) for x in image))
            prefix = prefix @ reflection_matrix(datum, s)
            if len(jminus) == len(roots):
                break

    if sorted(order) != sorted(roots) or len(set(order)) != len(order):
        raise InvariantViolation(f"root enumeration along {jminus} does not match the positive roots")
    if not datum.is_symmetric:
        if h % 2 or tuple(jminus) != word * (h // 2):
            raise InvariantViolation(f"reduced word {jminus} differs from {word}^(h/2) with h={h}")
    if len(roots) * 2 != n * h:
        raise InvariantViolation(f"|roots|={len(roots)} but n*h/2={n * h // 2}")

    logger.debug("Coxeter data: iplus=%s h=%d jminus=%s", iplus, h, jminus)
    return CoxeterData(
        iplus=iplus,
        coxeter=tuple(tuple(int(x) for x in row) for row in coxeter),
        h=h,
        jminus=tuple(jminus),
        root_order=tuple(order),
    )


def hom_vanishing_order(datum: CartanDatum) -> tuple[RankVector, ...]:
    """beta_k = s_{j_1}...s_{j_{k-1}}(alpha_{j_k}); Hom(M(beta_k), M(beta_l)) = 0 for k < l."""
    return coxeter_data(datum).root_order


def injective_rank_vectors(datum: CartanDatum) -> dict[int, RankVector]:
    """rk(I_{i_k}) = s_{i_n} ... s_{i_{k+1}}(alpha_{i_k}), keyed by vertex i_k."""
    iplus = coxeter_data(datum).iplus
    ranks = {}
    for k, vertex in enumerate(iplus):
        v = simple_root(datum, vertex)
        for later in iplus[k + 1:]:
            v = reflect(datum, later, v)
        ranks[vertex] = v
    return ranks
