"""Locally free representations of H(C, D, Omega) over prime fields.

Every vertex space is H_i^{r_i} with the canonical eps-action: r_i nilpotent
Jordan blocks of size c_i, basis vector ``k*c_i + t`` standing for
eps^t applied to the k-th free generator. The only moduli left are the arrow
matrices, which must satisfy relation (H2). Linear algebra over F_q goes
through ``galois``; small products that only need reduction mod q stay in
plain numpy.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import galois
import numpy as np
import sympy

import config
from cartan_core import Arrow, CartanDatum, RankVector, bilinear_form, is_root
from errors import (
    InvariantViolation,
    ModuleMismatch,
    NegativeExt,
    NotARoot,
    NotPrime,
    RankOutOfRange,
    RelationViolation,
    SearchExhausted,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Linear algebra over F_q
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def prime_field(q: int) -> type[galois.FieldArray]:
    if not sympy.isprime(q):
        raise NotPrime(f"field size must be prime, got {q}")
    return galois.GF(q)


def rank_mod(matrix: np.ndarray, q: int) -> int:
    """Rank of an integer matrix over F_q."""
    if matrix.size == 0:
        return 0
    gf = prime_field(q)
    return int(np.linalg.matrix_rank(gf(np.asarray(matrix, dtype=np.int64) % q)))


def null_space_mod(matrix: np.ndarray, q: int) -> np.ndarray:
    """Basis (as rows) of {x : matrix @ x = 0} over F_q, as an int64 array."""
    cols = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.eye(cols, dtype=np.int64)
    if rank_mod(matrix, q) == cols:
        return np.zeros((0, cols), dtype=np.int64)
    gf = prime_field(q)
    basis = gf(np.asarray(matrix, dtype=np.int64) % q).null_space()
    return np.asarray(basis.view(np.ndarray), dtype=np.int64)


def pivot_columns_mod(matrix: np.ndarray, q: int) -> list[int]:
    """Pivot columns of the reduced row echelon form over F_q."""
    if matrix.size == 0:
        return []
    reduced = prime_field(q)(np.asarray(matrix, dtype=np.int64) % q).row_reduce().view(np.ndarray)
    return [int(np.flatnonzero(row)[0]) for row in reduced if row.any()]


def affine_solutions_mod(matrix: np.ndarray, rhs: np.ndarray, q: int) -> tuple[np.ndarray, np.ndarray] | None:
    """All x with matrix @ x = rhs over F_q as (x0, basis), i.e. x0 + t @ basis.

    Returns None when the system is inconsistent.
    """
    cols = matrix.shape[1]
    if matrix.shape[0] == 0:
        return np.zeros(cols, dtype=np.int64), np.eye(cols, dtype=np.int64)
    augmented = np.hstack([np.asarray(matrix, dtype=np.int64), np.asarray(rhs, dtype=np.int64)[:, None]]) % q
    reduced = np.asarray(prime_field(q)(augmented).row_reduce().view(np.ndarray), dtype=np.int64)
    origin = np.zeros(cols, dtype=np.int64)
    for row in reduced:
        nonzero = np.flatnonzero(row)
        if not nonzero.size:
            continue
        if nonzero[0] == cols:
            return None
        origin[nonzero[0]] = row[cols]
    return origin, null_space_mod(matrix, q)


@lru_cache(maxsize=None)
def _inverses(q: int) -> np.ndarray:
    return _frozen(np.array([0] + [pow(x, -1, q) for x in range(1, q)], dtype=np.int64))


def batch_rank_mod(matrices: np.ndarray, q: int) -> np.ndarray:
    """Ranks over F_q of a stack of equally shaped integer matrices."""
    work = np.array(matrices, dtype=np.int64) % q
    count, rows, cols = work.shape
    ranks = np.zeros(count, dtype=np.int64)
    if not (count and rows and cols):
        return ranks
    inverse = _inverses(q)
    row_ids = np.arange(rows)
    for col in range(cols):
        candidates = (work[:, :, col] != 0) & (row_ids[None, :] >= ranks[:, None])
        found = np.flatnonzero(candidates.any(axis=1))
        if not found.size:
            continue
        block = work[found]
        index = np.arange(found.size)
        pivot = candidates[found].argmax(axis=1)
        target = ranks[found]
        pivot_rows = block[index, pivot].copy()
        block[index, pivot] = block[index, target]
        pivot_rows = (pivot_rows * inverse[pivot_rows[:, col]][:, None]) % q
        block[index, target] = pivot_rows
        factors = block[:, :, col].copy()
        factors[index, target] = 0
        work[found] = (block - factors[:, :, None] * pivot_rows[:, None, :]) % q
        ranks[found] += 1
    return ranks


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@lru_cache(maxsize=None)
def eps_power(c: int, r: int, power: int) -> np.ndarray:
    """eps^power on H_i^r in canonical coordinates (zero once power >= c)."""
    d = c * r
    out = np.zeros((d, d), dtype=np.int64)
    if power < c:
        for k in range(r):
            for t in range(c - power):
                out[k * c + t + power, k * c + t] = 1
    return _frozen(out)


def canonical_eps(c: int, r: int) -> np.ndarray:
    return eps_power(c, r, 1)


# ---------------------------------------------------------------------------
# Modules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HModuleRep:
    """A locally free H-module over F_q, immutable after construction."""

    datum: CartanDatum
    q: int
    rank: RankVector
    arrow_maps: dict[Arrow, np.ndarray] = field(repr=False)

    def dim(self, i: int) -> int:
        return self.datum.d(i) * self.rank[i - 1]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(self.dim(i) for i in self.datum.vertices)

    def eps(self, i: int) -> np.ndarray:
        return canonical_eps(self.datum.d(i), self.rank[i - 1])

    def eps_power(self, i: int, power: int) -> np.ndarray:
        return eps_power(self.datum.d(i), self.rank[i - 1], power)

    def arrow(self, i: int, j: int) -> np.ndarray:
        return self.arrow_maps[(i, j)]

    def is_zero(self) -> bool:
        return not any(self.rank)


def make_module(datum: CartanDatum, q: int, rank, arrow_maps: dict, error=InvariantViolation) -> HModuleRep:
    """Assemble a module, reducing arrows mod q and checking (H2).

    Args:
        error: Exception class raised when a relation fails. Internal
            constructions use ``InvariantViolation``; integer lifts use
            ``RelationViolation``.
    """
    prime_field(q)
    rank = tuple(int(x) for x in rank)
    if len(rank) != datum.n or min(rank, default=0) < 0:
        raise RankOutOfRange(f"rank vector {rank} is not a nonnegative vector of length {datum.n}")
    maps = {}
    for i, j in datum.arrows:
        shape = (datum.d(i) * rank[i - 1], datum.d(j) * rank[j - 1])
        matrix = arrow_maps.get((i, j))
        matrix = np.zeros(shape, dtype=np.int64) if matrix is None else np.asarray(matrix, dtype=np.int64) % q
        if matrix.shape != shape:
            raise ModuleMismatch(f"arrow ({i},{j}) has shape {matrix.shape}, expected {shape}")
        maps[(i, j)] = _frozen(matrix)
    module = HModuleRep(datum=datum, q=q, rank=rank, arrow_maps=maps)
    for arrow in relation_failures(module):
        raise error(f"relation (H2) fails on arrow {arrow} over F_{q}")
    return module


def relation_failures(module: HModuleRep) -> list[Arrow]:
    """Arrows (i, j) with eps_i^|c_ji| A_ij != A_ij eps_j^|c_ij| mod q."""
    datum, q = module.datum, module.q
    failures = []
    for i, j in datum.arrows:
        a = module.arrow(i, j)
        left = module.eps_power(i, abs(datum.c(j, i))) @ a
        right = a @ module.eps_power(j, abs(datum.c(i, j)))
        if np.any((left - right) % q):
            failures.append((i, j))
    return failures


def free_module(datum: CartanDatum, r, q: int) -> HModuleRep:
    """The direct sum of E_i^{r_i}: canonical eps-blocks, all arrows zero."""
    return make_module(datum, q, r, {})


def zero_module(datum: CartanDatum, q: int) -> HModuleRep:
    return free_module(datum, (0,) * datum.n, q)


def direct_sum(m: HModuleRep, n: HModuleRep) -> HModuleRep:
    """Block-diagonal sum; the canonical eps-form is preserved blockwise."""
    _check_compatible(m, n)
    rank = tuple(a + b for a, b in zip(m.rank, n.rank))
    maps = {arrow: _block_diag(m.arrow(*arrow), n.arrow(*arrow)) for arrow in m.datum.arrows}
    return make_module(m.datum, m.q, rank, maps)


def direct_sum_all(modules, datum: CartanDatum, q: int) -> HModuleRep:
    return reduce(direct_sum, modules, zero_module(datum, q))


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]), dtype=np.int64)
    out[: a.shape[0], : a.shape[1]] = a
    out[a.shape[0]:, a.shape[1]:] = b
    return out


def _check_compatible(m: HModuleRep, n: HModuleRep) -> None:
    if m.datum != n.datum:
        raise ModuleMismatch("modules live over different Cartan data")
    if m.q != n.q:
        raise ModuleMismatch(f"modules live over F_{m.q} and F_{n.q}")


# ---------------------------------------------------------------------------
# Arrow spaces and sampling
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def arrow_solution_space(datum: CartanDatum, r: RankVector, q: int, arrow: Arrow) -> tuple[np.ndarray, ...]:
    """Basis of the matrices A_ij with eps_i^|c_ji| A = A eps_j^|c_ij|.

    The dimension of the space is ``len`` of the result.
    """
    i, j = arrow
    if arrow not in datum.orientation:
        raise ModuleMismatch(f"({i},{j}) is not an arrow of the orientation")
    c_i, c_j = datum.d(i), datum.d(j)
    di, dj = c_i * r[i - 1], c_j * r[j - 1]
    if di * dj == 0:
        return ()
    left = eps_power(c_i, r[i - 1], abs(datum.c(j, i)))
    right = eps_power(c_j, r[j - 1], abs(datum.c(i, j)))
    # Row-major vec: vec(L A) = (L kron I) vec(A), vec(A R) = (I kron R^T) vec(A).
    system = np.kron(left, np.eye(dj, dtype=np.int64)) - np.kron(np.eye(di, dtype=np.int64), right.T)
    basis = null_space_mod(system, q)
    logger.debug("Arrow space %s for rank %s over F_%d has dimension %d", arrow, r, q, len(basis))
    return tuple(_frozen(row.reshape(di, dj).copy()) for row in basis)


def sample_locally_free(datum: CartanDatum, r, q: int, rng_seed) -> HModuleRep:
    """Draw every arrow uniformly from its (H2) solution space.

    Args:
        rng_seed: An int or a tuple of ints; the same seed gives the same module.
    """
    r = tuple(int(x) for x in r)
    rng = np.random.default_rng(rng_seed)
    maps = {}
    for arrow in datum.arrows:
        basis = arrow_solution_space(datum, r, q, arrow)
        if not basis:
            continue
        coeffs = rng.integers(0, q, size=len(basis))
        maps[arrow] = np.tensordot(coeffs, np.stack(basis), axes=1) % q
    return make_module(datum, q, r, maps)


# ---------------------------------------------------------------------------
# Hom, Ext and rigidity
# ---------------------------------------------------------------------------


def _hom_system(m: HModuleRep, n: HModuleRep) -> tuple[np.ndarray, list[int], int]:
    """Linear system whose kernel is Hom_H(M, N).

    Unknowns are the blocks f_i (dim N_i x dim M_i) flattened row-major and
    concatenated in vertex order.
    """
    datum = m.datum
    offsets, total = [], 0
    for i in datum.vertices:
        offsets.append(total)
        total += n.dim(i) * m.dim(i)

    rows = []
    for i in datum.vertices:
        dm, dn = m.dim(i), n.dim(i)
        if dm * dn == 0:
            continue
        block = np.zeros((dn * dm, total), dtype=np.int64)
        block[:, offsets[i - 1]: offsets[i - 1] + dn * dm] = (
            np.kron(np.eye(dn, dtype=np.int64), m.eps(i).T) - np.kron(n.eps(i), np.eye(dm, dtype=np.int64))
        )
        rows.append(block)
    for i, j in datum.arrows:
        dn_i, dm_i, dn_j, dm_j = n.dim(i), m.dim(i), n.dim(j), m.dim(j)
        if dn_i * dm_j == 0:
            continue
        block = np.zeros((dn_i * dm_j, total), dtype=np.int64)
        if dm_i:
            block[:, offsets[i - 1]: offsets[i - 1] + dn_i * dm_i] += np.kron(
                np.eye(dn_i, dtype=np.int64), m.arrow(i, j).T
            )
        if dn_j:
            block[:, offsets[j - 1]: offsets[j - 1] + dn_j * dm_j] -= np.kron(
                n.arrow(i, j), np.eye(dm_j, dtype=np.int64)
            )
        rows.append(block)
    system = np.vstack(rows) if rows else np.zeros((0, total), dtype=np.int64)
    return system, offsets, total


def hom_dim(m: HModuleRep, n: HModuleRep) -> int:
    """dim over F_q of Hom_H(M, N)."""
    _check_compatible(m, n)
    system, _, total = _hom_system(m, n)
    if total == 0:
        return 0
    return total - rank_mod(system, m.q)


def ext1_dim_lf(datum: CartanDatum, m: HModuleRep, n: HModuleRep) -> int:
    """dim Ext^1(M, N) = dim Hom(M, N) - <rk M, rk N>_H for locally free M, N."""
    value = hom_dim(m, n) - bilinear_form(datum, m.rank, n.rank)
    if value < 0:
        raise NegativeExt(f"negative Ext^1 dimension {value} between ranks {m.rank} and {n.rank}")
    return value


def is_rigid(datum: CartanDatum, m: HModuleRep) -> bool:
    return ext1_dim_lf(datum, m, m) == 0


def endomorphism_basis(m: HModuleRep) -> list[tuple[np.ndarray, ...]]:
    """Basis of End_H(M); each element is a tuple of per-vertex matrices."""
    system, offsets, total = _hom_system(m, m)
    if total == 0:
        return []
    basis = []
    for row in null_space_mod(system, m.q):
        basis.append(tuple(
            row[offsets[i - 1]: offsets[i - 1] + m.dim(i) ** 2].reshape(m.dim(i), m.dim(i))
            for i in m.datum.vertices
        ))
    return basis


def has_nontrivial_idempotent(m: HModuleRep, limit: int = config.IDEMPOTENT_SEARCH_LIMIT) -> bool:
    """Brute-force search for an idempotent endomorphism other than 0 and 1.

    End algebras with more than ``limit`` elements are not searched and
    report False.
    """
    basis = endomorphism_basis(m)
    if m.q ** len(basis) > limit:
        logger.debug("End algebra of rank %s too large for idempotent search (dim %d)", m.rank, len(basis))
        return False
    q = m.q
    identity = [np.eye(d, dtype=np.int64) for d in m.dims]
    for coeffs in itertools.product(range(q), repeat=len(basis)):
        if not any(coeffs):
            continue
        blocks = [
            sum((c * b[k] for c, b in zip(coeffs, basis)), np.zeros((d, d), dtype=np.int64)) % q
            for k, d in enumerate(m.dims)
        ]
        if all(np.array_equal(b, e) for b, e in zip(blocks, identity)):
            continue
        if all(np.array_equal((b @ b) % q, b) for b in blocks):
            return True
    return False


@lru_cache(maxsize=None)
def find_rigid(datum: CartanDatum, beta: RankVector, q: int, rng_seed: int = 0,
               max_tries: int = config.MAX_TRIES) -> HModuleRep:
    """Search for the rigid module M(beta) by sampling generic modules.

    Try ``t`` uses the seed ``(rng_seed, t)``; the first rigid candidate
    without a nontrivial idempotent is returned.

    Raises:
        NotARoot: beta is not a positive root.
        SearchExhausted: no candidate within ``max_tries``.
    """
    beta = tuple(int(x) for x in beta)
    if not is_root(datum, beta):
        raise NotARoot(f"{beta} is not a positive root")
    for attempt in range(max_tries):
        candidate = sample_locally_free(datum, beta, q, (rng_seed, attempt))
        if not is_rigid(datum, candidate):
            continue
        if has_nontrivial_idempotent(candidate):
            logger.warning("Rigid candidate for %s over F_%d is decomposable; resampling", beta, q)
            continue
        logger.debug("Found M%s over F_%d on try %d", beta, q, attempt + 1)
        return candidate
    raise SearchExhausted(f"no rigid module of rank {beta} over F_{q} after {max_tries} tries")


def find_rigid_with_retries(datum: CartanDatum, beta: RankVector, rng_seed: int = 0) -> HModuleRep:
    """find_rigid at the search prime, falling back to the retry primes."""
    primes = (config.SEARCH_PRIME, *config.SEARCH_RETRY_PRIMES)
    for q in primes:
        try:
            return find_rigid(datum, tuple(beta), q, rng_seed)
        except SearchExhausted as exc:
            logger.warning("%s; retrying with a larger field", exc)
    raise SearchExhausted(f"no rigid module of rank {tuple(beta)} over any of F_{primes}")


# ---------------------------------------------------------------------------
# Module descriptions shared across primes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RootSum:
    """The direct sum of rigid modules M(beta) over a multiset of roots."""

    roots: tuple[RankVector, ...]

    @classmethod
    def of(cls, *roots) -> RootSum:
        return cls(tuple(sorted(tuple(int(x) for x in r) for r in roots)))

    def rank_for(self, datum: CartanDatum) -> RankVector:
        total = [0] * datum.n
        for root in self.roots:
            total = [a + b for a, b in zip(total, root)]
        return tuple(total)

    def build(self, datum: CartanDatum, q: int, rng_seed: int = 0) -> HModuleRep:
        parts = [find_rigid(datum, root, q, rng_seed) for root in self.roots]
        return direct_sum_all(parts, datum, q)

    def label(self) -> str:
        return "+".join("M(" + ",".join(str(x) for x in root) + ")" for root in self.roots) or "0"


@dataclass(frozen=True)
class ModuleLift:
    """A module given by integer arrow matrices, reduced mod each prime."""

    name: str
    rank: RankVector
    arrows: tuple[tuple[Arrow, tuple[tuple[int, ...], ...]], ...]

    def rank_for(self, datum: CartanDatum) -> RankVector:
        if len(self.rank) != datum.n:
            raise ModuleMismatch(f"lift {self.name} has rank {self.rank} for a datum with {datum.n} vertices")
        return self.rank

    def build(self, datum: CartanDatum, q: int, rng_seed: int = 0) -> HModuleRep:
        self.rank_for(datum)
        maps = {arrow: np.array(matrix, dtype=np.int64).reshape(
                    datum.d(arrow[0]) * self.rank[arrow[0] - 1],
                    datum.d(arrow[1]) * self.rank[arrow[1] - 1])
                for arrow, matrix in self.arrows}
        return make_module(datum, q, self.rank, maps, error=RelationViolation)

    def label(self) -> str:
        return f"lift:{self.name}"


ModuleSpec = RootSum | ModuleLift


def as_spec(value) -> ModuleSpec:
    """Accept a spec, a single root, or a sequence of roots."""
    if isinstance(value, (RootSum, ModuleLift)):
        return value
    items = tuple(value)
    if items and all(isinstance(x, (int, np.integer)) for x in items):
        return RootSum.of(items)
    return RootSum.of(*items)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def module_to_dict(m: HModuleRep) -> dict:
    """Field size, rank vector and arrow matrices as row-major integer arrays."""
    return {
        "q": m.q,
        "rank": list(m.rank),
        "arrows": [
            {"arrow": [i, j], "shape": list(m.arrow(i, j).shape), "entries": m.arrow(i, j).flatten().tolist()}
            for i, j in m.datum.arrows
        ],
    }


def module_from_dict(datum: CartanDatum, data: dict) -> HModuleRep:
    maps = {
        tuple(item["arrow"]): np.array(item["entries"], dtype=np.int64).reshape(item["shape"])
        for item in data["arrows"]
    }
    return make_module(datum, int(data["q"]), data["rank"], maps)
