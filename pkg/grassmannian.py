"""Point counts of locally free quiver Grassmannians and filtration varieties.

Counts are exact over F_q. Euler characteristics are read off as the value
at q = 1 of the counting polynomial, fitted through counts at several
primes and checked against one extra prime.

Free rank-r submodules of H^m (H = F_q[eps]/eps^c) are enumerated through
a normal form: an m x r generator matrix G over H whose pivot rows form the
identity, with entries above a pivot restricted to eps*H. Each normal form
carries its span matrix and the matrix of an H-linear map whose kernel is
the submodule, both in canonical eps-coordinates.

Counting avoids listing every submodule. Sources and sinks are counted in
closed form from the submodules chosen around them. The forms at the last
enumerated vertex are affine in their free entries, so that vertex is swept
in vectorized batches of parameter vectors. Chains of submodules are
counted the same way, one flag per vertex.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy

import cache
import config
from algebra_h import (
    HModuleRep,
    ModuleSpec,
    RootSum,
    as_spec,
    affine_solutions_mod,
    batch_rank_mod,
    direct_sum_all,
    find_rigid,
    free_module,
    hom_dim,
    is_rigid,
    make_module,
    module_from_dict,
    module_to_dict,
    null_space_mod,
    pivot_columns_mod,
    rank_mod,
)
from cartan_core import (
    CartanDatum,
    RankVector,
    admissible_sequence,
    hom_vanishing_order,
    positive_roots,
    simple_root,
)
from errors import (
    CacheMismatch,
    InterpolationMismatch,
    InvariantViolation,
    NotEnoughPrimes,
    NotPrime,
    RankOutOfRange,
)

logger = logging.getLogger(__name__)

Q = sympy.Symbol("q")


# ---------------------------------------------------------------------------
# Normal forms of free submodules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FreeForm:
    """One free rank-r submodule of H^m in normal form."""

    c: int
    m: int
    pivots: tuple[int, ...]
    span: np.ndarray = field(repr=False)
    annihilator: np.ndarray = field(repr=False)

    @property
    def pivot_rows(self) -> list[int]:
        """Rows of ``span`` forming an identity block (a left inverse)."""
        return [p * self.c + t for p in self.pivots for t in range(self.c)]

    @property
    def quotient_columns(self) -> list[int]:
        """Columns of ``annihilator`` forming an identity block (a right inverse)."""
        return [j * self.c + t for j in range(self.m) if j not in self.pivots for t in range(self.c)]

    @property
    def section(self) -> np.ndarray:
        """The right inverse of ``annihilator`` supported on ``quotient_columns``."""
        cols = self.quotient_columns
        out = np.zeros((self.m * self.c, len(cols)), dtype=np.int64)
        out[cols, np.arange(len(cols))] = 1
        return out


def _toeplitz_blocks(entries: np.ndarray, c: int) -> np.ndarray:
    """Expand a matrix over H (last axis: eps-coefficients) into F_q-coordinates."""
    rows, cols, _ = entries.shape
    out = np.zeros((rows * c, cols * c), dtype=np.int64)
    for t in range(c):
        for s in range(t + 1):
            out[t::c, s::c] = entries[:, :, t - s]
    return out


def _form_slots(m: int, pivots: tuple[int, ...]) -> list[tuple[int, int, int]]:
    """Free generator entries as (row, column, lowest eps-degree)."""
    # Entries above a pivot lie in eps*H, so their constant term is zero.
    return [(j, k, 0 if j > p else 1) for j in range(m) if j not in pivots for k, p in enumerate(pivots)]


def _pivot_generators(c: int, m: int, pivots: tuple[int, ...]) -> np.ndarray:
    gen = np.zeros((m, len(pivots), c), dtype=np.int64)
    for k, p in enumerate(pivots):
        gen[p, k, 0] = 1
    return gen


def _relations(c: int, m: int, pivots: tuple[int, ...], gen: np.ndarray, q: int, constant: bool = True) -> np.ndarray:
    """Rows over H of the annihilator of ``gen``; ``constant`` adds the identity on non-pivot rows."""
    others = [j for j in range(m) if j not in pivots]
    relations = np.zeros((len(others), m, c), dtype=np.int64)
    for a, j in enumerate(others):
        if constant:
            relations[a, j, 0] = 1
        for k, p in enumerate(pivots):
            relations[a, p, :] = (-gen[j, k, :]) % q
    return relations


@lru_cache(maxsize=None)
def free_submodule_forms(c: int, m: int, r: int, q: int) -> tuple[FreeForm, ...]:
    """All free rank-r H-submodules of H^m, H = F_q[eps]/(eps^c).

    There are q^((c-1) r (m-r)) * [m choose r]_q of them.
    """
    forms = []
    for pivots in itertools.combinations(range(m), r):
        slots = _form_slots(m, pivots)
        width = sum(c - low for _, _, low in slots)
        for values in itertools.product(range(q), repeat=width):
            gen = _pivot_generators(c, m, pivots)
            pos = 0
            for j, k, low in slots:
                gen[j, k, low:] = values[pos: pos + c - low]
                pos += c - low
            forms.append(FreeForm(
                c=c, m=m, pivots=pivots,
                span=_toeplitz_blocks(gen, c),
                annihilator=_toeplitz_blocks(_relations(c, m, pivots, gen, q), c),
            ))
    return tuple(forms)


@dataclass(frozen=True, eq=False)
class FormFamily:
    """Normal forms with fixed pivots, affine in a parameter vector t over F_q.

    The member at t has span ``span + sum_l t_l span_dirs[l]``, and likewise
    for the annihilator. Distinct t give distinct submodules.
    """

    pivots: tuple[int, ...]
    span: np.ndarray = field(repr=False)
    annihilator: np.ndarray = field(repr=False)
    span_dirs: np.ndarray = field(repr=False)
    annihilator_dirs: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.span_dirs.shape[0]

    def restrict(self, origin: np.ndarray, basis: np.ndarray, q: int) -> FormFamily:
        """The members with t = origin + s @ basis, parametrized by s."""
        return FormFamily(
            pivots=self.pivots,
            span=(self.span + np.tensordot(origin, self.span_dirs, axes=1)) % q,
            annihilator=(self.annihilator + np.tensordot(origin, self.annihilator_dirs, axes=1)) % q,
            span_dirs=np.tensordot(basis, self.span_dirs, axes=1) % q,
            annihilator_dirs=np.tensordot(basis, self.annihilator_dirs, axes=1) % q,
        )


@lru_cache(maxsize=None)
def form_families(c: int, m: int, pivots: tuple[int, ...], q: int, split: bool) -> tuple[FormFamily, ...]:
    """The normal forms with the given pivots, as affine families.

    Without ``split`` this is one family. With it, each family fixes the
    constant terms of the generator entries and varies the higher
    eps-coefficients.
    """
    r = len(pivots)
    slots = _form_slots(m, pivots)
    fixed = [(j, k) for j, k, low in slots if split and low == 0]
    params = [(j, k, t) for j, k, low in slots for t in range(max(low, 1) if split else low, c)]
    span_dirs = np.zeros((len(params), m * c, r * c), dtype=np.int64)
    annihilator_dirs = np.zeros((len(params), (m - r) * c, m * c), dtype=np.int64)
    for n, (j, k, t) in enumerate(params):
        unit = np.zeros((m, r, c), dtype=np.int64)
        unit[j, k, t] = 1
        span_dirs[n] = _toeplitz_blocks(unit, c)
        annihilator_dirs[n] = _toeplitz_blocks(_relations(c, m, pivots, unit, q, constant=False), c)
    families = []
    for values in itertools.product(range(q), repeat=len(fixed)):
        gen = _pivot_generators(c, m, pivots)
        for (j, k), x in zip(fixed, values):
            gen[j, k, 0] = x
        families.append(FormFamily(
            pivots=pivots,
            span=_toeplitz_blocks(gen, c),
            annihilator=_toeplitz_blocks(_relations(c, m, pivots, gen, q), c),
            span_dirs=span_dirs,
            annihilator_dirs=annihilator_dirs,
        ))
    return tuple(families)


@dataclass(frozen=True, eq=False)
class FlagLevel:
    """One level of a flag of free submodules of H^m."""

    span: np.ndarray = field(repr=False)
    annihilator: np.ndarray = field(repr=False)
    section: np.ndarray | None = field(default=None, repr=False)


@lru_cache(maxsize=None)
def free_flag_forms(c: int, m: int, ranks: tuple[int, ...], q: int) -> tuple[tuple[FlagLevel, ...], ...]:
    """All flags U_1 <= U_2 <= ... of free submodules of H^m with rk U_k = ranks[k].

    Each level grows the previous one by a normal form in the quotient,
    lifted back through the section of the previous annihilator.
    """
    d = c * m
    bottom = FlagLevel(
        span=np.zeros((d, 0), dtype=np.int64),
        annihilator=np.eye(d, dtype=np.int64),
        section=np.eye(d, dtype=np.int64),
    )
    flags = [((), bottom, 0)]
    for rho in ranks:
        grown = []
        for levels, top, below in flags:
            if rho == below:
                grown.append(((*levels, top), top, below))
                continue
            for form in free_submodule_forms(c, m - below, rho - below, q):
                level = FlagLevel(
                    span=np.hstack([top.span, top.section @ form.span]) % q,
                    annihilator=(form.annihilator @ top.annihilator) % q,
                    section=top.section @ form.section,
                )
                grown.append(((*levels, level), level, rho))
        flags = grown
    return tuple(levels for levels, _, _ in flags)


def gaussian_binomial(m: int, r: int, q: int) -> int:
    if r < 0 or r > m:
        return 0
    num = math.prod(q ** (m - k) - 1 for k in range(r))
    den = math.prod(q ** (k + 1) - 1 for k in range(r))
    return num // den


def free_submodule_count(c: int, m: int, r: int, q: int) -> int:
    return q ** ((c - 1) * r * (m - r)) * gaussian_binomial(m, r, q)


def _chain_ring_gl_order(r: int, c: int, q: int) -> int:
    """|GL_r(F_q[eps]/eps^c)|."""
    return q ** ((c - 1) * r * r) * math.prod(q ** r - q ** k for k in range(r))


def _free_count(w: int, kappa: int, rank: int, c: int, q: int) -> int:
    """Free rank-``rank`` submodules of an H-module of dimension w on which
    eps^(c-1) has a kernel of dimension kappa.

    A tuple x_1..x_r generates a free submodule iff eps^(c-1) x_1, ...,
    eps^(c-1) x_r are independent.
    """
    if rank == 0:
        return 1
    if w - kappa < rank:
        return 0
    tuples = math.prod(q ** w - q ** (kappa + j) for j in range(rank))
    count, rest = divmod(tuples, _chain_ring_gl_order(rank, c, q))
    if rest:
        raise InvariantViolation(f"free-submodule count {tuples} not divisible by |GL_{rank}(H)|")
    return count


def _power_stack(constraint: np.ndarray, powers: list[np.ndarray], q: int) -> np.ndarray:
    return np.vstack([constraint @ p for p in powers]) % q


def _kernel_invariants(constraint: np.ndarray, powers: list[np.ndarray], q: int) -> tuple[int, int]:
    """(w, kappa) of the largest stable subspace K of ker(constraint).

    ``powers`` lists N^0, ..., N^(c-1) for the nilpotent operator N whose
    Jordan blocks all have size c; w = dim K and kappa = dim(K cap ker N^(c-1)).
    """
    d, c = powers[0].shape[0], len(powers)
    stack = _power_stack(constraint, powers, q)
    w = d - rank_mod(stack, q)
    kappa = 0 if c == 1 else d - rank_mod(np.vstack([stack, powers[-1]]), q)
    return w, kappa


# ---------------------------------------------------------------------------
# Locally free submodules
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LfSubmodule:
    """A locally free submodule: one normal form per vertex."""

    rank: RankVector
    forms: dict[int, FreeForm]


def _check_rank(module: HModuleRep, r) -> RankVector:
    r = tuple(int(x) for x in r)
    if len(r) != module.datum.n or any(x < 0 or x > m for x, m in zip(r, module.rank)):
        raise RankOutOfRange(f"rank {r} is not between 0 and {module.rank}")
    return r


def _closed_form_vertices(datum: CartanDatum, weight: dict[int, int]) -> frozenset[int]:
    """Maximum-weight independent set of sources and sinks.

    ``weight`` is the log_q of the enumeration a vertex would otherwise cost.
    """
    candidates = [v for v in datum.vertices if datum.is_sink(v) or datum.is_source(v)]
    best, best_key = (), (-1, -1)
    for size in range(len(candidates) + 1):
        for subset in itertools.combinations(candidates, size):
            if any(datum.c(a, b) for a, b in itertools.combinations(subset, 2)):
                continue
            key = (sum(weight[v] for v in subset), size)
            if key > best_key:
                best, best_key = subset, key
    return frozenset(best)


def _stable(module: HModuleRep, i: int, j: int, target, source) -> bool:
    """A_ij maps the chosen submodule at j into the chosen submodule at i."""
    return not np.any((target.annihilator @ module.arrow(i, j) @ source.span) % module.q)


def _flags_stable(module: HModuleRep, i: int, j: int, target, source) -> bool:
    return all(_stable(module, i, j, a, b) for a, b in zip(target, source))


def _iter_choices(module: HModuleRep, order: list[int], candidates, stable):
    """Yield arrow-stable choices of one candidate per vertex of ``order``."""
    placed, checks = set(), []
    for v in order:
        placed.add(v)
        checks.append([(i, j) for i, j in module.datum.arrows if v in (i, j) and i in placed and j in placed])
    chosen = {}

    def extend(pos: int):
        if pos == len(order):
            yield dict(chosen)
            return
        v = order[pos]
        for candidate in candidates[pos]:
            chosen[v] = candidate
            if all(stable(module, i, j, chosen[i], chosen[j]) for i, j in checks[pos]):
                yield from extend(pos + 1)
        chosen.pop(v, None)

    yield from extend(0)


def _iter_forms(module: HModuleRep, r: RankVector, order: list[int]):
    """Yield arrow-stable choices of normal forms on the vertices in ``order``."""
    candidates = [
        free_submodule_forms(module.datum.d(v), module.rank[v - 1], r[v - 1], module.q) for v in order
    ]
    return _iter_choices(module, order, candidates, _stable)


def _closed_powers(module: HModuleRep, v: int) -> list[np.ndarray]:
    powers = [module.eps_power(v, s) for s in range(module.datum.d(v))]
    return powers if module.datum.is_source(v) else [p.T for p in powers]


def _closed_constraint(module: HModuleRep, v: int, chosen: dict) -> np.ndarray:
    """Linear conditions on the submodule at a source or sink v.

    At a source, its image under each outgoing arrow must lie in the chosen
    submodule. At a sink the submodule must contain every incoming image;
    dually, its annihilator is a free submodule for eps^T inside the
    annihilator of those images.
    """
    datum, q, d = module.datum, module.q, module.dim(v)
    if datum.is_source(v):
        parts = [chosen[i].annihilator @ module.arrow(i, v) for i in datum.out_neighbors(v)]
        return np.vstack(parts) % q if parts else np.zeros((0, d), dtype=np.int64)
    parts = [module.arrow(v, j) @ chosen[j].span for j in datum.in_neighbors(v)]
    return np.hstack(parts).T % q if parts else np.zeros((0, d), dtype=np.int64)


def _closed_rank(module: HModuleRep, r: RankVector, v: int) -> int:
    """Rank of the free submodule counted at v: U itself at a source, its annihilator at a sink."""
    return r[v - 1] if module.datum.is_source(v) else module.rank[v - 1] - r[v - 1]


def _closed_flag_count(module: HModuleRep, levels: list[RankVector], v: int, chosen: dict) -> int:
    """Flags at the source or sink v compatible with the flags chosen around it.

    The level-k submodule (at a sink: its annihilator) must lie in a stable
    subspace that grows in the order the flag is built, so each step is a
    free-submodule count in that subspace modulo the level below.
    """
    datum, q = module.datum, module.q
    c, m = datum.d(v), module.rank[v - 1]
    ranks = [level[v - 1] for level in levels]
    if datum.is_source(v):
        steps = [(k, below, rho - below) for k, (below, rho) in enumerate(zip([0, *ranks], ranks))]
    else:
        # Ann(U_k) has rank m - rho_k and contains Ann(U_(k+1)).
        above = [*ranks[1:], m]
        steps = [(k, m - above[k], above[k] - ranks[k]) for k in reversed(range(len(ranks)))]
    powers = _closed_powers(module, v)
    total = 1
    for k, below, step in steps:
        if not step:
            continue
        constraint = _closed_constraint(module, v, {u: flag[k] for u, flag in chosen.items()})
        w, kappa = _kernel_invariants(constraint, powers, q)
        total *= _free_count(w - c * below, kappa - (c - 1) * below, step, c, q)
        if not total:
            break
    return total


def _closed_form_count(module: HModuleRep, r: RankVector, v: int, chosen: dict[int, FreeForm]) -> int:
    return _closed_flag_count(module, [r], v, {u: (form,) for u, form in chosen.items()})


# Above this many multiply-adds per parameter vector a family is split by
# constant terms before its ranks are computed.
_SPLIT_COST = 2048


class _AffineRank:
    """rank(base + sum_k t_k dirs[k]) over F_q for many parameter vectors t.

    Columns killed by every direction contribute a fixed rank; the other
    columns are reduced modulo their span once, so each t costs the rank of
    a small matrix.
    """

    def __init__(self, base: np.ndarray, dirs: np.ndarray, q: int):
        self.q = q
        self.constant = None
        cols = base.shape[1]
        moving = dirs.reshape(-1, cols) if cols and dirs.shape[0] else np.zeros((0, cols), dtype=np.int64)
        pivots = pivot_columns_mod(moving, q)
        if not pivots:
            self.constant = rank_mod(base, q)
            return
        still = (base @ null_space_mod(moving, q).T) % q
        self.offset = rank_mod(still, q)
        left = null_space_mod(still.T, q)
        self.base = (left @ base[:, pivots]) % q
        self.dirs = np.einsum("ab,kbc->kac", left, dirs[:, :, pivots]) % q

    @property
    def cost(self) -> int:
        if self.constant is not None:
            return 0
        rows, cols = self.base.shape
        return rows * cols * cols

    def ranks(self, params: np.ndarray) -> np.ndarray:
        if self.constant is not None:
            return np.full(len(params), self.constant, dtype=np.int64)
        matrices = self.base[None] + np.tensordot(params, self.dirs, axes=1)
        return self.offset + batch_rank_mod(matrices, self.q)


def _parameter_chunks(size: int, q: int):
    """F_q^size in row blocks of at most LFCC_BATCH_SIZE vectors."""
    total = q ** size
    place = q ** np.arange(size, dtype=np.int64)
    for start in range(0, total, config.BATCH_SIZE):
        index = np.arange(start, min(total, start + config.BATCH_SIZE), dtype=np.int64)
        yield (index[:, None] // place[None, :]) % q


def _stable_subfamily(module: HModuleRep, v: int, family: FormFamily, chosen: dict, checks) -> FormFamily | None:
    """The members of ``family`` that are arrow-stable against ``chosen``, reparametrized."""
    if not checks:
        return family
    q = module.q
    constant, linear = [], []
    for i, j in checks:
        if j == v:
            left = chosen[i].annihilator @ module.arrow(i, v)
            fixed = left @ family.span
            moving = np.einsum("ab,kbc->kac", left, family.span_dirs)
        else:
            right = module.arrow(v, j) @ chosen[j].span
            fixed = family.annihilator @ right
            moving = np.einsum("kab,bc->kac", family.annihilator_dirs, right)
        constant.append(fixed.ravel())
        linear.append(moving.reshape(family.size, fixed.size))
    solved = affine_solutions_mod(np.hstack(linear).T % q, -np.concatenate(constant) % q, q)
    if solved is None:
        return None
    return family.restrict(*solved, q)


def _neighbor_profiles(module: HModuleRep, v: int, family: FormFamily, chosen: dict,
                       u: int) -> tuple[_AffineRank, _AffineRank | None]:
    """Profiles of (w, kappa) at the closed neighbor u as the form at v runs through ``family``."""
    q = module.q
    base = _closed_constraint(module, u, {**chosen, v: FlagLevel(family.span, family.annihilator)})
    zeros = {i: FlagLevel(np.zeros_like(f.span), np.zeros_like(f.annihilator)) for i, f in chosen.items()}
    powers = _closed_powers(module, u)
    stack = _power_stack(base, powers, q)
    dirs = np.zeros((family.size, *stack.shape), dtype=np.int64)
    for n, (span, annihilator) in enumerate(zip(family.span_dirs, family.annihilator_dirs)):
        direction = _closed_constraint(module, u, {**zeros, v: FlagLevel(span, annihilator)})
        dirs[n] = _power_stack(direction, powers, q)
    w = _AffineRank(stack, dirs, q)
    if len(powers) == 1:
        return w, None
    last = powers[-1]
    padding = np.zeros((family.size, *last.shape), dtype=np.int64)
    return w, _AffineRank(np.vstack([stack, last]), np.concatenate([dirs, padding], axis=1), q)


def _family_total(module: HModuleRep, r: RankVector, v: int, family: FormFamily, chosen: dict, checks,
                  neighbors: list[int], cost_limit: int | None = None) -> int | None:
    """Sum over the stable members of ``family`` of the product of the counts at ``neighbors``.

    Returns None if the rank profiles cost more than ``cost_limit``.
    """
    q = module.q
    family = _stable_subfamily(module, v, family, chosen, checks)
    if family is None:
        return 0
    profiles = [(u, *_neighbor_profiles(module, v, family, chosen, u)) for u in neighbors]
    if cost_limit is not None:
        cost = sum(p.cost for _, w, kappa in profiles for p in (w, kappa) if p is not None)
        if cost > cost_limit:
            return None
    if not profiles:
        return q ** family.size
    total = 0
    for params in _parameter_chunks(family.size, q):
        columns = []
        for u, w, kappa in profiles:
            d = module.dim(u)
            columns.append(d - w.ranks(params))
            columns.append(d - kappa.ranks(params) if kappa is not None else np.zeros(len(params), dtype=np.int64))
        keys, counts = np.unique(np.column_stack(columns), axis=0, return_counts=True)
        for key, times in zip(keys.tolist(), counts.tolist()):
            term = 1
            for n, (u, _, _) in enumerate(profiles):
                term *= _free_count(key[2 * n], key[2 * n + 1], _closed_rank(module, r, u), module.datum.d(u), q)
                if not term:
                    break
            total += times * term
    return total


def _count_last_vertex(module: HModuleRep, r: RankVector, v: int, chosen: dict, neighbors: list[int]) -> int:
    """Sum over the forms at v, stable against ``chosen``, of the product of
    the closed-form counts at ``neighbors``.

    Forms are swept one pivot set at a time with vectorized ranks; a pivot
    set whose rank profiles are too wide is split by constant terms.
    """
    datum, q = module.datum, module.q
    c, m = datum.d(v), module.rank[v - 1]
    checks = [(i, j) for i, j in datum.arrows if (i == v and j in chosen) or (j == v and i in chosen)]
    active = [u for u in neighbors if _closed_rank(module, r, u)]
    total = 0
    for pivots in itertools.combinations(range(m), r[v - 1]):
        (whole,) = form_families(c, m, pivots, q, False)
        count = _family_total(module, r, v, whole, chosen, checks, active, _SPLIT_COST if c > 1 else None)
        if count is None:
            count = sum(
                _family_total(module, r, v, cell, chosen, checks, active)
                for cell in form_families(c, m, pivots, q, True)
            )
        total += count
    return total


def count_lf_submodules(module: HModuleRep, r) -> int:
    """Number of locally free submodules of ``module`` with rank vector r.

    Sources and sinks in an independent set are counted in closed form. The
    other vertices are enumerated, the last of them in vectorized families.
    """
    r = _check_rank(module, r)
    datum = module.datum
    weight = {v: datum.d(v) * r[v - 1] * (module.rank[v - 1] - r[v - 1]) for v in datum.vertices}
    closed = _closed_form_vertices(datum, weight)
    order = [v for v in admissible_sequence(datum) if v not in closed]
    if not order:
        return math.prod(_closed_form_count(module, r, v, {}) for v in sorted(closed))
    last = order[-1]
    near = [u for u in sorted(closed) if datum.c(u, last)]
    far = [u for u in sorted(closed) if u not in near]
    total = 0
    for chosen in _iter_forms(module, r, order[:-1]):
        fixed = 1
        for u in far:
            fixed *= _closed_form_count(module, r, u, chosen)
            if not fixed:
                break
        if fixed:
            total += fixed * _count_last_vertex(module, r, last, chosen, near)
    logger.debug("Counted %d submodules of rank %s in a module of rank %s over F_%d",
                 total, r, module.rank, module.q)
    return total


def count_lf_flags(module: HModuleRep, levels) -> int:
    """Number of chains U_1 <= ... <= U_t of locally free submodules with rk U_k = levels[k].

    Every U_k is a free summand at each vertex, so all subquotients are
    locally free.
    """
    levels = [_check_rank(module, r) for r in levels]
    if any(a > b for lower, upper in zip(levels, levels[1:]) for a, b in zip(lower, upper)):
        raise RankOutOfRange(f"ranks {levels} do not increase")
    if len(levels) < 2:
        return count_lf_submodules(module, levels[0]) if levels else 1
    datum, q = module.datum, module.q
    weight = {}
    for v in datum.vertices:
        ranks = [level[v - 1] for level in levels]
        steps = zip([0, *ranks], ranks)
        weight[v] = datum.d(v) * sum((rho - below) * (module.rank[v - 1] - rho) for below, rho in steps)
    closed = _closed_form_vertices(datum, weight)
    order = [v for v in admissible_sequence(datum) if v not in closed]
    candidates = [
        free_flag_forms(datum.d(v), module.rank[v - 1], tuple(level[v - 1] for level in levels), q)
        for v in order
    ]
    total = 0
    for chosen in _iter_choices(module, order, candidates, _flags_stable):
        term = 1
        for v in sorted(closed):
            term *= _closed_flag_count(module, levels, v, chosen)
            if not term:
                break
        total += term
    logger.debug("Counted %d flags of ranks %s in a module of rank %s over F_%d",
                 total, levels, module.rank, q)
    return total


def iter_lf_submodules(module: HModuleRep, r):
    """Yield every locally free submodule of rank r explicitly."""
    r = _check_rank(module, r)
    for chosen in _iter_forms(module, r, list(admissible_sequence(module.datum))):
        yield LfSubmodule(rank=r, forms=chosen)


def submodule_rep(module: HModuleRep, sub: LfSubmodule) -> HModuleRep:
    """The submodule as a module in its own canonical coordinates."""
    maps = {
        (i, j): (module.arrow(i, j) @ sub.forms[j].span)[sub.forms[i].pivot_rows, :]
        for i, j in module.datum.arrows
    }
    return make_module(module.datum, module.q, sub.rank, maps)


def quotient_rep(module: HModuleRep, sub: LfSubmodule) -> HModuleRep:
    """The quotient by the submodule; its eps-action is again canonical."""
    rank = tuple(m - s for m, s in zip(module.rank, sub.rank))
    maps = {
        (i, j): (sub.forms[i].annihilator @ module.arrow(i, j))[:, sub.forms[j].quotient_columns]
        for i, j in module.datum.arrows
    }
    return make_module(module.datum, module.q, rank, maps)


# ---------------------------------------------------------------------------
# Interpolation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CountPoly:
    """Counting polynomial in q, constant term first."""

    coefficients: tuple[int, ...]
    degree_bound: int
    samples: tuple[tuple[int, int], ...]

    def __call__(self, q: int) -> int:
        return sum(c * q ** k for k, c in enumerate(self.coefficients))

    @property
    def euler_characteristic(self) -> int:
        return self(1)

    def as_expr(self) -> sympy.Expr:
        return sum((c * Q ** k for k, c in enumerate(self.coefficients)), sympy.Integer(0))

    def __str__(self) -> str:
        return str(self.as_expr())


def degree_bound(datum: CartanDatum, m, r) -> int:
    return sum(datum.d(i) * r[i - 1] * (m[i - 1] - r[i - 1]) for i in datum.vertices)


def primes_for(bound: int, prime_list=None) -> tuple[int, ...]:
    """The first bound + 2 primes of ``prime_list`` (default: all primes)."""
    needed = bound + 2
    if prime_list is None:
        return tuple(sympy.prime(k) for k in range(1, needed + 1))
    primes = tuple(int(p) for p in prime_list)
    for p in primes:
        if not sympy.isprime(p):
            raise NotPrime(f"{p} is not prime")
    if len(primes) < needed:
        raise NotEnoughPrimes(f"degree bound {bound} needs {needed} primes, got {len(primes)}")
    return primes[:needed]


def fit_count_poly(samples, bound: int, context: dict) -> CountPoly:
    """Fit through the first bound + 1 samples and check the rest.

    Raises:
        InterpolationMismatch: the fit is not integral, misses a sample, or
            is negative at q = 1.
    """
    samples = tuple((int(x), int(y)) for x, y in samples)
    points = samples[: bound + 1]
    expr = sympy.interpolate(list(points), Q) if len(points) > 1 else sympy.Integer(points[0][1])
    poly = sympy.Poly(expr, Q)
    coeffs = poly.all_coeffs()[::-1]

    problem = None
    if not all(c.is_integer for c in coeffs):
        problem = f"non-integral fit {expr}"
    else:
        misses = [(x, y) for x, y in samples if poly.eval(x) != y]
        if misses:
            problem = f"fit {expr} misses samples {misses}"
        elif poly.eval(1) < 0:
            problem = f"fit {expr} is negative at q=1"
    if problem:
        logger.error("Interpolation mismatch: %s; samples=%s context=%s", problem, samples, context)
        raise InterpolationMismatch(problem, list(samples), context)
    return CountPoly(coefficients=tuple(int(c) for c in coeffs), degree_bound=bound, samples=samples)


# ---------------------------------------------------------------------------
# Euler characteristics and F-polynomials
# ---------------------------------------------------------------------------


def _sample_primes(count, primes) -> list[tuple[int, int]]:
    """(q, count(q)) for every prime, on a thread pool when LFCC_WORKERS > 1."""
    if config.WORKERS > 1 and len(primes) > 1:
        with ThreadPoolExecutor(max_workers=config.WORKERS) as pool:
            values = list(pool.map(count, primes))
    else:
        values = [count(q) for q in primes]
    return list(zip(primes, values))


def module_at(datum: CartanDatum, spec: ModuleSpec, q: int, rng_seed: int) -> HModuleRep:
    """The module described by ``spec`` over F_q.

    With an active cache, searched modules are reloaded from it, so counts
    from several runs always refer to the same module.
    """
    store = cache.active_cache()
    if store is None or not isinstance(spec, RootSum):
        return spec.build(datum, q, rng_seed)
    key = cache.module_key(datum.label(), spec.label(), q, rng_seed)
    data = store.get_module(key)
    if data is not None:
        return module_from_dict(datum, data)
    module = spec.build(datum, q, rng_seed)
    store.put_module(key, module_to_dict(module))
    return module


def _count_at_prime(datum: CartanDatum, spec: ModuleSpec, r: RankVector, q: int, rng_seed: int) -> int:
    store = cache.active_cache()
    key = cache.count_key(datum.label(), spec.label(), r, q, rng_seed)
    hit = store.get(key) if store is not None else None
    if hit is not None and not store.should_spot_check(key):
        return hit
    count = count_lf_submodules(module_at(datum, spec, q, rng_seed), r)
    if hit is not None:
        if hit != count:
            raise CacheMismatch(f"cached count {hit} for {key} differs from recomputed {count}")
    elif store is not None:
        store.put(key, count)
    return count


def count_poly_gr(datum: CartanDatum, spec, r, prime_list=None, rng_seed: int = 0) -> CountPoly:
    """Counting polynomial of Gr_lf(r, M) for the module described by ``spec``."""
    spec = as_spec(spec)
    m = spec.rank_for(datum)
    r = tuple(int(x) for x in r)
    if len(r) != datum.n or any(x < 0 or x > y for x, y in zip(r, m)):
        raise RankOutOfRange(f"rank {r} is not between 0 and {m}")
    bound = degree_bound(datum, m, r)
    primes = primes_for(bound, prime_list)
    samples = _sample_primes(lambda q: _count_at_prime(datum, spec, r, q, rng_seed), primes)
    context = {"datum": datum.label(), "spec": spec.label(), "r": list(r), "rng_seed": rng_seed}
    return fit_count_poly(samples, bound, context)


def euler_char_gr(datum: CartanDatum, spec, r, prime_list=None, rng_seed: int = 0) -> int:
    """chi(Gr_lf(r, M)) via point counts at q = 1."""
    return count_poly_gr(datum, spec, r, prime_list, rng_seed).euler_characteristic


@dataclass(frozen=True)
class FPolynomialValue:
    """F_M as a map from rank vectors r to chi(Gr_lf(r, M)), zeros omitted."""

    rank: RankVector
    coefficients: dict[RankVector, int]

    def generators(self) -> tuple[sympy.Symbol, ...]:
        return tuple(sympy.Symbol(f"t{i}") for i in range(1, len(self.rank) + 1))

    def as_poly(self) -> sympy.Poly:
        return sympy.Poly.from_dict(self.coefficients, *self.generators(), domain=sympy.ZZ)

    def __str__(self) -> str:
        return str(self.as_poly().as_expr())


def f_polynomial(datum: CartanDatum, spec, prime_list=None, rng_seed: int = 0) -> FPolynomialValue:
    """F_M = sum over r <= rk M of chi(Gr_lf(r, M)) t^r."""
    spec = as_spec(spec)
    m = spec.rank_for(datum)
    coefficients = {}
    for r in itertools.product(*(range(x + 1) for x in m)):
        chi = euler_char_gr(datum, spec, r, prime_list, rng_seed)
        if chi:
            coefficients[tuple(r)] = chi
    zero = (0,) * datum.n
    if coefficients.get(zero) != 1 or coefficients.get(tuple(m)) != 1:
        raise InvariantViolation(f"F-polynomial of {spec.label()} has wrong constant or top term: {coefficients}")
    logger.info("F-polynomial of %s: %d terms", spec.label(), len(coefficients))
    return FPolynomialValue(rank=tuple(m), coefficients=coefficients)


# ---------------------------------------------------------------------------
# Filtrations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Step:
    rank: RankVector
    module: HModuleRep | None
    rigid: bool
    signature: tuple[tuple[int, int], ...] = ()


def _prepare_steps(module: HModuleRep, quotient_specs, battery) -> list[_Step]:
    steps = []
    for spec in quotient_specs:
        if isinstance(spec, HModuleRep):
            rigid = is_rigid(module.datum, spec)
            signature = () if rigid else tuple((hom_dim(x, spec), hom_dim(spec, x)) for x in battery)
            steps.append(_Step(rank=spec.rank, module=spec, rigid=rigid, signature=signature))
        else:
            steps.append(_Step(rank=tuple(int(x) for x in spec), module=None, rigid=False))
    total = [sum(col) for col in zip(*(s.rank for s in steps))] if steps else [0] * module.datum.n
    if tuple(total) != module.rank:
        raise RankOutOfRange(f"quotient ranks sum to {tuple(total)}, module has rank {module.rank}")
    return steps


def _matches(piece: HModuleRep, step: _Step, battery) -> bool:
    if step.module is None:
        return True
    if step.rigid:
        return is_rigid(piece.datum, piece)
    return tuple((hom_dim(x, piece), hom_dim(piece, x)) for x in battery) == step.signature


def default_battery(datum: CartanDatum, q: int, rng_seed: int = 0) -> list[HModuleRep]:
    """E_1..E_n and every M(beta) over F_q."""
    simples = [free_module(datum, simple_root(datum, i), q) for i in datum.vertices]
    return simples + [find_rigid(datum, beta, q, rng_seed) for beta in positive_roots(datum)]


def _iter_chains(module: HModuleRep, steps: list[_Step], battery):
    if len(steps) == 1:
        if _matches(module, steps[0], battery):
            yield (module,)
        return
    head, rest = steps[0], steps[1:]
    for sub in iter_lf_submodules(module, head.rank):
        piece = submodule_rep(module, sub)
        if not _matches(piece, head, battery):
            continue
        for tail in _iter_chains(quotient_rep(module, sub), rest, battery):
            yield (piece, *tail)


def iter_filtrations(module: HModuleRep, quotient_specs, battery=None):
    """Yield the subquotients of each chain 0 = M_0 < ... < M_t = M.

    A spec is either a rank vector (any locally free subquotient of that
    rank) or a module (rigid specs match by rigidity, others by Hom
    dimensions against ``battery``).
    """
    specs = [s for s in quotient_specs if isinstance(s, HModuleRep) or any(s)]
    if battery is None:
        needs = any(isinstance(s, HModuleRep) and not is_rigid(module.datum, s) for s in specs)
        battery = default_battery(module.datum, module.q) if needs else []
    steps = _prepare_steps(module, specs, battery)
    if not steps:
        if module.is_zero():
            yield ()
        return
    yield from _iter_chains(module, steps, battery)


def count_filtrations(module: HModuleRep, quotient_specs, battery=None) -> int:
    """Number of chains with subquotients matching ``quotient_specs`` in order.

    Chains whose specs are all rank vectors are counted as flags of locally
    free submodules; module specs need the subquotients and are enumerated.
    """
    if any(isinstance(s, HModuleRep) for s in quotient_specs):
        return sum(1 for _ in iter_filtrations(module, quotient_specs, battery))
    ranks = [tuple(int(x) for x in s) for s in quotient_specs if any(s)]
    total = tuple(sum(col) for col in zip(*ranks)) if ranks else (0,) * module.datum.n
    if total != module.rank:
        raise RankOutOfRange(f"quotient ranks sum to {total}, module has rank {module.rank}")
    levels = list(itertools.accumulate(ranks, lambda a, b: tuple(x + y for x, y in zip(a, b))))
    return count_lf_flags(module, levels[:-1])


def filtration_degree_bound(datum: CartanDatum, m, ranks) -> int:
    remaining = list(m)
    total = 0
    for s in ranks:
        total += sum(datum.d(i) * s[i - 1] * (remaining[i - 1] - s[i - 1]) for i in datum.vertices)
        remaining = [a - b for a, b in zip(remaining, s)]
    return total


def count_poly_filtrations(datum: CartanDatum, spec, ranks, prime_list=None, rng_seed: int = 0) -> CountPoly:
    """Counting polynomial of the variety of chains with locally free subquotients of the given ranks."""
    spec = as_spec(spec)
    ranks = [tuple(int(x) for x in s) for s in ranks]
    bound = filtration_degree_bound(datum, spec.rank_for(datum), ranks)
    samples = _sample_primes(
        lambda q: count_filtrations(module_at(datum, spec, q, rng_seed), ranks), primes_for(bound, prime_list)
    )
    context = {"datum": datum.label(), "spec": spec.label(), "ranks": [list(s) for s in ranks], "rng_seed": rng_seed}
    return fit_count_poly(samples, bound, context)


def prop41_sequence(datum: CartanDatum, m, r) -> list[int]:
    """Vertices of the E-filtration: r-part first, then the complement, each in admissible order."""
    iplus = admissible_sequence(datum)
    head = [i for i in iplus for _ in range(r[i - 1])]
    tail = [i for i in iplus for _ in range(m[i - 1] - r[i - 1])]
    return head + tail


def prop41_bound(datum: CartanDatum, beta, r) -> int:
    ranks = [simple_root(datum, i) for i in prop41_sequence(datum, beta, r)]
    return filtration_degree_bound(datum, beta, ranks)


def check_prop41(datum: CartanDatum, beta, r, prime_list=None, rng_seed: int = 0) -> bool:
    """chi of the E-filtration variety equals chi(Gr_lf(r, M(beta))) times prod r_i!(m_i - r_i)!."""
    beta, r = tuple(beta), tuple(r)
    ranks = [simple_root(datum, i) for i in prop41_sequence(datum, beta, r)]
    chi_flags = count_poly_filtrations(datum, beta, ranks, prime_list, rng_seed).euler_characteristic
    chi_gr = euler_char_gr(datum, beta, r, prime_list, rng_seed)
    factor = math.prod(math.factorial(a) * math.factorial(m - a) for a, m in zip(r, beta))
    logger.info("Filtration check beta=%s r=%s: chi(F)=%d chi(Gr)=%d factor=%d",
                beta, r, chi_flags, chi_gr, factor)
    return chi_flags == chi_gr * factor


def filtration_exists(datum: CartanDatum, gamma, parts, q: int = 5, rng_seed: int = 0) -> tuple[int, ...] | None:
    """A permutation of ``parts`` such that M(gamma) has a filtration with
    subquotients M(parts[pi(1)]), M(parts[pi(2)]), ... from the bottom.

    Returns None if no permutation works, which is logged as a falsification.
    """
    gamma = tuple(gamma)
    parts = [tuple(p) for p in parts]
    total = tuple(sum(col) for col in zip(*parts))
    if total != gamma:
        raise RankOutOfRange(f"parts sum to {total}, not {gamma}")
    module = find_rigid(datum, gamma, q, rng_seed)
    rigid = {p: find_rigid(datum, p, q, rng_seed) for p in set(parts)}
    seen = set()
    for perm in itertools.permutations(range(len(parts))):
        ordered = tuple(parts[k] for k in perm)
        if ordered in seen:
            continue
        seen.add(ordered)
        chain = next(iter_filtrations(module, [rigid[p] for p in ordered], battery=[]), None)
        if chain is not None:
            return perm
    logger.error("FALSIFICATION: no filtration of M%s with subquotients %s in any order over F_%d",
                 gamma, parts, q)
    return None


@dataclass(frozen=True)
class WrongOrderCase:
    multiplicities: tuple[int, ...]
    hom_ordered_exists: bool
    wrong_order_count: int


def _multiplicity_vectors(order, gamma):
    """All a with sum_j a_j beta_j = gamma over the given root order."""
    def extend(k, remaining):
        if k == len(order):
            if not any(remaining):
                yield ()
            return
        beta = order[k]
        top = min((x // b for x, b in zip(remaining, beta) if b), default=0)
        for a in range(top + 1):
            rest = tuple(x - a * b for x, b in zip(remaining, beta))
            for tail in extend(k + 1, rest):
                yield (a, *tail)

    yield from extend(0, tuple(gamma))


def wrong_order_counts(datum: CartanDatum, gamma, q: int = 5, rng_seed: int = 0) -> list[WrongOrderCase]:
    """For each decomposition gamma = sum a_j beta_j with at least two a_j > 0:
    whether the Hom-ordered filtration by M(beta_j)^{a_j} exists, and the
    number of chains with locally free subquotients of rank a_j beta_j in
    increasing j (zero whenever the former exists).
    """
    order = hom_vanishing_order(datum)
    module = find_rigid(datum, tuple(gamma), q, rng_seed)
    cases = []
    for a in _multiplicity_vectors(order, gamma):
        if sum(1 for x in a if x) < 2:
            continue
        # The Hom-ordered filtration has M(beta_r)^{a_r} at the bottom.
        bottom_up = [
            direct_sum_all([find_rigid(datum, order[j], q, rng_seed)] * a[j], datum, q)
            for j in reversed(range(len(order))) if a[j]
        ]
        exists = next(iter_filtrations(module, bottom_up, battery=[]), None) is not None
        ranks = [tuple(a[j] * x for x in order[j]) for j in range(len(order)) if a[j]]
        wrong = count_filtrations(module, ranks)
        logger.info("gamma=%s a=%s: hom-ordered filtration %s, wrong-order chains %d",
                    tuple(gamma), a, "exists" if exists else "absent", wrong)
        cases.append(WrongOrderCase(multiplicities=a, hom_ordered_exists=exists, wrong_order_count=wrong))
    return cases
