import numpy as np
import pytest

import algebra_h
import config
from algebra_h import (
    ModuleLift,
    RootSum,
    affine_solutions_mod,
    arrow_solution_space,
    as_spec,
    batch_rank_mod,
    direct_sum,
    endomorphism_basis,
    eps_power,
    ext1_dim_lf,
    find_rigid,
    find_rigid_with_retries,
    free_module,
    has_nontrivial_idempotent,
    hom_dim,
    is_rigid,
    make_module,
    module_from_dict,
    module_to_dict,
    null_space_mod,
    pivot_columns_mod,
    rank_mod,
    sample_locally_free,
)
from builtin_types import builtin_lift, get_builtin
from cartan_core import positive_roots
from errors import (
    InvariantViolation,
    ModuleMismatch,
    NotARoot,
    NotPrime,
    RankOutOfRange,
    RelationViolation,
    SearchExhausted,
)


def test_eps_power_shifts_within_blocks():
    eps = eps_power(3, 2, 1)
    assert eps.shape == (6, 6)
    assert eps[1, 0] == 1 and eps[2, 1] == 1
    assert eps[3, 2] == 0
    assert not eps_power(3, 2, 3).any()


def test_linear_algebra_mod_p():
    matrix = np.array([[1, 2], [2, 4]])
    assert rank_mod(matrix, 5) == 1
    assert rank_mod(np.array([[2, 0], [0, 1]]), 2) == 1
    kernel = null_space_mod(matrix, 5)
    assert kernel.shape == (1, 2)
    assert not ((matrix @ kernel.T) % 5).any()


def test_non_prime_field_is_rejected(b2):
    with pytest.raises(NotPrime):
        free_module(b2, (1, 0), 4)


def test_free_module_hom_and_ext(b2):
    e1 = free_module(b2, (1, 0), 5)
    e2 = free_module(b2, (0, 1), 5)
    assert hom_dim(e1, e1) == 2
    assert hom_dim(e2, e2) == 1
    assert hom_dim(e1, e2) == 0
    assert hom_dim(e2, e1) == 0
    assert ext1_dim_lf(b2, e2, e1) == 2
    assert ext1_dim_lf(b2, e1, e2) == 0
    assert is_rigid(b2, e1) and is_rigid(b2, e2)


@pytest.mark.parametrize(
    "type_name, rank, arrow, dimension",
    [
        ("B2", (1, 1), (1, 2), 2),
        ("G2", (1, 1), (1, 2), 3),
        ("B3", (1, 1, 0), (1, 2), 2),
        ("B3", (0, 1, 1), (2, 3), 2),
        ("A3", (1, 1, 1), (2, 3), 1),
    ],
)
def test_arrow_solution_space_dimensions(type_name, rank, arrow, dimension):
    datum = get_builtin(type_name).datum()
    assert len(arrow_solution_space(datum, rank, 5, arrow)) == dimension


def test_relation_violation_is_reported(b3):
    bad = {(1, 2): np.array([[1, 0], [0, 0]])}
    with pytest.raises(InvariantViolation):
        make_module(b3, 5, (1, 1, 0), bad)
    lift = ModuleLift(name="bad", rank=(1, 1, 0), arrows=(((1, 2), ((1, 0), (0, 0))),))
    with pytest.raises(RelationViolation):
        lift.build(b3, 5)


def test_shape_and_rank_errors(b2):
    with pytest.raises(ModuleMismatch):
        make_module(b2, 5, (1, 1), {(1, 2): np.zeros((1, 1), dtype=np.int64)})
    with pytest.raises(RankOutOfRange):
        make_module(b2, 5, (-1, 1), {})
    with pytest.raises(ModuleMismatch):
        direct_sum(free_module(b2, (1, 0), 5), free_module(b2, (1, 0), 7))


def test_sampling_is_reproducible(b3):
    first = sample_locally_free(b3, (1, 2, 2), 5, (3, 1))
    second = sample_locally_free(b3, (1, 2, 2), 5, (3, 1))
    for arrow in b3.arrows:
        assert np.array_equal(first.arrow(*arrow), second.arrow(*arrow))


@pytest.mark.parametrize("beta, end_dim", [((1, 0), 2), ((0, 1), 1), ((1, 1), 1), ((1, 2), 2)])
def test_find_rigid_b2(b2, beta, end_dim):
    module = find_rigid(b2, beta, 5)
    assert module.rank == beta
    assert is_rigid(b2, module)
    assert hom_dim(module, module) == end_dim
    assert not has_nontrivial_idempotent(module)


def test_find_rigid_rejects_non_roots(b2):
    with pytest.raises(NotARoot):
        find_rigid(b2, (2, 1), 5)


def test_find_rigid_g2_largest_root(g2):
    module = find_rigid(g2, (3, 2), 5)
    assert is_rigid(g2, module)


def test_find_rigid_falls_back_to_retry_primes(b2, monkeypatch):
    real = algebra_h.find_rigid

    def flaky(datum, beta, q, rng_seed=0):
        if q == 5:
            raise SearchExhausted("nothing over F_5")
        return real(datum, beta, q, rng_seed)

    monkeypatch.setattr(config, "SEARCH_PRIME", 5)
    monkeypatch.setattr(config, "SEARCH_RETRY_PRIMES", (7, 11))
    monkeypatch.setattr(algebra_h, "find_rigid", flaky)
    module = find_rigid_with_retries(b2, (1, 2))
    assert module.q == 7
    assert is_rigid(b2, module)

    monkeypatch.setattr(config, "SEARCH_RETRY_PRIMES", ())
    with pytest.raises(SearchExhausted):
        find_rigid_with_retries(b2, (1, 2))


def test_endomorphism_basis(b2):
    e1 = free_module(b2, (1, 0), 5)
    basis = endomorphism_basis(e1)
    assert len(basis) == 2
    assert basis[0][0].shape == (2, 2)
    module = find_rigid(b2, (1, 2), 5)
    assert len(endomorphism_basis(module)) == hom_dim(module, module)


def test_direct_sums_and_rigidity(b2):
    e1, e2 = free_module(b2, (1, 0), 5), free_module(b2, (0, 1), 5)
    mixed = direct_sum(e1, e2)
    assert mixed.rank == (1, 1)
    assert not is_rigid(b2, mixed)
    assert has_nontrivial_idempotent(mixed)
    family = RootSum.of((1, 1), (1, 0)).build(b2, 5)
    assert family.rank == (2, 1)
    assert is_rigid(b2, family)


def test_root_sum_labels_and_specs():
    assert RootSum.of((1, 1), (1, 0)).label() == "M(1,0)+M(1,1)"
    assert RootSum.of().label() == "0"
    assert as_spec((1, 2)) == RootSum.of((1, 2))
    assert as_spec([(1, 0), (0, 1)]) == RootSum.of((0, 1), (1, 0))


def test_builtin_lifts_satisfy_relations(g2):
    for name in ("G2-M1", "G2-M2"):
        module = builtin_lift(name).build(g2, 5)
        assert module.rank == (3, 2)


def test_module_serialization(b3):
    module = find_rigid(b3, (1, 1, 1), 5)
    data = module_to_dict(module)
    assert data["q"] == 5 and data["rank"] == [1, 1, 1]
    again = module_from_dict(b3, data)
    for arrow in b3.arrows:
        assert np.array_equal(again.arrow(*arrow), module.arrow(*arrow))


@pytest.mark.parametrize("q", [2, 3, 7])
def test_batch_rank_matches_single_ranks(q):
    rng = np.random.default_rng(q)
    for shape in [(40, 4, 6), (40, 6, 3), (5, 0, 3), (0, 2, 2)]:
        matrices = rng.integers(0, q, size=shape)
        # Low-rank members exercise the zero-pivot columns.
        if shape[0] and shape[1] > 1:
            matrices[::3, 1] = matrices[::3, 0] * 2
        expected = [rank_mod(matrix, q) for matrix in matrices]
        assert batch_rank_mod(matrices, q).tolist() == expected


def test_pivot_columns_and_affine_solutions():
    matrix = np.array([[1, 2, 0, 1], [2, 4, 1, 0]])
    assert pivot_columns_mod(matrix, 5) == [0, 2]
    assert pivot_columns_mod(np.zeros((0, 3), dtype=np.int64), 5) == []
    rhs = np.array([3, 1])
    origin, basis = affine_solutions_mod(matrix, rhs, 5)
    assert basis.shape == (2, 4)
    for t in [(0, 0), (1, 4), (3, 2)]:
        x = origin + np.array(t) @ basis
        assert ((matrix @ x - rhs) % 5 == 0).all()
    assert affine_solutions_mod(np.array([[1, 1], [2, 2]]), np.array([1, 1]), 5) is None
    origin, basis = affine_solutions_mod(np.zeros((0, 3), dtype=np.int64), np.zeros(0, dtype=np.int64), 5)
    assert not origin.any() and (basis == np.eye(3)).all()


def _ext1_from_presentation(m, n) -> int:
    """dim Ext^1(M, N) from the standard presentation of H by loops, arrows and relations.

    Cocycles give each loop and arrow a map from M to N killed by the
    derivative of every relation; coboundaries come from maps M_i -> N_i.
    """
    datum, q = m.datum, m.q
    slots = [(("eps", i), i, i) for i in datum.vertices] + [(("arrow", a), a[0], a[1]) for a in datum.arrows]

    def relations(g):
        out = []
        for i in datum.vertices:
            c = datum.d(i)
            out.append(sum(n.eps_power(i, k) @ g["eps", i] @ m.eps_power(i, c - 1 - k) for k in range(c)))
        for i, j in datum.arrows:
            a, b = abs(datum.c(j, i)), abs(datum.c(i, j))
            left = sum(
                (n.eps_power(i, k) @ g["eps", i] @ m.eps_power(i, a - 1 - k) @ m.arrow(i, j) for k in range(a)),
                n.eps_power(i, a) @ g["arrow", (i, j)],
            )
            right = sum(
                (n.arrow(i, j) @ n.eps_power(j, k) @ g["eps", j] @ m.eps_power(j, b - 1 - k) for k in range(b)),
                g["arrow", (i, j)] @ m.eps_power(j, b),
            )
            out.append(left - right)
        return np.concatenate([r.ravel() for r in out])

    columns = []
    for key, target, source in slots:
        for x in range(n.dim(target)):
            for y in range(m.dim(source)):
                g = {k: np.zeros((n.dim(t), m.dim(s)), dtype=np.int64) for k, t, s in slots}
                g[key][x, y] = 1
                columns.append(relations(g))
    cocycles = len(columns) - (rank_mod(np.column_stack(columns), q) if columns else 0)
    coboundaries = sum(n.dim(i) * m.dim(i) for i in datum.vertices) - hom_dim(m, n)
    return cocycles - coboundaries


def test_ext_of_simples_matches_presentation_b2(b2):
    simples = [free_module(b2, (1, 0), 3), free_module(b2, (0, 1), 3)]
    for m in simples:
        for n in simples:
            assert ext1_dim_lf(b2, m, n) == _ext1_from_presentation(m, n)


@pytest.mark.parametrize("seed", range(4))
def test_ext_of_sampled_modules_matches_presentation_b2(b2, seed):
    rng = np.random.default_rng(seed)
    m = sample_locally_free(b2, rng.integers(0, 3, size=2), 3, (seed, 0))
    n = sample_locally_free(b2, rng.integers(0, 3, size=2), 3, (seed, 1))
    assert ext1_dim_lf(b2, m, n) == _ext1_from_presentation(m, n)


@pytest.mark.parametrize("type_name", ["B2", "B3", "C3", "G2"])
def test_ext_is_never_negative_on_sampled_pairs(type_name):
    datum = get_builtin(type_name).datum()
    rng = np.random.default_rng(11)
    for trial in range(10):
        m = sample_locally_free(datum, rng.integers(0, 3, size=datum.n), 3, (trial, 0))
        n = sample_locally_free(datum, rng.integers(0, 3, size=datum.n), 3, (trial, 1))
        assert ext1_dim_lf(datum, m, n) >= 0
        assert ext1_dim_lf(datum, n, m) >= 0


@pytest.mark.parametrize("type_name", ["B2", "B3", "C3"])
def test_find_rigid_is_independent_of_seed(type_name):
    datum = get_builtin(type_name).datum()
    q = config.SEARCH_PRIME
    roots = positive_roots(datum)
    battery = [free_module(datum, root, q) for root in roots if sum(root) == 1]
    battery += [find_rigid(datum, root, q, 0) for root in roots]
    for root in roots:
        first, second = find_rigid(datum, root, q, 0), find_rigid(datum, root, q, 9)
        for x in battery:
            assert hom_dim(x, first) == hom_dim(x, second)
            assert hom_dim(first, x) == hom_dim(second, x)
