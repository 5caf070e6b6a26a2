import itertools

import pytest

import config
import grassmannian
from algebra_h import RootSum, find_rigid, free_module, is_rigid, sample_locally_free
from builtin_types import get_builtin
from errors import InterpolationMismatch, NotEnoughPrimes, NotPrime, RankOutOfRange
from grassmannian import (
    check_prop41,
    count_filtrations,
    count_lf_flags,
    count_lf_submodules,
    count_poly_filtrations,
    count_poly_gr,
    degree_bound,
    euler_char_gr,
    f_polynomial,
    filtration_exists,
    fit_count_poly,
    form_families,
    free_submodule_count,
    free_submodule_forms,
    gaussian_binomial,
    iter_filtrations,
    iter_lf_submodules,
    prop41_bound,
    quotient_rep,
    submodule_rep,
    wrong_order_counts,
)


def test_gaussian_binomial():
    assert gaussian_binomial(4, 2, 2) == 35
    assert gaussian_binomial(3, 1, 5) == 31
    assert gaussian_binomial(2, 3, 2) == 0


@pytest.mark.parametrize("c, m, r, q", [(2, 2, 1, 2), (1, 3, 2, 3), (3, 2, 1, 2), (2, 3, 2, 2)])
def test_normal_forms_match_closed_count(c, m, r, q):
    forms = free_submodule_forms(c, m, r, q)
    assert len(forms) == free_submodule_count(c, m, r, q)
    spans = {form.span.tobytes() for form in forms}
    assert len(spans) == len(forms)


def test_count_in_injective_b2(b2):
    module = find_rigid(b2, (1, 2), 2)
    assert count_lf_submodules(module, (1, 1)) == 3


@pytest.mark.parametrize(
    "type_name, beta, r, q",
    [("B2", (1, 2), (1, 1), 3), ("B2", (1, 1), (0, 1), 3), ("B3", (1, 2, 2), (0, 1, 1), 3), ("G2", (2, 1), (1, 1), 3)],
)
def test_closed_form_count_agrees_with_enumeration(type_name, beta, r, q):
    datum = get_builtin(type_name).datum()
    module = find_rigid(datum, beta, q)
    assert count_lf_submodules(module, r) == sum(1 for _ in iter_lf_submodules(module, r))


def test_submodule_and_quotient_ranks(b2):
    module = find_rigid(b2, (1, 2), 3)
    for sub in iter_lf_submodules(module, (1, 1)):
        assert submodule_rep(module, sub).rank == (1, 1)
        assert quotient_rep(module, sub).rank == (0, 1)


def test_rank_out_of_range(b2):
    module = free_module(b2, (1, 0), 5)
    with pytest.raises(RankOutOfRange):
        count_lf_submodules(module, (2, 0))
    with pytest.raises(RankOutOfRange):
        count_poly_gr(b2, (1, 1), (0, 2))


def test_count_poly_of_free_module(b2):
    poly = count_poly_gr(b2, RootSum.of((1, 0), (1, 0)), (1, 0))
    assert poly.coefficients == (0, 1, 1)
    assert poly(7) == 56
    assert poly.euler_characteristic == 2
    assert str(poly) == "q**2 + q"


def test_parallel_counting_matches_sequential(b2, monkeypatch):
    spec = RootSum.of((1, 0), (1, 0))
    sequential = count_poly_gr(b2, spec, (1, 0))
    monkeypatch.setattr(config, "WORKERS", 3)
    assert count_poly_gr(b2, spec, (1, 0)) == sequential


def test_degree_bound(b2):
    assert degree_bound(b2, (1, 2), (1, 1)) == 1
    assert degree_bound(b2, (2, 1), (1, 0)) == 2


def test_prime_list_validation(b2):
    with pytest.raises(NotEnoughPrimes):
        count_poly_gr(b2, (1, 2), (1, 1), prime_list=[2, 3])
    with pytest.raises(NotPrime):
        count_poly_gr(b2, (1, 2), (1, 1), prime_list=[2, 4, 5])


def test_fit_rejects_inconsistent_samples():
    with pytest.raises(InterpolationMismatch) as info:
        fit_count_poly([(2, 1), (3, 2), (5, 10)], 1, {"case": "synthetic"})
    assert info.value.samples == [(2, 1), (3, 2), (5, 10)]
    assert info.value.context == {"case": "synthetic"}
    with pytest.raises(InterpolationMismatch):
        fit_count_poly([(2, 0), (3, 1), (5, 3)], 1, {})


def test_fit_accepts_polynomial_samples():
    poly = fit_count_poly([(2, 7), (3, 13), (5, 31), (7, 57)], 2, {})
    assert poly.coefficients == (1, 1, 1)


def test_euler_characteristics_b2(b2):
    assert euler_char_gr(b2, (1, 2), (1, 1)) == 2
    assert euler_char_gr(b2, (1, 2), (0, 1)) == 0
    assert euler_char_gr(b2, (1, 1), (1, 0)) == 1
    assert euler_char_gr(b2, (1, 0), (1, 0)) == 1


def test_f_polynomials_b2(b2):
    assert f_polynomial(b2, (1, 0)).coefficients == {(0, 0): 1, (1, 0): 1}
    assert f_polynomial(b2, (0, 1)).coefficients == {(0, 0): 1, (0, 1): 1}
    assert f_polynomial(b2, (1, 2)).coefficients == {
        (0, 0): 1, (1, 0): 1, (1, 1): 2, (1, 2): 1,
    }
    assert str(f_polynomial(b2, (1, 0))) == "t1 + 1"


def test_filtration_counts(b2):
    e2_twice = RootSum.of((0, 1), (0, 1)).build(b2, 2)
    assert count_filtrations(e2_twice, [(0, 1), (0, 1)]) == 3
    e1_twice = RootSum.of((1, 0), (1, 0)).build(b2, 2)
    assert count_filtrations(e1_twice, [(1, 0), (1, 0)]) == 6
    assert count_filtrations(e1_twice, [(0, 0), (2, 0)]) == 1


def test_filtration_count_polynomials(b2):
    flags = count_poly_filtrations(b2, RootSum.of((0, 1), (0, 1)), [(0, 1), (0, 1)])
    assert flags.coefficients == (1, 1)
    assert flags.euler_characteristic == 2
    chains = count_poly_filtrations(b2, RootSum.of((1, 0), (1, 0)), [(1, 0), (1, 0)])
    assert chains.coefficients == (0, 1, 1)


def test_filtrations_by_modules(b2):
    module = find_rigid(b2, (1, 1), 5)
    e1, e2 = free_module(b2, (1, 0), 5), free_module(b2, (0, 1), 5)
    chains = list(iter_filtrations(module, [e1, e2], battery=[]))
    assert len(chains) == 1
    assert all(is_rigid(b2, piece) for piece in chains[0])
    assert not list(iter_filtrations(module, [e2, e1], battery=[]))


def test_filtration_exists(b2):
    order = filtration_exists(b2, (1, 1), [(1, 0), (0, 1)])
    assert order is not None
    assert [(1, 0), (0, 1)][order[0]] == (1, 0)
    assert filtration_exists(b2, (1, 2), [(0, 1), (1, 1)]) is not None


def test_wrong_order_counts_b2(b2):
    cases = {case.multiplicities: case for case in wrong_order_counts(b2, (1, 2))}
    assert set(cases) == {(1, 0, 1, 0), (2, 0, 0, 1)}
    for case in cases.values():
        assert case.hom_ordered_exists
        assert case.wrong_order_count == 0


@pytest.mark.parametrize("beta, r", [((1, 1), (0, 1)), ((1, 1), (1, 0)), ((1, 2), (1, 1)), ((1, 2), (0, 1))])
def test_flag_euler_characteristic_b2(b2, beta, r):
    assert prop41_bound(b2, beta, r) <= 4
    assert check_prop41(b2, beta, r)


def _datum(type_name, scale=1):
    datum = get_builtin(type_name).datum()
    return datum.scaled(scale) if scale > 1 else datum


@pytest.mark.parametrize("c, m, r, q", [(2, 3, 1, 2), (3, 2, 1, 3), (2, 3, 2, 3), (1, 3, 1, 5)])
@pytest.mark.parametrize("split", [False, True])
def test_form_families_cover_every_normal_form(c, m, r, q, split):
    total = 0
    for pivots in itertools.combinations(range(m), r):
        families = form_families(c, m, pivots, q, split)
        assert all(f.span.shape == (m * c, r * c) for f in families)
        total += sum(q ** family.size for family in families)
    assert total == free_submodule_count(c, m, r, q)


# (type, symmetrizer scale, module rank, submodule rank, field, sampling seed)
SAMPLED = [
    ("B2", 1, (2, 2), (1, 1), 3, 1),
    ("B3", 1, (2, 2, 1), (1, 1, 0), 2, 2),
    ("B3", 1, (1, 2, 2), (1, 1, 1), 3, 3),
    ("C3", 1, (1, 2, 1), (1, 1, 0), 3, 4),
    ("G2", 1, (3, 2), (1, 1), 3, 5),
    ("G2", 2, (2, 1), (1, 1), 3, 6),
    ("G2", 2, (3, 2), (2, 1), 2, 7),
]


@pytest.mark.parametrize("type_name, scale, rank, r, q, seed", SAMPLED)
def test_vectorized_count_agrees_with_enumeration(type_name, scale, rank, r, q, seed):
    module = sample_locally_free(_datum(type_name, scale), rank, q, seed)
    assert count_lf_submodules(module, r) == sum(1 for _ in iter_lf_submodules(module, r))


@pytest.mark.parametrize("type_name, scale, rank, r, q, seed", [SAMPLED[1], SAMPLED[5], SAMPLED[6]])
def test_split_families_and_small_batches_agree(type_name, scale, rank, r, q, seed, monkeypatch):
    module = sample_locally_free(_datum(type_name, scale), rank, q, seed)
    whole = count_lf_submodules(module, r)
    monkeypatch.setattr(grassmannian, "_SPLIT_COST", 0)
    monkeypatch.setattr(config, "BATCH_SIZE", 5)
    assert count_lf_submodules(module, r) == whole


@pytest.mark.parametrize(
    "type_name, rank, steps, q, seed",
    [
        ("B2", (2, 2), [(1, 1), (0, 1), (1, 0)], 2, 1),
        ("B2", (2, 1), [(1, 0), (1, 1)], 3, 2),
        ("G2", (2, 1), [(1, 0), (0, 1), (1, 0)], 3, 3),
        ("B3", (1, 2, 1), [(0, 1, 0), (1, 0, 1), (0, 1, 0)], 2, 4),
    ],
)
def test_flag_counts_agree_with_chain_enumeration(type_name, rank, steps, q, seed):
    module = sample_locally_free(_datum(type_name), rank, q, seed)
    assert count_filtrations(module, steps) == sum(1 for _ in iter_filtrations(module, steps))


def test_flag_levels_must_increase(b2):
    module = free_module(b2, (2, 1), 3)
    with pytest.raises(RankOutOfRange):
        count_lf_flags(module, [(1, 1), (1, 0)])
    with pytest.raises(RankOutOfRange):
        count_filtrations(module, [(1, 0), (0, 1)])
    assert count_lf_flags(module, []) == 1
    assert count_lf_flags(module, [(1, 0)]) == count_lf_submodules(module, (1, 0))
