import pytest

from builtin_types import BUILTIN_TYPES
from cartan_core import (
    admissible_sequence,
    bilinear_form,
    coxeter_data,
    exchange_matrix,
    hom_vanishing_order,
    injective_rank_vectors,
    is_root,
    positive_roots,
    reflect,
    reflect_orientation,
    root_partial_sum_order,
    simple_root,
    validate_datum,
)
from cluster_engine import mutate_matrix
from errors import BadOrientation, NotCartan, NotConnected, NotSymmetrizer


ALL_TYPES = [t.name for t in BUILTIN_TYPES]


def _datum(name):
    return next(t for t in BUILTIN_TYPES if t.name == name).datum()


def test_validate_accepts_b2_and_a1():
    b2 = validate_datum([[2, -1], [-2, 2]], [2, 1], [(1, 2)])
    assert b2.n == 2
    assert b2.d(1) == 2 and b2.c(2, 1) == -2
    a1 = validate_datum([[2]], [1], [])
    assert a1.n == 1


def test_affine_a1_is_rejected():
    with pytest.raises(NotSymmetrizer):
        validate_datum([[2, -2], [-2, 2]], [1, 1], [(1, 2)])


@pytest.mark.parametrize(
    "cartan, sym, orientation, error",
    [
        ([[3, -1], [-1, 2]], [1, 1], [(1, 2)], NotCartan),
        ([[2, 1], [1, 2]], [1, 1], [(1, 2)], NotCartan),
        ([[2, -1], [-2, 2]], [1, 1], [(1, 2)], NotSymmetrizer),
        ([[2, 0], [0, 2]], [1, 1], [], NotConnected),
        ([[2, -1], [-1, 2]], [1, 1], [], BadOrientation),
        ([[2, -1], [-1, 2]], [1, 1], [(1, 2), (2, 1)], BadOrientation),
    ],
)
def test_validation_errors(cartan, sym, orientation, error):
    with pytest.raises(error):
        validate_datum(cartan, sym, orientation)


def test_exchange_matrices(b2, g2, b3):
    assert exchange_matrix(b2) == ((0, 1), (-2, 0))
    assert exchange_matrix(g2) == ((0, 3), (-1, 0))
    assert exchange_matrix(b3) == ((0, 1, 0), (-1, 0, 1), (0, -2, 0))


@pytest.mark.parametrize("name", ALL_TYPES)
def test_exchange_matrix_is_skew_symmetrizable(name):
    datum = _datum(name)
    b = exchange_matrix(datum)
    for i in range(datum.n):
        for j in range(datum.n):
            assert datum.symmetrizer[i] * b[i][j] == -datum.symmetrizer[j] * b[j][i]


def test_bilinear_form_b2(b2):
    a1, a2 = simple_root(b2, 1), simple_root(b2, 2)
    assert bilinear_form(b2, a1, a1) == 2
    assert bilinear_form(b2, a2, a1) == -2
    assert bilinear_form(b2, a1, a2) == 0
    assert bilinear_form(b2, (0, 0), (1, 2)) == 0


@pytest.mark.parametrize("name, count", [("A1", 1), ("A2", 3), ("A3", 6), ("B2", 4), ("B3", 9), ("C3", 9), ("G2", 6)])
def test_root_counts(name, count):
    assert len(positive_roots(_datum(name))) == count


def test_root_lists(b2, g2):
    assert set(positive_roots(b2)) == {(1, 0), (0, 1), (1, 1), (1, 2)}
    assert (3, 2) in positive_roots(g2)
    assert is_root(g2, (3, 1)) and not is_root(g2, (2, 2))


def test_reflection_convention(b2):
    assert reflect(b2, 2, (1, 0)) == (1, 2)
    assert reflect(b2, 1, (0, 1)) == (1, 1)


@pytest.mark.parametrize("name", ALL_TYPES)
def test_roots_do_not_depend_on_symmetrizer(name):
    datum = _datum(name)
    assert positive_roots(datum.scaled(2)) == positive_roots(datum)


@pytest.mark.parametrize("name", ALL_TYPES)
def test_root_count_matches_coxeter_number(name):
    datum = _datum(name)
    assert 2 * len(positive_roots(datum)) == datum.n * coxeter_data(datum).h


def test_coxeter_data_b2_and_a1(b2, a1):
    cox = coxeter_data(b2)
    assert cox.iplus == (1, 2)
    assert cox.h == 4
    assert cox.jminus == (2, 1, 2, 1)
    small = coxeter_data(a1)
    assert small.iplus == (1,) and small.h == 2 and small.root_order == ((1,),)


def test_admissible_sequence_is_sink_first(a3):
    assert admissible_sequence(a3) == (1, 2, 3)


def test_hom_vanishing_order(b2, a2, a1):
    assert hom_vanishing_order(b2) == ((0, 1), (1, 2), (1, 1), (1, 0))
    assert hom_vanishing_order(a2) == ((0, 1), (1, 1), (1, 0))
    assert hom_vanishing_order(a1) == ((1,),)


@pytest.mark.parametrize("name", ALL_TYPES)
def test_form_signs_along_hom_order(name):
    datum = _datum(name)
    order = hom_vanishing_order(datum)
    for k, beta in enumerate(order):
        for l, gamma in enumerate(order):
            value = bilinear_form(datum, beta, gamma)
            if k < l:
                assert value <= 0
            else:
                assert value >= 0


@pytest.mark.parametrize("name", ALL_TYPES)
def test_mutation_at_sinks_and_sources_reflects_orientation(name):
    datum = _datum(name)
    for v in datum.vertices:
        if not (datum.is_sink(v) or datum.is_source(v)):
            continue
        reflected = validate_datum(datum.cartan, datum.symmetrizer, reflect_orientation(datum.orientation, v))
        assert mutate_matrix(exchange_matrix(datum), v) == exchange_matrix(reflected)


def test_injective_rank_vectors_b2(b2):
    assert injective_rank_vectors(b2) == {1: (1, 2), 2: (0, 1)}


def test_root_partial_sum_order(b2):
    parts = [(0, 1), (0, 1), (1, 0)]
    order = root_partial_sum_order(b2, parts)
    assert order is not None
    total = (0, 0)
    for k in order:
        total = tuple(a + b for a, b in zip(total, parts[k]))
        assert is_root(b2, total)
    assert root_partial_sum_order(b2, [(1, 0), (1, 0)]) is None
