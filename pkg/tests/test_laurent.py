import pytest

from errors import InexactDivision, InvariantViolation
from laurent import LaurentPoly, variables

GENS = variables(2)


def lp(text, gens=GENS):
    return LaurentPoly.parse(text, gens)


def test_variables():
    assert [str(g) for g in variables(3, "y")] == ["y1", "y2", "y3"]


@pytest.mark.parametrize(
    "text, shown",
    [
        ("(u2^2+1)/u1", "(1+u2^2)/u1"),
        ("(u2^2+1+u1)/(u1*u2)", "(1+u1+u2^2)/(u1*u2)"),
        ("u1-u2", "u1-u2"),
        ("3", "3"),
        ("0", "0"),
        ("1/u2", "1/u2"),
        ("2*u1^2/u2", "2*u1^2/u2"),
    ],
)
def test_display(text, shown):
    value = lp(text)
    assert str(value) == shown
    assert lp(str(value)) == value


def test_parse_rejects_non_monomial_denominator():
    with pytest.raises(ValueError):
        lp("1/(1+u1)")


def test_arithmetic():
    u1, u2 = LaurentPoly.generator(1, GENS), LaurentPoly.generator(2, GENS)
    assert (u1 + 1) * (u1 - 1) == lp("u1^2-1")
    assert 1 - u1 == lp("1-u1")
    assert 2 * u2 == lp("2*u2")
    assert (u1 * u2 ** -1) ** 2 == lp("u1^2/u2^2")
    assert (u1 - u1).is_zero()


def test_exact_division():
    assert lp("u1^2-1").exact_div(lp("u1+1")) == lp("u1-1")
    assert lp("(1+u2)^2/u1").exact_div(lp("(1+u2)/u1")) == lp("1+u2")
    with pytest.raises(InexactDivision):
        lp("u1^2+1").exact_div(lp("u1+1"))
    with pytest.raises(InexactDivision):
        lp("u1").exact_div(lp("0"))


def test_inverse_needs_unit_monomial():
    assert lp("u1") ** -1 == lp("1/u1")
    with pytest.raises(InexactDivision):
        lp("2*u1") ** -1
    with pytest.raises(InexactDivision):
        lp("1+u1") ** -1


def test_inspection():
    value = lp("(u2^2+1+2*u1+u1^2)/(u1*u2^2)")
    assert value.denominator_vector() == (1, 2)
    assert value.coefficient((0, -2)) == 2
    assert value.is_positive()
    assert not lp("u1-u2").is_positive()
    assert lp("u1*u2").is_monomial()
    assert value.to_pairs()[0] == [[-1, -2], 1]


def test_restrict_and_rescale():
    extended = variables(2) + variables(2, "y")
    value = LaurentPoly.monomial((1, -1, 1, 2), extended, 3)
    assert value.restrict(2) == lp("3*u1/u2")
    assert lp("u1^2/u2^4").rescaled(2) == lp("u1/u2^2")
    with pytest.raises(InvariantViolation):
        lp("u1").rescaled(2)


def test_evaluate_substitutes_generators():
    swapped = lp("u1+2*u2").evaluate([lp("u2"), lp("u1")])
    assert swapped == lp("u2+2*u1")
    assert lp("u1/u2").evaluate([lp("1+u2"), lp("u2")]) == lp("(1+u2)/u2")


def test_generators_must_match():
    with pytest.raises(InvariantViolation):
        lp("u1") + LaurentPoly.generator(1, variables(3))
