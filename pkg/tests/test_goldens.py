"""Published values for B2, G2 and B3, checked end to end."""

import itertools
import json
from pathlib import Path

import pytest

from algebra_h import RootSum, is_rigid
from builtin_types import builtin_lift
from cartan_core import exchange_matrix, positive_roots
from cc_formula import x_module, x_nonrigid
from cluster_engine import exchange_graph, z_variables
from grassmannian import euler_char_gr
from laurent import LaurentPoly, variables

GOLDENS = Path(__file__).resolve().parent.parent / "goldens"


def _x(text, n):
    return LaurentPoly.parse(text, variables(n))


def _root(token):
    return tuple(int(x) for x in token.split(","))


def test_b2_matrix_and_counts(b2, golden):
    data = golden("b2")
    assert [list(row) for row in exchange_matrix(b2)] == data["exchange_matrix"]
    graph = exchange_graph(b2)
    assert len(graph.variables) == data["cluster_variables"]
    assert len(graph.clusters) == data["clusters"]


def test_b2_characters(b2, golden):
    for entry in golden("b2")["modules"]:
        result = x_module(b2, tuple(entry["beta"]))
        assert result.x == _x(entry["x"], 2), entry["name"]
        assert list(result.g_vector) == entry["g"], entry["name"]
        expected_f = {tuple(r): c for r, c in entry["f"]}
        assert result.f_polynomial.coefficients == expected_f, entry["name"]


def test_b2_exchange_relations(b2, golden):
    gens = variables(2)

    def value(token):
        if token.startswith("u"):
            return LaurentPoly.generator(int(token[1:]), gens)
        return x_module(b2, _root(token)).x

    def product(tokens):
        out = LaurentPoly.constant(1, gens)
        for token in tokens:
            out = out * value(token)
        return out

    for relation in golden("b2")["exchange_relations"]:
        left = product(relation["left"])
        right = LaurentPoly.constant(0, gens)
        for term in relation["right"]:
            right = right + product(term)
        assert left == right, relation


def test_b2_rigid_families(b2, golden):
    for family in golden("b2")["rigid_families"]:
        module = RootSum.of(*family).build(b2, 5)
        assert is_rigid(b2, module), family


def test_g2_matrix_roots_and_counts(g2, golden):
    data = golden("g2")
    assert [list(row) for row in exchange_matrix(g2)] == data["exchange_matrix"]
    assert sorted(list(r) for r in positive_roots(g2)) == sorted(data["roots"])
    graph = exchange_graph(g2)
    assert len(graph.variables) == data["cluster_variables"]
    assert len(graph.clusters) == data["clusters"]


def _g2_modules():
    data = json.loads((GOLDENS / "g2.json").read_text(encoding="utf-8"))
    for entry in data["modules"]:
        marks = [pytest.mark.slow] if sum(entry["beta"]) > 3 else []
        yield pytest.param(entry, id=entry["name"], marks=marks)


@pytest.mark.parametrize("entry", list(_g2_modules()))
def test_g2_characters(g2, entry):
    assert x_module(g2, tuple(entry["beta"])).x == _x(entry["x"], 2)


@pytest.mark.slow
def test_g2_euler_table(g2, golden):
    table = golden("g2")["euler_table"]
    beta = tuple(table["beta"])
    expected = {tuple(r): chi for r, chi in table["values"]}
    for r in itertools.product(*(range(x + 1) for x in beta)):
        assert euler_char_gr(g2, beta, r) == expected.get(r, 0), r


@pytest.mark.slow
def test_g2_nonrigid_modules(g2, golden):
    cluster_values = {record.value for record in exchange_graph(g2).variables}
    for entry in golden("g2")["nonrigid"]:
        x = x_nonrigid(g2, builtin_lift(entry["module"])).x
        assert x == x_module(g2, tuple(entry["compare"])).x + entry["offset"]
        assert (x in cluster_values) == (entry["offset"] == 0)


def test_b3_euler_table(b3, golden):
    table = golden("b3")["euler_table"]
    beta = tuple(table["beta"])
    expected = {tuple(r): chi for r, chi in table["values"]}
    for r in itertools.product(*(range(x + 1) for x in beta)):
        assert euler_char_gr(b3, beta, r) == expected.get(r, 0), r


def test_b3_character_and_shared_monomial(b3, golden):
    data = golden("b3")
    assert [list(row) for row in exchange_matrix(b3)] == data["exchange_matrix"]
    result = x_module(b3, tuple(data["euler_table"]["beta"]))
    assert result.x == _x(data["x"], 3)

    z = z_variables(b3)
    gens = variables(3)

    def z_power(r):
        out = LaurentPoly.monomial(result.g_vector, gens)
        for value, k in zip(z, r):
            out = out * value ** k
        return out

    first, second = (z_power(r) for r in data["shared_monomial"]["ranks"])
    assert first == second
    exps = first.terms[0][0]
    assert result.x.coefficient(exps) == data["shared_monomial"]["total"]


def test_b3_cluster_counts(b3, golden):
    data = golden("b3")
    graph = exchange_graph(b3)
    assert len(graph.variables) == data["cluster_variables"]
    assert len(graph.clusters) == data["clusters"]
