"""Builtin Cartan data and integer-lift modules.

Each builtin type carries a Cartan matrix, its minimal symmetrizer and a
fixed orientation. A pair (i, j) in the orientation is an arrow j -> i.
"""

from dataclasses import dataclass

from algebra_h import ModuleLift
from cartan_core import CartanDatum, RankVector, validate_datum


@dataclass(frozen=True)
class BuiltinType:
    """A named Cartan datum."""

    name: str
    description: str
    cartan: tuple[tuple[int, ...], ...]
    symmetrizer: tuple[int, ...]
    orientation: tuple[tuple[int, int], ...]

    def datum(self) -> CartanDatum:
        return validate_datum(self.cartan, self.symmetrizer, self.orientation)


BUILTIN_TYPES: list[BuiltinType] = [
    BuiltinType(
        name="A1",
        description="Single vertex",
        cartan=((2,),),
        symmetrizer=(1,),
        orientation=(),
    ),
    BuiltinType(
        name="A2",
        description="Two vertices, arrow 2 -> 1",
        cartan=((2, -1), (-1, 2)),
        symmetrizer=(1, 1),
        orientation=((1, 2),),
    ),
    BuiltinType(
        name="A3",
        description="Linear orientation 3 -> 2 -> 1",
        cartan=((2, -1, 0), (-1, 2, -1), (0, -1, 2)),
        symmetrizer=(1, 1, 1),
        orientation=((1, 2), (2, 3)),
    ),
    BuiltinType(
        name="B2",
        description="eps_1^2 = 0, arrow 2 -> 1",
        cartan=((2, -1), (-2, 2)),
        symmetrizer=(2, 1),
        orientation=((1, 2),),
    ),
    BuiltinType(
        name="B3",
        description="Symmetrizer (2, 2, 1), orientation 3 -> 2 -> 1",
        cartan=((2, -1, 0), (-1, 2, -1), (0, -2, 2)),
        symmetrizer=(2, 2, 1),
        orientation=((1, 2), (2, 3)),
    ),
    BuiltinType(
        name="C3",
        description="Symmetrizer (1, 1, 2), orientation 3 -> 2 -> 1",
        cartan=((2, -1, 0), (-1, 2, -2), (0, -1, 2)),
        symmetrizer=(1, 1, 2),
        orientation=((1, 2), (2, 3)),
    ),
    BuiltinType(
        name="G2",
        description="eps_2^3 = 0, arrow 2 -> 1",
        cartan=((2, -3), (-1, 2)),
        symmetrizer=(1, 3),
        orientation=((1, 2),),
    ),
]

_BY_NAME: dict[str, BuiltinType] = {t.name: t for t in BUILTIN_TYPES}


def get_builtin(name: str) -> BuiltinType:
    """Look up a builtin type by name (case-insensitive).

    Raises:
        KeyError: If no type with that name exists.
    """
    try:
        return _BY_NAME[name.upper()]
    except KeyError:
        available = ", ".join(_BY_NAME)
        raise KeyError(f"Unknown type '{name}'. Available: {available}") from None


def list_builtin_names() -> list[str]:
    return [t.name for t in BUILTIN_TYPES]


def builtin_name_of(datum: CartanDatum) -> str | None:
    """Name of the builtin type equal to ``datum``, if any."""
    for t in BUILTIN_TYPES:
        if t.datum() == datum:
            return t.name
    return None


# ---------------------------------------------------------------------------
# Non-rigid modules given by integer matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BuiltinLift:
    """A non-rigid module and the character it must have:
    X_lift = X_{M(compare_root)} + offset.
    """

    type_name: str
    description: str
    lift: ModuleLift
    compare_root: RankVector
    offset: int


# Basis at a vertex of rank r and nilpotency c: x_1, eps x_1, ..., eps^(c-1) x_1, x_2, ...
BUILTIN_LIFTS: list[BuiltinLift] = [
    BuiltinLift(
        type_name="B2",
        description="Rank (1,1) with E_2 mapped onto the socle of E_1",
        lift=ModuleLift(name="B2-socle", rank=(1, 1), arrows=(((1, 2), ((0,), (1,))),)),
        compare_root=(1, 1),
        offset=0,
    ),
    BuiltinLift(
        type_name="G2",
        description="Rank (3,2), arrow kernel spanned by x, eps y, eps^2 (x + y)",
        lift=ModuleLift(
            name="G2-M1",
            rank=(3, 2),
            arrows=(((1, 2), (
                (0, 0, 0, 1, 0, 0),
                (0, 1, 0, 0, 0, 0),
                (0, 0, 1, 0, 0, -1),
            )),),
        ),
        compare_root=(3, 2),
        offset=0,
    ),
    BuiltinLift(
        type_name="G2",
        description="Rank (3,2), arrow kernel spanned by y, eps y - eps^2 x, eps^2 y",
        lift=ModuleLift(
            name="G2-M2",
            rank=(3, 2),
            arrows=(((1, 2), (
                (1, 0, 0, 0, 0, 0),
                (0, 1, 0, 0, 0, 0),
                (0, 0, 1, 0, 1, 0),
            )),),
        ),
        compare_root=(3, 2),
        offset=2,
    ),
]

_LIFTS_BY_NAME: dict[str, BuiltinLift] = {entry.lift.name: entry for entry in BUILTIN_LIFTS}


def builtin_lift(name: str) -> ModuleLift:
    """Look up an integer-lift module by name.

    Raises:
        KeyError: If no lift with that name exists.
    """
    try:
        return _LIFTS_BY_NAME[name].lift
    except KeyError:
        available = ", ".join(_LIFTS_BY_NAME)
        raise KeyError(f"Unknown module '{name}'. Available: {available}") from None


def lifts_for_type(type_name: str | None) -> list[BuiltinLift]:
    return [entry for entry in BUILTIN_LIFTS if entry.type_name == type_name]
