"""Direction algebra and torus geometry for the von Neumann neighbourhood.

Directions are plain integers in ``[0, 2d]``: ``0`` is the zero vector,
``2k - 1`` is ``+v_k`` and ``2k`` is ``-v_k`` (axes numbered from 1).
An omega pair is a sorted 2-tuple of directions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

Direction = int
OmegaPair = tuple[int, int]
CellIndex = tuple[int, ...]

CENTER: Direction = 0
MIN_EXTENT = 5


def _check_dim(d: int) -> None:
    if not isinstance(d, int) or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")


def direction_set(d: int) -> list[Direction]:
    """All ``2d + 1`` directions in canonical index order."""
    _check_dim(d)
    return list(range(2 * d + 1))


def positive_directions(d: int) -> list[Direction]:
    """The ``2d`` non-zero directions."""
    _check_dim(d)
    return list(range(1, 2 * d + 1))


def axis_direction(axis: int, sign: int = 1) -> Direction:
    """Direction ``+v_axis`` (sign > 0) or ``-v_axis`` (sign < 0)."""
    if axis < 1:
        raise ValueError(f"axes are numbered from 1, got {axis}")
    return 2 * axis - 1 if sign > 0 else 2 * axis


def axis_of(v: Direction) -> int:
    """Axis number of a direction, 0 for the centre."""
    return (v + 1) // 2


def sign_of(v: Direction) -> int:
    if v == 0:
        return 0
    return 1 if v % 2 else -1


def negate(v: Direction) -> Direction:
    if v == 0:
        return 0
    return v + 1 if v % 2 else v - 1


def direction_label(v: Direction) -> str:
    """Serialise as ``"0"``, ``"+1"``, ``"-1"``, ``"+2"``, ..."""
    if v == 0:
        return "0"
    return f"{'+' if v % 2 else '-'}{axis_of(v)}"


def parse_direction(text: str, d: int | None = None) -> Direction:
    text = text.strip()
    if text == "0":
        v = 0
    else:
        if len(text) < 2 or text[0] not in "+-" or not text[1:].isdigit():
            raise ValueError(f"malformed direction {text!r}")
        v = axis_direction(int(text[1:]), 1 if text[0] == "+" else -1)
    if d is not None and v > 2 * d:
        raise ValueError(f"direction {text!r} does not exist in dimension {d}")
    return v


def direction_vector(v: Direction, d: int) -> tuple[int, ...]:
    vec = [0] * d
    if v:
        vec[axis_of(v) - 1] = sign_of(v)
    return tuple(vec)


# --------------------------------------------------------------------------
# Omega pairs and lambda selections
# --------------------------------------------------------------------------

def _pair(u: Direction, w: Direction) -> OmegaPair:
    return (u, w) if u < w else (w, u)


def is_omega_pair(pair: Sequence[int], d: int) -> bool:
    if len(pair) != 2:
        return False
    u, w = pair
    n = 2 * d
    if not (0 <= u <= n and 0 <= w <= n) or u == w:
        return False
    if u == 0 or w == 0:
        return True
    return axis_of(u) != axis_of(w)


def omega_pairs(d: int) -> list[OmegaPair]:
    """The ``2d^2`` pairs along which two neighbourhoods share two cells."""
    _check_dim(d)
    pairs = [p for p in itertools.combinations(range(2 * d + 1), 2) if is_omega_pair(p, d)]
    assert len(pairs) == 2 * d * d
    return pairs


def matching_pair(pair: Sequence[int]) -> OmegaPair:
    u, w = pair
    return _pair(negate(u), negate(w))


def canonical_lambda(d: int) -> tuple[OmegaPair, ...]:
    """One pair per matching class, the lexicographically smaller one."""
    return tuple(p for p in omega_pairs(d) if p < matching_pair(p))


def validate_lambda(pairs: Sequence[Sequence[int]], d: int) -> tuple[OmegaPair, ...]:
    """Normalise a lambda selection and check it picks one pair per class.

    Returns the pairs sorted, each as a sorted tuple.
    """
    norm = sorted({_pair(*p) for p in pairs})
    if len(norm) != len(pairs):
        raise ValueError("lambda selection contains duplicate pairs")
    for p in norm:
        if not is_omega_pair(p, d):
            raise ValueError(f"{p} is not an omega pair in dimension {d}")
    classes = {min(p, matching_pair(p)) for p in norm}
    if len(classes) != len(norm) or len(norm) != d * d:
        raise ValueError(
            f"lambda selection must hold exactly one pair from each of the {d * d} matching classes"
        )
    return tuple(norm)


def all_lambdas(d: int) -> Iterator[tuple[OmegaPair, ...]]:
    """Every one of the ``2^(d^2)`` lambda selections."""
    base = canonical_lambda(d)
    for flips in itertools.product((False, True), repeat=len(base)):
        yield tuple(sorted(matching_pair(p) if f else p for p, f in zip(base, flips)))


# --------------------------------------------------------------------------
# Torus geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LatticeShape:
    """Extents ``n_1..n_d`` of a periodic grid; every extent must exceed 4."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        dims = tuple(int(n) for n in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError("a lattice needs at least one axis")
        bad = [n for n in dims if n < MIN_EXTENT]
        if bad:
            raise ValueError(f"every extent must be at least {MIN_EXTENT}, got {dims}")

    @classmethod
    def cube(cls, d: int, n: int = MIN_EXTENT) -> "LatticeShape":
        return cls((n,) * d)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        out = 1
        for n in self.dims:
            out *= n
        return out

    def cells(self) -> Iterator[CellIndex]:
        """All cells in row-major order (last axis fastest)."""
        return itertools.product(*(range(n) for n in self.dims))

    def contains(self, i: Sequence[int]) -> bool:
        return len(i) == self.d and all(0 <= c < n for c, n in zip(i, self.dims))

    def flat(self, i: Sequence[int]) -> int:
        out = 0
        for c, n in zip(i, self.dims):
            out = out * n + c
        return out

    def unflat(self, k: int) -> CellIndex:
        out = []
        for n in reversed(self.dims):
            k, c = divmod(k, n)
            out.append(c)
        return tuple(reversed(out))


def _check_cell(i: Sequence[int], s: LatticeShape) -> None:
    if not s.contains(i):
        raise ValueError(f"cell {tuple(i)} outside shape {s.dims}")


def torus_step(i: Sequence[int], v: Direction, s: LatticeShape) -> CellIndex:
    """The cell adjacent to ``i`` in direction ``v`` (``i`` itself for the centre)."""
    _check_cell(i, s)
    if v == 0:
        return tuple(i)
    k = axis_of(v) - 1
    if k >= s.d:
        raise ValueError(f"direction {direction_label(v)} does not exist in dimension {s.d}")
    out = list(i)
    out[k] = (out[k] + sign_of(v)) % s.dims[k]
    return tuple(out)


def neighborhood_cells(i: Sequence[int], s: LatticeShape) -> list[CellIndex]:
    """``P(i)`` listed in direction order."""
    return [torus_step(i, v, s) for v in direction_set(s.d)]


def manhattan_distance(i: Sequence[int], j: Sequence[int], s: LatticeShape) -> int:
    _check_cell(i, s)
    _check_cell(j, s)
    total = 0
    for a, b, n in zip(i, j, s.dims):
        diff = abs(a - b)
        total += min(diff, n - diff)
    return total


@dataclass(frozen=True)
class Overlap:
    """How the neighbourhoods of two distinct cells intersect.

    ``case`` is one of ``"a"`` (adjacent), ``"b"`` (two steps along one
    direction), ``"c"`` (two steps along orthogonal directions) or ``"d"``
    (disjoint).  ``pair`` is the omega pair ``{u, w}`` with
    ``j = i + u + w`` whenever two cells are shared.
    """

    case: str
    shared: frozenset
    pair: OmegaPair | None = None


def _signed_offset(a: int, b: int, n: int) -> int:
    diff = (b - a) % n
    return diff - n if diff > n // 2 else diff


def neighborhood_overlap(i: Sequence[int], j: Sequence[int], s: LatticeShape) -> Overlap:
    _check_cell(i, s)
    _check_cell(j, s)
    i, j = tuple(i), tuple(j)
    if i == j:
        raise ValueError("overlap is only classified for distinct cells")
    if manhattan_distance(i, j, s) > 2:
        return Overlap("d", frozenset())
    steps: list[Direction] = []
    for k, (a, b, n) in enumerate(zip(i, j, s.dims)):
        off = _signed_offset(a, b, n)
        steps.extend([axis_direction(k + 1, off)] * abs(off))
    if len(steps) == 1:
        v = steps[0]
        return Overlap("a", frozenset({i, j}), (0, v))
    u, v = steps
    if u == v:
        return Overlap("b", frozenset({torus_step(i, v, s)}))
    return Overlap("c", frozenset({torus_step(i, u, s), torus_step(i, v, s)}), _pair(u, v))
