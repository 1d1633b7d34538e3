"""State sets, neighbourhood configurations and local rules.

A neighbourhood configuration is a tuple of ``2d + 1`` states indexed by
direction.  Configurations are numbered in mixed radix with the centre as
the least significant digit; the digit is the position of the state in the
sorted state set.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .lattice import (
    Direction,
    OmegaPair,
    canonical_lambda,
    direction_set,
    is_omega_pair,
    negate,
    validate_lambda,
)

Config = tuple[int, ...]

MAX_DIM = 8
MAX_ABS_STATE = 2**40
MAX_TABLE = 2**31


class RuleError(ValueError):
    """Malformed rule, state set or configuration."""


class NotClosedError(RuleError):
    """A parametric rule produced a value outside its state set."""

    def __init__(self, config: Config, value: int):
        super().__init__(f"value {value} at configuration {config} is not a state")
        self.config = config
        self.value = value


@dataclass(frozen=True)
class StateSet:
    """A finite set of integer states that contains 0."""

    states: tuple[int, ...]

    def __post_init__(self) -> None:
        raw = [int(q) for q in self.states]
        if len(set(raw)) != len(raw):
            raise RuleError(f"duplicate states in {raw}")
        states = tuple(sorted(raw))
        if 0 not in states:
            raise RuleError("the state set must contain 0")
        if len(states) < 2:
            raise RuleError("the state set needs a non-zero state")
        if any(abs(q) > MAX_ABS_STATE for q in states):
            raise RuleError("states are limited to |q| <= 2^40")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "_pos", {q: k for k, q in enumerate(states)})

    @classmethod
    def parse(cls, text: str) -> "StateSet":
        try:
            return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))
        except ValueError as exc:
            raise RuleError(f"cannot parse state set {text!r}: {exc}") from None

    @classmethod
    def range(cls, n: int) -> "StateSet":
        return cls(tuple(range(n)))

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, q) -> bool:
        return q in self._pos

    @property
    def nonzero(self) -> tuple[int, ...]:
        return tuple(q for q in self.states if q != 0)

    def position(self, q: int) -> int:
        try:
            return self._pos[q]
        except KeyError:
            raise RuleError(f"{q} is not in the state set {self.states}") from None

    @property
    def zero_position(self) -> int:
        return self._pos[0]

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=np.int64)


def _check_dim(d: int) -> None:
    if not isinstance(d, int) or not 1 <= d <= MAX_DIM:
        raise RuleError(f"dimension must be an integer in [1, {MAX_DIM}], got {d!r}")


def table_size(d: int, Q: StateSet) -> int:
    return len(Q) ** (2 * d + 1)


def check_table_size(d: int, Q: StateSet) -> int:
    n = table_size(d, Q)
    if n > MAX_TABLE:
        raise RuleError(f"|Q|^(2d+1) = {n} exceeds the dense table bound 2^31")
    return n


# --------------------------------------------------------------------------
# Neighbourhood configurations
# --------------------------------------------------------------------------

def check_config(N: Sequence[int], Q: StateSet, d: int) -> Config:
    N = tuple(int(x) for x in N)
    if len(N) != 2 * d + 1:
        raise RuleError(f"a configuration in dimension {d} has {2 * d + 1} entries, got {len(N)}")
    for x in N:
        if x not in Q:
            raise RuleError(f"{x} is not in the state set {Q.states}")
    return N


def config_index(N: Sequence[int], Q: StateSet) -> int:
    idx = 0
    base = len(Q)
    for x in reversed(N):
        idx = idx * base + Q.position(x)
    return idx


def index_config(idx: int, Q: StateSet, d: int) -> Config:
    base = len(Q)
    if not 0 <= idx < base ** (2 * d + 1):
        raise RuleError(f"configuration index {idx} out of range")
    out = []
    for _ in range(2 * d + 1):
        idx, r = divmod(idx, base)
        out.append(Q.states[r])
    return tuple(out)


def homogeneous(q: int, d: int) -> Config:
    return (q,) * (2 * d + 1)


def monomer(v: Direction, q: int, d: int) -> Config:
    if not 0 <= v <= 2 * d:
        raise RuleError(f"direction {v} does not exist in dimension {d}")
    out = [0] * (2 * d + 1)
    out[v] = q
    return tuple(out)


def dimer(pair: Sequence[int], a: int, b: int, d: int) -> Config:
    """Zero except ``a`` at the lower-indexed direction of ``pair`` and ``b`` at the other."""
    if not is_omega_pair(pair, d):
        raise RuleError(f"{tuple(pair)} is not an omega pair in dimension {d}")
    u, w = sorted(pair)
    out = [0] * (2 * d + 1)
    out[u] = a
    out[w] = b
    return tuple(out)


@functools.lru_cache(maxsize=32)
def _config_arrays(d: int, Q: StateSet) -> tuple[np.ndarray, np.ndarray]:
    n = check_table_size(d, Q)
    base = len(Q)
    idx = np.arange(n, dtype=np.int64)
    pos = np.empty((n, 2 * d + 1), dtype=np.int64)
    for v in range(2 * d + 1):
        idx, pos[:, v] = np.divmod(idx, base)
    vals = Q.as_array()[pos]
    pos.setflags(write=False)
    vals.setflags(write=False)
    return pos, vals


def all_configs(d: int, Q: StateSet) -> np.ndarray:
    """Every configuration as a row of states, in index order (read-only)."""
    return _config_arrays(d, Q)[1]


def all_positions(d: int, Q: StateSet) -> np.ndarray:
    """Like :func:`all_configs` but holding state positions instead of states."""
    return _config_arrays(d, Q)[0]


def config_indices(configs: np.ndarray, Q: StateSet) -> np.ndarray:
    """Vectorised :func:`config_index` over the rows of ``configs``."""
    lookup = {q: k for k, q in enumerate(Q.states)}
    pos = np.vectorize(lookup.__getitem__, otypes=[np.int64])(configs)
    weights = len(Q) ** np.arange(configs.shape[-1], dtype=np.int64)
    return pos @ weights


# Rotation by 90 degrees in the plane: +v1 -> +v2 -> -v1 -> -v2 -> +v1.
_ROT = (0, 3, 4, 2, 1)


def rotate90(N: Sequence[int]) -> Config:
    if len(N) != 5:
        raise RuleError("rotation is only defined in dimension 2")
    out = [0] * 5
    for v in range(5):
        out[_ROT[v]] = N[v]
    return tuple(out)


# --------------------------------------------------------------------------
# Rules
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DenseRule:
    """A local rule given by its full table in configuration-index order."""

    d: int
    states: StateSet
    table: np.ndarray

    def __post_init__(self) -> None:
        _check_dim(self.d)
        n = check_table_size(self.d, self.states)
        table = np.array(self.table, dtype=np.int64).reshape(-1)
        if table.shape != (n,):
            raise RuleError(f"table must have {n} entries, got {table.size}")
        if not np.isin(table, self.states.as_array()).all():
            bad = int(table[~np.isin(table, self.states.as_array())][0])
            raise RuleError(f"table entry {bad} is not a state")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    @classmethod
    def from_function(cls, d: int, Q: StateSet, fn: Callable[[Config], int]) -> "DenseRule":
        configs = all_configs(d, Q)
        return cls(d, Q, np.array([fn(tuple(int(x) for x in row)) for row in configs]))

    def __call__(self, N: Sequence[int]) -> int:
        return int(self.table[config_index(N, self.states)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, DenseRule):
            return NotImplemented
        return (
            self.d == other.d
            and self.states == other.states
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self) -> int:
        return hash((self.d, self.states, self.table.tobytes()))

    def key(self) -> tuple[int, ...]:
        """Sort key: the table read as a tuple."""
        return tuple(self.table.tolist())

    def lookup(self, N: Sequence[int]) -> int:
        return self(N)


MonomerKey = tuple[int, int]  # (direction, state)
DimerKey = tuple[int, int, int, int]  # (u, p, w, q) with u < w


@dataclass(frozen=True, eq=False)
class ParametricRule:
    """A rule given by its non-trivial monomer and lambda-dimer values.

    ``monomers[(v, q)]`` is ``f(M_{v:q})`` for every direction ``v`` and
    non-zero ``q``; ``dimers[(u, p, w, q)]`` is ``f(D_{u:p, w:q})`` for every
    pair ``(u, w)`` of ``lam`` and non-zero ``p, q``.  ``f(H_0) = 0`` is
    implied.  ``eta`` is the leading direction used when the rule is
    evaluated on other configurations.
    """

    d: int
    states: StateSet
    monomers: Mapping[MonomerKey, int]
    dimers: Mapping[DimerKey, int]
    eta: Direction = 0
    lam: tuple[OmegaPair, ...] = field(default=())

    def __post_init__(self) -> None:
        _check_dim(self.d)
        d, Q = self.d, self.states
        lam = validate_lambda(self.lam or canonical_lambda(d), d)
        object.__setattr__(self, "lam", lam)
        if not 0 <= self.eta <= 2 * d:
            raise RuleError(f"leading direction {self.eta} does not exist in dimension {d}")
        want_m = {(v, q) for v in direction_set(d) for q in Q.nonzero}
        want_d = {(u, p, w, q) for u, w in lam for p in Q.nonzero for q in Q.nonzero}
        mono = {tuple(k): int(x) for k, x in self.monomers.items()}
        dims = {tuple(k): int(x) for k, x in self.dimers.items()}
        if set(mono) != want_m:
            raise RuleError("monomer values must be given for every direction and non-zero state")
        if set(dims) != want_d:
            raise RuleError("dimer values must be given for every lambda pair and non-zero states")
        for x in list(mono.values()) + list(dims.values()):
            if x not in Q:
                raise RuleError(f"parameter value {x} is not a state")
        object.__setattr__(self, "monomers", mono)
        object.__setattr__(self, "dimers", dims)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParametricRule):
            return NotImplemented
        return (
            self.d == other.d
            and self.states == other.states
            and self.eta == other.eta
            and self.lam == other.lam
            and self.monomers == other.monomers
            and self.dimers == other.dimers
        )

    __hash__ = None

    def monomer_value(self, v: Direction, q: int) -> int:
        return 0 if q == 0 else self.monomers[(v, q)]

    def dimer_value(self, u: Direction, a: int, w: Direction, b: int) -> int:
        """``f(D_{u:a, w:b})`` for any omega pair.

        Pairs outside ``lam`` are resolved through the matching-dimer balance
        ``f(D) + f(D') = f^E(D) + f^E(D')``, which every conserving rule obeys.
        """
        if a == 0:
            return self.monomer_value(w, b)
        if b == 0:
            return self.monomer_value(u, a)
        if u > w:
            u, a, w, b = w, b, u, a
        key = (u, a, w, b)
        if key in self.dimers:
            return self.dimers[key]
        if not is_omega_pair((u, w), self.d) or (u, w) in self.lam:
            raise RuleError(f"no dimer value for ({u}, {w})")
        # D_{u:a,w:b} matches D_{-w:a,-u:b}, whose pair lies in lam
        m = self.monomer_value
        partner = self.dimer_value(negate(w), a, negate(u), b)
        return m(u, a) + m(w, b) + m(negate(w), a) + m(negate(u), b) - partner

    def value_at(self, N: Sequence[int]) -> int:
        """Rule value on a configuration with at most two non-zero entries."""
        nz = [(v, x) for v, x in enumerate(N) if x != 0]
        if not nz:
            return 0
        if len(nz) == 1:
            return self.monomer_value(*nz[0])
        if len(nz) == 2:
            (u, a), (w, b) = nz
            if is_omega_pair((u, w), self.d):
                return self.dimer_value(u, a, w, b)
        raise RuleError(f"{tuple(N)} is not a monomer or an omega dimer")

    def __call__(self, N: Sequence[int]) -> int:
        return evaluate(self, N)


Rule = DenseRule | ParametricRule


def evaluate(f: Rule, N: Sequence[int]) -> int:
    """Value of a rule on ``N``.

    Parametric rules are expanded through the reconstruction formula with
    their stored ``eta`` and ``lam``; a value outside the state set raises
    :class:`NotClosedError`.
    """
    N = check_config(N, f.states, f.d)
    if isinstance(f, DenseRule):
        return f(N)
    from .conservation import reconstruct

    value = reconstruct(f, N)
    if value not in f.states:
        raise NotClosedError(N, value)
    return value


def _monomer_value(f: Rule, v: Direction, q: int) -> int:
    if isinstance(f, ParametricRule):
        return f.monomer_value(v, q)
    return f(monomer(v, q, f.d))


def monomer_expansion(f: Rule, N: Sequence[int]) -> int:
    """Sum of the rule over the monomers obtained by keeping one entry of ``N``."""
    return sum(_monomer_value(f, v, x) for v, x in enumerate(N))


def is_rotation_symmetric(f: Rule) -> bool:
    if f.d != 2:
        raise RuleError("rotation symmetry is only defined in dimension 2")
    if isinstance(f, ParametricRule):
        from .conservation import materialize

        f = materialize(f)
    return bool(np.array_equal(f.table, f.table[_rotation_permutation(f.states)]))


@functools.lru_cache(maxsize=8)
def _rotation_permutation(Q: StateSet) -> np.ndarray:
    """``perm[k]`` is the index of ``rotate90`` of configuration ``k``."""
    configs = all_configs(2, Q)
    rotated = np.empty_like(configs)
    rotated[:, list(_ROT)] = configs
    return config_indices(rotated, Q)


def identity_rule(d: int, Q: StateSet) -> DenseRule:
    return DenseRule(d, Q, all_configs(d, Q)[:, 0])


def shift_rule(d: int, Q: StateSet, v: Direction) -> DenseRule:
    """``f(N) = N(v)``: states arrive from direction ``v``."""
    return DenseRule(d, Q, all_configs(d, Q)[:, v])


def traffic_rule(d: int, v: Direction) -> DenseRule:
    """Binary traffic rule where particles arrive from direction ``v``.

    A particle at ``v`` enters an empty centre; a centre particle stays while
    the cell at ``-v`` is occupied.  Along the axis this is elementary rule 184.
    """
    Q = StateSet((0, 1))
    c = all_configs(d, Q)
    back, centre, ahead = c[:, v], c[:, 0], c[:, negate(v)]
    return DenseRule(d, Q, np.minimum(back, 1 - centre) + np.minimum(centre, ahead))


def iter_configs(d: int, Q: StateSet) -> Iterable[Config]:
    for row in all_configs(d, Q):
        yield tuple(int(x) for x in row)
