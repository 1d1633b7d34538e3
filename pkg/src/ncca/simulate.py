"""Global dynamics on a torus and brute-force conservation oracles.

Nothing here uses the reconstruction identity; the oracles compare state
sums before and after one global step, so they are independent ground truth
for :func:`ncca.conservation.is_number_conserving`.
"""

from __future__ import annotations

import functools
import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conservation import CONSERVING, SIGMA, Status, Verdict, _violated
from .lattice import CellIndex, LatticeShape, axis_of, direction_set, sign_of, torus_step
from .rules import Config, DenseRule, RuleError, StateSet, all_positions

DEFAULT_BUDGET = 2**26
FINITE_SUPPORT_EXTENT = 7


class BudgetExceeded(RuleError):
    def __init__(self, needed: int, budget: int):
        super().__init__(f"{needed} configurations exceed the budget of {budget}")
        self.needed = needed
        self.budget = budget


@dataclass(frozen=True, eq=False)
class TorusConfiguration:
    """States of every cell of a torus, flattened in row-major order."""

    shape: LatticeShape
    cells: np.ndarray

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.int64).reshape(-1)
        if cells.size != self.shape.size:
            raise ValueError(f"expected {self.shape.size} cells, got {cells.size}")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    @classmethod
    def zeros(cls, shape: LatticeShape) -> "TorusConfiguration":
        return cls(shape, np.zeros(shape.size, dtype=np.int64))

    @classmethod
    def from_cells(cls, shape: LatticeShape, values: dict) -> "TorusConfiguration":
        """Zero background with ``values[cell] = state``."""
        cells = np.zeros(shape.size, dtype=np.int64)
        for i, q in values.items():
            cells[shape.flat(i)] = q
        return cls(shape, cells)

    def __getitem__(self, i: Sequence[int]) -> int:
        return int(self.cells[self.shape.flat(i)])

    def __eq__(self, other) -> bool:
        if not isinstance(other, TorusConfiguration):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.cells, other.cells)

    __hash__ = None

    def grid(self) -> np.ndarray:
        return self.cells.reshape(self.shape.dims)

    def check_states(self, Q: StateSet) -> None:
        bad = ~np.isin(self.cells, Q.as_array())
        if bad.any():
            raise RuleError(f"cell state {int(self.cells[bad][0])} is not in {Q.states}")


@functools.lru_cache(maxsize=32)
def neighbor_table(shape: LatticeShape) -> np.ndarray:
    """``out[v, i]`` is the flat index of cell ``i + v``."""
    idx = np.arange(shape.size).reshape(shape.dims)
    rows = []
    for v in direction_set(shape.d):
        if v == 0:
            rows.append(idx.reshape(-1))
        else:
            rows.append(np.roll(idx, -sign_of(v), axis=axis_of(v) - 1).reshape(-1))
    out = np.stack(rows)
    out.setflags(write=False)
    return out


def _check_pair(f: DenseRule, shape: LatticeShape) -> None:
    if f.d != shape.d:
        raise RuleError(f"rule has dimension {f.d} but the torus has dimension {shape.d}")


def local_view(x: TorusConfiguration, i: CellIndex) -> Config:
    """The neighbourhood configuration seen by cell ``i``."""
    return tuple(x[torus_step(i, v, x.shape)] for v in direction_set(x.shape.d))


def sigma(x: TorusConfiguration) -> int:
    return int(x.cells.sum())


def _codes(positions: np.ndarray, nbr: np.ndarray, k: int) -> np.ndarray:
    """Configuration indices of every cell for a batch of position arrays."""
    codes = np.zeros(positions.shape, dtype=np.int64)
    for v in range(nbr.shape[0] - 1, -1, -1):
        codes *= k
        codes += positions[..., nbr[v]]
    return codes


def step_positions(f: DenseRule, positions: np.ndarray, shape: LatticeShape) -> np.ndarray:
    """One global step on a batch of configurations given as state positions."""
    return f.table[_codes(positions, neighbor_table(shape), len(f.states))]


def global_step(f: DenseRule, x: TorusConfiguration, steps: int = 1) -> TorusConfiguration:
    _check_pair(f, x.shape)
    x.check_states(f.states)
    Q = f.states.as_array()
    cells = x.cells
    for _ in range(steps):
        cells = step_positions(f, np.searchsorted(Q, cells), x.shape)
    return TorusConfiguration(x.shape, cells)


# --------------------------------------------------------------------------
# Oracles
# --------------------------------------------------------------------------

def _first_sigma_violation(f: DenseRule, positions: np.ndarray, shape: LatticeShape):
    """Index of the first configuration in the batch whose sum changes."""
    Q = f.states.as_array()
    before = Q[positions].sum(axis=1)
    after = step_positions(f, positions, shape).sum(axis=1)
    hits = np.flatnonzero(before != after)
    if hits.size == 0:
        return None
    h = int(hits[0])
    return h, int(before[h]), int(after[h])


def _report(f: DenseRule, positions: np.ndarray, hit, **extra) -> Verdict:
    h, before, after = hit
    witness = f.states.as_array()[positions[h]]
    return _violated(witness, SIGMA, sigma_before=before, sigma_after=after, **extra)


class _ExhaustiveScan:
    """Mixed-radix sweep over all configurations of a torus.

    Cells are split into a low block (the first ``L`` cells) and a high block.
    For a fixed high block the sum change is a sum of per-cell terms; terms of
    cells that see only low cells are precomputed once, and terms of cells
    that see both blocks are cached per high-neighbour pattern.
    """

    def __init__(self, f: DenseRule, shape: LatticeShape, low_cells: int):
        k = len(f.states)
        n = shape.size
        L = min(low_cells, n)
        self.f, self.shape, self.k, self.L, self.H = f, shape, k, L, n - L
        Q = f.states.as_array()
        nbr = neighbor_table(shape)
        centre_states = Q[all_positions(f.d, f.states)[:, 0]]
        # gain[c]: change contributed by a cell whose neighbourhood has index c
        self.gain = (f.table - centre_states).astype(np.int64)

        low_pos = np.indices((k,) * L).reshape(L, -1)[::-1].T if L else np.zeros((1, 0), np.int64)
        self.low_pos = low_pos  # row r = digits of r, cell 0 least significant
        weights = k ** np.arange(nbr.shape[0], dtype=np.int64)
        self.pure_low = np.zeros(low_pos.shape[0], dtype=np.int64)
        self.mixed = []  # (low contribution per low config, [(high cell, weight)])
        self.pure_high = []
        for i in range(n):
            cells = nbr[:, i]
            if (cells < L).all():
                code = (low_pos[:, cells] * weights).sum(axis=1)
                self.pure_low += self.gain[code]
            elif (cells >= L).all():
                self.pure_high.append([(int(c) - L, int(w)) for c, w in zip(cells, weights)])
            else:
                low = [(int(c), int(w)) for c, w in zip(cells, weights) if c < L]
                code = np.zeros(low_pos.shape[0], dtype=np.int64)
                for c, w in low:
                    code += low_pos[:, c] * w
                high = [(int(c) - L, int(w)) for c, w in zip(cells, weights) if c >= L]
                self.mixed.append((code, high, {}))

    def _high_digits(self, h: int) -> list[int]:
        out = []
        for _ in range(self.H):
            h, r = divmod(h, self.k)
            out.append(r)
        return out

    def first_in(self, start: int, stop: int):
        """First violating configuration index with high block in ``[start, stop)``."""
        for h in range(start, stop):
            digits = self._high_digits(h)
            acc = self.pure_low.copy()
            const = 0
            for cell in self.pure_high:
                const += self.gain[sum(digits[c] * w for c, w in cell)]
            acc += const
            for code, high, cache in self.mixed:
                hp = sum(digits[c] * w for c, w in high)
                term = cache.get(hp)
                if term is None:
                    term = cache[hp] = self.gain[code + hp]
                acc += term
            bad = np.flatnonzero(acc)
            if bad.size:
                return h * self.low_pos.shape[0] + int(bad[0])
        return None


def exhaustive_oracle(
    f: DenseRule,
    shape: LatticeShape,
    budget: int = DEFAULT_BUDGET,
    workers: int = 1,
    low_cells: int | None = None,
) -> Verdict:
    """Check the state sum on every configuration of the torus."""
    _check_pair(f, shape)
    k, n = len(f.states), shape.size
    total = k**n
    if total > budget:
        raise BudgetExceeded(total, budget)
    if low_cells is None:
        low_cells = max(1, min(n, int(np.log(2**17) / np.log(k))))
    scan = _ExhaustiveScan(f, shape, low_cells)
    highs = k**scan.H
    if workers <= 1 or highs < workers:
        hit = scan.first_in(0, highs)
    else:
        bounds = np.linspace(0, highs, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            found = pool.map(lambda ab: scan.first_in(*ab), zip(bounds[:-1], bounds[1:]))
            found = [x for x in found if x is not None]
        hit = min(found) if found else None
    if hit is None:
        return CONSERVING
    digits = []
    rest = hit
    for _ in range(n):
        rest, r = divmod(rest, k)
        digits.append(r)
    positions = np.array([digits], dtype=np.int64)
    return _report(f, positions, _first_sigma_violation(f, positions, shape), index=hit)


def finite_support_configurations(d: int, Q: StateSet) -> tuple[LatticeShape, np.ndarray]:
    """Position arrays of the configurations the finite-support oracle checks.

    On a ``7^d`` torus: every configuration supported on the neighbourhood of
    a fixed cell, then every pair of non-zero cells at distance at most 2.
    """
    shape = LatticeShape.cube(d, FINITE_SUPPORT_EXTENT)
    k = len(Q)
    origin = (FINITE_SUPPORT_EXTENT // 2,) * d
    z = Q.zero_position
    cross = [shape.flat(torus_step(origin, v, shape)) for v in direction_set(d)]
    nbhd = all_positions(d, Q)
    first = np.full((nbhd.shape[0], shape.size), z, dtype=np.int64)
    first[:, cross] = nbhd

    offsets = [
        off
        for off in itertools.product(range(-2, 3), repeat=d)
        if 1 <= sum(map(abs, off)) <= 2
    ]
    nz = [Q.position(q) for q in Q.nonzero]
    rows = []
    o = shape.flat(origin)
    for off in offsets:
        j = shape.flat(tuple(c + dc for c, dc in zip(origin, off)))
        for a, b in itertools.product(nz, repeat=2):
            row = np.full(shape.size, z, dtype=np.int64)
            row[o], row[j] = a, b
            rows.append(row)
    second = np.array(rows, dtype=np.int64).reshape(-1, shape.size)
    return shape, np.concatenate([first, second])


def finite_support_oracle(f: DenseRule) -> Verdict:
    """Check the state sum on the finite family that determines conservation."""
    shape, positions = finite_support_configurations(f.d, f.states)
    hit = _first_sigma_violation(f, positions, shape)
    if hit is None:
        return CONSERVING
    return _report(f, positions, hit, shape=list(shape.dims))


def sampled_oracle(
    f: DenseRule,
    shape: LatticeShape,
    samples: int,
    seed: int,
    batch: int = 4096,
) -> Verdict:
    """Check uniformly random configurations drawn from a seeded PCG64 stream.

    A violation is conclusive; passing is only evidence.
    """
    _check_pair(f, shape)
    if samples < 1:
        raise ValueError("at least one sample is required")
    rng = np.random.default_rng(seed)
    k = len(f.states)
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        positions = rng.integers(0, k, size=(m, shape.size))
        hit = _first_sigma_violation(f, positions, shape)
        if hit is not None:
            return _report(f, positions, hit, seed=seed, sample=done + hit[0])
        done += m
    return Verdict(Status.CONSERVING, detail={"seed": seed, "samples": samples, "conclusive": False})
