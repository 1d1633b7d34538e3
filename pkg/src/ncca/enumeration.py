"""Exhaustive enumeration of number-conserving rules.

A conserving rule is determined by its non-trivial monomer values and its
dimer values on a lambda selection.  The search assigns

1. monomer values state by state, as compositions of ``q`` over the
   ``2d + 1`` directions with parts in ``Q`` (so the monomer sums hold by
   construction);
2. lambda-dimer values one at a time, rejecting a value as soon as the
   forced value of its matching dimer leaves ``Q``;
3. the remaining table entries, each checked for membership in ``Q`` as soon
   as every parameter it depends on is known.

The reconstruction is affine in the parameters, so every table entry and
every extra constraint (self-consistency, rotation symmetry) is a sparse
integer form over the dimer variables once the monomers are fixed.
"""

from __future__ import annotations

import functools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .conservation import is_number_conserving, reconstruction_matrix
from .lattice import Direction, canonical_lambda, direction_set, positive_directions
from .rules import (
    DenseRule,
    RuleError,
    StateSet,
    all_configs,
    check_table_size,
    config_index,
    dimer,
    identity_rule,
    is_rotation_symmetric,
    monomer,
    shift_rule,
    traffic_rule,
    _rotation_permutation,
)

log = logging.getLogger(__name__)


class EnumerationTooLarge(RuleError):
    def __init__(self, message: str, estimate: int):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class EnumerationRequest:
    d: int
    states: StateSet
    rotation_symmetric: bool = False
    passive: bool = False
    axis_extension_only: bool = False
    count_only: bool = False

    def __post_init__(self) -> None:
        if self.rotation_symmetric and self.d != 2:
            raise RuleError("the rotation-symmetric filter is only defined in dimension 2")


@dataclass(frozen=True)
class SearchSpace:
    monomer_params: int
    dimer_params: int
    unpruned_candidates: int
    monomer_choices: int
    estimate: int  # monomer_choices * |Q| ** dimer_params


# --------------------------------------------------------------------------
# Monomer stage
# --------------------------------------------------------------------------

def compositions(total: int, slots: int, parts: Sequence[int]) -> list[tuple[int, ...]]:
    """All tuples of ``slots`` values from ``parts`` summing to ``total``."""
    parts = sorted(parts)
    lo, hi = parts[0], parts[-1]
    out: list[tuple[int, ...]] = []

    def rec(prefix: list[int], remaining: int, left: int) -> None:
        if left == 0:
            if remaining == 0:
                out.append(tuple(prefix))
            return
        for x in parts:
            rest = remaining - x
            if (left - 1) * lo <= rest <= (left - 1) * hi:
                prefix.append(x)
                rec(prefix, rest, left - 1)
                prefix.pop()

    rec([], total, slots)
    return out


def monomer_options(req: EnumerationRequest) -> dict[int, list[tuple[int, ...]]]:
    """Admissible monomer value vectors ``(f(M_{v:q}))_v`` for each non-zero ``q``."""
    d, Q = req.d, req.states
    out = {}
    for q in Q.nonzero:
        opts = compositions(q, 2 * d + 1, Q.states)
        if req.passive:
            opts = [c for c in opts if c[0] == q]
        if req.rotation_symmetric:
            opts = [c for c in opts if len(set(c[1:])) == 1]
        out[q] = opts
    return out


def search_space(req: EnumerationRequest) -> SearchSpace:
    d, k = req.d, len(req.states)
    m = (2 * d + 1) * (k - 1)
    n = d * d * (k - 1) ** 2
    choices = 1
    for opts in monomer_options(req).values():
        choices *= len(opts)
    return SearchSpace(m, n, k ** (m + n), choices, choices * k**n)


# --------------------------------------------------------------------------
# Dimer stage
# --------------------------------------------------------------------------

@dataclass
class _Plan:
    Q: StateSet
    mono_keys: list
    mono_cols: np.ndarray
    dim_keys: list
    b: np.ndarray            # table = b + A_mono @ m + A_dim @ x
    A_mono: np.ndarray
    A_dim: np.ndarray
    order: list[int]         # dimer variable assignment order
    # constraint k: base[k] + mono_rows[k] @ m + sum(coef * x[var]) must be a state ('in')
    # or zero ('eq')
    in_base: np.ndarray
    in_mono: np.ndarray
    eq_base: np.ndarray
    eq_mono: np.ndarray
    in_static: np.ndarray    # constraints with no dimer variable
    eq_static: np.ndarray
    in_buckets: list         # per level: [(constraint, [(var, coef), ...]), ...]
    eq_buckets: list         # per level: [(constraint, coef_of_level_var, [(var, coef), ...]), ...]


def _var_order(keys: list, Q: StateSet) -> list[int]:
    def rank(j):
        u, p, w, q = keys[j]
        a, b = Q.position(p), Q.position(q)
        return (max(abs(p), abs(q)), min(a, b), max(a, b), a, u, w)

    return sorted(range(len(keys)), key=rank)


@functools.lru_cache(maxsize=8)
def _plan(req: EnumerationRequest) -> _Plan:
    d, Q = req.d, req.states
    lam = canonical_lambda(d)
    b, A, keys = reconstruction_matrix(d, Q, 0, lam)
    mono_cols = np.array([j for j, k in enumerate(keys) if len(k) == 2])
    dim_cols = np.array([j for j, k in enumerate(keys) if len(k) == 4], dtype=np.int64)
    dim_keys = [keys[j] for j in dim_cols]
    nvar = len(dim_keys)
    n = b.size

    # every table entry must be a state
    in_rows = A
    in_base = b
    # the table must reproduce the parameters it was built from
    eq_rows, eq_base = [], []
    for j, key in enumerate(keys):
        cfg = monomer(key[0], key[1], d) if len(key) == 2 else dimer((key[0], key[2]), key[1], key[3], d)
        row = A[config_index(cfg, Q)].copy()
        row[j] -= 1
        eq_rows.append(row)
        eq_base.append(b[config_index(cfg, Q)])
    if req.rotation_symmetric:
        perm = _rotation_permutation(Q)
        for k in range(n):
            if perm[k] > k:
                eq_rows.append(A[k] - A[perm[k]])
                eq_base.append(b[k] - b[perm[k]])
    eq_rows = np.array(eq_rows, dtype=np.int64).reshape(-1, A.shape[1])
    eq_base = np.array(eq_base, dtype=np.int64)

    order = _var_order(dim_keys, Q)
    level_of = {var: lvl for lvl, var in enumerate(order)}
    nonzero_entries = (all_configs(d, Q) != 0).sum(axis=1)

    def split(rows):
        static, buckets = [], [[] for _ in range(nvar)]
        for c, row in enumerate(rows[:, dim_cols]):
            vars_ = np.flatnonzero(row)
            if vars_.size == 0:
                static.append(c)
                continue
            last = max(vars_, key=level_of.__getitem__)
            buckets[level_of[last]].append((c, last, [(int(v), int(row[v])) for v in vars_]))
        return np.array(static, dtype=np.int64), buckets

    in_static, in_b = split(in_rows)
    eq_static, eq_b = split(eq_rows)
    in_buckets = []
    for level in in_b:
        # forced matching-dimer values first, then denser configurations
        level.sort(key=lambda t: (nonzero_entries[t[0]] > 2, -nonzero_entries[t[0]], t[0]))
        in_buckets.append([(c, terms) for c, _, terms in level])
    eq_buckets = []
    for level in eq_b:
        items = []
        for c, last, terms in level:
            coef = dict(terms)[last]
            items.append((c, coef, [(v, a) for v, a in terms if v != last]))
        eq_buckets.append(items)

    return _Plan(
        Q, [keys[j] for j in mono_cols], mono_cols, dim_keys,
        b, A[:, mono_cols], A[:, dim_cols], order,
        in_base, in_rows[:, mono_cols], eq_base, eq_rows[:, mono_cols],
        in_static, eq_static, in_buckets, eq_buckets,
    )


def _monomer_vector(plan: _Plan, choice: dict[int, tuple[int, ...]]) -> np.ndarray:
    return np.array([choice[q][v] for v, q in plan.mono_keys], dtype=np.int64)


def _search_branch(plan: _Plan, m: np.ndarray) -> list[tuple[int, ...]]:
    """All dimer assignments completing the monomer vector ``m``."""
    states = plan.Q.states
    qset = frozenset(states)
    in_const = (plan.in_base + plan.in_mono @ m).tolist()
    eq_const = (plan.eq_base + plan.eq_mono @ m).tolist()
    if any(in_const[c] not in qset for c in plan.in_static):
        return []
    if any(eq_const[c] != 0 for c in plan.eq_static):
        return []

    order = plan.order
    nvar = len(order)
    in_buckets, eq_buckets = plan.in_buckets, plan.eq_buckets
    x = [0] * nvar
    found: list[list[int]] = []

    def rec(level: int) -> None:
        if level == nvar:
            found.append(list(x))
            return
        j = order[level]
        forced = None
        for c, coef, others in eq_buckets[level]:
            s = eq_const[c]
            for v, a in others:
                s += a * x[v]
            if s % coef:
                return
            val = -s // coef
            if forced is None:
                forced = val
            elif forced != val:
                return
        if forced is not None:
            if forced not in qset:
                return
            candidates = (forced,)
        else:
            candidates = states
        checks = in_buckets[level]
        for val in candidates:
            x[j] = val
            for c, terms in checks:
                s = in_const[c]
                for v, a in terms:
                    s += a * x[v]
                if s not in qset:
                    break
            else:
                rec(level + 1)
        x[j] = 0

    rec(0)
    if not found:
        return []
    base = plan.b + plan.A_mono @ m
    tables = base[None, :] + np.array(found, dtype=np.int64) @ plan.A_dim.T
    return [tuple(row) for row in tables.tolist()]


def _run_branches(req: EnumerationRequest, choices: list[dict]) -> list[tuple[int, ...]]:
    plan = _plan(req)
    out = []
    for choice in choices:
        out.extend(_search_branch(plan, _monomer_vector(plan, choice)))
    return out


def _monomer_choices(req: EnumerationRequest) -> list[dict[int, tuple[int, ...]]]:
    opts = monomer_options(req)
    qs = list(opts)
    out = [{}]
    for q in qs:
        out = [{**c, q: o} for c in out for o in opts[q]]
    return out


def search_tables(req: EnumerationRequest, workers: int = 1) -> list[tuple[int, ...]]:
    """Tables of every conserving rule admitted by the request, sorted.

    Filters that act on monomers or through symmetry are applied inside the
    search; ``axis_extension_only`` is not applied here.
    """
    check_table_size(req.d, req.states)
    space = search_space(req)
    log.info(
        "search space: %d monomer choices x %d^%d dimer values (estimate %d)",
        space.monomer_choices, len(req.states), space.dimer_params, space.estimate,
    )
    choices = _monomer_choices(req)
    if workers <= 1 or len(choices) < 2:
        tables = _run_branches(req, choices)
    else:
        batches = [choices[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(workers) as pool:
            parts = pool.map(_run_branches, [req] * len(batches), batches)
            tables = [t for part in parts for t in part]
    return sorted(set(tables))


# --------------------------------------------------------------------------
# Classification
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RuleLabel:
    identity: bool = False
    shifts: tuple[Direction, ...] = ()
    traffic: tuple[Direction, ...] = ()
    axis_extensions: tuple[int, ...] = ()
    passive: bool = False
    rotation_symmetric: bool | None = None

    @property
    def tags(self) -> list[str]:
        from .lattice import direction_label

        out = []
        if self.identity:
            out.append("identity")
        out += [f"shift({direction_label(v)})" for v in self.shifts]
        out += [f"traffic({direction_label(v)})" for v in self.traffic]
        out += [f"axis_extension({k})" for k in self.axis_extensions]
        if self.rotation_symmetric:
            out.append("rotation_symmetric")
        if self.passive:
            out.append("passive")
        return out

    @property
    def kind(self) -> str:
        """``identity``, ``shift``, ``traffic`` or ``other``."""
        if self.identity:
            return "identity"
        if self.shifts:
            return "shift"
        if self.traffic:
            return "traffic"
        return "other"


def axis_restriction(f: DenseRule, axis: int) -> DenseRule | None:
    """The one-dimensional rule ``f`` induces on ``axis``, if it ignores every other axis."""
    d, Q = f.d, f.states
    k = len(Q)
    T = f.table.reshape((k,) * (2 * d + 1), order="F")
    keep = (0, 2 * axis - 1, 2 * axis)
    index = tuple(slice(None) if v in keep else Q.zero_position for v in range(2 * d + 1))
    reduced = T[index]
    expand = tuple(slice(None) if v in keep else None for v in range(2 * d + 1))
    if not np.array_equal(T, np.broadcast_to(reduced[expand], T.shape)):
        return None
    return DenseRule(1, Q, reduced.reshape(-1, order="F"))


def classify(f: DenseRule, *, check: bool = True) -> RuleLabel:
    """Label a conserving rule; non-conserving rules are rejected."""
    if check and not is_number_conserving(f).conserving:
        raise RuleError("only number-conserving rules are classified")
    d, Q = f.d, f.states
    identity = f == identity_rule(d, Q)
    shifts = tuple(v for v in positive_directions(d) if f == shift_rule(d, Q, v))
    traffic = ()
    if Q.states == (0, 1):
        traffic = tuple(v for v in positive_directions(d) if f == traffic_rule(d, v))
    axes = []
    for axis in range(1, d + 1):
        g = axis_restriction(f, axis)
        if g is not None and is_number_conserving(g).conserving:
            axes.append(axis)
    passive = all(f(monomer(0, q, d)) == q for q in Q.nonzero)
    rot = is_rotation_symmetric(f) if d == 2 else None
    return RuleLabel(identity, shifts, traffic, tuple(axes), passive, rot)


# --------------------------------------------------------------------------
# Public entry points
# --------------------------------------------------------------------------

def enumerate_ncca(
    req: EnumerationRequest, workers: int = 1
) -> Iterator[tuple[DenseRule, RuleLabel | None]]:
    """Every conserving rule matching the request, in ascending table order.

    Labels are computed unless ``req.count_only`` is set (then ``None``).
    """
    for table in search_tables(req, workers):
        rule = DenseRule(req.d, req.states, np.array(table, dtype=np.int64))
        label = None
        if not req.count_only or req.axis_extension_only:
            label = classify(rule, check=False)
            if req.axis_extension_only and not label.axis_extensions:
                continue
            if req.count_only:
                label = None
        yield rule, label


def count_ncca(req: EnumerationRequest, workers: int = 1) -> int:
    return sum(1 for _ in enumerate_ncca(req, workers))


def enumerate_rnca(Q: StateSet, workers: int = 1) -> list[DenseRule]:
    """All rotation-symmetric conserving rules in dimension 2."""
    req = EnumerationRequest(2, Q, rotation_symmetric=True, count_only=True)
    return [rule for rule, _ in enumerate_ncca(req, workers)]


def summarize(labels: Sequence[RuleLabel]) -> dict[str, int]:
    out = {"total": len(labels), "identity": 0, "shift": 0, "traffic": 0, "other": 0,
           "axis_extension": 0, "passive": 0, "rotation_symmetric": 0}
    for lab in labels:
        out[lab.kind] += 1
        out["axis_extension"] += bool(lab.axis_extensions)
        out["passive"] += lab.passive
        out["rotation_symmetric"] += bool(lab.rotation_symmetric)
    return out
