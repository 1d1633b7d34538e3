"""Deciding number conservation for von Neumann rules.

A rule is reconstructed from its monomer and dimer values through the
identity

    f(N) = N(eta)
           + sum_{(u,w) in lam} [ f(D_{u:N(u), w:N(w)}) - f(D_{u:N(-w), w:N(-u)}) ]
           + sum_{v != eta} f^E(H_{N(v)})
           - sum_{(u,w) in lam} [ f^E(D_{u:N(u), w:N(w)}) + f^E(D_{-w:N(u), -u:N(w)}) ]
           - sum_{v in V+} f(M_{v:N(-v)})

which holds for every configuration exactly when the rule conserves the sum
of states.  Any leading direction ``eta`` and any lambda selection give an
equivalent criterion.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .lattice import (
    Direction,
    OmegaPair,
    canonical_lambda,
    direction_set,
    negate,
    omega_pairs,
    positive_directions,
    validate_lambda,
)
from .rules import (
    Config,
    DenseRule,
    ParametricRule,
    RuleError,
    StateSet,
    all_configs,
    all_positions,
    config_index,
    dimer,
    homogeneous,
    index_config,
    monomer,
)


class Status(str, enum.Enum):
    CONSERVING = "conserving"
    VIOLATED = "violated"


# Identifiers of the condition a witness violates.
QUIESCENCE = "quiescence"
MONOMER_SUM = "monomer-sum"
MATCHING_DIMER = "matching-dimer"
RECONSTRUCTION = "reconstruction"
SIGMA = "sigma"  # used by the simulation oracles


@dataclass(frozen=True)
class Verdict:
    """Outcome of a conservation check.

    ``witness`` is a neighbourhood configuration for the algebraic check and
    a flat torus configuration for the simulation oracles.
    """

    status: Status
    witness: tuple[int, ...] | None = None
    equation: str | None = None
    detail: dict | None = None

    def __post_init__(self) -> None:
        if (self.status is Status.VIOLATED) != (self.witness is not None):
            raise ValueError("a verdict carries a witness exactly when it is violated")

    @property
    def conserving(self) -> bool:
        return self.status is Status.CONSERVING

    def to_json(self) -> dict:
        out = {
            "status": self.status.value,
            "witness": list(self.witness) if self.witness is not None else None,
            "equation": self.equation,
        }
        if self.detail:
            out.update(self.detail)
        return out


CONSERVING = Verdict(Status.CONSERVING)


def _violated(witness: Sequence[int], equation: str, **detail) -> Verdict:
    return Verdict(Status.VIOLATED, tuple(int(x) for x in witness), equation, detail or None)


# --------------------------------------------------------------------------
# Prescreens
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PrescreenReport:
    """Necessary conditions; passing all of them does not imply conservation."""

    quiescence_ok: bool
    quiescence_witness: Config | None
    monomer_sum_ok: bool
    monomer_sum_witness: Config | None
    matching_dimer_ok: bool
    matching_dimer_witness: Config | None

    @property
    def passed(self) -> bool:
        return self.quiescence_ok and self.monomer_sum_ok and self.matching_dimer_ok

    def first_failure(self) -> Verdict | None:
        for ok, witness, eq in (
            (self.quiescence_ok, self.quiescence_witness, QUIESCENCE),
            (self.monomer_sum_ok, self.monomer_sum_witness, MONOMER_SUM),
            (self.matching_dimer_ok, self.matching_dimer_witness, MATCHING_DIMER),
        ):
            if not ok:
                return _violated(witness, eq)
        return None


def prescreen(f: DenseRule) -> PrescreenReport:
    d, Q = f.d, f.states
    V = direction_set(d)

    quiescence = [homogeneous(q, d) for q in Q if f(homogeneous(q, d)) != q]
    # witness for a failed monomer sum: the homogeneous configuration of that state
    monomer_sum = [
        homogeneous(q, d) for q in Q if sum(f(monomer(v, q, d)) for v in V) != q
    ]

    def fE(N):
        return sum(f(monomer(v, x, d)) for v, x in enumerate(N))

    matching = []
    for u, w in omega_pairs(d):
        for p in Q:
            for q in Q:
                D = [0] * (2 * d + 1)
                D[u], D[w] = p, q
                M = [0] * (2 * d + 1)
                M[negate(w)], M[negate(u)] = p, q
                if f(D) + f(M) != fE(D) + fE(M):
                    matching.append(tuple(D))

    def first(found):
        return min(found, key=lambda N: config_index(N, Q)) if found else None

    return PrescreenReport(
        not quiescence, first(quiescence),
        not monomer_sum, first(monomer_sum),
        not matching, first(matching),
    )


# --------------------------------------------------------------------------
# Reconstruction
# --------------------------------------------------------------------------

def _resolve(P: ParametricRule, eta, lam) -> tuple[Direction, tuple[OmegaPair, ...]]:
    eta = P.eta if eta is None else eta
    if not 0 <= eta <= 2 * P.d:
        raise RuleError(f"leading direction {eta} does not exist in dimension {P.d}")
    lam = P.lam if lam is None else validate_lambda(lam, P.d)
    return eta, lam


def reconstruct(
    P: ParametricRule,
    N: Sequence[int],
    eta: Direction | None = None,
    lam: Sequence[OmegaPair] | None = None,
) -> int:
    """Right-hand side of the reconstruction identity at ``N``.

    ``eta`` and ``lam`` default to the ones stored in ``P``.  The result may
    lie outside the state set.
    """
    eta, lam = _resolve(P, eta, lam)
    d = P.d
    m = P.monomer_value
    D = P.dimer_value
    V = direction_set(d)

    total = N[eta]
    for u, w in lam:
        nu, nw = negate(u), negate(w)
        total += D(u, N[u], w, N[w]) - D(u, N[nw], w, N[nu])
        total -= m(u, N[u]) + m(w, N[w]) + m(nw, N[u]) + m(nu, N[w])
    for v in V:
        if v != eta:
            total += sum(m(x, N[v]) for x in V)
    for v in positive_directions(d):
        total -= m(v, N[negate(v)])
    return total


def _parameter_arrays(P: ParametricRule, lam) -> tuple[np.ndarray, dict]:
    """Monomer and dimer values indexed by state position (zero states included)."""
    d, Q = P.d, P.states
    k = len(Q)
    mono = np.zeros((2 * d + 1, k), dtype=np.int64)
    for v in direction_set(d):
        for a, p in enumerate(Q.states):
            mono[v, a] = P.monomer_value(v, p)
    dim = {}
    for u, w in lam:
        arr = np.empty((k, k), dtype=np.int64)
        for a, p in enumerate(Q.states):
            for b, q in enumerate(Q.states):
                arr[a, b] = P.dimer_value(u, p, w, q)
        dim[(u, w)] = arr
    return mono, dim


def _reconstruct_rows(d, Q, eta, lam, mono, dim, rows=slice(None)) -> np.ndarray:
    """Reconstruction over configuration rows from raw parameter arrays.

    ``mono[v, a]`` is ``f(M_{v:Q[a]})`` and ``dim[(u, w)][a, b]`` is
    ``f(D_{u:Q[a], w:Q[b]})``, zero states included.
    """
    pos = all_positions(d, Q)[rows]
    vals = all_configs(d, Q)[rows]
    fEH = mono.sum(axis=0)

    total = vals[:, eta].astype(np.int64)
    for u, w in lam:
        nu, nw = negate(u), negate(w)
        arr = dim[(u, w)]
        total += arr[pos[:, u], pos[:, w]] - arr[pos[:, nw], pos[:, nu]]
        total -= mono[u, pos[:, u]] + mono[w, pos[:, w]] + mono[nw, pos[:, u]] + mono[nu, pos[:, w]]
    for v in direction_set(d):
        if v != eta:
            total += fEH[pos[:, v]]
    for v in positive_directions(d):
        total -= mono[v, pos[:, negate(v)]]
    return total


def reconstruct_table(
    P: ParametricRule,
    eta: Direction | None = None,
    lam: Sequence[OmegaPair] | None = None,
    rows: slice = slice(None),
) -> np.ndarray:
    """Vectorised :func:`reconstruct` over all configurations (or a slice of them)."""
    eta, lam = _resolve(P, eta, lam)
    mono, dim = _parameter_arrays(P, lam)
    return _reconstruct_rows(P.d, P.states, eta, lam, mono, dim, rows)


def parameter_keys(d: int, Q: StateSet, lam: Sequence[OmegaPair]) -> list[tuple]:
    """Free parameters in a fixed order: monomers ``(v, q)`` then dimers ``(u, p, w, q)``."""
    keys: list[tuple] = [(v, q) for v in direction_set(d) for q in Q.nonzero]
    keys += [(u, p, w, q) for u, w in lam for p in Q.nonzero for q in Q.nonzero]
    return keys


def _arrays_from_vector(d, Q, lam, keys, x):
    k = len(Q)
    z = Q.zero_position
    mono = np.zeros((2 * d + 1, k), dtype=np.int64)
    dim = {pair: np.zeros((k, k), dtype=np.int64) for pair in lam}
    for key, val in zip(keys, x):
        if len(key) == 2:
            v, q = key
            mono[v, Q.position(q)] = val
        else:
            u, p, w, q = key
            dim[(u, w)][Q.position(p), Q.position(q)] = val
    for (u, w), arr in dim.items():
        arr[:, z] = mono[u]
        arr[z, :] = mono[w]
    return mono, dim


def reconstruction_matrix(
    d: int, Q: StateSet, eta: Direction = 0, lam: Sequence[OmegaPair] | None = None
) -> tuple[np.ndarray, np.ndarray, list[tuple]]:
    """The reconstruction as an affine map ``b + A @ x`` of the parameter vector.

    Row ``k`` belongs to configuration index ``k``; columns follow
    :func:`parameter_keys`.
    """
    lam = validate_lambda(lam, d) if lam is not None else canonical_lambda(d)
    keys = parameter_keys(d, Q, lam)
    zero = np.zeros(len(keys), dtype=np.int64)
    b = _reconstruct_rows(d, Q, eta, lam, *_arrays_from_vector(d, Q, lam, keys, zero))
    A = np.empty((b.size, len(keys)), dtype=np.int64)
    for j in range(len(keys)):
        e = zero.copy()
        e[j] = 1
        A[:, j] = _reconstruct_rows(d, Q, eta, lam, *_arrays_from_vector(d, Q, lam, keys, e)) - b
    return b, A, keys


def extract_params(
    f: DenseRule, eta: Direction = 0, lam: Sequence[OmegaPair] | None = None
) -> ParametricRule:
    """Read monomer and lambda-dimer values straight from the table."""
    d, Q = f.d, f.states
    lam = validate_lambda(lam, d) if lam is not None else canonical_lambda(d)
    monomers = {(v, q): f(monomer(v, q, d)) for v in direction_set(d) for q in Q.nonzero}
    dimers = {
        (u, p, w, q): f(dimer((u, w), p, q, d))
        for u, w in lam
        for p in Q.nonzero
        for q in Q.nonzero
    }
    return ParametricRule(d, Q, monomers, dimers, eta, lam)


class MaterializeError(RuleError):
    """A parametric rule does not define a closed, self-consistent table."""

    def __init__(self, config: Config, value: int, reason: str):
        super().__init__(f"{reason}: value {value} at configuration {config}")
        self.config = config
        self.value = value
        self.reason = reason


def materialize(
    P: ParametricRule,
    eta: Direction | None = None,
    lam: Sequence[OmegaPair] | None = None,
) -> DenseRule:
    """Expand a parametric rule into its dense table.

    Succeeds iff the reconstruction stays inside the state set everywhere and
    reproduces the given parameters on the monomers and lambda dimers; the
    resulting rule is then number-conserving.  Otherwise raises
    :class:`MaterializeError` carrying the first offending configuration.
    """
    eta, lam = _resolve(P, eta, lam)
    d, Q = P.d, P.states
    table = reconstruct_table(P, eta, lam)

    outside = ~np.isin(table, Q.as_array())
    expected = np.full(table.shape, np.iinfo(np.int64).min)
    for (v, q), x in P.monomers.items():
        expected[config_index(monomer(v, q, d), Q)] = x
    for u, w in lam:
        for p in Q.nonzero:
            for q in Q.nonzero:
                expected[config_index(dimer((u, w), p, q, d), Q)] = P.dimer_value(u, p, w, q)
    expected[config_index(homogeneous(0, d), Q)] = 0
    given = expected != np.iinfo(np.int64).min
    inconsistent = given & (table != expected)

    bad = np.flatnonzero(outside | inconsistent)
    if bad.size:
        k = int(bad[0])
        reason = "value outside the state set" if outside[k] else "inconsistent with parameters"
        raise MaterializeError(index_config(k, Q, d), int(table[k]), reason)
    return DenseRule(d, Q, table)


# --------------------------------------------------------------------------
# Full decision
# --------------------------------------------------------------------------

CHUNK = 1 << 20


def _first_mismatch(f: DenseRule, P: ParametricRule, workers: int) -> int | None:
    n = f.table.size
    chunks = [slice(s, min(s + CHUNK, n)) for s in range(0, n, CHUNK)]

    def scan(sl: slice) -> int | None:
        bad = np.flatnonzero(reconstruct_table(P, rows=sl) != f.table[sl])
        return sl.start + int(bad[0]) if bad.size else None

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = list(pool.map(scan, chunks))
    else:
        hits = []
        for sl in chunks:
            hits.append(scan(sl))
            if hits[-1] is not None:
                break
    hits = [h for h in hits if h is not None]
    return min(hits) if hits else None


def is_number_conserving(
    f: DenseRule,
    eta: Direction = 0,
    lam: Sequence[OmegaPair] | None = None,
    *,
    workers: int = 1,
) -> Verdict:
    """Decide conservation of the sum of states.

    Runs the prescreens, then compares the table with the reconstruction from
    the rule's own monomer and lambda-dimer values on every configuration.
    The witness is the first failing configuration in index order.
    """
    report = prescreen(f)
    failure = report.first_failure()
    if failure is not None:
        return failure
    P = extract_params(f, eta, lam)
    k = _first_mismatch(f, P, workers)
    if k is None:
        return CONSERVING
    N = index_config(k, f.states, f.d)
    return _violated(N, RECONSTRUCTION, expected=int(reconstruct(P, N)), actual=f(N))
