import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncca.closed_forms import (
    config_to_layout,
    layout_to_config,
    leading_center_d2,
    leading_up_d2,
)
from ncca.conservation import (
    MATCHING_DIMER,
    MONOMER_SUM,
    QUIESCENCE,
    RECONSTRUCTION,
    MaterializeError,
    Status,
    Verdict,
    extract_params,
    is_number_conserving,
    materialize,
    prescreen,
    reconstruct,
    reconstruct_table,
    reconstruction_matrix,
)
from ncca.lattice import all_lambdas, canonical_lambda, direction_set
from ncca.rules import (
    DenseRule,
    ParametricRule,
    StateSet,
    all_configs,
    config_index,
    dimer,
    identity_rule,
    iter_configs,
    monomer,
    shift_rule,
    traffic_rule,
)

from conftest import UP_LAMBDA_D2, Q01, Q012, random_dense


def majority(N):
    return int(sum(N) >= 3)


def test_verdict_invariant():
    with pytest.raises(ValueError):
        Verdict(Status.VIOLATED)
    with pytest.raises(ValueError):
        Verdict(Status.CONSERVING, witness=(0,))
    assert Verdict(Status.CONSERVING).to_json() == {"status": "conserving", "witness": None, "equation": None}


def test_prescreen_examples():
    assert prescreen(identity_rule(2, Q012)).passed
    const = DenseRule(2, Q01, [1] * 32)
    rep = prescreen(const)
    assert not rep.quiescence_ok and rep.quiescence_witness == (0, 0, 0, 0, 0)
    # f(M_{0:1}) = f(M_{+v1:1}) = 1 and every other single-particle value 0
    two = DenseRule.from_function(2, Q01, lambda N: int(N in {(1, 0, 0, 0, 0), (0, 1, 0, 0, 0), (1, 1, 1, 1, 1)}))
    rep = prescreen(two)
    assert rep.quiescence_ok and not rep.monomer_sum_ok
    assert rep.first_failure().equation == MONOMER_SUM


def test_known_verdicts():
    assert is_number_conserving(identity_rule(2, Q01)).conserving
    for v in range(1, 5):
        assert is_number_conserving(traffic_rule(2, v)).conserving
        assert is_number_conserving(shift_rule(2, Q012, v)).conserving
    maj = is_number_conserving(DenseRule.from_function(2, Q01, majority))
    assert maj.status is Status.VIOLATED and maj.witness is not None


def test_traffic_min_formula():
    # f = min(N(-v1), 1 - N(0)) + min(N(0), N(+v1))
    f = DenseRule.from_function(2, Q01, lambda N: min(N[2], 1 - N[0]) + min(N[0], N[1]))
    assert f == traffic_rule(2, 2)
    assert is_number_conserving(f).conserving


def test_witness_is_first_failing_configuration(ternary_d2, rng):
    base = ternary_d2[7][0]
    f = _perturb_off_parameters(_perturb_off_parameters(base, rng), rng)
    changed = np.flatnonzero(f.table != base.table)
    v = is_number_conserving(f, workers=2)
    assert config_index(v.witness, Q012) == changed.min()


def _perturb_off_parameters(f: DenseRule, rng) -> DenseRule:
    """Change one entry with three or more non-zero states (prescreens still pass)."""
    configs = all_configs(f.d, f.states)
    dense_rows = np.flatnonzero((configs != 0).sum(axis=1) >= 3)
    k = int(rng.choice(dense_rows))
    table = f.table.copy()
    choices = [q for q in f.states if q != table[k]]
    table[k] = rng.choice(choices)
    return DenseRule(f.d, f.states, table)


def test_reconstruction_failure_has_expected_value(ternary_d2, rng):
    f = _perturb_off_parameters(ternary_d2[100][0], rng)
    assert prescreen(f).passed
    v = is_number_conserving(f)
    assert v.equation == RECONSTRUCTION
    k = config_index(v.witness, Q012)
    assert v.detail["actual"] == f.table[k]
    assert v.detail["expected"] == ternary_d2[100][0].table[k]
    assert is_number_conserving(f, workers=3) == v


def test_prescreen_failure_ids():
    f = DenseRule(2, Q01, [0] * 32)
    assert is_number_conserving(f).equation == QUIESCENCE
    table = traffic_rule(2, 1).table.copy()
    table[config_index(dimer((1, 3), 1, 1, 2), Q01)] ^= 1
    g = DenseRule(2, Q01, table)
    assert prescreen(g).first_failure().equation == MATCHING_DIMER


def _identity_params(Q):
    mono = {(v, q): (q if v == 0 else 0) for v in range(5) for q in Q.nonzero}
    dims = {
        (u, p, w, q): (p if u == 0 else 0)
        for u, w in canonical_lambda(2)
        for p in Q.nonzero
        for q in Q.nonzero
    }
    return ParametricRule(2, Q, mono, dims)


def test_reconstruct_identity_and_shift():
    P = _identity_params(Q012)
    for N in iter_configs(2, Q012):
        assert reconstruct(P, N) == N[0]
    S = extract_params(shift_rule(2, Q012, 2))
    assert {k: x for k, x in S.monomers.items() if x} == {(2, 1): 1, (2, 2): 2}
    for N in iter_configs(2, Q012):
        assert reconstruct(S, N) == N[2]


def test_materialize_examples():
    assert materialize(_identity_params(Q012)) == identity_rule(2, Q012)
    mono = {(v, 1): int(v == 2) for v in range(5)}
    dims = {(u, 1, w, 1): 0 for u, w in canonical_lambda(2)}
    f = materialize(ParametricRule(2, Q01, mono, dims))
    assert f == shift_rule(2, Q01, 2)
    mono = {(v, 1): int(v in (0, 1)) for v in range(5)}
    with pytest.raises(MaterializeError) as err:
        materialize(ParametricRule(2, Q01, mono, dims))
    assert err.value.value not in (0, 1) or err.value.reason.startswith("inconsistent")


def test_flipping_traffic_dimers():
    P = extract_params(traffic_rule(2, 1))

    def flipped(key):
        dims = dict(P.dimers)
        dims[key] ^= 1
        return ParametricRule(2, Q01, P.monomers, dims)

    # a blocked particle that stops waiting is a plain shift
    assert materialize(flipped((0, 1, 1, 1))) == shift_rule(2, Q01, 1)
    for key in [(0, 1, 3, 1), (1, 1, 3, 1), (1, 1, 4, 1)]:
        with pytest.raises(MaterializeError) as err:
            materialize(flipped(key))
        assert err.value.value not in (0, 1)


def test_reconstruction_matrix_matches_table(ternary_d2):
    b, A, keys = reconstruction_matrix(2, Q012)
    assert A.shape == (243, 26)
    for f, _ in ternary_d2[::97]:
        P = extract_params(f)
        x = [P.monomers[k] if len(k) == 2 else P.dimers[k] for k in keys]
        assert np.array_equal(b + A @ np.array(x), f.table)
        assert np.array_equal(reconstruct_table(P), f.table)


def _some_lambdas(d, n=6):
    lams = [canonical_lambda(d)]
    if d == 2:
        lams.append(UP_LAMBDA_D2)
    for lam in all_lambdas(d):
        if len(lams) >= n:
            break
        if lam not in lams:
            lams.append(lam)
    return lams


def test_verdict_independent_of_formulation(binary_d2, ternary_d2, rng):
    rules = [f for f, _ in binary_d2] + [f for f, _ in ternary_d2[::50]]
    rules += [_perturb_off_parameters(f, rng) for f in rules]
    for f in rules:
        statuses = {
            is_number_conserving(f, eta, lam).status
            for eta in direction_set(2)
            for lam in _some_lambdas(2)
        }
        assert len(statuses) == 1


def test_d3_formulations_agree(binary_d3):
    for f, _ in binary_d3:
        for eta in (0, 1, 6):
            for lam in _some_lambdas(3, 3):
                assert is_number_conserving(f, eta, lam).conserving


def test_layout_round_trip():
    for q in itertools.product(range(3), repeat=5):
        assert config_to_layout(layout_to_config(q)) == q
    assert layout_to_config((1, 2, 3, 4, 5)) == (3, 4, 2, 1, 5)


def test_closed_forms_reproduce_catalog_rules(binary_d2, ternary_d2):
    for f, _ in binary_d2 + ternary_d2[::13]:
        for N in iter_configs(2, f.states):
            assert leading_up_d2(f, N) == f(N)
            assert leading_center_d2(f, N) == f(N)


def _random_parametric(rng, d, Q, lam, eta=0):
    """Random parameters whose single-particle values satisfy the monomer sums."""
    from ncca.enumeration import compositions

    mono = {}
    for q in Q.nonzero:
        opts = compositions(q, 2 * d + 1, Q.states)
        pick = opts[rng.integers(len(opts))]
        for v, x in enumerate(pick):
            mono[(v, q)] = x
    dims = {
        (u, p, w, q): int(rng.choice(Q.states))
        for u, w in lam
        for p in Q.nonzero
        for q in Q.nonzero
    }
    return ParametricRule(d, Q, mono, dims, eta, lam)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_leading_up_form_is_the_general_identity(seed):
    rng = np.random.default_rng(seed)
    P = _random_parametric(rng, 2, Q012, UP_LAMBDA_D2, eta=3)
    for _ in range(30):
        N = tuple(int(x) for x in rng.integers(0, 3, 5))
        assert leading_up_d2(P.value_at, N) == reconstruct(P, N)


def test_random_dense_rules_rarely_conserve(rng):
    verdicts = [is_number_conserving(random_dense(rng, 2, Q01)) for _ in range(50)]
    assert all(v.status is Status.VIOLATED for v in verdicts)
