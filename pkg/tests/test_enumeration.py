import itertools

import numpy as np
import pytest

from ncca.conservation import MaterializeError, is_number_conserving, materialize, reconstruction_matrix
from ncca.enumeration import (
    EnumerationRequest,
    RuleLabel,
    axis_restriction,
    classify,
    compositions,
    count_ncca,
    enumerate_ncca,
    enumerate_rnca,
    search_space,
    search_tables,
    summarize,
)
from ncca.lattice import canonical_lambda
from ncca.rules import (
    DenseRule,
    ParametricRule,
    RuleError,
    StateSet,
    config_index,
    dimer,
    identity_rule,
    is_rotation_symmetric,
    monomer,
    shift_rule,
    traffic_rule,
)
from ncca.simulate import finite_support_oracle

from conftest import Q01, Q012


def unpruned_tables(d, Q):
    """Every parameter vector, kept when its table closes and reproduces it."""
    b, A, keys = reconstruction_matrix(d, Q)
    X = np.array(list(itertools.product(Q.states, repeat=len(keys))), dtype=np.int64)
    T = b[None, :] + X @ A.T
    ok = np.isin(T, Q.as_array()).all(axis=1)
    for j, key in enumerate(keys):
        cfg = monomer(key[0], key[1], d) if len(key) == 2 else dimer((key[0], key[2]), key[1], key[3], d)
        ok &= T[:, config_index(cfg, Q)] == X[:, j]
    return sorted(set(map(tuple, T[ok].tolist())))


def test_compositions():
    assert compositions(1, 3, (0, 1)) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    assert len(compositions(2, 5, (0, 1, 2))) == 15
    assert compositions(5, 2, (0, 1, 2)) == []
    assert compositions(0, 3, (-1, 0, 1)).count((1, -1, 0)) == 1


def test_search_space_accounting():
    for d, Q in [(1, Q01), (2, Q01), (2, Q012), (3, Q01), (3, StateSet.range(4))]:
        s = search_space(EnumerationRequest(d, Q))
        k = len(Q)
        assert s.monomer_params == (2 * d + 1) * (k - 1)
        assert s.dimer_params == d * d * (k - 1) ** 2
        assert s.unpruned_candidates == k ** (s.monomer_params + s.dimer_params)
    assert search_space(EnumerationRequest(2, Q01)).unpruned_candidates == 512


def test_binary_d2_against_unpruned_materialize():
    found = []
    lam = canonical_lambda(2)
    for bits in itertools.product((0, 1), repeat=9):
        mono = {(v, 1): bits[v] for v in range(5)}
        dims = {(u, 1, w, 1): bits[5 + j] for j, (u, w) in enumerate(lam)}
        try:
            found.append(materialize(ParametricRule(2, Q01, mono, dims)).key())
        except MaterializeError:
            pass
    assert sorted(set(found)) == search_tables(EnumerationRequest(2, Q01))
    assert len(found) == 9


@pytest.mark.parametrize("d,Q", [(1, Q01), (1, Q012), (2, Q01), (3, Q01)])
def test_matches_unpruned_parameter_sweep(d, Q):
    assert search_tables(EnumerationRequest(d, Q)) == unpruned_tables(d, Q)


def test_emitted_rules_are_conserving_and_sorted(ternary_d2):
    keys = [f.key() for f, _ in ternary_d2]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    for f, _ in ternary_d2[::11]:
        assert is_number_conserving(f).conserving
        assert finite_support_oracle(f).conserving


def test_deterministic_across_workers():
    req = EnumerationRequest(2, Q012, count_only=True)
    assert search_tables(req, workers=1) == search_tables(req, workers=3)


def test_filters_match_post_filtering(ternary_d2):
    passive = [f.key() for f, lab in ternary_d2 if lab.passive]
    got = [f.key() for f, _ in enumerate_ncca(EnumerationRequest(2, Q012, passive=True))]
    assert got == passive
    rot = [f.key() for f, _ in ternary_d2 if is_rotation_symmetric(f)]
    assert [f.key() for f in enumerate_rnca(Q012)] == rot
    axis = [f.key() for f, lab in ternary_d2 if lab.axis_extensions]
    got = [f.key() for f, _ in enumerate_ncca(EnumerationRequest(2, Q012, axis_extension_only=True))]
    assert got == axis


def test_rotation_filter_requires_d2():
    with pytest.raises(RuleError):
        EnumerationRequest(3, Q01, rotation_symmetric=True)


def test_count_only_emits_no_labels():
    out = list(enumerate_ncca(EnumerationRequest(2, Q01, count_only=True)))
    assert len(out) == 9 and all(lab is None for _, lab in out)
    assert count_ncca(EnumerationRequest(2, Q01)) == 9


def test_binary_catalog_labels(binary_d2, binary_d3):
    for catalog, d in [(binary_d2, 2), (binary_d3, 3)]:
        s = summarize([lab for _, lab in catalog])
        assert s["identity"] == 1 and s["shift"] == 2 * d and s["traffic"] == 2 * d
        assert s["other"] == 0
        # for two states every conserving rule lives on one axis
        assert s["axis_extension"] == s["total"]


def test_every_binary_1d_rule_is_classified():
    out = list(enumerate_ncca(EnumerationRequest(1, Q01)))
    assert sorted(lab.kind for _, lab in out) == ["identity", "shift", "shift", "traffic", "traffic"]


def test_classify_tags():
    lab = classify(identity_rule(2, Q012))
    assert lab.identity and lab.axis_extensions == (1, 2) and lab.passive and lab.rotation_symmetric
    assert lab.tags == ["identity", "axis_extension(1)", "axis_extension(2)", "rotation_symmetric", "passive"]
    lab = classify(shift_rule(2, Q01, 4))
    assert lab.tags == ["shift(-2)", "axis_extension(2)"]
    lab = classify(traffic_rule(3, 5))
    assert lab.traffic == (5,) and lab.axis_extensions == (3,) and lab.rotation_symmetric is None
    with pytest.raises(RuleError):
        classify(DenseRule(2, Q01, [0] * 31 + [1]))


def test_identity_implies_every_axis(ternary_d2):
    for _, lab in ternary_d2:
        if lab.identity:
            assert lab.axis_extensions == (1, 2)


def test_axis_restriction():
    g = axis_restriction(traffic_rule(2, 3), 2)
    assert g == traffic_rule(1, 1)
    assert axis_restriction(traffic_rule(2, 3), 1) is None


def test_label_kind():
    assert RuleLabel().kind == "other"
    assert RuleLabel(shifts=(1,)).kind == "shift"
