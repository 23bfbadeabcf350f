"""Set functions, families, Mobius inversion, costs, instance I/O."""

from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbpack import (
    Family,
    InstanceFormatError,
    SetFunction,
    compute_costs,
    dump_instance,
    load_instance,
    update_costs_after_block,
    zeta_transform,
)
from nbpack.setfn import (
    default_tolerance,
    elements_of,
    iter_submasks,
    mask_from_elements,
    popcount,
)

from conftest import family_instance_4, random_family_instance, random_full_instance


# -- mask helpers -------------------------------------------------------------


def test_mask_roundtrip():
    assert mask_from_elements([1, 3], 3) == 0b101
    assert elements_of(0b101) == [1, 3]
    assert elements_of(0) == []
    assert popcount(0b1011) == 3


def test_mask_bounds():
    with pytest.raises(InstanceFormatError):
        mask_from_elements([0], 3)
    with pytest.raises(InstanceFormatError):
        mask_from_elements([4], 3)


@given(st.integers(min_value=0, max_value=(1 << 10) - 1))
def test_submask_enumeration_complete(mask):
    subs = list(iter_submasks(mask))
    assert len(subs) == 1 << popcount(mask)
    assert len(set(subs)) == len(subs)
    assert all(sub & ~mask == 0 for sub in subs)


# -- family construction ------------------------------------------------------


def test_closed_family_adds_empty_and_singletons():
    fam = Family.closed(3, [0b011])
    assert fam.members == [0, 0b001, 0b010, 0b100, 0b011]
    # only the explicit pair is non-synthetic
    assert list(fam.synthetic) == [True, True, True, True, False]


def test_closed_family_rejects_duplicates():
    with pytest.raises(InstanceFormatError):
        Family.closed(3, [0b011, 0b011])


def test_unclosed_family_rejected():
    with pytest.raises(InstanceFormatError):
        Family(3, [0, 0b001, 0b011], [False, False, False])


def test_family_membership_queries():
    fam = family_instance_4().family
    assert 0b0011 in fam
    assert 0b1001 not in fam
    assert fam.position(0b1111) == len(fam) - 1


def test_family_size_guards():
    with pytest.raises(InstanceFormatError):
        SetFunction.full(17, np.zeros(1 << 17))
    with pytest.raises(InstanceFormatError):
        Family.closed(65, [0b11])
    rng = np.random.default_rng(0)
    masks = set()
    while len(masks) < 4200:
        m = int(rng.integers(1, 1 << 62))
        if popcount(m) >= 2:
            masks.add(m)
    with pytest.raises(InstanceFormatError):
        Family.closed(62, sorted(masks))


# -- Mobius inversion ---------------------------------------------------------


def test_mobius_values_three_elements():
    w = SetFunction.full(3, [0, 0.2, 0.2, 0.8, 0.2, 0.3, 0.6, 0.7])
    mu = w.mobius()
    expected = {
        0b001: 0.2,
        0b010: 0.2,
        0b011: 0.4,
        0b100: 0.2,
        0b101: -0.1,
        0b110: 0.2,
        0b111: -0.4,
    }
    for mask, value in expected.items():
        assert mu[mask] == pytest.approx(value, abs=1e-12)


def test_mobius_values_family():
    w = family_instance_4()
    mu = w.mobius()
    fam = w.family
    assert mu[fam.position(0b1000)] == pytest.approx(2.0)
    for pair in (0b0011, 0b0101, 0b0110):
        assert mu[fam.position(pair)] == pytest.approx(1.0)
    # the ground set absorbs the correction: 3 - (2 + 1 + 1 + 1)
    assert mu[fam.position(0b1111)] == pytest.approx(-2.0)


def test_mobius_matches_alternating_sum():
    for seed in range(3):
        w = random_full_instance(6, seed)
        mu = w.mobius()
        vals = w.values()
        for mask in range(1 << 6):
            direct = sum(
                (-1) ** (popcount(mask) - popcount(sub)) * vals[sub]
                for sub in iter_submasks(mask)
            )
            assert mu[mask] == pytest.approx(direct, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=10_000),
)
def test_roundtrip_full(n, seed):
    w = random_full_instance(n, seed)
    back = zeta_transform(w.mobius(), n=n)
    assert np.max(np.abs(back.values() - w.values())) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_roundtrip_family(seed):
    w = random_family_instance(6, seed)
    back = zeta_transform(w.mobius(), family=w.family)
    assert np.max(np.abs(back.values() - w.values())) <= 1e-12


def test_zeta_below_arbitrary_mask(fam4):
    # {1,2,3} is infeasible but its feasible content sums the three pairs
    assert fam4.zeta_below(0b0111) == pytest.approx(3.0)
    assert fam4.zeta_below(0b1000) == pytest.approx(2.0)
    assert fam4.zeta_below(0) == 0.0


def test_set_weight_invalidates_mobius(ex2):
    before = ex2.mobius()[0b111]
    ex2.set_weight(0b111, 1.7)
    assert ex2.mobius()[0b111] == pytest.approx(before + 1.0)


# -- costs --------------------------------------------------------------------


def test_cost_counts(fam4):
    costs = compute_costs(fam4.family)
    fam = fam4.family
    for i in (1, 2, 3):
        assert costs.of_position(fam.position(1 << (i - 1))) == 4
    assert costs.of_position(fam.position(0b1000)) == 2
    assert costs.of_position(fam.position(0b1111)) == 8


def test_cost_update_after_block(fam4):
    fam = fam4.family
    costs = update_costs_after_block(fam, 0b0011)
    # only {3} and {4} survive among nonempty members
    assert costs.of_position(fam.position(0b0100)) == 1
    assert costs.of_position(fam.position(0b1000)) == 1
    assert costs.of_position(fam.position(0b0011)) == 0
    fam.reset_active()
    assert compute_costs(fam).of_position(fam.position(0b1111)) == 8


# -- instance I/O -------------------------------------------------------------


def test_load_dump_roundtrip_full(ex2):
    again = load_instance(dump_instance(ex2))
    assert again.mode == "full"
    np.testing.assert_array_equal(again.values(), ex2.values())


def test_load_dump_roundtrip_family(fam4):
    payload = dump_instance(fam4)
    # closure members stay implicit in the serialized form
    assert payload["family"] == [[4], [1, 2], [1, 3], [2, 3], [1, 2, 3, 4]]
    again = load_instance(json.dumps(payload))
    assert again.mode == "family"
    assert again.family.members == fam4.family.members
    np.testing.assert_allclose(again.values(), fam4.values())


@pytest.mark.parametrize(
    "payload",
    [
        {"n": 3, "mode": "full"},
        {"n": 3, "mode": "full", "weights": [0, 1, 2]},
        {"n": 3, "mode": "full", "weights": [1] * 8},
        {"n": 3, "mode": "full", "weights": [0] * 8, "family": [[1, 2]]},
        {"n": 2, "mode": "family", "family": [[1, 2]], "weights": [1, 2]},
        {"n": 2, "mode": "family", "family": [[1, 2]], "weights": [-1.0]},
        {"n": 2, "mode": "bogus", "weights": [0, 0, 0, 0]},
        "not json {",
    ],
)
def test_malformed_instances_rejected(payload):
    with pytest.raises(InstanceFormatError):
        load_instance(payload)


def test_default_tolerance_env(monkeypatch):
    monkeypatch.delenv("NBP_TOL", raising=False)
    assert default_tolerance() == 1e-9
    monkeypatch.setenv("NBP_TOL", "1e-6")
    assert default_tolerance() == 1e-6
