"""Membership profiles, worth, gradients, induced partitions."""

from __future__ import annotations

import numpy as np
import pytest

from nbpack import (
    InstanceFormatError,
    MembershipProfile,
    PartitionProfile,
    conditional_weight,
    derivative,
    gradient,
    induced_partition,
    worth,
    worth_decomposition,
)
from nbpack.cover import chosen_groups, is_exact_support

from conftest import (
    family_instance_4,
    random_full_instance,
    random_membership_rows,
    random_vertex_choice,
)


def _pinned_pair_profile(ex2, q3_weights):
    """Rows 1,2 on {1,2}; row 3 spread over its four containing sets."""
    profile = MembershipProfile.from_vertices(ex2, {1: 0b011, 2: 0b011, 3: 0b100})
    raw = np.asarray(q3_weights, dtype=float)
    row = raw / raw.sum()
    matrix = profile.matrix.copy()
    matrix[2] = 0.0
    for mask, val in zip((0b100, 0b101, 0b110, 0b111), row):
        matrix[2, mask] = val
    return MembershipProfile(3, matrix)


# -- worth --------------------------------------------------------------------


def test_worth_with_pair_pinned_is_one(ex2):
    # once 1 and 2 sit on {1,2}, element 3 contributes mu({3}) wherever it is
    rng = np.random.default_rng(0)
    for _ in range(5):
        profile = _pinned_pair_profile(ex2, rng.random(4) + 1e-6)
        assert worth(profile, ex2) == pytest.approx(1.0, abs=1e-9)


def test_worth_at_uniform(ex2):
    assert worth(MembershipProfile.uniform(ex2), ex2) == pytest.approx(0.65625)


def test_worth_of_partitions(ex2):
    best = PartitionProfile(3, (0b011, 0b100))
    assert worth(best.to_membership(ex2), ex2) == pytest.approx(1.0)
    assert best.weight_total(ex2) == pytest.approx(1.0)
    finest = PartitionProfile(3, (0b001, 0b010, 0b100))
    assert finest.weight_total(ex2) == pytest.approx(0.6)


def test_worth_nonexact_family_profile(fam4):
    profile = MembershipProfile.from_vertices(
        fam4, {1: 0b1111, 2: 0b1111, 3: 0b1111, 4: 0b1000}
    )
    assert worth(profile, fam4) == pytest.approx(5.0)
    assert not is_exact_support(profile)


def test_worth_rejects_mismatched_profile(ex2, fam4):
    with pytest.raises(InstanceFormatError):
        worth(MembershipProfile.uniform(fam4), ex2)


# -- gradients ----------------------------------------------------------------


def test_conditional_weight_with_pair_pinned(ex2):
    profile = _pinned_pair_profile(ex2, [1, 1, 1, 1])
    row = conditional_weight(profile, ex2, 3)
    for mask in (0b100, 0b101, 0b110, 0b111):
        assert row.value(mask) == pytest.approx(0.2)


def test_conditional_weight_at_uniform(ex2):
    row = conditional_weight(MembershipProfile.uniform(ex2), ex2, 1)
    # w_{q_{-1}}({1}) = mu({1}); larger sets mix in the partner masses
    assert row.value(0b001) == pytest.approx(0.2)
    assert row.value(0b011) == pytest.approx(0.2 + 0.25 * 0.4)


def test_derivative_equals_conditional_weight():
    rng = np.random.default_rng(3)
    for seed in range(20):
        w = random_full_instance(4, seed)
        profile = MembershipProfile(4, random_membership_rows(w, rng))
        i = int(rng.integers(1, 5))
        row = conditional_weight(profile, w, i)
        for mask in row.masks:
            assert derivative(profile, w, i, int(mask)) == pytest.approx(
                row.value(int(mask)), abs=1e-9
            )


def test_gradient_matrix_matches_rows(fam4):
    profile = MembershipProfile.uniform(fam4)
    grad = gradient(profile, fam4)
    for i in (1, 2, 3, 4):
        row = conditional_weight(profile, fam4, i)
        for mask in row.masks:
            col = profile.column_of(int(mask))
            assert grad[i - 1, col] == pytest.approx(row.value(int(mask)))


def test_worth_decomposition(ex2):
    profile = _pinned_pair_profile(ex2, [1, 1, 1, 1])
    own, rest = worth_decomposition(profile, ex2, 3)
    assert own == pytest.approx(0.2)
    assert rest == pytest.approx(0.8)
    assert own + rest == pytest.approx(worth(profile, ex2))


def test_decomposition_sums_to_worth_random():
    rng = np.random.default_rng(11)
    for seed in range(10):
        w = random_full_instance(5, seed)
        profile = MembershipProfile(5, random_membership_rows(w, rng))
        total = worth(profile, w)
        for i in range(1, 6):
            own, rest = worth_decomposition(profile, w, i)
            assert own + rest == pytest.approx(total, abs=1e-9)


def test_worth_is_multilinear_per_row():
    rng = np.random.default_rng(5)
    w = random_full_instance(4, 1)
    base = random_membership_rows(w, rng)
    alt_row = random_membership_rows(w, rng)[2]
    t = 0.37
    mixed = base.copy()
    mixed[2] = t * base[2] + (1 - t) * alt_row
    swapped = base.copy()
    swapped[2] = alt_row
    lhs = worth(MembershipProfile(4, mixed), w)
    rhs = t * worth(MembershipProfile(4, base), w) + (1 - t) * worth(
        MembershipProfile(4, swapped), w
    )
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_finite_difference_matches_gradient():
    eps = 1e-5
    rng = np.random.default_rng(9)
    for seed in range(10):
        w = random_full_instance(4, 100 + seed)
        matrix = random_membership_rows(w, rng)
        profile = MembershipProfile(4, matrix)
        i = int(rng.integers(1, 5))
        row = conditional_weight(profile, w, i)
        a, b = rng.choice(row.masks, size=2, replace=False)
        shifted = matrix.copy()
        shifted[i - 1, int(a)] += eps
        shifted[i - 1, int(b)] -= eps
        fd = (worth(MembershipProfile(4, shifted, validate=False), w, validate=False)
              - worth(profile, w)) / eps
        assert fd == pytest.approx(row.value(int(a)) - row.value(int(b)), abs=1e-6)


# -- vertex structure ---------------------------------------------------------


def test_vertex_and_chosen_sets(ex2):
    profile = MembershipProfile.from_vertices(ex2, {1: 0b011, 2: 0b011, 3: 0b100})
    assert profile.is_vertex()
    assert profile.chosen_sets() == {1: 0b011, 2: 0b011, 3: 0b100}
    assert not MembershipProfile.uniform(ex2).is_vertex()


def test_exact_support_examples(ex2):
    assert is_exact_support(MembershipProfile.uniform(ex2))
    partial = _pinned_pair_profile(ex2, [1, 1, 1, 1])
    # column {1,3} carries mass from 3 but none from 1
    assert not is_exact_support(partial)


def test_induced_partition_canonical(ex2):
    profile = MembershipProfile.from_vertices(ex2, {1: 0b011, 2: 0b011, 3: 0b100})
    assert induced_partition(profile).blocks == (0b011, 0b100)


def test_induced_partition_from_overshoot(ex2):
    # both 1 and 2 sit on N while 3 is alone: groups are {1,2} and {3}
    profile = MembershipProfile.from_vertices(ex2, {1: 0b111, 2: 0b111, 3: 0b100})
    assert induced_partition(profile).blocks == (0b011, 0b100)
    assert chosen_groups(profile) == {0b111: 0b011, 0b100: 0b100}


def test_induced_partition_requires_vertex(ex2):
    with pytest.raises(ValueError):
        induced_partition(MembershipProfile.uniform(ex2))


def test_random_vertex_worth_matches_group_formula():
    rng = np.random.default_rng(21)
    for seed in range(10):
        w = random_full_instance(5, 200 + seed)
        chosen = random_vertex_choice(w, rng)
        profile = MembershipProfile.from_vertices(w, chosen)
        groups = chosen_groups(profile)
        assert worth(profile, w) == pytest.approx(
            sum(w.zeta_below(g) for g in groups.values()), abs=1e-9
        )


# -- partition profiles -------------------------------------------------------


def test_partition_validation():
    with pytest.raises(ValueError):
        PartitionProfile(3, (0b011, 0b110))  # overlap on element 2
    with pytest.raises(ValueError):
        PartitionProfile(3, (0b011,))  # element 3 uncovered
    with pytest.raises(ValueError):
        PartitionProfile(3, (0b011, 0b100, 0))  # empty block


def test_partition_canonical_order():
    p = PartitionProfile(3, (0b100, 0b011))
    assert p.blocks == (0b011, 0b100)
    assert p == PartitionProfile(3, (0b011, 0b100))


def test_partition_membership_roundtrip(fam4):
    p = PartitionProfile(4, (0b0011, 0b0100, 0b1000))
    back = induced_partition(p.to_membership(fam4))
    assert back == p


# -- profile JSON -------------------------------------------------------------


def test_profile_json_roundtrip(ex2):
    profile = MembershipProfile.from_vertices(ex2, {1: 0b011, 2: 0b011, 3: 0b100})
    again = MembershipProfile.from_json(profile.to_json(), ex2)
    np.testing.assert_allclose(again.matrix, profile.matrix)


def test_profile_json_renormalizes_small_drift(ex2):
    payload = {
        "rows": [
            {"element": 1, "memberships": [{"set": [1, 2], "mass": 1.0 + 5e-7}]},
            {"element": 2, "memberships": [{"set": [1, 2], "mass": 1.0}]},
            {"element": 3, "memberships": [{"set": [3], "mass": 1.0}]},
        ]
    }
    profile = MembershipProfile.from_json(payload, ex2)
    assert profile.matrix[0, 0b011] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "rows",
    [
        # drift beyond the renormalization slack
        [{"element": 1, "memberships": [{"set": [1, 2], "mass": 1.01}]},
         {"element": 2, "memberships": [{"set": [1, 2], "mass": 1.0}]},
         {"element": 3, "memberships": [{"set": [3], "mass": 1.0}]}],
        # element outside its own set
        [{"element": 1, "memberships": [{"set": [2, 3], "mass": 1.0}]},
         {"element": 2, "memberships": [{"set": [1, 2], "mass": 1.0}]},
         {"element": 3, "memberships": [{"set": [3], "mass": 1.0}]}],
        # duplicate membership entries
        [{"element": 1, "memberships": [{"set": [1, 2], "mass": 0.5},
                                        {"set": [1, 2], "mass": 0.5}]},
         {"element": 2, "memberships": [{"set": [1, 2], "mass": 1.0}]},
         {"element": 3, "memberships": [{"set": [3], "mass": 1.0}]}],
        # wrong row count
        [{"element": 1, "memberships": [{"set": [1], "mass": 1.0}]}],
    ],
)
def test_profile_json_rejects_bad_rows(ex2, rows):
    with pytest.raises(InstanceFormatError):
        MembershipProfile.from_json({"rows": rows}, ex2)


def test_profile_json_rejects_infeasible_set(fam4):
    payload = {
        "rows": [
            {"element": 1, "memberships": [{"set": [1, 4], "mass": 1.0}]},
            {"element": 2, "memberships": [{"set": [2], "mass": 1.0}]},
            {"element": 3, "memberships": [{"set": [3], "mass": 1.0}]},
            {"element": 4, "memberships": [{"set": [4], "mass": 1.0}]},
        ]
    }
    with pytest.raises(InstanceFormatError):
        MembershipProfile.from_json(payload, fam4)
