"""Control weights, fusion, interpolation, and adaptive age control."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import toonfuse as tf
from toonfuse.errors import DimensionError, NumericError, ValidationError

from oracles import control_weights_oracle, fuse_oracle, lerp_oracle

# Weights drawn from a power-of-two grid are closed under w -> 1 - w in binary
# floats, which the convention-duality identity needs to hold bit-exactly.
dyadic = st.integers(0, 64).map(lambda k: k / 64.0)


# --------------------------------------------------------------------------
# make_control_weights
# --------------------------------------------------------------------------


def test_default_segment_values():
    cw = tf.make_control_weights(7, 0.5, 1.0, 18)
    assert cw.values.tolist() == [0.5] * 7 + [1.0] * 11


def test_empty_coarse_segment():
    cw = tf.make_control_weights(0, 0.3, 1.0, 18)
    assert cw.values.tolist() == [1.0] * 18


def test_coarse_segment_covers_all_layers():
    cw = tf.make_control_weights(18, 0.5, 1.0, 18)
    assert cw.values.tolist() == [0.5] * 18


@pytest.mark.parametrize(
    "kwargs, field",
    [
        (dict(m=-1), "m"),
        (dict(m=19), "m"),
        (dict(c=1.5), "c"),
        (dict(c=-0.1), "c"),
        (dict(s=2.0), "s"),
        (dict(L=0, m=0), "L"),
    ],
)
def test_out_of_range_fields_are_named(kwargs, field):
    base = dict(m=7, c=0.5, s=1.0, L=18)
    base.update(kwargs)
    with pytest.raises(ValidationError, match=field):
        tf.make_control_weights(**base)


@settings(max_examples=200, deadline=None)
@given(
    L=st.integers(1, 24),
    m=st.integers(0, 24),
    c=st.floats(0, 1, allow_nan=False),
    s=st.floats(0, 1, allow_nan=False),
)
def test_segment_structure_property(L, m, c, s):
    m = min(m, L)
    cw = tf.make_control_weights(m, c, s, L)
    assert cw.values.tolist() == control_weights_oracle(m, c, s, L)


# --------------------------------------------------------------------------
# fuse_latents
# --------------------------------------------------------------------------


def _pair(rng, L=4, D=3):
    return (
        tf.LatentWPlus(rng.standard_normal((L, D))),
        tf.LatentWPlus(rng.standard_normal((L, D))),
    )


def test_zero_weights_return_age_latent_exactly(rng):
    a, b = _pair(rng)
    cw = tf.make_control_weights(2, 0.0, 0.0, 4)
    fused = tf.fuse_latents(a, b, cw)
    assert np.array_equal(fused.rows, a.rows)


def test_midpoint_blend():
    a = tf.LatentWPlus(np.array([[1.0, 0.0, 0.0]]))
    b = tf.LatentWPlus(np.array([[0.0, 1.0, 0.0]]))
    cw = tf.ControlWeights(np.array([0.5]), m=1, c=0.5, s=0.5)
    fused = tf.fuse_latents(a, b, cw)
    assert fused.rows.tolist() == [[0.5, 0.5, 0.0]]


def test_fuse_matches_per_coordinate_oracle_bitwise(rng):
    a, b = _pair(rng)
    cw = tf.ControlWeights(np.array([0.2, 0.2, 0.9, 0.9]), m=2, c=0.2, s=0.9)
    fused = tf.fuse_latents(a, b, cw)
    want = fuse_oracle(a.rows, b.rows, cw.values, "extrinsic")
    assert np.array_equal(fused.rows, want)


def test_fuse_age_convention_matches_oracle_bitwise(rng):
    a, b = _pair(rng)
    cw = tf.ControlWeights(
        np.array([0.3, 0.3, 0.7, 0.7]), m=2, c=0.3, s=0.7, convention=tf.Convention.AGE
    )
    fused = tf.fuse_latents(a, b, cw)
    want = fuse_oracle(a.rows, b.rows, cw.values, "age")
    assert np.array_equal(fused.rows, want)


def test_fuse_shape_mismatch():
    a = tf.LatentWPlus(np.zeros((4, 3)))
    b = tf.LatentWPlus(np.zeros((4, 2)))
    cw = tf.make_control_weights(2, 0.5, 1.0, 4)
    with pytest.raises(DimensionError):
        tf.fuse_latents(a, b, cw)
    with pytest.raises(DimensionError):
        tf.fuse_latents(a, tf.LatentWPlus(np.zeros((4, 3))), tf.make_control_weights(2, 0.5, 1.0, 5))


@settings(max_examples=150, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    c=st.floats(0, 1, allow_nan=False),
    s=st.floats(0, 1, allow_nan=False),
    m=st.integers(0, 5),
)
def test_fuse_convexity_property(seed, c, s, m):
    rng = np.random.default_rng(seed)
    a, b = _pair(rng, L=5, D=4)
    cw = tf.make_control_weights(m, c, s, 5)
    fused = tf.fuse_latents(a, b, cw)
    lo = np.minimum(a.rows, b.rows)
    hi = np.maximum(a.rows, b.rows)
    eps = 1e-12 * np.maximum(1.0, np.abs(hi))
    assert np.all(fused.rows >= lo - eps)
    assert np.all(fused.rows <= hi + eps)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=dyadic, s=dyadic, m=st.integers(0, 6))
def test_convention_duality_bitwise_on_dyadic_weights(seed, c, s, m):
    rng = np.random.default_rng(seed)
    a, b = _pair(rng, L=6, D=3)
    age_cw = tf.make_control_weights(m, c, s, 6, convention=tf.Convention.AGE)
    ext_cw = tf.make_control_weights(m, 1.0 - c, 1.0 - s, 6, convention=tf.Convention.EXTRINSIC)
    assert np.array_equal(
        tf.fuse_latents(a, b, age_cw).rows, tf.fuse_latents(a, b, ext_cw).rows
    )


def test_degradation_boundaries_bit_exact(rng):
    a, b = _pair(rng, L=6, D=5)
    zero = tf.make_control_weights(3, 0.0, 0.0, 6)
    one = tf.make_control_weights(3, 1.0, 1.0, 6)
    assert np.array_equal(tf.fuse_latents(a, b, zero).rows, a.rows)
    assert np.array_equal(tf.fuse_latents(a, b, one).rows, b.rows)


def test_fused_distance_to_extrinsic_nondecreasing_in_m(rng):
    a, b = _pair(rng, L=8, D=6)
    dists = []
    for m in range(0, 9):
        cw = tf.make_control_weights(m, 0.5, 1.0, 8)
        fused = tf.fuse_latents(a, b, cw)
        dists.append(float(np.linalg.norm(fused.rows - b.rows)))
    assert all(dists[i + 1] >= dists[i] - 1e-12 for i in range(len(dists) - 1))


# --------------------------------------------------------------------------
# lerp_latents
# --------------------------------------------------------------------------


def test_lerp_endpoints_exact(rng):
    a, b = _pair(rng)
    assert np.array_equal(tf.lerp_latents(a, b, 0.0).rows, a.rows)
    assert np.array_equal(tf.lerp_latents(a, b, 1.0).rows, b.rows)


def test_lerp_matches_elementwise_oracle(rng):
    a = tf.LatentWPlus(rng.standard_normal((2, 2)))
    b = tf.LatentWPlus(rng.standard_normal((2, 2)))
    got = tf.lerp_latents(a, b, 0.25)
    assert np.array_equal(got.rows, lerp_oracle(a.rows, b.rows, 0.25))


def test_lerp_validates_inputs(rng):
    a, b = _pair(rng)
    with pytest.raises(ValidationError):
        tf.lerp_latents(a, b, 1.5)
    with pytest.raises(DimensionError):
        tf.lerp_latents(a, tf.LatentWPlus(np.zeros((5, 3))), 0.5)
    with pytest.raises(ValidationError):
        tf.lerp_latents(a, tf.LatentZPlus(a.rows), 0.5)


def test_lerp_preserves_type(rng):
    za = tf.LatentZPlus(rng.standard_normal((3, 4)))
    zb = tf.LatentZPlus(rng.standard_normal((3, 4)))
    assert isinstance(tf.lerp_latents(za, zb, 0.5), tf.LatentZPlus)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), t=st.floats(0, 1, allow_nan=False))
def test_lerp_of_equal_inputs_is_identity(seed, t):
    rng = np.random.default_rng(seed)
    a = tf.LatentWPlus(rng.standard_normal((3, 3)))
    got = tf.lerp_latents(a, tf.LatentWPlus(a.rows), t)
    np.testing.assert_allclose(got.rows, a.rows, rtol=0, atol=1e-15)


# --------------------------------------------------------------------------
# adaptive_target_age
# --------------------------------------------------------------------------

# (age, m, c) -> expected clamped output of the inverse-mean rescale.
ADAPTIVE_TABLE = [
    (40.0, 7, 1.0, 40.0),
    (40.0, 7, 0.5, 80.0),
    (55.0, 7, 0.5, 100.0),  # raw 110 clamps to the age-domain ceiling
    (10.0, 7, 0.25, 40.0),
    (10.0, 3, 0.1, 100.0),  # raw 100.000000000000014 clamps back
    (25.0, 5, 0.5, 50.0),
    (0.0, 7, 0.5, 0.0),
    (100.0, 7, 1.0, 100.0),
    (12.5, 4, 0.125, 100.0),
    (30.0, 2, 0.75, 40.0),
    (18.0, 6, 0.9, 20.0),
    (64.0, 8, 0.8, 80.0),
]


@pytest.mark.parametrize("age,m,c,expected", ADAPTIVE_TABLE)
def test_adaptive_age_table(age, m, c, expected):
    cw = tf.make_control_weights(m, c, 1.0, 18)
    got = tf.adaptive_target_age(age, cw)
    assert got.age == pytest.approx(expected, abs=1e-9)


def test_adaptive_reports_raw_value():
    cw = tf.make_control_weights(7, 0.5, 1.0, 18)
    assert tf.adaptive_target_age_raw(55.0, cw) == pytest.approx(110.0)
    assert tf.adaptive_target_age(55.0, cw).age == 100.0


def test_adaptive_identity_on_unit_weights():
    cw = tf.make_control_weights(7, 1.0, 1.0, 18)
    for age in np.linspace(0.0, 100.0, 11):
        assert tf.adaptive_target_age(age, cw).age == age


def test_adaptive_rejects_degenerate_scale():
    with pytest.raises(NumericError):
        tf.adaptive_target_age(40.0, tf.make_control_weights(0, 0.5, 1.0, 18))
    with pytest.raises(NumericError):
        tf.adaptive_target_age(40.0, tf.make_control_weights(7, 0.0, 1.0, 18))


# --------------------------------------------------------------------------
# domain types
# --------------------------------------------------------------------------


def test_age_value_range():
    with pytest.raises(ValidationError):
        tf.AgeValue(101.0)
    with pytest.raises(ValidationError):
        tf.AgeValue(-0.5)
    assert tf.AgeValue(0.0).age == 0.0
    assert tf.AgeValue(100).age == 100.0


def test_latents_reject_non_finite():
    with pytest.raises(ValidationError):
        tf.LatentWPlus(np.array([[np.nan, 0.0]]))
    with pytest.raises(ValidationError):
        tf.LatentZPlus(np.array([[np.inf, 0.0]]))


def test_latent_rows_are_immutable(rng):
    w = tf.LatentWPlus(rng.standard_normal((2, 2)))
    with pytest.raises(ValueError):
        w.rows[0, 0] = 5.0


def test_control_weights_reject_out_of_range_values():
    with pytest.raises(ValidationError):
        tf.ControlWeights(np.array([0.5, 1.2]), m=1, c=0.5, s=1.2)


def test_latent_addition_shape_checked(rng):
    a = tf.LatentWPlus(rng.standard_normal((2, 3)))
    with pytest.raises(DimensionError):
        a + tf.LatentWPlus(rng.standard_normal((3, 3)))
    summed = a + a
    assert np.array_equal(summed.rows, a.rows * 2)


def test_default_m_rule():
    assert tf.default_m(18) == 7
    assert tf.default_m(10, coarse_layers=8) == 8
    assert tf.default_m(6, coarse_layers=6) == 6
    assert tf.default_m(4, coarse_layers=8) == 4
