import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irs_crlb.errors import InvalidArgumentError, SingularFimError
from irs_crlb.fisher import (
    FimBlocks,
    assemble_full_fim,
    crlb,
    equilibrated_inverse,
    fim_alpha_alpha,
    fim_alpha_nu,
    fim_blocks,
    fim_from_h,
    fim_nu_nu,
    fim_oracle,
    no_irs_fim,
    scene_mean_fn,
    split_full_fim,
)
from irs_crlb.geometry import ChannelSet
from irs_crlb.signal_model import NoiseModel, RadarParams, TargetParams, sensing_matrix, sensing_matrix_derivative
from irs_crlb.verify import random_scene, relative_entry_error

seeds = st.integers(0, 2**32 - 1)


def test_no_irs_reflectivity_block_example():
    f_aa0, _ = no_irs_fim(RadarParams(8), 1.0, 1.0, 0.13, 1.0)
    np.testing.assert_allclose(f_aa0, 16 * np.eye(2), atol=1e-12)


def test_no_irs_doppler_block_example():
    _, f_nn0 = no_irs_fim(RadarParams(4), 1.0, 1.0, -0.2, 1.0)
    assert f_nn0 == pytest.approx(2 * (0 + 1 + 4 + 9), abs=1e-12)


def test_no_irs_closed_forms_match_general_blocks():
    radar = RadarParams(16)
    target = TargetParams([0.7 - 0.2j], [0.11])
    blocks = fim_blocks(radar, ChannelSet(3e-2), target, 0.4)
    f_aa0, f_nn0 = no_irs_fim(radar, 3e-2, target.alpha[0], 0.11, 0.4)
    np.testing.assert_allclose(blocks.f_aa, f_aa0, rtol=1e-12)
    assert blocks.f_nn[0, 0] == pytest.approx(f_nn0, rel=1e-12)


def test_single_path_cross_term_is_not_zero():
    # a = ones, a' = j*i, so A^H A' = j N(N-1)/2
    blocks = fim_blocks(RadarParams(4), ChannelSet(1.0), TargetParams([1.0], [0.0]), 1.0)
    np.testing.assert_allclose(blocks.f_an, [[0.0], [12.0]], atol=1e-12)


def test_covariance_scaling_divides_fim():
    rng = np.random.default_rng(0)
    radar, channels, target = random_scene(rng, 2, 16)
    r = np.diag(rng.uniform(0.5, 2.0, 16)).astype(complex)
    base = assemble_full_fim(fim_blocks(radar, channels, target, NoiseModel(covariance=r)))
    scaled = assemble_full_fim(fim_blocks(radar, channels, target, NoiseModel(covariance=3.0 * r)))
    np.testing.assert_allclose(scaled, base / 3.0, rtol=1e-12, atol=1e-14 * np.abs(base).max())


def test_zero_reflectivity_blocks_vanish():
    rng = np.random.default_rng(1)
    radar, channels, target = random_scene(rng, 2, 8)
    a = sensing_matrix(radar, channels, target.nu)
    a_dot = sensing_matrix_derivative(radar, channels, target.nu)
    zero = np.zeros(3)
    assert np.all(fim_alpha_nu(a, a_dot, 1.0, zero) == 0)
    assert np.all(fim_nu_nu(a_dot, 1.0, zero) == 0)
    assert np.abs(fim_alpha_alpha(a, 1.0)).max() > 0


def test_blocks_reject_nonpositive_noise():
    a = np.ones((4, 1), dtype=complex)
    with pytest.raises(InvalidArgumentError):
        fim_alpha_alpha(a, NoiseModel(sigma2=0.0))


@pytest.mark.parametrize("k, n", [(0, 8), (1, 8), (2, 16), (3, 16)])
def test_fim_matches_finite_difference_oracle(k, n):
    rng = np.random.default_rng(10 + k)
    radar, channels, target = random_scene(rng, k, n)
    analytic = assemble_full_fim(fim_blocks(radar, channels, target, 0.5))
    oracle = fim_oracle(scene_mean_fn(radar, channels), 0.5, target.zeta)
    assert relative_entry_error(analytic, oracle) < 1e-6


def test_fim_matches_oracle_with_colored_noise():
    rng = np.random.default_rng(12)
    radar, channels, target = random_scene(rng, 2, 12)
    b = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
    noise = NoiseModel(covariance=b @ b.conj().T / 12 + np.eye(12))
    analytic = assemble_full_fim(fim_blocks(radar, channels, target, noise))
    oracle = fim_oracle(scene_mean_fn(radar, channels), noise, target.zeta)
    assert relative_entry_error(analytic, oracle) < 1e-6


def test_oracle_exact_for_linear_mean():
    rng = np.random.default_rng(2)
    j = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    f = fim_oracle(lambda z: j @ z, 2.0, np.zeros(3), step=0.5)
    np.testing.assert_allclose(f, (j.conj().T @ j).real, atol=1e-12)


def test_oracle_error_shrinks_quadratically():
    rng = np.random.default_rng(3)
    radar, channels, target = random_scene(rng, 1, 16)
    exact = assemble_full_fim(fim_blocks(radar, channels, target, 1.0))
    mean = scene_mean_fn(radar, channels)
    e1 = np.abs(fim_oracle(mean, 1.0, target.zeta, step=1e-2) - exact).max()
    e2 = np.abs(fim_oracle(mean, 1.0, target.zeta, step=5e-3) - exact).max()
    assert 3.0 < e1 / e2 < 5.0


def test_oracle_rejects_bad_step():
    with pytest.raises(InvalidArgumentError):
        fim_oracle(lambda z: z, 1.0, np.zeros(2), step=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(8, 24), st.floats(0.05, 5.0), seeds)
def test_channel_form_matches_sensing_form(k, n, sigma2, seed):
    rng = np.random.default_rng(seed)
    radar, channels, target = random_scene(rng, k, n)
    ref = fim_blocks(radar, channels, target, sigma2)
    alt = fim_from_h(channels, radar, target.alpha, target.nu, sigma2)
    assert alt.f_an is None
    for a, b in ((alt.f_aa, ref.f_aa), (alt.f_nn, ref.f_nn)):
        assert np.abs(a - b).max() <= 1e-10 * np.abs(b).max()


def test_channel_form_rejects_nonpositive_noise():
    with pytest.raises(InvalidArgumentError):
        fim_from_h([1.0], RadarParams(4), [1.0], [0.0], 0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 3), seeds)
def test_full_fim_symmetric_psd(k, seed):
    rng = np.random.default_rng(seed)
    radar, channels, target = random_scene(rng, k, 16)
    f = assemble_full_fim(fim_blocks(radar, channels, target, 1.0))
    np.testing.assert_allclose(f, f.T, atol=1e-12 * np.abs(f).max())
    assert np.linalg.eigvalsh(f).min() >= -1e-10 * np.abs(f).max()


def test_block_round_trip():
    rng = np.random.default_rng(4)
    radar, channels, target = random_scene(rng, 2, 16)
    blocks = fim_blocks(radar, channels, target, 1.0)
    back = split_full_fim(assemble_full_fim(blocks))
    for a, b in zip((back.f_aa, back.f_an, back.f_nn), (blocks.f_aa, blocks.f_an, blocks.f_nn)):
        np.testing.assert_array_equal(a, b)


def test_assemble_rejects_bad_shapes():
    with pytest.raises(InvalidArgumentError):
        assemble_full_fim(FimBlocks(np.eye(4), np.zeros((4, 1)), np.eye(2)))


def test_crlb_of_scaled_identity():
    res = crlb(2 * np.eye(6))
    np.testing.assert_allclose(res.crlb, 0.5 * np.eye(6))
    assert res.trace_total == pytest.approx(3.0)
    assert res.trace_alpha_block == pytest.approx(2.0)
    assert res.trace_nu_block == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 3), seeds)
def test_surrogate_never_exceeds_trace(k, seed):
    rng = np.random.default_rng(seed)
    radar, channels, target = random_scene(rng, k, 16)
    res = crlb(assemble_full_fim(fim_blocks(radar, channels, target, 1.0)))
    assert res.surrogate <= res.trace_total * (1 + 1e-9)


def test_crlb_inverse_matches_explicit_inverse():
    rng = np.random.default_rng(5)
    radar, channels, target = random_scene(rng, 2, 16)
    f = assemble_full_fim(fim_blocks(radar, channels, target, 1.0))
    res = crlb(f)
    np.testing.assert_allclose(res.crlb @ f, np.eye(9), atol=1e-8)


def test_equilibrated_inverse_handles_wide_scales():
    d = np.diag([1e26, 1.0, 1e-20])
    inv, cond = equilibrated_inverse(d)
    np.testing.assert_allclose(np.diag(inv), [1e-26, 1.0, 1e20])
    assert cond == pytest.approx(1.0)


def test_equal_dopplers_make_fim_singular():
    radar = RadarParams(16)
    channels = ChannelSet(1.0, [1.0])
    target = TargetParams([1.0, 1.0], [0.2, 0.2])
    with pytest.raises(SingularFimError) as info:
        crlb(assemble_full_fim(fim_blocks(radar, channels, target, 1.0)))
    assert info.value.condition > 1e12
