import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ostrovsky import _accel, kernels

PAIRS = ["etd_stage", "etd_stage_c", "etd_combine", "cumulative_trapezoid",
         "periodic_backward_sweep", "splitmix64_uniform"]


def test_public_names_follow_the_flag():
    suffix = "_numba" if _accel.USE_NUMBA else "_numpy"
    for name in PAIRS:
        assert getattr(kernels, name) is getattr(kernels, name + suffix)
    assert _accel.backend_name() in ("numba", "numpy")


def test_splitmix_reference_vector():
    # first outputs of SplitMix64 seeded with 0 (reference implementation)
    reference = [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]
    expected = np.array([(r >> 11) * 2.0 ** -53 for r in reference])
    for fn in (kernels.splitmix64_uniform_numba, kernels.splitmix64_uniform_numpy):
        np.testing.assert_array_equal(fn(np.uint64(0), 3), expected)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 64 - 1), count=st.integers(0, 50))
def test_splitmix_backends_bit_identical(seed, count):
    a = kernels.splitmix64_uniform_numba(np.uint64(seed), count)
    b = kernels.splitmix64_uniform_numpy(np.uint64(seed), count)
    np.testing.assert_array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))


def _complex(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_stage_kernels_agree():
    rng = np.random.default_rng(1)
    a = [_complex(rng, 33) for _ in range(9)]
    np.testing.assert_allclose(kernels.etd_stage_numba(*a[:4]), kernels.etd_stage_numpy(*a[:4]),
                               rtol=1e-15)
    np.testing.assert_allclose(kernels.etd_stage_c_numba(*a[:5]),
                               kernels.etd_stage_c_numpy(*a[:5]), rtol=1e-15)
    np.testing.assert_allclose(kernels.etd_combine_numba(*a), kernels.etd_combine_numpy(*a),
                               rtol=1e-14)
    e2, v, q, n = a[:4]
    np.testing.assert_allclose(kernels.etd_stage_numpy(e2, v, q, n), e2 * v + q * n)


def test_cumulative_trapezoid():
    u = np.array([1.0, 3.0, 2.0, 0.0])
    expected = np.array([0.0, 1.0, 2.25, 2.75])
    for fn in (kernels.cumulative_trapezoid_numba, kernels.cumulative_trapezoid_numpy):
        np.testing.assert_allclose(fn(u, 0.5), expected)


@pytest.mark.parametrize("decay", [0.0, 0.3, 0.95])
def test_periodic_sweep_against_dense_solve(decay):
    # p_i - decay * p_{i+1} = s_i with p_N = p_0
    rng = np.random.default_rng(5)
    s = rng.standard_normal(12)
    A = np.eye(12) - decay * np.roll(np.eye(12), 1, axis=1)
    expected = np.linalg.solve(A, s)
    for fn in (kernels.periodic_backward_sweep_numba, kernels.periodic_backward_sweep_numpy):
        np.testing.assert_allclose(fn(s, decay), expected, rtol=1e-12, atol=1e-14)
