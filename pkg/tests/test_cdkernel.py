import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparsejacobi.cdkernel import (
    KernelQuery,
    cd_kernel,
    cd_kernel_direct,
    constantA_kernel,
    kernel_grid,
    kernel_ratio,
    universality_error,
)
from sparsejacobi.chebyshev import scaled_sine_limit
from sparsejacobi.errors import ConfluentNonReal, OutsideBulkError
from sparsejacobi.jacobi import JacobiParams, Rule, SparseSpec, free_params

FREE = free_params()
LATTICE = [(a, b) for a in np.linspace(-2, 2, 11) for b in np.linspace(-2, 2, 11)]


def random_params(rng, max_sites=5, n_max=2000):
    k = int(rng.integers(0, max_sites + 1))
    sites = np.sort(rng.choice(np.arange(2, n_max), size=k, replace=False))
    return JacobiParams(SparseSpec(Rule.explicit(rng.uniform(-1, 1, k)), tuple(int(s) for s in sites)))


def test_query_validation():
    with pytest.raises(ValueError):
        KernelQuery(0.0, 0, 0, 0)
    with pytest.raises(ValueError):
        KernelQuery(0.0, 2j, 0, 10)
    with pytest.raises(OutsideBulkError):
        KernelQuery(1.9, 0, 2, 10)


def test_order_one_kernel_is_one():
    params = JacobiParams(SparseSpec(Rule.explicit([0.5]), (2,)))
    for q in (KernelQuery(0.3, 0, 0, 1), KernelQuery(0.1, 0.2, -0.5, 1)):
        assert cd_kernel(q, params) == pytest.approx(1.0)
        assert cd_kernel_direct(q, params) == 1.0


def test_small_free_values():
    assert cd_kernel(KernelQuery(0.0, 0, 0, 5), FREE) == pytest.approx(3.0)
    assert cd_kernel_direct(KernelQuery(0.0, 0, 0, 3), FREE) == pytest.approx(2.0)


def test_cd_formula_matches_direct_sum():
    rng = np.random.default_rng(3)
    params = random_params(rng)
    q = KernelQuery(0.4, 0.3, -0.9, 1500)
    ref = cd_kernel_direct(q, params)
    for method in ("jump", "recurrence"):
        assert abs(cd_kernel(q, params, method=method) - ref) <= 1e-9 * abs(ref)


def test_compensated_routes():
    params = random_params(np.random.default_rng(11))
    q = KernelQuery(-0.7, 1.0, 0.2, 800)
    ref = cd_kernel_direct(q, params, compensated=True)
    assert cd_kernel(q, params, compensated=True) == pytest.approx(ref, rel=1e-12)
    assert cd_kernel_direct(q, params) == pytest.approx(ref, rel=1e-10)


def test_near_confluent_pair_uses_diagonal():
    params = random_params(np.random.default_rng(5))
    q = KernelQuery(0.2, 0.0, 1e-7, 700)
    near = cd_kernel(q, params)
    diag = cd_kernel(KernelQuery(0.2, 0.0, 0.0, 700), params)
    assert near == pytest.approx(diag, rel=1e-8)


def test_confluent_complex_without_derivative_refused():
    with pytest.raises(ConfluentNonReal):
        cd_kernel(KernelQuery(0.2, 0.5j, 0.5j, 40), FREE, derivative=False)


def test_hermitian_symmetry():
    params = random_params(np.random.default_rng(8))
    n = 400
    q = KernelQuery(0.3, 0.4 + 0.5j, -0.2 + 0.1j, n)
    k1 = cd_kernel(q, params)
    k2 = cd_kernel(KernelQuery(0.3, (-0.2 + 0.1j).conjugate(), (0.4 + 0.5j).conjugate(), n), params)
    assert abs(k1 - k2.conjugate()) <= 1e-12 * abs(k1)


def test_ratio_examples():
    assert kernel_ratio(KernelQuery(0.3, 0, 0, 100), FREE).ratio == 1
    v = kernel_ratio(KernelQuery(0.0, 0, 1, 10 ** 4), FREE)
    assert abs(v.ratio - math.sin(0.5) / 0.5) <= 2e-3
    swapped = kernel_ratio(KernelQuery(0.0, 1, 0, 10 ** 4), FREE)
    assert swapped.ratio == pytest.approx(v.ratio, rel=1e-12)


def test_ratio_invariant_under_rescaling():
    g = kernel_grid(0.1, 300, [(0.0, 1.0)], FREE)
    c = 3.0
    assert (c * c * g.K[0]) / (c * c * g.K_diag) == g.ratio[0]


def test_diagonal_positive_on_perturbed_grids():
    rng = np.random.default_rng(9)
    for _ in range(10):
        params = random_params(rng)
        for x in (-1.5, 0.0, 1.2):
            g = kernel_grid(x, int(rng.integers(2, 3000)), [(a, a) for a in (-1.0, 0.0, 0.5)], params)
            assert g.K_diag.real > 0 and np.all(g.K.real > 0)


def test_constant_coefficient_kernel():
    q = KernelQuery(0.3, 0.5, -0.25, 60)
    assert constantA_kernel((1, 0), q) == pytest.approx(cd_kernel(q, FREE), rel=1e-10)
    assert constantA_kernel((0, 1), KernelQuery(0.0, 0, 0, 2)) == pytest.approx(1.0)
    val = constantA_kernel((1, 1), KernelQuery(0.5, 0, 1, 10 ** 5), normalize=True)
    assert abs(val - scaled_sine_limit(0.5, 0, 1)) <= 5e-3


def test_universality_error_examples():
    assert universality_error(0.3, 1000, [(0.0, 0.0)], FREE) == 0.0
    big = universality_error(0.0, 10 ** 3, LATTICE, FREE)
    small = universality_error(0.0, 10 ** 5, LATTICE, FREE)
    assert small <= 5e-3 and small < big


def test_free_diagonal_law():
    for n in (10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6):
        k = kernel_grid(0.0, n, [(0.0, 0.0)], FREE).K_diag.real
        assert abs(k / n - 0.5) <= 1 / n


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-1.5, 1.5), st.floats(-3, 3), st.floats(-3, 3))
def test_kernel_symmetric_in_offsets(seed, x, a, b):
    params = random_params(np.random.default_rng(seed))
    n = 500
    k1 = cd_kernel(KernelQuery(x, a, b, n), params)
    k2 = cd_kernel(KernelQuery(x, b, a, n), params)
    assert abs(k1 - k2) <= 1e-10 * max(1.0, abs(k1))
