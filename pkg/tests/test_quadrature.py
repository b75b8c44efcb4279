import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wavekin import GaussianComponent, GaussianSuperposition, GridSpec, Massless, auto_grid, converge, integrate
from wavekin.errors import DomainError, UsageError
from wavekin.quadrature import pairwise_sum


def test_constant_integrates_exactly():
    spec = GridSpec((0, 0, 0), (1, 1, 1), (9, 9, 9))
    assert integrate(spec, lambda s: np.ones(s.shape)) == 1.0
    assert integrate(spec, lambda s: 1.0) == 1.0


def test_odd_integrand_vanishes():
    spec = GridSpec((-3, -3, -3), (3, 3, 3), (33, 33, 33))
    val = integrate(spec, lambda s: s.kx * np.exp(-(s.kx**2 + s.ky**2 + s.kz**2)))
    assert abs(val) < 1e-15


def test_gaussian_integral():
    spec = GridSpec((-6, -6, -6), (6, 6, 6), (64, 64, 64))
    val = integrate(spec, lambda s: np.exp(-(s.kx**2 + s.ky**2 + s.kz**2)))
    assert abs(val - math.pi**1.5) < 1e-9


def test_vector_and_complex_integrands():
    spec = GridSpec((-6, -6, -6), (6, 6, 6), (48, 48, 48))

    def f(s):
        g = np.exp(-(s.kx**2 + s.ky**2 + s.kz**2))
        return np.stack(np.broadcast_arrays(g, 1j * g, s.kx * g))

    val = integrate(spec, f)
    assert val.shape == (3,)
    np.testing.assert_allclose(val, [math.pi**1.5, 1j * math.pi**1.5, 0], atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=8, max_size=8), st.integers(8, 20))
def test_multilinear_exactness(coef, n):
    a = np.array(coef).reshape(2, 2, 2)
    lo, hi = np.array([-0.7, 0.2, -2.0]), np.array([1.3, 0.9, 0.5])
    spec = GridSpec(tuple(lo), tuple(hi), (n, n + 1, n + 3))

    def f(s):
        return sum(a[i, j, k] * s.kx**i * s.ky**j * s.kz**k for i in (0, 1) for j in (0, 1) for k in (0, 1))

    # exact integral of x^i y^j z^k over the box
    m = [[hi[d] - lo[d], (hi[d] ** 2 - lo[d] ** 2) / 2] for d in range(3)]
    exact = sum(a[i, j, k] * m[0][i] * m[1][j] * m[2][k] for i in (0, 1) for j in (0, 1) for k in (0, 1))
    assert integrate(spec, f) == pytest.approx(exact, abs=1e-13 * max(1.0, np.abs(a).sum()))


def test_non_finite_names_the_node():
    spec = GridSpec((0, 0, 0), (1, 1, 1), (9, 9, 9))

    def f(s):
        out = np.ones(s.shape)
        out[3, 4, 5] = np.nan
        return out

    with pytest.raises(DomainError, match=r"node \(3, 4, 5\)"):
        integrate(spec, f)


def test_determinism_across_threads():
    spec = GridSpec((-4, -4, -4), (4, 4, 4), (80, 71, 66))
    assert len(spec.slabs()) > 2

    def f(s):
        r2 = s.kx**2 + s.ky**2 + s.kz**2
        return np.exp(-r2) * (1 + np.sin(3 * s.kx * s.ky)) + 1e-3 * s.kz

    ref = integrate(spec, f)
    for threads in (1, 2, 4, 7):
        assert integrate(spec, f, threads=threads) == ref


def test_pairwise_sum_shape_independent_of_values():
    x = np.random.default_rng(1).normal(size=(3, 1001))
    np.testing.assert_allclose(pairwise_sum(x), x.sum(axis=-1), rtol=1e-13)
    assert pairwise_sum(np.array([])) == 0.0


def test_auto_grid_examples(fig1):
    spec = auto_grid(GaussianSuperposition((GaussianComponent(1, (1, 0, 0), 0.1),)), 6, 96)
    np.testing.assert_allclose(spec.kmin, (0.4, -0.6, -0.6), rtol=1e-15)
    np.testing.assert_allclose(spec.kmax, (1.6, 0.6, 0.6), rtol=1e-15)
    assert spec.n == (96, 96, 96)
    spec = auto_grid(fig1, 6, 40)
    for c in fig1.components:
        assert np.all(np.array(spec.kmin) <= np.array(c.k0) - 6 * c.delta + 1e-15)
        assert np.all(np.array(spec.kmax) >= np.array(c.k0) + 6 * c.delta - 1e-15)
    with pytest.raises(UsageError):
        auto_grid(fig1, 3, 96)


def test_converge_norm(single, massless):
    rep = converge(single, massless, "norm", tol=1e-8, points_per_axis=17)
    assert rep.converged
    assert rep.value == pytest.approx(1.0, abs=1e-8)
    assert rep.error_estimate == rep.differences()[-1]
    ns = [g.n[0] for g, _ in rep.levels]
    assert ns == [17 * 2**i - (2**i - 1) for i in range(len(ns))]


def test_converge_mean_momentum(single, massless):
    rep = converge(single, massless, "p_mean", tol=1e-8, points_per_axis=17)
    assert rep.converged
    np.testing.assert_allclose(rep.value, (1, 0, 0), atol=1e-8)


def test_converge_cap_hit_is_flagged(single, massless):
    rep = converge(single, massless, "E_mean", tol=1e-300, points_per_axis=9, max_n=33)
    assert not rep.converged
    assert [g.n[0] for g, _ in rep.levels] == [9, 17, 33]
    assert rep.error_estimate > 0
    assert rep.to_dict()["converged"] is False


def test_converge_rejects_bad_arguments(single, massless):
    with pytest.raises(UsageError):
        converge(single, massless, "norm", tol=0.0)
    with pytest.raises(UsageError):
        converge(single, massless, "norm", points_per_axis=300)


def test_converge_custom_callable(single):
    calls = []

    def obs(field, disp, spec, t):
        calls.append(spec.n[0])
        return 1.0

    rep = converge(single, Massless(), obs, tol=1e-8, points_per_axis=9)
    assert rep.converged and calls == [9, 17] and rep.observable == "obs"


def test_converge_unknown_observable(single, massless):
    with pytest.raises(UsageError, match="unknown observable"):
        converge(single, massless, "spin", tol=1e-8)
