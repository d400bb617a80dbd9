import math

import numpy as np
import pytest
from scipy import integrate

from quasiortho import codeset as cs
from quasiortho.bounds import (
    alpha_coefficient,
    exact_pe_m2_biortho,
    exact_pe_m2_ortho,
    kappa_vector,
    pair_geometry,
    pub_at_zero,
    pub_of_kappa,
    rho_from_kappa,
    taylor_sensitivity,
    ub_quasi_biortho,
    ub_quasi_ortho,
)
from quasiortho.closed_form import f_std, phi, q_func, ser_biorthogonal
from quasiortho.codeset import Mode
from quasiortho.errors import ValidationError
from quasiortho.geometry import qr_nonneg
from quasiortho.link_sim import simulate_ser
from quasiortho.mc_ser import estimate_ser

from .helpers import random_sets


def _pair(kappa):
    return np.array([1.0, 0.0]), np.array([kappa, math.sqrt(1 - kappa**2)])


def test_theta_kappa_025():
    assert abs(pair_geometry(*_pair(0.25)).theta_deg - 7.2) <= 0.05


def test_orthogonal_pair_geometry():
    g = pair_geometry(*_pair(0.0))
    assert g.rho0 == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    assert g.rho1 == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    assert g.theta_deg == pytest.approx(0.0, abs=1e-6)


def test_rho_forms_agree_on_random_pairs():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        L = rng.integers(2, 9)
        a, b = rng.standard_normal((2, L))
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        g = pair_geometry(a, b)
        r0, r1 = rho_from_kappa(g.kappa)
        assert abs(g.rho0 - r0) < 1e-12 and abs(g.rho1 - r1) < 1e-12
        assert abs(g.rho0**2 + g.rho1**2 - 1) < 1e-12


def test_collinear_pair_rejected():
    v = np.array([0.6, 0.8])
    for w in (v, -v):
        with pytest.raises(ValidationError, match="collinear"):
            pair_geometry(v, w)


def test_exact_m2_special_values():
    for snr in (0.5, 2.0, 7.0):
        q = q_func(math.sqrt(snr))
        assert exact_pe_m2_biortho(*_pair(0.0), snr) == pytest.approx(1 - (1 - q) ** 2, rel=1e-13)
        assert exact_pe_m2_ortho(*_pair(0.0), snr) == pytest.approx(q, rel=1e-13)
        assert exact_pe_m2_ortho(*_pair(0.5), snr) == pytest.approx(q_func(math.sqrt(snr / 2)), rel=1e-13)
    assert exact_pe_m2_biortho(*_pair(0.25), 1e-14) == pytest.approx(0.75, abs=1e-6)
    assert exact_pe_m2_ortho(*_pair(1 - 1e-11), 5.0) == pytest.approx(0.5, abs=1e-5)


def _quad_m2_biortho(kappa, snr):
    """Correct-decision probability by 2-D quadrature over the standardized QR region."""
    s0, s1 = _pair(kappa)
    R = qr_nonneg(np.column_stack([s0, s1])).R
    a = math.sqrt(2 * snr)
    r01, r11 = R[0, 1], R[1, 1]

    def inner(v0):
        w = v0 + a
        return phi((1 - r01) * w / r11) - phi(-(1 + r01) * w / r11)

    pc, _ = integrate.quad(lambda v0: f_std(v0) * inner(v0), -a, np.inf, epsabs=1e-14, epsrel=1e-12)
    return 1 - pc


@pytest.mark.parametrize("kappa", [0.0, 0.25, -0.4])
@pytest.mark.parametrize("snr", [0.7, 3.0, 9.0])
def test_exact_m2_biortho_vs_quadrature(kappa, snr):
    assert exact_pe_m2_biortho(*_pair(kappa), snr) == pytest.approx(_quad_m2_biortho(kappa, snr), abs=1e-11)
    if kappa == 0.0:
        assert exact_pe_m2_biortho(*_pair(0.0), snr) == pytest.approx(ser_biorthogonal(2, snr), abs=1e-10)


def test_exact_m2_biortho_vs_simulation():
    s0, s1 = _pair(0.25)
    s = cs.CodeSet(np.column_stack([s0, s1]), Mode.QUASI_BIORTHOGONAL)
    r = simulate_ser(s, 4.0, 1_000_000, seed=5)
    assert abs(r.p_e_hat - exact_pe_m2_biortho(s0, s1, 4.0)) < 3 * r.std_err


def test_exact_m2_ortho_vs_simulation():
    s0, s1 = _pair(0.5)
    s = cs.CodeSet(np.column_stack([s0, s1]), Mode.QUASI_ORTHOGONAL)
    r = simulate_ser(s, 3.0, 1_000_000, seed=6)
    assert abs(r.p_e_hat - exact_pe_m2_ortho(s0, s1, 3.0)) < 3 * r.std_err


@pytest.mark.parametrize("M", [2, 4, 16])
def test_orthogonal_bounds_closed_forms(M):
    s = cs.make_orthogonal(M)
    for snr in (0.5, 4.0, 20.0):
        q = q_func(math.sqrt(snr))
        assert ub_quasi_biortho(s, snr) == pytest.approx((M - 1) * q * (2 - q), rel=1e-12)
        assert ub_quasi_ortho(s, snr) == pytest.approx((M - 1) * q, rel=1e-12)


def test_m2_ortho_bound_is_exact():
    s0, s1 = _pair(0.3)
    s = cs.CodeSet(np.column_stack([s0, s1]))
    for snr in (0.5, 3.0):
        assert ub_quasi_ortho(s, snr) == pytest.approx(exact_pe_m2_ortho(s0, s1, snr), rel=1e-13)


def test_low_snr_bound_is_vacuous():
    for s in random_sets(3, M=5) + [cs.make_orthogonal(3)]:
        raw = ub_quasi_biortho(s, 1e-6)
        assert raw >= 1
        assert ub_quasi_biortho(s, 1e-6, clamp=True) == 1.0
        assert ub_quasi_ortho(s, 1e-6, clamp=True) == min(ub_quasi_ortho(s, 1e-6), 1.0)
    assert ub_quasi_ortho(cs.make_orthogonal(5), 1e-6) > 1


def test_pub_zero_matches_appendix():
    for M in (2, 16, 128):
        for snr in (1.0, 10.0):
            k = np.zeros(M * (M - 1) // 2)
            assert pub_of_kappa(k, M, snr) == pytest.approx(pub_at_zero(M, snr), rel=1e-12)


def test_pub_matches_vector_route():
    for s in random_sets(10, M=7, rho_max=0.35):
        for snr in (0.8, 5.0, 15.0):
            assert abs(pub_of_kappa(kappa_vector(s), s.M, snr) - ub_quasi_biortho(s, snr)) < 1e-10


def test_pub_single_pair():
    s0, s1 = _pair(0.25)
    s = cs.CodeSet(np.column_stack([s0, s1]))
    snr = 3.0
    assert pub_of_kappa([0.25], 2, snr) == pytest.approx(exact_pe_m2_biortho(s0, s1, snr), rel=1e-13)
    assert pub_of_kappa([0.25], 2, snr) == pytest.approx(ub_quasi_biortho(s, snr), rel=1e-13)


def test_pub_length_check():
    with pytest.raises(ValidationError, match="length"):
        pub_of_kappa([0.1, 0.2], 3, 1.0)


def _fd_partial(fn, k, idx, h):
    e = np.zeros_like(k)
    e[idx] = h
    return (fn(k + e) - fn(k - e)) / (2 * h)


def _fd_curvature(fn, k, idx, h):
    e = np.zeros_like(k)
    e[idx] = 1.0

    def d2(step):
        return (fn(k + step * e) - 2 * fn(k) + fn(k - step * e)) / step**2

    # Richardson step on the O(h^2) central difference
    return (4 * d2(h / 2) - d2(h)) / 3


@pytest.mark.parametrize("M,snr", [(4, 4.0), (16, 10.0)])
def test_gradient_vanishes_and_hessian_is_alpha_identity(M, snr):
    n = M * (M - 1) // 2
    k0 = np.zeros(n)
    fn = lambda k: pub_of_kappa(k, M, snr)  # noqa: E731
    alpha = alpha_coefficient(M, snr)
    for idx in (0, n // 2, n - 1):
        assert abs(_fd_partial(fn, k0, idx, 1e-4)) < 1e-6
        assert _fd_curvature(fn, k0, idx, 1e-3) == pytest.approx(alpha, rel=1e-3)
    # mixed partial between two coordinates vanishes
    h = 1e-3
    e1, e2 = np.zeros(n), np.zeros(n)
    e1[0], e2[n - 1] = h, h
    mixed = (fn(e1 + e2) - fn(e1 - e2) - fn(-e1 + e2) + fn(-e1 - e2)) / (4 * h * h)
    assert abs(mixed) < 1e-6


@pytest.mark.parametrize("M", [4, 16])
@pytest.mark.parametrize("snr", [4.0, 10.0])
def test_second_order_accuracy(M, snr):
    rng = np.random.default_rng(M + int(snr))
    n = M * (M - 1) // 2
    for _ in range(20):
        k = rng.uniform(-0.05, 0.05, n)
        t = taylor_sensitivity(M, snr, k)
        quad_term = t.alpha * t.kappa_sq_norm
        assert abs(pub_of_kappa(k, M, snr) - t.prediction) <= 0.1 * quad_term


@pytest.mark.parametrize("M", [16, 128])
@pytest.mark.parametrize("snr", [10.0, 20.0, 40.0])
def test_ratio_approximation(M, snr):
    t = taylor_sensitivity(M, snr)
    assert t.ratio == pytest.approx(t.alpha / t.p_ub_at_zero)
    assert t.ratio_approx == pytest.approx(snr**2 / (2 * M * M))
    assert abs(t.ratio_approx - t.ratio) / t.ratio <= 0.25


def test_taylor_fields():
    t = taylor_sensitivity(16, 4.0, np.full(120, 0.01))
    assert t.alpha >= 0 and t.p_ub_at_zero > 0
    assert t.kappa_sq_norm == pytest.approx(120 * 1e-4)
    with pytest.raises(ValidationError):
        taylor_sensitivity(16, 0.0)


def test_bounds_dominate_mc():
    sets = random_sets(20, M=8, rho_max=0.3)
    snrs = [10 ** (d / 10) for d in (3.0, 6.0, 8.0, 10.0, 12.0)]
    for n, s in enumerate(sets):
        for mode, ub in ((Mode.QUASI_ORTHOGONAL, ub_quasi_ortho), (Mode.QUASI_BIORTHOGONAL, ub_quasi_biortho)):
            sm = s.with_mode(mode)
            for snr in snrs:
                e = estimate_ser(sm, snr, samples=80_000, seed=n)
                assert ub(sm, snr) >= e.p_e - 3 * e.std_err
