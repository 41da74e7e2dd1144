import decimal
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qkd_pulseopt.mode_overlap import OverlapCoefficients
from qkd_pulseopt.security_rate import (
    LinkParams,
    channel_transmittance,
    conditional_eigenvalue,
    excess_noise,
    g,
    key_spectral_efficiency,
    secret_key_rate,
    skr_from_powers,
    symplectic_eigenvalues,
    zero_mismatch_bound,
)


def _g(x):
    return 0.0 if x == 0 else (x + 1) * math.log2(x + 1) - x * math.log2(x)


def covariance_eigenvalues(tau, n, n_ex):
    """Photon-unit eigenvalues from the two-mode covariance matrix in shot-noise units,
    with Bob's mode heterodyned for the conditional one. Evaluated at 50 digits."""
    D = decimal.Decimal
    with decimal.localcontext() as ctx:
        ctx.prec = 50
        tau, n, n_ex = D(tau), D(n), D(n_ex)
        a = 2 * n + 1
        b = 2 * (tau * n + n_ex) + 1
        c2 = tau * (a * a - 1)
        delta = a * a + b * b - 2 * c2
        det = a * b - c2
        s = max(delta * delta - 4 * det * det, D(0)).sqrt()
        v1, v2 = ((delta + s) / 2).sqrt(), ((delta - s) / 2).sqrt()
        vc = a - c2 / (b + 1)
        return tuple(max(float((v - 1) / 2), 0.0) for v in (v1, v2, vc))


def oracle_skr(tau, n, n_ex, beta):
    nu_p, nu_m, nu = covariance_eigenvalues(tau, n, n_ex)
    return beta * math.log2(1 + tau * n / (n_ex + 1)) - (_g(nu_p) + _g(nu_m) - _g(nu))


def test_g_values():
    assert g(0.0) == 0.0
    assert g(1.0) == 2.0
    assert g(3.0) == pytest.approx(8 - 3 * math.log2(3), abs=1e-12)
    assert g(3.0) == pytest.approx(3.245112, abs=1e-6)


def test_g_vectorized_and_clamped():
    out = g(np.array([0.0, 1.0, 3.0]))
    np.testing.assert_allclose(out, [0.0, 2.0, 8 - 3 * math.log2(3)], atol=1e-12)
    assert g(-1e-13) == 0.0
    with pytest.raises(ValueError):
        g(-1e-6)


@given(st.floats(0, 1e6), st.floats(1e-9, 1e3))
def test_g_increasing_and_above_log(x, dx):
    assert g(x + dx) >= g(x)
    assert g(x) >= math.log2(x + 1) - 1e-12


def test_excess_noise_examples():
    ov = OverlapCoefficients.from_dict({0: 1.0})
    assert excess_noise(ov, LinkParams(10, 1.0, n_ch=1e-3)) == 1e-3
    ov = OverlapCoefficients.from_dict({-1: math.sqrt(0.005), 0: 0.99, 1: math.sqrt(0.005)})
    assert excess_noise(ov, LinkParams(10, 0.1)) == pytest.approx(0.01, abs=1e-15)


def test_eigenvalue_limits():
    for form in ("corrected", "printed"):
        assert symplectic_eigenvalues(1.0, 10, 0.0, form) == (0.0, 0.0, 0.0)
        assert symplectic_eigenvalues(1.0, 1000, 0.0, form) == (0.0, 0.0, 0.0)
        nu_p, nu_m, _ = symplectic_eigenvalues(0.0, 10, 0.3, form)
        assert nu_p == pytest.approx(10.0, abs=1e-12)
        assert nu_m == pytest.approx(0.3, abs=1e-12)


def test_hand_example():
    root = math.sqrt(39.21)
    nu_p, nu_m, nu = symplectic_eigenvalues(0.5, 10, 0.1, "printed")
    assert nu_p == pytest.approx((root + 3.9) / 2, abs=1e-12)
    assert nu_m == pytest.approx((root - 5.9) / 2, abs=1e-12)
    assert nu == pytest.approx(1.5 / 6.1, abs=1e-12)
    assert nu_p == pytest.approx(5.08088, abs=2e-5)
    assert nu_m == pytest.approx(0.18088, abs=2e-5)
    assert nu == pytest.approx(0.245901, abs=1e-6)
    # the two forms only differ in the conditional eigenvalue
    assert symplectic_eigenvalues(0.5, 10, 0.1)[:2] == (nu_p, nu_m)
    assert symplectic_eigenvalues(0.5, 10, 0.1)[2] == pytest.approx(0.6 * 10 / 6.1, abs=1e-12)


@settings(max_examples=200)
@given(st.floats(0, 1), st.floats(0.01, 1e4), st.floats(0, 10))
def test_corrected_form_matches_covariance_matrix(tau, n, n_ex):
    got = symplectic_eigenvalues(tau, n, n_ex)
    want = covariance_eigenvalues(tau, n, n_ex)
    scale = 1 + n + n_ex
    # nu_plus/nu_minus swap roles when n_ex > (1 - tau) n_bar; compare as a pair
    assert abs(got[2] - want[2]) <= 1e-9 * scale
    for a, b in zip(sorted(got[:2]), sorted(want[:2])):
        assert abs(a - b) <= 1e-9 * scale


def test_limit_recovery_small_excess_noise():
    n, tau = 10.0, 0.3
    nu_p, nu_m, nu = symplectic_eigenvalues(tau, n, 1e-12)
    assert nu_p == pytest.approx((1 - tau) * n, abs=1e-6)
    assert nu_m == pytest.approx(0.0, abs=1e-6)
    assert nu == pytest.approx((1 - tau) * n / (tau * n + 1), abs=1e-6)
    printed = conditional_eigenvalue(tau, n, 1e-12, "printed")
    assert printed == pytest.approx((1 - tau) / (tau * n + 1), abs=1e-6)
    p = LinkParams(n, tau, beta=1.0)
    chi = _g((1 - tau) * n) - _g((1 - tau) * n / (tau * n + 1))
    skr = float(skr_from_powers(1.0, 1e-12 / (tau * n), p)[0])
    assert skr == pytest.approx(math.log2(1 + tau * n) - chi, abs=1e-6)


def test_lossless_noiseless_rate():
    for form in ("corrected", "printed"):
        r = zero_mismatch_bound(LinkParams(10, 1.0, beta=1.0, conditional=form))
        assert r.skr_bits_per_symbol == pytest.approx(math.log2(11), abs=1e-12)
        assert r.holevo_bits == pytest.approx(0.0, abs=1e-12)


def test_zero_efficiency_rate_is_minus_holevo():
    for tau in (0.01, 0.1, 0.5, 0.9):
        r = zero_mismatch_bound(LinkParams(10, tau, n_ch=0.01, beta=0.0))
        assert r.skr_bits_per_symbol == pytest.approx(-r.holevo_bits, abs=1e-15)
        assert r.skr_bits_per_symbol <= 0


def test_fifty_km_bound_against_oracle():
    tau = channel_transmittance(50)
    r = zero_mismatch_bound(LinkParams(10, tau, beta=1.0))
    assert r.skr_bits_per_symbol == pytest.approx(oracle_skr(0.1, 10, 0.0, 1.0), abs=1e-12)
    assert r.skr_bits_per_symbol == pytest.approx(0.0722554601, abs=1e-9)
    # with the printed conditional eigenvalue the same link has no key
    printed = zero_mismatch_bound(LinkParams(10, tau, beta=1.0, conditional="printed"))
    assert printed.skr_bits_per_symbol < 0


def test_channel_transmittance():
    assert channel_transmittance(0) == 1.0
    assert channel_transmittance(50) == pytest.approx(0.1, rel=1e-14)
    assert channel_transmittance(100) == pytest.approx(0.01, rel=1e-14)
    with pytest.raises(ValueError):
        channel_transmittance(-1)


def test_key_spectral_efficiency():
    assert key_spectral_efficiency(1.0, 0.0) == 1.0
    assert key_spectral_efficiency(1.0, 0.1) == pytest.approx(0.909090909, abs=1e-9)
    assert key_spectral_efficiency(3.45943, 1.0) == pytest.approx(1.729715, abs=1e-9)


def test_random_grid_monotone_in_noise_and_isi():
    rng = np.random.default_rng(3)
    for _ in range(150):
        tau = 10 ** rng.uniform(-2, 0)
        n = 10 ** rng.uniform(0, 3)
        c0_sq = rng.uniform(0.8, 1.0)
        isi = rng.uniform(0, 0.05)
        n_ch = rng.uniform(0, 0.05)
        p = LinkParams(n, tau, n_ch=n_ch, beta=rng.uniform(0.9, 1.0))
        base = float(skr_from_powers(c0_sq, isi, p)[0])
        more_noise = LinkParams(n, tau, n_ch=n_ch + rng.uniform(1e-4, 0.05), beta=p.beta)
        assert float(skr_from_powers(c0_sq, isi, more_noise)[0]) <= base + 1e-12
        assert float(skr_from_powers(c0_sq, isi + rng.uniform(1e-5, 0.05), p)[0]) <= base + 1e-12


def test_report_fields_consistent():
    ov = OverlapCoefficients.from_dict({-1: 0.05, 0: 0.98, 1: 0.04})
    p = LinkParams(10, 0.3, n_ch=1e-3, beta=0.95, roll_off=0.25)
    r = secret_key_rate(ov, p, distance_km=26.1)
    assert r.c0_sq == pytest.approx(0.98 ** 2)
    assert r.tau == pytest.approx(0.3 * 0.98 ** 2)
    assert r.n_ex == pytest.approx(1e-3 + 0.3 * 10 * (0.05 ** 2 + 0.04 ** 2))
    assert r.skr_bits_per_symbol == pytest.approx(0.95 * r.mutual_info_bits - r.holevo_bits, abs=1e-15)
    assert r.kse_bits_per_symbol == pytest.approx(r.skr_bits_per_symbol / 1.25)
    assert r.skr_bits_per_symbol == pytest.approx(oracle_skr(r.tau, 10, r.n_ex, 0.95), abs=1e-12)
    assert len(r.csv_row()) == 12


def test_link_params_validation():
    for bad in (dict(n_bar=0, tau_ch=0.5), dict(n_bar=10, tau_ch=1.5), dict(n_bar=10, tau_ch=0.5, beta=2),
                dict(n_bar=10, tau_ch=0.5, n_ch=-1), dict(n_bar=10, tau_ch=0.5, conditional="x")):
        with pytest.raises(ValueError):
            LinkParams(**bad)
