import math

import mpmath
import numpy as np
import pytest
from numpy.polynomial import legendre as npleg
from scipy.integrate import quad

from casimir_scatter.energy import log_det_contribution
from casimir_scatter.fresnel import fresnel_x
from casimir_scatter.materials import Drude, Sellmeier, default_plane, default_sphere, permittivity
from casimir_scatter.mie import mie_amplitudes
from casimir_scatter.roundtrip import (
    angular_functions,
    dipole_block_elements,
    dump_block_csv,
    roundtrip_block,
    roundtrip_blocks,
    x_quadrature,
)

PLANE, SPHERE = default_plane(), default_sphere()


def angular_oracle(ell, m, x):
    mpmath.mp.dps = 30
    x = mpmath.mpf(x)
    P = lambda y: mpmath.legenp(ell, m, y, type=3)
    lam = mpmath.sqrt(mpmath.mpf(2 * ell + 1) * mpmath.factorial(ell - m) / (ell * (ell + 1) * mpmath.factorial(ell + m)))
    sq = mpmath.sqrt(x * x - 1)
    pi_t = lam * m * P(x) / sq
    tau_t = lam * sq * mpmath.diff(P, x)
    return float(pi_t), float(tau_t)


@pytest.mark.parametrize("ell,m", [(1, 0), (1, 1), (2, 1), (3, 0), (5, 3), (8, 8), (12, 5)])
@pytest.mark.parametrize("x", [1.001, 1.3, 4.0, 25.0])
def test_angular_functions_against_mpmath(ell, m, x):
    got = angular_functions(ell, m, x)
    want = angular_oracle(ell, m, x)
    assert got.pi_tilde == pytest.approx(want[0], rel=1e-10, abs=1e-300)
    assert got.tau_tilde == pytest.approx(want[1], rel=1e-10)


def test_angular_functions_high_order_finite():
    # l = 150 at x = 500 is far outside double range without the scaling
    from casimir_scatter.roundtrip import angular_tables

    pi_hat, tau_hat, log_t = angular_tables(40, 150, np.array([1.01, 500.0]))
    assert np.all(np.isfinite(pi_hat)) and np.all(np.isfinite(tau_hat))
    assert np.all(np.isfinite(log_t))


def test_x_quadrature_integrates_exponential():
    for a in (1e-3, 0.1, 5.0):
        x, log_w = x_quadrature(80, 1.0 / a)
        got = np.sum(np.exp(log_w - a * x))
        assert got == pytest.approx(math.exp(-a) / a, rel=1e-12)


@pytest.mark.parametrize("xi", np.geomspace(1e-3, 1.0, 10))
def test_dipole_pinning(xi):
    # R = 1 nm, L = 100 nm, lmax = 1: diagonal EE entries against the explicit
    # electric-dipole formulas
    m0, m1 = dipole_block_elements(1.0, 100.0, PLANE, SPHERE, xi)
    b0 = roundtrip_block(1.0, 100.0, PLANE, SPHERE, xi, 0, 1)
    b1 = roundtrip_block(1.0, 100.0, PLANE, SPHERE, xi, 1, 1)
    assert b0.matrix[0, 0] == pytest.approx(m0, rel=1e-6)
    assert b1.matrix[0, 0] == pytest.approx(m1, rel=1e-6)


def _pi_tau(ell, z):
    d1 = npleg.Legendre.basis(ell).deriv(1)
    d2 = npleg.Legendre.basis(ell).deriv(2)
    pi = d1(z)
    return pi, z * pi - (1 - z * z) * d2(z)


def trace_oracle(R, L, xi, lmax):
    """Sum over all m of tr M^(m) from the backscattering Mie series."""
    amps = mie_amplitudes(float(permittivity(SPHERE, xi)), xi * R, lmax)
    eps_p = float(permittivity(PLANE, xi))
    lc = L + R

    def f(x):
        r_te, r_tm = fresnel_x(eps_p, x)
        z = 2 * x * x - 1
        acc = 0.0
        for amp in amps:
            ell = amp.ell
            pi, tau = _pi_tau(ell, z)
            c = (2 * ell + 1) / (ell * (ell + 1)) * (-1) ** (ell + 1)
            acc += c * (amp.a * (r_te * pi - r_tm * tau) - amp.b * (r_te * tau - r_tm * pi))
        return acc * math.exp(-2 * xi * lc * x)

    return quad(f, 1, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]


@pytest.mark.parametrize("R,L,xi,lmax", [(10.0, 5.0, 0.15, 8), (2.0, 3.0, 0.4, 6), (5.0, 50.0, 0.02, 4)])
def test_trace_matches_backscattering_series(R, L, xi, lmax):
    blocks = list(roundtrip_blocks(R, L, PLANE, SPHERE, xi, range(lmax + 1), lmax))
    total = sum((1 if b.m == 0 else 2) * np.trace(b.matrix) for b in blocks)
    assert total == pytest.approx(trace_oracle(R, L, xi, lmax), rel=1e-9)


def test_gauge_invariance_of_log_det():
    rng = np.random.default_rng(7)
    for m in (0, 1, 4):
        block = roundtrip_block(20.0, 5.0, PLANE, SPHERE, 0.05, m, 20)
        ref = log_det_contribution(block)
        for _ in range(5):
            d = rng.choice([-1.0, 1.0], size=block.size)
            flipped = d[:, None] * block.matrix * d[None, :]
            assert abs(log_det_contribution(flipped) - ref) < 1e-12


def test_balancing_preserves_determinant():
    block = roundtrip_block(5.0, 5.0, PLANE, SPHERE, 0.1, 1, 6)
    raw = block.raw()
    assert np.linalg.det(np.eye(block.size) - raw) == pytest.approx(
        np.linalg.det(np.eye(block.size) - block.matrix), rel=1e-10
    )


GRID = [(2.0, 1.0), (10.0, 1.0), (20.0, 5.0), (10.0, 100.0)]


@pytest.mark.parametrize("R,L", GRID)
def test_spectral_radius_below_one(R, L):
    lmax = 30
    for xi in (1e-3 / L, 0.3 / L, 1.0 / L, 5.0 / L):
        for block in roundtrip_blocks(R, L, PLANE, SPHERE, xi, range(0, lmax + 1, 5), lmax):
            assert np.max(np.abs(np.linalg.eigvals(block.matrix))) < 1.0


@pytest.mark.parametrize("R,L", GRID)
def test_max_entry_decays_with_m(R, L):
    lmax = 20
    xi = 1.0 / (L + R)
    peaks = [np.max(np.abs(b.matrix)) for b in roundtrip_blocks(R, L, PLANE, SPHERE, xi, range(lmax + 1), lmax)]
    # at L >> R the m = 1 dipole entry can exceed the m = 0 one; decay is strict from m = 1 on
    assert all(b < a for a, b in zip(peaks[1:], peaks[2:]))
    assert peaks[1] < 2.0 * peaks[0]


def test_reciprocity_symmetry():
    # M = S K with K symmetric, so M_EM / M_ME equals s_E / s_M
    R, L, xi, lmax = 5.0, 5.0, 0.2, 3
    block = roundtrip_block(R, L, PLANE, SPHERE, xi, 2, lmax)
    raw = block.raw()
    amps = mie_amplitudes(float(permittivity(SPHERE, xi)), xi * R, lmax)
    s = np.array([(-1) ** (a.ell + 1) * a.a for a in amps[1:]] + [(-1) ** a.ell * a.b for a in amps[1:]])
    K = raw / s[:, None]
    np.testing.assert_allclose(K, K.T, rtol=1e-10, atol=1e-300)


def test_mirror_couples_electric_and_magnetic_dipoles():
    # the image of a transverse electric dipole has a magnetic field at the
    # sphere center, so a mirror must couple E1 and M1 at m = 1
    plane = Drude(lambda_p_nm=1e-3, gamma_ratio=0.0)
    sphere = Sellmeier(((1e4, 1e-3),))
    block = roundtrip_block(10.0, 10.0, plane, sphere, 0.05, 1, 1)
    scale = math.sqrt(abs(block.matrix[0, 0] * block.matrix[1, 1]))
    assert abs(block.matrix[0, 1]) > 0.1 * scale
    # m = 0 carries no electric-magnetic mixing at all
    b0 = roundtrip_block(10.0, 10.0, plane, sphere, 0.05, 0, 3)
    n = b0.size // 2
    assert np.all(b0.matrix[:n, n:] == 0) and np.all(b0.matrix[n:, :n] == 0)


def test_block_validation():
    with pytest.raises(ValueError):
        roundtrip_block(1.0, 1.0, PLANE, SPHERE, 0.0, 0, 2)
    with pytest.raises(ValueError):
        roundtrip_block(1.0, 1.0, PLANE, SPHERE, 0.1, 3, 2)
    with pytest.raises(ValueError):
        roundtrip_block(-1.0, 1.0, PLANE, SPHERE, 0.1, 0, 2)


def test_dump_block_csv(tmp_path):
    block = roundtrip_block(2.0, 5.0, PLANE, SPHERE, 0.1, 1, 3)
    path = tmp_path / "block.csv"
    dump_block_csv(block, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "row,col,l_row,P_row,l_col,P_col,value"
    assert len(lines) == 1 + block.size**2
