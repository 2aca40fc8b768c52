import math

import numpy as np
import pytest

import szegolab.manifold as mfd
from szegolab.assembly import assemble_T
from szegolab.fock import FockTruncation
from szegolab.spectral import eigensolve
from szegolab.states import (
    BohrSommerfeldData,
    BSViolationError,
    build_test_state,
    circle_theta,
    norm_asymptotics_check,
    rayleigh_lower_bound,
    verify_bohr_sommerfeld,
)


def circle_parts(k, m=None, r=1.0):
    """Circle of radius r, truncation, quadrature; kr^2 = m when m is given."""
    sub = mfd.circle(r)
    M = math.ceil(4 * k * r * r)
    quad = mfd.quadrature(sub, 2 * M + 9)
    trunc = FockTruncation(1, k, M)
    return sub, trunc, quad


def test_circle_theta_passes_verification():
    sub = mfd.circle(1.0)
    bs = BohrSommerfeldData(theta=circle_theta(1.0))
    verify_bohr_sommerfeld(sub.charts[0], bs, 12.0)
    sub2 = mfd.circle(1.3)
    bs2 = BohrSommerfeldData(theta=circle_theta(1.3))
    # k r^2 = 10 * 1.69 = 16.9 is not an integer: closure fails
    with pytest.raises(BSViolationError):
        verify_bohr_sommerfeld(sub2.charts[0], bs2, 10.0)
    # but gradient + closure both pass at k = 100/1.69
    verify_bohr_sommerfeld(sub2.charts[0], bs2, 100.0 / 1.69)


def test_wrong_gradient_rejected():
    sub = mfd.circle(1.0)
    bs = BohrSommerfeldData(theta=lambda t: 0.5 * np.atleast_2d(t)[:, 0] ** 2)
    with pytest.raises(BSViolationError):
        verify_bohr_sommerfeld(sub.charts[0], bs, 2 * math.pi)


def test_state_at_integer_kr2_is_number_state():
    # kr^2 = m: the smeared state is proportional to the basis vector |m>
    k, m = 11.0, 11
    sub, trunc, quad = circle_parts(k)
    bs = BohrSommerfeldData(theta=circle_theta(1.0))
    c = build_test_state(trunc, sub, bs, quad)
    norm = np.linalg.norm(c)
    overlap = abs(c[m]) / norm
    assert overlap >= 1.0 - 1e-8


def test_zero_alpha_gives_zero_state():
    sub, trunc, quad = circle_parts(9.0)
    bs = BohrSommerfeldData(theta=circle_theta(1.0), alpha=0.0)
    c = build_test_state(trunc, sub, bs, quad)
    assert np.abs(c).max() == 0


def test_doubling_alpha_quadruples_norm():
    sub, trunc, quad = circle_parts(9.0)
    one = BohrSommerfeldData(theta=circle_theta(1.0), alpha=1.0)
    two = BohrSommerfeldData(theta=circle_theta(1.0), alpha=2.0)
    n1 = float(np.vdot(*(build_test_state(trunc, sub, one, quad),) * 2).real)
    n2 = float(np.vdot(*(build_test_state(trunc, sub, two, quad),) * 2).real)
    assert n2 == pytest.approx(4 * n1, rel=1e-12)


def test_non_lagrangian_rejected():
    sub = mfd.parabola_patch()
    quad = mfd.quadrature(sub, 8)
    trunc = FockTruncation(2, 4.0, 8)
    bs = BohrSommerfeldData(theta=lambda t: np.zeros(np.atleast_2d(t).shape[0]))
    with pytest.raises(ValueError):
        build_test_state(trunc, sub, bs, quad)


def test_norm_ratio_converges_to_circumference():
    # |psi_k|^2 / (2k/pi)^{1/2} -> int |alpha|^2 dsigma = 2 pi
    bs = BohrSommerfeldData(theta=circle_theta(1.0))
    ks = [9.0, 16.0, 25.0, 36.0, 49.0]
    states = []
    for k in ks:
        sub, trunc, quad = circle_parts(k)
        states.append(build_test_state(trunc, sub, bs, quad))
    report = norm_asymptotics_check(ks, states, 1, 2 * math.pi)
    assert report.ok
    assert report.ratios[-1] == pytest.approx(2 * math.pi, rel=1e-2)
    assert np.all(np.abs(report.ratios - 2 * math.pi)
                  <= 5.0 / np.asarray(ks) * 2 * math.pi)


def test_rayleigh_quotient_attains_top_eigenvalue():
    # at k r^2 = m the state is |m> and lambda_m = lambda_max exactly
    k = 16.0
    sub, trunc, quad = circle_parts(k)
    op = assemble_T(trunc, sub, None, quad)
    bs = BohrSommerfeldData(theta=circle_theta(1.0))
    c = build_test_state(trunc, sub, bs, quad)
    q = rayleigh_lower_bound(op, c)
    top = eigensolve(op).max
    assert q <= top * (1 + 1e-10)
    assert q == pytest.approx(top, rel=1e-10)
    with pytest.raises(ValueError):
        rayleigh_lower_bound(op, np.zeros(trunc.dim, dtype=complex))


def test_rayleigh_is_lower_bound_with_nonuniform_alpha():
    k = 16.0
    sub, trunc, quad = circle_parts(k)
    op = assemble_T(trunc, sub, None, quad)
    bs = BohrSommerfeldData(theta=circle_theta(1.0),
                            alpha=lambda t: 1.0 + 0.5 * np.cos(t[:, 0]))
    c = build_test_state(trunc, sub, bs, quad)
    q = rayleigh_lower_bound(op, c)
    top = eigensolve(op).max
    assert q <= top * (1 + 1e-10)
    assert q >= 0.5 * top  # still within a factor of the top eigenvalue
