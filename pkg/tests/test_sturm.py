"""Shooting eigensolver and kernel basis against independent oracles.

Two oracles pin lambda_1 of -u'' + (2+cos 3x)u on [0,1]: a high-order
adaptive integrator with Brent root-finding (frozen to 12 digits), and a
finite-difference tridiagonal eigensolve whose absolute accuracy is
limited to ~1e-8 by the eps*||T|| noise floor of the matrix route.
"""

import numpy as np
import pytest
from scipy.integrate import solve_ivp as scipy_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from slwave.analytic import Const, parse_expression
from slwave.errors import AdmissibilityError, ConfigurationError
from slwave.grid import GridFunction, build_grid, inner
from slwave.sturm import (check_lower_bound, dirichlet_eigensystem,
                          kernel_basis, modal_coefficients, potential,
                          solve_ivp, wave_propagator_apply)

LAMBDA1_COSINE = 11.922697949810356   # DOP853 + brentq, frozen 2026-08


def shooting_oracle(lam):
    def rhs(x, y):
        return [y[1], (2 + np.cos(3 * x) - lam) * y[0]]
    sol = scipy_ivp(rhs, (0.0, 1.0), [0.0, 1.0], rtol=1e-12, atol=1e-14,
                    method="DOP853")
    return sol.y[0, -1]


def fd_lambda1(n=4000):
    """Tridiagonal FD eigenvalue with one Richardson step in h^2."""
    def raw(m):
        h = 1.0 / m
        x = np.linspace(0.0, 1.0, m + 1)[1:-1]
        d = 2.0 / h ** 2 + 2 + np.cos(3 * x)
        e = np.full(m - 2, -1.0 / h ** 2)
        return eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0][0]
    return (4 * raw(n) - raw(n // 2)) / 3.0


def test_frozen_oracle_reproducible():
    root = brentq(shooting_oracle, 11.5, 12.5, xtol=1e-13)
    assert root == pytest.approx(LAMBDA1_COSINE, abs=1e-11)


def test_fd_oracle_agrees_at_its_noise_floor():
    assert abs(fd_lambda1() - LAMBDA1_COSINE) <= 5e-8


def test_ivp_zero_potential_linear():
    g = build_grid(1.0, 100)
    q = potential(g, Const(0.0))
    sol = solve_ivp(q, 0.0, "left", 0.0, 1.0)
    assert np.max(np.abs(sol.u.values - g.x)) <= 1e-10
    assert np.max(np.abs(sol.du.values - 1.0)) <= 1e-10


def test_ivp_sine_solution():
    g = build_grid(1.0, 1000)
    q = potential(g, Const(0.0))
    sol = solve_ivp(q, np.pi ** 2, "left", 0.0, 1.0)
    assert np.max(np.abs(sol.u.values - np.sin(np.pi * g.x) / np.pi)) <= 1e-8


def test_ivp_rk4_convergence_order():
    errs = []
    for n in (200, 400):
        g = build_grid(1.0, n)
        q = potential(g, Const(0.0))
        sol = solve_ivp(q, np.pi ** 2, "left", 0.0, 1.0)
        errs.append(np.max(np.abs(sol.u.values - np.sin(np.pi * g.x) / np.pi)))
    assert np.log2(errs[0] / errs[1]) > 3.8


def test_ivp_right_side_data():
    g = build_grid(1.0, 400)
    q = potential(g, Const(0.0))
    sol = solve_ivp(q, 0.0, "right", 0.0, 1.0)
    assert np.max(np.abs(sol.u.values - (g.x - 1.0))) <= 1e-10
    with pytest.raises(ConfigurationError):
        solve_ivp(q, 0.0, "middle", 0.0, 1.0)


def test_kernel_basis_hyperbolic():
    g = build_grid(1.0, 2000)
    kb = kernel_basis(potential(g, Const(1.0)))
    assert abs(kb.phi0.u.values[-1].real - np.sinh(1.0)) <= 1e-8
    # phi0(l) = -phil(0), the control-dictionary pivot
    assert abs(kb.phi0_at_l + kb.phil_at_0) <= 1e-12


def test_kernel_basis_wronskian_constant():
    g = build_grid(1.0, 800)
    kb = kernel_basis(potential(g, parse_expression("2 + cos(3)")))
    w = (kb.phi0.u.values * kb.phil.du.values
         - kb.phi0.du.values * kb.phil.u.values)
    assert np.max(np.abs(w - w[0])) <= 1e-9


def test_spectrum_classical_pi():
    g = build_grid(np.pi, 2000)
    es = dirichlet_eigensystem(potential(g, Const(0.0)), 3)
    assert np.max(np.abs(es.lam - np.array([1.0, 4.0, 9.0]))) <= 1e-8


def test_spectrum_unit_interval():
    g = build_grid(1.0, 2000)
    es = dirichlet_eigensystem(potential(g, Const(0.0)), 2)
    want = np.array([np.pi ** 2, 4 * np.pi ** 2])
    assert np.max(np.abs(es.lam - want) / want) <= 1e-7


def test_spectrum_cosine_vs_oracles(q_cosine):
    es = dirichlet_eigensystem(q_cosine, 1)
    assert abs(es.lam[0] - fd_lambda1()) <= 1e-5     # matrix-oracle contract
    assert abs(es.lam[0] - LAMBDA1_COSINE) <= 1e-8   # actual headroom


def test_kappa_constant_shift():
    g = build_grid(1.0, 2000)
    es = dirichlet_eigensystem(potential(g, Const(5.0)), 1)
    kappa = check_lower_bound(es)
    assert abs(kappa - (np.pi ** 2 + 5.0)) <= 1e-7


def test_lower_bound_rejects_negative_operator():
    g = build_grid(1.0, 400)
    es = dirichlet_eigensystem(potential(g, Const(-15.0)), 1)
    with pytest.raises(AdmissibilityError):
        check_lower_bound(es)


def test_eigen_residual_and_orthonormality(es_zero, q_zero):
    g = q_zero.grid
    lam, phi = es_zero.lam[:10], es_zero.phi[:10]
    for k in (0, 4, 9):
        u = phi[k]
        d2 = (u[:-2] - 2 * u[1:-1] + u[2:]) / g.h ** 2
        res = np.max(np.abs(-d2 + (q_zero.values[1:-1] - lam[k]) * u[1:-1]))
        assert res <= 5e-3 * lam[k]   # second-difference residual, h^2-limited
    gram = np.empty((10, 10))
    for i in range(10):
        for j in range(10):
            gi = GridFunction(g, phi[i].astype(complex))
            gj = GridFunction(g, phi[j].astype(complex))
            gram[i, j] = inner(gi, gj).real
    assert np.max(np.abs(gram - np.eye(10))) <= 1e-8


def test_grid_too_coarse_for_modes():
    g = build_grid(1.0, 100)
    with pytest.raises(ConfigurationError):
        dirichlet_eigensystem(potential(g, Const(0.0)), 80)


def test_propagator_single_mode(es_zero, q_zero):
    g = q_zero.grid
    phi1 = GridFunction(g, es_zero.phi[0].astype(complex))
    t = 0.37
    out = wave_propagator_apply(es_zero, t, phi1)
    want = (np.sin(np.pi * t) / np.pi) * phi1.values
    assert np.max(np.abs(out.values - want)) <= 1e-8


def test_propagator_parabola_fourier(es_zero, q_zero):
    """x(1-x) against its analytic sine series, summed termwise to the
    same truncation: coefficients 2*sqrt(2)*(1-cos n pi)/(n pi)^3."""
    g = q_zero.grid
    u = GridFunction(g, (g.x * (1 - g.x)).astype(complex))
    t = 0.3
    out = wave_propagator_apply(es_zero, t, u)
    n = np.arange(1, es_zero.count + 1)
    coef = 2 * np.sqrt(2) * (1 - np.cos(n * np.pi)) / (n * np.pi) ** 3
    kernel = np.sin(np.sqrt(es_zero.lam) * t) / np.sqrt(es_zero.lam)
    want = (es_zero.phi * (coef * kernel)[:, None]).sum(axis=0)
    assert np.max(np.abs(out.values - want)) <= 1e-6


def test_propagator_linearity(es_zero, q_zero):
    g = q_zero.grid
    u = GridFunction(g, np.sin(np.pi * g.x).astype(complex))
    v = GridFunction(g, (g.x * (1 - g.x)).astype(complex))
    w = GridFunction(g, 2.0 * u.values - 0.5j * v.values)
    t = 0.21
    a = wave_propagator_apply(es_zero, t, u)
    b = wave_propagator_apply(es_zero, t, v)
    c = wave_propagator_apply(es_zero, t, w)
    assert np.max(np.abs(c.values - 2.0 * a.values + 0.5j * b.values)) <= 1e-10


def test_propagator_t_derivative_is_projection(es_zero, q_zero):
    g = q_zero.grid
    u = GridFunction(g, (g.x * (1 - g.x)).astype(complex))
    eps = 1e-4
    a = wave_propagator_apply(es_zero, eps, u)
    b = wave_propagator_apply(es_zero, 2 * eps, u)
    ddt = (4 * a.values - b.values) / (2 * eps)   # Richardson at t=0
    coef = modal_coefficients(es_zero, u)
    proj = (es_zero.phi * coef[:, None]).sum(axis=0)
    assert np.max(np.abs(ddt - proj)) <= 1e-6
