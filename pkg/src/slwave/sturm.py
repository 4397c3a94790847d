"""Potentials, Cauchy solutions, the kernel basis, Dirichlet spectra and
the wave propagator on [0, l].

The second-order equation -u'' + q u = lam u is integrated as a first-order
system with a fixed-step fourth-order Runge-Kutta scheme on the grid nodes,
with q at the half steps taken from the closed form when available and from
cubic interpolation otherwise.  Eigenvalues come from shooting: oscillation
counting brackets each root of u_lam(l), an Illinois secant/bisection hybrid
refines it.  Matrix eigensolvers are deliberately not used here; they serve
as independent oracles in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .analytic import ClosedForm, parse_expression
from .errors import AdmissibilityError, ConfigurationError, NumericalError
from .grid import Grid, GridFunction, interp_cubic, quad

__all__ = [
    "Potential", "OdeSolution", "KernelBasis", "EigenSystem",
    "potential", "solve_ivp", "kernel_basis", "dirichlet_eigensystem",
    "check_lower_bound", "wave_propagator_apply", "modal_coefficients",
    "modal_tail",
]

_BLOWUP = 1e120


@dataclass(frozen=True)
class Potential:
    """Real potential q on a grid, with optional closed form for off-node
    evaluation.  mid holds q at the half steps used by the integrator."""

    grid: Grid
    values: np.ndarray
    fn: Optional[ClosedForm] = None
    mid: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ConfigurationError("potential samples do not match the grid")
        if not np.all(np.isfinite(v)):
            raise ConfigurationError("potential samples must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        xm = self.grid.x[:-1] + 0.5 * self.grid.h
        if self.fn is not None:
            qm = np.asarray(self.fn(xm), dtype=float)
        else:
            qm = interp_cubic(GridFunction(self.grid, v.astype(complex)), xm).real
        qm.setflags(write=False)
        object.__setattr__(self, "mid", qm)

    def at_nodes_reversed(self) -> np.ndarray:
        return self.values[::-1]


def potential(grid: Grid, q: Union[str, float, ClosedForm, np.ndarray]) -> Potential:
    """Build a potential from an expression string, a constant, a closed
    form, or plain samples."""
    if isinstance(q, str):
        q = parse_expression(q)
    if isinstance(q, (int, float)):
        from .analytic import Const
        q = Const(float(q))
    if isinstance(q, ClosedForm):
        vals = np.asarray(q(grid.x), dtype=float)
        return Potential(grid, vals, q)
    return Potential(grid, np.asarray(q, dtype=float))


@dataclass(frozen=True)
class OdeSolution:
    """Cauchy solution of -u'' + q u = lam u with derivative samples."""

    lam: float
    u: GridFunction
    du: GridFunction


def _rk4_sweep(qn, qm, h, lam, v0, s0, keep_history=False):
    """Integrate u'' = (q - lam) u left to right for a vector of lam.

    qn: q at nodes (n+1,), qm: q at half steps (n,).  Returns (u, v) end
    states, or full histories (n+1, K) when keep_history.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    K = lam.shape[0]
    n = qn.shape[0] - 1
    u = np.full(K, float(v0))
    v = np.full(K, float(s0))
    if keep_history:
        U = np.empty((n + 1, K))
        V = np.empty((n + 1, K))
        U[0] = u
        V[0] = v
    h6 = h / 6.0
    for j in range(n):
        cj = qn[j] - lam
        cm = qm[j] - lam
        c1 = qn[j + 1] - lam
        dv1 = cj * u
        u2 = u + 0.5 * h * v
        v2 = v + 0.5 * h * dv1
        dv2 = cm * u2
        u3 = u + 0.5 * h * v2
        v3 = v + 0.5 * h * dv2
        dv3 = cm * u3
        u4 = u + h * v3
        v4 = v + h * dv3
        dv4 = c1 * u4
        u = u + h6 * (v + 2.0 * v2 + 2.0 * v3 + v4)
        v = v + h6 * (dv1 + 2.0 * (dv2 + dv3) + dv4)
        if keep_history:
            U[j + 1] = u
            V[j + 1] = v
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))) or np.max(np.abs(u)) > _BLOWUP:
        raise NumericalError("Cauchy integration blew up; refine the grid or check q and lam")
    if keep_history:
        return U, V
    return u, v


def solve_ivp(q: Potential, lam: float, side: str = "left",
              value: float = 0.0, slope: float = 1.0) -> OdeSolution:
    """Solve -u'' + q u = lam u from one endpoint with given Cauchy data.

    side="left" imposes u(0)=value, u'(0)=slope; side="right" imposes the
    data at x=l and integrates leftward.
    """
    g = q.grid
    if side == "left":
        U, V = _rk4_sweep(q.values, q.mid, g.h, [lam], value, slope, keep_history=True)
        uu, vv = U[:, 0], V[:, 0]
    elif side == "right":
        U, V = _rk4_sweep(q.values[::-1], q.mid[::-1], g.h, [lam], value, -slope,
                          keep_history=True)
        uu, vv = U[::-1, 0], -V[::-1, 0]
    else:
        raise ConfigurationError(f"side must be 'left' or 'right', got {side!r}")
    return OdeSolution(float(lam), GridFunction(g, uu.astype(complex)),
                       GridFunction(g, vv.astype(complex)))


@dataclass(frozen=True)
class KernelBasis:
    """Basis of the defect kernel: phi0 (data at 0) and phil (data at l),
    both solving -u'' + q u = 0."""

    q: Potential
    phi0: OdeSolution
    phil: OdeSolution
    phi0_at_l: float
    phil_at_0: float

    @property
    def grid(self) -> Grid:
        return self.q.grid


def kernel_basis(q: Potential) -> KernelBasis:
    """Kernel solutions phi0(0)=0, phi0'(0)=1 and phil(l)=0, phil'(l)=1.

    Degeneracy guard: zero must not be (numerically) a Dirichlet eigenvalue,
    i.e. |phi0(l)| stays above 1e-10 * l; same for |phil(0)|.
    """
    phi0 = solve_ivp(q, 0.0, "left", 0.0, 1.0)
    phil = solve_ivp(q, 0.0, "right", 0.0, 1.0)
    p0l = float(phi0.u.values[-1].real)
    pl0 = float(phil.u.values[0].real)
    scale = 1e-10 * q.grid.l
    if abs(p0l) < scale or abs(pl0) < scale:
        raise AdmissibilityError(
            "zero is numerically a Dirichlet eigenvalue; the kernel basis degenerates "
            f"(phi0(l)={p0l:.3e}, phil(0)={pl0:.3e})")
    # constant Wronskian implies phi0(l) = -phil(0); cheap integration check
    if abs(p0l + pl0) > 1e-8 * max(1.0, abs(p0l)):
        raise NumericalError(
            f"Wronskian drift: phi0(l)={p0l!r} vs -phil(0)={-pl0!r}; refine the grid")
    return KernelBasis(q, phi0, phil, p0l, pl0)


@dataclass(frozen=True)
class EigenSystem:
    """First eigenvalues and L2-orthonormal eigenfunctions of the Dirichlet
    extension, eigenfunction sign fixed by phi_n'(0) > 0."""

    q: Potential
    lam: np.ndarray
    phi: np.ndarray      # (count, n+1) node samples
    dphi: np.ndarray     # (count, n+1) derivative samples

    def __post_init__(self):
        if np.any(np.diff(self.lam) <= 0.0):
            raise NumericalError("eigenvalues are not strictly increasing")
        for a in (self.lam, self.phi, self.dphi):
            np.asarray(a).setflags(write=False)

    @property
    def grid(self) -> Grid:
        return self.q.grid

    @property
    def count(self) -> int:
        return int(self.lam.shape[0])

    def eigenfunction(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.phi[k].astype(complex))


def _sign_change_counts(U: np.ndarray) -> np.ndarray:
    """Sign changes over the samples past x=0, endpoint included.

    Including u(l) matters: just above an eigenvalue the new zero hugs
    the right end closer than any grid cell, so an interior-only count
    would lag by one until lambda grows enough to pull it inside.
    """
    s = np.sign(U[1:])
    s[s == 0.0] = 1.0
    return np.sum(s[:-1] * s[1:] < 0.0, axis=0)


def dirichlet_eigensystem(q: Potential, count: int, rel_tol: float = 1e-10) -> EigenSystem:
    """First `count` Dirichlet eigenpairs by shooting.

    Comparison bounds (k pi / l)^2 + [min q, max q] seed the brackets;
    oscillation counting isolates one root of u_lam(l) per bracket; an
    Illinois-type secant with bisection safeguards refines each root to
    relative tolerance rel_tol.
    """
    if count < 1:
        raise ConfigurationError("eigenvalue count must be >= 1")
    g = q.grid
    if g.n < 6 * count:
        raise ConfigurationError(
            f"grid too coarse to resolve {count} oscillating modes (n={g.n})")
    qn, qm, h = q.values, q.mid, g.h
    qlo = min(qn.min(), qm.min())
    qhi = max(qn.max(), qm.max())
    k = np.arange(1, count + 1, dtype=float)
    base = (k * np.pi / g.l) ** 2
    # pad covers both float fuzz and the RK4 phase drift of the discrete
    # shooting roots, which grows like lam^3 h^4 / 60 for oscillatory modes
    drift = (np.abs(base) + max(abs(qlo), abs(qhi))) ** 3 * h ** 4 / 10.0
    pad = 1e-6 * np.maximum(1.0, np.abs(base + qlo)) + drift
    a = base + qlo - pad
    b = base + qhi + pad

    def counts(lams):
        U, _ = _rk4_sweep(qn, qm, h, lams, 0.0, 1.0, keep_history=True)
        return _sign_change_counts(U)

    target_lo = np.arange(0, count)
    target_hi = np.arange(1, count + 1)
    ca, cb = counts(a), counts(b)
    if np.any(ca > target_lo) or np.any(cb < target_hi):
        raise NumericalError("comparison brackets failed oscillation sanity check")
    for _ in range(120):
        bad = (ca != target_lo) | (cb != target_hi)
        if not np.any(bad):
            break
        mid = 0.5 * (a + b)
        cm = counts(mid)
        move_hi = bad & (cm >= target_hi)
        move_lo = bad & ~move_hi
        b = np.where(move_hi, mid, b)
        cb = np.where(move_hi, cm, cb)
        a = np.where(move_lo, mid, a)
        ca = np.where(move_lo, cm, ca)
    else:
        raise NumericalError("oscillation counting failed to isolate eigenvalue brackets")

    def end_values(lams):
        u, _ = _rk4_sweep(qn, qm, h, lams, 0.0, 1.0)
        return u

    fa, fb = end_values(a), end_values(b)
    if np.any(fa * fb > 0.0):
        raise NumericalError("isolated bracket lost the sign change of u_lam(l)")
    for it in range(300):
        width = b - a
        tol = rel_tol * np.maximum(1.0, np.abs(a + b) * 0.5)
        if np.all(width <= tol):
            break
        c = b - fb * width / (fb - fa)
        # safeguard: fall back to bisection when the secant point degenerates
        lo = a + 1e-3 * width
        hi = b - 1e-3 * width
        c = np.where((c > lo) & (c < hi), c, 0.5 * (a + b))
        fc = end_values(c)
        right = fb * fc < 0.0
        a = np.where(right, b, a)
        fa = np.where(right, fb, 0.5 * fa)  # Illinois cut against stagnation
        b = c
        fb = fc
        swap = a > b
        a, b = np.where(swap, b, a), np.where(swap, a, b)
        fa, fb = np.where(swap, fb, fa), np.where(swap, fa, fb)
    else:
        raise NumericalError(f"eigenvalue refinement did not reach rel_tol={rel_tol}")

    lam = 0.5 * (a + b)
    U, V = _rk4_sweep(qn, qm, h, lam, 0.0, 1.0, keep_history=True)
    w = np.full(g.size, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= h / 3.0
    nrm = np.sqrt(w @ (U * U))
    phi = (U / nrm).T.copy()
    dphi = (V / nrm).T.copy()
    return EigenSystem(q, lam, phi, dphi)


def check_lower_bound(es: EigenSystem) -> float:
    """Smallest eigenvalue if positive, else an admissibility error.

    Positive definiteness of the Dirichlet extension is what the wave
    constructions downstream rely on; everything refuses to run without it.
    """
    lam1 = float(es.lam[0])
    if lam1 <= 0.0:
        raise AdmissibilityError(
            f"operator is not positive definite: lambda_1 = {lam1:.6g} <= 0")
    return lam1


def modal_coefficients(es: EigenSystem, g: GridFunction) -> np.ndarray:
    """Quadrature inner products (g, phi_n) for all computed modes."""
    grid = es.grid
    if g.grid.n != grid.n or g.grid.l != grid.l:
        raise ConfigurationError("grid mismatch between eigensystem and data")
    w = np.full(grid.size, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= grid.h / 3.0
    return es.phi @ (w * g.values)


def modal_tail(es: EigenSystem, g: GridFunction) -> float:
    """Bessel remainder ||g||^2 - sum |(g, phi_n)|^2 of the truncated
    expansion, clipped at zero."""
    c = modal_coefficients(es, g)
    total = quad(GridFunction(g.grid, g.values * np.conj(g.values))).real
    return float(max(0.0, total - np.sum(np.abs(c) ** 2)))


def _sine_kernel(lam: np.ndarray, t: float) -> np.ndarray:
    """sin(sqrt(lam) t)/sqrt(lam), continued through lam <= 0."""
    z = np.sqrt(lam.astype(complex))
    small = np.abs(z) * abs(t) < 1e-12
    out = np.where(small, t, np.sin(z * t) / np.where(small, 1.0, z))
    return out


def wave_propagator_apply(es: EigenSystem, t: float, g: GridFunction) -> GridFunction:
    """Apply the modal propagator sum_n sin(sqrt(lam_n) t)/sqrt(lam_n)
    (g, phi_n) phi_n over the computed modes."""
    c = modal_coefficients(es, g)
    kern = _sine_kernel(es.lam, float(t))
    vals = (kern * c) @ es.phi
    return GridFunction(es.grid, vals)
