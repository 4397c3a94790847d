"""Boundary control of the wave system: trace maps into the defect kernel,
controlled smooth waves, interior source waves, an explicit time-stepping
oracle, and reachability diagnostics.

The control dictionary translates endpoint signals (f0, fl) into the
time-dependent kernel element h(t) = a(t) phi0 + b(t) phil with
a(t) = -fl(t)/phi0(l) and b(t) = -f0(t)/phil(0); evaluated at the ends this
gives h(t)(0) = -f0(t) and h(t)(l) = -fl(t).  The controlled wave is
u^h(t) = -h(t) + int_0^t L^{-1/2} sin((t-s) L^{1/2}) h''(s) ds, realized on
the first computed modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np

from .analytic import ClosedForm, bump
from .errors import ConfigurationError, ContractError, NumericalError
from .grid import Grid, GridFunction, quad
from .sturm import EigenSystem, KernelBasis, Potential, modal_coefficients

__all__ = [
    "ControlSignal", "KernelControl", "WaveField", "SourceTerm",
    "SupportReport", "SpanEstimate", "gamma1", "gamma2", "control_to_kernel",
    "smooth_wave", "source_wave", "fdtd_oracle", "support_report",
    "reachable_span_estimate", "wavefield_write_csv",
]

_JET_TOL = 1e-9


def _check_admissible(f: ClosedForm, name: str, dead_time: float = 0.0):
    """Vanishing 2-jet at t=0, and identically zero on [0, dead_time]."""
    t0 = np.zeros(1)
    jet = [float(np.max(np.abs(f.deriv(t0, k)))) for k in range(3)]
    if max(jet) > _JET_TOL:
        raise ContractError(
            f"control {name} must vanish with its first two derivatives at t=0, "
            f"got 2-jet {jet}")
    if dead_time > 0.0:
        ts = np.linspace(0.0, dead_time, 33)
        if float(np.max(np.abs(f(ts)))) > _JET_TOL:
            raise ContractError(f"control {name} is not zero on the dead interval [0, {dead_time}]")


@dataclass(frozen=True)
class ControlSignal:
    """Endpoint control pair (f0 at x=0, fl at x=l) with analytic
    derivatives and a vanishing 2-jet at t=0."""

    f0: ClosedForm
    fl: ClosedForm
    dead_time: float = 0.0

    def __post_init__(self):
        _check_admissible(self.f0, "f0", self.dead_time)
        _check_admissible(self.fl, "fl", self.dead_time)

    def differentiate(self, k: int = 1) -> "ControlSignal":
        """Signal pair differentiated k times (used for graph sampling);
        admissibility of the derivatives is re-validated."""
        return ControlSignal(self.f0.differentiate(k), self.fl.differentiate(k))


@dataclass(frozen=True)
class KernelControl:
    """Kernel-valued control h(t) = a(t) phi0 + b(t) phil."""

    a: ClosedForm
    b: ClosedForm
    kb: KernelBasis

    def at(self, t: float) -> GridFunction:
        g = self.kb.grid
        av = complex(np.asarray(self.a(np.array([t]))).ravel()[0])
        bv = complex(np.asarray(self.b(np.array([t]))).ravel()[0])
        return GridFunction(g, av * self.kb.phi0.u.values + bv * self.kb.phil.u.values)


def gamma1(u: GridFunction, kb: KernelBasis) -> tuple:
    """Kernel coefficients of the first trace map,
    (a, b) = (-u(l)/phi0(l), -u(0)/phil(0))."""
    a = -complex(u.values[-1]) / kb.phi0_at_l
    b = -complex(u.values[0]) / kb.phil_at_0
    return a, b


def gamma2(u: GridFunction, lstar_u: GridFunction, kb: KernelBasis) -> tuple:
    """Kernel projection coefficients of the second trace map.

    Solves the 2x2 Gram system of (phi0, phil) against the inner products
    of lstar_u (samples of -u'' + q u) with the basis.
    """
    p0, pl = kb.phi0.u, kb.phil.u
    from .grid import inner
    g11 = inner(p0, p0).real
    g12 = inner(pl, p0).real
    g22 = inner(pl, pl).real
    r0 = inner(lstar_u, p0)
    rl = inner(lstar_u, pl)
    det = g11 * g22 - g12 * g12
    if abs(det) < 1e-14 * max(1.0, g11 * g22):
        raise NumericalError("kernel basis Gram matrix is numerically singular")
    c0 = (g22 * r0 - g12 * rl) / det
    cl = (g11 * rl - g12 * r0) / det
    return complex(c0), complex(cl)


def control_to_kernel(c: ControlSignal, kb: KernelBasis) -> KernelControl:
    """Dictionary between endpoint signals and kernel coefficients."""
    a = (-1.0 / kb.phi0_at_l) * c.fl
    b = (-1.0 / kb.phil_at_0) * c.f0
    return KernelControl(a, b, kb)


def _squad_points(t: float, lam_max: float) -> tuple:
    """Simpson grid in s for the Duhamel integral: step bounded by
    min(1/(10 sqrt(lam_max)), t/64), even subinterval count."""
    ds_cap = t / 64.0
    if lam_max > 0.0:
        ds_cap = min(ds_cap, 1.0 / (10.0 * math.sqrt(lam_max)))
    m = int(math.ceil(t / ds_cap))
    m += m % 2
    s = np.linspace(0.0, t, m + 1)
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    w *= (t / m) / 3.0
    return s, w


def _batched_smooth_wave(controls: Sequence[KernelControl], t: float,
                         es: EigenSystem) -> np.ndarray:
    """Wave snapshots u^h(t) for several kernel controls sharing one
    eigensystem; returns (len(controls), n+1)."""
    kb = controls[0].kb
    g = es.grid
    if t < 0.0:
        raise ConfigurationError("time must be nonnegative")
    out = np.zeros((len(controls), g.size), dtype=complex)
    if t > 0.0:
        s, w = _squad_points(t, float(np.max(es.lam)))
        mu_t = np.sqrt(es.lam.astype(complex))
        # K[n, j] = sin((t - s_j) sqrt(lam_n)) / sqrt(lam_n)
        tau = t - s
        Kmat = np.sin(np.outer(mu_t, tau)) / mu_t[:, None]
        c0 = modal_coefficients(es, kb.phi0.u)
        cl = modal_coefficients(es, kb.phil.u)
        A2 = np.stack([np.asarray(kc.a.deriv(s, 2), dtype=complex) for kc in controls])
        B2 = np.stack([np.asarray(kc.b.deriv(s, 2), dtype=complex) for kc in controls])
        Ia = (w * A2) @ Kmat.T            # (batch, modes)
        Ib = (w * B2) @ Kmat.T
        coeff = Ia * c0 + Ib * cl
        out += coeff @ es.phi.astype(complex)
    for i, kc in enumerate(controls):
        out[i] -= kc.at(t).values
    return out


def smooth_wave(h: KernelControl, t: float, es: EigenSystem) -> GridFunction:
    """Controlled wave u^h(t) = -h(t) + Duhamel term over the computed
    modes; the s-integral uses composite Simpson on the step rule of
    _squad_points."""
    vals = _batched_smooth_wave([h], t, es)[0]
    return GridFunction(es.grid, vals)


@dataclass(frozen=True)
class SourceTerm:
    """Separable interior source g(s) = signal(s) * profile."""

    profile: GridFunction
    signal: ClosedForm


def source_wave(g: Union[SourceTerm, Sequence[SourceTerm], Callable],
                t: float, es: EigenSystem, ds: float = None) -> GridFunction:
    """Source wave v^g(t) = int_0^t L^{-1/2} sin((t-s)L^{1/2}) g(s) ds.

    Separable terms use the modal fast path.  A callable s -> GridFunction
    is sampled on the quadrature grid; pass ds to coarsen it when the
    source is expensive.
    """
    grid = es.grid
    if t < 0.0:
        raise ConfigurationError("time must be nonnegative")
    if t == 0.0:
        return GridFunction(grid, np.zeros(grid.size, dtype=complex))
    s, w = _squad_points(t, float(np.max(es.lam)))
    if ds is not None:
        m = max(8, int(math.ceil(t / ds)))
        m += m % 2
        s = np.linspace(0.0, t, m + 1)
        w = np.full(m + 1, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        w *= (t / m) / 3.0
    mu = np.sqrt(es.lam.astype(complex))
    Kmat = np.sin(np.outer(mu, t - s)) / mu[:, None]
    if isinstance(g, SourceTerm):
        g = [g]
    if isinstance(g, Sequence):
        coeff = np.zeros(es.count, dtype=complex)
        for term in g:
            cn = modal_coefficients(es, term.profile)
            sig = np.asarray(term.signal(s), dtype=complex)
            coeff += cn * (Kmat @ (w * sig))
        return GridFunction(grid, coeff @ es.phi.astype(complex))
    if not callable(g):
        raise ContractError("source must be a SourceTerm, a sequence of them, or callable")
    wq = np.full(grid.size, 2.0)
    wq[1::2] = 4.0
    wq[0] = wq[-1] = 1.0
    wq *= grid.h / 3.0
    coeff = np.zeros(es.count, dtype=complex)
    for j, sj in enumerate(s):
        gj = g(float(sj))
        cj = es.phi @ (wq * gj.values)
        coeff += w[j] * Kmat[:, j] * cj
    return GridFunction(grid, coeff @ es.phi.astype(complex))


@dataclass(frozen=True)
class WaveField:
    """Time-stamped wave snapshots on a grid."""

    grid: Grid
    times: np.ndarray
    values: np.ndarray  # (len(times), n+1)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values)
        if values.shape != (times.shape[0], self.grid.size):
            raise ConfigurationError("wave field shape mismatch")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def snapshot(self, i: int) -> GridFunction:
        return GridFunction(self.grid, self.values[i].astype(complex))

    def nearest(self, t: float) -> GridFunction:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshot(i)


def fdtd_oracle(c: ControlSignal, q: Potential, horizon: float,
                cfl: float = 0.5, store_every: int = 1) -> WaveField:
    """Explicit leapfrog oracle for u_tt = u_xx - q u with endpoint data
    written directly into the boundary nodes and zero initial data.

    The first step is the Taylor start consistent with zero Cauchy data
    (interior stays zero, boundaries take the signal values).  Blow-up
    beyond 1e6 times the control scale raises a stability error.
    """
    if not (0.0 < cfl <= 0.98):
        raise ConfigurationError(f"leapfrog needs 0 < cfl <= 0.98, got {cfl}")
    if horizon <= 0.0:
        raise ConfigurationError("horizon must be positive")
    g = q.grid
    h = g.h
    steps = max(1, int(math.ceil(horizon / (cfl * h))))
    dt = horizon / steps
    r2 = (dt / h) ** 2
    qv = q.values
    tgrid = dt * np.arange(steps + 1)
    f0v = np.asarray(c.f0(tgrid), dtype=float)
    flv = np.asarray(c.fl(tgrid), dtype=float)
    scale = 1e6 * (1.0 + max(np.max(np.abs(f0v)), np.max(np.abs(flv))))

    stored_t = [0.0]
    stored_v = [np.zeros(g.size)]
    z_prev = np.zeros(g.size)
    z = np.zeros(g.size)
    z[0] = f0v[1]
    z[-1] = flv[1]
    if 1 % store_every == 0 or steps == 1:
        stored_t.append(tgrid[1])
        stored_v.append(z.copy())
    for m in range(2, steps + 1):
        z_next = np.empty(g.size)
        z_next[1:-1] = (2.0 * z[1:-1] - z_prev[1:-1]
                        + r2 * (z[2:] - 2.0 * z[1:-1] + z[:-2])
                        - dt * dt * qv[1:-1] * z[1:-1])
        z_next[0] = f0v[m]
        z_next[-1] = flv[m]
        z_prev, z = z, z_next
        if m % 100 == 0 and np.max(np.abs(z)) > scale:
            raise NumericalError(
                f"leapfrog instability detected at t={tgrid[m]:.6g} (cfl={cfl})")
        if m % store_every == 0 or m == steps:
            stored_t.append(tgrid[m])
            stored_v.append(z.copy())
    if np.max(np.abs(z)) > scale or not np.all(np.isfinite(z)):
        raise NumericalError(f"leapfrog instability detected at the horizon (cfl={cfl})")
    return WaveField(g, np.asarray(stored_t), np.asarray(stored_v))


@dataclass(frozen=True)
class SupportReport:
    """L2 mass budget of a snapshot against the reachable set at time t."""

    t: float
    margin: float
    region: tuple
    outside_mass: float
    total_mass: float
    ratio: float
    tol: float
    passed: bool


def support_report(u: GridFunction, t: float, tol: float = 1e-6,
                   margin_cells: int = 2) -> SupportReport:
    """Mass of u on [t+eps, l-t-eps] (eps = margin_cells * h) relative to
    the total; passes iff the ratio is below tol."""
    g = u.grid
    eps = margin_cells * g.h
    lo, hi = t + eps, g.l - t - eps
    dens = np.abs(u.values) ** 2
    total = quad(GridFunction(g, dens.astype(complex))).real
    if hi <= lo:
        return SupportReport(t, eps, (lo, hi), 0.0, total, 0.0, tol, True)
    mask = (g.x >= lo) & (g.x <= hi)
    outside = quad(GridFunction(g, np.where(mask, dens, 0.0).astype(complex))).real
    ratio = outside / total if total > 0.0 else 0.0
    return SupportReport(t, eps, (lo, hi), float(outside), float(total),
                         float(ratio), tol, bool(ratio <= tol))


@dataclass(frozen=True)
class SpanEstimate:
    """Snapshot matrix on a coarse probe grid and its singular values."""

    t: float
    coarse_x: np.ndarray
    snapshots: np.ndarray       # (samples, coarse_m)
    singular_values: np.ndarray

    @property
    def ratio(self) -> float:
        sv = self.singular_values
        return float(sv[-1] / sv[0]) if sv[0] > 0.0 else 0.0


def _cubic_interp_matrix(grid: Grid, xq: np.ndarray) -> np.ndarray:
    h = grid.h
    j = np.clip((xq / h).astype(int) - 1, 0, grid.n - 3)
    W = np.zeros((xq.shape[0], grid.size))
    for k in range(4):
        xk = grid.x[j + k]
        lk = np.ones_like(xq)
        for mth in range(4):
            if mth == k:
                continue
            lk = lk * (xq - grid.x[j + mth]) / (xk - grid.x[j + mth])
        W[np.arange(xq.shape[0]), j + k] = lk
    return W


def reachable_span_estimate(t: float, es: EigenSystem, kb: KernelBasis,
                            samples: int, coarse_m: int = 24,
                            seed: int = 0) -> SpanEstimate:
    """L2-density surrogate for the reachable set at time t.

    Draws `samples` random admissible bump controls acting from both ends,
    collects u^h(t) on a coarse probe grid of coarse_m interior points, and
    returns the singular value profile of the snapshot matrix.  Only spans
    in the L2 sense at fixed t are probed; no smooth-norm claim is made.
    """
    if samples < coarse_m:
        raise ConfigurationError(
            f"need at least as many samples ({samples}) as probe points ({coarse_m})")
    g = es.grid
    rng = np.random.default_rng(seed)
    controls = []
    for _ in range(samples):
        sig = {}
        for end in ("f0", "fl"):
            wsup = float(rng.uniform(0.1, 0.4)) * t
            lo = 0.02 * t + wsup / 2.0
            hi = 0.98 * t - wsup / 2.0
            center = float(rng.uniform(lo, hi))
            amp = float(rng.uniform(0.5, 1.5)) * (1.0 if rng.uniform() < 0.5 else -1.0)
            sig[end] = bump(center, wsup, amp)
        controls.append(control_to_kernel(ControlSignal(sig["f0"], sig["fl"]), kb))
    fields = _batched_smooth_wave(controls, t, es).real
    xq = g.l * (np.arange(1, coarse_m + 1)) / (coarse_m + 1.0)
    W = _cubic_interp_matrix(g, xq)
    A = fields @ W.T
    sv = np.linalg.svd(A, compute_uv=False)
    return SpanEstimate(t, xq, A, sv)


def wavefield_write_csv(wf: WaveField, path) -> None:
    """Write a wave field as CSV rows t,x,re,im (full precision)."""
    fmt = "%.17g"
    path = Path(path)
    with path.open("w", encoding="ascii", newline="\n") as fh:
        fh.write("t,x,re,im\n")
        for ti, row in zip(wf.times, wf.values):
            for xv, val in zip(wf.grid.x, row):
                cv = complex(val)
                fh.write(f"{fmt % ti},{fmt % xv},{fmt % cv.real},{fmt % cv.imag}\n")
