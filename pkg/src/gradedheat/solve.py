"""Time integrators for u_t + Ru + Vu = 0.

Three routes to the same trajectory: a sparse backward-Euler stepper (the
workhorse), a spectral Duhamel/Picard solver, and a dense eigendecomposition
oracle for cross-checks on small grids.  All of them record L2, homogeneous
order-nu/2 Sobolev and (for nonnegative V) energy series at every step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import CapabilityError, ConvergenceError, StabilityError
from .groups import Field
from .norms import lp_norm
from .operators import SPECTRAL_DOF_LIMIT, DiscreteRockland

PICARD_TOL = 1e-12
STATE_THIN_TARGET = 64


@dataclass(frozen=True)
class CauchyProblem:
    """One regularised Cauchy problem: u_t + Ru + Vu = 0, u(0) = u0."""

    op: DiscreteRockland
    V: Field
    u0: Field
    T: float
    dt: float

    def __post_init__(self):
        if self.V.grid != self.op.grid or self.u0.grid != self.op.grid:
            raise ValueError("operator, potential and initial datum must share one grid")
        if self.T <= 0 or self.dt <= 0:
            raise ValueError("T and dt must be positive")
        if self.dt > self.T:
            raise ValueError(f"dt = {self.dt} exceeds T = {self.T}")

    @property
    def steps(self) -> int:
        # small backoff so T/dt = 4.999999... still means 5 steps
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    @property
    def dt_effective(self) -> float:
        """Uniform step that lands exactly on T."""
        return self.T / self.steps


@dataclass(frozen=True)
class Trajectory:
    """Norm series at every step plus a thinned sequence of states.

    energy is None when the potential takes negative values; the energy
    functional is only defined for V >= 0 and the sign-changing case is
    monitored through Gronwall ratios instead.
    """

    times: np.ndarray
    l2: np.ndarray
    sobolev_nu2: np.ndarray
    h_nu2: np.ndarray
    energy: np.ndarray | None
    state_times: np.ndarray
    states: tuple[Field, ...]

    def __post_init__(self):
        if self.times[0] != 0.0 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must increase strictly from 0")
        for name in ("l2", "sobolev_nu2", "h_nu2"):
            series = getattr(self, name)
            if not np.all(np.isfinite(series)) or np.any(series < 0):
                raise ValueError(f"{name} series must be finite and nonnegative")
        if self.energy is not None:
            if not np.all(np.isfinite(self.energy)) or np.any(self.energy < 0):
                raise ValueError("energy series must be finite and nonnegative")

    @property
    def final(self) -> Field:
        return self.states[-1]


class _Recorder:
    # norm reductions use np.sum (fixed pairwise order) rather than BLAS dot
    # products so that concurrent sweeps are bit-stable across thread counts
    def __init__(self, problem: CauchyProblem):
        grid = problem.u0.grid
        self.grid = grid
        self.vol = grid.cell_volume
        self.mat = problem.op.matrix
        self.v_flat = problem.V.values.ravel()
        self.track_energy = bool(self.v_flat.min() >= 0.0)
        self.steps = problem.steps
        self.thin = max(1, problem.steps // STATE_THIN_TARGET)
        self.times, self.l2, self.sob, self.e = [], [], [], []
        self.state_times, self.states = [], []

    def push(self, k: int, t: float, u: np.ndarray):
        l2 = math.sqrt(max(float(np.sum(u * u)) * self.vol, 0.0))
        quad = max(float(np.sum(u * (self.mat @ u))) * self.vol, 0.0)
        self.times.append(t)
        self.l2.append(l2)
        self.sob.append(math.sqrt(quad))
        if self.track_energy:
            self.e.append(quad + float(np.sum(self.v_flat * u * u)) * self.vol)
        if k % self.thin == 0 or k == self.steps:
            self.state_times.append(t)
            self.states.append(Field(self.grid, u.reshape(self.grid.shape)))

    def build(self) -> Trajectory:
        l2 = np.array(self.l2)
        sob = np.array(self.sob)
        return Trajectory(
            times=np.array(self.times),
            l2=l2,
            sobolev_nu2=sob,
            h_nu2=l2 + sob,
            energy=np.array(self.e) if self.track_energy else None,
            state_times=np.array(self.state_times),
            states=tuple(self.states),
        )


def step_implicit(p: CauchyProblem) -> Trajectory:
    """Backward Euler: u^{n+1} = (I + dt(R + V))^{-1} u^n.

    Unconditionally contractive for V >= 0, which is what makes the discrete
    energy inequality hold step by step.  For sign-changing V the factor is
    only defined when dt * max(V^-) < 1.
    """
    dt = p.dt_effective
    v_flat = p.V.values.ravel()
    v_minus = max(0.0, -float(v_flat.min()))
    if v_minus > 0.0 and dt * v_minus >= 1.0:
        raise StabilityError(
            f"backward Euler needs dt < 1/max(V^-) = {1.0 / v_minus:.6g}, got dt = {dt:.6g}")
    n = v_flat.size
    system = sp.identity(n, format="csr") + dt * (p.op.matrix + sp.diags(v_flat))
    try:
        lu = splu(system.tocsc())
    except RuntimeError as exc:
        raise StabilityError(f"implicit system could not be factorised: {exc}") from exc
    rec = _Recorder(p)
    u = p.u0.values.ravel().astype(float)
    rec.push(0, 0.0, u)
    for k in range(1, p.steps + 1):
        u = lu.solve(u)
        rec.push(k, k * dt, u)
    return rec.build()


def solve_duhamel(p: CauchyProblem, n_picard: int = 8) -> Trajectory:
    """Picard iteration on u(t) = e^{-tR}u0 - int_0^t e^{-(t-s)R} (V u)(s) ds.

    The semigroup acts spectrally; the time integral is a trapezoid rule on
    the solver's own dt-grid, accumulated by the one-step recurrence
    I_k = e^{-dt R} I_{k-1} + dt/2 (e^{-dt R} f_{k-1} + f_k).
    Iteration stops early once the relative update drops below PICARD_TOL.
    """
    if n_picard < 0:
        raise ValueError("n_picard must be nonnegative")
    w, vecs = p.op.eigensystem()
    dt = p.dt_effective
    steps = p.steps
    c0 = vecs.T @ p.u0.values.ravel()
    decay = np.exp(-dt * w)
    hom = np.empty((steps + 1, w.size))
    hom[0] = c0
    for k in range(1, steps + 1):
        hom[k] = decay * hom[k - 1]

    v_flat = p.V.values.ravel()
    coeff = hom.copy()
    rel_update = 0.0
    for _ in range(n_picard):
        phys = coeff @ vecs.T
        src = (-v_flat * phys) @ vecs
        new = np.empty_like(coeff)
        new[0] = c0
        integral = np.zeros_like(c0)
        for k in range(1, steps + 1):
            integral = decay * integral + 0.5 * dt * (decay * src[k - 1] + src[k])
            new[k] = hom[k] + integral
        num = float(np.max(np.sqrt(np.sum((new - coeff) ** 2, axis=1))))
        den = float(np.max(np.sqrt(np.sum(new**2, axis=1))))
        rel_update = num / den if den > 0.0 else 0.0
        coeff = new
        if rel_update <= PICARD_TOL:
            break
    if rel_update > 1.0:
        raise ConvergenceError(
            f"Picard iteration is diverging: relative update {rel_update:.3g} "
            f"after {n_picard} sweeps; shorten T or shrink the potential")

    rec = _Recorder(p)
    for k in range(steps + 1):
        rec.push(k, k * dt, vecs @ coeff[k])
    return rec.build()


def oracle_expm(p: CauchyProblem, dof_limit: int = SPECTRAL_DOF_LIMIT) -> Trajectory:
    """Exact flow e^{-t(R + V)}u0 by dense eigendecomposition.

    Brute force and independent of the steppers above, so it serves as the
    convergence reference.  Only viable on small grids.
    """
    n = p.u0.values.size
    if n > dof_limit:
        raise CapabilityError(
            f"dense oracle needs dof <= {dof_limit}, grid has {n}; use a smaller grid")
    ham = p.op.matrix.toarray() + np.diag(p.V.values.ravel())
    ham = 0.5 * (ham + ham.T)
    w, vecs = np.linalg.eigh(ham)
    c0 = vecs.T @ p.u0.values.ravel()
    dt = p.dt_effective
    rec = _Recorder(p)
    for k in range(p.steps + 1):
        rec.push(k, k * dt, vecs @ (np.exp(-k * dt * w) * c0))
    return rec.build()


def energy(u: Field, V: Field, op: DiscreteRockland) -> float:
    """E(u) = ||R^{1/2} u||_{L2}^2 + ||V^{1/2} u||_{L2}^2, for V >= 0."""
    if u.grid != op.grid or V.grid != op.grid:
        raise ValueError("field, potential and operator must share one grid")
    if float(V.values.min()) < 0.0:
        raise ValueError(
            "energy is defined for nonnegative potentials only; monitor "
            "sign-changing V through apriori_ratios(..., 'RealGronwall')")
    quad = op.quad_form(u)
    return quad + float(np.sum(V.values * u.values * u.values)) * u.grid.cell_volume


_RATIO_KINDS = ("PosLinf", "PosLp", "RealGronwall")


def apriori_ratios(traj: Trajectory, V: Field, u0: Field, which: str,
                   nu: int = 2) -> np.ndarray:
    """Measured norm divided by its a-priori majorant, per recorded time.

    PosLinf:      ||u(t)||_{H^{nu/2}} / [(1 + ||V||_inf) ||u0||_{H^{nu/2}}]
    PosLp:        same numerator over
                  ||u0||_{H^{nu/2}} (1 + ||V||_{2Q/nu}) (1 + ||V||_{Q/nu})^{1/2},
                  requires Q > nu
    RealGronwall: ||u(t)||_{L2} / [exp(t ||V||_inf) ||u0||_{L2}]

    The u0 norms of the first two are read off the trajectory's t = 0 record.
    A zero initial datum gives identically zero ratios.
    """
    if which not in _RATIO_KINDS:
        raise ValueError(f"which must be one of {_RATIO_KINDS}, got {which!r}")
    if which == "RealGronwall":
        bound = np.exp(traj.times * float(np.abs(V.values).max())) * lp_norm(u0, 2)
        return _safe_ratio(traj.l2, bound)
    if which == "PosLp":
        Q = V.grid.group.Q
        if Q <= nu:
            raise ValueError(f"PosLp majorant needs Q > nu, got Q = {Q}, nu = {nu}")
        bracket = (1.0 + lp_norm(V, 2.0 * Q / nu)) * math.sqrt(1.0 + lp_norm(V, Q / nu))
    else:
        bracket = 1.0 + float(np.abs(V.values).max())
    bound = np.full_like(traj.h_nu2, bracket * traj.h_nu2[0])
    return _safe_ratio(traj.h_nu2, bound)


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num)
    mask = den > 0.0
    out[mask] = num[mask] / den[mask]
    return out
