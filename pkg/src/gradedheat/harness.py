"""Epsilon-sweep verification engine.

Runs the three named experiments over a net of regularisation parameters,
fits moderateness exponents to the measured norm nets, and turns the fits
into verdicts:

    existence    sup_t ||u_eps(t)||  must grow at most polynomially in
                 1/omega(eps)  ->  Moderate(N) via check_moderate
    uniqueness   perturb data by e^{-1/eps} (or omega(eps) as the negative
                 control); the solution difference net must vanish faster
                 than omega^k_max  ->  Negligible via check_negligible
    consistency  mollified problems must converge to the classical solution,
                 strictly monotonically and below a floor

Per-eps solves are independent and run on a thread pool; the report is a
deterministic ordered reduction, so CSV output is byte-identical for any
thread count.  A passing consistency run reports Moderate carrying the
fitted slope of the error net (negative; its magnitude is the empirical
convergence order).
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import __version__
from .config import SweepConfig, config_hash, parse_norm_token
from .groups import Field
from .mollify import (
    Mollifier,
    bump_field,
    omega,
    regularize_field,
    regularize_potential,
)
from .norms import lp_norm
from .operators import build_rockland
from .solve import CauchyProblem, Trajectory, step_implicit

CONSISTENCY_FLOOR_FACTOR = 0.1


class FitResult(NamedTuple):
    exponent: float
    stderr: float


def fit_exponent(pairs) -> FitResult:
    """Least-squares slope of log(value) against log(1/omega).

    pairs is a sequence of (omega, value) with omega strictly decreasing and
    every value positive; at least 4 points are required.  The slope is the
    moderateness exponent N in value ~ omega^{-N}; decaying nets give
    negative slopes.
    """
    pairs = list(pairs)
    if len(pairs) < 4:
        raise ValueError(f"exponent fit needs at least 4 points, got {len(pairs)}")
    omegas = np.array([w for w, _ in pairs], dtype=float)
    values = np.array([v for _, v in pairs], dtype=float)
    if np.any(values <= 0.0):
        raise ValueError("exponent fit needs positive values (log undefined)")
    if np.any(np.diff(omegas) >= 0.0):
        raise ValueError("omega must be strictly decreasing along the net")
    x = np.log(1.0 / omegas)
    y = np.log(values)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = len(pairs) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(max(float(np.sum(resid**2)), 0.0) / dof / sxx)
    return FitResult(float(coef[1]), stderr)


@dataclass(frozen=True)
class Verdict:
    """Moderate(N) / Negligible / Fail(reason)."""

    kind: str
    exponent: float | None = None
    reason: str | None = None

    def __post_init__(self):
        if self.kind not in ("Moderate", "Negligible", "Fail"):
            raise ValueError(f"unknown verdict kind {self.kind!r}")

    @property
    def passed(self) -> bool:
        return self.kind != "Fail"

    def __str__(self) -> str:
        if self.kind == "Moderate":
            return f"Moderate(N={self.exponent:.6g})"
        if self.kind == "Negligible":
            return "Negligible"
        return f"Fail({self.reason})"


def check_moderate(fit: FitResult, n_max: int) -> Verdict:
    """Moderate iff the fitted exponent is at most n_max plus 3 stderr."""
    if fit.exponent <= n_max + 3.0 * fit.stderr:
        return Verdict("Moderate", exponent=fit.exponent)
    return Verdict("Fail",
                   exponent=fit.exponent,
                   reason=f"fitted exponent {fit.exponent:.6g} exceeds "
                          f"N_max = {n_max} + 3*stderr ({fit.stderr:.3g})")


def check_negligible(pairs, k_max: int) -> Verdict:
    """Negligible iff the net decays at order k_max or faster.

    Zero values are admitted: they mean the difference fell below the
    floating-point floor, which is stronger than any polynomial decay.  An
    all-zero net is Negligible outright; scattered zeros are dropped from
    the fit, and if fewer than 4 positive points remain the zeros carry the
    verdict.
    """
    pairs = list(pairs)
    if len(pairs) < 4:
        raise ValueError(f"negligibility check needs at least 4 points, got {len(pairs)}")
    positive = [(w, v) for w, v in pairs if v > 0.0]
    if any(v < 0.0 for _, v in pairs):
        raise ValueError("difference norms cannot be negative")
    if len(positive) < 4:
        return Verdict("Negligible")
    fit = fit_exponent(positive)
    if fit.exponent <= -float(k_max):
        return Verdict("Negligible", exponent=fit.exponent)
    return Verdict("Fail",
                   exponent=fit.exponent,
                   reason=f"difference net decays at order {-fit.exponent:.6g} "
                          f"< k_max = {k_max}")


@dataclass(frozen=True)
class SweepRecord:
    epsilon: float
    omega: float
    norm_sup_t: float
    fitted_flag: bool
    extras: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class SweepReport:
    config: SweepConfig
    records: tuple[SweepRecord, ...]
    fit: FitResult | None
    verdict: Verdict
    extra_fits: tuple[tuple[str, FitResult], ...] = ()
    wall_clock: float = 0.0

    def extra_fit(self, name: str) -> FitResult:
        for key, fit in self.extra_fits:
            if key == name:
                return fit
        raise KeyError(name)


def _sup_norm(traj: Trajectory, norm_token: str) -> float:
    """Sup over recorded times of the configured norm.

    l2 and hnu2 read the per-step series; linf and lp:<p> are evaluated on
    the stored (thinned) states.
    """
    kind, p = parse_norm_token(norm_token)
    if kind == "l2":
        return float(np.max(traj.l2))
    if kind == "hnu2":
        return float(np.max(traj.h_nu2))
    if kind == "linf":
        return max(float(np.abs(s.values).max()) for s in traj.states)
    return max(lp_norm(s, p) for s in traj.states)


def _l2_state_distance(a: Trajectory, b: Trajectory) -> float:
    """Sup over the common stored times of ||a(t) - b(t)||_{L2}."""
    if len(a.states) != len(b.states):
        raise ValueError("trajectories store different numbers of states")
    vol = a.states[0].grid.cell_volume
    worst = 0.0
    for fa, fb in zip(a.states, b.states):
        d = fa.values - fb.values
        worst = max(worst, math.sqrt(float(np.sum(d * d)) * vol))
    return worst


def _h_nu2_of(field: Field, op) -> float:
    # L2 + homogeneous seminorm via the quadratic form; no eigensystem needed
    return lp_norm(field, 2) + math.sqrt(op.quad_form(field))


def _run_parallel(cfg: SweepConfig, worker):
    """worker(eps) for each eps concurrently; results merged in net order.

    Returns (outcomes, first_error) where outcomes[i] is the worker result
    or None if that eps raised; first_error is (eps, exception) for the
    largest failing eps.
    """
    n = len(cfg.epsilons)
    outcomes = [None] * n
    errors = [None] * n
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        futures = [pool.submit(worker, eps) for eps in cfg.epsilons]
        for i, fut in enumerate(futures):
            try:
                outcomes[i] = fut.result()
            except Exception as exc:  # noqa: BLE001 - verdicts must not crash the sweep
                errors[i] = exc
    first_error = None
    for eps, exc in zip(cfg.epsilons, errors):
        if exc is not None:
            first_error = (eps, exc)
            break
    return outcomes, first_error


def _fail_report(cfg, records, eps, exc, t0) -> SweepReport:
    reason = f"epsilon={eps:g}: {type(exc).__name__}: {exc}"
    return SweepReport(config=cfg, records=tuple(records), fit=None,
                       verdict=Verdict("Fail", reason=reason),
                       wall_clock=time.perf_counter() - t0)


def _collect_extra_fits(records, names) -> tuple[tuple[str, FitResult], ...]:
    fits = []
    for name in names:
        pairs = [(r.omega, dict(r.extras)[name]) for r in records]
        if len(pairs) >= 4 and all(v > 0 for _, v in pairs):
            fits.append((name, fit_exponent(pairs)))
    return tuple(fits)


def existence_experiment(cfg: SweepConfig) -> SweepReport:
    """Moderateness of the solution net sup_t ||u_eps(t)||.

    Each eps regularises the potential (under the V-schedule) and the bump
    initial datum (under the u0-schedule), integrates by backward Euler and
    records the sup of the configured norm.  The fit always regresses
    against the main schedule's omega.  Auxiliary nets (L2 and H^{nu/2}
    sups, ||V_eps||_inf under both schedules, the a-priori majorant
    (1 + ||V_eps||_inf) ||u0_eps||_{H^{nu/2}}) are fitted alongside and
    reported in extra_fits.
    """
    if cfg.experiment != "existence":
        raise ValueError(f"config is for {cfg.experiment!r}, not 'existence'")
    t0 = time.perf_counter()
    grid = cfg.make_grid()
    op = build_rockland(grid)
    psi = Mollifier(grid.dim, cfg.mollifier_radius)
    u0_raw = bump_field(grid, cfg.u0_width, cfg.u0_amplitude)

    def worker(eps):
        w_fit = omega(cfg.schedule, eps)
        w_v = omega(cfg.v_schedule, eps)
        v_eps = regularize_potential(cfg.potential, eps, cfg.v_schedule, psi, grid)
        u0_eps = regularize_field(u0_raw, eps, cfg.u0_schedule, psi)
        traj = step_implicit(CauchyProblem(op, v_eps, u0_eps, cfg.T, cfg.dt))
        v_linf = float(np.abs(v_eps.values).max())
        u0_h = _h_nu2_of(u0_eps, op)
        extras = (
            ("sup_l2", float(np.max(traj.l2))),
            ("sup_hnu2", float(np.max(traj.h_nu2))),
            ("v_linf", v_linf),
            ("v_linf_vs_v_schedule", v_linf),  # fitted against w_v below
            ("u0_hnu2", u0_h),
            ("majorant", (1.0 + v_linf) * u0_h),
        )
        value = _sup_norm(traj, cfg.norm)
        return w_fit, w_v, value, extras

    outcomes, failure = _run_parallel(cfg, worker)
    records = []
    v_schedule_pairs = []
    for eps, out in zip(cfg.epsilons, outcomes):
        if out is None:
            continue
        w_fit, w_v, value, extras = out
        records.append(SweepRecord(eps, w_fit, value, fitted_flag=False, extras=extras))
        v_schedule_pairs.append((w_v, dict(extras)["v_linf"]))
    if failure is not None:
        return _fail_report(cfg, records, failure[0], failure[1], t0)

    fit = fit_exponent([(r.omega, r.norm_sup_t) for r in records])
    verdict = check_moderate(fit, cfg.n_max)
    records = [SweepRecord(r.epsilon, r.omega, r.norm_sup_t, True, r.extras)
               for r in records]
    extra_fits = list(_collect_extra_fits(
        records, ("sup_l2", "sup_hnu2", "v_linf", "u0_hnu2", "majorant")))
    if all(v > 0 for _, v in v_schedule_pairs) and len(v_schedule_pairs) >= 4:
        try:
            extra_fits.append(("v_linf_vs_v_schedule", fit_exponent(v_schedule_pairs)))
        except ValueError:
            pass  # shared schedule can make the two omega nets identical; fine
    return SweepReport(config=cfg, records=tuple(records), fit=fit, verdict=verdict,
                       extra_fits=tuple(extra_fits),
                       wall_clock=time.perf_counter() - t0)


def _perturbation_size(cfg: SweepConfig, eps: float) -> float:
    if cfg.perturbation == "exp":
        return math.exp(-1.0 / eps)
    if cfg.perturbation == "omega1":
        return omega(cfg.schedule, eps)
    return 0.0


def uniqueness_experiment(cfg: SweepConfig) -> SweepReport:
    """Negligibility of the solution difference under data perturbations.

    Solves the configured problem and its perturbed twin
    V_eps + sigma, u0_eps + sigma * (unit-L2 bump) with
    sigma = e^{-1/eps} (or omega(eps) for the negative control), and applies
    check_negligible to the net sup_t ||u_eps - u~_eps||_{L2}.
    """
    if cfg.experiment != "uniqueness":
        raise ValueError(f"config is for {cfg.experiment!r}, not 'uniqueness'")
    t0 = time.perf_counter()
    grid = cfg.make_grid()
    op = build_rockland(grid)
    psi = Mollifier(grid.dim, cfg.mollifier_radius)
    u0_raw = bump_field(grid, cfg.u0_width, cfg.u0_amplitude)
    probe = bump_field(grid, cfg.u0_width)
    probe = Field(grid, probe.values / lp_norm(probe, 2))

    def worker(eps):
        w = omega(cfg.schedule, eps)
        sigma = _perturbation_size(cfg, eps)
        v_eps = regularize_potential(cfg.potential, eps, cfg.v_schedule, psi, grid)
        u0_eps = regularize_field(u0_raw, eps, cfg.u0_schedule, psi)
        v_tilde = Field(grid, v_eps.values + sigma)
        u0_tilde = Field(grid, u0_eps.values + sigma * probe.values)
        base = step_implicit(CauchyProblem(op, v_eps, u0_eps, cfg.T, cfg.dt))
        tilde = step_implicit(CauchyProblem(op, v_tilde, u0_tilde, cfg.T, cfg.dt))
        diff = _l2_state_distance(base, tilde)
        return w, diff, (("perturbation_size", sigma),)

    outcomes, failure = _run_parallel(cfg, worker)
    records = [SweepRecord(eps, out[0], out[1], fitted_flag=False, extras=out[2])
               for eps, out in zip(cfg.epsilons, outcomes) if out is not None]
    if failure is not None:
        return _fail_report(cfg, records, failure[0], failure[1], t0)

    pairs = [(r.omega, r.norm_sup_t) for r in records]
    verdict = check_negligible(pairs, cfg.k_max)
    positive = [(w, v) for w, v in pairs if v > 0.0]
    fit = fit_exponent(positive) if len(positive) >= 4 else None
    records = [SweepRecord(r.epsilon, r.omega, r.norm_sup_t,
                           fitted_flag=(fit is not None and r.norm_sup_t > 0.0),
                           extras=r.extras)
               for r in records]
    return SweepReport(config=cfg, records=tuple(records), fit=fit, verdict=verdict,
                       wall_clock=time.perf_counter() - t0)


def consistency_experiment(cfg: SweepConfig) -> SweepReport:
    """Convergence of mollified solutions to the classical one.

    Needs a continuous potential: a sampled profile vanishing at the box
    boundary (the compactly supported continuous surrogate) or a constant.
    The classical reference solves with the unregularised V; each eps then
    solves with V * psi_eps and u0 * psi_eps.  Pass requires the error net
    e(eps) = sup_t ||u_eps - u||_{L2} to decrease strictly and to end below
    CONSISTENCY_FLOOR_FACTOR times its first value.
    """
    if cfg.experiment != "consistency":
        raise ValueError(f"config is for {cfg.experiment!r}, not 'consistency'")
    if cfg.potential.kind not in ("sampled", "constant"):
        raise ValueError(
            "consistency needs a continuous potential (classical solutions are "
            "defined against C_0 data); delta-type potentials have no classical "
            "reference")
    t0 = time.perf_counter()
    grid = cfg.make_grid()
    op = build_rockland(grid)
    psi = Mollifier(grid.dim, cfg.mollifier_radius)
    u0_raw = bump_field(grid, cfg.u0_width, cfg.u0_amplitude)
    if cfg.potential.kind == "constant":
        v_raw = Field(grid, np.full(grid.shape, cfg.potential.value))
    else:
        v_raw = cfg.potential.sample
    reference = step_implicit(CauchyProblem(op, v_raw, u0_raw, cfg.T, cfg.dt))

    def worker(eps):
        w = omega(cfg.schedule, eps)
        v_eps = regularize_potential(cfg.potential, eps, cfg.v_schedule, psi, grid)
        u0_eps = regularize_field(u0_raw, eps, cfg.u0_schedule, psi)
        traj = step_implicit(CauchyProblem(op, v_eps, u0_eps, cfg.T, cfg.dt))
        err = _l2_state_distance(traj, reference)
        v_err = float(np.abs(v_eps.values - v_raw.values).max())
        return w, err, (("v_error_linf", v_err),)

    outcomes, failure = _run_parallel(cfg, worker)
    records = [SweepRecord(eps, out[0], out[1], fitted_flag=False, extras=out[2])
               for eps, out in zip(cfg.epsilons, outcomes) if out is not None]
    if failure is not None:
        return _fail_report(cfg, records, failure[0], failure[1], t0)

    errors = [r.norm_sup_t for r in records]
    pairs = [(r.omega, v) for r, v in zip(records, errors)]
    fit = None
    if len(pairs) >= 4 and all(v > 0 for _, v in pairs):
        fit = fit_exponent(pairs)
    strictly_decreasing = all(b < a for a, b in zip(errors, errors[1:]))
    floor = CONSISTENCY_FLOOR_FACTOR * errors[0]
    if not strictly_decreasing:
        verdict = Verdict("Fail", reason="error net is not strictly decreasing")
    elif errors[-1] >= floor:
        verdict = Verdict("Fail",
                          reason=f"final error {errors[-1]:.3g} is not below "
                                 f"{CONSISTENCY_FLOOR_FACTOR} of the first ({errors[0]:.3g})")
    else:
        verdict = Verdict("Moderate",
                          exponent=fit.exponent if fit is not None else 0.0)
    records = [SweepRecord(r.epsilon, r.omega, r.norm_sup_t,
                           fitted_flag=fit is not None, extras=r.extras)
               for r in records]
    extra_fits = _collect_extra_fits(records, ("v_error_linf",))
    return SweepReport(config=cfg, records=tuple(records), fit=fit, verdict=verdict,
                       extra_fits=extra_fits, wall_clock=time.perf_counter() - t0)


_EXPERIMENT_RUNNERS = {
    "existence": existence_experiment,
    "uniqueness": uniqueness_experiment,
    "consistency": consistency_experiment,
}


def run_experiment(cfg: SweepConfig) -> SweepReport:
    return _EXPERIMENT_RUNNERS[cfg.experiment](cfg)


def persist_report(report: SweepReport, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.csv and manifest.txt under out_dir.

    The CSV body is a pure function of the configuration, so re-running an
    identical config reproduces it byte for byte; the manifest additionally
    carries wall-clock time and is not expected to be stable.
    """
    if not report.records:
        raise ValueError("nothing to persist: the report has no epsilon records")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "report.csv"
    manifest_path = out / "manifest.txt"
    lines = ["epsilon,omega,norm_sup_t,fitted_flag"]
    for r in report.records:
        lines.append(f"{r.epsilon:.17g},{r.omega:.17g},{r.norm_sup_t:.17g},"
                     f"{int(r.fitted_flag)}")
    body = "\n".join(lines) + "\n"
    try:
        with open(csv_path, "w", newline="\n") as fh:
            fh.write(body)
        with open(manifest_path, "w", newline="\n") as fh:
            fh.write(_manifest_text(report))
    except OSError as exc:
        raise OSError(f"cannot write report under {out}: {exc}") from exc
    return csv_path, manifest_path


def _manifest_text(report: SweepReport) -> str:
    fit = report.fit
    lines = [
        f"config_hash: {config_hash(report.config)}",
        f"version: {__version__}",
        f"experiment: {report.config.experiment}",
        f"schedule: {report.config.schedule}",
        f"norm: {report.config.norm}",
        f"records: {len(report.records)}",
        f"wall_clock_seconds: {report.wall_clock:.3f}",
        f"fitted_exponent: {fit.exponent:.17g}" if fit else "fitted_exponent: n/a",
        f"fit_stderr: {fit.stderr:.17g}" if fit else "fit_stderr: n/a",
    ]
    for name, extra in report.extra_fits:
        lines.append(f"extra_fit_{name}: {extra.exponent:.17g} "
                     f"(stderr {extra.stderr:.3g})")
    lines.append(
        "scope_note: verdicts are empirical statements about the configured "
        "finite epsilon net and the representative perturbation family, not "
        "proofs over all moderate nets")
    lines.append(f"VERDICT: {report.verdict}")
    return "\n".join(lines) + "\n"
