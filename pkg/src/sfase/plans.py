"""Experiment plans: single runs, ensembles, parameter sweeps, analytics.

A plan is a plain dict-serializable description of everything needed to
reproduce an experiment (scenario, grids, seeds, worker count).  run_plan
writes the artifacts plus a manifest; re-running from the manifest alone
reproduces the outputs bitwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import io, oracle
from .ensemble import EnsembleSpec, run_ensemble
from .fitting import fit, classify_regime
from .params import (Scenario, ParameterError, scenario_from_dict,
                     scenario_to_dict, validation_warnings)
from .solver import GridSpec, NoiseSpec, SolverError, make_grid, run

KINDS = ("single", "ensemble", "sweep_Ln", "sweep_rNp", "sweep_L",
         "sweep_Tp", "oracle", "fit")


@dataclass
class ExperimentPlan:
    kind: str
    scenario: dict                      # flat scenario schema (unit-suffixed keys)
    out_dir: str
    master_seed: int = 0
    workers: int = 1
    n_realizations: int = 100
    grid_nz: int | None = None
    t_end_ps: float | None = None
    snapshot_stride: int = 0
    # sweep axes (each strictly increasing)
    l_grid_mm: list[float] | None = None
    n_grid_per_mm3: list[float] | None = None
    r_grid_um: list[float] | None = None
    np_grid: list[float] | None = None
    tp_grid_fs: list[float] | None = None
    q_grid: list[float] | None = None
    fixed_alpha: float | None = None    # sweep_L: derive n from alpha at each L
    # fit inputs
    fit_family: str | None = None
    fit_data: str | None = None
    fit_x_col: str = "alpha"
    fit_y_col: str = "peak_fwd"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown plan kind {self.kind!r}")
        for name in ("l_grid_mm", "n_grid_per_mm3", "r_grid_um", "np_grid",
                     "tp_grid_fs", "q_grid"):
            grid = getattr(self, name)
            if grid is not None:
                if len(grid) == 0 or np.any(np.diff(grid) <= 0):
                    raise ParameterError(
                        f"plan.{name} must be non-empty and strictly increasing")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentPlan":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ParameterError(f"unknown plan keys: {', '.join(unknown)}")
        return cls(**raw)


def _resolved(plan: ExperimentPlan) -> tuple[Scenario, GridSpec]:
    scen = scenario_from_dict(plan.scenario)
    grid = make_grid(scen, nz=plan.grid_nz, t_end=plan.t_end_ps)
    return scen, grid


def oracle_report(scen: Scenario) -> dict:
    """Derived analytics for a scenario, no simulation."""
    d = scen.derived
    est = oracle.gain_estimate(scen)
    onset, end = oracle.gain_window(scen)
    return {
        "alpha": d.alpha,
        "eta_thz_per_mm": d.eta,
        "phi_urad": d.phi * 1.0e6,
        "fresnel": d.fresnel,
        "noise_prefactor_per_ps": d.noise_prefactor,
        "gain_length_pump_mm": d.l_g,
        "gain_length_coherence_mm": d.l_g_coherence,
        "u_factor": oracle.u_factor(scen),
        "gain_window_ps": [onset, end],
        "two_xi_limit": est.two_xi_limit,
        "v_min_mm_per_ps": est.v_min,
        "pi_half_photons": oracle.pi_half_photons(scen.medium.r,
                                                  scen.transition.lam),
        "warnings": validation_warnings(scen),
    }


def _ensemble_point(scen: Scenario, plan: ExperimentPlan, seed: int,
                    out_dir: Path) -> dict:
    grid = make_grid(scen, nz=plan.grid_nz, t_end=plan.t_end_ps)
    spec = EnsembleSpec(scenario=scen, grid=grid,
                        n_realizations=plan.n_realizations,
                        master_seed=seed, workers=plan.workers)
    summary, scalars = run_ensemble(spec)
    io.write_ensemble_outputs(summary, scalars, out_dir)
    return {
        "alpha": scen.derived.alpha,
        "prob_fwd": summary.forward.threshold_probability,
        "prob_bwd": summary.backward.threshold_probability,
        "peak_fwd_mean": summary.forward.peak_intensity_mean,
        "peak_bwd_mean": summary.backward.peak_intensity_mean,
        "delay_fwd_mean": summary.forward.delay_mean,
        "delay_bwd_mean": summary.backward.delay_mean,
    }


def _run_sweep(plan: ExperimentPlan, out: Path, points: list[dict]) -> None:
    """Shared sweep executor: one ensemble per point, one map row each."""
    base = scenario_from_dict(plan.scenario)
    rows: list[dict] = []
    failed = 0
    for i, overrides in enumerate(points):
        point_dir = out / f"point_{i:03d}"
        row = dict(overrides)
        try:
            scen = base.replace(**overrides)
            row.update(_ensemble_point(scen, plan, plan.master_seed, point_dir))
            row["error"] = ""
        except (ParameterError, SolverError) as err:
            row["error"] = str(err)
            failed += 1
        rows.append(row)
    keys = sorted({k for r in rows for k in r})
    io.write_csv(out / "map.csv", keys,
                 [[r.get(k, "") for r in rows] for k in keys])
    if failed:
        raise SolverError(f"{failed}/{len(points)} sweep points failed "
                          f"(see error markers in map.csv)")


def run_plan(plan: ExperimentPlan) -> Path:
    """Execute a plan, writing all artifacts plus the manifest."""
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_manifest(plan.to_dict(), out)

    if plan.kind == "oracle":
        scen = scenario_from_dict(plan.scenario)
        io.write_json(out / "oracle.json", oracle_report(scen))

    elif plan.kind == "single":
        scen, grid = _resolved(plan)
        noise = NoiseSpec(master_seed=plan.master_seed, realization_index=0)
        rec = run(scen, grid, noise, snapshot_stride=plan.snapshot_stride)
        io.write_run_record(rec, out / "run.csv")
        if rec.snapshot_times is not None:
            io.write_csv(out / "inversion_snapshots.csv",
                         ["t_ps"] + [f"z_{k}" for k in range(grid.n_nodes)],
                         [rec.snapshot_times]
                         + [rec.snapshot_inversion[:, k]
                            for k in range(grid.n_nodes)])

    elif plan.kind == "ensemble":
        scen, grid = _resolved(plan)
        spec = EnsembleSpec(scenario=scen, grid=grid,
                            n_realizations=plan.n_realizations,
                            master_seed=plan.master_seed, workers=plan.workers)
        summary, scalars = run_ensemble(spec)
        io.write_ensemble_outputs(summary, scalars, out)

    elif plan.kind == "sweep_Ln":
        if not (plan.l_grid_mm and plan.n_grid_per_mm3):
            raise ParameterError("sweep_Ln needs l_grid_mm and n_grid_per_mm3")
        points = [{"L": L, "n": n}
                  for L in plan.l_grid_mm for n in plan.n_grid_per_mm3]
        _run_sweep(plan, out, points)

    elif plan.kind == "sweep_rNp":
        if not (plan.r_grid_um and plan.np_grid):
            raise ParameterError("sweep_rNp needs r_grid_um and np_grid")
        points = [{"r": r * 1.0e-3, "n_p": n_p}
                  for r in plan.r_grid_um for n_p in plan.np_grid]
        _run_sweep(plan, out, points)

    elif plan.kind == "sweep_L":
        if not plan.l_grid_mm:
            raise ParameterError("sweep_L needs l_grid_mm")
        base = scenario_from_dict(plan.scenario)
        points = []
        for L in plan.l_grid_mm:
            p: dict = {"L": L}
            if plan.fixed_alpha is not None:
                p["n"] = plan.fixed_alpha / (base.transition.sigma_r * L)
            points.append(p)
        _run_sweep(plan, out, points)

    elif plan.kind == "sweep_Tp":
        # pump-structure study: max inversion at z=0 from the analytic
        # quadrature, scanning pump duration at fixed peak flux per Q
        if not plan.tp_grid_fs:
            raise ParameterError("sweep_Tp needs tp_grid_fs")
        qs = plan.q_grid or [1.0]
        base = scenario_from_dict(plan.scenario)
        rows = {"tau_p_fs": list(plan.tp_grid_fs)}
        for q in qs:
            col = []
            for tp_fs in plan.tp_grid_fs:
                scen = base.replace(tau_p=tp_fs * 1.0e-3,
                                    n_p=q * tp_fs * 1.0e12)
                col.append(max_inversion(scen))
            rows[f"max_inversion_q{q:g}"] = col
        io.write_csv(out / "pump_study.csv", list(rows),
                     [rows[k] for k in rows])

    elif plan.kind == "fit":
        if not (plan.fit_family and plan.fit_data):
            raise ParameterError("fit plan needs fit_family and fit_data")
        x, y = io.read_xy_csv(plan.fit_data, plan.fit_x_col, plan.fit_y_col)
        result = fit(plan.fit_family, x, y)
        io.write_json(out / "fit.json", {
            "family": result.family,
            "coefficients": list(result.coefficients),
            "residual": result.residual,
            "std_errors": list(result.std_errors),
            "converged": result.converged,
            "n_iterations": result.n_iterations,
            "message": result.message,
        })

    return out


def max_inversion(scen: Scenario, n_t: int = 400) -> float:
    """Peak of I(t, 0) from the analytic quadrature, on a pump-resolved grid."""
    t_hi = scen.pump.tau_i + 6.0 * scen.pump.tau_p + 3.0 * scen.transition.tau2
    t_lo = max(scen.pump.tau_i - 4.0 * scen.pump.tau_p, 0.0)
    ts = np.linspace(t_lo, t_hi, n_t)
    return float(np.max(oracle.inversion_quadrature(ts, scen)))
