"""Experiment runners: a validated config in, tables and a summary out.

Units: energies and rates in J, times in hbar/J, lengths in lattice
spacings a.  Every column carries its unit in the table header.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import eta as eta_mod
from .config import ExperimentConfig
from .fock import bec_state, boson_sector, build_hamiltonian, build_jump_operators
from .lattice import HubbardParams, LatticeSpec
from .lindblad import (
    dark_state_check,
    evolve,
    maximally_mixed,
    observables,
    pure,
    random_pure_state,
    steady_state,
    trajectory_records,
)
from .meanfield import depletion_sum, effective_temperature_ratio, lattice_modes, mode_table, relax
from .phase import (
    InitialDisorderSpec,
    LatticeGrid,
    RadialGrid,
    derived_scales,
    evolve_correlations,
    steady_correlation,
)

Column = tuple[str, str]


@dataclass
class Table:
    columns: list[Column]
    rows: list[list[Any]] = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(list(values))


@dataclass
class RunResult:
    tables: dict[str, Table]
    summary: dict[str, Any]


def _map(fn: Callable, items: list, jobs: int) -> list:
    """Ordered map, optionally across worker processes."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _initial_rho(cfg: ExperimentConfig, dim: int, target: np.ndarray) -> np.ndarray:
    kind = cfg.initial.state
    if kind == "maximally-mixed":
        return maximally_mixed(dim)
    if kind == "random-pure":
        return pure(random_pure_state(dim, np.random.default_rng(cfg.seed)))
    return pure(target)


def run_exact(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    lattice = cfg.lattice.spec()
    params = cfg.params.hubbard()
    sector = boson_sector(lattice, cfg.N)
    H = build_hamiltonian(sector, params)
    jumps = build_jump_operators(sector, cfg.jumps.family(params.kappa))
    target = bec_state(sector)
    t = cfg.times.grid(params)
    states = evolve(_initial_rho(cfg, sector.dim, target), H, jumps, t)
    records = trajectory_records(t, states, sector, target)
    table = Table([("time", "hbar/J"), ("fidelity", "1"), ("purity", "1"),
                   ("condensate_fraction", "1"), ("total_N", "1")])
    for r in records:
        table.add(r["time"], r["fidelity"], r["purity"], r["condensate_fraction"], r["total_N"])
    summary = {"hilbert_dim": sector.dim, "final_fidelity": records[-1]["fidelity"],
               "final_purity": records[-1]["purity"]}
    if sector.dim**2 <= 4096:
        summary["kernel_dimension"] = steady_state(H, jumps).kernel_dimension
    return RunResult({"trajectory": table}, summary)


def run_darkstate(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    lattice = cfg.lattice.spec()
    params = cfg.params.hubbard()
    sector = boson_sector(lattice, cfg.N)
    H = build_hamiltonian(sector, params)
    jumps = build_jump_operators(sector, cfg.jumps.family(params.kappa))
    target = bec_state(sector)
    report = dark_state_check(target, H, jumps, with_kernel=False)
    ss = steady_state(H, jumps)
    obs = observables(ss.rho, sector, target)
    table = Table([("quantity", "-"), ("value", "1")])
    summary = {
        "hilbert_dim": sector.dim,
        "annihilation_residual": report.annihilation_residual,
        "hamiltonian_residual": report.hamiltonian_residual,
        "energy": report.energy,
        "is_dark": report.is_dark,
        "kernel_dimension": ss.kernel_dimension,
        "steady_purity": obs.purity,
        "steady_condensate_fraction": obs.condensate_fraction,
        "steady_fidelity": obs.fidelity,
    }
    for key, value in summary.items():
        table.add(key, value)
    return RunResult({"darkstate": table}, summary)


def run_meanfield(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    lattice = cfg.lattice.spec()
    params = cfg.params.hubbard()
    rows = mode_table(params, lattice)
    cols = [(f"q{ax}", "1/a") for ax in range(lattice.d)]
    cols += [("kappa_q", "J"), ("E_q", "J"), ("theta", "rad"), ("beta", "1"), ("x", "1")]
    table = Table(cols)
    for r in rows:
        table.add(*(r[name] for name, _ in cols))
    summary = {"modes": len(rows), "depletion": depletion_sum(params, lattice)}
    if params.U > 0:
        modes = lattice_modes(params, lattice)
        order = np.argsort(modes.E)[:10]
        summary["teff_ratio_soft_modes"] = [float(v) for v in effective_temperature_ratio(modes)[order]]
    return RunResult({"modes": table}, summary)


def _depletion_point(args) -> tuple[int, float]:
    params, lattice = args
    return lattice.M, depletion_sum(params, lattice)


def run_depletion(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    base = cfg.lattice.spec()
    base.require_periodic()
    Us = cfg.sweep_U or [cfg.params.U]
    work = []
    for U in Us:
        params = cfg.params.hubbard(U=U)
        for k in range(cfg.doublings + 1):
            work.append((params, LatticeSpec(base.d, base.M * 2**k, base.a, base.boundary)))
    results = _map(_depletion_point, work, jobs)
    table = Table([("U", "J"), ("M", "1"), ("n_D", "1/a^d"), ("growth_ratio", "1")])
    summary: dict[str, Any] = {"d": base.d, "ratios": {}}
    per = cfg.doublings + 1
    for i, U in enumerate(Us):
        chunk = results[i * per:(i + 1) * per]
        ratios = []
        for j, (M, nd) in enumerate(chunk):
            ratio = chunk[j][1] / chunk[j - 1][1] if j and chunk[j - 1][1] > 0 else None
            if ratio is not None:
                ratios.append(ratio)
            table.add(U, M, nd, ratio)
        summary["ratios"][repr(float(U))] = ratios
    return RunResult({"depletion": table}, summary)


def _relax_point(args):
    params, lattice, t, occ, anomalous = args
    return relax(params, lattice, t, initial_occupation=occ, initial_anomalous=anomalous)


def run_relax(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    lattice = cfg.lattice.spec()
    Us = cfg.sweep_U or [cfg.params.U]
    anomalous = complex(cfg.initial.anomalous_re, cfg.initial.anomalous_im)
    work = []
    for U in Us:
        params = cfg.params.hubbard(U=U)
        work.append((params, lattice, cfg.times.grid(params), cfg.initial.occupation, anomalous))
    curves = _map(_relax_point, work, jobs)
    table = Table([("U", "J"), ("time", "hbar/J"), ("n0", "1/a^d"), ("deficit", "1/a^d")])
    summary: dict[str, Any] = {"fits": {}}
    for U, curve in zip(Us, curves):
        for t, n0, dn in zip(curve.times, curve.n0_of_t, curve.deficit):
            table.add(U, float(t), float(n0), float(dn))
        summary["fits"][repr(float(U))] = {
            "exponent": curve.tail.exponent,
            "prefactor": curve.tail.prefactor,
            "window": list(curve.tail.window),
            "slope_variation": curve.tail.slope_variation,
            "asymptotic": curve.tail.asymptotic,
            "t_times_deficit": curve.tail_t_deficit,
            "n0_inf": curve.n0_inf,
            "flags": list(curve.flags),
        }
    return RunResult({"relaxation": table}, summary)


def _grid(cfg: ExperimentConfig):
    if cfg.quadrature.kind == "radial":
        return RadialGrid(cfg.lattice.d, cfg.lattice.a, x_max=cfg.quadrature.x_max)
    return LatticeGrid(cfg.lattice.spec())


def _scales_summary(params: HubbardParams, a: float) -> dict[str, Any]:
    s = derived_scales(params, a)
    return {"c": s.c, "K": s.K, "T_KT": s.T_KT, "T_eff": s.T_eff, "teff_over_tkt": s.teff_over_tkt,
            "coherence_length": s.coherence_length, "eta": s.eta, "xi_1d": s.xi_1d, "valid": s.valid}


def run_lowdim_steady(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    params = cfg.params.hubbard()
    grid = _grid(cfg)
    curve = steady_correlation(params, grid, cfg.separations.grid(), cfg.fit_window)
    table = Table([("x", "a"), ("G", "1"), ("G_closed_form", "1"), ("valid", "-")])
    closed = curve.closed_form if curve.closed_form is not None else [None] * curve.x.size
    for x, G, Gc, ok in zip(curve.x, curve.G, closed, curve.valid):
        table.add(float(x), float(G), None if Gc is None else float(Gc), bool(ok))
    summary = {"scales": _scales_summary(params, cfg.lattice.a), "flags": list(curve.flags)}
    if curve.fit is not None:
        summary["fit"] = {"slope": curve.fit.slope, "intercept": curve.fit.intercept,
                          "window": list(curve.fit.window), "npoints": curve.fit.npoints}
        if grid.d == 2:
            summary["fit"]["exponent"] = -curve.fit.slope
        else:
            summary["fit"]["decay_length"] = -1.0 / curve.fit.slope
    return RunResult({"correlation": table}, summary)


def run_lowdim_evolve(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    params = cfg.params.hubbard()
    grid = _grid(cfg)
    t = cfg.times.grid(params)
    evo = evolve_correlations(InitialDisorderSpec(cfg.initial.xi), params, grid, t,
                              cfg.separations.grid(), front_window=cfg.front_window)
    to_tau = params.kappa * params.n / 2
    curves = Table([("tau", "1"), ("time", "hbar/J"), ("x", "a"), ("G", "1"), ("valid", "-")])
    for c in evo.curves:
        for x, G, ok in zip(c.x, c.G, c.valid):
            curves.add(c.t * to_tau, c.t, float(x), float(G), bool(ok))
    front = Table([("tau", "1"), ("time", "hbar/J"), ("x_t", "a")])
    for tt, xt in zip(t, evo.x_t):
        front.add(float(tt) * to_tau, float(tt), None if math.isnan(xt) else float(xt))
    summary: dict[str, Any] = {
        "scales": _scales_summary(params, cfg.lattice.a),
        "initial_amplitude": evo.amplitude,
        "curves": len(evo.curves),
        "flags": list(evo.flags) + [f"t={c.t}: {f}" for c in evo.curves for f in c.flags],
    }
    if evo.front is not None:
        summary["front_exponent"] = evo.front.slope
        summary["front_window"] = list(evo.front.window)
    return RunResult({"curves": curves, "front": front}, summary)


def _eta_point(args):
    lattice, params, family, t, N, state, seed = args
    sector = eta_mod.build_eta_state(lattice, N).sector
    if state == "random-pure":
        rho0 = pure(random_pure_state(sector.dim, np.random.default_rng(seed)))
    else:
        rho0 = maximally_mixed(sector.dim)
    return eta_mod.simulate_eta_convergence(rho0, lattice, params, family, t, N=N)


def run_eta(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    base = cfg.lattice.spec()
    params = cfg.params.hubbard()
    family = cfg.jumps.family(params.kappa)
    Ms = cfg.sweep_M or [base.M]
    t = cfg.times.grid(params)
    lattices = [LatticeSpec(base.d, M, base.a, base.boundary) for M in Ms]
    work = [(lat, params, family, t, cfg.N, cfg.initial.state, cfg.seed) for lat in lattices]
    runs = _map(_eta_point, work, jobs)
    table = Table([("M", "1"), ("time", "hbar/J"), ("fidelity", "1")])
    summary: dict[str, Any] = {"N": cfg.N, "runs": {}}
    for lat, run in zip(lattices, runs):
        for tt, f in zip(run.times, run.fidelity):
            table.add(lat.M, float(tt), float(f))
        state = eta_mod.build_eta_state(lat, cfg.N)
        summary["runs"][str(lat.M)] = {
            "final_fidelity": float(run.fidelity[-1]),
            "kernel_dimension": run.kernel_dimension,
            "eigen_residual": eta_mod.verify_eigenstate(state, params),
        }
    return RunResult({"fidelity": table}, summary)


RUNNERS: dict[str, Callable[[ExperimentConfig, int], RunResult]] = {
    "exact": run_exact,
    "darkstate": run_darkstate,
    "meanfield": run_meanfield,
    "depletion": run_depletion,
    "relax": run_relax,
    "lowdim-steady": run_lowdim_steady,
    "lowdim-evolve": run_lowdim_evolve,
    "eta": run_eta,
}


def run(cfg: ExperimentConfig, jobs: int = 1) -> RunResult:
    return RUNNERS[cfg.experiment](cfg, jobs)
