"""Batch runner: one named experiment per invocation, JSON report plus CSV tables.

Usage::

    hamfield hs-scan --out runs/hs --override sizes=[2,4,8,16] --override r=1.0
    hamfield fock-ccr --config fock.json --seed 3

Exit codes: 0 when every pass flag holds, 1 when some flag fails, 2 for an
invalid configuration, 3 when a numerical guard trips.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from scipy.linalg import expm
from pydantic import BaseModel, ConfigDict, Field, ValidationError as SchemaError

from . import covariant as cov
from . import fock
from .complex_structure import complex_dimension, polar_complex_structure, positive_frequency_split
from .errors import GuardError, HamfieldError
from .implementability import implementability_scan, mass_shift_family, squeezing_family
from .io import write_csv, write_json
from .lattice import FieldFunction, SpatialLattice, frechet_metric, tail_bound, truncate_to_patches
from .linear_dynamics import QuadraticHamiltonian, build_generator, evolve_linear, integrate_hamilton
from .moyal import covariance_sweep, moyal_star_poly
from .nonlinear_classical import energy, nonlinear_evolve, reference_phi4_config, total_momentum
from .polynomial import PolynomialObservable
from .symplectic import PhaseVector, SymplecticMap, poisson_tensor, pullback_residual

EXPERIMENTS = (
    "linear-evolve",
    "complex-structure",
    "fock-ccr",
    "hs-scan",
    "phi4-evolve",
    "moyal-covariance",
    "covariant-propagator",
    "metric-suite",
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_GUARD = 0, 1, 2, 3


class LatticeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sites: int = Field(16, ge=1)
    spacing: float = Field(1.0, gt=0)
    patch_size: Optional[int] = Field(None, ge=1)

    def build(self) -> SpatialLattice:
        return SpatialLattice.uniform(self.sites, self.spacing, self.patch_size)


class ExperimentConfig(BaseModel):
    """Validated experiment parameters; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    experiment: Literal[EXPERIMENTS]  # type: ignore[valid-type]
    lattice: LatticeSpec = LatticeSpec()
    m: float = Field(1.0, ge=0)
    lam: float = Field(0.1, alias="lambda", ge=0)
    omega: float = Field(1.0, gt=0)
    chain_coupling: float = Field(0.7, ge=0)
    r: float = 1.0
    epsilon: float = 0.1
    t: float = 1.0
    dt: float = Field(1e-3, gt=0)
    d: int = Field(1, ge=1)
    n_max: int = Field(12, alias="N_max", ge=1)
    sizes: list[int] = [2, 4, 8, 16]
    steps: int = Field(40, ge=2)
    samples: int = Field(20, ge=1)
    degree: int = Field(4, ge=1, le=6)
    seed: int = 0
    out: str = "out"


@dataclass
class Outcome:
    values: dict
    tolerances: dict
    passes: dict
    tables: dict = field(default_factory=dict)  # file name -> (columns, rows)

    def check(self, name: str, value: float, tol: float, upper: bool = True) -> None:
        """Record ``value`` and the flag ``value <= tol`` (or ``>= tol`` when ``upper`` is false)."""
        self.values[name] = float(value)
        self.tolerances[name] = float(tol)
        self.passes[name] = bool(value <= tol) if upper else bool(value >= tol)


def _outcome() -> Outcome:
    return Outcome({}, {}, {})


def _random_symplectic(lat: SpatialLattice, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    n = 2 * lat.site_count
    a = rng.normal(size=(n, n))
    return expm(scale * poisson_tensor(lat) @ (a + a.T) / 2)


# experiments


def run_linear_evolve(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    lat = cfg.lattice.build()
    H = QuadraticHamiltonian.oscillator_chain(lat, cfg.omega, cfg.chain_coupling)
    gen = build_generator(H)
    U = evolve_linear(gen, cfg.t)
    eta = PhaseVector.random(lat, rng)
    exact = PhaseVector.from_coords(lat, U @ eta.coords)
    traj = integrate_hamilton(H, eta, cfg.t, cfg.dt, record_every=max(1, int(round(0.01 / cfg.dt))))
    out = _outcome()
    out.check("symplectic_residual", pullback_residual(U, lat), 1e-10)
    out.check("energy_residual", abs(H(exact) - H(eta)), 1e-10 * max(1.0, H(eta)))
    out.check("integrator_error", float(np.max(np.abs(traj.final.coords - exact.coords))), 10 * cfg.dt**2 * max(1.0, abs(cfg.t)) * max(1.0, eta.norm()))
    out.values["adjointness_residual"] = gen.adjointness_residual()
    rows = [{"t": float(s), "energy": H.energy_coords(x)} for s, x in zip(traj.times, traj.states)]
    out.tables["trajectory.csv"] = (["t", "energy"], rows)
    return out


def run_complex_structure(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    lat = cfg.lattice.build()
    H = QuadraticHamiltonian.oscillator_chain(lat, cfg.omega, cfg.chain_coupling)
    gen = build_generator(H)
    J = polar_complex_structure(gen)
    split = positive_frequency_split(gen)
    U = evolve_linear(gen, cfg.t)
    out = _outcome()
    out.check("polar_vs_positive_frequency", float(np.max(np.abs(J.matrix - split.jtilde.matrix))), 1e-10)
    rep = J.report()
    out.check("J_square_residual", rep.square_residual, 1e-12)
    out.check("J_symplectic_residual", rep.symplectic_residual, 1e-12)
    out.check("J_positivity_min_eigenvalue", rep.positivity_min_eigenvalue, -1e-12, upper=False)
    out.check("commutator_U_J", float(np.max(np.abs(U @ J.matrix - J.matrix @ U))), 1e-10)
    worst = 0.0
    for _ in range(cfg.samples):
        a, b = PhaseVector.random(lat, rng), PhaseVector.random(lat, rng)
        worst = max(worst, abs(J.inner(a.coords, b.coords) - split.inner(a, b)))
    out.check("induced_product_residual", worst, 1e-10)
    out.values["complex_dimension"] = complex_dimension(J)
    rows = [{"condition": k, "value": float(v)} for k, v in sorted(out.values.items())]
    out.tables["complex_structure.csv"] = (["condition", "value"], rows)
    return out


def run_fock_ccr(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    space = fock.FockSpace(cfg.d, cfg.n_max)
    out = _outcome()
    rows = []
    worst = {"[a,a]": 0.0, "[a+,a+]": 0.0, "[a,a+]": 0.0}
    for k in range(cfg.samples):
        eta = rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d)
        psi = rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d)
        res = fock.ccr_residuals(space, eta, psi)
        for name, v in res.items():
            worst[name] = max(worst[name], v)
            rows.append({"sample": k, "identity": name, "residual": v})
    for name, v in worst.items():
        out.check(f"ccr_{name}", v, 1e-10)
    eta = rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d)
    out.check("field_identity_residual", fock.field_identity_residual(space, eta), 1e-10)
    e1, e2 = (rng.normal(size=cfg.d) + 1j * rng.normal(size=cfg.d) for _ in range(2))
    e1, e2 = e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2)
    out.values["weyl_relation_residual"] = fock.weyl_relation_residual(space, e1, e2, min(5, cfg.n_max))
    out.values["fock_dimension"] = space.dim
    out.tables["ccr.csv"] = (["sample", "identity", "residual"], rows)
    return out


def run_hs_scan(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    report = implementability_scan(squeezing_family(cfg.r), cfg.sizes)
    expected = [2 * np.sqrt(2) * np.sinh(abs(cfg.r)) * np.sqrt(d) for d in report.lattice_sizes]
    out = _outcome()
    dev = max(abs(a - b) for a, b in zip(report.hs_norms, expected))
    out.check("squeezing_oracle_deviation", dev, 1e-10)
    mass = implementability_scan(mass_shift_family(cfg.m, cfg.m + 1.0, cfg.lattice.spacing), cfg.sizes)
    out.values["squeezing_trend"] = report.trend
    out.values["mass_shift_trend"] = mass.trend
    out.values["note"] = report.note
    rows = [
        {"size": s, "squeezing_norm": n, "expected": e, "mass_shift_norm": mn}
        for s, n, e, mn in zip(report.lattice_sizes, report.hs_norms, expected, mass.hs_norms)
    ]
    out.tables["hs_scan.csv"] = (["size", "squeezing_norm", "expected", "mass_shift_norm"], rows)
    return out


def run_phi4_evolve(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    H, eta0 = reference_phi4_config(cfg.lattice.sites, cfg.m, cfg.lam, cfg.lattice.spacing)
    record = max(1, int(round(abs(cfg.t) / cfg.dt / 200)))
    traj = nonlinear_evolve(H, eta0, cfg.t, cfg.dt, record_every=record)
    e0 = energy(H, eta0)
    energies = [H.energy_coords(x) for x in traj.states]
    out = _outcome()
    out.check("energy_drift", max(abs(e - e0) for e in energies), 1e-6)
    out.values["initial_energy"] = e0
    out.values["steps"] = int(np.ceil(abs(cfg.t) / cfg.dt - 1e-9))
    momenta = [total_momentum(PhaseVector.from_coords(H.lattice, x)) for x in traj.states]
    if cfg.m == 0 and cfg.lam == 0:
        out.check("momentum_drift", max(abs(p - momenta[0]) for p in momenta), 1e-10)
    rows = [{"t": float(s), "energy": e, "momentum": p} for s, e, p in zip(traj.times, energies, momenta)]
    out.tables["phi4_trajectory.csv"] = (["t", "energy", "momentum"], rows)
    return out


def run_moyal_covariance(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    lat = cfg.lattice.build()
    nv = 2 * lat.site_count
    pairs = []
    for df in range(1, cfg.degree + 1):
        dg = cfg.degree + 1 - df
        pairs.append((PolynomialObservable.random(nv, df, rng, 4), PolynomialObservable.random(nv, dg, rng, 4)))
    linear = [(SymplecticMap.linear(lat, _random_symplectic(lat, rng), name=f"linear_{k}"), 0.0) for k in range(3)]
    shear = [(SymplecticMap.shear(lat, cfg.epsilon), cfg.epsilon)]
    lin_rows = covariance_sweep(linear, pairs)
    nl_rows = covariance_sweep(shear, pairs)
    out = _outcome()
    out.check("linear_covariance_residual", max(r["residual_max"] for r in lin_rows), 1e-12)
    x = PolynomialObservable.variable(nv, 0)
    p = PolynomialObservable.variable(nv, lat.site_count)
    comm = moyal_star_poly(x, p, lat) - moyal_star_poly(p, x, lat)
    expected = PolynomialObservable.constant(nv, 1j / lat.measure_weights[0])
    out.check("canonical_commutator_residual", (comm - expected).max_abs_coeff(), 0.0)
    out.values["nonlinear_covariance_residual_max"] = max(r["residual_max"] for r in nl_rows)
    cols = ["f_degree", "g_degree", "map_name", "epsilon", "residual_max"]
    out.tables["moyal_covariance.csv"] = (cols, lin_rows + nl_rows)
    return out


def run_covariant_propagator(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    lat = cov.SpacetimeLattice(cfg.lattice.sites, cfg.steps, cfg.lattice.spacing, cfg.dt)
    source = (lat.steps // 2, lat.sites // 2)
    R = cov.retarded_propagator(lat, cfg.m, source)
    A = cov.advanced_propagator(lat, cfg.m, source)
    out = _outcome()
    out.check("retarded_causal_violation", R.causal_violation(), 0.0)
    out.check("retarded_cone_violation", R.cone_violation(), 0.0)
    out.check("advanced_reflection_residual", float(np.max(np.abs(A.values - cov.time_reflect(R.values, source[0])))), 0.0)
    slice_dev, pair_dev, bridge_dev = 0.0, 0.0, 0.0
    for _ in range(cfg.samples):
        f, g = cov.random_sources(lat, rng), cov.random_sources(lat, rng)
        pf, pg = cov.solution_from_sources(lat, cfg.m, f), cov.solution_from_sources(lat, cfg.m, g)
        vals = [cov.surface_form(lat, cfg.m, pf, pg, n) for n in range(1, lat.steps)]
        slice_dev = max(slice_dev, max(abs(v - vals[0]) for v in vals))
        pair_dev = max(pair_dev, abs(vals[0] - cov.covariant_form(lat, cfg.m, f, g)))
        bridge_dev = max(bridge_dev, abs(vals[0] - cov.slice_form(lat, pf, pg, 1)))
    out.check("surface_slice_independence", slice_dev, 1e-10)
    out.check("surface_vs_pauli_jordan", pair_dev, 1e-10)
    out.check("surface_vs_phase_space_omega", bridge_dev, 1e-10)
    out.values["source_event"] = list(source)
    out.values["courant"] = lat.courant
    out.tables["retarded_kernel.csv"] = (["t", "x", "value"], R.rows())
    return out


def run_metric_suite(cfg: ExperimentConfig, rng: np.random.Generator) -> Outcome:
    lat = cfg.lattice.build()
    out = _outcome()
    worst = 0.0
    for _ in range(cfg.samples):
        f, g, h = (FieldFunction(rng.normal(size=lat.site_count) * 2.0, lat) for _ in range(3))
        dfg, dgf, dfh, dgh = frechet_metric(f, g), frechet_metric(g, f), frechet_metric(f, h), frechet_metric(g, h)
        worst = max(worst, abs(dfg - dgf), frechet_metric(f, f), max(0.0, dfh - dfg - dgh), max(0.0, -dfg))
    out.check("axiom_violation", worst, 1e-12)
    first = int(np.flatnonzero(lat.patch_mask([1]))[0])
    bump = lat.indicator(first, 1.0 / np.sqrt(lat.measure_weights[first]))
    out.check("single_patch_value_error", abs(frechet_metric(bump, lat.zeros()) - 0.25), 0.0)
    f = FieldFunction(rng.normal(size=lat.site_count), lat)
    rows, monotone, bound_ok = [], True, True
    prev = np.inf
    for k in range(1, lat.patch_count + 1):
        dist = frechet_metric(f, truncate_to_patches(f, k).base)
        bound = tail_bound(lat, k)
        monotone &= dist <= prev
        bound_ok &= dist <= bound + 1e-15
        prev = dist
        rows.append({"k": k, "distance": dist, "tail_bound": bound})
    out.values["truncation_monotone"] = bool(monotone)
    out.values["tail_bound_respected"] = bool(bound_ok)
    out.passes["truncation_monotone"] = bool(monotone)
    out.passes["tail_bound_respected"] = bool(bound_ok)
    out.tables["metric_truncation.csv"] = (["k", "distance", "tail_bound"], rows)
    return out


RUNNERS: dict[str, Callable[[ExperimentConfig, np.random.Generator], Outcome]] = {
    "linear-evolve": run_linear_evolve,
    "complex-structure": run_complex_structure,
    "fock-ccr": run_fock_ccr,
    "hs-scan": run_hs_scan,
    "phi4-evolve": run_phi4_evolve,
    "moyal-covariance": run_moyal_covariance,
    "covariant-propagator": run_covariant_propagator,
    "metric-suite": run_metric_suite,
}


# plumbing


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ValueError(f"override {dotted!r} descends into a non-object")
    node[keys[-1]] = value


def parse_override(text: str) -> tuple:
    if "=" not in text:
        raise ValueError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


# per-experiment defaults layered under the config file and overrides
EXPERIMENT_DEFAULTS = {
    "fock-ccr": {"d": 3, "N_max": 8},
    "phi4-evolve": {"t": 10.0},
    "moyal-covariance": {"lattice": {"sites": 1}, "epsilon": 0.3},
    "covariant-propagator": {"lattice": {"sites": 24}, "dt": 0.5, "m": 0.7},
    "metric-suite": {"lattice": {"sites": 16, "patch_size": 2}, "samples": 1000},
}


def _merge(base: dict, top: dict) -> dict:
    out = dict(base)
    for k, v in top.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def build_config(experiment: str, config_path=None, overrides=(), seed=None, out=None) -> ExperimentConfig:
    doc: dict = {}
    if config_path:
        doc = json.loads(Path(config_path).read_text())
        if not isinstance(doc, dict):
            raise ValueError("config file must hold a JSON object")
    if doc.get("experiment", experiment) != experiment:
        raise ValueError(f"config names experiment {doc['experiment']!r} but {experiment!r} was requested")
    doc["experiment"] = experiment
    doc = _merge(EXPERIMENT_DEFAULTS.get(experiment, {}), doc)
    for item in overrides:
        key, value = parse_override(item)
        _set_path(doc, key, value)
    if seed is not None:
        doc["seed"] = seed
    if out is not None:
        doc["out"] = str(out)
    return ExperimentConfig.model_validate(doc)


def run(cfg: ExperimentConfig) -> tuple:
    """Execute ``cfg`` and write its artifacts; returns ``(report, wall_seconds)``."""
    rng = np.random.default_rng(cfg.seed)
    start = time.perf_counter()
    outcome = RUNNERS[cfg.experiment](cfg, rng)
    wall = time.perf_counter() - start
    out_dir = Path(cfg.out)
    files = []
    for name, (columns, rows) in sorted(outcome.tables.items()):
        write_csv(out_dir / name, rows, columns)
        files.append(name)
    report = {
        "experiment": cfg.experiment,
        "parameters": cfg.model_dump(by_alias=True, mode="json"),
        "values": outcome.values,
        "tolerances": outcome.tolerances,
        "passes": outcome.passes,
        "all_passed": all(outcome.passes.values()),
        "files": files,
    }
    write_json(out_dir / "report.json", report)
    write_json(out_dir / "timing.json", {"wall_seconds": wall})
    return report, wall


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamfield", description="Run one lattice field experiment.")
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=RUNNERS[name].__name__.removeprefix("run_").replace("_", " "))
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--out", type=Path, help="output directory (default: config 'out' or ./out)")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="set a config key; VALUE is parsed as JSON when possible")
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = build_config(args.experiment, args.config, args.override, args.seed, args.out)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"hamfield: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, wall = run(cfg)
    except GuardError as exc:
        print(f"hamfield: numerical guard tripped: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except HamfieldError as exc:
        print(f"hamfield: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name in sorted(report["passes"]):
        flag = "pass" if report["passes"][name] else "FAIL"
        print(f"{flag}  {name} = {report['values'].get(name)}")
    print(f"{cfg.experiment}: {'all passed' if report['all_passed'] else 'failures'} ({wall:.2f} s) -> {Path(cfg.out) / 'report.json'}")
    return EXIT_OK if report["all_passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
