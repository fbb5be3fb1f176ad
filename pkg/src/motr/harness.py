"""Experiment harness: spec parsing, seeded multi-simulation execution,
exact-metric instrumentation, baselines, and CSV/JSON emission."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ConfigError,
    Oracle,
    RngStream,
    SolverConfig,
    alpha_at,
    parse_kv_text,
    scalar_representation,
    solver_config_from_mapping,
    solver_config_keys,
    solver_config_to_mapping,
)
from .marginal import solve_marginal
from .oracles import (
    AnalyticOracle,
    AnalyticProblem,
    ExactOracle,
    FiniteSumOracle,
    NoiseSpec,
    load_dataset,
    make_synthetic_logistic,
)
from .solver import run_final

_EXPERIMENT_KEYS = (
    "problem",
    "noise_sigma",
    "noise_bounded",
    "noise_cap_f",
    "noise_cap_g",
    "noise_shared_gradient",
    "dataset_path",
    "dataset_format",
    "label_column",
    "sensitive_column",
    "label_convention",
    "has_header",
    "keep_sensitive",
    "regularizer",
    "synthetic_samples",
    "synthetic_features",
    "synthetic_seed",
    "constants_mode",
    "constant_value",
    "algorithm",
    "x0",
    "num_simulations",
    "output_path",
    "output_format",
    "parallelism",
    "smg_t0",
    "smg_delta",
)


@dataclass(frozen=True)
class MetricRow:
    simulation: int
    k: int
    omega_true: float | None
    phi_true: float | None
    scalar_products: int
    delta: float
    success: bool


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: problem + algorithm + solver parameters + output."""

    problem: str = "test1"
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    dataset_path: str | None = None
    dataset_format: str = "csv"
    label_column: int = 0
    sensitive_column: int = 0
    label_convention: str = "pm1"
    has_header: bool = False
    keep_sensitive: bool = True
    regularizer: float = 0.1
    synthetic_samples: int = 300
    synthetic_features: int = 10
    synthetic_seed: int = 7
    constants_mode: str = "estimated"
    constant_value: float = 1.0
    algorithm: str = "smop"
    x0: tuple[float, ...] = (9.0, 9.0)
    num_simulations: int = 10
    output_path: str = "results.csv"
    output_format: str = "csv"
    parallelism: int = 0          # 0 means "available cores"
    smg_t0: float = 0.5
    smg_delta: float | None = None
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.problem not in ("test1", "test2", "synthetic", "dataset"):
            raise ConfigError(f"bad problem {self.problem!r}")
        if self.problem == "dataset" and not self.dataset_path:
            raise ConfigError("dataset problem requires dataset_path")
        if self.algorithm not in ("smop", "dmop", "smg"):
            raise ConfigError(f"bad algorithm {self.algorithm!r}")
        if self.num_simulations < 1:
            raise ConfigError("num_simulations must be >= 1")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"bad output_format {self.output_format!r}")
        if self.parallelism < 0:
            raise ConfigError("parallelism must be >= 0")
        if self.smg_t0 <= 0:
            raise ConfigError("smg_t0 must be positive")

    def build_oracle(self) -> Oracle:
        if self.problem in ("test1", "test2"):
            oracle: Oracle = AnalyticOracle(AnalyticProblem(self.problem), self.noise)
        else:
            if self.problem == "synthetic":
                fsp = make_synthetic_logistic(self.synthetic_samples,
                                              self.synthetic_features,
                                              seed=self.synthetic_seed,
                                              regularizer=self.regularizer)
            else:
                fsp = load_dataset(self.dataset_path, self.dataset_format,
                                   self.sensitive_column, self.label_convention,
                                   self.label_column, self.has_header,
                                   self.keep_sensitive, self.regularizer)
            oracle = FiniteSumOracle(fsp, self.constants_mode, self.constant_value)
        if self.algorithm == "dmop":
            # The deterministic baseline always sees exact full-batch values.
            oracle = ExactOracle(oracle)
        return oracle


def experiment_spec_from_mapping(mapping: dict[str, str]) -> ExperimentSpec:
    solver_map = {k: v for k, v in mapping.items() if k in solver_config_keys()}
    exp_map = {k: v for k, v in mapping.items() if k not in solver_config_keys()}
    unknown = set(exp_map) - set(_EXPERIMENT_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    solver = solver_config_from_mapping(solver_map)

    def _bool(key, default):
        return (mapping[key].lower() in ("true", "1", "yes", "on")
                if key in mapping else default)

    kwargs: dict = {"solver": solver}
    try:
        if "problem" in exp_map:
            kwargs["problem"] = exp_map["problem"]
        kwargs["noise"] = NoiseSpec(
            sigma=float(exp_map.get("noise_sigma", 0.0)),
            bounded=_bool("noise_bounded", False),
            cap_f=float(exp_map.get("noise_cap_f", 1.0)),
            cap_g=float(exp_map.get("noise_cap_g", 1.0)),
            shared_gradient_noise=_bool("noise_shared_gradient", False))
        for key in ("dataset_path", "dataset_format", "label_convention",
                    "constants_mode", "algorithm", "output_path", "output_format"):
            if key in exp_map:
                kwargs[key] = exp_map[key]
        for key in ("label_column", "sensitive_column", "synthetic_samples",
                    "synthetic_features", "synthetic_seed", "num_simulations",
                    "parallelism"):
            if key in exp_map:
                kwargs[key] = int(exp_map[key])
        for key in ("regularizer", "constant_value", "smg_t0"):
            if key in exp_map:
                kwargs[key] = float(exp_map[key])
        if "smg_delta" in exp_map:
            kwargs["smg_delta"] = float(exp_map["smg_delta"])
        if "x0" in exp_map:
            kwargs["x0"] = tuple(float(v) for v in exp_map["x0"].split(","))
        kwargs["has_header"] = _bool("has_header", False)
        kwargs["keep_sensitive"] = _bool("keep_sensitive", True)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return ExperimentSpec(**kwargs)


def load_experiment_spec(path: str, overrides: dict[str, str] | None = None) -> ExperimentSpec:
    with open(path) as fh:
        mapping = parse_kv_text(fh.read())
    if overrides:
        mapping.update(overrides)
    return experiment_spec_from_mapping(mapping)


def smg_baseline_step(x, stochastic_gradients, step_size: float) -> np.ndarray:
    """Simplified multi-gradient step: move against the dual-weighted gradient
    combination returned by the common-descent subproblem."""
    if step_size <= 0:
        raise ValueError("step_size must be positive")
    G = np.asarray(stochastic_gradients, dtype=float)
    sol = solve_marginal(G)
    combined = G.T @ sol.weights
    return np.asarray(x, dtype=float) - step_size * combined


def _run_smg(oracle: Oracle, spec: ExperimentSpec, sim: int,
             seed: int) -> tuple[np.ndarray, list[MetricRow]]:
    cfg = spec.solver
    rng = RngStream(seed).generator()
    x = np.asarray(spec.x0, dtype=float)
    delta = spec.smg_delta if spec.smg_delta is not None else cfg.delta0
    rows: list[MetricRow] = []
    cost = 0
    for k in range(cfg.k_max):
        alpha = alpha_at(cfg.alpha_schedule, k, oracle.q)
        sample = oracle.evaluate(x, delta, alpha, rng)
        cost += sample.cost
        omega_true = phi_true = None
        if oracle.exact_available:
            values, gradients, _ = oracle.exact_evaluate(x)
            omega_true = solve_marginal(gradients).omega
            phi_true = scalar_representation(values)
        t_k = spec.smg_t0 / math.sqrt(k + 1.0)
        x = smg_baseline_step(x, sample.gradients, t_k)
        rows.append(MetricRow(simulation=sim, k=k, omega_true=omega_true,
                              phi_true=phi_true, scalar_products=cost,
                              delta=delta, success=True))
    return x, rows


def _run_one(spec: ExperimentSpec, sim: int) -> tuple[list[float], list[MetricRow]]:
    oracle = spec.build_oracle()
    seed = spec.solver.seed + sim
    if spec.algorithm == "smg":
        x_final, rows = _run_smg(oracle, spec, sim, seed)
        return list(map(float, x_final)), rows
    cfg = spec.solver.with_(seed=seed)
    x_final, history = run_final(oracle, cfg, np.asarray(spec.x0, dtype=float))
    rows = [MetricRow(simulation=sim, k=r.k, omega_true=r.omega_true,
                      phi_true=r.phi_true, scalar_products=r.cost_so_far,
                      delta=r.delta, success=r.success)
            for r in history]
    return list(map(float, x_final)), rows


def run_experiment(spec: ExperimentSpec) -> tuple[list[MetricRow], dict]:
    """Run num_simulations independent seeded runs and collect metric rows.

    Exact marginal/scalar metrics are instrumentation: they consume no run
    randomness and never count toward scalar products. The summary reports
    per-simulation final points, their exact objective values, and the value
    at the mean final point.
    """
    workers = spec.parallelism or os.cpu_count() or 1
    sims = range(spec.num_simulations)
    if workers > 1 and spec.num_simulations > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, [spec] * spec.num_simulations, sims))
    else:
        results = [_run_one(spec, sim) for sim in sims]

    rows: list[MetricRow] = []
    finals: list[list[float]] = []
    for x_final, sim_rows in results:      # merged in simulation-index order
        finals.append(x_final)
        rows.extend(sim_rows)

    oracle = spec.build_oracle()
    final_f = []
    for x in finals:
        values, _, _ = oracle.exact_evaluate(np.array(x))
        final_f.append([float(v) for v in values])
    mean_x = np.mean(np.array(finals), axis=0)
    mean_values, _, _ = oracle.exact_evaluate(mean_x)
    summary = {
        "algorithm": spec.algorithm,
        "problem": spec.problem,
        "num_simulations": spec.num_simulations,
        "final_points": finals,
        "final_objectives": final_f,
        "mean_final_point": [float(v) for v in mean_x],
        "objectives_at_mean": [float(v) for v in mean_values],
        "smg_note": "simplified multi-gradient baseline" if spec.algorithm == "smg" else None,
        "config": solver_config_to_mapping(spec.solver),
    }
    return rows, summary


_CSV_HEADER = "simulation,k,omega_true,phi_true,scalar_products,delta,success"


def _fmt_opt(value) -> str:
    return "" if value is None else repr(float(value))


def emit(rows: list[MetricRow], path: str, format: str,
         summary: dict | None = None) -> None:
    """Write the metric table as CSV or JSON plus a sidecar summary file."""
    if format == "csv":
        with open(path, "w") as fh:
            fh.write(_CSV_HEADER + "\n")
            for r in rows:
                fh.write(f"{r.simulation},{r.k},{_fmt_opt(r.omega_true)},"
                         f"{_fmt_opt(r.phi_true)},{r.scalar_products},"
                         f"{r.delta!r},{int(r.success)}\n")
    elif format == "json":
        payload = [{"simulation": r.simulation, "k": r.k,
                    "omega_true": r.omega_true, "phi_true": r.phi_true,
                    "scalar_products": r.scalar_products, "delta": r.delta,
                    "success": r.success} for r in rows]
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        raise ConfigError(f"bad output format {format!r}")
    if summary is not None:
        with open(path + ".summary.json", "w") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
