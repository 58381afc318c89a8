"""Reproducible desk-scale studies with machine-readable reports.

Five experiments:

- ``counts``: closed-form coefficient counts checked against the orbit oracle.
- ``converge``: averaged random channels approaching their mean, with
  depolarizing fits at growing sample counts.
- ``readout-mitigation``: full versus symmetry-reduced calibration budgets.
- ``noise-estimation``: individual versus randomised expectation rescaling.
- ``time-series``: fluctuation damping from averaging parallel circuits.

Each run is deterministic given (config, seed): reports are byte-identical
across repeats.  Every experiment embeds its own pass/fail assertion so a
non-zero exit can gate CI.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .channel import bit_flip_channel, channel_complexity
from .circuits import (
    bell_pair_circuit,
    expectation_from_counts,
    expectation_pauli,
    run_noisy,
    sample_counts,
    two_bell_pairs_circuit,
    loop_rotation_circuit,
)
from .mitigation import (
    apply_readout_noise,
    calibrate_full,
    calibrate_symmetric,
    estimate_lambda,
    loop_correlated_flip_model,
    mitigate_and_score,
    mitigate_expectation,
    tvd,
)
from .randomisation import (
    R1Model,
    R2Model,
    average_sampled_channels,
    fit_depolarizing,
    fit_subset_depolarizing,
    hoeffding_n,
    max_mean_deviation,
    sample_channel,
)
from .symmetry import make_group, verify_count

SCHEMA_VERSION = 1
EXPERIMENTS = (
    "counts",
    "converge",
    "readout-mitigation",
    "noise-estimation",
    "time-series",
)
THREADS_ENV_VAR = "PAULISIMP_THREADS"


@dataclass(frozen=True)
class ExperimentReport:
    """One completed run: tabular rows plus summary metrics and verdict."""

    experiment: str
    seed: int
    config: dict
    columns: tuple[str, ...]
    rows: tuple[dict, ...]
    summary: dict
    passed: bool
    failures: tuple[str, ...]


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV_VAR, "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV_VAR}={raw!r} is not an integer") from exc
    return max(1, count)


def _map_trials(fn, args_list):
    """Deterministic trial map: seeds are pre-partitioned, order is fixed."""
    workers = _thread_count()
    if workers == 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list))


def _trial_rngs(seed: int, count: int) -> list[np.random.Generator]:
    """One independent generator per trial, partitioned from the base seed.

    SFC64 keeps the heaviest experiment comfortably inside its time budget;
    every stream is a deterministic function of (seed, trial index) alone.
    """
    return [
        np.random.Generator(np.random.SFC64(s))
        for s in np.random.SeedSequence(seed).spawn(count)
    ]


def merge_config(defaults: dict, overrides: dict | None) -> dict:
    """Shallow merge with unknown-key rejection."""
    merged = dict(defaults)
    for key, value in (overrides or {}).items():
        if key not in defaults:
            raise ValueError(f"unknown config key {key!r}")
        merged[key] = value
    return merged


# --- counts -------------------------------------------------------------------

# (kind, n) pairs where the closed form is known to disagree with the oracle;
# the run asserts match=False for these and match=True everywhere else.
EXPECTED_MISMATCHES = frozenset(
    {
        ("rot", 8),
        ("refrot", 8),
        ("r2_rot", 8),
        ("r2_refrot", 8),
    }
)

COUNTS_DEFAULTS = {
    "seed": 0,
    "cases": (
        [["ref", n] for n in (2, 4, 6, 8)]
        + [["rot", n] for n in (4, 6, 8)]
        + [["refrot", 8]]
        + [["perm", n] for n in (2, 3, 4, 5, 6)]
        + [["r2", n] for n in (2, 3, 4, 5, 6)]
        + [["r2_ref", n] for n in (2, 4, 6, 8)]
        + [["r2_rot", n] for n in (4, 6, 8)]
        + [["r2_refrot", 8]]
        + [["r2_perm", n] for n in (2, 3, 4, 5, 6, 7, 8)]
    ),
}

COUNTS_COLUMNS = ("kind", "n", "closed_form", "oracle", "match")


def run_counts(config: dict) -> ExperimentReport:
    """Closed-form versus oracle coefficient counts over a case table."""
    config = merge_config(COUNTS_DEFAULTS, config)
    rows = []
    failures = []
    for kind, n in config["cases"]:
        record = verify_count(kind, int(n))
        rows.append(
            {
                "kind": record["kind"],
                "n": record["n"],
                "closed_form": record["closed_form"],
                "oracle": record["oracle"],
                "match": record["match"],
            }
        )
        expected = (kind, int(n)) not in EXPECTED_MISMATCHES
        if record["match"] != expected:
            state = "matches" if record["match"] else "disagrees with"
            failures.append(
                f"{kind} n={n}: closed form {state} oracle "
                f"{record['oracle']}, contrary to expectation"
            )
    case_set = {(kind, int(n)) for kind, n in config["cases"]}
    summary = {
        "cases": len(rows),
        "matching": sum(1 for r in rows if r["match"]),
        "expected_mismatches": sorted(
            f"{kind}:{n}" for kind, n in EXPECTED_MISMATCHES & case_set
        ),
    }
    return ExperimentReport(
        "counts",
        int(config["seed"]),
        config,
        COUNTS_COLUMNS,
        tuple(rows),
        summary,
        not failures,
        tuple(failures),
    )


# --- converge -----------------------------------------------------------------

CONVERGE_DEFAULTS = {
    "seed": 0,
    "model": "r1",
    "n": 2,
    "eta": 0.002,
    "spread": 0.001,
    "distribution": "uniform",
    "eta_by_subset": None,
    "epsilon": 0.0005,
    "delta": 0.05,
    "trials": 200,
    "checkpoints": [10, 100, 1000],
    "failure_slack": 0.025,
}

CONVERGE_COLUMNS = (
    "trial",
    "N",
    "max_dev",
    "fitted_lambda",
    "residual",
    "complexity_at_tol",
)


def _build_model(config: dict):
    n = int(config["n"])
    if config["model"] == "r1":
        return R1Model(n, config["eta"], config["spread"], config["distribution"])
    if config["model"] == "r2":
        etas = {
            tuple(int(q) for q in key.split(",")): value
            for key, value in config["eta_by_subset"].items()
        }
        return R2Model(n, etas, config["spread"], config["distribution"])
    raise ValueError(f"unknown model {config['model']!r}")


def run_converge(config: dict) -> ExperimentReport:
    """Concentration of averaged random channels at Hoeffding sample sizes.

    Each trial averages N sampled channels at every checkpoint N (ending at
    the Hoeffding count for the requested epsilon/delta) and records the
    worst coefficient deviation, the depolarizing fit, its envelope
    residual, and the coefficient complexity at tolerance 2 epsilon.
    """
    config = merge_config(CONVERGE_DEFAULTS, config)
    model = _build_model(config)
    epsilon = float(config["epsilon"])
    target_n = hoeffding_n(epsilon, float(config["delta"]))
    checkpoints = sorted(set(int(c) for c in config["checkpoints"]) | {target_n})
    trials = int(config["trials"])
    tol = 2.0 * epsilon

    def one_trial(args):
        index, rng = args
        trial_rows = []
        for count in checkpoints:
            averaged = average_sampled_channels(model, count, rng)
            if config["model"] == "r1":
                lam, residual = fit_depolarizing(averaged)
            else:
                etas, residual = fit_subset_depolarizing(averaged)
                lam, _ = fit_depolarizing(averaged)
            trial_rows.append(
                {
                    "trial": index,
                    "N": count,
                    "max_dev": max_mean_deviation(averaged, model),
                    "fitted_lambda": lam,
                    "residual": residual,
                    "complexity_at_tol": channel_complexity(averaged, tol=tol),
                }
            )
        return trial_rows

    rngs = _trial_rngs(int(config["seed"]), trials)
    per_trial = _map_trials(one_trial, list(enumerate(rngs)))
    rows = [row for trial_rows in per_trial for row in trial_rows]

    final_devs = [r["max_dev"] for r in rows if r["N"] == target_n]
    failure_fraction = float(np.mean([d > epsilon for d in final_devs]))
    residual_medians = {
        str(count): float(
            np.median([r["residual"] for r in rows if r["N"] == count])
        )
        for count in checkpoints
    }
    medians_in_order = [residual_medians[str(c)] for c in checkpoints]
    monotone = all(a >= b for a, b in zip(medians_in_order, medians_in_order[1:]))

    failures = []
    allowed = float(config["delta"]) + float(config["failure_slack"])
    if failure_fraction > allowed:
        failures.append(
            f"failure fraction {failure_fraction} exceeds {allowed} "
            f"(delta plus slack) at N={target_n}"
        )
    if not monotone:
        failures.append(
            f"median residual not non-increasing across N={checkpoints}: "
            f"{medians_in_order}"
        )
    summary = {
        "hoeffding_n": target_n,
        "checkpoints": checkpoints,
        "failure_fraction": failure_fraction,
        "allowed_failure_fraction": allowed,
        "residual_medians": residual_medians,
        "residual_monotone": monotone,
        "complexity_tol": tol,
    }
    return ExperimentReport(
        "converge",
        int(config["seed"]),
        config,
        CONVERGE_COLUMNS,
        tuple(rows),
        summary,
        not failures,
        tuple(failures),
    )


# --- readout mitigation ---------------------------------------------------------

READOUT_DEFAULTS = {
    "seed": 0,
    "n": 4,
    "flip_probability": 0.03,
    "pair_weight": 0.08,
    "group": "dihedral",
    "full_shots_per_state": 10000,
    "symmetric_shots_per_rep": 10000,
    "trials": 50,
    "max_after_ratio": 0.25,
    "max_median_gap": 0.01,
}

READOUT_COLUMNS = (
    "trial",
    "calibration",
    "samples_used",
    "tvd_before",
    "tvd_after",
    "expectation_error_before",
    "expectation_error_after",
)


def run_readout_mitigation(config: dict) -> ExperimentReport:
    """Full versus orbit-representative calibration on a fixed noisy state.

    The prepared state is two Bell pairs on the four-qubit loop; readout
    noise is a loop-symmetric correlated flip model.  The measured
    distribution is exact, so trial scatter isolates the calibration
    sampling itself.  Each trial yields one row per calibration strategy;
    the expectation columns track the all-qubit parity.
    """
    config = merge_config(READOUT_DEFAULTS, config)
    n = int(config["n"])
    model = loop_correlated_flip_model(
        n, float(config["flip_probability"]), float(config["pair_weight"])
    )
    group = make_group(config["group"], n)
    observable = "Z" * n
    ideal = run_noisy(two_bell_pairs_circuit()).probabilities()
    noisy = apply_readout_noise(model, ideal)
    before = tvd(noisy, ideal)

    def one_trial(args):
        index, rng = args
        full = calibrate_full(model, int(config["full_shots_per_state"]), rng)
        sym = calibrate_symmetric(
            model, group, int(config["symmetric_shots_per_rep"]), rng
        )
        trial_rows = []
        for label, calibration in (("full", full), ("symmetric", sym)):
            result = mitigate_and_score(calibration, noisy, ideal, observable)
            trial_rows.append(
                {
                    "trial": index,
                    "calibration": label,
                    "samples_used": result.samples_used,
                    "tvd_before": result.tvd_before,
                    "tvd_after": result.tvd_after,
                    "expectation_error_before": result.expectation_error_before,
                    "expectation_error_after": result.expectation_error_after,
                }
            )
        return trial_rows

    rngs = _trial_rngs(int(config["seed"]), int(config["trials"]))
    per_trial = _map_trials(one_trial, list(enumerate(rngs)))
    rows = [row for trial_rows in per_trial for row in trial_rows]

    after_full = np.array([r["tvd_after"] for r in rows if r["calibration"] == "full"])
    after_sym = np.array(
        [r["tvd_after"] for r in rows if r["calibration"] == "symmetric"]
    )
    median_full = float(np.median(after_full))
    median_sym = float(np.median(after_sym))
    median_gap = float(np.median(np.abs(after_full - after_sym)))

    failures = []
    limit = float(config["max_after_ratio"]) * before
    if median_gap > float(config["max_median_gap"]):
        failures.append(
            f"median |full - symmetric| distance gap {median_gap} exceeds "
            f"{config['max_median_gap']}"
        )
    if median_full > limit:
        failures.append(f"median full-calibration TVD {median_full} exceeds {limit}")
    if median_sym > limit:
        failures.append(
            f"median symmetric-calibration TVD {median_sym} exceeds {limit}"
        )
    samples = {r["calibration"]: r["samples_used"] for r in rows}
    summary = {
        "tvd_before": before,
        "samples_full": samples.get("full"),
        "samples_symmetric": samples.get("symmetric"),
        "median_tvd_after_full": median_full,
        "median_tvd_after_symmetric": median_sym,
        "median_after_gap": median_gap,
        "after_limit": limit,
    }
    return ExperimentReport(
        "readout-mitigation",
        int(config["seed"]),
        config,
        READOUT_COLUMNS,
        tuple(rows),
        summary,
        not failures,
        tuple(failures),
    )


# --- noise estimation ------------------------------------------------------------

NOISE_DEFAULTS = {
    "seed": 0,
    "n": 4,
    "targets": [-1.0, -0.5, 0.5, 1.0],
    "copies": 3,
    "eta": 0.0008,
    "spread": 0.0006,
    "distribution": "uniform",
    "observable": "ZIII",
    "shots": 4096,
    "trials": 100,
}

NOISE_COLUMNS = (
    "trial",
    "target",
    "individual_error",
    "randomised_error",
    "mean_lambda",
    "rejected_copies",
)


def _preset_circuit(target: float):
    """Loop-rotation circuit whose noiseless first-qubit Z value is target."""
    angle = math.acos(target)
    thetas = [0.0] * 8
    thetas[0] = angle / 2.0
    thetas[4] = angle / 2.0
    return loop_rotation_circuit(tuple(thetas))


def run_noise_estimation(config: dict) -> ExperimentReport:
    """Individual versus randomised depolarizing rescaling on parallel copies.

    Each trial draws fresh per-layer random noise for every parallel copy of
    the rotation circuit.  Individual mitigation rescales each copy by its
    own estimated parameter and averages; randomised mitigation averages the
    raw values and the estimates first, then rescales once.
    """
    config = merge_config(NOISE_DEFAULTS, config)
    n = int(config["n"])
    observable = config["observable"]
    copies = int(config["copies"])
    shots = config["shots"]
    shots = None if shots is None else int(shots)
    trials = int(config["trials"])
    targets = [float(t) for t in config["targets"]]

    model = R1Model(
        n, float(config["eta"]), float(config["spread"]), config["distribution"]
    )

    def one_trial(args):
        index, rng = args
        trial_rows = []
        for target in targets:
            base = _preset_circuit(target)
            estimates = []
            values = []
            rejected = 0
            for _ in range(copies):
                noise = tuple(
                    sample_channel(model, rng) for _ in range(len(base.layers))
                )
                noisy_circuit = base.with_noise(noise)
                try:
                    lam = estimate_lambda(noisy_circuit, observable, shots, rng)
                except ValueError:
                    rejected += 1
                    continue
                state = run_noisy(noisy_circuit)
                if shots is None:
                    value = expectation_pauli(state, observable)
                else:
                    counts = sample_counts(state, shots, rng)
                    value = expectation_from_counts(counts, observable)
                estimates.append(lam)
                values.append(value)
            if not values:
                raise RuntimeError(
                    f"trial {index}, target {target}: every copy was rejected"
                )
            individual = float(
                np.mean([mitigate_expectation(v, lam) for v, lam in zip(values, estimates)])
            )
            randomised = mitigate_expectation(
                float(np.mean(values)), float(np.mean(estimates))
            )
            trial_rows.append(
                {
                    "trial": index,
                    "target": target,
                    "individual_error": abs(individual - target),
                    "randomised_error": abs(randomised - target),
                    "mean_lambda": float(np.mean(estimates)),
                    "rejected_copies": rejected,
                }
            )
        return trial_rows

    rngs = _trial_rngs(int(config["seed"]), trials)
    per_trial = _map_trials(one_trial, list(enumerate(rngs)))
    rows = [row for trial_rows in per_trial for row in trial_rows]

    individual_median = float(np.median([r["individual_error"] for r in rows]))
    randomised_median = float(np.median([r["randomised_error"] for r in rows]))
    per_target = {
        str(t): {
            "individual_median": float(
                np.median([r["individual_error"] for r in rows if r["target"] == t])
            ),
            "randomised_median": float(
                np.median([r["randomised_error"] for r in rows if r["target"] == t])
            ),
        }
        for t in targets
    }
    failures = []
    if randomised_median > individual_median:
        failures.append(
            f"randomised median error {randomised_median} exceeds individual "
            f"median error {individual_median}"
        )
    summary = {
        "individual_median_error": individual_median,
        "randomised_median_error": randomised_median,
        "per_target": per_target,
        "rejected_copies_total": int(sum(r["rejected_copies"] for r in rows)),
    }
    return ExperimentReport(
        "noise-estimation",
        int(config["seed"]),
        config,
        NOISE_COLUMNS,
        tuple(rows),
        summary,
        not failures,
        tuple(failures),
    )


# --- time series ------------------------------------------------------------------

TIMESERIES_DEFAULTS = {
    "seed": 0,
    "n_parallel": 10,
    "timesteps": 50,
    "flip_max": 0.2,
    "observable": "ZZ",
    "trials": 20,
    "ratio_low": 2.4,
    "ratio_high": 4.0,
}

TIMESERIES_COLUMNS = ("trial", "timestep", "circuit", "error", "abs_deviation")


def run_time_series(config: dict) -> ExperimentReport:
    """Fluctuation damping of averaged expectation errors over time.

    Every timestep each parallel Bell circuit gets fresh per-qubit flip
    probabilities drawn uniformly from [0, flip_max]; the error is the exact
    shortfall of the Bell correlation.  The per-circuit deviation series are
    compared against the deviation series of the circuit average.
    """
    config = merge_config(TIMESERIES_DEFAULTS, config)
    n_parallel = int(config["n_parallel"])
    timesteps = int(config["timesteps"])
    if n_parallel < 2 or timesteps < 2:
        raise ValueError("need at least 2 parallel circuits and 2 timesteps")
    flip_max = float(config["flip_max"])
    observable = config["observable"]
    base = bell_pair_circuit()

    def one_trial(args):
        index, rng = args
        errors = np.empty((n_parallel, timesteps))
        for t in range(timesteps):
            ps = rng.uniform(0.0, flip_max, size=(n_parallel, base.n))
            for c in range(n_parallel):
                noise = bit_flip_channel(base.n, ps[c])
                noisy = base.with_noise((None, noise))
                value = expectation_pauli(run_noisy(noisy), observable)
                errors[c, t] = 1.0 - value
        averaged = errors.mean(axis=0)
        per_circuit_std = errors.std(axis=1)
        ratio = float(per_circuit_std.mean() / averaged.std())
        trial_rows = []
        deviations = np.abs(errors - errors.mean(axis=1, keepdims=True))
        averaged_dev = np.abs(averaged - averaged.mean())
        for t in range(timesteps):
            for c in range(n_parallel):
                trial_rows.append(
                    {
                        "trial": index,
                        "timestep": t,
                        "circuit": str(c + 1),
                        "error": float(errors[c, t]),
                        "abs_deviation": float(deviations[c, t]),
                    }
                )
            trial_rows.append(
                {
                    "trial": index,
                    "timestep": t,
                    "circuit": "average",
                    "error": float(averaged[t]),
                    "abs_deviation": float(averaged_dev[t]),
                }
            )
        return trial_rows, ratio

    rngs = _trial_rngs(int(config["seed"]), int(config["trials"]))
    outcomes = _map_trials(one_trial, list(enumerate(rngs)))
    rows = [row for trial_rows, _ in outcomes for row in trial_rows]
    ratios = [ratio for _, ratio in outcomes]
    median_ratio = float(np.median(ratios))

    failures = []
    low, high = float(config["ratio_low"]), float(config["ratio_high"])
    if not low <= median_ratio <= high:
        failures.append(
            f"median std ratio {median_ratio} outside [{low}, {high}]"
        )
    summary = {
        "median_std_ratio": median_ratio,
        "ratios": [float(r) for r in ratios],
        "expected_ratio": math.sqrt(n_parallel),
    }
    return ExperimentReport(
        "time-series",
        int(config["seed"]),
        config,
        TIMESERIES_COLUMNS,
        tuple(rows),
        summary,
        not failures,
        tuple(failures),
    )


# --- dispatch and reporting ----------------------------------------------------

_RUNNERS = {
    "counts": run_counts,
    "converge": run_converge,
    "readout-mitigation": run_readout_mitigation,
    "noise-estimation": run_noise_estimation,
    "time-series": run_time_series,
}

EXPERIMENT_DEFAULTS = {
    "counts": COUNTS_DEFAULTS,
    "converge": CONVERGE_DEFAULTS,
    "readout-mitigation": READOUT_DEFAULTS,
    "noise-estimation": NOISE_DEFAULTS,
    "time-series": TIMESERIES_DEFAULTS,
}


def run_experiment(name: str, config: dict | None = None) -> ExperimentReport:
    if name not in _RUNNERS:
        raise ValueError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    return _RUNNERS[name](config or {})


def _format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.17g}"
    if value is None:
        return ""
    return str(value)


def report_csv(report: ExperimentReport) -> str:
    """RFC-4180 table: header row, floats at 17 significant digits."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(report.columns)
    for row in report.rows:
        writer.writerow([_format_cell(row.get(c)) for c in report.columns])
    return buffer.getvalue()


def report_json(report: ExperimentReport) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "experiment": report.experiment,
        "seed": report.seed,
        "config": report.config,
        "columns": list(report.columns),
        "rows": [
            {c: row.get(c) for c in report.columns} for row in report.rows
        ],
        "summary": report.summary,
        "passed": report.passed,
        "failures": list(report.failures),
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def emit_report(report: ExperimentReport, out_dir: str) -> dict:
    """Write <experiment>.csv/.json (and a rendered figure) under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    stem = report.experiment
    paths = {
        "csv": os.path.join(out_dir, f"{stem}.csv"),
        "json": os.path.join(out_dir, f"{stem}.json"),
    }
    with open(paths["csv"], "w", newline="") as fh:
        fh.write(report_csv(report))
    with open(paths["json"], "w") as fh:
        fh.write(report_json(report))
    from .plots import render_report

    paths["png"] = render_report(report, os.path.join(out_dir, f"{stem}.png"))
    return paths
