"""Monte Carlo experiment drivers, metrics, and result persistence.

Two experiment families share the metrics row format.  Delay sweeps
measure time-delay N-RMSE for one-bit and full-precision recovery on
identical noise and threshold realizations: each trial's squared delay
error is divided by its own squared true delay before summing, and the
root of the sum over the trial count is reported, which reduces to
sqrt(sum of squared errors) / (true delay times trial count) when the
truth is pinned across trials.  Localization sweeps measure location N-RMSE the same
way with the reference-node distance as the per-trial scale.  Relative
N-RMSE is the difference from the full-precision N-RMSE of the same
sweep point, so full precision scores exactly zero against itself.

Trials derive their generators from (master seed, sweep index, trial
index), making every row reproducible; failed trials are excluded from
the error sums and surface in the failure count instead.
"""

from __future__ import annotations

import dataclasses
import json
import sys
import time
from dataclasses import dataclass

import numpy as np

from ..antares import AntaresConfig, antares
from ..crb import normalized_root_crb
from ..delay import SPEED_OF_LIGHT, build_dictionary, estimate_sparse, estimate_sparse_full, extract_delays
from ..geometry import (
    Geometry,
    OneBitRangeData,
    draw_range_thresholds,
    localize_full_precision,
    quantize_range,
    true_ranges,
)
from ..moments import localize_optimal
from ..sensing import (
    ChannelParams,
    draw_temporal_thresholds,
    make_waveform,
    noise_covariance,
    one_bit_quantize,
    sampled_signal_vector,
    sampling_config,
    simulate_received,
)
from .scenario import NBIOT_BANDWIDTH, ScenarioSpec, generate_geometry, snr_profile

CSV_COLUMNS = ("sweep_var", "estimator", "nrmse", "rel_nrmse", "crb", "failures", "trials", "wall_ms", "seed")

# meters of range error at 0 dB reference SNR
RANGE_SIGMA_AT_UNIT_SNR = 2.0
# the direct path reaches the node stronger than the target-scattered one
DIRECT_TO_INDIRECT_RATIO = 1.25
WAVEFORM_ROLLOFF = 1.0
# per-trial truth windows, as fractions of the observation window; the gap
# between them exceeds the pulse correlation width so the paths never merge
DIRECT_FRACTION_WINDOW = (0.10, 0.22)
INDIRECT_FRACTION_WINDOW = (0.30, 0.50)
# moment-vector growth makes larger constellations impractical for the SDP route
LASSERRE_NODE_CAP = 20

DELAY_SWEEPS = ("snr", "oversampling", "samples")
DEFAULT_NODE_COUNTS = (10, 20, 40, 60, 80, 100)


@dataclass(frozen=True)
class TrialResult:
    """One end-to-end pipeline run: truth, per-estimator output, timings.

    Everything inside is built from plain lists and floats so the record
    dumps to JSON unchanged.  `truth` is filled before any estimator
    runs.
    """

    seed: int
    truth: dict
    estimates: dict
    wall_ms: dict
    diagnostics: dict

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class MetricsRow:
    """One aggregated sweep-point result for one estimator."""

    sweep_var: float
    estimator: str
    nrmse: float
    rel_nrmse: float
    crb: float
    failures: int
    trials: int
    wall_ms: float
    seed: int

    def __post_init__(self) -> None:
        if np.isfinite(self.nrmse) and self.nrmse < 0:
            raise ValueError("N-RMSE cannot be negative")
        if self.failures < 0 or self.failures > self.trials:
            raise ValueError("failure count must lie in [0, trials]")
        if self.trials < 1:
            raise ValueError("need at least one trial")


def rows_to_records(rows) -> list[dict]:
    """Metrics rows as JSON-ready dicts, NaN mapped to None."""
    records = []
    for row in rows:
        record = dataclasses.asdict(row)
        for key, value in record.items():
            if isinstance(value, float) and not np.isfinite(value):
                record[key] = None
        records.append(record)
    return records


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value) if np.isfinite(value) else ""
    return str(value)


def write_rows(rows, path: str | None = None, fmt: str = "csv") -> None:
    """Write metrics rows as CSV or JSON to a file, or stdout when no path."""
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)]
        for row in rows:
            record = dataclasses.asdict(row)
            lines.append(",".join(_csv_cell(record[col]) for col in CSV_COLUMNS))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        text = json.dumps(rows_to_records(rows), indent=2) + "\n"
    else:
        raise ValueError(f"unknown output format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write(text)


def range_noise_sigmas(snr1_db: float, geometry: Geometry, target: np.ndarray, exponent: float = 2.0) -> np.ndarray:
    """Per-node range-error standard deviations implied by the SNR profile."""
    return RANGE_SIGMA_AT_UNIT_SNR / np.sqrt(snr_profile(snr1_db, geometry, target, exponent))


def _trial_rng(master_seed: int, sweep_index: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, sweep_index, trial)))


def _nrmse(sum_sq: float, count: int, scale: float) -> float:
    if count == 0:
        return float("nan")
    return float(np.sqrt(sum_sq) / (scale * count))


def _rel(nrmse: float, reference: float) -> float:
    if not (np.isfinite(nrmse) and np.isfinite(reference)):
        return float("nan")
    return float(nrmse - reference)


class _StageClock:
    """Accumulates per-estimator wall time in milliseconds."""

    def __init__(self):
        self.totals: dict[str, float] = {}
        self.counts: dict[str, int] = {}

    def add(self, name: str, seconds: float) -> None:
        self.totals[name] = self.totals.get(name, 0.0) + 1e3 * seconds
        self.counts[name] = self.counts.get(name, 0) + 1

    def mean_ms(self, name: str) -> float:
        if self.counts.get(name, 0) == 0:
            return float("nan")
        return self.totals[name] / self.counts[name]


def _delay_point_assets(master_seed: int, oversampling: int, num_samples: int, grid_points: int):
    duration = num_samples / (2.0 * oversampling * NBIOT_BANDWIDTH)
    waveform = make_waveform(NBIOT_BANDWIDTH, WAVEFORM_ROLLOFF, duration, rng_seed=master_seed)
    cfg = sampling_config(NBIOT_BANDWIDTH, duration, oversampling)
    dictionary = build_dictionary(waveform, cfg, grid_points)
    cov = noise_covariance(cfg.num_samples, oversampling)
    return waveform, cfg, dictionary, cov


def delay_error_samples(
    spec: ScenarioSpec,
    snr_db: float,
    oversampling: int | None = None,
    num_samples: int | None = None,
    sweep_index: int = 0,
) -> dict[str, list[float]]:
    """Per-trial relative delay errors |tau_hat - tau| / tau for one sweep point.

    Runs the same paired trials as `run_delay_experiment` but returns the
    raw error samples per estimator instead of the aggregate, which is
    what robust statistics such as the trial median need.  Failed trials
    contribute nothing to either list.

    Parameters
    ----------
    spec : ScenarioSpec
        Scenario defaults; `snr_db` overrides the SNR at this point.
    snr_db : float
        Per-sample SNR of the scattered path, in dB.
    oversampling, num_samples : int, optional
        Size overrides; defaults come from the spec.
    sweep_index : int
        Position inside an enclosing sweep, part of the trial seeds.

    Returns
    -------
    dict
        Keys "onebit" and "full", each a list of relative errors.
    """
    oversampling = spec.oversampling if oversampling is None else oversampling
    num_samples = spec.num_samples if num_samples is None else num_samples
    grid_points = spec.grid_size if spec.grid_size is not None else 2 * num_samples
    assets = _delay_point_assets(spec.master_seed, oversampling, num_samples, grid_points)
    errors, _, _ = _delay_point_trials(spec, assets, snr_db, sweep_index)
    return errors


def _delay_point_trials(spec: ScenarioSpec, assets, snr_db: float, sweep_index: int):
    """Paired one-bit and full-precision trials at one sweep point.

    Returns per-estimator relative-error samples, failure counts, and the
    stage clock.  Each trial draws the two path delays uniformly over
    fixed fractions of the window (or takes them from
    `spec.delay_fractions` when pinned), then the path phases, the noise,
    and the temporal thresholds; both estimators see the same received
    vector and the noise level realizes the per-sample SNR of the
    scattered path, so a longer window buys estimation gain instead of
    being cancelled by proportionally stronger noise.
    """
    waveform, cfg, dictionary, cov = assets
    duration = waveform.duration
    snr_linear = 10.0 ** (snr_db / 10.0)
    errors: dict[str, list[float]] = {"onebit": [], "full": []}
    failures = {"onebit": 0, "full": 0}
    clock = _StageClock()
    for trial in range(spec.trials):
        rng = _trial_rng(spec.master_seed, sweep_index, trial)
        if spec.delay_fractions is not None:
            direct_fraction, indirect_fraction = spec.delay_fractions
        else:
            direct_fraction = rng.uniform(*DIRECT_FRACTION_WINDOW)
            indirect_fraction = rng.uniform(*INDIRECT_FRACTION_WINDOW)
        tau_direct = direct_fraction * duration
        tau_indirect = indirect_fraction * duration
        signal_power = float(np.mean(np.abs(sampled_signal_vector(waveform, tau_indirect, cfg)) ** 2))
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        channel = ChannelParams(
            direct_gain=DIRECT_TO_INDIRECT_RATIO * np.exp(1j * phases[0]),
            indirect_gain=np.exp(1j * phases[1]),
            direct_delay=tau_direct,
            indirect_delay=tau_indirect,
            noise_power=signal_power / snr_linear,
        )
        received = simulate_received(waveform, channel, cfg, rng)
        amplitude = max(np.max(np.abs(received.real)), np.max(np.abs(received.imag)))
        thresholds = draw_temporal_thresholds(cfg.num_samples, amplitude, rng)

        start = time.perf_counter()
        try:
            quantized = one_bit_quantize(received, thresholds)
            solution = estimate_sparse(quantized, thresholds, dictionary, cov, spec.rho)
            estimate = extract_delays(solution, dictionary.grid)
            errors["onebit"].append(abs(estimate.indirect - tau_indirect) / tau_indirect)
        except RuntimeError:
            failures["onebit"] += 1
        clock.add("onebit", time.perf_counter() - start)

        start = time.perf_counter()
        try:
            solution = estimate_sparse_full(received, dictionary, cov, spec.rho)
            estimate = extract_delays(solution, dictionary.grid)
            errors["full"].append(abs(estimate.indirect - tau_indirect) / tau_indirect)
        except RuntimeError:
            failures["full"] += 1
        clock.add("full", time.perf_counter() - start)
    return errors, failures, clock


def run_delay_experiment(spec: ScenarioSpec, sweep_values, sweep: str = "snr") -> list[MetricsRow]:
    """Paired one-bit and full-precision delay N-RMSE across a sweep.

    `sweep` picks what `sweep_values` means: "snr" varies the SNR in dB
    at fixed sizes, "oversampling" varies the oversampling factor over a
    fixed observation window (so the sample count scales with it), and
    "samples" varies the sample count at fixed oversampling.  Each
    trial's squared delay error is normalized by its own true scattered
    delay, which reduces to the usual fixed-truth formula when
    `spec.delay_fractions` pins the truth.
    """
    if sweep not in DELAY_SWEEPS:
        raise ValueError(f"unknown delay sweep {sweep!r}")
    rows: list[MetricsRow] = []
    for index, value in enumerate(sweep_values):
        snr_db = spec.snr1_db
        oversampling = spec.oversampling
        num_samples = spec.num_samples
        if sweep == "snr":
            snr_db = float(value)
        elif sweep == "oversampling":
            oversampling = int(value)
            num_samples = spec.num_samples * int(value)
        else:
            num_samples = int(value)
        grid_points = spec.grid_size if spec.grid_size is not None else 2 * num_samples
        assets = _delay_point_assets(spec.master_seed, oversampling, num_samples, grid_points)
        errors, failures, clock = _delay_point_trials(spec, assets, snr_db, index)

        nrmse_by_name = {
            name: _nrmse(sum(err * err for err in samples), len(samples), 1.0)
            for name, samples in errors.items()
        }
        nrmse_full = nrmse_by_name["full"]
        for name in ("full", "onebit"):
            nrmse = nrmse_by_name[name]
            rows.append(
                MetricsRow(
                    sweep_var=float(value),
                    estimator=name,
                    nrmse=nrmse,
                    rel_nrmse=_rel(nrmse, nrmse_full),
                    crb=float("nan"),
                    failures=failures[name],
                    trials=spec.trials,
                    wall_ms=clock.mean_ms(name),
                    seed=spec.master_seed,
                )
            )
    return rows


def rho_sweep(spec: ScenarioSpec, rho_values, snr_db: float | None = None) -> list[MetricsRow]:
    """Delay N-RMSE of both estimators across slack-penalty weights.

    The scenario is held fixed while `rho` walks through `rho_values`;
    each returned row's sweep variable is the weight itself.  This is the
    tuning aid for picking a weight before a long sweep, since the
    full-precision program is far more weight-sensitive than the one-bit
    program.
    """
    snr_db = spec.snr1_db if snr_db is None else float(snr_db)
    rows: list[MetricsRow] = []
    for rho in rho_values:
        point = dataclasses.replace(spec, rho=float(rho))
        for row in run_delay_experiment(point, [snr_db], sweep="snr"):
            rows.append(dataclasses.replace(row, sweep_var=float(rho)))
    return rows


def _pipeline_assets(spec: ScenarioSpec):
    grid_points = spec.delay_grid_points
    return _delay_point_assets(spec.master_seed, spec.oversampling, spec.num_samples, grid_points)


def _pipeline_ranges(spec: ScenarioSpec, assets, geometry: Geometry, target, base, snrs, rng) -> np.ndarray:
    """Bistatic range estimates from the full per-node delay chain.

    The noise is unit power and the scattered-path gain magnitude is set
    so that |gain|^2 ||s(tau)||^2 / noise power equals the node's SNR.
    Any node whose recovery fails aborts the trial; the caller counts it
    as a failure for every location estimator.
    """
    waveform, cfg, dictionary, cov = assets
    node_leg = np.linalg.norm(geometry.node_positions - target, axis=1)
    base_leg = float(np.linalg.norm(base - target))
    direct_leg = np.linalg.norm(geometry.node_positions - base, axis=1)
    ranges = np.empty(geometry.num_nodes)
    for m in range(geometry.num_nodes):
        tau_direct = direct_leg[m] / SPEED_OF_LIGHT
        tau_indirect = (node_leg[m] + base_leg) / SPEED_OF_LIGHT
        if tau_indirect >= waveform.duration:
            raise RuntimeError("scattered path falls outside the observation window")
        signal_energy = float(np.sum(np.abs(sampled_signal_vector(waveform, tau_indirect, cfg)) ** 2))
        gain = np.sqrt(float(snrs[m]) / signal_energy)
        phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
        channel = ChannelParams(
            direct_gain=DIRECT_TO_INDIRECT_RATIO * gain * np.exp(1j * phases[0]),
            indirect_gain=gain * np.exp(1j * phases[1]),
            direct_delay=tau_direct,
            indirect_delay=tau_indirect,
            noise_power=1.0,
        )
        received = simulate_received(waveform, channel, cfg, rng)
        amplitude = max(np.max(np.abs(received.real)), np.max(np.abs(received.imag)))
        thresholds = draw_temporal_thresholds(cfg.num_samples, amplitude, rng)
        quantized = one_bit_quantize(received, thresholds)
        solution = estimate_sparse(quantized, thresholds, dictionary, cov, spec.rho)
        ranges[m] = extract_delays(solution, dictionary.grid).range_m
    return ranges


def _run_location_estimator(name, spec, geometry, data, noisy_ranges, lasserre_options):
    """Target estimate for one estimator; raises on failure."""
    if name == "full":
        target_hat, _ = localize_full_precision(geometry, noisy_ranges)
        return target_hat, {}
    if name == "antares":
        result = antares(data.signs, data.thresholds, geometry, AntaresConfig(r_max=spec.r_max))
        return result.target, result.diagnostics
    location = localize_optimal(
        geometry, data, order=spec.order, v_max=spec.v_max, **(lasserre_options or {})
    )
    if not np.all(np.isfinite(location.target)):
        raise RuntimeError("; ".join(location.flags) or "target extraction failed")
    detail = {
        "order": location.order,
        "objective": location.objective,
        "tight": location.tight,
        "flags": list(location.flags),
    }
    return location.target, detail


def _localization_trial(spec, num_nodes, sweep_index, trial, names, pipeline_assets, lasserre_options):
    rng = _trial_rng(spec.master_seed, sweep_index, trial)
    geometry, target, base = generate_geometry(
        spec.geometry_kind, num_nodes, spec.area, rng, radius=spec.radius
    )
    ranges = true_ranges(geometry, target)
    snrs = snr_profile(spec.snr1_db, geometry, target, spec.snr_exponent)
    sigmas = RANGE_SIGMA_AT_UNIT_SNR / np.sqrt(snrs)
    record = {
        "target": target,
        "base": base,
        "ranges": ranges,
        "sigmas": sigmas,
        "errors": {},
        "walls": {},
        "failures": {},
        "diagnostics": {},
    }
    try:
        if spec.range_source == "gaussian":
            noisy = ranges + sigmas * rng.standard_normal(num_nodes)
        else:
            noisy = _pipeline_ranges(spec, pipeline_assets, geometry, target, base, snrs, rng)
    except RuntimeError:
        record["failures"] = dict.fromkeys(names, True)
        record["crb"] = float("nan")
        return record
    thresholds, codes = draw_range_thresholds(num_nodes, spec.r_max, rng)
    signs = quantize_range(noisy, thresholds)
    data = OneBitRangeData(signs=signs, thresholds=thresholds, threshold_codes=codes, r_max=spec.r_max)
    record["noisy_ranges"] = noisy
    record["thresholds"] = thresholds
    record["signs"] = signs
    delta_sq = float(np.sum((target - geometry.node_positions[0]) ** 2))

    for name in names:
        start = time.perf_counter()
        try:
            target_hat, detail = _run_location_estimator(
                name, spec, geometry, data, noisy_ranges=noisy, lasserre_options=lasserre_options
            )
            record["errors"][name] = float(np.sum((target_hat - target) ** 2) / delta_sq)
            record["failures"][name] = False
            record["diagnostics"][name] = detail
            record["estimate_" + name] = target_hat
        except (RuntimeError, np.linalg.LinAlgError):
            record["failures"][name] = True
        record["walls"][name] = time.perf_counter() - start

    # the bound is evaluated in reference-node coordinates so its
    # normalization matches the N-RMSE one
    anchor = geometry.node_positions[0]
    centered = Geometry(
        node_positions=geometry.node_positions - anchor, base_station=base - anchor
    )
    params = np.concatenate([target - anchor, [np.linalg.norm(base - target)], sigmas])
    start = time.perf_counter()
    try:
        record["crb"] = float(normalized_root_crb(params, centered, thresholds))
    except np.linalg.LinAlgError:
        record["crb"] = float("nan")
    record["walls"]["crb"] = time.perf_counter() - start
    return record


def run_localization_experiment(spec: ScenarioSpec, node_counts=None, lasserre_options: dict | None = None) -> list[MetricsRow]:
    """Location N-RMSE, relative N-RMSE, and the bound across node counts.

    Geometry, target, base station, range noise, and thresholds are
    redrawn every trial.  Estimators come from the spec; the moment
    relaxation is skipped above `LASSERRE_NODE_CAP` nodes, where its
    variable count becomes impractical.  Each sweep point also yields a
    "crb" row aggregating the per-trial normalized root bounds the same
    way as the estimator errors; trials whose Fisher matrix is
    numerically singular are counted in that row's failures.
    """
    if node_counts is None:
        node_counts = DEFAULT_NODE_COUNTS
    pipeline_assets = _pipeline_assets(spec) if spec.range_source == "pipeline" else None
    rows: list[MetricsRow] = []
    for index, num_nodes in enumerate(node_counts):
        num_nodes = int(num_nodes)
        names = [
            name
            for name in spec.estimators
            if name != "lasserre" or num_nodes <= LASSERRE_NODE_CAP
        ]
        sums = dict.fromkeys(names, 0.0)
        included = dict.fromkeys(names, 0)
        failures = dict.fromkeys(names, 0)
        crb_sum, crb_included, crb_failures = 0.0, 0, 0
        clock = _StageClock()
        for trial in range(spec.trials):
            record = _localization_trial(
                spec, num_nodes, index, trial, names, pipeline_assets, lasserre_options
            )
            for name in names:
                if record["failures"].get(name, False):
                    failures[name] += 1
                else:
                    sums[name] += record["errors"][name]
                    included[name] += 1
                if name in record["walls"]:
                    clock.add(name, record["walls"][name])
            if np.isfinite(record["crb"]):
                crb_sum += record["crb"] ** 2
                crb_included += 1
            else:
                crb_failures += 1
            if "crb" in record["walls"]:
                clock.add("crb", record["walls"]["crb"])

        nrmse = {name: _nrmse(sums[name], included[name], 1.0) for name in names}
        crb_agg = _nrmse(crb_sum, crb_included, 1.0)
        reference = nrmse.get("full", float("nan"))
        for name in names:
            rel = 0.0 if name == "full" and np.isfinite(reference) else _rel(nrmse[name], reference)
            rows.append(
                MetricsRow(
                    sweep_var=float(num_nodes),
                    estimator=name,
                    nrmse=nrmse[name],
                    rel_nrmse=rel,
                    crb=crb_agg,
                    failures=failures[name],
                    trials=spec.trials,
                    wall_ms=clock.mean_ms(name),
                    seed=spec.master_seed,
                )
            )
        rows.append(
            MetricsRow(
                sweep_var=float(num_nodes),
                estimator="crb",
                nrmse=crb_agg,
                rel_nrmse=_rel(crb_agg, reference),
                crb=crb_agg,
                failures=crb_failures,
                trials=spec.trials,
                wall_ms=clock.mean_ms("crb"),
                seed=spec.master_seed,
            )
        )
    return rows


def run_single_scenario(spec: ScenarioSpec, lasserre_options: dict | None = None) -> TrialResult:
    """One full pipeline run with every estimator the spec names.

    Ranges come from the configured source (the noise model or the
    per-node delay chain), get one-bit quantized against fresh codebook
    thresholds, and feed each estimator in turn.  The truth record is
    assembled before any estimation happens.  Estimates and diagnostics
    are JSON-ready; wall-clock per estimator is reported in ms.
    """
    rng = _trial_rng(spec.master_seed, 0, 0)
    geometry, target, base = generate_geometry(
        spec.geometry_kind, spec.num_nodes, spec.area, rng, radius=spec.radius
    )
    ranges = true_ranges(geometry, target)
    snrs = snr_profile(spec.snr1_db, geometry, target, spec.snr_exponent)
    sigmas = RANGE_SIGMA_AT_UNIT_SNR / np.sqrt(snrs)
    if spec.range_source == "gaussian":
        noisy = ranges + sigmas * rng.standard_normal(spec.num_nodes)
    else:
        noisy = _pipeline_ranges(spec, _pipeline_assets(spec), geometry, target, base, snrs, rng)
    thresholds, codes = draw_range_thresholds(spec.num_nodes, spec.r_max, rng)
    signs = quantize_range(noisy, thresholds)
    data = OneBitRangeData(signs=signs, thresholds=thresholds, threshold_codes=codes, r_max=spec.r_max)
    truth = {
        "target": target.tolist(),
        "base": base.tolist(),
        "ranges": ranges.tolist(),
        "noisy_ranges": noisy.tolist(),
        "thresholds": thresholds.tolist(),
        "signs": [int(s) for s in signs],
    }

    estimates: dict = {}
    wall_ms: dict = {}
    diagnostics: dict = {}
    for name in spec.estimators:
        start = time.perf_counter()
        try:
            target_hat, detail = _run_location_estimator(
                name, spec, geometry, data, noisy_ranges=noisy, lasserre_options=lasserre_options
            )
            estimates[name] = {
                "target": [float(v) for v in target_hat],
                "error_m": float(np.linalg.norm(target_hat - target)),
            }
            diagnostics[name] = detail
        except (RuntimeError, np.linalg.LinAlgError) as err:
            estimates[name] = {"failure": str(err)}
            diagnostics[name] = {}
        wall_ms[name] = 1e3 * (time.perf_counter() - start)
    return TrialResult(
        seed=spec.master_seed,
        truth=truth,
        estimates=estimates,
        wall_ms=wall_ms,
        diagnostics=diagnostics,
    )
