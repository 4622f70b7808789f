"""Command-line front end for the simulation harness.

Every subcommand accepts the same scenario flags plus an optional JSON
scenario file; explicit flags override file values, which override the
built-in defaults.  Results stream to stdout or to `--out` as CSV or
JSON.
"""

from __future__ import annotations

import dataclasses
import json

import click

from .experiments import (
    run_delay_experiment,
    run_localization_experiment,
    run_single_scenario,
    write_rows,
)
from .scenario import ScenarioSpec, load_scenario

GEOMETRY_CHOICES = {"circle": "circle", "l": "l_shape", "l_shape": "l_shape", "random": "random"}

_SCENARIO_FLAGS = (
    click.option("--scenario", "scenario_path", type=click.Path(exists=True), default=None, help="JSON scenario file supplying defaults."),
    click.option("--geometry", type=click.Choice(sorted(GEOMETRY_CHOICES)), default=None, help="Node layout family."),
    click.option("--nodes", type=int, default=None, help="Number of nodes M."),
    click.option("--snr1-db", type=float, default=None, help="Reference-node SNR in dB."),
    click.option("--oversample", type=int, default=None, help="Oversampling factor."),
    click.option("--samples", type=int, default=None, help="Sample count L."),
    click.option("--grid", type=int, default=None, help="Delay grid size N (default 2L)."),
    click.option("--rho", type=float, default=None, help="Slack penalty for the sparse recovery."),
    click.option("--order", type=int, default=None, help="Moment relaxation order."),
    click.option("--vmax", type=float, default=None, help="Slack cap for the relaxation."),
    click.option("--trials", type=int, default=None, help="Monte Carlo trials per sweep point."),
    click.option("--seed", type=int, default=None, help="Master seed."),
    click.option("--estimators", type=str, default=None, help="Comma list from full,antares,lasserre."),
    click.option("--snr-exponent", type=float, default=None, help="Distance exponent of the SNR profile."),
    click.option("--range-source", type=click.Choice(["gaussian", "pipeline"]), default=None, help="How localization trials obtain ranges."),
    click.option("--r-max", type=float, default=None, help="Range cap in meters."),
    click.option("--radius", type=float, default=None, help="Circle layout radius in meters."),
    click.option("--delay-fractions", type=str, default=None, help="Pin the two path delays to FRAC_D,FRAC_I of the window."),
)

_OUTPUT_FLAGS = (
    click.option("--out", "out_path", type=click.Path(), default=None, help="Output file (stdout when omitted)."),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", help="Output format."),
)

_FLAG_FIELDS = {
    "geometry": "geometry_kind",
    "nodes": "num_nodes",
    "snr1_db": "snr1_db",
    "oversample": "oversampling",
    "samples": "num_samples",
    "grid": "grid_size",
    "rho": "rho",
    "order": "order",
    "vmax": "v_max",
    "trials": "trials",
    "seed": "master_seed",
    "estimators": "estimators",
    "snr_exponent": "snr_exponent",
    "range_source": "range_source",
    "r_max": "r_max",
    "radius": "radius",
    "delay_fractions": "delay_fractions",
}


def scenario_flags(command):
    for flag in reversed(_SCENARIO_FLAGS + _OUTPUT_FLAGS):
        command = flag(command)
    return command


def build_spec(scenario_path: str | None, **flags) -> ScenarioSpec:
    """Scenario from file plus flag overrides."""
    mapping = load_scenario(scenario_path).to_mapping() if scenario_path else {}
    for flag, field in _FLAG_FIELDS.items():
        value = flags.get(flag)
        if value is None:
            continue
        if flag == "geometry":
            value = GEOMETRY_CHOICES[value]
        elif flag == "estimators":
            value = tuple(part.strip() for part in value.split(",") if part.strip())
        elif flag == "delay_fractions":
            value = tuple(float(part.strip()) for part in value.split(",") if part.strip())
        mapping[field] = value
    try:
        return ScenarioSpec.from_mapping(mapping)
    except (TypeError, ValueError) as err:
        raise click.UsageError(str(err)) from err


def _parse_values(text: str, kind=float):
    values = [kind(part.strip()) for part in text.split(",") if part.strip()]
    if not values:
        raise click.UsageError("need at least one sweep value")
    return values


@click.group()
def main():
    """One-bit passive localization simulator."""


@main.command("delay-sweep")
@scenario_flags
@click.option("--snr-list", default="-5,0,5", show_default=True, help="Comma list of SNR points in dB.")
def delay_sweep(scenario_path, out_path, fmt, snr_list, **flags):
    """Delay N-RMSE versus SNR, one-bit against full precision."""
    spec = build_spec(scenario_path, **flags)
    rows = run_delay_experiment(spec, _parse_values(snr_list), sweep="snr")
    write_rows(rows, out_path, fmt)


@main.command("oversampling-sweep")
@scenario_flags
@click.option("--oversample-list", default="1,2,3,5", show_default=True, help="Comma list of oversampling factors.")
def oversampling_sweep(scenario_path, out_path, fmt, oversample_list, **flags):
    """Delay N-RMSE versus the oversampling factor at fixed SNR."""
    spec = build_spec(scenario_path, **flags)
    rows = run_delay_experiment(spec, _parse_values(oversample_list, int), sweep="oversampling")
    write_rows(rows, out_path, fmt)


@main.command("node-sweep")
@scenario_flags
@click.option("--nodes-list", default="10,20,40,60,80,100", show_default=True, help="Comma list of node counts.")
def node_sweep(scenario_path, out_path, fmt, nodes_list, **flags):
    """Location N-RMSE and the bound versus the number of nodes."""
    spec = build_spec(scenario_path, **flags)
    rows = run_localization_experiment(spec, _parse_values(nodes_list, int))
    write_rows(rows, out_path, fmt)


@main.command("crb-curve")
@scenario_flags
@click.option("--nodes-list", default="10,20,40,60,80,100", show_default=True, help="Comma list of node counts.")
def crb_curve(scenario_path, out_path, fmt, nodes_list, **flags):
    """Normalized root bound versus the number of nodes."""
    flags["estimators"] = flags.get("estimators") or "full"
    spec = build_spec(scenario_path, **flags)
    rows = run_localization_experiment(spec, _parse_values(nodes_list, int))
    write_rows(rows, out_path, fmt)


@main.command("localize-once")
@scenario_flags
def localize_once(scenario_path, out_path, fmt, **flags):
    """Run one full scenario and print the per-estimator summary."""
    spec = build_spec(scenario_path, **flags)
    result = run_single_scenario(spec)
    for name in spec.estimators:
        payload = result.estimates[name]
        if "error_m" in payload:
            click.echo(f"{name}: error {payload['error_m']:.2f} m in {result.wall_ms[name]:.1f} ms")
        else:
            click.echo(f"{name}: failed ({payload['failure']}) after {result.wall_ms[name]:.1f} ms")
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as handle:
            json.dump(dataclasses.asdict(result), handle, indent=2)
            handle.write("\n")
