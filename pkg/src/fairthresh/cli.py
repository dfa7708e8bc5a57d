"""Command-line entry point for batch runs and the HTTP service.

Exit codes: 0 success, 2 usage/configuration error, 1 data or validation
error.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .discrimination import find_dominating
from .errors import ConfigError, FairthreshError
from .ingest import (
    ClusterSpec,
    build_partition,
    load_dataset,
    load_run_config,
    parse_manifest,
    partition_from_doc,
    partition_to_doc,
)
from .metrics import ConfusionCounts, UtilityKind, index_subgroups, utility
from .optimizer import OptimizationReport, optimize, pct_diff
from .partition import partition_by_attribute
from .reporting import render_table, serialize_report

UTILITY_CHOICES = click.Choice([k.value for k in UtilityKind])


def _fail(err: Exception) -> None:
    click.echo(f"error: {err}", err=True)
    sys.exit(2 if isinstance(err, ConfigError) else 1)


def _validate_tau(ctx, param, value):
    if value is not None and not 0.0 <= value <= 1.0:
        raise click.BadParameter("must lie in [0, 1]")
    return value


@click.group()
def main():
    """Per-subgroup decision-threshold tuning for scored datasets."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", default=0.5, show_default=True, callback=_validate_tau)
@click.option("--group-by", "group_by", required=True, help="Attribute column to split on.")
@click.option("--utility", "utility_name", default="ppv", show_default=True, type=UTILITY_CHOICES)
def metrics(input_path, manifest_path, tau, group_by, utility_name):
    """Print per-subgroup utilities and gaps at one shared threshold."""
    kind = UtilityKind(utility_name)
    try:
        dataset = load_dataset(input_path, parse_manifest(manifest_path))
        partition = partition_by_attribute(dataset, group_by)
        indexes = index_subgroups(dataset, partition)
        counts = {g: indexes[g].counts_at(tau) for g in sorted(partition.subgroup_ids)}
        utilities = {g: utility(c, kind) for g, c in counts.items()}
        tp = sum(c.tp for c in counts.values())
        fp = sum(c.fp for c in counts.values())
        tn = sum(c.tn for c in counts.values())
        fn = sum(c.fn for c in counts.values())
        overall = utility(ConfusionCounts(tp, fp, tn, fn, tau), kind)
        dominance = find_dominating(
            utilities, support={g: c.tp + c.fp for g, c in counts.items()}
        )
    except FairthreshError as err:
        _fail(err)
        return

    dominant = dominance.dominating_subgroup
    click.echo(f"tau={tau:.4f}  utility={kind.value}  overall={overall:.4f}")
    for g in sorted(utilities):
        marker = " *dominant*" if g == dominant else ""
        gap = "" if g == dominant else f"  gap_vs_dominant={utilities[dominant] - utilities[g]:+.4f}"
        click.echo(f"  {g}: {utilities[g]:.4f}  (n={indexes[g].size}){gap}{marker}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", "k_text", default="auto", show_default=True, help="Cluster count, or 'auto' for elbow selection.")
@click.option("--k-range", "k_range_text", default="2..10", show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--output", "output_path", required=True, type=click.Path(dir_okay=False))
@click.option("--elbow-out", "elbow_path", type=click.Path(dir_okay=False), help="Write the inertia curve as CSV.")
def cluster(input_path, manifest_path, k_text, k_range_text, seed, output_path, elbow_path):
    """Cluster the feature space into subgroups and write a partition file."""
    if k_text == "auto":
        k = None
    else:
        try:
            k = int(k_text)
        except ValueError:
            raise click.BadParameter("--k must be an integer or 'auto'") from None
        if k < 2:
            raise click.BadParameter("--k must be at least 2")
    try:
        lo, _, hi = k_range_text.partition("..")
        k_range = (int(lo), int(hi))
    except ValueError:
        raise click.BadParameter("--k-range must look like 2..10") from None

    try:
        dataset = load_dataset(input_path, parse_manifest(manifest_path))
        partition, elbow = build_partition(
            dataset, ClusterSpec(k=k, k_range=k_range, seed=seed)
        )
    except FairthreshError as err:
        _fail(err)
        return

    Path(output_path).write_text(
        json.dumps(partition_to_doc(partition), sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    if elbow is not None:
        click.echo(f"chosen_k={elbow.chosen_k}")
        if elbow_path:
            with open(elbow_path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["k", "inertia", "chosen"])
                for kk in sorted(elbow.inertia_by_k):
                    writer.writerow(
                        [kk, repr(elbow.inertia_by_k[kk]), int(kk == elbow.chosen_k)]
                    )
    for g, size in partition.sizes().items():
        click.echo(f"  {g}: {size} instances")
    click.echo(f"partition written to {output_path}")


@main.command(name="optimize")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def optimize_cmd(config_path):
    """Run the full threshold search described by a run-config file."""
    try:
        run = load_run_config(config_path)
        dataset = load_dataset(run.dataset, run.manifest)
        partition, _ = build_partition(dataset, run.partition_spec, default_seed=run.seed)
        report = optimize(dataset, partition, run.optimizer)
    except FairthreshError as err:
        _fail(err)
        return

    if run.report_json:
        Path(run.report_json).parent.mkdir(parents=True, exist_ok=True)
        Path(run.report_json).write_bytes(serialize_report(report))
    if run.report_table:
        Path(run.report_table).parent.mkdir(parents=True, exist_ok=True)
        Path(run.report_table).write_text(render_table(report), encoding="utf-8")
    click.echo(_summary_line(report))
    click.echo(render_table(report), nl=False)


def _summary_line(report: OptimizationReport) -> str:
    if report.discrimination_before:
        worst_before = max(report.discrimination_before.values())
        worst_after = max(report.discrimination_after.values())
        pct = pct_diff(worst_before, worst_after)
        pct_text = "n/a" if pct is None else f"{pct * 100:+.1f}%"
        gap_text = (
            f"worst gap {worst_before:.4f} -> {worst_after:.4f} ({pct_text})"
        )
    else:
        gap_text = "no non-dominant subgroups"
    return (
        f"dominant={report.dominant}  {gap_text}  "
        f"overall {report.baseline_overall:.4f} -> {report.adjusted_overall:.4f}  "
        f"feasible={report.validation.feasible}"
    )


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--group-by", "group_by", help="Attribute column to split on.")
@click.option("--partition", "partition_path", type=click.Path(exists=True, dir_okay=False), help="Partition file from the cluster command.")
@click.option("--thresholds", required=True, help="Global tau, or subgroup:tau pairs separated by commas.")
@click.option("--utility", "utility_name", default="ppv", show_default=True, type=UTILITY_CHOICES)
def whatif(input_path, manifest_path, group_by, partition_path, thresholds, utility_name):
    """Evaluate metrics at explicit thresholds without optimizing."""
    if bool(group_by) == bool(partition_path):
        raise click.UsageError("pass exactly one of --group-by or --partition")
    kind = UtilityKind(utility_name)
    try:
        dataset = load_dataset(input_path, parse_manifest(manifest_path))
        if group_by:
            partition = partition_by_attribute(dataset, group_by)
        else:
            partition = partition_from_doc(
                json.loads(Path(partition_path).read_text(encoding="utf-8"))
            )
        indexes = index_subgroups(dataset, partition)
        per_tau = _parse_threshold_text(thresholds, partition.subgroup_ids)
    except FairthreshError as err:
        _fail(err)
        return

    tp = fp = tn = fn = 0
    utilities = {}
    for g in sorted(partition.subgroup_ids):
        counts = indexes[g].counts_at(per_tau[g])
        tp, fp, tn, fn = tp + counts.tp, fp + counts.fp, tn + counts.tn, fn + counts.fn
        try:
            utilities[g] = utility(counts, kind)
            value = f"{utilities[g]:.4f}"
        except FairthreshError:
            value = "undefined"
        click.echo(f"  {g}: tau={per_tau[g]:.4f}  {kind.value}={value}  (n={indexes[g].size})")
    try:
        overall = f"{utility(ConfusionCounts(tp, fp, tn, fn, 0.0), kind):.4f}"
    except FairthreshError:
        overall = "undefined"
    click.echo(f"overall {kind.value}={overall}")
    if len(utilities) >= 2:
        dominant = find_dominating(utilities).dominating_subgroup
        for g in sorted(utilities):
            if g != dominant:
                click.echo(f"  gap {dominant}-{g}: {utilities[dominant] - utilities[g]:+.4f}")


def _parse_threshold_text(text: str, subgroup_ids: tuple[str, ...]) -> dict[str, float]:
    text = text.strip()
    if ":" not in text:
        try:
            value = float(text)
        except ValueError:
            raise click.BadParameter(f"cannot parse threshold {text!r}") from None
        if not 0.0 <= value <= 1.0:
            raise click.BadParameter("thresholds must lie in [0, 1]")
        return {g: value for g in subgroup_ids}
    per_tau = {}
    for pair in text.split(","):
        name, sep, raw = pair.rpartition(":")
        if not sep or not name or name not in subgroup_ids:
            raise click.BadParameter(f"malformed or unknown threshold pair {pair!r}")
        value = float(raw)
        if not 0.0 <= value <= 1.0:
            raise click.BadParameter("thresholds must lie in [0, 1]")
        per_tau[name] = value
    missing = [g for g in subgroup_ids if g not in per_tau]
    if missing:
        raise click.BadParameter(f"no threshold for subgroups: {missing}")
    return per_tau


@main.command()
@click.option("--listen", default="127.0.0.1:8000", show_default=True, help="host:port to bind.")
@click.option("--session-cap", default=64, show_default=True, type=int)
@click.option("--max-rows", default=1_000_000, show_default=True, type=int)
def serve(listen, session_cap, max_rows):
    """Run the HTTP service until interrupted."""
    host, _, port_text = listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise click.BadParameter("--listen must look like host:port")
    import uvicorn

    from .service import create_app

    app = create_app(session_cap=session_cap, max_rows=max_rows)
    try:
        uvicorn.run(app, host=host, port=int(port_text), log_level="warning")
    except (OSError, SystemExit) as err:
        click.echo(f"error: could not serve on {listen}: {err}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
