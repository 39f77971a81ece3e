"""Command-line entry points for simulation campaigns and single diagnostic runs."""

import csv
import json
import logging
import os
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich import print as rprint
from rich.logging import RichHandler
from rich.table import Table

from .campaign import (
    BUILTIN_CAMPAIGNS,
    PointResult,
    load_campaign,
    run_campaign,
    with_overrides,
    write_results,
)
from .config import get_settings
from .engine import Simulation
from .metrics import contact_statistics, mean_delay, pdr
from .models import Scheme, SimConfig

app = typer.Typer(
    help="Simulate VFPe relay-chain formation by a UAV swarm and run experiment campaigns."
)


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=False, show_path=False)],
        force=True,
    )


def _fail(message: str) -> None:
    rprint(f"[red]{message}[/red]")
    raise typer.Exit(code=1)


def _default_trace_path(config: SimConfig) -> Path:
    settings = get_settings()
    traces_dir = (
        Path(settings.trace_dir)
        if settings.trace_dir
        else Path(__file__).resolve().parents[2] / "docs" / "traces"
    )
    name = f"trace-{config.scheme.value}-cs{config.cs}-n{config.n_swarm}-seed{config.seed}.csv"
    return traces_dir / name


def _write_trace(path: Path, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time", "node", "role", "x", "y"])
        for time, node, role, x, y in rows:
            writer.writerow([f"{time:.3f}", node, role, f"{x:.3f}", f"{y:.3f}"])


def _print_point(point: PointResult) -> None:
    if point.pdr is None:
        return
    rprint(
        f"[dim]{point.scheme.value} value={point.value}: "
        f"pdr={point.pdr.mean:.3f} ({point.n_runs} runs)[/dim]"
    )


@app.callback(invoke_without_command=True)
def campaign(
    ctx: typer.Context,
    campaign_ref: Optional[str] = typer.Option(
        None,
        "--campaign",
        "-c",
        help=f"Campaign JSON file or built-in name ({', '.join(sorted(BUILTIN_CAMPAIGNS))}).",
    ),
    out: Optional[Path] = typer.Option(
        None,
        "--out",
        "-o",
        help="Directory for results.csv and runs.csv. Defaults to VFPE_OUTPUT_DIR.",
    ),
    runs: Optional[int] = typer.Option(
        None, "--runs", min=1, help="Override runs per (scheme, value) point."
    ),
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Override the seed base."),
    workers: Optional[int] = typer.Option(
        None, "--workers", "-w", min=1, help="Worker processes (default: VFPE_WORKERS or CPUs)."
    ),
    duration: Optional[float] = typer.Option(
        None, "--duration", help="Override simulated seconds per run."
    ),
    gnuplot: bool = typer.Option(
        False, "--gnuplot", help="Also write a gnuplot-ready results.dat."
    ),
    log_level: Optional[str] = typer.Option(
        None, "--log-level", help="Logging level (default: VFPE_LOG_LEVEL)."
    ),
):
    """
    Default command: run a campaign and write its CSV tables.

    When a subcommand (e.g., one) is invoked, this callback only configures logging.
    """
    settings = get_settings()
    _configure_logging(log_level or settings.log_level)
    if ctx.invoked_subcommand:
        return
    if campaign_ref is None:
        raise typer.BadParameter("Provide --campaign with a JSON file or a built-in name.")

    try:
        loaded = load_campaign(campaign_ref, default_runs=settings.runs_per_point)
        loaded = with_overrides(loaded, runs=runs, seed=seed, duration=duration)
    except (ValidationError, ValueError) as exc:
        _fail(f"Invalid campaign {campaign_ref}: {exc}")
    except OSError as exc:
        _fail(f"Cannot read campaign {campaign_ref}: {exc}")

    worker_count = workers or settings.workers or os.cpu_count() or 1
    out_dir = out or Path(settings.output_dir)
    total = len(loaded.schemes) * len(loaded.sweep.points()) * loaded.runs_per_point
    rprint(
        f"[cyan]Campaign {loaded.name}: {total} runs on {worker_count} worker(s)...[/cyan]"
    )
    result = run_campaign(loaded, workers=worker_count, on_point=_print_point)
    try:
        written = write_results(result, out_dir, gnuplot=gnuplot)
    except OSError as exc:
        _fail(f"Cannot write results under {out_dir}: {exc}")
    for path in written:
        rprint(f"[green]Wrote {path}[/green]")


@app.command("one")
def one_command(
    scheme: Scheme = typer.Option(Scheme.RANDOM, "--scheme", help="Knowledge scheme."),
    cs: Optional[int] = typer.Option(None, "--cs", min=1, help="Beacon contact size."),
    n: Optional[int] = typer.Option(None, "--n", min=0, help="Number of swarm nodes."),
    seed: int = typer.Option(0, "--seed", min=0, help="Run seed."),
    duration: Optional[float] = typer.Option(None, "--duration", help="Simulated seconds."),
    trace: bool = typer.Option(
        False, "--trace", help="Write a trajectory trace CSV (default under docs/traces)."
    ),
    trace_path: Optional[Path] = typer.Option(
        None, "--trace-path", help="Path for the trajectory trace (implies --trace)."
    ),
    trace_interval: float = typer.Option(
        1.0, "--trace-interval", help="Seconds between trace samples."
    ),
    json_out: Optional[Path] = typer.Option(
        None, "--json", help="Optional path to write the full run metrics as JSON."
    ),
):
    """Run a single seeded simulation and print its metrics."""
    changes = {"scheme": scheme, "seed": seed}
    if cs is not None:
        changes["cs"] = cs
    if n is not None:
        changes["n_swarm"] = n
    if duration is not None:
        changes["duration"] = duration
    try:
        config = SimConfig().evolve(**changes)
    except (ValidationError, ValueError) as exc:
        _fail(f"Invalid configuration: {exc}")

    wants_trace = trace or trace_path is not None
    simulation = Simulation(config, trace_interval=trace_interval if wants_trace else None)
    metrics = simulation.run()

    table = Table(title=f"{scheme.value} cs={config.cs} N={config.n_swarm} seed={seed}")
    table.add_column("metric")
    table.add_column("value", justify="right")
    ratio = pdr(metrics)
    delay = mean_delay(metrics)
    contact = contact_statistics(metrics)
    table.add_row("CBR sent", str(metrics.cbr_sent))
    table.add_row("CBR received", str(metrics.cbr_received))
    table.add_row("PDR", "n/a" if ratio is None else f"{ratio:.4f}")
    table.add_row("mean delay (ms)", "n/a" if delay is None else f"{delay * 1000:.3f}")
    for cause, count in metrics.drop_causes.items():
        table.add_row(f"dropped: {cause}", str(count))
    completion = metrics.chain_completion_time
    table.add_row("chain completed at (s)", "never" if completion is None else f"{completion:.1f}")
    table.add_row("mean S-S contact (s)", "n/a" if contact is None else f"{contact:.2f}")
    table.add_row("beacons sent", str(metrics.beacons_sent))
    table.add_row("auditor violations", str(metrics.auditor_violations))
    table.add_row("events", str(metrics.events_processed))
    rprint(table)

    if wants_trace:
        path = trace_path or _default_trace_path(config)
        _write_trace(path, simulation.trace)
        rprint(f"[cyan]Wrote trace to {path}[/cyan]")
    if json_out:
        json_out.parent.mkdir(parents=True, exist_ok=True)
        json_out.write_text(json.dumps(metrics.to_dict(), indent=2), encoding="utf-8")
        rprint(f"[cyan]Wrote metrics to {json_out}[/cyan]")


def main():
    app()


if __name__ == "__main__":
    main()
