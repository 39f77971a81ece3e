"""Experiment campaigns: loading, seeded fan-out over runs, aggregation and tables."""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .engine import run
from .metrics import AggregateStats, aggregate, mean_delay, pdr
from .models import Campaign, Scheme, SimConfig, Sweep, SweepParameter
from .schema import validate_campaign_payload
from .streams import run_seed
from .traffic import DropCause

logger = logging.getLogger(__name__)

ALL_SCHEMES = [Scheme.RWP_ONLY, Scheme.RANDOM, Scheme.FRESH, Scheme.IDEAL]

BUILTIN_CAMPAIGNS: dict[str, Campaign] = {
    "paper-cs": Campaign(
        name="paper-cs",
        base=SimConfig(n_swarm=15),
        sweep=Sweep(parameter=SweepParameter.CS, values=list(range(1, 21))),
        schemes=ALL_SCHEMES,
        paper_replication=True,
    ),
    "paper-n": Campaign(
        name="paper-n",
        base=SimConfig(cs=10),
        sweep=Sweep(parameter=SweepParameter.N, values=list(range(1, 31))),
        schemes=ALL_SCHEMES,
        paper_replication=True,
    ),
}

RESULT_COLUMNS = [
    "scheme",
    "sweep",
    "value",
    "n_runs",
    "pdr_mean",
    "pdr_ci_low",
    "pdr_ci_high",
    "delay_mean_ms",
    "delay_ci_low",
    "delay_ci_high",
]
RUN_COLUMNS = [
    "scheme",
    "value",
    "run",
    "seed",
    "sent",
    "received",
    "pdr",
    "delay_mean_ms",
    "chain_completion_time",
    *[f"drop_{cause.value}" for cause in DropCause],
]


@dataclass(frozen=True)
class RunRecord:
    scheme: Scheme
    value: Optional[int]
    run_index: int
    seed: int
    sent: int
    received: int
    pdr: Optional[float]
    delay_ms: Optional[float]
    chain_completion_time: Optional[float]
    drops: dict[str, int]


@dataclass(frozen=True)
class PointResult:
    scheme: Scheme
    value: Optional[int]
    n_runs: int
    pdr: Optional[AggregateStats]
    delay_ms: Optional[AggregateStats]


@dataclass
class CampaignResult:
    campaign: Campaign
    runs: list[RunRecord] = field(default_factory=list)
    points: list[PointResult] = field(default_factory=list)


def load_campaign(ref: str | Path, default_runs: Optional[int] = None) -> Campaign:
    """Resolve a built-in campaign name or read and validate a campaign JSON file.

    `default_runs` fills `runs_per_point` when the campaign does not set it.
    """
    if str(ref) in BUILTIN_CAMPAIGNS:
        return with_overrides(BUILTIN_CAMPAIGNS[str(ref)], runs=default_runs)
    path = Path(ref)
    text = path.read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    validate_campaign_payload(payload)
    if default_runs is not None:
        payload.setdefault("runs_per_point", default_runs)
    return Campaign.model_validate(payload)


def with_overrides(
    campaign: Campaign,
    *,
    runs: Optional[int] = None,
    seed: Optional[int] = None,
    duration: Optional[float] = None,
) -> Campaign:
    data: dict[str, Any] = campaign.model_dump()
    if runs is not None:
        data["runs_per_point"] = runs
    if seed is not None:
        data["seed_base"] = seed
    if duration is not None:
        data["base"]["duration"] = duration
    return Campaign.model_validate(data)


def _run_one(config: SimConfig, value: Optional[int], run_index: int) -> RunRecord:
    metrics = run(config)
    delay = mean_delay(metrics)
    return RunRecord(
        scheme=config.scheme,
        value=value,
        run_index=run_index,
        seed=config.seed,
        sent=metrics.cbr_sent,
        received=metrics.cbr_received,
        pdr=pdr(metrics),
        delay_ms=None if delay is None else delay * 1000.0,
        chain_completion_time=metrics.chain_completion_time,
        drops=dict(metrics.drop_causes),
    )


def run_campaign(
    campaign: Campaign,
    workers: Optional[int] = None,
    on_point: Optional[Callable[[PointResult], None]] = None,
) -> CampaignResult:
    """
    Execute every (scheme, value, run) of `campaign` and aggregate per point.

    Run seeds depend only on (seed_base, run index), so all schemes and sweep values see
    the same mobility draws. Output order is (scheme, value, run) whatever the workers do.
    """
    jobs: list[tuple[SimConfig, Optional[int], int]] = []
    for scheme in campaign.schemes:
        for value in campaign.sweep.points():
            for run_index in range(campaign.runs_per_point):
                seed = run_seed(campaign.seed_base, run_index)
                jobs.append((campaign.config_for(scheme, value, seed), value, run_index))

    outcomes: list[Optional[RunRecord]] = [None] * len(jobs)
    if workers is not None and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as executor:
            future_map = {executor.submit(_run_one, *job): idx for idx, job in enumerate(jobs)}
            for future in as_completed(future_map):
                outcomes[future_map[future]] = future.result()
    else:
        for idx, job in enumerate(jobs):
            outcomes[idx] = _run_one(*job)

    result = CampaignResult(campaign=campaign, runs=[r for r in outcomes if r is not None])
    per_point = campaign.runs_per_point
    for start in range(0, len(result.runs), per_point):
        chunk = result.runs[start:start + per_point]
        point = PointResult(
            scheme=chunk[0].scheme,
            value=chunk[0].value,
            n_runs=len(chunk),
            pdr=aggregate([r.pdr for r in chunk]),
            delay_ms=aggregate([r.delay_ms for r in chunk]),
        )
        result.points.append(point)
        logger.info(
            "%s %s=%s: pdr=%s over %d runs",
            point.scheme.value,
            campaign.sweep.parameter.value,
            point.value,
            _fmt(point.pdr.mean if point.pdr else None),
            point.n_runs,
        )
        if on_point is not None:
            on_point(point)
    return result


def _fmt(value: Optional[float], digits: int = 6) -> str:
    return "" if value is None else f"{value:.{digits}f}"


def _stat_cells(stats: Optional[AggregateStats]) -> list[str]:
    if stats is None:
        return ["", "", ""]
    return [_fmt(stats.mean), _fmt(stats.ci_low), _fmt(stats.ci_high)]


def write_results(result: CampaignResult, out_dir: Path, gnuplot: bool = False) -> list[Path]:
    """Write results.csv, runs.csv and optionally results.dat; returns the paths written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    sweep = result.campaign.sweep.parameter.value
    written = []

    results_path = out_dir / "results.csv"
    with results_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for p in result.points:
            writer.writerow(
                [p.scheme.value, sweep, "" if p.value is None else p.value, p.n_runs]
                + _stat_cells(p.pdr)
                + _stat_cells(p.delay_ms)
            )
    written.append(results_path)

    runs_path = out_dir / "runs.csv"
    with runs_path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RUN_COLUMNS)
        for r in result.runs:
            writer.writerow(
                [
                    r.scheme.value,
                    "" if r.value is None else r.value,
                    r.run_index,
                    r.seed,
                    r.sent,
                    r.received,
                    _fmt(r.pdr),
                    _fmt(r.delay_ms),
                    _fmt(r.chain_completion_time, 3),
                ]
                + [r.drops.get(cause.value, 0) for cause in DropCause]
            )
    written.append(runs_path)

    if gnuplot:
        dat_path = out_dir / "results.dat"
        blocks = []
        for scheme in result.campaign.schemes:
            lines = [f"# {scheme.value}: value pdr lo hi delay_ms lo hi"]
            for p in result.points:
                if p.scheme is not scheme:
                    continue
                cells = _stat_cells(p.pdr) + _stat_cells(p.delay_ms)
                x = "0" if p.value is None else str(p.value)
                lines.append(" ".join([x] + [c or "nan" for c in cells]))
            blocks.append("\n".join(lines))
        dat_path.write_text("\n\n\n".join(blocks) + "\n", encoding="utf-8")
        written.append(dat_path)
    return written
