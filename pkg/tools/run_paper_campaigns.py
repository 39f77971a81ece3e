import argparse
import os
import subprocess
import sys
import time
from pathlib import Path
from typing import List, Optional

ROOT = Path(__file__).resolve().parents[1]
CLI_CMD = [sys.executable, "-m", "vfpe_sim.cli"]
CAMPAIGNS = ("paper-cs", "paper-n")
BUDGET_MINUTES = 30.0


def campaign_command(
    name: str,
    out_root: Path,
    runs: Optional[int],
    workers: Optional[int],
    duration: Optional[float],
) -> List[str]:
    cmd = CLI_CMD + ["--campaign", name, "--out", str(out_root / name), "--gnuplot"]
    if runs is not None:
        cmd += ["--runs", str(runs)]
    if workers is not None:
        cmd += ["--workers", str(workers)]
    if duration is not None:
        cmd += ["--duration", str(duration)]
    return cmd


def run_campaign(cmd: List[str], dry_run: bool) -> int:
    print(f"[run] {' '.join(cmd)}")
    if dry_run:
        return 0
    result = subprocess.run(cmd, cwd=ROOT)
    if result.returncode == 0:
        print("[ok ] done")
    else:
        print(f"[fail] exit {result.returncode}")
    return result.returncode


def check_budget(name: str, minutes: float, budget: float, label: str = "wall-clock") -> bool:
    within = minutes <= budget
    print(f"[{'time' if within else 'fail'}] {name} {label}: {minutes:.1f} min "
          f"(budget {budget:.1f} min)")
    return within


def estimate_minutes(
    name: str,
    samples: int,
    runs: Optional[int],
    workers: int,
    duration: Optional[float],
) -> float:
    """Wall-clock forecast from `samples` in-process runs per scheme at the largest sweep value."""
    from vfpe_sim.campaign import load_campaign, with_overrides
    from vfpe_sim.config import get_settings
    from vfpe_sim.engine import run
    from vfpe_sim.streams import run_seed

    campaign = load_campaign(name, default_runs=runs or get_settings().runs_per_point)
    if duration is not None:
        campaign = with_overrides(campaign, duration=duration)
    points = campaign.sweep.points()
    heaviest = max(points, key=lambda v: v or 0)
    seconds = 0.0
    for scheme in campaign.schemes:
        start = time.monotonic()
        for index in range(samples):
            run(campaign.config_for(scheme, heaviest, run_seed(campaign.seed_base, index)))
        per_run = (time.monotonic() - start) / samples
        seconds += per_run * len(points) * campaign.runs_per_point
    return seconds / workers / 60.0


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Run both built-in sweeps (cs and N) and check their trends."
    )
    parser.add_argument("--out-root", default="results", help="Parent directory for outputs.")
    parser.add_argument("--runs", type=int, help="Runs per point (default: campaign/env).")
    parser.add_argument("--workers", type=int, help="Worker processes.")
    parser.add_argument("--duration", type=float, help="Simulated seconds per run.")
    parser.add_argument(
        "--only", choices=CAMPAIGNS, help="Run a single built-in campaign."
    )
    parser.add_argument(
        "--dry-run", action="store_true", help="Print the commands without running them."
    )
    parser.add_argument(
        "--budget-minutes", type=float, default=BUDGET_MINUTES,
        help="Wall-clock budget per campaign; exceeding it fails the run.",
    )
    parser.add_argument(
        "--estimate", type=int, metavar="K",
        help="Only forecast each campaign's wall-clock time from K runs per scheme.",
    )
    args = parser.parse_args()

    out_root = Path(args.out_root)
    names = [args.only] if args.only else list(CAMPAIGNS)

    if args.estimate is not None:
        if args.estimate < 1:
            parser.error("--estimate needs at least one run")
        workers = args.workers or os.cpu_count() or 1
        within = True
        for name in names:
            minutes = estimate_minutes(name, args.estimate, args.runs, workers, args.duration)
            label = f"forecast, {workers} workers"
            within &= check_budget(name, minutes, args.budget_minutes, label)
        return 0 if within else 1

    over_budget = False
    for name in names:
        cmd = campaign_command(name, out_root, args.runs, args.workers, args.duration)
        start = time.monotonic()
        code = run_campaign(cmd, args.dry_run)
        if code != 0:
            return code
        if not args.dry_run:
            minutes = (time.monotonic() - start) / 60.0
            over_budget |= not check_budget(name, minutes, args.budget_minutes)

    check = [sys.executable, str(ROOT / "tools" / "check_trends.py")]
    for name, flag in (("paper-cs", "--cs"), ("paper-n", "--n")):
        if name in names:
            check += [flag, str(out_root / name / "results.csv")]
    print(f"[run] {' '.join(check)}")
    if args.dry_run:
        return 0
    code = subprocess.run(check, cwd=ROOT).returncode
    return code or int(over_budget)


if __name__ == "__main__":
    raise SystemExit(main())
