import argparse
import csv
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

PointKey = Tuple[str, str, str]

COLUMNS = {
    "pdr": ("pdr_mean", "pdr_ci_low", "pdr_ci_high"),
    "delay": ("delay_mean_ms", "delay_ci_low", "delay_ci_high"),
}


@dataclass(frozen=True)
class Interval:
    mean: float
    low: Optional[float]
    high: Optional[float]

    def overlaps(self, other: "Interval") -> bool:
        if None in (self.low, self.high, other.low, other.high):
            return True
        return self.low <= other.high and other.low <= self.high

    def render(self) -> str:
        if self.low is None or self.high is None:
            return f"{self.mean:.4f}"
        return f"{self.mean:.4f} [{self.low:.4f}, {self.high:.4f}]"


def _float(cell: str) -> Optional[float]:
    cell = (cell or "").strip()
    return float(cell) if cell else None


def _interval(row: Dict[str, str], metric: str) -> Optional[Interval]:
    mean_col, low_col, high_col = COLUMNS[metric]
    mean = _float(row.get(mean_col, ""))
    if mean is None:
        return None
    return Interval(mean, _float(row.get(low_col, "")), _float(row.get(high_col, "")))


def load_points(path: Path) -> Dict[PointKey, Dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as handle:
        return {(row["scheme"], row["sweep"], row["value"]): row for row in csv.DictReader(handle)}


def _sort_key(key: PointKey) -> Tuple[str, str, float]:
    scheme, sweep, value = key
    return (scheme, sweep, float(value) if value else -1.0)


def build_report(*, a_path: Path, b_path: Path, metric: str) -> str:
    a_points = load_points(a_path)
    b_points = load_points(b_path)
    keys = sorted(set(a_points) | set(b_points), key=_sort_key)

    now = datetime.now(timezone.utc).isoformat(timespec="seconds")
    lines: List[str] = [
        "# Campaign comparison",
        "",
        f"- Generated: {now}",
        f"- A: {a_path}",
        f"- B: {b_path}",
        f"- Metric: {metric}",
        "",
        "| Scheme | Sweep | Value | A | B | Delta (B - A) | CIs overlap |",
        "|---|---|---|---|---|---|---|",
    ]
    differing = 0
    for key in keys:
        scheme, sweep, value = key
        a = _interval(a_points[key], metric) if key in a_points else None
        b = _interval(b_points[key], metric) if key in b_points else None
        a_cell = a.render() if a else "(missing)"
        b_cell = b.render() if b else "(missing)"
        if a and b:
            delta = f"{b.mean - a.mean:+.4f}"
            overlap = "yes" if a.overlaps(b) else "**no**"
            differing += not a.overlaps(b)
        else:
            delta, overlap = "", ""
        lines.append(
            f"| {scheme} | {sweep} | {value} | {a_cell} | {b_cell} | {delta} | {overlap} |"
        )

    lines.extend(["", f"Points with disjoint intervals: {differing} of {len(keys)}"])
    return "\n".join(lines).rstrip() + "\n"


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Generate a markdown A/B report from two campaign results.csv tables."
    )
    parser.add_argument("--a", required=True, help="Baseline results.csv.")
    parser.add_argument("--b", required=True, help="Candidate results.csv.")
    parser.add_argument(
        "--metric",
        choices=["pdr", "delay"],
        default="pdr",
        help="Which aggregated metric to compare (default: pdr).",
    )
    parser.add_argument("--output", required=True, help="Path to write the markdown report.")

    args = parser.parse_args()
    out_path = Path(args.output)
    report = build_report(a_path=Path(args.a), b_path=Path(args.b), metric=args.metric)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(report, encoding="utf-8")
    print(f"[ok] wrote {out_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
