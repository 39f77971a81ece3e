"""Check the qualitative PDR and delay trends on campaign results.csv tables.

Usage:
    python tools/check_trends.py --cs results/paper-cs/results.csv \
        --n results/paper-n/results.csv
"""

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

Key = Tuple[str, int]

DELAY_POINTS = [1, 5, 10, 15, 20]
N_POINTS = [2, 6, 10, 14, 18, 22, 26, 30]
PEAK_RANGE = (10, 22)
CONVERGENCE_TOLERANCE = 0.20


@dataclass(frozen=True)
class Stat:
    mean: float
    low: float
    high: float

    def above(self, other: "Stat") -> bool:
        """Strictly larger with disjoint intervals."""
        return self.low > other.high

    def overlaps(self, other: "Stat") -> bool:
        return self.low <= other.high and other.low <= self.high


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # pass | fail | skip
    detail: str


def _stat(row: Dict[str, str], prefix: str, mean_col: str) -> Optional[Stat]:
    cells = (row.get(mean_col), row.get(f"{prefix}_ci_low"), row.get(f"{prefix}_ci_high"))
    if not all(cells):
        return None
    return Stat(*(float(c) for c in cells))


def load_table(path: Path) -> Dict[str, Dict[Key, Stat]]:
    """{"pdr": {(scheme, value): Stat}, "delay": {...}} for rows with full intervals."""
    tables: Dict[str, Dict[Key, Stat]] = {"pdr": {}, "delay": {}}
    with path.open(encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            if not row.get("value"):
                continue
            key = (row["scheme"], int(row["value"]))
            pdr = _stat(row, "pdr", "pdr_mean")
            delay = _stat(row, "delay", "delay_mean_ms")
            if pdr:
                tables["pdr"][key] = pdr
            if delay:
                tables["delay"][key] = delay
    return tables


class _Missing(Exception):
    pass


def _get(table: Dict[Key, Stat], scheme: str, value: int) -> Stat:
    try:
        return table[(scheme, value)]
    except KeyError as exc:
        raise _Missing(f"no {scheme} point at {value}") from exc


def check_scheme_ordering(cs: Dict[str, Dict[Key, Stat]]) -> Tuple[bool, str]:
    order = ["ideal", "random", "fresh", "rwp-only"]
    stats = [_get(cs["pdr"], scheme, 2) for scheme in order]
    ok = all(a.above(b) for a, b in zip(stats, stats[1:]))
    detail = " > ".join(f"{s}={st.mean:.3f}" for s, st in zip(order, stats))
    return ok, f"cs=2: {detail}"


def check_convergence(cs: Dict[str, Dict[Key, Stat]]) -> Tuple[bool, str]:
    ideal = _get(cs["pdr"], "ideal", 20)
    parts, ok = [], True
    for scheme in ("random", "fresh"):
        high = _get(cs["pdr"], scheme, 20)
        low = _get(cs["pdr"], scheme, 1)
        close = abs(high.mean - ideal.mean) <= CONVERGENCE_TOLERANCE * ideal.mean
        grows = high.above(low)
        ok = ok and close and grows
        parts.append(f"{scheme}: cs=1 {low.mean:.3f} -> cs=20 {high.mean:.3f}")
    return ok, f"{'; '.join(parts)}; ideal cs=20 {ideal.mean:.3f}"


def check_ideal_flatness(cs: Dict[str, Dict[Key, Stat]]) -> Tuple[bool, str]:
    one, twenty = _get(cs["pdr"], "ideal", 1), _get(cs["pdr"], "ideal", 20)
    return one.overlaps(twenty), f"ideal cs=1 {one.mean:.3f}, cs=20 {twenty.mean:.3f}"


def check_delay_growth(cs: Dict[str, Dict[Key, Stat]]) -> Tuple[bool, str]:
    parts, ok = [], True
    for scheme in ("random", "fresh", "ideal"):
        series = [_get(cs["delay"], scheme, v) for v in DELAY_POINTS]
        for prev, nxt in zip(series, series[1:]):
            if nxt.mean < prev.mean and not nxt.overlaps(prev):
                ok = False
        parts.append(f"{scheme}: " + " ".join(f"{s.mean:.2f}" for s in series))
    return ok, "; ".join(parts) + " (ms)"


def check_n_unimodality(n: Dict[str, Dict[Key, Stat]]) -> Tuple[bool, str]:
    series = [_get(n["pdr"], "random", v) for v in N_POINTS]
    means = [s.mean for s in series]
    peak = max(range(len(series)), key=lambda i: means[i])
    peak_n = N_POINTS[peak]
    interior = 0 < peak < len(series) - 1
    in_range = PEAK_RANGE[0] <= peak_n <= PEAK_RANGE[1]
    falls = series[peak].above(series[-1])
    ok = interior and in_range and falls
    return ok, f"peak at N={peak_n} ({means[peak]:.3f}), N=30 {means[-1]:.3f}"


CS_CHECKS: List[Tuple[str, Callable]] = [
    ("scheme ordering at cs=2", check_scheme_ordering),
    ("random/fresh converge to ideal", check_convergence),
    ("ideal PDR flat in cs", check_ideal_flatness),
    ("delay grows with cs", check_delay_growth),
]
N_CHECKS: List[Tuple[str, Callable]] = [
    ("PDR peaks at an interior N", check_n_unimodality),
]


def run_checks(cs_path: Optional[Path], n_path: Optional[Path]) -> List[CheckResult]:
    results: List[CheckResult] = []
    for path, checks in ((cs_path, CS_CHECKS), (n_path, N_CHECKS)):
        if path is None:
            results.extend(CheckResult(name, "skip", "table not given") for name, _ in checks)
            continue
        table = load_table(path)
        for name, check in checks:
            try:
                ok, detail = check(table)
            except _Missing as exc:
                results.append(CheckResult(name, "skip", str(exc)))
                continue
            results.append(CheckResult(name, "pass" if ok else "fail", detail))
    return results


def main() -> int:
    parser = argparse.ArgumentParser(
        description="Check PDR/delay trends on cs-sweep and N-sweep campaign tables."
    )
    parser.add_argument("--cs", help="results.csv of a cs sweep with all four schemes.")
    parser.add_argument("--n", help="results.csv of an N sweep (random scheme, cs=10).")
    parser.add_argument(
        "--strict",
        action="store_true",
        help="Treat skipped checks as failures.",
    )
    args = parser.parse_args()
    if not args.cs and not args.n:
        parser.error("give --cs and/or --n")

    results = run_checks(
        Path(args.cs) if args.cs else None,
        Path(args.n) if args.n else None,
    )
    failed = False
    for result in results:
        print(f"[{result.status}] {result.name}: {result.detail}")
        failed = failed or result.status == "fail" or (args.strict and result.status == "skip")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
