"""Per-tick metrics log and its deterministic CSV export.

One row per control tick. The header carries the coverage summary: the mat
area served by the mobile platform, the fixed-device baseline footprint
(0.63 m x 0.48 m) and the effective area once the lateral focal margin is
counted. Identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from sonomat.config import Config
from sonomat.tracking import HANDS

BASELINE_FOOTPRINT = (0.63, 0.48)  # fixed-device comparison footprint


@dataclass(frozen=True)
class MetricsRow:
    tick: int
    t: float
    error: dict[str, float | None]    # per-hand lateral focus-vs-hand error
    quality: dict[str, float | None]  # per-hand delivered focus quality
    churn: int                        # cumulative assignment changes
    edge_fraction: float              # platforms edge-limited this tick


@dataclass
class MetricsLog:
    rows: list[MetricsRow] = field(default_factory=list)

    def append(self, row: MetricsRow) -> None:
        if self.rows and row.tick <= self.rows[-1].tick:
            raise ValueError("metrics rows must be appended in tick order")
        self.rows.append(row)

    def mean_error(self, hand: str, t_min: float = 0.0) -> float | None:
        values = [
            r.error[hand] for r in self.rows
            if r.t >= t_min and r.error.get(hand) is not None
        ]
        if not values:
            return None
        return sum(values) / len(values)


def coverage_summary(config: Config) -> dict[str, float]:
    mat_area = config.mat_width * config.mat_height
    baseline_area = BASELINE_FOOTPRINT[0] * BASELINE_FOOTPRINT[1]
    effective_w = config.mat_width + 2 * config.lateral_margin
    effective_h = config.mat_height + 2 * config.lateral_margin
    effective_area = effective_w * effective_h
    return {
        "mat_area_m2": mat_area,
        "baseline_area_m2": baseline_area,
        "effective_area_m2": effective_area,
        "effective_gain": effective_area / mat_area - 1.0,
    }


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.9g}"


def metrics_to_csv(log: MetricsLog, config: Config) -> str:
    if not log.rows:
        raise ValueError("no metrics rows: session must run at least one tick")
    summary = coverage_summary(config)
    lines = [
        "# coverage "
        + " ".join(f"{k}={v:.9g}" for k, v in summary.items()),
        "t,tick," + ",".join(
            [f"err_{h}" for h in HANDS] + [f"quality_{h}" for h in HANDS]
        ) + ",assignment_churn,edge_limited_fraction",
    ]
    for row in log.rows:
        cells = [f"{row.t:.9g}", str(row.tick)]
        cells += [_fmt(row.error.get(h)) for h in HANDS]
        cells += [_fmt(row.quality.get(h)) for h in HANDS]
        cells += [str(row.churn), f"{row.edge_fraction:.9g}"]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def export_metrics(log: MetricsLog, config: Config, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(metrics_to_csv(log, config))
