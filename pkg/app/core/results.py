"""
Result tables, CSV export and gnuplot scripts
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Union

import numpy as np
import pandas as pd

from app.models.experiment import ResultRow

logger = logging.getLogger(__name__)

COLUMNS = ["scenario", "strategy", "sweep", "metric", "value", "stderr", "trials", "seed"]


@dataclass
class ResultTable:
    """Ordered rows of (scenario, strategy, sweep, metric, value, stderr, trials, seed)"""
    rows: List[ResultRow] = field(default_factory=list)

    def add(self, scenario: str, strategy: str, sweep: str, metric: str,
            value: float, stderr: float, trials: int, seed: int) -> None:
        self.rows.append(ResultRow(
            scenario=scenario, strategy=strategy, sweep=sweep, metric=metric,
            value=float(value), stderr=float(stderr), trials=int(trials), seed=int(seed),
        ))

    def extend(self, rows: Iterable[ResultRow]) -> None:
        self.rows.extend(rows)

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.rows], columns=COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "ResultTable":
        frame = frame.astype({"scenario": str, "strategy": str, "sweep": str, "metric": str})
        return cls([ResultRow(**record) for record in frame[COLUMNS].to_dict(orient="records")])

    def value(self, strategy: str, metric: str, sweep: str = "") -> float:
        """Single value lookup, mostly for tests and summaries"""
        for row in self.rows:
            if row.strategy == strategy and row.metric == metric and row.sweep == sweep:
                return row.value
        raise KeyError(f"no row for strategy={strategy!r}, metric={metric!r}, sweep={sweep!r}")

    def row(self, strategy: str, metric: str, sweep: str = "") -> ResultRow:
        for row in self.rows:
            if row.strategy == strategy and row.metric == metric and row.sweep == sweep:
                return row
        raise KeyError(f"no row for strategy={strategy!r}, metric={metric!r}, sweep={sweep!r}")


def mean_and_stderr(samples: np.ndarray) -> tuple:
    """Sample mean and its standard error (0 for a single sample)"""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        return float("nan"), float("nan")
    stderr = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
    return float(np.mean(x)), stderr


def export_csv(table: ResultTable, path: Union[str, Path]) -> Path:
    """Write the table as UTF-8 CSV with a fixed column order"""
    path = Path(path)
    table.to_frame().to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Wrote {len(table)} result rows to {path}")
    return path


def read_csv(path: Union[str, Path]) -> ResultTable:
    frame = pd.read_csv(
        path, encoding="utf-8", keep_default_na=False, dtype={"sweep": str}, float_precision="round_trip"
    )
    return ResultTable.from_frame(frame)


def write_gnuplot_script(table: ResultTable, csv_path: Union[str, Path], metric: str) -> Path:
    """
    gnuplot script next to the CSV plotting one metric per strategy against
    the sweep column, with standard-error bars
    """
    csv_path = Path(csv_path)
    script = csv_path.with_suffix(".gp")
    frame = table.to_frame()
    strategies = list(dict.fromkeys(frame.loc[frame["metric"] == metric, "strategy"]))

    lines = [
        "set datafile separator ','",
        "set key outside right",
        "set grid",
        f"set ylabel '{metric}'",
        "set terminal pngcairo size 900,600",
        f"set output '{csv_path.with_suffix('.png').name}'",
    ]
    # sweep labels look like "n_users=4"; the number after "=" is the abscissa
    x = "real(strcol(3)[strstrt(strcol(3), '=') + 1:])"
    plots = [
        f"'{csv_path.name}' using (strcol(2) eq '{name}' && strcol(4) eq '{metric}' ? "
        f"{x} : 1/0):5:6 with yerrorlines title '{name}'"
        for name in strategies
    ]
    lines.append("plot " + ", \\\n     ".join(plots) if plots else "# no rows for this metric")
    script.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote gnuplot script {script}")
    return script
