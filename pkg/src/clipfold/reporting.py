"""Report serialization: delimited output, a JSON mirror and rendered
figures.

CSV columns are fixed: experiment, lambda, m, n, estimate, std_error,
exponent, seed.  Floats are written with 17 significant digits so a
read-back reproduces them bit-exactly.  Figures are rendered with
matplotlib next to the delimited output; nothing in any emitted file
depends on wall-clock time.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .errors import ConfigurationError
from .experiments import ReportRow, ScalingReport

CSV_COLUMNS = ("experiment", "lambda", "m", "n", "estimate", "std_error", "exponent", "seed")

plt.rcParams["svg.hashsalt"] = "clipfold"


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(report: ScalingReport, path: str | Path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in report.rows:
                writer.writerow(
                    [
                        row.experiment,
                        fmt17(row.lam),
                        row.m,
                        row.n,
                        fmt17(row.estimate),
                        fmt17(row.std_error),
                        fmt17(report.exponent),
                        row.seed,
                    ]
                )
            fh.write(f"# exponent = {fmt17(report.exponent)}\n")
    except OSError as e:
        raise ConfigurationError(f"cannot write CSV to {path}: {e}") from e
    return path


def report_to_mapping(report: ScalingReport) -> dict:
    return {
        "experiment": report.experiment,
        "rows": [
            {
                "experiment": r.experiment,
                "lambda": r.lam,
                "m": r.m,
                "n": r.n,
                "estimate": r.estimate,
                "std_error": r.std_error,
                "seed": r.seed,
                "extra": r.extra,
            }
            for r in report.rows
        ],
        "exponent": report.exponent,
        "intercept": report.intercept,
        "residual_rms": report.residual_rms,
        "seed": report.seed,
        "config_hash": report.config_hash,
        "code_version": report.code_version,
        "partial": report.partial,
        "extra": report.extra,
    }


def report_from_mapping(data: dict) -> ScalingReport:
    rows = [
        ReportRow(
            experiment=r["experiment"],
            lam=float(r["lambda"]),
            m=int(r["m"]),
            n=int(r["n"]),
            estimate=float(r["estimate"]),
            std_error=float(r["std_error"]),
            seed=int(r["seed"]),
            extra=r.get("extra", {}),
        )
        for r in data["rows"]
    ]
    return ScalingReport(
        experiment=data["experiment"],
        rows=rows,
        exponent=float(data["exponent"]),
        intercept=float(data["intercept"]),
        residual_rms=float(data["residual_rms"]),
        seed=int(data["seed"]),
        config_hash=data["config_hash"],
        code_version=data["code_version"],
        partial=bool(data.get("partial", False)),
        extra=data.get("extra", {}),
    )


def write_json(report: ScalingReport, path: str | Path) -> Path:
    # json emits floats via repr, the shortest string that parses back to
    # the identical double, so numeric fields survive round trips exactly.
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(report_to_mapping(report), fh, indent=2, allow_nan=True)
            fh.write("\n")
    except OSError as e:
        raise ConfigurationError(f"cannot write JSON to {path}: {e}") from e
    return path


def read_json(path: str | Path) -> ScalingReport:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"report file not found: {path}")
    with open(path) as fh:
        return report_from_mapping(json.load(fh))


def read_csv_rows(path: str | Path) -> tuple[list[dict], float]:
    """Rows and the footer exponent from a report CSV."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"CSV file not found: {path}")
    rows: list[dict] = []
    exponent = float("nan")
    with open(path, newline="") as fh:
        for record in fh:
            record = record.rstrip("\n")
            if record.startswith("# exponent ="):
                exponent = float(record.split("=", 1)[1])
                continue
            if not record or record.startswith(CSV_COLUMNS[0] + ","):
                continue
            parts = next(csv.reader([record]))
            rows.append(
                {
                    "experiment": parts[0],
                    "lambda": float(parts[1]),
                    "m": int(parts[2]),
                    "n": int(parts[3]),
                    "estimate": float(parts[4]),
                    "std_error": float(parts[5]),
                    "exponent": float(parts[6]),
                    "seed": int(parts[7]),
                }
            )
    return rows, exponent


def write_figure(report: ScalingReport, path: str | Path) -> Path:
    """Log-log scatter of the estimates with the fitted power law."""
    path = Path(path)
    xs = [r.lam for r in report.rows if r.lam > 0 and r.estimate > 0]
    ys = [r.estimate for r in report.rows if r.lam > 0 and r.estimate > 0]
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    if xs:
        ax.loglog(xs, ys, "o", color="#1f5fa0", label="estimate")
        if math.isfinite(report.exponent) and len(xs) >= 2:
            gx = np.geomspace(min(xs), max(xs), 64)
            ax.loglog(
                gx,
                math.exp(report.intercept) * gx**report.exponent,
                "-",
                color="#c44e52",
                label=f"fit, slope {report.exponent:.3g}",
            )
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("level")
    ax.set_ylabel("estimate")
    ax.set_title(report.experiment)
    fig.tight_layout()
    metadata = {"Date": None} if path.suffix.lower() == ".svg" else {}
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, metadata=metadata)
    except OSError as e:
        raise ConfigurationError(f"cannot write figure to {path}: {e}") from e
    finally:
        plt.close(fig)
    return path


def emit_report(report: ScalingReport, out_dir: str | Path, formats=("csv", "json", "svg"), stem: str | None = None) -> list[Path]:
    """Write the report in the requested formats; returns the paths."""
    out_dir = Path(out_dir)
    stem = stem or report.experiment
    written = []
    for fmt in formats:
        if fmt == "csv":
            written.append(write_csv(report, out_dir / f"{stem}.csv"))
        elif fmt == "json":
            written.append(write_json(report, out_dir / f"{stem}.json"))
        elif fmt == "svg":
            written.append(write_figure(report, out_dir / f"{stem}.svg"))
        else:
            raise ConfigurationError(f"unknown report format {fmt!r}")
    return written
