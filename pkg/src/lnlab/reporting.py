"""Result persistence: results.csv, summary.txt, extra tables, figures.

Outputs are deterministic for a fixed config and seed: rows are written in
insertion order with repr() float formatting and no timestamps, so re-runs
produce identical bytes.  Figures are rendered to PNG files next to the
delimited output.
"""

from __future__ import annotations

import csv
from dataclasses import fields as dataclass_fields
from pathlib import Path

from .config import ExperimentConfig
from .experiments import ExperimentResult

RESULTS_HEADER = ["experiment", "param_id", "metric", "value", "stderr", "seed"]


def write_results(result: ExperimentResult, outdir) -> Path:
    """Write results.csv, summary.txt, extra tables, and figures; idempotent.

    Returns the output directory.  I/O failures surface as OSError with the
    offending path in the message.
    """
    outdir = Path(outdir)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {outdir}: {exc}") from exc

    _write_csv(outdir / "results.csv", RESULTS_HEADER,
               [[row.experiment, row.param_id, row.metric, repr(row.value),
                 repr(row.stderr), str(row.seed)] for row in result.rows])

    for name, (header, rows) in result.tables.items():
        _write_csv(outdir / f"{name}.csv", header, rows)

    if result.dataset is not None:
        result.dataset.to_csv(outdir / "dataset.csv", metadata=result.dataset_meta)

    summary = _summary_text(result)
    _write_text(outdir / "summary.txt", summary)

    for name, fig in result.figures.items():
        path = outdir / f"{name}.png"
        try:
            fig.savefig(path, dpi=130, bbox_inches="tight")
        except OSError as exc:
            raise OSError(f"cannot write figure {path}: {exc}") from exc
    return outdir


def _write_csv(path: Path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow(row)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _summary_text(result: ExperimentResult) -> str:
    lines = [f"experiment: {result.experiment}", ""]
    if result.config is not None:
        lines.append("config:")
        for f in dataclass_fields(ExperimentConfig):
            lines.append(f"  {f.name} = {getattr(result.config, f.name)}")
        lines.append("")
    counts = {"holds": 0, "violated": 0, "inconclusive": 0}
    lines.append("verdicts:")
    for v in result.verdicts:
        counts[v.outcome] = counts.get(v.outcome, 0) + 1
        lines.append(f"  [{v.outcome.upper():12s}] {v.name}: "
                     f"{v.lhs_label}={v.lhs:.6g} vs {v.rhs_label}={v.rhs:.6g}"
                     + (f" ({v.detail})" if v.detail else ""))
    if not result.verdicts:
        lines.append("  (none)")
    lines.append("")
    lines.append(f"verdict counts: {counts['holds']} holds / "
                 f"{counts['violated']} violated / {counts['inconclusive']} inconclusive")
    lines.append(f"result rows: {len(result.rows)}")
    return "\n".join(lines) + "\n"
