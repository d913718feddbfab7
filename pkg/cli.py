"""
levy-passage: batch front end for the passage-time experiments.

    levy-passage run --config <path> --out <dir> [--workers N] [--plots]
    levy-passage classify --alpha A --kappa K
    levy-passage history --out <dir>
    levy-passage version

No environment variable is read; everything comes from flags and the
config document.
"""

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ValidationError
from sqlalchemy.exc import SQLAlchemyError

from database import get_db
from errors import ConfigError, LevyPassageError, NumericalError, ParameterError, StructuralError
from mc import MAIN_GROUP, ExperimentReport, check_regime, run_experiment
from models import RunRecord, utcnow
from passage import ExitRecord, Side
from schemas import experiment_config_adapter
from theory import classify_regime

logger = logging.getLogger("levy-passage")

VERSION = "1.0.0"

# ============ Exit codes ============
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

EXIT_CODES = (
    (NumericalError, EXIT_NUMERICAL),
    (ConfigError, EXIT_CONFIG),
    (ParameterError, EXIT_CONFIG),  # RegimeError included
    (StructuralError, EXIT_CONFIG),
    (OSError, EXIT_IO),
    (SQLAlchemyError, EXIT_IO),
)

EXIT_RECORD_COLUMNS = ("rep_id", "exit_time", "exit_position", "overshoot", "side", "censored")


def exit_code_for(exc: BaseException) -> Optional[int]:
    for kind, code in EXIT_CODES:
        if isinstance(exc, kind):
            return code
    return None


# ============ Config ============
def parse_config(text: str):
    """Validate a YAML config document; defaults filled, unknown keys rejected"""
    try:
        document = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        location = f"line {mark.line + 1}, column {mark.column + 1}" if mark else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"malformed document: {problem}", location=location) from exc
    if not isinstance(document, dict):
        raise ConfigError("the config document must be a mapping")
    if "experiment_name" not in document:
        raise ConfigError("missing field", location="experiment_name")

    try:
        config = experiment_config_adapter.validate_python(document)
    except ValidationError as exc:
        messages = []
        for err in exc.errors():
            # drop the union tag pydantic puts in front of the field path
            loc = [str(p) for p in err["loc"]]
            if loc and loc[0] == document.get("experiment_name"):
                loc = loc[1:]
            messages.append(f"{'.'.join(loc) or '<document>'}: {err['msg']}")
        raise ConfigError("; ".join(messages)) from exc

    check_regime(config)
    return config


def load_config(path):
    return parse_config(Path(path).read_text())


def canonical_config(config) -> str:
    return json.dumps(config.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


# ============ Formatting ============
def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


# ============ Exit records ============
def write_exit_records(path, records: List[ExitRecord]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(EXIT_RECORD_COLUMNS)
        for rep, rec in enumerate(records):
            writer.writerow([
                rep,
                format_value(rec.exit_time),
                format_value(rec.exit_position),
                format_value(rec.overshoot),
                rec.side.value if rec.side is not None else "",
                format_value(rec.censored),
            ])


def read_exit_records(path, horizon: Optional[float] = None) -> List[Tuple[int, ExitRecord]]:
    """Parse an exit-record CSV back into (rep_id, ExitRecord) pairs.

    The file does not carry the horizon. Pass it in (load_exit_records takes
    it from the run manifest); otherwise censored rows sit at it, and without
    any censored row the latest exit time stands in for it.
    """
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != EXIT_RECORD_COLUMNS:
            raise StructuralError(f"unexpected exit-record columns in {path}: {reader.fieldnames}")
        rows = list(reader)

    if horizon is None:
        censored_times = [float(row["exit_time"]) for row in rows if row["censored"] == "true"]
        all_times = [float(row["exit_time"]) for row in rows]
        horizon = censored_times[0] if censored_times else max(all_times, default=1.0)

    out = []
    for row in rows:
        censored = row["censored"] == "true"
        out.append((
            int(row["rep_id"]),
            ExitRecord(
                exit_time=float(row["exit_time"]),
                exit_position=float(row["exit_position"]),
                overshoot=float(row["overshoot"]),
                side=Side(row["side"]) if row["side"] else None,
                censored=censored,
                horizon=horizon,
            ),
        ))
    return out


def write_table(path, rows: List[dict]) -> None:
    columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(col)) for col in columns])


def write_jsonl(path, rows: List[dict]) -> None:
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(_json_safe(row), sort_keys=True) + "\n")


# ============ Run ============
class RunManifest(BaseModel):
    experiment: str
    version: str
    seed: int
    config: dict
    config_hash: str
    started_at: str
    finished_at: str
    output_dir: str
    outputs: Dict[str, str]  # artifact name -> file name inside output_dir
    censoring: Dict[str, int]  # record group -> censored replications
    horizons: Dict[str, float] = {}  # record group -> horizon of its exit records
    summary: dict


def load_exit_records(output_dir, group: str = MAIN_GROUP) -> List[Tuple[int, ExitRecord]]:
    """Exit records of one group from a finished run, horizon taken from manifest.json"""
    output_dir = Path(output_dir)
    manifest = RunManifest.model_validate_json((output_dir / "manifest.json").read_text())
    name = manifest.outputs.get(f"exits:{group}")
    if name is None:
        raise StructuralError(f"run in {output_dir} has no exit records for group {group!r}")
    return read_exit_records(output_dir / name, horizon=manifest.horizons.get(group))


def _exit_filename(report: ExperimentReport, group: str) -> str:
    if list(report.records) == [MAIN_GROUP]:
        return "exits.csv"
    return f"exits_{group}.csv"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(config, output_dir=None, workers: int = 1, plots: bool = False) -> RunManifest:
    output_dir = Path(output_dir or config.output_path or "results")
    output_dir.mkdir(parents=True, exist_ok=True)
    echo = canonical_config(config)
    config_hash = hashlib.sha256(echo.encode()).hexdigest()
    started_at = _now()

    with get_db(output_dir) as db:
        entry = RunRecord(
            experiment=config.experiment_name,
            seed=str(config.seed),
            config_hash=config_hash,
            version=VERSION,
            status="running",
            output_dir=str(output_dir.resolve()),
        )
        db.add(entry)
        db.commit()

        try:
            report = run_experiment(config, workers=workers)
            outputs = {"config": "config.json", "table": "table.csv", "report": "report.jsonl",
                       "summary": "summary.json"}
            (output_dir / "config.json").write_text(echo)
            write_table(output_dir / "table.csv", report.rows)
            write_jsonl(output_dir / "report.jsonl", report.rows)
            (output_dir / "summary.json").write_text(
                json.dumps(_json_safe(report.summary), sort_keys=True, indent=2) + "\n"
            )
            for group, records in report.records.items():
                name = _exit_filename(report, group)
                write_exit_records(output_dir / name, records)
                outputs[f"exits:{group}"] = name

            figures = []
            if plots:
                from plots import render_figures

                figures = render_figures(output_dir, report.experiment)
                outputs.update({f"figure:{fig.stem}": fig.name for fig in figures})
                outputs["index"] = "index.html"
            outputs["manifest"] = "manifest.json"

            manifest = RunManifest(
                experiment=report.experiment,
                version=VERSION,
                seed=config.seed,
                config=json.loads(echo),
                config_hash=config_hash,
                started_at=started_at,
                finished_at=_now(),
                output_dir=str(output_dir),
                outputs=outputs,
                censoring={group: sum(r.censored for r in recs) for group, recs in report.records.items()},
                horizons={group: recs[0].horizon for group, recs in report.records.items() if recs},
                summary=_json_safe(report.summary),
            )
            if plots:
                from plots import render_index

                render_index(output_dir, manifest.model_dump(), figures)
            (output_dir / "manifest.json").write_text(manifest.model_dump_json(indent=2) + "\n")
        except Exception as exc:
            entry.status = "failed"
            entry.exit_code = exit_code_for(exc)
            entry.finished_at = utcnow()
            db.commit()
            raise

        entry.status = "completed"
        entry.exit_code = EXIT_OK
        entry.finished_at = utcnow()
        db.commit()

    logger.info("run %s finished, outputs in %s", config.experiment_name, output_dir)
    return manifest


def history(output_dir) -> List[dict]:
    if not (Path(output_dir) / "runs.db").exists():
        return []
    with get_db(output_dir) as db:
        entries = db.query(RunRecord).order_by(RunRecord.id.desc()).all()
        return [entry.as_row() for entry in entries]


# ============ Entry point ============
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levy-passage", description="Passage times of stable processes and Levy flights")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Run one experiment from a YAML config")
    p_run.add_argument("--config", required=True, help="Path to the YAML config")
    p_run.add_argument("--out", default=None, help="Output directory (default: output_path from the config, else ./results)")
    p_run.add_argument("--workers", type=int, default=1, help="Worker processes for the replications")
    p_run.add_argument("--plots", action="store_true", help="Also write SVG figures and index.html")
    p_run.add_argument("--verbose", action="store_true", help="Debug logging")

    p_classify = sub.add_parser("classify", help="Print the regime report for (alpha, kappa)")
    p_classify.add_argument("--alpha", type=float, required=True)
    p_classify.add_argument("--kappa", type=float, required=True)

    p_history = sub.add_parser("history", help="List runs recorded in an output directory")
    p_history.add_argument("--out", required=True)

    sub.add_parser("version", help="Print the version")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format="[%(name)s] %(message)s",
    )

    try:
        if args.command == "version":
            print(VERSION)
        elif args.command == "classify":
            print(json.dumps(classify_regime(args.alpha, args.kappa).as_record(), sort_keys=True))
        elif args.command == "history":
            for row in history(args.out):
                print(json.dumps(row, sort_keys=True))
        else:
            if args.workers < 1:
                raise ConfigError("must be >= 1", location="--workers")
            config = load_config(args.config)
            manifest = run(config, args.out, workers=args.workers, plots=args.plots)
            print(Path(manifest.output_dir) / "manifest.json")
    except (LevyPassageError, OSError, SQLAlchemyError) as exc:
        code = exit_code_for(exc)
        if code is None:
            raise
        logger.error("%s: %s", type(exc).__name__, exc)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
