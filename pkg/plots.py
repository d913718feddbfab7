"""
Static SVG figures and the HTML index, rendered from a finished run's
table.csv. Nothing here touches the experiments.
"""

import csv
import logging
from dataclasses import dataclass
from itertools import groupby
from pathlib import Path
from typing import List, Optional, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from jinja2 import Environment, FileSystemLoader, select_autoescape  # noqa: E402

logger = logging.getLogger(__name__)

TEMPLATES_DIR = Path(__file__).resolve().parent / "templates"
# fixed ids and no timestamp keep the SVG bytes reproducible
SVG_RC = {"svg.hashsalt": "levy-passage", "svg.fonttype": "none"}


@dataclass(frozen=True)
class FigureSpec:
    y: Tuple[str, ...]
    x: Optional[str] = None  # None draws a bar chart labelled by `label`
    label: Tuple[str, ...] = ()
    group: Tuple[str, ...] = ()
    err: Optional[str] = None
    logx: bool = False
    logy: bool = False


FIGURES = {
    "limit_law": FigureSpec(y=("ks", "ks_threshold"), label=("comparison", "r")),
    "scaling_collapse": FigureSpec(x="lambda", y=("ks", "ks_threshold"), logx=True),
    "phase_diagram": FigureSpec(x="epsilon", y=("fraction",), group=("alpha", "kappa"), err="half_width", logx=True),
    "relative_stability": FigureSpec(x="r", y=("median", "iqr_over_median"), logx=True),
    "survival": FigureSpec(x="t", y=("survival",), logx=True),
    "tail_recovery": FigureSpec(x="k", y=("estimate",), logx=True),
    "walk_convergence": FigureSpec(x="n_steps", y=("ks", "ks_threshold"), logx=True, logy=True),
    "walk_limit_law": FigureSpec(x="r", y=("ks", "ks_threshold"), logx=True, logy=True),
    "sandwich": FigureSpec(y=("violations",), label=("alpha", "kappa", "r")),
}


def _number(text: str) -> float:
    if text in ("", "true", "false"):
        return {"": float("nan"), "true": 1.0, "false": 0.0}[text]
    return float(text)


def read_table(path) -> List[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _draw(ax, rows: List[dict], spec: FigureSpec) -> None:
    if spec.x is None:
        labels = [", ".join(f"{col}={row[col]}" for col in spec.label) for row in rows]
        width = 0.8 / len(spec.y)
        for j, col in enumerate(spec.y):
            positions = [i + j * width for i in range(len(rows))]
            ax.bar(positions, [_number(row[col]) for row in rows], width=width, label=col)
        ax.set_xticks([i + 0.4 - width / 2 for i in range(len(rows))])
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
        ax.legend()
        return

    def key(row):
        return tuple(row[col] for col in spec.group)

    for group, members in groupby(sorted(rows, key=key), key=key):
        members = sorted(members, key=lambda row: _number(row[spec.x]))
        xs = [_number(row[spec.x]) for row in members]
        prefix = ", ".join(f"{col}={val}" for col, val in zip(spec.group, group))
        for col in spec.y:
            ys = [_number(row[col]) for row in members]
            label = f"{prefix} {col}".strip()
            if spec.err:
                ax.errorbar(xs, ys, yerr=[_number(row[spec.err]) for row in members],
                            marker="o", markersize=3, capsize=2, label=label)
            else:
                ax.plot(xs, ys, marker="o", markersize=3, label=label)
    ax.set_xlabel(spec.x)
    if spec.logx:
        ax.set_xscale("log")
    if spec.logy:
        ax.set_yscale("log")
    ax.legend(fontsize=7)


def render_figures(output_dir, experiment: str) -> List[Path]:
    output_dir = Path(output_dir)
    spec = FIGURES[experiment]
    rows = read_table(output_dir / "table.csv")
    target = output_dir / f"{experiment}.svg"
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        _draw(ax, rows, spec)
        ax.set_title(experiment.replace("_", " "))
        fig.tight_layout()
        fig.savefig(target, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info("wrote %s", target)
    return [target]


def render_index(output_dir, manifest: dict, figures: List[Path]) -> Path:
    env = Environment(loader=FileSystemLoader(TEMPLATES_DIR), autoescape=select_autoescape(["html"]))
    template = env.get_template("report.html")
    output_dir = Path(output_dir)
    summary = manifest.get("summary", {})
    html = template.render(
        manifest=manifest,
        summary=sorted(summary.items()),
        rows=read_table(output_dir / "table.csv"),
        figures=[fig.name for fig in figures],
    )
    target = output_dir / "index.html"
    target.write_text(html)
    return target
