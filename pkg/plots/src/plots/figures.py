"""Line figures over sweep summaries.

Each figure plots one aggregate column against the sweep value, with one
series per strategy.  Input is the summary CSV written by the simulator;
nothing here imports the simulator itself, so the CSV schema is the whole
contract.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


class SchemaError(Exception):
    """The input CSV is missing columns or rows a figure needs."""


# figure id -> (summary column on the y axis, x label, y label)
FIGURES: dict[str, tuple[str, str, str]] = {
    "utilization_vs_n": (
        "utilization_mean",
        "fleet size (UAVs)",
        "mean compute utilization (fraction)",
    ),
    "energy_vs_complexity": (
        "total_energy_mean",
        "task complexity (cycles/bit)",
        "mean total energy (J)",
    ),
    "utility_vs_deadline": (
        "mean_participant_utility_mean",
        "deadline (ms)",
        "mean participant utility",
    ),
    "iterations_vs_n": (
        "iterations_mean",
        "fleet size (UAVs)",
        "mean stabilization iterations",
    ),
    "energy_vs_fidelity": (
        "actual_energy_mean",
        "twin frequency deviation (fraction)",
        "mean actual energy (J)",
    ),
}

# legend ordering for known strategies; anything else lands after, sorted
_STRATEGY_ORDER = ("coalition_game", "grand_coalition", "nash")

_STYLES = {
    "coalition_game": {"color": "tab:blue", "marker": "o"},
    "grand_coalition": {"color": "tab:orange", "marker": "s"},
    "nash": {"color": "tab:green", "marker": "^"},
}


@dataclass(frozen=True)
class FigureSpec:
    """One render request: which figure, from which CSV, to which image."""

    figure_id: str
    input_csv: str
    output_image: str


def load_summary(path: str) -> list[dict[str, str]]:
    """Read a summary CSV into dict rows, validating the basic shape."""
    try:
        with open(path, newline="") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                raise SchemaError(f"{path}: empty file, no header row")
            rows = list(reader)
    except OSError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    if not rows:
        raise SchemaError(f"{path}: header only, no data rows")
    return rows


def _require_columns(rows: list[dict[str, str]], columns: tuple[str, ...], path: str) -> None:
    present = rows[0].keys()
    for column in columns:
        if column not in present:
            raise SchemaError(f"{path}: missing required column '{column}'")


def _series(rows: list[dict[str, str]], y_column: str, path: str):
    """Group rows by strategy and sort each series by sweep value."""
    by_strategy: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        try:
            x = float(row["sweep_value"])
        except ValueError as exc:
            raise SchemaError(
                f"{path}: sweep_value {row['sweep_value']!r} is not numeric; "
                "figures need sweep output"
            ) from exc
        try:
            y = float(row[y_column])
        except ValueError as exc:
            raise SchemaError(f"{path}: column '{y_column}' has non-numeric value") from exc
        by_strategy.setdefault(row["strategy"], []).append((x, y))
    ordered = [s for s in _STRATEGY_ORDER if s in by_strategy]
    ordered += sorted(s for s in by_strategy if s not in _STRATEGY_ORDER)
    return [(s, sorted(by_strategy[s])) for s in ordered]


def render(spec: FigureSpec) -> str:
    """Render one figure to a PNG file and return its path.

    Output bytes are deterministic for identical input: the PNG metadata
    that normally records the renderer version is suppressed.
    """
    if spec.figure_id not in FIGURES:
        known = ", ".join(sorted(FIGURES))
        raise SchemaError(f"unknown figure id '{spec.figure_id}' (known: {known})")
    y_column, x_label, y_label = FIGURES[spec.figure_id]

    rows = load_summary(spec.input_csv)
    _require_columns(rows, ("strategy", "sweep_value", y_column), spec.input_csv)

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        for strategy, points in _series(rows, y_column, spec.input_csv):
            xs = [p[0] for p in points]
            ys = [p[1] for p in points]
            style = _STYLES.get(strategy, {"marker": "x"})
            ax.plot(xs, ys, label=strategy, **style)
        ax.set_xlabel(x_label)
        ax.set_ylabel(y_label)
        ax.set_title(spec.figure_id.replace("_", " "))
        ax.grid(True, alpha=0.4)
        ax.legend()
        fig.tight_layout()
        fig.savefig(spec.output_image, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.output_image
