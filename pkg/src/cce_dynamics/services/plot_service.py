"""
SVG line charts of trace CSVs.

Rendering uses the Agg backend with a fixed SVG hash salt and no date
metadata, so the same CSV bytes always produce the same SVG bytes.
"""
from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Dict, List, Tuple
import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from cce_dynamics.errors import InvalidInputError  # noqa: E402
from cce_dynamics.services.trace_export_service import read_trace_csv  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "cce-dynamics"


class PlotKind(str, Enum):
    REGRET = "regret"
    GAP = "gap"


# column -> legend label, per plot kind
_SERIES: Dict[PlotKind, List[Tuple[str, str]]] = {
    PlotKind.REGRET: [("reg_x", "Reg X"), ("reg_y", "Reg Y")],
    PlotKind.GAP: [("nash_gap", "NE gap (last iterate)"), ("cce_gap", "CCE gap")],
}
_TITLES = {PlotKind.REGRET: "Cumulative regret", PlotKind.GAP: "Equilibrium gaps"}


def render_svg(frame: pd.DataFrame, kind: PlotKind, out: Path) -> Path:
    """Draw the series of `kind` against t and write them to `out` as SVG."""
    kind = PlotKind(kind)
    required = ["t"] + [column for column, _ in _SERIES[kind]]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise InvalidInputError(f"trace CSV lacks columns for a {kind.value} plot: {', '.join(missing)}")
    if frame.empty:
        raise InvalidInputError("trace CSV has no rows to plot")

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        for column, label in _SERIES[kind]:
            ax.plot(frame["t"], frame[column], label=label, linewidth=1.2)
        ax.axhline(0.0, color="0.6", linewidth=0.8)
        ax.set_xlabel("t")
        ax.set_ylabel(kind.value)
        ax.set_title(_TITLES[kind])
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.savefig(out, format="svg", bbox_inches="tight", metadata={"Date": None})
        plt.close(fig)
    logger.info("Wrote %s plot to %s", kind.value, out)
    return out


def plot_trace_csv(trace_csv: Path, kind: PlotKind, out: Path) -> Path:
    """Read a trace CSV and render it; nothing is written if the CSV is unusable."""
    return render_svg(read_trace_csv(trace_csv), kind, out)
