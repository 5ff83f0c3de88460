"""
Tabular views of experiment results: plot-ready surface CSVs, the ranked
top-policy table, side-by-side agent comparison and per-batch summaries.
"""

import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from models.models import RunRecord, TopPolicy
from tools.gaussian_process import GPModel, surface
from tools.policy_space import CandidateSet

SURFACE_COLUMNS = ["a_itn", "a_irs", "post_mean", "post_sd", "log10_cda_mean"]
TOP_COLUMNS = ["Policy {itn%, irs%}", "C_DA", "DA", "C_int"]
BLOCK_SEPARATOR = "   |   "


def records_frame(records: Sequence[RunRecord]) -> pd.DataFrame:
    """One flat row per record; economics columns are NaN where absent."""
    rows = []
    for r in records:
        econ = r.econ
        rows.append(
            {
                "batch": r.batch,
                "proposal": r.proposal,
                "agent": r.agent,
                "status": r.status,
                "a_itn": r.policy.a_itn,
                "a_irs": r.policy.a_irs,
                "reward": r.reward if r.reward is not None else np.nan,
                "c_da_usd_per_daly": (
                    econ.c_da_usd_per_daly if econ and econ.c_da_usd_per_daly is not None else np.nan
                ),
                "dalys_averted": econ.dalys_averted if econ else np.nan,
                "c_int_usd": econ.c_int_usd if econ else np.nan,
                "penalized": bool(econ.penalized) if econ else False,
            }
        )
    return pd.DataFrame(rows)


def surface_frame(model: GPModel, grid: CandidateSet) -> pd.DataFrame:
    """
    Posterior surface plus log10 of the implied cost per DALY averted.

    log10_cda_mean is NaN where post_mean >= 0 (no implied benefit); the CSV
    writer leaves those cells empty.
    """
    df = surface(model, grid)
    mean = df["post_mean"].to_numpy()
    with np.errstate(divide="ignore", invalid="ignore"):
        df["log10_cda_mean"] = np.where(mean < 0, np.log10(-mean), np.nan)
    return df[SURFACE_COLUMNS]


def write_surface_csv(df: pd.DataFrame, path: Union[str, Path]) -> Path:
    """Write the surface; missing values become empty cells, which read_csv parses back as NaN."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df[SURFACE_COLUMNS].to_csv(path, index=False, float_format="%.10g", na_rep="", lineterminator="\n")
    return path


def sig3(value: Optional[float]) -> str:
    """Three significant figures with thousands separators: 514,000 / 46.1 / 0.512."""
    if value is None or not math.isfinite(value):
        return "n/a"
    if value == 0:
        return "0"
    rounded = float(f"{value:.3g}")
    if abs(rounded) >= 100:
        return f"{rounded:,.0f}"
    return f"{rounded:.3g}"


def _top_rows(tops: Sequence[TopPolicy]) -> List[List[str]]:
    def order(top: TopPolicy):
        c_da = top.nearest.econ.c_da_usd_per_daly if top.nearest.econ else None
        return (c_da is None, c_da if c_da is not None else 0.0, top.rank)

    rows = []
    for top in sorted(tops, key=order):
        econ = top.nearest.econ
        rows.append(
            [
                top.nearest.policy.label(),
                sig3(econ.c_da_usd_per_daly if econ else None),
                sig3(econ.dalys_averted if econ else None),
                sig3(econ.c_int_usd if econ else None),
            ]
        )
    return rows


def _fixed_width(header: Sequence[str], rows: Sequence[Sequence[str]]) -> List[str]:
    widths = [max([len(h)] + [len(row[i]) for row in rows]) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) if i else h.ljust(w) for i, (h, w) in enumerate(zip(header, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths))))
    return lines


def top_table(tops: Sequence[TopPolicy], title: Optional[str] = None) -> str:
    """Fixed-width table, ascending C_DA, values to three significant figures."""
    lines = _fixed_width(TOP_COLUMNS, _top_rows(tops))
    if title:
        lines.insert(0, title)
    return "\n".join(lines)


def reference_table(references: Dict[str, Dict[str, float]]) -> str:
    """Posterior at named reference policies: mean reward, sd and implied C_DA."""
    header = ["Reference", "Policy {itn%, irs%}", "post_mean", "post_sd", "C_DA (implied)"]
    rows = []
    for name, values in references.items():
        implied = -values["post_mean"] if values["post_mean"] < 0 else None
        rows.append(
            [name, values["label"], sig3(values["post_mean"]), sig3(values["post_sd"]), sig3(implied)]
        )
    return "\n".join(_fixed_width(header, rows))


def compare_blocks(blocks: Dict[str, Sequence[TopPolicy]]) -> str:
    """One top-policy block per agent, printed side by side."""
    rendered = [top_table(tops, title=agent).split("\n") for agent, tops in blocks.items()]
    if not rendered:
        return ""
    height = max(len(block) for block in rendered)
    widths = [max(len(line) for line in block) for block in rendered]
    lines = []
    for i in range(height):
        cells = [(block[i] if i < len(block) else "").ljust(w) for block, w in zip(rendered, widths)]
        lines.append(BLOCK_SEPARATOR.join(cells).rstrip())
    return "\n".join(lines)


def summarize_runs(records: Sequence[RunRecord]) -> pd.DataFrame:
    """
    Per-batch statistics: evaluated, failed, best reward in the batch and the
    running best-so-far (non-decreasing by construction).
    """
    df = records_frame(records)
    if df.empty:
        return pd.DataFrame(columns=["batch", "evaluated", "failed", "batch_best", "best_so_far"])
    grouped = df.groupby("batch", sort=True)
    summary = pd.DataFrame(
        {
            "evaluated": grouped.size(),
            "failed": grouped["status"].apply(lambda s: int((s != "ok").sum())),
            "batch_best": grouped["reward"].max(),
        }
    )
    summary["best_so_far"] = summary["batch_best"].cummax().ffill()
    return summary.reset_index()


def format_summary(summary: pd.DataFrame) -> str:
    return summary.to_string(
        index=False,
        formatters={"batch_best": sig3, "best_so_far": sig3},
    )
