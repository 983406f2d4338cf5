"""Render run metrics as figures.

Takes the JSON-lines records a run emits and writes PNGs next to the
delimited output: active vertices, change counts, and data bytes per
superstep, with activation-mode switches marked.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_metrics(records: list[dict], out_dir) -> list[str]:
    """Write one PNG per metric series; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    steps = [r for r in records if r.get("record") == "superstep"]
    summary = next((r for r in records if r.get("record") == "summary"), {})
    name = summary.get("algorithm", "run")
    if not steps:
        return []

    xs = [r["superstep"] for r in steps]
    all_mode = [r["superstep"] for r in steps if r["mode"] == "all"]
    created = []

    series = [
        ("active", "active vertices", f"{name}_active.png"),
        ("n_change", "changed vertices", f"{name}_changes.png"),
        ("bytes_data_delta", "data bytes sent", f"{name}_bytes.png"),
    ]
    for key, label, fname in series:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        ax.plot(xs, [r[key] for r in steps], marker="o", ms=3, lw=1.2)
        for x in all_mode:
            ax.axvline(x, color="0.85", lw=0.8, zorder=0)
        ax.set_xlabel("superstep")
        ax.set_ylabel(label)
        title = f"{name}: {label} per superstep"
        if summary.get("workers") is not None:
            title += f" (k={summary['workers']})"
        ax.set_title(title, fontsize=10)
        fig.tight_layout()
        path = out / fname
        fig.savefig(path, dpi=120)
        plt.close(fig)
        created.append(str(path))
    return created
