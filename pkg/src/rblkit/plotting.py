"""Figure rendering for sweep results: RMSE vs. range error, one line per series."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .errors import ConfigError
from .harness import ResultRow

__all__ = ["render_rmse_figure"]

# fixed hash salt keeps SVG clip-path ids, and therefore output bytes, stable
matplotlib.rcParams["svg.hashsalt"] = "rblkit"


def render_rmse_figure(
    rows: list[ResultRow],
    out_path: str,
    metric: str = "t",
    logy: bool = True,
) -> None:
    """Render RMSE-vs-sigma curves, one series per (method, completeness).

    ``metric`` selects the translation RMSE ("t") or the unit-vector pose
    RMSE ("pose"); rows lacking the requested metric are skipped.  Raises
    :class:`ConfigError` when nothing is plottable.
    """
    if metric not in ("t", "pose"):
        raise ConfigError(f"unknown metric {metric!r}; expected 't' or 'pose'")
    series: dict[tuple[str, float], list[tuple[float, float]]] = {}
    for r in rows:
        value = r.rmse_t if metric == "t" else r.rmse_pose
        if value is None:
            continue
        series.setdefault((r.method, r.completeness), []).append((r.sigma, value))
    if not series:
        raise ConfigError(f"no rows carry the {metric!r} metric")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for (method, completeness), points in sorted(series.items()):
        points.sort()
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        label = method if completeness >= 1.0 else f"{method} ({completeness:.0%})"
        ax.plot(xs, ys, marker="o", label=label)
    ax.set_xlabel("range error sigma [m]")
    ax.set_ylabel("translation RMSE [m]" if metric == "t" else "pose RMSE")
    if logy:
        ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, metadata=_metadata_for(str(out_path)))
    plt.close(fig)


def _metadata_for(path: str) -> dict | None:
    # strip creation dates so rerenders are byte-identical
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".png"):
        return {"Software": None}
    return None
