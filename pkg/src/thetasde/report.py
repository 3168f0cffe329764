"""File outputs: CSV series, JSON manifests and rendered figures.

Every data file starts with a ``# config: {...}`` line carrying the
resolved run configuration, so any output can be re-produced from the
file alone.  Floats are written with shortest round-trip formatting to
keep reruns byte-identical.
"""

from __future__ import annotations

import json
import math

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _fmt(value) -> str:
    return repr(float(value))


def config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True)


def write_csv(path, header, columns, config=None):
    """Write aligned columns; the optional config is embedded as a comment."""
    rows = len(columns[0])
    lines = []
    if config is not None:
        lines.append(config_line(config))
    lines.append(",".join(header))
    for i in range(rows):
        lines.append(",".join(_fmt(col[i]) for col in columns))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_embedded_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().strip()
    prefix = "# config: "
    if not first.startswith(prefix):
        raise ValueError(f"{path} carries no embedded config line")
    return json.loads(first[len(prefix):])


def write_msd_csv(path, result, config=None):
    """Columns t, msd, log_msd, theoretical_bound for one ensemble."""
    t = result.times
    msd = result.msd
    logd = np.where(msd > 0.0, np.log(np.where(msd > 0.0, msd, 1.0)),
                    -math.inf)
    rate = result.theoretical_exponent
    if math.isfinite(rate):
        bound = result.msd[0] * np.exp(rate * t)
    else:
        bound = np.full_like(t, math.nan)
    write_csv(path, ["t", "msd", "log_msd", "theoretical_bound"],
              [t, msd, logd, bound], config=config)


def write_trajectory_csv(path, trajectories, config=None):
    """Columns t, then one block of state components per trajectory."""
    if not isinstance(trajectories, (list, tuple)):
        trajectories = [trajectories]
    header = ["t"]
    columns = [trajectories[0].times]
    labels = ("x", "y", "z")
    for which, traj in enumerate(trajectories):
        tag = labels[which] if which < len(labels) else f"s{which}"
        n = traj.states.shape[1]
        for comp in range(n):
            header.append(f"{tag}{comp + 1}" if n > 1 else tag)
            columns.append(traj.states[:, comp])
    write_csv(path, header, columns, config=config)


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(path, payload: dict):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(_sanitize(payload), indent=2, sort_keys=True)
                 + "\n")


def render_decay_figure(path, table, title=""):
    """Log-scale D_n curves per stepsize with dashed closed-form bounds."""
    fig, ax = plt.subplots(figsize=(7.2, 4.6))
    for row in table.rows:
        if row.result is None:
            continue
        res = row.result
        msd = np.where(res.msd > 0.0, res.msd, np.nan)
        label = f"dt={row.dt:g}"
        if math.isfinite(res.fitted_slope):
            label += f" (slope {res.fitted_slope:.3g})"
        line, = ax.semilogy(res.times, msd, marker=".", label=label)
        if math.isfinite(row.exponent):
            bound = res.msd[0] * np.exp(row.exponent * res.times)
            ax.semilogy(res.times, bound, linestyle="--", alpha=0.6,
                        color=line.get_color())
    ax.set_xlabel("t")
    ax.set_ylabel("mean-square deviation")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_stability_figure(path, u, v, factor, title=""):
    """Shade the mean-square stable part of the (dt*lam, dt*mu^2) plane."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    stable = (factor < 1.0).astype(float)
    ax.pcolormesh(u, v, stable, cmap="Greys", vmin=0.0, vmax=1.5,
                  shading="auto")
    ax.contour(u, v, factor, levels=[1.0], colors="k", linewidths=1.0)
    ax.set_xlabel("dt * lam")
    ax.set_ylabel("dt * mu^2")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
