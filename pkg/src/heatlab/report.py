"""Figure rendering for CLI outputs.

Each renderer takes the same data that goes into the delimited output and
writes a PNG next to it.  All figures use the Agg backend so the CLI works
headless.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_sweep_figure", "render_trace_figure", "render_probe_figure"]


def _finite(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys)
             if y is not None and isinstance(y, (int, float))
             and math.isfinite(y)]
    if not pairs:
        return [], []
    return [p[0] for p in pairs], [p[1] for p in pairs]


def render_sweep_figure(rows: Sequence[dict], rho_star: Optional[float],
                        path: Path) -> Path:
    """Two-panel summary of a rho sweep: decay constants and probe values.

    rows carry keys rho, verdict, C_meas, Phi_max (values may be None).
    """
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.5), sharex=True)
    rhos = [row["rho"] for row in rows]

    x, y = _finite(rhos, [row.get("C_meas") for row in rows])
    ax1.plot(x, y, "o-", color="tab:blue")
    ax1.set_xlabel(r"$\rho$")
    ax1.set_ylabel(r"measured decay constant $C$")
    ax1.set_title("existence side")

    x, y = _finite(rhos, [row.get("Phi_max") for row in rows])
    ax2.plot(x, y, "s-", color="tab:red")
    ax2.axhline(1.0, color="k", lw=0.8, ls=":")
    ax2.set_yscale("log")
    ax2.set_xlabel(r"$\rho$")
    ax2.set_ylabel(r"max $\Phi(\tau)$")
    ax2.set_title("non-existence probe")

    for ax in (ax1, ax2):
        if rho_star is not None and math.isfinite(rho_star):
            ax.axvline(rho_star, color="gray", ls="--", lw=1.0,
                       label=r"$\rho_*$")
            ax.legend(loc="best", fontsize=8)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_trace_figure(times: Sequence[float], sup_norms: Sequence[float],
                        weighted_sup: Sequence[float], path: Path,
                        rho_over_2r: Optional[float] = None) -> Path:
    """Log-log decay plot of a solve trace with the weighted sup alongside."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    x, y = _finite(times, sup_norms)
    ax.loglog(x, y, "o-", color="tab:blue", label=r"$\|u(t)\|_\infty$")
    x, y = _finite(times, weighted_sup)
    ax.loglog(x, y, "s-", color="tab:green",
              label=r"$t^{\rho/2r}\,\|u(t)\|_\infty$")
    if rho_over_2r is not None and len(times) >= 2:
        t0, t1 = times[0], times[-1]
        s0 = sup_norms[0]
        ax.loglog([t0, t1], [s0, s0 * (t1 / t0) ** (-rho_over_2r)],
                  "k:", lw=0.9, label=r"slope $-\rho/2r$")
    ax.set_xlabel("t")
    ax.grid(alpha=0.3, which="both")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_probe_figure(taus: Sequence[float], phis: Sequence[float],
                        path: Path) -> Path:
    """Blow-up probe value against the horizon, with the certification line."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    x, y = _finite(taus, phis)
    ax.loglog(x, y, "o-", color="tab:red", label=r"$\Phi(\tau)$")
    ax.axhline(1.0, color="k", lw=0.8, ls=":", label="certification level")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\Phi$")
    ax.grid(alpha=0.3, which="both")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
