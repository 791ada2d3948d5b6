"""Static figure emission for recorded traces.

Three figures per run, mirroring the usual presentation of this control
problem: torque tracking, applied rotor voltages, and stator currents.
Rendering is headless (Agg) and writes whatever format the path's
extension selects; the report pipeline asks for SVG. Long traces are
thinned to a fixed point budget before drawing — a pure display concern,
metrics never see the thinned arrays.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .engine import SimTrace

MAX_POINTS_PER_LINE = 4000


def _thin(trace: SimTrace) -> np.ndarray:
    n = trace.n_rows
    if n <= MAX_POINTS_PER_LINE:
        return np.arange(n)
    idx = np.linspace(0, n - 1, MAX_POINTS_PER_LINE).astype(int)
    idx[-1] = n - 1  # keep the true endpoint
    return idx


def save_torque_plot(trace: SimTrace, path, title: str | None = None) -> None:
    """Electromagnetic torque against its reference."""
    idx = _thin(trace)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(trace.t[idx], trace.te[idx], label="T_e", lw=1.0)
    ax.plot(trace.t[idx], trace.te_ref[idx], label="T_e ref", lw=1.0,
            ls="--", color="k")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("torque [N m]")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_control_plot(trace: SimTrace, path, title: str | None = None) -> None:
    """Applied rotor voltages on both channels."""
    idx = _thin(trace)
    fig, axes = plt.subplots(2, 1, figsize=(8, 5.5), sharex=True)
    axes[0].plot(trace.t[idx], trace.u_d[idx], lw=0.8)
    axes[0].set_ylabel("u_d [V]")
    axes[1].plot(trace.t[idx], trace.u_q[idx], lw=0.8, color="tab:orange")
    axes[1].set_ylabel("u_q [V]")
    axes[1].set_xlabel("t [s]")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def save_currents_plot(trace: SimTrace, path, title: str | None = None) -> None:
    """Stator current components."""
    idx = _thin(trace)
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(trace.t[idx], trace.i_ds[idx], label="i_ds", lw=1.0)
    ax.plot(trace.t[idx], trace.i_qs[idx], label="i_qs", lw=1.0)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("current [A]")
    ax.legend(loc="best")
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
