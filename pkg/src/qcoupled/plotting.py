"""Static figures rendered from the same tables the CLI writes."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed metadata keeps SVG output byte-identical across runs
_SAVE_KW = {"svg": {"metadata": {"Date": None}}, "png": {"metadata": {"Software": None}}, "pdf": {"metadata": {"CreationDate": None}}}
matplotlib.rcParams["svg.hashsalt"] = "qcoupled"


def _save(fig, path: Path) -> Path:
    kw = _SAVE_KW.get(path.suffix.lstrip("."), {})
    fig.savefig(path, bbox_inches="tight", **kw)
    plt.close(fig)
    return path


def plot_truncation(rows, path: Path, pade_rows=None) -> Path:
    """E(X2) against w, one line per truncation order."""
    fig, ax = plt.subplots(figsize=(6, 4))
    data = np.asarray(rows, float)
    for M in np.unique(data[:, 1]):
        sel = data[:, 1] == M
        ax.plot(data[sel, 0], data[sel, 2], label=f"M = {int(M)}")
    if pade_rows:
        p = np.asarray([r[:2] for r in pade_rows], float)
        ax.plot(p[:, 0], p[:, 1], "k--", label="Padé")
    ax.set_xlabel("w")
    ax.set_ylabel("E(X2)")
    ax.legend()
    return _save(fig, path)


def plot_explicit_vs_psa(rows, path: Path) -> Path:
    """Mean queue length against the arrival rate for each method."""
    data = np.asarray(rows, float)
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = ["explicit", "PSA M = 10", "PSA M = 20", "CTMC"]
    styles = ["-", "--", ":", "o"]
    for col, (lab, st) in enumerate(zip(labels, styles), start=1):
        ax.plot(data[:, 0], data[:, col], st, label=lab)
    ax.set_xlabel("arrival rate")
    ax.set_ylabel("E(X1)")
    ax.legend()
    return _save(fig, path)


def plot_curves(s, g, s_curve_s, path: Path) -> Path:
    """S1, S2 in the complex plane beside the zero curve s(y)."""
    fig, (a, b) = plt.subplots(1, 2, figsize=(9, 4))
    a.plot((g * s).real, (g * s).imag, label="S1")
    a.plot((g / s).real, (g / s).imag, label="S2")
    a.set_aspect("equal")
    a.set_title("kernel zero pairs")
    a.legend()
    b.plot(s_curve_s.real, s_curve_s.imag, ".-")
    b.set_aspect("equal")
    b.set_title("s(y), |y| = 1")
    return _save(fig, path)


def plot_means(ws, e1, e2, path: Path, ylabel: str = "mean level") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ws, e1, label="E(X1)")
    ax.plot(ws, e2, label="E(X2)")
    ax.set_xlabel("w")
    ax.set_ylabel(ylabel)
    ax.legend()
    return _save(fig, path)
