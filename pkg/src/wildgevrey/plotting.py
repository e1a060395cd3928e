"""Report figures.  Uses the non-interactive Agg backend."""
from __future__ import annotations

import json

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path, meta: dict | None):
    md = {"Software": None}
    if meta:
        md["Description"] = json.dumps(meta, sort_keys=True)
    fig.savefig(path, dpi=110, metadata=md)
    plt.close(fig)
    return path


def plot_snapshots(states, path, meta=None, title="Fourier profiles"):
    fig, (ax, axl) = plt.subplots(1, 2, figsize=(10, 4))
    for st in states:
        r = st.grid.nodes
        ax.plot(r, st.values, label=f"t = {st.time_label:g}")
        a = np.abs(st.values)
        axl.semilogy(r[a > 0], a[a > 0])
    ax.set_xlabel("|xi|")
    ax.set_ylabel("f(|xi|, t)")
    ax.legend(fontsize="small")
    axl.set_xlabel("|xi|")
    axl.set_ylabel("|f(|xi|, t)|")
    fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path, meta)


def plot_certificate(states, envelope, path, meta=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    for st in states:
        r = st.grid.nodes
        a = np.abs(st.values)
        keep = a > 0
        ax.plot(r[keep], np.exp(np.log(a[keep]) + envelope.H(r[keep])), label=f"t = {st.time_label:g}")
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.axvline(envelope.R0, color="grey", lw=0.8, ls=":")
    ax.set_xlabel("|xi|")
    ax.set_ylabel("|f| exp(H)")
    ax.set_title("weighted profiles against the envelope")
    ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path, meta)


def plot_convergence(levels, differences, path, meta=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    x = [f"{a:g}->{b:g}" for a, b in zip(levels, levels[1:])]
    d = np.maximum(np.asarray(differences, dtype=float), 1e-300)
    ax.semilogy(range(len(d)), d, "o-")
    ax.set_xticks(range(len(d)), x)
    ax.set_xlabel("cut-off levels")
    ax.set_ylabel("sup difference")
    ax.set_title("consecutive cut-off differences")
    fig.tight_layout()
    return _save(fig, path, meta)


def plot_kernel_table(rows, path, meta=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog([r["level"] for r in rows], [r["bstar"] for r in rows], "o-")
    ax.set_xlabel("cut-off level l")
    ax.set_ylabel("b*_l")
    ax.set_title("total cut-off kernel mass")
    fig.tight_layout()
    return _save(fig, path, meta)
