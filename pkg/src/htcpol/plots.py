"""Figure rendering for the CLI report paths (written next to the CSV output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .eigen import EigenSystem
from .spectra import SpectralSeries


def figure_eigen_levels(eig: EigenSystem, path: str) -> None:
    """Level diagram: photon and dipole strengths vs eigenfrequency, labels annotated."""
    omega = eig.omega / eig.params.vib_freq
    total_mu = eig.params.n_molecules * eig.params.dipole_unit**2
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    ax1.vlines(omega, 0, eig.aG**2, color="tab:blue", lw=1.2)
    ax1.set_ylabel(r"$|\langle G|\hat a|j\rangle|^2$")
    ax2.vlines(omega, 0, eig.mu_G**2 / total_mu, color="tab:red", lw=1.2)
    ax2.set_ylabel(r"$|\mu_{jG}|^2 / N\mu^2$")
    ax2.set_xlabel(r"$\omega_j/\omega_v$")
    if eig.labels is not None:
        seen = set()
        for j, lab in enumerate(eig.labels):
            if lab in ("LP", "UP", "X", "Xb", "Y") and lab not in seen:
                seen.add(lab)
                ax1.annotate(lab, (omega[j], eig.aG[j] ** 2), fontsize=9, ha="center")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_spectra(
    absorption: SpectralSeries,
    bound: SpectralSeries,
    lpl_by_channel: dict[int, SpectralSeries],
    path: str,
) -> None:
    """Two-panel view: absorption channels on top, photoluminescence below."""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
    peak = absorption.values.max() if absorption.values.max() > 0 else 1.0
    ax1.plot(absorption.grid, absorption.values / peak, "k--", label="absorption")
    ax1.plot(bound.grid, bound.values, "k-", label="bound absorption")
    if bound.sticks:
        for s in bound.sticks:
            ax1.vlines(s.omega, 0, s.strength / max(x.strength for x in bound.sticks), color="0.6", lw=0.8)
    ax1.set_ylabel("absorption (norm.)")
    ax1.legend(loc="upper left", fontsize=8)
    styles = ["--", "-", "-."]
    for n, (cap, series) in enumerate(sorted(lpl_by_channel.items())):
        peak = max(x.values.max() for x in lpl_by_channel.values())
        ax2.plot(series.grid, series.values / (peak if peak > 0 else 1.0),
                 styles[n % len(styles)], label=rf"$\nu \leq {cap}$")
    ax2.set_ylabel("LPL (norm.)")
    ax2.set_xlabel(r"$\omega/\omega_v$")
    ax2.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_critical_sweep(rows: list[dict], path: str) -> None:
    """Collective critical coupling vs ensemble size, one line per Huang-Rhys value."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by_lambda: dict[float, list[tuple[int, float]]] = {}
    for row in rows:
        if row.get("status") == "ok":
            by_lambda.setdefault(row["huang_rhys"], []).append(
                (row["n_molecules"], row["rabi_collective"])
            )
    for lam_sq, pts in sorted(by_lambda.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=rf"$\lambda^2={lam_sq}$")
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\sqrt{N}\,\Omega_c/\omega_v$")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def figure_ilp(family: dict[int, SpectralSeries], path: str) -> None:
    """I_LP vs pump center frequency for each ground-manifold truncation."""
    fig, ax = plt.subplots(figsize=(6, 4))
    styles = ["--", "-", "-.", ":"]
    for n, (cap, series) in enumerate(sorted(family.items())):
        ax.plot(series.grid, series.values, styles[n % len(styles)], label=rf"$\nu_{{max}}={cap}$")
    omega_lp = next(iter(family.values())).meta.get("omega_lp")
    if omega_lp is not None:
        ax.axvline(omega_lp, color="0.7", lw=0.8)
    ax.set_xlabel(r"$\omega_p/\omega_v$")
    ax.set_ylabel(r"$I_{LP}$ (norm.)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
