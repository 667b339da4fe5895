"""Fluctuation lineshapes, photoluminescence and absorption spectra.

All series are sampled on frequency grids in units of ``vib_freq`` relative
to the molecular 0-0 line.  Emission through the cavity mirrors maps an
eigenstate j onto a ground-manifold state with ``nu`` vibrational quanta at
emitted frequency ``omega_j - nu * vib_freq``; the per-transition lineshape
is Lorentzian with half-width ``kappa_j = Gamma_j / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from .eigen import EigenSystem
from .model import ModelParams

#: Half-width assigned to zero-decay states so finite grids never see a delta spike.
KAPPA_FLOOR = 1e-3

#: Default sampling grid, in units of vib_freq around the 0-0 line.
GRID_MIN, GRID_MAX, GRID_STEP = -2.5, 2.5, 0.002

#: Matrix elements below this (squared) are dropped from stick lists.
STICK_CUTOFF = 1e-14


class SpectrumShapeError(RuntimeError):
    """A peak query hit a flat or ambiguously multi-modal region."""


class Stick(NamedTuple):
    omega: float      # line position, units of vib_freq
    strength: float   # squared matrix element (population-weighted where applicable)
    j: int            # source eigenstate
    i: int            # final ground state (0 = absolute ground state)


@dataclass(frozen=True)
class SpectralSeries:
    """Sampled spectrum plus optional stick metadata."""

    grid: np.ndarray
    values: np.ndarray
    sticks: tuple[Stick, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if np.any(np.diff(self.grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum contains non-finite values")


class PopulationKind(str, Enum):
    UNIFORM_WINDOW = "UniformWindow"
    GAUSSIAN = "Gaussian"
    DELTA = "Delta"


@dataclass(frozen=True)
class PopulationModel:
    """Stationary eigenstate populations used to weight emission spectra.

    ``UniformWindow`` gives every degenerate energy cluster inside the window
    the same total weight (state weight 1/degeneracy); ``Gaussian`` weights
    each state by ``exp(-(omega_j - center)^2 / 2 sigma^2)``.
    """

    kind: PopulationKind
    weights: np.ndarray
    window: tuple[float, float] | None = None
    center: float | None = None
    sigma: float | None = None
    target: int | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("populations must be non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("population model is empty (all weights zero)")
        if abs(total - 1.0) > 1e-9:
            raise ValueError("populations must be normalized")

    @classmethod
    def uniform_window(cls, eig: EigenSystem, omega_min: float, omega_max: float) -> "PopulationModel":
        eig.require_complete()
        inside = (eig.omega >= omega_min) & (eig.omega <= omega_max)
        w = np.where(inside, 1.0 / eig.degeneracy, 0.0)
        total = w.sum()
        if total <= 0:
            raise ValueError(f"no eigenstates inside population window [{omega_min}, {omega_max}]")
        return cls(kind=PopulationKind.UNIFORM_WINDOW, weights=w / total, window=(omega_min, omega_max))

    @classmethod
    def gaussian(cls, eig: EigenSystem, center: float, sigma: float) -> "PopulationModel":
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        w = np.exp(-0.5 * ((eig.omega - center) / sigma) ** 2)
        return cls(kind=PopulationKind.GAUSSIAN, weights=w / w.sum(), center=center, sigma=sigma)

    @classmethod
    def delta(cls, eig: EigenSystem, target: int) -> "PopulationModel":
        w = np.zeros(len(eig.omega))
        w[target] = 1.0
        return cls(kind=PopulationKind.DELTA, weights=w, target=target)


def default_grid(lo: float = GRID_MIN, hi: float = GRID_MAX, step: float = GRID_STEP) -> np.ndarray:
    n = int(round((hi - lo) / step)) + 1
    return np.linspace(lo, hi, n)


def _sum_lorentz(grid: np.ndarray, centers: np.ndarray, numerators: np.ndarray, widths: np.ndarray) -> np.ndarray:
    """``sum_k numerators[k] / ((grid - centers[k])^2 + widths[k]^2)``, chunked."""
    values = np.zeros_like(grid)
    chunk = max(1, int(2e7) // max(1, len(grid)))
    for start in range(0, len(centers), chunk):
        c = centers[start : start + chunk, None]
        n = numerators[start : start + chunk, None]
        w = widths[start : start + chunk, None]
        values += (n / ((grid[None, :] - c) ** 2 + w * w)).sum(axis=0)
    return values


def _coherence_width(eig: EigenSystem, kappa_floor: float) -> np.ndarray:
    """Per-state Lorentzian half-width ``Gamma_j / 2`` with a floor for dark states."""
    width = 0.5 * eig.gamma / eig.params.vib_freq
    return np.where(width > 0, width, kappa_floor)


def _emission_sticks(
    eig: EigenSystem,
    operator: str,
    state_weight: np.ndarray,
    nu_max_ground: int | None,
    kappa_floor: float = KAPPA_FLOOR,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Line positions/strengths/widths plus (j, i) indices for transitions j -> i."""
    eig.require_complete()
    if operator == "a":
        elements = eig.a_elements
    elif operator == "jminus":
        elements = eig.jminus_elements
    else:
        raise ValueError(f"unknown operator {operator!r}; expected 'a' or 'jminus'")
    params = eig.params
    omega_v = params.vib_freq
    nu_i = eig.ground_basis.total_vib_array()
    if nu_max_ground is not None:
        if nu_max_ground > params.nu_max_ground:
            raise ValueError(
                f"nu_max_ground={nu_max_ground} exceeds the enumerated ground basis "
                f"(params.nu_max_ground={params.nu_max_ground})"
            )
        rows = np.where(nu_i <= nu_max_ground)[0]
    else:
        rows = np.arange(len(nu_i))
    kappa_j = _coherence_width(eig, kappa_floor)

    strengths = state_weight[None, :] * elements[rows] ** 2
    ii, jj = np.where(strengths > STICK_CUTOFF)
    gi = rows[ii]
    centers = (eig.omega[jj] - nu_i[gi] * omega_v) / omega_v
    strength = strengths[ii, jj]
    widths = kappa_j[jj]
    return centers, strength, widths, jj, gi


def _stick_list(centers, strength, jj, gi) -> tuple[Stick, ...]:
    return tuple(
        Stick(float(c), float(s), int(j), int(i)) for c, s, j, i in zip(centers, strength, jj, gi)
    )


def lineshape(
    j: int,
    operator: str,
    grid: np.ndarray,
    eig: EigenSystem,
    kappa_floor: float = KAPPA_FLOOR,
) -> SpectralSeries:
    """State-resolved fluctuation spectrum of ``a`` or ``J-`` for eigenstate j.

    ``S(omega) = sum_i |<i|O|j>|^2 kappa_j / ((omega - omega_ji)^2 + kappa_j^2)``
    with ``omega_ji = omega_j - nu_i * vib_freq`` and ``kappa_j = Gamma_j/2``
    (or ``kappa_floor`` for states with zero decay).
    """
    weight = np.zeros(eig.dim)
    weight[j] = 1.0
    centers, strength, widths, jj, gi = _emission_sticks(eig, operator, weight, None, kappa_floor)
    values = _sum_lorentz(np.asarray(grid, dtype=float), centers, strength * widths, widths)
    return SpectralSeries(
        grid=np.asarray(grid, dtype=float),
        values=values,
        sticks=_stick_list(centers, strength, jj, gi),
        meta={"operator": operator, "state": j},
    )


def lpl_spectrum(
    eig: EigenSystem,
    pop: PopulationModel,
    grid: np.ndarray,
    nu_max_ground: int,
    kappa_floor: float = KAPPA_FLOOR,
) -> SpectralSeries:
    """Leakage photoluminescence: population-weighted photon lineshapes.

    Only dissipative transitions leaving at most ``nu_max_ground`` quanta in
    the material contribute; ``nu_max_ground=0`` keeps transitions to the
    absolute ground state only.
    """
    centers, strength, widths, jj, gi = _emission_sticks(eig, "a", pop.weights, nu_max_ground, kappa_floor)
    values = _sum_lorentz(np.asarray(grid, dtype=float), centers, strength * widths, widths)
    return SpectralSeries(
        grid=np.asarray(grid, dtype=float),
        values=values,
        sticks=_stick_list(centers, strength, jj, gi),
        meta={"population": pop.kind.value, "nu_max_ground": nu_max_ground},
    )


def absorption_spectrum(
    eig: EigenSystem,
    params: ModelParams,
    grid: np.ndarray,
    pump_strength: float = 1.0,
    kappa_nr: float = 0.0,
) -> SpectralSeries:
    """Conventional (through-mirror) absorption of a weak resonant pump.

    ``A(omega_p) = pi |pump|^2 sum_j |<G|a|j>|^2 (kappa_Gj/Gamma_j) F_j /
    ((omega_p - omega_j)^2 + kappa_Gj^2)`` with the coherence decay
    ``kappa_Gj = Gamma_j/2 + kappa_nr``.  States that do not decay at all
    (``Gamma_j = 0``) cannot attenuate the pump and contribute nothing.
    """
    eig.require_complete()
    omega_v = params.vib_freq
    grid = np.asarray(grid, dtype=float)
    active = eig.gamma > 0
    kappa_gj = (0.5 * eig.gamma + kappa_nr) / omega_v
    weight = np.zeros(eig.dim)
    weight[active] = (
        math.pi
        * pump_strength**2
        * eig.aG[active] ** 2
        * (kappa_gj[active] * omega_v / eig.gamma[active])
        * eig.f_emission[active]
    )
    keep = weight > STICK_CUTOFF
    centers = eig.omega[keep] / omega_v
    values = _sum_lorentz(grid, centers, weight[keep], kappa_gj[keep])
    sticks = tuple(
        Stick(float(c), float(s), int(j), 0)
        for c, s, j in zip(centers, weight[keep], np.where(keep)[0])
    )
    return SpectralSeries(grid=grid, values=values, sticks=sticks, meta={"kappa_nr": kappa_nr})


def bound_absorption(
    eig: EigenSystem,
    grid: np.ndarray,
    broadening: float = 0.0,
    kappa_floor: float = KAPPA_FLOOR,
) -> SpectralSeries:
    """Absorption into bound modes, probing the material dipole directly.

    Sticks carry ``|mu_jG|^2`` at the eigenfrequencies; the broadened curve
    uses the per-state coherence width plus ``broadening`` and is normalized
    to unit maximum.
    """
    eig.require_complete()
    omega_v = eig.params.vib_freq
    grid = np.asarray(grid, dtype=float)
    mu_sq = eig.mu_G**2
    keep = mu_sq > STICK_CUTOFF * eig.params.dipole_unit**2
    centers = eig.omega[keep] / omega_v
    widths = _coherence_width(eig, kappa_floor)[keep] + broadening / omega_v
    values = _sum_lorentz(grid, centers, mu_sq[keep] * widths, widths)
    peak = values.max() if values.size and values.max() > 0 else 1.0
    sticks = tuple(
        Stick(float(c), float(s), int(j), 0)
        for c, s, j in zip(centers, mu_sq[keep], np.where(keep)[0])
    )
    return SpectralSeries(grid=grid, values=values / peak, sticks=sticks, meta={"normalized": True})


def lp_index(eig: EigenSystem) -> int:
    """Index of the state labelled LP."""
    if eig.labels is None:
        raise ValueError("EigenSystem has no labels; run classify/solve first")
    for j, lab in enumerate(eig.labels):
        if lab == "LP":
            return j
    raise ValueError("no state is labelled LP")


def ilp_curve(
    eig: EigenSystem,
    omega_p_grid: np.ndarray,
    sigma_p: float,
    nu_max_ground_list: tuple[int, ...] | list[int],
    kappa_floor: float = KAPPA_FLOOR,
) -> dict[int, SpectralSeries]:
    """Emission intensity at the lower-polariton frequency vs pump center.

    For every pump center ``omega_p`` a Gaussian population of width
    ``sigma_p`` is prepared and the leakage photoluminescence is evaluated at
    the LP frequency, once per ground-manifold truncation in
    ``nu_max_ground_list``.  The whole family is normalized to its maximum.
    """
    if sigma_p <= 0:
        raise ValueError(f"sigma_p must be positive, got {sigma_p}")
    eig.require_complete()
    omega_v = eig.params.vib_freq
    omega_lp = eig.omega[lp_index(eig)] / omega_v
    omega_p_grid = np.asarray(omega_p_grid, dtype=float)

    # Per-state emission rate at the LP frequency for each channel truncation;
    # the pump sweep is then a population-weighted sum over states.
    unit = np.ones(eig.dim)
    per_state: dict[int, np.ndarray] = {}
    for cap in nu_max_ground_list:
        centers, strength, widths, jj, _ = _emission_sticks(eig, "a", unit, cap, kappa_floor)
        lorentz = strength * widths / ((omega_lp - centers) ** 2 + widths**2)
        e_j = np.zeros(eig.dim)
        np.add.at(e_j, jj, lorentz)
        per_state[cap] = e_j

    curves: dict[int, np.ndarray] = {}
    for cap in nu_max_ground_list:
        vals = np.empty(len(omega_p_grid))
        for g, omega_p in enumerate(omega_p_grid):
            w = np.exp(-0.5 * ((eig.omega / omega_v - omega_p) / sigma_p) ** 2)
            total = w.sum()
            vals[g] = (w / total) @ per_state[cap] if total > 0 else 0.0
        curves[cap] = vals
    family_max = max(v.max() for v in curves.values())
    scale = family_max if family_max > 0 else 1.0
    return {
        cap: SpectralSeries(
            grid=omega_p_grid,
            values=curves[cap] / scale,
            meta={"sigma_p": sigma_p, "omega_lp": float(omega_lp), "family_max": float(scale)},
        )
        for cap in nu_max_ground_list
    }


def _peak_position(series: SpectralSeries, lo: float, hi: float) -> float:
    """Argmax of a series inside [lo, hi], guarding flat or ambiguous regions."""
    mask = (series.grid >= lo) & (series.grid <= hi)
    if not mask.any():
        raise SpectrumShapeError(f"no grid points inside [{lo}, {hi}]")
    g = series.grid[mask]
    v = series.values[mask]
    vmax = v.max()
    if vmax <= 0 or (vmax - v.min()) < 1e-12 * max(vmax, 1.0):
        raise SpectrumShapeError(f"spectrum is flat inside [{lo}, {hi}]")
    interior = np.r_[False, (v[1:-1] >= v[:-2]) & (v[1:-1] > v[2:]), False]
    peaks = np.where(interior & (v > 0.98 * vmax))[0]
    if len(peaks) > 1 and np.ptp(g[peaks]) > 10 * (g[1] - g[0]):
        raise SpectrumShapeError(
            f"ambiguous peak inside [{lo}, {hi}]: candidates at {g[peaks][:4]}"
        )
    return float(g[np.argmax(v)])


def lp_blueshift(
    eig: EigenSystem,
    params: ModelParams,
    grid: np.ndarray | None = None,
    nu_max_ground: int = 1,
    pop: PopulationModel | None = None,
    pop_window_max: float = 1.3,
    kappa_nr: float = 0.0,
) -> float:
    """Shift of the photoluminescence maximum against the absorption maximum
    in the lower-polariton region, in units of ``vib_freq``.

    The LP region is ``[omega_LP - 0.5, omega_LP + 0.5]`` (vib_freq units).
    """
    if grid is None:
        grid = default_grid()
    omega_v = params.vib_freq
    if pop is None:
        pop = PopulationModel.uniform_window(eig, -math.inf, pop_window_max * omega_v)
    absorption = absorption_spectrum(eig, params, grid, kappa_nr=kappa_nr)
    lpl = lpl_spectrum(eig, pop, grid, nu_max_ground)
    omega_lp = eig.omega[lp_index(eig)] / omega_v
    lo, hi = omega_lp - 0.5, omega_lp + 0.5
    return _peak_position(lpl, lo, hi) - _peak_position(absorption, lo, hi)


def write_series_csv(series: SpectralSeries, path: str, meta: dict | None = None) -> None:
    """Two-column CSV ``omega_over_wv,value`` with provenance header lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in sorted({**series.meta, **(meta or {})}.items()):
            fh.write(f"# {key}={value}\n")
        fh.write("omega_over_wv,value\n")
        for x, y in zip(series.grid, series.values):
            fh.write(f"{x:.9g},{y:.9g}\n")


def write_sticks_csv(
    series: SpectralSeries, path: str, meta: dict | None = None, labels: tuple[str, ...] | None = None
) -> None:
    """Stick list ``omega_over_wv,strength,j,i,label_j`` with provenance header."""
    if series.sticks is None:
        raise ValueError("series carries no stick metadata")
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in sorted({**series.meta, **(meta or {})}.items()):
            fh.write(f"# {key}={value}\n")
        fh.write("omega_over_wv,strength,j,i,label_j\n")
        for s in sorted(series.sticks):
            lab = labels[s.j] if labels is not None else ""
            fh.write(f"{s.omega:.9g},{s.strength:.9g},{s.j},{s.i},{lab}\n")


def write_series_json(series: SpectralSeries, path: str, meta: dict | None = None) -> None:
    import json

    payload = {
        "meta": {**series.meta, **(meta or {})},
        "omega_over_wv": [float(f"{x:.9g}") for x in series.grid],
        "value": [float(f"{y:.9g}") for y in series.values],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")
