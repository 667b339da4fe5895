"""Eigensolves, per-state observables, dark-state classification, critical couplings."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .hamiltonian import HtcMatrix, JumpMatrices, build_hamiltonian, build_jump_matrices
from .model import (
    DEFAULT_STATE_CAP,
    Basis,
    BasisState,
    ModelParams,
    StateKind,
    enumerate_excitation_basis,
    enumerate_ground_basis,
    fc_overlap,
)

#: Eigenvalues closer than this (times vib_freq) are treated as one degenerate cluster.
DEGENERACY_TOL = 1e-8

LABELS = ("LP", "UP", "X", "Xb", "Y", "BrightOther", "ReservoirDark")


class NumericalError(RuntimeError):
    """Eigensolve or root-finding failure."""


class BracketError(NumericalError):
    """The tracked eigenvalue does not change sign inside the given bracket."""


class TrackingError(NumericalError):
    """Eigenvector continuation lost the tracked state (overlap below threshold)."""


@dataclass(frozen=True)
class ClassifyThresholds:
    """Cutoffs for the dark-state labels; all fractions of total strength.

    ``eps_dark`` bounds a "vanishing" dipole or photon amplitude,
    ``eps_emit`` a "nonzero" emission channel.  ``xb_*`` delimit the weakly
    bright symmetric states between the main polaritons.
    """

    eps_dark: float = 1e-4
    eps_emit: float = 1e-6
    sym_min: float = 0.5
    xb_mu_max: float = 0.05
    xb_window_lo: float = 0.15
    xb_window_hi: float = 0.65


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs of the HTC Hamiltonian plus derived matrix elements.

    ``omega`` is ascending, in units of ``vib_freq`` relative to the 0-0
    line.  Matrix-element arrays are filled in by ``derive_observables``;
    ``labels`` by ``classify`` (via ``solve``).
    """

    basis: Basis
    omega: np.ndarray
    vectors: np.ndarray
    params: ModelParams | None = None
    ground_basis: Basis | None = None
    a_elements: np.ndarray | None = None
    jminus_elements: np.ndarray | None = None
    mu_G: np.ndarray | None = None
    aG: np.ndarray | None = None
    gamma: np.ndarray | None = None
    f_emission: np.ndarray | None = None
    degeneracy: np.ndarray | None = None
    cluster_id: np.ndarray | None = None
    photon_weight: np.ndarray | None = None
    sym_weight: np.ndarray | None = None
    labels: tuple[str, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.omega)

    def require_complete(self) -> None:
        if self.a_elements is None or self.gamma is None:
            raise ValueError("EigenSystem is missing derived observables; run derive_observables")


def diagonalize(h: HtcMatrix) -> EigenSystem:
    """Full spectrum of the (dense) symmetric Hamiltonian, ascending.

    The eigenvector sign convention makes the largest-magnitude component of
    each vector positive, so repeated runs are bitwise reproducible.
    """
    dense = h.to_dense()
    asym = float(np.abs(dense - dense.T).max()) if h.dim else 0.0
    if asym > 1e-12:
        raise NumericalError(f"Hamiltonian not symmetric: max |H - H^T| = {asym:.3e}")
    try:
        omega, vectors = sla.eigh(dense, driver="evd")
    except sla.LinAlgError as exc:
        scale = float(np.abs(dense).max()) if h.dim else 0.0
        raise NumericalError(
            f"eigensolve failed for dim={h.dim}, max|H|={scale:.3e}, basis={h.basis_ref}: {exc}"
        ) from exc
    anchor = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[anchor, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    vectors = vectors * signs
    return EigenSystem(basis=h.basis, omega=omega, vectors=vectors)


def _cluster(omega: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Group sorted eigenvalues into clusters closer than ``tol``."""
    n = len(omega)
    degeneracy = np.empty(n, dtype=int)
    cluster_id = np.empty(n, dtype=int)
    start = 0
    cid = 0
    for i in range(1, n + 1):
        if i == n or omega[i] - omega[i - 1] > tol:
            degeneracy[start:i] = i - start
            cluster_id[start:i] = cid
            cid += 1
            start = i
    return degeneracy, cluster_id


def symmetric_weights(basis: Basis, vectors: np.ndarray) -> np.ndarray:
    """Squared projection of each column onto the permutation-symmetric sector."""
    orbit_index, orbit_sizes = basis.orbits()
    dim = len(basis)
    collect = sp.coo_matrix(
        (np.ones(dim), (orbit_index, np.arange(dim))), shape=(len(orbit_sizes), dim)
    ).tocsr()
    sums = collect @ vectors
    return np.einsum("oj,oj,o->j", sums, sums, 1.0 / orbit_sizes)


def derive_observables(eig: EigenSystem, jumps: JumpMatrices, params: ModelParams) -> EigenSystem:
    """Fill photon/dipole matrix elements, decay rates and degeneracies.

    Per eigenstate j: ``gamma[j] = kappa sum_i <i|a|j>^2
    + (N gamma_e) sum_i <i|J-|j>^2`` and ``f_emission[j] = N sum_i <i|J-|j>^2``;
    ``mu_G[j] = sqrt(N) <G|J-|j> dipole_unit``.
    """
    if jumps.excitation_basis.ref != eig.basis.ref:
        raise ValueError("jump matrices were built on a different excitation basis")
    a_el = np.asarray(jumps.a_matrix @ eig.vectors)
    jm_el = np.asarray(jumps.jminus_matrix @ eig.vectors)
    a_sq = np.einsum("ij,ij->j", a_el, a_el)
    jm_sq = np.einsum("ij,ij->j", jm_el, jm_el)
    gamma = params.kappa * a_sq + params.gamma_e_collective * jm_sq
    f_emission = params.n_molecules * jm_sq
    sqrt_n = math.sqrt(params.n_molecules)
    degeneracy, cluster_id = _cluster(eig.omega, DEGENERACY_TOL * params.vib_freq)
    photon_rows = eig.basis.kind_rows(StateKind.PHOTON_VIB)
    photon_weight = np.einsum("ij,ij->j", eig.vectors[photon_rows], eig.vectors[photon_rows])
    return replace(
        eig,
        params=params,
        ground_basis=jumps.ground_basis,
        a_elements=a_el,
        jminus_elements=jm_el,
        mu_G=sqrt_n * jm_el[0] * params.dipole_unit,
        aG=a_el[0].copy(),
        gamma=gamma,
        f_emission=f_emission,
        degeneracy=degeneracy,
        cluster_id=cluster_id,
        photon_weight=photon_weight,
        sym_weight=symmetric_weights(eig.basis, eig.vectors),
    )


def classify(
    eig: EigenSystem, params: ModelParams, thresholds: ClassifyThresholds | None = None
) -> np.ndarray:
    """Label every eigenstate as LP/UP/X/Xb/Y/BrightOther/ReservoirDark.

    LP and UP are the states of largest one-photon amplitude ``|<G|a|j>|^2``
    below and above the 0-0 line.  X-type states live in the symmetric
    sector, have vanishing dipole to |G> yet emit both through their dipole
    and at the 0-0 photon line; Xb are their weakly dipole-allowed partners.
    Y-type states are non-symmetric, dark in both absorption channels, and
    emit photons that leave vibrational quanta behind.  Without vibronic
    coupling (huang_rhys == 0) no X/Xb/Y labels are assigned.
    """
    eig.require_complete()
    th = thresholds or ClassifyThresholds()
    n = eig.dim
    omega_v = params.vib_freq
    total_mu = params.n_molecules * params.dipole_unit**2
    mu_frac = eig.mu_G**2 / total_mu
    ag_sq = eig.aG**2
    nu_i = eig.ground_basis.total_vib_array()
    vibronic_rows = nu_i >= 1
    emit_vibronic = np.einsum("ij,ij->j", eig.a_elements[vibronic_rows], eig.a_elements[vibronic_rows])

    labels = np.full(n, "BrightOther", dtype=object)
    below = np.where(eig.omega < -1e-9 * omega_v)[0]
    above = np.where(eig.omega > 1e-9 * omega_v)[0]
    lp = below[np.argmax(ag_sq[below])] if below.size and ag_sq[below].max() > 0 else None
    up = above[np.argmax(ag_sq[above])] if above.size and ag_sq[above].max() > 0 else None

    vibronic = params.huang_rhys > 0
    for j in range(n):
        if j == lp:
            labels[j] = "LP"
            continue
        if j == up:
            labels[j] = "UP"
            continue
        symmetric = eig.sym_weight[j] > th.sym_min
        if vibronic and symmetric:
            if mu_frac[j] < th.eps_dark and eig.f_emission[j] > th.eps_emit and ag_sq[j] > th.eps_emit:
                labels[j] = "X"
            elif (
                th.eps_dark <= mu_frac[j] < th.xb_mu_max
                and th.xb_window_lo * omega_v <= eig.omega[j] <= th.xb_window_hi * omega_v
            ):
                labels[j] = "Xb"
            continue
        if vibronic and not symmetric:
            if mu_frac[j] < th.eps_dark and ag_sq[j] < th.eps_dark and emit_vibronic[j] > th.eps_emit:
                labels[j] = "Y"
                continue
        if eig.f_emission[j] < th.eps_emit and eig.photon_weight[j] < th.eps_emit:
            labels[j] = "ReservoirDark"
    return labels


def solve(
    params: ModelParams,
    *,
    thresholds: ClassifyThresholds | None = None,
    cap: int = DEFAULT_STATE_CAP,
) -> EigenSystem:
    """Enumerate, build, diagonalize, derive and classify in one call."""
    basis = enumerate_excitation_basis(params, cap)
    gbasis = enumerate_ground_basis(params, cap)
    eig = diagonalize(build_hamiltonian(params, basis))
    eig = derive_observables(eig, build_jump_matrices(params, basis, gbasis), params)
    return replace(eig, labels=tuple(classify(eig, params, thresholds)))


def _symmetric_projector(basis: Basis) -> sp.csr_matrix:
    """Orthonormal map from the permutation-symmetric sector to the site basis."""
    orbit_index, orbit_sizes = basis.orbits()
    dim = len(basis)
    vals = 1.0 / np.sqrt(orbit_sizes[orbit_index])
    return sp.coo_matrix((vals, (np.arange(dim), orbit_index)), shape=(dim, len(orbit_sizes))).tocsr()


@dataclass(frozen=True)
class CriticalCoupling:
    """Root of the tracked symmetric-sector eigenvalue, with diagnostics."""

    rabi_single: float
    rabi_collective: float
    eigenvalue: float
    mu_fraction: float
    evaluations: int


def find_critical_coupling(
    params: ModelParams,
    bracket: tuple[float, float],
    *,
    tol: float = 1e-6,
    scan_points: int = 9,
    overlap_min: float = 0.7,
    cap: int = DEFAULT_STATE_CAP,
) -> CriticalCoupling:
    """Rabi coupling at which a symmetric-sector eigenvalue crosses zero.

    The spectrum of the symmetric sector (an exactly decoupled block of the
    full Hamiltonian) is scanned over ``bracket = (rabi_lo, rabi_hi)`` in
    single-molecule units; eigenvalues are continued between steps by
    eigenvector overlap and the first state whose energy changes sign is
    bisected down to ``|omega| <= tol * vib_freq``.

    Raises ``BracketError`` if nothing crosses, ``TrackingError`` if the
    continuation overlap falls below ``overlap_min``.
    """
    rabi_lo, rabi_hi = bracket
    if not 0 <= rabi_lo < rabi_hi:
        raise ValueError(f"invalid bracket {bracket}")
    basis = enumerate_excitation_basis(params, cap)
    proj = _symmetric_projector(basis)

    # <G|J-| row restricted to the symmetric sector, for the dipole diagnostic.
    g_row = np.zeros(len(basis))
    inv_sqrt_n = 1.0 / math.sqrt(params.n_molecules)
    for k, s in enumerate(basis.states):
        if s.kind is StateKind.EXCITON_ONE_PARTICLE:
            g_row[k] = inv_sqrt_n * fc_overlap(0, s.exciton_vib, params.lam)
    g_row_block = proj.T @ g_row

    evaluations = 0

    def block_eig(rabi: float) -> tuple[np.ndarray, np.ndarray]:
        nonlocal evaluations
        evaluations += 1
        h = build_hamiltonian(replace(params, rabi_single=rabi), basis)
        hb = (proj.T @ (h.entries @ proj)).toarray()
        return sla.eigh(hb)

    grid = np.linspace(rabi_lo, rabi_hi, scan_points)
    omegas = []
    vecs = []
    for rabi in grid:
        w, v = block_eig(rabi)
        omegas.append(w)
        vecs.append(v)

    # Continue every block state across the scan by best-overlap assignment.
    from scipy.optimize import linear_sum_assignment

    n_block = len(omegas[0])
    order = [np.arange(n_block)]
    for t in range(1, scan_points):
        overlap = np.abs(vecs[t - 1][:, order[t - 1]].T @ vecs[t])
        _, cols = linear_sum_assignment(-overlap)
        order.append(cols)
    tracked = np.stack([omegas[t][order[t]] for t in range(scan_points)])  # (scan, state)

    crossings: list[tuple[float, int, int]] = []  # (estimated rabi, interval, state)
    for s in range(n_block):
        for t in range(scan_points - 1):
            a, b = tracked[t, s], tracked[t + 1, s]
            if a == 0.0:
                crossings.append((grid[t], t, s))
            elif a * b < 0:
                est = grid[t] + (grid[t + 1] - grid[t]) * a / (a - b)
                crossings.append((est, t, s))
    if not crossings:
        raise BracketError(
            f"no symmetric-sector eigenvalue changes sign for rabi_single in {bracket}"
        )
    crossings.sort()
    _, t0, s0 = crossings[0]

    lo, hi = grid[t0], grid[t0 + 1]
    f_lo = tracked[t0, s0]
    v_ref = vecs[t0][:, order[t0][s0]]
    rabi_sol, f_sol, v_sol = lo, f_lo, v_ref
    while hi - lo > 1e-12 and abs(f_sol) > tol * params.vib_freq:
        mid = 0.5 * (lo + hi)
        w, v = block_eig(mid)
        overlaps = np.abs(v.T @ v_ref)
        idx = int(np.argmax(overlaps))
        if overlaps[idx] < overlap_min:
            raise TrackingError(
                f"eigenvector continuation ambiguous at rabi_single={mid:.6g} "
                f"(best overlap {overlaps[idx]:.3f} < {overlap_min})"
            )
        v_ref = v[:, idx]
        rabi_sol, f_sol, v_sol = mid, w[idx], v_ref
        if f_lo * f_sol <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_sol
    mu_fraction = float(g_row_block @ v_sol) ** 2
    return CriticalCoupling(
        rabi_single=float(rabi_sol),
        rabi_collective=float(rabi_sol) * math.sqrt(params.n_molecules),
        eigenvalue=float(f_sol),
        mu_fraction=mu_fraction,
        evaluations=evaluations,
    )


def single_molecule_diabatic_coefficients(eig: EigenSystem, j: int) -> np.ndarray:
    """Expansion of eigenstate j over N=1 diabatic polariton states.

    Returns ``c[nu, 0:2] = (<nu,+|j>, <nu,-|j>)`` with
    ``|nu,+-> = (|e,nu~> +- |g,nu,1_c>)/sqrt(2)``; diagnostic for the
    interference structure of zero-energy dark states.
    """
    basis = eig.basis
    if basis.n_molecules != 1:
        raise ValueError("diabatic polariton expansion is defined for a single molecule")
    vec = eig.vectors[:, j]
    out = np.zeros((basis.nu_max + 1, 2))
    for nu in range(basis.nu_max + 1):
        occ = () if nu == 0 else ((0, nu),)
        k_ph = basis.position(BasisState(kind=StateKind.PHOTON_VIB, photon=1, ground_vib_occupations=occ))
        k_ex = basis.position(
            BasisState(kind=StateKind.EXCITON_ONE_PARTICLE, exciton_site=0, exciton_vib=nu)
        )
        plus = (vec[k_ex] + vec[k_ph]) / math.sqrt(2)
        minus = (vec[k_ex] - vec[k_ph]) / math.sqrt(2)
        out[nu] = (plus, minus)
    return out


def state_records(eig: EigenSystem) -> list[dict]:
    """Per-state report rows (omega, photon/dipole strengths, decay, label)."""
    eig.require_complete()
    params = eig.params
    total_mu = params.n_molecules * params.dipole_unit**2
    labels = eig.labels if eig.labels is not None else classify(eig, params)
    rows = []
    for j in range(eig.dim):
        rows.append(
            {
                "index": j,
                "omega_over_wv": float(eig.omega[j] / params.vib_freq),
                "ag_sq": float(eig.aG[j] ** 2),
                "mu_sq": float(eig.mu_G[j] ** 2),
                "mu_frac": float(eig.mu_G[j] ** 2 / total_mu),
                "gamma": float(eig.gamma[j]),
                "f_emission": float(eig.f_emission[j]),
                "degeneracy": int(eig.degeneracy[j]),
                "photon_weight": float(eig.photon_weight[j]),
                "sym_weight": float(eig.sym_weight[j]),
                "label": str(labels[j]),
            }
        )
    return rows


def write_eigen_report(eig: EigenSystem, path: str, fmt: str = "json", meta: dict | None = None) -> None:
    """Write the per-state report as JSON or CSV."""
    rows = state_records(eig)
    if fmt == "json":
        payload = {"meta": meta or {}, "states": rows}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
            fh.write("\n")
    elif fmt == "csv":
        cols = list(rows[0].keys())
        with open(path, "w", encoding="utf-8") as fh:
            for key, value in sorted((meta or {}).items()):
                fh.write(f"# {key}={value}\n")
            fh.write(",".join(cols) + "\n")
            for row in rows:
                cells = []
                for c in cols:
                    v = row[c]
                    cells.append(f"{v:.9g}" if isinstance(v, float) else str(v))
                fh.write(",".join(cells) + "\n")
    else:
        raise ValueError(f"unknown report format {fmt!r}")
