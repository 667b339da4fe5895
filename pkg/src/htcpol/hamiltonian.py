"""Assembly of the HTC Hamiltonian and of the photon/dipole jump operators.

The Hamiltonian lives entirely in the one-excitation manifold: the
rotating-wave light-matter coupling conserves the photon-plus-exciton number,
so the ground manifold enters only through the rectangular jump matrices of
the photon annihilation operator ``a`` and the collective lowering operator
``J- = N^{-1/2} sum_n |g_n><e_n|`` (the dipole operator is
``mu = sqrt(N) (J- + J+)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import Basis, BasisState, Manifold, ModelParams, StateKind, fc_matrix


@dataclass(frozen=True)
class HtcMatrix:
    """Real symmetric HTC Hamiltonian on an excitation-manifold basis."""

    dim: int
    entries: sp.csr_matrix
    basis: Basis

    @property
    def basis_ref(self) -> str:
        return self.basis.ref

    def to_dense(self) -> np.ndarray:
        return self.entries.toarray()


@dataclass(frozen=True)
class JumpMatrices:
    """Rectangular <ground_i|O|excitation_k> matrices for O in {a, J-}."""

    a_matrix: sp.csr_matrix
    jminus_matrix: sp.csr_matrix
    excitation_basis: Basis
    ground_basis: Basis


def _check_basis(params: ModelParams, basis: Basis, manifold: Manifold) -> None:
    if basis.manifold is not manifold:
        raise ValueError(f"expected a {manifold.value}-manifold basis, got {basis.ref}")
    if basis.n_molecules != params.n_molecules:
        raise ValueError(f"basis {basis.ref} does not match n_molecules={params.n_molecules}")
    expected = params.nu_max if manifold is Manifold.EXCITATION else params.nu_max_ground
    if basis.nu_max != expected:
        raise ValueError(f"basis {basis.ref} does not match vibrational truncation {expected}")


def build_hamiltonian(params: ModelParams, basis: Basis) -> HtcMatrix:
    """HTC Hamiltonian in the rotating frame of the molecular 0-0 transition.

    Diagonal: photon states sit at ``total_vib * vib_freq - detuning``,
    exciton states at ``total_vib * vib_freq`` (displaced plus spectator
    quanta).  Off-diagonal: the Tavis-Cummings term couples a photon state to
    each exciton state with identical vibrational background, with element
    ``(rabi_single/2) * <nu|nu_tilde>`` where the Franck-Condon factor
    connects the flipped molecule's vibrational state across the transition.
    """
    _check_basis(params, basis, Manifold.EXCITATION)
    dim = len(basis)
    omega_v = params.vib_freq
    half_rabi = 0.5 * params.rabi_single
    fc = fc_matrix(params.nu_max + 1, params.nu_max + 1, params.lam)

    diag = np.empty(dim)
    for i, s in enumerate(basis.states):
        diag[i] = s.total_vib * omega_v - (params.detuning if s.photon else 0.0)

    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    photon_index: dict[tuple[tuple[int, int], ...], int] = {
        s.ground_vib_occupations: i for i, s in enumerate(basis.states) if s.kind is StateKind.PHOTON_VIB
    }
    if half_rabi != 0.0:
        for k, s in enumerate(basis.states):
            if s.exciton_site is None:
                continue
            vt = s.exciton_vib
            if s.kind is StateKind.EXCITON_ONE_PARTICLE:
                # Partner photon states: the flipped molecule may end with any
                # 0..nu_max ground-potential quanta, everyone else stays vacuum.
                for q in range(params.nu_max + 1):
                    occ = () if q == 0 else ((s.exciton_site, q),)
                    p = photon_index[occ]
                    rows.append(p)
                    cols.append(k)
                    vals.append(half_rabi * fc[q, vt])
            else:
                # Two-particle truncation: the only photon state sharing the
                # spectator background has the flipped molecule vibrationless.
                p = photon_index[((s.spectator_site, s.spectator_vib),)]
                rows.append(p)
                cols.append(k)
                vals.append(half_rabi * fc[0, vt])

    upper = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim))
    entries = (upper + upper.T + sp.diags(diag)).tocsr()
    return HtcMatrix(dim=dim, entries=entries, basis=basis)


def build_jump_matrices(params: ModelParams, excitation_basis: Basis, ground_basis: Basis) -> JumpMatrices:
    """Matrices of ``a`` and ``J-`` from the excitation to the ground manifold.

    ``a`` maps each photon state to the ground state with the identical
    vibrational occupation (entry 1) and annihilates exciton states.  ``J-``
    relaxes the excited molecule with amplitude ``N^{-1/2} <nu|nu_tilde>``
    onto every ground state whose spectator occupations match; channels whose
    total quanta exceed the ground-basis truncation are dropped.
    """
    _check_basis(params, excitation_basis, Manifold.EXCITATION)
    _check_basis(params, ground_basis, Manifold.GROUND)
    n_g, n_e = len(ground_basis), len(excitation_basis)
    ground_index: dict[tuple[tuple[int, int], ...], int] = {
        s.ground_vib_occupations: i for i, s in enumerate(ground_basis.states)
    }
    fc = fc_matrix(params.nu_max_ground + 1, params.nu_max + 1, params.lam)
    inv_sqrt_n = 1.0 / np.sqrt(params.n_molecules)

    a_rows: list[int] = []
    a_cols: list[int] = []
    j_rows: list[int] = []
    j_cols: list[int] = []
    j_vals: list[float] = []
    for k, s in enumerate(excitation_basis.states):
        if s.kind is StateKind.PHOTON_VIB:
            i = ground_index.get(s.ground_vib_occupations)
            if i is not None:
                a_rows.append(i)
                a_cols.append(k)
        else:
            budget = params.nu_max_ground - (s.spectator_vib or 0)
            spectator = () if s.spectator_site is None else ((s.spectator_site, s.spectator_vib),)
            for q in range(budget + 1):
                occ = dict(spectator)
                if q > 0:
                    occ[s.exciton_site] = q
                key = tuple(sorted(occ.items()))
                i = ground_index.get(key)
                if i is None:
                    continue
                j_rows.append(i)
                j_cols.append(k)
                j_vals.append(inv_sqrt_n * fc[q, s.exciton_vib])

    a_matrix = sp.coo_matrix((np.ones(len(a_rows)), (a_rows, a_cols)), shape=(n_g, n_e)).tocsr()
    jminus = sp.coo_matrix((j_vals, (j_rows, j_cols)), shape=(n_g, n_e)).tocsr()
    return JumpMatrices(
        a_matrix=a_matrix,
        jminus_matrix=jminus,
        excitation_basis=excitation_basis,
        ground_basis=ground_basis,
    )


def dump_matrix(h: HtcMatrix, path: str) -> None:
    """Write the nonzero entries as ``row col value`` triplets (0-based, 17 digits)."""
    coo = h.entries.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# HTC matrix dump, dim={h.dim}, basis={h.basis_ref}\n")
        fh.write("# row col value\n")
        for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")
