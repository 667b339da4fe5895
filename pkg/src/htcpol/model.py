"""Domain types and basis enumeration for the Holstein-Tavis-Cummings model.

Everything is expressed in units of the intramolecular vibrational frequency
``vib_freq`` and in the rotating frame of the molecular 0-0 transition, so all
energies reported downstream are offsets from the zero-phonon line.

Vibrational overlap conventions
-------------------------------
``fc_overlap(nu, nu_tilde, lam)`` is the Franck-Condon amplitude
``<nu|nu_tilde>`` between the eigenstate ``nu`` of the electronic-ground
nuclear potential and the eigenstate ``nu_tilde`` of the excited-state
potential, whose minimum is displaced by ``lam = sqrt(huang_rhys)`` along the
dimensionless vibrational coordinate.  The global sign is fixed by
``<0|0~> > 0``; equivalently ``|nu~> = D(-lam)|nu>`` with the displacement
operator ``D(a) = exp(a b^dag - a* b)``.  Under this convention
``<0|nu~> = exp(-lam^2/2) lam^nu / sqrt(nu!) > 0`` while e.g. ``<1|0~> < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import eval_genlaguerre

#: Hard cap on enumerated basis sizes; dense eigensolvers beyond ~2e4 states
#: are out of scope, the cap mainly guards against runaway configs.
DEFAULT_STATE_CAP = 200_000


class BasisSizeError(ValueError):
    """Requested basis would exceed the configured state cap."""


def fc_overlap(nu: int, nu_tilde: int, lam: float) -> float:
    """Franck-Condon overlap <nu|nu_tilde> of a displaced harmonic oscillator.

    Args:
        nu: quanta in the undisplaced (electronic ground) potential.
        nu_tilde: quanta in the potential displaced by ``lam``.
        lam: dimensionless displacement, ``lam = sqrt(huang_rhys) >= 0``.

    Returns:
        The real overlap amplitude.  Rows and columns are orthonormal
        (completeness: ``sum_nt fc_overlap(nu, nt, lam)**2 == 1``).
    """
    if nu < 0 or nu_tilde < 0:
        raise ValueError(f"negative vibrational quantum number: ({nu}, {nu_tilde})")
    if lam < 0:
        raise ValueError(f"displacement must be non-negative, got {lam}")
    if lam == 0.0:
        return 1.0 if nu == nu_tilde else 0.0
    x = lam * lam
    # Closed form of <m|D(-lam)|n> in terms of associated Laguerre polynomials.
    if nu >= nu_tilde:
        k = nu - nu_tilde
        amp = math.exp(0.5 * (math.lgamma(nu_tilde + 1) - math.lgamma(nu + 1)) - 0.5 * x)
        return amp * (-lam) ** k * float(eval_genlaguerre(nu_tilde, k, x))
    k = nu_tilde - nu
    amp = math.exp(0.5 * (math.lgamma(nu + 1) - math.lgamma(nu_tilde + 1)) - 0.5 * x)
    return amp * lam**k * float(eval_genlaguerre(nu, k, x))


def fc_matrix(n_rows: int, n_cols: int, lam: float) -> np.ndarray:
    """Table ``F[nu, nu_tilde] = fc_overlap(nu, nu_tilde, lam)``."""
    out = np.empty((n_rows, n_cols))
    for nu in range(n_rows):
        for nt in range(n_cols):
            out[nu, nt] = fc_overlap(nu, nt, lam)
    return out


@dataclass(frozen=True)
class ModelParams:
    """Physical and truncation parameters, all rates in units of ``vib_freq``.

    ``rabi_single`` is the single-emitter vacuum Rabi frequency; the
    collective coupling quoted in the literature is ``sqrt(N) * rabi_single``.
    ``detuning`` is ``omega_00 - omega_cavity`` and shifts photon-carrying
    states by ``-detuning`` in the rotating frame.
    """

    n_molecules: int
    huang_rhys: float = 1.0
    vib_freq: float = 1.0
    rabi_single: float = 0.0
    detuning: float = 0.0
    kappa: float = 0.0
    gamma_e_collective: float = 0.0
    nu_max: int = 4
    nu_max_ground: int = 2
    dipole_unit: float = 1.0

    def __post_init__(self) -> None:
        if self.n_molecules < 1:
            raise ValueError(f"n_molecules must be >= 1, got {self.n_molecules}")
        if self.vib_freq <= 0:
            raise ValueError(f"vib_freq must be positive, got {self.vib_freq}")
        if self.huang_rhys < 0:
            raise ValueError(f"huang_rhys must be non-negative, got {self.huang_rhys}")
        if self.rabi_single < 0 or self.kappa < 0 or self.gamma_e_collective < 0:
            raise ValueError("rates and couplings must be non-negative")
        if self.nu_max < 0 or self.nu_max_ground < 0:
            raise ValueError("vibrational truncations must be non-negative integers")
        if self.dipole_unit <= 0:
            raise ValueError(f"dipole_unit must be positive, got {self.dipole_unit}")

    @property
    def lam(self) -> float:
        """Dimensionless displacement ``sqrt(huang_rhys)``."""
        return math.sqrt(self.huang_rhys)

    @property
    def rabi_collective(self) -> float:
        """Collective coupling ``sqrt(N) * rabi_single``."""
        return math.sqrt(self.n_molecules) * self.rabi_single

    def with_rabi_collective(self, value: float) -> "ModelParams":
        """Copy of the parameters with ``sqrt(N)*rabi_single`` set to ``value``."""
        from dataclasses import replace

        return replace(self, rabi_single=value / math.sqrt(self.n_molecules))


class StateKind(str, Enum):
    GROUND_VIB = "GroundVib"
    PHOTON_VIB = "PhotonVib"
    EXCITON_ONE_PARTICLE = "ExcitonOneParticle"
    EXCITON_TWO_PARTICLE = "ExcitonTwoParticle"


_KIND_RANK = {
    StateKind.GROUND_VIB: 0,
    StateKind.PHOTON_VIB: 1,
    StateKind.EXCITON_ONE_PARTICLE: 2,
    StateKind.EXCITON_TWO_PARTICLE: 3,
}


class Manifold(str, Enum):
    EXCITATION = "Excitation"
    GROUND = "Ground"


@dataclass(frozen=True)
class BasisState:
    """One configuration of photon, electronic and vibrational excitations.

    ``ground_vib_occupations`` lists ``(site, quanta)`` pairs, sorted by site,
    for molecules that are electronically unexcited but vibrate; for exciton
    states the spectator is stored in the dedicated fields instead.
    ``exciton_vib`` counts quanta of the displaced excited-state potential.
    """

    kind: StateKind
    photon: int = 0
    exciton_site: int | None = None
    exciton_vib: int | None = None
    spectator_site: int | None = None
    spectator_vib: int | None = None
    ground_vib_occupations: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        if self.photon not in (0, 1):
            raise ValueError(f"photon occupation must be 0 or 1, got {self.photon}")
        if self.kind is StateKind.EXCITON_TWO_PARTICLE:
            if self.spectator_site is None or self.spectator_site == self.exciton_site:
                raise ValueError("two-particle state needs a spectator distinct from the exciton site")
            if self.spectator_vib is None or self.spectator_vib < 1:
                raise ValueError("two-particle spectator must carry at least one vibrational quantum")
        expected = 0 if self.kind is StateKind.GROUND_VIB else 1
        if self.excitation_number != expected:
            raise ValueError(f"{self.kind.value} state must carry excitation number {expected}")

    @property
    def excitation_number(self) -> int:
        """Conserved photon-plus-electronic excitation count."""
        return self.photon + (1 if self.exciton_site is not None else 0)

    @property
    def total_vib(self) -> int:
        total = sum(q for _, q in self.ground_vib_occupations)
        if self.exciton_vib is not None:
            total += self.exciton_vib
        if self.spectator_vib is not None:
            total += self.spectator_vib
        return total

    def occupation_map(self) -> dict[int, int]:
        """Ground-potential vibrational quanta by site (spectator included)."""
        occ = dict(self.ground_vib_occupations)
        if self.spectator_site is not None:
            occ[self.spectator_site] = self.spectator_vib
        return occ

    def sort_key(self) -> tuple:
        return (
            _KIND_RANK[self.kind],
            self.total_vib if self.kind is StateKind.GROUND_VIB else 0,
            self.exciton_site if self.exciton_site is not None else -1,
            self.exciton_vib if self.exciton_vib is not None else -1,
            self.spectator_site if self.spectator_site is not None else -1,
            self.spectator_vib if self.spectator_vib is not None else -1,
            self.ground_vib_occupations,
        )

    def orbit_key(self) -> tuple:
        """Label invariant under relabeling of molecule indices."""
        occ_shape = tuple(sorted(q for _, q in self.ground_vib_occupations))
        return (self.kind, self.photon, self.exciton_vib, self.spectator_vib, occ_shape)

    def describe(self) -> str:
        if self.kind is StateKind.GROUND_VIB:
            occ = ",".join(f"{s}:{q}" for s, q in self.ground_vib_occupations) or "vac"
            return f"|G;{occ}>"
        if self.kind is StateKind.PHOTON_VIB:
            occ = ",".join(f"{s}:{q}" for s, q in self.ground_vib_occupations) or "vac"
            return f"|1c;{occ}>"
        if self.kind is StateKind.EXCITON_ONE_PARTICLE:
            return f"|e{self.exciton_site},vt{self.exciton_vib}>"
        return f"|e{self.exciton_site},vt{self.exciton_vib};g{self.spectator_site},v{self.spectator_vib}>"


@dataclass(frozen=True)
class Basis:
    """Deterministically ordered basis of one manifold.

    The ordering is lexicographic on the canonical state encoding (kind,
    then site and vibrational labels), so two runs with the same parameters
    produce identical index maps.
    """

    states: tuple[BasisState, ...]
    manifold: Manifold
    n_molecules: int
    nu_max: int
    index: dict[BasisState, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        if not self.index:
            object.__setattr__(self, "index", {s: i for i, s in enumerate(self.states)})
        if len(self.index) != len(self.states):
            raise ValueError("duplicate states in basis")

    def __len__(self) -> int:
        return len(self.states)

    @property
    def ref(self) -> str:
        return f"{self.manifold.value}:N={self.n_molecules},nu_max={self.nu_max},dim={len(self.states)}"

    def position(self, state: BasisState) -> int:
        return self.index[state]

    def kind_rows(self, kind: StateKind) -> np.ndarray:
        return np.array([i for i, s in enumerate(self.states) if s.kind is kind], dtype=int)

    def total_vib_array(self) -> np.ndarray:
        return np.array([s.total_vib for s in self.states], dtype=int)

    def orbits(self) -> tuple[np.ndarray, np.ndarray]:
        """Orbit structure under molecule relabeling.

        Returns ``(orbit_index, orbit_sizes)`` where ``orbit_index[i]`` is the
        orbit id of state ``i`` and ``orbit_sizes[k]`` the number of states in
        orbit ``k``.  The permutation-symmetric sector has one dimension per
        orbit; projections onto it are sums over orbit members.
        """
        ids: dict[tuple, int] = {}
        orbit_index = np.empty(len(self.states), dtype=int)
        for i, s in enumerate(self.states):
            key = s.orbit_key()
            orbit_index[i] = ids.setdefault(key, len(ids))
        sizes = np.bincount(orbit_index, minlength=len(ids))
        return orbit_index, sizes


def excitation_basis_size(n_molecules: int, nu_max: int) -> int:
    """Closed-form count of the one-excitation basis under the two-particle truncation."""
    n, v = n_molecules, nu_max
    return (1 + n * v) + n * (v + 1) + n * (n - 1) * (v + 1) * v


def ground_basis_size(n_molecules: int, nu_max_ground: int) -> int:
    """Closed-form count of ground-manifold states with total quanta <= nu_max_ground."""
    total = 0
    for k in range(nu_max_ground + 1):
        for parts in range(0, min(k, n_molecules) + 1):
            if parts == 0:
                total += 1 if k == 0 else 0
            else:
                total += math.comb(n_molecules, parts) * math.comb(k - 1, parts - 1)
    return total


def enumerate_excitation_basis(params: ModelParams, cap: int = DEFAULT_STATE_CAP) -> Basis:
    """All one-excitation states kept by the two-particle truncation.

    Contents: the bare one-photon state; one-photon states with a single
    molecule carrying 1..nu_max ground-potential quanta; one-particle exciton
    states (one molecule excited with 0..nu_max displaced quanta, the rest
    vibrationless); and two-particle states adding one distinct spectator
    molecule with 1..nu_max ground-potential quanta.
    """
    n, v = params.n_molecules, params.nu_max
    expected = excitation_basis_size(n, v)
    if expected > cap:
        raise BasisSizeError(f"excitation basis would need {expected} states (cap {cap})")
    states: list[BasisState] = [BasisState(kind=StateKind.PHOTON_VIB, photon=1)]
    for site in range(n):
        for q in range(1, v + 1):
            states.append(
                BasisState(kind=StateKind.PHOTON_VIB, photon=1, ground_vib_occupations=((site, q),))
            )
    for site in range(n):
        for vt in range(v + 1):
            states.append(
                BasisState(kind=StateKind.EXCITON_ONE_PARTICLE, exciton_site=site, exciton_vib=vt)
            )
    for site in range(n):
        for vt in range(v + 1):
            for spec in range(n):
                if spec == site:
                    continue
                for q in range(1, v + 1):
                    states.append(
                        BasisState(
                            kind=StateKind.EXCITON_TWO_PARTICLE,
                            exciton_site=site,
                            exciton_vib=vt,
                            spectator_site=spec,
                            spectator_vib=q,
                        )
                    )
    states.sort(key=BasisState.sort_key)
    assert len(states) == expected
    return Basis(states=tuple(states), manifold=Manifold.EXCITATION, n_molecules=n, nu_max=v)


def enumerate_ground_basis(params: ModelParams, cap: int = DEFAULT_STATE_CAP) -> Basis:
    """Zero-excitation states with total vibrational quanta <= nu_max_ground.

    The absolute ground state sorts first (index 0).
    """
    n, k_max = params.n_molecules, params.nu_max_ground
    expected = ground_basis_size(n, k_max)
    if expected > cap:
        raise BasisSizeError(f"ground basis would need {expected} states (cap {cap})")

    states: list[BasisState] = []

    def extend(start_site: int, remaining: int, acc: list[tuple[int, int]]) -> None:
        states.append(BasisState(kind=StateKind.GROUND_VIB, ground_vib_occupations=tuple(acc)))
        for site in range(start_site, n):
            for q in range(1, remaining + 1):
                acc.append((site, q))
                extend(site + 1, remaining - q, acc)
                acc.pop()

    extend(0, k_max, [])
    states.sort(key=BasisState.sort_key)
    assert len(states) == expected
    return Basis(states=tuple(states), manifold=Manifold.GROUND, n_molecules=n, nu_max=k_max)
