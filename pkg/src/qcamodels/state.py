"""State vectors, density matrices and the gate-application kernel.

Bit convention: the site with linear index ``i`` is bit ``i`` of the
basis-state index, so a basis label reads ``|b_{N-1} ... b_1 b_0>``.
Local operators are written with their first listed site as the most
significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._validation import check_unitary
from .exceptions import ConfigurationError, UsageError
from .lattice import Lattice

NORM_TOL = 1e-10


def apply_operator(amps: np.ndarray, op: np.ndarray, sites: Sequence[int], n_sites: int) -> np.ndarray:
    """Apply a ``2**k x 2**k`` operator to ``sites`` of one state or a batch.

    ``amps`` has shape ``(..., 2**n_sites)``; leading axes are batch axes.
    The operator need not be unitary. Returns a new array.
    """
    sites = [int(s) for s in sites]
    k = len(sites)
    if len(set(sites)) != k:
        raise UsageError(f"duplicate target sites {sites}")
    if op.shape != (1 << k, 1 << k):
        raise UsageError(f"operator of shape {op.shape} does not act on {k} sites")
    if any(not 0 <= s < n_sites for s in sites):
        raise UsageError(f"sites {sites} outside lattice of {n_sites} sites")
    batch = amps.shape[:-1]
    nb = len(batch)
    psi = amps.reshape(batch + (2,) * n_sites)
    # tensor axis of site s: the first site axis is the most significant bit
    axes = [nb + n_sites - 1 - s for s in sites]
    ut = op.reshape((2,) * (2 * k))
    out = np.tensordot(ut, psi, axes=(list(range(k, 2 * k)), axes))
    out = np.moveaxis(out, list(range(k)), axes)
    return out.reshape(amps.shape)


def embed_operator(op: np.ndarray, sites: Sequence[int], n_sites: int) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``op`` acting on ``sites``."""
    eye = np.eye(1 << n_sites, dtype=complex)
    # rows of the batch are basis columns; transpose back at the end
    return apply_operator(eye, np.asarray(op, dtype=complex), sites, n_sites).T


@dataclass
class StateVector:
    """Normalised pure state of a finite qubit lattice."""

    amplitudes: np.ndarray
    lattice: Lattice

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        n = self.lattice.n_sites
        if self.amplitudes.shape != (1 << n,):
            raise UsageError(f"expected {1 << n} amplitudes for {n} sites, got {self.amplitudes.shape}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise UsageError(f"state norm {norm!r} differs from 1 by more than {NORM_TOL}")

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    def probabilities(self) -> np.ndarray:
        """Probability of |1> at every site, indexed by linear site index."""
        return site_probabilities(self.amplitudes, self.n_sites)

    def copy(self) -> "StateVector":
        return StateVector(self.amplitudes.copy(), self.lattice)

    def shifted(self, shift) -> "StateVector":
        """The state translated by a lattice vector."""
        return StateVector(permute_sites(self.amplitudes, self.lattice.shift_map(shift)), self.lattice)


def permute_sites(amps: np.ndarray, site_map: np.ndarray) -> np.ndarray:
    """Move the content of site ``i`` to site ``site_map[i]``."""
    n = len(site_map)
    idx = np.arange(1 << n)
    new_idx = np.zeros_like(idx)
    for i, j in enumerate(site_map):
        new_idx |= ((idx >> i) & 1) << int(j)
    out = np.empty_like(amps)
    out[..., new_idx] = amps[..., idx]
    return out


def site_probabilities(amps: np.ndarray, n_sites: int) -> np.ndarray:
    p = np.abs(amps) ** 2
    idx = np.arange(1 << n_sites)
    return np.array([p[..., (idx >> i) & 1 == 1].sum(axis=-1) for i in range(n_sites)]).T


def basis_state(lattice: Lattice, bits: str) -> StateVector:
    """Computational basis state written as the label ``b_{N-1}...b_0``.

    >>> basis_state(Lattice((2,)), "10").amplitudes.real
    array([0., 0., 1., 0.])
    """
    n = lattice.n_sites
    if len(bits) != n or set(bits) - {"0", "1"}:
        raise ConfigurationError(f"bitstring {bits!r} is not {n} binary digits")
    amps = np.zeros(1 << n, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(amps, lattice)


def excitation_state(lattice: Lattice, sites: Sequence[int]) -> StateVector:
    """Basis state with |1> exactly on ``sites``."""
    amps = np.zeros(1 << lattice.n_sites, dtype=complex)
    amps[sum(1 << int(s) for s in set(sites))] = 1.0
    return StateVector(amps, lattice)


def random_state(lattice: Lattice, rng: np.random.Generator | int | None = None) -> StateVector:
    """Haar-random pure state."""
    rng = np.random.default_rng(rng)
    dim = 1 << lattice.n_sites
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v / np.linalg.norm(v), lattice)


def apply_local_unitary(state: StateVector, u, sites: Sequence[int]) -> StateVector:
    """Apply ``u ⊗ I`` with ``u`` acting on ``sites`` (first site = most significant bit)."""
    u = check_unitary(u, "local unitary")
    k = u.shape[0].bit_length() - 1
    if len(sites) != k:
        raise UsageError(f"unitary acts on {k} sites but {len(sites)} sites were given")
    return StateVector(apply_operator(state.amplitudes, u, sites, state.n_sites), state.lattice)


def site_probability(state: StateVector, site) -> float:
    i = state.lattice.index(site) if not isinstance(site, (int, np.integer)) else int(site)
    if not 0 <= i < state.n_sites:
        raise UsageError(f"site {site} outside lattice")
    return float(site_probabilities(state.amplitudes, state.n_sites)[i])


@dataclass
class DensityMatrix:
    """Reduced state on an ordered region (first site = most significant bit)."""

    region: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        self.region = tuple(int(s) for s in self.region)
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (1 << len(self.region),) * 2:
            raise UsageError("density matrix shape does not match its region")

    def is_valid(self, tol: float = 1e-10) -> bool:
        m = self.matrix
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol or abs(np.trace(m) - 1) > tol:
            return False
        return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min()) >= -1e-9


def _check_region(region: Sequence[int], n_sites: int) -> list[int]:
    region = [int(s) for s in region]
    if len(set(region)) != len(region):
        raise UsageError(f"region {region} has repeated sites")
    if any(not 0 <= s < n_sites for s in region):
        raise UsageError(f"region {region} outside lattice")
    return region


def reduced_density_amplitudes(amps: np.ndarray, region: Sequence[int], n_sites: int) -> np.ndarray:
    region = _check_region(region, n_sites)
    psi = amps.reshape((2,) * n_sites)
    axes = [n_sites - 1 - s for s in region]
    rest = [a for a in range(n_sites) if a not in axes]
    m = np.transpose(psi, axes + rest).reshape(1 << len(region), -1)
    return m @ m.conj().T


def reduced_density(state: StateVector, region: Sequence[int]) -> DensityMatrix:
    """Partial trace of |ψ><ψ| over the complement of ``region``."""
    region = _check_region(region, state.n_sites)
    return DensityMatrix(tuple(region), reduced_density_amplitudes(state.amplitudes, region, state.n_sites))


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Trace ``rho`` over ``rho.region`` minus ``keep``; ``keep`` order is preserved."""
    keep = [int(s) for s in keep]
    if len(set(keep)) != len(keep) or not set(keep) <= set(rho.region):
        raise UsageError(f"{keep} is not a subset of region {rho.region}")
    m = len(rho.region)
    pos = [rho.region.index(s) for s in keep]
    traced = [p for p in range(m) if p not in pos]
    t = rho.matrix.reshape((2,) * (2 * m))
    # row axes 0..m-1, column axes m..2m-1; contract each traced pair
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:m])
    cols = list(letters[m:2 * m])
    for p in traced:
        cols[p] = rows[p]
    out_spec = "".join(rows[p] for p in pos) + "".join(cols[p] for p in pos)
    red = np.einsum("".join(rows) + "".join(cols) + "->" + out_spec, t)
    k = len(keep)
    return DensityMatrix(tuple(keep), red.reshape(1 << k, 1 << k))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Trace norm of ``a - b`` (sum of singular values)."""
    return float(np.linalg.svd(a - b, compute_uv=False).sum())


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2."""
    if a.lattice != b.lattice:
        raise UsageError("fidelity between states on different lattices")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2))


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over φ of ||a - e^{iφ} b|| for normalised vectors."""
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a - phase * b))
