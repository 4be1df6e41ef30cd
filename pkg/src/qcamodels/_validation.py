"""Input validation helpers shared by the model estimators."""
from __future__ import annotations

import os

import numpy as np

from .exceptions import ConfigurationError, ResourceError, UsageError

DEFAULT_MAX_QUBITS = 24
UNITARY_TOL = 1e-10


def max_qubits() -> int:
    """Site cap, overridable through ``QCA_MAX_QUBITS``."""
    raw = os.environ.get("QCA_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigurationError(f"QCA_MAX_QUBITS must be an integer, got {raw!r}")
    if cap < 1:
        raise ConfigurationError("QCA_MAX_QUBITS must be positive")
    return cap


def check_site_cap(n_sites: int, cap: int | None = None, what: str = "simulation") -> None:
    cap = max_qubits() if cap is None else cap
    if n_sites > cap:
        raise ResourceError(f"{what} needs {n_sites} qubits, cap is {cap}")


def unitarity_deviation(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def hermiticity_deviation(h: np.ndarray) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0


def _square_power_of_two(m: np.ndarray, name: str) -> int:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"{name} must be a square matrix, got shape {m.shape}")
    dim = m.shape[0]
    k = dim.bit_length() - 1
    if dim < 2 or (1 << k) != dim:
        raise ConfigurationError(f"{name} dimension {dim} is not a power of two")
    return k


def check_unitary(u, name: str = "matrix", tol: float = UNITARY_TOL, arity: int | None = None) -> np.ndarray:
    """Return ``u`` as a complex array after checking it is a qubit unitary.

    Parameters
    ----------
    u : array-like of shape (2**k, 2**k)
    arity : int, optional
        Expected number of sites ``k``.
    """
    m = np.asarray(u, dtype=complex)
    k = _square_power_of_two(m, name)
    if arity is not None and k != arity:
        raise ConfigurationError(f"{name} acts on {k} sites, expected {arity}")
    dev = unitarity_deviation(m)
    if dev > tol:
        raise ConfigurationError(f"{name} is not unitary (max |U^dag U - I| = {dev:.3g})")
    return m


def check_hermitian(h, name: str = "matrix", tol: float = UNITARY_TOL, arity: int | None = None) -> np.ndarray:
    m = np.asarray(h, dtype=complex)
    k = _square_power_of_two(m, name)
    if arity is not None and k != arity:
        raise ConfigurationError(f"{name} acts on {k} sites, expected {arity}")
    dev = hermiticity_deviation(m)
    if dev > tol:
        raise ConfigurationError(f"{name} is not Hermitian (max |H - H^dag| = {dev:.3g})")
    return m


def check_amplitudes(X, n_sites: int) -> tuple[np.ndarray, bool]:
    """Coerce a single state or a batch of states to a 2-D complex array.

    Returns the array and whether the input was a single 1-D state.
    """
    arr = np.asarray(X, dtype=complex)
    single = arr.ndim == 1
    if single:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != 1 << n_sites:
        raise UsageError(f"expected amplitudes of length {1 << n_sites}, got shape {np.shape(X)}")
    norms = np.linalg.norm(arr, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise UsageError("state vectors must be normalised to 1 within 1e-10")
    return arr, single
