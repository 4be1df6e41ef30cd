"""Estimator base class shared by every lattice model.

Models follow the scikit-learn conventions: constructor arguments are
stored verbatim and exposed through ``get_params``; ``fit`` validates them
and builds derived attributes (trailing underscore); ``transform`` maps a
batch of amplitude vectors to their evolved images after ``n_steps`` steps.
"""
from __future__ import annotations

from functools import reduce
from math import gcd

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_amplitudes
from .exceptions import UsageError
from .lattice import Lattice
from .state import StateVector, site_probabilities


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // gcd(a, b), values, 1)


class QCAModel(TransformerMixin, BaseEstimator):
    """Common fit/transform plumbing; subclasses implement ``_fit`` and ``_step``."""

    def fit(self, X=None, y=None):
        """Validate the parameters and precompute the step operator pieces.

        ``X`` and ``y`` are ignored; they exist for pipeline compatibility.
        """
        self._fit()
        self.n_sites_ = self.lattice_.n_sites
        return self

    def _fit(self):  # pragma: no cover - abstract
        raise NotImplementedError

    def _step(self, amps: np.ndarray) -> np.ndarray:  # pragma: no cover - abstract
        """One step on a ``(batch, 2**N)`` array."""
        raise NotImplementedError

    def _ensure_fitted(self):
        if not hasattr(self, "lattice_"):
            self.fit()

    def _check_state(self, state: StateVector) -> None:
        if state.lattice != self.lattice_:
            raise UsageError(f"state lattice {state.lattice.extents} differs from model lattice {self.lattice_.extents}")

    def transform(self, X):
        """Evolve each row of ``X`` by ``n_steps`` steps.

        Parameters
        ----------
        X : array-like of shape (n_states, 2**N) or (2**N,)
            Normalised complex amplitude vectors.

        Returns
        -------
        ndarray of the same shape as ``X``.
        """
        check_is_fitted(self, "lattice_")
        amps, single = check_amplitudes(X, self.lattice_.n_sites)
        for _ in range(int(self.n_steps)):
            amps = self._step(amps)
        return amps[0] if single else amps

    def step(self, state: StateVector) -> StateVector:
        self._ensure_fitted()
        self._check_state(state)
        return StateVector(self._step(state.amplitudes[np.newaxis, :])[0], self.lattice_)

    def evolve(self, state: StateVector, steps: int) -> StateVector:
        self._ensure_fitted()
        self._check_state(state)
        amps = state.amplitudes[np.newaxis, :]
        for _ in range(int(steps)):
            amps = self._step(amps)
        return StateVector(amps[0], self.lattice_)

    def run(self, state: StateVector, steps: int) -> np.ndarray:
        """Per-site |1> probabilities for steps ``0..steps``, shape ``(steps + 1, N)``."""
        if steps < 0:
            raise UsageError("steps must be non-negative")
        return site_probabilities(self.trajectory(state, steps), self.lattice_.n_sites)

    def trajectory(self, state: StateVector, steps: int) -> np.ndarray:
        """Amplitudes for steps ``0..steps``, shape ``(steps + 1, 2**N)``."""
        self._ensure_fitted()
        self._check_state(state)
        rows = [state.amplitudes]
        amps = state.amplitudes[np.newaxis, :]
        for _ in range(int(steps)):
            amps = self._step(amps)
            rows.append(amps[0])
        return np.array(rows)

    def global_operator(self) -> np.ndarray:
        """Dense one-step unitary; column ``j`` is the image of basis state ``j``."""
        self._ensure_fitted()
        return self._step(np.eye(1 << self.lattice_.n_sites, dtype=complex)).T

    # translation / causality metadata used by the verifier

    @property
    def period_(self) -> tuple[int, ...]:  # pragma: no cover - abstract
        raise NotImplementedError

    def _influence_sets(self) -> list[list[set[int]]]:  # pragma: no cover - abstract
        """Time-ordered layers of gate supports (site sets) for one step."""
        raise NotImplementedError

    def light_cone(self, site: int) -> set[int]:
        """Sites whose one-step marginals may depend on the input at ``site``."""
        self._ensure_fitted()
        reach = {int(site)}
        for layer in self._influence_sets():
            grown = set(reach)
            for support in layer:
                if support & reach:
                    grown |= support
            reach = grown
        return reach

    def light_cone_radius(self) -> int:
        """Largest periodic distance covered by any site's one-step light cone."""
        self._ensure_fitted()
        lat = self.lattice_
        return max(
            (max(lat.distance(x, y) for y in self.light_cone(x)) for x in range(lat.n_sites)),
            default=0,
        )


def check_lattice(lattice) -> Lattice:
    if isinstance(lattice, Lattice):
        return lattice
    return Lattice(tuple(np.atleast_1d(lattice)))
