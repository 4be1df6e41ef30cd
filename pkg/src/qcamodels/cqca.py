"""Coloured QCA: periodic colourings and field-controlled single-site gates.

Field control is coherent. A gate on a target site is conditioned on the
number of neighbours of each colour found in the counted eigenstate of the
control observable; for the default Pauli-Z observable that is the
computational value |1>. The induced operator is the projector sum
``sum_cfg P_cfg ⊗ (gate if cfg satisfies the condition else I)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ._validation import UNITARY_TOL, check_unitary
from .base import QCAModel, check_lattice
from .exceptions import ConfigurationError, UsageError
from .lattice import Lattice, NeighbourhoodScheme
from .state import StateVector, apply_operator

PAULI_Z = np.diag([1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class Colouring:
    """Periodic colouring given by a repeating ``pattern`` block.

    ``pattern`` has one axis per lattice axis; its shape is the period.
    """

    pattern: np.ndarray
    palette_size: int

    def __post_init__(self):
        pat = np.array(self.pattern, dtype=int)
        if pat.ndim == 0:
            pat = pat.reshape(1)
        object.__setattr__(self, "pattern", pat)
        object.__setattr__(self, "palette_size", int(self.palette_size))
        if pat.size == 0 or pat.min() < 0 or pat.max() >= self.palette_size:
            raise ConfigurationError(f"colouring pattern uses colours outside 0..{self.palette_size - 1}")

    def __eq__(self, other):
        return (isinstance(other, Colouring) and self.palette_size == other.palette_size
                and self.pattern.shape == other.pattern.shape and np.array_equal(self.pattern, other.pattern))

    def __hash__(self):
        return hash((self.palette_size, self.pattern.shape, self.pattern.tobytes()))

    @classmethod
    def uniform(cls, dimension: int = 1) -> "Colouring":
        return cls(np.zeros((1,) * dimension, dtype=int), 1)

    @property
    def period(self) -> tuple[int, ...]:
        return self.pattern.shape

    def check(self, lattice: Lattice) -> None:
        if self.pattern.ndim != lattice.dimension:
            raise ConfigurationError("colouring pattern and lattice dimensions differ")
        for p, e in zip(self.period, lattice.extents):
            if e % p:
                raise ConfigurationError(f"colour period {p} does not divide lattice extent {e}")

    def colour(self, lattice: Lattice, site: int) -> int:
        coords = lattice.coords(site)
        return int(self.pattern[tuple(c % p for c, p in zip(coords, self.period))])

    def colours(self, lattice: Lattice) -> np.ndarray:
        self.check(lattice)
        return np.array([self.colour(lattice, i) for i in range(lattice.n_sites)])

    def conflicts(self, lattice: Lattice, neighbourhood: NeighbourhoodScheme) -> list[tuple[int, int]]:
        """Adjacent site pairs sharing a colour."""
        cols = self.colours(lattice)
        return [(x, y) for x in range(lattice.n_sites) for y in neighbourhood.neighbours(lattice, x)
                if cols[x] == cols[y]]

    def is_proper(self, lattice: Lattice, neighbourhood: NeighbourhoodScheme) -> bool:
        return not self.conflicts(lattice, neighbourhood)


@dataclass(frozen=True)
class FieldCondition:
    """Per-colour predicates on the number of counted neighbours.

    ``predicates`` maps a colour to the set of admissible counts; colours not
    listed are unconstrained. An empty mapping is the ``"any"`` condition.
    """

    predicates: Mapping[int, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        clean = {int(c): frozenset(int(v) for v in vals) for c, vals in dict(self.predicates).items()}
        object.__setattr__(self, "predicates", clean)

    def __hash__(self):
        return hash(tuple(sorted(self.predicates.items())))

    @classmethod
    def any(cls) -> "FieldCondition":
        return cls({})

    @property
    def is_any(self) -> bool:
        return not self.predicates

    def constrains(self, colour: int, available: int) -> bool:
        """Whether the predicate on ``colour`` rules out some count in ``0..available``."""
        allowed = self.predicates.get(colour)
        return allowed is not None and not set(range(available + 1)) <= allowed

    def satisfied(self, counts: Mapping[int, int]) -> bool:
        return all(counts.get(c, 0) in allowed for c, allowed in self.predicates.items())


@dataclass(frozen=True, eq=False)
class FieldControlledUnitary:
    """Single-site ``gate`` applied to every site of ``target_colour`` whose
    neighbourhood satisfies ``condition``."""

    target_colour: int
    condition: FieldCondition
    gate: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "target_colour", int(self.target_colour))
        if isinstance(self.condition, Mapping):
            object.__setattr__(self, "condition", FieldCondition(self.condition))
        elif self.condition is None or self.condition == "any":
            object.__setattr__(self, "condition", FieldCondition.any())
        object.__setattr__(self, "gate", check_unitary(self.gate, "field-controlled gate", UNITARY_TOL, arity=1))


@dataclass
class _CompiledGate:
    support: list[int]  # controls..., target
    matrix: np.ndarray


def _observable_basis(sigma) -> np.ndarray:
    """Unitary whose columns are the (+1, -1) eigenvectors of ``sigma``."""
    s = np.asarray(sigma, dtype=complex)
    if s.shape != (2, 2) or np.max(np.abs(s - s.conj().T)) > 1e-10 or np.max(np.abs(s @ s - np.eye(2))) > 1e-10:
        raise ConfigurationError("control observable must be a Hermitian involution on one qubit")
    vals, vecs = np.linalg.eigh(s)
    if not np.allclose(sorted(vals), [-1, 1], atol=1e-10):
        raise ConfigurationError("control observable must have eigenvalues +1 and -1")
    return vecs[:, ::-1]  # eigh sorts ascending: put +1 first


class ColouredQCA(QCAModel):
    """Coloured quantum cellular automaton.

    Parameters
    ----------
    lattice : Lattice or tuple of int
    neighbourhood : NeighbourhoodScheme
    colouring : Colouring
        Must be proper with respect to ``neighbourhood``.
    schedule : list of FieldControlledUnitary
        Applied in order; one step is one pass over the schedule.
    sigma : array-like of shape (2, 2), optional
        Control observable (Hermitian involution). Defaults to Pauli-Z; a
        neighbour counts towards its colour's field when it is in the -1
        eigenstate, i.e. in |1> for Pauli-Z.
    n_steps : int, default=1
    """

    def __init__(self, lattice, neighbourhood, colouring, schedule=(), sigma=None, n_steps=1):
        self.lattice = lattice
        self.neighbourhood = neighbourhood
        self.colouring = colouring
        self.schedule = schedule
        self.sigma = sigma
        self.n_steps = n_steps

    def _fit(self):
        lat = check_lattice(self.lattice)
        lat.check_cap()
        self.colouring.check(lat)
        bad = self.colouring.conflicts(lat, self.neighbourhood)
        if bad:
            x, y = bad[0]
            raise UsageError(f"colouring is not proper: adjacent sites {x} and {y} share colour")
        self.lattice_ = lat
        self.colours_ = self.colouring.colours(lat)
        basis = _observable_basis(PAULI_Z if self.sigma is None else self.sigma)
        self.control_basis_ = None if np.allclose(basis, np.eye(2)) else basis
        self.compiled_ = [self._compile(op) for op in self.schedule]

    def targets(self, colour: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.colours_ == colour)]

    def _compile(self, op: FieldControlledUnitary) -> list[_CompiledGate]:
        if not 0 <= op.target_colour < self.colouring.palette_size:
            raise UsageError(f"target colour {op.target_colour} not in palette")
        for c in op.condition.predicates:
            if not 0 <= c < self.colouring.palette_size:
                raise ConfigurationError(f"condition references colour {c} outside the palette")
            if c == op.target_colour:
                raise ConfigurationError("a condition may not reference the target's own colour")
        out = []
        for x in self.targets(op.target_colour):
            neigh = self.neighbourhood.neighbours(self.lattice_, x)
            per_colour: dict[int, int] = {}
            for y in neigh:
                per_colour[self.colours_[y]] = per_colour.get(self.colours_[y], 0) + 1
            controls = [y for y in neigh if op.condition.constrains(self.colours_[y], per_colour[self.colours_[y]])]
            out.append(_CompiledGate(controls + [x], self._local_matrix(op, controls)))
        return out

    def _local_matrix(self, op: FieldControlledUnitary, controls: list[int]) -> np.ndarray:
        m = len(controls)
        ctrl_colours = [int(self.colours_[y]) for y in controls]
        mat = np.zeros((2 << m, 2 << m), dtype=complex)
        for cfg in range(1 << m):
            counts: dict[int, int] = {}
            for pos, col in enumerate(ctrl_colours):
                if (cfg >> (m - 1 - pos)) & 1:
                    counts[col] = counts.get(col, 0) + 1
            block = op.gate if op.condition.satisfied(counts) else np.eye(2)
            mat[2 * cfg:2 * cfg + 2, 2 * cfg:2 * cfg + 2] = block
        if self.control_basis_ is not None and m:
            v = np.eye(1, dtype=complex)
            for _ in range(m):
                v = np.kron(v, self.control_basis_)
            v = np.kron(v, np.eye(2))
            mat = v @ mat @ v.conj().T
        return mat

    def _apply_compiled(self, amps, gates):
        n = self.lattice_.n_sites
        for g in gates:
            amps = apply_operator(amps, g.matrix, g.support, n)
        return amps

    def _step(self, amps):
        for gates in self.compiled_:
            amps = self._apply_compiled(amps, gates)
        return amps

    def substep(self, state: StateVector, op: FieldControlledUnitary) -> StateVector:
        """Apply one field-controlled unitary to every site of its colour."""
        self._ensure_fitted()
        self._check_state(state)
        return StateVector(self._apply_compiled(state.amplitudes, self._compile(op)), self.lattice_)

    @property
    def period_(self) -> tuple[int, ...]:
        return self.colouring.period

    def _influence_sets(self):
        return [[set(g.support) for g in gates] for gates in self.compiled_]


def substep(c: ColouredQCA, state: StateVector, op: FieldControlledUnitary) -> StateVector:
    return c.substep(state, op)


def step(c: ColouredQCA, state: StateVector) -> StateVector:
    return c.step(state)


def walk_cqca_example(n: int) -> ColouredQCA:
    """Four-colour ring reproducing the Margolus walk, compiled from it."""
    from .mqca import walk_example
    from .transpile import mqca_to_cqca

    if n % 4 or n < 4:
        raise ConfigurationError(f"walk CQCA ring size must be a positive multiple of 4, got {n}")
    return mqca_to_cqca(walk_example(n))


def _rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def walk_cqca_literal(n: int) -> ColouredQCA:
    """The z-rotation sequence written out in the walk construction, verbatim.

    For each colour pair (p, q) in (0, 1), (2, 3), (1, 2), (3, 0): a pi
    z-rotation on q conditioned on its p neighbour being |1>, a pi/2
    z-rotation on p conditioned on q, then the pi rotation on q again. All
    gates are diagonal, so this does *not* reproduce the walk; it is kept
    for experimentation.
    """
    if n % 4 or n < 4:
        raise ConfigurationError(f"walk CQCA ring size must be a positive multiple of 4, got {n}")
    schedule = []
    for p, q in ((0, 1), (2, 3), (1, 2), (3, 0)):
        schedule += [
            FieldControlledUnitary(q, FieldCondition({p: {1}}), _rz(np.pi)),
            FieldControlledUnitary(p, FieldCondition({q: {1}}), _rz(np.pi / 2)),
            FieldControlledUnitary(q, FieldCondition({p: {1}}), _rz(np.pi)),
        ]
    return ColouredQCA(Lattice((n,)), NeighbourhoodScheme.nearest(1), Colouring(np.arange(4), 4), schedule)
