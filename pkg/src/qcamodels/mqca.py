"""Margolus QCA: two staggered block tilings, one block unitary per tiling."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import prod

import numpy as np

from ._validation import UNITARY_TOL, unitarity_deviation
from .base import QCAModel, check_lattice, lcm
from .exceptions import ConfigurationError, UsageError
from .lattice import Lattice
from .state import apply_operator

#: Example-1 walk gate: identity on |00>, |11>; a square root of SWAP on the
#: single-particle subspace.
WALK_MATRIX = np.array(
    [
        [1, 0, 0, 0],
        [0, (1 + 1j) / 2, (-1 + 1j) / 2, 0],
        [0, (-1 + 1j) / 2, (1 + 1j) / 2, 0],
        [0, 0, 0, 1],
    ],
    dtype=complex,
)

SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class Tiling:
    """Rectangular blocks of ``block_shape`` anchored at ``offset + j * block_shape``.

    Sites inside a block are ordered lexicographically by their unwrapped
    coordinates relative to the anchor, so a block that wraps around the
    boundary keeps its left-to-right orientation.
    """

    block_shape: tuple[int, ...]
    offset: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "block_shape", tuple(int(b) for b in np.atleast_1d(self.block_shape)))
        object.__setattr__(self, "offset", tuple(int(o) for o in np.atleast_1d(self.offset)))
        if len(self.block_shape) != len(self.offset):
            raise ConfigurationError("tiling block_shape and offset have different dimensions")
        if any(b < 1 for b in self.block_shape):
            raise ConfigurationError(f"block extents must be positive, got {self.block_shape}")

    @property
    def block_size(self) -> int:
        return prod(self.block_shape)

    def check(self, lattice: Lattice) -> None:
        if len(self.block_shape) != lattice.dimension:
            raise ConfigurationError("tiling and lattice dimensions differ")
        for b, e in zip(self.block_shape, lattice.extents):
            if e % b:
                raise ConfigurationError(f"lattice extent {e} is not divisible by block extent {b}")

    def anchors(self, lattice: Lattice) -> list[tuple[int, ...]]:
        self.check(lattice)
        ranges = [range(o, o + e, b) for o, e, b in zip(self.offset, lattice.extents, self.block_shape)]
        return list(itertools.product(*ranges))

    def block_at(self, lattice: Lattice, anchor) -> list[int]:
        local = itertools.product(*[range(b) for b in self.block_shape])
        return [lattice.index(tuple(a + d for a, d in zip(anchor, loc))) for loc in local]

    def blocks(self, lattice: Lattice) -> list[list[int]]:
        return [self.block_at(lattice, a) for a in self.anchors(lattice)]


@dataclass
class ValidationReport:
    checks: dict[str, tuple[bool, str]] = field(default_factory=dict)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.checks[name] = (bool(ok), detail)

    @property
    def passed(self) -> bool:
        return all(ok for ok, _ in self.checks.values())

    def failures(self) -> list[str]:
        return [f"{name}: {detail}" for name, (ok, detail) in self.checks.items() if not ok]

    def __str__(self):
        return "\n".join(f"{name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip()
                         for name, (ok, detail) in self.checks.items())


def _tiling_report(report: ValidationReport, tag: str, lattice: Lattice, tiling: Tiling) -> list[list[int]] | None:
    try:
        blocks = tiling.blocks(lattice)
    except ConfigurationError as exc:
        for clause in ("disjoint", "cover", "uniform"):
            report.add(f"{tag}.{clause}", False, str(exc))
        return None
    counts = np.zeros(lattice.n_sites, dtype=int)
    for blk in blocks:
        counts[blk] += 1
    # a block folding onto itself (block longer than the lattice) also breaks disjointness
    report.add(f"{tag}.disjoint", counts.max() <= 1 and all(len(set(b)) == len(b) for b in blocks),
               f"max multiplicity {counts.max()}")
    report.add(f"{tag}.cover", counts.min() >= 1, f"{int((counts == 0).sum())} uncovered sites")
    report.add(f"{tag}.uniform", len({len(b) for b in blocks}) == 1, "anchors on a sublattice")
    return blocks


def validate(m: "MargolusQCA") -> ValidationReport:
    """Report every structural clause of the Margolus definition separately."""
    report = ValidationReport()
    lattice = check_lattice(m.lattice)
    blocks = {}
    for tag, tiling in (("tiling_a", m.tiling_a), ("tiling_b", m.tiling_b)):
        blocks[tag] = _tiling_report(report, tag, lattice, tiling)
    for tag, u, tiling in (("u_a", m.u_a, m.tiling_a), ("u_b", m.u_b, m.tiling_b)):
        u = np.asarray(u, dtype=complex)
        shape_ok = u.shape == (1 << tiling.block_size,) * 2
        report.add(f"{tag}.arity", shape_ok, f"shape {u.shape} for {tiling.block_size}-site blocks")
        dev = unitarity_deviation(u) if u.ndim == 2 and u.shape[0] == u.shape[1] else np.inf
        report.add(f"{tag}.unitary", dev <= UNITARY_TOL, f"deviation {dev:.3g}")
    if blocks["tiling_a"] is not None and blocks["tiling_b"] is not None:
        worst = np.inf
        for one, other in (("tiling_a", "tiling_b"), ("tiling_b", "tiling_a")):
            for blk in blocks[one]:
                hits = sum(1 for o in blocks[other] if set(o) & set(blk))
                worst = min(worst, hits)
        report.add("overlap", worst >= 2, f"minimum overlapping blocks {worst}")
    else:
        report.add("overlap", False, "tilings invalid")
    return report


class MargolusQCA(QCAModel):
    """Margolus quantum cellular automaton.

    One step applies ``u_a`` to every block of ``tiling_a`` and then ``u_b``
    to every block of ``tiling_b``.

    Parameters
    ----------
    lattice : Lattice or tuple of int
    tiling_a, tiling_b : Tiling
    u_a, u_b : array-like
        Block unitaries; the first site of a block is the most significant bit.
    n_steps : int, default=1
        Steps applied by ``transform``.
    strict : bool, default=True
        When False, ``fit`` accepts non-unitary block matrices (they are
        still reported by ``validate``); used to inspect corrupted models.

    Attributes
    ----------
    lattice_ : Lattice
    blocks_a_, blocks_b_ : list of list of int
    """

    def __init__(self, lattice, tiling_a, tiling_b, u_a, u_b, n_steps=1, strict=True):
        self.lattice = lattice
        self.tiling_a = tiling_a
        self.tiling_b = tiling_b
        self.u_a = u_a
        self.u_b = u_b
        self.n_steps = n_steps
        self.strict = strict

    def validate(self) -> ValidationReport:
        return validate(self)

    def _fit(self):
        report = self.validate()
        failures = [f for f in report.failures() if self.strict or ".unitary" not in f.split(":")[0]]
        if failures:
            raise UsageError("invalid Margolus QCA: " + "; ".join(failures))
        self.lattice_ = check_lattice(self.lattice)
        self.lattice_.check_cap()
        self.blocks_a_ = self.tiling_a.blocks(self.lattice_)
        self.blocks_b_ = self.tiling_b.blocks(self.lattice_)
        self.u_a_ = np.asarray(self.u_a, dtype=complex)
        self.u_b_ = np.asarray(self.u_b, dtype=complex)

    def _apply_tiling(self, amps, u, blocks):
        n = self.lattice_.n_sites
        for blk in blocks:
            amps = apply_operator(amps, u, blk, n)
        return amps

    def _step(self, amps):
        amps = self._apply_tiling(amps, self.u_a_, self.blocks_a_)
        return self._apply_tiling(amps, self.u_b_, self.blocks_b_)

    def half_step(self, state, tiling: str = "a"):
        """Apply only one tiling's layer (``"a"`` or ``"b"``)."""
        from .state import StateVector

        self._ensure_fitted()
        self._check_state(state)
        u, blocks = (self.u_a_, self.blocks_a_) if tiling == "a" else (self.u_b_, self.blocks_b_)
        return StateVector(self._apply_tiling(state.amplitudes, u, blocks), self.lattice_)

    @property
    def period_(self) -> tuple[int, ...]:
        return tuple(lcm(a, b) for a, b in zip(self.tiling_a.block_shape, self.tiling_b.block_shape))

    def _influence_sets(self):
        return [[set(b) for b in self.blocks_a_], [set(b) for b in self.blocks_b_]]


def step(m: MargolusQCA, state):
    return m.step(state)


def run(m: MargolusQCA, state, steps: int) -> np.ndarray:
    return m.run(state, steps)


def walk_example(n: int) -> MargolusQCA:
    """Multi-particle quantum walk on a ring of ``n`` sites (``n`` even, >= 4)."""
    if n % 2 or n < 4:
        raise ConfigurationError(f"walk ring size must be even and at least 4, got {n}")
    return MargolusQCA(
        Lattice((n,)),
        Tiling((2,), (0,)),
        Tiling((2,), (1,)),
        WALK_MATRIX.copy(),
        WALK_MATRIX.copy(),
    )


def exchange_matrix(k: int) -> np.ndarray:
    """Block unitary swapping the first two of ``k`` sites."""
    return np.kron(SWAP, np.eye(1 << (k - 2), dtype=complex)) if k > 2 else SWAP.copy()


def pqca_from_cell_unitary(u, n_cells: int = 4) -> MargolusQCA:
    """Partitioned QCA as a Margolus QCA.

    Each cell holds ``k`` subcells (``u`` is a ``2**k`` unitary, ``k >= 2``).
    The first tiling applies ``u`` to every cell; the second exchanges each
    cell's last subcell with the first subcell of the cell to its right.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ConfigurationError("cell unitary must be square")
    k = u.shape[0].bit_length() - 1
    if (1 << k) != u.shape[0] or k < 2:
        raise ConfigurationError(f"cell unitary must act on at least two subcells, got shape {u.shape}")
    if n_cells < 2:
        raise ConfigurationError("a partitioned QCA needs at least two cells")
    return MargolusQCA(
        Lattice((k * n_cells,)),
        Tiling((k,), (0,)),
        Tiling((k,), (k - 1,)),
        u,
        exchange_matrix(k),
    )
