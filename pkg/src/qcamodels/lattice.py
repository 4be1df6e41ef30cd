"""Finite periodic lattices and neighbourhood schemes.

Sites are numbered by their lexicographic (row-major) coordinate order:
in 2-D the last axis varies fastest. A site's linear index is also its bit
position in a basis-state index.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from ._validation import check_site_cap
from .exceptions import ConfigurationError, UsageError


def _as_coords(x, dim: int) -> tuple[int, ...]:
    if isinstance(x, (int, np.integer)):
        if dim != 1:
            raise UsageError(f"integer site given for a {dim}-D lattice")
        return (int(x),)
    coords = tuple(int(c) for c in x)
    if len(coords) != dim:
        raise UsageError(f"site {x!r} does not have {dim} coordinates")
    return coords


@dataclass(frozen=True)
class Lattice:
    """A finite lattice with periodic boundaries.

    Parameters
    ----------
    extents : tuple of int
        Site count along each axis (one or two axes).
    """

    extents: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(int(e) for e in np.atleast_1d(self.extents))
        object.__setattr__(self, "extents", ext)
        if len(ext) not in (1, 2):
            raise ConfigurationError(f"lattice dimension must be 1 or 2, got {len(ext)}")
        if any(e < 1 for e in ext):
            raise ConfigurationError(f"lattice extents must be positive, got {ext}")

    @classmethod
    def ring(cls, n: int) -> "Lattice":
        return cls((n,))

    @property
    def dimension(self) -> int:
        return len(self.extents)

    @property
    def n_sites(self) -> int:
        return prod(self.extents)

    def check_cap(self, cap: int | None = None, what: str = "simulation") -> None:
        check_site_cap(self.n_sites, cap, what)

    def wrap(self, coords) -> tuple[int, ...]:
        return tuple(c % e for c, e in zip(_as_coords(coords, self.dimension), self.extents))

    def index(self, site) -> int:
        """Linear index of ``site`` (coordinates are wrapped periodically)."""
        coords = self.wrap(site)
        idx = 0
        for c, e in zip(coords, self.extents):
            idx = idx * e + c
        return idx

    def coords(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.n_sites:
            raise UsageError(f"site index {index} outside lattice of {self.n_sites} sites")
        out = []
        for e in reversed(self.extents):
            out.append(index % e)
            index //= e
        return tuple(reversed(out))

    def all_coords(self) -> list[tuple[int, ...]]:
        return [self.coords(i) for i in range(self.n_sites)]

    def shift_map(self, shift) -> np.ndarray:
        """Array ``m`` with ``m[i]`` the index of site ``i`` translated by ``shift``."""
        vec = _as_coords(shift, self.dimension)
        return np.array(
            [self.index(tuple(c + v for c, v in zip(self.coords(i), vec))) for i in range(self.n_sites)]
        )

    def displacement(self, i: int, j: int) -> tuple[int, ...]:
        """Minimal periodic displacement from site ``i`` to site ``j``."""
        out = []
        for a, b, e in zip(self.coords(i), self.coords(j), self.extents):
            d = (b - a) % e
            if d > e // 2:
                d -= e
            out.append(d)
        return tuple(out)

    def distance(self, i: int, j: int) -> int:
        """Periodic Chebyshev distance between two sites."""
        return max(abs(d) for d in self.displacement(i, j))

    def ball(self, centre: int, radius: int) -> list[int]:
        return [j for j in range(self.n_sites) if self.distance(centre, j) <= radius]


@dataclass(frozen=True)
class NeighbourhoodScheme:
    """Finite set of offsets, always containing the zero vector."""

    offsets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        offs = []
        for o in self.offsets:
            o = tuple(int(c) for c in np.atleast_1d(o))
            if o not in offs:
                offs.append(o)
        if not offs:
            raise ConfigurationError("neighbourhood scheme needs at least the zero offset")
        dims = {len(o) for o in offs}
        if len(dims) != 1:
            raise ConfigurationError("neighbourhood offsets have inconsistent dimensions")
        zero = (0,) * dims.pop()
        if zero not in offs:
            raise ConfigurationError("neighbourhood scheme must contain the zero vector")
        object.__setattr__(self, "offsets", tuple(sorted(offs)))

    @classmethod
    def nearest(cls, dimension: int = 1) -> "NeighbourhoodScheme":
        """Von Neumann neighbourhood of radius one."""
        offs = [(0,) * dimension]
        for axis in range(dimension):
            for s in (-1, 1):
                o = [0] * dimension
                o[axis] = s
                offs.append(tuple(o))
        return cls(tuple(offs))

    @classmethod
    def box(cls, radii: Sequence[int]) -> "NeighbourhoodScheme":
        ranges = [range(-r, r + 1) for r in radii]
        return cls(tuple(itertools.product(*ranges)))

    @property
    def dimension(self) -> int:
        return len(self.offsets[0])

    @property
    def radius(self) -> int:
        return max(max(abs(c) for c in o) for o in self.offsets)

    @property
    def is_symmetric(self) -> bool:
        return all(tuple(-c for c in o) in self.offsets for o in self.offsets)

    def neighbourhood(self, lattice: Lattice, site: int) -> list[int]:
        """Sites of 𝒩(x) = x + offsets, wrapped and de-duplicated, in offset order."""
        if self.dimension != lattice.dimension:
            raise UsageError("neighbourhood and lattice dimensions differ")
        base = lattice.coords(site)
        out = []
        for o in self.offsets:
            j = lattice.index(tuple(b + c for b, c in zip(base, o)))
            if j not in out:
                out.append(j)
        return out

    def neighbours(self, lattice: Lattice, site: int) -> list[int]:
        """𝒩(x) without ``x`` itself."""
        return [j for j in self.neighbourhood(lattice, site) if j != site]

    def region(self, lattice: Lattice, sites: Iterable[int]) -> list[int]:
        """𝒩(A), the union of the neighbourhoods of ``sites``."""
        out: set[int] = set()
        for s in sites:
            out.update(self.neighbourhood(lattice, s))
        return sorted(out)

    def bonds(self, lattice: Lattice) -> list[tuple[int, int]]:
        """Unordered adjacent pairs, each counted once.

        Each pair ``(x, y)`` is oriented so that ``y = x + o`` for an offset
        ``o`` that is lexicographically positive, when such an offset exists.
        """
        seen: set[frozenset] = set()
        out = []
        zero = (0,) * self.dimension
        positive = [o for o in self.offsets if o > zero]
        negative = [o for o in self.offsets if o < zero]
        for group in (positive, negative):
            for x in range(lattice.n_sites):
                base = lattice.coords(x)
                for o in group:
                    y = lattice.index(tuple(b + c for b, c in zip(base, o)))
                    key = frozenset((x, y))
                    if x == y or key in seen:
                        continue
                    seen.add(key)
                    out.append((x, y) if group is positive else (y, x))
        return out
