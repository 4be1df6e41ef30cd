"""Continuous-time QCA: colour-dependent pair couplings, exact and Trotter evolution.

Units have hbar = 1 and evolution over time ``t`` is ``exp(-i H t)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_hermitian, check_site_cap
from .base import QCAModel, check_lattice, lcm
from .cqca import Colouring
from .exceptions import ConfigurationError, UsageError
from .lattice import Lattice, NeighbourhoodScheme
from .mqca import SWAP
from .state import StateVector, apply_operator, embed_operator

DENSE_CAP = 14

SIGMA_PLUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|, raises 0 -> 1
SIGMA_MINUS = SIGMA_PLUS.conj().T

#: |01><10| + |10><01|: exchanges a single excitation between the two sites.
FLIP_FLOP = np.kron(SIGMA_PLUS, SIGMA_MINUS) + np.kron(SIGMA_MINUS, SIGMA_PLUS)
#: |11><00| + |00><11|: the literal sigma+ sigma+ + sigma- sigma- form.
PAIR_CREATION = np.kron(SIGMA_PLUS, SIGMA_PLUS) + np.kron(SIGMA_MINUS, SIGMA_MINUS)


def _pair_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True, eq=False)
class CouplingMap:
    """Colour-pair two-site terms and optional per-colour on-site terms.

    ``couplings`` maps a colour pair ``(i, j)`` to a 4x4 Hermitian matrix
    whose first factor acts on the colour-``i`` site. Pairs are stored with
    ``i <= j`` (a reversed key is re-oriented by conjugating with SWAP); a
    same-colour term must be swap-symmetric.
    """

    colouring: Colouring
    neighbourhood: NeighbourhoodScheme
    couplings: dict = field(default_factory=dict)
    onsite: dict = field(default_factory=dict)

    def __post_init__(self):
        norm = {}
        for (a, b), h in dict(self.couplings).items():
            a, b = int(a), int(b)
            h = check_hermitian(h, f"coupling {(a, b)}", arity=2)
            if a > b:
                h = SWAP @ h @ SWAP
            key = _pair_key(a, b)
            if a == b and np.max(np.abs(SWAP @ h @ SWAP - h)) > 1e-10:
                raise ConfigurationError(f"same-colour coupling {key} must be symmetric under site exchange")
            if key in norm:
                raise ConfigurationError(f"coupling for colour pair {key} given twice")
            norm[key] = h
        for key in norm:
            if max(key) >= self.colouring.palette_size:
                raise ConfigurationError(f"coupling {key} references a colour outside the palette")
        on = {}
        for c, h in dict(self.onsite).items():
            c = int(c)
            if not 0 <= c < self.colouring.palette_size:
                raise ConfigurationError(f"on-site term for colour {c} outside the palette")
            on[c] = check_hermitian(h, f"on-site term {c}", arity=1)
        object.__setattr__(self, "couplings", norm)
        object.__setattr__(self, "onsite", on)

    def is_zero(self) -> bool:
        return all(not np.any(h) for h in self.couplings.values()) and all(not np.any(h) for h in self.onsite.values())


@dataclass(frozen=True)
class TrotterParams:
    dt: float
    order: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"Trotter dt must be positive, got {self.dt}")
        if self.order not in (1, 2):
            raise ConfigurationError(f"Trotter order must be 1 or 2, got {self.order}")


@dataclass
class Term:
    sites: tuple[int, ...]
    matrix: np.ndarray


def lattice_terms(lattice: Lattice, coupling_map: CouplingMap) -> tuple[list[Term], list[Term]]:
    """Embed the coupling map: (pair terms, on-site terms) with concrete sites."""
    cols = coupling_map.colouring.colours(lattice)
    pairs = []
    for x, y in coupling_map.neighbourhood.bonds(lattice):
        cx, cy = int(cols[x]), int(cols[y])
        h = coupling_map.couplings.get(_pair_key(cx, cy))
        if h is None:
            continue
        pairs.append(Term((x, y), h) if cx <= cy else Term((y, x), h))
    singles = []
    for x in range(lattice.n_sites):
        h = coupling_map.onsite.get(int(cols[x]))
        if h is not None:
            singles.append(Term((x,), h))
    return pairs, singles


def trotter_layers(lattice: Lattice, pairs: list[Term]) -> tuple[list[list[Term]], bool]:
    """Group pair terms into layers of site-disjoint (hence commuting) terms.

    Bonds are keyed by their offset and by the parity of the block they start
    in along the offset's leading axis; if that fails to give disjoint layers
    (odd extents) a greedy colouring of the bond graph is used instead. The
    flag is True when the parity keying succeeded.
    """
    layers: dict = {}
    for term in pairs:
        x, y = term.sites
        disp = lattice.displacement(x, y)
        axis = next(i for i, d in enumerate(disp) if d)
        step = abs(disp[axis])
        key = (disp, (lattice.coords(x)[axis] // step) % 2)
        layers.setdefault(key, []).append(term)
    ordered = [layers[k] for k in sorted(layers)]
    if all(_disjoint(layer) for layer in ordered):
        return ordered, True
    greedy: list[list[Term]] = []
    for term in pairs:
        for layer in greedy:
            if all(not set(term.sites) & set(t.sites) for t in layer):
                layer.append(term)
                break
        else:
            greedy.append([term])
    return greedy, False


def _disjoint(layer: list[Term]) -> bool:
    seen: set[int] = set()
    for t in layer:
        if seen & set(t.sites):
            return False
        seen |= set(t.sites)
    return True


def hermitian_expm(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via eigendecomposition."""
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


class ContinuousQCA(QCAModel):
    """Continuous-time QCA with Hamiltonian ``sum over adjacent pairs`` of colour couplings.

    Parameters
    ----------
    lattice : Lattice or tuple of int
    coupling_map : CouplingMap
    dt : float, default=0.1
        Duration of one ``step``.
    order : {1, 2}, default=1
        Product-formula order when ``method="trotter"``.
    method : {"trotter", "exact"}, default="trotter"
        How ``step`` evolves a state over ``dt``.
    n_steps : int, default=1
    """

    def __init__(self, lattice, coupling_map, dt=0.1, order=1, method="trotter", n_steps=1):
        self.lattice = lattice
        self.coupling_map = coupling_map
        self.dt = dt
        self.order = order
        self.method = method
        self.n_steps = n_steps

    def _fit(self):
        lat = check_lattice(self.lattice)
        lat.check_cap()
        if self.method not in ("trotter", "exact"):
            raise ConfigurationError(f"unknown evolution method {self.method!r}")
        if self.dt < 0:
            raise ConfigurationError("dt must be non-negative")
        if self.order not in (1, 2):
            raise ConfigurationError(f"Trotter order must be 1 or 2, got {self.order}")
        self.coupling_map.colouring.check(lat)
        self.lattice_ = lat
        self.pairs_, self.singles_ = lattice_terms(lat, self.coupling_map)
        self.layers_, self.parity_layers_ = trotter_layers(lat, self.pairs_)
        self._eig = None

    # dense pieces

    def hamiltonian(self) -> np.ndarray:
        self._ensure_fitted()
        n = self.lattice_.n_sites
        check_site_cap(n, DENSE_CAP, "dense Hamiltonian")
        h = np.zeros((1 << n, 1 << n), dtype=complex)
        for term in self.pairs_ + self.singles_:
            h += embed_operator(term.matrix, term.sites, n)
        return h

    def _eigensystem(self):
        if self._eig is None:
            self._eig = np.linalg.eigh(self.hamiltonian())
        return self._eig

    def _exact(self, amps: np.ndarray, t: float) -> np.ndarray:
        if t == 0:
            return amps.copy()
        vals, vecs = self._eigensystem()
        coeffs = amps @ vecs.conj()
        return (coeffs * np.exp(-1j * vals * t)) @ vecs.T

    def exact_evolve(self, state: StateVector, t: float) -> StateVector:
        self._ensure_fitted()
        self._check_state(state)
        return StateVector(self._exact(state.amplitudes, t), self.lattice_)

    # product formulas

    def _layer_sequence(self, tau: float, order: int) -> list[tuple[list[Term], float]]:
        layers = list(self.layers_)
        if self.singles_:
            layers.append(self.singles_)
        if order == 1 or len(layers) <= 1:
            return [(layer, tau) for layer in layers]
        half = [(layer, tau / 2) for layer in layers[:-1]]
        return half + [(layers[-1], tau)] + half[::-1]

    def _trotter(self, amps: np.ndarray, t: float, dt: float, order: int) -> np.ndarray:
        if t == 0:
            return amps.copy()
        n_steps = max(1, int(round(t / dt)))
        tau = t / n_steps
        n = self.lattice_.n_sites
        seq = [[(t_.sites, hermitian_expm(t_.matrix, d)) for t_ in layer] for layer, d in self._layer_sequence(tau, order)]
        for _ in range(n_steps):
            for layer in seq:
                for sites, u in layer:
                    amps = apply_operator(amps, u, sites, n)
        return amps

    def trotter_evolve(self, state: StateVector, t: float, params: TrotterParams) -> StateVector:
        self._ensure_fitted()
        self._check_state(state)
        if t < 0:
            raise UsageError("Trotter evolution needs t >= 0")
        return StateVector(self._trotter(state.amplitudes, t, params.dt, params.order), self.lattice_)

    def _step(self, amps):
        if self.method == "exact":
            return self._exact(amps, self.dt)
        return self._trotter(amps, self.dt, self.dt, self.order)

    @property
    def period_(self) -> tuple[int, ...]:
        period = list(self.coupling_map.colouring.period)
        if self.method == "trotter":
            layer_period = self._layer_period()
            period = [lcm(p, q) for p, q in zip(period, layer_period)]
        return tuple(period)

    def _layer_period(self) -> tuple[int, ...]:
        self._ensure_fitted()
        lat = self.lattice_
        period = [1] * lat.dimension
        for layer in self.layers_:
            for term in layer:
                disp = lat.displacement(*term.sites)
                axis = next(i for i, d in enumerate(disp) if d)
                period[axis] = lcm(period[axis], 2 * abs(disp[axis]))
        # the greedy fallback is only covariant under whole-lattice shifts
        return tuple(period) if self.parity_layers_ else lat.extents

    def _influence_sets(self):
        if self.method == "exact":
            return [[set(range(self.lattice_.n_sites))]]
        if self.dt == 0:
            return []
        return [[set(t.sites) for t in layer] for layer, _ in self._layer_sequence(self.dt, self.order)]


def build_hamiltonian(c: ContinuousQCA) -> np.ndarray:
    return c.hamiltonian()


def exact_evolve(c: ContinuousQCA, state: StateVector, t: float) -> StateVector:
    return c.exact_evolve(state, t)


def trotter_evolve(c: ContinuousQCA, state: StateVector, t: float, p: TrotterParams) -> StateVector:
    return c.trotter_evolve(state, t, p)


def _uniform_chain(n: int, h: np.ndarray, dt: float) -> ContinuousQCA:
    if n < 2:
        raise ConfigurationError(f"chain needs at least two sites, got {n}")
    cmap = CouplingMap(Colouring.uniform(1), NeighbourhoodScheme.nearest(1), {(0, 0): h})
    return ContinuousQCA(Lattice((n,)), cmap, dt=dt)


def flip_flop_example(n: int, dt: float = 0.1) -> ContinuousQCA:
    """Single-colour ring with the flip-flop coupling |01><10| + |10><01|."""
    return _uniform_chain(n, FLIP_FLOP.copy(), dt)


def pair_creation_example(n: int, dt: float = 0.1) -> ContinuousQCA:
    """Single-colour ring with the literal sigma+ sigma+ + sigma- sigma- coupling."""
    return _uniform_chain(n, PAIR_CREATION.copy(), dt)


class PiecewiseCTQCA(QCAModel):
    """Continuous-time QCA whose coupling map changes at fixed times.

    One step runs every ``(duration, coupling_map)`` segment in order with
    exact evolution.
    """

    def __init__(self, lattice, segments=(), n_steps=1):
        self.lattice = lattice
        self.segments = segments
        self.n_steps = n_steps

    def _fit(self):
        lat = check_lattice(self.lattice)
        check_site_cap(lat.n_sites, DENSE_CAP, "piecewise Hamiltonian evolution")
        self.lattice_ = lat
        self.segment_models_ = []
        self.propagators_ = []
        for duration, cmap in self.segments:
            if duration < 0:
                raise ConfigurationError("segment durations must be non-negative")
            model = ContinuousQCA(lat, cmap, dt=duration, method="exact").fit()
            self.segment_models_.append(model)
            self.propagators_.append(None if cmap.is_zero() or duration == 0 else hermitian_expm(model.hamiltonian(), duration))

    def _step(self, amps):
        for u in self.propagators_:
            if u is not None:
                amps = amps @ u.T
        return amps

    @property
    def period_(self) -> tuple[int, ...]:
        period = [1] * self.lattice_.dimension if hasattr(self, "lattice_") else [1]
        for _, cmap in self.segments:
            period = [lcm(p, q) for p, q in zip(period, cmap.colouring.period)]
        return tuple(period)

    def _influence_sets(self):
        everything = set(range(self.lattice_.n_sites))
        return [[everything] for u in self.propagators_ if u is not None]
