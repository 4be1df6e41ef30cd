"""Compilers between the Margolus, coloured and continuous-time models.

Every compiler attaches a ``certification_`` attribute to the model it
returns: a :class:`CertificationReport` measured by evolving a probe set
through both source and target.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .base import QCAModel, lcm
from .cqca import Colouring, ColouredQCA, FieldCondition, FieldControlledUnitary
from .ctqca import ContinuousQCA, CouplingMap, PiecewiseCTQCA, hermitian_expm
from .decompose import (GateOp, GateSequence, decompose_block, decompose_two_qubit,  # noqa: F401
                        MAX_BLOCK_SITES)
from .exceptions import ConfigurationError, ResourceError, UnsupportedStructureError, UsageError
from .lattice import Lattice, NeighbourhoodScheme
from .mqca import SWAP, MargolusQCA, Tiling
from .state import apply_operator, random_state, site_probabilities

CERT_TOL = 1e-8
PROBE_SEED = 20240917
N_RANDOM_PROBES = 5
CERT_STEPS = 10
MAX_MQCA_BLOCK = 8


@dataclass(frozen=True)
class CertificationReport:
    """Measured agreement between a compiled model and its source."""

    max_prob_deviation: float
    min_fidelity: float
    n_probes: int
    n_steps: int
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.max_prob_deviation <= self.tolerance and 1 - self.min_fidelity <= self.tolerance

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        s = (f"certification {tag}: max per-site probability deviation {self.max_prob_deviation:.3e}, "
             f"min fidelity {self.min_fidelity:.15f}, {self.n_probes} probes x {self.n_steps} steps, "
             f"tolerance {self.tolerance:g}")
        return s + (f" ({self.detail})" if self.detail else "")


def probe_states(lattice: Lattice, n_random: int = N_RANDOM_PROBES, seed: int = PROBE_SEED) -> np.ndarray:
    """Single-excitation basis states followed by ``n_random`` Haar-random states."""
    n = lattice.n_sites
    rows = [np.zeros(1 << n, dtype=complex) for _ in range(n)]
    for i, row in enumerate(rows):
        row[1 << i] = 1.0
    rng = np.random.default_rng(seed)
    rows += [random_state(lattice, rng).amplitudes for _ in range(n_random)]
    return np.array(rows)


def _compare(step_a, step_b, probes: np.ndarray, n_sites: int, steps: int):
    a, b = probes.copy(), probes.copy()
    dev, fid = 0.0, 1.0
    for _ in range(steps):
        a, b = step_a(a), step_b(b)
        dev = max(dev, float(np.max(np.abs(site_probabilities(a, n_sites) - site_probabilities(b, n_sites)))))
        fid = min(fid, float(np.min(np.abs(np.einsum("ij,ij->i", a.conj(), b)) ** 2)))
    return dev, fid


def certify(source: QCAModel, target: QCAModel, steps: int = CERT_STEPS, tol: float = CERT_TOL,
            probes: np.ndarray | None = None) -> CertificationReport:
    """Step both models side by side from every probe state."""
    source._ensure_fitted()
    target._ensure_fitted()
    if source.lattice_ != target.lattice_:
        raise UsageError("cannot certify models on different lattices")
    lat = source.lattice_
    probes = probe_states(lat) if probes is None else probes
    dev, fid = _compare(source._step, target._step, probes, lat.n_sites, steps)
    return CertificationReport(dev, fid, len(probes), steps, tol)


def _attach(model, report: CertificationReport):
    model.certification_ = report
    return model


# ------------------------------------------------------------ colour patterns

def _pattern_period(extent: int, base: int, minimum: int) -> int | None:
    """Smallest multiple of ``base`` dividing ``extent`` and at least ``minimum``."""
    p = base
    while p <= extent:
        if extent % p == 0 and p >= minimum:
            return p
        p += base
    return None


def _cell_pattern(period: tuple[int, ...]) -> Colouring:
    """Every cell of the period box gets its own colour (row-major)."""
    return Colouring(np.arange(int(np.prod(period))).reshape(period), int(np.prod(period)))


# ------------------------------------------------------------ MQCA -> CQCA

def mqca_to_cqca(m: MargolusQCA, certify_steps: int = CERT_STEPS) -> ColouredQCA:
    """Replay each tiling's gate decomposition as colour-targeted field-controlled gates.

    Each cell of a colour-pattern period gets a distinct colour. The period
    along an axis is a multiple of both block extents and at least
    ``2r + 1`` with ``r`` the largest block extent minus one, so that a
    site's box neighbourhood of radius ``r`` holds each colour at most once
    and a control can be named by its colour alone. Blocks that share a
    pattern position are translates of each other and share one colour
    sequence.
    """
    m._ensure_fitted()
    lat = m.lattice_
    shapes = (m.tiling_a.block_shape, m.tiling_b.block_shape)
    size = max(m.tiling_a.block_size, m.tiling_b.block_size)
    if size > MAX_BLOCK_SITES:
        raise ResourceError(f"blocks of {size} sites exceed the decomposition cap of {MAX_BLOCK_SITES}")
    radii = tuple(max(a, b) - 1 for a, b in zip(*shapes))
    period = []
    for axis, extent in enumerate(lat.extents):
        base = lcm(shapes[0][axis], shapes[1][axis])
        p = _pattern_period(extent, base, 2 * radii[axis] + 1)
        if p is None:
            raise UnsupportedStructureError(
                f"axis {axis}: no colour period that is a multiple of {base}, divides {extent} "
                f"and spans {2 * radii[axis] + 1} sites")
        period.append(p)
    colouring = _cell_pattern(tuple(period))
    cols = colouring.colours(lat)

    schedule = []
    for tiling, u in ((m.tiling_a, m.u_a_), (m.tiling_b, m.u_b_)):
        k = tiling.block_size
        seq = (decompose_block(u) if k != 2 else decompose_two_qubit(u)).with_phase_folded()
        # one representative block per pattern position
        reps = {}
        for blk in tiling.blocks(lat):
            reps.setdefault(int(cols[blk[0]]), blk)
        for op in seq.ops:
            for blk in reps.values():
                cond = {int(cols[blk[r]]): {int(v)} for r, v in op.controls}
                schedule.append(FieldControlledUnitary(int(cols[blk[op.target]]), FieldCondition(cond), op.gate))
    c = ColouredQCA(lat, NeighbourhoodScheme.box(radii), colouring, schedule).fit()
    return _attach(c, certify(m, c, certify_steps))


# ------------------------------------------------------------ CQCA -> MQCA

def _block_candidates(lat: Lattice, period: tuple[int, ...]):
    per_axis = []
    for e, p in zip(lat.extents, period):
        per_axis.append([b for b in range(p, e, p) if e % b == 0] or ([e] if e == p else []))
    shapes = [s for s in itertools.product(*per_axis) if 2 <= int(np.prod(s)) <= MAX_MQCA_BLOCK]
    return sorted(shapes, key=lambda s: (int(np.prod(s)), s))


def _assign(lat: Lattice, substeps, tiling_a: Tiling, tiling_b: Tiling):
    """Split the schedule's gates between the two tilings, or return None.

    Gates inside one substep commute, so a substep is split as a set: gates
    that fit an A block and touch no site already used by a B gate go to A,
    the rest must fit a B block.
    """
    blocks = {}
    for tag, t in (("a", tiling_a), ("b", tiling_b)):
        bl = t.blocks(lat)
        owner = {}
        for j, blk in enumerate(bl):
            for s in blk:
                owner[s] = j
        blocks[tag] = (bl, owner)

    def home(tag, support):
        _, owner = blocks[tag]
        ids = {owner[s] for s in support}
        return ids.pop() if len(ids) == 1 else None

    layers = {"a": [], "b": []}
    touched_b: set[int] = set()
    for gates in substeps:
        rest = []
        for g in gates:
            j = home("a", g.support)
            if j is not None and not touched_b & set(g.support):
                layers["a"].append((j, g))
            else:
                rest.append(g)
        for g in rest:
            j = home("b", g.support)
            if j is None:
                return None
            layers["b"].append((j, g))
            touched_b |= set(g.support)
    out = {}
    for tag in ("a", "b"):
        bl, _ = blocks[tag]
        mats = []
        for j, blk in enumerate(bl):
            role = {s: r for r, s in enumerate(blk)}
            k = len(blk)
            cols = np.eye(1 << k, dtype=complex)
            for jj, g in layers[tag]:
                if jj == j:
                    cols = apply_operator(cols, g.matrix, [k - 1 - role[s] for s in g.support], k)
            mats.append(cols.T)
        if any(np.max(np.abs(mm - mats[0])) > 1e-10 for mm in mats[1:]):
            return None
        out[tag] = mats[0]
    return out["a"], out["b"]


def cqca_to_mqca(c: ColouredQCA, certify_steps: int = CERT_STEPS) -> MargolusQCA:
    """Pack a coloured QCA's gates into two staggered block tilings.

    Block shapes are multiples of the colour period (at most
    ``MAX_MQCA_BLOCK`` sites); every pair of offsets is tried. The first
    assignment that validates and certifies is returned.

    Raises
    ------
    UnsupportedStructureError
        If no pair of tilings can host the schedule exactly.
    """
    c._ensure_fitted()
    lat = c.lattice_
    substeps = c.compiled_
    for shape in _block_candidates(lat, c.colouring.period):
        offsets = list(itertools.product(*[range(b) for b in shape]))
        for oa, ob in itertools.product(offsets, offsets):
            if oa == ob:
                continue
            ta, tb = Tiling(shape, oa), Tiling(shape, ob)
            mats = _assign(lat, substeps, ta, tb)
            if mats is None:
                continue
            m = MargolusQCA(lat, ta, tb, mats[0], mats[1])
            if not m.validate().passed:
                continue
            report = certify(c, m.fit(), certify_steps)
            if report.passed:
                return _attach(m, report)
    raise UnsupportedStructureError(
        "the schedule's gate supports cannot be split between two staggered tilings "
        f"with blocks of at most {MAX_MQCA_BLOCK} sites")


# ------------------------------------------------------------ CQCA -> CTQCA

def principal_log_hamiltonian(g: np.ndarray, dt: float) -> np.ndarray:
    """Hermitian ``h`` with ``exp(-i h dt) = g``, eigenphases taken in (-pi, pi]."""
    t, z = schur(np.asarray(g, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    phases[np.abs(phases + np.pi) < 1e-12] = np.pi
    h = -(z * phases) @ z.conj().T / dt
    return (h + h.conj().T) / 2


def cqca_to_ctqca(c: ColouredQCA, dt: float) -> PiecewiseCTQCA:
    """One constant-Hamiltonian segment of length ``dt`` per substep.

    A gate with no effective controls becomes an on-site term of its
    colour; a gate with one control becomes a coupling for the (control,
    target) colour pair. Larger supports are rejected.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    c._ensure_fitted()
    lat = c.lattice_
    if not c.neighbourhood.is_symmetric:
        raise UnsupportedStructureError("coupling maps need a symmetric neighbourhood")
    cols = c.colours_
    bonds = c.neighbourhood.bonds(lat)
    bond_types: dict = {}
    for x, y in bonds:
        key = tuple(sorted((int(cols[x]), int(cols[y]))))
        bond_types[key] = bond_types.get(key, 0) + 1
    segments = []
    for op, gates in zip(c.schedule, c.compiled_):
        couplings, onsite = {}, {}
        for g in gates:
            if len(g.support) > 2:
                raise UnsupportedStructureError(
                    f"a gate on colour {op.target_colour} has {len(g.support) - 1} effective controls; "
                    "only single-control gates map to pair couplings")
        sizes = {len(g.support) for g in gates}
        if len(sizes) > 1:
            raise UnsupportedStructureError("targets of one colour see different numbers of controls")
        if gates and sizes == {1}:
            h = principal_log_hamiltonian(gates[0].matrix, dt)
            if np.any(np.abs(h) > 1e-14):
                onsite[op.target_colour] = h
        elif gates:
            by_key: dict = {}
            for g in gates:
                y, x = g.support
                cy, cx = int(cols[y]), int(cols[x])
                h = principal_log_hamiltonian(g.matrix, dt)
                if cy > cx:
                    h = SWAP @ h @ SWAP
                key = (min(cx, cy), max(cx, cy))
                if key in by_key and np.max(np.abs(by_key[key][0] - h)) > 1e-10:
                    raise UnsupportedStructureError(f"colour pair {key} needs two different couplings")
                by_key[key] = (h, by_key.get(key, (None, 0))[1] + 1)
            for key, (h, count) in by_key.items():
                if count != bond_types.get(key, 0):
                    raise UnsupportedStructureError(
                        f"colour pair {key} has {bond_types.get(key, 0)} bonds but only {count} carry a gate")
                couplings[key] = h
        cmap = CouplingMap(c.colouring, c.neighbourhood, couplings, onsite)
        segments.append((float(dt), cmap))
    out = PiecewiseCTQCA(lat, tuple(segments)).fit()
    return _attach(out, certify(c, out, steps=1))


# ------------------------------------------------------------ CTQCA -> CQCA

def refine_colouring(c: ContinuousQCA) -> Colouring:
    """Periodic colouring under which the neighbours of any site carry distinct colours.

    The pattern period along each axis is a multiple of the original colour
    period, divides the extent, and spans at least ``2r + 1`` sites for a
    neighbourhood of radius ``r``; each cell gets its own colour, so every
    refined colour lies inside one original colour.
    """
    lat = c.lattice_
    nb = c.coupling_map.neighbourhood
    base = c.coupling_map.colouring.period
    period = []
    for axis, extent in enumerate(lat.extents):
        r = max(abs(o[axis]) for o in nb.offsets)
        p = _pattern_period(extent, base[axis], 2 * r + 1)
        if p is None:
            raise UnsupportedStructureError(
                f"axis {axis} of extent {extent} is too short for a distance-2 colouring")
        period.append(p)
    return _cell_pattern(tuple(period))


def _refined_layers(c: ContinuousQCA, cols: np.ndarray):
    """Bond classes keyed by the (first, second) refined colours, in first-seen order."""
    classes: dict = {}
    for term in c.pairs_:
        x, y = term.sites
        classes.setdefault((int(cols[x]), int(cols[y])), []).append(term)
    return list(classes.items())


def _layer_ops(key, h, dt, onsite_cols=None):
    """Field-controlled gates for exp(-i dt h) on every bond of class ``key``."""
    ca, cb = key
    seq = decompose_two_qubit(hermitian_expm(h, dt)).with_phase_folded()
    role_colour = (ca, cb)
    return [FieldControlledUnitary(role_colour[op.target],
                                   FieldCondition({role_colour[r]: {int(v)} for r, v in op.controls}),
                                   op.gate) for op in seq.ops]


def _ctqca_schedule(c: ContinuousQCA, cols: np.ndarray, dt: float, order: int):
    layers = []
    for key, terms in _refined_layers(c, cols):
        h = terms[0].matrix
        if any(np.max(np.abs(t.matrix - h)) > 0 for t in terms[1:]):
            raise UnsupportedStructureError(f"bond class {key} carries more than one coupling")
        layers.append(("pair", key, h))
    singles = {}
    for t in c.singles_:
        singles.setdefault(int(cols[t.sites[0]]), t.matrix)
    if singles:
        layers.append(("onsite", None, singles))

    def emit(layer, tau):
        kind, key, h = layer
        if kind == "pair":
            return _layer_ops(key, h, tau)
        return [FieldControlledUnitary(col, FieldCondition.any(), hermitian_expm(hs, tau))
                for col, hs in sorted(h.items())]

    if order == 1 or len(layers) <= 1:
        return [op for layer in layers for op in emit(layer, dt)]
    half = [emit(layer, dt / 2) for layer in layers[:-1]]
    return [op for ops in half for op in ops] + emit(layers[-1], dt) + [op for ops in half[::-1] for op in ops]


def _trotter_cqca(c: ContinuousQCA, dt: float, order: int) -> ColouredQCA:
    colouring = refine_colouring(c)
    cols = colouring.colours(c.lattice_)
    schedule = _ctqca_schedule(c, cols, dt, order)
    return ColouredQCA(c.lattice_, c.coupling_map.neighbourhood, colouring, schedule).fit()


def _trotter_error(c: ContinuousQCA, q: ColouredQCA, dt: float, total_t: float, probes: np.ndarray) -> float:
    n = max(1, int(round(total_t / dt)))
    amps = probes.copy()
    for _ in range(n):
        amps = q._step(amps)
    exact = c._exact(probes, n * dt)
    overlaps = np.einsum("ij,ij->i", exact.conj(), amps)
    phases = overlaps / np.where(np.abs(overlaps) > 0, np.abs(overlaps), 1)
    return float(np.max(np.linalg.norm(amps - phases[:, None] * exact, axis=1)))


@dataclass(frozen=True)
class TrotterCertificate:
    """Error of a Trotterised coloured model against exact evolution."""

    dt: float
    total_t: float
    order: int
    error: float
    error_half_dt: float
    n_probes: int

    @property
    def ratio(self) -> float:
        return self.error / self.error_half_dt if self.error_half_dt > 0 else np.inf

    @property
    def observed_order(self) -> float:
        return float(np.log2(self.ratio)) if self.error_half_dt > 0 and self.error > 0 else np.inf

    @property
    def passed(self) -> bool:
        return self.error < 1e-12 or abs(self.observed_order - self.order) <= 0.15

    def __str__(self):
        return (f"trotter certification {'PASS' if self.passed else 'FAIL'}: error {self.error:.3e} at dt={self.dt:g}, "
                f"{self.error_half_dt:.3e} at dt={self.dt / 2:g}, observed order {self.observed_order:.3f} "
                f"(expected {self.order}), t={self.total_t:g}, {self.n_probes} probes")


def trotter_error(c: ContinuousQCA, dt: float, total_t: float, order: int = 1,
                  probes: np.ndarray | None = None) -> float:
    """Max phase-aligned distance from exact evolution after ``round(total_t / dt)`` compiled steps."""
    c._ensure_fitted()
    probes = probe_states(c.lattice_) if probes is None else probes
    return _trotter_error(c, _trotter_cqca(c, dt, order), dt, total_t, probes)


def ctqca_to_cqca(c: ContinuousQCA, dt: float, total_t: float, order: int = 1) -> ColouredQCA:
    """Product-formula coloured model: one step is one Trotter step of length ``dt``.

    The colouring is refined so that a site's neighbours have pairwise
    distinct colours; refined colours keep the coupling of the colour they
    split from. Each bond class becomes one layer of two-site exponentials,
    synthesised into field-controlled single-site gates.
    """
    if not dt > 0:
        raise ConfigurationError(f"dt must be positive, got {dt}")
    if total_t < 0:
        raise ConfigurationError("total_t must be non-negative")
    if order not in (1, 2):
        raise ConfigurationError(f"order must be 1 or 2, got {order}")
    c._ensure_fitted()
    if not c.coupling_map.neighbourhood.is_symmetric:
        raise UnsupportedStructureError("coloured models need a symmetric neighbourhood")
    q = _trotter_cqca(c, dt, order)
    probes = probe_states(c.lattice_)
    err = _trotter_error(c, q, dt, total_t, probes)
    err_half = _trotter_error(c, _trotter_cqca(c, dt / 2, order), dt / 2, total_t, probes)
    q.certification_ = TrotterCertificate(dt, total_t, order, err, err_half, len(probes))
    return q
