"""Numerical checks of the locality framework on finite lattices.

Every check takes a fitted (or fittable) model and returns a
:class:`CheckReport`. Dense global operators are limited to
``VERIFY_CAP`` sites.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ._validation import check_site_cap, unitarity_deviation
from .base import QCAModel
from .exceptions import UsageError
from .state import permute_sites, reduced_density_amplitudes, trace_distance
from .transpile import probe_states

VERIFY_CAP = 12
CONSISTENCY_CAP = 6
DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class GlobalOperator:
    matrix: np.ndarray
    source: str


@dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    deviation: float
    tolerance: float

    def __str__(self):
        return f"{self.name} deviation={self.deviation:.3e} tol={self.tolerance:g} {'PASS' if self.passed else 'FAIL'}"


def _report(name: str, deviation: float, tol: float) -> CheckReport:
    deviation = max(0.0, float(deviation))
    return CheckReport(name, deviation <= tol, deviation, tol)


def assemble_global(model: QCAModel) -> GlobalOperator:
    model._ensure_fitted()
    check_site_cap(model.lattice_.n_sites, VERIFY_CAP, "global operator assembly")
    return GlobalOperator(model.global_operator(), type(model).__name__)


def check_unitarity(g, tol: float = DEFAULT_TOL) -> CheckReport:
    m = g.matrix if isinstance(g, GlobalOperator) else np.asarray(g, dtype=complex)
    return _report("unitarity", unitarity_deviation(m), tol)


def _probes(model) -> np.ndarray:
    return probe_states(model.lattice_)


def check_translation(model: QCAModel, shift, tol: float = DEFAULT_TOL) -> CheckReport:
    """max over probes of ||step(T psi) - T step(psi)|| for a shift by ``shift``."""
    model._ensure_fitted()
    lat = model.lattice_
    shift = tuple(int(s) for s in np.atleast_1d(shift))
    if len(shift) != lat.dimension:
        raise UsageError("shift dimension differs from lattice dimension")
    for s, p, e in zip(shift, model.period_, lat.extents):
        if (s % e) % p:
            raise UsageError(f"shift {shift} is not a multiple of the model period {model.period_}")
    smap = lat.shift_map(shift)
    psi = _probes(model)
    lhs = model._step(permute_sites(psi, smap))
    rhs = permute_sites(model._step(psi), smap)
    return _report(f"translation{list(shift)}", np.max(np.linalg.norm(lhs - rhs, axis=1)), tol)


def causality_deviation(model: QCAModel, radius: int) -> float:
    """Largest trace distance, outside distance ``radius`` of x, between the
    one-step images of |0...0> and X_x|0...0>, over all sites x."""
    model._ensure_fitted()
    lat = model.lattice_
    n = lat.n_sites
    vac = np.zeros((1, 1 << n), dtype=complex)
    vac[0, 0] = 1.0
    flipped = np.zeros((n, 1 << n), dtype=complex)
    flipped[np.arange(n), 1 << np.arange(n)] = 1.0
    base = model._step(vac)[0]
    images = model._step(flipped)
    worst = 0.0
    for x in range(n):
        far = [y for y in range(n) if lat.distance(x, y) > radius]
        if not far:
            continue
        a = reduced_density_amplitudes(base, far, n)
        b = reduced_density_amplitudes(images[x], far, n)
        worst = max(worst, trace_distance(a, b))
    return worst


def check_causality(model: QCAModel, claimed_radius: int, tol: float = DEFAULT_TOL) -> CheckReport:
    return _report(f"causality[r={claimed_radius}]", causality_deviation(model, claimed_radius), tol)


def measured_causal_radius(model: QCAModel, tol: float = DEFAULT_TOL) -> int:
    """Smallest radius whose causality check passes."""
    model._ensure_fitted()
    lat = model.lattice_
    for r in range(max(lat.extents) + 1):
        if causality_deviation(model, r) <= tol:
            return r
    return max(lat.extents)  # pragma: no cover - radius max(extents) is always empty outside


def default_regions(model: QCAModel, max_outer: int = 3) -> list[tuple[list[int], list[int]]]:
    """Nested pairs A ⊆ B of contiguous (box) regions anchored at site 0."""
    model._ensure_fitted()
    lat = model.lattice_
    pairs = []
    boxes = []
    for shape in itertools.product(*[range(1, min(e, max_outer) + 1) for e in lat.extents]):
        if int(np.prod(shape)) > max_outer:
            continue
        boxes.append(sorted({lat.index(c) for c in itertools.product(*[range(s) for s in shape])}))
    for b in boxes:
        for size in range(1, len(b) + 1):
            for a in itertools.combinations(b, size):
                pairs.append((list(a), b))
    return pairs


def check_consistency(model: QCAModel, regions=None, tol: float = DEFAULT_TOL) -> CheckReport:
    """Reduce the evolved probes to B then to A, and directly to A; compare in trace norm."""
    model._ensure_fitted()
    n = model.lattice_.n_sites
    regions = default_regions(model) if regions is None else regions
    evolved = model._step(_probes(model))
    worst = 0.0
    for a, b in regions:
        a, b = [int(s) for s in a], [int(s) for s in b]
        if not set(a) <= set(b):
            raise UsageError(f"region {a} is not contained in {b}")
        if len(b) > CONSISTENCY_CAP:
            raise UsageError(f"outer region of {len(b)} sites exceeds {CONSISTENCY_CAP}")
        pos = [b.index(s) for s in a]
        for psi in evolved:
            rho_b = reduced_density_amplitudes(psi, b, n)
            via_b = _trace_out(rho_b, len(b), pos)
            direct = reduced_density_amplitudes(psi, a, n)
            worst = max(worst, trace_distance(via_b, direct))
    return _report("consistency", worst, tol)


def _trace_out(rho: np.ndarray, m: int, keep_pos: list[int]) -> np.ndarray:
    """Partial trace by explicit index summation over the positions not in ``keep_pos``."""
    k = len(keep_pos)
    t = rho.reshape((2,) * (2 * m))
    traced = [p for p in range(m) if p not in keep_pos]
    out = np.zeros((1 << k, 1 << k), dtype=complex)
    for bits in itertools.product((0, 1), repeat=len(traced)):
        idx_r: list = [slice(None)] * m
        idx_c: list = [slice(None)] * m
        for p, v in zip(traced, bits):
            idx_r[p] = v
            idx_c[p] = v
        block = t[tuple(idx_r + idx_c)]
        # remaining axes are the kept positions in ascending order; reorder to keep_pos
        order = sorted(keep_pos)
        perm = [order.index(p) for p in keep_pos]
        block = np.transpose(block, perm + [k + q for q in perm])
        out += block.reshape(1 << k, 1 << k)
    return out


ALL_CHECKS = ("unitarity", "translation", "causality", "consistency")


def run_checks(model: QCAModel, checks=ALL_CHECKS, tol: float = DEFAULT_TOL, radius: int | None = None,
               shift=None) -> list[CheckReport]:
    """Run the named checks with the model's own period and light-cone radius."""
    model._ensure_fitted()
    check_site_cap(model.lattice_.n_sites, VERIFY_CAP, "verification")
    unknown = set(checks) - set(ALL_CHECKS)
    if unknown:
        raise UsageError(f"unknown checks {sorted(unknown)}; choose from {list(ALL_CHECKS)}")
    reports = []
    for name in ALL_CHECKS:
        if name not in checks:
            continue
        if name == "unitarity":
            reports.append(check_unitarity(assemble_global(model), tol))
        elif name == "translation":
            reports.append(check_translation(model, model.period_ if shift is None else shift, tol))
        elif name == "causality":
            r = model.light_cone_radius() if radius is None else radius
            reports.append(check_causality(model, r, tol))
        else:
            reports.append(check_consistency(model, tol=tol))
    return reports
