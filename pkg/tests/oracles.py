"""Independent dense reference constructions shared by the tests."""
import itertools
from functools import reduce

import numpy as np

I2 = np.eye(2)


def haar(dim, rng):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def kron_embed(u, sites, n):
    """2^n operator of ``u`` on ``sites`` (first = most significant) via Kronecker products."""
    rest = [s for s in range(n) if s not in sites]
    full = reduce(np.kron, [np.asarray(u, dtype=complex)] + [I2] * len(rest))
    order = list(sites) + rest
    perm = [sum(((i >> (n - 1 - p)) & 1) << order[p] for p in range(n)) for i in range(1 << n)]
    out = np.zeros_like(full)
    out[np.ix_(perm, perm)] = full
    return out


def bits_to_index(bits):
    return int(sum(int(b) << s for s, b in enumerate(bits)))


def index_to_bits(idx, n):
    return [(idx >> s) & 1 for s in range(n)]


def sum_trace(rho, m, keep):
    """Partial trace of an m-site operator by looping over every index."""
    k = len(keep)
    out = np.zeros((1 << k, 1 << k), dtype=complex)
    rest = [p for p in range(m) if p not in keep]
    for a, b in itertools.product(range(1 << k), repeat=2):
        for r in range(1 << len(rest)):
            def full(x):
                v = 0
                for q, p in enumerate(keep):
                    v |= ((x >> (k - 1 - q)) & 1) << (m - 1 - p)
                for q, p in enumerate(rest):
                    v |= ((r >> q) & 1) << (m - 1 - p)
                return v
            out[a, b] += rho[full(a), full(b)]
    return out


def global_phase_gap(a, b):
    ov = np.vdot(b, a)
    ph = ov / abs(ov) if abs(ov) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))


def op_matrix(op, k):
    """Dense 2^k matrix of one controlled single-qubit gate from projector Kronecker products."""
    proj = {0: np.diag([1.0, 0.0]), 1: np.diag([0.0, 1.0])}
    ctrl = dict(op.controls)
    on, off = [], []
    for pos in range(k):
        if pos == op.target:
            on.append(op.gate)
            off.append(I2)
        elif pos in ctrl:
            on.append(proj[ctrl[pos]])
            off.append(proj[ctrl[pos]])
        else:
            on.append(I2)
            off.append(I2)
    return np.eye(1 << k) + reduce(np.kron, on) - reduce(np.kron, off)


def reassemble(seq):
    """Product of a GateSequence's gates in time order, without its global phase."""
    u = np.eye(1 << seq.n_sites, dtype=complex)
    for op in seq.ops:
        u = op_matrix(op, seq.n_sites) @ u
    return u
