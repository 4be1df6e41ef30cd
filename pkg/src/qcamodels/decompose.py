"""Synthesis of block unitaries into single-qubit gates and controlled-NOTs.

Two-qubit unitaries use the canonical (KAK) decomposition in the magic
basis followed by a three-CNOT circuit for the non-local part. Larger
blocks use a Givens (two-level) elimination in Gray-code order, then expand
each fully-controlled rotation into singles and CNOTs.

Roles in a ``GateSequence`` index the block's sites; role 0 is the most
significant bit of the block matrix.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from ._validation import check_unitary
from .exceptions import ResourceError, UsageError
from .state import apply_operator

MAX_BLOCK_SITES = 4

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)

MAGIC = np.array([[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex) / np.sqrt(2)
MAGIC_DAG = MAGIC.conj().T


def rz(theta: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)])


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class GateOp:
    """Single-qubit ``gate`` on ``target``, applied when every ``(role, value)``
    control holds the given computational-basis value."""

    gate: np.ndarray
    target: int
    controls: tuple[tuple[int, int], ...] = ()

    @property
    def is_cnot(self) -> bool:
        return len(self.controls) == 1 and np.allclose(self.gate, X)


@dataclass
class GateSequence:
    """Time-ordered gates over a ``k``-site block plus a global phase.

    ``reassemble()`` multiplies the gates back into a ``2**k`` matrix and
    includes the phase, so it reproduces the source unitary exactly.
    """

    n_sites: int
    ops: list[GateOp] = field(default_factory=list)
    global_phase: complex = 1.0

    def __len__(self):
        return len(self.ops)

    @property
    def cnot_count(self) -> int:
        return sum(op.is_cnot for op in self.ops)

    def reassemble(self, include_phase: bool = True) -> np.ndarray:
        k = self.n_sites
        cols = np.eye(1 << k, dtype=complex)
        for op in self.ops:
            roles = [r for r, _ in op.controls] + [op.target]
            cols = apply_operator(cols, controlled_matrix(op.gate, [v for _, v in op.controls]),
                                  [k - 1 - r for r in roles], k)
        u = cols.T
        return u * self.global_phase if include_phase else u

    def with_phase_folded(self) -> "GateSequence":
        """Equivalent sequence whose global phase is carried by an uncontrolled gate."""
        if abs(self.global_phase - 1) < 1e-15:
            return GateSequence(self.n_sites, list(self.ops), 1.0)
        ops = list(self.ops)
        for i, op in enumerate(ops):
            if not op.controls:
                ops[i] = GateOp(op.gate * self.global_phase, op.target, ())
                return GateSequence(self.n_sites, ops, 1.0)
        ops.insert(0, GateOp(I2 * self.global_phase, 0, ()))
        return GateSequence(self.n_sites, ops, 1.0)


def controlled_matrix(gate: np.ndarray, values: list[int]) -> np.ndarray:
    """Matrix over (controls..., target) applying ``gate`` iff controls equal ``values``."""
    m = len(values)
    dim = 1 << (m + 1)
    out = np.eye(dim, dtype=complex)
    cfg = 0
    for v in values:
        cfg = (cfg << 1) | int(v)
    base = cfg << 1
    out[base:base + 2, base:base + 2] = gate
    return out


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over global phase of max |a - e^{iφ} b|."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[k]) == 0:
        return float(np.max(np.abs(a)))
    ph = a[k] / b[k]
    ph = ph / abs(ph) if abs(ph) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))


# ---------------------------------------------------------------- one qubit

def zyz_angles(u: np.ndarray) -> tuple[float, float, float, float]:
    """Angles ``(phase, beta, gamma, delta)`` with u = e^{i phase} Rz(beta) Ry(gamma) Rz(delta)."""
    det = np.linalg.det(u)
    phase = cmath.phase(det) / 2
    v = u * cmath.exp(-1j * phase)
    gamma = 2 * np.arctan2(abs(v[1, 0]), abs(v[0, 0]))
    # v = [[e^{-i(b+d)/2} c, -e^{-i(b-d)/2} s], [e^{i(b-d)/2} s, e^{i(b+d)/2} c]]
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        plus = 2 * cmath.phase(v[1, 1])
        minus = 2 * cmath.phase(v[1, 0])
    elif abs(v[1, 0]) <= 1e-12:
        plus, minus = 2 * cmath.phase(v[1, 1]), 0.0
    else:
        plus, minus = 0.0, 2 * cmath.phase(v[1, 0])
    beta = (plus + minus) / 2
    delta = (plus - minus) / 2
    rebuilt = rz(beta) @ ry(gamma) @ rz(delta)
    # the half-angle branches can leave a sign of -1
    if np.max(np.abs(rebuilt - v)) > 1e-8:
        phase += np.pi
    return phase, beta, gamma, delta


def _is_identity_up_to_phase(u: np.ndarray, tol: float = 1e-12) -> bool:
    return phase_distance(u, np.eye(u.shape[0])) < tol


def controlled_single(gate: np.ndarray, target: int, control: int, value: int = 1) -> list[GateOp]:
    """Singly-controlled ``gate`` as singles and (at most two) CNOTs."""
    if _is_identity_up_to_phase(gate):
        ph = gate[0, 0]
        if abs(ph - 1) < 1e-14:
            return []
        phase_gate = np.diag([1.0, ph]) if value == 1 else np.diag([ph, 1.0])
        return [GateOp(phase_gate, control)]
    if np.allclose(gate, X, atol=1e-14):
        ops = [GateOp(X.copy(), target, ((control, 1),))]
        if value == 0:
            ops = [GateOp(X.copy(), control)] + ops + [GateOp(X.copy(), control)]
        return ops
    alpha, beta, gamma, delta = zyz_angles(gate)
    a = rz(beta) @ ry(gamma / 2)
    b = ry(-gamma / 2) @ rz(-(delta + beta) / 2)
    c = rz((delta - beta) / 2)
    ops = [
        GateOp(c, target),
        GateOp(X.copy(), target, ((control, 1),)),
        GateOp(b, target),
        GateOp(X.copy(), target, ((control, 1),)),
        GateOp(a, target),
        GateOp(np.diag([1.0, cmath.exp(1j * alpha)]), control),
    ]
    if value == 0:
        ops = [GateOp(X.copy(), control)] + ops + [GateOp(X.copy(), control)]
    return [op for op in ops if not np.allclose(op.gate, I2, atol=1e-15) or op.controls]


def _unitary_sqrt(u: np.ndarray) -> np.ndarray:
    t, q = schur(u, output="complex")
    return q @ np.diag(np.sqrt(np.diag(t).astype(complex))) @ q.conj().T


def multi_controlled(gate: np.ndarray, target: int, controls: list[tuple[int, int]]) -> list[GateOp]:
    """Expand a multiply-controlled single-qubit gate into singles and CNOTs.

    Uses the square-root recursion: with V^2 = gate,
    C^m(gate) = C^{m-1}(V) . C^{m-1}(X)[-> c_m] . C_{c_m}(V^dag) . C^{m-1}(X)[-> c_m] . C_{c_m}(V)
    (rightmost first in time).
    """
    if not controls:
        return [] if np.allclose(gate, I2, atol=1e-15) else [GateOp(gate, target)]
    flips = [GateOp(X.copy(), r) for r, v in controls if v == 0]
    ctrl = [r for r, _ in controls]
    if len(ctrl) == 1:
        body = controlled_single(gate, target, ctrl[0], 1)
    else:
        v = _unitary_sqrt(gate)
        last, rest = ctrl[-1], [(r, 1) for r in ctrl[:-1]]
        body = (
            controlled_single(v, target, last, 1)
            + multi_controlled(X, last, rest)
            + controlled_single(v.conj().T, target, last, 1)
            + multi_controlled(X, last, rest)
            + multi_controlled(v, target, rest)
        )
    return flips + body + flips


# ---------------------------------------------------------------- two qubits

def _tensor_factor(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a 4x4 product ``a ⊗ b`` into its factors."""
    r = k.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0, :].reshape(2, 2)
    return a, b


def _simultaneous_real_diag(m: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Real orthogonal P with P^T m P diagonal, for complex symmetric unitary ``m``."""
    re, im = m.real, m.imag
    for _ in range(100):
        c = rng.normal(size=2)
        _, p = np.linalg.eigh(c[0] * re + c[1] * im)
        d = p.T @ m @ p
        if np.max(np.abs(d - np.diag(np.diag(d)))) < 1e-12:
            return p
    raise ArithmeticError("failed to diagonalise the symmetric unitary")  # pragma: no cover


# eigenvalues of XX, YY, ZZ on each magic-basis column
_MAGIC_SIGNS = np.array([[np.vdot(MAGIC[:, j], P @ MAGIC[:, j]).real for P in (np.kron(X, X), np.kron(Y, Y), np.kron(Z, Z))]
                         for j in range(4)])


def kak(u: np.ndarray) -> tuple[complex, tuple[np.ndarray, np.ndarray], tuple[float, float, float], tuple[np.ndarray, np.ndarray]]:
    """Canonical decomposition u = phase (a1 ⊗ a0) exp(i(x XX + y YY + z ZZ)) (b1 ⊗ b0)."""
    rng = np.random.default_rng(0)
    det = np.linalg.det(u)
    su = u / det ** 0.25
    up = MAGIC_DAG @ su @ MAGIC
    p = _simultaneous_real_diag(up.T @ up, rng)
    if np.linalg.det(p) < 0:
        p[:, 0] *= -1
    d2 = np.diag(p.T @ up.T @ up @ p)
    d = np.sqrt(d2)
    if np.prod(d).real < 0:
        d[0] *= -1
    k1 = up @ p @ np.diag(1 / d)
    k2 = p.T
    left = MAGIC @ k1 @ MAGIC_DAG
    right = MAGIC @ k2 @ MAGIC_DAG
    a1, a0 = _tensor_factor(left)
    b1, b0 = _tensor_factor(right)
    angles = np.angle(d)
    sol = np.linalg.solve(np.hstack([_MAGIC_SIGNS, np.ones((4, 1))]), angles)
    x, y, z, extra = sol
    core = canonical_gate(x, y, z)
    rebuilt = np.kron(a1, a0) @ core @ np.kron(b1, b0)
    k = np.unravel_index(np.argmax(np.abs(rebuilt)), rebuilt.shape)
    phase = u[k] / rebuilt[k]
    return phase, (a1, a0), (x, y, z), (b1, b0)


def canonical_gate(x: float, y: float, z: float) -> np.ndarray:
    """exp(i(x XX + y YY + z ZZ)), computed in the magic basis where it is diagonal."""
    diag = np.exp(1j * _MAGIC_SIGNS @ np.array([x, y, z]))
    return MAGIC @ np.diag(diag) @ MAGIC_DAG


def _canonical_circuit(x: float, y: float, z: float) -> list[GateOp]:
    """Three-CNOT circuit equal to ``canonical_gate(x, y, z)`` up to global phase."""
    t1, t2, t3 = np.pi / 2 - 2 * z, 2 * x - np.pi / 2, np.pi / 2 - 2 * y
    return [
        GateOp(rz(-np.pi / 2), 1),
        GateOp(X.copy(), 0, ((1, 1),)),
        GateOp(rz(t1), 0),
        GateOp(ry(t2), 1),
        GateOp(X.copy(), 1, ((0, 1),)),
        GateOp(ry(t3), 1),
        GateOp(X.copy(), 0, ((1, 1),)),
        GateOp(rz(np.pi / 2), 0),
    ]


def _merge_singles(ops: list[GateOp]) -> list[GateOp]:
    """Fuse adjacent uncontrolled gates on the same role and drop identities."""
    out: list[GateOp] = []
    for op in ops:
        if not op.controls:
            for j in range(len(out) - 1, -1, -1):
                prev = out[j]
                touches = prev.target == op.target or any(r == op.target for r, _ in prev.controls)
                if not touches:
                    continue
                if not prev.controls and prev.target == op.target:
                    out[j] = GateOp(op.gate @ prev.gate, op.target)
                    op = None
                break
            if op is not None:
                out.append(op)
        else:
            out.append(op)
    return [op for op in out if op.controls or not np.allclose(op.gate, I2, atol=1e-14)]


def _finish(ops: list[GateOp], target: np.ndarray, k: int) -> GateSequence:
    seq = GateSequence(k, ops, 1.0)
    raw = seq.reassemble()
    idx = np.unravel_index(np.argmax(np.abs(raw)), raw.shape)
    ph = target[idx] / raw[idx]
    seq.global_phase = complex(ph / abs(ph))
    return seq


def decompose_two_qubit(u) -> GateSequence:
    """Decompose a 4x4 unitary into single-qubit gates and at most three CNOTs.

    The emitted sequence, including its ``global_phase``, multiplies back to
    ``u``; without the phase it matches ``u`` up to a global phase.

    Raises
    ------
    UsageError
        If ``u`` is not a 4x4 unitary.
    """
    try:
        u = check_unitary(u, "two-qubit unitary", tol=1e-8, arity=2)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if _is_identity_up_to_phase(u):
        return GateSequence(2, [], complex(u[0, 0]))
    if phase_distance(u, CNOT) < 1e-12:
        return _finish([GateOp(X.copy(), 1, ((0, 1),))], u, 2)
    if phase_distance(u, SWAP_CNOT_REVERSED) < 1e-12:
        return _finish([GateOp(X.copy(), 0, ((1, 1),))], u, 2)
    _, (a1, a0), (x, y, z), (b1, b0) = kak(u)
    ops = [GateOp(b1, 0), GateOp(b0, 1)] + _canonical_circuit(x, y, z) + [GateOp(a1, 0), GateOp(a0, 1)]
    return _finish(_merge_singles(ops), u, 2)


SWAP_CNOT_REVERSED = np.array([[1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0], [0, 1, 0, 0]], dtype=complex)


# ---------------------------------------------------------------- k qubits

def gray_code(k: int) -> list[int]:
    return [i ^ (i >> 1) for i in range(1 << k)]


def _bit_role(a: int, b: int, k: int) -> int:
    """Role (0 = most significant) of the single bit where ``a`` and ``b`` differ."""
    diff = a ^ b
    return k - 1 - (diff.bit_length() - 1)


def _two_level_op(w: np.ndarray, lo: int, hi: int, k: int) -> list[GateOp]:
    """Gates acting as ``w`` on span{|lo>, |hi>} (states differing in one bit).

    ``w`` is written in the (|lo>, |hi>) basis.
    """
    role = _bit_role(lo, hi, k)
    bit = k - 1 - role
    if (lo >> bit) & 1:
        # put the state with target bit 0 first
        w = X @ w @ X
        lo, hi = hi, lo
    controls = [(r, (lo >> (k - 1 - r)) & 1) for r in range(k) if r != role]
    return multi_controlled(w, role, controls)


def decompose_block(u) -> GateSequence:
    """Decompose a ``2**k`` unitary (``k <= 4``) into singles and CNOTs.

    Givens rotations between Gray-code neighbours reduce ``u`` to a diagonal
    phase matrix; every rotation is a fully-controlled single-qubit gate,
    expanded by ``multi_controlled``.
    """
    m = np.asarray(u, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise UsageError("block unitary must be square")
    k = m.shape[0].bit_length() - 1
    if k > MAX_BLOCK_SITES:
        raise ResourceError(f"block of {k} sites exceeds decomposition cap of {MAX_BLOCK_SITES}")
    try:
        m = check_unitary(m, "block unitary", tol=1e-8)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if k == 1:
        if _is_identity_up_to_phase(m):
            return GateSequence(1, [], complex(m[0, 0]))
        return GateSequence(1, [GateOp(m, 0)], 1.0)
    if k == 2:
        return decompose_two_qubit(m)
    if _is_identity_up_to_phase(m):
        return GateSequence(k, [], complex(m[0, 0]))
    order = gray_code(k)
    n = 1 << k
    # work in Gray order: row/column r of w is basis state order[r]
    w = m[np.ix_(order, order)].copy()
    applied: list[tuple[np.ndarray, int, int]] = []  # (2x2 in gray rows (r-1, r), r-1, r)
    for col in range(n - 1):
        for r in range(n - 1, col, -1):
            a, b = w[r - 1, col], w[r, col]
            if abs(b) < 1e-14:
                continue
            norm = np.hypot(abs(a), abs(b))
            g = np.array([[np.conj(a), np.conj(b)], [-b, a]], dtype=complex) / norm
            w[[r - 1, r], :] = g @ w[[r - 1, r], :]
            applied.append((g, r - 1, r))
        # push the phase of the pivot onto the next Gray state
        ph = w[col, col] / abs(w[col, col])
        if abs(ph - 1) > 1e-14:
            g = np.diag([np.conj(ph), ph])
            w[[col, col + 1], :] = g @ w[[col, col + 1], :]
            applied.append((g, col, col + 1))
    ph = w[n - 1, n - 1]
    if abs(ph - 1) > 1e-14:
        g = np.diag([1.0, np.conj(ph)])
        w[[n - 2, n - 1], :] = g @ w[[n - 2, n - 1], :]
        applied.append((g, n - 2, n - 1))
    # now G_L ... G_1 m = I, so m = G_1^dag ... G_L^dag: G_L^dag acts first
    ops: list[GateOp] = []
    for g, r0, r1 in reversed(applied):
        ops.extend(_two_level_op(g.conj().T, order[r0], order[r1], k))
    ops = _merge_singles(ops)
    return _finish(ops, m, k)
