"""Elementary cellular automata and their reversible quantum embeddings.

Classical rows are written left to right starting at cell 0 and wrap
periodically. A rule number's bit ``4l + 2c + r`` is the new value of a
cell whose left neighbour, self and right neighbour are ``l, c, r``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import QCAModel, check_lattice
from .exceptions import ConfigurationError, UsageError
from .lattice import Lattice
from .mqca import MargolusQCA, Tiling


@dataclass(frozen=True)
class RuleTable:
    rule_number: int

    def __post_init__(self):
        if not 0 <= int(self.rule_number) <= 255:
            raise ConfigurationError(f"elementary rule number must be in 0..255, got {self.rule_number}")
        object.__setattr__(self, "rule_number", int(self.rule_number))

    @property
    def table(self) -> dict[tuple[int, int, int], int]:
        return {(n >> 2 & 1, n >> 1 & 1, n & 1): (self.rule_number >> n) & 1 for n in range(8)}

    @property
    def lookup(self) -> np.ndarray:
        """Output bit indexed by ``4l + 2c + r``."""
        return np.array([(self.rule_number >> n) & 1 for n in range(8)], dtype=np.uint8)

    @classmethod
    def from_table(cls, table) -> "RuleTable":
        return cls(sum(int(table[(n >> 2 & 1, n >> 1 & 1, n & 1)]) << n for n in range(8)))


@dataclass(frozen=True)
class BitRow:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=np.uint8).ravel()
        if b.size < 3:
            raise ConfigurationError(f"rows need at least 3 cells, got {b.size}")
        if np.any(b > 1):
            raise ConfigurationError("row cells must be 0 or 1")
        object.__setattr__(self, "bits", b)

    @classmethod
    def parse(cls, text: str) -> "BitRow":
        mapping = {"0": 0, "1": 1, ".": 0, "#": 1}
        try:
            return cls(np.array([mapping[ch] for ch in text.strip()], dtype=np.uint8))
        except KeyError as exc:
            raise ConfigurationError(f"row may only contain 0/1 or ./#, found {exc.args[0]!r}") from None

    @classmethod
    def single_seed(cls, width: int, position: int | None = None) -> "BitRow":
        b = np.zeros(width, dtype=np.uint8)
        if width:
            b[width // 2 if position is None else position % width] = 1
        return cls(b)

    @property
    def width(self) -> int:
        return int(self.bits.size)

    def __str__(self):
        return "".join(map(str, self.bits))

    def render(self) -> str:
        return "".join("#" if v else "." for v in self.bits)

    def __eq__(self, other):
        return isinstance(other, BitRow) and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash(self.bits.tobytes())


def _as_rule(rule) -> RuleTable:
    return rule if isinstance(rule, RuleTable) else RuleTable(rule)


def _as_row(row) -> BitRow:
    if isinstance(row, BitRow):
        return row
    if isinstance(row, str):
        return BitRow.parse(row)
    return BitRow(row)


def eca_step(rule, row) -> BitRow:
    rule, row = _as_rule(rule), _as_row(row)
    b = row.bits
    idx = (np.roll(b, 1) << 2) | (b << 1) | np.roll(b, -1)
    return BitRow(rule.lookup[idx])


def eca_run(rule, row, steps: int) -> list[BitRow]:
    if steps < 0:
        raise UsageError("steps must be non-negative")
    rule, row = _as_rule(rule), _as_row(row)
    rows = [row]
    for _ in range(steps):
        rows.append(eca_step(rule, rows[-1]))
    return rows


# ------------------------------------------------------------ reversible embeddings

def permutation_matrix(perm) -> np.ndarray:
    """Unitary sending basis state ``j`` to ``perm[j]``."""
    perm = np.asarray(perm, dtype=int).ravel()
    n = perm.size
    if n == 0 or n & (n - 1) or sorted(perm.tolist()) != list(range(n)):
        raise UsageError("block table must be a bijection of 2**k block states")
    u = np.zeros((n, n), dtype=complex)
    u[perm, np.arange(n)] = 1.0
    return u


def reversible_block_to_mqca(perm, tiling_a: Tiling, tiling_b: Tiling, lattice, perm_b=None) -> MargolusQCA:
    """Margolus QCA whose block unitaries are the permutation matrices of a reversible block rule.

    ``perm[j]`` is the image of block state ``j`` (first block site is the
    most significant bit). ``perm_b`` defaults to ``perm``.
    """
    u_a = permutation_matrix(perm)
    u_b = u_a if perm_b is None else permutation_matrix(perm_b)
    return MargolusQCA(check_lattice(lattice), tiling_a, tiling_b, u_a, u_b)


def block_ca_step(bits: np.ndarray, perm, tiling_a: Tiling, tiling_b: Tiling, lattice, perm_b=None) -> np.ndarray:
    """Classical reference: one step of the block CA on a bit array indexed by site."""
    lat = check_lattice(lattice)
    out = np.asarray(bits, dtype=np.uint8).copy()
    for tiling, table in ((tiling_a, perm), (tiling_b, perm if perm_b is None else perm_b)):
        for blk in tiling.blocks(lat):
            k = len(blk)
            state = 0
            for s in blk:
                state = (state << 1) | int(out[s])
            image = int(table[state])
            for r, s in enumerate(blk):
                out[s] = (image >> (k - 1 - r)) & 1
    return out


class SecondOrderECA(QCAModel):
    """Reversible second-order form of an elementary rule as a permutation QCA.

    Cell ``x`` holds a previous value on site ``2x`` and a current value on
    site ``2x + 1``. One step maps ``(p, c)`` to ``(c, f(left, c, right) xor p)``,
    which is a bijection for any rule ``f``; rule 30 gives the reversible
    rule known as 30R.

    Parameters
    ----------
    width : int
        Number of cells; the quantum lattice has ``2 * width`` sites.
    rule : int, default=30
    n_steps : int, default=1
    """

    def __init__(self, width=4, rule=30, n_steps=1):
        self.width = width
        self.rule = rule
        self.n_steps = n_steps

    def _fit(self):
        w = int(self.width)
        if w < 3:
            raise ConfigurationError(f"need at least 3 cells, got {w}")
        self.rule_ = RuleTable(self.rule)
        self.lattice_ = Lattice((2 * w,))
        self.lattice_.check_cap()
        idx = np.arange(1 << (2 * w), dtype=np.int64)
        prev = np.stack([(idx >> (2 * x)) & 1 for x in range(w)])
        cur = np.stack([(idx >> (2 * x + 1)) & 1 for x in range(w)])
        f = self.rule_.lookup[(np.roll(cur, 1, axis=0) << 2) | (cur << 1) | np.roll(cur, -1, axis=0)]
        new_cur = f ^ prev
        image = np.zeros_like(idx)
        for x in range(w):
            image |= cur[x] << (2 * x)
            image |= new_cur[x].astype(np.int64) << (2 * x + 1)
        self.image_ = image

    def _step(self, amps):
        out = np.zeros_like(amps)
        out[..., self.image_] = amps
        return out

    def classical_step(self, prev: BitRow, cur: BitRow) -> tuple[BitRow, BitRow]:
        nxt = BitRow(eca_step(self.rule, cur).bits ^ prev.bits)
        return cur, nxt

    @property
    def period_(self) -> tuple[int, ...]:
        return (2,)

    def light_cone(self, site: int) -> set[int]:
        # exact dependency graph: p_x feeds c_x; c_x feeds p_x and c_{x-1..x+1}
        self._ensure_fitted()
        w = int(self.width)
        x, is_cur = divmod(int(site), 2)
        if not is_cur:
            return {2 * x, 2 * x + 1}
        return {2 * x + 1, 2 * x} | {2 * ((x + d) % w) + 1 for d in (-1, 0, 1)}

    def _influence_sets(self):
        w = int(self.width)
        return [[{2 * x} | {2 * ((x + d) % w) + 1 for d in (-1, 0, 1)} for x in range(w)],
                [{2 * x, 2 * x + 1} for x in range(w)]]
