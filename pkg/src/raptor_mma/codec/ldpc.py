"""High-rate LDPC precode for the Raptor construction.

The parity-check matrix is random with every column of weight 3. It is made
systematic by Gaussian elimination over GF(2): the pivot columns carry parity
bits and the remaining columns carry the message, so encoding is one small
matrix product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["LdpcPrecode", "build_precode", "ldpc_precode", "precode_length"]

MAX_SEED_RETRIES = 64


def precode_length(k: int, rate: float) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < rate <= 1:
        raise ValueError("precode rate must lie in (0, 1]")
    return max(k, int(round(k / rate)))


@dataclass(frozen=True, eq=False)
class LdpcPrecode:
    """Systematic LDPC code of length ``n`` carrying ``k`` message bits.

    Attributes
    ----------
    H : ndarray of uint8, shape (n - k, n)
        Parity-check matrix.
    info_pos, parity_pos : ndarray of int
        Codeword positions of message bits and parity bits.
    parity_map : ndarray of uint8, shape (n - k, k)
        ``parity = parity_map @ message (mod 2)``.
    seed : int
        Seed that produced a full-rank ``H``.
    """

    k: int
    n: int
    H: np.ndarray = field(repr=False)
    info_pos: np.ndarray = field(repr=False)
    parity_pos: np.ndarray = field(repr=False)
    parity_map: np.ndarray = field(repr=False)
    seed: int = 0

    @property
    def m(self) -> int:
        return self.n - self.k

    def encode(self, message) -> np.ndarray:
        msg = np.asarray(message, dtype=np.uint8)
        if msg.shape != (self.k,):
            raise ValueError(f"message must have length {self.k}")
        cw = np.zeros(self.n, dtype=np.uint8)
        cw[self.info_pos] = msg
        if self.m:
            cw[self.parity_pos] = (self.parity_map.astype(np.int64) @ msg) % 2
        return cw

    def syndrome(self, codeword) -> np.ndarray:
        return (self.H.astype(np.int64) @ np.asarray(codeword, dtype=np.int64)) % 2

    def check_lists(self) -> list[np.ndarray]:
        """Variable indices of each parity check."""
        return [np.flatnonzero(row) for row in self.H]


def _random_h(m: int, n: int, col_weight: int, rng: np.random.Generator) -> np.ndarray:
    H = np.zeros((m, n), dtype=np.uint8)
    w = col_weight
    if w >= m:
        # every column would cover every row; an even weight also makes the rows sum to zero
        w = max(1, m - 1 if (m - 1) % 2 else m - 2)
    # spread ones evenly: cycle through a shuffled row order so row weights stay balanced
    order = np.concatenate([rng.permutation(m) for _ in range(-(-n * w // m) + 1)])
    pos = 0
    for col in range(n):
        rows = []
        while len(rows) < w:
            r = order[pos % order.size]
            pos += 1
            if r not in rows:
                rows.append(r)
        H[rows, col] = 1
    return H


def _systematize(H: np.ndarray):
    """Row-reduce ``H``; return (pivot columns, reduced matrix) or None if rank deficient."""
    A = H.copy()
    m, n = A.shape
    pivots = []
    row = 0
    for col in range(n):
        if row == m:
            break
        nz = np.flatnonzero(A[row:, col])
        if nz.size == 0:
            continue
        p = row + nz[0]
        if p != row:
            A[[row, p]] = A[[p, row]]
        others = np.flatnonzero(A[:, col])
        others = others[others != row]
        A[others] ^= A[row]
        pivots.append(col)
        row += 1
    if row < m:
        return None
    return np.array(pivots), A


def build_precode(k: int, rate: float = 0.98, seed: int = 0, col_weight: int = 3) -> LdpcPrecode:
    """Build a seeded precode; retries with ``seed + 1, ...`` if ``H`` is rank deficient."""
    n = precode_length(k, rate)
    m = n - k
    if m == 0:
        empty = np.zeros((0, n), dtype=np.uint8)
        return LdpcPrecode(k, n, empty, np.arange(n), np.zeros(0, dtype=np.int64),
                           np.zeros((0, k), dtype=np.uint8), seed)
    for attempt in range(MAX_SEED_RETRIES):
        s = seed + attempt
        H = _random_h(m, n, col_weight, np.random.default_rng(s))
        red = _systematize(H)
        if red is None:
            continue
        pivots, A = red
        info = np.setdiff1d(np.arange(n), pivots)
        # reduced rows: parity[pivot_r] + sum_{info} A[r, info] * msg = 0
        parity_map = A[:, info].copy()
        for arr in (H, info, pivots, parity_map):
            arr.setflags(write=False)
        return LdpcPrecode(k, n, H, info, pivots, parity_map, s)
    raise RuntimeError(f"could not build a full-rank precode from seed {seed}")


def ldpc_precode(message, k: int, rate: float = 0.98, seed: int = 0) -> np.ndarray:
    return build_precode(k, rate, seed).encode(message)
