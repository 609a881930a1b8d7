"""Zadoff-Chu root sequences, cyclically shifted preambles and correlation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ZcRoot",
    "Preamble",
    "PreambleBank",
    "generate_root",
    "derive_preamble",
    "cyclic_correlate",
    "is_prime",
]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % f for f in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class ZcRoot:
    root_index: int
    length: int
    samples: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class Preamble:
    root: ZcRoot
    preamble_index: int
    shift_step: int
    delay_index: int
    tau_samples: int
    samples: np.ndarray = field(repr=False, compare=False)

    @property
    def total_shift(self) -> int:
        return self.preamble_index * self.shift_step + (self.delay_index - 1) * self.tau_samples


def generate_root(r: int, n_zc: int, strict: bool = False) -> ZcRoot:
    """Root sequence ``exp(-j*pi*r*n*(n+1)/n_zc)`` for ``n = 0..n_zc-1``.

    Non-prime lengths lose the ideal correlation property; they are rejected
    when ``strict`` is set and produce a warning otherwise.
    """
    if n_zc < 2:
        raise ValueError(f"n_zc must be >= 2, got {n_zc}")
    if not 1 <= r <= n_zc - 1:
        raise ValueError(f"root index {r} outside [1, {n_zc - 1}]")
    if not is_prime(n_zc):
        if strict:
            raise ValueError(f"n_zc={n_zc} is not prime")
        warnings.warn(f"n_zc={n_zc} is not prime; ZC correlation sidelobes are not zero", stacklevel=2)
    n = np.arange(n_zc, dtype=np.float64)
    # n*(n+1) is always even, so reduce modulo 2*n_zc before the phase to keep precision
    phase_num = np.mod(r * n * (n + 1), 2 * n_zc)
    samples = np.exp(-1j * np.pi * phase_num / n_zc)
    samples.setflags(write=False)
    return ZcRoot(r, n_zc, samples)


def derive_preamble(root: ZcRoot, i: int, n_cs: int, j: int, tau_samples: int = 1) -> Preamble:
    """Preamble ``i`` seen from timing group ``j`` (1-based).

    ``samples[n] = root[(n + i*n_cs + (j-1)*tau_samples) mod N_ZC]``.
    """
    if i < 0 or n_cs < 1 or j < 1 or tau_samples < 0:
        raise ValueError("invalid preamble coordinates")
    shift = i * n_cs + (j - 1) * tau_samples
    if shift >= root.length:
        raise ValueError(f"combined shift {shift} >= N_ZC={root.length}")
    samples = np.roll(root.samples, -shift)
    samples.setflags(write=False)
    return Preamble(root, i, n_cs, j, tau_samples, samples)


def cyclic_correlate(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``out[s] = |sum_n a[n] * conj(b[(n + s) mod N])|`` for every lag ``s``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    # sum_n a[n] conj(b[n+s]) = conj(sum_n b[n+s] conj(a[n]))
    return np.abs(np.fft.ifft(np.fft.fft(b) * np.conj(np.fft.fft(a))))


class PreambleBank:
    """All received-preamble templates ``P[i, j]`` for a PRACH configuration.

    Preambles are packed onto as few roots as possible: a root of length
    ``N_ZC`` carries ``floor(N_ZC / n_cs)`` preambles with cyclic-shift
    spacing ``n_cs = n_t * tau_samples`` so the delayed copies of one preamble
    never alias onto another. When ``n_s`` exceeds that, further roots are
    used. Roots are chosen greedily among indices coprime with ``N_ZC``,
    starting at ``first_root``: each next one minimises the larger of its own
    autocorrelation sidelobe and its peak cross-correlation with the roots
    already chosen (ties go to the lowest index). For prime lengths that is
    ascending order.

    Parameters
    ----------
    n_s, n_t : int
        Number of preambles and timing groups.
    n_zc : int
        Sequence length.
    tau_samples : int
        Cyclic shift, in samples, between adjacent timing groups.
    first_root : int
        Root index of the first root sequence.
    """

    def __init__(self, n_s: int, n_t: int, n_zc: int = 100, tau_samples: int = 1,
                 first_root: int = 1, strict: bool = False):
        if n_s < 1 or n_t < 1 or tau_samples < 1:
            raise ValueError("n_s, n_t and tau_samples must be positive")
        self.n_s, self.n_t, self.n_zc, self.tau_samples = n_s, n_t, n_zc, tau_samples
        self.n_cs = n_t * tau_samples
        per_root = n_zc // self.n_cs
        if per_root < 1:
            raise ValueError(f"n_zc={n_zc} too short for {n_t} timing groups")
        self.per_root = per_root
        n_roots = -(-n_s // per_root)
        candidates = [r for r in range(first_root, n_zc) if math.gcd(r, n_zc) == 1]
        if len(candidates) < n_roots:
            raise ValueError("not enough roots coprime with n_zc")
        with warnings.catch_warnings():
            if not strict:
                warnings.simplefilter("ignore")
            pool = {r: generate_root(r, n_zc, strict=strict) for r in candidates}
        self.roots = [pool[candidates[0]]]
        # non-prime lengths have root-dependent sidelobes
        worst = {r: float(np.sort(cyclic_correlate(pool[r].samples, pool[r].samples))[-2])
                 for r in candidates[1:]}
        while len(self.roots) < n_roots:
            last = self.roots[-1].samples
            for r in worst:
                worst[r] = max(worst[r], float(cyclic_correlate(pool[r].samples, last).max()))
            # round so that equal peaks compare equal despite FFT rounding
            pick = min(worst, key=lambda r: (round(worst[r], 6), r))
            self.roots.append(pool[pick])
            del worst[pick]
        templates = np.empty((n_s, n_t, n_zc), dtype=np.complex128)
        for i in range(n_s):
            root = self.roots[i // per_root]
            for j in range(1, n_t + 1):
                templates[i, j - 1] = derive_preamble(root, i % per_root, self.n_cs, j, tau_samples).samples
        self._check_collisions()
        templates.setflags(write=False)
        self.templates = templates

    def _check_collisions(self) -> None:
        seen = set()
        for i in range(self.n_s):
            for j in range(self.n_t):
                key = (i // self.per_root, (i % self.per_root) * self.n_cs + j * self.tau_samples)
                if key in seen:
                    raise ValueError(f"shift collision at preamble {i}, timing group {j + 1}")
                seen.add(key)

    @property
    def matrix(self) -> np.ndarray:
        """Templates flattened to shape ``(n_s * n_t, n_zc)``, row ``i * n_t + j``."""
        return self.templates.reshape(self.n_s * self.n_t, self.n_zc)

    def __getitem__(self, ij):
        i, j = ij
        return self.templates[i, j]
