"""Random-access phase: arrivals, cell assignment, PRACH synthesis and load estimation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .zc import PreambleBank

__all__ = [
    "SAMPLE_PERIOD",
    "CellGeometry",
    "LoadMatrix",
    "PrachObservation",
    "LoadEstimate",
    "sample_arrivals",
    "draw_device_cells",
    "assign_devices",
    "synthesize_prach",
    "estimate_load",
    "estimation_accuracy",
]

SAMPLE_PERIOD = 32.552e-9  # LTE basic time unit T_s, seconds


@dataclass(frozen=True)
class CellGeometry:
    """Disk cell split into rings of equal round-trip-delay quantum.

    Devices at distance ``r`` fall in ring ``ceil(r / (c * tau))``.
    """

    radius: float = 1500.0
    delay_quantum: float = 8 * SAMPLE_PERIOD
    light_speed: float = 3e8

    def __post_init__(self):
        if self.radius <= 0 or self.delay_quantum <= 0 or self.light_speed <= 0:
            raise ValueError("geometry parameters must be positive")

    @property
    def ring_width(self) -> float:
        return self.light_speed * self.delay_quantum

    @property
    def timing_groups(self) -> int:
        # guard against R being an exact multiple up to rounding
        return max(1, math.ceil(self.radius / self.ring_width - 1e-9))

    def ring_probabilities(self) -> np.ndarray:
        """Probability of each ring for a uniform position in the disk."""
        edges = np.minimum(np.arange(self.timing_groups + 1) * self.ring_width, self.radius)
        return np.diff(edges ** 2) / self.radius ** 2

    def sample_groups(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """1-based timing group of ``n`` devices placed uniformly in the disk."""
        r = self.radius * np.sqrt(rng.random(n))
        return np.clip(np.ceil(r / self.ring_width), 1, self.timing_groups).astype(np.int64)


@dataclass(frozen=True, eq=False)
class LoadMatrix:
    """Device counts per (preamble, timing group); column ``j`` is group ``j + 1``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2 or np.any(c < 0):
            raise ValueError("counts must be a non-negative matrix")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @classmethod
    def zeros(cls, n_s: int, n_t: int) -> "LoadMatrix":
        return cls(np.zeros((n_s, n_t), dtype=np.int64))

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def groups(self) -> list[tuple[int, int, int]]:
        """Non-empty cells as ``(preamble, timing_group, count)``, row-major, 0-based group index."""
        ii, jj = np.nonzero(self.counts)
        return [(int(i), int(j), int(self.counts[i, j])) for i, j in zip(ii, jj)]

    def __eq__(self, other):
        return isinstance(other, LoadMatrix) and np.array_equal(self.counts, other.counts)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PrachObservation:
    samples: np.ndarray
    noise_variance: float
    per_device_power: float = 1.0


@dataclass(frozen=True)
class LoadEstimate:
    """Result of the load estimator; ``capped`` marks a partial estimate."""

    load: LoadMatrix
    passes: int
    capped: bool
    residual_energy: float = field(default=0.0)


def sample_arrivals(lam: float, rng: np.random.Generator) -> int:
    if lam < 0:
        raise ValueError("arrival rate must be non-negative")
    return int(rng.poisson(lam))


def draw_device_cells(L: int, n_s: int, geometry: CellGeometry, rng: np.random.Generator
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Preamble index (0-based) and timing group (1-based) of each of ``L`` devices."""
    if L < 0:
        raise ValueError("L must be >= 0")
    pre = rng.integers(0, n_s, size=L)
    grp = geometry.sample_groups(L, rng)
    return pre, grp


def assign_devices(L: int, n_s: int, geometry: CellGeometry, rng: np.random.Generator) -> LoadMatrix:
    pre, grp = draw_device_cells(L, n_s, geometry, rng)
    counts = np.zeros((n_s, geometry.timing_groups), dtype=np.int64)
    np.add.at(counts, (pre, grp - 1), 1)
    return LoadMatrix(counts)


def synthesize_prach(load: LoadMatrix, bank: PreambleBank, noise_variance: float,
                     rng: np.random.Generator | None) -> PrachObservation:
    """Received PRACH block: every device adds its delayed preamble at unit power."""
    if load.shape[0] > bank.n_s or load.shape[1] > bank.n_t:
        raise ValueError(f"load of shape {load.shape} needs preambles missing from the bank "
                         f"({bank.n_s} x {bank.n_t})")
    if noise_variance < 0:
        raise ValueError("noise variance must be >= 0")
    n_s, n_t = load.shape
    y = np.tensordot(load.counts.astype(np.float64), bank.templates[:n_s, :n_t], axes=([0, 1], [0, 1]))
    if noise_variance > 0:
        if rng is None:
            raise ValueError("a random stream is required for noisy synthesis")
        s = math.sqrt(noise_variance / 2.0)
        y = y + s * (rng.standard_normal(bank.n_zc) + 1j * rng.standard_normal(bank.n_zc))
    return PrachObservation(np.asarray(y, dtype=np.complex128), float(noise_variance))


def estimate_load(obs: PrachObservation, bank: PreambleBank, corr_threshold: float | None = None,
                  energy_threshold: float | None = None, max_passes: int = 50,
                  energy_margin: float = 0.1) -> LoadEstimate:
    """Iterative correlate-and-subtract estimate of devices per cell.

    While the residual energy exceeds ``energy_threshold``, sweep every
    (timing group, preamble) pair; if the correlation with the residual
    exceeds ``corr_threshold``, count one device there and subtract its
    template. A sweep without detections also ends the loop.

    Devices arrive with a positive real amplitude, so the test uses the real
    part of the correlation. A magnitude test would re-detect the negative
    image left by a wrong subtraction and diverge; with the real part and a
    threshold above ``N_ZC / 2`` every subtraction lowers the residual energy.

    Parameters
    ----------
    corr_threshold : float, optional
        Defaults to ``0.65 * N_ZC * sqrt(P0)``.
    energy_threshold : float, optional
        Defaults to ``N_ZC * noise_variance * (1 + energy_margin)``, at least
        ``1e-9 * N_ZC``.
    max_passes : int
        Sweep cap; hitting it sets ``capped``.
    """
    n_zc = bank.n_zc
    if corr_threshold is None:
        corr_threshold = 0.65 * n_zc * math.sqrt(obs.per_device_power)
    if energy_threshold is None:
        # the floor absorbs rounding left by exact subtractions in a noiseless block
        energy_threshold = max(n_zc * obs.noise_variance * (1.0 + energy_margin), 1e-9 * n_zc)
    if corr_threshold <= 0:
        raise ValueError("correlation threshold must be positive")
    B = bank.matrix  # row m = i * n_t + j
    y = np.asarray(obs.samples, dtype=np.complex128)
    corr = np.conj(B) @ y  # <Y, P_m>
    gram = np.conj(B) @ B.T  # gram[a, b] = <P_b, P_a>
    norms = np.real(np.diag(gram))
    energy = float(np.real(np.vdot(y, y)))
    counts = np.zeros(B.shape[0], dtype=np.int64)
    # sweep timing groups in the outer loop, preambles inner
    order = (np.arange(bank.n_s)[None, :] * bank.n_t + np.arange(bank.n_t)[:, None]).ravel()
    passes, capped = 0, False
    while energy > energy_threshold:
        if passes >= max_passes:
            capped = True
            break
        passes += 1
        hit = False
        for m in order:
            c = corr[m]
            if c.real > corr_threshold:
                counts[m] += 1
                energy += norms[m] - 2.0 * c.real
                corr -= gram[:, m]
                hit = True
        if not hit:
            break
    load = LoadMatrix(counts.reshape(bank.n_s, bank.n_t))
    return LoadEstimate(load, passes, capped, max(energy, 0.0))


def estimation_accuracy(est: LoadMatrix, truth: LoadMatrix) -> float:
    """Signed relative error of the estimated device total."""
    if est.shape != truth.shape:
        raise ValueError("shape mismatch")
    t, e = truth.total, est.total
    if t == 0:
        return 0.0 if e == 0 else math.inf
    return (e - t) / t
