"""Weight-coefficient designs and the superposed BPSK channel.

All profiles are normalised to unit total receive power, ``sum(r * w**2) == 1``,
with noise variance ``1 / total_snr``. Effective SNRs are invariant to a
common power scale, so a design that fixes per-device powers can always be
expressed this way.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "WeightProfile",
    "LayeredFrame",
    "eqw_profile",
    "exw_optimal_weights",
    "exw_for_total_snr",
    "exw_random_assignment",
    "grw_profile",
    "grw_total_snr",
    "adaptive_target_snr",
    "superpose",
    "effective_snrs",
    "sum_rate",
    "InfeasibleTarget",
]


class InfeasibleTarget(ValueError):
    """A group is too large for the requested per-device target SNR."""


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """Distinct weight levels in decoding order with their multiplicities.

    Attributes
    ----------
    weights : ndarray
        Amplitude of each level, non-increasing.
    multiplicities : ndarray of int
        Devices on each level; zero-count levels are allowed.
    target_snr : float
        Design per-device SNR.
    total_snr : float
        ``1 / noise_variance``.
    design : str
        ``"eqw"``, ``"exw"`` or ``"grw"``.
    assignment : ndarray of int, optional
        Level chosen by each device, in device (arrival) order.
    """

    weights: np.ndarray
    multiplicities: np.ndarray
    target_snr: float
    total_snr: float
    design: str = "custom"
    assignment: np.ndarray | None = field(default=None)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        r = np.array(self.multiplicities, dtype=np.int64)
        if w.shape != r.shape or w.ndim != 1:
            raise ValueError("weights and multiplicities must be vectors of equal length")
        if np.any(r < 0) or np.any(w < 0):
            raise ValueError("negative weight or multiplicity")
        if r.sum() < 1:
            raise ValueError("profile has no devices")
        if np.any(np.diff(w[r > 0]) > 1e-12 * w.max()):
            raise ValueError("weights must be non-increasing in decoding order")
        power = float(np.dot(r, w * w))
        if abs(power - 1.0) > 1e-9:
            raise ValueError(f"total receive power {power!r} != 1")
        if not self.total_snr > 0:
            raise ValueError("total SNR must be positive")
        for name, arr in (("weights", w), ("multiplicities", r)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.assignment is not None:
            a = np.array(self.assignment, dtype=np.int64)
            if a.size != r.sum() or np.any(np.bincount(a, minlength=r.size) != r):
                raise ValueError("assignment does not match multiplicities")
            a.setflags(write=False)
            object.__setattr__(self, "assignment", a)

    @property
    def noise_variance(self) -> float:
        return 1.0 / self.total_snr

    @property
    def n_devices(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def device_weights(self) -> np.ndarray:
        """Weight of every device in decoding order."""
        return np.repeat(self.weights, self.multiplicities)

    @property
    def device_levels(self) -> np.ndarray:
        return np.repeat(np.arange(self.weights.size), self.multiplicities)

    def decoding_order(self) -> np.ndarray:
        """Device indices in decoding order; equal weights keep arrival order."""
        if self.assignment is None:
            return np.arange(self.n_devices)
        return np.argsort(self.assignment, kind="stable")

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["position", "level", "weight", "multiplicity", "effective_snr"])
        snr = effective_snrs(self)
        for pos, (lvl, w) in enumerate(zip(self.device_levels, self.device_weights)):
            wr.writerow([pos, int(lvl), repr(float(w)), int(self.multiplicities[lvl]), repr(float(snr[pos]))])
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class LayeredFrame:
    """Per-device BPSK streams (rows in decoding order) and their noisy sum."""

    symbols: np.ndarray
    received: np.ndarray
    profile: WeightProfile
    noise: np.ndarray = field(repr=False)


def _pow1p_minus1(g0: float, n: float) -> float:
    """``(1 + g0)**n - 1`` without cancellation for small ``g0``."""
    return math.expm1(n * math.log1p(g0))


def effective_snrs(profile: WeightProfile) -> np.ndarray:
    """Per-device SNR at its decoding stage, later layers counted as noise."""
    p = profile.device_weights ** 2
    after = np.concatenate([np.cumsum(p[::-1])[::-1][1:], [0.0]])
    return p / (after + profile.noise_variance)


def sum_rate(profile: WeightProfile) -> float:
    return float(np.sum(np.log1p(effective_snrs(profile))) / math.log(2.0))


def eqw_profile(L: int, total_snr: float) -> WeightProfile:
    if L < 1 or not total_snr > 0:
        raise ValueError("need L >= 1 and positive SNR")
    w = 1.0 / math.sqrt(L)
    sz = 1.0 / total_snr
    gmin = 1.0 / (L - 1 + L * sz)
    return WeightProfile(np.array([w]), np.array([L]), gmin, total_snr, "eqw")


def exw_optimal_weights(L: int, target_snr: float) -> WeightProfile:
    """Weights giving every one of ``L`` layers the effective SNR ``target_snr``.

    The total SNR is ``(1 + g0)**L - 1``; layer ``L - i`` has power
    ``(1 + g0)**i * g0 / total``.
    """
    if L < 1 or not target_snr > 0:
        raise ValueError("need L >= 1 and positive target SNR")
    total = _pow1p_minus1(target_snr, L)
    i = np.arange(L - 1, -1, -1, dtype=np.float64)  # decoding position 1..L  <->  i = L-1..0
    # (1+g0)**i * g0 / total, evaluated in log space to stay finite for large L
    logp = i * math.log1p(target_snr) + math.log(target_snr) - math.log(total)
    w = np.exp(0.5 * logp)
    # rescale away the last ulp of rounding so the power constraint is exact to 1e-15
    w /= math.sqrt(float(np.dot(w, w)))
    return WeightProfile(w, np.ones(L, dtype=np.int64), target_snr, total, "exw")


def exw_for_total_snr(L: int, total_snr: float) -> WeightProfile:
    """Lemma-style ExW profile whose total SNR is ``total_snr``."""
    g0 = math.expm1(math.log1p(total_snr) / L)
    prof = exw_optimal_weights(L, g0)
    return WeightProfile(prof.weights, prof.multiplicities, g0, total_snr, "exw")


def exw_random_assignment(L: int, target_snr: float, rng: np.random.Generator, n_levels: int | None = None
                          ) -> WeightProfile:
    """Each of ``L`` devices picks one of the ``n_levels`` optimal ExW levels at random.

    Devices keep the per-device powers of the optimal design; the profile is
    rescaled to unit power, which raises the total SNR to ``total * P`` where
    ``P = sum(r * w_opt**2)``.
    """
    if L < 1:
        raise ValueError("need L >= 1")
    n_levels = L if n_levels is None else int(n_levels)
    base = exw_optimal_weights(n_levels, target_snr)
    choice = rng.integers(0, n_levels, size=L)
    r = np.bincount(choice, minlength=n_levels)
    p = float(np.dot(r, base.weights ** 2))
    w = base.weights / math.sqrt(p)
    return WeightProfile(w, r, target_snr, base.total_snr * p, "exw", assignment=choice)


def grw_total_snr(group_counts, target_snr: float) -> float:
    """Total SNR needed so the first device of every group sees ``target_snr``.

    Evaluated as the normalisation sum over groups; the same value equals
    ``prod((1 + g0) / (1 + g0 - r * g0)) - 1`` for any group order.
    """
    r = np.asarray([c for c in group_counts if c > 0], dtype=np.float64)
    g0 = float(target_snr)
    denom = 1.0 - g0 * (r - 1.0)
    if np.any(denom <= 0):
        raise InfeasibleTarget(f"target SNR {g0} infeasible for group of {int(r.max())}")
    n = r.size
    # suffix products of 1/denom, i.e. prod_{l >= i}
    suffix = np.cumprod((1.0 / denom)[::-1])[::-1]
    powers = np.exp((n - 1 - np.arange(n)) * math.log1p(g0))
    return g0 * float(np.sum(r * powers * suffix))


def _grw_weights(r: np.ndarray, g0: float) -> tuple[np.ndarray, float]:
    n = r.size
    denom = 1.0 - g0 * (r - 1.0)
    if np.any(denom <= 0):
        raise InfeasibleTarget(f"target SNR {g0} infeasible for group of {int(r.max())}")
    total = grw_total_snr(r, g0)
    suffix = np.cumprod((1.0 / denom)[::-1])[::-1]
    w2 = g0 * np.exp((n - 1 - np.arange(n)) * math.log1p(g0)) * suffix / total
    return np.sqrt(w2), total


def grw_profile(group_counts, target_snr: float, order: str = "ascending") -> WeightProfile:
    """Grouped weights: devices in a group share a level, and the first device
    decoded in each group reaches ``target_snr``.

    Parameters
    ----------
    group_counts : sequence of int
        Devices per (preamble, timing) group; empty groups are dropped.
    order : {"ascending", "given", "optimal"}
        Decoding order of the groups. ``ascending`` puts small groups first
        (large groups decoded last). ``optimal`` searches all orders of up to
        8 groups for the highest mean device rate; the total SNR does not
        depend on the order.

    The returned ``assignment`` maps every device (enumerated group by group
    in the order given) to its level.
    """
    counts = np.asarray(group_counts, dtype=np.int64)
    if counts.ndim != 1 or np.any(counts < 0):
        raise ValueError("group counts must be a vector of non-negative integers")
    nz = np.flatnonzero(counts)
    if nz.size == 0:
        raise ValueError("no devices")
    if order == "ascending":
        perm = nz[np.argsort(counts[nz], kind="stable")]
    elif order == "given":
        perm = nz
    elif order == "optimal":
        if nz.size > 8:
            raise ValueError("exhaustive order search is limited to 8 groups")
        best, perm = -math.inf, nz
        for cand in itertools.permutations(nz):
            cand = np.array(cand)
            w, tot = _grw_weights(counts[cand].astype(np.float64), target_snr)
            prof = WeightProfile(w, counts[cand], target_snr, tot, "grw")
            score = float(np.mean(np.log1p(effective_snrs(prof))))
            if score > best + 1e-15:
                best, perm = score, cand
    else:
        raise ValueError(f"unknown order {order!r}")
    r = counts[perm]
    w, total = _grw_weights(r.astype(np.float64), float(target_snr))
    level_of_group = np.empty(counts.size, dtype=np.int64)
    level_of_group[perm] = np.arange(perm.size)
    assignment = np.repeat(level_of_group[nz], counts[nz])
    return WeightProfile(w, r, float(target_snr), total, "grw", assignment=assignment)


def adaptive_target_snr(L: int, gamma_max: float, gamma0_max: float) -> float:
    """Per-device target keeping the ExW total SNR at or below ``gamma_max``."""
    if L < 1:
        raise ValueError("need L >= 1")
    return min(math.expm1(math.log1p(gamma_max) / L), gamma0_max)


def superpose(symbols, profile: WeightProfile, rng: np.random.Generator | None = None) -> LayeredFrame:
    """``y = sum_i w_i x_i + z`` with ``z ~ N(0, 1/total_snr)`` per real symbol.

    ``symbols`` has one row per device in decoding order. ``rng=None`` gives a
    noiseless frame.
    """
    x = np.atleast_2d(np.asarray(symbols, dtype=np.float64))
    if x.shape[0] != profile.n_devices:
        raise ValueError(f"expected {profile.n_devices} symbol rows, got {x.shape[0]}")
    y = profile.device_weights @ x
    if rng is None:
        z = np.zeros(x.shape[1])
    else:
        z = rng.normal(0.0, math.sqrt(profile.noise_variance), size=x.shape[1])
    return LayeredFrame(x, y + z, profile, z)
