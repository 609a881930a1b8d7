"""Closed-form oracles: minimum rates, the min-SNR distribution of random ExW
assignment, weight-signalling overhead, and the ACB baselines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from .access import CellGeometry

__all__ = [
    "MinSnrModel",
    "AcbConfig",
    "min_rate_eqw",
    "min_snr_model",
    "min_snr_cdf_conditional",
    "min_snr_cdf",
    "min_snr_mean",
    "min_snr_rate_mean",
    "weight_overhead_rbs",
    "acb_rho",
    "acb_transmit_probability",
    "acb_frame_outcome",
    "cdf_pairs",
]


def min_rate_eqw(L: int, noise_variance: float) -> float:
    """``log2(1 + 1 / (L - 1 + L * noise_variance))``."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return math.log2(1.0 + 1.0 / (L - 1 + L * noise_variance))


@dataclass(frozen=True, eq=False)
class MinSnrModel:
    """Gaussian model of ``1 / xi_i`` per weight level for random ExW choice.

    ``xi_i`` is the SNR of level ``i``; each level is empty with probability
    ``p0``. ``mean_shift`` scales every ``m_i`` by ``1 + mean_shift``; zero
    disables the calibration.
    """

    L: int
    gamma0: float
    p0: float
    means: np.ndarray
    variances: np.ndarray
    mean_shift: float = field(default=0.0)


def min_snr_model(L: int, gamma0: float, mean_shift: float = 0.0) -> MinSnrModel:
    if L < 1 or not gamma0 > 0:
        raise ValueError("need L >= 1 and positive gamma0")
    a2 = (1.0 + gamma0) ** -2
    # S_i = (1 - 1/L) * sum_{m=0}^{L-i} a2**m, a geometric series
    n_terms = L - np.arange(1, L + 1) + 1
    geo = -np.expm1(n_terms * math.log(a2)) / (1.0 - a2) if a2 < 1 else n_terms.astype(float)
    var = (1.0 - 1.0 / L) * geo
    means = np.full(L, 1.0 / gamma0)
    return MinSnrModel(L, gamma0, (1.0 - 1.0 / L) ** L, means, var, mean_shift)


def _phi(z):
    # standard normal cdf via erfc, accurate in both tails
    return 0.5 * special.erfc(-np.asarray(z) / math.sqrt(2.0))


def min_snr_cdf_conditional(x, model: MinSnrModel):
    """``P(gamma_min < x)`` for a known device count.

    ``1 - prod_i [p0 + (1 - p0) * (1 - Q((1/x - m_i) / sqrt(S_i)))]``.
    Levels with zero variance (``L = 1``) are deterministic.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(xs <= 0):
        raise ValueError("x must be positive")
    m = model.means * (1.0 + model.mean_shift)
    s = np.sqrt(model.variances)
    inv = 1.0 / xs[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(s > 0, (inv - m) / np.where(s > 0, s, 1.0), np.where(inv >= m, np.inf, -np.inf))
    # 1 - Q(z) = Phi(z): probability that 1/xi_i < 1/x, i.e. xi_i > x
    above = model.p0 + (1.0 - model.p0) * _phi(z)
    out = 1.0 - np.exp(np.sum(np.log(np.maximum(above, 1e-300)), axis=1))
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if np.ndim(x) == 0 else out


def min_snr_cdf(x, lam: float, gamma0: float, tol: float = 1e-9, mean_shift: float = 0.0):
    """Device count ``~ Poisson(lam)`` mixture of the conditional cdf, with
    ``F(x | 0) = 0``; counts are truncated once the retained mass reaches ``1 - tol``."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    hi = int(stats.poisson.ppf(1.0 - tol / 2, lam))
    lo = int(stats.poisson.ppf(tol / 2, lam))
    total = np.zeros_like(xs)
    for j in range(max(lo, 1), hi + 1):
        total += stats.poisson.pmf(j, lam) * min_snr_cdf_conditional(xs, min_snr_model(j, gamma0, mean_shift))
    return float(total[0]) if np.ndim(x) == 0 else total


def _survival_integral(model: MinSnrModel, fn) -> float:
    upper = math.expm1(model.L * math.log1p(model.gamma0))  # gamma_min never exceeds the total SNR
    g = model.gamma0
    pts = [p for p in (0.5 * g, g, 1.5 * g, 3 * g) if p < upper]
    val, _ = integrate.quad(lambda t: fn(t) * (1.0 - min_snr_cdf_conditional(t, model)), 0.0, upper,
                            points=pts or None, limit=400)
    return val


def min_snr_mean(model: MinSnrModel) -> float:
    """Mean of ``gamma_min`` implied by the conditional cdf, ``int (1 - F)``."""
    return _survival_integral(model, lambda t: 1.0)


def min_snr_rate_mean(model: MinSnrModel) -> float:
    """Mean of ``log2(1 + gamma_min)`` implied by the conditional cdf."""
    return _survival_integral(model, lambda t: 1.0 / ((1.0 + t) * math.log(2.0)))


def weight_overhead_rbs(delta: float, N: int, gamma_w: float, W_s: float = 1e6, tau_s: float = 1e-3) -> int:
    """RBs spent sending ``N`` orthogonal weight sequences of expansion ``delta``."""
    if delta < 1 or not gamma_w > 0:
        raise ValueError("need delta >= 1 and gamma_w > 0")
    if N <= 0:
        return 0
    x = delta * N / (math.log2(1.0 + gamma_w) * W_s * tau_s)
    return int(math.ceil(x - 1e-9 * max(1.0, x)))


@dataclass(frozen=True)
class AcbConfig:
    """Access class barring baseline.

    ``p_mode="paper"`` uses ``min(1, N / N_s)`` for the original scheme, the
    literal printed optimum; the default is ``min(1, N_s / N)``.
    """

    scheme: str = "original"
    n_s: int = 64
    cell: CellGeometry = field(default_factory=CellGeometry)
    d: float = 75.0
    p_mode: str = "standard"

    def __post_init__(self):
        if self.scheme not in ("original", "timing-advance"):
            raise ValueError(f"unknown ACB scheme {self.scheme!r}")
        if self.p_mode not in ("standard", "paper"):
            raise ValueError(f"unknown p mode {self.p_mode!r}")
        rho = acb_rho(self.cell.radius, self.d)
        if not 0 < rho <= 1:
            raise ValueError(f"rho={rho} outside (0, 1]")

    @property
    def rho(self) -> float:
        return acb_rho(self.cell.radius, self.d)


def acb_rho(radius: float, d: float) -> float:
    return 4.0 * d * (radius - d) / radius ** 2


def acb_transmit_probability(cfg: AcbConfig, N: int) -> float:
    if N < 1:
        raise ValueError("N must be >= 1")
    if cfg.scheme == "original":
        ratio = cfg.n_s / N if cfg.p_mode == "standard" else N / cfg.n_s
        return min(1.0, ratio)
    rho = cfg.rho
    if rho == 1.0:
        # limit of ln(rho) / (rho - 1) as rho -> 1
        return min(1.0, 1.17 * cfg.n_s / N)
    return min(1.0, 1.17 * cfg.n_s * math.log(rho) / (N * (rho - 1.0)))


def acb_frame_outcome(cfg: AcbConfig, N: int, rng: np.random.Generator,
                      timing=None) -> tuple[int, np.ndarray]:
    """One ACB contention round among ``N`` devices.

    Parameters
    ----------
    timing : array_like of int, optional
        Timing group of each device (timing-advance scheme); drawn from the
        cell geometry when omitted.

    Returns
    -------
    successes : int
    served : ndarray of int
        Indices (into ``range(N)``) of the successful devices, ascending.
    """
    if N <= 0:
        return 0, np.zeros(0, dtype=np.int64)
    p = acb_transmit_probability(cfg, N)
    part = np.flatnonzero(rng.random(N) < p)
    pre = rng.integers(0, cfg.n_s, size=part.size)
    counts = np.bincount(pre, minlength=cfg.n_s)
    if cfg.scheme == "original":
        served = part[counts[pre] == 1]
    else:
        if timing is None:
            tg = cfg.cell.sample_groups(N, rng)
        else:
            tg = np.asarray(timing, dtype=np.int64)
            if tg.size != N:
                raise ValueError("timing must give one group per device")
        tg = tg[part]
        served_list = []
        for s in np.flatnonzero(counts):
            members = np.flatnonzero(pre == s)
            if members.size == 1:
                served_list.append(part[members[0]])
                continue
            # BS answers one observed timing advance; it wins if unique
            observed = np.unique(tg[members])
            pick = observed[rng.integers(0, observed.size)]
            holders = members[tg[members] == pick]
            if holders.size == 1:
                served_list.append(part[holders[0]])
        served = np.sort(np.asarray(served_list, dtype=np.int64))
    return int(served.size), served


def cdf_pairs(xs, values) -> str:
    """``x,value`` CSV lines."""
    xs, vs = np.asarray(xs, float).tolist(), np.asarray(values, float).tolist()
    return "x,value\n" + "".join(f"{x!r},{v!r}\n" for x, v in zip(xs, vs))

