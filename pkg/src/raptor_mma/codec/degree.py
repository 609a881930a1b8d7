"""Output-degree distributions for LT/Raptor codes.

Includes the fixed low-SNR distribution used for every device and the
asymptotic low-SNR degree polynomial built from the ``phi`` function (the
mean of ``tanh(u/2)`` for a consistent Gaussian LLR with mean ``x``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "DegreeDistribution",
    "PAPER_DEGREES",
    "paper_degree_distribution",
    "sample_degree",
    "phi",
    "phi_inverse",
    "asymptotic_degree_polynomial",
    "asymptotic_degree_distribution",
]

# Low-SNR optimised distribution with maximum degree 300.
PAPER_DEGREES = {
    1: 0.0174, 2: 0.3488, 3: 0.2309, 4: 0.0695, 5: 0.0873, 6: 0.0002,
    7: 0.0805, 8: 0.0004, 11: 0.0191, 12: 0.0518, 23: 0.0123, 24: 0.0310,
    59: 0.0220, 60: 0.0020, 300: 0.0268,
}


@dataclass(frozen=True, eq=False)
class DegreeDistribution:
    """Probability ``coefficients[d - 1]`` of output degree ``d``."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=np.float64).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a non-empty vector")
        if np.any(c < 0):
            raise ValueError("negative degree probability")
        if abs(c.sum() - 1.0) > 1e-9:
            raise ValueError(f"degree probabilities sum to {c.sum():.12f}, not 1")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_mapping(cls, probs: dict[int, float]) -> "DegreeDistribution":
        c = np.zeros(max(probs))
        for d, p in probs.items():
            if d < 1:
                raise ValueError(f"degree {d} < 1")
            c[d - 1] = p
        return cls(c)

    @property
    def max_degree(self) -> int:
        return int(np.flatnonzero(self.coefficients)[-1]) + 1

    @property
    def degrees(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients) + 1

    @property
    def mean(self) -> float:
        return float(np.dot(np.arange(1, self.coefficients.size + 1), self.coefficients))

    def __call__(self, x):
        """Evaluate the generating polynomial ``sum_d Omega_d x**d``."""
        x = np.asarray(x, dtype=np.float64)
        d = self.degrees
        return np.sum(self.coefficients[d - 1] * np.power.outer(x, d), axis=-1)

    def to_text(self) -> str:
        return "".join(f"{d} {float(self.coefficients[d - 1])!r}\n" for d in self.degrees)

    @classmethod
    def from_text(cls, text: str) -> "DegreeDistribution":
        probs = {}
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            d, p = line.split()
            probs[int(d)] = probs.get(int(d), 0.0) + float(p)
        return cls.from_mapping(probs)

    def __eq__(self, other):
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        a, b = self.coefficients, other.coefficients
        n = max(a.size, b.size)
        return bool(np.array_equal(np.pad(a, (0, n - a.size)), np.pad(b, (0, n - b.size))))

    def __hash__(self):
        return hash(self.to_text())


def paper_degree_distribution() -> DegreeDistribution:
    return DegreeDistribution.from_mapping(PAPER_DEGREES)


def sample_degree(dd: DegreeDistribution, rng: np.random.Generator, size=None):
    """Draw degrees with probability ``Omega_d``; scalar when ``size`` is None."""
    d = dd.degrees
    cdf = np.cumsum(dd.coefficients[d - 1])
    u = rng.random(size)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    idx = np.minimum(idx, d.size - 1)
    out = d[idx]
    return int(out) if size is None else out


def _phi_scalar(x: float) -> float:
    if x <= 0:
        raise ValueError("phi is defined for x > 0")
    s = math.sqrt(2.0 * x)

    # u ~ N(x, 2x); integrate over the standardised variable
    def f(t):
        return math.tanh((x + s * t) / 2.0) * math.exp(-t * t / 2.0)

    val, err = integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11, limit=200)
    if not np.isfinite(val) or err > 1e-8:
        raise ArithmeticError(f"phi quadrature did not converge at x={x} (err={err})")
    return val / math.sqrt(2.0 * math.pi)


def phi(x):
    """``E[tanh(u/2)]`` for ``u ~ N(x, 2x)``, vectorised over ``x > 0``."""
    xs = np.asarray(x, dtype=np.float64)
    out = np.vectorize(_phi_scalar, otypes=[np.float64])(xs)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=4096)
def _phi_inverse_scalar(y: float) -> float:
    if y <= 0.0:
        return 0.0
    if y >= 1.0:
        return math.inf
    hi = 1.0
    while _phi_scalar(hi) < y:
        hi *= 2.0
        if hi > 1e4:
            return hi
    return optimize.brentq(lambda t: _phi_scalar(t) - y, 1e-12, hi, xtol=1e-13, rtol=1e-12)


def phi_inverse(y):
    ys = np.asarray(y, dtype=np.float64)
    out = np.vectorize(lambda v: _phi_inverse_scalar(float(v)), otypes=[np.float64])(ys)
    return float(out) if out.ndim == 0 else out


def asymptotic_degree_polynomial(grid) -> np.ndarray:
    """``(1 / (4 ln 2)) * integral_0^x phi_inverse(t) dt`` at each grid point in (0, 1]."""
    xs = np.atleast_1d(np.asarray(grid, dtype=np.float64))
    if np.any(xs <= 0) or np.any(xs > 1):
        raise ValueError("grid must lie in (0, 1]")
    out = np.empty_like(xs)
    for n, x in enumerate(xs):
        # phi_inverse has an integrable log singularity at t = 1
        val, err = integrate.quad(lambda t: _phi_inverse_scalar(t), 0.0, x, limit=400, epsabs=1e-9, epsrel=1e-7)
        if not np.isfinite(val):
            raise ArithmeticError(f"quadrature failed at x={x} (err={err})")
        out[n] = val / (4.0 * math.log(2.0))
    return out


def asymptotic_degree_distribution(max_degree: int = 60, grid=None) -> tuple[DegreeDistribution, float]:
    """Finite-degree approximation of the asymptotic polynomial.

    Fits non-negative coefficients for degrees ``1..max_degree`` to the
    polynomial sampled on ``grid`` by NNLS, then renormalises them.

    Returns
    -------
    dd : DegreeDistribution
        The renormalised approximation.
    mass : float
        Value of the asymptotic polynomial at ``x = 1`` before renormalisation.
    """
    if grid is None:
        grid = np.linspace(0.02, 1.0, 50)
    grid = np.asarray(grid, dtype=np.float64)
    target = asymptotic_degree_polynomial(grid)
    mass = float(asymptotic_degree_polynomial([1.0])[0]) if grid[-1] != 1.0 else float(target[-1])
    basis = np.power.outer(grid, np.arange(1, max_degree + 1))
    coef, _ = optimize.nnls(basis, target)
    if coef.sum() <= 0:
        raise ArithmeticError("degenerate fit")
    return DegreeDistribution(coef / coef.sum()), mass
