"""Multistage (successive interference cancellation) decoding of superposed layers.

Accounting convention: a channel use is one complex symbol carrying two
BPSK coded bits (in-phase and quadrature), each seeing the same per-real-
dimension SNR. ``symbols_consumed`` counts channel uses, so the realized
rate ``k / symbols_consumed`` compares directly with ``log2(1 + snr)`` and
one resource block holds ``W_s * tau_s`` channel uses.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .codec.raptor import (
    DEFAULT_MAX_ITERS,
    AdapterStream,
    RaptorCode,
    RatelessResult,
    adapter_apply,
    adapter_unapply,
    capacity_floor_bits,
    rateless_decode,
)
from .superposition import LayeredFrame, WeightProfile, superpose

__all__ = [
    "BITS_PER_USE",
    "CAP_FACTOR",
    "StageResult",
    "DecodeReport",
    "CapacityGenie",
    "app_llr",
    "modulate",
    "transmit_layers",
    "decode_multistage",
    "required_rbs",
    "ideal_uses",
]

BITS_PER_USE = 2
CAP_FACTOR = 4.0


@dataclass(frozen=True)
class StageResult:
    device_index: int
    success: bool
    symbols_consumed: int
    realized_rate: float
    effective_snr: float


@dataclass
class DecodeReport:
    per_stage: list[StageResult]
    min_rate: float
    rbs_required: float
    outage: bool
    uses_per_rb: int = field(default=1000)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["stage", "device_index", "success", "symbols_consumed", "realized_rate", "effective_snr"])
        for n, s in enumerate(self.per_stage):
            wr.writerow([n, s.device_index, int(s.success), s.symbols_consumed, repr(float(s.realized_rate)),
                         repr(float(s.effective_snr))])
        return buf.getvalue()


def app_llr(y, w: float, sigma2: float, mode: str = "standard") -> np.ndarray:
    """Channel LLRs of ``y = w x + n``, ``x = +1`` for bit 0.

    ``mode="paper"`` scales by ``w**2`` instead of ``w``, the literal
    printed form; it only changes the LLR magnitude.
    """
    if not sigma2 > 0:
        raise ValueError("noise variance must be positive")
    y = np.asarray(y, dtype=np.float64)
    if mode == "standard":
        return (2.0 * w / sigma2) * y
    if mode == "paper":
        return (2.0 * w * w / sigma2) * y
    raise ValueError(f"unknown LLR form {mode!r}")


def modulate(bits) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def ideal_uses(k: int, snr: float) -> float:
    """Channel uses needed at Gaussian capacity."""
    c = math.log2(1.0 + snr) if snr > 0 else 0.0
    return math.inf if c == 0 else k / c


def required_rbs(k: int, r_min: float, W_s: float = 1e6, tau_s: float = 1e-3) -> float:
    """Resource blocks needed for ``k`` bits at rate ``r_min`` per channel use.

    Returns ``math.inf`` when ``r_min`` is zero (device unservable).
    """
    if r_min < 0:
        raise ValueError("rate must be non-negative")
    if r_min == 0:
        return math.inf
    x = k / (tau_s * W_s * r_min)
    # absorb rounding in W_s * tau_s * r_min so exact fits are not rounded up
    return int(math.ceil(x - 1e-9 * max(1.0, x)))


def transmit_layers(messages: Sequence[np.ndarray], codes: Sequence[RaptorCode],
                    adapters: Sequence[AdapterStream], profile: WeightProfile, n_uses: int,
                    rng: np.random.Generator | None) -> LayeredFrame:
    """Encode, scramble and superpose every device over ``n_uses`` channel uses.

    All sequences are in decoding order.
    """
    n_bits = BITS_PER_USE * int(n_uses)
    x = np.vstack([modulate(adapter_apply(c.encode(m, n_bits), a))
                   for m, c, a in zip(messages, codes, adapters)])
    return superpose(x, profile, rng)


class CapacityGenie:
    """Decoder stand-in that succeeds once ``k / (efficiency * log2(1 + snr))``
    channel uses have been released, rounded up to the attempt cadence, and
    returns the transmitted message."""

    def __init__(self, efficiency: float = 1.0):
        if not 0 < efficiency <= 1:
            raise ValueError("efficiency must be in (0, 1]")
        self.efficiency = efficiency

    def __call__(self, code: RaptorCode, llrs: np.ndarray, truth, snr: float) -> RatelessResult:
        step = code.spec.block_size
        need = BITS_PER_USE * ideal_uses(code.k, snr) / self.efficiency
        if not math.isfinite(need) or need > llrs.size:
            return RatelessResult(False, llrs.size, np.zeros(code.k, dtype=np.uint8), [])
        bits = min(-(-math.ceil(need - 1e-9) // step) * step, llrs.size)
        return RatelessResult(True, bits, np.asarray(truth, dtype=np.uint8).copy(), [bits])


Decoder = Callable[[RaptorCode, np.ndarray, object, float], RatelessResult]


def decode_multistage(frame: LayeredFrame, codes: Sequence[RaptorCode], adapters: Sequence[AdapterStream],
                      messages: Sequence[np.ndarray] | None = None, cap: int | None = None,
                      llr_form: str = "standard", max_iters: int = DEFAULT_MAX_ITERS,
                      schedule: str = "search", decoder: Decoder | None = None,
                      cap_factor: float = CAP_FACTOR, uses_per_rb: int = 1000) -> DecodeReport:
    """Decode the layers of ``frame`` strongest first.

    Parameters
    ----------
    frame : LayeredFrame
        Rows and weights in decoding order; ``len(received)`` is twice the
        number of channel uses.
    codes, adapters : sequences
        Per-device codec and scrambler, decoding order.
    messages : sequence of arrays, optional
        Transmitted messages for genie stopping; without them each stage
        checks the precode syndrome.
    cap : int, optional
        Channel-use cap per stage. Each stage is further capped at
        ``cap_factor`` times its ideal use count.
    decoder : callable, optional
        Replaces rateless SPA decoding, e.g. :class:`CapacityGenie`.

    A failed stage is not cancelled: its power stays in the interference
    seen by every later stage.
    """
    prof = frame.profile
    w = prof.device_weights
    L = w.size
    if len(codes) != L or len(adapters) != L:
        raise ValueError("need one code and one adapter per layer")
    total_bits = frame.received.size
    cap_bits = total_bits if cap is None else min(total_bits, BITS_PER_USE * int(cap))
    residual = frame.received.copy()
    interference = float(np.sum(w ** 2)) + prof.noise_variance  # everything not yet removed
    stages: list[StageResult] = []
    for i in range(L):
        code, ad = codes[i], adapters[i]
        interference -= w[i] ** 2
        sigma2 = max(interference, 1e-300)
        snr = w[i] ** 2 / sigma2
        ideal = BITS_PER_USE * ideal_uses(code.k, snr)
        stage_cap = cap_bits if not math.isfinite(ideal) else min(cap_bits, int(math.ceil(cap_factor * ideal)))
        llr = adapter_unapply(app_llr(residual[:stage_cap], w[i], sigma2, llr_form), ad)
        truth = None if messages is None else messages[i]
        if decoder is not None:
            res = decoder(code, llr, truth, snr)
        else:
            res = rateless_decode(code, llr, truth=truth, start_bits=capacity_floor_bits(code.k, snr),
                                  max_iters=max_iters, schedule=schedule)
        uses = -(-res.coded_bits // BITS_PER_USE)
        if res.success:
            xhat = modulate(adapter_apply(code.encode(res.message, total_bits), ad))
            residual -= w[i] * xhat
            stages.append(StageResult(i, True, uses, code.k / uses, snr))
        else:
            # failed layer stays in the interference for later stages
            interference += w[i] ** 2
            stages.append(StageResult(i, False, uses, 0.0, snr))
    ok = [s for s in stages if s.success]
    outage = len(ok) < L
    r_min = min((s.realized_rate for s in ok), default=0.0)
    k = codes[0].k if L else 0
    rbs = required_rbs(k, r_min, uses_per_rb, 1.0) if ok else math.inf
    return DecodeReport(stages, r_min, rbs, outage, uses_per_rb)
