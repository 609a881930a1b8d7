"""Single-device rateless link: how many coded bits a Raptor code needs on BPSK/AWGN."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng as rs
from .codec.raptor import (
    AdapterStream,
    RaptorCode,
    RaptorCodeSpec,
    adapter_apply,
    adapter_unapply,
    capacity_floor_bits,
    rateless_decode,
)
from .msd import BITS_PER_USE, CAP_FACTOR, app_llr, ideal_uses, modulate

__all__ = ["LinkTrial", "link_trial"]


@dataclass(frozen=True)
class LinkTrial:
    trial: int
    snr: float
    k: int
    success: bool
    coded_bits: int
    attempts: int

    @property
    def uses(self) -> int:
        return -(-self.coded_bits // BITS_PER_USE)

    @property
    def efficiency(self) -> float:
        """Realized rate over ``log2(1 + snr)``; zero on failure."""
        if not self.success:
            return 0.0
        return (self.k / self.uses) / math.log2(1.0 + self.snr)


def link_trial(snr: float, trial: int, seed: int = 1, k: int = 1024, max_iters: int = 100,
               schedule: str = "search", llr_form: str = "standard") -> LinkTrial:
    """Send a random message and release coded bits until the decoder succeeds.

    The code graph, adapter, message and noise all derive from ``(seed, trial)``.
    """
    gseed = rs.device_seed(trial, 0, base=seed)
    code = RaptorCode(RaptorCodeSpec(k=k, graph_seed=gseed))
    adapter = AdapterStream(gseed)
    msg = rs.seed_stream(seed, trial, rs.LANE_MESSAGE).integers(0, 2, k).astype(np.uint8)
    n_bits = int(math.ceil(BITS_PER_USE * CAP_FACTOR * ideal_uses(k, snr)))
    w = math.sqrt(snr)
    x = modulate(adapter_apply(code.encode(msg, n_bits), adapter))
    y = w * x + rs.seed_stream(seed, trial, rs.LANE_CHANNEL).standard_normal(n_bits)
    llr = adapter_unapply(app_llr(y, w, 1.0, llr_form), adapter)
    res = rateless_decode(code, llr, truth=msg, start_bits=capacity_floor_bits(k, snr), max_iters=max_iters,
                          schedule=schedule)
    return LinkTrial(trial, snr, k, res.success, res.coded_bits, len(res.attempts))
