"""Deterministic, splittable random streams.

Every stochastic routine in the package takes an explicit
``numpy.random.Generator``. Streams are derived from a base seed and a
``(trial, lane)`` pair through ``SeedSequence`` spawn keys, so two streams
never share state and a rerun with the same coordinates is bit-identical.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LANE_ARRIVALS",
    "LANE_ASSIGN",
    "LANE_PRACH",
    "LANE_WEIGHTS",
    "LANE_CHANNEL",
    "LANE_EFFICIENCY",
    "LANE_ACB",
    "LANE_MESSAGE",
    "seed_stream",
    "device_seed",
]

# Fixed lane numbers keep the role of each stream stable across versions.
LANE_ARRIVALS = 0
LANE_ASSIGN = 1
LANE_PRACH = 2
LANE_WEIGHTS = 3
LANE_CHANNEL = 4
LANE_EFFICIENCY = 5
LANE_ACB = 6
LANE_MESSAGE = 7


def seed_stream(base: int, trial: int = 0, lane: int = 0) -> np.random.Generator:
    """Return the generator owned by ``(base, trial, lane)``.

    Parameters
    ----------
    base : int
        Experiment-wide seed recorded in every output header.
    trial : int
        Trial (or frame) index.
    lane : int
        Role of the stream inside the trial, see the ``LANE_*`` constants.
    """
    if base < 0 or trial < 0 or lane < 0:
        raise ValueError("seed coordinates must be non-negative")
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=(int(trial), int(lane)))
    return np.random.Generator(np.random.PCG64(ss))


def device_seed(preamble: int, timing: int, slot: int = 0, base: int = 0) -> int:
    """Seed for a device's Raptor encoder and channel adapter.

    A device derives it from its preamble and timing indices, which the base
    station also knows after load estimation, so both sides rebuild the same
    generator matrix. ``slot`` separates devices that share a cell.
    """
    ss = np.random.SeedSequence(entropy=int(base), spawn_key=(0x5EED, int(preamble), int(timing), int(slot)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
