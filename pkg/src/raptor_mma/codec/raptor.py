"""Raptor codes: LDPC precode + LT code, channel adapters and decoding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .decoder import TannerGraph, spa_kernel
from .degree import DegreeDistribution, paper_degree_distribution
from .ldpc import LdpcPrecode, build_precode, precode_length
from .lt import LtGraph, lt_graph, xor_outputs

__all__ = [
    "RaptorCodeSpec",
    "RaptorCode",
    "AdapterStream",
    "adapter_apply",
    "adapter_unapply",
    "sp_decode",
    "crc16",
    "DEFAULT_MAX_ITERS",
    "RatelessResult",
    "capacity_floor_bits",
    "rateless_decode",
]

DEFAULT_MAX_ITERS = 100


@dataclass(frozen=True)
class RaptorCodeSpec:
    k: int = 1024
    precode_rate: float = 0.98
    degree_dist: DegreeDistribution = field(default_factory=paper_degree_distribution, compare=False)
    graph_seed: int = 0

    def __post_init__(self):
        precode_length(self.k, self.precode_rate)  # validates k and rate

    @property
    def n_inputs(self) -> int:
        return precode_length(self.k, self.precode_rate)

    @property
    def block_size(self) -> int:
        """Output symbols per graph block, also the decode-attempt cadence."""
        return -(-self.k // 16)


class RaptorCode:
    """Encoder/decoder pair for one device.

    The LT graph is generated in blocks of ``spec.block_size`` outputs, block
    ``b`` from its own stream ``(graph_seed, b)``; any prefix of the output
    stream is therefore a pure function of the seed.
    """

    def __init__(self, spec: RaptorCodeSpec):
        self.spec = spec
        self.precode: LdpcPrecode = build_precode(spec.k, spec.precode_rate, seed=spec.graph_seed)
        self._blocks: list[LtGraph] = []

    @property
    def k(self) -> int:
        return self.spec.k

    @property
    def n_inputs(self) -> int:
        return self.precode.n

    def _block(self, b: int) -> LtGraph:
        while len(self._blocks) <= b:
            nb = len(self._blocks)
            rng = np.random.default_rng([self.spec.graph_seed, 0x17, nb])
            self._blocks.append(lt_graph(self.n_inputs, self.spec.block_size, self.spec.degree_dist, rng))
        return self._blocks[b]

    def graph(self, count: int) -> LtGraph:
        """LT graph of the first ``count`` output symbols."""
        if count < 0:
            raise ValueError("count must be >= 0")
        if count == 0:
            return LtGraph(self.n_inputs, np.zeros(1, dtype=np.int64), np.zeros(0, dtype=np.int64))
        nb = -(-count // self.spec.block_size)
        return LtGraph.concat([self._block(b) for b in range(nb)]).head(count)

    def encode(self, message, count: int) -> np.ndarray:
        """First ``count`` coded bits of ``message``."""
        return xor_outputs(self.precode.encode(message), self.graph(count))

    @cached_property
    def _ldpc_checks(self):
        return self.precode.check_lists()

    def tanner(self, count: int) -> TannerGraph:
        g = self.graph(count)
        return TannerGraph(g.offsets, g.neighbors, self._ldpc_checks, self.n_inputs)


@dataclass(frozen=True)
class AdapterStream:
    """Per-device i.i.d. scrambling bits; any prefix is reproducible from the seed."""

    seed: int

    def bits(self, n: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 0xADA])
        return (rng.random(n) < 0.5).astype(np.uint8)


def adapter_apply(bits, adapter: AdapterStream) -> np.ndarray:
    c = np.asarray(bits, dtype=np.uint8)
    return c ^ adapter.bits(c.size)


def adapter_unapply(llrs, adapter: AdapterStream) -> np.ndarray:
    u = np.asarray(llrs, dtype=np.float64)
    t = adapter.bits(u.size)
    return u * (1.0 - 2.0 * t)


def crc16(bits) -> int:
    """CRC-16/CCITT-FALSE over a bit vector (MSB first)."""
    reg = 0xFFFF
    for b in np.asarray(bits, dtype=np.uint8):
        top = ((reg >> 15) & 1) ^ int(b)
        reg = (reg << 1) & 0xFFFF
        if top:
            reg ^= 0x1021
    return reg


def _checksum_ok(message: np.ndarray) -> bool:
    if message.size <= 16:
        return False
    body, tail = message[:-16], message[-16:]
    return crc16(body) == int("".join(map(str, tail.tolist())), 2)


def sp_decode(llrs, code: RaptorCode, max_iters: int = DEFAULT_MAX_ITERS, truth=None,
              checksum: bool = False, graph: TannerGraph | None = None, v2c=None):
    """Decode a Raptor codeword from channel LLRs of its first ``len(llrs)`` outputs.

    Parameters
    ----------
    llrs : array_like
        Channel LLRs, positive meaning bit 0.
    code : RaptorCode
    max_iters : int
        SPA iteration cap.
    truth : array_like, optional
        Transmitted message. When given, success means the hard decisions
        on the message positions equal it, and iterations stop as soon as
        they do.
    checksum : bool
        Without ``truth``: success means the last 16 message bits are the
        CRC-16 of the rest. Otherwise success means a zero precode syndrome.
    graph : TannerGraph, optional
        Prebuilt graph for ``len(llrs)`` outputs.
    v2c : ndarray, optional
        Variable-to-check messages to warm-start from; updated in place.

    Returns
    -------
    message : ndarray of uint8
    success : bool
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    g = graph if graph is not None else code.tanner(llrs.size)
    prior = g.prior(llrs)
    if v2c is None:
        v2c = np.zeros(g.n_edges)
    elif v2c.size != g.n_edges:
        raise ValueError("warm-start messages do not match the graph")
    info = code.precode.info_pos.astype(np.int64)
    if truth is not None:
        t = np.asarray(truth, dtype=np.int64)
        if t.shape != (code.k,):
            raise ValueError("truth must have length k")
    else:
        t = np.zeros(code.k, dtype=np.int64)
    post, _, ok = spa_kernel(g.check_ptr, g.check_var, prior, g.n_vars, v2c, int(max_iters), info, t,
                             truth is not None)
    hard = (post < 0).astype(np.uint8)
    message = hard[info]
    if truth is None:
        if checksum:
            ok = _checksum_ok(message)
        else:
            # no information at all leaves every posterior at exactly zero
            ok = bool(np.any(post != 0)) and not np.any(code.precode.syndrome(hard))
    return message, bool(ok)


@dataclass
class RatelessResult:
    """Outcome of incremental decoding.

    ``coded_bits`` is the number of coded bits consumed at the first
    successful checkpoint (or the cap on failure); ``attempts`` lists the
    checkpoints actually decoded, in order.
    """

    success: bool
    coded_bits: int
    message: np.ndarray
    attempts: list[int]


def capacity_floor_bits(k: int, snr: float) -> int:
    """Fewest coded bits that could carry ``k`` bits over a real AWGN dimension at ``snr``."""
    if snr <= 0:
        return np.iinfo(np.int64).max
    per_bit = min(1.0, 0.5 * math.log2(1.0 + snr)) if math.isfinite(snr) else 1.0
    return int(math.ceil(k / per_bit))


def rateless_decode(code: RaptorCode, llrs, truth=None, start_bits: int = 0, max_iters: int = DEFAULT_MAX_ITERS,
                    schedule: str = "search", guess_bits: int | None = None, checksum: bool = False) -> RatelessResult:
    """Release coded bits in checkpoints of ``code.spec.block_size`` until decoding succeeds.

    Parameters
    ----------
    llrs : array_like
        Channel LLRs for every coded bit up to the cap.
    start_bits : int
        Checkpoints below this are skipped (use :func:`capacity_floor_bits`).
    schedule : {"search", "scan"}
        ``scan`` decodes every checkpoint in order. ``search`` gallops up from
        ``guess_bits`` and bisects down, which finds the same first checkpoint
        whenever success is monotone in the number of released bits.
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    step = code.spec.block_size
    cap = llrs.size
    m_lo = max(1, -(-max(start_bits, 1) // step))
    m_hi = cap // step
    attempts: list[int] = []
    cache: dict[int, tuple[np.ndarray, bool]] = {}

    def attempt(m):
        if m not in cache:
            n = m * step
            attempts.append(n)
            cache[m] = sp_decode(llrs[:n], code, max_iters=max_iters, truth=truth, checksum=checksum)
        return cache[m]

    if m_lo > m_hi:
        return RatelessResult(False, cap, np.zeros(code.k, dtype=np.uint8), attempts)
    if schedule == "scan":
        for m in range(m_lo, m_hi + 1):
            msg, ok = attempt(m)
            if ok:
                return RatelessResult(True, m * step, msg, attempts)
        return RatelessResult(False, cap, cache[m_hi][0], attempts)
    if schedule != "search":
        raise ValueError(f"unknown schedule {schedule!r}")

    g = guess_bits if guess_bits is not None else int(1.25 * m_lo * step)
    m = min(max(m_lo, -(-g // step)), m_hi)
    bad = m_lo - 1  # highest checkpoint known (or assumed) to fail
    width = max(1, (m - m_lo) // 2)
    while True:
        msg, ok = attempt(m)
        if ok:
            good = m
            break
        bad = m
        if m == m_hi:
            return RatelessResult(False, cap, msg, attempts)
        m = min(m + width, m_hi)
        width *= 2
    while good - bad > 1:
        mid = (good + bad) // 2
        if attempt(mid)[1]:
            good = mid
        else:
            bad = mid
    return RatelessResult(True, good * step, cache[good][0], attempts)
