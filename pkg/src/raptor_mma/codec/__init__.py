"""Raptor codec: degree distributions, LDPC precode, LT graphs and SPA decoding."""

from .decoder import LLR_CLAMP, TannerGraph, spa_kernel
from .degree import (
    PAPER_DEGREES,
    DegreeDistribution,
    asymptotic_degree_distribution,
    asymptotic_degree_polynomial,
    paper_degree_distribution,
    phi,
    phi_inverse,
    sample_degree,
)
from .ldpc import LdpcPrecode, build_precode, ldpc_precode, precode_length
from .lt import LtGraph, lt_encode, lt_graph, xor_outputs
from .raptor import (
    DEFAULT_MAX_ITERS,
    AdapterStream,
    RaptorCode,
    RaptorCodeSpec,
    RatelessResult,
    adapter_apply,
    adapter_unapply,
    capacity_floor_bits,
    crc16,
    rateless_decode,
    sp_decode,
)

__all__ = [
    "LLR_CLAMP", "TannerGraph", "spa_kernel",
    "PAPER_DEGREES", "DegreeDistribution", "asymptotic_degree_distribution", "asymptotic_degree_polynomial",
    "paper_degree_distribution", "phi", "phi_inverse", "sample_degree",
    "LdpcPrecode", "build_precode", "ldpc_precode", "precode_length",
    "LtGraph", "lt_encode", "lt_graph", "xor_outputs",
    "DEFAULT_MAX_ITERS", "AdapterStream", "RaptorCode", "RaptorCodeSpec", "RatelessResult",
    "adapter_apply", "adapter_unapply", "capacity_floor_bits", "crc16", "rateless_decode", "sp_decode",
]
