"""Sum-product decoding on the joint LT + LDPC Tanner graph.

Every check node carries a prior factor in the tanh domain: LT output nodes
use ``tanh(L_ch / 2)`` from the channel, LDPC checks use 1 (known even
parity). Input symbols have no channel observation. Messages are clamped to
``+-LLR_CLAMP``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

__all__ = ["LLR_CLAMP", "spa_kernel", "TannerGraph"]

LLR_CLAMP = 30.0
_T_MAX = math.tanh(LLR_CLAMP / 2.0)


@numba.njit(cache=True, nogil=True)
def spa_kernel(check_ptr, check_var, prior, n_vars, v2c, max_iters, info_pos, truth, use_truth):
    """Flooding-schedule SPA.

    ``v2c`` is updated in place so callers may warm-start. Returns
    ``(posterior, iterations, success)``; ``success`` is only meaningful when
    ``use_truth`` is set (genie stopping on the message positions).
    """
    n_checks = check_ptr.size - 1
    n_edges = check_var.size
    c2v = np.zeros(n_edges)
    post = np.zeros(n_vars)
    tmp = np.empty(n_edges)
    th = np.empty(n_edges)
    it = 0
    success = False
    while it < max_iters:
        it += 1
        for e in range(n_edges):
            th[e] = math.tanh(0.5 * v2c[e])
        for c in range(n_checks):
            a = check_ptr[c]
            b = check_ptr[c + 1]
            acc = prior[c]
            for e in range(a, b):
                tmp[e] = acc
                acc *= th[e]
            acc = 1.0
            for e in range(b - 1, a - 1, -1):
                x = tmp[e] * acc
                acc *= th[e]
                if x > _T_MAX:
                    x = _T_MAX
                elif x < -_T_MAX:
                    x = -_T_MAX
                c2v[e] = 2.0 * math.atanh(x)
        for v in range(n_vars):
            post[v] = 0.0
        for e in range(n_edges):
            post[check_var[e]] += c2v[e]
        for e in range(n_edges):
            m = post[check_var[e]] - c2v[e]
            if m > LLR_CLAMP:
                m = LLR_CLAMP
            elif m < -LLR_CLAMP:
                m = -LLR_CLAMP
            v2c[e] = m
        if use_truth:
            ok = True
            for q in range(info_pos.size):
                p = post[info_pos[q]]
                # a zero posterior is an erasure, never a match
                if p == 0.0 or (1 if p < 0.0 else 0) != truth[q]:
                    ok = False
                    break
            if ok:
                success = True
                break
    return post, it, success


class TannerGraph:
    """Check-node view of a Raptor decoding graph.

    Checks ``0..n_out-1`` are LT output symbols, the remaining ones are the
    precode parity checks.
    """

    def __init__(self, lt_offsets, lt_neighbors, ldpc_checks, n_vars):
        self.n_vars = int(n_vars)
        self.n_out = lt_offsets.size - 1
        ldpc_len = np.array([c.size for c in ldpc_checks], dtype=np.int64)
        self.check_ptr = np.concatenate([lt_offsets.astype(np.int64),
                                         lt_offsets[-1] + np.cumsum(ldpc_len)])
        parts = [lt_neighbors.astype(np.int64)] + [c.astype(np.int64) for c in ldpc_checks]
        self.check_var = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        self.n_ldpc = len(ldpc_checks)

    @property
    def n_edges(self) -> int:
        return self.check_var.size

    def prior(self, llrs: np.ndarray) -> np.ndarray:
        llrs = np.clip(np.asarray(llrs, dtype=np.float64), -LLR_CLAMP, LLR_CLAMP)
        if llrs.size != self.n_out:
            raise ValueError(f"expected {self.n_out} channel LLRs, got {llrs.size}")
        return np.concatenate([np.tanh(0.5 * llrs), np.ones(self.n_ldpc)])
