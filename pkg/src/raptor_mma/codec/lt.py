"""LT encoding graphs.

An output symbol is the XOR of ``d`` distinct input symbols chosen uniformly,
with ``d`` drawn from the degree distribution. Graphs are stored in CSR form:
``neighbors[offsets[t]:offsets[t + 1]]`` are the inputs of output ``t``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .degree import DegreeDistribution, sample_degree

__all__ = ["LtGraph", "lt_graph", "lt_encode", "xor_outputs"]


@dataclass(frozen=True, eq=False)
class LtGraph:
    n_inputs: int
    offsets: np.ndarray
    neighbors: np.ndarray

    @property
    def n_outputs(self) -> int:
        return self.offsets.size - 1

    @property
    def n_edges(self) -> int:
        return int(self.offsets[-1])

    def degrees(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors_of(self, t: int) -> np.ndarray:
        return self.neighbors[self.offsets[t]:self.offsets[t + 1]]

    def head(self, count: int) -> "LtGraph":
        if count > self.n_outputs:
            raise ValueError("graph has fewer outputs than requested")
        offs = self.offsets[: count + 1]
        return LtGraph(self.n_inputs, offs, self.neighbors[: offs[-1]])

    @staticmethod
    def concat(parts: list["LtGraph"]) -> "LtGraph":
        if not parts:
            raise ValueError("nothing to concatenate")
        n_in = parts[0].n_inputs
        offs = [np.zeros(1, dtype=np.int64)]
        base = 0
        for p in parts:
            if p.n_inputs != n_in:
                raise ValueError("input size mismatch")
            offs.append(p.offsets[1:] + base)
            base += p.n_edges
        return LtGraph(n_in, np.concatenate(offs), np.concatenate([p.neighbors for p in parts]))


def lt_graph(n_inputs: int, count: int, dd: DegreeDistribution, rng: np.random.Generator) -> LtGraph:
    """Draw the neighbour sets of ``count`` output symbols."""
    if n_inputs < 1 or count < 0:
        raise ValueError("invalid graph size")
    degrees = np.minimum(sample_degree(dd, rng, size=count), n_inputs).astype(np.int64)
    offsets = np.zeros(count + 1, dtype=np.int64)
    np.cumsum(degrees, out=offsets[1:])
    neighbors = np.empty(offsets[-1], dtype=np.int64)
    for t, d in enumerate(degrees):
        neighbors[offsets[t]:offsets[t + 1]] = rng.choice(n_inputs, size=d, replace=False)
    return LtGraph(n_inputs, offsets, neighbors)


def xor_outputs(input_symbols: np.ndarray, graph: LtGraph) -> np.ndarray:
    bits = np.asarray(input_symbols, dtype=np.uint8)
    if bits.shape != (graph.n_inputs,):
        raise ValueError("input length does not match graph")
    if graph.n_outputs == 0:
        return np.zeros(0, dtype=np.uint8)
    sums = np.add.reduceat(bits[graph.neighbors].astype(np.int64), graph.offsets[:-1])
    # reduceat returns the element itself for empty slices; degrees are >= 1 so none are empty
    return (sums % 2).astype(np.uint8)


def lt_encode(input_symbols, count: int, dd: DegreeDistribution, rng: np.random.Generator):
    """Encode ``count`` LT output bits; returns ``(bits, graph)``."""
    bits = np.asarray(input_symbols, dtype=np.uint8)
    graph = lt_graph(bits.size, count, dd, rng)
    return xor_outputs(bits, graph), graph
