"""Persistent first homology by boundary-matrix reduction over GF(2).

Columns are stored as Python integers used as bitmasks over row indices;
column addition is XOR and the pivot is the highest set bit. An H1
interval opens when an edge's column reduces to zero (a cycle is created)
and closes when a triangle's reduced column pivots on that edge; unpaired
cycles persist to the stream's alpha_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .witness import SimplexStream


@dataclass
class PersistenceSet:
    intervals: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def betti_curve(self, alphas: np.ndarray) -> np.ndarray:
        """beta_1 at each query alpha; intervals are half-open [birth, death)."""
        alphas = np.asarray(alphas, dtype=float)
        out = np.zeros(alphas.shape, dtype=int)
        for b, d in self.intervals:
            out += (alphas >= b) & (alphas < d)
        return out


def persistence_h1(stream: SimplexStream) -> PersistenceSet:
    """Reduce the filtration's boundary matrix and collect H1 intervals."""
    index_of: dict[tuple[int, ...], int] = {}
    births: list[float] = []
    dims: list[int] = []
    columns: list[int] = []

    for pos, s in enumerate(stream):
        col = 0
        if s.dim >= 1:
            for drop in range(len(s.verts)):
                face = s.verts[:drop] + s.verts[drop + 1 :]
                row = index_of.get(face)
                if row is None:
                    raise ValueError(
                        f"face {face} of {s.verts} missing or out of order"
                    )
                col ^= 1 << row
        index_of[s.verts] = pos
        births.append(s.birth)
        dims.append(s.dim)
        columns.append(col)

    pivot_owner: dict[int, int] = {}
    creators: set[int] = set()
    intervals: list[tuple[float, float]] = []
    for j in range(len(columns)):
        col = columns[j]
        while col:
            low = col.bit_length() - 1
            owner = pivot_owner.get(low)
            if owner is None:
                break
            col ^= columns[owner]
        columns[j] = col
        if col == 0:
            if dims[j] == 1:
                creators.add(j)
        else:
            low = col.bit_length() - 1
            pivot_owner[low] = j
            if dims[j] == 2 and low in creators:
                creators.discard(low)
                intervals.append((births[low], births[j]))

    for j in sorted(creators):
        intervals.append((births[j], stream.alpha_max))
    intervals.sort()
    return PersistenceSet(intervals=intervals)
