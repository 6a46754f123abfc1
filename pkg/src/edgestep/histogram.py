from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DENSE_LIMIT = 1024


@dataclass
class DegreeHistogram:
    """Exact degree counts N_t(d) at one time.

    Degrees up to 1024 live in a dense array indexed by degree; larger
    realized degrees go in a dict (power-law tails realize few of them).
    """

    t: int
    vertex_count: int
    dense: np.ndarray
    sparse: dict = field(default_factory=dict)
    max_degree: int = 0
    first_vertex_degree: int = 0

    @classmethod
    def from_degrees(cls, t: int, degrees: np.ndarray) -> DegreeHistogram:
        degrees = np.asarray(degrees)
        small = degrees[degrees <= DENSE_LIMIT]
        dense = np.bincount(small, minlength=DENSE_LIMIT + 1).astype(np.int64)
        big = degrees[degrees > DENSE_LIMIT]
        sparse = {}
        if big.size:
            values, counts = np.unique(big, return_counts=True)
            sparse = {int(v): int(c) for v, c in zip(values, counts)}
        return cls(
            t=int(t),
            vertex_count=int(degrees.size),
            dense=dense,
            sparse=sparse,
            max_degree=int(degrees.max()) if degrees.size else 0,
            first_vertex_degree=int(degrees[0]) if degrees.size else 0,
        )

    def count(self, d: int) -> int:
        if 0 <= d <= DENSE_LIMIT:
            return int(self.dense[d])
        return self.sparse.get(int(d), 0)

    def items(self):
        """(degree, count) pairs for realized degrees, ascending."""
        for d in np.flatnonzero(self.dense):
            yield int(d), int(self.dense[d])
        for d in sorted(self.sparse):
            yield d, self.sparse[d]

    def as_dict(self) -> dict:
        return dict(self.items())

    def total_degree(self) -> int:
        return sum(d * c for d, c in self.items())

    def to_csv_rows(self):
        return [(d, c) for d, c in self.items()]
