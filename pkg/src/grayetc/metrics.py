"""Scores for jigsaw-puzzle reassemblies of scrambled images.

An assignment says, for each grid position in row-major order, which
original block sits there and which dihedral transform (code 0-7, as in
:mod:`grayetc.cipher`) was applied to it.  The ground truth is block ``i``
at position ``i`` untransformed.

Two neighbouring pieces are *correctly joined* when they carry the same
transform ``t`` and their original offset, mapped through ``t``, equals
their offset in the assembly.  A globally rotated but otherwise perfect
assembly therefore scores 1 on neighbour comparison and largest component,
and 0 on direct comparison.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cipher import dihedral_displacement, permutation_from_key, transform_codes_from_key
from .errors import FormatError
from .keystream import KeySet

__all__ = [
    "PuzzleAssignment",
    "direct_comparison",
    "neighbor_comparison",
    "largest_component",
    "score",
    "correct_joins",
]

# displacement matrices, displacement_after = _DISP[code] @ displacement_before
_DISP = np.array(
    [
        [
            list(dihedral_displacement(code, 1, 0)),
            list(dihedral_displacement(code, 0, 1)),
        ]
        for code in range(8)
    ]
).transpose(0, 2, 1)


@dataclass(frozen=True)
class PuzzleAssignment:
    cols: int
    rows: int
    block_ids: np.ndarray
    transforms: np.ndarray

    def __post_init__(self):
        if self.cols < 1 or self.rows < 1:
            raise FormatError(f"invalid grid {self.cols}x{self.rows}")
        n = self.cols * self.rows
        ids = np.asarray(self.block_ids, dtype=np.int64).reshape(-1)
        tr = np.asarray(self.transforms, dtype=np.int64).reshape(-1)
        if ids.size != n or tr.size != n:
            raise FormatError(f"a {self.cols}x{self.rows} grid needs {n} entries")
        if not np.array_equal(np.sort(ids), np.arange(n)):
            raise FormatError("block ids must be a permutation of 0..N_b-1")
        if tr.min() < 0 or tr.max() > 7:
            raise FormatError("transform codes must lie in 0..7")
        object.__setattr__(self, "block_ids", ids.reshape(self.rows, self.cols))
        object.__setattr__(self, "transforms", tr.reshape(self.rows, self.cols))

    @property
    def n_blocks(self) -> int:
        return self.cols * self.rows

    @classmethod
    def identity(cls, cols: int, rows: int) -> "PuzzleAssignment":
        n = cols * rows
        return cls(cols, rows, np.arange(n), np.zeros(n, dtype=np.int64))

    @classmethod
    def from_keys(cls, cols: int, rows: int, keys: KeySet) -> "PuzzleAssignment":
        """The assignment a ciphertext itself represents (no solver applied)."""
        n = cols * rows
        return cls(cols, rows, permutation_from_key(keys.k1, n), transform_codes_from_key(keys.k2, n))

    def to_text(self) -> str:
        lines = [f"{self.cols} {self.rows}"]
        for b, t in zip(self.block_ids.ravel(), self.transforms.ravel()):
            lines.append(f"{int(b)} {int(t)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "PuzzleAssignment":
        rows_ = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows_:
            raise FormatError("empty assignment file")
        try:
            cols, rows = (int(v) for v in rows_[0])
            body = [(int(b), int(t)) for b, t in rows_[1:]]
        except ValueError as e:
            raise FormatError(f"malformed assignment file: {e}") from e
        if len(body) != cols * rows:
            raise FormatError(f"expected {cols * rows} placement lines, got {len(body)}")
        ids, tr = zip(*body) if body else ((), ())
        return cls(cols, rows, np.array(ids), np.array(tr))

    @classmethod
    def load(cls, path: str | os.PathLike) -> "PuzzleAssignment":
        return cls.parse(Path(path).read_text())


def correct_joins(a: PuzzleAssignment) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks of correct horizontal ``(rows, cols-1)`` and vertical
    ``(rows-1, cols)`` joins."""
    ids, tr = a.block_ids, a.transforms
    orig_r, orig_c = np.divmod(ids, a.cols)

    def joined(sl_a, sl_b, step):
        ta, tb = tr[sl_a], tr[sl_b]
        d = np.stack([orig_r[sl_b] - orig_r[sl_a], orig_c[sl_b] - orig_c[sl_a]], axis=-1)
        mapped = np.einsum("...ij,...j->...i", _DISP[ta], d)
        return (ta == tb) & (mapped[..., 0] == step[0]) & (mapped[..., 1] == step[1])

    horiz = joined((slice(None), slice(None, -1)), (slice(None), slice(1, None)), (0, 1))
    vert = joined((slice(None, -1), slice(None)), (slice(1, None), slice(None)), (1, 0))
    return horiz, vert


def direct_comparison(a: PuzzleAssignment) -> float:
    """Fraction of pieces in their original position and orientation."""
    truth = np.arange(a.n_blocks).reshape(a.rows, a.cols)
    return float(np.mean((a.block_ids == truth) & (a.transforms == 0)))


def neighbor_comparison(a: PuzzleAssignment) -> float:
    """Fraction of adjacent position pairs that are correctly joined.

    Normalised by the number of pairs, ``cols*(rows-1) + rows*(cols-1)``.
    A single-piece grid has no pairs and scores 1.
    """
    horiz, vert = correct_joins(a)
    total = horiz.size + vert.size
    if total == 0:
        return 1.0
    return float((horiz.sum() + vert.sum()) / total)


def largest_component(a: PuzzleAssignment) -> float:
    """Size of the largest 4-connected group of correctly joined pieces over N_b."""
    horiz, vert = correct_joins(a)
    n = a.n_blocks
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    for r, c in zip(*np.nonzero(horiz)):
        union(r * a.cols + c, r * a.cols + c + 1)
    for r, c in zip(*np.nonzero(vert)):
        union(r * a.cols + c, (r + 1) * a.cols + c)
    sizes = np.bincount([find(i) for i in range(n)], minlength=n)
    return float(sizes.max() / n)


def score(a: PuzzleAssignment) -> dict[str, float]:
    return {
        "direct_comparison": direct_comparison(a),
        "neighbor_comparison": neighbor_comparison(a),
        "largest_component": largest_component(a),
    }
