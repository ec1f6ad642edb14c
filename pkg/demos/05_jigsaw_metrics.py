"""
Scoring jigsaw-puzzle reassemblies
==================================

A ciphertext is a jigsaw puzzle.  Three scores say how close an attacker's
reassembly is to the original:

* direct comparison: pieces in the right place and orientation
* neighbor comparison: adjacent pairs that are correctly joined
* largest component: the biggest correctly joined group
"""

import numpy as np

from grayetc import KeySet
from grayetc.cipher import keyspace_bits
from grayetc.metrics import PuzzleAssignment, score

cols, rows = 4, 3
cases = {
    "solved": PuzzleAssignment.identity(cols, rows),
    "rows swapped": PuzzleAssignment(cols, rows, np.r_[4:12, 0:4], np.zeros(12, int)),
    "ciphertext as is": PuzzleAssignment.from_keys(cols, rows, KeySet.from_seed("demo")),
}
# the whole picture rotated by 180 degrees: every pair still joins
ids = np.rot90(np.arange(12).reshape(rows, cols), 2).ravel()
cases["rotated 180"] = PuzzleAssignment(cols, rows, ids, np.full(12, 2))

for name, a in cases.items():
    s = score(a)
    print(f"{name:>18}: Dc {s['direct_comparison']:.3f}  Nc {s['neighbor_comparison']:.3f}  "
          f"Lc {s['largest_component']:.3f}")

# %%
# A solver's output can be scored from a file, one "block_id code" line per
# grid position after a "cols rows" header.
print()
print(cases["rows swapped"].to_text())

# %%
for n in (12, 768, 4608):
    print(f"N_b = {n:5d}: key space 2^{keyspace_bits(n):.1f}")
