"""Hadamard derived patterns and the coarse-to-fine ordering.

Run: python demos/01_patterns_and_ordering.py
"""
import numpy as np

from mpgi.hadamard import hadamard_matrix, pattern_2d, upsample_replicate
from mpgi.ordering import conventional_budget, new_pairs, seq_to_index, seq_to_pattern

# %% The order-4 matrix and its rows reshaped into 2x2 patterns
H4 = hadamard_matrix(2)
print(H4)
for m in range(4):
    print(f"row {m} as 2x2:\n{H4[m].reshape(2, 2)}")

# %% Lower-order patterns sit inside higher-order ones after pixel replication
coarse = pattern_2d(1, 1, 0)
print("tier-1 (1,0) enlarged x2 equals tier-2 (2,0):",
      np.array_equal(upsample_replicate(coarse, 2), pattern_2d(2, 2, 0).values))

# %% Each tier only adds its complementary set
for tier in range(4):
    print(f"tier {tier}: {len(new_pairs(tier))} new patterns")

# %% The first 16 positions of a K=3 sequence
for m in range(16):
    print(m, seq_to_index(m))
print(seq_to_pattern(5, 3))

# %% Budget: one progressive run vs independent runs per resolution
for kmax in range(1, 8):
    print(f"up to {2 ** kmax}x{2 ** kmax}: progressive {4 ** kmax:6d}  conventional {conventional_budget(kmax):6d}")
