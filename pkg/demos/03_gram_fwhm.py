"""Resolution cell of Psi^T Psi as the measurement count grows.

Run: python demos/03_gram_fwhm.py
"""
import numpy as np

from mpgi.recon import gram_fwhm, gram_matrix

K = 4
for tier in range(K + 1):
    print(f"M={4 ** tier:4d}  ({2 ** tier}x{2 ** tier})  FWHM = {gram_fwhm(K, 4 ** tier):4d} pixels")

# %% One Gram row reshaped to the image plane shows the block footprint
g = gram_matrix(K, 16)
row = g[(1 << K) * 5 + 6].reshape(1 << K, 1 << K)
np.set_printoptions(linewidth=120)
print((row / row.max()).round(2))
