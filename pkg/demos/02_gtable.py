"""
A quantization table for grayscale composites
=============================================

The standard JPEG luma table was tuned for natural luminance images.  A
composite mixes luma and chroma, so its coefficient statistics differ.  The
G-table sets each step from the ratio of the mean DC magnitude to the mean
magnitude at that frequency, plus an offset epsilon.
"""

import numpy as np

from grayetc.gtable import STD_LUMA, corpus_mean, composite_coeff_mean, derive_gtable

from _images import corpus

images = corpus()
cbar = corpus_mean(composite_coeff_mean(im, "420") for im in images)
np.set_printoptions(linewidth=120, precision=1, suppress=True)
print(f"mean |DCT| over {cbar.n_images} composites")
print(cbar.values)

# %%
table = derive_gtable(cbar, epsilon=16)
print("\nG-table (epsilon = 16)")
print(table.to_text())
print("Annex K luma table, for comparison")
print(STD_LUMA)

# %%
# Larger epsilon flattens the table toward uniform quantization.
for eps in (0, 16, 64):
    t = derive_gtable(cbar, eps).values
    print(f"epsilon {eps:3d}: DC step {t[0, 0]}, highest step {t.max()}")
