"""
Grayscale-based block scrambling, end to end
============================================

A color image is converted to YCbCr, the chroma planes are optionally
subsampled, and all planes are packed into one grayscale image.  The
scrambling then works on that single plane, so a JPEG encoder (or a social
network) has no color channels left to subsample.
"""

import sys
from pathlib import Path

import numpy as np
from PIL import Image

from grayetc import KeySet, decrypt_image, encrypt_image
from grayetc.cipher import count_blocks, keyspace_bits
from grayetc.composite import assemble, disassemble
from grayetc.pixelcore import psnr, rgb_to_ycbcr, to_444, ycbcr_to_rgb

from _images import load

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

rgb = load("astronaut")
print("input", rgb.shape)

# %%
# The composite: Y on top, the two half-size chroma planes side by side below.
comp = assemble(rgb_to_ycbcr(rgb), "420")
lay = comp.layout
print("composite plane", comp.plane.shape, "active pixels", lay.active_pixels)
for name, r in lay.regions().items():
    print(f"  {name}: at ({r.x},{r.y}) size {r.width}x{r.height}")
Image.fromarray(comp.plane).save(out / "composite.png")

# %%
# Three keys drive the three block operations: position scrambling,
# rotation/flip, and negative-positive transformation.
keys = KeySet.from_seed("demo")
enc = encrypt_image(rgb, keys, sampling="420", block=8)
nb = count_blocks(enc.plane.shape[1], enc.plane.shape[0], 8, 8)
print(f"N_b = {nb} blocks, key space about 2^{keyspace_bits(nb):.0f}")
Image.fromarray(enc.plane).save(out / "ciphertext.png")

# %%
# Decryption inverts every step.  The only loss is the chroma subsampling
# and the color conversion rounding, which the plaintext composite has too.
back = decrypt_image(enc, keys)
ref = ycbcr_to_rgb(to_444(disassemble(comp)))
assert np.array_equal(back, ref)
print(f"decrypted PSNR vs original: {psnr(rgb, back):.2f} dB")

wrong = decrypt_image(enc, KeySet.from_seed("guess"))
print(f"with the wrong keys: {psnr(rgb, wrong):.2f} dB")
Image.fromarray(back).save(out / "decrypted.png")
Image.fromarray(wrong).save(out / "wrong_key.png")
