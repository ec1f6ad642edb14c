"""
Rate-distortion of the pipelines
================================

Each pipeline is swept over quality factors; the curve is mean bits per
pixel (of the JPEG file, per original pixel) against mean RGB PSNR.

* none: plain color JPEG of the original
* composite: grayscale composite, no encryption
* proposed: encrypted composite
* color_baseline: block scrambling on each RGB channel, color JPEG
"""

import sys
from pathlib import Path

from grayetc import KeySet
from grayetc.codec import rd_csv, rd_sweep
from grayetc.gtable import gtable_from_images

from _images import corpus

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
out.mkdir(exist_ok=True)

images = corpus()
keys = KeySet.from_seed("demo")
gtable = gtable_from_images(images, "420")
qualities = range(70, 101, 5)

curves = [
    rd_sweep(images, "none", qualities, "420"),
    rd_sweep(images, "composite", qualities, "420", gtable=gtable),
    rd_sweep(images, "proposed", qualities, "420", keys=keys, gtable=gtable),
    rd_sweep(images, "proposed", qualities, "444", keys=keys, gtable=gtable_from_images(images, "444")),
    rd_sweep(images, "color_baseline", qualities, "444", keys=keys, block=16),
]
text = "".join(rd_csv(c) if i == 0 else rd_csv(c).split("\n", 1)[1] for i, c in enumerate(curves))
(out / "rd.csv").write_text(text)
print(text)

# %%
# Encrypted and plain composites should sit almost on top of each other.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    sys.exit(0)

fig, ax = plt.subplots(figsize=(6, 4))
for c in curves:
    ax.plot([p.mean_bpp for p in c], [p.mean_psnr_db for p in c], marker="o", label=c[0].config)
ax.set_xlabel("bpp")
ax.set_ylabel("PSNR [dB]")
ax.set_xlim(0, 4)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(out / "rd.png", dpi=120)
print("wrote", out / "rd.png")
