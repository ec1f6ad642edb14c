"""
Surviving social network recompression
======================================

Services decode uploaded JPEGs and re-encode them, subsampling chroma on the
way.  For a scrambled color image that subsampling mixes pixels across block
boundaries that decryption later pulls apart.  A grayscale composite has no
chroma to subsample.
"""

from grayetc import KeySet
from grayetc.codec import evaluate, load_profile
from grayetc.gtable import gtable_from_images

from _images import corpus, load

keys = KeySet.from_seed("demo")
gtable = gtable_from_images(corpus(), "420")
rgb = load("coffee")

for name in ("twitter", "facebook"):
    profile = load_profile(name)
    print(f"\n{name}: color {profile.color}")
    print(f"{'':>10}gray  {profile.gray}")
    for q in (80, 90):
        _, prop = evaluate(rgb, q, "proposed", "420", keys=keys, gtable=gtable, sns=profile)
        _, base8 = evaluate(rgb, q, "color_baseline", "444", keys=keys, block=8, sns=profile)
        _, base16 = evaluate(rgb, q, "color_baseline", "444", keys=keys, block=16, sns=profile)
        _, plain = evaluate(rgb, q, "none", "444", sns=profile)
        print(
            f"  upload Q{q}: proposed {prop:.2f} dB, color B=8 {base8:.2f} dB, "
            f"color B=16 {base16:.2f} dB, unencrypted {plain:.2f} dB"
        )
