"""Sample images for the demos.

scikit-image ships a handful of photographs; they are cropped so that both
sides are multiples of 16, which every block size and sampling accepts.
"""

import numpy as np

NAMES = ("astronaut", "coffee", "chelsea", "rocket")


def load(name="astronaut", size=(512, 384)):
    from skimage import data
    from PIL import Image

    rgb = getattr(data, name)()
    w, h = size
    im = Image.fromarray(rgb)
    # scale the short side, then center-crop
    s = max(w / im.width, h / im.height)
    im = im.resize((round(im.width * s), round(im.height * s)), Image.LANCZOS)
    x0, y0 = (im.width - w) // 2, (im.height - h) // 2
    return np.asarray(im.crop((x0, y0, x0 + w, y0 + h)))


def corpus(size=(256, 192)):
    return [load(n, size) for n in NAMES]
