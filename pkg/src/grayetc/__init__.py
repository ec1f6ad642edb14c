"""Grayscale-based block-scrambling image encryption for Encryption-then-Compression.

A color image is converted to YCbCr, its chroma optionally sub-sampled to
4:2:0, and the three planes are packed into one grayscale composite.  The
composite is scrambled block by block (permutation, rotation/flip and
negative-positive transform, each driven by its own key), then compressed
as a grayscale JPEG, optionally with a corpus-derived quantization table.
"""

from .cipher import (
    decrypt,
    decrypt_color_baseline,
    encrypt,
    encrypt_color_baseline,
    keyspace_bits,
)
from .codec import JpegConfig, jpeg_roundtrip, load_profile, rd_sweep, sns_emulate
from .composite import Composite, Layout, assemble, disassemble, load_composite, save_composite
from .errors import CodecError, FormatError, GeometryError, GrayEtcError, KeyFormatError
from .gtable import QuantTable, derive_gtable, gtable_from_images
from .keystream import KeySet
from .metrics import PuzzleAssignment, direct_comparison, largest_component, neighbor_comparison
from .pixelcore import Sampling, YCbCrImage, psnr, rgb_to_ycbcr, ycbcr_to_rgb

__version__ = "0.1.0"


def encrypt_image(rgb, keys: KeySet, sampling="420", block: int = 8) -> Composite:
    """RGB image -> encrypted composite in one call."""
    return encrypt(assemble(rgb_to_ycbcr(rgb), sampling), keys, block)


def decrypt_image(c: Composite, keys: KeySet):
    """Encrypted composite -> RGB image (chroma upsampled by replication)."""
    from .pixelcore import to_444

    return ycbcr_to_rgb(to_444(disassemble(decrypt(c, keys))))
