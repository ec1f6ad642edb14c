"""Command line entry point: ``grayetc <command> ...``.

Every command that writes files also writes ``<out>.manifest.json`` with
the resolved configuration and SHA-256 digests of inputs and outputs.  Key
material and key files are never hashed or recorded.  Outputs are staged in
memory and only written once the whole command has succeeded.

Exit codes: 0 success, 2 usage, 3 input format, 4 codec, 5 internal.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, cipher, codec, composite, gtable, metrics, netpbm
from .errors import CodecError, FormatError, GeometryError, KeyFormatError
from .keystream import KeySet
from .pixelcore import Sampling, rgb_to_ycbcr, to_444, ycbcr_to_rgb

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CODEC = 4
EXIT_INTERNAL = 5

MANIFEST_VERSION = 1
KEYS_ENV = "GRAYETC_KEYS"
_JPEG_MAGIC = b"\xff\xd8"


class UsageError(Exception):
    pass


class Run:
    """Collects inputs, staged outputs and config for one command."""

    def __init__(self, command: str, config: dict[str, Any]):
        self.command = command
        self.config = config
        self.inputs: dict[str, str] = {}
        self.outputs: dict[Path, bytes] = {}

    def read(self, path: str | os.PathLike) -> bytes:
        p = Path(path)
        try:
            data = p.read_bytes()
        except FileNotFoundError:
            raise FormatError(f"no such file: {p}") from None
        self.inputs[str(path)] = hashlib.sha256(data).hexdigest()
        return data

    def stage(self, path: str | os.PathLike, data: bytes | str) -> None:
        self.outputs[Path(path)] = data.encode() if isinstance(data, str) else data

    def manifest(self) -> bytes:
        doc = {
            "manifest_version": MANIFEST_VERSION,
            "tool": "grayetc",
            "tool_version": __version__,
            "command": self.command,
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": {str(p): hashlib.sha256(d).hexdigest() for p, d in sorted(self.outputs.items())},
        }
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()

    def commit(self, primary: str | os.PathLike, manifest_path: str | None = None) -> None:
        mpath = Path(manifest_path) if manifest_path else Path(str(primary) + ".manifest.json")
        files = dict(self.outputs)
        files[mpath] = self.manifest()
        for path, data in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            try:
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise


def _load_keys(args) -> tuple[KeySet, str]:
    flags = [args.k1, args.k2, args.k3]
    if args.key_file and any(flags):
        raise UsageError("give keys either with --key-file or with --k1/--k2/--k3, not both")
    if args.key_file:
        try:
            text = Path(args.key_file).read_text()
        except FileNotFoundError:
            raise UsageError(f"key file not found: {args.key_file}") from None
        return KeySet.parse(text), "file"
    if any(flags):
        if not all(flags):
            raise UsageError("--k1, --k2 and --k3 must all be given")
        return KeySet.from_hex(*flags), "flags"
    env = os.environ.get(KEYS_ENV)
    if env:
        return KeySet.parse("\n".join(env.replace(",", " ").split())), "env"
    seed = getattr(args, "key_seed", None)
    if seed is not None:
        return KeySet.from_seed(seed), f"seed:{seed}"
    raise UsageError(f"no keys: use --key-file, --k1/--k2/--k3 or ${KEYS_ENV}")


def _add_key_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("keys (64 hex characters each)")
    g.add_argument("--key-file", help="file with three lines: K1, K2, K3 in hex")
    g.add_argument("--k1", help="permutation key")
    g.add_argument("--k2", help="rotation/flip key")
    g.add_argument("--k3", help="negative-positive key")


def _read_image(run: Run, path: str) -> np.ndarray:
    data = run.read(path)
    if data[:2] == _JPEG_MAGIC:
        return codec.decode_jpeg(data)
    return netpbm.decode_netpbm(data)


def _sidecar_for(path: str, meta: str | None) -> str:
    return meta if meta else str(composite.sidecar_path(path))


def cmd_encrypt(args) -> None:
    keys, key_source = _load_keys(args)
    run = Run(
        "encrypt",
        {"in": args.input, "out": args.out, "scheme": args.scheme, "sampling": args.sampling,
         "block": args.block, "keys": key_source},
    )
    rgb = _read_image(run, args.input)
    if rgb.ndim != 3:
        raise FormatError(f"{args.input} is not a color (PPM) image")
    meta_path = _sidecar_for(args.out, args.meta)
    if args.scheme == "gray":
        comp = cipher.encrypt(composite.assemble(rgb_to_ycbcr(rgb), args.sampling), keys, args.block)
        run.stage(args.out, netpbm.encode_netpbm(comp.plane))
        run.stage(meta_path, composite.dump_metadata(comp.metadata()))
    else:
        h, w = rgb.shape[:2]
        enc = cipher.encrypt_color_baseline(rgb, keys, args.block)
        meta = {"format_version": composite.FORMAT_VERSION, "width": w, "height": h,
                "cipher": cipher.cipher_metadata(cipher.SCHEME_COLOR, args.block)}
        run.stage(args.out, netpbm.encode_netpbm(enc))
        run.stage(meta_path, composite.dump_metadata(meta))
    run.commit(args.out, args.manifest)


def cmd_decrypt(args) -> None:
    keys, key_source = _load_keys(args)
    meta_path = _sidecar_for(args.input, args.meta)
    run = Run("decrypt", {"in": args.input, "meta": meta_path, "out": args.out, "keys": key_source})
    if not Path(meta_path).exists():
        raise FormatError(f"missing sidecar metadata {meta_path}")
    meta_text = run.read(meta_path).decode()
    try:
        meta = json.loads(meta_text)
        scheme = (meta.get("cipher") or {}).get("scheme")
    except (json.JSONDecodeError, AttributeError) as e:
        raise FormatError(f"invalid sidecar {meta_path}: {e}") from e
    pixels = _read_image(run, args.input)
    if scheme == cipher.SCHEME_COLOR:
        if pixels.ndim != 3:
            raise FormatError("color-scrambled ciphertext must be an RGB image")
        if pixels.shape[:2] != (meta.get("height"), meta.get("width")):
            raise GeometryError("ciphertext size does not match its sidecar")
        rgb = cipher.decrypt_color_baseline(pixels, keys, int(meta["cipher"]["block_width"]))
    else:
        layout, cmeta = composite.parse_metadata(meta_text)
        if pixels.ndim != 2:
            raise FormatError("grayscale-based ciphertext must be a single-channel image")
        comp = composite.Composite(pixels, layout, cmeta)
        if comp.cipher is not None:
            comp = cipher.decrypt(comp, keys)
        rgb = ycbcr_to_rgb(to_444(composite.disassemble(comp)))
    run.stage(args.out, netpbm.encode_netpbm(rgb))
    run.commit(args.out, args.manifest)


def cmd_compress(args) -> None:
    table = None
    run = Run("compress", {"in": args.input, "out": args.out, "qf": args.qf, "sampling": args.sampling,
                           "gtable": args.gtable})
    if args.gtable:
        table = gtable.QuantTable.parse(run.read(args.gtable).decode())
    pixels = netpbm.decode_netpbm(run.read(args.input))
    sampling = codec.GRAY if pixels.ndim == 2 else args.sampling
    if table is not None and pixels.ndim != 2:
        raise UsageError("--gtable applies to grayscale (PGM) input only")
    data = codec.encode_jpeg(pixels, codec.JpegConfig(args.qf, sampling, table))
    run.config["sampling"] = sampling
    run.stage(args.out, data)
    if pixels.ndim == 2 and args.copy_sidecar:
        src = composite.sidecar_path(args.input)
        if src.exists():
            run.stage(composite.sidecar_path(args.out), run.read(src))
    run.commit(args.out, args.manifest)


def cmd_sns(args) -> None:
    run = Run("sns", {"in": args.input, "out": args.out, "profile": args.profile, "quality": args.quality})
    if Path(args.profile).exists():
        run.read(args.profile)
    profile = codec.load_profile(args.profile)
    data = codec.sns_emulate(run.read(args.input), profile, args.quality)
    run.stage(args.out, data)
    run.commit(args.out, args.manifest)


def _corpus(run: Run, directory: str) -> tuple[list[str], list[np.ndarray]]:
    d = Path(directory)
    if not d.is_dir():
        raise FormatError(f"corpus directory not found: {d}")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in (".ppm", ".pgm"))
    if not files:
        raise FormatError(f"no .ppm/.pgm images in {d}")
    return [p.name for p in files], [netpbm.decode_netpbm(run.read(p)) for p in files]


def cmd_gtable(args) -> None:
    run = Run("gtable derive", {"corpus": args.corpus, "epsilon": args.epsilon, "sampling": args.sampling,
                                "out": args.out})
    names, images = _corpus(run, args.corpus)
    mats = []
    for name, im in zip(names, images):
        try:
            if im.ndim == 3:
                mats.append(gtable.composite_coeff_mean(im, args.sampling))
            else:
                mats.append(gtable.image_coeff_mean(im))
        except GeometryError as e:
            raise GeometryError(f"{name}: {e}") from e
    cbar = gtable.corpus_mean(mats)
    table = gtable.derive_gtable(cbar, args.epsilon)
    run.stage(args.out, table.to_text())
    if args.stats:
        rows = ["i,j,mean_abs_coeff"]
        rows += [f"{i + 1},{j + 1},{cbar.values[i, j]:.9g}" for i in range(8) for j in range(8)]
        run.stage(args.stats, "\n".join(rows) + "\n")
    run.commit(args.out, args.manifest)


def cmd_rd_sweep(args) -> None:
    keys, key_source = None, None
    if args.pipeline in ("proposed", "color_baseline"):
        keys, key_source = _load_keys(args)
    qualities = codec.parse_quality_range(args.qf)
    run = Run("rd-sweep", {"pipeline": args.pipeline, "sampling": args.sampling, "qf": qualities,
                           "block": args.block, "sns": args.sns, "sns_quality": args.sns_quality,
                           "gtable": args.gtable, "corpus": args.corpus, "out": args.out,
                           "keys": key_source, "label": args.label})
    table = gtable.QuantTable.parse(run.read(args.gtable).decode()) if args.gtable else None
    profile = None
    if args.sns:
        if Path(args.sns).exists():
            run.read(args.sns)
        profile = codec.load_profile(args.sns)
    names, images = _corpus(run, args.corpus)
    for name, im in zip(names, images):
        if im.ndim != 3:
            raise FormatError(f"{name}: rd-sweep needs color (PPM) images")
    points = codec.rd_sweep(
        images, args.pipeline, qualities, args.sampling, block=args.block, keys=keys, gtable=table,
        sns=profile, sns_quality=args.sns_quality, names=names, label=args.label, jobs=args.jobs,
    )
    run.stage(args.out, codec.rd_csv(points))
    run.commit(args.out, args.manifest)


def cmd_metrics(args) -> None:
    run = Run("metrics", {"assignment": args.assignment, "out": args.out})
    a = metrics.PuzzleAssignment.parse(run.read(args.assignment).decode())
    s = metrics.score(a)
    text = (
        "n_blocks,direct_comparison,neighbor_comparison,largest_component,keyspace_bits\n"
        f"{a.n_blocks},{s['direct_comparison']:.6f},{s['neighbor_comparison']:.6f},"
        f"{s['largest_component']:.6f},{cipher.keyspace_bits(a.n_blocks):.6f}\n"
    )
    run.stage(args.out, text)
    run.commit(args.out, args.manifest)
    sys.stdout.write(text)


def _block(v: str) -> int:
    b = int(v)
    if b not in cipher.BLOCK_SIZES:
        raise argparse.ArgumentTypeError(f"block size must be one of {cipher.BLOCK_SIZES}")
    return b


def _sampling(v: str) -> str:
    try:
        return Sampling.parse(v).value
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _quality(v: str) -> int:
    q = int(v)
    if not 1 <= q <= 100:
        raise argparse.ArgumentTypeError("quality must be in [1, 100]")
    return q


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grayetc",
        description="Grayscale-based block-scrambling encryption for EtC systems.",
    )
    parser.add_argument("--version", action="version", version=f"grayetc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def common(p):
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")

    p = sub.add_parser("encrypt", help="encrypt a PPM image")
    p.add_argument("--in", dest="input", required=True, help="input PPM")
    p.add_argument("--out", required=True, help="ciphertext image (PGM, or PPM for --scheme color)")
    p.add_argument("--meta", help="sidecar path (default: <out> with .json suffix)")
    p.add_argument("--sampling", type=_sampling, default="420", help="composite chroma sampling: 444 or 420")
    p.add_argument("--block", type=_block, default=8, help="block size, 8 or 16 (default 8)")
    p.add_argument("--scheme", choices=("gray", "color"), default="gray",
                   help="gray: composite scheme (default); color: per-channel baseline")
    _add_key_args(p)
    common(p)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("decrypt", help="decrypt a ciphertext PGM/PPM or JPEG back to PPM")
    p.add_argument("--in", dest="input", required=True, help="ciphertext (PGM, PPM or JPEG)")
    p.add_argument("--meta", help="sidecar path (default: <in> with .json suffix)")
    p.add_argument("--out", required=True, help="output PPM")
    _add_key_args(p)
    common(p)
    p.set_defaults(func=cmd_decrypt)

    p = sub.add_parser("compress", help="JPEG-encode a PGM composite or a PPM image")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True, help="output JPEG")
    p.add_argument("--qf", type=_quality, required=True, help="quality factor 1-100")
    p.add_argument("--sampling", type=_sampling, default="444", help="chroma sampling for PPM input")
    p.add_argument("--gtable", help="base luma table (8 lines x 8 ints) for grayscale input")
    p.add_argument("--no-sidecar", dest="copy_sidecar", action="store_false",
                   help="do not copy the composite sidecar next to the JPEG")
    common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("sns", help="emulate a social network's recompression of a JPEG")
    p.add_argument("--profile", required=True, help="builtin profile (twitter, facebook) or JSON file")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quality", type=_quality, help="override the color re-encode quality")
    common(p)
    p.set_defaults(func=cmd_sns)

    p = sub.add_parser("gtable", help="quantization table tools")
    gsub = p.add_subparsers(dest="gtable_command", required=True, metavar="action")
    d = gsub.add_parser("derive", help="derive a G-table from a corpus")
    d.add_argument("--corpus", required=True, help="directory of PPM images (or PGM composites)")
    d.add_argument("--epsilon", type=int, default=gtable.DEFAULT_EPSILON, help="step offset (default 16)")
    d.add_argument("--sampling", type=_sampling, default="420", help="composite sampling for PPM input")
    d.add_argument("--out", required=True, help="output table (8 lines x 8 integers)")
    d.add_argument("--stats", help="also write the mean coefficient magnitudes as CSV")
    common(d)
    d.set_defaults(func=cmd_gtable)

    p = sub.add_parser("rd-sweep", help="rate-distortion sweep over a corpus")
    p.add_argument("--pipeline", choices=codec.PIPELINES, default="proposed")
    p.add_argument("--sampling", type=_sampling, default="420")
    p.add_argument("--qf", default="70:100:5", help="start:stop:step (inclusive) or comma list")
    p.add_argument("--block", type=_block, default=8)
    p.add_argument("--sns", help="SNS profile name or JSON file")
    p.add_argument("--sns-quality", type=_quality, help="color re-encode quality override for the profile")
    p.add_argument("--gtable", help="base table for grayscale composites")
    p.add_argument("--corpus", required=True, help="directory of PPM images")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--label", help="config label in the CSV (default derived from options)")
    p.add_argument("--key-seed", help="derive experiment keys from this seed when no key is given")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                   help="worker processes (results do not depend on it)")
    _add_key_args(p)
    common(p)
    p.set_defaults(func=cmd_rd_sweep)

    p = sub.add_parser("metrics", help="score a jigsaw-puzzle assignment (Dc, Nc, Lc)")
    p.add_argument("--assignment", required=True, help="assignment file")
    p.add_argument("--out", required=True, help="output CSV")
    common(p)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, KeyFormatError) as e:
        parser.print_usage(sys.stderr)
        print(f"grayetc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FormatError, GeometryError, gtable.DegenerateCorpusError) as e:
        print(f"grayetc: input error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except CodecError as e:
        print(f"grayetc: codec error: {e}", file=sys.stderr)
        return EXIT_CODEC
    except codec.SweepError as e:
        cause = e.__cause__
        print(f"grayetc: {e}", file=sys.stderr)
        if isinstance(cause, CodecError):
            return EXIT_CODEC
        if isinstance(cause, (FormatError, GeometryError)):
            return EXIT_FORMAT
        return EXIT_INTERNAL
    except ValueError as e:
        print(f"grayetc: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # pragma: no cover - last resort
        print(f"grayetc: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
