"""Acceptance suite.

Each test checks one criterion at its stated tolerance and records a
single PASS/FAIL line; the lines are printed together at the end of the
pytest run.  Run just this file with::

    python3 -m pytest tests/test_acceptance.py -v
    python3 tests/test_acceptance.py      # same, with live output
"""

import contextlib
import itertools
import math
import os
import sys

import numpy as np
import pytest

from grayetc import KeySet
from grayetc.cipher import count_blocks, decrypt, encrypt, keyspace_bits
from grayetc.cli import main as cli_main
from grayetc.codec import interpolate_psnr, load_profile, rd_sweep
from grayetc.composite import assemble
from grayetc.gtable import (
    corpus_mean,
    composite_coeff_mean,
    derive_gtable,
    forward_dct,
    gtable_from_images,
)
from grayetc.metrics import PuzzleAssignment, score
from grayetc.netpbm import write_netpbm
from grayetc.pixelcore import rgb_to_ycbcr

from corpus import training_corpus
from oracles import log2_factorial_lgamma, naive_dct_batch, ref_scores, ref_transform

RESULTS = {}
JOBS = min(8, os.cpu_count() or 1)
ACCEPT_KEYS = KeySet.from_seed("acceptance")


@contextlib.contextmanager
def criterion(n, title):
    detail = []
    try:
        yield detail
    except BaseException:
        RESULTS[n] = f"FAIL  {n:>2}. {title}" + (f": {'; '.join(detail)}" if detail else "")
        print(RESULTS[n])
        raise
    RESULTS[n] = f"PASS  {n:>2}. {title}" + (f": {'; '.join(detail)}" if detail else "")
    print(RESULTS[n])


def summary_lines():
    return [RESULTS[k] for k in sorted(RESULTS)]


@pytest.fixture(scope="module")
def desk20(desk_images):
    assert len(desk_images) >= 20
    return desk_images


def test_01_roundtrip_property():
    with criterion(1, "decrypt(encrypt(I)) == I bit-exactly") as d:
        rng = np.random.default_rng(1)
        n = 0
        for mode, block in itertools.product(("444", "420"), (8, 16)):
            for _ in range(256):
                w, h = (int(v) for v in rng.integers(8, 81, 2))
                rgb = rng.integers(0, 256, (h, w, 3)).astype(np.uint8)
                if rng.random() < 0.5:
                    # smooth content as well as noise
                    yy, xx = np.mgrid[0:h, 0:w]
                    rgb = ((rgb.astype(int) // 8 + xx[..., None] * 3 + yy[..., None]) % 256).astype(np.uint8)
                keys = KeySet(*(rng.bytes(32) for _ in range(3)))
                comp = assemble(rgb_to_ycbcr(rgb), mode)
                enc = encrypt(comp, keys, block)
                assert decrypt(enc, keys) == comp, (mode, block, w, h)
                n += 1
        d.append(f"{n} random images, 4:4:4 and 4:2:0, B in {{8,16}}")
        assert n >= 1000


def test_02_block_count_512x384():
    with criterion(2, "512x384, 4:2:0, B=8 gives N_b = 4608") as d:
        y, x = np.mgrid[0:384, 0:512]
        rgb = np.stack([x % 256, y % 256, (x + y) % 256], -1).astype(np.uint8)
        comp = assemble(rgb_to_ycbcr(rgb), "420")
        nb = count_blocks(comp.plane.shape[1], comp.plane.shape[0], 8, 8)
        d.append(f"N_b = {nb}")
        assert nb == 4608
        assert comp.layout.active_pixels == 512 * 384 * 3 // 2


def test_03_gtable_anchor():
    with criterion(3, "G-table q(1,1) = 17 with eps = 16, all entries >= 17") as d:
        cbar = corpus_mean(composite_coeff_mean(im, "420") for _, im in training_corpus())
        table = derive_gtable(cbar, 16)
        assert cbar.values.argmax() == 0  # DC is the largest mean magnitude
        assert table[0, 0] == 17 and table.values.min() >= 17
        rng = np.random.default_rng(3)
        for _ in range(1000):
            # at most 1000:1 dynamic range so every step fits a 16-bit table
            v = rng.random((8, 8)) * 1000 + 1
            v[0, 0] = v.max() * (1 + rng.random())
            t = derive_gtable(v, 16)
            assert t[0, 0] == 17 and t.values.min() >= 17
        d.append(f"corpus of {cbar.n_images} images plus 1000 synthetic matrices")


def test_04_dct_oracle():
    with criterion(4, "fast DCT equals naive DCT within 1e-9 on 10^4 blocks") as d:
        blocks = np.random.default_rng(4).integers(0, 256, (10_000, 8, 8))
        err = float(np.abs(forward_dct(blocks) - naive_dct_batch(blocks)).max())
        d.append(f"max |diff| = {err:.2e}")
        assert err < 1e-9


def test_05_scrambling_is_compression_neutral(desk20, gtable_420):
    with criterion(5, "encrypted vs plain 4:2:0 composites: bpp within 10%, PSNR within 1 dB") as d:
        q = [70, 80, 90, 100]
        plain = rd_sweep(desk20, "composite", q, "420", gtable=gtable_420, jobs=JOBS)
        enc = rd_sweep(desk20, "proposed", q, "420", keys=ACCEPT_KEYS, gtable=gtable_420, jobs=JOBS)
        ok = True
        for p, e in zip(plain, enc):
            rel = e.mean_bpp / p.mean_bpp - 1
            dpsnr = e.mean_psnr_db - p.mean_psnr_db
            d.append(f"Q{p.quality} bpp {rel:+.1%} PSNR {dpsnr:+.2f} dB")
            ok &= abs(rel) <= 0.10 and abs(dpsnr) <= 1.0
        d.insert(0, f"{len(desk20)} images")
        assert ok


def test_06_subsampling_advantage(desk20, gtable_420):
    with criterion(6, "proposed 4:2:0 above proposed 4:4:4 at equal bpp, Qf 70-100") as d:
        q = list(range(70, 101))
        g444 = gtable_from_images((im for _, im in training_corpus()), "444")
        c420 = rd_sweep(desk20, "proposed", q, "420", keys=ACCEPT_KEYS, gtable=gtable_420, jobs=JOBS)
        c444 = rd_sweep(desk20, "proposed", q, "444", keys=ACCEPT_KEYS, gtable=g444, jobs=JOBS)
        compared, wins, losses = 0, [], []
        for p in c444:
            v = interpolate_psnr(c420, p.mean_bpp)
            if math.isnan(v):
                continue
            compared += 1
            (wins if v > p.mean_psnr_db else losses).append((p.quality, p.mean_bpp, v - p.mean_psnr_db))
        assert compared >= 5, "the two curves barely overlap"
        d.append(f"4:2:0 higher at {len(wins)}/{compared} points of the 4:4:4 curve")
        if wins:
            d.append(f"gain {min(w[2] for w in wins):.2f} to {max(w[2] for w in wins):.2f} dB")
        if losses:
            first = min(losses, key=lambda t: t[1])
            d.append(
                f"lower from {first[1]:.2f} bpp (4:4:4 Q{first[0]}) up, by as much as "
                f"{-min(t[2] for t in losses):.2f} dB"
            )
        assert not losses


def test_07_facebook_contrast(desk20, gtable_420):
    with criterion(7, "facebook: color baseline B=8 loses >= 3 dB more than proposed") as d:
        fb = load_profile("facebook")
        q = [80, 90, 100]
        kw = dict(keys=ACCEPT_KEYS, jobs=JOBS)
        prop_up = rd_sweep(desk20, "proposed", q, "420", gtable=gtable_420, **kw)
        prop_dn = rd_sweep(desk20, "proposed", q, "420", gtable=gtable_420, sns=fb, **kw)
        # the baseline is uploaded without subsampling, its most favourable case
        base_up = rd_sweep(desk20, "color_baseline", q, "444", block=8, **kw)
        base_dn = rd_sweep(desk20, "color_baseline", q, "444", block=8, sns=fb, **kw)
        ok = True
        for pu, pd_, bu, bd in zip(prop_up, prop_dn, base_up, base_dn):
            extra = (bu.mean_psnr_db - bd.mean_psnr_db) - (pu.mean_psnr_db - pd_.mean_psnr_db)
            gap = pd_.mean_psnr_db - bd.mean_psnr_db
            d.append(f"Q{pu.quality}: downloaded {pd_.mean_psnr_db:.2f} vs {bd.mean_psnr_db:.2f} dB, extra loss {extra:.2f} dB")
            ok &= extra >= 3.0 and gap >= 3.0
        assert ok


def _structured_4x4(rng):
    kind = rng.integers(3)
    if kind == 0:
        return rng.permutation(16), rng.integers(0, 8, 16)
    code = int(rng.integers(8))
    ids = ref_transform(np.arange(16).reshape(4, 4), code).astype(np.int64).ravel()
    tr = np.full(16, code)
    for _ in range(int(rng.integers(0, 4))):
        i, j = rng.integers(16, size=2)
        ids[[i, j]] = ids[[j, i]]
        if kind == 2:
            tr[i] = rng.integers(8)
    return ids, tr


def test_08_metric_oracle():
    with criterion(8, "Dc/Nc/Lc equal the rendering oracle") as d:
        n = 0
        for ids in itertools.permutations(range(4)):
            for tr in itertools.product(range(8), repeat=4):
                s = score(PuzzleAssignment(2, 2, ids, tr))
                want = ref_scores(2, 2, ids, tr)
                got = (s["direct_comparison"], s["neighbor_comparison"], s["largest_component"])
                assert np.allclose(got, want, rtol=0, atol=1e-12), (ids, tr, got, want)
                n += 1
        assert n == 24 * 8**4
        rng = np.random.default_rng(8)
        for _ in range(10_000):
            ids, tr = _structured_4x4(rng)
            s = score(PuzzleAssignment(4, 4, ids, tr))
            got = (s["direct_comparison"], s["neighbor_comparison"], s["largest_component"])
            assert np.allclose(got, ref_scores(4, 4, ids, tr), rtol=0, atol=1e-12), (ids, tr)
        d.append(f"{n} exhaustive 2x2 assignments, 10000 random 4x4")


def test_09_keyspace():
    with criterion(9, "key space bits") as d:
        assert keyspace_bits(2) == 9
        got = keyspace_bits(4608)
        want = log2_factorial_lgamma(4608) + 4 * 4608
        rel = abs(got - want) / want
        d.append(f"keyspace_bits(4608) = {got:.4f}, relative error {rel:.1e}")
        assert rel < 1e-6


def _cli_session(root, images, keys_text, gtable):
    """Run every CLI command with relative paths inside ``root``."""
    old = os.getcwd()
    root.mkdir()
    os.chdir(root)
    try:
        os.mkdir("corpus")
        for i, im in enumerate(images):
            write_netpbm(f"corpus/{i:02d}.ppm", im)
        write_netpbm("in.ppm", images[0])
        with open("keys.txt", "w") as fh:
            fh.write(keys_text)
        gtable.save("g.txt")
        with open("assign.txt", "w") as fh:
            fh.write(PuzzleAssignment.from_keys(4, 3, ACCEPT_KEYS).to_text())
        k = ["--key-file", "keys.txt"]
        commands = [
            ["encrypt", "--in", "in.ppm", "--out", "c.pgm", *k],
            ["encrypt", "--in", "in.ppm", "--out", "c444.pgm", "--sampling", "444", "--block", "16", *k],
            ["encrypt", "--in", "in.ppm", "--out", "col.ppm", "--scheme", "color", *k],
            ["compress", "--in", "c.pgm", "--out", "c.jpg", "--qf", "90", "--gtable", "g.txt"],
            ["compress", "--in", "col.ppm", "--out", "col.jpg", "--qf", "95"],
            ["sns", "--profile", "facebook", "--in", "c.jpg", "--out", "c_fb.jpg"],
            ["sns", "--profile", "twitter", "--in", "col.jpg", "--out", "col_tw.jpg"],
            ["decrypt", "--in", "c_fb.jpg", "--meta", "c.json", "--out", "back.ppm", *k],
            ["decrypt", "--in", "c444.pgm", "--out", "back444.ppm", *k],
            ["gtable", "derive", "--corpus", "corpus", "--out", "g2.txt", "--stats", "g2.csv"],
            ["rd-sweep", "--pipeline", "proposed", "--corpus", "corpus", "--qf", "70:100:10",
             "--gtable", "g.txt", "--sns", "facebook", "--out", "rd1.csv", "--jobs", "1", *k],
            ["rd-sweep", "--pipeline", "proposed", "--corpus", "corpus", "--qf", "70:100:10",
             "--gtable", "g.txt", "--sns", "facebook", "--out", "rd2.csv", "--jobs", "2",
             "--manifest", "rd2.manifest", *k],
            ["rd-sweep", "--pipeline", "color_baseline", "--corpus", "corpus", "--qf", "80,90",
             "--out", "rdb.csv", "--key-seed", "3", "--jobs", "1"],
            ["metrics", "--assignment", "assign.txt", "--out", "m.csv"],
        ]
        for argv in commands:
            assert cli_main(argv) == 0, argv
        return {p: open(p, "rb").read() for p in sorted(os.listdir(".")) if os.path.isfile(p)}
    finally:
        os.chdir(old)


def test_10_cli_determinism(tmp_path, desk20, gtable_420, capsys):
    with criterion(10, "CLI outputs are byte-identical across runs") as d:
        images = desk20[:3]
        a = _cli_session(tmp_path / "a", images, ACCEPT_KEYS.to_text(), gtable_420)
        b = _cli_session(tmp_path / "b", images, ACCEPT_KEYS.to_text(), gtable_420)
        capsys.readouterr()
        assert a.keys() == b.keys()
        differing = [p for p in a if a[p] != b[p]]
        assert not differing, differing
        assert a["rd1.csv"] == a["rd2.csv"], "worker count changed the sweep"
        manifests = [p for p in a if "manifest" in p]
        for p in manifests:
            for key in (ACCEPT_KEYS.k1, ACCEPT_KEYS.k2, ACCEPT_KEYS.k3):
                assert key.hex().encode() not in a[p]
        d.append(f"{len(a)} files incl. {len(manifests)} manifests identical; single platform only")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
