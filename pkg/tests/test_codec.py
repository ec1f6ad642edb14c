import json
import math

import numpy as np
import pytest

from grayetc.codec import (
    GRAY,
    JpegConfig,
    RdPoint,
    SweepError,
    builtin_profiles,
    decode_jpeg,
    encode_jpeg,
    estimate_quality,
    evaluate,
    interpolate_psnr,
    jpeg_info,
    jpeg_roundtrip,
    load_profile,
    parse_quality_range,
    rd_csv,
    rd_sweep,
    sns_emulate,
)
from grayetc.errors import CodecError, FormatError, GeometryError
from grayetc.gtable import STD_LUMA, scale_table
from grayetc.pixelcore import bits_per_pixel, psnr


def test_q100_flat_gray():
    p = np.full((32, 32), 77, np.uint8)
    out, n = jpeg_roundtrip(p, JpegConfig(100, GRAY))
    assert psnr(p, out) > 50 and n > 0


def test_encode_is_deterministic(desk_images):
    rgb = desk_images[0]
    cfg = JpegConfig(85, "420")
    assert encode_jpeg(rgb, cfg) == encode_jpeg(rgb, cfg)


def test_decoded_shapes(desk_images):
    rgb = desk_images[0]
    assert decode_jpeg(encode_jpeg(rgb, JpegConfig(80, "444"))).shape == rgb.shape
    assert decode_jpeg(encode_jpeg(rgb[..., 0], JpegConfig(80))).shape == rgb.shape[:2]


def test_gray_config_needs_plane(desk_images):
    with pytest.raises(GeometryError):
        encode_jpeg(desk_images[0], JpegConfig(80))


def test_bad_quality():
    with pytest.raises(ValueError):
        JpegConfig(0)
    with pytest.raises(ValueError):
        JpegConfig(80, "422")


def test_decode_garbage():
    with pytest.raises(CodecError):
        decode_jpeg(b"not a jpeg")


@pytest.mark.parametrize("q", [30, 71, 85, 95])
def test_written_tables_read_back(q, desk_images):
    info = jpeg_info(encode_jpeg(desk_images[1], JpegConfig(q, "420")))
    assert np.array_equal(info.luma_table, scale_table(STD_LUMA, q).values)
    assert info.is_color and info.sampling == "420" and info.quality == q


def test_override_table_is_used(gtable_420, rng):
    p = rng.integers(0, 256, (32, 32)).astype(np.uint8)
    info = jpeg_info(encode_jpeg(p, JpegConfig(90, GRAY, gtable_420)))
    assert np.array_equal(info.luma_table, scale_table(gtable_420, 90).values)
    assert not info.is_color and info.sampling == GRAY


def test_estimate_quality_exact_for_standard_tables():
    for q in range(1, 101):
        assert estimate_quality(scale_table(STD_LUMA, q).values) == q


def test_sampling_detection(desk_images):
    assert jpeg_info(encode_jpeg(desk_images[2], JpegConfig(80, "444"))).sampling == "444"


def test_builtin_profiles():
    assert {"facebook", "twitter"} <= set(builtin_profiles())
    fb = load_profile("facebook")
    assert fb.color.target_quality == 71 and fb.gray.target_sampling == GRAY


def test_profile_from_file(tmp_path):
    doc = {"format_version": 1, "name": "x", "color": None, "gray": {"target_quality": 50, "target_sampling": "gray"}}
    (tmp_path / "x.json").write_text(json.dumps(doc))
    assert load_profile(tmp_path / "x.json").gray.target_quality == 50
    doc["format_version"] = 2
    (tmp_path / "y.json").write_text(json.dumps(doc))
    with pytest.raises(FormatError):
        load_profile(tmp_path / "y.json")
    with pytest.raises(FormatError):
        load_profile("myspace")


def test_facebook_reencodes_gray_at_71(rng):
    p = rng.integers(0, 256, (48, 48)).astype(np.uint8)
    out = sns_emulate(encode_jpeg(p, JpegConfig(95)), load_profile("facebook"))
    info = jpeg_info(out)
    assert info.quality == 71 and not info.is_color


def test_facebook_color_quality_override(desk_images):
    fb = load_profile("facebook")
    data = encode_jpeg(desk_images[0], JpegConfig(95, "444"))
    assert jpeg_info(sns_emulate(data, fb, 80)).quality == 80
    with pytest.raises(ValueError):
        sns_emulate(data, fb, 90)


def test_facebook_is_nearly_idempotent(desk_images):
    fb = load_profile("facebook")
    once = sns_emulate(encode_jpeg(desk_images[3], JpegConfig(95, "444")), fb)
    twice = sns_emulate(once, fb)
    assert psnr(decode_jpeg(once), decode_jpeg(twice)) > 30
    a = psnr(desk_images[3], decode_jpeg(once))
    b = psnr(desk_images[3], decode_jpeg(twice))
    assert abs(a - b) < 0.5


def test_twitter_leaves_low_quality_uploads(desk_images):
    data = encode_jpeg(desk_images[0], JpegConfig(80, "444"))
    assert sns_emulate(data, load_profile("twitter")) == data


def test_twitter_recompresses_high_quality_uploads(desk_images):
    data = encode_jpeg(desk_images[0], JpegConfig(90, "444"))
    info = jpeg_info(sns_emulate(data, load_profile("twitter")))
    assert info.quality == 85 and info.sampling == "420"


def test_twitter_gray_upload(rng):
    p = rng.integers(0, 256, (32, 32)).astype(np.uint8)
    tw = load_profile("twitter")
    low = encode_jpeg(p, JpegConfig(80))
    assert sns_emulate(low, tw) == low
    info = jpeg_info(sns_emulate(encode_jpeg(p, JpegConfig(95)), tw))
    assert info.quality == 85 and not info.is_color


def test_pipeline_none_is_plain_jpeg(desk_images):
    rgb = desk_images[4]
    data = encode_jpeg(rgb, JpegConfig(75, "420"))
    bpp, db = evaluate(rgb, 75, "none", "420")
    assert bpp == bits_per_pixel(len(data), rgb.shape[1], rgb.shape[0])
    assert db == psnr(rgb, decode_jpeg(data))


def test_proposed_pipeline_needs_keys(desk_images):
    with pytest.raises(ValueError):
        evaluate(desk_images[0], 80, "proposed")
    with pytest.raises(ValueError):
        evaluate(desk_images[0], 80, "nonsense")


def test_proposed_at_q100_is_close(desk_images, keys, gtable_420):
    bpp, db = evaluate(desk_images[0], 100, "proposed", "444", keys=keys, gtable=gtable_420)
    assert db > 40


def test_psnr_increases_with_quality(desk_images, keys, gtable_420):
    pts = rd_sweep(desk_images[:4], "proposed", [70, 80, 90, 100], keys=keys, gtable=gtable_420)
    for a, b in zip(pts, pts[1:]):
        assert b.mean_psnr_db >= a.mean_psnr_db - 0.1
        assert b.mean_bpp > a.mean_bpp
    assert pts[0].config == "proposed-420-B8-gtable"


def test_sweep_is_deterministic_and_jobs_independent(desk_images, keys):
    kw = dict(keys=keys, block=16)
    a = rd_csv(rd_sweep(desk_images[:3], "color_baseline", [75, 95], "444", **kw))
    b = rd_csv(rd_sweep(desk_images[:3], "color_baseline", [75, 95], "444", **kw))
    c = rd_csv(rd_sweep(desk_images[:3], "color_baseline", [75, 95], "444", jobs=2, **kw))
    assert a == b == c
    lines = a.splitlines()
    assert lines[0] == "config,Qf,mean_bpp,mean_psnr_db,n_images"
    assert lines[1].startswith("color_baseline-444-B16,75,") and lines[1].endswith(",3")


def test_sweep_names_failing_image(desk_images, keys):
    bad = desk_images[0][:20, :20]  # not a multiple of 16 for the baseline
    with pytest.raises(SweepError) as ei:
        rd_sweep([desk_images[1], bad], "color_baseline", [80], block=16, keys=keys, names=["ok", "odd"])
    assert ei.value.image == "odd" and isinstance(ei.value.__cause__, GeometryError)


def test_parse_quality_range():
    assert parse_quality_range("70:100:5") == [70, 75, 80, 85, 90, 95, 100]
    assert parse_quality_range("80,90") == [80, 90]
    assert parse_quality_range("85") == [85]
    for bad in ("100:70:5", "0:10:5", "a:b", "70:100:0"):
        with pytest.raises(ValueError):
            parse_quality_range(bad)


def test_interpolate_psnr():
    pts = [RdPoint("x", 70, 1.0, 30.0, 1), RdPoint("x", 90, 2.0, 36.0, 1)]
    assert interpolate_psnr(pts, 1.5) == pytest.approx(33.0)
    assert math.isnan(interpolate_psnr(pts, 2.5))
