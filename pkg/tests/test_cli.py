import numpy as np
import pytest
from PIL import Image

from mosaicforge import engine
from mosaicforge.annotations import LabeledImage, parse_label_text
from mosaicforge.cli import main
from mosaicforge.config import PipelineConfig
from mosaicforge.geometry import BBox
from mosaicforge.pipeline import BOX_COLORS, CENTER_COLOR, output_digest
from mosaicforge.synthetic import mixed_density_dataset, write_dataset
from mosaicforge.verify import check_select_rule


@pytest.fixture(scope="module")
def synth_root(tmp_path_factory):
    return write_dataset(mixed_density_dataset(), tmp_path_factory.mktemp("synth"))


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def kv_block(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


def test_generate_s0(synth_root, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["generate", "--input", str(synth_root), "--output", str(out), "--count", "10",
                 "--select-prob", "0", "--size", "160", "--seed", "1"]) == 0
    assert len(list((out / "images").glob("mosaic_*.png"))) == 10
    assert len(list((out / "labels").glob("mosaic_*.txt"))) == 10
    report = capsys.readouterr().out
    assert "mosaics written: 10" in report
    assert "select-mode fraction: 0.0000" in report
    with Image.open(out / "images" / "mosaic_0.png") as im:
        assert im.size == (320, 320)


def test_generate_byte_identical(synth_root, tmp_path):
    args = ["--input", str(synth_root), "--count", "6", "--size", "160", "--seed", "77", "--select-prob", "0.5"]
    assert main(["generate", *args, "--output", str(tmp_path / "a")]) == 0
    assert main(["generate", *args, "--output", str(tmp_path / "b")]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")


def test_generate_workers_deterministic(synth_root, tmp_path):
    args = ["--input", str(synth_root), "--count", "7", "--size", "64", "--seed", "3", "--workers", "3"]
    assert main(["generate", *args, "--output", str(tmp_path / "a")]) == 0
    assert main(["generate", *args, "--output", str(tmp_path / "b")]) == 0
    assert tree_bytes(tmp_path / "a") == tree_bytes(tmp_path / "b")
    assert len(list((tmp_path / "a" / "images").iterdir())) == 7


def test_generate_select_fraction(synth_root, tmp_path, capsys):
    assert main(["generate", "--input", str(synth_root), "--output", str(tmp_path / "o"), "--count", "1000",
                 "--select-prob", "0.4", "--size", "24", "--seed", "5"]) == 0
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("select-mode fraction"))
    assert 0.36 <= float(line.split(":")[1]) <= 0.44


def test_generate_jpeg(synth_root, tmp_path):
    assert main(["generate", "--input", str(synth_root), "--output", str(tmp_path / "j"), "--count", "2",
                 "--size", "64", "--image-format", "jpeg"]) == 0
    assert len(list((tmp_path / "j" / "images").glob("*.jpg"))) == 2


def test_env_seed(synth_root, tmp_path, monkeypatch):
    base = ["generate", "--input", str(synth_root), "--count", "3", "--size", "64"]
    monkeypatch.setenv("MOSAICFORGE_SEED", "4242")
    assert main([*base, "--output", str(tmp_path / "env")]) == 0
    monkeypatch.delenv("MOSAICFORGE_SEED")
    assert main([*base, "--seed", "4242", "--output", str(tmp_path / "flag")]) == 0
    assert output_digest(tmp_path / "env") == output_digest(tmp_path / "flag")


def test_config_file_flag(synth_root, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("select_prob = 1.0\ncount = 4\noutput_size = 64\n")
    assert main(["generate", "--input", str(synth_root), "--output", str(tmp_path / "o"), "--config", str(cfg)]) == 0
    assert "select-mode fraction: 1.0000" in capsys.readouterr().out


def test_invalid_config_exit_status(synth_root, tmp_path, capsys):
    assert main(["generate", "--input", str(synth_root), "--output", str(tmp_path / "o"), "--select-prob", "2"]) == 2
    assert "select_prob" in capsys.readouterr().err


def test_missing_dataset_exit_status(tmp_path, capsys):
    assert main(["stats", "--input", str(tmp_path / "nope")]) == 2


def test_preview_dimensions(synth_root, tmp_path, capsys):
    assert main(["preview", "--input", str(synth_root), "--output", str(tmp_path / "p"), "-n", "1", "--size", "160"]) == 0
    with Image.open(tmp_path / "p" / "preview_0.png") as im:
        assert im.size == (320, 320)


def write_plain_dataset(root, n=4):
    (root / "images").mkdir(parents=True)
    (root / "labels").mkdir()
    for i in range(n):
        Image.fromarray(np.full((90, 120, 3), (20 * i, 60, 90), dtype=np.uint8)).save(root / "images" / f"{i}.png")
    return root


def test_preview_zero_annotations(tmp_path):
    root = write_plain_dataset(tmp_path / "data")
    assert main(["preview", "--input", str(root), "--output", str(tmp_path / "p"), "-n", "1", "--size", "80",
                 "--seed", "2"]) == 0
    px = np.asarray(Image.open(tmp_path / "p" / "preview_0.png").convert("RGB"))
    white = (px == CENTER_COLOR).all(axis=2)
    assert white.sum() > 0
    ys, xs = np.nonzero(white)
    # the only white pixels are the center cross
    assert xs.max() - xs.min() <= 18 and ys.max() - ys.min() <= 18
    for color in BOX_COLORS[1:]:
        assert not (px == color).all(axis=2).any()


def test_preview_outlines_match_labels(tmp_path):
    # few boxes per image so outlines rarely overlap
    ds = []
    for i in range(4):
        pixels = np.full((120, 160, 3), (30, 30 + 40 * i, 60), dtype=np.uint8)
        boxes = [BBox(0, 20, 20, 60, 50), BBox(1, 100, 60, 150, 110)]
        ds.append(LabeledImage(None, 160, 120, boxes, pixels))
    root = write_dataset(ds, tmp_path / "d")
    common = ["--input", str(root), "--size", "160", "--seed", "6", "--select-prob", "0.5"]
    assert main(["generate", *common, "--output", str(tmp_path / "g"), "--count", "3"]) == 0
    assert main(["preview", *common, "--output", str(tmp_path / "p"), "-n", "3"]) == 0
    outline_colors = np.asarray(BOX_COLORS)
    checked = 0
    for i in range(3):
        px = np.asarray(Image.open(tmp_path / "p" / f"preview_{i}.png").convert("RGB")).astype(int)
        text = (tmp_path / "g" / "labels" / f"mosaic_{i}.txt").read_text()
        for box in parse_label_text(text, 320, 320):
            for x, y in ((box.x1, box.y1), (box.x2 - 1, box.y1), (box.x1, box.y2 - 1), (box.x2 - 1, box.y2 - 1)):
                patch = px[max(y - 1, 0): y + 2, max(x - 1, 0): x + 2].reshape(-1, 1, 3)
                assert ((patch == outline_colors[None]).all(axis=2)).any()
                checked += 1
    assert checked > 0


def write_count_dataset(root, counts):
    (root / "images").mkdir(parents=True)
    (root / "labels").mkdir()
    for i, n in enumerate(counts):
        Image.fromarray(np.zeros((100, 100, 3), dtype=np.uint8)).save(root / "images" / f"{i}.png")
        (root / "labels" / f"{i}.txt").write_text("0 0.5 0.5 0.1 0.1\n" * n)
    return root


def test_stats_counts(tmp_path, capsys):
    root = write_count_dataset(tmp_path / "d", [0, 5, 10, 20])
    assert main(["stats", "--input", str(root), "--kv"]) == 0
    kv = kv_block(capsys.readouterr().out)
    assert float(kv["boxes_mean"]) == 8.75
    assert int(kv["boxes_max"]) == 20
    assert float(kv["density_max"]) == pytest.approx(20 / 10_000)
    assert (kv["hist_0"], kv["hist_5_9"], kv["hist_10_19"], kv["hist_20_49"]) == ("1", "1", "1", "1")


def test_stats_kv_format(tmp_path, capsys):
    root = write_count_dataset(tmp_path / "d", [1, 2, 3, 4])
    main(["stats", "--input", str(root), "--kv"])
    out = capsys.readouterr().out
    assert out.endswith("\n") and "\r" not in out
    assert all(line.count("=") == 1 for line in out.splitlines())


def test_stats_empty_labels(tmp_path, capsys):
    root = write_plain_dataset(tmp_path / "d")
    assert main(["stats", "--input", str(root)]) == 0
    kv = kv_block(capsys.readouterr().out.split("---")[1])
    assert float(kv["density_min"]) == float(kv["density_mean"]) == float(kv["density_max"]) == 0


def test_stats_on_output_s1_vs_s0(synth_root, tmp_path, capsys):
    means = {}
    for S in ("0", "1"):
        out = tmp_path / f"s{S}"
        main(["generate", "--input", str(synth_root), "--output", str(out), "--count", "300", "--size", "48",
              "--seed", "8", "--select-prob", S])
        capsys.readouterr()
        main(["stats", "--input", str(out), "--kv"])
        means[S] = float(kv_block(capsys.readouterr().out)["boxes_mean"])
    assert means["1"] > means["0"]


def test_verify_quick(capsys):
    assert main(["verify", "--mosaics", "20", "--plans", "300"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4


def test_verify_detects_perturbed_tie_break(monkeypatch):
    def last_on_ties(images, metric="count_per_area"):
        densities = [len(im.boxes) / (im.width * im.height) for im in images]
        top = max(densities)
        return max(i for i, d in enumerate(densities) if d == top)

    monkeypatch.setattr(engine, "densest_image", last_on_ties)
    result = check_select_rule(mixed_density_dataset(), PipelineConfig(output_size=160), n=500)
    assert not result.passed


def test_verify_exit_status_on_failure(monkeypatch, capsys):
    monkeypatch.setattr(engine, "densest_image", lambda images, metric="count_per_area": 3)
    assert main(["verify", "--mosaics", "5", "--plans", "200"]) == 1
    assert "[FAIL] select-rule" in capsys.readouterr().out
