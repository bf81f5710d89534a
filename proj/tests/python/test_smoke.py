import math
import os

import pytest

import ecgforge


def test_metrics_identity():
    m = ecgforge.compute_metrics(tp=90, fn=10, tn=80, fp=20)
    assert m["sensitivity"] == pytest.approx(0.9)
    assert m["specificity"] == pytest.approx(0.8)
    assert m["youden_j"] == pytest.approx(m["sensitivity"] + m["specificity"] - 1.0)


def test_preset_names():
    names = ecgforge.preset_names()
    assert "table3_default" in names
    assert len(names) == 17


def test_downsample_linear_ramp():
    ramp = [0.5 * i for i in range(1000)]
    out = ecgforge.downsample(ramp, channels=1, target_length=192)
    assert len(out) == 192
    assert out[0] == pytest.approx(0.0)
    assert out[-1] == pytest.approx(0.5 * 999)


def test_fft_magnitudes_shape_and_dc():
    values = [1.0] * 192
    mags = ecgforge.fft_magnitudes(values)
    assert len(mags) == 129  # 256-point transform, non-redundant bins
    assert mags[0] == pytest.approx(192.0)


def test_synthetic_corpus_and_record_io(tmp_path):
    root = tmp_path / "data"
    ecgforge.generate_synthetic(str(root), mi=2, hc=2, duration_s=5.0, seed=1)
    heas = sorted(root.rglob("*.hea"))
    assert len(heas) == 4
    rec = ecgforge.load_record(str(heas[0]))
    assert rec["sampling_rate"] == 1000.0
    assert len(rec["leads"]) == 15
    assert len(rec["samples"]) == rec["num_samples"] * 15
    assert all(math.isfinite(v) for v in rec["samples"][:100])


def test_crossval_end_to_end(tmp_path):
    root = tmp_path / "data"
    ecgforge.generate_synthetic(str(root), mi=4, hc=4, duration_s=5.0, seed=2)
    result = ecgforge.crossval(
        str(root), channels="eight", model="fcn", filters=4, epochs=2,
        members=1, folds=2, seed=3,
    )
    assert result["folds"] == 2
    assert result["tp"] + result["fn"] == 4
    assert result["tn"] + result["fp"] == 4
    assert -1.0 <= result["youden_j"] <= 1.0
    assert result["report_csv"].startswith("fold,TP,FN,TN,FP")
