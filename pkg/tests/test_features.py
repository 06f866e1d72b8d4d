import numpy as np
import pytest

from aucmax.features import (
    DEFAULT_CHANNELS_1BASED,
    FeatureMatrix,
    build_feature_sets,
    default_channel_indices,
    feature_layout,
    layout_manifest,
    read_trial_labels,
    set_level,
)
from aucmax.signals import (
    DEFAULT_BANDS,
    TrialSignal,
    WindowSpec,
    band_power_psd,
    butterworth_bandpass,
    differential_entropy,
    lagged_correlation,
    plv,
    segment,
)

FS = 128.0


def make_trial(n_channels=14, seconds=63.0, seed=0, pretrial=3.0):
    rng = np.random.default_rng(seed)
    t = np.arange(int(seconds * FS)) / FS
    data = rng.standard_normal((n_channels, t.size))
    for c in range(n_channels):                  # add band-limited structure per channel
        data[c] += 0.5 * np.sin(2 * np.pi * (6 + c % 8) * t + 0.3 * c)
    return TrialSignal(data, FS, pretrial_seconds=pretrial)


def test_set_level_parsing():
    assert set_level("Set1") == 1 and set_level(4) == 4
    with pytest.raises(ValueError):
        set_level("Set5")


def test_default_channels():
    assert default_channel_indices() == [c - 1 for c in DEFAULT_CHANNELS_1BASED]
    assert len(default_channel_indices()) == 14


def test_set1_has_112_columns():
    trial = make_trial()
    fm = build_feature_sets(trial, channels=range(14), set_id="Set1")
    assert fm.n_features == 14 * 4 * 2 == 112
    assert fm.n_rows == 117
    assert fm.set_id == "Set1"


def test_sets_strictly_nested():
    trial = make_trial(seed=1)
    matrices = {
        level: build_feature_sets(trial, channels=range(14), set_id=level)
        for level in (1, 2, 3, 4)
    }
    widths = [matrices[level].n_features for level in (1, 2, 3, 4)]
    assert widths == [112, 1008, 1134, 1680]
    for level in (2, 3, 4):
        prev = matrices[level - 1]
        cur = matrices[level]
        assert cur.feature_names[: prev.n_features] == prev.feature_names
        assert np.array_equal(cur.values[:, : prev.n_features], prev.values)


def test_manifest_counts_match_matrix():
    trial = make_trial(seed=2)
    spec = WindowSpec()
    channels = list(range(14))
    corr_lags = (0, 32)
    fm = build_feature_sets(trial, channels=channels, spec=spec, set_id="Set4",
                            corr_lags=corr_lags)
    manifest = layout_manifest(channels, spec, DEFAULT_BANDS, "Set4", corr_lags)
    assert manifest["n_features"] == fm.n_features
    blocks = manifest["block_columns"]
    assert blocks["psd"] == blocks["de"] == 56
    assert blocks["segment_stats"] == 392 and blocks["segment_diff"] == 504
    assert blocks["channel_stats"] == 126
    assert blocks["plv"] == 91 * 4 and blocks["corr"] == 91 * 2
    layout = feature_layout(channels, DEFAULT_BANDS, "Set4", corr_lags)
    assert [n for cols in layout.values() for n in cols] == fm.feature_names


def test_feature_determinism():
    trial = make_trial(seed=3)
    a = build_feature_sets(trial, channels=range(14), set_id="Set2")
    b = build_feature_sets(trial, channels=range(14), set_id="Set2")
    assert np.array_equal(a.values, b.values)


def test_channel_index_out_of_range():
    trial = make_trial(n_channels=4, seconds=10.0, pretrial=0.0)
    with pytest.raises(ValueError, match="out of range"):
        build_feature_sets(trial, channels=[0, 7], set_id="Set1")
    with pytest.raises(ValueError, match="out of range"):
        build_feature_sets(trial, set_id="Set1")     # default montage needs 32 channels


def test_trial_too_short_for_one_window():
    trial = TrialSignal(np.random.default_rng(0).standard_normal((2, 200)), FS)
    with pytest.raises(ValueError, match="exceeds"):
        build_feature_sets(trial, channels=[0, 1], set_id="Set1")


def test_values_match_scalar_ops_spot_check():
    # the vectorized builder must agree with the per-segment operations
    trial = make_trial(n_channels=3, seconds=12.0, seed=4)
    channels = [0, 1, 2]
    spec = WindowSpec()
    fm = build_feature_sets(trial, channels=channels, spec=spec, set_id="Set4",
                            corr_lags=(0, 32))
    segments, _ = segment(trial, spec)
    names = fm.feature_names
    m = 5                                        # arbitrary interior window
    raw = segments[m]

    psd = band_power_psd(raw[1], FS, DEFAULT_BANDS)
    col = names.index("psd_ch01_beta")
    assert fm.values[m, col] == pytest.approx(psd[2], rel=1e-12)

    alpha = DEFAULT_BANDS[1]
    filtered = butterworth_bandpass(trial.post_pretrial()[2], FS, alpha, 4)
    window = filtered[m * 64 : m * 64 + 256]
    col = names.index("de_ch02_alpha")
    assert fm.values[m, col] == pytest.approx(differential_entropy(window), rel=1e-12)

    theta = DEFAULT_BANDS[0]
    f0 = butterworth_bandpass(trial.post_pretrial()[0], FS, theta, 4)[m * 64 : m * 64 + 256]
    f1 = butterworth_bandpass(trial.post_pretrial()[1], FS, theta, 4)[m * 64 : m * 64 + 256]
    col = names.index("plv_ch00_ch01_theta")
    assert fm.values[m, col] == pytest.approx(plv(f0, f1), abs=1e-9)

    col = names.index("corr_ch00_ch02_lag32")
    assert fm.values[m, col] == pytest.approx(lagged_correlation(raw[0], raw[2], 32), rel=1e-9)


def test_diff_block_first_window_zero_then_differences():
    trial = make_trial(n_channels=2, seconds=10.0, seed=5)
    fm = build_feature_sets(trial, channels=[0, 1], set_id="Set2")
    names = fm.feature_names
    col = names.index("diff_ch00_theta_mean")
    assert fm.values[0, col] == 0.0
    mean_col = names.index("seg_ch00_theta_mean")
    expected = fm.values[3, mean_col] - fm.values[2, mean_col]
    assert fm.values[3, col] == pytest.approx(expected, rel=1e-12)
    psd_diff = names.index("diff_ch00_theta_psd")
    psd_col = names.index("psd_ch00_theta")
    expected = fm.values[3, psd_col] - fm.values[2, psd_col]
    assert fm.values[3, psd_diff] == pytest.approx(expected, rel=1e-12)


def test_channel_block_repeats_per_row():
    trial = make_trial(n_channels=2, seconds=10.0, seed=6)
    fm = build_feature_sets(trial, channels=[0, 1], set_id="Set3")
    col = fm.feature_names.index("chan_ch00_mean")
    assert np.all(fm.values[:, col] == fm.values[0, col])


def test_feature_matrix_validation():
    with pytest.raises(ValueError, match="unique"):
        FeatureMatrix(np.zeros((2, 2)), ["a", "a"], "Set1")
    with pytest.raises(ValueError, match="NaN"):
        FeatureMatrix(np.array([[np.nan]]), ["a"], "Set1")


def test_read_trial_labels(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("trial,label\nt01,+1\nt02,-1\n")
    assert read_trial_labels(path) == {"t01": 1, "t02": -1}
    path.write_text("trial,label\nt01,0\n")
    with pytest.raises(ValueError, match="line 2"):
        read_trial_labels(path)
    path.write_text("id,label\n")
    with pytest.raises(ValueError, match="header"):
        read_trial_labels(path)
