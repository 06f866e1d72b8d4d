"""Cumulative feature-set assembly for multichannel trials.

Set1 holds per-band power and differential entropy per channel window;
Set2 appends per-window band statistics and their consecutive-window
differences; Set3 appends whole-channel statistics (repeated on every
row of the trial); Set4 appends pairwise phase locking per band and
lagged correlations.  Each level extends the previous one's columns, so
the sets are strictly nested.

On the standard 14-channel montage with four bands the realized widths
are 112 / 1008 / 1134 / 1680 columns; the manifest helper records the
per-block counts so downstream consumers never have to re-derive them.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.signal import hilbert

from .signals import (
    DEFAULT_BANDS,
    DEFAULT_FILTER_ORDER,
    TrialSignal,
    WindowSpec,
    band_power_psd,
    butterworth_bandpass,
    channel_stats,
    segment,
)

__all__ = [
    "DEFAULT_CHANNELS_1BASED",
    "SET_IDS",
    "STAT_FIELDS",
    "CHANNEL_STAT_FIELDS",
    "DIFF_FIELDS",
    "FeatureMatrix",
    "default_channel_indices",
    "set_level",
    "feature_layout",
    "layout_manifest",
    "build_feature_sets",
    "read_trial_labels",
]

# Standard montage, numbered as printed in hardware channel tables (1-based).
DEFAULT_CHANNELS_1BASED = (1, 2, 3, 4, 6, 11, 13, 17, 19, 20, 21, 25, 29, 31)

SET_IDS = ("Set1", "Set2", "Set3", "Set4")

STAT_FIELDS = ("min", "max", "range", "mean", "variance", "skewness", "kurtosis")
CHANNEL_STAT_FIELDS = STAT_FIELDS + ("argmin", "argmax")
DIFF_FIELDS = STAT_FIELDS + ("psd", "de")      # per-stream quantities differenced per window


def default_channel_indices() -> list[int]:
    """0-based rows of the standard montage (requires >= 32 channels)."""
    return [c - 1 for c in DEFAULT_CHANNELS_1BASED]


def set_level(set_id) -> int:
    if isinstance(set_id, str) and set_id in SET_IDS:
        return SET_IDS.index(set_id) + 1
    if set_id in (1, 2, 3, 4):
        return int(set_id)
    raise ValueError(f"unknown feature set {set_id!r}; expected one of {SET_IDS} or 1-4")


@dataclass
class FeatureMatrix:
    """Rows = windows, columns = named features of one cumulative set."""

    values: np.ndarray
    feature_names: list[str]
    set_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if self.values.shape[1] != len(self.feature_names):
            raise ValueError("feature_names length does not match the column count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("feature names must be unique")
        if np.isnan(self.values).any():
            raise ValueError("feature values contain NaN")
        set_level(self.set_id)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]


def feature_layout(channel_ids, bands=DEFAULT_BANDS, set_id="Set4",
                   corr_lags=(0, 32)) -> dict[str, list[str]]:
    """Ordered column names per block for the requested set level.

    ``channel_ids`` are the absolute trial rows used in the names, in
    extraction order.
    """
    level = set_level(set_id)
    chs = [int(c) for c in channel_ids]
    blocks: dict[str, list[str]] = {}
    blocks["psd"] = [f"psd_ch{c:02d}_{b.name}" for c in chs for b in bands]
    blocks["de"] = [f"de_ch{c:02d}_{b.name}" for c in chs for b in bands]
    if level >= 2:
        blocks["segment_stats"] = [
            f"seg_ch{c:02d}_{b.name}_{s}" for c in chs for b in bands for s in STAT_FIELDS
        ]
        blocks["segment_diff"] = [
            f"diff_ch{c:02d}_{b.name}_{s}" for c in chs for b in bands for s in DIFF_FIELDS
        ]
    if level >= 3:
        blocks["channel_stats"] = [
            f"chan_ch{c:02d}_{s}" for c in chs for s in CHANNEL_STAT_FIELDS
        ]
    if level >= 4:
        pairs = [(chs[i], chs[j]) for i in range(len(chs)) for j in range(i + 1, len(chs))]
        blocks["plv"] = [f"plv_ch{i:02d}_ch{j:02d}_{b.name}" for (i, j) in pairs for b in bands]
        blocks["corr"] = [
            f"corr_ch{i:02d}_ch{j:02d}_lag{tau}" for (i, j) in pairs for tau in corr_lags
        ]
    return blocks


def layout_manifest(channel_ids, spec: WindowSpec, bands, set_id, corr_lags,
                    filter_order=DEFAULT_FILTER_ORDER) -> dict:
    """Layout constants plus realized per-block column counts."""
    blocks = feature_layout(channel_ids, bands, set_id, corr_lags)
    return {
        "set_id": SET_IDS[set_level(set_id) - 1],
        "channels": [int(c) for c in channel_ids],
        "window_seconds": spec.window_seconds,
        "stride_seconds": spec.stride_seconds,
        "bands": [
            {"name": b.name, "low_hz": b.low_hz, "high_hz": b.high_hz} for b in bands
        ],
        "filter_order": filter_order,
        "corr_lags": [int(t) for t in corr_lags],
        "block_columns": {name: len(cols) for name, cols in blocks.items()},
        "n_features": sum(len(cols) for cols in blocks.values()),
    }


def _vector_stats(windows: np.ndarray) -> np.ndarray:
    """segment_stats over the last axis, stacked in STAT_FIELDS order."""
    lo = windows.min(axis=-1)
    hi = windows.max(axis=-1)
    mean = windows.mean(axis=-1)
    variance = windows.var(axis=-1, ddof=1)
    m2 = windows.var(axis=-1)
    centered = windows - mean[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        skewness = np.where(m2 > 0, np.mean(centered**3, axis=-1) / m2**1.5, 0.0)
        kurtosis = np.where(m2 > 0, np.mean(centered**4, axis=-1) / m2**2, 0.0)
    return np.stack([lo, hi, hi - lo, mean, variance, skewness, kurtosis], axis=-1)


def _pairwise_plv(band_windows: np.ndarray) -> np.ndarray:
    """|mean unit phasor of the phase difference| for every channel pair.

    Input (windows, channels, bands, w); output (windows, pairs, bands)
    with pairs in row-major upper-triangular order.
    """
    phases = np.angle(hilbert(band_windows, axis=-1))
    phasors = np.exp(1j * phases)
    m, c, nbands, w = phasors.shape
    flat = np.ascontiguousarray(phasors.transpose(0, 2, 1, 3)).reshape(m * nbands, c, w)
    gram = flat @ flat.conj().transpose(0, 2, 1) / w
    plv_all = np.abs(gram).reshape(m, nbands, c, c)
    iu, ju = np.triu_indices(c, k=1)
    return plv_all[:, :, iu, ju].transpose(0, 2, 1)     # (m, pairs, bands)


def _pairwise_lagged_corr(windows: np.ndarray, lags) -> np.ndarray:
    """lagged_correlation for every ordered pair (i < j) and lag.

    Matches the scalar op: deviations from each window's full mean,
    correlating channel i's leading stretch with channel j shifted by tau.
    Output (windows, pairs, lags).
    """
    m, c, w = windows.shape
    means = windows.mean(axis=-1)
    iu, ju = np.triu_indices(c, k=1)
    out = np.empty((m, iu.size, len(lags)))
    for k, tau in enumerate(lags):
        if not 0 <= tau < w - 1:
            raise ValueError(f"correlation lag {tau} incompatible with {w}-sample windows")
        da = windows[:, :, : w - tau] - means[..., None]
        db = windows[:, :, tau:] - means[..., None]
        ssa = np.sum(da * da, axis=-1)
        ssb = np.sum(db * db, axis=-1)
        numer = np.einsum("mcw,mdw->mcd", da, db)
        denom = np.sqrt(ssa[:, :, None] * ssb[:, None, :])
        if np.any(denom[:, iu, ju] == 0.0):
            raise ValueError("zero variance segment in correlation block")
        out[:, :, k] = (numer / denom)[:, iu, ju]
    return out


def build_feature_sets(trial: TrialSignal, channels=None, spec: WindowSpec | None = None,
                       set_id="Set1", bands=DEFAULT_BANDS,
                       filter_order: int = DEFAULT_FILTER_ORDER,
                       corr_lags=None) -> FeatureMatrix:
    """Extract one cumulative feature set, one row per sliding window.

    Windowed features vary per row; whole-channel statistics repeat across
    all rows of the trial.  ``channels`` indexes rows of ``trial.samples``
    and defaults to the standard montage (which needs >= 32 channels).
    Band-domain features are computed on the zero-phase band-filtered
    channels; PSD is taken from the raw window's spectrum.  The diff block
    holds per-stream changes versus the previous window (zeros on the
    first window).
    """
    level = set_level(set_id)
    fs = trial.sampling_rate
    spec = spec if spec is not None else WindowSpec()
    if channels is None:
        channels = default_channel_indices()
    channels = [int(c) for c in channels]
    if len(set(channels)) != len(channels):
        raise ValueError("duplicate channel indices")
    for c in channels:
        if not 0 <= c < trial.n_channels:
            raise ValueError(f"channel index {c} out of range for {trial.n_channels}-channel trial")
    if corr_lags is None:
        corr_lags = (0, int(round(fs / 4.0)))
    corr_lags = [int(t) for t in corr_lags]

    sub = TrialSignal(trial.samples[channels], fs, trial.pretrial_seconds)
    windows, _ = segment(sub, spec)             # (m, c, w)
    m = windows.shape[0]
    data = sub.post_pretrial()                  # (c, t')

    psd = band_power_psd(windows, fs, bands)    # (m, c, nbands)

    # Band decomposition once per full channel, then windowed with the same grid.
    filtered = np.stack(
        [butterworth_bandpass(data, fs, band, filter_order) for band in bands], axis=1
    )                                           # (c, nbands, t')
    w = spec.window_samples(fs)
    s = spec.stride_samples(fs)
    window_idx = s * np.arange(m)[:, None] + np.arange(w)[None, :]
    band_windows = filtered[:, :, window_idx].transpose(2, 0, 1, 3)  # (m, c, nbands, w)

    band_var = band_windows.var(axis=-1, ddof=1)
    if np.any(band_var <= 0.0):
        raise ValueError("degenerate segment (zero variance) in a band-filtered window")
    de = 0.5 * np.log(2.0 * np.pi * np.e * band_var)                 # (m, c, nbands)

    columns = [psd.reshape(m, -1), de.reshape(m, -1)]

    if level >= 2:
        stats = _vector_stats(band_windows)                          # (m, c, b, 7)
        stream = np.concatenate([stats, psd[..., None], de[..., None]], axis=-1)
        diffs = np.zeros_like(stream)
        diffs[1:] = stream[1:] - stream[:-1]
        columns += [stats.reshape(m, -1), diffs.reshape(m, -1)]

    if level >= 3:
        chan = np.array([channel_stats(row) for row in data])        # (c, 9)
        columns.append(np.broadcast_to(chan.reshape(1, -1), (m, chan.size)).copy())

    if level >= 4:
        columns.append(_pairwise_plv(band_windows).reshape(m, -1))
        columns.append(_pairwise_lagged_corr(windows, corr_lags).reshape(m, -1))

    layout = feature_layout(channels, bands, level, corr_lags)
    names = [name for cols in layout.values() for name in cols]
    return FeatureMatrix(np.hstack(columns), names, SET_IDS[level - 1])


def read_trial_labels(path) -> dict[str, int]:
    """Sidecar label CSV: header ``trial,label``, rows ``<id>,<+1|-1>``."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != "trial,label":
        raise ValueError(f"{path}: line 1: expected header 'trial,label'")
    labels: dict[str, int] = {}
    for i, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise ValueError(f"{path}: line {i}: expected 'trial,label', found {line!r}")
        trial_id, tag = fields
        if tag not in ("+1", "-1", "1"):
            raise ValueError(f"{path}: line {i}: label must be +1 or -1, found {tag!r}")
        if trial_id in labels:
            raise ValueError(f"{path}: line {i}: duplicate trial id {trial_id!r}")
        labels[trial_id] = 1 if tag in ("+1", "1") else -1
    return labels
