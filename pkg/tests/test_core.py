import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from armmorse.core import (
    CHANNELS,
    Dataset,
    GestureLabel,
    ImuSample,
    LabeledWindow,
    NormStats,
    compute_norm_stats,
    csv_header,
    load_dataset,
    normalize,
    normalize_batch,
    resample_to_window,
    save_dataset,
    sliding_windows,
)
from armmorse.errors import (
    DegenerateChannelError,
    NonMonotonicError,
    ParseError,
    SchemaMismatchError,
    TooShortError,
)

from oracles import lerp_stream


def make_stream(times, value_fn):
    """Build a stream where every channel c at time t equals value_fn(c, t)."""
    return [
        ImuSample(t, *[value_fn(c, t) for c in range(6)]) for t in times
    ]


class TestGestureLabel:
    def test_exactly_six_stable_codes(self):
        assert [int(l) for l in GestureLabel] == [0, 1, 2, 3, 4, 5]
        assert [l.code for l in GestureLabel] == ["Rnd", "RS", "RE", "EC", "F", "DS"]

    def test_round_trip(self):
        for label in GestureLabel:
            assert GestureLabel.parse(label.code) is label

    def test_unknown_code_rejected(self):
        with pytest.raises(ParseError):
            GestureLabel.parse("XX")


class TestResample:
    def test_constant_stream_passes_through(self):
        stream = make_stream(np.arange(0, 5001, 20), lambda c, t: 3.0)
        window = resample_to_window(stream)
        assert window.shape == (6, 250)
        assert np.all(window == 3.0)

    def test_exact_grid_is_identity(self):
        # 250 samples at exact 20 ms spacing map onto the grid unchanged
        times = np.arange(250) * 20.0
        stream = make_stream(times, lambda c, t: c * 1000.0 + t)
        window = resample_to_window(stream)
        expected = np.array([[c * 1000.0 + t for t in times] for c in range(6)])
        assert np.array_equal(window, expected)

    def test_ramp_matches_brute_force_oracle(self):
        # 100 Hz ramp from 0 to 1 across the stream
        times = np.arange(0, 5001, 10, dtype=np.float64)
        stream = make_stream(times, lambda c, t: t / 5000.0)
        window = resample_to_window(stream)
        values = [t / 5000.0 for t in times]
        grid = [5000.0 - 20.0 * (249 - k) for k in range(250)]
        oracle = [lerp_stream(list(times), values, g) for g in grid]
        for c in range(6):
            assert np.max(np.abs(window[c] - np.array(oracle))) < 1e-12

    def test_random_stream_matches_oracle(self):
        rng = np.random.default_rng(7)
        times = np.sort(rng.uniform(0, 6000, size=400))
        times[0], times[-1] = 0.0, 6000.0
        values = rng.standard_normal((6, 400))
        stream = [ImuSample(times[i], *values[:, i]) for i in range(400)]
        window = resample_to_window(stream)
        grid = [6000.0 - 20.0 * (249 - k) for k in range(250)]
        for c in range(6):
            oracle = [lerp_stream(list(times), list(values[c]), g) for g in grid]
            assert np.max(np.abs(window[c] - np.array(oracle))) < 1e-12

    def test_too_short_raises(self):
        stream = make_stream(np.arange(0, 4000, 20), lambda c, t: 0.0)
        with pytest.raises(TooShortError):
            resample_to_window(stream)

    def test_non_monotonic_raises(self):
        stream = make_stream([0, 100, 50, 5200], lambda c, t: 0.0)
        with pytest.raises(NonMonotonicError):
            resample_to_window(stream)


class TestSlidingWindows:
    def _stream_seconds(self, seconds):
        times = np.arange(0, seconds * 1000 + 1, 20)
        return make_stream(times, lambda c, t: t)

    def test_five_second_stream_one_window(self):
        assert len(sliding_windows(self._stream_seconds(5))) == 1

    def test_nine_second_stream_five_windows(self):
        windows = sliding_windows(self._stream_seconds(9))
        assert len(windows) == 5
        assert [t for t, _ in windows] == [5000.0, 6000.0, 7000.0, 8000.0, 9000.0]

    def test_below_five_seconds_no_windows(self):
        times = np.arange(0, 4901, 20)
        assert sliding_windows(make_stream(times, lambda c, t: t)) == []

    def test_empty_stream(self):
        assert sliding_windows([]) == []

    @pytest.mark.parametrize("seconds", [5, 6, 7, 11, 20])
    def test_count_formula(self, seconds):
        # floor(T - 5) + 1 windows for an integer T-second stream
        windows = sliding_windows(self._stream_seconds(seconds))
        assert len(windows) == (seconds - 5) + 1

    def test_windows_cover_trailing_five_seconds(self):
        windows = sliding_windows(self._stream_seconds(7))
        for emit, window in windows:
            # channel values equal the timestamp, so the window is the grid
            assert window[0, -1] == emit
            assert window[0, 0] == emit - 4980.0


def _dataset_from_values(values_list):
    samples = [
        LabeledWindow(
            window=np.asarray(v, dtype=np.float64),
            label=GestureLabel.FIRE,
            subject_id=1,
            hand="R",
        )
        for v in values_list
    ]
    return Dataset(samples=samples)


class TestNormStats:
    def test_alternating_values_hand_computed(self):
        # channel values {1,3} repeated: mean 2, population std 1
        window = np.tile(np.array([[1.0, 3.0]]), (6, 125))
        stats = compute_norm_stats(_dataset_from_values([window]))
        assert np.allclose(stats.mean, 2.0)
        assert np.allclose(stats.std, 1.0)

    def test_all_zero_channel_degenerate(self):
        window = np.ones((6, 250))
        window[0] = 0.0  # constant channel -> zero std
        with pytest.raises(DegenerateChannelError):
            compute_norm_stats(_dataset_from_values([window]))

    def test_stats_of_normalized_data(self):
        rng = np.random.default_rng(3)
        ds = _dataset_from_values(rng.standard_normal((4, 6, 250)) * 5 + 2)
        stats = compute_norm_stats(ds)
        normed = _dataset_from_values(
            [normalize(s.window, stats) for s in ds.samples]
        )
        stats2 = compute_norm_stats(normed)
        assert np.max(np.abs(stats2.mean)) < 1e-9
        assert np.max(np.abs(stats2.std - 1.0)) < 1e-9


class TestNormalize:
    def test_window_equal_to_mean_gives_zeros(self):
        stats = NormStats(mean=np.arange(1.0, 7.0), std=np.ones(6))
        window = np.tile(np.arange(1.0, 7.0)[:, None], (1, 250))
        assert np.all(normalize(window, stats) == 0.0)

    def test_identity_stats(self):
        rng = np.random.default_rng(0)
        window = rng.standard_normal((6, 250))
        stats = NormStats(mean=np.zeros(6), std=np.ones(6))
        assert np.array_equal(normalize(window, stats), window)

    def test_hand_computed_value(self):
        stats = NormStats(mean=np.full(6, 2.0), std=np.full(6, 1.5))
        window = np.full((6, 250), 5.0)
        assert np.allclose(normalize(window, stats), 2.0)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(1)
        windows = rng.standard_normal((3, 6, 250))
        stats = NormStats(mean=rng.standard_normal(6), std=rng.uniform(0.5, 2, 6))
        batch = normalize_batch(windows, stats)
        for i in range(3):
            assert np.array_equal(batch[i], normalize(windows[i], stats))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_zscore_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        ds = _dataset_from_values(rng.standard_normal((3, 6, 250)) * 3 + 1)
        stats = compute_norm_stats(ds)
        normed = [normalize(s.window, stats) for s in ds.samples]
        stats2 = compute_norm_stats(_dataset_from_values(normed))
        renormed = [normalize(w, stats2) for w in normed]
        for w, r in zip(normed, renormed):
            assert np.max(np.abs(w - r)) < 1e-9


class TestDatasetCsv:
    def _small_dataset(self, rng):
        samples = []
        for subject in (1, 2):
            for hand, label in (("L", GestureLabel.RANDOM), ("R", GestureLabel.DISTRESS)):
                samples.append(
                    LabeledWindow(
                        window=rng.standard_normal((6, 250)),
                        label=label,
                        subject_id=subject,
                        hand=hand,
                    )
                )
        return Dataset(samples=samples)

    def test_round_trip_exact(self, tmp_path):
        ds = self._small_dataset(np.random.default_rng(11))
        path = tmp_path / "d.csv"
        save_dataset(ds, path)
        back = load_dataset(path)
        assert len(back) == len(ds)
        for a, b in zip(ds.samples, back.samples):
            assert a.label is b.label
            assert a.subject_id == b.subject_id
            assert a.hand == b.hand
            assert np.array_equal(a.window, b.window)  # repr round-trip is exact

    def test_header_has_1503_columns(self):
        header = csv_header()
        assert len(header) == 1503
        assert header[:3] == ["subject", "hand", "label"]
        assert header[3] == "ax000"
        assert header[-1] == "gz249"
        assert header[3 + 250] == "ay000"

    def test_wrong_column_count_schema_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("subject,hand,label,ax000\n1,L,Rnd,0.0\n")
        with pytest.raises(SchemaMismatchError):
            load_dataset(path)

    def test_empty_file_parse_error(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_header_only_parse_error(self, tmp_path):
        path = tmp_path / "hdr.csv"
        path.write_text(",".join(csv_header()) + "\n")
        with pytest.raises(ParseError):
            load_dataset(path)

    def test_bad_label_reports_line(self, tmp_path):
        ds = self._small_dataset(np.random.default_rng(5))
        path = tmp_path / "d.csv"
        save_dataset(ds, path)
        text = path.read_text().splitlines()
        text[2] = text[2].replace(",DS,", ",??,", 1)
        path.write_text("\n".join(text) + "\n")
        with pytest.raises(ParseError) as err:
            load_dataset(path)
        assert err.value.line == 3
