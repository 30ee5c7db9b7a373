"""Tests for CSV ingestion, scaling, window construction and splitting."""

import numpy as np
import pytest

from windcast.data import (
    CsvSchema,
    Scaler,
    apply_column,
    apply_scaler,
    chronological_split,
    fit_scaler,
    invert_column,
    load_csv,
    make_lag_windows,
    make_nwp_set,
)
from windcast.errors import (
    DataError,
    EmptyDataError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
    SchemaError,
    ShapeError,
)
from windcast.data import SupervisedSet


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


SCHEMA = CsvSchema(timestamp_col="timestamp", target_col="power", feature_cols=("ws",))


class TestLoadCsv:
    def test_basic_load(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            [
                "timestamp,power,ws",
                "2021-01-01T00:00:00,1.5,3.0",
                "2021-01-01T00:15:00,2.5,4.0",
            ],
        )
        frame = load_csv(path, SCHEMA)
        assert len(frame) == 2
        assert frame.target_name == "power"
        np.testing.assert_allclose(frame.target, [1.5, 2.5])
        np.testing.assert_allclose(frame.features["ws"], [3.0, 4.0])
        assert frame.timestamps[0].isoformat() == "2021-01-01T00:00:00"

    def test_rows_sorted_by_timestamp(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            [
                "timestamp,power,ws",
                "2021-01-01T01:00:00,2.0,4.0",
                "2021-01-01T00:00:00,1.0,3.0",
            ],
        )
        frame = load_csv(path, SCHEMA)
        np.testing.assert_allclose(frame.target, [1.0, 2.0])
        assert frame.timestamps[0] < frame.timestamps[1]

    def test_extra_columns_ignored(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            [
                "other,timestamp,power,ws",
                "x,2021-01-01T00:00:00,1.0,3.0",
            ],
        )
        frame = load_csv(path, SCHEMA)
        assert len(frame) == 1

    def test_missing_column_is_schema_error(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            ["timestamp,power", "2021-01-01T00:00:00,1.0"],
        )
        with pytest.raises(SchemaError):
            load_csv(path, SCHEMA)

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError) as excinfo:
            load_csv(str(tmp_path / "nope.csv"), SCHEMA)
        assert excinfo.value.exit_code == 3

    def test_empty_file(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyDataError):
            load_csv(str(path), SCHEMA)

    def test_header_only(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ["timestamp,power,ws"])
        with pytest.raises(EmptyDataError):
            load_csv(path, SCHEMA)

    def test_bad_number_reports_row(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            [
                "timestamp,power,ws",
                "2021-01-01T00:00:00,1.0,3.0",
                "2021-01-01T00:15:00,oops,4.0",
            ],
        )
        with pytest.raises(ParseError) as excinfo:
            load_csv(path, SCHEMA)
        assert "row 3" in str(excinfo.value)

    def test_bad_timestamp_reports_row(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            ["timestamp,power,ws", "not-a-time,1.0,3.0"],
        )
        with pytest.raises(ParseError) as excinfo:
            load_csv(path, SCHEMA)
        assert "row 2" in str(excinfo.value)

    def test_non_finite_cell_rejected(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            ["timestamp,power,ws", "2021-01-01T00:00:00,nan,3.0"],
        )
        with pytest.raises(ParseError):
            load_csv(path, SCHEMA)

    def test_duplicate_timestamp_rejected(self, tmp_path):
        path = write_csv(
            tmp_path / "a.csv",
            [
                "timestamp,power,ws",
                "2021-01-01T00:00:00,1.0,3.0",
                "2021-01-01T00:00:00,2.0,4.0",
            ],
        )
        with pytest.raises(IntegrityError) as excinfo:
            load_csv(path, SCHEMA)
        assert excinfo.value.exit_code == 3


class TestScaler:
    def test_fit_records_min_max(self):
        frame = _frame(target=[1.0, 5.0, 3.0], ws=[10.0, 20.0, 15.0])
        scaler = fit_scaler(frame)
        assert scaler.columns["power"] == (1.0, 5.0)
        assert scaler.columns["ws"] == (10.0, 20.0)

    def test_apply_maps_to_unit_interval(self):
        frame = _frame(target=[1.0, 5.0, 3.0], ws=[10.0, 20.0, 15.0])
        scaler = fit_scaler(frame)
        scaled = apply_scaler(frame, scaler)
        np.testing.assert_allclose(scaled.target, [0.0, 1.0, 0.5])
        np.testing.assert_allclose(scaled.features["ws"], [0.0, 1.0, 0.5])

    def test_round_trip_tight(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            values = rng.normal(0.0, 50.0, size=64)
            frame = _frame(target=values, ws=rng.uniform(0, 30, size=64))
            scaler = fit_scaler(frame)
            fwd = apply_column(scaler, "power", values)
            back = invert_column(scaler, "power", fwd)
            np.testing.assert_allclose(back, values, atol=1e-12)

    def test_constant_column_maps_to_zeros(self):
        frame = _frame(target=[2.0, 2.0, 2.0], ws=[1.0, 2.0, 3.0])
        scaler = fit_scaler(frame)
        np.testing.assert_array_equal(apply_column(scaler, "power", frame.target), 0.0)

    def test_dict_round_trip(self):
        frame = _frame(target=[1.0, 5.0], ws=[10.0, 20.0])
        scaler = fit_scaler(frame)
        again = Scaler.from_dict(scaler.to_dict())
        assert again.columns == scaler.columns

    def test_empty_frame_rejected(self):
        frame = _frame(target=[], ws=[])
        with pytest.raises(EmptyDataError):
            fit_scaler(frame)


class TestLagWindows:
    def test_documented_example_horizon_one(self):
        sset = make_lag_windows([1, 2, 3, 4, 5, 6], lag=3, horizon=1)
        np.testing.assert_array_equal(sset.x[0], [1.0, 2.0, 3.0])
        assert sset.y[0] == 4.0
        assert len(sset) == 3
        assert sset.feature_names == ("lag_3", "lag_2", "lag_1")

    def test_documented_example_horizon_two(self):
        sset = make_lag_windows([1, 2, 3, 4, 5, 6], lag=3, horizon=2)
        np.testing.assert_array_equal(sset.x[0], [1.0, 2.0, 3.0])
        assert sset.y[0] == 5.0
        assert len(sset) == 2

    def test_sample_count_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            n = int(rng.integers(5, 200))
            lag = int(rng.integers(1, 5))
            horizon = int(rng.integers(1, 4))
            if n - lag - horizon + 1 < 1:
                continue
            sset = make_lag_windows(rng.normal(size=n), lag=lag, horizon=horizon)
            assert len(sset) == n - lag - horizon + 1

    def test_no_future_leakage(self):
        # On an increasing ramp every feature must precede its target.
        values = np.arange(50.0)
        for horizon in (1, 2, 3):
            sset = make_lag_windows(values, lag=4, horizon=horizon)
            assert np.all(sset.x.max(axis=1) < sset.y)
            # most recent lag is exactly `horizon` steps before delivery
            np.testing.assert_array_equal(sset.y - sset.x[:, -1], float(horizon))

    def test_target_indices_point_at_frame_rows(self):
        values = np.arange(10.0) * 2.0
        sset = make_lag_windows(values, lag=3, horizon=1)
        np.testing.assert_array_equal(values[sset.target_indices], sset.y)

    def test_too_short_series(self):
        with pytest.raises(InsufficientDataError):
            make_lag_windows([1.0, 2.0, 3.0], lag=3, horizon=1)

    def test_bad_lag(self):
        with pytest.raises(SchemaError):
            make_lag_windows([1.0, 2.0, 3.0], lag=0)


class TestNwpSet:
    def test_aligned_columns(self):
        frame = _frame(target=[1.0, 2.0, 3.0], ws=[10.0, 11.0, 12.0])
        sset = make_nwp_set(frame, ["ws"])
        np.testing.assert_array_equal(sset.x[:, 0], [10.0, 11.0, 12.0])
        np.testing.assert_array_equal(sset.y, [1.0, 2.0, 3.0])
        assert sset.feature_names == ("ws",)

    def test_alignment_shift(self):
        frame = _frame(target=[1.0, 2.0, 3.0, 4.0], ws=[10.0, 11.0, 12.0, 13.0])
        sset = make_nwp_set(frame, ["ws"], horizon_alignment=2)
        np.testing.assert_array_equal(sset.x[:, 0], [10.0, 11.0])
        np.testing.assert_array_equal(sset.y, [3.0, 4.0])

    def test_unknown_feature(self):
        frame = _frame(target=[1.0], ws=[2.0])
        with pytest.raises(SchemaError):
            make_nwp_set(frame, ["nope"])

    def test_no_features(self):
        frame = _frame(target=[1.0], ws=[2.0])
        with pytest.raises(SchemaError):
            make_nwp_set(frame, [])


class TestChronologicalSplit:
    def test_ten_rows(self):
        sset = _supervised(10)
        train, val, test = chronological_split(sset)
        assert (len(train), len(val), len(test)) == (8, 1, 1)

    def test_hundred_rows(self):
        sset = _supervised(100)
        train, val, test = chronological_split(sset)
        assert (len(train), len(val), len(test)) == (80, 10, 10)

    def test_remainder_goes_to_test(self):
        train, val, test = chronological_split(_supervised(101))
        assert (len(train), len(val), len(test)) == (80, 10, 11)

    def test_order_preserved_and_contiguous(self):
        sset = _supervised(57)
        train, val, test = chronological_split(sset)
        rebuilt = np.concatenate([train.y, val.y, test.y])
        np.testing.assert_array_equal(rebuilt, sset.y)
        assert train.y.max() < val.y.min() < test.y.min()

    def test_ratio_validation(self):
        with pytest.raises(SchemaError):
            chronological_split(_supervised(10), ratios=(0.5, 0.4, 0.2))
        with pytest.raises(SchemaError):
            chronological_split(_supervised(10), ratios=(1.0, -0.1, 0.1))

    def test_too_few_samples(self):
        with pytest.raises(InsufficientDataError):
            chronological_split(_supervised(5), ratios=(0.9, 0.05, 0.05))


class TestSupervisedSet:
    def test_shape_validation(self):
        with pytest.raises(ShapeError):
            SupervisedSet(np.zeros((3, 2)), np.zeros(4), ("a", "b"))
        with pytest.raises(ShapeError):
            SupervisedSet(np.zeros((3, 2)), np.zeros(3), ("a",))
        with pytest.raises(ShapeError):
            SupervisedSet(np.zeros(3), np.zeros(3), ("a",))


def _frame(target, ws):
    from datetime import datetime, timedelta
    from windcast.data import TimeSeriesFrame

    n = len(target)
    t0 = datetime(2021, 1, 1)
    return TimeSeriesFrame(
        timestamps=[t0 + timedelta(minutes=15 * i) for i in range(n)],
        target=np.asarray(target, dtype=float),
        target_name="power",
        features={"ws": np.asarray(ws, dtype=float)},
    )


def _supervised(n):
    x = np.arange(2 * n, dtype=float).reshape(n, 2)
    y = np.arange(n, dtype=float)
    return SupervisedSet(x, y, ("a", "b"))
