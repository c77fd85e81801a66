import numpy as np
import pytest

from cdmshape.dataset import (CSV_COLUMNS, CsvFormatError, Normalizer, Scenario,
                              bend_schedule, feature_matrix, fit_normalizer,
                              generate_dataset, read_csv, repair_markers,
                              split_by_bend, target_matrix, write_csv)
from cdmshape.kinematics import CdmConfig, free_bend_curvature, shape_from_curvatures

CFG = CdmConfig()


def quick_scenarios():
    # Low sample rate keeps the solver work per test small.
    return [Scenario("FreespaceRight", 0.4, sample_rate=10.0, seed=1),
            Scenario("BaseLeft", 0.4, sample_rate=10.0, seed=2)]


class TestSchedule:
    def test_sample_count_formula(self):
        # 0 -> 5 mm -> 0 at 0.2 mm/s sampled at 50 Hz
        assert len(bend_schedule(0.2, 50.0)) == 2500

    def test_triangle_reaches_peak_and_returns(self):
        deltas = bend_schedule(0.4, 10.0)
        assert deltas[0] == 0.0
        assert deltas.max() == pytest.approx(5.0, abs=1e-12)
        assert deltas.max() <= 5.0
        assert deltas[-1] < 0.2

    def test_symmetric_values_bit_identical(self):
        deltas = bend_schedule(0.25, 20.0)
        n = len(deltas)
        assert deltas[1] == deltas[n - 1]
        assert deltas[10] == deltas[n - 10]


class TestGenerateDataset:
    def test_counts_and_neutral_rows(self):
        res = generate_dataset(quick_scenarios(), CFG, noise_sigma=0.002)
        assert len(res.samples) == 2 * 250
        assert res.n_skipped == 0
        first = res.samples[0]
        assert first.t == 0.0
        assert np.abs(first.features).max() <= 5 * 0.002
        np.testing.assert_array_equal(first.target.markers[0], [0.0, 0.0])

    def test_deterministic_per_seed(self):
        a = generate_dataset(quick_scenarios(), CFG)
        b = generate_dataset(quick_scenarios(), CFG)
        assert len(a.samples) == len(b.samples)
        for sa, sb in zip(a.samples, b.samples):
            np.testing.assert_array_equal(sa.features, sb.features)
            np.testing.assert_array_equal(sa.target.markers, sb.target.markers)

    def test_different_seed_changes_noise(self):
        base = quick_scenarios()
        other = [Scenario("FreespaceRight", 0.4, sample_rate=10.0, seed=99),
                 base[1]]
        a = generate_dataset(base, CFG)
        b = generate_dataset(other, CFG)
        assert not np.array_equal(a.samples[1].features, b.samples[1].features)

    def test_empty_scenarios_rejected(self):
        with pytest.raises(ValueError):
            generate_dataset([], CFG)

    def test_velocity_outside_actuation_range(self):
        with pytest.raises(ValueError):
            Scenario("FreespaceLeft", 0.05)
        with pytest.raises(ValueError):
            Scenario("FreespaceLeft", 0.41)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Scenario("FreespaceUp", 0.2)


class TestRepairMarkers:
    def test_clean_frame_passes_through(self):
        frame = shape_from_curvatures(free_bend_curvature(3.0, CFG), CFG)
        out = repair_markers(frame.markers, np.zeros(30, dtype=bool))
        np.testing.assert_array_equal(out.markers, frame.markers)

    def test_two_outliers_rejected(self):
        frame = shape_from_curvatures(free_bend_curvature(3.0, CFG), CFG)
        flags = np.zeros(30, dtype=bool)
        flags[[5, 20]] = True
        assert repair_markers(frame.markers, flags) is None

    def test_endpoint_outlier_rejected(self):
        frame = shape_from_curvatures(free_bend_curvature(3.0, CFG), CFG)
        for idx in (0, 29):
            flags = np.zeros(30, dtype=bool)
            flags[idx] = True
            assert repair_markers(frame.markers, flags) is None

    def test_uniform_bend_repair_is_exact(self):
        frame = shape_from_curvatures(free_bend_curvature(4.0, CFG), CFG)
        corrupted = frame.markers.copy()
        corrupted[15] = [999.0, -999.0]
        flags = np.zeros(30, dtype=bool)
        flags[15] = True
        out = repair_markers(corrupted, flags)
        assert np.linalg.norm(out.markers[15] - frame.markers[15]) < 1e-6
        np.testing.assert_array_equal(np.delete(out.markers, 15, 0),
                                      np.delete(corrupted, 15, 0))

    def test_straight_shape_uses_midpoint(self):
        frame = shape_from_curvatures(np.zeros(30), CFG)
        corrupted = frame.markers.copy()
        corrupted[10] = [0.0, 50.0]
        flags = np.zeros(30, dtype=bool)
        flags[10] = True
        out = repair_markers(corrupted, flags)
        np.testing.assert_allclose(out.markers[10], frame.markers[10], atol=1e-12)


class TestSplitByBend:
    def _samples(self, n_bends=10, rows_per_bend=4):
        res = []
        kinds = ["FreespaceLeft", "BaseRight", "CenterLeft", "TipLeft", "TipRight"]
        from cdmshape.dataset import Sample
        from cdmshape.kinematics import ShapeFrame
        for b in range(n_bends):
            for r in range(rows_per_bend):
                res.append(Sample(features=np.zeros(8),
                                  target=ShapeFrame(markers=np.zeros((30, 2))),
                                  scenario=kinds[b % len(kinds)], bend_id=b, t=r * 0.1))
        return res

    def test_ood_scenarios_route_to_ood(self):
        samples = self._samples()
        parts = split_by_bend(samples, ood_labels=("CenterLeft", "TipLeft"))
        assert all(s.scenario in ("CenterLeft", "TipLeft") for s in parts["test_ood"])
        assert all(s.scenario not in ("CenterLeft", "TipLeft")
                   for s in parts["train"] + parts["test_id"])

    def test_whole_bend_partition(self):
        samples = self._samples()
        parts = split_by_bend(samples, ood_labels=("CenterLeft", "TipLeft"),
                              train_fraction=0.8)
        seen = {}
        for name, rows in parts.items():
            for s in rows:
                assert seen.setdefault(s.bend_id, name) == name
        total = sum(len(v) for v in parts.values())
        assert total == len(samples)

    def test_train_fraction_counts(self):
        samples = self._samples(n_bends=10)
        # 4 of 10 bends are OOD kinds here; 6 remain -> floor(6*0.8)=4 train bends
        parts = split_by_bend(samples, ood_labels=("CenterLeft", "TipLeft"),
                              train_fraction=0.8)
        train_bends = {s.bend_id for s in parts["train"]}
        id_bends = {s.bend_id for s in parts["test_id"]}
        assert len(train_bends) == 4
        assert len(id_bends) == 2

    def test_empty_ood_labels(self):
        parts = split_by_bend(self._samples(), ood_labels=())
        assert parts["test_ood"] == []

    def test_empty_train_is_an_error(self):
        samples = self._samples(n_bends=2)
        with pytest.raises(ValueError):
            split_by_bend(samples, ood_labels=(), train_fraction=0.1)


class TestNormalizer:
    def test_basic_scaling(self):
        norm = Normalizer(lo=np.array([1.0]), hi=np.array([3.0]))
        assert norm.transform([2.0])[0] == 0.5
        assert norm.transform([1.0])[0] == 0.0
        assert norm.transform([3.0])[0] == 1.0

    def test_constant_feature_maps_to_zero(self):
        norm = fit_normalizer(np.array([[2.0, 1.0], [2.0, 3.0]]))
        out = norm.transform([2.0, 2.0])
        assert out[0] == 0.0 and out[1] == 0.5

    def test_values_outside_training_range_not_clipped(self):
        norm = Normalizer(lo=np.array([0.0]), hi=np.array([1.0]))
        assert norm.transform([2.0])[0] == 2.0
        assert norm.transform([-1.0])[0] == -1.0

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 8))
        norm = fit_normalizer(x)
        back = norm.inverse(norm.transform(x))
        np.testing.assert_allclose(back, x, atol=1e-12)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            fit_normalizer(np.zeros((1, 8)))
        with pytest.raises(ValueError):
            fit_normalizer(np.zeros((0, 8)))


class TestCsv:
    def test_round_trip_exact(self, tmp_path):
        res = generate_dataset(quick_scenarios(), CFG)
        path = tmp_path / "data.csv"
        write_csv(res.samples, path)
        back = read_csv(path)
        assert len(back) == len(res.samples)
        for a, b in zip(res.samples, back):
            assert (a.bend_id, a.scenario) == (b.bend_id, b.scenario)
            assert a.t == b.t
            np.testing.assert_array_equal(a.features, b.features)
            np.testing.assert_array_equal(a.target.markers, b.target.markers)

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        cols = [c for c in CSV_COLUMNS if c != "dl3"]
        path.write_text(",".join(cols) + "\n")
        with pytest.raises(CsvFormatError, match="dl3"):
            read_csv(path)

    def test_empty_file_with_header(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(",".join(CSV_COLUMNS) + "\n")
        assert read_csv(path) == []

    def test_malformed_row_reports_line(self, tmp_path):
        res = generate_dataset([quick_scenarios()[0]], CFG)
        path = tmp_path / "data.csv"
        write_csv(res.samples[:3], path)
        with open(path, "a") as fh:
            fh.write("not,a,valid,row\n")
        with pytest.raises(CsvFormatError, match="line 5"):
            read_csv(path)

    def test_unparsable_float_reports_line(self, tmp_path):
        res = generate_dataset([quick_scenarios()[0]], CFG)
        path = tmp_path / "data.csv"
        write_csv(res.samples[:2], path)
        text = path.read_text().splitlines()
        parts = text[2].split(",")
        parts[5] = "oops"
        text[2] = ",".join(parts)
        path.write_text("\n".join(text) + "\n")
        with pytest.raises(CsvFormatError, match="line 3"):
            read_csv(path)

    def test_matrix_helpers(self):
        res = generate_dataset([quick_scenarios()[0]], CFG)
        x = feature_matrix(res.samples)
        y = target_matrix(res.samples)
        assert x.shape == (250, 8)
        assert y.shape == (250, 60)
        np.testing.assert_array_equal(y[0, :2], res.samples[0].target.markers[0])
