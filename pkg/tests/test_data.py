import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sensorfdi import (
    Dataset,
    FaultSpec,
    SyntheticConfig,
    apply_normalization,
    calibrate_fault_amplitude,
    compute_normalization,
    fit_ls_model,
    generate_synthetic_flight,
    inject_fault,
    load_dataset,
)
from conftest import make_dataset


class TestLoadDataset:
    def test_roundtrip_with_column_reordering(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,c\n1,2,3\n4,5,6\n7,8,9\n")
        ds = load_dataset(path, x_names=["a", "b"], u_names=["c"])
        assert ds.m == 3 and ds.n_x == 2 and ds.n_u == 1
        assert np.array_equal(ds.samples, [[1, 2, 3], [4, 5, 6], [7, 8, 9]])

    def test_reorders_to_x_then_u(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("u1,x1,x2\n9,1,2\n8,3,4\n7,5,6\n")
        ds = load_dataset(path, x_names=["x1", "x2"], u_names=["u1"])
        assert np.array_equal(ds.samples[:, 2], [9, 8, 7])

    def test_non_finite_cell(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,c\n1,2,3\n4,nan,6\n7,8,9\n")
        with pytest.raises(ValueError, match="non-finite value at row 1, column b"):
            load_dataset(path, ["a", "b"], ["c"])

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,c\n1,2,3\n4,oops,6\n7,8,9\n")
        with pytest.raises(ValueError, match="non-numeric value 'oops' at row 1"):
            load_dataset(path, ["a", "b"], ["c"])

    def test_unknown_column_lists_headers(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,c\n1,2,3\n4,5,6\n7,8,9\n")
        with pytest.raises(ValueError, match=r"\['q'\].*available headers.*'a', 'b', 'c'"):
            load_dataset(path, ["a", "q"], ["c"])

    def test_ragged_row(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("a,b,c\n1,2,3\n4,5\n6,7,8\n")
        with pytest.raises(ValueError, match="row 1 has 2 cells"):
            load_dataset(path, ["a", "b"], ["c"])


class TestDatasetInvariants:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            make_dataset([[1.0, np.inf], [0.0, 1.0]], n_x=1)

    def test_rejects_fewer_samples_than_channels(self):
        with pytest.raises(ValueError, match="at least as many samples"):
            make_dataset(np.ones((2, 3)) * [[1, 2, 3], [4, 5, 6]], n_x=2)

    def test_requires_monitored_channel(self):
        with pytest.raises(ValueError, match="monitored"):
            Dataset(np.ones((3, 2)), (), ("u1", "u2"))

    def test_samples_are_read_only(self):
        ds = make_dataset(np.arange(12.0).reshape(4, 3), n_x=2)
        with pytest.raises(ValueError):
            ds.samples[0, 0] = 5.0


class TestNormalization:
    def test_two_point_population_convention(self):
        ds = make_dataset([[1.0, 1.0], [3.0, 5.0]], n_x=1)
        stats = compute_normalization(ds)
        assert stats.mean[0] == pytest.approx(2.0)
        assert stats.std[0] == pytest.approx(1.0)  # divide by m, not m - 1

    def test_idempotence_on_normalized_data(self, small_training):
        stats = compute_normalization(small_training)
        assert np.abs(stats.mean).max() < 1e-9
        assert np.abs(stats.std - 1.0).max() < 1e-9

    def test_constant_column_names_channel(self):
        ds = make_dataset([[5.0, 1.0], [5.0, 2.0], [5.0, 3.0]], n_x=1)
        with pytest.raises(ValueError, match=r"constant column\(s\).*x1"):
            compute_normalization(ds)

    def test_apply_roundtrip(self, small_training):
        stats = compute_normalization(small_training)
        out = apply_normalization(small_training, stats)
        assert np.abs(out.samples.mean(axis=0)).max() < 1e-9
        assert np.abs(out.samples.std(axis=0) - 1.0).max() < 1e-9

    def test_identity_stats(self):
        ds = make_dataset([[2.0, 4.0], [4.0, 8.0], [6.0, 2.0]], n_x=1)
        stats = compute_normalization(ds)
        ident = type(stats)(mean=np.zeros(2), std=np.ones(2))
        out = apply_normalization(ds, ident)
        assert np.array_equal(out.samples, ds.samples)

    def test_simple_arithmetic(self):
        ds = make_dataset([[2.0, 0.0], [4.0, 1.0]], n_x=1)
        stats = type(compute_normalization(ds))(mean=np.array([2.0, 0.0]), std=np.ones(2))
        out = apply_normalization(ds, stats)
        assert np.array_equal(out.samples[:, 0], [0.0, 2.0])

    def test_dimension_mismatch(self, small_training):
        stats = compute_normalization(small_training)
        bad = type(stats)(mean=stats.mean[:-1], std=stats.std[:-1])
        with pytest.raises(ValueError, match="channels"):
            apply_normalization(small_training, bad)


class TestSyntheticGenerator:
    def test_exact_null_space_without_noise(self):
        cfg = SyntheticConfig(n_x=3, n_u=2, m=400, latent_dim=3, noise_std=0.0, seed=5)
        ds = generate_synthetic_flight(cfg)
        s = np.linalg.svd(ds.samples, compute_uv=False)
        assert s[-1] < 1e-8 * s[0]

    def test_determinism(self):
        cfg = SyntheticConfig(n_x=4, n_u=2, m=200, latent_dim=4, noise_std=0.05, seed=123)
        a = generate_synthetic_flight(cfg)
        b = generate_synthetic_flight(cfg)
        assert np.array_equal(a.samples, b.samples)

    def test_different_seeds_differ(self):
        base = dict(n_x=4, n_u=2, m=200, latent_dim=4, noise_std=0.05)
        a = generate_synthetic_flight(SyntheticConfig(seed=1, **base))
        b = generate_synthetic_flight(SyntheticConfig(seed=2, **base))
        assert not np.array_equal(a.samples, b.samples)

    def test_maneuver_raises_input_activity(self):
        cfg = SyntheticConfig(
            n_x=3, n_u=2, m=400, latent_dim=3, noise_std=0.01,
            maneuver_segments=((100, 200, 5.0),), seed=5,
        )
        ds = generate_synthetic_flight(cfg)
        norms = np.linalg.norm(ds.u, axis=1)
        inside = norms[100:200].mean()
        outside = np.concatenate([norms[:100], norms[200:]]).mean()
        assert inside > outside

    def test_latent_dim_too_large(self):
        with pytest.raises(ValueError, match="no approximate null space"):
            SyntheticConfig(n_x=3, n_u=2, m=100, latent_dim=5, noise_std=0.0, seed=1)

    def test_segment_bounds_checked(self):
        with pytest.raises(ValueError, match="segment"):
            SyntheticConfig(n_x=3, n_u=2, m=100, latent_dim=3, seed=1,
                            maneuver_segments=((50, 200, 2.0),))

    def test_channel_names_and_dt(self):
        cfg = SyntheticConfig(n_x=2, n_u=1, m=50, latent_dim=2, seed=0)
        ds = generate_synthetic_flight(cfg)
        assert ds.x_channels == ("x1", "x2") and ds.u_channels == ("u1",)
        assert ds.dt == 0.1


class TestInjectFault:
    def test_zero_amplitude_is_identity(self, small_training):
        out = inject_fault(small_training, FaultSpec(0, 0.0, 10, 20))
        assert np.array_equal(out.samples, small_training.samples)

    def test_rectangular_twelve_of_sixteen_minutes(self):
        # 16-minute record at 0.1 s sampling with a 12-minute rectangular bias
        m, start, stop = 9600, 1200, 8400
        ds = make_dataset(np.zeros((m, 2)), n_x=1)
        out = inject_fault(ds, FaultSpec(channel=0, amplitude=1.5, start=start, stop=stop))
        assert np.all(out.samples[start:stop, 0] == 1.5)
        assert np.all(out.samples[:start, 0] == 0.0)
        assert np.all(out.samples[stop:, 0] == 0.0)
        assert np.array_equal(out.samples[:, 1], ds.samples[:, 1])

    def test_single_sample_negative_amplitude(self):
        ds = make_dataset(np.zeros((4, 2)), n_x=1)
        out = inject_fault(ds, FaultSpec(channel=0, amplitude=-2.0, start=1, stop=2))
        expect = np.zeros((4, 2))
        expect[1, 0] = -2.0
        assert np.array_equal(out.samples, expect)

    def test_original_unchanged(self, small_training):
        before = small_training.samples.copy()
        inject_fault(small_training, FaultSpec(1, 3.0, 0, 5))
        assert np.array_equal(small_training.samples, before)

    def test_channel_out_of_range(self, small_training):
        with pytest.raises(ValueError, match="channel 3 out of range"):
            inject_fault(small_training, FaultSpec(3, 1.0, 0, 5))

    def test_interval_out_of_range(self, small_training):
        with pytest.raises(ValueError, match="exceeds"):
            inject_fault(small_training, FaultSpec(0, 1.0, 0, small_training.m + 1))

    @given(
        values=st.lists(
            st.lists(st.integers(min_value=-1000, max_value=1000), min_size=2, max_size=2),
            min_size=3,
            max_size=12,
        ),
        amplitude=st.integers(min_value=-10000, max_value=10000),
        channel=st.integers(min_value=0, max_value=0),
    )
    @settings(max_examples=50)
    def test_additive_and_invertible(self, values, amplitude, channel):
        # Bitwise invertibility holds on integer-valued data, where float
        # addition is exact.
        ds = make_dataset(np.array(values, dtype=float), n_x=1)
        fault = FaultSpec(channel, float(amplitude), 1, ds.m)
        undo = FaultSpec(channel, -float(amplitude), 1, ds.m)
        assert np.array_equal(inject_fault(inject_fault(ds, fault), undo).samples, ds.samples)


class TestLsModel:
    def test_recovers_exact_linear_relation(self, rng):
        m = 200
        x2 = rng.normal(size=m)
        u1 = rng.normal(size=m)
        x1 = 0.5 * x2 + u1
        ds = make_dataset(np.column_stack([x1, x2, u1]), n_x=2)
        model = fit_ls_model(ds)
        assert model.coef_x[0, 1] == pytest.approx(0.5, abs=1e-9)
        assert model.coef_u[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert model.mean_abs_error[0] < 1e-9

    def test_diagonal_structurally_zero(self, small_training):
        model = fit_ls_model(small_training)
        assert np.all(np.diag(model.coef_x) == 0.0)

    def test_pure_noise_error_matches_folded_normal_mean(self, rng):
        # Independent unit-variance channels: the best prediction is ~0, so
        # the mean absolute residual approaches E|N(0,1)| = sqrt(2/pi).
        m = 20000
        ds = make_dataset(rng.normal(size=(m, 5)), n_x=3)
        model = fit_ls_model(ds)
        expected = math.sqrt(2.0 / math.pi)
        assert np.abs(model.mean_abs_error - expected).max() < 0.02

    def test_rank_deficient_names_sensor(self):
        base = np.random.default_rng(3).normal(size=(50, 1))
        # u1 duplicates x2, so the regressor matrix for x1 is rank deficient
        samples = np.column_stack([base[:, 0] * 2.0, base[:, 0], base[:, 0]])
        ds = make_dataset(samples, n_x=2)
        with pytest.raises(ValueError, match="rank-deficient regressors.*'x1'"):
            fit_ls_model(ds)

    def test_residual_orthogonal_to_regressors(self, small_training):
        model = fit_ls_model(small_training)
        n_x = small_training.n_x
        for i in range(n_x):
            others = [j for j in range(n_x) if j != i]
            regressors = np.hstack([small_training.x[:, others], small_training.u])
            coefs = np.concatenate([model.coef_x[i, others], model.coef_u[i]])
            residual = small_training.x[:, i] - regressors @ coefs
            assert np.abs(regressors.T @ residual).max() < 1e-6 * small_training.m


class TestFaultAmplitude:
    def test_rounds_to_one_significant_figure(self):
        model = _model_with_mae([0.172, 1.0, 0.0499])
        assert calibrate_fault_amplitude(model, 0, 3.0) == pytest.approx(0.6, abs=1e-12)
        assert calibrate_fault_amplitude(model, 1, 3.0) == pytest.approx(3.0, abs=1e-12)
        assert calibrate_fault_amplitude(model, 2, 3.0) == pytest.approx(0.15, abs=1e-12)

    def test_zero_error_gives_zero_amplitude(self):
        model = _model_with_mae([0.0, 0.1, 0.1])
        assert calibrate_fault_amplitude(model, 0) == 0.0

    def test_channel_bounds(self):
        model = _model_with_mae([0.1, 0.1, 0.1])
        with pytest.raises(ValueError, match="out of range"):
            calibrate_fault_amplitude(model, 3)

    def test_factor_must_be_positive(self):
        model = _model_with_mae([0.1, 0.1, 0.1])
        with pytest.raises(ValueError, match="factor"):
            calibrate_fault_amplitude(model, 0, 0.0)


def _model_with_mae(mae):
    from sensorfdi import LsModel

    k = len(mae)
    return LsModel(coef_x=np.zeros((k, k)), coef_u=np.zeros((k, 1)),
                   mean_abs_error=np.array(mae))
