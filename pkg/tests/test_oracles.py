import numpy as np
import pytest

from rombox.dmd import fit, regime_value
from rombox.oracles import (
    GeoDemoOracle,
    HeatRegimeOracle,
    RidgeDragOracle,
    has_capability,
    make_oracle,
)


class TestRidgeDrag:
    def test_functional_matches_value(self):
        oracle = RidgeDragOracle()
        rng = np.random.default_rng(0)
        for mu in rng.uniform(-1, 1, size=(20, 5)):
            f_direct = oracle.value(mu)
            f_field = oracle.field_functional(oracle.field(mu))
            assert abs(f_direct - f_field) <= 1e-10 * max(1.0, abs(f_direct))

    def test_gradient_against_finite_differences(self):
        oracle = RidgeDragOracle()
        rng = np.random.default_rng(1)
        h = 1e-6
        for mu in rng.uniform(-0.9, 0.9, size=(5, 5)):
            grad = oracle.gradient(mu)
            for i in range(5):
                e = np.zeros(5)
                e[i] = h
                fd = (oracle.value(mu + e) - oracle.value(mu - e)) / (2 * h)
                assert abs(fd - grad[i]) <= 1e-6 * max(1.0, abs(grad[i]))

    def test_zero_leak_is_pure_ridge(self):
        oracle = RidgeDragOracle(leak=0.0)
        rng = np.random.default_rng(2)
        a = oracle.direction
        for mu in rng.uniform(-1, 1, size=(10, 5)):
            y = a @ mu
            assert abs(oracle.value(mu) - (y**3 + y)) <= 1e-12

    def test_minimum_is_best_corner(self):
        oracle = RidgeDragOracle()
        corner, f_min = oracle.minimum()
        rng = np.random.default_rng(3)
        samples = rng.uniform(-1, 1, size=(2000, 5))
        best = min(oracle.value(mu) for mu in samples)
        assert f_min <= best
        # and no other corner does better
        for _ in range(50):
            c = np.sign(rng.uniform(-1, 1, 5))
            assert oracle.value(c) >= f_min - 1e-12

    def test_deterministic(self):
        a = RidgeDragOracle()
        b = RidgeDragOracle()
        mu = np.array([0.3, -0.2, 0.9, 0.0, -0.5])
        assert a.value(mu) == b.value(mu)
        assert np.array_equal(a.field(mu), b.field(mu))


class TestHeatRegime:
    def test_time_series_converges_to_regime_field(self):
        oracle = HeatRegimeOracle()
        mu = np.array([0.4, -0.3, 0.8])
        series = oracle.time_series(mu, n_snapshots=10, dt=5.0)
        # late snapshots approach the closed-form steady field
        last = series.data[:, -1]
        np.testing.assert_allclose(last, oracle.field(mu), atol=1e-10)

    def test_dmd_recovers_regime(self):
        oracle = HeatRegimeOracle()
        mu = np.array([-0.5, 0.2, 0.1])
        series = oracle.time_series(mu, n_snapshots=12, dt=0.3)
        model = fit(series, 1.0)
        assert model.rank == 4  # steady mode + three transients
        est = regime_value(model, horizon=30.0, window=8)
        np.testing.assert_allclose(est.value, oracle.field(mu), atol=1e-8)

    def test_functional_matches_value(self):
        oracle = HeatRegimeOracle()
        mu = np.array([0.9, 0.9, -0.9])
        assert abs(
            oracle.value(mu) - oracle.field_functional(oracle.field(mu))
        ) <= 1e-12

    def test_gradient_against_finite_differences(self):
        oracle = HeatRegimeOracle()
        mu = np.array([0.1, -0.4, 0.6])
        grad = oracle.gradient(mu)
        h = 1e-6
        for i in range(3):
            e = np.zeros(3)
            e[i] = h
            fd = (oracle.value(mu + e) - oracle.value(mu - e)) / (2 * h)
            assert abs(fd - grad[i]) <= 1e-6


class TestGeoDemo:
    def test_minimum_at_target(self):
        oracle = GeoDemoOracle(resolution=8)
        target, f_min = oracle.minimum()
        assert f_min == 0.0
        assert oracle.value(target) <= 1e-28
        rng = np.random.default_rng(4)
        for mu in rng.uniform(-0.3, 0.3, size=(10, 5)):
            assert oracle.value(mu) >= 0.0

    def test_field_is_flattened_vertices(self):
        oracle = GeoDemoOracle(resolution=8)
        field = oracle.field(np.zeros(5))
        assert field.shape == (3 * oracle.mesh.n_vertices,)
        # zero displacements leave the template untouched
        np.testing.assert_array_equal(field, oracle.mesh.vertices.ravel())

    def test_smooth_in_parameters(self):
        oracle = GeoDemoOracle(resolution=8)
        mu = np.zeros(5)
        base = oracle.value(mu)
        bumped = oracle.value(mu + 1e-6)
        assert abs(bumped - base) <= 1e-3


class TestFactory:
    def test_known_names(self):
        assert isinstance(make_oracle({"name": "ridge-drag"}), RidgeDragOracle)
        assert isinstance(
            make_oracle({"name": "heat-regime", "n_dof": 100}), HeatRegimeOracle
        )
        assert isinstance(make_oracle({"name": "geo-demo"}), GeoDemoOracle)

    def test_unknown_rejected(self):
        with pytest.raises(ValueError, match="unknown oracle"):
            make_oracle({"name": "rans"})

    def test_capabilities(self):
        ridge = make_oracle({"name": "ridge-drag"})
        assert has_capability(ridge, "gradient")
        assert has_capability(ridge, "field")
        assert not has_capability(ridge, "time_series")
        heat = make_oracle({"name": "heat-regime"})
        assert has_capability(heat, "time_series")
        geo = make_oracle({"name": "geo-demo"})
        assert not has_capability(geo, "gradient")
