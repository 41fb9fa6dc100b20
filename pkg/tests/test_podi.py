import numpy as np
import pytest

from rombox.podi import (
    ParametricSnapshotSet,
    build,
    decay_report,
    evaluate,
    load_snapshot_set,
    save_decay_csv,
    save_snapshot_set,
)


def affine_family(mus, v0=None, v1=None, dof=40):
    rng = np.random.default_rng(123)
    v0 = rng.standard_normal(dof) if v0 is None else v0
    v1 = rng.standard_normal(dof) if v1 is None else v1
    snaps = np.stack([v0 + m * v1 for m in np.asarray(mus).reshape(-1)], axis=1)
    return ParametricSnapshotSet(parameters=np.asarray(mus, float), snapshots=snaps), v0, v1


class TestSnapshotSet:
    def test_duplicate_parameters_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            ParametricSnapshotSet(
                parameters=np.array([[0.0], [0.0]]), snapshots=np.ones((3, 2))
            )

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            ParametricSnapshotSet(
                parameters=np.array([[0.0]]), snapshots=np.ones((3, 2))
            )


class TestBuild:
    def test_constant_field(self):
        v = np.array([1.0, 2.0, 2.0])
        snaps = np.tile(v[:, None], (1, 4))
        ps = ParametricSnapshotSet(
            parameters=np.linspace(0, 1, 4)[:, None], snapshots=snaps
        )
        model = build(ps, 1)
        assert model.n_modes == 1
        np.testing.assert_allclose(
            model.singular_values[0], np.linalg.norm(v) * 2.0, rtol=1e-12
        )
        np.testing.assert_allclose(model.singular_values[1:], 0.0, atol=1e-12)
        # coefficients constant across samples
        assert np.ptp(model.coefficients[0]) <= 1e-12 * np.linalg.norm(v)

    def test_linear_scaling_single_mode(self):
        v = np.array([3.0, 4.0])
        ps = ParametricSnapshotSet(
            parameters=np.array([[0.0], [1.0]]),
            snapshots=np.stack([0 * v, v], axis=1),
        )
        model = build(ps, 1)
        # single mode proportional to v, coefficients (0, |v|) up to sign
        np.testing.assert_allclose(np.abs(model.basis[:, 0]), v / 5.0, atol=1e-12)
        np.testing.assert_allclose(
            np.sort(np.abs(model.coefficients[0])), [0.0, 5.0], atol=1e-12
        )

    def test_hundred_sample_campaign_size(self):
        rng = np.random.default_rng(5)
        mus = rng.uniform(-1, 1, size=(100, 5))
        snaps = rng.standard_normal((50, 100))
        model = build(ParametricSnapshotSet(parameters=mus, snapshots=snaps), 10)
        assert model.n_modes == 10
        assert len(model.singular_values) == 50

    def test_rank_exceeding_samples_rejected(self):
        ps, *_ = affine_family(np.linspace(0, 1, 5))
        with pytest.raises(ValueError):
            build(ps, 6)

    def test_basis_orthonormal(self):
        ps, *_ = affine_family(np.linspace(0, 1, 6))
        model = build(ps, 2)
        np.testing.assert_allclose(
            model.basis.T @ model.basis, np.eye(2), atol=1e-10
        )

    def test_mode_prefix_stable_under_truncation(self):
        rng = np.random.default_rng(9)
        snaps = rng.standard_normal((30, 8))
        ps = ParametricSnapshotSet(
            parameters=np.arange(8.0)[:, None], snapshots=snaps
        )
        small = build(ps, 3)
        large = build(ps, 6)
        np.testing.assert_allclose(large.basis[:, :3], small.basis, atol=1e-12)


class TestEvaluate:
    def test_training_point_reproduces_projection(self):
        rng = np.random.default_rng(2)
        mus = rng.uniform(-1, 1, size=(8, 3))
        snaps = rng.standard_normal((25, 8))
        ps = ParametricSnapshotSet(parameters=mus, snapshots=snaps)
        for scheme, n in (("rbf", 4),):
            model = build(ps, n, scheme=scheme)
            for i in range(8):
                want = model.basis @ (model.basis.T @ snaps[:, i])
                got = evaluate(model, mus[i])
                assert np.linalg.norm(got - want) <= 1e-8 * max(
                    1.0, np.linalg.norm(snaps[:, i])
                )

    def test_affine_exactness_scalar_parameter(self):
        mus = np.linspace(0.0, 1.0, 5)[:, None]
        ps, v0, v1 = affine_family(mus)
        model = build(ps, 2)
        rng = np.random.default_rng(3)
        for m in rng.uniform(0, 1, 50):
            got = evaluate(model, [m])
            want = v0 + m * v1
            assert np.linalg.norm(got - want) <= 1e-8 * np.linalg.norm(want)

    def test_linear_scaling_midpoint(self):
        v = np.array([3.0, 4.0])
        ps = ParametricSnapshotSet(
            parameters=np.array([[0.0], [1.0]]),
            snapshots=np.stack([0 * v, v], axis=1),
        )
        model = build(ps, 1)
        np.testing.assert_allclose(evaluate(model, [0.5]), 0.5 * v, atol=1e-10)

    def test_constant_field_any_parameter(self):
        v = np.array([1.0, 2.0, 2.0])
        ps = ParametricSnapshotSet(
            parameters=np.linspace(0, 1, 4)[:, None],
            snapshots=np.tile(v[:, None], (1, 4)),
        )
        model = build(ps, 1)
        np.testing.assert_allclose(evaluate(model, [0.37]), v, atol=1e-10)

    def test_outside_box_clamps_with_warning(self):
        ps, v0, v1 = affine_family(np.linspace(0.0, 1.0, 5)[:, None])
        model = build(ps, 2)
        with pytest.warns(RuntimeWarning, match="clamped"):
            got = evaluate(model, [2.0])
        np.testing.assert_allclose(got, v0 + 1.0 * v1, atol=1e-8)

    def test_dimension_mismatch(self):
        ps, *_ = affine_family(np.linspace(0, 1, 5)[:, None])
        model = build(ps, 1)
        with pytest.raises(ValueError):
            evaluate(model, [0.1, 0.2])

    def test_rbf_affine_exactness_multiparam(self):
        # affine snapshots over 2 parameters; TPS + linear tail is exact
        rng = np.random.default_rng(4)
        v0, v1, v2 = rng.standard_normal((3, 30))
        mus = rng.uniform(-1, 1, size=(12, 2))
        snaps = np.stack([v0 + m[0] * v1 + m[1] * v2 for m in mus], axis=1)
        model = build(ParametricSnapshotSet(parameters=mus, snapshots=snaps), 3)
        lo, hi = mus.min(axis=0), mus.max(axis=0)
        for m in lo + rng.uniform(0, 1, size=(20, 2)) * (hi - lo):
            want = v0 + m[0] * v1 + m[1] * v2
            got = evaluate(model, m)
            assert np.linalg.norm(got - want) <= 1e-7 * np.linalg.norm(want)


class TestDecay:
    def test_rank_one(self):
        ps, *_ = affine_family(np.linspace(0, 1, 5)[:, None])
        snaps = np.tile(ps.snapshots[:, :1], (1, 5))
        const = ParametricSnapshotSet(
            parameters=np.linspace(0, 1, 5)[:, None], snapshots=snaps
        )
        rows = decay_report(build(const, 1))
        assert rows[0] == (1, 1.0)
        assert all(r[1] <= 1e-12 for r in rows[1:])

    def test_hand_ratios(self):
        snaps = np.diag([4.0, 2.0, 1.0])
        ps = ParametricSnapshotSet(
            parameters=np.arange(3.0)[:, None], snapshots=snaps
        )
        rows = decay_report(build(ps, 3))
        np.testing.assert_allclose([r[1] for r in rows], [1.0, 0.5, 0.25])

    def test_projection_optimality(self):
        rng = np.random.default_rng(8)
        x = rng.standard_normal((200, 30))
        ps = ParametricSnapshotSet(
            parameters=np.arange(30.0)[:, None], snapshots=x
        )
        n = 7
        model = build(ps, n)
        err = np.linalg.norm(x - model.basis @ (model.basis.T @ x), "fro") ** 2
        tail = np.sum(model.singular_values[n:] ** 2)
        assert abs(err - tail) <= 1e-8 * np.sum(model.singular_values**2)


class TestPersistence:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(6)
        mus = rng.uniform(-1, 1, size=(4, 2))
        snaps = rng.standard_normal((10, 4))
        ps = ParametricSnapshotSet(parameters=mus, snapshots=snaps)
        manifest = save_snapshot_set(ps, tmp_path / "run")
        back = load_snapshot_set(manifest)
        np.testing.assert_array_equal(back.parameters, ps.parameters)
        np.testing.assert_array_equal(back.snapshots, ps.snapshots)

    def test_decay_csv(self, tmp_path):
        ps, *_ = affine_family(np.linspace(0, 1, 5)[:, None])
        model = build(ps, 2)
        path = tmp_path / "decay.csv"
        save_decay_csv(model, path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# schema:")
        assert lines[1] == "index,sigma,sigma_normalized"
        first = lines[2].split(",")
        assert first[0] == "1" and float(first[2]) == 1.0
