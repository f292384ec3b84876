import numpy as np
import pytest
from scipy.spatial import ConvexHull

import oracles
from helpers import (
    antipodal_patch_frame,
    dyadic_frame,
    octahedral_rotations,
    random_frame,
    rotate_frame,
    translate_frame,
    two_point_pinch_frame,
)
from softgrasp import (
    ContactPoint,
    GravityConfig,
    InvalidInputError,
    TrajectoryFrame,
    UndefinedCorrelationWarning,
    WrenchSpaceConfig,
    build_gws,
    contact_centroid,
    desired_force_index,
    epsilon_metric,
    fibonacci_sphere,
    frame_wrenches,
    gravity_directions,
    gravity_polytope,
    gravity_resistant_quality,
    instability_proxy,
    min_facet_distance,
    monotonicity,
    quality_trace,
    saturation_index,
    volume_metric,
)


def frame_with_forces(frame, k):
    contacts = tuple(
        ContactPoint(position=c.position, normal=c.normal, force=k * c.force)
        for c in frame.contacts
    )
    return TrajectoryFrame(
        time=frame.time,
        contacts=contacts,
        squeeze_force=frame.squeeze_force,
        com=frame.com,
        mass=frame.mass,
    )


def with_mass(frame, mass):
    return TrajectoryFrame(
        time=frame.time,
        contacts=frame.contacts,
        squeeze_force=frame.squeeze_force,
        com=frame.com,
        mass=mass,
    )


class TestDirections:
    def test_fibonacci_sphere_unit(self):
        d = fibonacci_sphere(16)
        assert d.shape == (16, 3)
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-12)

    def test_fibonacci_sphere_spread(self):
        # near-uniform lattice: no two directions closer than ~half the
        # mean spacing for K = 16
        d = fibonacci_sphere(16)
        dots = d @ d.T
        np.fill_diagonal(dots, -1.0)
        assert np.max(dots) < 0.95

    def test_gravity_config_defaults(self):
        g = GravityConfig()
        assert g.num_directions == 16
        assert g.gravity_accel == 9.81
        assert gravity_directions(g).shape == (16, 3)

    def test_gravity_config_validation(self):
        with pytest.raises(InvalidInputError):
            GravityConfig(num_directions=3)
        with pytest.raises(InvalidInputError):
            GravityConfig(gravity_accel=0.0)
        with pytest.raises(InvalidInputError):
            GravityConfig(direction_set="custom", custom_directions=[[1.0, 1.0, 0.0]])

    def test_custom_directions(self):
        dirs = np.array([[1.0, 0, 0], [-1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
        g = GravityConfig(direction_set="custom", custom_directions=dirs)
        assert np.allclose(gravity_directions(g), dirs)
        assert g.num_directions == 4


class TestEpsilonVolume:
    def test_single_contact_epsilon_zero(self):
        c = ContactPoint(position=(0, 0, 0), normal=(0, 0, 1.0), force=(0, 0, 1.0))
        f = TrajectoryFrame(time=0.0, contacts=(c,), squeeze_force=1.0, com=(0, 0, 0), mass=1.0)
        assert epsilon_metric(f, WrenchSpaceConfig(friction_mu=0.0)) == 0.0
        assert volume_metric(f, WrenchSpaceConfig(friction_mu=0.0)) == 0.0

    def test_antipodal_patch_epsilon_vs_oracle(self):
        cfg = WrenchSpaceConfig(friction_mu=0.5, cone_edges=8)
        f = antipodal_patch_frame()
        eps = epsilon_metric(f, cfg)
        assert eps > 0.0
        p = build_gws(f, cfg)
        wrenches = frame_wrenches(f, cfg)
        oracle = min(
            oracles.bisect_ray_exit(wrenches, n, tol=1e-10) for n in p.facet_normals
        )
        assert eps == pytest.approx(oracle, abs=1e-6)

    def test_rotation_invariance(self, rng):
        cfg = WrenchSpaceConfig()
        f = random_frame(rng, 4)
        e0 = epsilon_metric(f, cfg)
        v0 = volume_metric(f, cfg)
        for r in octahedral_rotations()[:4]:
            g = rotate_frame(f, r)
            assert epsilon_metric(g, cfg) == pytest.approx(e0, abs=1e-9)
            assert volume_metric(g, cfg) == pytest.approx(v0, rel=1e-9)

    def test_volume_scales_as_force_sixth_power(self, rng):
        cfg = WrenchSpaceConfig(force_normalization="reported-force")
        f = random_frame(rng, 4)
        v1 = volume_metric(f, cfg)
        v2 = volume_metric(frame_with_forces(f, 2.0), cfg)
        assert v2 == pytest.approx(64.0 * v1, rel=1e-6)

    def test_volume_vs_monte_carlo(self, rng):
        cfg = WrenchSpaceConfig()
        f = random_frame(rng, 4)
        vol = volume_metric(f, cfg)
        wrenches = frame_wrenches(f, cfg)
        hull = ConvexHull(wrenches)  # independent H-representation
        a = hull.equations[:, :-1]
        b = hull.equations[:, -1]
        verts = wrenches[hull.vertices]
        lo, hi = verts.min(axis=0), verts.max(axis=0)
        box = float(np.prod(hi - lo))
        n_total, hits = 1_000_000, 0
        for _ in range(10):
            s = rng.uniform(lo, hi, size=(n_total // 10, 6))
            hits += int(np.sum(np.all(s @ a.T + b <= 1e-12, axis=1)))
        mc = box * hits / n_total
        assert vol == pytest.approx(mc, rel=0.02)


class TestGravityPolytope:
    def test_zero_mass_degenerate(self):
        p = gravity_polytope(0.0, (0, 0, 0), (0, 0, 0), 1.0, GravityConfig())
        assert not p.is_full_dimensional

    def test_zero_arm_force_subspace(self):
        p = gravity_polytope(1.0, (0.3, 0.2, 0.1), (0.3, 0.2, 0.1), 1.0, GravityConfig())
        assert p.affine_rank <= 3
        assert np.allclose(np.asarray(p.vertices)[:, 3:], 0.0, atol=1e-15)

    def test_unit_mass_force_norms(self):
        p = gravity_polytope(1.0, (0, 0, 0), (0, 0, 0), 1.0, GravityConfig())
        v = np.asarray(p.vertices)
        norms = np.linalg.norm(v[:, :3], axis=1)
        nonzero = norms > 1e-12
        assert np.allclose(norms[nonzero], 9.81, atol=1e-9)

    def test_negative_mass_rejected(self):
        with pytest.raises(InvalidInputError):
            gravity_polytope(-1.0, (0, 0, 0), (0, 0, 0), 1.0, GravityConfig())


class TestGravityQuality:
    def test_degenerate_frame_zero(self):
        c = ContactPoint(position=(0, 0, 0), normal=(0, 0, 1.0), force=(0, 0, 1.0))
        f = TrajectoryFrame(time=0.0, contacts=(c,), squeeze_force=1.0, com=(0, 0, 0), mass=1.0)
        assert gravity_resistant_quality(f, WrenchSpaceConfig(friction_mu=0.0), GravityConfig()) == 0.0

    def test_two_point_pinch_zero(self):
        f = two_point_pinch_frame()
        assert gravity_resistant_quality(f, WrenchSpaceConfig(), GravityConfig()) == 0.0

    def test_cap_limited_regime_exact(self):
        # huge reported forces make the hull enormous; with com at the
        # centroid every ray caps at exactly m*g
        f = antipodal_patch_frame(force_scale=1e4, mass=0.1)
        cfg = WrenchSpaceConfig(friction_mu=0.5, force_normalization="reported-force")
        q = gravity_resistant_quality(f, cfg, GravityConfig())
        assert q == pytest.approx(0.1 * 9.81, rel=1e-12)

    def test_cap_law(self, rng):
        cfg = WrenchSpaceConfig()
        gcfg = GravityConfig()
        for _ in range(20):
            f = random_frame(rng, 4)
            q = gravity_resistant_quality(f, cfg, gcfg)
            arm = f.com - contact_centroid(f)
            dirs = gravity_directions(gcfg)
            v = np.hstack([dirs, np.cross(np.broadcast_to(arm, dirs.shape), dirs)])
            max_cap = f.mass * gcfg.gravity_accel * np.linalg.norm(v, axis=1).max()
            assert q <= max_cap + 1e-12

    def test_vs_subspace_oracle(self, rng):
        cfg = WrenchSpaceConfig(friction_mu=0.5, cone_edges=8)
        gcfg = GravityConfig()
        frames = [antipodal_patch_frame()] + [random_frame(rng, 4) for _ in range(10)]
        for f in frames:
            q = gravity_resistant_quality(f, cfg, gcfg)
            oracle = oracles.subspace_gravity_quality(
                frame_wrenches(f, cfg),
                f.com - contact_centroid(f),
                cfg.torque_scale_rho,
                gravity_directions(gcfg),
                f.mass,
                gcfg.gravity_accel,
            )
            assert q == pytest.approx(oracle, rel=1e-4, abs=1e-12)

    def test_mass_error(self, rng):
        f = random_frame(rng, 4)
        bad = TrajectoryFrame(
            time=0.0, contacts=f.contacts, squeeze_force=1.0, com=f.com, mass=1.0
        )
        object.__setattr__(bad, "mass", 0.0)  # bypass constructor check
        with pytest.raises(InvalidInputError):
            gravity_resistant_quality(bad, WrenchSpaceConfig(), GravityConfig())

    def test_translation_invariance(self, rng):
        cfg = WrenchSpaceConfig()
        gcfg = GravityConfig()
        for _ in range(5):
            f = dyadic_frame(rng, 4)
            t = rng.integers(-16, 17, size=3) / 8.0
            q0 = gravity_resistant_quality(f, cfg, gcfg)
            q1 = gravity_resistant_quality(translate_frame(f, t), cfg, gcfg)
            assert q0 == q1  # bitwise: arms reproduce exactly on the grid


class TestInstabilityProxy:
    def test_degenerate_zero(self):
        f = two_point_pinch_frame()
        assert instability_proxy(f, WrenchSpaceConfig(), fibonacci_sphere(8)) == 0.0

    def test_mass_halves_proxy(self, rng):
        cfg = WrenchSpaceConfig()
        dirs = fibonacci_sphere(8)
        f = random_frame(rng, 4)
        p1 = instability_proxy(f, cfg, dirs)
        p2 = instability_proxy(with_mass(f, 2.0 * f.mass), cfg, dirs)
        assert p2 == pytest.approx(0.5 * p1, rel=1e-15)

    def test_symmetric_grasp_direction_symmetry(self):
        f = antipodal_patch_frame()
        cfg = WrenchSpaceConfig(friction_mu=0.5, cone_edges=8)
        d = np.array([[0.3, -0.5, 0.81]])
        d /= np.linalg.norm(d)
        p_fwd = instability_proxy(f, cfg, d)
        p_bwd = instability_proxy(f, cfg, -d)
        assert p_fwd == pytest.approx(p_bwd, abs=1e-9)

    def test_min_direction_bounds_mean(self, rng):
        cfg = WrenchSpaceConfig()
        dirs = fibonacci_sphere(16)
        f = random_frame(rng, 4)
        per_dir = [instability_proxy(f, cfg, dirs[i : i + 1]) for i in range(16)]
        mean_proxy = instability_proxy(f, cfg, dirs)
        assert min(per_dir) <= mean_proxy + 1e-12

    def test_non_unit_dirs_rejected(self, rng):
        f = random_frame(rng, 4)
        with pytest.raises(InvalidInputError):
            instability_proxy(f, WrenchSpaceConfig(), np.array([[1.0, 1.0, 0.0]]))


class TestMonotonicity:
    def test_identical_rankings(self):
        assert monotonicity([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(100.0)

    def test_reversed_rankings(self):
        assert monotonicity([4, 3, 2, 1], [10, 20, 30, 40]) == pytest.approx(-100.0)

    def test_constant_series_nan_with_warning(self):
        with pytest.warns(UndefinedCorrelationWarning):
            out = monotonicity([1.0, 1.0, 1.0], [1, 2, 3])
        assert np.isnan(out)

    def test_ties_use_average_ranks(self):
        # scipy reference value for a tied series
        from scipy import stats

        a = [1.0, 2.0, 2.0, 3.0]
        b = [1.0, 2.0, 3.0, 4.0]
        assert monotonicity(a, b) == pytest.approx(stats.spearmanr(a, b).statistic * 100)

    def test_errors(self):
        with pytest.raises(InvalidInputError):
            monotonicity([1, 2], [1, 2])
        with pytest.raises(InvalidInputError):
            monotonicity([1, 2, 3], [1, 2])
        with pytest.raises(InvalidInputError):
            monotonicity([1, 2, np.inf], [1, 2, 3])


class TestSaturation:
    def test_plateau_detection(self):
        v = np.array([1.0, 2.0, 3.0, 3.01, 3.02, 3.0])
        assert saturation_index(v) == 2

    def test_still_rising(self):
        assert saturation_index(np.array([1.0, 2.0, 3.0, 4.0])) is None

    def test_last_frame_never_counts(self):
        assert saturation_index(np.array([1.0, 2.0])) is None
        assert saturation_index(np.array([2.0, 1.0])) == 0

    def test_all_zero(self):
        assert saturation_index(np.zeros(4)) == 0

    def test_desired_force_index(self):
        frames = [
            antipodal_patch_frame(force_scale=k, time=float(k)) for k in (1.0, 2.0, 3.0)
        ]
        assert desired_force_index(frames, 4.5) == 2
        assert desired_force_index(frames, 100.0) is None


class TestQualityTrace:
    def make_trajectory(self, scales):
        return [
            antipodal_patch_frame(force_scale=s, time=0.1 * (i + 1))
            for i, s in enumerate(scales)
        ]

    def test_identical_frames_constant_trace(self):
        traj = self.make_trajectory([1.0, 1.0, 1.0])
        cfg = WrenchSpaceConfig(friction_mu=0.5)
        trace = quality_trace(traj, "epsilon", cfg)
        assert np.allclose(trace.values, trace.values[0])
        assert trace.saturation_force == pytest.approx(traj[0].squeeze_force)

    def test_growing_contacts_nondecreasing_epsilon(self, rng):
        cfg = WrenchSpaceConfig()
        base = random_frame(rng, 3, time=0.1)
        frames = [base]
        contacts = list(base.contacts)
        for i in range(3):
            x = rng.uniform(-1, 1, 3)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            contacts = contacts + [ContactPoint(position=x, normal=n, force=n)]
            frames.append(
                TrajectoryFrame(
                    time=0.1 * (i + 2),
                    contacts=tuple(contacts),
                    squeeze_force=base.squeeze_force,
                    com=base.com,
                    mass=base.mass,
                )
            )
        trace = quality_trace(frames, "epsilon", cfg)
        assert np.all(np.diff(trace.values) >= -1e-12)

    def test_gravity_and_proxy_traces(self):
        traj = self.make_trajectory([1.0, 2.0, 3.0])
        cfg = WrenchSpaceConfig(friction_mu=0.5, force_normalization="reported-force")
        tg = quality_trace(traj, "gravity", cfg, GravityConfig())
        tp = quality_trace(traj, "proxy", cfg, GravityConfig())
        assert tg.values.shape == (3,)
        assert tp.values.shape == (3,)
        assert np.all(np.diff(tg.values) >= -1e-12)

    def test_unknown_metric(self):
        with pytest.raises(InvalidInputError):
            quality_trace(self.make_trajectory([1.0]), "bogus", WrenchSpaceConfig())

    def test_time_ordering_enforced(self):
        f1 = antipodal_patch_frame(time=1.0)
        f2 = antipodal_patch_frame(time=1.0)
        with pytest.raises(InvalidInputError):
            quality_trace([f1, f2], "epsilon", WrenchSpaceConfig())

    def test_empty_trajectory(self):
        with pytest.raises(InvalidInputError):
            quality_trace([], "epsilon", WrenchSpaceConfig())


class TestHullMonotonicityAcrossMetrics:
    def test_adding_contact_never_decreases_any_metric(self, rng):
        cfg = WrenchSpaceConfig()
        gcfg = GravityConfig()
        for _ in range(5):
            f = random_frame(rng, 4)
            x = rng.uniform(-1, 1, 3)
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            bigger = TrajectoryFrame(
                time=f.time,
                contacts=f.contacts + (ContactPoint(position=x, normal=n, force=n),),
                squeeze_force=f.squeeze_force,
                com=f.com,
                mass=f.mass,
            )
            # same centroid is required for hull nesting; rebuild the small
            # frame's wrench set about the bigger frame's centroid instead
            cen = contact_centroid(bigger)
            small_w = []
            from softgrasp import friction_pyramid as fp

            for c in f.contacts:
                edges = fp(c.normal, cfg.friction_mu, cfg.cone_edges)
                arm = c.position - cen
                small_w.append(
                    np.hstack([edges, np.cross(np.broadcast_to(arm, edges.shape), edges)])
                )
            small_w.append(np.zeros((1, 6)))
            from softgrasp import convex_hull, polytope_volume

            small = convex_hull(np.vstack(small_w), 6)
            big = build_gws(bigger, cfg)
            assert min_facet_distance(big) >= min_facet_distance(small) - 1e-12
            assert polytope_volume(big) >= polytope_volume(small) - 1e-12
