import math

import numpy as np
import pytest

from adwave.dynamics import (
    BlowUpError,
    FieldState,
    SimConfig,
    TestField as WeakTestField,
    apriori_l2_bound,
    bump_field,
    constant_field,
    constant_trajectory,
    energy,
    energy_drift_tolerance,
    scale_to_hs,
    sine_field,
    simulate,
    stability_limit,
    step,
    sup_bound_from_energy,
    weak_residual,
    window_one,
    window_sin_sq,
    zero_field,
)
from adwave.potentials import (
    clipped_quadratic,
    linear_taper_family,
    mollified_family,
    ball_potential,
    zero_potential,
)
from adwave.spectral import (
    NEUMANN_1D,
    PERIODIC,
    Domain,
    build_operator,
    embedding_constant,
    hs_norm,
    l2_norm,
)




def periodic_domain(n=64, s=1.0, length=2 * np.pi):
    return Domain(d=1, s=s, omega_extent=length, n=n, pad_factor=1.0,
                  boundary_mode=PERIODIC)


def neumann_domain(n=64, L=1.0):
    return Domain(d=1, s=1.0, omega_extent=L, n=n, pad_factor=1.0,
                  boundary_mode=NEUMANN_1D)


def dirichlet_domain(n=128, length=2 * np.pi, s=1.0):
    return Domain(d=1, s=s, omega_extent=length, n=n, pad_factor=2.0)


class TestEnergy:
    def test_zero_state(self):
        dom = periodic_domain()
        op = build_operator(dom)
        e = energy(op, clipped_quadratic(1.0), FieldState(zero_field(dom), zero_field(dom)))
        assert e.kinetic == e.elastic == e.adhesive == e.total == 0.0

    def test_constant_one_neumann(self):
        L = 1.5
        dom = neumann_domain(n=64, L=L)
        op = build_operator(dom)
        st = FieldState(constant_field(dom, 1.0), zero_field(dom))
        e = energy(op, clipped_quadratic(1.0), st)
        assert e.kinetic == 0.0
        assert e.elastic <= 1e-20
        assert e.adhesive == pytest.approx(L, rel=1e-14)
        assert e.total == e.kinetic + e.elastic + e.adhesive

    def test_adhesive_restricted_to_interior(self):
        # a potential with W(0) > 0 contributes only over Omega, measured
        # by the rectangle rule on the strict-interior grid points
        dom = dirichlet_domain(n=128, length=1.0)
        op = build_operator(dom)
        W = mollified_family(clipped_quadratic(1.0)).make(0.2)
        floor = float(W.value(0.0))
        st = FieldState(zero_field(dom), zero_field(dom))
        e = energy(op, W, st)
        omega_h = float(dom.interior_mask.sum()) * dom.cell_volume
        assert e.adhesive == pytest.approx(floor * omega_h, rel=1e-12)
        assert omega_h == pytest.approx(1.0, abs=2 * dom.h[0])  # |Omega| = 1

    def test_masked_sine_elastic_matches_derivative(self):
        L = 1.0
        dom = dirichlet_domain(n=1024, length=L)
        op = build_operator(dom)
        lo, hi = dom.omega_bounds[0]
        x = dom.axes()[0]
        u = np.where((x > lo) & (x < hi), np.sin(np.pi * (x - lo) / L), 0.0)
        st = FieldState(u, zero_field(dom))
        e = energy(op, zero_potential(), st)
        exact = 0.5 * (np.pi / L) ** 2 * (L / 2.0)
        assert e.elastic == pytest.approx(exact, rel=2e-2)

    def test_parts_nonnegative(self):
        rng = np.random.default_rng(0)
        dom = dirichlet_domain(n=64)
        op = build_operator(dom)
        from adwave.spectral import mask_exterior
        u = mask_exterior(dom, rng.standard_normal(64))
        v = mask_exterior(dom, rng.standard_normal(64))
        e = energy(op, clipped_quadratic(1.0), FieldState(u, v))
        assert e.kinetic >= 0 and e.elastic >= 0 and e.adhesive >= 0


class TestStep:
    def test_linear_wave_second_order(self):
        dom = periodic_domain(n=64)
        u0, v0 = sine_field(dom, k=3), zero_field(dom)
        errs = []
        for dt in (0.01, 0.005):
            cfg = SimConfig(domain=dom, potential=zero_potential(), T=2.0,
                            dt=dt, u0=u0, v0=v0, record_every=10 ** 6)
            traj = simulate(cfg)
            exact = math.cos(3.0 * traj.times[-1]) * u0
            errs.append(float(np.max(np.abs(traj.states[-1].u - exact))))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_fractional_dispersion_against_fine_reference(self):
        # s = 0.5 mode: closed-form cos(|xi|^s t) checked against an
        # independent run at 50x finer dt.
        dom = periodic_domain(n=32, s=0.5)
        u0, v0 = sine_field(dom, k=4), zero_field(dom)
        T = 1.5
        coarse = simulate(SimConfig(domain=dom, potential=zero_potential(),
                                    T=T, dt=0.01, u0=u0, v0=v0,
                                    record_every=10 ** 6))
        fine = simulate(SimConfig(domain=dom, potential=zero_potential(),
                                  T=T, dt=0.0002, u0=u0, v0=v0,
                                  record_every=10 ** 6))
        exact = math.cos(2.0 * T) * u0  # |xi_4|^(1/2) = 2 on the 2 pi box
        err_exact = np.max(np.abs(fine.states[-1].u - exact))
        assert err_exact <= 1e-6
        err_coarse = np.max(np.abs(coarse.states[-1].u - exact))
        assert err_coarse <= 5e-4

    def test_flat_state_is_equilibrium(self):
        eps = 0.25
        member = linear_taper_family().make(eps)
        dom = neumann_domain(n=32, L=1.0)
        op = build_operator(dom)
        st = FieldState(constant_field(dom, 1.0 + eps), zero_field(dom))
        out = step(st, op, member, 0.001)
        assert np.max(np.abs(out.u - (1.0 + eps))) <= 1e-14
        assert np.max(np.abs(out.v)) <= 1e-12

    def test_zero_data_stays_zero(self):
        dom = dirichlet_domain(n=64)
        cfg = SimConfig(domain=dom, potential=clipped_quadratic(1.0), T=1.0,
                        dt=0.01, u0=zero_field(dom), v0=zero_field(dom))
        traj = simulate(cfg)
        assert all(np.max(np.abs(st.u)) == 0.0 for st in traj.states)
        assert all(e.total == 0.0 for e in traj.energies)

    def test_constant_with_zero_gradient_fixed_in_neumann(self):
        dom = neumann_domain(n=32)
        op = build_operator(dom)
        W = clipped_quadratic(1.0)
        assert W.grad(2.0) == 0.0
        st = FieldState(constant_field(dom, 2.0), zero_field(dom))
        out = step(st, op, W, 0.005)
        assert np.max(np.abs(out.u - 2.0)) <= 1e-13

    def test_time_reversibility(self):
        dom = dirichlet_domain(n=64)
        W = mollified_family(clipped_quadratic(1.0)).make(0.1)
        op = build_operator(dom)
        u0 = bump_field(dom, amplitude=0.5)
        v0 = zero_field(dom)
        dt = 0.9 * stability_limit(op, W)
        state = FieldState(u0.copy(), v0.copy())
        n = 400
        for _ in range(n):
            state = step(state, op, W, dt)
        state = FieldState(state.u, -state.v)
        for _ in range(n):
            state = step(state, op, W, dt)
        assert np.max(np.abs(state.u - u0)) <= 1e-10
        assert np.max(np.abs(-state.v - v0)) <= 1e-10

    def test_exterior_stays_exactly_zero(self):
        dom = dirichlet_domain(n=128)
        W = mollified_family(clipped_quadratic(1.0)).make(0.1)
        cfg = SimConfig(domain=dom, potential=W, T=2.0, dt=0.05,
                        u0=bump_field(dom, 0.8), v0=zero_field(dom),
                        record_every=3)
        traj = simulate(cfg)
        outside = ~dom.interior_mask
        for st in traj.states:
            assert np.max(np.abs(st.u[outside])) == 0.0
            assert np.max(np.abs(st.v[outside])) == 0.0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_detected_in_step(self):
        dom = periodic_domain(n=64)
        op = build_operator(dom)
        W = zero_potential()
        dt = 10.0 / math.sqrt(float(np.max(op.symbol)))
        state = FieldState(sine_field(dom, k=31, amplitude=1.0), zero_field(dom))
        with pytest.raises(BlowUpError):
            for _ in range(10_000):
                state = step(state, op, W, dt)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_blowup_reports_step_index(self):
        dom = periodic_domain(n=64)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=300.0,
                        dt=0.5, u0=sine_field(dom, k=31), v0=zero_field(dom),
                        enforce_cfl=False)
        with pytest.raises(BlowUpError) as info:
            simulate(cfg)
        assert info.value.step is not None and 0 < info.value.step < 300

    def test_vector_valued_run(self):
        dom = dirichlet_domain(n=64)
        W = ball_potential(2)
        u0 = np.stack([bump_field(dom, 0.3), bump_field(dom, -0.2)], axis=-1)
        cfg = SimConfig(domain=dom, potential=W, T=1.0, dt=0.02,
                        u0=u0, v0=np.zeros_like(u0), record_every=10)
        traj = simulate(cfg)
        assert traj.states[-1].u.shape == (64, 2)
        assert np.all(np.isfinite(traj.states[-1].u))


class TestSimConfig:
    def test_cfl_violation_rejected(self):
        dom = periodic_domain(n=256)
        with pytest.raises(ValueError, match="stability"):
            SimConfig(domain=dom, potential=zero_potential(), T=1.0, dt=0.5,
                      u0=zero_field(dom), v0=zero_field(dom))

    def test_unmasked_data_rejected(self):
        dom = dirichlet_domain(n=64)
        with pytest.raises(ValueError, match="vanish outside"):
            SimConfig(domain=dom, potential=zero_potential(), T=1.0, dt=0.001,
                      u0=np.ones(64), v0=zero_field(dom))

    def test_mismatched_components_rejected(self):
        dom = periodic_domain(n=32)
        with pytest.raises(ValueError, match="components"):
            SimConfig(domain=dom, potential=ball_potential(2), T=1.0, dt=0.001,
                      u0=zero_field(dom), v0=zero_field(dom))

    def test_trajectory_time_grid(self):
        dom = periodic_domain(n=32)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=1.0, dt=0.01,
                        u0=sine_field(dom, 1), v0=zero_field(dom), record_every=7)
        traj = simulate(cfg)
        assert traj.times[0] == 0.0
        assert abs(traj.times[-1] - 1.0) <= cfg.dt / 2
        assert np.all(np.diff(traj.times) > 0)
        assert len(traj.states) == len(traj.times) == len(traj.energies)


class TestEnergyInequality:
    def test_drift_bounded_and_second_order(self):
        dom = dirichlet_domain(n=64)
        W = mollified_family(clipped_quadratic(1.0)).make(0.1)
        op = build_operator(dom)
        base_dt = 0.9 * stability_limit(op, W)
        drifts = []
        for dt in (base_dt, base_dt / 2):
            cfg = SimConfig(domain=dom, potential=W, T=5.0, dt=dt,
                            u0=bump_field(dom, 0.5), v0=zero_field(dom),
                            record_every=2)
            traj = simulate(cfg)
            totals = traj.totals
            assert np.max(totals - totals[0]) <= energy_drift_tolerance(cfg)
            drifts.append(np.max(np.abs(totals - totals[0])))
        assert drifts[0] / drifts[1] == pytest.approx(4.0, rel=0.5)


class TestWeakResidual:
    def test_linear_wave_residual_refines(self):
        dom = periodic_domain(n=64)
        W = zero_potential()
        # bump centered off the box midpoint: every sine mode is odd about
        # the midpoint, so a centered bump would be orthogonal to it
        psi = bump_field(dom, 1.0, width_frac=0.5, center=[2.0])
        vals = []
        for dt in (0.02, 0.01):
            cfg = SimConfig(domain=dom, potential=W, T=2.0, dt=dt,
                            u0=sine_field(dom, 2), v0=zero_field(dom),
                            record_every=1)
            traj = simulate(cfg)
            tf = WeakTestField(psi=psi, window=window_sin_sq(2.0))
            vals.append(abs(weak_residual(traj, [tf], W)[0]))
        assert vals[1] < vals[0]
        assert vals[0] / vals[1] > 2.5

    def test_constant_limit_residual_chi_one(self):
        dom = neumann_domain(n=64, L=1.0)
        times = np.linspace(0.0, 10.0, 501)
        W = clipped_quadratic(1.0)
        traj = constant_trajectory(dom, W, 1.0, times)
        tf = WeakTestField(psi=np.ones(dom.n), window=window_one())
        res = weak_residual(traj, [tf], W)[0]
        assert res == pytest.approx(2.0 * 10.0 * 1.0, rel=1e-12)

    def test_constant_limit_residual_windowed(self):
        # chi = sin^2(pi t / T): integral T/2, exact under the trapezoid
        # rule on a uniform grid spanning the full period.
        dom = neumann_domain(n=64, L=1.0)
        T = 4.0
        times = np.linspace(0.0, T, 801)
        W = clipped_quadratic(1.0)
        traj = constant_trajectory(dom, W, 1.0, times)
        psi = np.ones(dom.n)
        tf = WeakTestField(psi=psi, window=window_sin_sq(T))
        res = weak_residual(traj, [tf], W)[0]
        assert res == pytest.approx(2.0 * (T / 2.0) * 1.0, rel=1e-10)

    def test_taper_flat_state_residual_zero(self):
        eps = 0.3
        member = linear_taper_family().make(eps)
        dom = neumann_domain(n=32, L=1.0)
        times = np.linspace(0.0, 5.0, 101)
        traj = constant_trajectory(dom, member, 1.0 + eps, times)
        tf = WeakTestField(psi=np.ones(dom.n), window=window_one())
        assert abs(weak_residual(traj, [tf], member)[0]) <= 1e-12

    def test_unsupported_test_field_rejected(self):
        dom = dirichlet_domain(n=64)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=0.1, dt=0.01,
                        u0=zero_field(dom), v0=zero_field(dom))
        traj = simulate(cfg)
        tf = WeakTestField(psi=np.ones(64), window=window_one())
        with pytest.raises(ValueError, match="supported in Omega"):
            weak_residual(traj, [tf], zero_potential())


class TestAprioriBounds:
    def test_zero_energy(self):
        assert apriori_l2_bound(0.0, 0.3, 7.0) == 0.3

    def test_formula(self):
        assert apriori_l2_bound(2.0, 0.1, 3.0) == pytest.approx(0.1 + 3.0 * 2.0)

    def test_rejects_negative_energy(self):
        with pytest.raises(ValueError):
            apriori_l2_bound(-1.0, 0.0, 1.0)

    def test_holds_along_linear_wave(self):
        dom = periodic_domain(n=64)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=3.0, dt=0.01,
                        u0=sine_field(dom, 2, amplitude=0.3),
                        v0=zero_field(dom), record_every=5)
        traj = simulate(cfg)
        bound = apriori_l2_bound(traj.energies[0].total,
                                 l2_norm(dom, cfg.u0), 3.0)
        measured = max(l2_norm(dom, st.u) for st in traj.states)
        assert measured <= bound

    def test_sup_bound_zero_trajectory(self):
        dom = dirichlet_domain(n=64)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=0.5, dt=0.01,
                        u0=zero_field(dom), v0=zero_field(dom))
        traj = simulate(cfg)
        assert sup_bound_from_energy(traj) == 0.0

    def test_sup_bound_single_mode(self):
        dom = periodic_domain(n=64)
        op = build_operator(dom)
        u0 = sine_field(dom, 3, amplitude=0.1)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=0.05,
                        dt=0.05, u0=u0, v0=zero_field(dom))
        traj = simulate(cfg)
        const = embedding_constant(1, 1.0)
        expected_floor = const * hs_norm(op, u0)
        bound = sup_bound_from_energy(traj)
        assert bound >= expected_floor * (1 - 1e-10)
        assert traj.max_abs() <= bound

    def test_sup_bound_requires_embedding_regime(self):
        dom = periodic_domain(n=32, s=0.5)
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=0.05,
                        dt=0.01, u0=sine_field(dom, 1), v0=zero_field(dom))
        traj = simulate(cfg)
        with pytest.raises(ValueError, match="2s > d"):
            sup_bound_from_energy(traj)


class TestHigherDimensions:
    def test_2d_mode_oscillates_at_symbol_frequency(self):
        # sin(x) sin(y) mixes the four modes (+-1, +-1), all with the same
        # symbol value 2^s, so it stays an eigenfunction of the evolution.
        s = 0.75
        dom = Domain(d=2, s=s, omega_extent=2 * np.pi, n=32, pad_factor=1.0,
                     boundary_mode=PERIODIC)
        grids = dom.grids()
        u0 = np.sin(grids[0]) * np.sin(grids[1])
        T = 1.5
        cfg = SimConfig(domain=dom, potential=zero_potential(), T=T, dt=0.002,
                        u0=u0, v0=np.zeros(dom.n), record_every=10 ** 6)
        traj = simulate(cfg)
        omega = 2.0 ** (s / 2.0)  # |xi|^s with |xi| = sqrt(2)
        exact = math.cos(omega * traj.times[-1]) * u0
        assert np.max(np.abs(traj.states[-1].u - exact)) <= 1e-4

    def test_2d_exterior_run_masks_and_conserves(self):
        dom = Domain(d=2, s=1.0, omega_extent=2.0, n=32, pad_factor=2.0)
        W = mollified_family(clipped_quadratic(1.0)).make(0.2)
        op = build_operator(dom)
        dt = 0.9 * stability_limit(op, W)
        cfg = SimConfig(domain=dom, potential=W, T=1.0, dt=dt,
                        u0=bump_field(dom, 0.5), v0=np.zeros(dom.n),
                        record_every=5)
        traj = simulate(cfg)
        outside = ~dom.interior_mask
        assert all(np.max(np.abs(st.u[outside])) == 0.0 for st in traj.states)
        totals = traj.totals
        assert np.max(totals - totals[0]) <= energy_drift_tolerance(cfg)

    def test_3d_symbol_and_eigenfunction(self):
        dom = Domain(d=3, s=0.5, omega_extent=2 * np.pi, n=8, pad_factor=1.0,
                     boundary_mode=PERIODIC)
        op = build_operator(dom)
        assert op.symbol[1, 1, 1] == pytest.approx(3.0 ** 0.5, rel=1e-14)
        grids = dom.grids()
        f = np.sin(grids[0]) * np.sin(grids[1]) * np.sin(grids[2])
        from adwave.spectral import apply_fractional_laplacian
        out = apply_fractional_laplacian(op, f)
        assert np.max(np.abs(out - 3.0 ** 0.5 * f)) <= 1e-12

    def test_vector_ball_energy_bounded(self):
        dom = Domain(d=1, s=1.0, omega_extent=2 * np.pi, n=64, pad_factor=2.0)
        fam = mollified_family(ball_potential(2))
        W = fam.make(0.1)
        op = build_operator(dom)
        u0 = np.stack([bump_field(dom, 0.4), bump_field(dom, 0.3)], axis=-1)
        dt = 0.9 * stability_limit(op, W)
        cfg = SimConfig(domain=dom, potential=W, T=2.0, dt=dt, u0=u0,
                        v0=np.zeros_like(u0), record_every=3)
        traj = simulate(cfg)
        totals = traj.totals
        assert np.max(totals - totals[0]) <= energy_drift_tolerance(cfg)
        assert max(float(np.max(np.linalg.norm(st.u, axis=-1)))
                   for st in traj.states) < 1.0


class TestApproximationKnobs:
    def test_padding_collar_is_a_convergence_knob(self):
        # Fixed Omega and grid spacing, growing exterior collar: interior
        # trajectories must converge as the periodic images move away.
        W = mollified_family(clipped_quadratic(1.0)).make(0.1)
        T = 2.0
        sols = {}
        for pad, n in ((1.5, 96), (2.0, 128), (4.0, 256)):
            dom = Domain(d=1, s=1.0, omega_extent=2.0, n=n, pad_factor=pad)
            op = build_operator(dom)
            from adwave.experiments import fitted_dt
            dt = fitted_dt(T, 0.5 * stability_limit(op, W))
            cfg = SimConfig(domain=dom, potential=W, T=T, dt=dt,
                            u0=bump_field(dom, 0.8, width_frac=0.6),
                            v0=zero_field(dom), record_every=10 ** 6)
            traj = simulate(cfg)
            x = dom.axes()[0] - dom.omega_bounds[0][0]
            inside = dom.interior_mask
            sols[pad] = (x[inside], traj.states[-1].u[inside])
        ref_x, ref_u = sols[4.0]
        diffs = []
        for pad in (1.5, 2.0):
            x, u = sols[pad]
            diffs.append(float(np.max(np.abs(np.interp(ref_x, x, u) - ref_u))))
        assert diffs[1] < diffs[0]
        assert diffs[1] <= 1e-4

    def test_nonlinear_weak_residual_refines_second_order(self):
        W = mollified_family(clipped_quadratic(1.0)).make(0.1)
        dom = Domain(d=1, s=1.0, omega_extent=2.0, n=128, pad_factor=2.0)
        op = build_operator(dom)
        from adwave.experiments import fitted_dt
        psi = bump_field(dom, 1.0, width_frac=0.5, center=[1.7])
        vals = []
        for k in (1, 2):
            dt = fitted_dt(2.0, 0.4 * stability_limit(op, W)) / k
            cfg = SimConfig(domain=dom, potential=W, T=2.0, dt=dt,
                            u0=bump_field(dom, 0.8), v0=zero_field(dom),
                            record_every=1)
            traj = simulate(cfg)
            tf = WeakTestField(psi=psi, window=window_sin_sq(2.0))
            vals.append(abs(weak_residual(traj, [tf], W)[0]))
        assert vals[0] / vals[1] == pytest.approx(4.0, rel=0.3)


class TestDataHelpers:
    def test_bump_supported_in_omega(self):
        dom = dirichlet_domain(n=128)
        u = bump_field(dom, amplitude=2.0)
        assert np.max(np.abs(u[~dom.interior_mask])) == 0.0
        assert np.max(u) == pytest.approx(2.0, rel=1e-6)

    def test_scale_to_hs(self):
        dom = dirichlet_domain(n=128)
        op = build_operator(dom)
        u = scale_to_hs(op, bump_field(dom, 1.0), 0.05)
        assert hs_norm(op, u) == pytest.approx(0.05, rel=1e-12)
