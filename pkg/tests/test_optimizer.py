import numpy as np
import pytest

from rvscgd.harness import build_teacher
from rvscgd.model import Dataset
from rvscgd.optimizer import (
    HyperParams,
    IterState,
    check_preconditions,
    init_weight,
    lagrangian,
    limit_diagnostics,
    run,
    rvscgd_step,
)
from rvscgd.penalties import PenaltySpec
from rvscgd.population import angle

# The reference sweep configuration: k=20, d=50 with small steps.
HP = HyperParams(k=20, d=50, eta=1e-5, beta=1e-3, lam=1e-4,
                 penalty=PenaltySpec("l0"), prox_param="raw")


def short(hp, **kw):
    return HyperParams(**{**hp.__dict__, **kw})


class TestHyperParams:
    def test_tau_parameterizations(self):
        assert short(HP, prox_param="ratio").tau == pytest.approx(0.1)
        assert HP.tau == pytest.approx(1e-4)

    @pytest.mark.parametrize("bad", [
        dict(eta=0.0), dict(beta=-1.0), dict(lam=0.0), dict(step_tol=0.0),
        dict(delta=0.0), dict(delta=4.0), dict(k=0), dict(d=0),
        dict(mode="empirical", samples=0), dict(mode="bogus"),
        dict(prox_param="scaled"), dict(max_iters=0),
    ])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ValueError):
            short(HP, **bad)


class TestInitWeight:
    def test_unit_norm_and_margin(self):
        rng = np.random.default_rng(40)
        ws = build_teacher(50, 4)
        for _ in range(20):
            w0 = init_weight(50, ws, 0.1, rng)
            assert np.linalg.norm(w0) == pytest.approx(1.0, abs=1e-12)
            assert angle(w0, ws) <= np.pi - 0.1

    def test_deterministic_given_rng(self):
        ws = build_teacher(50, 4)
        a = init_weight(50, ws, 0.1, np.random.default_rng(7))
        b = init_weight(50, ws, 0.1, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_resamples_past_excluded_cap(self):
        # delta close to pi forces many resamples; theta must obey the cap.
        rng = np.random.default_rng(41)
        ws = build_teacher(8, 2)
        w0 = init_weight(8, ws, 2.0, rng)
        assert angle(w0, ws) <= np.pi - 2.0


class TestLagrangian:
    def test_split_at_teacher(self):
        ws = build_teacher(50, 4)
        hp = short(HP, penalty=PenaltySpec("l1"))
        # u = w = w*: only the penalty term survives.
        assert lagrangian(ws, ws, hp, ws) == pytest.approx(
            hp.lam * np.sum(np.abs(ws)))
        # u = 0, w = w*: penalty drops, coupling gives beta/2.
        assert lagrangian(np.zeros(50), ws, hp, ws) == pytest.approx(hp.beta / 2)

    def test_empirical_mode_requires_dataset(self):
        hp = short(HP, mode="empirical", samples=10)
        ws = build_teacher(50, 4)
        with pytest.raises(ValueError):
            lagrangian(ws, ws, hp, ws)


class TestStep:
    def test_fixed_point_at_teacher(self):
        # Raw l0 threshold sqrt(2e-4) ~ 0.014 < the 0.5 teacher entries,
        # so u = w = w* and the surrogate gradient vanishes: w is unmoved.
        ws = build_teacher(50, 4)
        state = IterState(t=0, w=ws.copy(), u=ws.copy(), C_t=np.nan)
        out = rvscgd_step(state, HP, ws)
        np.testing.assert_allclose(out.w, ws, atol=1e-15)
        np.testing.assert_array_equal(out.u, ws)
        assert out.C_t == pytest.approx(1.0, abs=1e-12)
        assert out.t == 1

    def test_single_step_closed_form(self):
        # Orthogonal start, u = w (below-threshold prox is identity here):
        # w_hat = (1 - eta k / 2 pi) w + (eta k / 2 pi) w*.
        ws = build_teacher(50, 4)
        w = np.zeros(50)
        w[10] = 1.0
        state = IterState(t=0, w=w, u=w.copy(), C_t=np.nan)
        out = rvscgd_step(state, HP, ws)
        c = HP.eta * HP.k / (2 * np.pi)
        expect = (1 - c) * w + c * ws  # u = w kills the coupling term
        expect /= np.linalg.norm(expect)
        np.testing.assert_allclose(out.w, expect, atol=1e-15)
        assert angle(out.w, ws) < angle(w, ws)

    def test_normalization_failure_raises(self):
        ws = build_teacher(2, 1)
        state = IterState(t=0, w=np.zeros(2), u=np.zeros(2), C_t=np.nan)
        with pytest.raises(ValueError):
            # zero w has no defined angle; the step cannot proceed
            rvscgd_step(state, HP, ws)


class TestPreconditions:
    def test_reference_values(self):
        ws = build_teacher(50, 4)
        w0 = init_weight(50, ws, 0.1, np.random.default_rng(0))
        rep = check_preconditions(HP, w0, ws)
        assert rep.beta_max == pytest.approx(20 * np.sin(0.1) / (2 * np.pi))
        assert rep.lambda_max == pytest.approx(20 / (2 * np.pi * np.sqrt(50)))
        assert rep.eta_max == pytest.approx(2 * np.pi / 20)
        assert rep.all_ok

    def test_flags_violations(self):
        ws = build_teacher(50, 4)
        w0 = init_weight(50, ws, 0.1, np.random.default_rng(0))
        assert not check_preconditions(short(HP, eta=0.5), w0, ws).eta_ok
        assert not check_preconditions(short(HP, beta=1.0), w0, ws).beta_ok
        assert not check_preconditions(short(HP, lam=1.0), w0, ws).lambda_ok
        assert check_preconditions(HP, -ws, ws).angle_margin_ok is False

    def test_run_warns_on_violation(self):
        ws = build_teacher(50, 4)
        with pytest.warns(UserWarning, match="preconditions"):
            run(short(HP, lam=1.0, max_iters=5, prox_param="raw"), ws)


class TestLimitDiagnostics:
    def test_exact_stationary_point(self):
        ws = build_teacher(50, 4)
        final = IterState(t=10, w=ws.copy(), u=ws.copy(), C_t=1.0)
        diag = limit_diagnostics(final, HP, ws)
        assert diag.theta_bar == 0.0
        assert diag.collinearity_residual == pytest.approx(0.0, abs=1e-15)
        assert diag.C_estimate == pytest.approx(1.0, abs=1e-15)
        assert diag.sine_residual == pytest.approx(0.0, abs=1e-15)
        assert diag.bound_w_lhs == 0.0
        assert diag.bound_u_lhs == 0.0
        assert diag.bound_u_rhs == pytest.approx(HP.lam / HP.beta * np.sqrt(50))

    def test_zero_u_has_undefined_gamma(self):
        ws = build_teacher(50, 4)
        final = IterState(t=10, w=ws.copy(), u=np.zeros(50), C_t=1.0)
        diag = limit_diagnostics(final, HP, ws)
        assert not diag.gamma_defined
        assert diag.gamma_bar == 0.0


class TestRunPopulation:
    def test_matches_reference_step(self):
        ws = build_teacher(50, 4)
        hp = short(HP, max_iters=50, step_tol=1e-300)
        w0 = init_weight(50, ws, 0.1, np.random.default_rng(3))
        res = run(hp, ws, w0=w0)
        state = IterState(t=0, w=w0.copy(), u=np.zeros(50), C_t=np.nan)
        for _ in range(50):
            state = rvscgd_step(state, hp, ws)
        np.testing.assert_allclose(res.final.w, state.w, atol=1e-14)
        np.testing.assert_allclose(res.final.u, state.u, atol=1e-14)

    @pytest.mark.parametrize("penalty", [
        PenaltySpec("l1"), PenaltySpec("l0"), PenaltySpec("tl1", a=1.0)])
    def test_monotone_descent_all_penalties(self, penalty):
        ws = build_teacher(50, 4)
        hp = short(HP, penalty=penalty, max_iters=3000, step_tol=1e-300)
        res = run(hp, ws)
        assert res.monotonicity_flags == []
        thetas = [r.theta for r in res.trace]
        lags = [r.lagrangian for r in res.trace]
        assert all(b <= a + 1e-12 for a, b in zip(thetas, thetas[1:]))
        assert all(b <= a + 1e-12 for a, b in zip(lags, lags[1:]))

    def test_invariants_along_run(self):
        ws = build_teacher(50, 4)
        res = run(short(HP, max_iters=2000, step_tol=1e-300), ws)
        assert np.linalg.norm(res.final.w) == pytest.approx(1.0, abs=1e-12)
        assert 2 / 3 <= res.final.C_t <= 2
        assert res.guard_violation_iter is None
        assert res.stop_reason == "max_iters"
        assert res.iterations == 2000

    def test_trace_cadence(self):
        ws = build_teacher(50, 4)
        res = run(short(HP, max_iters=1500, step_tol=1e-300), ws)
        ts = [r.t for r in res.trace]
        assert ts[:1001] == list(range(1001))  # dense early segment
        assert all(t % 100 == 0 for t in ts[1001:-1])
        assert ts[-1] == 1500
        assert np.isnan(res.trace[0].step_norm)
        assert res.trace[1].step_norm > 0

    def test_converges_fast_with_large_eta(self):
        ws = build_teacher(50, 4)
        hp = short(HP, eta=0.25, max_iters=10_000)
        res = run(hp, ws)
        assert res.stop_reason == "step_tol"
        assert res.iterations < 5000
        assert res.diagnostics.theta_bar < 1e-4

    def test_guard_violation_recorded(self):
        # eta at the precondition edge still moves w by more than 1/2
        # from a near-antipodal start.
        ws = build_teacher(50, 4)
        hp = short(HP, eta=0.31, max_iters=5, step_tol=1e-300)
        w0 = -ws + 1e-3 * np.eye(50)[40]
        w0 /= np.linalg.norm(w0)
        with pytest.warns(UserWarning):
            res = run(hp, ws, w0=w0)
        assert res.guard_violation_iter == 1


class TestRunEmpirical:
    def test_deterministic_and_descending(self):
        ws = build_teacher(10, 2)
        hp = HyperParams(k=8, d=10, eta=1e-3, beta=1e-3, lam=1e-4,
                         penalty=PenaltySpec("l0"), prox_param="raw",
                         mode="empirical", samples=200, max_iters=300,
                         step_tol=1e-300, seed=5)
        a = run(hp, ws)
        b = run(hp, ws)
        np.testing.assert_array_equal(a.final.w, b.final.w)
        assert a.trace[-1].theta < a.trace[0].theta

    def test_explicit_dataset_reused(self):
        ws = build_teacher(10, 2)
        hp = HyperParams(k=8, d=10, eta=1e-3, beta=1e-3, lam=1e-4,
                         mode="empirical", samples=50, max_iters=100,
                         step_tol=1e-300, seed=6)
        ds = Dataset.generate(8, 10, 50, seed=123)
        a = run(hp, ws, dataset=ds)
        b = run(hp, ws, dataset=ds)
        np.testing.assert_array_equal(a.final.w, b.final.w)

    def test_resample_mode_runs(self):
        ws = build_teacher(10, 2)
        hp = HyperParams(k=8, d=10, eta=1e-3, beta=1e-3, lam=1e-4,
                         mode="empirical", samples=50, resample=True,
                         max_iters=100, step_tol=1e-300, seed=7)
        res = run(hp, ws)
        assert res.iterations == 100
        assert np.linalg.norm(res.final.w) == pytest.approx(1.0, abs=1e-12)
