import numpy as np
import pytest

from amplab.nonlinear import Nonlinearity, NonlinearitySpec, identity_latest, tanh_latest, zero
from amplab.stateevo import (InitLaw, ModelError, SEModel, SEResult, SingularCovarianceError, se_goe,
                             se_goe_diagonal_quadrature, se_whitenoise)

N = 200_000


def _within(value, target, se, k=3.0):
    return abs(value - target) <= k * se + 1e-12


def test_sigma1_is_second_moment_of_u1():
    res = se_goe(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 1, N=N, seed=1))
    assert _within(res.Sigma[0, 0], 1.0, res.Sigma_se[0, 0])
    res = se_goe(SEModel(InitLaw("constant", 1.5), NonlinearitySpec(tanh_latest()), 1, N=N))
    assert res.Sigma[0, 0] == pytest.approx(2.25)


def test_identity_step_by_hand():
    res = se_goe(SEModel(InitLaw(), NonlinearitySpec(identity_latest()), 2, N=N, seed=2))
    S, E = res.Sigma, res.Sigma_se
    for (i, j), target in {(0, 0): 1.0, (0, 1): 0.0, (1, 1): 1.0}.items():
        assert _within(S[i, j], target, E[i, j])
    assert res.b[1, 0] == 1.0 and res.b[0, 0] == 0.0 and res.b[1, 1] == 0.0


def test_stein_agrees_with_closed_form():
    base = dict(init=InitLaw(), u_spec=NonlinearitySpec(tanh_latest()), T=4, N=N, seed=3)
    cf = se_goe(SEModel(**base))
    st = se_goe(SEModel(**base, deriv_mode="stein"))
    for t in range(1, 4):
        for s in range(t):
            comb = np.hypot(cf.b_se[t, s], st.b_se[t, s])
            assert abs(cf.b[t, s] - st.b[t, s]) <= 3 * comb + 1e-12


def test_finite_diff_agrees_with_closed_form():
    base = dict(init=InitLaw(), u_spec=NonlinearitySpec(tanh_latest(1.5)), T=4, N=50_000, seed=4)
    cf = se_goe(SEModel(**base))
    fd = se_goe(SEModel(**base, deriv_mode="finite_diff"))
    assert np.max(np.abs(cf.b - fd.b)) <= 1e-6
    assert np.max(np.abs(cf.Sigma - fd.Sigma)) == 0.0


def test_quadrature_cross_check():
    res = se_goe(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 5, N=N, seed=5))
    diag, bsub = se_goe_diagonal_quadrature(np.tanh, 1.0, 5)
    for t in range(5):
        assert _within(res.Sigma[t, t], diag[t], res.Sigma_se[t, t], 4)
    for t in range(1, 5):
        assert _within(res.b[t, t - 1], bsub[t - 1], res.b_se[t, t - 1], 4)


def test_nesting_and_psd():
    T = 5
    full = se_goe(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), T, N=20_000, seed=6))
    short = se_goe(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 3, N=20_000, seed=6))
    assert np.array_equal(full.Sigma[:3, :3], short.Sigma)
    assert np.array_equal(full.Sigma, full.Sigma.T)
    assert np.linalg.eigvalsh(full.Sigma).min() >= -1e-12
    assert np.all(np.diag(full.b) == 0)


def test_seed_determinism_and_json_round_trip():
    model = SEModel(InitLaw(f=["rademacher"]), NonlinearitySpec(tanh_latest()), 3, N=10_000, seed=7)
    a, b = se_goe(model), se_goe(model)
    assert a.to_json() == b.to_json()
    back = SEResult.from_json(a.to_json())
    assert np.array_equal(back.Sigma, a.Sigma) and np.array_equal(back.b_se, a.b_se)
    other = se_goe(SEModel(InitLaw(f=["rademacher"]), NonlinearitySpec(tanh_latest()), 3, N=10_000, seed=8))
    assert not np.array_equal(other.Sigma, a.Sigma)


def test_block_size_does_not_change_determinism():
    m = dict(init=InitLaw(), u_spec=NonlinearitySpec(tanh_latest()), T=3, N=30_000, seed=9)
    assert se_goe(SEModel(**m, block_size=7000)).to_json() == se_goe(SEModel(**m, block_size=7000)).to_json()


def test_omega1_is_gamma_times_second_moment():
    res = se_whitenoise(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 1,
                                v_spec=NonlinearitySpec(tanh_latest()), gamma=2.0, N=N, seed=10))
    assert _within(res.Omega[0, 0], 2.0, res.Omega_se[0, 0])


def test_zero_v_gives_zero_sigma():
    res = se_whitenoise(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 1,
                                v_spec=NonlinearitySpec(zero()), gamma=0.5, N=10_000, seed=11))
    assert res.Sigma[0, 0] == 0.0 and res.a[0, 0] == 0.0


def test_identity_chain_rectangular():
    # with identity nonlinearities each step copies the covariance it was
    # given: Sigma_t[r, s] = E[Z_r Z_s] = Omega_t[r, s], Omega_{t+1}[r+1, s+1]
    # = E[Y_r Y_s] = Sigma_t[r, s] and E[U_1 Y_s] = 0.  Each stage is checked
    # against the estimate actually fed into it, since MC error accumulates
    T = 3
    res = se_whitenoise(SEModel(InitLaw(), NonlinearitySpec(identity_latest()), T,
                                v_spec=NonlinearitySpec(identity_latest()), gamma=1.0, N=N, seed=12))
    O, S = res.Omega, res.Sigma
    assert _within(O[0, 0], 1.0, res.Omega_se[0, 0])
    for r in range(T):
        for c in range(T):
            assert _within(S[r, c], O[r, c], res.Sigma_se[r, c])
    for r in range(T - 1):
        assert _within(O[0, r + 1], 0.0, res.Omega_se[0, r + 1])
        for c in range(T - 1):
            assert _within(O[r + 1, c + 1], S[r, c], res.Omega_se[r + 1, c + 1])
    assert np.max(np.abs(O - np.eye(T))) <= 0.03 and np.max(np.abs(S - np.eye(T))) <= 0.03
    assert np.allclose(np.diag(res.a), 1.0) and np.allclose(np.tril(res.a, -1), 0.0)
    assert np.allclose(np.diag(res.b, -1), 1.0)


def test_singular_covariance_is_reported():
    # u_2 = 0 makes Sigma_2 singular
    model = SEModel(InitLaw(), NonlinearitySpec(zero()), 3, N=5000, require_nonsingular=True)
    with pytest.raises(SingularCovarianceError):
        se_goe(model)
    relaxed = se_goe(SEModel(InitLaw(), NonlinearitySpec(zero()), 3, N=5000))
    assert relaxed.Sigma[1, 1] == 0.0


@pytest.mark.parametrize("kw", [dict(T=-1), dict(deriv_mode="magic"), dict(N=1), dict(gamma=0.0)])
def test_model_validation(kw):
    args = dict(init=InitLaw(), u_spec=NonlinearitySpec(tanh_latest()), T=2)
    args.update(kw)
    with pytest.raises(ModelError):
        SEModel(**args)


def test_init_law_validation():
    with pytest.raises(ModelError):
        InitLaw("cauchy")
    with pytest.raises(ModelError):
        InitLaw(u1_scale=0.0)


def test_whitenoise_needs_v_spec():
    with pytest.raises(ModelError):
        se_whitenoise(SEModel(InitLaw(), NonlinearitySpec(tanh_latest()), 2))


def test_side_information_enters():
    u = Nonlinearity(lambda Z, F: np.tanh(Z[:, -1]) + F[:, 0], lambda Z, F: np.where(
        np.arange(Z.shape[1]) == Z.shape[1] - 1, 1 / np.cosh(Z[:, -1:]) ** 2, 0.0))
    res = se_goe(SEModel(InitLaw(f=["rademacher"]), NonlinearitySpec(u), 2, N=N, seed=13))
    # E[(tanh Z + F)^2] = E[tanh^2 Z] + 1 with Z ~ N(0, 1)
    diag, _ = se_goe_diagonal_quadrature(np.tanh, 1.0, 2)
    assert _within(res.Sigma[1, 1], diag[1] + 1.0, res.Sigma_se[1, 1], 4)
