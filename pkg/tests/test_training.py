import numpy as np
import pytest

from qvarlab import circuits as qc
from qvarlab import observables as obs_mod
from qvarlab.mixture import MixtureModel, variance_partial
from qvarlab.observables import ParamObservable
from qvarlab.states import LabeledState
from qvarlab.training import (
    TrainConfig,
    TrainSet,
    gradient,
    loss,
    make_trainset,
    train,
)

BASIS_TS = TrainSet(
    items=(
        LabeledState(0.0, psi=np.array([1.0, 0.0], dtype=complex)),
        LabeledState(1.0, psi=np.array([0.0, 1.0], dtype=complex)),
    )
)
ID1 = qc.make_circuit(1, [], 0)


def test_make_trainset_labels_and_validation():
    fam = MixtureModel(2, 0.25).family()
    ts = make_trainset(fam, 5, 0.1, 0.9)
    assert np.allclose(ts.labels, np.linspace(0.1, 0.9, 5))
    assert len(ts) == 5
    assert ts.dim == 4
    with pytest.raises(ValueError):
        make_trainset(fam, 1, 0.1, 0.9)
    with pytest.raises(ValueError):
        make_trainset(fam, 5, 0.9, 0.1)


def test_trainset_validation():
    one = LabeledState(0.0, psi=np.array([1.0, 0.0], dtype=complex))
    with pytest.raises(ValueError):
        TrainSet(items=(one,))
    other = LabeledState(1.0, psi=np.array([0, 0, 0, 1.0], dtype=complex))
    with pytest.raises(ValueError):
        TrainSet(items=(one, other))


def test_trainconfig_validation():
    with pytest.raises(ValueError):
        TrainConfig(w_ls=0.0)
    with pytest.raises(ValueError):
        TrainConfig(w_var=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(restarts=0)
    with pytest.raises(ValueError):
        TrainConfig(max_iters=0)
    with pytest.raises(ValueError):
        TrainConfig(grad_step=0.0)
    with pytest.raises(ValueError):
        TrainConfig(conv_tol=-1e-7)


def test_loss_frozen_deterministic_outcomes():
    # basis states give deterministic readouts: predictions are the lambdas
    # themselves and every variance term vanishes
    cfg = TrainConfig(w_ls=1.0, w_var=1e-4)
    lam = np.array([0.25, 0.75])
    got = loss(lam, np.array([]), BASIS_TS, cfg, ID1, 1)
    assert abs(got - 0.125) < 1e-15


def test_loss_frozen_superposition_variance():
    plus = LabeledState(0.5, psi=np.array([1.0, 1.0], dtype=complex) / np.sqrt(2))
    zero = LabeledState(0.0, psi=np.array([1.0, 0.0], dtype=complex))
    ts = TrainSet(items=(zero, plus))
    cfg = TrainConfig(w_ls=1.0, w_var=0.5)
    lam = np.array([0.25, 0.75])
    # ls = (0 - 0.25)^2; var on the superposition is 0.0625
    want = 0.0625 + 0.5 * 0.0625
    assert abs(loss(lam, np.array([]), ts, cfg, ID1, 1) - want) < 1e-15


def test_loss_matches_observable_route():
    rng = np.random.default_rng(9)
    fam = MixtureModel(2, 0.25).family()
    ts = make_trainset(fam, 4, 0.1, 0.9)
    c = qc.hea(2, 2)
    theta = rng.uniform(0, 2 * np.pi, c.param_count)
    lam = rng.normal(size=2)
    cfg = TrainConfig(w_ls=1.3, w_var=0.2)
    obs = ParamObservable(c, 1, lam)
    want = 0.0
    for it in ts.items:
        pred = obs_mod.expectation(obs, theta, it)
        want += 1.3 * (it.label - pred) ** 2 + 0.2 * obs_mod.variance(obs, theta, it)
    got = loss(lam, theta, ts, cfg, c, 1)
    assert abs(got - want) < 1e-12


def test_loss_permutation_invariant():
    rng = np.random.default_rng(13)
    fam = MixtureModel(2, 0.25).family()
    ts = make_trainset(fam, 4, 0.1, 0.9)
    perm = TrainSet(items=ts.items[::-1])
    c = qc.hea(2, 1)
    theta = rng.uniform(0, 2 * np.pi, c.param_count)
    lam = rng.normal(size=2)
    cfg = TrainConfig()
    a = loss(lam, theta, ts, cfg, c, 1)
    b = loss(lam, theta, perm, cfg, c, 1)
    assert abs(a - b) < 1e-14


def test_lambda_shape_validation():
    cfg = TrainConfig()
    with pytest.raises(ValueError):
        loss(np.ones(3), np.array([]), BASIS_TS, cfg, ID1, 1)
    with pytest.raises(ValueError):
        gradient(np.ones(3), np.array([]), BASIS_TS, cfg, ID1, 1)


def _naive_gradient(lam, theta, ts, cfg, circuit, m):
    h = cfg.grad_step
    out = np.empty(lam.size + theta.size)
    for i in range(lam.size):
        lp, lm = lam.copy(), lam.copy()
        lp[i] += h
        lm[i] -= h
        out[i] = (
            loss(lp, theta, ts, cfg, circuit, m) - loss(lm, theta, ts, cfg, circuit, m)
        ) / (2 * h)
    for s in range(theta.size):
        tp, tm = theta.copy(), theta.copy()
        tp[s] += h
        tm[s] -= h
        out[lam.size + s] = (
            loss(lam, tp, ts, cfg, circuit, m) - loss(lam, tm, ts, cfg, circuit, m)
        ) / (2 * h)
    return out


def test_gradient_bitwise_matches_naive_probes():
    # the snapshot cache must not change a single bit of the FD gradient
    rng = np.random.default_rng(21)
    cfg = TrainConfig(w_var=0.3)
    fam = MixtureModel(2, 0.25).family()
    mixed_ts = make_trainset(fam, 3, 0.1, 0.9)
    pure_ts = TrainSet(
        items=tuple(
            LabeledState(float(a), psi=np.array([np.cos(a), 0, 0, np.sin(a)], dtype=complex))
            for a in (0.2, 0.7, 1.1)
        )
    )
    c = qc.hea(2, 2)
    for ts in (mixed_ts, pure_ts):
        theta = rng.uniform(0, 2 * np.pi, c.param_count)
        lam = rng.normal(size=2)
        fast = gradient(lam, theta, ts, cfg, c, 1)
        slow = _naive_gradient(lam, theta, ts, cfg, c, 1)
        assert np.array_equal(fast, slow)


def test_gradient_matches_directional_derivative():
    rng = np.random.default_rng(27)
    cfg = TrainConfig(w_var=0.1)
    fam = MixtureModel(2, 0.25).family()
    ts = make_trainset(fam, 3, 0.1, 0.9)
    c = qc.hea(2, 1)
    theta = rng.uniform(0, 2 * np.pi, c.param_count)
    lam = rng.normal(size=2)
    g = gradient(lam, theta, ts, cfg, c, 1)
    v = rng.normal(size=g.size)
    v /= np.linalg.norm(v)
    t = 1e-5
    fp = loss(lam + t * v[:2], theta + t * v[2:], ts, cfg, c, 1)
    fm = loss(lam - t * v[:2], theta - t * v[2:], ts, cfg, c, 1)
    assert abs((fp - fm) / (2 * t) - g @ v) < 1e-4


def test_gradient_zero_at_exact_fit_with_deterministic_probs():
    cfg = TrainConfig(w_var=1.0)
    lam = np.array([0.0, 1.0])  # equals the labels; variance is identically 0
    g = gradient(lam, np.array([]), BASIS_TS, cfg, ID1, 1)
    # analytic gradient is zero; the probes only leave float rounding behind
    assert np.max(np.abs(g)) < 1e-11


def test_engine_modes_agree_on_loss():
    rng = np.random.default_rng(33)
    c = qc.hva_cluster(8, 1)
    theta = rng.uniform(0, 2 * np.pi, c.param_count)
    lam = rng.normal(size=2)
    cfg = TrainConfig(w_var=0.2)
    psis = []
    for k in range(2):
        v = rng.normal(size=256) + 1j * rng.normal(size=256)
        psis.append(v / np.linalg.norm(v))
    pure_ts = TrainSet(
        items=tuple(LabeledState(0.3 * k, psi=p) for k, p in enumerate(psis))
    )
    dens_ts = TrainSet(
        items=tuple(
            LabeledState(0.3 * k, rho=np.outer(p, p.conj())) for k, p in enumerate(psis)
        )
    )
    a = loss(lam, theta, pure_ts, cfg, c, 1)
    b = loss(lam, theta, dens_ts, cfg, c, 1)  # d=256 forces the two-pass path
    assert abs(a - b) < 1e-10
    small = qc.hea(2, 1)
    th2 = rng.uniform(0, 2 * np.pi, small.param_count)
    psi2 = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi2 /= np.linalg.norm(psi2)
    ts_p = TrainSet(
        items=(
            LabeledState(0.0, psi=psi2),
            LabeledState(1.0, psi=np.roll(psi2, 1)),
        )
    )
    ts_d = TrainSet(
        items=(
            LabeledState(0.0, rho=np.outer(psi2, psi2.conj())),
            LabeledState(1.0, rho=np.outer(np.roll(psi2, 1), np.roll(psi2, 1).conj())),
        )
    )
    assert abs(
        loss(lam, th2, ts_p, cfg, small, 1) - loss(lam, th2, ts_d, cfg, small, 1)
    ) < 1e-12


def test_train_identity_circuit_recovers_labels():
    cfg = TrainConfig(seed=1, restarts=2, max_iters=100)
    res = train(ID1, 1, BASIS_TS, cfg)
    assert res.converged
    assert np.allclose(res.lambdas, [0.0, 1.0], atol=1e-6)
    assert res.theta.size == 0
    assert res.loss == min(res.restart_losses)
    assert len(res.restart_losses) == 2
    hist = np.array(res.loss_history)
    assert np.all(np.diff(hist) <= 0.0)


def test_train_deterministic_given_seed():
    cfg = TrainConfig(seed=7, restarts=2, max_iters=40)
    fam = MixtureModel(2, 0.25).family()
    ts = make_trainset(fam, 3, 0.1, 0.9)
    c = qc.hea(2, 1)
    r1 = train(c, 1, ts, cfg)
    r2 = train(c, 1, ts, cfg)
    assert np.array_equal(r1.lambdas, r2.lambdas)
    assert np.array_equal(r1.theta, r2.theta)
    assert r1.loss_history == r2.loss_history
    assert r1.restart_losses == r2.restart_losses


def test_train_mixture_reaches_closed_form_variance():
    # the optimal single-bit readout of the n=2 mixture has variance
    # (1 - a)(1 + a); a small trained model should get close to it
    model = MixtureModel(2, 0.25)
    ts = make_trainset(model.family(), 6, 0.0, 1.0)
    c = qc.hea(2, 3)
    cfg = TrainConfig(seed=3, restarts=3, max_iters=200, w_var=1e-4)
    res = train(c, 1, ts, cfg)
    obs = ParamObservable(c, 1, res.lambdas)
    sq_errs = []
    var_mid = None
    for it in ts.items:
        pred = obs_mod.expectation(obs, res.theta, it)
        sq_errs.append((pred - it.label) ** 2)
    assert max(sq_errs) < 1e-4
    mid = LabeledState(0.5, rho=model.rho(0.5))
    var_mid = obs_mod.variance(obs, res.theta, mid)
    assert abs(var_mid - variance_partial(0.5, 1)) < 0.05
