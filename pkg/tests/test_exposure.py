import math

import numpy as np
import pytest

from cdspool.exposure import (LimitConfig, MeasureAtom, MeasureAtoms,
                              build_name_sequence, empirical_measure_eval,
                              exposure_limit, limit_exp_test, limit_measure_mass,
                              survival_fhat, survival_fhat_comonotone)
from cdspool.riccati import integral_b, riccati_b, riccati_rhs, rk4_solve
from cdspool.simulation import simulate_paths


def make_cfg(**overrides):
    base = dict(alpha=0.01, kappa=0.5, sigma=0.3, c=0.1, d=0.1, lambda_hat=0.2,
                x0=0.02, gamma1=2.0, gamma2=2.0, lambda_c=0.25, s_z=0.02, l_z=0.4,
                r=0.03)
    base.update(overrides)
    return LimitConfig(**base)


NOJUMP = dict(alpha=0.75, kappa=1.5, sigma=0.2, c=0.0, d=0.0, lambda_hat=0.5,
              x0=0.5, gamma1=1.5, gamma2=1.5, lambda_c=2.5, s_z=0.02, l_z=0.4,
              r=0.03)


def test_fhat_is_one_on_the_diagonal():
    assert survival_fhat(0.7, 0.7, make_cfg()) == 1.0


def test_fhat_jump_free_equals_affine_transform():
    # independent route: Runge-Kutta on the coupled (exponent, integral) pair
    cfg = LimitConfig(**NOJUMP)
    for u in (0.25, 1.0, 3.0):
        def rhs(y):
            return np.array([riccati_rhs(cfg.kappa, cfg.sigma)(y[0]), y[0]])
        b, ib = rk4_solve(rhs, np.zeros(2), u, 1e-4)
        assert survival_fhat(0.0, u, cfg) == pytest.approx(
            math.exp(cfg.x0 * b + cfg.alpha * ib), abs=1e-10)


def test_fhat_matches_limit_sde_mc():
    # frozen oracle: 1e5 Euler paths of the limit diffusion with random
    # drift marks, dt = 1.5e-3, seed 1234: 0.95213596 +- 1.26e-04
    closed = survival_fhat(0.0, 1.5, make_cfg())
    assert closed == pytest.approx(0.95213596, rel=5e-3)
    assert abs(closed - 0.95213596) < 3 * 1.26e-4


def test_fhat_comonotone_variant():
    cfg = make_cfg()
    u = 1.5
    ib = integral_b(cfg.kappa, cfg.sigma, u)
    b = riccati_b(cfg.kappa, cfg.sigma, u)
    load = cfg.c * cfg.lambda_c + cfg.d * cfg.lambda_hat
    expected = (math.exp(cfg.x0 * b + cfg.alpha * ib)
                * cfg.gamma1 / (cfg.gamma1 - load * ib))
    assert survival_fhat_comonotone(0.0, u, cfg) == pytest.approx(expected, rel=1e-14)
    # one shared mark and independent marks coincide when only one jump
    # layer is active
    for knockout in (dict(c=0.0), dict(d=0.0)):
        cfg1 = make_cfg(**knockout)
        assert survival_fhat_comonotone(0.0, u, cfg1) == pytest.approx(
            survival_fhat(0.0, u, cfg1), rel=1e-14)
    with pytest.raises(ValueError):
        survival_fhat_comonotone(0.0, 1.0, make_cfg(gamma2=3.0))


def test_fhat_time_homogeneous_and_monotone():
    cfg = make_cfg()
    s = np.linspace(0.0, 5.0, 101)
    curve = survival_fhat(0.0, s, cfg)
    assert np.all(curve > 0.0) and np.all(curve <= 1.0)
    assert np.all(np.diff(curve) < 0.0)
    np.testing.assert_allclose(survival_fhat(2.0, 2.0 + s, cfg), curve, rtol=1e-14)


def test_fhat_decreases_in_jump_loadings():
    base = survival_fhat(0.0, 2.0, make_cfg())
    for bump in (dict(c=0.3), dict(d=0.3), dict(lambda_c=1.0), dict(lambda_hat=0.8)):
        assert survival_fhat(0.0, 2.0, make_cfg(**bump)) < base


def test_exposure_limit_vanishes_at_maturity():
    assert exposure_limit(3.0, 3.0, make_cfg()) == 0.0


def test_exposure_limit_matches_fixed_panel_simpson():
    # frozen oracle: terminal term + 1e4-panel composite Simpson of the
    # discounted survival curve: -0.139418054998347
    cfg = LimitConfig(**NOJUMP)
    assert exposure_limit(0.0, 1.0, cfg) == pytest.approx(-0.139418054998347, abs=1e-7)


def test_exposure_limit_positive_without_loss_leg():
    cfg = make_cfg(l_z=0.0, s_z=0.05)
    assert exposure_limit(0.0, 3.0, cfg) > 0.0
    assert exposure_limit(2.9, 3.0, cfg) > 0.0


def test_exposure_limit_continuous_in_t():
    cfg = make_cfg()
    vals = [exposure_limit(t, 3.0, cfg) for t in (1.0, 1.001, 1.002)]
    assert abs(vals[1] - vals[0]) < 1e-4
    assert abs(vals[2] - vals[1]) < 1e-4


def atom_from_cfg(cfg, weight=1.0, y=None):
    return MeasureAtom(weight=weight, alpha=cfg.alpha, kappa=cfg.kappa,
                       sigma=cfg.sigma, c=cfg.c, d=cfg.d,
                       lambda_hat=cfg.lambda_hat, x0=cfg.x0, y=y)


def test_limit_measure_mass_at_time_zero_is_total_weight():
    cfg = make_cfg()
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg, 0.3), atom_from_cfg(cfg, 0.45)),
                         gamma1=cfg.gamma1, gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    assert limit_measure_mass(0.0, atoms) == pytest.approx(0.75, rel=1e-14)


def test_limit_measure_mass_single_atom_reduces_to_fhat():
    cfg = make_cfg()
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg),), gamma1=cfg.gamma1,
                         gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    for t in (0.5, 1.0, 2.5):
        assert limit_measure_mass(t, atoms) == pytest.approx(
            survival_fhat(0.0, t, cfg), rel=1e-14)


def test_limit_measure_mass_is_linear_in_atoms():
    cfg_a = make_cfg()
    cfg_b = make_cfg(kappa=1.1)
    mix = MeasureAtoms(atoms=(atom_from_cfg(cfg_a, 0.5), atom_from_cfg(cfg_b, 0.5)),
                       gamma1=cfg_a.gamma1, gamma2=cfg_a.gamma2,
                       lambda_c=cfg_a.lambda_c)
    single = []
    for cfg in (cfg_a, cfg_b):
        single.append(limit_measure_mass(1.0, MeasureAtoms(
            atoms=(atom_from_cfg(cfg),), gamma1=cfg.gamma1, gamma2=cfg.gamma2,
            lambda_c=cfg.lambda_c)))
    assert limit_measure_mass(1.0, mix) == pytest.approx(
        0.5 * single[0] + 0.5 * single[1], rel=1e-14)


def test_limit_measure_mass_pinned_marks():
    cfg = make_cfg()
    y = (0.7, 1.3)
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg, y=y),), gamma1=cfg.gamma1,
                         gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    t = 1.2
    ib = integral_b(cfg.kappa, cfg.sigma, t)
    expected = math.exp(cfg.x0 * riccati_b(cfg.kappa, cfg.sigma, t) + cfg.alpha * ib
                        + (cfg.c * cfg.lambda_c * y[0]
                           + cfg.d * cfg.lambda_hat * y[1]) * ib)
    assert limit_measure_mass(t, atoms) == pytest.approx(expected, rel=1e-14)


def test_limit_measure_mass_nonincreasing():
    cfg = make_cfg()
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg, 0.8),), gamma1=cfg.gamma1,
                         gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    vals = [limit_measure_mass(t, atoms) for t in np.linspace(0, 4, 17)]
    assert np.all(np.diff(vals) < 0.0)


def test_limit_exp_test_reduces_to_mass_at_zero():
    cfg = make_cfg()
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg),), gamma1=cfg.gamma1,
                         gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    for t in (0.3, 1.7):
        assert limit_exp_test(0.0, t, cfg) == pytest.approx(
            limit_measure_mass(t, atoms), rel=1e-14)


def test_limit_exp_test_initial_value():
    cfg = make_cfg()
    assert limit_exp_test(-0.5, 0.0, cfg) == pytest.approx(
        math.exp(-0.5 * cfg.x0), rel=1e-14)


def test_limit_exp_test_matches_mc():
    # frozen oracle: 1e5 paths, theta = -0.5, jump-free pool, seed 555:
    # 0.47391649 +- 1.21e-04
    cfg = LimitConfig(**NOJUMP)
    closed = limit_exp_test(-0.5, 1.0, cfg)
    assert abs(closed - 0.47391649) < 3 * 1.21e-4


def test_limit_exp_test_domain():
    with pytest.raises(ValueError):
        limit_exp_test(0.1, 1.0, make_cfg())


def test_empirical_measure_is_one_at_time_zero():
    cfg = LimitConfig(**NOJUMP)
    names = build_name_sequence(cfg, 20)
    ps = simulate_paths(names, lambda_c=cfg.lambda_c, gamma1=cfg.gamma1,
                        gamma2=cfg.gamma2, horizon=0.5, n_paths=40, seed=2,
                        dt=1e-2)
    mean, stderr = empirical_measure_eval(ps, "one", 0.0)
    assert mean == 1.0 and stderr == 0.0


def test_empirical_measure_converges_to_limit_values():
    cfg = LimitConfig(**NOJUMP)
    K = 300
    names = build_name_sequence(cfg, K)
    ps = simulate_paths(names, lambda_c=cfg.lambda_c, gamma1=cfg.gamma1,
                        gamma2=cfg.gamma2, horizon=1.0, n_paths=400, seed=71,
                        dt=1e-3, sample_times=[0.5, 1.0], record_jumps=False,
                        record_integrated=False)
    atoms = MeasureAtoms(atoms=(atom_from_cfg(cfg),), gamma1=cfg.gamma1,
                         gamma2=cfg.gamma2, lambda_c=cfg.lambda_c)
    for t in (0.5, 1.0):
        mean, se = empirical_measure_eval(ps, "one", t)
        lim = limit_measure_mass(t, atoms)
        assert abs(mean - lim) < 3 * se + 0.01 * lim
        mean_e, se_e = empirical_measure_eval(ps, ("exp", -1.0), t)
        lim_e = limit_exp_test(-1.0, t, cfg)
        assert abs(mean_e - lim_e) < 3 * se_e + 0.02 * lim_e


def test_empirical_measure_rejects_unknown_test_function():
    cfg = LimitConfig(**NOJUMP)
    names = build_name_sequence(cfg, 3)
    ps = simulate_paths(names, lambda_c=0.0, gamma1=1.5, gamma2=1.5, horizon=0.1,
                        n_paths=5, seed=3, dt=0.01)
    with pytest.raises(ValueError):
        empirical_measure_eval(ps, "square", 0.0)


def test_name_ladder_first_rung_and_limits():
    cfg = make_cfg()
    names = build_name_sequence(cfg, 1000)
    first = names[0]
    assert first.alpha == pytest.approx(2 * cfg.alpha)
    assert first.kappa == pytest.approx(2 * cfg.kappa)
    assert first.sigma == pytest.approx(2 * cfg.sigma)
    assert first.xi0 == pytest.approx(2 * cfg.x0)
    assert first.spread == pytest.approx(2 * cfg.s_z)
    assert first.loss == 0.0
    last = names[-1]
    assert last.alpha == pytest.approx(cfg.alpha, rel=2e-3)
    assert last.loss == pytest.approx(cfg.l_z, rel=2e-3)
    assert all(n.z == 1 for n in names)


def test_name_ladder_harmonic_average_identity():
    cfg = make_cfg()
    K = 300
    names = build_name_sequence(cfg, K)
    avg_spread = sum(n.z * n.spread for n in names) / K
    harmonic = sum(1.0 / k for k in range(1, K + 1))
    assert avg_spread == pytest.approx(cfg.s_z * (1.0 + harmonic / K), rel=1e-12)
