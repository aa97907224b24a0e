"""Experiment orchestration: convergence studies, sensitivity sweeps, the
closed-form-vs-oracle validation gate, and result persistence.

Every experiment is pure given (spec, seed): outputs carry no timestamps
and reductions happen in fixed order, so re-running with the same spec and
any worker count reproduces the files byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from . import __version__
from .errors import ConfigError
from .exposure import (LimitConfig, build_name_sequence, empirical_measure_eval,
                       exposure_limit, limit_exp_test, survival_fhat)
from .jumps import BveParams, mgf_bve, mgf_bve_partials, mgf_exp, sample_bve
from .quadrature import composite_simpson
from .riccati import (exp_phi, integral_b, integral_beta, riccati_b, riccati_beta,
                      riccati_beta_general, riccati_rhs, rk4_solve)
from .simulation import (CounterpartyParams, CounterpartySide, mc_exposure,
                         mc_h1_oracle, mc_h2_oracle, mc_joint_survival_oracle,
                         mc_limit_transform, simulate_paths)

__all__ = [
    "CurveTable",
    "ExperimentSpec",
    "CheckResult",
    "ValidationReport",
    "run_convergence",
    "run_measure_convergence",
    "run_bcva_sweeps",
    "run_validation",
    "run_experiment",
    "write_run",
    "grid_for_samples",
    "default_counterparties",
    "VALIDATION_SEED",
]

VALIDATION_SEED = 20240901


@dataclass
class CurveTable:
    """One labeled result curve: abscissa plus named value columns.

    Columns keep insertion order; stderr columns are suffixed "_stderr".
    The provenance block records seed, config hash, and package version.
    """

    label: str
    abscissa_name: str
    abscissa: np.ndarray
    columns: dict[str, np.ndarray]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.abscissa)
        for name, col in self.columns.items():
            if len(col) != n:
                raise ValueError(f"Column {name!r} length differs from abscissa.")
            if name.endswith("_stderr") and np.any(np.asarray(col) < 0.0):
                raise ValueError(f"stderr column {name!r} has negative entries.")

    def write_csv(self, path: Path) -> None:
        """CSV with a header row, floats as %.10e, LF line endings, UTF-8."""

        names = [self.abscissa_name] + list(self.columns)
        cols = [self.abscissa] + [self.columns[c] for c in self.columns]
        lines = [",".join(names)]
        for i in range(len(self.abscissa)):
            lines.append(",".join("%.10e" % float(c[i]) for c in cols))
        Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


@dataclass
class ExperimentSpec:
    """Everything one experiment run needs, resolved from config + CLI."""

    kind: str
    limit: LimitConfig
    cps: CounterpartyParams | None = None
    horizon: float = 1.0
    k_values: tuple[int, ...] = (300,)
    n_paths: int = 2000
    dt: float | None = None          # None: target horizon / 1000
    n_times: int = 61
    seed: int | None = None
    repeats: int = 3
    sweep: str | None = None
    sweep_values: tuple[float, ...] = ()
    kernel_grid: int = 4096
    workers: int = 1
    perturb: dict[str, float] = field(default_factory=dict)
    config_text: str | None = None

    def config_hash(self) -> str:
        text = self.config_text if self.config_text is not None else repr(self)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def provenance(self) -> dict:
        return {
            "experiment": self.kind,
            "seed": self.seed,
            "config_hash": self.config_hash(),
            "package": "cdspool",
            "version": __version__,
            "n_paths": self.n_paths,
            "k_values": list(self.k_values),
            "dt": self.dt,
            "workers_note": "worker count never affects values",
        }


def default_counterparties() -> CounterpartyParams:
    """Symmetric counterparty pair used by the sensitivity studies."""

    side = CounterpartySide(alpha=0.4, kappa=0.6, sigma=0.3, c=0.3, d=0.3,
                            lambda_hat=0.4, xi0=0.2)
    return CounterpartyParams(side_a=side, side_b=side,
                              common_jump=BveParams(1.5, 1.5, 0.0),
                              idio_jump=BveParams(1.5, 1.5, 0.0),
                              loss_a=0.4, loss_b=0.4)


def grid_for_samples(horizon: float, n_times: int, dt_target: float | None):
    """Euler step and sample grid such that the samples sit on grid nodes.

    Rounds the step down from the target so each inter-sample interval is
    an integer number of steps.
    """

    if n_times < 2:
        raise ConfigError("n_times must be >= 2.")
    if dt_target is None:
        dt_target = horizon / 1000.0
    interval = horizon / (n_times - 1)
    per = max(1, math.ceil(interval / dt_target - 1e-12))
    dt = interval / per
    times = np.linspace(0.0, horizon, n_times)
    return dt, times


def _map_ordered(fn: Callable, items: Sequence, workers: int) -> list:
    """Apply fn to items, optionally on a thread pool; results in item order."""

    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def run_convergence(spec: ExperimentSpec) -> list[CurveTable]:
    """Monte-Carlo exposure curves against the limit exposure, per pool size."""

    if spec.seed is None:
        raise ConfigError("convergence experiments require a seed.")
    cfg = spec.limit
    dt, times = grid_for_samples(spec.horizon, spec.n_times, spec.dt)
    limit_curve = np.array([exposure_limit(t, spec.horizon, cfg) for t in times])
    tables = []
    for K in spec.k_values:
        names = build_name_sequence(cfg, K)
        ps = simulate_paths(names, None, lambda_c=cfg.lambda_c, gamma1=cfg.gamma1,
                            gamma2=cfg.gamma2, horizon=spec.horizon,
                            n_paths=spec.n_paths, seed=spec.seed, dt=dt,
                            sample_times=times, workers=spec.workers,
                            record_integrated=False, record_jumps=False)
        pairs = _map_ordered(
            lambda t: mc_exposure(ps, names, float(t), spec.horizon, cfg.r),
            list(times), spec.workers)
        mc = np.array([p[0] for p in pairs])
        se = np.array([p[1] for p in pairs])
        prov = spec.provenance() | {"K": K}
        tables.append(CurveTable(
            label=f"exposure-K{K}", abscissa_name="t", abscissa=times,
            columns={"mc_exposure": mc, "mc_stderr": se,
                     "limit_exposure": limit_curve},
            provenance=prov))
    return tables


def run_measure_convergence(spec: ExperimentSpec) -> list[CurveTable]:
    """Surviving-mass and exponential-transform curves of the empirical
    measure against the limit measure, with a per-K sup-error summary
    (median over repeats)."""

    if spec.seed is None:
        raise ConfigError("measure-convergence experiments require a seed.")
    cfg = spec.limit
    theta = -1.0
    dt, times = grid_for_samples(spec.horizon, spec.n_times, spec.dt)
    lim_mass = np.array([survival_fhat(0.0, t, cfg) for t in times])
    lim_exp = np.array([limit_exp_test(theta, t, cfg) for t in times])
    tables = []
    sup_one = np.empty((len(spec.k_values), spec.repeats))
    sup_exp = np.empty((len(spec.k_values), spec.repeats))
    for ki, K in enumerate(spec.k_values):
        names = build_name_sequence(cfg, K)
        for rep in range(spec.repeats):
            ps = simulate_paths(names, None, lambda_c=cfg.lambda_c,
                                gamma1=cfg.gamma1, gamma2=cfg.gamma2,
                                horizon=spec.horizon, n_paths=spec.n_paths,
                                seed=spec.seed + rep, dt=dt, sample_times=times,
                                workers=spec.workers, record_integrated=False,
                                record_jumps=False)
            one = np.array([empirical_measure_eval(ps, "one", float(t)) for t in times])
            ee = np.array([empirical_measure_eval(ps, ("exp", theta), float(t))
                           for t in times])
            sup_one[ki, rep] = np.max(np.abs(one[:, 0] - lim_mass))
            sup_exp[ki, rep] = np.max(np.abs(ee[:, 0] - lim_exp))
            if rep == 0:
                tables.append(CurveTable(
                    label=f"measure-K{K}", abscissa_name="t", abscissa=times,
                    columns={"empirical_mass": one[:, 0],
                             "empirical_mass_stderr": one[:, 1],
                             "limit_mass": lim_mass,
                             "empirical_exp": ee[:, 0],
                             "empirical_exp_stderr": ee[:, 1],
                             "limit_exp": lim_exp},
                    provenance=spec.provenance() | {"K": K, "theta": theta}))
    tables.append(CurveTable(
        label="measure-sup-error", abscissa_name="K",
        abscissa=np.array(spec.k_values, dtype=float),
        columns={"sup_err_mass_median": np.median(sup_one, axis=1),
                 "sup_err_exp_median": np.median(sup_exp, axis=1)},
        provenance=spec.provenance() | {"repeats": spec.repeats, "theta": theta}))
    return tables


def run_bcva_sweeps(spec: ExperimentSpec) -> list[CurveTable]:
    """CVA/DVA curves over the configured parameter sweep (per-name values)."""

    if spec.sweep is None or not spec.sweep_values:
        raise ConfigError("bcva-sweep requires a sweep parameter and values.")
    if spec.cps is None:
        raise ConfigError("bcva-sweep requires counterparty parameters.")
    res = kernels.sensitivity_sweep(spec.sweep, spec.sweep_values, spec.limit,
                                    spec.cps, t=0.0, maturity=spec.horizon,
                                    workers=spec.workers, n_grid=spec.kernel_grid)
    table = CurveTable(
        label=f"bcva-{spec.sweep}", abscissa_name=spec.sweep, abscissa=res.values,
        columns={"cva": res.cva, "dva": res.dva, "bcva": res.bcva},
        provenance=spec.provenance() | {"maturity": spec.horizon})
    return [table]


# ---------------------------------------------------------------------------
# validation gate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    err: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.err <= self.tol


@dataclass
class ValidationReport:
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def render(self) -> str:
        lines = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{status} {c.name:<34s} err={c.err:.6e} tol={c.tol:.1e}")
        n_fail = len(self.failures())
        lines.append(f"{'OK' if n_fail == 0 else 'FAILED'}: "
                     f"{len(self.checks) - n_fail}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


def _validation_baseline():
    """Shared configurations for the oracle checks."""

    cfg_jumpy = LimitConfig(alpha=0.01, kappa=0.5, sigma=0.3, c=0.1, d=0.1,
                            lambda_hat=0.2, x0=0.02, gamma1=2.0, gamma2=2.0,
                            lambda_c=0.25, s_z=0.02, l_z=0.4, r=0.03)
    cfg_nojump = LimitConfig(alpha=0.75, kappa=1.5, sigma=0.2, c=0.0, d=0.0,
                             lambda_hat=0.5, x0=0.5, gamma1=1.5, gamma2=1.5,
                             lambda_c=2.5, s_z=0.02, l_z=0.4, r=0.03)
    return cfg_jumpy, cfg_nojump, default_counterparties()


def run_validation(spec: ExperimentSpec | None = None, *, workers: int = 1,
                   perturb: dict[str, float] | None = None) -> ValidationReport:
    """Run every closed-form-vs-oracle comparison and report margins.

    ``perturb`` (or spec.perturb) adds an offset to a named check's
    closed-form value; it exists so the report's sensitivity can itself be
    exercised. Seeds are fixed constants: the report is byte-reproducible.
    """

    if perturb is None:
        perturb = dict(spec.perturb) if spec is not None else {}
    if spec is not None:
        workers = max(workers, spec.workers)
    known = {name for name, _ in _CHECKS}
    unknown = set(perturb) - known
    if unknown:
        raise ConfigError(f"perturb references unknown checks: {sorted(unknown)}")

    def run_one(item):
        name, fn = item
        offset = perturb.get(name, 0.0)
        return fn(offset)

    checks = _map_ordered(run_one, _CHECKS, workers)
    return ValidationReport(checks=list(checks))


def _check_riccati_b_rk4(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED)
    err = 0.0
    for _ in range(10):
        k, s = rng.uniform(0.1, 3.0, 2)
        for u in (0.5, 2.0, 7.0):
            closed = riccati_b(k, s, u) + offset
            oracle = rk4_solve(riccati_rhs(k, s), 0.0, u, 2e-4)
            err = max(err, abs(closed - oracle))
    return CheckResult("riccati_b_vs_rk4", err, 1e-8)


def _check_riccati_beta_rk4(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 1)
    err = 0.0
    for _ in range(8):
        k, s = rng.uniform(0.1, 3.0, 2)
        b0 = -rng.uniform(0.01, 2.0)
        for u in (0.7, 3.0):
            closed = riccati_beta(k, s, b0, u) + offset
            oracle = rk4_solve(riccati_rhs(k, s), b0, u, 2e-4)
            err = max(err, abs(closed - oracle))
    return CheckResult("riccati_beta_vs_rk4", err, 1e-8)


def _check_riccati_beta_general_rk4(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 2)
    err = 0.0
    for _ in range(8):
        k, s = rng.uniform(0.1, 3.0, 2)
        a = rng.uniform(0.3, 3.0)
        b0 = -rng.uniform(0.0, 1.0)
        closed = riccati_beta_general(k, s, a, b0, 1.5) + offset
        oracle = rk4_solve(riccati_rhs(k, s, a), b0, 1.5, 2e-4)
        err = max(err, abs(closed - oracle))
    return CheckResult("riccati_beta_general_vs_rk4", err, 1e-8)


def _check_integral_b_simpson(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 3)
    err = 0.0
    for _ in range(10):
        k, s = rng.uniform(0.1, 3.0, 2)
        u = rng.uniform(0.5, 8.0)
        closed = integral_b(k, s, u) + offset
        oracle = composite_simpson(lambda v: riccati_b(k, s, v), 0.0, u, 10_000)
        err = max(err, abs(closed - oracle))
    return CheckResult("integral_b_vs_simpson", err, 1e-8)


def _check_integral_b_phi(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 4)
    err = 0.0
    for _ in range(10):
        k, s = rng.uniform(0.1, 3.0, 2)
        u = rng.uniform(0.2, 6.0)
        closed = integral_b(k, s, u) + offset
        ident = (math.log(exp_phi(k, s, u)) + k * u) / (s * s)
        err = max(err, abs(closed - ident))
    return CheckResult("integral_b_phi_identity", err, 1e-8)


def _check_beta_flow(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 5)
    err = 0.0
    for _ in range(10):
        k, s = rng.uniform(0.1, 3.0, 2)
        b0 = -rng.uniform(0.01, 1.5)
        t1, t2 = rng.uniform(0.1, 2.0, 2)
        hop = riccati_beta(k, s, riccati_beta(k, s, b0, t1), t2) + offset
        direct = riccati_beta(k, s, b0, t1 + t2)
        err = max(err, abs(hop - direct))
    return CheckResult("beta_flow_property", err, 1e-8)


def _check_integral_beta_simpson(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 6)
    err = 0.0
    for _ in range(8):
        k, s = rng.uniform(0.1, 3.0, 2)
        b0 = -rng.uniform(0.01, 1.5)
        u = rng.uniform(0.3, 5.0)
        closed = integral_beta(k, s, b0, u) + offset
        oracle = composite_simpson(lambda v: riccati_beta(k, s, b0, v), 0.0, u, 10_000)
        err = max(err, abs(closed - oracle))
    return CheckResult("integral_beta_vs_simpson", err, 1e-8)


def _check_mgf_exp_mc(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 7)
    theta, gamma = -0.5, 1.5
    draws = np.exp(theta * rng.standard_exponential(1_000_000) / gamma)
    se = draws.std(ddof=1) / math.sqrt(len(draws))
    err = abs(mgf_exp(theta, gamma) + offset - draws.mean()) / se
    return CheckResult("mgf_exp_vs_mc", err, 3.0)


def _check_mgf_bve_mc(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 8)
    p = BveParams(1.5, 1.5, 0.5)
    ya, yb = sample_bve(p, rng, size=1_000_000)
    vals = np.exp(-0.7 * ya - 0.3 * yb)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    err = abs(mgf_bve(-0.7, -0.3, p) + offset - vals.mean()) / se
    return CheckResult("mgf_bve_vs_mc", err, 3.0)


def _check_mgf_bve_partials_fd(offset: float) -> CheckResult:
    p = BveParams(1.5, 1.5, 0.5)
    h = 1e-6
    err = 0.0
    for ta, tb in ((-0.7, -0.3), (-0.05, -1.4), (-2.0, -0.9)):
        da, db = mgf_bve_partials(ta, tb, p)
        fd_a = (mgf_bve(ta + h, tb, p) - mgf_bve(ta - h, tb, p)) / (2 * h)
        fd_b = (mgf_bve(ta, tb + h, p) - mgf_bve(ta, tb - h, p)) / (2 * h)
        err = max(err, abs(da + offset - fd_a) / abs(fd_a),
                  abs(db + offset - fd_b) / abs(fd_b))
    return CheckResult("mgf_bve_partials_vs_fd", err, 1e-6)


def _check_bve_moments(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 9)
    p = BveParams(1.5, 1.5, 0.5)
    n = 1_000_000
    ya, yb = sample_bve(p, rng, size=n)
    err = 0.0
    for y, rate in ((ya, p.marginal_rate_a), (yb, p.marginal_rate_b)):
        se = y.std(ddof=1) / math.sqrt(n)
        err = max(err, abs(y.mean() - (1.0 / rate + offset)) / se)
    corr = np.corrcoef(ya, yb)[0, 1]
    # correlation stderr via the asymptotic normal approximation
    se_corr = (1.0 - corr * corr) / math.sqrt(n)
    err = max(err, abs(corr - (p.correlation + offset)) / se_corr)
    return CheckResult("bve_sampler_moments", err, 4.0)


def _check_bve_empirical_mgf(offset: float) -> CheckResult:
    rng = np.random.default_rng(VALIDATION_SEED + 10)
    p = BveParams(1.5, 1.5, 0.5)
    ya, yb = sample_bve(p, rng, size=1_000_000)
    err = 0.0
    for ta, tb in ((-0.2, -0.2), (-1.0, -0.1), (-0.1, -1.0), (-0.5, -1.5), (-2.0, -2.0)):
        vals = np.exp(ta * ya + tb * yb)
        se = vals.std(ddof=1) / math.sqrt(len(vals))
        err = max(err, abs(mgf_bve(ta, tb, p) + offset - vals.mean()) / se)
    return CheckResult("bve_empirical_mgf", err, 4.0)


def _check_fhat_cir(offset: float) -> CheckResult:
    _, cfg, _ = _validation_baseline()
    err = 0.0
    for u in (0.5, 1.0, 2.0):
        closed = survival_fhat(0.0, u, cfg) + offset
        # independent route: RK4 on the coupled (transform exponent, integral)
        def rhs(y):
            return np.array([riccati_rhs(cfg.kappa, cfg.sigma)(y[0]), y[0]])
        b, ib = rk4_solve(rhs, np.zeros(2), u, 1e-4)
        oracle = math.exp(cfg.x0 * b + cfg.alpha * ib)
        err = max(err, abs(closed - oracle))
    return CheckResult("fhat_cir_reduction", err, 1e-10)


def _check_fhat_limit_sde(offset: float) -> CheckResult:
    cfg, _, _ = _validation_baseline()
    u = 1.5
    closed = survival_fhat(0.0, u, cfg) + offset
    est, _ = mc_limit_transform(cfg.alpha, cfg.kappa, cfg.sigma,
                                cfg.c * cfg.lambda_c, cfg.d * cfg.lambda_hat,
                                cfg.gamma1, cfg.gamma2, cfg.x0, u,
                                n_paths=100_000, seed=VALIDATION_SEED + 11,
                                dt=u / 1000.0)
    return CheckResult("fhat_vs_limit_sde_mc", abs(closed - est) / est, 5e-3)


def _check_exposure_quadrature(offset: float) -> CheckResult:
    _, cfg, _ = _validation_baseline()
    closed = exposure_limit(0.0, 1.0, cfg) + offset
    integral = composite_simpson(
        lambda u: np.exp(-cfg.r * u) * survival_fhat(0.0, u, cfg), 0.0, 1.0, 10_000)
    oracle = (cfg.l_z * (math.exp(-cfg.r) * survival_fhat(0.0, 1.0, cfg) - 1.0)
              + (cfg.s_z + cfg.r * cfg.l_z) * integral)
    return CheckResult("exposure_limit_vs_simpson", abs(closed - oracle), 1e-7)


def _kernel_checks(offset: float, which: str) -> CheckResult:
    cfg, _, cps = _validation_baseline()
    u = 1.0
    x_a = x_b = 0.2
    coeffs = kernels.build_kernel_coeffs(cps, cfg.lambda_c, "B" if which != "h2" else "A",
                                          1.5, 2048)
    if which == "h1":
        closed = kernels.h1(u, x_a, x_b, coeffs) + offset
        est, se = mc_h1_oracle(cps, cfg.lambda_c, u, x_a, x_b, 20_000,
                               VALIDATION_SEED + 12, dt=1e-3)
    elif which == "h2":
        closed = kernels.h2(u, x_a, x_b, coeffs) + offset
        est, se = mc_h2_oracle(cps, cfg.lambda_c, u, x_a, x_b, 20_000,
                               VALIDATION_SEED + 12, dt=1e-3)
    else:
        closed = kernels.joint_survival_equal(u, x_a, x_b, coeffs) + offset
        est, se = mc_joint_survival_oracle(cps, cfg.lambda_c, u, x_a, x_b, 20_000,
                                           VALIDATION_SEED + 12, dt=1e-3)
    return CheckResult(f"{which}_vs_mc", abs(closed - est) / se, 3.0)


def _check_h1_mc(offset: float) -> CheckResult:
    return _kernel_checks(offset, "h1")


def _check_h2_mc(offset: float) -> CheckResult:
    return _kernel_checks(offset, "h2")


def _check_joint_survival_mc(offset: float) -> CheckResult:
    return _kernel_checks(offset, "joint_survival")


def _check_kernel_residuals(offset: float) -> CheckResult:
    cfg, _, cps = _validation_baseline()
    err = 0.0
    for side in ("B", "A"):
        coeffs = kernels.build_kernel_coeffs(cps, cfg.lambda_c, side, 3.0, 4096)
        res = kernels.kernel_ode_residuals(coeffs, cps, cfg.lambda_c)
        err = max(err, max(res.values()))
    return CheckResult("kernel_ode_residuals", err + offset, 1e-5)


def _check_cva_nested_mc(offset: float) -> CheckResult:
    cfg, _, cps = _validation_baseline()
    maturity = 3.0
    result = kernels.bcva(0.0, maturity, cfg, cps, n_grid=2048)
    est, se = nested_mc_cva(cfg, cps, maturity, n_paths=20_000,
                            seed=VALIDATION_SEED + 13, dt=maturity / 1000.0)
    return CheckResult("cva_vs_nested_mc", abs(result.cva + offset - est) / se, 3.0)


def nested_mc_cva(cfg: LimitConfig, cps: CounterpartyParams, maturity: float,
                  n_paths: int, seed: int, dt: float | None = None,
                  workers: int = 1) -> tuple[float, float]:
    """Nested Monte-Carlo CVA oracle: simulate the counterparties, apply the
    limit exposure at side B's default time, weight by pool survival.

    The pool's limit default time is conditionally independent of the
    counterparties, so the indicator of the pool outliving tau_B integrates
    to the survival function evaluated there.
    """

    ps = simulate_paths((), cps, lambda_c=cfg.lambda_c, horizon=maturity,
                        n_paths=n_paths, seed=seed, dt=dt, sample_times=[maturity],
                        workers=workers, block_size=32_768, record_integrated=False,
                        record_jumps=False)
    tau_a, tau_b = ps.default_times[:, 0], ps.default_times[:, 1]
    hit = (tau_b <= np.minimum(tau_a, maturity)) & (tau_b > 0)
    # dense spline of the limit exposure keeps per-path evaluation cheap
    s_grid = np.linspace(0.0, maturity, 513)
    eps_grid = np.array([exposure_limit(s, maturity, cfg) for s in s_grid])
    eps = CubicSpline(s_grid, eps_grid)
    vals = np.zeros(n_paths)
    tb = tau_b[hit]
    vals[hit] = (np.exp(-cfg.r * tb) * survival_fhat(0.0, tb, cfg)
                 * np.maximum(eps(tb), 0.0))
    vals *= cps.loss_b
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_paths))


_CHECKS: list[tuple[str, Callable[[float], CheckResult]]] = [
    ("riccati_b_vs_rk4", _check_riccati_b_rk4),
    ("riccati_beta_vs_rk4", _check_riccati_beta_rk4),
    ("riccati_beta_general_vs_rk4", _check_riccati_beta_general_rk4),
    ("integral_b_vs_simpson", _check_integral_b_simpson),
    ("integral_b_phi_identity", _check_integral_b_phi),
    ("beta_flow_property", _check_beta_flow),
    ("integral_beta_vs_simpson", _check_integral_beta_simpson),
    ("mgf_exp_vs_mc", _check_mgf_exp_mc),
    ("mgf_bve_vs_mc", _check_mgf_bve_mc),
    ("mgf_bve_partials_vs_fd", _check_mgf_bve_partials_fd),
    ("bve_sampler_moments", _check_bve_moments),
    ("bve_empirical_mgf", _check_bve_empirical_mgf),
    ("fhat_cir_reduction", _check_fhat_cir),
    ("fhat_vs_limit_sde_mc", _check_fhat_limit_sde),
    ("exposure_limit_vs_simpson", _check_exposure_quadrature),
    ("h1_vs_mc", _check_h1_mc),
    ("h2_vs_mc", _check_h2_mc),
    ("joint_survival_vs_mc", _check_joint_survival_mc),
    ("kernel_ode_residuals", _check_kernel_residuals),
    ("cva_vs_nested_mc", _check_cva_nested_mc),
]


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _safe_name(label: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "-" for ch in label)


def write_run(tables: list[CurveTable], spec: ExperimentSpec, out_dir: Path,
              report: ValidationReport | None = None) -> dict:
    """Write curve CSVs plus a JSON run manifest; returns the manifest dict."""

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curve_files = {}
    for table in tables:
        fname = f"curve-{_safe_name(table.label)}.csv"
        table.write_csv(out / fname)
        curve_files[table.label] = fname
    manifest = {
        "experiment": spec.kind,
        "provenance": spec.provenance(),
        "curves": curve_files,
    }
    if report is not None:
        (out / "validation_report.txt").write_bytes(report.render().encode("utf-8"))
        manifest["validation"] = {
            "passed": report.passed,
            "failures": report.failures(),
            "report": "validation_report.txt",
        }
    if spec.config_text is not None:
        (out / "config_echo.cfg").write_bytes(spec.config_text.encode("utf-8"))
        manifest["config_echo"] = "config_echo.cfg"
    (out / "run_manifest.json").write_bytes(
        (json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode("utf-8"))
    return manifest


def run_experiment(spec: ExperimentSpec, out_dir: Path | None = None):
    """Dispatch one experiment; optionally persist outputs."""

    if spec.kind == "convergence":
        tables, report = run_convergence(spec), None
    elif spec.kind == "measure-convergence":
        tables, report = run_measure_convergence(spec), None
    elif spec.kind == "bcva-sweep":
        tables, report = run_bcva_sweeps(spec), None
    elif spec.kind == "validate":
        tables, report = [], run_validation(spec)
    else:
        raise ConfigError(f"Unknown experiment kind {spec.kind!r}.")
    if out_dir is not None:
        write_run(tables, spec, out_dir, report)
    return tables, report
