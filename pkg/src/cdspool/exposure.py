"""Law-of-large-numbers layer: the limiting pool survival function, the
limit exposure per unit name, limit-measure evaluations, and the parameter
ladder used by convergence studies.

In the large-pool limit the surviving-name mass at horizon u is carried by
a square-root diffusion killed at its own level, with the two jump layers
collapsing into a per-name random drift shift c lambda_c Y + d lambda_hat
Ytilde. Averaging the affine transform over the exponential size laws
yields the closed form implemented by :func:`survival_fhat`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .quadrature import simpson_adaptive
from .riccati import integral_b, integral_beta, riccati_b, riccati_beta
from .simulation import NameParams, PathSet

__all__ = [
    "LimitConfig",
    "MeasureAtom",
    "MeasureAtoms",
    "survival_fhat",
    "survival_fhat_comonotone",
    "exposure_limit",
    "limit_measure_mass",
    "limit_exp_test",
    "empirical_measure_eval",
    "build_name_sequence",
]


@dataclass(frozen=True)
class LimitConfig:
    """Limiting name parameters plus the pool-level contract averages.

    (alpha, kappa, sigma, c, d, lambda_hat) is the limit of the per-name
    parameter ladder, x0 the limit initial intensity; gamma1/gamma2 are the
    jump-size rates, lambda_c the common Poisson rate. s_z and l_z are the
    signed per-name averages of spread and loss, r the risk-free rate.
    """

    alpha: float
    kappa: float
    sigma: float
    c: float
    d: float
    lambda_hat: float
    x0: float
    gamma1: float
    gamma2: float
    lambda_c: float
    s_z: float
    l_z: float
    r: float

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.alpha, self.kappa, self.sigma, self.c,
                                       self.d, self.lambda_hat, self.x0, self.gamma1,
                                       self.gamma2, self.lambda_c, self.s_z, self.l_z,
                                       self.r))):
            raise ConfigError("LimitConfig fields must be finite.")
        if self.kappa <= 0 or self.sigma <= 0 or self.gamma1 <= 0 or self.gamma2 <= 0:
            raise ConfigError("kappa, sigma, gamma1, gamma2 must be positive.")
        if self.c < 0 or self.d < 0 or self.lambda_hat < 0 or self.lambda_c < 0:
            raise ConfigError("Jump loadings and rates must be non-negative.")
        if self.x0 <= 0:
            raise ConfigError("x0 must be positive.")
        if self.alpha < 0:
            raise ConfigError("alpha must be non-negative.")
        if not -1.0 <= self.l_z <= 1.0:
            raise ConfigError("l_z must lie in [-1, 1].")


@dataclass(frozen=True)
class MeasureAtom:
    """One weighted atom of a discrete sub-probability over (parameters,
    jump marks, initial intensity).

    ``y = (y1, y2)`` pins the jump marks; ``y = None`` averages over the
    exponential mark laws of the containing :class:`MeasureAtoms`.
    """

    weight: float
    alpha: float
    kappa: float
    sigma: float
    c: float
    d: float
    lambda_hat: float
    x0: float
    y: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.weight < 0.0:
            raise ConfigError("Atom weights must be non-negative.")


@dataclass(frozen=True)
class MeasureAtoms:
    """Finite atom set with the shared mark rates and common Poisson rate."""

    atoms: tuple[MeasureAtom, ...]
    gamma1: float
    gamma2: float
    lambda_c: float

    def __post_init__(self) -> None:
        total = sum(a.weight for a in self.atoms)
        if total > 1.0 + 1e-12:
            raise ConfigError("Atom weights must sum to at most 1.")


def _mark_factors(ib, c_load: float, d_load: float, gamma1: float, gamma2: float):
    """Averages exp((c_load y1 + d_load y2) * ib) over the exponential marks."""

    return (gamma1 / (gamma1 - c_load * ib)) * (gamma2 / (gamma2 - d_load * ib))


def survival_fhat(t: float, s, cfg: LimitConfig):
    """Limiting pool survival function between t and s (time-homogeneous).

    exp(x0 B(u) + alpha IB(u)) * gamma1/(gamma1 - c lambda_c IB(u))
    * gamma2/(gamma2 - d lambda_hat IB(u)) with u = s - t, B the
    zero-initial Riccati solution and IB its integral. Values lie in (0, 1]
    and decrease in u; both denominators exceed their gamma since IB <= 0.
    """

    u = np.asarray(s, dtype=float) - t
    if np.any(u < 0.0):
        raise ValueError("Require s >= t.")
    b = riccati_b(cfg.kappa, cfg.sigma, u)
    ib = integral_b(cfg.kappa, cfg.sigma, u)
    out = np.exp(cfg.x0 * b + cfg.alpha * ib) * _mark_factors(
        ib, cfg.c * cfg.lambda_c, cfg.d * cfg.lambda_hat, cfg.gamma1, cfg.gamma2)
    return float(out) if out.ndim == 0 else out


def survival_fhat_comonotone(t: float, s, cfg: LimitConfig):
    """Variant of :func:`survival_fhat` for identical common and
    idiosyncratic marks (one shared exponential size Y = Ytilde).

    Requires gamma1 == gamma2; the two mark factors collapse into
    gamma / (gamma - (c lambda_c + d lambda_hat) IB(u)). Coincides with
    :func:`survival_fhat` whenever one of the two drift loadings vanishes.
    """

    if cfg.gamma1 != cfg.gamma2:
        raise ValueError("Comonotone marks require gamma1 == gamma2.")
    u = np.asarray(s, dtype=float) - t
    if np.any(u < 0.0):
        raise ValueError("Require s >= t.")
    b = riccati_b(cfg.kappa, cfg.sigma, u)
    ib = integral_b(cfg.kappa, cfg.sigma, u)
    load = cfg.c * cfg.lambda_c + cfg.d * cfg.lambda_hat
    out = np.exp(cfg.x0 * b + cfg.alpha * ib) * cfg.gamma1 / (cfg.gamma1 - load * ib)
    return float(out) if out.ndim == 0 else out


def exposure_limit(t: float, maturity: float, cfg: LimitConfig,
                   rel_tol: float = 1e-8) -> float:
    """Limit exposure per unit name of a long investor at time t.

    l_z [e^{-r (T-t)} Fhat(t,T) - 1] + (s_z + r l_z) * discounted integral
    of Fhat(t, .) over [t, T]; the integral uses Simpson doubling with the
    given relative tolerance. Vanishes at t = T.
    """

    if t > maturity:
        raise ValueError("Require t <= maturity.")
    span = maturity - t
    if span == 0.0:
        return 0.0

    def integrand(u):
        return np.exp(-cfg.r * u) * survival_fhat(0.0, u, cfg)

    integral = simpson_adaptive(integrand, 0.0, span, rel_tol=rel_tol)
    terminal = cfg.l_z * (math.exp(-cfg.r * span) * survival_fhat(0.0, span, cfg) - 1.0)
    return terminal + (cfg.s_z + cfg.r * cfg.l_z) * integral


def limit_measure_mass(t: float, atoms: MeasureAtoms) -> float:
    """Total surviving mass of the limit measure at time t.

    Each atom contributes weight * exp(x0 B + alpha IB) times either the
    exponential-mark average (y = None) or exp((c lambda_c y1 +
    d lambda_hat y2) IB) for pinned marks. Reduces to
    :func:`survival_fhat` for a single unit atom with averaged marks.
    """

    if t < 0.0:
        raise ValueError("t must be non-negative.")
    total = 0.0
    for a in atoms.atoms:
        b = riccati_b(a.kappa, a.sigma, t)
        ib = integral_b(a.kappa, a.sigma, t)
        core = math.exp(a.x0 * b + a.alpha * ib)
        if a.y is None:
            fac = _mark_factors(ib, a.c * atoms.lambda_c, a.d * a.lambda_hat,
                                atoms.gamma1, atoms.gamma2)
        else:
            y1, y2 = a.y
            fac = math.exp((a.c * atoms.lambda_c * y1 + a.d * a.lambda_hat * y2) * ib)
        total += a.weight * core * fac
    return total


def limit_exp_test(theta: float, t: float, cfg: LimitConfig) -> float:
    """Limit-measure integral of the test function exp(theta x) at time t.

    Swaps the zero-initial Riccati solution for the one started at theta
    (theta = 0 recovers the surviving mass): exp(alpha Ibeta + beta(t) x0)
    times the exponential-mark averages at Ibeta.
    """

    if theta > 0.0:
        raise ValueError("theta must be <= 0.")
    if t < 0.0:
        raise ValueError("t must be non-negative.")
    if theta == 0.0:
        bt = riccati_b(cfg.kappa, cfg.sigma, t)
        ib = integral_b(cfg.kappa, cfg.sigma, t)
    else:
        bt = riccati_beta(cfg.kappa, cfg.sigma, theta, t)
        ib = integral_beta(cfg.kappa, cfg.sigma, theta, t)
    return float(np.exp(cfg.alpha * ib + bt * cfg.x0) * _mark_factors(
        ib, cfg.c * cfg.lambda_c, cfg.d * cfg.lambda_hat, cfg.gamma1, cfg.gamma2))


def empirical_measure_eval(pathset: PathSet, f_spec, t: float) -> tuple[float, float]:
    """Monte-Carlo average of the surviving-name empirical measure applied
    to a test function, with standard error.

    ``f_spec`` is "one" or ("exp", theta): the per-path statistic is the
    equal-weight average over names of f(intensity at t) times the survival
    indicator at t.
    """

    k = pathset.n_names
    if k == 0:
        raise ValueError("PathSet holds no reference names.")
    i_t = pathset.time_index(t)
    x = pathset.intensities[:, i_t, :k]
    alive = pathset.default_times[:, :k] > t
    if f_spec == "one":
        f = np.ones_like(x)
    elif isinstance(f_spec, tuple) and len(f_spec) == 2 and f_spec[0] == "exp":
        theta = float(f_spec[1])
        if theta > 0.0:
            raise ValueError("theta must be <= 0.")
        f = np.exp(theta * x)
    else:
        raise ValueError("f_spec must be 'one' or ('exp', theta).")
    per_path = (f * alive).mean(axis=1)
    n = len(per_path)
    stderr = float(per_path.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(per_path.mean()), stderr


def build_name_sequence(cfg: LimitConfig, K: int) -> list[NameParams]:
    """Parameter ladder decreasing to the limit: field_k = field * (1 + 1/k),
    except the loss, which increases as l_z * (1 - 1/k); every position is
    long (z = +1)."""

    if K < 1:
        raise ValueError("K must be >= 1.")
    out = []
    for k in range(1, K + 1):
        up = 1.0 + 1.0 / k
        out.append(NameParams(
            alpha=cfg.alpha * up, kappa=cfg.kappa * up, sigma=cfg.sigma * up,
            c=cfg.c * up, d=cfg.d * up, lambda_hat=cfg.lambda_hat * up,
            xi0=cfg.x0 * up, spread=cfg.s_z * up, loss=cfg.l_z * (1.0 - 1.0 / k),
            z=1))
    return out
