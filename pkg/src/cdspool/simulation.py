"""Monte-Carlo engine for the K-name + two-counterparty default system.

Intensities follow mean-reverting CEV/CIR dynamics with two jump layers: a
common Poisson process hitting every entity simultaneously (exponential
sizes for names, a Marshall-Olkin pair for the counterparties) and
per-entity idiosyncratic Poisson jumps. Default times are doubly
stochastic: unit-mean exponential thresholds drawn up front, crossed by the
trapezoidal integral of the simulated intensity on the fine grid.

Discretization is Euler with full truncation (positive part in both drift
and diffusion); stored intensities are the truncated, non-negative values.

Reproducibility contract: paths are generated in fixed-width blocks, each
block owning a counter-based RNG stream derived from (seed, stream tag,
block index). A path's draws therefore depend only on the seed and its own
index, never on the total path count or on how many workers process the
blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.random import Generator, Philox
from scipy.integrate import cumulative_simpson

from .errors import AccuracyError, ConfigError
from .jumps import BveParams, mgf_exp, sample_bve
from .quadrature import simpson_weights
from .riccati import riccati_b

__all__ = [
    "NameParams",
    "CounterpartySide",
    "CounterpartyParams",
    "PathSet",
    "simulate_paths",
    "sample_defaults",
    "mc_exposure",
    "mc_h1_oracle",
    "mc_h2_oracle",
    "mc_joint_survival_oracle",
    "mc_limit_transform",
    "load_pathset_dump",
]

_BLOCK_PATHS = 0  # stream tags: keep per-purpose streams disjoint
_BLOCK_LIMIT = 1


@dataclass(frozen=True)
class NameParams:
    """Credit and contract parameters of one reference name.

    alpha/kappa/sigma are the mean-reverting diffusion parameters, c and d
    the common/idiosyncratic jump loadings, lambda_hat the idiosyncratic
    Poisson rate, xi0 the initial intensity. spread and loss are the CDS
    premium and loss-given-default; z = +1 if the investor is long
    (receives spread), -1 if short.
    """

    alpha: float
    kappa: float
    sigma: float
    c: float
    d: float
    lambda_hat: float
    xi0: float
    spread: float
    loss: float
    z: int = 1
    rho: float = 0.5

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.alpha, self.kappa, self.sigma, self.c,
                                       self.d, self.lambda_hat, self.xi0,
                                       self.spread, self.loss))):
            raise ConfigError("NameParams fields must be finite.")
        if self.alpha < 0 or self.kappa <= 0 or self.sigma < 0:
            raise ConfigError("Require alpha >= 0, kappa > 0, sigma >= 0.")
        if self.c < 0 or self.d < 0 or self.lambda_hat < 0:
            raise ConfigError("Jump loadings and rates must be non-negative.")
        if self.xi0 < 0:
            raise ConfigError("xi0 must be non-negative.")
        if not 0.5 <= self.rho < 1.0:
            raise ConfigError("rho must lie in [0.5, 1).")
        if not 0.0 <= self.loss <= 1.0:
            raise ConfigError("loss must lie in [0, 1].")
        if self.z not in (-1, 1):
            raise ConfigError("z must be +1 or -1.")


@dataclass(frozen=True)
class CounterpartySide:
    """Intensity parameters of one counterparty (same fields as a name)."""

    alpha: float
    kappa: float
    sigma: float
    c: float
    d: float
    lambda_hat: float
    xi0: float

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.alpha, self.kappa, self.sigma, self.c,
                                       self.d, self.lambda_hat, self.xi0))):
            raise ConfigError("CounterpartySide fields must be finite.")
        if self.alpha < 0 or self.kappa <= 0 or self.sigma < 0:
            raise ConfigError("Require alpha >= 0, kappa > 0, sigma >= 0.")
        if self.c < 0 or self.d < 0 or self.lambda_hat < 0 or self.xi0 < 0:
            raise ConfigError("Jump fields and xi0 must be non-negative.")


@dataclass(frozen=True)
class CounterpartyParams:
    """Both counterparties plus their joint jump-size laws.

    common_jump is the law of the size pair applied at common Poisson
    events; idio_jump holds the idiosyncratic size laws, of which only the
    marginals enter the dynamics (each side's idiosyncratic clock is its
    own).
    """

    side_a: CounterpartySide
    side_b: CounterpartySide
    common_jump: BveParams
    idio_jump: BveParams
    loss_a: float = 0.4
    loss_b: float = 0.4
    rho_hat: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.loss_a <= 1.0 and 0.0 < self.loss_b <= 1.0):
            raise ConfigError("Counterparty losses must lie in (0, 1].")
        if not 0.5 <= self.rho_hat < 1.0:
            raise ConfigError("rho_hat must lie in [0.5, 1).")

    def with_initial(self, x_a: float, x_b: float) -> "CounterpartyParams":
        return replace(self, side_a=replace(self.side_a, xi0=x_a),
                       side_b=replace(self.side_b, xi0=x_b))


@dataclass
class PathSet:
    """Simulated intensity paths sampled on a sub-grid of the Euler grid.

    intensities[m, i, j] is the (non-negative) intensity of entity j at
    times[i] on path m; integrated holds the running fine-grid trapezoid
    integral at the same nodes. Entities are ordered names first, then
    counterparties A and B when present. default_times are resolved at
    fine-grid resolution against the stored unit-exponential thresholds.
    """

    times: np.ndarray
    dt: float
    horizon: float
    n_names: int
    intensities: np.ndarray
    thresholds: np.ndarray
    default_times: np.ndarray
    seed: int
    lambda_c: float
    gamma1: float
    gamma2: float
    integrated: np.ndarray | None = None
    common_jump_times: list | None = None
    idio_jump_counts: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.intensities.shape[0]

    @property
    def n_entities(self) -> int:
        return self.intensities.shape[2]

    def time_index(self, t: float) -> int:
        idx = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[idx] - t) > 1e-9 * max(1.0, self.horizon):
            raise ValueError(f"t={t} is not a stored sample time.")
        return idx

    def survival_indicator(self, t: float) -> np.ndarray:
        """1 while the entity has not defaulted by t, per path and entity."""

        return self.default_times > t

    def dump(self, path) -> None:
        """Columnar debug dump, little-endian float64 throughout.

        Layout: 8-byte magic b"CDSPOOL1", then the header
        (n_names, n_entities, n_times, n_paths, seed) as <u8 and
        (dt, horizon) as <f8, then the sample times (n_times,) and the
        intensity block (n_paths, n_times, n_entities) in C order.
        """

        import struct

        with open(path, "wb") as fh:
            fh.write(b"CDSPOOL1")
            fh.write(struct.pack("<5Q", self.n_names, self.n_entities,
                                 len(self.times), self.n_paths, self.seed))
            fh.write(struct.pack("<2d", self.dt, self.horizon))
            fh.write(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.intensities, dtype="<f8").tobytes())


def load_pathset_dump(path) -> dict:
    """Read a :meth:`PathSet.dump` file back into plain arrays."""

    import struct

    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != b"CDSPOOL1":
            raise ValueError("not a PathSet dump (bad magic).")
        n_names, n_entities, n_times, n_paths, seed = struct.unpack("<5Q", fh.read(40))
        dt, horizon = struct.unpack("<2d", fh.read(16))
        times = np.frombuffer(fh.read(8 * n_times), dtype="<f8")
        data = np.frombuffer(fh.read(8 * n_paths * n_times * n_entities), dtype="<f8")
    return {
        "n_names": n_names, "n_entities": n_entities, "seed": seed,
        "dt": dt, "horizon": horizon, "times": times,
        "intensities": data.reshape(n_paths, n_times, n_entities),
    }


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(seed).generate_state(2, np.uint64)


def _block_generator(key: np.ndarray, tag: int, block: int) -> Generator:
    counter = np.array([0, 0, block, tag], dtype=np.uint64)
    return Generator(Philox(counter=counter, key=key))


def _entity_vectors(names: Sequence[NameParams], cps: CounterpartyParams | None):
    ent = list(names)
    if cps is not None:
        ent.extend([cps.side_a, cps.side_b])
    get = lambda attr: np.array([getattr(e, attr) for e in ent], dtype=float)
    vec = {a: get(a) for a in ("alpha", "kappa", "sigma", "c", "d", "lambda_hat", "xi0")}
    rho = np.array([n.rho for n in names], dtype=float)
    if cps is not None:
        rho = np.concatenate([rho, [cps.rho_hat, cps.rho_hat]])
    vec["rho"] = rho
    return vec


def _sorted_events(step, *cols):
    order = np.argsort(step, kind="stable")
    return (step[order],) + tuple(c[order] for c in cols)


def simulate_paths(names: Sequence[NameParams], cps: CounterpartyParams | None = None, *,
                   lambda_c: float = 0.0, gamma1: float = 1.0, gamma2: float = 1.0,
                   horizon: float, n_paths: int, seed: int | None, dt: float | None = None,
                   sample_times=None, workers: int = 1, block_size: int = 256,
                   record_integrated: bool = True, record_jumps: bool = True) -> PathSet:
    """Simulate the joint intensity system and resolve default times.

    Parameters
    ----------
    names, cps
        Reference names and (optionally) the two counterparties.
    lambda_c, gamma1, gamma2
        Common Poisson rate and the exponential rates of the names' common
        and idiosyncratic jump sizes.
    horizon, n_paths, seed
        Simulation horizon, path count, and RNG seed. seed=None draws fresh
        entropy (recorded in the result, but reproducibility is then up to
        the caller).
    dt
        Euler step; defaults to horizon / 1000. Must divide the horizon.
    sample_times
        Grid times at which paths are stored (default: every node). Must
        lie on the Euler grid.
    workers
        Thread count for the block loop; never changes the output values.
    """

    if cps is None and len(names) == 0:
        raise ConfigError("Need at least one name or the counterparty pair.")
    for v in (lambda_c, gamma1, gamma2, horizon):
        if not (math.isfinite(v)):
            raise ConfigError("lambda_c, gamma1, gamma2, horizon must be finite.")
    if lambda_c < 0 or gamma1 <= 0 or gamma2 <= 0:
        raise ConfigError("Require lambda_c >= 0 and gamma1, gamma2 > 0.")
    if dt is None:
        dt = horizon / 1000.0
    if not dt > 0 or horizon < dt:
        raise ConfigError("Require dt > 0 and horizon >= dt.")
    if n_paths < 1:
        raise ConfigError("n_paths must be >= 1.")
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-8 * horizon:
        raise ConfigError("dt must divide the horizon.")

    if seed is None:
        seed = int(np.random.SeedSequence().entropy) & (2**64 - 1)
    key = _philox_key(seed)

    K = len(names)
    E = K + (2 if cps is not None else 0)
    vec = _entity_vectors(names, cps)
    grid = np.arange(n_steps + 1) * dt
    if sample_times is None:
        sample_idx = np.arange(n_steps + 1)
    else:
        sample_times = np.asarray(sample_times, dtype=float)
        sample_idx = np.rint(sample_times / dt).astype(int)
        if np.any(np.abs(sample_idx * dt - sample_times) > 1e-9 * max(1.0, horizon)):
            raise ConfigError("sample_times must lie on the Euler grid.")
        if np.any((sample_idx < 0) | (sample_idx > n_steps)):
            raise ConfigError("sample_times must lie in [0, horizon].")
    n_s = len(sample_idx)
    store_slot = np.full(n_steps + 1, -1, dtype=int)
    store_slot[sample_idx] = np.arange(n_s)

    intensities = np.empty((n_paths, n_s, E))
    integrated = np.empty((n_paths, n_s, E)) if record_integrated else None
    thresholds = np.empty((n_paths, E))
    default_times = np.empty((n_paths, E))
    idio_counts = np.empty((n_paths, E), dtype=np.int64) if record_jumps else None
    common_times: list = [None] * n_paths if record_jumps else None

    all_sqrt = bool(np.all(vec["rho"] == 0.5))
    sqrt_dt = math.sqrt(dt)
    # idiosyncratic size rates: names use gamma2, counterparties their BVE marginals
    idio_rate = np.full(E, gamma2)
    if cps is not None:
        idio_rate[K] = cps.idio_jump.marginal_rate_a
        idio_rate[K + 1] = cps.idio_jump.marginal_rate_b
    n_blocks = (n_paths + block_size - 1) // block_size

    def run_block(b: int) -> None:
        rng = _block_generator(key, _BLOCK_PATHS, b)
        r0 = b * block_size
        r1 = min(n_paths, r0 + block_size)
        nb = r1 - r0
        bf = block_size  # draw at full width so paths are invariant to n_paths

        thr = rng.standard_exponential((bf, E))

        # common-jump schedule: one Poisson clock shared by every entity
        if lambda_c > 0.0:
            ncom = rng.poisson(lambda_c * horizon, bf)
            tot = int(ncom.sum())
            ev_t = rng.random(tot) * horizon
            ev_row = np.repeat(np.arange(bf), ncom)
            csize_names = (rng.standard_exponential((tot, K)) / gamma1
                           * vec["c"][None, :K]) if K else np.empty((tot, 0))
            if cps is not None:
                ya, yb = sample_bve(cps.common_jump, rng, size=tot)
                csize_cp = np.column_stack([vec["c"][K] * ya, vec["c"][K + 1] * yb])
                ev_step, ev_row, ev_t, csize_names, csize_cp = _sorted_events(
                    (ev_t / dt).astype(np.int64), ev_row, ev_t, csize_names, csize_cp)
            else:
                ev_step, ev_row, ev_t, csize_names = _sorted_events(
                    (ev_t / dt).astype(np.int64), ev_row, ev_t, csize_names)
            cptr = np.searchsorted(ev_step, np.arange(n_steps + 1))
        else:
            tot = 0
            ev_row = np.empty(0, dtype=np.int64)
            ev_t = np.empty(0)
            cptr = np.zeros(n_steps + 1, dtype=np.int64)

        # idiosyncratic schedules, one Poisson clock per entity
        nidio = rng.poisson(vec["lambda_hat"] * horizon, (bf, E))
        flat = nidio.reshape(-1)
        tot2 = int(flat.sum())
        irow = np.repeat(np.arange(bf), nidio.sum(axis=1))
        icol = np.repeat(np.tile(np.arange(E), bf), flat)
        it = rng.random(tot2) * horizon
        isize = rng.standard_exponential(tot2) / idio_rate[icol] * vec["d"][icol]
        istep, irow, icol, isize = _sorted_events((it / dt).astype(np.int64),
                                                  irow, icol, isize)
        iptr = np.searchsorted(istep, np.arange(n_steps + 1))

        x = np.tile(vec["xi0"], (bf, 1))
        prev_pos = x.copy()
        integ = np.zeros((bf, E))
        tau = np.full((bf, E), np.inf)
        alive = np.ones((bf, E), dtype=bool)
        if store_slot[0] >= 0:
            intensities[r0:r1, store_slot[0]] = np.maximum(x[:nb], 0.0)
            if record_integrated:
                integrated[r0:r1, store_slot[0]] = 0.0

        x_names = x[:, :K]
        x_cp = x[:, K:]
        for i in range(n_steps):
            z = rng.standard_normal((bf, E))
            xp = np.maximum(x, 0.0)
            vol = np.sqrt(xp) if all_sqrt else xp ** vec["rho"]
            x += (vec["alpha"] - vec["kappa"] * xp) * dt + vec["sigma"] * vol * (sqrt_dt * z)
            lo, hi = cptr[i], cptr[i + 1]
            if hi > lo:
                if K:
                    np.add.at(x_names, ev_row[lo:hi], csize_names[lo:hi])
                if cps is not None:
                    np.add.at(x_cp, ev_row[lo:hi], csize_cp[lo:hi])
            lo, hi = iptr[i], iptr[i + 1]
            if hi > lo:
                np.add.at(x, (irow[lo:hi], icol[lo:hi]), isize[lo:hi])
            xpos = np.maximum(x, 0.0)
            integ += (0.5 * dt) * (prev_pos + xpos)
            prev_pos = xpos
            newly = alive & (integ >= thr)
            if newly.any():
                tau[newly] = (i + 1) * dt
                alive &= ~newly
            slot = store_slot[i + 1]
            if slot >= 0:
                intensities[r0:r1, slot] = xpos[:nb]
                if record_integrated:
                    integrated[r0:r1, slot] = integ[:nb]

        thresholds[r0:r1] = thr[:nb]
        default_times[r0:r1] = tau[:nb]
        if record_jumps:
            idio_counts[r0:r1] = nidio[:nb]
            for m in range(nb):
                common_times[r0 + m] = np.sort(ev_t[ev_row == m]) if tot else np.empty(0)

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, range(n_blocks)))
    else:
        for b in range(n_blocks):
            run_block(b)

    return PathSet(times=grid[sample_idx], dt=dt, horizon=horizon, n_names=K,
                   intensities=intensities, thresholds=thresholds,
                   default_times=default_times, seed=seed, lambda_c=lambda_c,
                   gamma1=gamma1, gamma2=gamma2, integrated=integrated,
                   common_jump_times=common_times, idio_jump_counts=idio_counts)


def sample_defaults(pathset: PathSet, rng: Generator | None = None,
                    thresholds=None) -> np.ndarray:
    """Default times: first grid time where the integrated intensity crosses
    the unit-exponential threshold.

    With no arguments this returns the fine-grid default times resolved
    during simulation. Passing ``rng`` (fresh thresholds) or ``thresholds``
    re-derives default times on the stored sample grid, which lets tests
    redraw the doubly stochastic layer on frozen intensity paths.
    """

    if rng is None and thresholds is None:
        return pathset.default_times.copy()
    if pathset.integrated is None:
        raise ValueError("PathSet was built without record_integrated.")
    m, _, e = pathset.integrated.shape
    if thresholds is None:
        thresholds = rng.standard_exponential((m, e))
    thr = np.broadcast_to(np.asarray(thresholds, dtype=float), (m, e))
    crossed = pathset.integrated >= thr[:, None, :]
    any_cross = crossed.any(axis=1)
    first = np.argmax(crossed, axis=1)
    return np.where(any_cross, pathset.times[first], np.inf)


def _name_vectors(names: Sequence[NameParams]):
    get = lambda attr: np.array([getattr(n, attr) for n in names], dtype=float)
    return get


def mc_exposure(pathset: PathSet, names: Sequence[NameParams], t: float, maturity: float,
                r: float, *, n_panels: int = 64) -> tuple[float, float]:
    """Monte-Carlo estimate of the per-name portfolio exposure at time t.

    Each path prices its CDS book from the simulated intensity state at t
    through the name-level affine survival transform
    exp(A0(s - t) + B0(s - t) xi_t); the premium-leg time integral uses
    composite Simpson on ``n_panels`` panels. Returns (estimate, stderr)
    of the per-name (divided by K) exposure of a long investor at time t
    for contracts maturing at ``maturity``.
    """

    if t > maturity:
        raise ValueError("Require t <= maturity.")
    K = pathset.n_names
    if K == 0 or len(names) != K:
        raise ValueError("names must match the simulated reference pool.")
    get = _name_vectors(names)
    rho = get("rho")
    if np.any(rho != 0.5):
        raise ValueError("Exposure transform requires square-root names (rho = 0.5).")
    if n_panels < 2 or n_panels % 2:
        raise ValueError("n_panels must be a positive even integer.")

    i_t = pathset.time_index(t)
    x_t = pathset.intensities[:, i_t, :K]
    z = get("z")
    spread, loss = get("spread"), get("loss")
    alpha, kappa, sigma = get("alpha"), get("kappa"), get("sigma")
    c, d, lam = get("c"), get("d"), get("lambda_hat")

    span = maturity - t
    coeff_loss = z * loss / K
    if span == 0.0:
        return 0.0, 0.0

    refine = 16
    nf = refine * n_panels
    uf = np.linspace(0.0, span, nf + 1)
    b0f = np.column_stack([riccati_b(kappa[k], sigma[k], uf) for k in range(K)])
    integrand = (alpha[None, :] * b0f
                 + pathset.lambda_c * (mgf_exp(c[None, :] * b0f, pathset.gamma1) - 1.0)
                 + lam[None, :] * (mgf_exp(d[None, :] * b0f, pathset.gamma2) - 1.0))
    a0f = cumulative_simpson(integrand, dx=span / nf, axis=0, initial=0.0)
    a0 = a0f[::refine]
    b0 = b0f[::refine]
    # half-resolution cross-check of the exponent quadrature
    a0_half = cumulative_simpson(integrand[::2], dx=2 * span / nf, axis=0,
                                 initial=0.0)[::refine // 2]
    drift = float(np.max(np.abs(a0 - a0_half)))
    if drift > 1e-7:
        raise AccuracyError(
            f"survival-exponent quadrature off by {drift:.3e} between "
            f"refinements; increase n_panels.")

    h = span / n_panels
    w = simpson_weights(n_panels, h)
    disc = np.exp(-r * np.arange(n_panels + 1) * h)
    coeff_spread = z * (spread + r * loss) / K

    acc = np.zeros(pathset.n_paths)
    surv_T = None
    for j in range(n_panels + 1):
        surv = np.exp(a0[j][None, :] + b0[j][None, :] * x_t)
        acc += (w[j] * disc[j]) * (surv * coeff_spread).sum(axis=1)
        if j == n_panels:
            surv_T = surv
    eps = disc[-1] * (surv_T * coeff_loss).sum(axis=1) - coeff_loss.sum() + acc
    n = len(eps)
    stderr = float(eps.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(eps.mean()), stderr


def _kernel_mc(cps: CounterpartyParams, lambda_c: float, u, x_a: float, x_b: float,
               n_paths: int, seed: int | None, dt: float | None,
               weight: str | None, workers: int = 1):
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr <= 0.0):
        raise ValueError("u must be positive.")
    horizon = float(u_arr.max())
    if dt is None:
        dt = horizon / 1000.0
    ps = simulate_paths((), cps.with_initial(x_a, x_b), lambda_c=lambda_c,
                        horizon=horizon, n_paths=n_paths, seed=seed, dt=dt,
                        sample_times=u_arr, workers=workers, block_size=32_768,
                        record_jumps=False)
    idx = [ps.time_index(ui) for ui in u_arr]
    est = np.empty(len(idx))
    se = np.empty(len(idx))
    for j, i in enumerate(idx):
        surv = np.exp(-(ps.integrated[:, i, 0] + ps.integrated[:, i, 1]))
        if weight == "b":
            vals = surv * ps.intensities[:, i, 1]
        elif weight == "a":
            vals = surv * ps.intensities[:, i, 0]
        else:
            vals = surv
        est[j] = vals.mean()
        se[j] = vals.std(ddof=1) / math.sqrt(len(vals))
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return float(est[0]), float(se[0])
    return est, se


def mc_h1_oracle(cps: CounterpartyParams, lambda_c: float, u, x_a: float, x_b: float,
                 n_paths: int, seed: int | None, dt: float | None = None,
                 workers: int = 1):
    """MC estimate of E[exp(-integral of xi_A + xi_B on [0,u]) * xi_B(u)]
    started from (x_a, x_b), with standard error. Validation oracle for the
    closed-form default-density kernel of side B."""

    return _kernel_mc(cps, lambda_c, u, x_a, x_b, n_paths, seed, dt, "b", workers)


def mc_h2_oracle(cps: CounterpartyParams, lambda_c: float, u, x_a: float, x_b: float,
                 n_paths: int, seed: int | None, dt: float | None = None,
                 workers: int = 1):
    """Mirror of :func:`mc_h1_oracle` weighted by xi_A(u)."""

    return _kernel_mc(cps, lambda_c, u, x_a, x_b, n_paths, seed, dt, "a", workers)


def mc_joint_survival_oracle(cps: CounterpartyParams, lambda_c: float, u, x_a: float,
                             x_b: float, n_paths: int, seed: int | None,
                             dt: float | None = None, workers: int = 1):
    """MC estimate of the joint survival factor E[exp(-integral of xi_A + xi_B)]."""

    return _kernel_mc(cps, lambda_c, u, x_a, x_b, n_paths, seed, dt, None, workers)


def mc_limit_transform(alpha: float, kappa: float, sigma: float, drift_c: float,
                       drift_d: float, gamma1: float, gamma2: float, x0: float, u,
                       n_paths: int, seed: int | None, theta: float = 0.0,
                       dt: float | None = None, block_size: int = 8192):
    """MC estimate of E[exp(-integral of X on [0,u]) * exp(theta X_u)] for the
    limit killing-rate diffusion.

    X is a square-root diffusion with per-path constant drift shift
    drift_c * Y + drift_d * Ytilde, Y ~ Exp(gamma1), Ytilde ~ Exp(gamma2)
    (the frozen-mark drift of the large-pool limit). Used as the
    independent oracle for the closed-form pool survival function.
    """

    if theta > 0.0:
        raise ValueError("theta must be <= 0.")
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u_arr <= 0.0):
        raise ValueError("u must be positive.")
    horizon = float(u_arr.max())
    if dt is None:
        dt = horizon / 1000.0
    n_steps = int(round(horizon / dt))
    if abs(n_steps * dt - horizon) > 1e-8 * horizon:
        raise ConfigError("dt must divide the horizon.")
    sample_idx = np.rint(u_arr / dt).astype(int)
    if np.any(np.abs(sample_idx * dt - u_arr) > 1e-9 * horizon):
        raise ConfigError("u values must lie on the Euler grid.")
    store_slot = np.full(n_steps + 1, -1, dtype=int)
    store_slot[sample_idx] = np.arange(len(sample_idx))

    if seed is None:
        seed = int(np.random.SeedSequence().entropy) & (2**64 - 1)
    key = _philox_key(seed)
    sqrt_dt = math.sqrt(dt)
    vals = np.empty((n_paths, len(sample_idx)))
    n_blocks = (n_paths + block_size - 1) // block_size

    for b in range(n_blocks):
        rng = _block_generator(key, _BLOCK_LIMIT, b)
        r0 = b * block_size
        r1 = min(n_paths, r0 + block_size)
        bf = block_size
        y1 = rng.standard_exponential(bf) / gamma1
        y2 = rng.standard_exponential(bf) / gamma2
        drift0 = alpha + drift_c * y1 + drift_d * y2
        x = np.full(bf, float(x0))
        prev_pos = x.copy()
        integ = np.zeros(bf)
        for i in range(n_steps):
            z = rng.standard_normal(bf)
            xp = np.maximum(x, 0.0)
            x += (drift0 - kappa * xp) * dt + sigma * np.sqrt(xp) * (sqrt_dt * z)
            xpos = np.maximum(x, 0.0)
            integ += (0.5 * dt) * (prev_pos + xpos)
            prev_pos = xpos
            slot = store_slot[i + 1]
            if slot >= 0:
                v = np.exp(-integ[:r1 - r0])
                if theta != 0.0:
                    v = v * np.exp(theta * xpos[:r1 - r0])
                vals[r0:r1, slot] = v

    est = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n_paths)
    if np.isscalar(u) or np.asarray(u).ndim == 0:
        return float(est[0]), float(se[0])
    return est, se
