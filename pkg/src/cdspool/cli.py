"""Command-line front end: config ingestion, experiment selection, seeding,
worker control, and output routing.

Config files are flat ``section.key = value`` text (sections: limit,
counterparty, experiment, validate); ``#`` starts a comment. Overrides come
from the CDSPOOL_SET environment variable (semicolon-separated key=value
pairs) and repeatable ``--set key=value`` flags, applied in that order, and
must reference known keys.

Exit codes: 0 success, 2 configuration error, 3 validation failure,
4 numerical-accuracy error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .errors import AccuracyError, ConfigError
from .exposure import LimitConfig
from .harness import ExperimentSpec, run_experiment
from .jumps import BveParams
from .simulation import CounterpartyParams, CounterpartySide

__all__ = ["main", "parse_config", "build_spec"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_ACCURACY = 4

ENV_OVERRIDES = "CDSPOOL_SET"

EXPERIMENTS = ("convergence", "bcva-sweep", "validate", "measure-convergence")
SEED_REQUIRED = ("convergence", "measure-convergence")

_FLOAT = "float"
_INT = "int"
_STR = "str"
_INT_LIST = "int_list"
_FLOAT_LIST = "float_list"

_LIMIT_FIELDS = ("alpha", "kappa", "sigma", "c", "d", "lambda_hat", "x0",
                 "gamma1", "gamma2", "lambda_c", "s_z", "l_z", "r")
_CP_SIDE_FIELDS = ("alpha", "kappa", "sigma", "c", "d", "lambda_hat", "xi0")

KNOWN_KEYS: dict[str, str] = {}
KNOWN_KEYS.update({f"limit.{f}": _FLOAT for f in _LIMIT_FIELDS})
for side in ("a", "b"):
    KNOWN_KEYS.update({f"counterparty.{f}_{side}": _FLOAT for f in _CP_SIDE_FIELDS})
KNOWN_KEYS.update({
    "counterparty.gamma_a": _FLOAT,
    "counterparty.gamma_b": _FLOAT,
    "counterparty.gamma_ab": _FLOAT,
    "counterparty.gamma_a_idio": _FLOAT,
    "counterparty.gamma_b_idio": _FLOAT,
    "counterparty.gamma_ab_idio": _FLOAT,
    "counterparty.loss_a": _FLOAT,
    "counterparty.loss_b": _FLOAT,
    "experiment.kind": _STR,
    "experiment.horizon": _FLOAT,
    "experiment.n_paths": _INT,
    "experiment.k_values": _INT_LIST,
    "experiment.n_times": _INT,
    "experiment.dt": _FLOAT,
    "experiment.repeats": _INT,
    "experiment.sweep": _STR,
    "experiment.sweep_values": _FLOAT_LIST,
    "experiment.kernel_grid": _INT,
    "validate.perturb": _STR,
})


def parse_config(text: str) -> dict[str, str]:
    """Parse flat ``section.key = value`` lines into a raw string mapping."""

    mapping: dict[str, str] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {ln}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {ln}: unknown config key {key!r}")
        mapping[key] = value
    return mapping


def _apply_overrides(mapping: dict[str, str], pairs: list[str], origin: str) -> None:
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"{origin}: override {pair!r} is not key=value")
        key, value = (part.strip() for part in pair.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{origin}: override references unknown key {key!r}")
        mapping[key] = value


def _convert(key: str, raw: str):
    kind = KNOWN_KEYS[key]
    try:
        if kind == _FLOAT:
            return float(raw)
        if kind == _INT:
            return int(raw)
        if kind == _INT_LIST:
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip())
        if kind == _FLOAT_LIST:
            return tuple(float(part.strip()) for part in raw.split(",") if part.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} ({exc})") from None


def _section(mapping: dict[str, str], prefix: str) -> dict[str, object]:
    out = {}
    for key, raw in mapping.items():
        sec, _, name = key.partition(".")
        if sec == prefix:
            out[name] = _convert(key, raw)
    return out


def _default_limit() -> LimitConfig:
    # baseline pool used by the sensitivity studies; harmless for validate
    return LimitConfig(alpha=0.01, kappa=0.5, sigma=0.3, c=0.1, d=0.1,
                       lambda_hat=0.2, x0=0.02, gamma1=2.0, gamma2=2.0,
                       lambda_c=0.1, s_z=0.02, l_z=0.4, r=0.03)


def _build_limit(sec: dict[str, object]) -> LimitConfig:
    missing = [f for f in _LIMIT_FIELDS if f not in sec]
    if missing:
        raise ConfigError(f"limit section is missing keys: {missing}")
    return LimitConfig(**{f: sec[f] for f in _LIMIT_FIELDS})


def _build_cps(sec: dict[str, object]) -> CounterpartyParams:
    def side(tag: str) -> CounterpartySide:
        missing = [f for f in _CP_SIDE_FIELDS if f"{f}_{tag}" not in sec]
        if missing:
            raise ConfigError(f"counterparty side {tag}: missing {missing}")
        return CounterpartySide(**{f: sec[f"{f}_{tag}"] for f in _CP_SIDE_FIELDS})

    for req in ("gamma_a", "gamma_b", "gamma_ab"):
        if req not in sec:
            raise ConfigError(f"counterparty section is missing {req}")
    common = BveParams(sec["gamma_a"], sec["gamma_b"], sec["gamma_ab"])
    idio = BveParams(sec.get("gamma_a_idio", sec["gamma_a"]),
                     sec.get("gamma_b_idio", sec["gamma_b"]),
                     sec.get("gamma_ab_idio", sec["gamma_ab"]))
    return CounterpartyParams(side_a=side("a"), side_b=side("b"),
                              common_jump=common, idio_jump=idio,
                              loss_a=sec.get("loss_a", 0.4),
                              loss_b=sec.get("loss_b", 0.4))


def _parse_perturb(raw: str) -> dict[str, float]:
    out = {}
    for part in raw.split(";"):
        part = part.strip()
        if not part:
            continue
        if ":" not in part:
            raise ConfigError(f"validate.perturb entry {part!r} is not name:offset")
        name, offset = part.split(":", 1)
        try:
            out[name.strip()] = float(offset)
        except ValueError:
            raise ConfigError(f"validate.perturb offset {offset!r} is not a number") from None
    return out


def build_spec(mapping: dict[str, str], kind: str, seed: int | None,
               workers: int, config_text: str | None) -> ExperimentSpec:
    """Resolve a raw config mapping plus CLI arguments into an ExperimentSpec."""

    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {kind!r}; expected one of {EXPERIMENTS}")
    declared = mapping.get("experiment.kind")
    if declared is not None and declared != kind:
        raise ConfigError(
            f"config declares experiment.kind={declared!r} but {kind!r} was requested")
    if seed is None and kind in SEED_REQUIRED:
        raise ConfigError(f"experiment {kind!r} requires an explicit --seed")

    exp = _section(mapping, "experiment")
    limit_sec = _section(mapping, "limit")
    cp_sec = _section(mapping, "counterparty")
    val_sec = _section(mapping, "validate")

    limit = _build_limit(limit_sec) if limit_sec else _default_limit()
    if kind != "validate" and not limit_sec:
        raise ConfigError(f"experiment {kind!r} requires a limit section")
    cps = _build_cps(cp_sec) if cp_sec else None
    if kind == "bcva-sweep" and cps is None:
        raise ConfigError("bcva-sweep requires a counterparty section")

    spec = ExperimentSpec(
        kind=kind,
        limit=limit,
        cps=cps,
        horizon=exp.get("horizon", 1.0),
        k_values=exp.get("k_values", (300,)),
        n_paths=exp.get("n_paths", 2000),
        dt=exp.get("dt"),
        n_times=exp.get("n_times", 61),
        seed=seed,
        repeats=exp.get("repeats", 3),
        sweep=exp.get("sweep"),
        sweep_values=exp.get("sweep_values", ()),
        kernel_grid=exp.get("kernel_grid", 4096),
        workers=workers,
        perturb=_parse_perturb(val_sec["perturb"]) if "perturb" in val_sec else {},
        config_text=config_text,
    )
    return spec


def _error_line(code: int, kind: str, message: str) -> None:
    print(json.dumps({"error": {"code": code, "kind": kind, "message": message}},
                     sort_keys=True), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cdspool",
        description="Large-pool CDS analytics: exposure convergence studies, "
                    "bilateral CVA sweeps, and closed-form validation.")
    parser.add_argument("--experiment", required=True,
                        help=f"one of {', '.join(EXPERIMENTS)}")
    parser.add_argument("--config", type=Path, default=None,
                        help="flat key-value config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="RNG seed (required for Monte-Carlo experiments)")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker threads; never changes numerical output")
    parser.add_argument("--out", type=Path, default=Path("results"),
                        help="output directory (default: results)")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="config override, repeatable")
    args = parser.parse_args(argv)

    try:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        config_text = None
        mapping: dict[str, str] = {}
        if args.config is not None:
            try:
                config_text = Path(args.config).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from None
            mapping = parse_config(config_text)
        env = os.environ.get(ENV_OVERRIDES, "")
        if env:
            _apply_overrides(mapping, [p for p in env.split(";") if p.strip()],
                             f"${ENV_OVERRIDES}")
        _apply_overrides(mapping, args.overrides, "--set")

        seed = args.seed
        if seed is not None and not 0 <= seed < 2**64:
            raise ConfigError("--seed must fit in an unsigned 64-bit integer")
        spec = build_spec(mapping, args.experiment, seed, args.workers, config_text)
        tables, report = run_experiment(spec, out_dir=args.out)
    except ConfigError as exc:
        _error_line(EXIT_CONFIG, "config", str(exc))
        return EXIT_CONFIG
    except AccuracyError as exc:
        _error_line(EXIT_ACCURACY, "accuracy", str(exc))
        return EXIT_ACCURACY

    if report is not None:
        sys.stdout.write(report.render())
        if not report.passed:
            _error_line(EXIT_VALIDATION, "validation",
                        f"failed checks: {', '.join(report.failures())}")
            return EXIT_VALIDATION
    print(f"wrote {len(tables)} curve file(s) and run_manifest.json to {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
