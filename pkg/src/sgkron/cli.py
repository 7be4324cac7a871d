"""Command-line front end.

Subcommands::

    sgkron detect STACK --out DIR      detection map of an image stack
    sgkron mse-bench --out DIR         GD/SGD error versus the ICRB (CSV)
    sgkron roc-bench --out DIR         ROC curves of the four detectors (CSV)
    sgkron gen-stack --out NAME        write a synthetic stack

Settings come from, in decreasing priority, command-line flags, a JSON object
given with ``--config`` and built-in defaults. Keys in the JSON file use the
flag names with ``_`` for ``-`` (``alpha0``, ``max_failure_rate``, ...) and
may also set options that have no flag, such as ``tol`` or ``t_grid``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 more failed
windows or trials than ``max_failure_rate`` allows. Errors are printed to
stderr as one JSON line ``{"error": <kind>, "message": <text>}``.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import io as sio
from .detectors import DetectorKind, detection_map
from .estimators import FixedPointConfig
from .exceptions import IoError, MalformedHeader, SgkronError, SizeMismatch
from .model import ModelDims
from .online import SgdConfig
from .simlab import (MSE_FIELDS, FULL_MSE_TRIALS, FULL_ROC_TRIALS, ROC_FIELDS, RocScenario,
                     mse_benchmark, roc_benchmark, simulate_image_stack, write_csv)

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_FAILURES = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class DataError(Exception):
    pass


class TooManyFailures(Exception):
    pass


# --- option validation ------------------------------------------------------

def _int(lo=None):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValueError("must be an integer")
        if lo is not None and v < lo:
            raise ValueError(f"must be >= {lo}")
        return v
    return check


def _float(lo=None, strict=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ValueError("must be a finite number")
        if lo is not None and (v <= lo if strict else v < lo):
            raise ValueError(f"must be {'>' if strict else '>='} {lo}")
        return float(v)
    return check


def _odd(v):
    v = _int(1)(v)
    if v % 2 == 0:
        raise ValueError("must be odd")
    return v


def _choice(options):
    def check(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    return check


def _threads(v):
    if v == "auto":
        return os.cpu_count() or 1
    if isinstance(v, str):
        try:
            v = int(v)
        except ValueError:
            raise ValueError("must be a positive integer or 'auto'") from None
    return _int(1)(v)


def _int_list(v):
    if not isinstance(v, (list, tuple)) or not v:
        raise ValueError("must be a nonempty list of integers")
    return tuple(_int(1)(x) for x in v)


def _complex(v):
    if isinstance(v, complex):
        z = v
    elif isinstance(v, list) and len(v) == 2:
        z = complex(_float()(v[0]), _float()(v[1]))
    elif isinstance(v, (int, float)) and not isinstance(v, bool):
        z = complex(v)
    else:
        raise ValueError("must be a number or a [real, imag] pair")
    if abs(z) >= 1:
        raise ValueError("must have modulus < 1")
    return z


def _region(v):
    if v is None:
        return None
    if not isinstance(v, (list, tuple)) or len(v) != 4:
        raise ValueError("must be [row0, row1, col0, col1] or null")
    return tuple(_int(0)(x) for x in v)


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("must be true or false")
    return v


def _seed(v):
    return _int(0)(v)


COMMON = {
    "seed": (0, _seed),
    "threads": (1, _threads),
    "out": (None, str),
    "full_scale": (False, _bool),
    "max_failure_rate": (0.05, _float(0.0)),
    "tol": (None, _float(0.0, strict=True)),
    "max_iter": (None, _int(1)),
    "alpha0": (1.0, _float(0.0, strict=True)),
    "max_step": (1.0, _float(0.0, strict=True)),
}

SCHEMAS = {
    "detect": {
        "stack": (None, str),
        "detector": ("ksg", _choice([k.value for k in DetectorKind])),
        "window": (5, _odd),
        "a": (4, _int(1)),
        "b": (3, _int(1)),
    },
    "mse-bench": {
        "trials": (200, _int(2)),
        "a": (4, _int(1)),
        "b": (3, _int(1)),
        "n": (8, _int(1)),
        "nu": (1.0, _float(0.0, strict=True)),
        "condition": (10.0, _float(1.0, strict=True)),
        "t_grid": ((1, 2, 5, 10, 20, 50, 100, 200, 500, 1000), _int_list),
    },
    "roc-bench": {
        "trials": (500, _int(1)),
        "a": (3, _int(1)),
        "b": (4, _int(1)),
        "n": (13, _int(1)),
        "T": (50, _int(2)),
        "nu": (1.0, _float(0.0, strict=True)),
        "horizons": ((), lambda v: () if isinstance(v, (list, tuple)) and not v else _int_list(v)),
        "rho0_a": (0.3 + 0.7j, _complex),
        "rho1_a": (0.3 + 0.5j, _complex),
        "rho0_b": (0.3 + 0.6j, _complex),
        "rho1_b": (0.4 + 0.5j, _complex),
    },
    "gen-stack": {
        "a": (4, _int(1)),
        "b": (3, _int(1)),
        "T": (20, _int(1)),
        "height": (32, _int(1)),
        "width": (32, _int(1)),
        "nu": (1.0, _float(0.0, strict=True)),
        "change_at": (None, lambda v: None if v is None else _int(1)(v)),
        "region": ("center", lambda v: v if v == "center" else _region(v)),
        "rho0_a": (0.3 + 0.7j, _complex),
        "rho1_a": (0.3 + 0.5j, _complex),
        "rho0_b": (0.3 + 0.6j, _complex),
        "rho1_b": (0.4 + 0.5j, _complex),
    },
}

FIT_DEFAULTS = {
    "detect": (1e-7, 5000),
    "mse-bench": (1e-8, 2000),
    "roc-bench": (1e-7, 5000),
    "gen-stack": (1e-7, 5000),
}


def resolve_config(command, flags, file_cfg):
    """Merge defaults, a config-file dict and parsed flags, then validate.

    Parameters
    ----------
    command : str
    flags : dict
        Flag values; ``None`` means the flag was not given.
    file_cfg : dict
        Decoded JSON config (may be empty).

    Returns
    -------
    dict
        Every option of ``command`` with a validated value.
    """
    schema = {**COMMON, **SCHEMAS[command]}
    if not isinstance(file_cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = sorted(set(file_cfg) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config key(s) for {command}: {', '.join(unknown)}")
    cfg = {}
    for key, (default, check) in schema.items():
        value = default
        if key in file_cfg:
            value = file_cfg[key]
        if flags.get(key) is not None:
            value = flags[key]
        if value is None:
            cfg[key] = None
            continue
        try:
            cfg[key] = check(value)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{key}: {exc}") from None
    tol, max_iter = FIT_DEFAULTS[command]
    cfg["tol"] = cfg["tol"] or tol
    cfg["max_iter"] = cfg["max_iter"] or max_iter
    cfg["threads"] = _threads(cfg["threads"])
    if cfg["out"] is None:
        raise ConfigError("an output location is required (--out)")
    if command == "detect" and cfg["stack"] is None:
        raise ConfigError("detect needs an input stack")
    return cfg


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from None


def _fp(cfg):
    return FixedPointConfig(tol=cfg["tol"], max_iter=cfg["max_iter"])


def _sgd(cfg):
    return SgdConfig(alpha0=cfg["alpha0"], max_step=cfg["max_step"])


def _check_failures(failed, total, cfg, what):
    rate = failed / total if total else 0.0
    if rate > cfg["max_failure_rate"]:
        raise TooManyFailures(
            f"{failed} of {total} {what} failed (rate {rate:.4f} > {cfg['max_failure_rate']})")


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise IoError(f"{path}: {exc.strerror or exc}") from None


# --- subcommands ------------------------------------------------------------

def run_detect(cfg, log):
    try:
        stack = sio.load_mits(cfg["stack"])
    except (MalformedHeader, SizeMismatch) as exc:
        raise DataError(str(exc)) from None
    T, height, width, p = stack.shape
    a, b, w = cfg["a"], cfg["b"], cfg["window"]
    if a * b != p:
        raise ConfigError(f"a*b = {a * b} does not match the stack's p = {p}")
    if w > min(height, width):
        raise ConfigError(f"window {w} exceeds image size {height}x{width}")
    kind = DetectorKind(cfg["detector"])
    if not kind.online and T < 2:
        raise DataError("offline detectors need at least 2 frames")
    dims = ModelDims(a, b, w * w)
    scores, failed = detection_map(stack.astype(complex), w, kind, dims, _fp(cfg), _sgd(cfg),
                                   workers=cfg["threads"])
    _ensure_dir(cfg["out"])
    meta = sio.save_map(scores, os.path.join(cfg["out"], "map"))
    log(f"map {meta['rows']}x{meta['cols']} written to {cfg['out']}, {failed} failed windows")
    _check_failures(failed, scores.size, cfg, "windows")


def run_mse_bench(cfg, log):
    trials = FULL_MSE_TRIALS if cfg["full_scale"] else cfg["trials"]
    dims = ModelDims(cfg["a"], cfg["b"], cfg["n"])
    res = mse_benchmark(dims=dims, nu=cfg["nu"], t_grid=cfg["t_grid"], trials=trials,
                        seed=cfg["seed"], condition=cfg["condition"], fp_cfg=_fp(cfg),
                        sgd_cfg=_sgd(cfg), workers=cfg["threads"])
    _ensure_dir(cfg["out"])
    path = os.path.join(cfg["out"], "mse.csv")
    write_csv(res.rows, path, MSE_FIELDS)
    log(f"{len(res.rows)} rows written to {path}, {res.failures} failed trials")
    _check_failures(res.failures, trials, cfg, "trials")


def run_roc_bench(cfg, log):
    trials = FULL_ROC_TRIALS if cfg["full_scale"] else cfg["trials"]
    sc = RocScenario(dims=ModelDims(cfg["a"], cfg["b"], cfg["n"]), rho0_a=cfg["rho0_a"],
                     rho1_a=cfg["rho1_a"], rho0_b=cfg["rho0_b"], rho1_b=cfg["rho1_b"],
                     T=cfg["T"], nu=cfg["nu"], trials=trials, horizons=cfg["horizons"],
                     seed=cfg["seed"])
    res = roc_benchmark(sc, _fp(cfg), _sgd(cfg), workers=cfg["threads"])
    _ensure_dir(cfg["out"])
    path = os.path.join(cfg["out"], "roc.csv")
    write_csv(res.rows, path, ROC_FIELDS)
    auc_rows = [{"detector": k.value, "horizon_T": T, "auc": res.auc(k, T)}
                for k, T in sorted(res.scores, key=lambda kt: (kt[0].value, kt[1]))]
    write_csv(auc_rows, os.path.join(cfg["out"], "roc_auc.csv"), ("detector", "horizon_T", "auc"))
    for r in auc_rows:
        log(f"AUC {r['detector']:<11} T={r['horizon_T']:<4} {r['auc']:.4f}")
    per_trial = 2 * (4 + 2 * (len(sc.online_horizons) - 1))
    _check_failures(res.failures, per_trial * trials, cfg, "detector runs")


def run_gen_stack(cfg, log):
    T, h, w = cfg["T"], cfg["height"], cfg["width"]
    if cfg["change_at"] is not None and cfg["change_at"] > T:
        raise ConfigError("change_at must not exceed T")
    sc = RocScenario(dims=ModelDims(cfg["a"], cfg["b"], 1), rho0_a=cfg["rho0_a"],
                     rho1_a=cfg["rho1_a"], rho0_b=cfg["rho0_b"], rho1_b=cfg["rho1_b"],
                     T=T, nu=cfg["nu"], change_at=cfg["change_at"])
    region = cfg["region"]
    if region == "center":
        region = (h // 4, h - h // 4, w // 4, w - w // 4)
    try:
        stack = simulate_image_stack(sc, T, h, w, region=region, seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    parent = os.path.dirname(cfg["out"])
    if parent:
        _ensure_dir(parent)
    header = sio.save_mits(stack, cfg["out"])
    log(f"stack {header.shape} written to {cfg['out']}.json/.bin")


COMMANDS = {
    "detect": run_detect,
    "mse-bench": run_mse_bench,
    "roc-bench": run_roc_bench,
    "gen-stack": run_gen_stack,
}


def build_parser():
    # every flag defaults to None so that "not given" is distinguishable
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", help="worker processes, or 'auto'")
    common.add_argument("--out", help="output directory (stack name for gen-stack)")
    common.add_argument("--alpha0", type=float, help="SGD step scale")
    common.add_argument("--max-failure-rate", type=float, dest="max_failure_rate")
    common.add_argument("--a", type=int, help="size of the first Kronecker factor")
    common.add_argument("--b", type=int, help="size of the second Kronecker factor")

    parser = argparse.ArgumentParser(prog="sgkron", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="detection map of a stack")
    p.add_argument("stack", nargs="?", help="stack name (header .json + payload .bin)")
    p.add_argument("--detector", choices=[k.value for k in DetectorKind])
    p.add_argument("--window", type=int)

    for name in ("mse-bench", "roc-bench"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--trials", type=int)
        p.add_argument("--paper-scale", action="store_const", const=True, dest="full_scale",
                       help="large trial counts (1000 for mse-bench, 5000 for roc-bench)")

    p = sub.add_parser("gen-stack", parents=[common], help="write a synthetic stack")
    p.add_argument("--frames", type=int, dest="T")
    p.add_argument("--height", type=int)
    p.add_argument("--width", type=int)
    return parser


def _emit_error(kind, message):
    print(json.dumps({"error": kind, "message": str(message)}), file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse already printed usage; map its status onto ours
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(args.command, flags, _load_config_file(args.config))
        COMMANDS[args.command](cfg, lambda msg: print(msg))
    except ConfigError as exc:
        _emit_error("config", exc)
        return EXIT_CONFIG
    except (DataError, IoError) as exc:
        _emit_error("data", exc)
        return EXIT_DATA
    except TooManyFailures as exc:
        _emit_error("failures", exc)
        return EXIT_FAILURES
    except SgkronError as exc:
        _emit_error("data", exc)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
