"""Command-line entry point.

Subcommands map one-to-one onto the functional modules: lattice dump,
trajectory simulation, hypoellipticity closure, and the four Monte Carlo
checks.  All options can come from a JSON config file (flat keys matching
the flag names) with command-line flags taking precedence; every artifact
embeds the hash of the resolved config and the seed so runs can be traced
and reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import re
import sys

import numpy as np

from . import ergodicity
from .errors import BlowUpError, ConfigurationError, ConstraintError
from .hormander import closure
from .integrator import IntegratorConfig, simulate
from .lattice import build_lattice
from .noise import ForcingConfig, intensity, load_forcing
from .states import SpectralState


def _parse_forced(text):
    """'(1,0,0),(0,1,0)' -> [(1,0,0), (0,1,0)]."""
    triples = re.findall(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)", text)
    if not triples:
        raise ConfigurationError(f"could not parse forced mode list from {text!r}")
    return [tuple(int(x) for x in t) for t in triples]


def _add_common(p):
    p.add_argument("--config", help="JSON file of option defaults (flat keys)")
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--forced", default=None, help="modes like '(1,0,0),(0,1,0)'")
    p.add_argument("--forcing-file", default=None, help="explicit noise maps (JSON)")
    p.add_argument("--sigma-sq", type=float, default=None,
                   help="total noise intensity, split evenly over forced modes")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--trajectories", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scheme", default=None, choices=("euler_maruyama", "exponential"))
    p.add_argument("--out", default=None, help="output directory (default: stdout)")
    p.add_argument("--threads", type=int, default=None)


_DEFAULTS = {
    "N": 1,
    "forced": "(1,0,0)",
    "forcing_file": None,
    "sigma_sq": 2.0,
    "dt": 1e-3,
    "t_end": 1.0,
    "trajectories": 100,
    "seed": 0,
    "scheme": "exponential",
    "out": None,
    "threads": os.cpu_count() or 1,
    "method": "span",
    "record_every": 1,
    "per_mode": False,
    "init_energy": 1.0,
    "c_sq": 4.0,
    "ball_energy": 1.0,
    "sample_interval": 1.0,
    "horizons": None,
}


def _resolve(args) -> dict:
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"bad config file {args.config}: {exc}")
        for key, val in loaded.items():
            key = key.replace("-", "_").replace(".", "_")
            if key not in cfg:
                raise ConfigurationError(f"unknown config key {key!r}")
            cfg[key] = val
    for key, val in vars(args).items():
        if key in ("command", "config"):
            continue
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _forcing_from(cfg, lattice) -> ForcingConfig:
    if cfg["forcing_file"]:
        return load_forcing(cfg["forcing_file"], lattice)
    modes = _parse_forced(cfg["forced"])
    per_mode = cfg["sigma_sq"] / len(modes)
    forcing = ForcingConfig(lattice, {}, {})
    for mode in modes:
        single = ForcingConfig.single_mode(lattice, mode, per_mode / 2.0, per_mode / 2.0)
        forcing.q_u.update(single.q_u)
        forcing.q_b.update(single.q_b)
    return forcing


def _emit(cfg, name, payload) -> None:
    payload = dict(payload)
    payload["config_hash"] = _config_hash(cfg)
    payload["seed"] = cfg["seed"]
    text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        path = os.path.join(cfg["out"], name + ".json")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(path)
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


def _init_state(cfg, lattice) -> SpectralState:
    return ergodicity._default_init(lattice, cfg["init_energy"])


def _cmd_lattice(cfg):
    lattice = build_lattice(cfg["N"])
    _emit(cfg, "lattice", json.loads(lattice.to_json()))


def _cmd_hormander(cfg):
    lattice = build_lattice(cfg["N"])
    report = closure(_parse_forced(cfg["forced"]), lattice, method=cfg["method"])
    _emit(cfg, "hormander", json.loads(report.to_json()))


def _cmd_simulate(cfg):
    lattice = build_lattice(cfg["N"])
    forcing = _forcing_from(cfg, lattice) if cfg["sigma_sq"] > 0 else ForcingConfig(lattice, {}, {})
    init = _init_state(cfg, lattice)
    icfg = IntegratorConfig(
        dt=cfg["dt"], t_end=cfg["t_end"], scheme=cfg["scheme"],
        seed=cfg["seed"], record_every=cfg["record_every"],
    )
    traj = simulate(init, forcing, icfg, lattice)
    stamp = f"# config_hash={_config_hash(cfg)} seed={cfg['seed']}"
    if cfg["out"]:
        os.makedirs(cfg["out"], exist_ok=True)
        path = os.path.join(cfg["out"], "trajectory.csv")
    else:
        path = "trajectory.csv"
    traj.to_csv(path, per_mode=cfg["per_mode"])
    with open(path) as fh:
        body = fh.read()
    with open(path, "w") as fh:
        fh.write(stamp + "\n" + body)
    print(path)


def _cmd_audit(cfg):
    lattice = build_lattice(cfg["N"])
    forcing = _forcing_from(cfg, lattice)
    res = ergodicity.energy_balance_audit(
        forcing, _init_state(cfg, lattice), cfg["dt"], cfg["t_end"],
        cfg["trajectories"], seed=cfg["seed"], scheme=cfg["scheme"],
        threads=cfg["threads"],
    )
    _emit(cfg, "audit", vars(res))


def _cmd_hitting(cfg):
    lattice = build_lattice(cfg["N"])
    forcing = _forcing_from(cfg, lattice)
    res = ergodicity.hitting_times(
        forcing, _init_state(cfg, lattice), cfg["c_sq"], cfg["dt"], cfg["t_end"],
        cfg["trajectories"], seed=cfg["seed"], threads=cfg["threads"],
    )
    _emit(cfg, "hitting", vars(res))


def _cmd_recurrence(cfg):
    lattice = build_lattice(cfg["N"])
    forcing = _forcing_from(cfg, lattice)
    horizons = tuple(cfg["horizons"] or (50.0, 100.0, 200.0))
    res = ergodicity.recurrence_count(
        forcing, _init_state(cfg, lattice), cfg["ball_energy"],
        cfg["sample_interval"], horizons=horizons, dt=cfg["dt"],
        n_trajectories=cfg["trajectories"], seed=cfg["seed"],
        threads=cfg["threads"],
    )
    _emit(cfg, "recurrence", vars(res))


def _cmd_measure(cfg):
    lattice = build_lattice(cfg["N"])
    forcing = _forcing_from(cfg, lattice)
    horizons = tuple(cfg["horizons"] or (125.0, 250.0, 500.0))
    res = ergodicity.empirical_measure_compare(
        forcing,
        ergodicity._default_init(lattice, 0.0),
        ergodicity._default_init(lattice, cfg["init_energy"]),
        horizons=horizons, dt=cfg["dt"],
        n_trajectories=cfg["trajectories"], seed=cfg["seed"],
        threads=cfg["threads"],
    )
    _emit(cfg, "measure", vars(res))


_COMMANDS = {
    "lattice": _cmd_lattice,
    "simulate": _cmd_simulate,
    "hormander": _cmd_hormander,
    "audit": _cmd_audit,
    "hitting": _cmd_hitting,
    "recurrence": _cmd_recurrence,
    "measure": _cmd_measure,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stochmhd",
        description="spectral simulator and bracket-condition lab for the "
                    "randomly forced coupled fluid system",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        _add_common(p)
        if name == "hormander":
            p.add_argument("--method", default=None, choices=("span", "rules"))
        if name == "simulate":
            p.add_argument("--record-every", type=int, default=None)
            p.add_argument("--per-mode", action="store_true", default=None)
        if name in ("audit", "hitting", "recurrence", "measure"):
            p.add_argument("--init-energy", type=float, default=None)
        if name == "hitting":
            p.add_argument("--c-sq", type=float, default=None)
        if name == "recurrence":
            p.add_argument("--ball-energy", type=float, default=None)
            p.add_argument("--sample-interval", type=float, default=None)
        if name in ("recurrence", "measure"):
            p.add_argument("--horizons", type=float, nargs="+", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args)
        _COMMANDS[args.command](cfg)
    except (ConfigurationError, ConstraintError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"blow-up: {exc} (t={exc.time}, mode={exc.mode})", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
