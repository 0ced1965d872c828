"""Command-line front end.

Every command reads its parameters from flags and, optionally, a flat JSON
config file (--config); flags win over the file.  Exit codes: 0 success,
2 bad flags or input data, 1 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import io as tio
from .channel_model import simulate_gain_tables
from .core import OUTCOMES, ChannelParams, DomainError, IntensitySet, UsageError, loss_to_eta
from .optimize import (
    PRESET_ALIASES,
    PRESET_VARIANTS,
    FluctuationSpec,
    Scenario,
    fluctuation_sweep,
    maximize_rate,
    max_tolerated_loss,
    sweep,
)
from .security import DECOY_COUNTS, normalize_mode, yield_bounds
from .validation import SUITES, run_suites

SWEEP_COLUMNS = ["loss_db", "eta", "rate", "plob", "alpha2_opt", "mu_opt", "e_bit", "e_ph"]
FLUCTUATE_COLUMNS = ["loss_db", "eta", "nominal_rate", "worst_rate", "plob", "alpha2_opt", "mu_opt", "magnitude"]


class NumericFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# value parsers shared by flags and config files

def _float(name):
    def conv(v):
        try:
            x = float(v)
        except (TypeError, ValueError):
            raise UsageError(f"--{name}: expected a number, got {v!r}") from None
        if not math.isfinite(x):
            raise UsageError(f"--{name}: must be finite")
        return x
    return conv


def _ranged(name, lo, hi, lo_open=False, hi_open=False):
    base = _float(name)

    def conv(v):
        x = base(v)
        if (x < lo or (lo_open and x == lo)) or (x > hi or (hi_open and x == hi)):
            lb = "(" if lo_open else "["
            rb = ")" if hi_open else "]"
            raise UsageError(f"--{name}: {x} outside {lb}{lo}, {hi}{rb}")
        return x
    return conv


def _decoys(v):
    try:
        return normalize_mode(v)
    except UsageError as e:
        raise UsageError(f"--decoys: {e}") from None


def _bounded_decoys(v):
    mode = _decoys(v)
    if mode == "infinite":
        raise UsageError("--decoys: bounds need a finite number of decoys (2, 3 or 4)")
    return mode


def _preset(v):
    v = PRESET_ALIASES.get(v, v)
    if v not in PRESET_VARIANTS:
        raise UsageError(f"--preset: use one of {', '.join(PRESET_VARIANTS)}")
    return v


def _fixed(v):
    """k=v pairs from repeated flags, a comma list, or a JSON object."""
    if isinstance(v, dict):
        items = list(v.items())
    else:
        parts = []
        for entry in ([v] if isinstance(v, str) else list(v)):
            parts.extend(p for p in str(entry).split(",") if p.strip())
        items = []
        for p in parts:
            if "=" not in p:
                raise UsageError(f"--fixed: expected name=value, got {p!r}")
            k, val = p.split("=", 1)
            items.append((k.strip(), val.strip()))
    out = {}
    for k, val in items:
        out[k] = _ranged(f"fixed {k}", 0.0, math.inf, lo_open=True)(val)
    return out


def _intensity_list(v):
    if isinstance(v, str):
        parts = [p for p in v.replace(";", ",").split(",") if p.strip()]
    else:
        parts = list(v)
    return tuple(_ranged("intensities", 0.0, math.inf)(p) for p in parts)


def _suites(v):
    names = [v] if isinstance(v, str) else list(v)
    for n in names:
        if n not in SUITES:
            raise UsageError(f"--suite: unknown suite {n!r}; use {', '.join(SUITES)}")
    return names


def _text(v):
    return str(v)


_PROB = _ranged("pd", 0.0, 1.0, hi_open=True)
_LOSS = _ranged("loss", 0.0, math.inf)

SCENARIO_KEYS = {
    "decoys": (_decoys, None),
    "pd": (_PROB, None),
    "preset": (_preset, "standard"),
    "fixed": (_fixed, {}),
    "misalignment": (_ranged("misalignment", 0.0, 1.0), 0.02),
    "f_ec": (_ranged("f-ec", 1.0, math.inf), 1.16),
    "p_x": (_ranged("p-x", 0.0, 1.0, lo_open=True), 1.0),
}
GRID_KEYS = {
    "loss_start": (_ranged("loss-start", 0.0, math.inf), None),
    "loss_end": (_ranged("loss-end", 0.0, math.inf), None),
    "loss_step": (_ranged("loss-step", 0.0, math.inf, lo_open=True), None),
}

COMMAND_KEYS = {
    "sweep": {**SCENARIO_KEYS, **GRID_KEYS, "out": (_text, None)},
    "optimize": {**SCENARIO_KEYS, "loss": (_LOSS, None), "out": (_text, "")},
    "fluctuate": {**SCENARIO_KEYS, **GRID_KEYS, "magnitude": (_ranged("magnitude", 0.0, 1.0, hi_open=True), None),
                  "threshold": (bool, False), "out": (_text, None)},
    "bounds": {"gains": (_text, None), "intensities": (_intensity_list, None), "decoys": (_bounded_decoys, None),
               "no_guard": (bool, False), "out": (_text, "")},
    "simulate": {"intensities": (_intensity_list, None), "pd": (_PROB, None), "loss": (_LOSS, None),
                 "misalignment": (_ranged("misalignment", 0.0, 1.0), 0.02), "out": (_text, "")},
    "validate": {"suite": (_suites, list(SUITES))},
}


# ---------------------------------------------------------------------------
# argument parsing

def _scenario_flags(p):
    p.add_argument("--decoys", help="2, 3, 4 or inf")
    p.add_argument("--pd", help="dark-count probability per detector")
    p.add_argument("--preset", help="fixed decoy values: standard (default) or weak")
    p.add_argument("--fixed", action="append", metavar="NAME=VALUE",
                   help="override a decoy intensity, e.g. mu1=1e-4; naming the free one fixes it")
    p.add_argument("--misalignment", help="polarization/phase misalignment fraction (default 0.02)")
    p.add_argument("--f-ec", dest="f_ec", help="error-correction inefficiency (default 1.16)")
    p.add_argument("--p-x", dest="p_x", help="X-basis probability (default 1)")


def _grid_flags(p):
    p.add_argument("--loss-start", dest="loss_start", help="first loss in dB")
    p.add_argument("--loss-end", dest="loss_end", help="last loss in dB (inclusive)")
    p.add_argument("--loss-step", dest="loss_step", help="loss step in dB")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfqkd", description="Twin-field QKD key rates with decoy-state yield bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="optimized key rate over a loss grid (CSV)")
    _scenario_flags(p)
    _grid_flags(p)

    p = sub.add_parser("optimize", help="optimized key rate at one loss (JSON)")
    _scenario_flags(p)
    p.add_argument("--loss", help="loss in dB")

    p = sub.add_parser("fluctuate", help="nominal and worst-case rate under intensity fluctuations (CSV)")
    _scenario_flags(p)
    _grid_flags(p)
    p.add_argument("--magnitude", help="relative fluctuation, e.g. 0.4")
    p.add_argument("--threshold", action="store_true", default=None,
                   help="also locate both maximum tolerated losses (slow)")

    p = sub.add_parser("bounds", help="yield bounds from a gains CSV (JSON)")
    p.add_argument("--gains", help="CSV with columns outcome,k,l,Q (outcome optional)")
    p.add_argument("--intensities", help="comma-separated decoy intensities in table order")
    p.add_argument("--decoys", help="2, 3 or 4")
    p.add_argument("--no-guard", dest="no_guard", action="store_true", default=None,
                   help="report the bare formulas without the rounding-error widening")

    p = sub.add_parser("simulate", help="channel-model gain tables (CSV)")
    p.add_argument("--intensities", help="comma-separated decoy intensities")
    p.add_argument("--pd", help="dark-count probability per detector")
    p.add_argument("--loss", help="loss in dB")
    p.add_argument("--misalignment", help="misalignment fraction (default 0.02)")

    p = sub.add_parser("validate", help="run the oracle suites and report pass/fail")
    p.add_argument("--suite", action="append", help=f"one of {', '.join(SUITES)} (default all)")

    for name, sp in sub.choices.items():
        sp.add_argument("--config", help="flat JSON file with the same keys as the flags (underscores)")
        if name != "validate":
            sp.add_argument("--out", help="output file")
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge config file and flags, convert and range-check every value."""
    keys = COMMAND_KEYS[command]
    config = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            config = json.loads(path.read_text(encoding="utf-8"))
        except OSError as e:
            raise UsageError(f"--config: cannot read {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise UsageError(f"--config: {path} is not valid JSON: {e}") from None
        if not isinstance(config, dict):
            raise UsageError("--config: expected a flat JSON object")
        unknown = sorted(set(config) - set(keys))
        if unknown:
            raise UsageError(f"--config: unknown keys {unknown}; allowed: {sorted(keys)}")
    out = {}
    for key, (conv, default) in keys.items():
        flag = getattr(args, key, None)
        raw = flag if flag is not None else config.get(key)
        if raw is None:
            if default is None:
                raise UsageError(f"--{key.replace('_', '-')} is required")
            out[key] = default
        else:
            out[key] = conv(raw)
    if "loss_start" in out and out["loss_end"] < out["loss_start"]:
        raise UsageError("--loss-end must not be below --loss-start")
    return out


def _scenario(cfg: dict) -> Scenario:
    sc = Scenario.preset(cfg["decoys"], cfg["pd"], cfg["preset"], misalignment=cfg["misalignment"],
                         f_ec=cfg["f_ec"], p_x=cfg["p_x"])
    if cfg["fixed"]:
        sc = sc.with_fixed(cfg["fixed"])
        # validates ordering and separation of the fixed settings early
        if sc.free_index is None and sc.mode != "infinite":
            sc.intensities()
    return sc


def loss_grid(start: float, end: float, step: float) -> list[float]:
    n = int(math.floor((end - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(n)]


def _echo(command: str, cfg: dict) -> str:
    shown = {k: v for k, v in cfg.items() if k != "out"}
    return f"tfqkd {command} " + json.dumps(tio._jsonable(shown), sort_keys=True)


def _emit(path: str, text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _finite(*values):
    for v in values:
        if isinstance(v, float) and math.isnan(v):
            raise NumericFailure("computation produced NaN")


def _free_name(sc: Scenario) -> str:
    return "alpha2 only" if sc.free_index is None else f"mu{sc.free_index}"


# ---------------------------------------------------------------------------
# commands

def cmd_sweep(cfg: dict) -> int:
    sc = _scenario(cfg)
    grid = loss_grid(cfg["loss_start"], cfg["loss_end"], cfg["loss_step"])
    points = sweep(sc, grid)
    rows = []
    for p in points:
        _finite(p.rate)
        rows.append([p.loss_db, p.eta, p.rate, p.plob, p.alpha2_opt, p.mu_opt, p.e_bit, p.e_ph])
    comments = [_echo("sweep", cfg), f"free decoy: {_free_name(sc)}"]
    _emit(cfg["out"], tio.csv_text(SWEEP_COLUMNS, rows, comments))
    return 0


def cmd_optimize(cfg: dict) -> int:
    sc = _scenario(cfg)
    p = maximize_rate(sc, cfg["loss"])
    _finite(p.rate)
    doc = {
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "loss_db": p.loss_db,
        "eta": p.eta,
        "rate": p.rate,
        "plob": p.plob,
        "alpha2": p.alpha2_opt,
        "free_decoy": None if sc.free_index is None else f"mu{sc.free_index}",
        "free_value": None if sc.free_index is None else p.mu_opt,
        "intensities": None if sc.mode == "infinite" else list(sc.intensities(
            p.mu_opt if sc.free_index is not None else None).values),
        "e_bit": p.e_bit,
        "e_ph": p.e_ph,
        "status": p.info.get("status"),
        "evaluations": p.info.get("nfev"),
    }
    _emit(cfg["out"], tio.json_text(doc))
    return 0


def cmd_fluctuate(cfg: dict) -> int:
    sc = _scenario(cfg)
    fl = FluctuationSpec(cfg["magnitude"])
    grid = loss_grid(cfg["loss_start"], cfg["loss_end"], cfg["loss_step"])
    pairs = fluctuation_sweep(sc, grid, fl)
    rows = []
    for nom, worst in pairs:
        _finite(nom.rate, worst.rate)
        rows.append([nom.loss_db, nom.eta, nom.rate, worst.rate, nom.plob, nom.alpha2_opt, nom.mu_opt,
                     fl.magnitude])
    comments = [_echo("fluctuate", cfg)]
    if cfg["threshold"]:
        a = max_tolerated_loss(sc)
        b = max_tolerated_loss(sc, fl)
        comments.append(f"max tolerated loss nominal {tio.fmt(a.loss_db)} dB, worst case {tio.fmt(b.loss_db)} dB")
    _emit(cfg["out"], tio.csv_text(FLUCTUATE_COLUMNS, rows, comments))
    return 0


def bounds_document(mode: str, intensities: IntensitySet, tables: dict, guard: bool = True) -> dict:
    doc = {"decoys": mode, "intensities": list(intensities.values), "guard": guard, "outcomes": {}}
    for o in OUTCOMES:
        b = yield_bounds(mode, intensities, tables[o], guard=guard)
        doc["outcomes"][tio.outcome_label(o)] = {
            "upper": {f"Y{n}{m}": b.upper[(n, m)] for (n, m) in sorted(b.upper)},
            "lower_Y22": b.lower_y22,
            "flags": {(k if isinstance(k, str) else f"Y{k[0]}{k[1]}"): v for k, v in sorted(b.flags.items(), key=str)},
        }
    return doc


def cmd_bounds(cfg: dict) -> int:
    mode = cfg["decoys"]
    vals = cfg["intensities"]
    if len(vals) != DECOY_COUNTS[mode]:
        raise UsageError(f"intensity count mismatch: --decoys {mode} needs {DECOY_COUNTS[mode]} "
                         f"intensities, got {len(vals)}")
    ints = IntensitySet(vals, ordered=mode != "four")
    ints.require_positive()
    tables = tio.read_gain_tables(cfg["gains"], len(vals))
    doc = bounds_document(mode, ints, tables, guard=not cfg["no_guard"])
    _emit(cfg["out"], tio.json_text(doc))
    return 0


def cmd_simulate(cfg: dict) -> int:
    vals = cfg["intensities"]
    ints = IntensitySet(vals, ordered=False)
    ch = ChannelParams.with_default_misalignment(loss_to_eta(cfg["loss"]), cfg["pd"], cfg["misalignment"])
    tables = simulate_gain_tables(ch, ints)
    comments = [_echo("simulate", cfg)]
    text = tio.csv_text(["outcome", "k", "l", "Q"], tio.gain_rows(tables), comments)
    _emit(cfg["out"], text)
    return 0


def cmd_validate(cfg: dict) -> int:
    reports = run_suites(cfg["suite"])
    for r in reports:
        print(r.line())
    failed = [r.name for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} suites passed")
    return 1 if failed else 0


COMMANDS = {
    "sweep": cmd_sweep,
    "optimize": cmd_optimize,
    "fluctuate": cmd_fluctuate,
    "bounds": cmd_bounds,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    try:
        cfg = resolve(args.command, args)
    except (UsageError, DomainError) as e:
        print(f"tfqkd {args.command}: error: {e}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg)
    except (UsageError, DomainError) as e:
        print(f"tfqkd {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (NumericFailure, ArithmeticError, ValueError, RuntimeError) as e:
        print(f"tfqkd {args.command}: numerical failure: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
