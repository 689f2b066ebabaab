"""Command-line front end.

Every command writes CSV (6 significant digits) or JSON (full precision)
to --out or stdout. Options may also come from a JSON --config file;
explicit flags win over the file, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from polpom import ensembles, infotheory, network, noise, pom, polarization

DEFAULT_GAMMA = {"trine": 0.952, "tetrad": 0.964}

DEFAULTS = {
    "ratios": {"ensemble": "trine", "network": None, "format": "csv"},
    "mi-table": {"gamma": None, "resolution": 721, "format": "csv"},
    "sweep": {"sweep": "wp5", "range": "-10:10:0.5", "outcomes": 3, "samples": 101, "format": "csv"},
    "montecarlo": {"measured": None, "priors": None, "half_width": 0.025, "trials": 100_000, "seed": 0, "format": "json"},
    "validate": {"ensemble": "trine", "pom": None, "dim": None, "tol": 1e-9, "format": "json"},
    "prepare": {"ensemble": None, "beta": None, "phase": None, "format": "csv"},
}


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(f"error: {message}\n")
        sys.exit(2)


# -- output ---------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if abs(x) < 1e-14:  # round-off residue of exact zeros
            x = 0.0
        return f"{x + 0.0:.6g}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    return x


def render(columns, rows, fmt, meta=None) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
        return buf.getvalue()
    doc = dict(meta or {})
    doc["columns"] = list(columns)
    doc["rows"] = [{c: row[c] for c in columns} for row in rows]
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def _emit(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# -- config ---------------------------------------------------------------------


def resolve_config(command: str, flags: dict, config_path=None) -> dict:
    cfg = dict(DEFAULTS[command])
    cfg["out"] = None
    if config_path:
        path = Path(config_path)
        if not path.is_file():
            raise CliError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise CliError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(data, dict):
            raise CliError(f"{path}: config must be a JSON object")
        data = {k.replace("-", "_"): v for k, v in data.items()}
        unknown = sorted(set(data) - set(cfg))
        if unknown:
            raise CliError(f"{path}: unknown option(s) for '{command}': {', '.join(unknown)}")
        cfg.update(data)
    cfg.update({k: v for k, v in flags.items() if v is not None})
    if cfg["format"] not in ("csv", "json"):
        raise CliError(f"--format must be csv or json, got {cfg['format']!r}")
    return cfg


def parse_range(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(x) for x in str(text).split(":"))
    except ValueError:
        raise CliError(f"--range must be lo:hi:step, got {text!r}") from None
    if step <= 0 or hi < lo:
        raise CliError(f"--range needs step > 0 and hi >= lo, got {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _ensemble(name):
    try:
        return ensembles.get_ensemble(name)
    except FileNotFoundError as exc:
        raise CliError(f"{exc} (expected one of {', '.join(ensembles.BUILTIN)} or a JSON file)") from None


# -- commands -------------------------------------------------------------------


def cmd_ratios(cfg: dict):
    ens = _ensemble(cfg["ensemble"])
    net_name = cfg["network"] or ensembles.PARENT.get(ens.label if cfg["ensemble"] in ensembles.BUILTIN else "")
    if net_name is None:
        raise CliError("--network is required for a custom ensemble (trine, tetrad, pbs or a JSON file)")
    net = network.get_network(net_name)
    if ens.dim != 2:
        raise CliError("ratios needs a qubit ensemble")
    columns = ["state"] + list(net.detectors)
    rows = []
    for k, state in enumerate(ens.states, start=1):
        probs = network.detection_distribution(net, state)
        rows.append({"state": k, **dict(zip(net.detectors, probs.tolist()))})
    meta = {"command": "ratios", "ensemble": ens.label, "network": net.label}
    return columns, rows, meta


def _gamma_for(cfg, parent):
    g = cfg["gamma"]
    if g is None:
        return DEFAULT_GAMMA[parent]
    if isinstance(g, dict):
        return float(g.get(parent, DEFAULT_GAMMA[parent]))
    return float(g)


def cmd_mi_table(cfg: dict):
    rows = []
    vn_cache = {}
    for label in ("trine", "antitrine", "tetrad", "antitetrad"):
        parent = ensembles.PARENT[label]
        ens = ensembles.get_ensemble(label)
        base = pom.min_error_pom(ensembles.get_ensemble(parent))
        g = _gamma_for(cfg, parent)
        model = noise.NoiseModel(g, len(base))
        ideal = infotheory.mutual_information(ens, base).mutual_info_bits
        noisy = infotheory.mutual_information(ens, noise.noisy_pom(base, model)).mutual_info_bits
        if parent not in vn_cache:
            # antistates form a rotated copy of the parent ensemble
            vn_cache[parent] = infotheory.best_von_neumann_mi(ensembles.get_ensemble(parent), int(cfg["resolution"])).bits
        rows.append({"states": label, "ideal": ideal, "noisy": noisy, "gamma": g, "von_neumann": vn_cache[parent]})
    return ["states", "ideal", "noisy", "gamma", "von_neumann"], rows, {"command": "mi-table"}


def cmd_sweep(cfg: dict):
    kind = cfg["sweep"]
    if kind == "wp5":
        offsets = parse_range(cfg["range"])
        design = network.ALPHA / 2
        curve = network.wp5_sweep("trine", design + np.radians(offsets))
        rows = [
            {"offset_deg": float(o), "half_angle_deg": math.degrees(a), "rms": r}
            for o, (a, r) in zip(offsets, curve)
        ]
        return ["offset_deg", "half_angle_deg", "rms"], rows, {"command": "sweep", "sweep": "wp5"}
    if kind == "gamma":
        n = int(cfg["outcomes"])
        curve = noise.gamma_sweep(n, int(cfg["samples"]))
        rows = [{"gamma": g, "mi_states": s, "mi_antistates": a} for g, s, a in curve]
        return ["gamma", "mi_states", "mi_antistates"], rows, {"command": "sweep", "sweep": "gamma", "outcomes": n}
    raise CliError(f"unknown sweep kind {kind!r} (expected wp5 or gamma)")


def cmd_montecarlo(cfg: dict):
    if not cfg["measured"]:
        raise CliError("--measured PATH is required")
    measured = noise.read_measured_csv(cfg["measured"])
    priors = cfg["priors"]
    if isinstance(priors, str):
        try:
            priors = [float(x) for x in priors.split(",")]
        except ValueError:
            raise CliError(f"--priors must be comma-separated numbers, got {priors!r}") from None
    res = noise.monte_carlo_mi(
        measured,
        priors,
        half_width=float(cfg["half_width"]),
        trials=int(cfg["trials"]),
        seed=int(cfg["seed"]),
    )
    row = res.to_json()
    return list(row), [row], None


def cmd_validate(cfg: dict):
    ens = _ensemble(cfg["ensemble"])
    dim = int(cfg["dim"]) if cfg["dim"] is not None else ens.dim
    report = {"ensemble": ens.label, "dim": dim}
    report["overcomplete"] = ensembles.verify_overcomplete(ens, dim)
    if cfg["pom"]:
        measurement = pom.load_pom(cfg["pom"])  # raises on a broken POM
        report["pom"] = str(cfg["pom"])
    else:
        measurement = pom.min_error_pom(ens, dim)
        report["pom"] = "min-error"
    report["pom_valid"] = True
    if len(measurement) == len(ens):
        report["error_probability"] = pom.error_probability(measurement, ens)
        report["optimal"] = pom.check_optimality(measurement, ens, float(cfg["tol"]))
    report["mutual_info_bits"] = infotheory.mutual_information(ens, measurement).mutual_info_bits
    return list(report), [report], None


def cmd_prepare(cfg: dict):
    targets = []
    if cfg["ensemble"]:
        ens = _ensemble(cfg["ensemble"])
        for k, s in enumerate(ens.states, start=1):
            targets.append((k, *polarization.angles_from_state(s)))
    else:
        if cfg["beta"] is None:
            raise CliError("prepare needs --ensemble or --beta (degrees) with optional --phase")
        targets.append((1, math.radians(float(cfg["beta"])), math.radians(float(cfg["phase"] or 0.0))))
    rows = []
    for k, beta, gamma in targets:
        wp2, wp3, wp4 = polarization.prepare_state(beta, gamma)
        out = polarization.prep_sequence(wp2, wp3, wp4) @ polarization.H
        rows.append(
            {
                "state": k,
                "beta_deg": math.degrees(beta),
                "phase_deg": math.degrees(gamma),
                "wp2_deg": math.degrees(wp2),
                "wp3_deg": math.degrees(wp3),
                "wp4_deg": math.degrees(wp4),
                "fidelity": out.fidelity(polarization.state_from_angles(beta, gamma)),
            }
        )
    return list(rows[0]), rows, {"command": "prepare"}


COMMANDS = {
    "ratios": cmd_ratios,
    "mi-table": cmd_mi_table,
    "sweep": cmd_sweep,
    "montecarlo": cmd_montecarlo,
    "validate": cmd_validate,
    "prepare": cmd_prepare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polpom", description="Optimal trine/tetrad polarization measurements.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="JSON file of option values")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=["csv", "json"])

    p = sub.add_parser("ratios", help="ideal detector probabilities per input state")
    p.add_argument("--ensemble", help="trine|tetrad|antitrine|antitetrad|PATH")
    p.add_argument("--network", help="trine|tetrad|pbs|PATH")
    common(p)

    p = sub.add_parser("mi-table", help="ideal, noisy and von Neumann mutual information")
    p.add_argument("--gamma", type=float, help="noise parameter for every row (default 0.952 trine, 0.964 tetrad)")
    p.add_argument("--resolution", type=int, help="von Neumann grid resolution")
    common(p)

    p = sub.add_parser("sweep", help="WP5 angle or detector-noise sweep")
    p.add_argument("--sweep", choices=["wp5", "gamma"])
    p.add_argument("--range", help="wp5 offsets from the design angle, degrees, lo:hi:step")
    p.add_argument("--outcomes", type=int, help="gamma sweep: number of outcomes N")
    p.add_argument("--samples", type=int, help="gamma sweep: grid points on [0, 1]")
    common(p)

    p = sub.add_parser("montecarlo", help="Monte Carlo error bars for a measured table")
    p.add_argument("--measured", help="CSV, rows = input states, columns = detectors")
    p.add_argument("--priors", help="comma-separated priors (default uniform)")
    p.add_argument("--half-width", dest="half_width", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    common(p)

    p = sub.add_parser("validate", help="check an ensemble and POM")
    p.add_argument("--ensemble", help="trine|tetrad|antitrine|antitetrad|PATH")
    p.add_argument("--pom", help="POM JSON file (default: min-error POM of the ensemble)")
    p.add_argument("--dim", type=int)
    p.add_argument("--tol", type=float)
    common(p)

    p = sub.add_parser("prepare", help="waveplate angles that prepare a state from |h>")
    p.add_argument("--ensemble", help="prepare every state of this ensemble")
    p.add_argument("--beta", type=float, help="degrees")
    p.add_argument("--phase", type=float, help="relative phase of |v>, degrees")
    common(p)
    return parser


def _join_range(argv):
    # "-10:10:0.5" would otherwise be taken for an option
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--range":
            out.append("--range=" + next(it, ""))
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_range(argv))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = resolve_config(args.command, flags, args.config)
        columns, rows, meta = COMMANDS[args.command](cfg)
        if meta is None:
            text = (
                json.dumps(_jsonable(rows[0]), indent=2) + "\n"
                if cfg["format"] == "json"
                else render(columns, rows, "csv")
            )
        else:
            text = render(columns, rows, cfg["format"], meta)
        _emit(text, cfg["out"])
    except (CliError, ValueError, KeyError, FileNotFoundError, OSError) as exc:
        msg = str(exc).replace("\n", " ")
        sys.stderr.write(f"error: {msg}\n")
        return 1
    if args.command == "validate":
        report = rows[0]
        failed = [k for k in ("overcomplete", "optimal") if report.get(k) is False]
        if failed:
            sys.stderr.write(f"error: validation failed: {', '.join(failed)}\n")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
