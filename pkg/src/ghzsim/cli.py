"""Command-line driver.

Subcommands produce delimited sweep data (CSV by default, JSON on request)
and, when writing to a file, render a companion figure next to it. All
sweeps are deterministic for fixed flags; Monte Carlo columns additionally
take --seed. GHZSIM_THREADS caps how many worker processes a sweep may use;
rows are sorted by sweep key afterwards so parallelism never changes the
artifact.

Config files are flat `key = value` lines mirroring the long flag names of
the invoked subcommand (dashes or underscores); explicit flags win.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import analytics, oracle, plotting, protocol, verify
from .channels import DetectorModel, eta_from_distance
from .protocol import ProtocolConfig
from .sources import BellSource, SpdcSource, lam_from_squeezing_db

_RATE_COLUMNS = ["distance_km", "eta", "rate_protocol", "rate_direct",
                 "fidelity", "n_users", "source", "a_squared"]
_SPDC_COLUMNS = ["distance_km", "eta", "squeezing_db", "t", "detector",
                 "rate", "fidelity", "n_users"]
_PURIFY_COLUMNS = ["distance_km", "eta", "n_users", "a_squared",
                   "input_fidelity", "ghz_weight", "success_probability",
                   "output_fidelity", "success_ideal_partner"]

_DEFAULTS = {
    "rate-sweep": {"n": "4", "distance": "0:200:5", "fidelity": None,
                   "a2": None, "source": "bell", "attenuation": 0.2,
                   "detector": "pnrd", "efficiency": 1.0, "dark": 0.0,
                   "cutoff": 3, "samples": None, "seed": 12345,
                   "simulate": False, "out": None, "json": False,
                   "no_plot": False},
    "spdc-sweep": {"n": "4", "distance": "0:100:10", "squeezing_db": "0.43",
                   "t": 0.95, "attenuation": 0.2, "detector": "pnrd",
                   "efficiency": 0.8, "dark": 1e-6, "cutoff": 3,
                   "out": None, "json": False, "no_plot": False},
    "purify": {"n": "4", "distance": "0:200:5", "fidelity": None, "a2": None,
               "source": "bell", "attenuation": 0.2, "out": None,
               "json": False, "no_plot": False},
    "verify": {"full": False, "inject_fault": False, "json": False},
}


def _parse_int_list(text: str):
    try:
        values = [int(part) for part in str(text).split(",") if part != ""]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise ValueError("empty list")
    return values


def _parse_float_list(text: str):
    try:
        values = [float(part) for part in str(text).split(",") if part != ""]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}")
    if not values:
        raise ValueError("empty list")
    return values


def _parse_distances(text: str):
    """start:stop:step (inclusive, km); a bare number is a single point."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) != 3:
        raise ValueError(f"expected start:stop:step, got {text!r}")
    start, stop, step = (float(p) for p in parts)
    if start == stop:
        return [start]
    if step <= 0 or stop < start:
        raise ValueError(f"bad distance range {text!r}")
    values = []
    k = 0
    while True:
        d = start + k * step
        if d > stop + 1e-9:
            break
        values.append(d)
        k += 1
    return values


def _parse_detector(text: str):
    """'pnrd' | 'threshold' | 'quasi:<n>' -> (kind, multiplex)."""
    text = str(text).strip()
    if text in ("pnrd", "threshold"):
        return text, 1
    if text.startswith("quasi:"):
        n = int(text.split(":", 1)[1])
        if n < 1:
            raise ValueError("quasi detector needs at least one element")
        return "quasi", n
    if text == "quasi":
        return "quasi", 3
    raise ValueError(f"unknown detector {text!r}")


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {value!r}")


def _read_config(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _resolve(args: argparse.Namespace, command: str, parser) -> dict:
    """Layer builtin defaults <- config file <- explicit flags."""
    defaults = _DEFAULTS[command]
    resolved = dict(defaults)
    if getattr(args, "config", None):
        try:
            loaded = _read_config(args.config)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        except ValueError as exc:
            parser.error(str(exc))
        for key, value in loaded.items():
            if key not in defaults:
                parser.error(f"config key {key!r} is not a flag of {command}")
            resolved[key] = value
    for key in defaults:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
    for key in ("simulate", "json", "no_plot", "full", "inject_fault"):
        if key in resolved:
            resolved[key] = _parse_bool(resolved[key])
    return resolved


def _max_workers(task_count: int) -> int:
    raw = os.environ.get("GHZSIM_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise SystemExit(f"GHZSIM_THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise SystemExit("GHZSIM_THREADS must be at least 1")
    else:
        cap = os.cpu_count() or 1
    return max(1, min(cap, task_count))


def _parallel_map(fn, tasks):
    workers = _max_workers(len(tasks))
    if workers <= 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _emit(rows, columns, resolved, renderer, parser) -> int:
    if resolved["json"]:
        payload = json.dumps(rows, indent=2)
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row[c]) for c in columns])
        payload = buffer.getvalue()
    out = resolved["out"]
    if out:
        with open(out, "w", encoding="utf-8", newline="") as handle:
            handle.write(payload)
        written = [out]
        if not resolved["no_plot"]:
            figure = os.path.splitext(out)[0] + ".png"
            written.append(renderer(rows, figure))
        print("wrote " + ", ".join(written))
    else:
        sys.stdout.write(payload)
        if not payload.endswith("\n"):
            sys.stdout.write("\n")
    return 0


def _central_detector(kind: str, multiplex: int, efficiency: float,
                      dark: float) -> DetectorModel:
    return DetectorModel(kind=kind, efficiency=efficiency, dark_prob=dark,
                         multiplex=multiplex)


def _rate_point(task: dict) -> dict:
    n = task["n"]
    eta = eta_from_distance(task["distance"], task["attenuation"])
    if task["fidelity"] is not None:
        a_sq = analytics.vacuum_weight_for_fidelity(n, eta, task["fidelity"])
        # held by construction; at eta = 1 the direct formula is 0/0
        fidelity = task["fidelity"]
    else:
        a_sq = task["a2"]
        fidelity = analytics.analytic_fidelity(n, eta, math.sqrt(a_sq))
    a = math.sqrt(a_sq)
    row = {
        "distance_km": task["distance"],
        "eta": eta,
        "rate_protocol": analytics.analytic_rate(n, eta, a),
        "rate_direct": analytics.direct_transmission_rate(n, eta),
        "fidelity": fidelity,
        "n_users": n,
        "source": "bell",
        "a_squared": a_sq,
    }
    if task["simulate"] or task["samples"]:
        config = ProtocolConfig(
            n_users=n, source=BellSource(a),
            distance_km=task["distance"],
            attenuation_db_per_km=task["attenuation"],
            detector=task["detector_model"])
        if task["simulate"]:
            try:
                rate, sim_fidelity = protocol.aggregate_rate(config)
            except ValueError:  # degenerate point where nothing heralds
                rate, sim_fidelity = 0.0, math.nan
            row["rate_simulated"] = rate
            row["fidelity_simulated"] = sim_fidelity
        if task["samples"]:
            estimate, stderr = oracle.monte_carlo_rate(
                config, int(task["samples"]),
                seed=(int(task["seed"]), task["index"]))
            row["rate_mc"] = estimate
            row["rate_mc_stderr"] = stderr
    return row


def _cmd_rate_sweep(resolved, parser) -> int:
    users = _parse_int_list(resolved["n"])
    distances = _parse_distances(resolved["distance"])
    if resolved["source"] != "bell":
        parser.error("rate-sweep sweeps photon-pair sources; "
                     "use spdc-sweep for squeezed-light sources")
    if (resolved["fidelity"] is None) == (resolved["a2"] is None):
        parser.error("rate-sweep needs exactly one of --fidelity or --a2")
    fidelity = None if resolved["fidelity"] is None else float(
        resolved["fidelity"])
    a2 = None if resolved["a2"] is None else float(resolved["a2"])
    if fidelity is not None and not 0.0 < fidelity < 1.0:
        parser.error("--fidelity must lie strictly between 0 and 1")
    if a2 is not None and not 0.0 <= a2 <= 1.0:
        parser.error("--a2 must lie in [0, 1]")
    for n in users:
        if n < 4 or n % 2:
            parser.error("closed-form sweeps support even user counts >= 4")
    kind, multiplex = _parse_detector(resolved["detector"])
    model = _central_detector(kind, multiplex, float(resolved["efficiency"]),
                              float(resolved["dark"]))
    samples = resolved["samples"]
    tasks = [{"n": n, "distance": d, "attenuation": float(
        resolved["attenuation"]), "fidelity": fidelity, "a2": a2,
        "simulate": resolved["simulate"],
        "samples": None if samples is None else int(samples),
        "seed": int(resolved["seed"]), "detector_model": model,
        "index": idx}
        for idx, (n, d) in enumerate((n, d) for n in users
                                     for d in distances)]
    rows = _parallel_map(_rate_point, tasks)
    rows.sort(key=lambda r: (r["n_users"], r["distance_km"]))
    columns = list(_RATE_COLUMNS)
    if resolved["simulate"]:
        columns += ["rate_simulated", "fidelity_simulated"]
    if samples is not None:
        columns += ["rate_mc", "rate_mc_stderr"]
    return _emit(rows, columns, resolved, plotting.render_rate_sweep, parser)


def _spdc_point(task: dict) -> dict:
    source = SpdcSource(lam=lam_from_squeezing_db(task["squeezing_db"]),
                        splitter_t=task["t"], cutoff=task["cutoff"],
                        herald=task["herald_model"])
    config = ProtocolConfig(
        n_users=task["n"], source=source, distance_km=task["distance"],
        attenuation_db_per_km=task["attenuation"],
        detector=task["central_model"], cutoff=task["cutoff"])
    rate, fidelity = protocol.aggregate_rate(config)
    return {
        "distance_km": task["distance"],
        "eta": config.eta,
        "squeezing_db": task["squeezing_db"],
        "t": task["t"],
        "detector": task["detector_label"],
        "rate": rate,
        "fidelity": fidelity,
        "n_users": task["n"],
    }


def _cmd_spdc_sweep(resolved, parser) -> int:
    users = _parse_int_list(resolved["n"])
    distances = _parse_distances(resolved["distance"])
    levels = _parse_float_list(resolved["squeezing_db"])
    t = float(resolved["t"])
    if not 0.0 < t < 1.0:
        parser.error("--t must lie strictly between 0 and 1")
    kind, multiplex = _parse_detector(resolved["detector"])
    efficiency = float(resolved["efficiency"])
    dark = float(resolved["dark"])
    herald = _central_detector(kind, multiplex, efficiency, dark)
    # the central node reads bucket detectors; the flag picks the herald
    central = DetectorModel.threshold(efficiency=efficiency, dark_prob=dark)
    tasks = [{"n": n, "distance": d, "squeezing_db": db, "t": t,
              "cutoff": int(resolved["cutoff"]),
              "attenuation": float(resolved["attenuation"]),
              "herald_model": herald, "central_model": central,
              "detector_label": str(resolved["detector"])}
             for n in users for db in levels for d in distances]
    rows = _parallel_map(_spdc_point, tasks)
    rows.sort(key=lambda r: (r["n_users"], r["squeezing_db"],
                             r["distance_km"]))
    return _emit(rows, _SPDC_COLUMNS, resolved, plotting.render_spdc_sweep,
                 parser)


def _purify_point(task: dict) -> dict:
    from . import purification

    n = task["n"]
    eta = eta_from_distance(task["distance"], task["attenuation"])
    if task["fidelity"] is not None:
        a_sq = analytics.vacuum_weight_for_fidelity(n, eta, task["fidelity"])
    else:
        a_sq = task["a2"]
    config = ProtocolConfig(n_users=n, source=BellSource(math.sqrt(a_sq)),
                            distance_km=task["distance"],
                            attenuation_db_per_km=task["attenuation"])
    pattern = protocol.enumerate_success_patterns(n + (n % 2))[0]
    attempt = protocol.run_attempt(config, pattern)
    outcome = purification.epl_purify(attempt, attempt)
    return {
        "distance_km": task["distance"],
        "eta": eta,
        "n_users": n,
        "a_squared": a_sq,
        "input_fidelity": attempt.fidelity,
        "ghz_weight": attempt.ghz_weight,
        "success_probability": outcome.success_probability,
        "output_fidelity": outcome.fidelity,
        "success_ideal_partner": purification.success_with_ideal_partner(
            attempt.ghz_weight),
    }


def _cmd_purify(resolved, parser) -> int:
    users = _parse_int_list(resolved["n"])
    distances = _parse_distances(resolved["distance"])
    if resolved["source"] != "bell":
        parser.error("purify sweeps photon-pair sources")
    if (resolved["fidelity"] is None) == (resolved["a2"] is None):
        parser.error("purify needs exactly one of --fidelity or --a2")
    fidelity = None if resolved["fidelity"] is None else float(
        resolved["fidelity"])
    a2 = None if resolved["a2"] is None else float(resolved["a2"])
    tasks = [{"n": n, "distance": d,
              "attenuation": float(resolved["attenuation"]),
              "fidelity": fidelity, "a2": a2}
             for n in users for d in distances]
    rows = _parallel_map(_purify_point, tasks)
    rows.sort(key=lambda r: (r["n_users"], r["distance_km"]))
    return _emit(rows, _PURIFY_COLUMNS, resolved, plotting.render_purify,
                 parser)


def _cmd_verify(resolved, parser) -> int:
    results = verify.run_checks(
        full=resolved["full"],
        fault_phase=0.2 if resolved["inject_fault"] else 0.0)
    if resolved["json"]:
        payload = [{
            "name": r.name, "passed": r.passed,
            "got": None if math.isnan(r.got) else r.got,
            "expected": r.expected, "tolerance": r.tolerance,
            "detail": r.detail, "elapsed_s": r.elapsed,
        } for r in results]
        print(json.dumps(payload, indent=2))
    else:
        for r in results:
            print(r.summary())
        passed = sum(r.passed for r in results)
        print(f"{passed}/{len(results)} checks passed")
    return 0 if all(r.passed for r in results) else 1


def _add_common_output_flags(sub):
    sub.add_argument("--out", help="write delimited output to this path "
                                   "(a figure lands next to it)")
    sub.add_argument("--json", action="store_true", default=None,
                     help="emit JSON instead of CSV")
    sub.add_argument("--no-plot", action="store_true", default=None,
                     dest="no_plot", help="skip the companion figure")
    sub.add_argument("--config", help="flat key = value file mirroring the "
                                      "flags; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghzsim",
        description="Star-network GHZ distribution: sweeps, purification "
                    "and self-verification.")
    commands = parser.add_subparsers(dest="command", required=True)

    rate = commands.add_parser(
        "rate-sweep", help="closed-form rate/fidelity vs distance "
                           "(photon-pair sources)")
    rate.add_argument("--n", help="comma-separated even user counts "
                                  "(default 4)")
    rate.add_argument("--distance", help="start:stop:step in km "
                                         "(default 0:200:5)")
    rate.add_argument("--fidelity", type=float,
                      help="hold this fidelity and re-tune the source "
                           "at every distance")
    rate.add_argument("--a2", type=float,
                      help="fixed source vacuum weight a^2")
    rate.add_argument("--source", choices=["bell", "spdc"],
                      help="source family (default bell)")
    rate.add_argument("--attenuation", type=float,
                      help="fiber attenuation in dB/km (default 0.2)")
    rate.add_argument("--simulate", action="store_true", default=None,
                      help="append full-pipeline columns using --detector")
    rate.add_argument("--detector",
                      help="pnrd | threshold | quasi:<n> for the simulated "
                           "columns (default pnrd)")
    rate.add_argument("--efficiency", type=float,
                      help="detector efficiency for simulated columns "
                           "(default 1.0)")
    rate.add_argument("--dark", type=float,
                      help="detector dark-count probability (default 0)")
    rate.add_argument("--cutoff", type=int, help="unused for bell sources")
    rate.add_argument("--samples", type=int,
                      help="append Monte Carlo columns with this many "
                           "samples per point")
    rate.add_argument("--seed", type=int,
                      help="base Monte Carlo seed (default 12345)")
    _add_common_output_flags(rate)

    spdc = commands.add_parser(
        "spdc-sweep", help="simulated rate/fidelity for heralded "
                           "squeezed-light sources")
    spdc.add_argument("--n", help="comma-separated user counts (default 4)")
    spdc.add_argument("--distance", help="start:stop:step in km "
                                         "(default 0:100:10)")
    spdc.add_argument("--squeezing-db", dest="squeezing_db",
                      help="comma-separated squeezing levels in dB "
                           "(default 0.43)")
    spdc.add_argument("--t", type=float,
                      help="source splitter transmittance (default 0.95)")
    spdc.add_argument("--attenuation", type=float,
                      help="fiber attenuation in dB/km (default 0.2)")
    spdc.add_argument("--detector",
                      help="herald detector: pnrd | threshold | quasi:<n> "
                           "(default pnrd); central detectors are threshold")
    spdc.add_argument("--efficiency", type=float,
                      help="detector efficiency (default 0.8)")
    spdc.add_argument("--dark", type=float,
                      help="dark-count probability (default 1e-6)")
    spdc.add_argument("--cutoff", type=int,
                      help="source photon-number truncation (default 3; "
                           "2 is much faster at low squeezing)")
    _add_common_output_flags(spdc)

    purify = commands.add_parser(
        "purify", help="one purification round on two identical attempts")
    purify.add_argument("--n", help="comma-separated user counts (default 4)")
    purify.add_argument("--distance", help="start:stop:step in km "
                                           "(default 0:200:5)")
    purify.add_argument("--fidelity", type=float,
                        help="hold this single-copy fidelity per distance")
    purify.add_argument("--a2", type=float,
                        help="fixed source vacuum weight a^2")
    purify.add_argument("--source", choices=["bell", "spdc"],
                        help="source family (default bell)")
    purify.add_argument("--attenuation", type=float,
                        help="fiber attenuation in dB/km (default 0.2)")
    _add_common_output_flags(purify)

    check = commands.add_parser(
        "verify", help="run the self-check registry (exit 0 iff all pass)")
    check.add_argument("--full", action="store_true", default=None,
                       help="larger grids plus the Monte Carlo check")
    check.add_argument("--inject-fault", action="store_true", default=None,
                       dest="inject_fault",
                       help="perturb a beamsplitter phase; the heralded-"
                            "states check must then fail")
    check.add_argument("--json", action="store_true", default=None,
                       help="machine-readable report")
    check.add_argument("--config", help="flat key = value file")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    resolved = _resolve(args, args.command, parser)
    try:
        if args.command == "rate-sweep":
            return _cmd_rate_sweep(resolved, parser)
        if args.command == "spdc-sweep":
            return _cmd_spdc_sweep(resolved, parser)
        if args.command == "purify":
            return _cmd_purify(resolved, parser)
        return _cmd_verify(resolved, parser)
    except ValueError as exc:
        parser.error(str(exc))


if __name__ == "__main__":
    sys.exit(main())
