"""Command-line driver: ``apgauge <subcommand> --config C ...``.

Every subcommand writes its tables as CSV and its summary as JSON into
``--out`` (default ``./apgauge-out``), embeds the resolved configuration in
the JSON, and prints the JSON to stdout. Failures exit with the code of the
raised error class.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .almost import build_schedule, control_oscillation, demonstrate_oscillation, find_super_resonance
from .asymptotics import fit_expansion, fit_power, geometric_ladder
from .config import RunConfig, load_config, shipped
from .errors import ApgaugeError, ConfigError
from .ids import classify, ids_expansion
from .lattice import FrequencySet
from .pipeline import IdsPipeline, gap_scan, invariant_report, make_engine
from .spectral import SpectralMap

GAP_COLUMNS = ["eps", "lower", "upper", "gap", "oracle_lower", "oracle_upper", "oracle_gap", "endpoint_error"]
IDS_COLUMNS = ["eps", "N", "difference", "oracle", "oracle_difference"]
G_COLUMNS = ["xi", "G", "h0", "zone_theta"]


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: r.get(k, "") for k in columns})


def _emit(args, cfg: RunConfig | None, command: str, payload: dict, tables: dict | None = None) -> dict:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{command}-{cfg.name}" if cfg is not None else command
    doc = {"command": command, "version": __version__, **payload}
    if cfg is not None:
        doc["config"] = cfg.doc
    for suffix, (columns, rows) in (tables or {}).items():
        path = out / f"{stem}{suffix}.csv"
        _write_csv(path, columns, rows)
        doc.setdefault("csv", []).append(str(path))
    (out / f"{stem}.json").write_text(json.dumps(doc, indent=2, default=str) + "\n")
    print(json.dumps(doc, indent=2, default=str))
    return doc


def _ladder(args, cfg: RunConfig) -> list[float]:
    e = cfg.doc["epsilon"]
    return geometric_ladder(args.eps_max or e["max"], args.points or e["points"], e["ratio"])


def _frequency(text: str | None, cfg: RunConfig, fallback) -> tuple[int, ...]:
    if text is None:
        if fallback is None:
            raise ConfigError("no frequency given", "gap_theta")
        return tuple(fallback)
    try:
        t = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse frequency {text!r}", "--theta") from exc
    if len(t) != cfg.potential.basis.dim:
        raise ConfigError(f"frequency {t} does not match the basis dimension", "--theta")
    return t


def _lambda(args, cfg: RunConfig) -> float:
    lam = args.lam if args.lam is not None else cfg.lam
    if lam is None:
        raise ConfigError("no level given", "lambda")
    return float(lam)


# --------------------------------------------------------------------------
# subcommands


def cmd_gap_scan(args) -> int:
    cfg = load_config(args.config)
    V = cfg.potential
    theta = _frequency(args.theta, cfg, cfg.gap_theta or (V.support[-1] if V.support else None))
    ladder = _ladder(args, cfg)
    rows = gap_scan(V, theta, ladder, cfg.N, cfg.prec, cfg.delta, cfg.mollifier)
    table = [r.to_row() for r in rows]
    order = V.frequency_set.order(theta)
    exps = [float(a) for a in args.exponents.split(",")] if args.exponents else [order, order + 1, order + 2]
    fit = fit_expansion(ladder, [r["gap"] for r in table], exps)
    payload = {"theta": list(theta), "fit": fit.to_json(), "leading_prediction": 2 * abs(V.coefficient(theta))}
    errs = [r["endpoint_error"] for r in table if "endpoint_error" in r]
    if errs and all(e > 0 for e in errs):
        payload["endpoint_error_fit"] = fit_power(ladder, errs).to_json()
    _emit(args, cfg, "gap-scan", payload, {"": (GAP_COLUMNS, table)})
    return 0


def cmd_ids_scan(args) -> int:
    cfg = load_config(args.config)
    lam = _lambda(args, cfg)
    pipe = IdsPipeline(cfg.potential, lam, cfg.N, cfg.prec, cfg.delta, cfg.mollifier, oracle_cutoff=cfg.oracle_M)
    ladder = _ladder(args, cfg)
    base = pipe.base
    rows, diffs, note = [], [], None
    for e in ladder:
        v = pipe.value(e)
        row = {"eps": e, "N": str(v), "difference": float(v - base)}
        if not args.no_oracle:
            try:
                o = pipe.oracle(e)
                row.update(oracle=str(o), oracle_difference=float(o - base))
            except ApgaugeError as exc:
                row.update(oracle="", oracle_difference="")
                note = str(exc)
        rows.append(row)
        diffs.append(row["difference"])
    exp = ids_expansion(lambda e, _d=dict(zip(ladder, diffs)): _d[e], ladder, pipe.label, 0.0, cfg.N)
    payload = {"lambda": lam, "label": pipe.label.to_json(), "base": str(base), "expansion": exp.to_json()}
    if note is not None:
        payload["oracle_note"] = note
    _emit(args, cfg, "ids-scan", payload, {"": (IDS_COLUMNS, rows)})
    return 0


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    lam = _lambda(args, cfg)
    label = classify(cfg.potential, lam, make_engine(cfg.potential, cfg.N, cfg.delta, cfg.mollifier))
    _emit(args, cfg, "classify", {"lambda": lam, "label": label.to_json()})
    return 0


def cmd_g_scan(args) -> int:
    cfg = load_config(args.config)
    smap = SpectralMap(make_engine(cfg.potential, cfg.N, cfg.delta, cfg.mollifier))
    xs = np.linspace(args.lo, args.hi, args.points)
    table = smap.table(xs)
    G = table.G(args.eps)
    h0 = table.h0(args.eps)
    zones = smap.zones.zones
    rows = []
    for i, x in enumerate(xs):
        z = table.zone[i]
        rows.append({"xi": float(x), "G": float(G[i]), "h0": float(h0[i]),
                     "zone_theta": ",".join(map(str, zones[z].theta)) if z >= 0 else ""})
    _emit(args, cfg, "g-scan", {"eps": args.eps, "points": args.points, "zones": len(zones)},
          {"": (G_COLUMNS, rows)})
    return 0


def cmd_superres(args) -> int:
    cfg = load_config(args.config)
    if cfg.potential.decay is None:
        raise ConfigError("superres needs a decay rule", "decay")
    sr = cfg.superres
    depth = args.depth or sr.get("depth", 3)
    schedule = build_schedule(cfg.potential, cfg.N, sr.get("eps0"), sr.get("n_max", 12), cfg.P0)
    start = tuple(sr.get("start", (0.5, 0.9)))
    cand = find_super_resonance(schedule, depth, start)
    payload = {"schedule": schedule.to_json(), "candidate": cand.to_json()}
    if len(cand.stages) >= 2:
        report = demonstrate_oscillation(schedule, cand)
        control = control_oscillation(schedule, cand)
        payload["jumps"] = report.jumps
        payload["oscillation"] = report.to_json()
        payload["control"] = control.to_json()
        payload["certificate_ok"] = cand.valid and report.oscillates and control.stitch.consistent
    _emit(args, cfg, "superres", payload)
    return 0 if payload.get("certificate_ok", cand.valid) else 1


def cmd_selfcheck(args) -> int:
    results = []
    for name in args.configs or shipped():
        cfg = load_config(name)
        V = cfg.potential
        if V.decay is not None:
            sched = build_schedule(V, cfg.N, cfg.superres.get("eps0"), cfg.superres.get("n_max", 12), cfg.P0)
            ok = all(w.ok for w in sched.windows)
            detail = {"eps0": sched.eps0, "windows": len(sched.windows)}
        else:
            rep = invariant_report(V, cfg.N, cfg.delta, cfg.mollifier)
            ok = rep["ok"]
            detail = {k: v for k, v in rep.items() if k.endswith("_ok") or k in ("cancellation", "hermitian_defect")}
        results.append({"config": name, "ok": ok, **detail})
        print(f"{'PASS' if ok else 'FAIL'} {name}", file=sys.stderr)
    doc = _emit(args, None, "selfcheck", {"results": results, "ok": all(r["ok"] for r in results)})
    return 0 if doc["ok"] else 1


def cmd_shell(args) -> int:
    cfg = load_config(args.config)
    theta = cfg.potential.frequency_set
    if cfg.potential.decay is not None:
        theta = FrequencySet.standard(cfg.potential.basis)
    sys.stdout.write(theta.shell_csv(args.order))
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="apgauge", description="Gauge-transform spectral asymptotics.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="config file or shipped config name")
        sp.add_argument("--out", default="apgauge-out", help="output directory")

    sp = sub.add_parser("gap-scan", help="gap endpoints and their expansion")
    common(sp)
    sp.add_argument("--theta", help="gap frequency as comma-separated coefficients")
    sp.add_argument("--eps-max", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--exponents", help="fit exponents, comma-separated")
    sp.set_defaults(func=cmd_gap_scan)

    sp = sub.add_parser("ids-scan", help="integrated density of states along the ε ladder")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--eps-max", type=float)
    sp.add_argument("--points", type=int)
    sp.add_argument("--no-oracle", action="store_true")
    sp.set_defaults(func=cmd_ids_scan)

    sp = sub.add_parser("classify", help="case label of a level")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("g-scan", help="spectral map G on a ξ grid")
    common(sp)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--lo", type=float, default=-2.5)
    sp.add_argument("--hi", type=float, default=2.5)
    sp.add_argument("--points", type=int, default=2001)
    sp.set_defaults(func=cmd_g_scan)

    sp = sub.add_parser("superres", help="super-resonant candidate and oscillation certificate")
    common(sp)
    sp.add_argument("--depth", type=int)
    sp.set_defaults(func=cmd_superres)

    sp = sub.add_parser("selfcheck", help="invariant suite on the shipped configs")
    common(sp, config=False)
    sp.add_argument("configs", nargs="*")
    sp.set_defaults(func=cmd_selfcheck)

    sp = sub.add_parser("shell", help="frequency shell Θ_L as CSV")
    sp.add_argument("--config", required=True)
    sp.add_argument("--order", type=int, default=2)
    sp.set_defaults(func=cmd_shell)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ApgaugeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
