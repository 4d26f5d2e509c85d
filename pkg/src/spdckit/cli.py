"""Command-line front end: ``spdckit <command> [--config FILE] [--out PATH] ...``.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from . import collection as col
from . import entanglement as ent
from . import overlap as ov
from . import phasematch as pm
from .config import ConfigError, RunConfig
from .errors import DomainError, NumericalError, PreconditionError, SpdcError
from .scan import SpectralScan, dumps

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2


class Table:
    """Plain columnar output for results that are not normalized scans."""

    def __init__(self, columns, rows):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else
                        str(v).lower() if isinstance(v, (bool, np.bool_)) else v for v in r])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        # JSON has no NaN; unresolved values become null
        rows = [[None if isinstance(v, (float, np.floating)) and not math.isfinite(v) else v
                 for v in r] for r in self.rows]
        return {"columns": self.columns, "rows": rows}


def _encode(item):
    if isinstance(item, (SpectralScan, Table)):
        return item.to_json_dict()
    return item


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(doc: dict, main: str, out: str | None, fmt: str) -> list[Path]:
    """Write a command's results; returns the paths written.

    JSON puts everything in one document. CSV writes the ``main`` entry to
    ``out`` and every other entry next to it as ``<stem>.<name>.csv`` (or
    ``.json`` for summaries).
    """
    if fmt == "json":
        text = dumps({k: _encode(v) for k, v in doc.items()})
        if out is None:
            sys.stdout.write(text)
            return []
        write_atomic(Path(out), text)
        return [Path(out)]
    main_item = doc[main]
    text = main_item.to_csv() if hasattr(main_item, "to_csv") else dumps(main_item)
    if out is None:
        sys.stdout.write(text)
        for name, item in doc.items():
            if name != main and not hasattr(item, "to_csv"):
                sys.stderr.write(dumps({name: item}))
        return []
    path = Path(out)
    write_atomic(path, text)
    written = [path]
    for name, item in doc.items():
        if name == main:
            continue
        if hasattr(item, "to_csv"):
            side = path.with_name(f"{path.stem}.{name}.csv")
            write_atomic(side, item.to_csv())
        else:
            side = path.with_name(f"{path.stem}.{name}.json")
            write_atomic(side, dumps(item))
        written.append(side)
    return written


# -- commands ----------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig, args):
    spec = cfg.crystal()
    lam = cfg.sweep("wavelength").grid()
    scan = pm.collinear_spectrum(spec, cfg.pump_wavelength, lam)
    lobes = [{"center_nm": lb.center, "fwhm_nm": lb.fwhm, "height": lb.height}
             for lb in pm.find_lobes(scan)]
    return {"spectrum": scan,
            "summary": {"temperature_C": spec.temperature, "lobes": lobes}}, "spectrum"


def cmd_tuning(cfg: RunConfig, args):
    spec = cfg.crystal()
    temps = cfg.sweep("temperature").grid()
    pts = pm.tuning_curve(spec, cfg.pump_wavelength, temps)
    table = Table(["temperature [C]", "signal [nm]", "idler [nm]", "degenerate", "phase_matched"],
                  [[p.temperature, p.signal_nm, p.idler_nm, p.degenerate, p.phase_matched]
                   for p in pts])
    theta = cfg.sweep("angle").grid()
    lam = cfg.sweep("wavelength").grid()
    ridge = pm.brightness_ridge(spec, cfg.pump_wavelength, temps, theta, lam)
    ridge_table = Table(["temperature [C]", "peak signal [nm]", "peak idler [nm]", "peak angle [mrad]"],
                        [[r.temperature, r.signal_nm, r.idler_nm, r.angle_mrad] for r in ridge])
    intensity = pm.temperature_intensity(spec, cfg.pump_wavelength, temps, theta, lam)
    return {"tuning": table, "ridge": ridge_table, "intensity": intensity}, "tuning"


def cmd_angles(cfg: RunConfig, args):
    spec = cfg.crystal()
    theta = cfg.sweep("angle").grid()
    lam = cfg.sweep("wavelength").grid()
    m = pm.emission_angle_map(spec, cfg.pump_wavelength, spec.temperature, theta, lam)
    return {"radial": m.radial, "map": m.map,
            "summary": {"temperature_C": spec.temperature,
                        "peak_angle_mrad": m.peak_angle_mrad}}, "radial"


def cmd_overlap_sweep(cfg: RunConfig, args):
    spec = cfg.crystal()
    wp = cfg.sweep("pump_waist").grid() * 1e-6
    ws = cfg.sweep("signal_waist").grid() * 1e-6
    lp = cfg.pump_wavelength
    band = ov.signal_band(spec, lp, float(cfg.section("crystal")["signal_nm"]))
    envelope = ov.sweep_pump_waist(spec, lp, wp, ws_grid=ws, wavelengths_nm=band)
    doc = {"envelope": envelope}
    if args.ws_um is not None:
        doc["fixed_ws"] = ov.sweep_pump_waist(spec, lp, wp, w_s=args.ws_um * 1e-6,
                                              wavelengths_nm=band)
    w_p = float(cfg.section("pump")["waist_um"]) * 1e-6
    doc["signal_waist"] = ov.sweep_signal_waist(spec, lp, w_p, ws, band)
    doc["summary"] = {"temperature_C": spec.temperature, "band_nm": [band[0], band[-1]],
                      "optimal_pump_waist_um": envelope.argmax()}
    return doc, "envelope"


def cmd_farfield(cfg: RunConfig, args):
    spec = cfg.crystal()
    lp = cfg.pump_wavelength
    c = cfg.section("crystal")
    band = ov.signal_band(spec, lp, float(c["signal_nm"]))
    ff = ov.far_field_profile(spec, lp, float(cfg.section("pump")["waist_um"]) * 1e-6,
                              float(cfg.section("farfield")["distance_m"]),
                              cfg.sweep("position").grid(), float(c["signal_nm"]), band)
    return {"profile": ff.profile, "fits": ff.fits}, "profile"


def coupling_curves(spec, pump, wp_grid, f_primes_mm, coll: dict, signal_nm: float = 796.0):
    """Coupling and heralding efficiency versus pump waist for each f'."""
    band = ov.signal_band(spec, pump, signal_nm)
    ws = np.geomspace(ov.WS_RANGE[0], ov.WS_RANGE[1], ov.FARFIELD_COMPONENTS)
    P = ov.intensity_map(spec, pump, wp_grid, ws, band)
    loss = math.sqrt(coll["T_s"] * coll["T_i"] * coll["D_s"] * coll["D_i"])
    lam_c = float(coll["wavelength_nm"]) * 1e-9
    curves = {}
    for f in f_primes_mm:
        w_c = col.collection_mode_waist(float(coll["mode_radius_um"]) * 1e-6,
                                        float(coll["collimator_mm"]) * 1e-3, f * 1e-3, lam_c)
        eta = []
        for row in P:
            scan = SpectralScan.from_raw(ov.Axis("signal waist", "um", ws * 1e6), row)
            w, weight = ov.waist_distribution(scan)
            eta.append(col.coupling_efficiency(w, weight, w_c))
        eta = np.array(eta)
        curves[float(f)] = {"w_c_um": w_c * 1e6, "eta": eta, "eta_h": loss * eta}
    return curves


def cmd_coupling(cfg: RunConfig, args):
    spec = cfg.crystal()
    wp = cfg.sweep("pump_waist").grid()
    coll = cfg.section("collection")
    fps = [float(f) for f in coll["f_prime_mm"]]
    curves = coupling_curves(spec, cfg.pump_wavelength, wp * 1e-6, fps, coll,
                             float(cfg.section("crystal")["signal_nm"]))
    cols = ["pump waist [um]"]
    for f in fps:
        cols += [f"eta f'={f:g}mm", f"eta_h f'={f:g}mm"]
    rows = []
    for j, w in enumerate(wp):
        r = [float(w)]
        for f in fps:
            r += [float(curves[f]["eta"][j]), float(curves[f]["eta_h"][j])]
        rows.append(r)
    best = {f"{f:g}": {"w_c_um": c["w_c_um"], "max_eta": float(c["eta"].max()),
                       "max_eta_h": float(c["eta_h"].max()),
                       "best_pump_waist_um": float(wp[int(np.argmax(c["eta"]))])}
            for f, c in curves.items()}
    top = max(curves, key=lambda f: curves[f]["eta"].max())
    return {"coupling": Table(cols, rows),
            "summary": {"temperature_C": spec.temperature, "per_f_prime": best,
                        "best_f_prime_mm": top}}, "coupling"


def _bundled(name: str) -> str:
    return (resources.files("spdckit") / "data" / name).read_text(encoding="utf-8")


def _read_input(path: str | None, bundled: str) -> str:
    if path is None:
        return _bundled(bundled)
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def cmd_report(cfg: RunConfig, args):
    rows = col.source_report(col.read_records(_read_input(args.input, "source_records.csv")))
    table = Table(col.REPORT_COLUMNS, [[r[c] for c in col.REPORT_COLUMNS] for r in rows])
    if args.out is not None:
        sys.stdout.write(col.report_text(rows))
    return {"report": table}, "report"


def cmd_simulate(cfg: RunConfig, args):
    t = cfg.section("tomography")
    rho = ent.werner(float(t["visibility"]))
    counts = ent.simulate_counts(rho, ent.tomography_settings(int(t["settings"])),
                                 float(t["N"]), seed=args.seed)
    return {"counts": _CsvText(counts.to_csv())}, "counts"


class _CsvText:
    def __init__(self, text):
        self.text = text

    def to_csv(self):
        return self.text

    def to_json_dict(self):
        rows = list(csv.reader(io.StringIO(self.text)))
        return {"columns": rows[0], "rows": rows[1:]}


def cmd_tomography(cfg: RunConfig, args):
    if args.input is None:
        raise ConfigError("tomography needs a counts CSV (see the simulate command)")
    counts = ent.TomographyCounts.from_csv(_read_input(args.input, ""))
    fit = ent.tomography_mle(counts)
    target = args.target
    doc = {"density_matrix": fit.rho.to_json_dict(),
           "fidelity": ent.fidelity(fit.rho, target), "target": target,
           "chsh": ent.chsh(fit.rho), "converged": fit.converged,
           "gradient_norm": fit.grad_norm, "iterations": fit.iterations}
    nboot = int(cfg.section("tomography").get("bootstrap", 0))
    if nboot:
        b = ent.bootstrap(counts, target, nboot, seed=args.seed)
        doc["fidelity_std"] = b.fidelity_std
        doc["chsh_std"] = b.chsh_std
    rows = [[i, j, float(z.real), float(z.imag)] for i, row in enumerate(fit.rho.data)
            for j, z in enumerate(row)]
    return {"tomography": doc, "rho": Table(["row", "col", "re", "im"], rows)}, \
        ("tomography" if args.format == "json" else "rho")


def cmd_chsh(cfg: RunConfig, args):
    rows = list(csv.DictReader(io.StringIO(_read_input(args.input, "visibilities.csv"))))
    if len(rows) != 4:
        raise ConfigError("visibility file must have four rows")
    v = [float(r["visibility"]) for r in rows]
    totals = [float(r["total"]) for r in rows] if all(r.get("total") for r in rows) else None
    est = ent.chsh_from_visibility(v, totals)
    table = Table(["S", "sigma"], [[est.S, "" if est.sigma is None else est.sigma]])
    return {"chsh": table}, "chsh"


COMMANDS = {
    "spectrum": (cmd_spectrum, "collinear spectrum and per-lobe FWHM"),
    "tuning": (cmd_tuning, "collinear signal/idler wavelengths versus temperature"),
    "angles": (cmd_angles, "angle-wavelength emission map and radial profile"),
    "overlap-sweep": (cmd_overlap_sweep, "pair intensity versus pump and signal waist"),
    "farfield": (cmd_farfield, "far-field signal profile with Gaussian/Lorentzian fits"),
    "coupling": (cmd_coupling, "fiber coupling and heralding efficiency versus pump waist"),
    "report": (cmd_report, "brightness/heralding table from a count-record CSV"),
    "simulate": (cmd_simulate, "synthetic tomography counts for a Werner state"),
    "tomography": (cmd_tomography, "maximum-likelihood density matrix and fidelity"),
    "chsh": (cmd_chsh, "CHSH value from four polarization visibilities"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON run configuration")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value; repeatable")
    common.add_argument("--error-json", action="store_true",
                        help="report failures as a JSON object on stderr")
    p = argparse.ArgumentParser(prog="spdckit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_)
        if name in ("report", "tomography", "chsh"):
            sp.add_argument("input", nargs="?", help="counts CSV from the simulate command"
                            if name == "tomography" else "input CSV (default: bundled data)")
        if name == "overlap-sweep":
            sp.add_argument("--ws-um", type=float, help="also sweep at this fixed signal waist")
        if name == "tomography":
            sp.add_argument("--target", default="phi+", choices=("phi+", "phi-", "psi+", "psi-"))
    return p


def _fail(args, exc: Exception, code: int) -> int:
    kind = type(exc).__name__
    if getattr(args, "error_json", False):
        err = {"error": kind, "message": str(exc), "exit_code": code}
        if isinstance(exc, NumericalError):
            err["estimate"] = exc.estimate
            err["error_bound"] = exc.error_bound
        sys.stderr.write(dumps(err))
    else:
        sys.stderr.write(f"spdckit: {kind}: {exc}\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.load(args.config, args.set)
        if args.format is None:
            args.format = cfg.section("output").get("format", "csv")
        if args.out is None:
            args.out = cfg.section("output").get("path")
        func = COMMANDS[args.command][0]
        doc, main_name = func(cfg, args)
        emit(doc, main_name, args.out, args.format)
    except (ConfigError, DomainError, PreconditionError) as exc:
        return _fail(args, exc, EXIT_USAGE)
    except (NumericalError, ArithmeticError, SpdcError) as exc:
        return _fail(args, exc, EXIT_NUMERICAL)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
