"""
Batch front-end
===============

    scat2d <command> --config <path> [--set section.key=value ...]
                     [--no-timestamp]

Commands: sweep, classify, tune, levinson, waveop, selftest.  Runs are
described by a flat INI file (key = value under [section] headers); every
key is validated against the schema below and unknown keys are rejected, so
archived configs stay unambiguous.  One CSV per run with a fixed header line
per command; summary rows are prefixed '#'.  Identical configs produce
byte-identical CSV apart from the timestamp comment, which --no-timestamp
suppresses.

Exit codes: 0 success, 1 computation error (module error name on stderr),
2 configuration error.

The THREADS environment variable (positive integer) caps worker parallelism
of the energy sweeps.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from datetime import datetime, timezone

import numpy as np

from . import bessel
from .errors import ConfigParse, Scat2dError
from .grids import AngularGrid, build_disk_grid
from .levinson import SweepSpec, levinson_check
from .potentials import default_grid, factorize_potential
from .smatrix import sweep_smatrix
from .threshold import classify_threshold, compute_projection_set, tune_critical_coupling
from .waveop import LogEnergyGrid, compare_waveops, gaussian_packet

COMMANDS = ("sweep", "classify", "tune", "levinson", "waveop", "selftest")

_SCHEMA = {
    "run": {"command"},
    "potential": {"kind", "g", "width", "radius", "a", "b", "h", "sign"},
    "grid": {"radius", "n_radial", "n_angular", "m_angles"},
    "sweep": {"lambda_min", "lambda_max", "points"},
    "tol": {"nullspace"},
    "tune": {"target", "g_lo", "g_hi", "gtol"},
    "levinson": {"lambda_min", "lambda_max", "per_decade", "box_radius", "n_grid"},
    "waveop": {"packet_n", "packet_extent", "k0x", "k0y", "sigma",
               "window_lo", "window_hi", "t_horizon", "dt", "s_min", "s_max", "n_s"},
    "output": {"path", "snapshots"},
}


def parse_config(path: str, overrides: list[str] | None = None) -> dict:
    """Read and validate the flat key = value configuration."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigParse(f"cannot read config file {path!r}")
    for item in overrides or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigParse(f"override {item!r} is not section.key=value")
        key, value = item.split("=", 1)
        section, name = key.strip().split(".", 1)
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section.strip(), name.strip(), value.strip())
    cfg: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigParse(f"unknown config section [{section}]")
        allowed = _SCHEMA[section]
        cfg[section] = {}
        for key, value in cp.items(section):
            if key not in allowed:
                raise ConfigParse(f"unknown key {key!r} in section [{section}]")
            cfg[section][key] = value
    return cfg


def _fnum(cfg, section, key, default=None, positive=False):
    raw = cfg.get(section, {}).get(key)
    if raw is None:
        if default is None:
            raise ConfigParse(f"missing required key {section}.{key}")
        return default
    try:
        val = float(raw)
    except ValueError as exc:
        raise ConfigParse(f"{section}.{key} = {raw!r} is not a number") from exc
    if positive and not (val > 0.0):
        raise ConfigParse(f"{section}.{key} must be positive, got {val}")
    return val


def _inum(cfg, section, key, default=None, positive=False):
    val = _fnum(cfg, section, key, default=default, positive=positive)
    if val != int(val):
        raise ConfigParse(f"{section}.{key} must be an integer")
    return int(val)


def _potential(cfg):
    pot_cfg = cfg.get("potential", {})
    kind = pot_cfg.get("kind")
    if kind not in ("gaussian", "square_well", "ring"):
        raise ConfigParse(f"potential.kind must be a known preset, got {kind!r}")
    g = _fnum(cfg, "potential", "g")
    params = {k: float(v) for k, v in pot_cfg.items() if k not in ("kind", "g")}
    grid_cfg = cfg.get("grid", {})
    if grid_cfg.get("radius") or grid_cfg.get("n_radial") or grid_cfg.get("n_angular"):
        base = default_grid(kind, dict(params))
        radius = _fnum(cfg, "grid", "radius", default=base.radius, positive=True)
        n_radial = _inum(cfg, "grid", "n_radial", default=base.n_radial, positive=True)
        n_angular = _inum(cfg, "grid", "n_angular", default=base.n_angular, positive=True)
        grid = build_disk_grid(radius, n_radial, n_angular, breaks=base.breaks)
    else:
        grid = default_grid(kind, dict(params))
    return factorize_potential(kind, params, g, grid), kind, params, g


class CsvWriter:
    """Single-writer CSV sink with '#' summary rows."""

    def __init__(self, path: str, timestamp: bool):
        self.path = path
        self.rows: list = []
        self.timestamp = timestamp

    def comment(self, text: str):
        self.rows.append([f"# {text}"])

    def header(self, cols):
        self.rows.append(list(cols))

    def row(self, vals):
        self.rows.append([_fmt(v) for v in vals])

    def flush(self):
        with open(self.path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if self.timestamp:
                writer.writerow([f"# generated "
                                 f"{datetime.now(timezone.utc).isoformat()}"])
            writer.writerows(self.rows)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


# ----------------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------------

def _cmd_sweep(cfg, out: CsvWriter) -> None:
    pot, kind, params, g = _potential(cfg)
    lam_min = _fnum(cfg, "sweep", "lambda_min", positive=True)
    lam_max = _fnum(cfg, "sweep", "lambda_max", positive=True)
    points = _inum(cfg, "sweep", "points", default=40, positive=True)
    m = _inum(cfg, "grid", "m_angles", default=48, positive=True)
    lams = np.geomspace(lam_min, lam_max, points)
    sweep = sweep_smatrix(pot, lams, AngularGrid(m))
    out.header(["lambda", "s_minus_1_norm", "unitarity_defect", "cond_M"])
    for sm in sweep:
        if sm.ok:
            out.row([sm.lam, sm.s_minus_1_norm, sm.unitarity_defect, sm.cond])
        else:
            out.comment(f"lambda = {sm.lam:.12g} failed: {sm.error}")
    good = [sm for sm in sweep if sm.ok]
    if good:
        out.comment(f"peak s_minus_1_norm = "
                    f"{max(sm.s_minus_1_norm for sm in good):.12g}")
        out.comment(f"max unitarity_defect = "
                    f"{max(sm.unitarity_defect for sm in good):.12g}")
    print(f"sweep: {len(good)}/{len(sweep)} samples, kind={kind}, g={g}")


def _cmd_classify(cfg, out: CsvWriter) -> None:
    pot, kind, params, g = _potential(cfg)
    tol = _fnum(cfg, "tol", "nullspace", default=1e-6, positive=True)
    pset = compute_projection_set(pot, tol=tol)
    report = classify_threshold(pset, pot)
    out.header(["g", "n_s", "n_p", "n_zero_bound", "gap_S1", "gap_S2", "gap_S3"])
    gaps = [pset.gaps[k].gap if k in pset.gaps else np.inf
            for k in ("S1", "S2", "S3")]
    out.row([g, report.n_s, report.n_p, report.n_zero_bound, *gaps])
    print(report.as_kv_block())
    print(f"n_p = {report.n_p}")


def _cmd_tune(cfg, out: CsvWriter) -> None:
    pot, kind, params, g = _potential(cfg)
    target = cfg.get("tune", {}).get("target")
    if target not in ("s_resonance", "p_resonance", "zero_bound"):
        raise ConfigParse(f"tune.target invalid: {target!r}")
    g_lo = _fnum(cfg, "tune", "g_lo")
    g_hi = _fnum(cfg, "tune", "g_hi")
    gtol = _fnum(cfg, "tune", "gtol", default=1e-8, positive=True)
    tol = _fnum(cfg, "tol", "nullspace", default=1e-4, positive=True)
    gstar = tune_critical_coupling(kind, params, target, (g_lo, g_hi),
                                   grid=pot.grid, gtol=gtol, classify_tol=tol)
    out.header(["target", "g_lo", "g_hi", "g_star"])
    out.row([target, g_lo, g_hi, gstar])
    print(f"g_star = {gstar:.8f}")


def _cmd_levinson(cfg, out: CsvWriter) -> None:
    pot, kind, params, g = _potential(cfg)
    spec = SweepSpec(
        lam_min=_fnum(cfg, "levinson", "lambda_min", default=1e-8, positive=True),
        lam_max=_fnum(cfg, "levinson", "lambda_max", default=150.0, positive=True),
        per_decade=_inum(cfg, "levinson", "per_decade", default=24, positive=True),
        m_angles=_inum(cfg, "grid", "m_angles", default=48, positive=True),
        box_radius=_fnum(cfg, "levinson", "box_radius", default=3.5 * pot.extent,
                         positive=True),
        n_grid=_inum(cfg, "levinson", "n_grid", default=220, positive=True))
    rep = levinson_check(pot, spec)
    out.header(["lambda", "integrand_n0", "integrand_n1", "integrand_n2"])
    w0 = rep.windings[0]
    lams = np.exp(w0.s_grid)
    table = {n: rep.windings[n].integrand.real for n in rep.windings}
    for i, lam in enumerate(lams):
        out.row([lam, table[0][i], table[1][i], table[2][i]])
    for n, w in rep.windings.items():
        out.comment(f"winding_n{n} = {w.winding:.12g} "
                    f"(tail {w.tail_estimate:.3g})")
    out.comment(f"n_bound_fd = {rep.n_bound_fd}")
    out.comment(f"n_bound_radial = {rep.n_bound_radial}")
    out.comment(f"discrepancy = {rep.discrepancy:.12g}")
    for fl in rep.flags:
        out.comment(f"flag: {fl}")
    print(f"winding = {rep.windings[1].winding:+.4f}, "
          f"N_bound = {rep.n_bound_radial}, discrepancy = {rep.discrepancy:.4f}")


def write_packet_snapshot(path: str, packet, time_stamp: float) -> None:
    """Flat little-endian complex128 array after a 4-line text header."""
    with open(path, "wb") as fh:
        fh.write(f"dims {packet.n} {packet.n}\n".encode())
        fh.write(f"spacing {packet.h:.17g}\n".encode())
        fh.write(f"time {time_stamp:.17g}\n".encode())
        fh.write(b"endianness little\n")
        fh.write(packet.values.astype("<c16").tobytes())


def _cmd_waveop(cfg, out: CsvWriter, snapshots: bool) -> None:
    pot, kind, params, g = _potential(cfg)
    tol = _fnum(cfg, "tol", "nullspace", default=1e-6, positive=True)
    pset = compute_projection_set(pot, tol=tol)
    n = _inum(cfg, "waveop", "packet_n", default=384, positive=True)
    extent = _fnum(cfg, "waveop", "packet_extent", default=80.0, positive=True)
    k0 = (_fnum(cfg, "waveop", "k0x", default=1.25),
          _fnum(cfg, "waveop", "k0y", default=0.0))
    sigma = _fnum(cfg, "waveop", "sigma", default=5.0, positive=True)
    window = (_fnum(cfg, "waveop", "window_lo", default=0.5, positive=True),
              _fnum(cfg, "waveop", "window_hi", default=4.0, positive=True))
    t_hor = _fnum(cfg, "waveop", "t_horizon", default=4.0, positive=True)
    dt = _fnum(cfg, "waveop", "dt", default=0.01, positive=True)
    sgrid = LogEnergyGrid(_fnum(cfg, "waveop", "s_min", default=np.log(0.03)),
                          _fnum(cfg, "waveop", "s_max", default=np.log(40.0)),
                          _inum(cfg, "waveop", "n_s", default=128, positive=True))
    m = _inum(cfg, "grid", "m_angles", default=32, positive=True)
    pk = gaussian_packet(n, extent, k0=k0, sigma=sigma, window=window)
    cmp = compare_waveops(pot, pset, pk, sgrid, AngularGrid(m), T=t_hor, dt=dt)
    out.header(["fixture", "window_lo", "window_hi", "formula_vs_time_error",
                "isometry_defect", "identity_defect"])
    out.row([f"{kind}:g={g:.6g}", window[0], window[1], cmp.relative_error,
             cmp.isometry_defect_formula, cmp.identity_defect_max])
    out.comment(f"cauchy_in_T = {cmp.cauchy_in_T:.12g}")
    out.comment(f"simplified_residual = {cmp.simplified_residual:.12g}")
    out.comment("simplified_singvals = "
                + " ".join(f"{s:.6g}" for s in cmp.simplified_singvals))
    if snapshots:
        from .waveop import waveop_timedomain
        td = waveop_timedomain(pot, pk, t_hor, dt)
        write_packet_snapshot(out.path + ".in.snap", pk, 0.0)
        write_packet_snapshot(out.path + ".out.snap", td, t_hor)
    print(f"waveop: formula vs time-domain error = {cmp.relative_error:.4g}")


def _cmd_selftest(out: CsvWriter) -> None:
    rep = bessel.selftest()
    out.header(["x", "wronskian_rel_dev"])
    for x, dev in zip(rep.x, rep.rel_dev):
        out.row([float(x), float(dev)])
    out.comment(f"max_rel_dev = {rep.max_rel_dev:.12g}")
    print(f"selftest: max Wronskian deviation = {rep.max_rel_dev:.3e}")


# ----------------------------------------------------------------------------

def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="scat2d",
                                     description="2D scattering laboratory")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=False,
                        help="flat key = value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="S.K=V",
                        help="override one config value")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="suppress the timestamp comment in the CSV")
    args = parser.parse_args(argv)

    try:
        if args.command == "selftest":
            cfg = {} if not args.config else parse_config(args.config, args.set)
        else:
            if not args.config:
                raise ConfigParse("--config is required for this command")
            cfg = parse_config(args.config, args.set)
        declared = cfg.get("run", {}).get("command")
        if declared is not None and declared != args.command:
            raise ConfigParse(f"config declares command {declared!r} but "
                              f"{args.command!r} was requested")
        out_path = cfg.get("output", {}).get("path", f"scat2d_{args.command}.csv")
        out = CsvWriter(out_path, timestamp=not args.no_timestamp)
        snapshots = cfg.get("output", {}).get("snapshots", "no") in ("yes", "true", "1")
    except ConfigParse as exc:
        print(f"ConfigParse: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "sweep":
            _cmd_sweep(cfg, out)
        elif args.command == "classify":
            _cmd_classify(cfg, out)
        elif args.command == "tune":
            _cmd_tune(cfg, out)
        elif args.command == "levinson":
            _cmd_levinson(cfg, out)
        elif args.command == "waveop":
            _cmd_waveop(cfg, out, snapshots)
        elif args.command == "selftest":
            _cmd_selftest(out)
    except ConfigParse as exc:
        print(f"ConfigParse: {exc}", file=sys.stderr)
        return 2
    except Scat2dError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    out.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
