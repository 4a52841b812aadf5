"""Command line interface: compute, sweep, export.

Subcommands map one-to-one onto the analyses: `spectrum` (finite array),
`dispersion` / `mass` (infinite lattice), `period-scan` / `size-scan`
(lifetime sweeps), `edge-profile` (emission decomposition), `oscillations`
(decay-vs-N Fourier analysis plus the dispersion-side wavevectors) and
`dump-h` (raw matrices for debugging).

The period flag is in units of λ₀/12 throughout, so the magic period is
``--period 1.0``.  CSV output has the fixed column order (axis, re_eps,
im_eps, decay, classification, residual) with 17 significant digits; JSON
mirrors the columns as arrays plus a metadata object.  An optional
``--config FILE`` (key=value lines, keys named like the long flags) is
loaded before the flags; explicit flags win.

Exit codes: 0 success, 1 I/O failure (partial output removed), 2 usage.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, bloch, radiative, scans, spectra
from .core import ArrayParams
from .hamiltonians import build_h0, build_h0_inverse

CSV_COLUMNS = ("axis", "re_eps", "im_eps", "decay", "classification", "residual")

_CONFIG_KEYS = {"n-atoms", "period", "grid", "out", "cache", "quick",
                "threads", "format"}


class UsageError(Exception):
    """Bad flags, malformed grid, or an inapplicable format request."""


def _fmt(x: float) -> str:
    return "%.17g" % x


def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"non-numeric grid component in {text!r}") from exc
    if step <= 0:
        raise UsageError(f"grid step must be positive, got {step}")
    if stop < start:
        raise UsageError(f"grid stop {stop} below start {start}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


def _load_config(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val.strip()
    return values


@dataclass
class RunConfig:
    command: str
    n_atoms: int | None
    period: float | None
    grid: np.ndarray | None
    out: Path | None
    cache: Path | None
    quick: bool
    threads: int
    fmt: str


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boundpair",
        description="Two-photon bound states of a waveguide-coupled atomic array.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, *, needs_n=False, needs_period=False, grid_help=None):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--n-atoms", type=int, default=None,
                       required=False, help="number of atoms N")
        p.add_argument("--period", type=float, default=None,
                       help="array period in units of λ₀/12 (magic period = 1.0)")
        if grid_help:
            p.add_argument("--grid", default=None, help=grid_help)
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--cache", default=None,
                       help="cache directory (default: $BOUNDPAIR_CACHE)")
        p.add_argument("--quick", action="store_true", default=None,
                       help="reduced sizes for a fast smoke run")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for grid points (default 1)")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"),
                       default=None, help="output format (default csv)")
        p.add_argument("--config", default=None,
                       help="key=value file loaded before flags")
        return p

    add("spectrum", "finite-array eigenstates with classification")
    add("dispersion", "bound-pair dispersion ε(K) on K ∈ [0.5π, π]")
    add("mass", "inverse effective mass three ways (k·p, finite difference, closed form)")
    add("period-scan", "most subradiant bound decay vs array period",
        grid_help="period grid start:stop:step in λ₀/12 units, e.g. 0.8:1.2:0.01")
    add("size-scan", "most subradiant bound decay vs atom number",
        grid_help="N grid start:stop:step, e.g. 20:100:1")
    add("edge-profile", "emission amplitudes, χ diagonal, dead-layer fit")
    add("oscillations", "decay-vs-N oscillation analysis with ΔK extraction",
        grid_help="N grid start:stop:step, e.g. 20:100:1")
    add("dump-h", "raw matrices (H₀, H₀⁻¹, pair H, relative-motion H(K=π))")
    return parser


def parse_args(argv) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)

    merged = {}
    if ns.config is not None:
        merged.update(_load_config(ns.config))

    def pick(flag_val, key, conv):
        if flag_val is not None:
            return flag_val
        if key in merged:
            raw = merged[key]
            try:
                return conv(raw)
            except (ValueError, UsageError) as exc:
                raise UsageError(f"config key {key}: {exc}") from exc
        return None

    grid = pick(getattr(ns, "grid", None), "grid", str)
    quick = pick(ns.quick, "quick", lambda s: s.lower() in ("1", "true", "yes"))
    threads = pick(ns.threads, "threads", int)
    fmt = pick(ns.fmt, "format", str)
    if fmt is not None and fmt not in ("csv", "json"):
        raise UsageError(f"format must be csv or json, got {fmt!r}")
    out = pick(ns.out, "out", str)
    cache = pick(ns.cache, "cache", str)
    cache_dir = Path(cache) if cache else scans.cache_dir_from_env()

    return RunConfig(
        command=ns.command,
        n_atoms=pick(ns.n_atoms, "n-atoms", int),
        period=pick(ns.period, "period", float),
        grid=_parse_grid(grid) if grid is not None else None,
        out=Path(out) if out else None,
        cache=cache_dir,
        quick=bool(quick),
        threads=threads if threads else 1,
        fmt=fmt or "csv",
    )


def _require(cfg: RunConfig, **fields):
    for name, val in fields.items():
        if val is None:
            raise UsageError(f"{cfg.command} requires --{name.replace('_', '-')}")


def _params(cfg: RunConfig, default_n=None) -> ArrayParams:
    n = cfg.n_atoms if cfg.n_atoms is not None else default_n
    _require(cfg, n_atoms=n, period=cfg.period)
    return ArrayParams.from_scaled_period(n, cfg.period)


# --- per-command result assembly -----------------------------------------

def _rows_spectrum(cfg: RunConfig):
    params = _params(cfg)
    if cfg.quick and params.n_atoms > 30:
        params = ArrayParams.from_scaled_period(30, cfg.period)
    report = spectra.spectrum(params)
    rows = [(float(k), e.real, e.imag, -e.imag, report.classifications[k],
             report.residuals[k])
            for k, e in enumerate(report.energies)]
    meta = {"n_atoms": params.n_atoms, "period": params.scaled_period,
            "gamma0": params.gamma0}
    return rows, meta


def _rows_dispersion(cfg: RunConfig):
    _require(cfg, period=cfg.period)
    params = ArrayParams.from_scaled_period(10, cfg.period)
    m_max = 60 if cfg.quick else bloch.M_DISPERSION
    k_values = None
    if cfg.quick:
        k_values = np.linspace(0.5 * math.pi, math.pi, 41)
    curve = bloch.dispersion(params, k_values=k_values, m_max=m_max)
    rows = [(k, e.real, e.imag, -e.imag,
             "bound" if ok else "missing", tail)
            for k, e, ok, tail in zip(curve.k_com, curve.eps, curve.found,
                                      curve.tail)]
    meta = {"period": params.scaled_period, "m_max": m_max,
            "eps_pi_re": curve.eps_pi.real, "eps_pi_im": curve.eps_pi.imag}
    return rows, meta


def _mass_payload(cfg: RunConfig):
    _require(cfg, period=cfg.period)
    params = ArrayParams.from_scaled_period(10, cfg.period)
    m_kp = 300 if cfg.quick else bloch.M_KP
    m_fd = 120 if cfg.quick else bloch.M_DISPERSION
    report = bloch.mass_report(params, m_kp=m_kp, m_fd=m_fd)
    return {
        "period": params.scaled_period,
        "inv_mass_closed": report.inv_mass_closed,
        "inv_mass_kp": report.inv_mass_kp,
        "inv_mass_fd": report.inv_mass_fd,
        "fd_error_estimate": report.fd_error,
        "kp_band_term": report.kp_term1,
        "kp_band_term_closed": report.kp_term1_closed,
        "kp_sum_term": report.kp_term2,
    }


def _rows_period_scan(cfg: RunConfig):
    if cfg.quick and cfg.n_atoms is None:
        cfg = replace(cfg, n_atoms=20)
    _require(cfg, n_atoms=cfg.n_atoms, grid=cfg.grid)
    n = min(cfg.n_atoms, 20) if cfg.quick else cfg.n_atoms
    result = scans.period_scan(n, cfg.grid, cache_dir=cfg.cache,
                               threads=cfg.threads)
    meta = {"n_atoms": n, "grid_hash": result.grid_hash}
    return list(result.rows()), meta


def _rows_size_scan(cfg: RunConfig):
    _require(cfg, period=cfg.period, grid=cfg.grid)
    grid = cfg.grid.astype(int)
    if cfg.quick:
        grid = grid[grid <= 60][::2] if len(grid) > 20 else grid
    result = scans.size_scan(cfg.period, grid, cache_dir=cfg.cache,
                             threads=cfg.threads)
    meta = {"period": cfg.period, "grid_hash": result.grid_hash}
    return list(result.rows()), meta


def _edge_profile_payload(cfg: RunConfig):
    params = _params(cfg, default_n=100)
    if cfg.quick and params.n_atoms > 40:
        params = ArrayParams.from_scaled_period(40, cfg.period)
    state = spectra.most_subradiant_bound(params)
    if state is None:
        raise RuntimeError(f"no bound state found for N={params.n_atoms}, "
                           f"period {params.scaled_period}")
    inv_mass = bloch.inv_mass_closed_form(params.phi, params.gamma0)
    prof = radiative.edge_profile(state, params, inv_mass)
    return {
        "n_atoms": params.n_atoms,
        "period": params.scaled_period,
        "eps_re": state.eps.real,
        "eps_im": state.eps.imag,
        "decay": prof.decay,
        "l_dead": prof.l_dead,
        "kappa_tilde": prof.kappa_tilde,
        "barrier_u": prof.barrier_u,
        "an_score": prof.an_score,
        "max_d2": prof.max_d2,
        "d_re": [float(x) for x in prof.d.real],
        "d_im": [float(x) for x in prof.d.imag],
        "chi_diag_re": [float(x) for x in prof.chi_diag.real],
        "chi_diag_im": [float(x) for x in prof.chi_diag.imag],
    }


def _oscillations_payload(cfg: RunConfig):
    _require(cfg, period=cfg.period, grid=cfg.grid)
    grid = cfg.grid.astype(int)
    if cfg.quick:
        grid = grid[grid <= 60]
    scan = scans.size_scan(cfg.period, grid, cache_dir=cfg.cache,
                           threads=cfg.threads)
    osc = scans.oscillation_wavevector(scan)
    payload = {
        "period": cfg.period,
        "n_range": [int(grid[0]), int(grid[-1])],
        "k_osc": osc.k_osc,
        "k_osc_width": osc.k_width,
        "snr": osc.snr,
        "amplitude": osc.amplitude,
        "k_disp": None,
        "k_quartic": None,
        "alpha": None,
        "inv_mass_fit": None,
    }
    params = ArrayParams.from_scaled_period(10, cfg.period)
    m_max = 60 if cfg.quick else bloch.M_DISPERSION
    curve = bloch.dispersion(params, m_max=m_max)
    try:
        alpha, inv_mass = scans.quartic_fit(curve)
        payload["alpha"] = alpha
        payload["inv_mass_fit"] = inv_mass
    except ValueError:
        pass
    deg = scans.degeneracy_wavevector(curve)
    if deg is not None:
        payload["k_disp"] = deg.dk_root
        payload["k_quartic"] = deg.dk_quartic
    return payload


def _dump_h_payload(cfg: RunConfig):
    params = _params(cfg, default_n=12)
    if cfg.quick and params.n_atoms > 12:
        params = ArrayParams.from_scaled_period(12, cfg.period)
    if params.n_atoms > 40:
        raise UsageError("dump-h is for small arrays; use --n-atoms <= 40")
    from .core import PairBasis
    from .hamiltonians import build_two_photon_h

    h0 = build_h0(params)
    h0inv = build_h0_inverse(params)
    basis = PairBasis.build(params.n_atoms)
    pair_h = build_two_photon_h(params, basis)
    rel = bloch.build_relative_h(math.pi, 20, params)

    def c2l(a):
        return {"re": np.asarray(a).real.tolist(), "im": np.asarray(a).imag.tolist()}

    return {
        "n_atoms": params.n_atoms,
        "period": params.scaled_period,
        "h0": c2l(h0),
        "h0_inverse": c2l(h0inv),
        "pair_h": c2l(pair_h),
        "relative_h_pi_m20": c2l(rel),
    }


# --- export ---------------------------------------------------------------

def _write_csv(rows, path: Path | None) -> str:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for axis, re_e, im_e, dec, cls, res in rows:
        writer.writerow([_fmt(axis), _fmt(re_e), _fmt(im_e), _fmt(dec),
                         cls, _fmt(res)])
    text = buf.getvalue()
    if path is not None:
        path.write_text(text)
    return text


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(payload, path: Path | None) -> str:
    text = json.dumps(payload, indent=2, default=_json_default)
    if path is not None:
        path.write_text(text)
    return text


def _emit(cfg: RunConfig, rows=None, payload=None, meta=None, t0=None):
    """Write the result in the requested format; returns printable text."""
    wall = time.perf_counter() - t0 if t0 is not None else None
    if rows is not None and cfg.fmt == "csv":
        return _write_csv(rows, cfg.out)
    if rows is not None:
        cols = list(zip(*rows)) if rows else [[] for _ in CSV_COLUMNS]
        payload = {name: list(col) for name, col in zip(CSV_COLUMNS, cols)}
    elif cfg.fmt == "csv":
        raise UsageError(f"{cfg.command} output is not tabular; use --format json")
    doc = {
        "metadata": {
            "command": cfg.command,
            "version": __version__,
            "wall_time_s": wall,
            **(meta or {}),
        },
        "result": payload,
    }
    return _write_json(doc, cfg.out)


_HANDLERS = {
    "spectrum": _rows_spectrum,
    "dispersion": _rows_dispersion,
    "period-scan": _rows_period_scan,
    "size-scan": _rows_size_scan,
}

_PAYLOAD_HANDLERS = {
    "mass": _mass_payload,
    "edge-profile": _edge_profile_payload,
    "oscillations": _oscillations_payload,
    "dump-h": _dump_h_payload,
}


def main(argv=None) -> int:
    t0 = time.perf_counter()
    try:
        cfg = parse_args(argv if argv is not None else sys.argv[1:])
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        if cfg.command in _HANDLERS:
            rows, meta = _HANDLERS[cfg.command](cfg)
            text = _emit(cfg, rows=rows, meta=meta, t0=t0)
        else:
            if cfg.command in ("mass", "edge-profile", "oscillations", "dump-h") \
                    and cfg.fmt == "csv":
                cfg.fmt = "json"   # these have no tabular form
            payload = _PAYLOAD_HANDLERS[cfg.command](cfg)
            text = _emit(cfg, payload=payload, t0=t0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        if cfg.out is not None and cfg.out.exists():
            try:
                cfg.out.unlink()
            except OSError:
                pass
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if cfg.out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        print(f"wrote {cfg.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
