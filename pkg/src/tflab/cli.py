"""Command-line experiment runner.

    tflab spectrum|geometry|verify|sharpness|fit --config CONFIG.json [--jobs K] [--out DIR]

Every run is fully determined by its JSON config; identical configs produce
byte-identical output files.  Exit codes: 0 ok, 2 config error, 3 numerical
error, 4 hypothesis violation.  Column layouts are documented in
``tflab/data/schema.json``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import analytic, bounds, geometry, io, operator, stats
from .errors import HypothesisError, TflabError
from .quadrature import QuadSpec
from .windows import Window, ambiguity_table, window_constants

COMMANDS = ("spectrum", "geometry", "verify", "sharpness", "fit")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_HYPOTHESIS = 0, 2, 3, 4


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the offending key."""


# --------------------------------------------------------------------------
# config parsing
# --------------------------------------------------------------------------

def _get(cfg: dict, key: str, kind=None, default=..., check=None, what: str = ""):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing required key '{key}'")
        return default
    v = cfg[key]
    if kind is not None:
        try:
            if kind is int and (isinstance(v, bool) or int(v) != v):
                raise ValueError
            v = kind(v)
        except (TypeError, ValueError):
            raise ConfigError(f"key '{key}' must be {kind.__name__}, got {cfg[key]!r}") from None
    if check is not None and not check(v):
        raise ConfigError(f"key '{key}' {what or 'is out of range'} (got {v!r})")
    return v


def _grid(cfg: dict, name: str, check=None, what: str = "", required: bool = True):
    grids = cfg.get("grids", {})
    if not isinstance(grids, dict):
        raise ConfigError("key 'grids' must be an object")
    if name not in grids:
        if required:
            raise ConfigError(f"missing required key 'grids.{name}'")
        return None
    vals = grids[name]
    if not isinstance(vals, list) or not vals:
        raise ConfigError(f"key 'grids.{name}' must be a nonempty list")
    try:
        vals = [float(v) for v in vals]
    except (TypeError, ValueError):
        raise ConfigError(f"key 'grids.{name}' must contain numbers") from None
    if check is not None:
        bad = [v for v in vals if not check(v)]
        if bad:
            raise ConfigError(f"key 'grids.{name}' {what} (offending value {bad[0]!r})")
    return vals


def _window(cfg: dict) -> Window:
    spec = cfg.get("window", {"kind": "gaussian"})
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("key 'window' must be an object with a 'kind'")
    kind = spec["kind"]
    if kind == "gaussian":
        return Window.gaussian()
    if kind == "hermite":
        return Window.hermite(_get(spec, "m", int, check=lambda m: m >= 0, what="must be >= 0"))
    if kind == "sampled":
        if "csv" in spec:
            return Window.from_csv(spec["csv"])
        samples = spec.get("samples")
        if not isinstance(samples, list):
            raise ConfigError("key 'window.samples' must be a list (or give 'window.csv')")
        return Window.sampled(samples, _get(spec, "step", float), spec.get("t0"))
    raise ConfigError(f"key 'window.kind' must be gaussian, hermite or sampled (got {kind!r})")


def _domain(cfg: dict, key: str = "domain") -> geometry.Domain:
    if key not in cfg:
        raise ConfigError(f"missing required key '{key}'")
    try:
        return geometry.domain_from_spec(cfg[key])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"key '{key}' is incomplete: missing {exc}") from None
    except TflabError as exc:
        if "unknown domain kind" in str(exc):
            raise ConfigError(f"key '{key}.kind': {exc}") from None
        raise


def _quad(cfg: dict) -> QuadSpec:
    q = cfg.get("quadrature", {})
    if not isinstance(q, dict):
        raise ConfigError("key 'quadrature' must be an object")
    unknown = set(q) - set(QuadSpec().to_dict())
    if unknown:
        raise ConfigError(f"unknown key 'quadrature.{sorted(unknown)[0]}'")
    return QuadSpec(**q)


def _basis_size(cfg: dict) -> int:
    cap = _get(cfg, "N_cap", int, 512, lambda v: 1 <= v <= operator.MAX_BASIS,
               f"must lie in [1, {operator.MAX_BASIS}]")
    return _get(cfg, "N", int, 128, lambda v: 1 <= v <= cap, f"must lie in [1, {cap}]")


def _is_centered_disk(dom: geometry.Domain) -> bool:
    d = dom.resolve()
    return isinstance(d, geometry.Disk) and d.center == (0.0, 0.0)


def _source(cfg: dict, w: Window, dom: geometry.Domain) -> str:
    src = _get(cfg, "source", str, "galerkin", lambda s: s in ("galerkin", "analytic"),
               "must be 'galerkin' or 'analytic'")
    if src == "analytic" and not (w.hermite_index == 0 and _is_centered_disk(dom)):
        raise ConfigError("key 'source': analytic spectra need a Gaussian window and a centred disk")
    return src


def _compute_spectrum(cfg: dict, w: Window, dom: geometry.Domain):
    """Return ``(spectrum, trace_defect, metadata)``."""
    src = _source(cfg, w, dom)
    N = _basis_size(cfg)
    if src == "analytic":
        R = dom.resolve().radius
        k_max = _get(cfg, "k_max", int, N - 1, lambda v: v >= 0, "must be >= 0")
        a = analytic.disk_eigenvalues(R, k_max)
        spec = a.spectrum()
        defect = max(dom.measure() - float(spec.values.sum()), 0.0)
        return spec, defect, {"source": "analytic", **a.to_dict()}, None
    quad_tol = _get(cfg, "quad_tol", float, 1e-9, lambda v: v > 0, "must be > 0")
    M = operator.assemble_galerkin(w, dom, N, _quad(cfg), quad_tol)
    spec = operator.eigen_spectrum(M)
    tr, tr2 = operator.trace_identities(M)
    meta = {"source": "galerkin", **M.metadata(), "trace": tr, "trace_sq": tr2,
            "clip_count": spec.clip_count, "max_clip": spec.max_clip, "max_residual": spec.max_residual}
    return spec, max(dom.measure() - tr, 0.0), meta, M


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_spectrum(cfg: dict, out: Path, jobs: int) -> None:
    w = _window(cfg)
    dom = _domain(cfg)
    spec, defect, meta, M = _compute_spectrum(cfg, w, dom)
    io.write_spectrum_csv(out / "spectrum.csv", spec)
    if M is not None and cfg.get("write_matrix", False):
        io.write_matrix_csv(out / "matrix.csv", M)
    meta.update({"window": w.describe(), "domain": geometry.domain_to_spec(dom),
                 "measure": dom.measure(), "trace_defect": defect, "n_values": len(spec)})
    io.write_json(out / "spectrum_meta.json", meta)


def _geom_summary(cfg: dict, dom: geometry.Domain, r_values=()) -> tuple[geometry.GeometrySummary, dict]:
    eta = _get(cfg, "eta", float, 1.0, lambda v: v > 0, "must be > 0")
    if "kappa" in cfg:
        kap = _get(cfg, "kappa", float, check=lambda v: v > 0, what="must be > 0")
        est = {"kappa": kap, "source": "config"}
    else:
        k = geometry.kappa_estimate(dom, eta)
        kap = k.value
        est = {"kappa": kap, "source": "sampled", "history": list(k.history),
               "n_boundary": k.n_boundary, "n_radii": k.n_radii}
    summary = geometry.GeometrySummary(
        dom.measure(), dom.perimeter(), eta, kap,
        tuple((r, geometry.level_set_measure(dom, r)) for r in r_values),
    )
    return summary, est


def cmd_geometry(cfg: dict, out: Path, jobs: int) -> None:
    dom = _domain(cfg)
    r_values = _grid(cfg, "r", lambda v: v > 0, "must be > 0", required=False) or []
    summary, est = _geom_summary(cfg, dom, r_values)
    doc = {"domain": geometry.domain_to_spec(dom), "summary": summary.to_dict(), "kappa_estimate": est}
    if r_values:
        doc["level_set_constant"] = geometry.level_set_constant(summary)
    io.write_json(out / "geometry.json", doc)
    scale = summary.perimeter / summary.kappa
    io.write_csv(out / "levelsets.csv", ("r", "level_set_measure", "unit_rhs"),
                 ((r, v, scale * (1 + r / summary.eta)) for r, v in summary.level_set_table))


class _SweepPoint:
    """Re-raise library errors with the failing sweep point appended."""

    def __init__(self, **point):
        self.point = point

    def __enter__(self):
        return self

    def __exit__(self, et, exc, tb):
        if exc is not None and isinstance(exc, TflabError) and not getattr(exc, "_tagged", False):
            where = ", ".join(f"{k}={v!r}" for k, v in self.point.items())
            new = type(exc)(f"{exc} [sweep point: {where}]")
            new._tagged = True
            raise new from exc
        return False


def _report_worker(args, spec_vals, area, geom, consts, w, alpha, C_d, variant, defect):
    delta, p = args
    with _SweepPoint(delta=delta, p=p):
        return bounds.bound_report(spec_vals, area, geom, consts, w, delta, p, alpha, C_d, variant,
                                   None, defect)


def _pmap(fn, items, jobs: int):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


RIGOROUS = ("lemma41", "simple")
BOUNDS_COLUMNS = ("delta", "p", "bound", "deviation_lhs", "rhs", "ratio", "admissible", "status")


def cmd_verify(cfg: dict, out: Path, jobs: int) -> None:
    w = _window(cfg)
    dom = _domain(cfg)
    deltas = _grid(cfg, "delta", lambda v: 0 < v < 1, "must lie in (0, 1)")
    ps = _grid(cfg, "p", lambda v: 0 < v <= 2, "must lie in (0, 2]", required=False) or [1.0]
    alpha = _get(cfg, "alpha", float, 1.0, lambda v: v > 0, "must be > 0")
    beta = _get(cfg, "beta", float, 0.5)
    s = _get(cfg, "s", float, 3.0)
    if beta < 0.5:
        raise HypothesisError(f"beta={beta} < 1/2")
    if s < 1:
        raise HypothesisError(f"s={s} < 1")
    C_d = _get(cfg, "C_d", float, 1.0, lambda v: v > 0, "must be > 0")
    variant = _get(cfg, "gs_variant", str, "theorem", lambda v: v in bounds.GS_VARIANTS,
                   f"must be one of {bounds.GS_VARIANTS}")
    if "spectrum_csv" in cfg:
        spec = io.read_spectrum_csv(cfg["spectrum_csv"])
        defect = max(dom.measure() - float(spec.values.sum()), 0.0)
        source = {"source": "csv", "path": str(cfg["spectrum_csv"])}
    else:
        spec, defect, source, _ = _compute_spectrum(cfg, w, dom)
    geom, est = _geom_summary(cfg, dom)
    table = ambiguity_table(w)
    consts = window_constants(w, beta, s, table)
    area = dom.measure()
    work = partial(_report_worker, spec_vals=spec.values, area=area, geom=geom, consts=consts, w=w,
                   alpha=alpha, C_d=C_d, variant=variant, defect=defect)
    pts = [(d, p) for p in ps for d in deltas]
    reports = _pmap(work, pts, jobs)
    rows = []
    n_pass = n_fail = 0
    failures = []
    ratios: dict = {}
    for (d, p), r in zip(pts, reports):
        for bid in bounds.BOUND_IDS:
            ok = bool(r.admissible.get(bid))
            rhs = r.rhs(bid)
            ratio = r.deviation_lhs / rhs if ok and rhs > 0 else math.nan
            if not ok:
                status = "inadmissible"
            elif bid in RIGOROUS:
                tol = 1e-9 + (d * (1 - d)) ** (-p / 2) * defect if bid == "lemma41" else 1e-9
                if r.deviation_lhs <= rhs + tol:
                    n_pass += 1
                    status = "pass"
                else:
                    n_fail += 1
                    status = "fail"
                    failures.append({"bound": bid, "delta": d, "p": p, "lhs": r.deviation_lhs, "rhs": rhs})
            else:
                status = "ratio_only"
                if math.isfinite(ratio):
                    ratios[bid] = max(ratios.get(bid, 0.0), ratio)
            rows.append((d, p, bid, r.deviation_lhs, rhs, ratio, ok, status))
    io.write_csv(out / "bounds.csv", BOUNDS_COLUMNS, rows)
    io.write_csv(out / "counting.csv", stats.CountingReport.COLUMNS,
                 (stats.counting_report(spec, area, d).row() for d in deltas))
    summary = {
        "pass": n_pass,
        "fail": n_fail,
        "checked_bounds": list(RIGOROUS),
        "failures": failures,
        "max_ratio_unit_constant": ratios,
        "trace_defect": defect,
        "spectrum": source,
        "geometry": geom.to_dict(),
        "kappa_estimate": est,
        "window_constants": consts.__dict__,
        "a_omega": stats.a_omega(dom),
    }
    io.write_json(out / "verify_summary.json", summary)


def cmd_sharpness(cfg: dict, out: Path, jobs: int) -> None:
    regime = _get(cfg, "regime", str, check=lambda v: v in ("A", "B"), what="must be 'A' or 'B'")
    Rs = _grid(cfg, "R", lambda v: v > 0, "must be > 0")
    deltas = _grid(cfg, "delta", lambda v: 0 < v < 1, "must lie in (0, 1)")
    if regime == "A":
        C = _get(cfg, "C", float, 2.0, lambda v: v > 0, "must be > 0")
        fit = analytic.fit_sharpness_a(Rs, deltas, C)
    else:
        fit = analytic.fit_sharpness_b(Rs, deltas)
    io.write_json(out / "sharpness.json", fit.to_dict())


def _fit_spectrum_worker(R, cfg, w, base):
    with _SweepPoint(R=R):
        return _fit_spectrum(R, cfg, w, base)


def _fit_spectrum(R, cfg, w, base):
    dom = geometry.dilate(base, R)
    if cfg.get("source", "galerkin") == "analytic":
        rad = dom.resolve().radius
        k_max = int(4 * math.pi * rad * rad) + 200
        return analytic.disk_eigenvalues(rad, k_max).values
    spec, _, _, _ = _compute_spectrum(cfg, w, dom)
    return spec.values


def cmd_fit(cfg: dict, out: Path, jobs: int) -> None:
    w = _window(cfg)
    base = _domain(cfg)
    _source(cfg, w, base)
    bound_id = _get(cfg, "bound", str, "gs", lambda v: v in bounds.BOUND_IDS,
                    f"must be one of {bounds.BOUND_IDS}")
    Rs = _grid(cfg, "R", lambda v: v > 0, "must be > 0")
    deltas = _grid(cfg, "delta", lambda v: 0 < v < 1, "must lie in (0, 1)")
    Rs_oos = _grid(cfg, "R_oos", lambda v: v > 0, "must be > 0", required=False)
    deltas_oos = _grid(cfg, "delta_oos", lambda v: 0 < v < 1, "must lie in (0, 1)", required=False)
    if (Rs_oos is None) != (deltas_oos is None):
        raise ConfigError("keys 'grids.R_oos' and 'grids.delta_oos' must be given together")
    p = _get(cfg, "p", float, 1.0, lambda v: 0 < v <= 2, "must lie in (0, 2]")
    alpha = _get(cfg, "alpha", float, 1.0, lambda v: v > 0, "must be > 0")
    beta = _get(cfg, "beta", float, 0.5)
    s = _get(cfg, "s", float, 3.0)
    if beta < 0.5:
        raise HypothesisError(f"beta={beta} < 1/2")
    variant = _get(cfg, "gs_variant", str, "theorem", lambda v: v in bounds.GS_VARIANTS,
                   f"must be one of {bounds.GS_VARIANTS}")
    base_geom, est = _geom_summary(cfg, base)
    table = ambiguity_table(w)
    consts = window_constants(w, beta, s, table)
    all_R = list(Rs) + list(Rs_oos or [])
    spectra = dict(zip(all_R, _pmap(partial(_fit_spectrum_worker, cfg=cfg, w=w, base=base), all_R, jobs)))
    area = base.measure()

    def sweep(R_grid, delta_grid):
        return bounds.dilation_reports(base_geom, consts, w, R_grid, delta_grid, spectra.__getitem__,
                                       lambda R: area * R * R, p, alpha, variant, table)

    reports = sweep(Rs, deltas)
    fit = bounds.fit_constant(reports, bound_id)
    doc = {"fit": fit.to_dict(), "window_constants": consts.__dict__, "base_geometry": base_geom.to_dict(),
           "kappa_estimate": est, "p": p, "alpha": alpha, "gs_variant": variant}
    rows = [(r.inputs["R"], *r.row()) for r in reports]
    if Rs_oos is not None:
        oos = sweep(Rs_oos, deltas_oos)
        worst = 0.0
        where = {}
        for r in oos:
            rhs = fit.fitted_Cd * r.rhs(bound_id)
            ratio = r.deviation_lhs / rhs if rhs > 0 else (0.0 if r.deviation_lhs == 0 else math.inf)
            if ratio > worst:
                worst, where = ratio, {"R": r.inputs["R"], "delta": r.delta}
        doc["out_of_sample"] = {"max_ratio": worst, "location": where, "holds": worst <= 1.0,
                                "R": Rs_oos, "delta": deltas_oos}
        rows += [(r.inputs["R"], *r.row()) for r in oos]
    io.write_json(out / "fit.json", doc)
    io.write_csv(out / "fit_reports.csv", ("R", *bounds.BoundReport.COLUMNS), rows)


HANDLERS = {
    "spectrum": cmd_spectrum,
    "geometry": cmd_geometry,
    "verify": cmd_verify,
    "sharpness": cmd_sharpness,
    "fit": cmd_fit,
}


def run(command: str, cfg: dict, out: Path, jobs: int = 1) -> None:
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}")
    if "command" in cfg and cfg["command"] != command:
        raise ConfigError(f"key 'command' is {cfg['command']!r} but {command!r} was requested")
    out.mkdir(parents=True, exist_ok=True)
    HANDLERS[command](cfg, out, jobs)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="tflab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    ap.add_argument("--out", default=None, help="output directory (overrides the config's 'out')")
    args = ap.parse_args(argv)
    try:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        out = Path(args.out or cfg.get("out", "."))
        run(args.command, cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"tflab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisError as exc:
        print(f"tflab: hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except TflabError as exc:
        print(f"tflab: numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
