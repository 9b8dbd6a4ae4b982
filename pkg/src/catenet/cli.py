"""Command-line driver for building and checking glued minimal surfaces.

A run is described by a JSON config naming a geodesic network and the
discretization parameters.  Verbs select how deep the pipeline goes:

* ``validate``: parse the config and test network admissibility.
* ``build``: assemble the approximate surface and export it.
* ``solve``: contract the assembly to a discrete minimal surface.
* ``spectrum``: solve, then report the lowest stability eigenvalues.
* ``flux``: build, then tabulate Killing fluxes through the model neck.
* ``sweep``: run a list of config overrides and fit decay aggregates.
* ``report``: pretty-print a previously written report.

Every run writes ``report.json`` (deterministic for a fixed config) plus
tab-separated tables and OFF meshes into the output directory; wall-clock
stage timings go to a separate ``timings.tsv`` so that reports stay
byte-identical across repeated runs.
"""

import argparse
import json
import pathlib
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import catenoid as ct
from . import geometry as geo
from . import gluing as gl
from . import mesh as ms
from . import model as md
from . import network as nw
from . import solver as sv


class ConfigError(ValueError):
    """Configuration rejected; the message cites the offending key."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage, cause):
        super().__init__("stage %s: %s" % (stage, cause))
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------------------
# configuration


_GENERATORS = {
    "symmetric_ring": ("j", "eta"),
    "comb_network": ("teeth", "eta", "spacing"),
}

CHECKS = ("topology", "embedded", "curvature", "spectrum", "flux", "decay")

_DEFAULTS = {
    "h": 0.15,
    "r_max": None,
    "amplitude": 0.3,
    "collar_scale": None,
    "kappa": -0.5,
    "tol": 1e-3,
    "max_iter": 50,
    "seed": 0,
    "checks": None,
    "out": None,
    "decay_window": [5.0, 10.0],
    "spectrum_modes": 6,
}


def load_config(path):
    """Read and parse a JSON config file; parse errors cite line/column."""
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON (line %d, column %d): %s"
                          % (exc.lineno, exc.colno, exc.msg))
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return raw


def _expect_number(path, value, lo=None, hi=None, integer=False,
                   lo_open=False, hi_open=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("%s: expected %s, got %r"
                          % (path, "an integer" if integer else "a number",
                             value))
    if integer and not isinstance(value, int):
        raise ConfigError("%s: expected an integer, got %r" % (path, value))
    out = int(value) if integer else float(value)
    if lo is not None and (out < lo or (lo_open and out <= lo)):
        word = "greater than" if lo_open else "at least"
        raise ConfigError("%s: must be %s %g" % (path, word, lo))
    if hi is not None and (out > hi or (hi_open and out >= hi)):
        word = "less than" if hi_open else "at most"
        raise ConfigError("%s: must be %s %g" % (path, word, hi))
    return out


def _check_network(spec):
    if not isinstance(spec, dict):
        raise ConfigError("network: must be an object")
    if "generator" in spec:
        extra = sorted(set(spec) - {"generator", "args"})
        if extra:
            raise ConfigError("network.%s: unknown key" % extra[0])
        name = spec["generator"]
        if name not in _GENERATORS:
            raise ConfigError(
                "network.generator: unknown generator %r (choose from %s)"
                % (name, ", ".join(sorted(_GENERATORS))))
        args = spec.get("args", {})
        if not isinstance(args, dict):
            raise ConfigError("network.args: must be an object")
        names = _GENERATORS[name]
        for key in sorted(args):
            if key not in names:
                raise ConfigError("network.args.%s: unknown argument for %s"
                                  % (key, name))
        for key in names:
            if key not in args:
                raise ConfigError("network.args.%s: required by %s"
                                  % (key, name))
        out = {}
        for key in names:
            if key in ("j", "teeth"):
                out[key] = _expect_number("network.args.%s" % key, args[key],
                                          lo=1, integer=True)
            else:
                out[key] = _expect_number("network.args.%s" % key, args[key],
                                          lo=0.0, lo_open=True)
        return {"generator": name, "args": out}
    if "lines" in spec:
        extra = sorted(set(spec) - {"lines", "segments"})
        if extra:
            raise ConfigError("network.%s: unknown key" % extra[0])
        lines = spec["lines"]
        if not isinstance(lines, list) or len(lines) < 2:
            raise ConfigError("network.lines: need a list of at least two "
                              "[a, b] boundary-angle pairs")
        clean_lines = []
        for i, pair in enumerate(lines):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("network.lines[%d]: expected [a, b]" % i)
            a = _expect_number("network.lines[%d][0]" % i, pair[0])
            b = _expect_number("network.lines[%d][1]" % i, pair[1])
            clean_lines.append([a, b])
        segs = spec.get("segments")
        if not isinstance(segs, list) or not segs:
            raise ConfigError("network.segments: need a non-empty list of "
                              "[i, j] line-index pairs")
        clean_segs = []
        for k, pair in enumerate(segs):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError("network.segments[%d]: expected [i, j]" % k)
            i = _expect_number("network.segments[%d][0]" % k, pair[0],
                               integer=True)
            j = _expect_number("network.segments[%d][1]" % k, pair[1],
                               integer=True)
            if i == j:
                raise ConfigError("network.segments[%d]: connects line %d "
                                  "to itself" % (k, i))
            for idx in (i, j):
                if not 0 <= idx < len(clean_lines):
                    raise ConfigError("network.segments[%d]: line index %d "
                                      "out of range" % (k, idx))
            clean_segs.append([i, j])
        return {"lines": clean_lines, "segments": clean_segs}
    raise ConfigError("network: needs either a generator or explicit lines")


def _check_sweep(spec):
    if not isinstance(spec, dict):
        raise ConfigError("sweep: must be an object")
    extra = sorted(set(spec) - {"rows"})
    if extra:
        raise ConfigError("sweep.%s: unknown key" % extra[0])
    rows = spec.get("rows")
    if not isinstance(rows, list) or not rows:
        raise ConfigError("sweep.rows: need a non-empty list of override "
                          "objects")
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise ConfigError("sweep.rows[%d]: must be an object" % i)
    return {"rows": [dict(row) for row in rows]}


def normalize_config(raw):
    """Validate a parsed config object and fill in defaults.

    Unknown keys, missing required keys, and out-of-range values raise
    ConfigError with the offending key path in the message.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    known = set(_DEFAULTS) | {"network"}
    for key in sorted(raw):
        if key not in known:
            raise ConfigError("unknown key %r (known keys: %s)"
                              % (key, ", ".join(sorted(known))))
    if "network" not in raw:
        raise ConfigError("network: required")
    cfg = dict(_DEFAULTS)
    cfg["network"] = _check_network(raw["network"])
    if "h" in raw:
        cfg["h"] = _expect_number("h", raw["h"], lo=0.0, lo_open=True)
    if "r_max" in raw and raw["r_max"] is not None:
        cfg["r_max"] = _expect_number("r_max", raw["r_max"], lo=0.0,
                                      lo_open=True)
    if "amplitude" in raw:
        cfg["amplitude"] = _expect_number("amplitude", raw["amplitude"],
                                          lo=0.0, hi=1.0, lo_open=True,
                                          hi_open=True)
    if "collar_scale" in raw and raw["collar_scale"] is not None:
        cfg["collar_scale"] = _expect_number("collar_scale",
                                             raw["collar_scale"], lo=0.0,
                                             hi=1.0, lo_open=True)
    if "kappa" in raw:
        cfg["kappa"] = _expect_number("kappa", raw["kappa"], lo=-1.0, hi=0.0,
                                      lo_open=True, hi_open=True)
    if "tol" in raw:
        cfg["tol"] = _expect_number("tol", raw["tol"], lo=0.0, lo_open=True)
    if "max_iter" in raw:
        cfg["max_iter"] = _expect_number("max_iter", raw["max_iter"], lo=1,
                                         integer=True)
    if "seed" in raw:
        cfg["seed"] = _expect_number("seed", raw["seed"], integer=True)
    if "spectrum_modes" in raw:
        cfg["spectrum_modes"] = _expect_number("spectrum_modes",
                                               raw["spectrum_modes"], lo=1,
                                               hi=64, integer=True)
    if "decay_window" in raw:
        win = raw["decay_window"]
        if not isinstance(win, list) or len(win) != 2:
            raise ConfigError("decay_window: expected [r_lo, r_hi]")
        lo = _expect_number("decay_window[0]", win[0], lo=0.0, lo_open=True)
        hi = _expect_number("decay_window[1]", win[1], lo=lo, lo_open=True)
        cfg["decay_window"] = [lo, hi]
    if "checks" in raw and raw["checks"] is not None:
        checks = raw["checks"]
        if not isinstance(checks, list):
            raise ConfigError("checks: must be a list of check names")
        clean = []
        for i, name in enumerate(checks):
            if name not in CHECKS:
                raise ConfigError("checks[%d]: unknown check %r (choose "
                                  "from %s)" % (i, name, ", ".join(CHECKS)))
            if name not in clean:
                clean.append(name)
        cfg["checks"] = clean
    if "out" in raw and raw["out"] is not None:
        if not isinstance(raw["out"], str):
            raise ConfigError("out: must be a string path")
        cfg["out"] = raw["out"]
    return cfg


def build_network(spec):
    """Instantiate the geodesic network described by a normalized spec."""
    if "generator" in spec:
        maker = getattr(nw, spec["generator"])
        return maker(**spec["args"])
    lines = tuple(geo.Geodesic.from_angles(a, b) for a, b in spec["lines"])
    segments = tuple((i, j) for i, j in spec["segments"])
    return nw.GeodesicNetwork(lines, segments)


def merge_overrides(base, override):
    """Deep-merge an override object into a base config object."""
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge_overrides(out[key], value)
        else:
            out[key] = value
    return out


# ---------------------------------------------------------------------------
# artifacts


def _plain(obj):
    """Convert numpy scalars and containers to strict-JSON values.

    Non-finite floats become null; strict JSON has no Infinity/NaN tokens.
    """
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        out = float(obj)
        return out if np.isfinite(out) else None
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(out_dir, report):
    path = pathlib.Path(out_dir) / "report.json"
    text = json.dumps(_plain(report), sort_keys=True, indent=2,
                      allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_timings(out_dir, timings):
    lines = ["stage\tseconds"]
    for stage, seconds in timings:
        lines.append("%s\t%.3f" % (stage, seconds))
    path = pathlib.Path(out_dir) / "timings.tsv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_off(path, M):
    """Write a mesh in OFF format with (x, y, t) disk-chart coordinates."""
    lines = ["OFF", "%d %d 0" % (M.n_vertices, len(M.triangles))]
    for z, t in zip(M.z, M.t):
        lines.append("%s %s %s"
                     % (repr(float(z.real)), repr(float(z.imag)),
                        repr(float(t))))
    for a, b, c in M.triangles:
        lines.append("3 %d %d %d" % (a, b, c))
    pathlib.Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_table(out_dir, name, text):
    path = pathlib.Path(out_dir) / name
    path.write_text(text + "\n", encoding="utf-8")
    return name


# ---------------------------------------------------------------------------
# pipeline


_DEPTH = {"validate": 1, "build": 2, "solve": 3, "spectrum": 3, "flux": 2,
          "sweep": 3}
_CHECK_DEPTH = {"topology": 2, "embedded": 2, "curvature": 2, "flux": 2,
                "decay": 2, "spectrum": 3}
_VERB_EXTRA_CHECK = {"spectrum": "spectrum", "flux": "flux"}
_DEFAULT_CHECKS = ("topology", "embedded", "curvature")


def requested_checks(cfg, verb):
    if cfg["checks"] is None:
        names = [] if verb == "validate" else list(_DEFAULT_CHECKS)
    else:
        names = list(cfg["checks"])
    extra = _VERB_EXTRA_CHECK.get(verb)
    if extra and extra not in names:
        names.append(extra)
    return names


def _network_summary(net, metrics):
    return {
        "valid": True,
        "n_lines": net.n_lines,
        "n_segments": len(net.segments),
        "eta": float(metrics.eta),
        "D": float(metrics.D),
        "separations": sorted(float(v) for v in
                              metrics.separations.values()),
        "deformation_dimension": nw.deformation_dimension(net),
    }


def _library_for(M):
    lib = gl._default_library(M.build_h, M.build_r_max, M.build_amplitude)
    return lib


def _deepest_mesh(ctx):
    return ctx.get("solved") or ctx["mesh"]


def _check_topology(ctx, cfg, out_dir):
    net = ctx["net"]
    topo = ms.mesh_topology(ctx["mesh"])
    expected = net.n_lines - 2 * len(net.segments)
    verdict = "pass" if topo["chi"] == expected else "fail"
    return {"verdict": verdict, "chi": topo["chi"],
            "expected_chi": expected,
            "boundary_loops": topo["boundary_loops"],
            "genus": topo["genus"]}


def _check_embedded(ctx, cfg, out_dir):
    M = _deepest_mesh(ctx)
    pairs = sv.find_intersections(M)
    verdict = "pass" if not pairs else "fail"
    return {"verdict": verdict, "intersecting_pairs": len(pairs)}


def _check_curvature(ctx, cfg, out_dir):
    M = _deepest_mesh(ctx)
    gb = ms.gauss_bonnet_report(M)
    ok = abs(gb["identity_gap"]) <= 1e-6
    out = {"identity_gap": gb["identity_gap"],
           "total_curvature": gb["interior_defect"],
           "boundary_turning": gb["boundary_turning"],
           "euler_characteristic": gb["euler_characteristic"]}
    if len(ctx["net"].segments) == 1:
        ratio = gb["interior_defect"] / (-4.0 * np.pi)
        out["catenoid_ratio"] = ratio
        ok = ok and abs(ratio - 1.0) <= 0.1
    out["verdict"] = "pass" if ok else "fail"
    return out


def _check_spectrum(ctx, cfg, out_dir):
    M = ctx["solved"]
    gap, ok = sv.nondegeneracy_check(M)
    vals, _ = sv.lowest_eigenpairs(sv.assemble_jacobi(M),
                                   k=cfg["spectrum_modes"])
    lines = ["index\teigenvalue"]
    for i, lam in enumerate(vals):
        lines.append("%d\t%.8e" % (i, lam))
    table = _write_table(out_dir, "spectrum.tsv", "\n".join(lines))
    return {"verdict": "pass" if ok else "fail",
            "min_abs_even_eigenvalue": float(gap),
            "negative_modes": int(np.sum(vals < 0.0)),
            "lowest_eigenvalue": float(vals[0]),
            "table": table}


def _check_flux(ctx, cfg, out_dir):
    M = ctx["mesh"]
    bridge = _library_for(M).get(ctx["metrics"].eta)
    loop = ct.neck_loop(bridge)
    size = ct.necksize(bridge)
    fields = ct.standard_killing_fields()
    fluxes = {name: ct.flux(bridge, loop, X)
              for name, X in sorted(fields.items())}
    lines = ["field\tflux"]
    for name in sorted(fluxes):
        lines.append("%s\t%.8e" % (name, fluxes[name]))
    table = _write_table(out_dir, "flux.tsv", "\n".join(lines))
    null_max = max(abs(fluxes[k]) for k in
                   ("vertical", "rotation", "cross_translation"))
    axial = abs(fluxes["axis_translation"])
    ok = null_max <= 1e-6 * size and 0.8 * size <= axial <= 1.2 * size
    return {"verdict": "pass" if ok else "fail",
            "necksize": float(size),
            "axial_flux": float(axial),
            "max_null_flux": float(null_max),
            "table": table}


def _check_decay(ctx, cfg, out_dir):
    M = ctx["mesh"]
    lo, hi = cfg["decay_window"]
    if M.build_r_max < hi + 1.0:
        return {"verdict": "fail",
                "note": "truncation radius %.2f leaves no room for the "
                        "fit window [%g, %g]; set r_max to at least %.2f"
                        % (M.build_r_max, lo, hi, hi + 1.0)}
    bridge = _library_for(M).get(ctx["metrics"].eta)
    eta = float(ctx["metrics"].eta)
    lines = ["side\trate\tamplitude\tresidual_rate"]
    sides = {}
    ok = True
    for side in (1, -1):
        prof = ct.end_profile(bridge, eta, side=side, grid_h=0.05)
        rate, far, resid = md.decay_fit(prof, (lo, hi))
        amp = float(np.max(np.abs(far.amplitude)))
        lines.append("%+d\t%.6f\t%.6e\t%.4f" % (side, rate, amp, resid))
        sides["%+d" % side] = {"rate": float(rate), "amplitude": amp,
                               "residual_rate": float(resid)}
        ok = ok and abs(rate + 1.0) <= 0.15 and amp > 0.0 and resid <= -0.5
    table = _write_table(out_dir, "decay.tsv", "\n".join(lines))
    out = {"verdict": "pass" if ok else "fail", "table": table}
    out.update(sides)
    return out


_CHECK_FNS = {
    "topology": _check_topology,
    "embedded": _check_embedded,
    "curvature": _check_curvature,
    "spectrum": _check_spectrum,
    "flux": _check_flux,
    "decay": _check_decay,
}


def run_job(cfg, verb, out_dir):
    """Run one pipeline job and write its artifacts.

    Returns (report, exit_code).  Stage failures are recorded in the
    report under "error" and yield exit code 1; they do not raise.
    """
    out_path = pathlib.Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    depth = _DEPTH[verb]
    names = requested_checks(cfg, verb)
    report = {"verb": verb, "config": cfg, "checks": {}, "artifacts": [],
              "ok": False}
    timings = []
    ctx = {}
    error = None

    def run_stage(stage, fn):
        start = time.perf_counter()
        try:
            return fn()
        except Exception as exc:
            raise StageError(stage, exc) from exc
        finally:
            timings.append((stage, time.perf_counter() - start))

    def stage_network():
        try:
            net = build_network(cfg["network"])
            metrics = nw.validate(net)
        except ValueError as exc:
            report["network"] = {"valid": False, "reason": str(exc)}
            raise
        ctx["net"] = net
        ctx["metrics"] = metrics
        report["network"] = _network_summary(net, metrics)

    def stage_assemble():
        strips = gl.decompose(ctx["metrics"],
                              collar_scale=cfg["collar_scale"])
        M = gl.assemble(strips, h=cfg["h"], r_max=cfg["r_max"],
                        amplitude=cfg["amplitude"])
        M.require_quality()
        ctx["strips"] = strips
        ctx["mesh"] = M
        topo = ms.mesh_topology(M)
        report["mesh"] = {
            "n_vertices": M.n_vertices,
            "n_triangles": int(len(M.triangles)),
            "chi": topo["chi"],
            "boundary_loops": topo["boundary_loops"],
            "genus": topo["genus"],
            "h": float(M.build_h),
            "r_max": float(M.build_r_max),
            "amplitude": float(M.build_amplitude),
        }
        write_off(out_path / "mesh.off", M)
        report["artifacts"].append("mesh.off")
        quality = gl.mean_curvature_report(M)
        report["assembly"] = {
            "slope": float(quality.slope),
            "inside_sup": float(quality.inside_sup),
            "outside_sup": float(quality.outside_sup),
            "rows": [list(row) for row in quality.rows],
        }
        report["artifacts"].append(
            _write_table(out_dir, "curvature_report.tsv", quality.table()))

    def stage_solve():
        u, solved, state = sv.contraction_solve(
            ctx["mesh"], kappa=cfg["kappa"], tol=cfg["tol"],
            max_iter=cfg["max_iter"])
        ctx["u"] = u
        ctx["solved"] = solved
        ctx["state"] = state
        report["solver"] = {
            "converged": bool(state.converged),
            "iterations": int(state.iterations),
            "residual": float(state.residual_history[-1]),
            "norm": float(state.norm_history[-1]),
            "newton_from": int(state.newton_from),
        }
        write_off(out_path / "solved.off", solved)
        report["artifacts"].append("solved.off")
        report["artifacts"].append(
            _write_table(out_dir, "history.tsv", state.rows()))

    try:
        run_stage("network", stage_network)
        if depth >= 2:
            run_stage("assemble", stage_assemble)
        if depth >= 3:
            run_stage("solve", stage_solve)
    except StageError as exc:
        error = exc
        report["error"] = {"stage": exc.stage, "message": str(exc.cause)}

    for name in names:
        need = _CHECK_DEPTH[name]
        if error is not None:
            report["checks"][name] = {
                "verdict": "skipped",
                "note": "stage %s failed" % error.stage}
        elif need > depth:
            report["checks"][name] = {
                "verdict": "skipped",
                "note": "needs the %s verb"
                        % ("solve or spectrum" if need >= 3 else "build")}
        else:
            start = time.perf_counter()
            try:
                result = _CHECK_FNS[name](ctx, cfg, out_dir)
            except Exception as exc:
                result = {"verdict": "fail",
                          "note": "%s: %s" % (type(exc).__name__, exc)}
            timings.append(("check:%s" % name,
                            time.perf_counter() - start))
            report["checks"][name] = result
            if isinstance(result.get("table"), str):
                report["artifacts"].append(result["table"])

    ran = [c for c in report["checks"].values() if c["verdict"] != "skipped"]
    report["ok"] = error is None and all(c["verdict"] == "pass" for c in ran)
    report["artifacts"] = sorted(set(report["artifacts"]))
    report = _plain(report)
    write_report(out_dir, report)
    write_timings(out_dir, timings)
    return report, (0 if report["ok"] else 1)


# ---------------------------------------------------------------------------
# sweeps


def _sweep_worker(payload):
    """Run one sweep row in isolation.

    The process-level bridge cache is cleared first so a row's result
    never depends on sibling rows or on how rows land on workers; the
    library lookup tolerance would otherwise let one row reuse a bridge
    built for a neighboring row's slightly different separation.
    """
    cfg, out_dir = payload
    gl._DEFAULT_LIBRARIES.clear()
    try:
        return run_job(cfg, "sweep", out_dir)
    except Exception as exc:
        report = {"verb": "sweep", "ok": False,
                  "error": {"stage": "worker", "message": str(exc)},
                  "checks": {}}
        return report, 1


def _fit_norm_decay(points):
    """Raw and length-compensated decay slopes of solution norms.

    points holds (D, norm) pairs; the compensated fit removes the 1/sqrt(D)
    prefactor before fitting the exponential rate.
    """
    pts = [(d, n) for d, n in points if n > 0.0]
    if len({round(d, 9) for d, _ in pts}) < 2:
        return None
    ds = np.array([d for d, _ in pts])
    logn = np.log([n for _, n in pts])
    raw = float(np.polyfit(ds, logn, 1)[0])
    a = np.stack([ds, np.ones_like(ds)], axis=1)
    coef, _, _, _ = np.linalg.lstsq(a, logn + 0.5 * np.log(ds), rcond=None)
    return {"raw_slope": raw, "compensated_slope": float(coef[0]),
            "n_points": len(pts)}


def _fit_pooled_curvature(rows):
    """Pooled decay slope of log(sup|H| sqrt(r)) against r."""
    pts = [(row[3], row[4]) for row in rows if row[4] > 0.0]
    if len({round(r, 9) for r, _ in pts}) < 2:
        return None
    rs = np.array([r for r, _ in pts])
    sups = np.array([s for _, s in pts])
    slope = float(np.polyfit(rs, np.log(sups * np.sqrt(rs)), 1)[0])
    return {"slope": slope, "n_points": len(pts)}


def run_sweep(raw, out_dir, workers=1):
    """Run every sweep row, then fit cross-row decay aggregates.

    Each row is an override object deep-merged into the base config and
    run at solve depth in its own row_NNN subdirectory.  Row failures are
    recorded and the sweep continues.
    """
    if "sweep" not in raw:
        raise ConfigError("sweep.rows: required for the sweep verb")
    sweep = _check_sweep(raw["sweep"])
    base = {k: v for k, v in raw.items() if k != "sweep"}
    jobs = []
    for i, row in enumerate(sweep["rows"]):
        try:
            cfg = normalize_config(merge_overrides(base, row))
        except ConfigError as exc:
            raise ConfigError("sweep.rows[%d]: %s" % (i, exc))
        jobs.append((cfg, str(pathlib.Path(out_dir) / ("row_%03d" % i))))

    out_path = pathlib.Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    else:
        results = [_sweep_worker(job) for job in jobs]

    rows_out = []
    norm_points = []
    curvature_rows = []
    for i, (job, (rep, code)) in enumerate(zip(jobs, results)):
        entry = {"dir": "row_%03d" % i, "ok": bool(rep.get("ok"))}
        if "error" in rep:
            entry["error"] = rep["error"]
        entry["checks"] = {name: result.get("verdict")
                           for name, result in rep.get("checks", {}).items()}
        net = rep.get("network", {})
        has_depth = net.get("valid") and net.get("D") is not None
        if has_depth:
            entry["D"] = net["D"]
        if "solver" in rep:
            entry["norm"] = rep["solver"]["norm"]
            entry["iterations"] = rep["solver"]["iterations"]
            if has_depth:
                norm_points.append((net["D"], rep["solver"]["norm"]))
        if "assembly" in rep:
            curvature_rows.extend(rep["assembly"]["rows"])
        rows_out.append(entry)

    aggregates = {}
    norm_fit = _fit_norm_decay(norm_points)
    if norm_fit is not None:
        aggregates["norm_decay"] = norm_fit
    curv_fit = _fit_pooled_curvature(curvature_rows)
    if curv_fit is not None:
        aggregates["curvature_decay"] = curv_fit

    report = {"verb": "sweep", "rows": rows_out, "aggregates": aggregates,
              "ok": all(entry["ok"] for entry in rows_out)}
    report = _plain(report)
    write_report(out_dir, report)
    write_timings(out_dir, [("sweep", time.perf_counter() - start)])
    return report, (0 if report["ok"] else 1)


# ---------------------------------------------------------------------------
# entry points


def _print_report(report, stream=None):
    stream = stream or sys.stdout
    if report.get("verb") == "sweep":
        for entry in report["rows"]:
            status = "ok" if entry["ok"] else "failed"
            extra = ""
            if "D" in entry and "norm" in entry:
                extra = " (D=%.3f, norm=%.3e)" % (entry["D"], entry["norm"])
            print("row %s: %s%s" % (entry["dir"], status, extra),
                  file=stream)
        for name, fit in sorted(report.get("aggregates", {}).items()):
            parts = ", ".join("%s=%.4f" % (k, v) for k, v in
                              sorted(fit.items()) if k != "n_points")
            print("aggregate %s: %s" % (name, parts), file=stream)
    else:
        net = report.get("network", {})
        if net:
            if net.get("valid"):
                d_txt = "inf" if net.get("D") is None else \
                    "%.4f" % net["D"]
                print("network: valid (lines=%d, segments=%d, eta=%.4f, "
                      "D=%s)" % (net["n_lines"], net["n_segments"],
                                 net["eta"], d_txt), file=stream)
            else:
                print("network: rejected (%s)" % net.get("reason"),
                      file=stream)
        mesh = report.get("mesh")
        if mesh:
            print("mesh: %d vertices, chi=%d, %d boundary loops, genus %d"
                  % (mesh["n_vertices"], mesh["chi"],
                     mesh["boundary_loops"], mesh["genus"]), file=stream)
        solver = report.get("solver")
        if solver:
            print("solver: %s in %d iterations (residual %.3e)"
                  % ("converged" if solver["converged"] else "stopped",
                     solver["iterations"], solver["residual"]), file=stream)
        for name, result in sorted(report.get("checks", {}).items()):
            note = result.get("note")
            suffix = " (%s)" % note if note else ""
            print("check %s: %s%s" % (name, result["verdict"], suffix),
                  file=stream)
    print("status: %s" % ("ok" if report.get("ok") else "failed"),
          file=stream)


def _resolve_out(args, cfg_out):
    if getattr(args, "out", None):
        return args.out
    if cfg_out:
        return cfg_out
    return "catenet_out"


def _apply_flag_overrides(raw, args):
    out = dict(raw)
    if getattr(args, "resolution", None) is not None:
        out["h"] = args.resolution
    if getattr(args, "seed", None) is not None:
        out["seed"] = args.seed
    return out


def _cmd_pipeline(args, verb):
    raw = _apply_flag_overrides(load_config(args.config), args)
    base = {k: v for k, v in raw.items() if k != "sweep"}
    cfg = normalize_config(base)
    out_dir = _resolve_out(args, cfg["out"])
    report, code = run_job(cfg, verb, out_dir)
    _print_report(report)
    if "error" in report:
        print("stage %s: %s" % (report["error"]["stage"],
                                report["error"]["message"]),
              file=sys.stderr)
    print("report: %s" % (pathlib.Path(out_dir) / "report.json"))
    return code


def _cmd_sweep(args):
    raw = _apply_flag_overrides(load_config(args.config), args)
    out_dir = _resolve_out(args, raw.get("out"))
    report, code = run_sweep(raw, out_dir, workers=args.workers)
    _print_report(report)
    print("report: %s" % (pathlib.Path(out_dir) / "report.json"))
    return code


def _cmd_report(args):
    path = pathlib.Path(args.out or "catenet_out") / "report.json"
    if not path.exists():
        print("error: no report at %s" % path, file=sys.stderr)
        return 1
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        print("error: unreadable report %s: %s" % (path, exc),
              file=sys.stderr)
        return 1
    _print_report(report)
    return 0 if report.get("ok") else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="catenet",
        description="Build, solve, and check glued minimal surfaces over "
                    "geodesic networks.")
    sub = parser.add_subparsers(dest="verb", required=True)

    def add(verb, helptext, config=True, workers=False):
        p = sub.add_parser(verb, help=helptext)
        if config:
            p.add_argument("--config", required=True,
                           help="path to the JSON job config")
        p.add_argument("--out", default=None,
                       help="output directory (default: config 'out' or "
                            "catenet_out)")
        if config:
            p.add_argument("--resolution", type=float, default=None,
                           help="override the mesh spacing h")
            p.add_argument("--seed", type=int, default=None,
                           help="override the config seed")
        if workers:
            p.add_argument("--workers", type=int, default=1,
                           help="number of parallel row workers")
        return p

    add("validate", "check the config and network admissibility")
    add("build", "assemble the approximate surface and export it")
    add("solve", "contract the assembly to a discrete minimal surface")
    add("spectrum", "solve, then report the lowest stability eigenvalues")
    add("flux", "build, then tabulate Killing fluxes through the neck")
    add("sweep", "run config overrides and fit decay aggregates",
        workers=True)
    add("report", "print a previously written report", config=False)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        if args.verb == "report":
            return _cmd_report(args)
        if args.verb == "sweep":
            return _cmd_sweep(args)
        return _cmd_pipeline(args, args.verb)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
