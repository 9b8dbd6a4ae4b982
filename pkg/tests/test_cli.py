"""Command-line driver: config validation, verbs, artifacts, determinism."""

import json
import pathlib

import numpy as np
import pytest

from catenet import cli


LINES = [[3.141592653589793, 0.0], [-2.741592653589793, -0.4]]


def single_config(**extra):
    cfg = {"network": {"lines": [list(p) for p in LINES],
                       "segments": [[0, 1]]},
           "h": 0.25}
    cfg.update(extra)
    return cfg


def comb_config(**extra):
    cfg = {"network": {"generator": "comb_network",
                       "args": {"teeth": 2, "eta": 0.8, "spacing": 6.0}},
           "h": 0.25}
    cfg.update(extra)
    return cfg


def write_config(directory, cfg, name="job.json"):
    path = pathlib.Path(directory) / name
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return str(path)


def read_report(out_dir):
    return json.loads((pathlib.Path(out_dir) / "report.json")
                      .read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# config validation


def test_defaults_fill_in():
    cfg = cli.normalize_config({"network": {"lines": LINES,
                                            "segments": [[0, 1]]}})
    assert cfg["h"] == 0.15
    assert cfg["r_max"] is None
    assert cfg["kappa"] == -0.5
    assert cfg["max_iter"] == 50
    assert cfg["checks"] is None
    assert cfg["decay_window"] == [5.0, 10.0]


def test_unknown_top_level_key_is_cited():
    with pytest.raises(cli.ConfigError, match="mesh_h"):
        cli.normalize_config(single_config(mesh_h=0.2))


def test_network_is_required():
    with pytest.raises(cli.ConfigError, match="network: required"):
        cli.normalize_config({"h": 0.2})


def test_generator_args_are_checked_by_name():
    with pytest.raises(cli.ConfigError, match=r"network\.args\.n_teeth"):
        cli.normalize_config({"network": {
            "generator": "comb_network",
            "args": {"n_teeth": 2, "eta": 0.8, "spacing": 6.0}}})
    with pytest.raises(cli.ConfigError, match=r"network\.args\.spacing"):
        cli.normalize_config({"network": {
            "generator": "comb_network",
            "args": {"teeth": 2, "eta": 0.8}}})
    with pytest.raises(cli.ConfigError, match=r"network\.generator"):
        cli.normalize_config({"network": {"generator": "pentagrid",
                                          "args": {}}})


def test_explicit_lines_are_checked():
    with pytest.raises(cli.ConfigError, match=r"segments\[0\].*itself"):
        cli.normalize_config({"network": {"lines": LINES,
                                          "segments": [[1, 1]]}})
    with pytest.raises(cli.ConfigError, match=r"segments\[0\].*out of range"):
        cli.normalize_config({"network": {"lines": LINES,
                                          "segments": [[0, 5]]}})
    with pytest.raises(cli.ConfigError, match=r"lines\[1\]"):
        cli.normalize_config({"network": {"lines": [[0.0, 1.0], [2.0]],
                                          "segments": [[0, 1]]}})


def test_numeric_ranges_are_enforced():
    with pytest.raises(cli.ConfigError, match="h: must be greater than 0"):
        cli.normalize_config(single_config(h=0.0))
    with pytest.raises(cli.ConfigError, match="kappa"):
        cli.normalize_config(single_config(kappa=-1.5))
    with pytest.raises(cli.ConfigError, match="max_iter.*integer"):
        cli.normalize_config(single_config(max_iter=2.5))
    with pytest.raises(cli.ConfigError, match="amplitude"):
        cli.normalize_config(single_config(amplitude=1.0))
    with pytest.raises(cli.ConfigError, match="expected a number"):
        cli.normalize_config(single_config(tol=True))


def test_check_names_are_vetted():
    with pytest.raises(cli.ConfigError, match=r"checks\[1\].*holonomy"):
        cli.normalize_config(single_config(checks=["topology", "holonomy"]))
    cfg = cli.normalize_config(single_config(
        checks=["flux", "flux", "topology"]))
    assert cfg["checks"] == ["flux", "topology"]


def test_decay_window_must_be_ordered():
    with pytest.raises(cli.ConfigError, match="decay_window"):
        cli.normalize_config(single_config(decay_window=[5.0]))
    with pytest.raises(cli.ConfigError, match=r"decay_window\[1\]"):
        cli.normalize_config(single_config(decay_window=[5.0, 5.0]))


def test_json_errors_cite_line_and_column(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"network": {},}', encoding="utf-8")
    with pytest.raises(cli.ConfigError, match="line 1, column 16"):
        cli.load_config(str(path))


def test_merge_overrides_is_deep():
    base = comb_config()
    merged = cli.merge_overrides(base, {"network": {"args": {"spacing": 9.0}},
                                        "h": 0.2})
    assert merged["h"] == 0.2
    assert merged["network"]["args"]["spacing"] == 9.0
    assert merged["network"]["args"]["teeth"] == 2
    assert base["network"]["args"]["spacing"] == 6.0


def test_requested_checks_follow_the_verb():
    cfg = cli.normalize_config(single_config())
    assert cli.requested_checks(cfg, "validate") == []
    assert cli.requested_checks(cfg, "build") == list(cli._DEFAULT_CHECKS)
    assert "spectrum" in cli.requested_checks(cfg, "spectrum")
    assert "flux" in cli.requested_checks(cfg, "flux")
    explicit = cli.normalize_config(single_config(checks=["topology"]))
    assert cli.requested_checks(explicit, "flux") == ["topology", "flux"]


def test_plain_strips_non_finite_values():
    out = cli._plain({"a": np.float64(2.5), "b": float("inf"),
                      "c": [np.int64(3), float("nan")]})
    assert out == {"a": 2.5, "b": None, "c": [3, None]}


# ---------------------------------------------------------------------------
# pipeline verbs


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    return tmp_path_factory.mktemp("cli")


@pytest.fixture(scope="module")
def built(workdir):
    cfg = write_config(workdir, single_config())
    out = str(workdir / "build_out")
    code = cli.main(["build", "--config", cfg, "--out", out])
    return code, out


def test_validate_accepts_a_good_config(workdir):
    cfg = write_config(workdir, single_config(), "va.json")
    out = str(workdir / "va_out")
    assert cli.main(["validate", "--config", cfg, "--out", out]) == 0
    report = read_report(out)
    assert report["network"]["valid"] is True
    assert report["network"]["n_segments"] == 1
    assert report["ok"] is True


def test_validate_reports_a_rejection(workdir):
    cfg = write_config(workdir, {"network": {
        "generator": "symmetric_ring", "args": {"j": 6, "eta": 1.9}}},
        "rej.json")
    out = str(workdir / "rej_out")
    assert cli.main(["validate", "--config", cfg, "--out", out]) == 1
    report = read_report(out)
    assert report["network"]["valid"] is False
    assert "eta" in report["network"]["reason"]
    assert report["error"]["stage"] == "network"
    assert report["ok"] is False


def test_validate_skips_deeper_checks_without_failing(workdir):
    cfg = write_config(workdir, single_config(checks=["topology",
                                                      "spectrum"]),
                       "skip.json")
    out = str(workdir / "skip_out")
    assert cli.main(["validate", "--config", cfg, "--out", out]) == 0
    report = read_report(out)
    verdicts = {k: v["verdict"] for k, v in report["checks"].items()}
    assert verdicts == {"topology": "skipped", "spectrum": "skipped"}
    assert report["ok"] is True


def test_build_passes_default_checks(built):
    code, out = built
    assert code == 0
    report = read_report(out)
    verdicts = {k: v["verdict"] for k, v in report["checks"].items()}
    assert verdicts == {"topology": "pass", "embedded": "pass",
                        "curvature": "pass"}
    assert report["mesh"]["chi"] == 0
    assert report["mesh"]["boundary_loops"] == 2


def test_build_measures_the_catenoid_total_curvature(built):
    _, out = built
    curv = read_report(out)["checks"]["curvature"]
    assert abs(curv["total_curvature"] - (-4.0 * np.pi)) \
        <= 0.1 * 4.0 * np.pi
    assert abs(curv["identity_gap"]) <= 1e-6


def test_build_artifacts_exist_and_agree(built):
    _, out = built
    report = read_report(out)
    for name in report["artifacts"]:
        assert (pathlib.Path(out) / name).exists()
    off = (pathlib.Path(out) / "mesh.off").read_text().splitlines()
    assert off[0] == "OFF"
    n_v, n_f, _ = map(int, off[1].split())
    assert n_v == report["mesh"]["n_vertices"]
    assert n_f == report["mesh"]["n_triangles"]
    x, y, t = map(float, off[2].split())
    assert np.hypot(x, y) < 1.0
    face = off[2 + n_v].split()
    assert face[0] == "3"
    assert all(0 <= int(i) < n_v for i in face[1:])
    timings = (pathlib.Path(out) / "timings.tsv").read_text().splitlines()
    assert timings[0] == "stage\tseconds"
    assert any(row.startswith("assemble\t") for row in timings)


def test_reports_are_deterministic(built, workdir):
    _, out = built
    cfg = write_config(workdir, single_config(), "det.json")
    out2 = str(workdir / "det_out")
    assert cli.main(["build", "--config", cfg, "--out", out2]) == 0
    first = (pathlib.Path(out) / "report.json").read_bytes()
    second = (pathlib.Path(out2) / "report.json").read_bytes()
    assert first == second
    assert (pathlib.Path(out) / "mesh.off").read_bytes() \
        == (pathlib.Path(out2) / "mesh.off").read_bytes()


def test_timings_stay_out_of_the_report(built):
    _, out = built
    text = (pathlib.Path(out) / "report.json").read_text()
    assert "seconds" not in text
    assert "timing" not in text


def test_resolution_flag_overrides_h(workdir):
    cfg = write_config(workdir, single_config(), "res.json")
    out = str(workdir / "res_out")
    assert cli.main(["validate", "--config", cfg, "--out", out,
                     "--resolution", "0.35"]) == 0
    assert read_report(out)["config"]["h"] == 0.35


def test_flux_verb_tabulates_killing_fluxes(workdir):
    cfg = write_config(workdir, single_config(), "flux.json")
    out = str(workdir / "flux_out")
    assert cli.main(["flux", "--config", cfg, "--out", out]) == 0
    report = read_report(out)
    flux = report["checks"]["flux"]
    assert flux["verdict"] == "pass"
    assert flux["axial_flux"] > 0.1
    assert flux["max_null_flux"] <= 1e-6 * flux["necksize"]
    rows = (pathlib.Path(out) / "flux.tsv").read_text().splitlines()
    assert rows[0] == "field\tflux"
    names = {row.split("\t")[0] for row in rows[1:]}
    assert names == {"vertical", "rotation", "axis_translation",
                     "cross_translation"}


def test_spectrum_verb_solves_then_reports(workdir):
    cfg = write_config(workdir, single_config(spectrum_modes=4), "spec.json")
    out = str(workdir / "spec_out")
    assert cli.main(["spectrum", "--config", cfg, "--out", out]) == 0
    report = read_report(out)
    assert report["solver"]["converged"] is True
    spec = report["checks"]["spectrum"]
    assert spec["verdict"] == "pass"
    assert spec["min_abs_even_eigenvalue"] > 1e-2
    rows = (pathlib.Path(out) / "spectrum.tsv").read_text().splitlines()
    assert rows[0] == "index\teigenvalue"
    assert len(rows) == 1 + 4


def test_decay_check_demands_room(workdir):
    cfg = write_config(workdir, single_config(checks=["decay"]),
                       "decay.json")
    out = str(workdir / "decay_out")
    assert cli.main(["build", "--config", cfg, "--out", out]) == 1
    decay = read_report(out)["checks"]["decay"]
    assert decay["verdict"] == "fail"
    assert "r_max" in decay["note"]


def test_config_errors_exit_2(workdir):
    bad_key = write_config(workdir, single_config(mesh_h=0.2), "bad1.json")
    assert cli.main(["validate", "--config", bad_key,
                     "--out", str(workdir / "e1")]) == 2
    syntax = pathlib.Path(workdir) / "bad2.json"
    syntax.write_text('{"network": ', encoding="utf-8")
    assert cli.main(["validate", "--config", str(syntax),
                     "--out", str(workdir / "e2")]) == 2
    assert cli.main(["validate", "--config", str(workdir / "nosuch.json"),
                     "--out", str(workdir / "e3")]) == 2


def test_usage_errors_exit_2():
    assert cli.main([]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_sweep_records_row_failures_and_continues(workdir):
    cfg = write_config(workdir, comb_config(
        checks=["topology", "embedded"],
        sweep={"rows": [
            {"network": {"args": {"spacing": 6.0}}},
            {"network": {"args": {"spacing": 7.0}}},
            {"network": {"args": {"eta": 1.9}}},
        ]}), "sweep.json")
    out = str(workdir / "sweep_out")
    assert cli.main(["sweep", "--config", cfg, "--out", out]) == 1
    report = read_report(out)
    assert [row["ok"] for row in report["rows"]] == [True, True, False]
    assert report["rows"][2]["error"]["stage"] == "network"
    assert report["ok"] is False
    fit = report["aggregates"]["norm_decay"]
    assert fit["n_points"] == 2
    assert fit["raw_slope"] < 0.0
    assert report["aggregates"]["curvature_decay"]["slope"] < -0.3
    for i in range(3):
        assert (pathlib.Path(out) / ("row_%03d" % i) / "report.json").exists()


def test_sweep_requires_rows(workdir):
    cfg = write_config(workdir, comb_config(), "nosweep.json")
    assert cli.main(["sweep", "--config", cfg,
                     "--out", str(workdir / "ns")]) == 2


def test_report_verb_reprints_a_stored_report(built, capsys):
    _, out = built
    assert cli.main(["report", "--out", out]) == 0
    shown = capsys.readouterr().out
    assert "check topology: pass" in shown
    assert "status: ok" in shown
    assert cli.main(["report", "--out", out + "_missing"]) == 1
