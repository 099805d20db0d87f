"""End-to-end tests of the command line front end."""

import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from shadow_wlo import cli

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run_main(args, capsys):
    code = cli.main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_empty_sphere_report(capsys):
    code, out, err = run_main(["run", str(CONFIGS / "empty_sphere_su2_k4.json")],
                              capsys)
    assert code == 0
    report = json.loads(out)
    shadow = complex(*report["results"]["shadow"]["value"])
    assert abs(shadow - 4) <= 1e-12
    ratio = complex(*report["results"]["compare"]["wlo_ratio"])
    assert abs(ratio - 1) <= 1e-9
    assert report["results"]["compare"]["pass"] is True
    assert "wall clock" in err


def test_unknot_compare_passes(capsys):
    code, out, _ = run_main(["run", str(CONFIGS / "unknot_su2_k4.json")],
                            capsys)
    assert code == 0
    report = json.loads(out)
    assert report["results"]["compare"]["rel_difference"] < 1e-9
    assert report["results"]["wlo"]["terms_total"] > 0


def test_config_flag_equals_positional(capsys):
    cfg = str(CONFIGS / "empty_sphere_su2_k4.json")
    _, out_pos, _ = run_main(["run", cfg], capsys)
    _, out_flag, _ = run_main(["--config", cfg], capsys)
    assert out_pos == out_flag


def test_report_bytes_independent_of_threads(tmp_path, capsys):
    cfg = str(CONFIGS / "nested_pair_su3_k6.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_main(["run", cfg, "--out", str(a)], capsys)[0] == 0
    assert run_main(["run", cfg, "--out", str(b), "--threads", "3"],
                    capsys)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_seed_env_read_and_ignored(tmp_path, capsys, monkeypatch):
    cfg = str(CONFIGS / "unknot_su2_k4.json")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    monkeypatch.delenv("SHADOW_WLO_SEED", raising=False)
    run_main(["run", cfg, "--out", str(a)], capsys)
    monkeypatch.setenv("SHADOW_WLO_SEED", "12345")
    _, _, err = run_main(["run", cfg, "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()
    assert "ignored" in err


def test_out_file_keeps_stdout_clean(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run_main(["run", str(CONFIGS / "unknot_su2_k4.json"),
                                "--out", str(out)], capsys)
    assert code == 0
    assert stdout == ""
    json.loads(out.read_text())


def test_embedded_mode_config(capsys):
    code, out, _ = run_main(
        ["run", str(CONFIGS / "torus_unknot_su2_k5_embedded.json")], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["config"]["mode"] == "embedded"
    assert report["results"]["compare"]["pass"] is True


def test_malformed_color_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({
        "group": "su2", "level": 4,
        "ribbons": [{"color": [-1], "winding": 1}],
    }))
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "ribbons[0].color[0]" in err


def test_wrong_color_length_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({
        "group": "su3", "level": 4,
        "ribbons": [{"color": [1], "winding": 0}],
    }))
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "ribbons[0].color" in err


def test_parent_cycle_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({
        "group": "su2", "level": 4,
        "ribbons": [{"color": [1], "winding": 1, "parent": 2},
                    {"color": [1], "winding": 1, "parent": 1}],
    }))
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "parent" in err


def test_unknown_group_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"group": "e8", "level": 4}))
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "group" in err


def test_unknown_output_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"group": "su2", "level": 4,
                               "outputs": ["plot"]}))
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "outputs[0]" in err


def test_invalid_json_reports_position(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{"group": "su2",\n  "level": }\n')
    code, _, err = run_main(["run", str(cfg)], capsys)
    assert code == 2
    assert "line 2" in err


def test_missing_config_exits_2(capsys):
    code, _, err = run_main([], capsys)
    assert code == 2
    assert "config" in err


def test_below_coxeter_warns_with_zero_results(tmp_path, capsys):
    cfg = tmp_path / "low.json"
    cfg.write_text(json.dumps({
        "group": "su3", "level": 2,
        "outputs": ["wlo", "shadow", "compare"],
    }))
    code, out, _ = run_main(["run", str(cfg)], capsys)
    assert code == 0
    report = json.loads(out)
    assert report["results"]["wlo"]["value"] == [0.0, 0.0]
    assert report["results"]["wlo"]["flag"] == "empty label set"
    assert report["results"]["shadow"]["value"] == [0.0, 0.0]
    assert report["results"]["compare"]["pass"] is None
    fields = {w["field"] for w in report["warnings"]}
    assert fields == {"level"}


def test_tight_tolerance_fails_comparison(capsys):
    code, out, _ = run_main(["run", str(CONFIGS / "nested_pair_su3_k6.json"),
                             "--tolerance", "0"], capsys)
    assert code == 1
    report = json.loads(out)
    assert report["results"]["compare"]["pass"] is False


def test_selfcheck_standalone(capsys):
    code, out, _ = run_main(["--selfcheck"], capsys)
    assert code == 0
    table = json.loads(out)["results"]["selfcheck"]
    assert all(row["pass"] for row in table.values())
    # the battery covers every module family
    assert {"oscillatory_closed_forms", "twisted_determinants",
            "fusion_ring", "euler_characteristics", "hodge_symmetry",
            "step6_identities", "empty_label_paths"} <= set(table)


def test_selfcheck_config_output(capsys):
    code, out, _ = run_main(["run", str(CONFIGS / "selfcheck.json")], capsys)
    assert code == 0
    assert "selfcheck" in json.loads(out)["results"]


def test_selfcheck_added_to_run(capsys):
    code, out, _ = run_main(["run", str(CONFIGS / "empty_sphere_su2_k4.json"),
                             "--selfcheck"], capsys)
    assert code == 0
    results = json.loads(out)["results"]
    assert "compare" in results and "selfcheck" in results


def test_hodge_mutation_hook_fails_symmetry_suite():
    table = cli.selfcheck(mutate_hodge=True)
    assert table["hodge_symmetry"]["pass"] is False
    assert all(row["pass"] for name, row in table.items()
               if name != "hodge_symmetry")


def test_console_script_installed(tmp_path):
    exe = shutil.which("shadow-wlo")
    assert exe, "console script not on PATH"
    proc = subprocess.run(
        [exe, "run", str(CONFIGS / "empty_sphere_su2_k4.json")],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    report = json.loads(proc.stdout)
    assert abs(complex(*report["results"]["shadow"]["value"]) - 4) <= 1e-12


def test_complex_values_are_pairs(capsys):
    _, out, _ = run_main(["run", str(CONFIGS / "nested_pair_su3_k6.json")],
                         capsys)
    report = json.loads(out)
    for key in ("wlo", "shadow"):
        val = report["results"][key]["value"]
        assert isinstance(val, list) and len(val) == 2
        assert all(isinstance(x, float) for x in val)
