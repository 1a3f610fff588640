import json
from pathlib import Path

import pytest

from resonance_d.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return str(p)


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_resonances_square_well(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["resonances", "--config", str(CONFIGS / "square_well_second.json"),
                 "--out", str(out), "--threads", "2"])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "resonance-d/1" and doc["command"] == "resonances"
    ks = [complex(*r["k"]) for r in doc["data"]["resonances"]]
    assert len(ks) == 2
    assert min(abs(k - (-2.96418393865527 + 4.4766926048452j)) for k in ks) < 1e-9
    assert doc["metadata"]["evaluation_count"] > 0


def test_data_section_is_deterministic(tmp_path):
    paths = []
    for threads in ("1", "3"):
        out = tmp_path / f"r{threads}.json"
        assert main(["resonances", "--config", str(CONFIGS / "poschl_teller_first.json"),
                     "--out", str(out), "--threads", threads]) == 0
        paths.append(json.loads(out.read_text())["data"])
    assert paths[0] == paths[1]


def test_scan_csv(tmp_path, capsys):
    cfg = {"potential": {"kind": "poschl_teller", "V0": [-1.0, 0.0]},
           "grid": {"k_re": [-0.9, -0.1], "k_im": [-1.0, 1.0], "steps": [5, 5]},
           "output": {"format": "csv"}}
    path = _write(tmp_path, cfg)
    code, a, err = _run(["scan", "--config", path, "--threads", "1"], capsys)
    assert code == 0
    assert json.loads(err)["command"] == "scan"
    code, b, _ = _run(["scan", "--config", path, "--threads", "4"], capsys)
    assert a == b
    lines = a.strip().splitlines()
    assert lines[0] == "k_re,k_im,lambda_re,lambda_im,sheet,absD,argD,error"
    assert len(lines) == 26


def test_evans_compare_oracle(tmp_path, capsys):
    cfg = {"potential": {"kind": "square_well", "h": [-10.0, 0.0], "a1": 0.0, "a2": 1.0},
           "points": [[1.0, 0.5], [2.0, -1.0], [-1.0, 1.0]],
           "region": {"k_min": [-3.0, -8.0], "k_max": [-0.001, 8.0]}}
    path = _write(tmp_path, cfg)
    code, out, _ = _run(["evans", "--config", path], capsys)
    pts = json.loads(out)["data"]["points"]
    assert code == 0 and "evans" in pts[0] and "error" in pts[2]
    code, out, _ = _run(["compare", "--config", path], capsys)
    data = json.loads(out)["data"]
    assert code == 0 and data["max_discrepancy"] < 1e-6
    assert all(r["relative_error"] < 1e-6 for r in data["oracle"])
    code, out, _ = _run(["oracle", "--config", path], capsys)
    data = json.loads(out)["data"]
    assert len(data["bound_states"]) == 2 and len(data["second_sheet"]) >= 2


def test_eigenfunction_and_project(tmp_path, capsys):
    code, out, _ = _run(["eigenfunction", "--config", str(CONFIGS / "square_well_second.json")],
                        capsys)
    data = json.loads(out)["data"]
    assert code == 0 and data["eigen_residual"] < 1e-6 and len(data["samples"]) == 20
    cfg = json.loads((CONFIGS / "square_well_second.json").read_text())
    cfg["projection"]["M"] = 32
    cfg["projection"]["N"] = 80
    code, out, _ = _run(["project", "--config", _write(tmp_path, cfg)], capsys)
    data = json.loads(out)["data"]
    assert code == 0
    assert max(data["defect_vs_eigenfunction"]) < 1e-4
    assert data["defect_between_phis"][0] < 1e-4


def test_clusters_give_exit_code_2(tmp_path, capsys):
    cfg = {"potential": {"kind": "poschl_teller", "V0": [6.0, 0.0]},
           "region": {"k_min": [0.5, -0.5], "k_max": [2.5, 0.5], "max_depth": 1},
           "tolerances": {"root_tol": 1e-30}}
    code, out, _ = _run(["resonances", "--config", _write(tmp_path, cfg)], capsys)
    assert code == 2
    assert json.loads(out)["data"]["clusters"]


def test_config_errors(tmp_path, capsys):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{\n  "potential": {"kind": "zero"},\n  "region": [1, \n}')
    code, _, err = _run(["resonances", "--config", str(bad_json)], capsys)
    assert code == 1 and "bad.json:4:1" in err
    cfg = '{\n  "potential": {"kind": "square_well", "h": [-1, 0], "a1": 1, "a2": 0}\n}'
    p = tmp_path / "order.json"
    p.write_text(cfg)
    code, _, err = _run(["oracle", "--config", str(p)], capsys)
    assert code == 1 and "order.json:2" in err
    p.write_text('{"potential": {"kind": "zero"}, "bogus": 1}')
    code, _, err = _run(["oracle", "--config", str(p)], capsys)
    assert code == 1 and "bogus" in err
    code, _, err = _run(["resonances", "--config", str(tmp_path / "missing.json")], capsys)
    assert code == 1
    code, _, err = _run(["scan", "--config", _write(tmp_path, {"potential": {"kind": "zero"}})],
                        capsys)
    assert code == 1 and "grid" in err


def test_shipped_configs_validate():
    from resonance_d.cli import load_config
    for p in sorted(CONFIGS.glob("*.json")):
        load_config(str(p))
