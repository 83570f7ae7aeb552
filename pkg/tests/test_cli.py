"""Command-line interface: exit codes, file formats, reproducibility."""

import json
import os

import numpy as np
import pytest

from kcontract.cli import load_config, main, save_config
from kcontract.errors import ParseError


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def network_cfg(k=2, w_scale=0.07, n=10):
    return {
        "kind": "network",
        "alpha": 0.5,
        "w": [[w_scale] * n for _ in range(n)],
        "nonlinearity": {"family": "scaled_tanh", "gain": 1.0, "dim": n},
        "analysis": {"k": k, "p": "scalar-search"},
    }


def lurie_cfg():
    # pure linear dx = -x in loop form; certificate gives rate 1 at k = 1
    return {
        "kind": "lurie",
        "a": [[-1.0, 0.0], [0.0, -1.0]],
        "b": [[0.0], [0.0]],
        "c": [[0.0, 0.0]],
        "nonlinearity": {"family": "linear", "k_matrix": [[0.0]]},
        "analysis": {"k": 1, "p": [[1.0, 0.0], [0.0, 1.0]]},
    }


# --- compound ---------------------------------------------------------------


def test_compound_identity_additive(tmp_path, capsys):
    path = write_json(tmp_path / "m.json", np.eye(4).tolist())
    assert main(["compound", path, "--k", "2", "--mode", "add"]) == 0
    got = np.array(json.loads(capsys.readouterr().out))
    np.testing.assert_allclose(got, 2.0 * np.eye(6))


def test_compound_diag_additive(tmp_path, capsys):
    path = write_json(tmp_path / "m.json", [[1.0, 0, 0], [0, 2.0, 0], [0, 0, 3.0]])
    assert main(["compound", path, "--k", "2", "--mode", "add"]) == 0
    got = np.array(json.loads(capsys.readouterr().out))
    np.testing.assert_allclose(got, np.diag([3.0, 4.0, 5.0]))


def test_compound_rectangular_multiplicative(tmp_path, capsys):
    path = write_json(tmp_path / "m.json", [[4, 5], [-1, 4], [0, 3]])
    assert main(["compound", path, "--k", "2", "--mode", "mult"]) == 0
    got = np.array(json.loads(capsys.readouterr().out))
    np.testing.assert_allclose(got, [[21.0], [12.0], [-3.0]])


def test_compound_csv_input_and_out_file(tmp_path):
    csv = tmp_path / "m.csv"
    csv.write_text("0,1\n-1,0\n")
    out = tmp_path / "result.json"
    code = main(["compound", str(csv), "--k", "2", "--mode", "mult", "--out", str(out)])
    assert code == 0
    got = json.loads(out.read_text())
    np.testing.assert_allclose(got, [[1.0]])


def test_compound_error_codes(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["compound", missing, "--k", "1", "--mode", "add"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["compound", str(bad), "--k", "1", "--mode", "add"]) == 2
    notmat = write_json(tmp_path / "text.json", {"a": 1})
    assert main(["compound", notmat, "--k", "1", "--mode", "add"]) == 2
    # k beyond the matrix order is a usage error, not an internal one
    small = write_json(tmp_path / "small.json", np.eye(3).tolist())
    assert main(["compound", small, "--k", "5", "--mode", "add"]) == 2
    capsys.readouterr()


def test_compound_capacity_exit(tmp_path, capsys):
    big = write_json(tmp_path / "big.json", np.eye(40).tolist())
    assert main(["compound", big, "--k", "20", "--mode", "mult"]) == 3
    assert "KCONTRACT_MAX_COMPOUND" in capsys.readouterr().err


# --- certify ----------------------------------------------------------------


def test_certify_network_pass_and_fail(tmp_path, capsys):
    cfg = write_json(tmp_path / "net.json", network_cfg(k=2))
    assert main(["certify", cfg]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    assert "0.49 < 0.5" in out

    assert main(["certify", cfg, "--k", "1"]) == 1
    out = capsys.readouterr().out
    assert "FAIL" in out
    assert "margin -0.24" in out


def test_certify_report_file(tmp_path, capsys):
    report_path = tmp_path / "report.json"
    cfg = write_json(tmp_path / "net.json", network_cfg(k=2))
    assert main(["certify", cfg, "--out", str(report_path)]) == 0
    capsys.readouterr()
    report = json.loads(report_path.read_text())
    cert = report["certificate"]
    assert cert["passed"] is True
    assert cert["k"] == 2
    assert cert["details"]["condition_value"] == pytest.approx(0.49)
    assert cert["rate_bound"] == pytest.approx(0.0100378, rel=1e-4)
    assert report["provenance"]["tolerances"]["psd_rel"] == 1e-9
    assert report["simulation"] is None
    # failed certificates still carry their margins in the report
    assert main(["certify", cfg, "--k", "1", "--out", str(report_path)]) == 1
    capsys.readouterr()
    report = json.loads(report_path.read_text())
    assert report["certificate"]["passed"] is False
    assert report["certificate"]["margins"]["network_gap"] == pytest.approx(-0.24)


def test_certify_lurie_explicit_p(tmp_path, capsys):
    cfg = write_json(tmp_path / "lin.json", lurie_cfg())
    assert main(["certify", cfg]) == 0
    assert main(["certify", cfg, "--out", str(tmp_path / "r.json")]) == 0
    capsys.readouterr()
    report = json.loads((tmp_path / "r.json").read_text())
    # etas not given: eta1 maximizes the Riccati budget (2), eta2 defaults to 0
    assert report["certificate"]["rate_bound"] == pytest.approx(1.0, rel=1e-9)


def test_certify_config_errors(tmp_path, capsys):
    # missing k everywhere
    cfg = network_cfg()
    del cfg["analysis"]["k"]
    path = write_json(tmp_path / "nok.json", cfg)
    assert main(["certify", path]) == 2

    # explicit P matrix is a lurie-only feature
    cfg = network_cfg()
    cfg["analysis"]["p"] = [[1.0, 0.0], [0.0, 1.0]]
    path = write_json(tmp_path / "netp.json", cfg)
    assert main(["certify", path]) == 2

    # lurie without any P cannot run the matrix conditions
    cfg = lurie_cfg()
    del cfg["analysis"]["p"]
    path = write_json(tmp_path / "nop.json", cfg)
    assert main(["certify", path]) == 2

    # non-SPD P is rejected at parse level
    cfg = lurie_cfg()
    cfg["analysis"]["p"] = [[-1.0, 0.0], [0.0, 1.0]]
    path = write_json(tmp_path / "badp.json", cfg)
    assert main(["certify", path]) == 2

    # schema violations: unknown field, bad kind
    cfg = network_cfg()
    cfg["extra"] = 1
    path = write_json(tmp_path / "extra.json", cfg)
    assert main(["certify", path]) == 2
    capsys.readouterr()


def test_certify_unbounded_nonlinearity_exit4(tmp_path, capsys):
    cfg = {
        "kind": "network",
        "alpha": 1.0,
        "w": [[0.1, 0.0], [0.0, 0.1]],
        "nonlinearity": {
            "family": "piecewise",
            "dim": 2,
            "table_x": [-1.0, 1.0],
            "table_y": [-1.0, 1.0],
        },
        "analysis": {"k": 1},
    }
    path = write_json(tmp_path / "pw.json", cfg)
    assert main(["certify", path]) == 4
    assert "declare" in capsys.readouterr().err
    # declared bound turns the same config certifiable
    cfg["nonlinearity"]["jac_norm_bound"] = 1.0
    path = write_json(tmp_path / "pw2.json", cfg)
    assert main(["certify", path]) == 0
    capsys.readouterr()


def test_config_roundtrip(tmp_path):
    cfg = network_cfg()
    path = tmp_path / "cfg.json"
    save_config(cfg, str(path))
    loaded = load_config(str(path))
    assert loaded == cfg
    save_config(loaded, str(tmp_path / "cfg2.json"))
    assert load_config(str(tmp_path / "cfg2.json")) == cfg


def test_load_config_validates(tmp_path):
    with pytest.raises(ParseError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "network"}')  # missing nonlinearity
    with pytest.raises(ParseError):
        load_config(str(bad))
    nofield = tmp_path / "nofield.json"
    nofield.write_text(json.dumps({
        "kind": "network",
        "nonlinearity": {"family": "scaled_tanh", "gain": 1.0, "dim": 2},
    }))
    with pytest.raises(ParseError):
        load_config(str(nofield))  # network requires alpha and w


# --- simulate ---------------------------------------------------------------


def test_simulate_zero_state_classifies_to_origin(tmp_path, capsys):
    plain = network_cfg()
    del plain["analysis"]  # no k anywhere: plain state series, no volume column
    cfg = write_json(tmp_path / "net.json", plain)
    outdir = tmp_path / "runs"
    code = main([
        "simulate", str(cfg), "--x0", ",".join(["0"] * 10),
        "--tend", "1.0", "--outdir", str(outdir),
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    entry = report["simulation"]["trajectories"][0]
    assert entry["classification"] == 0
    assert report["simulation"]["converged"] == 1
    csv = outdir / "traj_000.csv"
    header = csv.read_text().splitlines()[0]
    assert header == "t," + ",".join(f"x{i + 1}" for i in range(10))


def test_simulate_with_volume_tracking(tmp_path, capsys):
    cfg = write_json(tmp_path / "net.json", network_cfg(k=2))
    outdir = tmp_path / "runs"
    code = main([
        "simulate", str(cfg), "--random", "2", "--seed", "3",
        "--k", "2", "--tend", "2.0", "--outdir", str(outdir),
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    sim = report["simulation"]
    assert sim["count"] == 2 and sim["k"] == 2
    assert report["certificate"]["passed"] is True
    assert report["provenance"]["seed"] == 3
    for entry in sim["trajectories"]:
        assert entry["fitted_rate"] < 0  # certified contraction shows up
    lines = (outdir / "traj_000.csv").read_text().splitlines()
    assert lines[0].endswith(",logvol")
    first = [float(v) for v in lines[1].split(",")]
    assert len(first) == 12  # t, 10 states, logvol


def test_simulate_seeded_runs_are_bit_identical(tmp_path, capsys):
    cfg = write_json(tmp_path / "net.json", network_cfg())
    outs = []
    for name in ("a", "b"):
        outdir = tmp_path / name
        code = main([
            "simulate", str(cfg), "--random", "2", "--seed", "11",
            "--tend", "0.5", "--outdir", str(outdir),
            "--out", str(outdir / "report.json"),
        ])
        assert code == 0
        capsys.readouterr()
        outs.append(outdir)
    for i in range(2):
        a = (outs[0] / f"traj_{i:03d}.csv").read_bytes()
        b = (outs[1] / f"traj_{i:03d}.csv").read_bytes()
        assert a == b
    ra = json.loads((outs[0] / "report.json").read_text())
    rb = json.loads((outs[1] / "report.json").read_text())
    ra["simulation"] = {k: v for k, v in ra["simulation"].items() if k != "trajectories"}
    rb["simulation"] = {k: v for k, v in rb["simulation"].items() if k != "trajectories"}
    for x, y in zip(
        ra["simulation"].items(), rb["simulation"].items()
    ):
        assert x == y


def test_simulate_divergence_recorded_exit0(tmp_path, capsys):
    cfg = {
        "kind": "lurie",
        "a": [[2.0]],
        "b": [[0.0]],
        "c": [[0.0]],
        "nonlinearity": {"family": "linear", "k_matrix": [[0.0]]},
    }
    path = write_json(tmp_path / "unstable.json", cfg)
    code = main([
        "simulate", path, "--x0", "1.0", "--tend", "20.0",
        "--outdir", str(tmp_path / "runs"),
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    entry = report["simulation"]["trajectories"][0]
    assert entry["diverged"] is True
    assert entry["escape_time"] == pytest.approx(np.log(1e9) / 2.0, abs=0.1)


def test_simulate_linear_fitted_rate_matches_measure(tmp_path, capsys):
    cfg = write_json(tmp_path / "lin.json", lurie_cfg())
    code = main([
        "simulate", str(cfg), "--x0", "1.0,0.5", "--k", "1",
        "--tend", "5.0", "--outdir", str(tmp_path / "runs"),
    ])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    entry = report["simulation"]["trajectories"][0]
    # fitted slope of log|X(t)| vs the certificate's rate bound of 1
    assert entry["fitted_rate"] == pytest.approx(-1.0, abs=1e-6)
    assert report["certificate"]["rate_bound"] == pytest.approx(1.0, rel=1e-9)


def test_simulate_x0_parse_errors(tmp_path, capsys):
    cfg = write_json(tmp_path / "net.json", network_cfg())
    assert main(["simulate", str(cfg), "--x0", "1,2,3",
                 "--outdir", str(tmp_path / "r")]) == 2
    assert main(["simulate", str(cfg), "--x0", "a,b",
                 "--outdir", str(tmp_path / "r")]) == 2
    assert main(["simulate", str(cfg), "--x0", ",".join(["0"] * 10),
                 "--k", "99", "--outdir", str(tmp_path / "r")]) == 2
    capsys.readouterr()


# --- demo -------------------------------------------------------------------


def test_demo_hopfield_reduced(tmp_path, capsys):
    outdir = tmp_path / "demo"
    code = main([
        "demo-hopfield", "--random", "3", "--tend", "2.0",
        "--outdir", str(outdir),
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "0.49 < 0.5" in out
    assert "certify k=1: FAIL" in out
    assert "certify k=2: PASS" in out
    assert "1.1403" in out
    assert "simulated 3 trajectories (seed 7" in out
    report = json.loads((outdir / "report.json").read_text())
    assert report["certificate"]["passed"] is True
    assert report["simulation"]["count"] == 3
    assert os.path.exists(outdir / "traj_002.csv")


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "kcontract" in capsys.readouterr().out
