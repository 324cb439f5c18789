import json

import pytest

from frontlab.cli import main
from frontlab.config import (
    ConfigError,
    apply_overrides,
    load_config,
    parse_config,
)

RUN_DOC = {
    "nonlinearity": {"kind": "cubic", "theta": 0.25},
    "drift": {"kind": "zero", "x0": 1.0},
    "grid": {"x_min": -60.0, "x_max": 40.0, "n": 1024},
    "time": {"t0": -56.5685424949238, "t_end": -50.0, "dt": 0.01,
             "sample_interval": 1.0},
    "monitors": [],
    "scheme": "imex_upwind",
}

CERT_DOC = {
    "nonlinearity": {"kind": "cubic", "theta": 0.25},
    "drift": {"kind": "mollified_indicator", "K": 18.0, "eps": 5e-5,
              "smoothing": 5e-7},
}


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def test_parse_defaults():
    cfg = parse_config({})
    assert cfg.nonlinearity.theta == 0.25
    assert cfg.grid.n == 8192
    assert cfg.scheme == "imex_upwind"
    assert cfg.monitors == ("envelope", "lyapunov")


def test_parse_rejects_unknown_field():
    with pytest.raises(ConfigError) as err:
        parse_config({"drift": {"kind": "zero", "strength": 2.0}})
    assert err.value.path == "drift.strength"


def test_parse_rejects_bad_values():
    with pytest.raises(ConfigError) as err:
        parse_config({"time": {"dt": -0.5}})
    assert err.value.path == "time.dt"
    with pytest.raises(ConfigError):
        parse_config({"scheme": "spectral"})
    with pytest.raises(ConfigError):
        parse_config({"drift": {"kind": "mollified_indicator", "K": 1.0,
                                "eps": 0.1, "smoothing": 0.1}})


def test_overrides_patch_nested_paths():
    raw = apply_overrides(dict(RUN_DOC), ["time.dt=0.02",
                                          "drift.kind=bump",
                                          "monitors=[\"lyapunov\"]"])
    assert raw["time"]["dt"] == 0.02
    assert raw["drift"]["kind"] == "bump"
    assert raw["monitors"] == ["lyapunov"]


def test_override_requires_equals():
    with pytest.raises(ConfigError):
        apply_overrides({}, ["time.dt"])


def test_load_config_reports_json_position(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{\n  \"grid\": [,]\n}")
    with pytest.raises(ConfigError) as err:
        load_config(str(p))
    assert "line 2" in str(err.value)


def test_cli_certify(tmp_path, capsys):
    rc = main(["certify", "--config", write(tmp_path, CERT_DOC)])
    assert rc == 0
    out = json.loads(capsys.readouterr().out)
    assert out["verdict"] == "BlockingCertified"
    assert out["rhs"] < out["C_f"]


def test_cli_run_writes_artifacts(tmp_path, capsys):
    cfg = write(tmp_path, RUN_DOC)
    out1 = tmp_path / "o1"
    out2 = tmp_path / "o2"
    assert main(["run", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["run", "--config", cfg, "--out", str(out2)]) == 0
    rep1 = (out1 / "report.json").read_bytes()
    rep2 = (out2 / "report.json").read_bytes()
    assert rep1 == rep2
    report = json.loads(rep1)
    assert report["classification"] in ("Propagating", "Undetermined")
    front = (out1 / "front_trace.csv").read_text().splitlines()
    assert front[0] == "# columns: t, front, beta_fit"
    monitors = (out1 / "monitors.csv").read_text().splitlines()
    assert monitors[0].startswith("# columns: t, L, Q")
    assert (out1 / "summary.txt").exists()


def test_cli_run_requires_out(tmp_path, capsys):
    rc = main(["run", "--config", write(tmp_path, RUN_DOC)])
    assert rc == 2
    assert "--out" in capsys.readouterr().err


def test_cli_exit_2_on_bad_config(tmp_path, capsys):
    cfg = write(tmp_path, RUN_DOC)
    rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
               "--override", "time.dt=-1.0"])
    assert rc == 2
    assert "time.dt" in capsys.readouterr().err


def test_cli_exit_3_on_unstable_step(tmp_path, capsys):
    cfg = write(tmp_path, RUN_DOC)
    rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o"),
               "--override", "time.dt=1.0"])
    assert rc == 3
    err = capsys.readouterr().err
    assert "simulate" in err


def test_cli_wave_csv(tmp_path, capsys):
    cfg = write(tmp_path, {"nonlinearity": {"kind": "cubic",
                                            "theta": 0.25}})
    out = tmp_path / "w"
    assert main(["wave", "--config", cfg, "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["c"] == pytest.approx(0.3535534, abs=1e-4)
    lines = (out / "wave.csv").read_text().splitlines()
    assert lines[0] == "# columns: z, phi, phi_prime"
    assert len(lines) > 1000


def test_cli_sweep_merges_in_submit_order(tmp_path):
    doc = dict(RUN_DOC)
    doc["scheme"] = "psi_flux"
    doc["sweep"] = {"K_values": [2.0, 5.0], "eps_values": [0.5],
                    "smoothing_factor": 0.01}
    out = tmp_path / "sw"
    rc = main(["sweep", "--config", write(tmp_path, doc),
               "--out", str(out), "--threads", "2"])
    assert rc == 0
    lines = (out / "phase_diagram.csv").read_text().splitlines()
    assert lines[0] == "# columns: K, eps, verdict_cert, verdict_sim"
    ks = [float(line.split(",")[0]) for line in lines[1:]]
    assert ks == [2.0, 5.0]
