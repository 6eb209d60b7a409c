import csv
import json
import math

import numpy as np
import pytest

from forestdde import cli
from forestdde.errors import NumericalError, ValidationError
from forestdde.fixtures import F1, F2, F3, degenerate
from forestdde.integrator import IntegratorSettings
from forestdde.io import config_from_dict, config_to_dict, emit_config, load, parse_config
from forestdde.model import CompetitionFunction, InitialHistory, ModelConfig, SpeciesParams


def _write(tmp_path, config, name="cfg.json", **settings):
    path = tmp_path / name
    path.write_text(emit_config(config, IntegratorSettings(**settings) if settings else None))
    return str(path)


def _mixed():
    sp1 = SpeciesParams(0.1, 0.05, 0.3, 1.5, CompetitionFunction.rational(2.0, 0.5, 1.7),
                        InitialHistory.sinusoidal(2.0, 0.3, 0.9, 0.4))
    sp2 = SpeciesParams(0.2, 0.07, 0.4, 1.0, CompetitionFunction.constant(0.9),
                        InitialHistory.sampled([-1.5, -0.25, 0.0], [1.0, 2.0, 0.5]))
    return ModelConfig([sp1, sp2], [[1.0, 0.2], [0.0, 3.0]])


@pytest.mark.parametrize("config", [F1(), F2(), F3(), degenerate(), _mixed()])
def test_round_trip(tmp_path, config):
    assert parse_config(_write(tmp_path, config)) == config
    assert config_from_dict(json.loads(emit_config(config))) == config


def test_minimal_config(tmp_path):
    path = tmp_path / "min.json"
    path.write_text(json.dumps({
        "species": [{"mu_A": 0.1, "mu_J": 0.05, "beta": 0.2, "tau0": 2,
                     "f": {"kind": "rational-decay", "kappa": 1, "theta": 1, "p": 1},
                     "history": {"kind": "constant", "value": 1}}],
        "zeta": [[1]],
    }))
    assert parse_config(str(path)) == F1()


def test_parse_error_reports_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{\n  "species": [\n    {"mu_A": 0.1,,}\n')
    with pytest.raises(ValidationError, match=r"line 3, column"):
        parse_config(str(path))


@pytest.mark.parametrize("mutate, message", [
    (lambda d: d["zeta"][1].__setitem__(1, 0.0), "self-competition"),
    (lambda d: d["species"][0].__setitem__("f", {"kind": "exponential-decay", "kappa": 1.0,
                                                 "rate": 1.0}), "growth-ratio bound"),
    (lambda d: d["species"][0].pop("mu_A"), "missing 'mu_A'"),
    (lambda d: d["species"][0]["history"].__setitem__("colour", 3), "unknown keys"),
    (lambda d: d.pop("zeta"), "missing the 'zeta'"),
])
def test_validation_messages(mutate, message):
    d = config_to_dict(F3())
    mutate(d)
    with pytest.raises(ValidationError, match=message):
        config_from_dict(d)


def test_settings_and_overrides(tmp_path):
    path = _write(tmp_path, F1(), h=0.02, t_end=7.0)
    _, s = load(path)
    assert (s.h, s.t_end) == (0.02, 7.0)
    _, s = load(path, h=0.5)
    assert (s.h, s.t_end) == (0.5, 7.0)
    d = json.loads((tmp_path / "cfg.json").read_text())
    d["settings"]["warp"] = 9
    (tmp_path / "cfg.json").write_text(json.dumps(d))
    with pytest.raises(ValidationError, match="unknown keys"):
        load(path)


def test_run_writes_table_and_metadata(tmp_path):
    out = tmp_path / "f3.csv"
    assert cli.main(["run", "--config", _write(tmp_path, F3()), "--t-end", "5", "--h", "0.05",
                     "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    rows = list(csv.reader(raw.decode().splitlines()))
    assert rows[0] == ["t", "A_1", "A_2", "tau_1", "tau_2", "lag_1", "lag_2",
                       "conservation_residual_1", "conservation_residual_2"]
    data = np.array(rows[1:], dtype=float)
    assert data.shape[1] == 1 + 4 * 2
    assert np.all(np.diff(data[:, 0]) > 0)
    assert data[-1, 0] == 5.0
    np.testing.assert_allclose(data[:, 5:7], data[:, [0]] - data[:, 3:5], atol=1e-15)
    meta = json.loads((tmp_path / "f3.csv.meta.json").read_text())
    assert meta["C"] == pytest.approx([0.8, 0.8])
    assert meta["config"] == config_to_dict(F3())
    assert meta["tstar"][0] == pytest.approx(meta["tstar"][1])
    assert meta["version"]


def test_run_is_byte_deterministic(tmp_path):
    cfg = _write(tmp_path, F1())
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        cli.main(["run", "--config", cfg, "--t-end", "10", "--out", str(out)])
        outs.append(out.read_bytes() + (tmp_path / f"r{k}.csv.meta.json").read_bytes())
    assert outs[0] == outs[1]


def test_run_degenerate_final_row(tmp_path):
    out = tmp_path / "d.csv"
    cli.main(["run", "--config", _write(tmp_path, degenerate()), "--t-end", "10", "--out", str(out)])
    last = out.read_text().strip().splitlines()[-1].split(",")
    assert float(last[1]) == pytest.approx(math.exp(0.1 * 10), rel=1e-12)


def test_run_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "x.csv")]) == 1
    assert cli.main(["run", "--config", str(tmp_path / "nope.json"), "--out", "x.csv"]) == 1

    def boom(*a, **k):
        raise NumericalError("diverged")

    monkeypatch.setattr(cli, "solve", boom)
    assert cli.main(["run", "--config", _write(tmp_path, F1()), "--out", str(tmp_path / "x.csv")]) == 2


def test_verify_pass_and_fail(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = cli.main(["verify", "--config", _write(tmp_path, F1(), h=0.02, t_end=30.0),
                     "--suite", "lag,certificates,smith", "--out", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["passed"] and rep["metadata"]["suites"] == ["lag", "certificates", "smith"]
    assert "PASS lag.tstar_1" in capsys.readouterr().out
    # t* is about 2.07, so a run to t = 1 cannot find it
    code = cli.main(["verify", "--config", _write(tmp_path, F1(), "short.json", h=0.01, t_end=1.0),
                     "--suite", "lag"])
    assert code == 3


def test_verify_skips_inapplicable_suites(tmp_path):
    out = tmp_path / "rep.json"
    assert cli.main(["verify", "--config", _write(tmp_path, F3(), h=0.05, t_end=5.0),
                     "--suite", "smith,pde,equilibrium", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["checks"] == []
    assert set(rep["metadata"]["skipped"]) == {"smith", "pde", "equilibrium"}


def test_verify_unknown_suite(tmp_path):
    assert cli.main(["verify", "--config", _write(tmp_path, F1()), "--suite", "vibes"]) == 1


def test_parse_range():
    vals = cli.parse_range("0.05:0.5:0.05")
    assert len(vals) == 10
    assert vals[0] == 0.05 and vals[-1] == 0.5
    assert cli.parse_range("1:1:0.3") == [1.0]
    for bad in ("0:1:0", "0:1:-1", "1:0:0.1", "a:b:c", "0:1"):
        with pytest.raises(ValidationError):
            cli.parse_range(bad)


def test_set_path():
    d = config_to_dict(F3())
    assert cli.set_path(d, "zeta.0.1", 0.7)["zeta"][0][1] == 0.7
    assert cli.set_path(d, "species.1.f.kappa", 2.0)["species"][1]["f"]["kappa"] == 2.0
    assert d["zeta"][0][1] == 0.5  # original untouched
    for bad in ("species.5.beta", "species.0.nope", "species.0.f", "zeta.x"):
        with pytest.raises(ValidationError):
            cli.set_path(d, bad, 1.0)


def test_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = _write(tmp_path, F1(), h=0.05, t_end=100.0)
    assert cli.main(["sweep", "--config", cfg, "--param", "species.0.beta",
                     "--range", "0.05:0.5:0.05", "--out", str(out), "--workers", "3"]) == 0
    rows = list(csv.reader(out.read_text().splitlines()))
    assert rows[0] == ["species.0.beta", "limsup_1", "tstar_1"]
    body = rows[1:]
    assert len(body) == 10
    betas = [float(r[0]) for r in body]
    assert betas == sorted(betas)
    assert all(r[2] for r in body)


def test_sweep_errors(tmp_path):
    cfg = _write(tmp_path, F1())
    out = str(tmp_path / "s.csv")
    assert cli.main(["sweep", "--config", cfg, "--param", "species.0.zap", "--range", "0:1:1",
                     "--out", out]) == 1
    assert cli.main(["sweep", "--config", cfg, "--param", "species.0.beta", "--range", "0:1:0",
                     "--out", out]) == 1
    # beta = 0 is not a valid model
    assert cli.main(["sweep", "--config", cfg, "--param", "species.0.beta", "--range", "0:0.1:0.1",
                     "--out", out]) == 1


def test_equilibrium_command(tmp_path, capsys):
    assert cli.main(["equilibrium", "--config", _write(tmp_path, F1())]) == 0
    out = json.loads(capsys.readouterr().out)
    eq = out["equilibria"][0]
    assert eq["tau_bar"] == pytest.approx(math.log(2) / 0.05, rel=1e-15)
    assert eq["A_star"] == pytest.approx(math.log(2) / 0.05 - 1, rel=1e-14)
    assert cli.main(["equilibrium", "--config", _write(tmp_path, F3(), "f3.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert all(e["A_star"] is None for e in out["equilibria"])
