import json

import numpy as np
import pytest

from mblmagic import harness, magic
from mblmagic.cli import main


def test_haar(capsys):
    assert main(["haar", "--L", "12"]) == 0
    out = capsys.readouterr().out
    assert float(out.strip()) == pytest.approx(magic.haar_sre2(12))


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
    assert main(["haar"]) == 1  # missing --L


def test_runtime_error_exit_code(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["fit", "--in", str(missing)]) == 2
    assert "error:" in capsys.readouterr().err


def test_sre_exact_t_product(capsys):
    assert main(["sre-exact", "--L", "4", "--state", "t-product"]) == 0
    val = float(capsys.readouterr().out.strip())
    assert val == pytest.approx(4 * np.log2(4 / 3), abs=1e-9)


def test_sre_sample(capsys):
    rc = main(
        ["sre-sample", "--L", "4", "--state", "t-product", "--samples", "4000"]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "estimate=" in out and "stderr=" in out


def test_anderson_oracle_table(tmp_path, capsys):
    out = tmp_path / "oracle.csv"
    rc = main(
        [
            "anderson-oracle",
            "--L", "8", "--W", "1.0",
            "--tmin", "1", "--tmax", "10", "--per-decade", "2",
            "--out", str(out),
        ]
    )
    assert rc == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "t,M2"
    assert len(lines) == 4  # header + 3 grid points
    t0, m0 = map(float, lines[1].split(","))
    assert t0 == pytest.approx(1.0)
    assert m0 > 0


def test_run_and_fit_pipeline(tmp_path, capsys):
    rec_path = tmp_path / "rec.csv"
    rc = main(
        [
            "run",
            "--model", "lbit", "--L", "4", "--xi", "0.5", "--max-order", "1",
            "--state", "x-plus",
            "--tmin", "1", "--tmax", "100", "--per-decade", "4",
            "--observables", "m2",
            "--sre", "product",
            "--realizations", "6", "--seed", "2",
            "--out", str(rec_path),
        ]
    )
    assert rc == 0
    assert "wrote" in capsys.readouterr().out
    rec = harness.load_record(str(rec_path))
    assert rec.n_ok == 6

    fit_out = tmp_path / "fit.csv"
    rc = main(["fit", "--in", str(rec_path), "--window", "1:100", "--out", str(fit_out)])
    assert rc == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("file,M_sat")
    assert fit_out.read_text().count("\n") == 1


def test_run_with_config_file(tmp_path):
    cfg = {
        "model": "lbit",
        "L": 4,
        "xi": 0.5,
        "max_order": 1,
        "state_family": "bloch-random",
        "t_min": 1.0,
        "t_max": 10.0,
        "per_decade": 1,
        "observables": ["m2"],
        "sre_method": "product",
        "n_realizations": 3,
        "base_seed": 1,
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / "rec.csv"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    rec = harness.load_record(str(out))
    assert rec.config.L == 4 and rec.config.n_realizations == 3
    # flag overrides config
    out2 = tmp_path / "rec2.csv"
    assert main(["run", "--config", str(cfg_path), "--L", "5", "--out", str(out2)]) == 0
    assert harness.load_record(str(out2)).config.L == 5


def _small_record(tmp_path, name, **kw):
    defaults = dict(
        model="lbit",
        L=4,
        xi=0.5,
        max_order=1,
        state_family="y-random",
        t_min=1.0,
        t_max=1000.0,
        per_decade=3,
        observables=("m2", "s", "wz"),
        sre_method="exact",
        n_realizations=4,
        base_seed=5,
    )
    defaults.update(kw)
    rec = harness.run_ensemble(harness.RunConfig(**defaults))
    path = tmp_path / name
    harness.save_record(rec, str(path))
    return path


def test_fit_decay(tmp_path, capsys):
    path = _small_record(tmp_path, "r.csv")
    rc = main(["fit-decay", "--in", str(path), "--window", "1:1000"])
    assert rc == 0
    assert "lambda" in capsys.readouterr().out


def test_collapse(tmp_path, capsys):
    a = _small_record(tmp_path, "a.csv", base_seed=5)
    b = _small_record(tmp_path, "b.csv", base_seed=6)
    rc = main(["collapse", "--ref", str(a), "--target", str(b)])
    assert rc == 0
    out = capsys.readouterr().out
    f = float(out.splitlines()[1].split(",")[2])
    assert f > 0


def test_crossover(tmp_path, capsys):
    paths = [
        _small_record(tmp_path, f"r{L}.csv", L=L, observables=("m2",), sre_method="product", state_family="bloch-random")
        for L in (4, 5, 6)
    ]
    out = tmp_path / "cross.csv"
    rc = main(
        ["crossover", "--in", *map(str, paths), "--t-eval", "1000", "--out", str(out)]
    )
    assert rc == 0
    text = out.read_text()
    assert text.startswith("L,W,delta_M2")
    assert "# slopes per W" in text


def test_validate(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS" in out
