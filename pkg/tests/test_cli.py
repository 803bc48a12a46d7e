import json
import math
import os

import numpy as np
import pytest

import zcequant as z
from zcequant.cli import main

FIXTURE = os.path.join(os.path.dirname(__file__), "data", "pareto_blocks.csv")


def _parse_kv(out):
    pairs = {}
    for line in out.strip().splitlines():
        key, _, value = line.partition("=")
        pairs[key] = value
    return pairs


@pytest.fixture
def ones_file(tmp_path):
    path = tmp_path / "data.txt"
    path.write_text("".join("1.0\n" for _ in range(50)))
    return str(path)


def test_estimate_bayes(ones_file, capsys):
    assert main(["estimate", ones_file, "--alpha", "0.99", "--method", "bayes"]) == 0
    pairs = _parse_kv(capsys.readouterr().out)
    assert pairs["n"] == "50"
    assert pairs["sigma"] == "50"
    assert float(pairs["eta"]) == pytest.approx(4.823910, abs=5e-7)
    assert float(pairs["psi"]) == pytest.approx(0.09647820, abs=5e-9)
    assert float(pairs["predictive_cdf"]) == pytest.approx(0.99, abs=1e-9)


def test_estimate_ml(ones_file, capsys):
    assert main(["estimate", ones_file, "--alpha", "0.99", "--method", "ml"]) == 0
    pairs = _parse_kv(capsys.readouterr().out)
    assert float(pairs["eta"]) == pytest.approx(4.605170, abs=5e-7)


def test_estimate_single_value(tmp_path, capsys):
    path = tmp_path / "one.txt"
    path.write_text("1.0\n")
    assert main(["estimate", str(path), "--alpha", "0.5", "--method", "bayes"]) == 0
    pairs = _parse_kv(capsys.readouterr().out)
    assert float(pairs["eta"]) == pytest.approx(1.0, rel=1e-9)


def test_estimate_is_a_thin_shim(ones_file, capsys):
    """CLI output digits equal the library result formatted the same way."""
    main(["estimate", ones_file, "--alpha", "0.97", "--method", "bayes"])
    pairs = _parse_kv(capsys.readouterr().out)
    summary = z.summarize([1.0] * 50)
    eta = z.quantile_estimate(summary, z.psi_bayes(50, 0.97))
    assert pairs["eta"] == f"{eta:.9g}"


def test_estimate_json(ones_file, capsys):
    assert main(["estimate", ones_file, "--alpha", "0.99", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["n"] == 50
    assert float(payload["eta"]) == pytest.approx(4.823910, abs=5e-7)


def test_estimate_transform_square(tmp_path, capsys):
    path = tmp_path / "ray.txt"
    values = [1.5, 2.0, 0.5, 1.0]
    path.write_text("".join(f"{v}\n" for v in values))
    assert main(["estimate", str(path), "--alpha", "0.9", "--transform", "square"]) == 0
    pairs = _parse_kv(capsys.readouterr().out)
    sigma = sum(v * v for v in values)
    assert float(pairs["sigma"]) == pytest.approx(sigma, rel=1e-9)
    want = math.sqrt(z.psi_bayes(4, 0.9).value * sigma)
    assert float(pairs["eta"]) == pytest.approx(want, rel=1e-9)


def test_estimate_bad_line(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text("1.0\nbogus\n2.0\n")
    assert main(["estimate", str(path), "--alpha", "0.9"]) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "bogus" in err


def test_estimate_empty_file(tmp_path, capsys):
    path = tmp_path / "empty.txt"
    path.write_text("")
    assert main(["estimate", str(path), "--alpha", "0.9"]) == 2
    assert "no data" in capsys.readouterr().err


def test_estimate_alpha_out_of_range(ones_file, capsys):
    assert main(["estimate", ones_file, "--alpha", "1.5"]) == 2
    assert "alpha" in capsys.readouterr().err


def test_exceedance_csv(tmp_path, capsys):
    out = tmp_path / "pmf.csv"
    code = main(
        ["exceedance", "--n", "50", "--N", "100", "--alpha", "0.99", "--out", str(out)]
    )
    assert code == 0
    pmf = z.ExceedancePmf.from_csv(out)
    assert pmf.mean() == pytest.approx(1.0, abs=1e-6)
    assert pmf.params["psi_method"] == "bayes"
    # byte-identical to the library serialization
    lib = tmp_path / "lib.csv"
    z.beg_pmf(50, 100, z.psi_bayes(50, 0.99)).to_csv(lib)
    assert out.read_bytes() == lib.read_bytes()


def test_exceedance_stdout(capsys):
    assert main(["exceedance", "--n", "5", "--N", "10", "--alpha", "0.9"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("k,probability\n")
    assert "# params:" in out


def test_exceedance_gvs(tmp_path):
    out = tmp_path / "gvs.csv"
    assert main(["exceedance", "--gvs", "1", "--n", "100", "--N", "100", "--out", str(out)]) == 0
    pmf = z.ExceedancePmf.from_csv(out)
    assert pmf.mean() == pytest.approx(100 / 101, abs=1e-9)
    assert pmf.params["family"] == "gvs"


def test_exceedance_rejects_zero_N(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["exceedance", "--n", "5", "--N", "0"])
    assert exc.value.code == 2


def test_pot_fixture(capsys, tmp_path):
    out = tmp_path / "uncond.csv"
    code = main(
        ["pot", FIXTURE, "--ntail", "50", "--alpha", "0.99", "--N", "100", "--out", str(out)]
    )
    assert code == 0
    pairs = _parse_kv(capsys.readouterr().out)
    series = z.PotSeries.from_csv(FIXTURE, 50)
    psi = z.psi_pot_bayes(50, 50, 0.99)
    assert pairs["u"] == f"{series.threshold:.9g}"
    assert pairs["xi_hat"] == f"{series.hill_estimate():.9g}"
    assert pairs["psi"] == f"{psi.value:.9g}"
    assert pairs["eta"] == f"{z.pot_quantile(series, psi):.9g}"
    pmf = z.ExceedancePmf.from_csv(out)
    assert pmf.mean() == pytest.approx(1.0, abs=1e-6)


def test_pot_ntail_too_large(capsys):
    assert main(["pot", FIXTURE, "--ntail", "5000"]) == 2
    assert "observations" in capsys.readouterr().err


def test_reproduce_figure1(tmp_path):
    outdir = tmp_path / "repro"
    assert main(["reproduce", "--figure", "1", "--quick", "--outdir", str(outdir)]) == 0
    lines = (outdir / "fig1.csv").read_text().strip().splitlines()
    assert lines[0].startswith("alpha,n,N,estimator")
    assert len(lines) > 10
    meta = json.loads((outdir / "fig1.json").read_text())["meta"]
    assert meta["replications"] == 1000


def test_reproduce_unknown_figure(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["reproduce", "--figure", "3"])
    assert exc.value.code == 2
    assert "table1" in capsys.readouterr().err  # usage lists the valid ids


def test_reproduce_seed_env(tmp_path, monkeypatch):
    a = tmp_path / "a"
    b = tmp_path / "b"
    monkeypatch.setenv("ZCEQUANT_SEED", "4242")
    assert main(["reproduce", "--figure", "1", "--quick", "--outdir", str(a)]) == 0
    assert main(["reproduce", "--figure", "1", "--quick", "--outdir", str(b)]) == 0
    assert (a / "fig1.csv").read_bytes() == (b / "fig1.csv").read_bytes()
    meta = json.loads((a / "fig1.json").read_text())["meta"]
    assert meta["seed"] == 4242


def test_simulate_config(tmp_path):
    config = tmp_path / "exp.ini"
    config.write_text(
        "[smoke]\nkind = coverage_vs_n\nreplications = 100\nalphas = 0.99\nn_grid = 10\nN = 0\n"
    )
    outdir = tmp_path / "out"
    assert main(["simulate", str(config), "--outdir", str(outdir)]) == 0
    assert (outdir / "smoke.csv").exists()
    assert (outdir / "smoke.json").exists()


def test_simulate_missing_section(tmp_path, capsys):
    config = tmp_path / "exp.ini"
    config.write_text("[smoke]\nkind = coverage_vs_n\n")
    assert main(["simulate", str(config), "--section", "nope"]) == 2
    assert "nope" in capsys.readouterr().err


def test_missing_file_is_an_error(capsys):
    assert main(["estimate", "/nonexistent/file.txt", "--alpha", "0.9"]) == 2
    assert capsys.readouterr().err.startswith("error:")
