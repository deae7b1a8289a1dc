import csv
import json

import numpy as np
import pytest

from fatiguefit import ModelSpec
from fatiguefit.cli import main
from fatiguefit.core import write_dataset

import synth


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(2)
    data = synth.simulate(ModelSpec("I", "a"), synth.IA_TRUE, 150, rng, ceiling=2e6,
                          groups=rng.choice(["s1", "s2"], 150).tolist())
    write_dataset(data, d / "data.csv")
    no_ratio = synth.simulate(ModelSpec("I", "a", "identity"), synth.IA_TRUE, 60, rng, ceiling=2e6)
    write_dataset(no_ratio, d / "seq.csv")
    return d


FAST = ["--n-starts", "3"]


def run(*args):
    return main([str(a) for a in args])


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def fits(workdir):
    out = {}
    for model in ("Ia", "IIIa", "Ib"):
        p = workdir / f"{model}.json"
        assert run("fit", "--data", workdir / "data.csv", "--model", model, *FAST, "--out", p) == 0
        out[model] = p
    return out


def test_fit_is_byte_reproducible(workdir, fits):
    again = workdir / "Ia_again.json"
    assert run("fit", "--data", workdir / "data.csv", "--model", "Ia", *FAST, "--out", again) == 0
    assert again.read_bytes() == fits["Ia"].read_bytes()
    doc = json.loads(again.read_text())
    assert doc["k"] == 5 and doc["m"] == 150 and doc["data_hash"]


def test_fit_writes_manifest(fits):
    man = json.loads(fits["Ia"].with_name("Ia.json.manifest.json").read_text())
    assert man["command"] == "fit"
    assert man["dataset"]["sha256"]
    assert man["outputs"][0]["path"] == str(fits["Ia"])
    assert man["spec"]["transform"] == "walker" and man["seed"] == 0


def test_rerun_reproduces_outputs(fits):
    assert run("rerun", fits["Ia"].with_name("Ia.json.manifest.json")) == 0


def test_rerun_detects_changed_output(workdir):
    p = workdir / "tampered.json"
    assert run("fit", "--data", workdir / "data.csv", "--model", "Ia", *FAST, "--out", p) == 0
    man = json.loads(p.with_name("tampered.json.manifest.json").read_text())
    man["outputs"][0]["sha256"] = "0" * 64
    mp = workdir / "tampered.manifest.json"
    mp.write_text(json.dumps(man))
    assert run("rerun", mp) == 5


def test_identity_on_ratio_data_is_a_data_error(workdir, capsys):
    code = run("fit", "--data", workdir / "data.csv", "--model", "Ia", "--stress", "identity", *FAST,
               "--out", workdir / "x.json")
    assert code == 3
    assert "row 1" in capsys.readouterr().err


def test_identity_with_direct_stress(workdir):
    out = workdir / "seq.json"
    assert run("fit", "--data", workdir / "seq.csv", "--model", "IIIa", "--stress", "identity", *FAST, "--out", out) == 0
    assert json.loads(out.read_text())["k"] == 4


def test_compare_ranks_by_aic(workdir, fits):
    out = workdir / "rank.csv"
    assert run("compare", *fits.values(), "--out", out) == 0
    r = rows(out)
    assert [int(x["rank"]) for x in r] == [1, 2, 3]
    aic = [float(x["aic"]) for x in r]
    assert aic == sorted(aic)


def test_compare_needs_two_fits(workdir, fits):
    assert run("compare", fits["Ia"], "--out", workdir / "r.csv") == 2


def test_compare_rejects_mixed_datasets(workdir, fits):
    assert run("compare", fits["Ia"], workdir / "seq.json", "--out", workdir / "r.csv") == 3


def test_profile_grid_rows(workdir, fits):
    a3 = json.loads(fits["Ia"].read_text())["params"]["A3"]
    out = workdir / "prof.csv"
    grid = f"{a3 - 4}:{a3 + 1}:200"
    assert run("profile", "--data", workdir / "data.csv", "--model", "Ia", *FAST,
               "--grid", grid, "--out", out) == 0
    r = rows(out)
    assert len(r) == 200
    rel = np.array([float(x["relative_likelihood"]) for x in r])
    ok = np.array([x["feasible"] == "1" for x in r])
    assert rel[ok].max() == pytest.approx(1.0, abs=1e-3)
    assert json.loads(out.with_suffix(".json").read_text())["mle_A3"] == pytest.approx(a3)


def test_profile_rejects_other_parameters(workdir):
    assert run("profile", "--data", workdir / "data.csv", "--model", "Ia", "--param", "q", "--out", workdir / "p.csv") == 2


def test_bootstrap_interval_table(workdir):
    out = workdir / "boot.csv"
    assert run("bootstrap", "--data", workdir / "data.csv", "--model", "Ia", *FAST, "--reps", "100",
               "--level", "0.9", "--stratify-by", "group", "--out", out) == 0
    r = rows(out)
    assert [x["param"] for x in r] == ["A1", "A2", "A3", "q", "tau_or_alpha"]
    assert all(float(x["lo"]) <= float(x["estimate"]) <= float(x["hi"]) for x in r)


def test_curves_output(workdir, fits):
    out = workdir / "curves.csv"
    assert run("curves", "--fit", fits["IIIa"], "--grid", "20:100:50", "--out", out) == 0
    r = rows(out)
    assert len(r) == 50
    assert list(r[0]) == ["s_eq", "cycles_p05", "cycles_p50", "cycles_p95", "infinite_life"]


def test_survival_fully_reversed_signed_walker(workdir, fits):
    fit_path = workdir / "sw.json"
    assert run("fit", "--data", workdir / "data.csv", "--model", "Ia", "--stress", "swalker", *FAST, "--out", fit_path) == 0
    out = workdir / "surv.csv"
    assert run("survival", "--fit", fit_path, "--smax", "30", "--ratio", "-1", "--out", out) == 0
    surv = [float(x["survival"]) for x in rows(out)]
    assert len(surv) == 200 and all(a >= b for a, b in zip(surv, surv[1:]))
    man = json.loads(out.with_name("surv.csv.manifest.json").read_text())
    assert man["command"] == "survival"


def test_survival_prints_equivalent_stress(workdir, capsys):
    fit_path = workdir / "sw.json"
    if not fit_path.exists():
        pytest.skip("depends on the signed-Walker fit above")
    assert run("survival", "--fit", fit_path, "--smax", "30", "--ratio", "-1", "--out", workdir / "s2.csv") == 0
    assert "equivalent stress 30" in capsys.readouterr().out


def test_pplot(workdir):
    out = workdir / "pp.csv"
    assert run("pplot", "--data", workdir / "data.csv", "--family", "bs", "--transform", "log", "--out", out) == 0
    assert list(rows(out)[0]) == ["position", "empirical", "fitted"]


@pytest.mark.parametrize(
    "argv,code",
    [
        (["fit", "--data", "missing.csv", "--model", "Ia", "--out", "x.json"], 3),
        (["fit", "--data", "d.csv", "--model", "IVa", "--out", "x.json"], 2),
        (["fit", "--data", "d.csv", "--model", "Ia", "--stress", "goodman", "--out", "x.json"], 2),
        (["survival", "--fit", "missing.json", "--smax", "3", "--ratio", "0", "--out", "y.csv"], 3),
        (["nonsense"], 2),
    ],
)
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_column_mapping(workdir, tmp_path):
    src = (workdir / "data.csv").read_text().splitlines()
    src[0] = src[0].replace("cycles", "N").replace("runout", "censored")
    p = tmp_path / "renamed.csv"
    p.write_text("\n".join(src) + "\n")
    out = tmp_path / "f.json"
    assert run("fit", "--data", p, "--column", "cycles=N", "--column", "runout=censored", "--model", "Ia", *FAST,
               "--out", out) == 0
