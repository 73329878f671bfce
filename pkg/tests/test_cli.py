import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import make_dataset
from oracles import ols
from tobit_additive.cli import load_model, main, read_table, save_model
from tobit_additive.estimator import fit, predict
from tobit_additive.likelihood import CensoredDataset
from tobit_additive.simulation import Scenario, simulate_replicate
from tobit_additive.splines import SplineSpec, build_design, component_curve


def write_data(path, data, names=("x1", "x2")):
    lines = [",".join([*names, "y"])]
    lines += [",".join(repr(float(v)) for v in (*row, y)) for row, y in zip(data.x, data.y)]
    path.write_text("\n".join(lines) + "\n")
    return path


def without_comments(path):
    return "".join(ln for ln in path.read_text().splitlines(keepends=True) if not ln.startswith("#"))


@pytest.fixture
def uncensored_csv(tmp_path):
    data = make_dataset(2, cen=0.0)
    shifted = CensoredDataset.from_observed(data.x, data.y - data.c, 0.0)
    return write_data(tmp_path / "d.csv", shifted), shifted


class TestFit:
    def test_sigma_matches_least_squares(self, tmp_path, uncensored_csv, capsys):
        path, data = uncensored_csv
        out = tmp_path / "m.json"
        assert main(["fit", "--data", str(path), "--limit", "0", "--kappa", "5", "--out", str(out)]) == 0
        _, rss = ols(build_design(data, SplineSpec(3, 1)).values, data.y)
        model, names = load_model(out)
        assert names == ["x1", "x2"]
        assert model.sigma == pytest.approx(np.sqrt(rss / data.n), rel=1e-6)
        assert "sigma" in capsys.readouterr().out
        doc = json.loads(out.read_text())
        assert doc["schema_version"] == 1 and "seed" in doc["provenance"]

    def test_missing_response(self, tmp_path, uncensored_csv, capsys):
        path, _ = uncensored_csv
        code = main(["fit", "--data", str(path), "--limit", "0", "--response", "dose", "--out", str(tmp_path / "m.json")])
        assert code == 2
        assert "dose" in capsys.readouterr().err

    def test_kappa_cv(self, tmp_path, capsys):
        path = write_data(tmp_path / "d.csv", make_dataset(3, n=160))
        out = tmp_path / "m.json"
        assert main(["fit", "--data", str(path), "--limit", repr(make_dataset(3, n=160).c), "--kappa", "cv", "--out", str(out)]) == 0
        text = capsys.readouterr().out
        assert "chosen kappa" in text
        chosen = int(text.split("chosen kappa = ")[1].split()[0])
        assert load_model(out)[0].kappa == chosen

    def test_all_censored(self, tmp_path, capsys):
        data = CensoredDataset.from_observed(np.random.default_rng(0).uniform(size=(40, 2)), np.zeros(40), 0.0)
        path = write_data(tmp_path / "d.csv", data)
        assert main(["fit", "--data", str(path), "--limit", "0", "--out", str(tmp_path / "m.json")]) == 3
        assert "DegenerateData" in capsys.readouterr().err

    @pytest.mark.parametrize(
        "text",
        ["x1,x2,y\n0.1,0.2\n", "x1,x2,y\n0.1,abc,1.0\n", "x1,x1,y\n0.1,0.2,1\n", "", "x1,x2,y\n0.1,0.2,-3\n"],
    )
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "bad.csv"
        path.write_text(text)
        assert main(["fit", "--data", str(path), "--limit", "0", "--out", str(tmp_path / "m.json")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"), "--limit", "0", "--out", str(tmp_path / "m.json")]) == 2

    def test_bad_kappa(self, tmp_path, uncensored_csv):
        path, _ = uncensored_csv
        for kappa in ("abc", "2"):
            assert main(["fit", "--data", str(path), "--limit", "0", "--kappa", kappa, "--out", str(tmp_path / "m.json")]) == 2


class TestCv:
    def test_prints_scores(self, tmp_path, capsys):
        data = make_dataset(5, n=160)
        path = write_data(tmp_path / "d.csv", data)
        assert main(["cv", "--data", str(path), "--limit", repr(data.c), "--grid", "4,5", "--seed", "1"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "kappa,score" and lines[1].startswith("4,") and lines[2].startswith("5,")


class TestPredict:
    def test_exact_fit_reproduces_training(self, tmp_path):
        x = np.random.default_rng(0).uniform(size=(30, 1))
        y = 1 + x[:, 0] - 2 * x[:, 0] ** 3
        path = write_data(tmp_path / "d.csv", CensoredDataset.from_observed(x, y, -10.0), names=("x1",))
        model_path, out = tmp_path / "m.json", tmp_path / "p.csv"
        assert main(["fit", "--data", str(path), "--limit", "-10", "--kappa", "4", "--out", str(model_path)]) == 0
        assert main(["predict", "--model", str(model_path), "--data", str(path), "--out", str(out)]) == 0
        header, rows = read_table(out)
        assert header == ["x1", "y", "yhat_latent"]
        yhat = np.array([float(r[-1]) for r in rows])
        assert np.max(np.abs(yhat - y)) <= 1e-6

    def test_empty_input(self, tmp_path, uncensored_csv):
        path, _ = uncensored_csv
        model_path, out = tmp_path / "m.json", tmp_path / "p.csv"
        main(["fit", "--data", str(path), "--limit", "0", "--out", str(model_path)])
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        assert main(["predict", "--model", str(model_path), "--data", str(empty), "--out", str(out)]) == 0
        assert without_comments(out) == "x1,x2,yhat_latent\n"

    def test_round_trip_bitwise(self, tmp_path, dataset):
        model = fit(dataset)
        save_model(tmp_path / "m.json", model, ["x1", "x2"], "y")
        loaded, _ = load_model(tmp_path / "m.json")
        x = np.random.default_rng(1).uniform(-0.2, 1.2, size=(100, 2))
        assert np.array_equal(predict(loaded, x), predict(model, x))
        assert loaded.loglik == model.loglik and loaded.sigma == model.sigma

    def test_column_mismatch(self, tmp_path, uncensored_csv):
        path, _ = uncensored_csv
        model_path = tmp_path / "m.json"
        main(["fit", "--data", str(path), "--limit", "0", "--out", str(model_path)])
        other = tmp_path / "o.csv"
        other.write_text("a,b\n1,2\n")
        assert main(["predict", "--model", str(model_path), "--data", str(other), "--out", str(tmp_path / "p.csv")]) == 2

    def test_bad_model_file(self, tmp_path, uncensored_csv):
        path, _ = uncensored_csv
        bad = tmp_path / "m.json"
        bad.write_text("{not json")
        assert main(["predict", "--model", str(bad), "--data", str(path), "--out", str(tmp_path / "p.csv")]) == 2


class TestSimulate:
    def run(self, outdir, *extra):
        return main(["simulate", "--n", "80", "--cen", "0.15", "--reps", "4", "--seed", "7", "--outdir", str(outdir), *extra])

    def test_outputs(self, tmp_path, capsys):
        assert self.run(tmp_path) == 0
        header, rows = read_table(tmp_path / "imse.csv")
        assert header == ["method", "component", "imse", "imse_x1e4"]
        assert [r[:2] for r in rows] == [["tobit-additive", "m1"], ["tobit-additive", "m2"],
                                         ["naive-spline-ols", "m1"], ["naive-spline-ols", "m2"]]
        header, rows = read_table(tmp_path / "bands.csv")
        assert header == ["component", "grid_x", "truth", "median", "q025", "q975"] and len(rows) == 100
        assert (tmp_path / "bands_naive-spline-ols.csv").exists()
        assert "1e4*IMSE(m1)" in capsys.readouterr().out

    def test_single_replicate_median(self, tmp_path):
        assert main(["simulate", "--n", "80", "--cen", "0.05", "--reps", "1", "--methods", "tobit", "--outdir", str(tmp_path)]) == 0
        _, rows = read_table(tmp_path / "bands.csv")
        scenario = Scenario(n=80, cen=0.05, replicates=1)
        model = fit(simulate_replicate(scenario, 0))
        for j in range(2):
            median = np.array([float(r[3]) for r in rows if r[0] == f"m{j + 1}"])
            assert np.array_equal(median, component_curve(model, j, scenario.grid))

    def test_byte_identical(self, tmp_path):
        names = ("imse.csv", "bands.csv", "bands_naive-spline-ols.csv")

        def snapshot(*extra):
            self.run(tmp_path, *extra)
            return {name: (tmp_path / name).read_bytes() for name in names}

        serial = snapshot()
        assert snapshot() == serial
        parallel = snapshot("--workers", "2")
        assert snapshot("--workers", "2") == parallel
        # Only the provenance line, which records the flags, may differ.
        for name in names:
            strip = lambda b: b.split(b"\n", 1)[1]
            assert strip(serial[name]) == strip(parallel[name])

    @pytest.mark.parametrize("extra", [["--methods", "np"], ["--cen", "1.5"]])
    def test_bad_flags(self, tmp_path, extra):
        assert self.run(tmp_path, *extra) == 2

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "tobit_additive", "--version"], capture_output=True, text=True)
        assert proc.returncode == 0 and "tobit-additive" in proc.stdout
