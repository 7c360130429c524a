import json
import subprocess
import sys

import numpy as np
import pytest

from blockclust.cli import EXIT_CONFIG, EXIT_PARSE, main
from blockclust.exceptions import ConfigurationError, ParseError
from blockclust.io import DataMatrix, difference_series, load_matrix, save_matrix
from blockclust.numerics import make_rng
from blockclust.simulation import PRESETS, SimConfig, generate_dataset, generate_signal


def _write(path, text):
    path.write_text(text)
    return str(path)


class TestLoad:
    def test_small_csv(self, tmp_path):
        d = load_matrix(_write(tmp_path / "a.csv", "1,2,3\n4,5,6\n"))
        assert (d.n, d.p) == (2, 3)
        assert d.values.tolist() == [[1, 2, 3], [4, 5, 6]]

    def test_na_rejected_with_location(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1,NA,3\n4,5,6\n")
        with pytest.raises(ParseError, match=r"row 1, col 2"):
            load_matrix(path)

    def test_nan_policies(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1,NA\n3,4\n5,8\n")
        assert load_matrix(path, nan_policy="zero").values[0, 1] == 0.0
        assert load_matrix(path, nan_policy="column-mean").values[0, 1] == 6.0

    def test_ragged(self, tmp_path):
        with pytest.raises(ParseError, match="row 2"):
            load_matrix(_write(tmp_path / "a.csv", "1,2\n3\n"))

    def test_non_numeric(self, tmp_path):
        with pytest.raises(ParseError, match=r"row 2, col 1"):
            load_matrix(_write(tmp_path / "a.csv", "1,2\nx,3\n"))

    def test_grid_mismatch(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_matrix(_write(tmp_path / "a.csv", "1,2,3\n"), grid_shape=(2, 2))

    @pytest.mark.parametrize("suffix", [".bin", ".csv"])
    def test_round_trip_bit_identical(self, tmp_path, suffix):
        X = make_rng(0).standard_normal((7, 12)) * 10.0 ** make_rng(1).integers(-300, 300, (7, 12))
        path = str(tmp_path / f"x{suffix}")
        save_matrix(DataMatrix(X, (3, 4)), path)
        back = load_matrix(path)
        assert back.values.tobytes() == X.tobytes()
        if suffix == ".bin":
            assert back.grid_shape == (3, 4)

    def test_truncated_binary(self, tmp_path):
        path = str(tmp_path / "x.bin")
        save_matrix(np.ones((3, 3)), path)
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:-8])
        with pytest.raises(ParseError):
            load_matrix(path)


class TestDifference:
    def test_constant_panel(self):
        assert not difference_series(np.ones((5, 4))).values.any()

    def test_three_rows(self):
        a, b, c = np.arange(3.0), np.arange(3.0) ** 2, np.full(3, 7.0)
        out = difference_series(np.vstack([a, b, c])).values
        assert np.array_equal(out, np.vstack([b - a, c - b]))

    def test_yearly_panel_length(self):
        out = difference_series(DataMatrix(np.zeros((75, 6)), (2, 3)))
        assert out.n == 74 and out.grid_shape == (2, 3)

    def test_too_short(self):
        with pytest.raises(ConfigurationError):
            difference_series(np.ones((1, 3)))


@pytest.fixture(scope="module")
def dense_csv(tmp_path_factory):
    cfg = SimConfig(**PRESETS["dense"])
    truth = generate_signal(cfg, make_rng(0, 0))
    X, lab = generate_dataset(truth, cfg.n, 0.5, make_rng(0, 1))
    d = tmp_path_factory.mktemp("data")
    path = d / "dense.csv"
    save_matrix(X, str(path))
    (d / "labels.json").write_text(json.dumps([int(v) for v in lab]))
    return path, d / "labels.json", lab


class TestCli:
    def test_cluster_ma(self, dense_csv, tmp_path, capsys):
        path, _, lab = dense_csv
        out = tmp_path / "res.json"
        sig = tmp_path / "sig.txt"
        rc = main(["cluster", str(path), "--grid", "50", "50", "--method", "ma", "--h3", "7",
                   "--h1", "7", "-o", str(out), "--signals", str(sig)])
        assert rc == 0
        res = json.loads(out.read_text())
        assert res["schema_version"] == 1
        assert len(res["labels"]) == len(lab) and res["blocks"]
        idx = [int(v) for v in sig.read_text().split()]
        assert idx == res["signals"] and idx == sorted(idx) and min(idx) >= 1

    def test_cluster_is_reproducible(self, dense_csv, tmp_path):
        path = dense_csv[0]
        outs = []
        for k in range(2):
            o = tmp_path / f"r{k}.json"
            main(["cluster", str(path), "--grid", "50", "50", "--method", "ma", "--h3", "7",
                  "--h1", "7", "-o", str(o)])
            outs.append(o.read_bytes())
        assert outs[0] == outs[1]

    def test_cfa_fallback_is_recorded(self, tmp_path):
        X = make_rng(3).standard_normal((30, 60))
        path = str(tmp_path / "noise.csv")
        save_matrix(X, path)
        out = tmp_path / "r.json"
        assert main(["cluster", path, "--method", "cfa", "--h1", "3", "--h2", "6",
                     "-o", str(out)]) == 0
        res = json.loads(out.read_text())
        assert res["fallback"] == "ma_pca"
        assert "no features selected" in res["note"]

    def test_recover(self, dense_csv, tmp_path):
        path, labels, _ = dense_csv
        out = tmp_path / "rec.json"
        assert main(["recover", str(path), "--grid", "50", "50", "--labels", str(labels),
                     "--h1", "7", "-o", str(out)]) == 0
        assert json.loads(out.read_text())["blocks"]

    def test_parse_error_exit_code(self, tmp_path, capsys):
        path = _write(tmp_path / "bad.csv", "1,NA\n2,3\n")
        assert main(["cluster", path]) == EXIT_PARSE
        assert "row 1, col 2" in capsys.readouterr().err

    def test_config_error_exit_code(self, tmp_path):
        path = _write(tmp_path / "a.csv", "1,2,3\n4,5,6\n7,8,9\n")
        assert main(["cluster", path, "--grid", "2", "2"]) == EXIT_CONFIG

    def test_phase(self, tmp_path):
        out = tmp_path / "phase.csv"
        assert main(["phase", "--theta", "0.4", "--alpha", "0", "--beta-range", "0.1", "0.9", "3",
                     "--r-range", "0", "0.5", "2", "-o", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "beta,r,class_clu,class_sig" and len(lines) == 7

    def test_diff(self, tmp_path):
        src = _write(tmp_path / "p.csv", "1,2\n4,4\n5,9\n")
        out = tmp_path / "d.csv"
        assert main(["diff", src, "-o", str(out)]) == 0
        assert load_matrix(str(out)).values.tolist() == [[3, 2], [1, 5]]

    def test_tune(self, tmp_path, capsys):
        rng = make_rng(2)
        lab = rng.permutation(np.repeat([1, -1], 10))
        X = rng.standard_normal((20, 60))
        X[:, 20:26] += 1.5 * lab[:, None]
        path = str(tmp_path / "t.csv")
        save_matrix(X, path)
        (tmp_path / "lab.txt").write_text(" ".join(str(v) for v in lab))
        out = tmp_path / "tune.csv"
        assert main(["tune", path, "--h-max", "4", "--truth-labels", str(tmp_path / "lab.txt"),
                     "-o", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "h1,h3,s_hat,clu_loss,selected"
        assert len(rows) == 1 + 10 and sum(r.endswith(",1") for r in rows[1:]) == 1
        assert "selected h1=" in capsys.readouterr().err

    def test_simulate_requires_tau(self):
        assert main(["simulate", "--reps", "1"]) == EXIT_CONFIG

    def test_module_entry_point(self, tmp_path):
        out = tmp_path / "phase.csv"
        proc = subprocess.run(
            [sys.executable, "-m", "blockclust", "phase", "--theta", "0.4", "--alpha", "0.1",
             "--beta-range", "0.2", "0.4", "2", "--r-range", "0", "0.1", "2", "-o", str(out)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stderr
        assert out.exists()
