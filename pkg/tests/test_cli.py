import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gnsspdop.cli import main
from gnsspdop.constellation import load_scenario
from gnsspdop.covmodel import scaled_identity

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def sc(name):
    return str(SCENARIOS / name)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestDop:

    def test_orthogonal(self, capsys, tmp_path):
        out = tmp_path / "r.csv"
        assert main(["dop", "--scenario", sc("orthogonal.json"), "--out", str(out)]) == 0
        assert "PDOP           1.7320508" in capsys.readouterr().out
        row, = read_csv(out)
        assert float(row["pdop"]) == pytest.approx(3 ** 0.5, rel=1e-12)
        meta = json.loads((tmp_path / "r.csv.meta.json").read_text())
        assert meta["schema_version"] == 1 and meta["command"] == "dop"

    def test_two_satellites(self, capsys):
        assert main(["dop", "--scenario", sc("two_satellites.json")]) == 3
        assert "InsufficientSatellites" in capsys.readouterr().err

    def test_gamma_override(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["dop", "--scenario", sc("canonical_mc.json"), "--set", "gamma=1", "--out", str(a)])
        main(["dop", "--scenario", sc("canonical_mc.json"), "--set", "gamma=100", "--out", str(b)])
        ra, = read_csv(a)
        rb, = read_csv(b)
        assert ra["pdop"] == rb["pdop"]
        assert float(rb["rms"]) == pytest.approx(10 * float(ra["rms"]), rel=1e-12)

    def test_structured(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["dop", "--scenario", sc("walker24.json"), "--format", "structured", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["rows"][0]["S"] == 8 and doc["tool"] == "gnsspdop"
        assert doc["rows"][0]["hdop"] > 0

    def test_missing_file(self, capsys):
        assert main(["dop", "--scenario", "does/not/exist.json"]) == 2
        assert "ParseError" in capsys.readouterr().err


class TestMismatch:

    def test_matched(self, capsys):
        assert main(["mismatch", "--scenario", sc("scintillation_weighted.json")]) == 0
        assert "optimism_ratio = 1.0000000" in capsys.readouterr().out

    def test_naive(self, tmp_path):
        out = tmp_path / "m.csv"
        assert main(["mismatch", "--scenario", sc("scintillation_mismatch.json"), "--out", str(out)]) == 0
        row, = read_csv(out)
        assert float(row["optimism_ratio"]) > 1
        assert float(row["expected_sq_error"]) == pytest.approx(
            float(row["optimism_ratio"]) * float(row["pdop_predicted_sq_error"]), rel=1e-12)

    def test_not_psd(self, capsys):
        assert main(["mismatch", "--scenario", sc("invalid/NotPsd__true_model.json")]) == 2
        assert "NotPsd" in capsys.readouterr().err

    def test_missing_true_model(self, capsys):
        assert main(["mismatch", "--scenario", sc("orthogonal.json")]) == 2
        assert "true_error_model" in capsys.readouterr().err


class TestMc:

    def test_pass(self, capsys):
        assert main(["mc", "--scenario", sc("canonical_mc.json"), "--seed", "42", "--samples", "100000"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_byte_identical(self, tmp_path):
        files = []
        for i, workers in enumerate(("1", "1", "3")):
            out = tmp_path / f"r{i}.csv"
            main(["mc", "--scenario", sc("canonical_mc.json"), "--out", str(out), "--workers", workers])
            files.append(out.read_bytes() + (tmp_path / f"r{i}.csv.meta.json").read_bytes())
        assert files[0] == files[1] == files[2]

    def test_failure_exit(self, capsys):
        code = main(["mc", "--scenario", sc("canonical_mc.json"), "--samples", "20000", "--analytic-target", "5.0"])
        assert code == 4
        assert "FAIL" in capsys.readouterr().out

    def test_needs_mc_settings(self, capsys):
        assert main(["mc", "--scenario", sc("orthogonal.json")]) == 2
        assert main(["mc", "--scenario", sc("orthogonal.json"), "--samples", "1000"]) == 0


class TestSweep:

    def test_mask_sweep_walker(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--scenario", sc("walker24.json"), "--sweep", "mask_elevation=5,15,25,35",
                     "--out", str(out)]) == 0
        rows = read_csv(out)
        assert [r["sweep_value"] for r in rows] == ["5", "15", "25", "35"]
        pdops = [float(r["pdop"]) for r in rows]
        assert all(a <= b + 1e-12 for a, b in zip(pdops, pdops[1:]))
        for r in rows:
            A = load_scenario(sc("walker24.json"), [f"mask_elevation={r['sweep_value']}"]).design_matrix()
            direct = np.sqrt(np.trace(np.linalg.inv(A.matrix.T @ A.matrix)))
            assert float(r["pdop"]) == pytest.approx(direct, rel=1e-12)

    def test_gamma_sweep(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "--scenario", sc("walker24.json"), "--sweep", "gamma=0.5,2,8", "--out", str(out)])
        assert len({r["pdop"] for r in read_csv(out)}) == 1

    def test_empty(self):
        assert main(["sweep", "--scenario", sc("walker24.json"), "--sweep", "gamma="]) == 2

    def test_failing_point_continues(self, tmp_path):
        out = tmp_path / "s.csv"
        assert main(["sweep", "--scenario", sc("walker24.json"), "--sweep", "mask_elevation=5,80",
                     "--out", str(out)]) == 0
        ok, bad = read_csv(out)
        assert ok["error"] == "" and bad["error"].startswith("InsufficientSatellites")

    def test_mc_analysis(self, tmp_path):
        out = tmp_path / "s.csv"
        main(["sweep", "--scenario", sc("canonical_mc.json"), "--sweep", "seed=1,2", "--samples", "2000",
              "--analysis", "mc", "--out", str(out)])
        rows = read_csv(out)
        assert [r["seed"] for r in rows] == ["1", "2"]


class TestValidate:

    def test_shipped_valid(self, capsys):
        args = ["validate"]
        for p in sorted(SCENARIOS.glob("*.json")):
            args += ["--scenario", str(p)]
        assert main(args) == 0

    @pytest.mark.parametrize("path", sorted((SCENARIOS / "invalid").glob("*.json")), ids=lambda p: p.name)
    def test_shipped_invalid(self, path, capsys):
        assert main(["validate", "--scenario", str(path)]) == 2
        assert f"FAIL  {path}  {path.stem.split('__')[0]}:" in capsys.readouterr().out
