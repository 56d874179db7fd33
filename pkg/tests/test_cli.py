"""End-to-end tests for the specshift command-line runner."""

import json
import subprocess
import sys

import numpy as np
import pytest

from specshift import (DomainError, HermitianOperator, NonFinite,
                       get_function)
from specshift.cli import main
from specshift.serialize import matrix_from_json, matrix_to_json


def _write_cfg(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def _read_rows(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in lines[1:]]


class TestMatrixJson:
    def test_round_trip_real(self, rng):
        m = rng.uniform(-1, 1, (3, 3))
        op = HermitianOperator(m)
        back = matrix_from_json(matrix_to_json(op))
        assert np.array_equal(back.matrix, op.matrix)

    def test_round_trip_complex(self, rng):
        m = rng.uniform(-1, 1, (3, 3)) + 1j * rng.uniform(-1, 1, (3, 3))
        op = HermitianOperator(m)
        back = matrix_from_json(matrix_to_json(op))
        assert np.array_equal(back.matrix, op.matrix)

    def test_im_defaults_to_zero(self):
        op = matrix_from_json({"dim": 2, "re": [[1.0, 0.5], [0.5, 2.0]]})
        assert op.matrix.dtype == np.float64

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            matrix_from_json({"dim": 2, "re": [[0.0, 1.0], [0.0, 0.0]]})

    def test_rejects_nonfinite(self):
        with pytest.raises(NonFinite):
            matrix_from_json({"dim": 1, "re": [[None]]})

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DomainError):
            matrix_from_json({"dim": 3, "re": [[1.0]]})


class TestRatioSearchCommand:
    def test_identity_rows_are_one(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "experiment": "ratio-search",
            "function": {"id": "identity", "params": []},
            "dims": [1, 3],
            "grid": {"interval": [-1, 1], "count": 5},
            "budget": 2, "seed": 4, "output": str(out)})
        assert main(["ratio-search", cfg]) == 0
        header, rows = _read_rows(out)
        assert header == ["dim", "norm_kind", "budget", "seed", "best_ratio",
                          "witness_file"]
        assert len(rows) == 4
        assert all(float(r["best_ratio"]) == 1.0 for r in rows)

    def test_abs_scalar_row_and_nesting(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "abs", "params": []},
            "dims": [1, 8],
            "grid": {"interval": [-1, 1], "count": 9},
            "budget": 3, "seed": 3, "output": str(out)})
        assert main(["ratio-search", cfg]) == 0
        _, rows = _read_rows(out)
        by_key = {(r["dim"], r["norm_kind"]): float(r["best_ratio"]) for r in rows}
        # dim 1: the scalar quotient of abs is capped by 1 and attained
        assert by_key[("1", "schatten1")] == 1.0
        assert by_key[("1", "operator")] == 1.0
        # oracle: dim-8 search space contains every dim-1 witness
        assert by_key[("8", "schatten1")] >= 1.0

    def test_witness_files_round_trip(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "abs", "params": []},
            "dims": [2],
            "grid": {"interval": [-1, 1], "count": 5},
            "budget": 2, "seed": 9, "output": str(out)})
        assert main(["ratio-search", cfg]) == 0
        _, rows = _read_rows(out)
        for row in rows:
            doc = json.loads((tmp_path / row["witness_file"]).read_text())
            assert doc["function"] == {"id": "abs", "params": []}
            assert doc["norm_kind"] == row["norm_kind"]
            assert doc["value"] == float(row["best_ratio"])
            matrix_from_json(doc["A"])
            matrix_from_json(doc["B"])

    def test_config_errors_exit_2(self, tmp_path):
        bad = _write_cfg(tmp_path / "bad.json", {
            "function": {"id": "abs"}, "dims": [], "budget": 1, "seed": 0,
            "grid": {"interval": [-1, 1], "count": 5}, "output": "x.csv"})
        assert main(["ratio-search", bad]) == 2
        unknown = _write_cfg(tmp_path / "unknown.json", {
            "function": {"id": "nope"}, "dims": [1], "budget": 1, "seed": 0,
            "grid": {"interval": [-1, 1], "count": 5}, "output": "x.csv"})
        assert main(["ratio-search", unknown]) == 2
        assert main(["ratio-search", str(tmp_path / "missing.json")]) == 2

    def test_experiment_mismatch_exit_2(self, tmp_path):
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "experiment": "divergence",
            "function": {"id": "abs"}, "dims": [1],
            "grid": {"interval": [-1, 1], "count": 5},
            "budget": 1, "seed": 0, "output": "x.csv"})
        assert main(["ratio-search", cfg]) == 2


class TestDivergenceCommand:
    def _cfg(self, tmp_path, fid, levels, out_name="report.csv"):
        out = tmp_path / out_name
        return out, _write_cfg(tmp_path / f"{fid}_{out_name}.json", {
            "function": {"id": fid, "params": []},
            "K": levels, "delta0": 1.0, "budget": 3, "seed": 11, "dim": 2,
            "output": str(out)})

    def test_sqrt_abs_rows(self, tmp_path):
        out, cfg = self._cfg(tmp_path, "sqrt_abs", 10)
        assert main(["divergence", cfg]) == 0
        header, rows = _read_rows(out)
        assert header == ["n", "delta", "target_ratio", "achieved_ratio",
                          "multiplicity", "increment_s1",
                          "perturbation_partial_sum", "increment_partial_sum",
                          "status"]
        assert len(rows) == 10
        assert all(r["status"] == "ok" for r in rows)
        assert float(rows[-1]["increment_partial_sum"]) >= 5.0
        assert float(rows[-1]["perturbation_partial_sum"]) < 1.1

    def test_identity_truncates(self, tmp_path):
        out, cfg = self._cfg(tmp_path, "identity", 3)
        assert main(["divergence", cfg]) == 0
        _, rows = _read_rows(out)
        assert len(rows) == 1
        assert rows[0]["n"] == "1"
        assert rows[0]["status"] == "failed"

    def test_abs_records_achieved_values(self, tmp_path):
        out, cfg = self._cfg(tmp_path, "abs", 5)
        assert main(["divergence", cfg]) == 0
        _, rows = _read_rows(out)
        assert rows[-1]["status"] == "failed"
        for row in rows:
            float(row["achieved_ratio"])  # recorded, not asserted

    def test_family_sidecar_json(self, tmp_path):
        out, cfg = self._cfg(tmp_path, "sqrt_abs", 4)
        assert main(["divergence", cfg]) == 0
        doc = json.loads((tmp_path / "report_family.json").read_text())
        assert len(doc) == 4
        for entry in doc:
            assert entry["status"] == "ok"
            assert int(entry["multiplicity"]) >= 1
            matrix_from_json(entry["A"])

    def test_byte_identical_reruns(self, tmp_path):
        out, cfg = self._cfg(tmp_path, "sqrt_abs", 6)
        assert main(["divergence", cfg]) == 0
        first = out.read_bytes()
        assert main(["divergence", cfg]) == 0
        assert out.read_bytes() == first


class TestCommutingCommand:
    def test_sqrt_abs_all_levels_ok(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "sqrt_abs", "params": []},
            "K": 20, "search_grid": 801, "seed": 5, "output": str(out)})
        assert main(["commuting", cfg]) == 0
        _, rows = _read_rows(out)
        assert len(rows) == 20
        assert all(r["ok"] == "true" for r in rows)
        doc = json.loads((tmp_path / "report_witness.json").read_text())
        assert doc["status"] == "ok"
        assert len(doc["t"]) == 20
        assert all(int(n) >= 1 for n in doc["n"])

    def test_identity_not_found_exit_zero(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "identity", "params": []},
            "K": 4, "search_grid": 301, "seed": 5, "output": str(out)})
        assert main(["commuting", cfg]) == 0
        _, rows = _read_rows(out)
        assert rows == []
        doc = json.loads((tmp_path / "report_witness.json").read_text())
        assert doc["status"] == "not_found"
        assert doc["t"] == []
        assert doc["failed_level"] == 1

    def test_xsin_inv_not_found(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "xsin_inv", "params": []},
            "K": 30, "search_grid": 2001, "seed": 7, "output": str(out)})
        assert main(["commuting", cfg]) == 0
        doc = json.loads((tmp_path / "report_witness.json").read_text())
        assert doc["status"] == "not_found"


class TestVerifyCommand:
    def test_default_config_passes(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {"seed": 42, "output": str(out)})
        assert main(["verify", cfg]) == 0
        _, rows = _read_rows(out)
        assert rows and all(r["status"] == "pass" for r in rows)
        names = [r["check"] for r in rows]
        assert "loewner_identity_poly" in names
        poly_row = next(r for r in rows if r["check"] == "loewner_identity_poly")
        assert float(poly_row["residual"]) <= float(poly_row["tolerance"])

    def test_asymmetric_fixture_exits_3(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "seed": 1, "output": str(out),
            "matrices": [{"dim": 2, "re": [[0.0, 1.0], [0.0, 0.0]]}]})
        assert main(["verify", cfg]) == 3

    def test_nan_fixture_exits_3(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "seed": 1, "output": str(out),
            "matrices": [{"dim": 1, "re": [[None]]}]})
        assert main(["verify", cfg]) == 3

    def test_good_fixture_gets_a_row(self, tmp_path, rng):
        out = tmp_path / "report.csv"
        m = rng.uniform(-1, 1, (3, 3))
        doc = matrix_to_json(HermitianOperator(m))
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "seed": 7, "output": str(out), "matrices": [doc]})
        assert main(["verify", cfg]) == 0
        _, rows = _read_rows(out)
        assert any(r["check"] == "fixture_0_reconstruction" for r in rows)


class TestFlagsAndFormats:
    def test_seed_and_output_overrides(self, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "sqrt_abs", "params": []},
            "K": 3, "budget": 2, "seed": 1, "dim": 1, "output": str(out_a)})
        assert main(["divergence", cfg]) == 0
        assert main(["divergence", cfg, "--output", str(out_b), "--seed", "1"]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_json_format(self, tmp_path):
        out = tmp_path / "report.json"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "identity", "params": []},
            "dims": [1], "grid": {"interval": [-1, 1], "count": 3},
            "budget": 1, "seed": 0, "output": str(out), "format": "json"})
        assert main(["ratio-search", cfg]) == 0
        doc = json.loads(out.read_text())
        assert doc["columns"][0] == "dim"
        assert len(doc["rows"]) == 2

    def test_line_endings_are_unix(self, tmp_path):
        out = tmp_path / "report.csv"
        cfg = _write_cfg(tmp_path / "cfg.json", {
            "function": {"id": "identity", "params": []},
            "dims": [1], "grid": {"interval": [-1, 1], "count": 3},
            "budget": 1, "seed": 0, "output": str(out)})
        assert main(["ratio-search", cfg]) == 0
        raw = out.read_bytes()
        assert b"\r" not in raw
        assert raw.endswith(b"\n")


def test_module_entry_point(tmp_path):
    out = tmp_path / "report.csv"
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "function": {"id": "identity", "params": []},
        "dims": [1], "grid": {"interval": [-1, 1], "count": 3},
        "budget": 1, "seed": 0, "output": str(out)}))
    proc = subprocess.run(
        [sys.executable, "-m", "specshift", "ratio-search", str(cfg)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert out.exists()


def test_threads_env_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("SPECSHIFT_THREADS", "zero")
    out = tmp_path / "report.csv"
    cfg = _write_cfg(tmp_path / "cfg.json", {
        "function": {"id": "identity", "params": []},
        "dims": [1], "grid": {"interval": [-1, 1], "count": 3},
        "budget": 1, "seed": 0, "output": str(out)})
    assert main(["ratio-search", cfg]) == 2
