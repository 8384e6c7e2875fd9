import csv
import json

import numpy as np
import pytest

from setbayes.cli import main


SPEC = {
    "feature_names": ["x1", "x2"],
    "categories": [
        {"label": "near", "block": "low", "count": 30,
         "mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
        {"label": "mid", "block": "low", "count": 14,
         "mean": [2.0, 1.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
        {"label": "far", "block": "high", "count": 22,
         "mean": [5.0, 4.0], "cov": [[1.0, 0.3], [0.3, 1.0]]},
    ],
}


@pytest.fixture()
def workspace(tmp_path):
    spec = tmp_path / "gen.json"
    spec.write_text(json.dumps(SPEC))
    data = tmp_path / "data.csv"
    assert main(["synth", "--spec", str(spec), "--out", str(data), "--seed", "4"]) == 0
    model = tmp_path / "model.json"
    assert main(["fit", "--data", str(data), "--out", str(model),
                 "--draws", "80", "--seed", "2"]) == 0
    return tmp_path, spec, data, model


def read_csv_rows(path):
    with open(path, newline="") as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return list(csv.DictReader(lines))


class TestSynth:
    def test_deterministic_bytes(self, tmp_path):
        spec = tmp_path / "gen.json"
        spec.write_text(json.dumps(SPEC))
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["synth", "--spec", str(spec), "--out", str(a), "--seed", "4"])
        main(["synth", "--spec", str(spec), "--out", str(b), "--seed", "4"])
        assert a.read_bytes() == b.read_bytes()
        c = tmp_path / "c.csv"
        main(["synth", "--spec", str(spec), "--out", str(c), "--seed", "5"])
        assert a.read_bytes() != c.read_bytes()

    def test_bad_spec_exits_2(self, tmp_path):
        spec = tmp_path / "gen.json"
        spec.write_text('{"categories": "nope"}')
        out = tmp_path / "d.csv"
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 2
        spec.write_text("{invalid json")
        assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 2


class TestFit:
    def test_prints_category_table(self, workspace, capsys):
        tmp_path, spec, data, model = workspace
        main(["fit", "--data", str(data), "--out", str(model),
              "--draws", "80", "--seed", "2"])
        out = capsys.readouterr().out
        for label in ("near", "mid", "far"):
            assert label in out
        assert "30" in out

    def test_model_file_shape(self, workspace):
        _, _, _, model = workspace
        obj = json.loads(model.read_text())
        assert obj["format"] == "setbayes-model-file"
        assert obj["labels"] == ["near", "mid", "far"]
        assert obj["block_names"] == ["low", "high"]
        assert obj["counts"] == [30, 14, 22]

    def test_missing_file_exits_3(self, tmp_path):
        assert main(["fit", "--data", str(tmp_path / "nope.csv"),
                     "--out", str(tmp_path / "m.json")]) == 3


class TestClassify:
    def probes(self, tmp_path):
        f = tmp_path / "probe.csv"
        f.write_text("x1,x2\n0.0,0.1\n2.2,1.1\n4.8,4.0\n")
        return f

    def test_output_columns(self, workspace):
        tmp_path, _, _, model = workspace
        out = tmp_path / "sets.csv"
        rc = main(["classify", "--model", str(model), "--data", str(self.probes(tmp_path)),
                   "--reward", '{"kind": "proportion", "c": 0.3}', "--out", str(out)])
        assert rc == 0
        rows = read_csv_rows(out)
        assert len(rows) == 3
        for row in rows:
            total = sum(float(row[f"p_{s}"]) for s in ("near", "mid", "far"))
            assert total == pytest.approx(1.0, abs=1e-9)
            assert int(row["set_size"]) == len(row["set"].split(";"))
        # the far probe point should clearly classify as far
        assert rows[2]["set"] == "far"

    def test_oracle_column_matches_value(self, workspace):
        tmp_path, _, _, model = workspace
        out = tmp_path / "sets.csv"
        main(["classify", "--model", str(model), "--data", str(self.probes(tmp_path)),
              "--reward", '{"kind": "map"}', "--out", str(out), "--oracle"])
        for row in read_csv_rows(out):
            assert float(row["value"]) == pytest.approx(
                float(row["oracle_value"]), abs=1e-12
            )

    def test_reward_from_file(self, workspace):
        tmp_path, _, _, model = workspace
        rw = tmp_path / "reward.json"
        rw.write_text('{"kind": "composite", "a": 0.1, "b": 0.4}')
        out = tmp_path / "sets.csv"
        rc = main(["classify", "--model", str(model), "--data", str(self.probes(tmp_path)),
                   "--reward", f"@{rw}", "--out", str(out)])
        assert rc == 0
        # metadata embeds the parsed reward, never the file path
        first = out.read_text().splitlines()[0]
        assert str(rw) not in first
        assert '"kind": "composite"' in first

    def test_explicit_prior(self, workspace):
        tmp_path, _, _, model = workspace
        out = tmp_path / "sets.csv"
        rc = main(["classify", "--model", str(model), "--data", str(self.probes(tmp_path)),
                   "--reward", '{"kind": "map"}', "--prior", "[0.2, 0.3, 0.5]",
                   "--out", str(out)])
        assert rc == 0

    def test_error_exit_codes(self, workspace):
        tmp_path, _, _, model = workspace
        probe = self.probes(tmp_path)
        out = tmp_path / "sets.csv"
        base = ["classify", "--model", str(model), "--data", str(probe), "--out", str(out)]
        assert main(base + ["--reward", "{bad"]) == 2
        assert main(base + ["--reward", '{"kind": "nope"}']) == 2
        assert main(base + ["--reward", '{"kind": "map"}', "--prior", "[0.5, 0.5]"]) == 3
        bad_probe = tmp_path / "bad.csv"
        bad_probe.write_text("z1,z2\n0,0\n")
        assert main(["classify", "--model", str(model), "--data", str(bad_probe),
                     "--reward", '{"kind": "map"}', "--out", str(out)]) == 2

    def test_rejects_wrong_model_format(self, workspace):
        tmp_path, _, _, _ = workspace
        fake = tmp_path / "fake.json"
        fake.write_text('{"format": "other"}')
        out = tmp_path / "sets.csv"
        assert main(["classify", "--model", str(fake), "--data", str(self.probes(tmp_path)),
                     "--reward", '{"kind": "map"}', "--out", str(out)]) == 2


class TestTune:
    def tune_args(self, data, curve, selection, seed="3"):
        return ["tune", "--data", str(data), "--out-curve", str(curve),
                "--out-selection", str(selection), "--epsilon", "1.0",
                "--delta", "0.1", "--grid-lo", "0.1", "--grid-hi", "1.5",
                "--grid-step", "0.1", "--draws", "60", "--seed", seed]

    def test_outputs(self, workspace):
        tmp_path, _, data, _ = workspace
        curve = tmp_path / "curve.csv"
        selection = tmp_path / "sel.json"
        assert main(self.tune_args(data, curve, selection)) == 0
        rows = read_csv_rows(curve)
        assert len(rows) == 15
        assert list(rows[0].keys()) == ["b", "rate_R1", "rate_R2", "rate_R3", "rate_R4"]
        for row in rows:
            rates = [float(row[k]) for k in ("rate_R1", "rate_R2", "rate_R3", "rate_R4")]
            assert all(a <= b + 1e-12 for a, b in zip(rates, rates[1:]))
        sel = json.loads(selection.read_text())
        assert set(sel["selection"]["threshold"]) == {"R3", "R4"}
        assert set(sel["selection"]["minimize"]) == {"R1", "R2"}

    def test_rerun_into_fresh_directory_is_byte_identical(self, workspace):
        tmp_path, _, data, _ = workspace
        d1, d2 = tmp_path / "run1", tmp_path / "run2"
        d1.mkdir(), d2.mkdir()
        main(self.tune_args(data, d1 / "c.csv", d1 / "s.json"))
        main(self.tune_args(data, d2 / "c.csv", d2 / "s.json"))
        assert (d1 / "c.csv").read_bytes() == (d2 / "c.csv").read_bytes()
        assert (d1 / "s.json").read_bytes() == (d2 / "s.json").read_bytes()

    def test_tiny_category_exits_4(self, tmp_path):
        data = tmp_path / "tiny.csv"
        data.write_text("x,label\n0.0,a\n1.0,a\n0.5,b\n")
        assert main(self.tune_args(data, tmp_path / "c.csv", tmp_path / "s.json")) == 4

    def test_rarity_without_frequencies_exits_3(self, workspace):
        tmp_path, _, data, _ = workspace
        args = self.tune_args(data, tmp_path / "c.csv", tmp_path / "s.json")
        assert main(args + ["--weights", "rarity"]) == 3


class TestConformal:
    def test_report_and_rerun(self, workspace, capsys):
        tmp_path, _, _, model = workspace
        out1, out2 = tmp_path / "r1.json", tmp_path / "r2.json"
        args = ["conformal", "--model", str(model), "--delta", "0.1",
                "--samples", "2000", "--seed", "9", "--audit",
                "--audit-samples", "2000"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        report = json.loads(out1.read_text())
        assert 0.0 <= report["cost"] <= 1.0
        assert 0.8 <= report["coverage"] <= 1.0
        printed = capsys.readouterr().out
        assert "conformal cost" in printed

    def test_delta_out_of_range_exits_3(self, workspace):
        tmp_path, _, _, model = workspace
        assert main(["conformal", "--model", str(model), "--delta", "1.5",
                     "--samples", "2000"]) == 3


class TestArgparseBehavior:
    def test_no_command_exits_2(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_help_exits_0(self, capsys):
        assert main(["--help"]) == 0
        assert "synth" in capsys.readouterr().out
