"""
Tests for the command-line interface.
"""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from main import cli
from src.aae.serialization import load_model
from src.exceptions import EmptyEdgeSetError


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def model_file(runner, csv_pair, temp_dir):
    """A briefly trained model written through the CLI."""
    train_path, _ = csv_pair
    path = str(Path(temp_dir) / "model.json")
    result = runner.invoke(cli, ["train-aae", train_path, "--model-out", path, "--steps", "20"])
    assert result.exit_code == 0, result.output
    return path


class TestGen:
    """Test cases for the gen command."""

    def test_writes_files(self, runner, temp_dir):
        """Test train, test and manifest files with 1000 rows each."""
        out = Path(temp_dir) / "a"
        result = runner.invoke(cli, ["gen", "--dataset", "a", "--seed", "0", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len((out / "train.csv").read_text().splitlines()) == 1001
        assert len((out / "test.csv").read_text().splitlines()) == 1001
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["train"]["n_anomalies"] == 50

    def test_byte_identical(self, runner, temp_dir):
        """Test the same seed writes identical bytes."""
        for name in ("x", "y"):
            runner.invoke(cli, ["gen", "-d", "b", "--seed", "4", "--out", str(Path(temp_dir) / name)])
        first = (Path(temp_dir) / "x" / "train.csv").read_bytes()
        second = (Path(temp_dir) / "y" / "train.csv").read_bytes()
        assert first == second

    def test_unknown_dataset(self, runner, temp_dir):
        """Test an unknown variant is a usage error."""
        result = runner.invoke(cli, ["gen", "--dataset", "z", "--out", temp_dir])
        assert result.exit_code == 2


class TestTrainAndDoping:
    """Test cases for train-aae and doping."""

    def test_train_writes_model(self, model_file, csv_pair, runner, temp_dir):
        """Test the model loads and the latent export has one row per input."""
        model = load_model(model_file)
        assert model.input_dim == 2
        train_path, _ = csv_pair
        latent = Path(temp_dir) / "z.csv"
        result = runner.invoke(cli, [
            "train-aae", train_path, "-m", str(Path(temp_dir) / "m2.json"),
            "--steps", "5", "--latent-out", str(latent)
        ])
        assert result.exit_code == 0, result.output
        lines = latent.read_text().splitlines()
        assert lines[0] == "z0,z1"
        assert len(lines) == 201

    def test_labeled_needs_labels(self, runner, temp_dir):
        """Test labeled training on unlabeled data fails."""
        path = Path(temp_dir) / "plain.csv"
        path.write_text("f0,f1\n" + "".join(f"{i},{i % 7}\n" for i in range(30)))
        result = runner.invoke(cli, [
            "train-aae", str(path), "-m", str(Path(temp_dir) / "m.json"), "--labeled", "--steps", "5"
        ])
        assert result.exit_code == 1

    def test_doping_count(self, runner, model_file, csv_pair, temp_dir):
        """Test k synthetic rows are written."""
        train_path, _ = csv_pair
        out = Path(temp_dir) / "synth.csv"
        result = runner.invoke(cli, ["doping", "--model", model_file, train_path, "--k", "5", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert len(out.read_text().splitlines()) == 6

    def test_doping_zero(self, runner, model_file, csv_pair, temp_dir):
        """Test k=0 writes a header-only file."""
        train_path, _ = csv_pair
        out = Path(temp_dir) / "synth.csv"
        result = runner.invoke(cli, ["doping", "-m", model_file, train_path, "-k", "0", "-o", str(out)])
        assert result.exit_code == 0, result.output
        assert out.read_text() == "f0,f1\n"

    def test_doping_radii(self, runner, model_file, csv_pair, temp_dir):
        """Test repeated --radius decodes k rows per radius with a radius column."""
        train_path, _ = csv_pair
        out = Path(temp_dir) / "rings.csv"
        result = runner.invoke(cli, [
            "doping", "-m", model_file, train_path, "-k", "3", "-o", str(out),
            "--radius", "5", "--radius", "20"
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "f0,f1,radius"
        assert len(lines) == 7

    def test_empty_edge_set(self, runner, model_file, csv_pair, temp_dir, mocker):
        """Test an empty edge set exits with status 1."""
        mocker.patch(
            "src.augment.augmenters.compute_edge_set",
            side_effect=EmptyEdgeSetError("edge band is empty")
        )
        train_path, _ = csv_pair
        result = runner.invoke(cli, [
            "doping", "-m", model_file, train_path, "-k", "5", "-o", str(Path(temp_dir) / "s.csv")
        ])
        assert result.exit_code == 1
        assert "edge band is empty" in result.output


class TestExperiments:
    """Test cases for sweep, eval and compare."""

    def test_sweep(self, runner, csv_pair, temp_dir):
        """Test the sweep table and summary."""
        train_path, test_path = csv_pair
        out = Path(temp_dir) / "sweep.csv"
        summary = Path(temp_dir) / "sweep.json"
        result = runner.invoke(cli, [
            "sweep", train_path, test_path, "--radii", "10,20", "--seeds", "1,2", "--steps", "10",
            "--out", str(out), "--summary", str(summary)
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "radius,seed,auc"
        assert len(lines) == 9
        assert json.loads(summary.read_text())["experiment"] == "magnitude_sweep"

    @pytest.mark.parametrize("args", [
        ["--radii", "5:1:1"],
        ["--seeds", "one"],
        ["--grid", "0.1:0.5"],
        ["--n-synth", "lots"]
    ])
    def test_sweep_bad_options(self, runner, csv_pair, temp_dir, args):
        """Test malformed options are usage errors."""
        train_path, test_path = csv_pair
        result = runner.invoke(cli, ["sweep", train_path, test_path, "-o", str(Path(temp_dir) / "s.csv"), *args])
        assert result.exit_code == 2

    def test_eval_report(self, runner, csv_pair, temp_dir):
        """Test eval writes a metric report with the resolved synthetic count."""
        train_path, test_path = csv_pair
        report = Path(temp_dir) / "report.json"
        result = runner.invoke(cli, [
            "eval", train_path, test_path, "--augment", "smote", "--n-synth", "10%", "--report", str(report)
        ])
        assert result.exit_code == 0, result.output
        data = json.loads(report.read_text())
        assert data["config"]["n_synth"] == 20
        assert data["config"]["method"] == "smote"
        assert 0.0 <= data["auc"] <= 1.0
        assert len(data["sweep"]) == 18

    def test_eval_unknown_method(self, runner, csv_pair, temp_dir):
        """Test an unknown augmentation method is a usage error."""
        train_path, test_path = csv_pair
        result = runner.invoke(cli, [
            "eval", train_path, test_path, "--augment", "gan", "-r", str(Path(temp_dir) / "r.json")
        ])
        assert result.exit_code == 2

    def test_eval_noise_range(self, runner, csv_pair, temp_dir):
        """Test random noise on unscaled data fails with status 1."""
        train_path, test_path = csv_pair
        result = runner.invoke(cli, [
            "eval", train_path, test_path, "--augment", "noise", "-r", str(Path(temp_dir) / "r.json")
        ])
        assert result.exit_code == 1

    def test_compare(self, runner, csv_pair, temp_dir):
        """Test one row per method and seed."""
        train_path, test_path = csv_pair
        out = Path(temp_dir) / "methods.csv"
        result = runner.invoke(cli, [
            "compare", train_path, test_path, "--methods", "none,smote", "--seeds", "1,2", "-o", str(out)
        ])
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "method,seed,auc,best_f1,g_measure"
        assert len(lines) == 5

    def test_config_file(self, runner, csv_pair, temp_dir):
        """Test a config file feeds the effective configuration."""
        path = Path(temp_dir) / "run.json"
        path.write_text(json.dumps({"aae": {"steps": 7}}))
        result = runner.invoke(cli, ["--config", str(path), "show-config"])
        assert result.exit_code == 0, result.output
        assert json.loads(result.output)["aae"]["steps"] == 7

    def test_invalid_config_file(self, runner, temp_dir):
        """Test an invalid config file fails with status 1."""
        path = Path(temp_dir) / "run.json"
        path.write_text(json.dumps({"aae": {"steps": -1}}))
        result = runner.invoke(cli, ["--config", str(path), "show-config"])
        assert result.exit_code == 1
