import json

import numpy as np
import pytest

from geoqml import cli, io
from geoqml.exceptions import DivergenceError

from conftest import random_spd

BELL = "QUBITS 2\nPARAMS 0\nH q0\nCNOT q0 q1\n"
RZ_ONLY = "QUBITS 2\nRZ q0 p0\nRZ q1 p1\n"
GENERIC = "QUBITS 2\nRX q0 p0\nRY q1 p1\nCNOT q0 q1\nRY q0 p2\nRZ q1 p3\n"
FAST_BENCH = "seeds = 1\nn_train = 40\nn_test = 10\nin_dim = 3\nout_dim = 2\nepochs = 2\nlayers = 1\n"


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def assert_diagnostic(err, code):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith(f"geoqml-error code={code} kind=")


@pytest.fixture
def files(tmp_path, rng):
    V, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    paths = {}
    for name, M in {"p": (V * [1.0, 2.0, 3.0]) @ V.T, "q": (V * [4.0, 0.5, 1.0]) @ V.T,
                    "r": random_spd(rng, 3)}.items():
        paths[name] = tmp_path / f"{name}.csv"
        io.write_spd_csv(paths[name], M)
    for name, text in {"bell": BELL, "rz": RZ_ONLY, "gen": GENERIC}.items():
        paths[name] = tmp_path / f"{name}.txt"
        paths[name].write_text(text)
    return paths


class TestManifold:
    def test_identical_files(self, capsys, files, tmp_path):
        code, _, _ = run(capsys, "manifold", "distance", files["p"], files["p"], "-o", tmp_path / "d.csv")
        assert code == 0
        np.testing.assert_allclose(io.read_matrix_csv(tmp_path / "d.csv"), 0, atol=1e-7)

    def test_commuting_ai_equals_le(self, capsys, files, tmp_path):
        for metric in ("ai", "le"):
            assert run(capsys, "manifold", "distance", files["p"], files["q"], "--metric", metric,
                       "-o", tmp_path / f"{metric}.csv")[0] == 0
        np.testing.assert_allclose(io.read_matrix_csv(tmp_path / "ai.csv"),
                                   io.read_matrix_csv(tmp_path / "le.csv"), atol=1e-9)

    def test_mean_to_stdout(self, capsys, files):
        code, out, _ = run(capsys, "manifold", "mean", files["p"], files["q"], files["r"])
        assert code == 0 and out.startswith("# spd dim=3")

    def test_grassmann(self, capsys, tmp_path):
        io.write_subspace_csv(tmp_path / "a.csv", np.array([[1.0], [0.0]]))
        io.write_subspace_csv(tmp_path / "b.csv", np.array([[0.0], [1.0]]))
        code, out, _ = run(capsys, "manifold", "distance", tmp_path / "a.csv", tmp_path / "b.csv",
                           "--metric", "grassmann")
        assert code == 0 and f"{np.pi / 2!r}" in out

    def test_missing_file(self, capsys, files):
        code, _, err = run(capsys, "manifold", "distance", files["p"], "nope.csv")
        assert code == 2
        assert_diagnostic(err, 2)

    def test_malformed(self, capsys, files, tmp_path):
        (tmp_path / "bad.csv").write_text("# spd dim=2\n1,0\n")
        code, _, err = run(capsys, "manifold", "distance", files["p"], tmp_path / "bad.csv")
        assert code == 2
        assert_diagnostic(err, 2)

    def test_non_spd(self, capsys, files, tmp_path):
        io.write_spd_csv(tmp_path / "neg.csv", np.diag([1.0, -1.0, 1.0]))
        code, _, err = run(capsys, "manifold", "distance", files["p"], tmp_path / "neg.csv")
        assert code == 3
        assert_diagnostic(err, 3)


class TestQuantum:
    def test_bell_entanglement(self, capsys, files):
        code, out, _ = run(capsys, "quantum", files["bell"], "--entanglement-distance")
        assert code == 0
        r = json.loads(out)["results"]["entanglement_distance"]
        assert abs(r["schmidt"] - np.sqrt(2 - np.sqrt(2))) < 1e-4
        assert abs(r["search"] - r["schmidt"]) < 1e-4

    def test_rz_only_metric(self, capsys, files):
        code, out, _ = run(capsys, "quantum", files["rz"], "--fs-metric", "--theta", "0.3,0.9")
        assert code == 0
        np.testing.assert_allclose(json.loads(out)["results"]["fs_metric"], 0, atol=1e-9)

    def test_qfi_is_four_times_metric(self, capsys, files, tmp_path):
        run(capsys, "quantum", files["gen"], "--fs-metric", "--seed", "4", "-o", tmp_path / "g.json")
        run(capsys, "quantum", files["gen"], "--qfi", "--seed", "4", "-o", tmp_path / "q.json")
        g = np.array(io.read_report(tmp_path / "g.json")["results"]["fs_metric"])
        q = np.array(io.read_report(tmp_path / "q.json")["results"]["qfi"])
        np.testing.assert_allclose(q, 4 * g, atol=1e-6)

    def test_input_echo_and_idempotence(self, capsys, files):
        args = ("quantum", files["gen"], "--qgt", "--tangent-rank", "--draws", "3", "--seed", "2")
        _, a, _ = run(capsys, *args)
        _, b, _ = run(capsys, *args)
        assert a == b
        echo = json.loads(a)["input"]
        assert echo["circuit"].startswith("QUBITS 2\nPARAMS 4\n") and len(echo["theta"]) == 4
        assert json.loads(a)["schema_version"] == 1

    def test_parse_error_line(self, capsys, tmp_path):
        (tmp_path / "bad.txt").write_text("QUBITS 2\nRX q0 p0\nTOFFOLI q0 q1\n")
        code, _, err = run(capsys, "quantum", tmp_path / "bad.txt", "--fs-metric")
        assert code == 2
        assert_diagnostic(err, 2)
        assert "line 3" in err

    def test_theta_length(self, capsys, files):
        code, _, err = run(capsys, "quantum", files["gen"], "--fs-metric", "--theta", "0.1")
        assert code == 2
        assert_diagnostic(err, 2)

    def test_state_input_and_gram(self, capsys, files, tmp_path):
        io.write_state_csv(tmp_path / "s.csv", np.array([0, 1, 0, 0], dtype=complex))
        np.savetxt(tmp_path / "x.csv", np.random.default_rng(0).normal(size=(4, 3)), delimiter=",")
        code, out, _ = run(capsys, "quantum", files["gen"], "--state", tmp_path / "s.csv", "--fs-metric",
                           "--kernel", tmp_path / "x.csv", "--gram-out", tmp_path / "g.csv")
        assert code == 0
        G = io.read_matrix_csv(tmp_path / "g.csv")
        assert G.shape == (4, 4) and np.allclose(np.diag(G), 1)

    def test_unnormalized_state(self, capsys, files, tmp_path):
        io.write_state_csv(tmp_path / "s.csv", np.array([1, 1, 0, 0], dtype=complex))
        code, _, err = run(capsys, "quantum", files["gen"], "--state", tmp_path / "s.csv", "--fs-metric")
        assert code == 3
        assert_diagnostic(err, 3)


class TestBench:
    def test_structure_and_order(self, capsys, tmp_path):
        (tmp_path / "c.txt").write_text(FAST_BENCH)
        code, out, _ = run(capsys, "bench", "--config", tmp_path / "c.txt")
        assert code == 0
        report = json.loads(out)
        assert [v["kind"] for v in report["variants"]] == [
            "classical_only", "classical_quantum", "quantum_classical", "spd_enhanced_hybrid"]
        assert report["config"]["epochs"] == 2 and len(report["config_hash"]) == 16
        assert all(len(v["runs"]) == 1 and v["runs"][0]["seed"] == 1 for v in report["variants"])

    def test_deterministic_bodies(self, capsys, tmp_path):
        (tmp_path / "c.txt").write_text(FAST_BENCH)
        for name in ("a", "b"):
            run(capsys, "bench", "--config", tmp_path / "c.txt", "-o", tmp_path / f"{name}.json")
        a, b = (io.read_report(tmp_path / f"{n}.json") for n in "ab")
        assert io.dumps_report(cli.report_body(a)) == io.dumps_report(cli.report_body(b))
        assert "timing" in a

    def test_table(self, capsys, tmp_path):
        (tmp_path / "c.txt").write_text(FAST_BENCH)
        code, out, _ = run(capsys, "bench", "--config", tmp_path / "c.txt", "--table",
                           "-o", tmp_path / "r.json")
        labels = [line.split("  ")[0] for line in out.splitlines()[2:]]
        assert labels == ["Classical (No Quantum)", "Classical-Quantum Hybrid",
                          "Quantum-Classical Hybrid", "SPD-Enhanced Hybrid"]
        assert (tmp_path / "r.json").exists()

    def test_dataset_files(self, capsys, tmp_path):
        run(capsys, "dataset", "--seed", "1", "--n-samples", "30", "--in-dim", "3", "--out-dim", "2",
            "-o", tmp_path / "tr.csv")
        run(capsys, "dataset", "--seed", "2", "--n-samples", "10", "--in-dim", "3", "--out-dim", "2",
            "--split", "test", "-o", tmp_path / "te.csv")
        (tmp_path / "c.txt").write_text(f"seeds = 0\nepochs = 1\nlayers = 1\n"
                                        f"train_data = {tmp_path / 'tr.csv'}\n"
                                        f"test_data = {tmp_path / 'te.csv'}\n")
        code, out, _ = run(capsys, "bench", "--config", tmp_path / "c.txt", "--no-timing")
        assert code == 0 and "timing" not in json.loads(out)

    @pytest.mark.parametrize("text", ["epochs = -1\n", "bogus = 3\n", "optimizer = adam\n",
                                      "eta 0.1\n", "seeds = x\n"])
    def test_bad_config(self, capsys, tmp_path, text):
        (tmp_path / "c.txt").write_text(text)
        code, _, err = run(capsys, "bench", "--config", tmp_path / "c.txt")
        assert code == 2
        assert_diagnostic(err, 2)

    def test_divergence_writes_partial_report(self, capsys, tmp_path, monkeypatch):
        real_train = cli.pipeline.train

        def flaky(variant, *a, **kw):
            if variant.kind == "quantum_classical":
                raise DivergenceError("training loss is not finite", 3)
            return real_train(variant, *a, **kw)

        monkeypatch.setattr(cli.pipeline, "train", flaky)
        (tmp_path / "c.txt").write_text(FAST_BENCH)
        code, _, err = run(capsys, "bench", "--config", tmp_path / "c.txt", "-o", tmp_path / "r.json")
        assert code == 4
        assert_diagnostic(err, 4)
        report = io.read_report(tmp_path / "r.json")
        assert report["partial"] is True
        qc = report["variants"][2]
        assert qc["runs"][0] == {"seed": 1, "diverged": True, "diverged_epoch": 3}
        assert report["variants"][3]["runs"][0]["diverged"] is False


class TestDataset:
    def test_fem(self, capsys, tmp_path):
        code, _, _ = run(capsys, "dataset", "--n-samples", "12", "-o", tmp_path / "d.csv")
        assert code == 0
        d = io.read_dataset_csv(tmp_path / "d.csv")
        assert d.features.shape == (12, 7) and d.targets.shape == (12, 32)

    def test_blobs(self, capsys, tmp_path):
        run(capsys, "dataset", "--kind", "blobs", "--n-samples", "10", "-o", tmp_path / "b.csv")
        assert io.read_dataset_csv(tmp_path / "b.csv").task == "classification"


def test_usage_error_single_line(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == 2
    assert_diagnostic(err, 2)
