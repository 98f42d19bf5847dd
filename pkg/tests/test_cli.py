"""End-to-end runs of the command line front end in temp directories."""

import json
import os

import numpy as np
import pytest

from se3diff import cli
from se3diff.fileio import (read_csv, read_edge_list, read_point_set,
                            read_trajectory)


def run(*argv):
    return cli.main(list(argv))


def read_manifest_dict(out):
    with open(os.path.join(out, "manifest.json")) as fh:
        return json.load(fh)


@pytest.fixture()
def dataset(tmp_path):
    out = tmp_path / "data"
    assert run("gen-dataset", "--out", str(out), "--count", "2", "--n", "10",
               "--degree", "4", "--seed", "3") == 0
    return out


class TestExitCodes:
    def test_no_command(self):
        assert run() == 1

    def test_unknown_flag(self, tmp_path):
        assert run("gen-dataset", "--out", str(tmp_path), "--bogus", "1") == 1

    def test_unknown_method_rejected(self, tmp_path):
        assert run("sample", "--dataset", str(tmp_path),
                   "--method", "euler") == 1

    def test_sample_requires_dataset(self):
        assert run("sample") == 1

    def test_missing_dataset_dir(self, tmp_path):
        out = tmp_path / "out"
        code = run("sample", "--dataset", str(tmp_path / "nowhere"),
                   "--out", str(out))
        assert code == 2
        assert not (out / "samples.csv").exists()

    def test_unrealizable_graph_parameters(self, tmp_path):
        # 5 nodes of degree 3 would need an odd number of edge stubs
        assert run("gen-dataset", "--out", str(tmp_path / "g"),
                   "--n", "5", "--degree", "3") == 2

    def test_runtime_failure_leaves_no_partial_csv(self, tmp_path, dataset):
        out = tmp_path / "m"
        code = run("metrics", "--generated", str(dataset),
                   "--reference", str(tmp_path / "missing"),
                   "--out", str(out))
        assert code == 2
        assert not (out / "metrics.csv").exists()
        assert not (out / "manifest.json").exists()

    def test_dataset_without_edge_list(self, tmp_path, dataset):
        (dataset / "edges.txt").unlink()
        out = tmp_path / "s"
        assert run("sample", "--dataset", str(dataset), "--out", str(out)) == 2
        assert not (out / "samples.csv").exists()


class TestGenDataset:
    def test_layout(self, dataset):
        graph = read_edge_list(str(dataset / "edges.txt"))
        assert graph.n == 10
        assert len(graph.edges) == 10 * 4 // 2
        for i in range(2):
            pts = read_point_set(str(dataset / f"points_{i:03d}.txt"))
            assert pts.shape == (10, 3)
        manifest = read_manifest_dict(dataset)
        assert manifest["command"] == "gen-dataset"
        assert manifest["backend"] in ("numba", "numpy")
        assert manifest["count"] == 2 and manifest["n"] == 10
        assert manifest["degree"] == 4 and manifest["seed"] == 3

    def test_reruns_are_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run("gen-dataset", "--out", str(out), "--count", "3",
                       "--n", "8", "--degree", "4", "--seed", "7") == 0
        for name in ["edges.txt", "points_000.txt", "points_001.txt",
                     "points_002.txt"]:
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_output_dir_from_environment(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("SE3DIFF_OUT", str(target))
        assert run("gen-dataset", "--count", "1", "--n", "6",
                   "--degree", "4") == 0
        assert (target / "edges.txt").exists()
        assert (target / "manifest.json").exists()


class TestSample:
    def test_smoke_run_converges(self, tmp_path, dataset):
        out = tmp_path / "s"
        assert run("sample", "--dataset", str(dataset), "--out", str(out),
                   "--chains", "2", "--steps", "40", "--corrector", "8",
                   "--seed", "0") == 0
        header, rows = read_csv(str(out / "samples.csv"))
        assert header == ["item", "chain", "converged", "converged_at",
                          "final_error", "diverged"]
        assert len(rows) == 4
        assert all(r[2] == "1" and r[5] == "0" for r in rows)
        for item in range(2):
            for chain in range(2):
                final = read_point_set(
                    str(out / f"final_{item:03d}_{chain:03d}.txt"))
                assert final.shape == (10, 3)
                assert np.all(np.isfinite(final))
        manifest = read_manifest_dict(out)
        assert manifest["command"] == "sample"
        assert manifest["method"] == "ode" and manifest["steps"] == 40

    def test_save_trajectories(self, tmp_path, dataset):
        out = tmp_path / "t"
        assert run("sample", "--dataset", str(dataset), "--out", str(out),
                   "--chains", "1", "--steps", "20", "--corrector", "8",
                   "--save-trajectories") == 0
        traj = read_trajectory(str(out / "traj_000_000.txt"))
        assert traj[0][0] == 20 and traj[-1][0] == 0
        assert all(frame.shape == (10, 3) for _, frame in traj)


class TestExperimentsCommands:
    def test_verify_bound(self, tmp_path):
        out = tmp_path / "b"
        assert run("verify-bound", "--out", str(out), "--trials", "20",
                   "--seed", "1") == 0
        header, rows = read_csv(str(out / "bound_check.csv"))
        assert header == ["n", "delta", "f_approx", "bound", "seed"]
        assert len(rows) == 20
        for r in rows:
            assert float(r[2]) <= float(r[3]) + 1e-9

    def test_mds_compare(self, tmp_path):
        out = tmp_path / "m"
        assert run("mds-compare", "--out", str(out), "--trials", "10",
                   "--seed", "2") == 0
        header, rows = read_csv(str(out / "mds_comparison.csv"))
        assert len(rows) == 10
        i_gd, i_approx = header.index("f_gd"), header.index("f_approx")
        for r in rows:
            assert float(r[i_gd]) <= float(r[i_approx]) + 1e-9

    def test_stats(self, tmp_path):
        out = tmp_path / "st"
        assert run("stats", "--out", str(out), "--tau", "1e-3", "--d", "1,2",
                   "--samples", "2000", "--seed", "5") == 0
        header, rows = read_csv(str(out / "stats.csv"))
        assert len(header) == 14
        assert len(rows) == 2
        assert [r[2] for r in rows] == ["1", "2"]

    def test_corrector_sweep(self, tmp_path):
        out = tmp_path / "sw"
        assert run("corrector-sweep", "--out", str(out), "--deltas", "0",
                   "--correctors", "1,8", "--chains", "4", "--steps", "40",
                   "--n", "10", "--seed", "2") == 0
        header, rows = read_csv(str(out / "sweep.csv"))
        assert header == ["delta", "k", "converged_fraction",
                          "convergence_time", "diverged"]
        assert len(rows) == 2

    def test_jobs_do_not_change_bytes(self, tmp_path):
        outs = []
        for jobs in ("1", "3"):
            out = tmp_path / f"j{jobs}"
            assert run("corrector-sweep", "--out", str(out), "--deltas", "0",
                       "--correctors", "1,8", "--chains", "4", "--steps", "40",
                       "--n", "10", "--seed", "2", "--jobs", jobs) == 0
            outs.append(out)
        assert (outs[0] / "sweep.csv").read_bytes() == \
            (outs[1] / "sweep.csv").read_bytes()


class TestConfigFiles:
    def test_manifest_reproduces_run(self, tmp_path):
        first = tmp_path / "first"
        assert run("corrector-sweep", "--out", str(first), "--deltas", "0",
                   "--correctors", "1,8", "--chains", "4", "--steps", "40",
                   "--n", "10", "--seed", "9") == 0
        second = tmp_path / "second"
        assert run("corrector-sweep", "--config",
                   str(first / "manifest.json"), "--out", str(second)) == 0
        assert (first / "sweep.csv").read_bytes() == \
            (second / "sweep.csv").read_bytes()

    def test_flags_override_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"count": 3, "n": 6, "degree": 4, "seed": 1}))
        out = tmp_path / "o"
        assert run("gen-dataset", "--config", str(cfg), "--out", str(out),
                   "--count", "5") == 0
        files = sorted(p.name for p in out.glob("points_*.txt"))
        assert len(files) == 5
        manifest = read_manifest_dict(out)
        assert manifest["count"] == 5
        assert manifest["n"] == 6

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{not json")
        assert run("gen-dataset", "--config", str(cfg),
                   "--out", str(tmp_path / "o")) == 2


class TestMetricsCommand:
    def test_dataset_against_itself(self, tmp_path, dataset):
        out = tmp_path / "metrics"
        assert run("metrics", "--generated", str(dataset),
                   "--reference", str(dataset), "--out", str(out)) == 0
        header, rows = read_csv(str(out / "metrics.csv"))
        assert header == ["cov_r", "mat_r", "cov_p", "mat_p", "threshold"]
        (row,) = rows
        assert row[0] == "1" and row[2] == "1"
        assert row[1] == "0" and row[3] == "0"
        assert (out / "ad.txt").read_text().strip() == "0"

    def test_edge_list_is_not_a_conformation(self, tmp_path, dataset):
        # edges.txt matches *.txt but must be excluded from populations;
        # if it slipped through, parsing it as points would fail
        out = tmp_path / "metrics2"
        assert run("metrics", "--generated", str(dataset),
                   "--reference", str(dataset), "--out", str(out),
                   "--pattern", "*.txt") == 0
