import numpy as np
import pytest

from models.errors import InvalidInputError
from models.schemas import KernelConfig, TraceRecord
from services import artifact_store, svm_service
from services.kernel_service import build_kernel_matrix
from services.lce_service import generate_dataset


@pytest.fixture
def data3(problem3):
    return generate_dataset(problem3, 2, 0.01, seed=1)


def test_dataset_round_trip_and_checksum(tmp_path, data3):
    path = tmp_path / "train.csv"
    checksum = artifact_store.write_dataset(path, data3)
    assert checksum == artifact_store.file_checksum(path)
    assert artifact_store.write_dataset(tmp_path / "again.csv", data3) == checksum

    loaded = artifact_store.read_dataset(path)
    np.testing.assert_array_equal(loaded.thetas, data3.thetas)
    np.testing.assert_array_equal(loaded.labels, data3.labels)
    assert loaded.provenance["checksum"] == checksum
    assert path.read_text().splitlines()[0] == "label,theta_0,theta_1,theta_2,theta_3,theta_4,theta_5"


def test_no_temp_files_left_behind(tmp_path, data3):
    artifact_store.write_dataset(tmp_path / "train.csv", data3)
    artifact_store.write_json(tmp_path / "config.json", {"b": 1, "a": 2})
    assert sorted(p.name for p in tmp_path.iterdir()) == ["config.json", "train.csv"]


def test_dataset_header_and_rows_validated(tmp_path):
    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("y,theta_0,theta_1\n1,0.1,0.2\n")
    with pytest.raises(InvalidInputError):
        artifact_store.read_dataset(bad_header)

    bad_row = tmp_path / "row.csv"
    bad_row.write_text("label,theta_0,theta_1\n1,0.1,x\n")
    with pytest.raises(InvalidInputError):
        artifact_store.read_dataset(bad_row)

    with pytest.raises(InvalidInputError):
        artifact_store.read_dataset(tmp_path / "missing.csv")


def test_problem_round_trip(tmp_path, problem3):
    path = artifact_store.write_problem(tmp_path / "problem.json", problem3)
    record = artifact_store.read_problem(path)
    assert record.n == 3
    assert [tuple(e) for e in record.edges] == [(0, 1), (1, 2)]
    assert record.c_plus == problem3.c_plus.tolist()


def test_kernel_and_sidecar(tmp_path, data3, problem3):
    K = build_kernel_matrix(data3, data3, problem3.graph, KernelConfig(threads=1))
    path = tmp_path / "kernel_train.csv"
    checksum = artifact_store.write_kernel(path, K)
    assert artifact_store.sidecar_path(path).exists()

    loaded, read_checksum = artifact_store.read_kernel(path)
    assert read_checksum == checksum
    np.testing.assert_array_equal(loaded.values, K.values)
    assert loaded.provenance.shape == (4, 4)


def test_kernel_sidecar_shape_mismatch(tmp_path, data3, problem3):
    K = build_kernel_matrix(data3, data3, problem3.graph, KernelConfig(threads=1))
    path = tmp_path / "kernel.csv"
    artifact_store.write_kernel(path, K)
    artifact_store.write_json(
        artifact_store.sidecar_path(path),
        K.provenance.model_copy(update={"shape": (3, 4)}),
    )
    with pytest.raises(InvalidInputError):
        artifact_store.read_kernel(path)


def test_model_round_trip(tmp_path):
    model, _ = svm_service.solve_dual(np.eye(2), np.array([1, -1]))
    model.kernel_checksum = "abc"
    path = artifact_store.write_model(tmp_path / "model.json", model)
    loaded = artifact_store.read_model(path)
    assert loaded.kernel_checksum == "abc"
    np.testing.assert_array_equal(loaded.alpha, model.alpha)
    (tmp_path / "broken.json").write_text("{not json")
    with pytest.raises(InvalidInputError):
        artifact_store.read_model(tmp_path / "broken.json")


def test_trace_writer_moves_into_place(tmp_path):
    path = tmp_path / "trace.jsonl"
    with artifact_store.TraceWriter(path) as writer:
        writer.write(TraceRecord(step=0, lam=[0.1], cost=1.5))
        assert writer.partial.exists() and not path.exists()
        writer.write(TraceRecord(step=1, lam=[0.2], cost=1.2))
    records = artifact_store.read_trace(path)
    assert [r.step for r in records] == [0, 1]
    assert not (tmp_path / "trace.jsonl.partial").exists()


def test_trace_writer_keeps_partial_on_failure(tmp_path):
    path = tmp_path / "trace.jsonl"
    with pytest.raises(RuntimeError):
        with artifact_store.TraceWriter(path) as writer:
            writer.write(TraceRecord(step=0, lam=[0.1], cost=1.5))
            raise RuntimeError("kernel failure")
    assert not path.exists()
    partial = tmp_path / "trace.jsonl.partial"
    assert len(partial.read_text().splitlines()) == 1


def test_plot_data(tmp_path):
    records = [
        TraceRecord(step=0, lam=[0.1], f_plus=2.0, f_minus=1.0, cost=1.5),
        TraceRecord(step=1, lam=[0.2], cost=1.0, test_accuracy=0.75),
    ]
    cost = artifact_store.write_cost_vs_step(tmp_path, records)
    assert cost.read_text().splitlines() == ["step,lambda,F_plus,F_minus,cost", "0,0.10000000000000001,2,1,1.5", "1,0.20000000000000001,,,1"]
    accuracy = artifact_store.write_accuracy_vs_step(tmp_path, records)
    assert accuracy.read_text().splitlines()[1:] == ["1,0.75"]
    assert artifact_store.write_accuracy_vs_step(tmp_path, records[:1]) is None

    gram = artifact_store.write_gram(tmp_path, "train", np.eye(2))
    assert len(gram.read_text().splitlines()) == 5
