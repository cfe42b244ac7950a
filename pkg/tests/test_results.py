import numpy as np
import pandas as pd
import pytest

from app.core.correlation import CovarianceLevel, CovarianceMatrix
from app.core.errors import DimensionMismatchError, NotPsdError
from app.core.results import COLUMNS, ResultTable, export_csv, mean_and_stderr, read_csv, write_gnuplot_script
from app.utils.matrix_io import (
    frame_to_matrix,
    matrix_to_frame,
    read_covariance_csv,
    read_matrix_csv,
    write_matrix_csv,
)

from tests.conftest import random_psd


@pytest.fixture
def table():
    t = ResultTable()
    for users in (2, 4):
        t.add("multi-user", "CoM", f"n_users={users}", "min_rate", 1.5 / users, 0.01, 100, 7)
        t.add("multi-user", "SDB", f"n_users={users}", "min_rate", 2.0 / users, 0.02, 100, 7)
    t.add("multi-user", "SDB", "", "min_sir_db", -3.25, 0.0, 1, 7)
    return t


def test_table_frame_has_fixed_columns(table):
    frame = table.to_frame()
    assert list(frame.columns) == COLUMNS
    assert len(frame) == 5
    assert table.value("SDB", "min_rate", "n_users=4") == pytest.approx(0.5)
    with pytest.raises(KeyError):
        table.value("CST90", "min_rate")


def test_csv_keeps_empty_sweep_labels(table, tmp_path):
    path = export_csv(table, tmp_path / "mu.csv")
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[0] == ",".join(COLUMNS)

    loaded = read_csv(path)
    assert loaded.row("SDB", "min_sir_db", "").value == -3.25
    assert [r.sweep for r in loaded.rows] == [r.sweep for r in table.rows]


def test_mean_and_stderr():
    mean, stderr = mean_and_stderr(np.array([1.0, 2.0, 3.0, 4.0]))
    assert mean == 2.5
    assert stderr == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert mean_and_stderr(np.array([5.0])) == (5.0, 0.0)
    assert all(np.isnan(mean_and_stderr(np.array([]))))


def test_gnuplot_script_plots_each_strategy(table, tmp_path):
    csv = export_csv(table, tmp_path / "mu.csv")
    script = write_gnuplot_script(table, csv, "min_rate")
    text = script.read_text(encoding="utf-8")
    assert script.suffix == ".gp"
    assert "set output 'mu.png'" in text
    assert "title 'CoM'" in text and "title 'SDB'" in text
    assert text.index("set terminal") < text.index("set output")


def test_gnuplot_script_without_rows(table, tmp_path):
    script = write_gnuplot_script(table, tmp_path / "mu.csv", "sum_rate")
    assert "# no rows for this metric" in script.read_text(encoding="utf-8")


def test_matrix_csv_restores_complex_entries(tmp_path, rng):
    r = random_psd(rng, 4)
    path = write_matrix_csv(CovarianceMatrix(r, CovarianceLevel.ELEMENT), tmp_path / "r.csv")
    np.testing.assert_array_equal(read_matrix_csv(path), CovarianceMatrix(r).matrix)
    loaded = read_covariance_csv(path)
    assert loaded.level == CovarianceLevel.ELEMENT
    assert loaded.metadata["source"] == str(path)


def test_matrix_frame_layout():
    frame = matrix_to_frame(np.array([[1 + 2j, 3.0]]))
    assert frame.to_dict(orient="list") == {"row": [0, 0], "col": [0, 1], "re": [1.0, 3.0], "im": [2.0, 0.0]}


def test_matrix_frame_validation():
    with pytest.raises(DimensionMismatchError):
        frame_to_matrix(pd.DataFrame({"row": [0], "col": [0], "re": [1.0]}))
    with pytest.raises(DimensionMismatchError):
        frame_to_matrix(pd.DataFrame({"row": [0, 1], "col": [0, 1], "re": [1.0, 1.0], "im": [0.0, 0.0]}))


def test_external_covariance_is_validated(tmp_path):
    path = write_matrix_csv(np.diag([1.0, -1.0]), tmp_path / "bad.csv")
    with pytest.raises(NotPsdError):
        read_covariance_csv(path)
