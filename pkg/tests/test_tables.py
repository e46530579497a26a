"""Result table emission and round trips."""

import numpy as np
import pytest

from panel_ife.exceptions import InputError
from panel_ife.tables import ResultTable


def _table():
    return ResultTable(
        row_keys=["20x10", "100x50"],
        col_keys=["pife_beta1", "pife_beta2"],
        cells=np.array([[0.07, 0.035], [np.nan, 0.006]]),
        caption="RMSE per estimator",
        row_label="NxT",
    )


def test_shape_validation():
    with pytest.raises(InputError):
        ResultTable(row_keys=["a"], col_keys=["b", "c"], cells=np.zeros((2, 2)))


def test_csv_round_trip(tmp_path):
    table = _table()
    path = tmp_path / "table.csv"
    table.to_csv(path)
    back = ResultTable.from_csv(path)
    assert back.row_keys == table.row_keys
    assert back.col_keys == table.col_keys
    assert back.caption == table.caption
    assert back.row_label == table.row_label
    np.testing.assert_allclose(back.cells[0], table.cells[0], atol=1e-12)
    assert np.isnan(back.cells[1, 0])


def test_failed_cells_rendered(tmp_path):
    table = _table()
    path = tmp_path / "table.csv"
    table.to_csv(path)
    assert "failed" in path.read_text(encoding="utf-8")
    text = table.to_text()
    assert "failed" in text
    assert text.startswith("RMSE per estimator")
    # Aligned text: every data line has the same number of columns.
    lines = text.strip().splitlines()[1:]
    assert all(len(line.split()) == 3 for line in lines)
