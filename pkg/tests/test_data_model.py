"""Panel container validation and CSV round trips."""

import numpy as np
import pytest

from panel_ife import PanelData, compute_time_averages, load_panel_csv, write_panel_csv
from panel_ife.exceptions import (
    DuplicateKeyError,
    InputError,
    PanelParseError,
    UnbalancedPanelError,
)


def _small_panel(n=4, t=3, q=2, seed=0):
    rng = np.random.default_rng(seed)
    return PanelData(
        y=rng.normal(size=(n, t)),
        x=rng.normal(size=(n, t, q)),
        unit_ids=[f"u{i}" for i in range(n)],
        time_ids=[str(s) for s in range(t)],
        covariate_names=[f"x{j + 1}" for j in range(q)],
    )


def test_panel_arrays_are_frozen():
    panel = _small_panel()
    with pytest.raises(ValueError):
        panel.y[0, 0] = 1.0
    with pytest.raises(ValueError):
        panel.x[0, 0, 0] = 1.0


def test_panel_shape_validation():
    rng = np.random.default_rng(0)
    with pytest.raises(InputError):
        PanelData(y=rng.normal(size=(4, 3)), x=rng.normal(size=(4, 2, 2)),
                  unit_ids=list("abcd"), time_ids=list("xyz"),
                  covariate_names=["x1", "x2"])
    with pytest.raises(InputError):
        PanelData(y=rng.normal(size=(1, 3)), x=rng.normal(size=(1, 3, 1)),
                  unit_ids=["a"], time_ids=list("xyz"), covariate_names=["x1"])


def test_panel_rejects_nonfinite():
    panel = _small_panel()
    y = panel.y.copy()
    y[0, 0] = np.nan
    with pytest.raises(InputError):
        PanelData(y=y, x=panel.x, unit_ids=panel.unit_ids,
                  time_ids=panel.time_ids, covariate_names=panel.covariate_names)


def test_time_averages():
    panel = _small_panel()
    np.testing.assert_allclose(compute_time_averages(panel).xbar,
                               panel.x.mean(axis=1))


def test_csv_round_trip(tmp_path):
    panel = _small_panel(n=5, t=4, q=3, seed=1)
    path = tmp_path / "panel.csv"
    write_panel_csv(panel, path)
    back = load_panel_csv(path)
    np.testing.assert_allclose(back.y, panel.y, atol=1e-12)
    np.testing.assert_allclose(back.x, panel.x, atol=1e-12)
    assert back.unit_ids == panel.unit_ids
    assert back.time_ids == panel.time_ids
    assert back.covariate_names == panel.covariate_names


def test_csv_numeric_time_ordering(tmp_path):
    path = tmp_path / "panel.csv"
    rows = ["unit,time,y,x1"]
    for u in ("a", "b"):
        for tt in ("10", "2", "1"):
            rows.append(f"{u},{tt},1.0,2.0")
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    panel = load_panel_csv(path)
    assert panel.time_ids == ("1", "2", "10")


def test_csv_schema_mapping(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text(
        "country,year,gdp,inv\nA,1,1.0,0.5\nA,2,1.1,0.6\nB,1,2.0,0.7\nB,2,2.1,0.8\n",
        encoding="utf-8")
    panel = load_panel_csv(path, schema={"unit": "country", "time": "year",
                                         "y": "gdp", "covariates": ["inv"]})
    assert panel.covariate_names == ("inv",)
    assert panel.n_units == 2 and panel.n_periods == 2


def test_csv_unbalanced_rejected(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("unit,time,y,x1\na,1,1,1\na,2,1,1\nb,1,1,1\n", encoding="utf-8")
    with pytest.raises(UnbalancedPanelError):
        load_panel_csv(path)


def test_csv_duplicate_rejected(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("unit,time,y,x1\na,1,1,1\na,1,2,2\n", encoding="utf-8")
    with pytest.raises(DuplicateKeyError):
        load_panel_csv(path)


def test_csv_parse_error_names_row(tmp_path):
    path = tmp_path / "panel.csv"
    path.write_text("unit,time,y,x1\na,1,1,1\na,2,oops,1\n", encoding="utf-8")
    with pytest.raises(PanelParseError, match="row 3"):
        load_panel_csv(path)


def test_csv_empty_and_missing_columns(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("", encoding="utf-8")
    with pytest.raises(InputError):
        load_panel_csv(empty)
    no_cov = tmp_path / "nocov.csv"
    no_cov.write_text("unit,time,y\na,1,1\n", encoding="utf-8")
    with pytest.raises(InputError):
        load_panel_csv(no_cov)
