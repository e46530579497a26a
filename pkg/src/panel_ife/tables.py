"""Rectangular result tables with CSV and aligned-text emission.

Failed cells are carried as NaN and rendered as ``failed``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import InputError


@dataclass
class ResultTable:
    row_keys: list[str]
    col_keys: list[str]
    cells: np.ndarray  # (rows, cols), NaN marks a failed cell
    caption: str = ""
    row_label: str = "row"

    def __post_init__(self):
        self.cells = np.asarray(self.cells, float)
        if self.cells.shape != (len(self.row_keys), len(self.col_keys)):
            raise InputError("cells shape inconsistent with keys")

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            if self.caption:
                writer.writerow([f"# {self.caption}"])
            writer.writerow([self.row_label, *self.col_keys])
            for rk, row in zip(self.row_keys, self.cells):
                writer.writerow([rk, *(("failed" if np.isnan(v) else f"{v:.10g}") for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "ResultTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        caption = ""
        if rows and rows[0] and rows[0][0].startswith("# "):
            caption = rows[0][0][2:]
            rows = rows[1:]
        if not rows:
            raise InputError(f"{path}: empty table")
        header = rows[0]
        row_keys, data = [], []
        for row in rows[1:]:
            if not row:
                continue
            row_keys.append(row[0])
            data.append([np.nan if v == "failed" else float(v) for v in row[1:]])
        return cls(row_keys=row_keys, col_keys=header[1:],
                   cells=np.array(data).reshape(len(row_keys), len(header) - 1),
                   caption=caption, row_label=header[0])

    def to_text(self) -> str:
        widths = [max(len(self.row_label), *(len(k) for k in self.row_keys))]
        body = [[("failed" if np.isnan(v) else f"{v:.4f}") for v in row] for row in self.cells]
        for j, ck in enumerate(self.col_keys):
            widths.append(max(len(ck), *(len(r[j]) for r in body)) if body else len(ck))
        lines = []
        if self.caption:
            lines.append(self.caption)
        head = [self.row_label.ljust(widths[0])]
        head += [ck.rjust(widths[j + 1]) for j, ck in enumerate(self.col_keys)]
        lines.append("  ".join(head))
        for rk, row in zip(self.row_keys, body):
            cells = [rk.ljust(widths[0])]
            cells += [v.rjust(widths[j + 1]) for j, v in enumerate(row)]
            lines.append("  ".join(cells))
        return "\n".join(lines) + "\n"
