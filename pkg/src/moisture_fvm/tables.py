"""Convergence tables: ordered rows of a refinement study with adjacent-level ratios."""

import csv
import io
import math
from dataclasses import dataclass, field


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "" if math.isnan(value) else repr(value)
    return str(value)


@dataclass
class ConvergenceTable:
    """Rows of a refinement study, each a dict keyed by ``columns``.

    ``verdicts`` holds named boolean summaries (for example "inner differences
    decrease") and is written to the run manifest rather than the CSV.
    """

    columns: tuple
    rows: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)

    def add(self, **row):
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown columns {sorted(unknown)}")
        self.rows.append({c: row.get(c) for c in self.columns})

    def column(self, name, where=None):
        return [r[name] for r in self.rows if where is None or where(r)]

    def __len__(self):
        return len(self.rows)

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_csv(self, path=None):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row[c]) for c in self.columns])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


def adjacent_ratios(values):
    """``values[k-1] / values[k]`` with ``None`` for the first entry (or a zero divisor)."""
    out = [None]
    for prev, cur in zip(values[:-1], values[1:]):
        out.append(prev / cur if cur != 0 else None)
    return out


def decreasing(values, rel_slack=0.0):
    """True if each entry is below its predecessor, allowing ``rel_slack`` growth."""
    return all(cur < prev * (1.0 + rel_slack) for prev, cur in zip(values[:-1], values[1:]))
