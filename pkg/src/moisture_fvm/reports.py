"""Inequality reports shared by every checking routine, with CSV/JSON emission."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

FIELDS = ("name", "lhs", "rhs", "margin", "slack", "passed")


@dataclass(frozen=True)
class EstimateReport:
    """One inequality instance ``lhs <= rhs`` checked with a numerical slack.

    ``margin`` is ``rhs - lhs``; the report passes when ``margin >= -slack``.
    """

    name: str
    lhs: float
    rhs: float
    slack: float = 0.0
    details: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for attr in ("lhs", "rhs", "slack"):
            value = float(getattr(self, attr))
            if not math.isfinite(value):
                raise ValueError(f"report {self.name!r}: {attr} is not finite ({value})")
            object.__setattr__(self, attr, value)
        if self.slack < 0:
            raise ValueError(f"report {self.name!r}: slack must be non-negative")

    @property
    def margin(self):
        return self.rhs - self.lhs

    @property
    def passed(self):
        return self.margin >= -self.slack

    def as_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "margin": self.margin,
            "slack": self.slack,
            "passed": self.passed,
        }

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.lhs:.6g} <= {self.rhs:.6g} (margin {self.margin:.3g})"


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_to_csv(reports, path=None):
    """Write reports as CSV ``name,lhs,rhs,margin,slack,passed``; return the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIELDS)
    for rep in reports:
        row = rep.as_dict()
        writer.writerow([_fmt(row[k]) for k in FIELDS])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def reports_to_json(reports, path=None):
    text = json.dumps([rep.as_dict() for rep in reports], indent=2)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def reports_from_csv(text):
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        EstimateReport(r["name"], float(r["lhs"]), float(r["rhs"]), float(r["slack"]))
        for r in rows
    ]
