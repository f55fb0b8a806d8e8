"""Time series container for correlation functions and its serialization."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def fmt(x: float) -> str:
    """Full double precision, stable across runs."""
    return repr(float(x))


@dataclass(frozen=True)
class CorrelationSeries:
    """Correlation function sampled on a real- or imaginary-time grid.

    Attributes
    ----------
    times : ndarray
        Strictly increasing time grid (``t`` for real time, ``tau`` for
        imaginary time).
    values : ndarray of complex
        Correlator values.
    method : str
        Tag naming the producing routine, e.g. ``"exact"`` or ``"epac"``.
    beta : float
        Inverse temperature.
    order : int
        Operator power ``n`` in ``<q^n(t) q^n(0)>``.
    meta : dict
        Free-form provenance (potential hash, grid, ...).
    """

    times: np.ndarray
    values: np.ndarray
    method: str
    beta: float
    order: int = 2
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.times, dtype=float))
        v = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if t.shape != v.shape:
            raise ValueError("times and values must have the same shape")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("correlator values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    def __len__(self):
        return self.times.size

    def header(self) -> dict:
        return {"method": self.method, "beta": self.beta, "order": self.order, **self.meta}

    def to_csv(self, path=None, comment: str | None = None) -> str:
        """Write columns ``t, re, im``; returns the text.

        ``comment`` is emitted first as a ``#``-prefixed line.
        """
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "re", "im"])
        for t, v in zip(self.times, self.values):
            w.writerow([fmt(t), fmt(v.real), fmt(v.imag)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_json(self, path=None) -> str:
        doc = {
            "header": self.header(),
            "t": [float(x) for x in self.times],
            "re": [float(x) for x in self.values.real],
            "im": [float(x) for x in self.values.imag],
        }
        text = json.dumps(doc, indent=1, sort_keys=True)
        if path is not None:
            Path(path).write_text(text)
        return text

    @classmethod
    def from_json(cls, text: str) -> "CorrelationSeries":
        doc = json.loads(text)
        h = dict(doc["header"])
        method, beta, order = h.pop("method"), h.pop("beta"), h.pop("order")
        values = np.asarray(doc["re"]) + 1j * np.asarray(doc["im"])
        return cls(np.asarray(doc["t"]), values, method, beta, order, h)

    @classmethod
    def from_csv(cls, text: str, method: str, beta: float, order: int = 2) -> "CorrelationSeries":
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        rows = list(csv.reader(lines))
        if rows[0] != ["t", "re", "im"]:
            raise ValueError(f"unexpected CSV header {rows[0]}")
        data = np.array(rows[1:], dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1] + 1j * data[:, 2], method, beta, order)
