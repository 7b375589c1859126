"""Residual reports and their fixed line format."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import GridSpec, fmt_point


def fmt_value(x: float) -> str:
    return f"{x:.5e}"


def fmt_complex(z) -> str:
    z = complex(z)
    if z.imag == 0:
        return f"{z.real:.6g}"
    if z.real == 0:
        return f"{z.imag:.6g}j"
    return f"{z.real:.6g}{z.imag:+.6g}j"


@dataclass
class ResidualEntry:
    """Worst residual of one equation tag over nodes and index tuples.

    ``per_index`` maps each 1-based index tuple to its own maximum and
    ``arrays`` keeps the signed residual fields for further inspection.
    """

    tag: str
    max: float
    at: tuple
    index: tuple | None
    per_index: dict = field(default_factory=dict)
    arrays: dict = field(default_factory=dict, repr=False)

    def line(self) -> str:
        return f"RESID {self.tag} max={fmt_value(self.max)} at={fmt_point(self.at)}"


@dataclass
class ResidualReport:
    entries: dict
    spacing: tuple
    backend: str
    skipped: dict = field(default_factory=dict)  # tag -> reason

    def __getitem__(self, tag: str) -> ResidualEntry:
        return self.entries[tag]

    def __contains__(self, tag: str) -> bool:
        return tag in self.entries

    @property
    def tags(self) -> list:
        return sorted(self.entries)

    def max(self, tag: str | None = None) -> float:
        if tag is not None:
            return self.entries[tag].max
        return max((e.max for e in self.entries.values()), default=0.0)

    def lines(self) -> list:
        out = [self.entries[t].line() for t in self.tags]
        return out + [f"SKIP {t} {self.skipped[t]}" for t in sorted(self.skipped)]

    def merged(self, other: "ResidualReport") -> "ResidualReport":
        return ResidualReport({**self.entries, **other.entries}, self.spacing, self.backend,
                              {**self.skipped, **other.skipped})


def residual_entry(tag: str, arrays: dict, grid: GridSpec, weights: dict | None = None) -> ResidualEntry:
    """Collapse signed residual arrays (keyed by 1-based index tuples)."""
    per_index = {}
    best, best_at, best_index = 0.0, grid.point((0,) * grid.ndim), None
    for index, arr in arrays.items():
        mag = np.abs(np.broadcast_to(arr, grid.shape))
        if weights is not None:
            mag = mag * weights[index]
        flat = int(np.argmax(mag))
        value = float(mag.flat[flat])
        per_index[index] = value
        if value > best or best_index is None:
            best = value
            best_at = grid.point(np.unravel_index(flat, grid.shape))
            best_index = index
    return ResidualEntry(tag, best, best_at, best_index, per_index, dict(arrays))


def build_report(tagged: dict, grid: GridSpec, backend: str) -> ResidualReport:
    entries = {tag: residual_entry(tag, arrays, grid) for tag, arrays in tagged.items()}
    spacing = tuple(grid.spacing(a) for a in range(grid.ndim))
    return ResidualReport(entries, spacing, backend)
