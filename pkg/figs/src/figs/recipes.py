"""Figure recipes: which CSVs feed which plot, validated before rendering.

The input files follow the simulator's export schemas:
time-series CSVs carry exactly ``time_us,observable_id,mean,sem,M`` and
walk CSVs carry ``time_us,site,mean_n``.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import numpy as np

FIGURE_IDS = ("fig2c", "fig3c", "fig3d", "fig4a", "fig4b", "fig5a", "fig5b")

TS_HEADER = ["time_us", "observable_id", "mean", "sem", "M"]
WALK_HEADER = ["time_us", "site", "mean_n"]

# figure id -> (required input keys, schema per key)
_INPUTS = {
    "fig2c": {"sse": "ts", "lme": "ts", "mcwf": "ts"},
    "fig3c": {"walk": "walk"},
    "fig3d": {"walk": "walk"},
    "fig4a": {"ideal": "ts"},
    "fig4b": {"broken": "ts"},
    "fig5a": {"sweep": "ts"},
    "fig5b": {"eval": "ts"},
}


class RecipeError(ValueError):
    """Bad recipe or an input CSV that does not match its schema."""


@dataclass
class FigureRecipe:
    figure: str
    inputs: dict
    output: str
    L: int = 9
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise RecipeError(f"unknown figure id {self.figure!r}")
        need = set(_INPUTS[self.figure])
        have = set(self.inputs)
        if need - have:
            raise RecipeError(f"{self.figure} needs inputs {sorted(need - have)}")

    @classmethod
    def from_json(cls, path) -> "FigureRecipe":
        with open(path) as fh:
            payload = json.load(fh)
        base = os.path.dirname(os.path.abspath(path))
        inputs = {k: v if os.path.isabs(v) else os.path.join(base, v)
                  for k, v in payload["inputs"].items()}
        output = payload["output"]
        if not os.path.isabs(output):
            output = os.path.join(base, output)
        return cls(figure=payload["figure"], inputs=inputs, output=output,
                   L=int(payload.get("L", 9)), style=payload.get("style", {}))


def read_time_series(path) -> dict:
    """Parse a time-series CSV into {observable_id: (t, mean, sem, M)}."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != TS_HEADER:
            raise RecipeError(f"{path}: expected header {TS_HEADER}, got {header}")
        rows = list(r)
    if not rows:
        raise RecipeError(f"{path}: no data rows")
    series: dict = {}
    for t, obs, mean, sem, m in rows:
        series.setdefault(obs, []).append((float(t), float(mean), float(sem), int(m)))
    out = {}
    for obs, pts in series.items():
        arr = np.array(pts)
        if np.any(np.diff(arr[:, 0]) < 0):
            raise RecipeError(f"{path}: time not monotone for {obs}")
        if np.any(arr[:, 2] < 0):
            raise RecipeError(f"{path}: negative sem for {obs}")
        out[obs] = arr
    return out


def read_walk(path):
    """Parse a walk CSV into (times, sites, density[t, site])."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != WALK_HEADER:
            raise RecipeError(f"{path}: expected header {WALK_HEADER}, got {header}")
        rows = [(float(t), int(s), float(n)) for t, s, n in r]
    if not rows:
        raise RecipeError(f"{path}: no data rows")
    ts = sorted({t for t, _, _ in rows})
    sites = sorted({s for _, s, _ in rows})
    data = np.full((len(ts), len(sites)), np.nan)
    ti = {t: i for i, t in enumerate(ts)}
    si = {s: i for i, s in enumerate(sites)}
    for t, s, n in rows:
        data[ti[t], si[s]] = n
    if np.any(np.isnan(data)):
        raise RecipeError(f"{path}: missing (time, site) combinations")
    return np.array(ts), np.array(sites), data


def sector_reference_values(L: int) -> dict:
    """Steady-correlation references, recomputed from L (never hard-coded)."""
    l = (L - 1) // 2
    return {"sector_0": 1.0 / L, "sector_1": (l - 4.0) / (L * l)}


def phase_reference_curve(L: int, phis: np.ndarray) -> np.ndarray:
    refs = sector_reference_values(L)
    return (np.cos(phis / 2) ** 2 * refs["sector_0"]
            + np.sin(phis / 2) ** 2 * refs["sector_1"])
