"""Render one figure per recipe: deterministic PNG with metadata.

Rendering is a pure function of the CSV bytes and the recipe: fixed
canvas, fonts and colormap, no timestamps.  The reference overlays are
recomputed from the chain length and embedded in the PNG text metadata
(keys ``figs:figure`` and ``figs:references``) so downstream checks can
assert them without parsing pixels.
"""

from __future__ import annotations

import json
import re

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .recipes import (  # noqa: E402
    FigureRecipe,
    RecipeError,
    phase_reference_curve,
    read_time_series,
    read_walk,
    sector_reference_values,
)

_RC = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "savefig.dpi": 120,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.25,
}

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#e377c2", "#7f7f7f", "#17becf")


def _band(ax, arr, label, color):
    t, mean, sem = arr[:, 0], arr[:, 1], arr[:, 2]
    ax.plot(t, mean, color=color, lw=1.2, label=label)
    ax.fill_between(t, mean - sem, mean + sem, color=color, alpha=0.25, lw=0)


def _phi_from_id(obs: str) -> float:
    m = re.search(r"phi_([0-9.]+)pi", obs)
    if not m:
        raise RecipeError(f"cannot parse phase from observable id {obs!r}")
    return float(m.group(1)) * np.pi


def render(recipe: FigureRecipe) -> dict:
    """Draw the figure and write the PNG; returns the embedded metadata."""
    refs: dict = {}
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if recipe.figure == "fig2c":
            sse = read_time_series(recipe.inputs["sse"])
            lme = read_time_series(recipe.inputs["lme"])
            mcwf = read_time_series(recipe.inputs["mcwf"])
            for k, obs in enumerate(sorted(sse)):
                _band(ax, sse[obs], f"pulse ensemble {obs}", _COLORS[k])
            for k, obs in enumerate(sorted(lme)):
                arr = lme[obs]
                ax.plot(arr[:, 0], arr[:, 1], "k--", lw=1.0,
                        label="master equation" if k == 0 else None)
            for k, obs in enumerate(sorted(mcwf)):
                arr = mcwf[obs]
                ax.plot(arr[:, 0], arr[:, 1], ":", color=_COLORS[k + 2], lw=1.0,
                        label=f"quantum jumps {obs}")
            ax.set_xlabel("time (us)")
            ax.set_ylabel("<sigma_z>")
            ax.legend(loc="upper right", fontsize=7)

        elif recipe.figure in ("fig3c", "fig3d"):
            ts, sites, data = read_walk(recipe.inputs["walk"])
            im = ax.imshow(data.T, aspect="auto", origin="lower",
                           cmap="viridis", vmin=0.0, vmax=max(1e-9, data.max()),
                           extent=(ts[0], ts[-1], sites[0] - 0.5, sites[-1] + 0.5))
            fig.colorbar(im, ax=ax, label="site density")
            ax.set_xlabel("time (us)")
            ax.set_ylabel("site")

        elif recipe.figure in ("fig4a", "fig4b"):
            key = "ideal" if recipe.figure == "fig4a" else "broken"
            series = read_time_series(recipe.inputs[key])
            for k, obs in enumerate(sorted(series)):
                _band(ax, series[obs], obs, _COLORS[k])
            if recipe.figure == "fig4a":
                refs = sector_reference_values(recipe.L)
                for name, val in refs.items():
                    ax.axhline(val, color="gray", ls="--", lw=0.9)
            ax.set_xlabel("time (us)")
            ax.set_ylabel("end-to-end z correlation")
            ax.legend(loc="upper right", fontsize=7)

        elif recipe.figure == "fig5a":
            series = read_time_series(recipe.inputs["sweep"])
            ordered = sorted(series, key=_phi_from_id)
            for k, obs in enumerate(ordered):
                _band(ax, series[obs], f"phi = {_phi_from_id(obs) / np.pi:.3g} pi",
                      _COLORS[k % len(_COLORS)])
            ax.set_xlabel("time (us)")
            ax.set_ylabel("end-to-end z correlation")
            ax.legend(loc="upper right", fontsize=6, ncols=2)

        elif recipe.figure == "fig5b":
            series = read_time_series(recipe.inputs["eval"])
            by_time: dict = {}
            for obs, arr in series.items():
                phi = _phi_from_id(obs)
                for t, mean, sem, _ in arr:
                    by_time.setdefault(round(t, 4), []).append((phi, mean, sem))
            for k, (t, pts) in enumerate(sorted(by_time.items())):
                pts = np.array(sorted(pts))
                ax.errorbar(pts[:, 0] / np.pi, pts[:, 1], yerr=pts[:, 2],
                            fmt="o", ms=3.5, color=_COLORS[k],
                            label=f"t = {t:g} us")
            phis = np.linspace(0, np.pi, 181)
            curve = phase_reference_curve(recipe.L, phis)
            ax.plot(phis / np.pi, curve, "k--", lw=1.0,
                    label="sector-weighted reference")
            refs = {"curve_phi_0": float(curve[0]),
                    "curve_phi_pi": float(curve[-1])}
            ax.set_xlabel("phi / pi")
            ax.set_ylabel("end-to-end z correlation")
            ax.legend(loc="upper right", fontsize=7)

        metadata = {
            "figs:figure": recipe.figure,
            "figs:references": json.dumps(refs, sort_keys=True),
        }
        fig.savefig(recipe.output, format="png", metadata=metadata)
        plt.close(fig)
    return metadata
