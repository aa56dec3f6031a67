"""Render the four figure families (threshold sweep, value dominance,
dual profiles, constrained surfaces) for either model side.

Rendering is a pure function of the input CSV bytes: fixed figure size,
fixed dpi, no timestamps, so identical inputs give identical PNGs in a
fixed environment.
"""

from __future__ import annotations

import glob
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .csvio import SchemaError, Table, read_table

FIGURE_IDS = ("xi", "optimality", "lagrange2d", "lagrange3d")
SIDES = ("sn", "sp")
_FIGSIZE = (10.0, 4.2)
_DPI = 110

plt.rcParams.update({
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "svg.hashsalt": "levy-dividend-figs",
})


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    side: str
    input_dir: str
    output_path: str

    def __post_init__(self):
        if self.figure not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure!r}")
        if self.side not in SIDES:
            raise ValueError(f"unknown side {self.side!r}")


def _save(fig, path: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, dpi=_DPI, metadata={"Software": "figrender"})
    plt.close(fig)
    return path


def _input(spec: FigureSpec, name: str) -> str:
    path = os.path.join(spec.input_dir, name)
    if not os.path.exists(path):
        raise SchemaError(f"required input {name} not found in {spec.input_dir}")
    return path


def render(spec: FigureSpec) -> str:
    if spec.figure == "xi":
        return _render_xi(spec)
    if spec.figure == "optimality":
        return _render_optimality(spec)
    if spec.figure == "lagrange2d":
        return _render_lagrange2d(spec)
    return _render_lagrange3d(spec)


def _render_xi(spec: FigureSpec) -> str:
    tab = read_table(_input(spec, f"xi_{spec.side}.csv"))
    tab.require("b", "xi", "g", "xi_minus_g")
    b = np.array(tab.column("b"))
    xi = np.array(tab.column("xi"))
    g = np.array(tab.column("g"))
    if spec.side == "sn":
        idx = int(np.argmax(xi))
        label, glabel = "slope candidate", "slope ceiling"
    else:
        crossing = np.nonzero(xi >= g)[0]
        idx = int(crossing[0]) if crossing.size else 0
        label, glabel = "multiplier map", "target multiplier"
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(b, xi, color="tab:blue", lw=1.5, label=label)
    ax.plot(b, g, color="tab:gray", lw=1.0, ls=":", label=glabel)
    ax.plot([b[idx]], [xi[idx]], marker="s", ms=7, color="tab:red", ls="none",
            label=f"threshold = {b[idx]:.4g}")
    ax.set_xlabel("threshold b")
    ax.set_ylabel("selection function")
    ax.legend(loc="best")
    ax.set_title(f"threshold selection ({spec.side})")
    return _save(fig, spec.output_path)


def _render_optimality(spec: FigureSpec) -> str:
    opt = read_table(_input(spec, f"optimality_{spec.side}_opt.csv"))
    opt.require("x", "v")
    b_opt = float(opt.meta.get("b", "nan"))
    xs = np.array(opt.column("x"))
    vs = np.array(opt.column("v"))
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    ax.plot(xs, vs, color="tab:red", lw=2.0, label=f"optimal threshold {b_opt:.3g}")
    ax.plot([b_opt], [np.interp(b_opt, xs, vs)], marker="s", ms=7,
            color="tab:red", ls="none")
    for k in (1, 2, 3):
        name = f"optimality_{spec.side}_b{k}.csv"
        sub = read_table(_input(spec, name))
        sub.require("x", "v")
        bb = float(sub.meta.get("b", "nan"))
        xv = np.array(sub.column("x"))
        vv = np.array(sub.column("v"))
        ax.plot(xv, vv, ls=":", lw=1.0, color="tab:blue")
        marker = "^" if bb > b_opt else "v"
        ax.plot([bb], [np.interp(bb, xv, vv)], marker=marker, ms=6,
                color="tab:blue", ls="none")
    ax.set_xlabel("initial capital x")
    ax.set_ylabel("expected value")
    ax.legend(loc="lower right")
    ax.set_title(f"value dominance of the optimal threshold ({spec.side})")
    return _save(fig, spec.output_path)


def _render_lagrange2d(spec: FigureSpec) -> str:
    pattern = os.path.join(spec.input_dir, f"dual_profile_{spec.side}_x*.csv")
    files = sorted(glob.glob(pattern))
    if not files:
        raise SchemaError(f"no dual_profile_{spec.side}_x*.csv files in {spec.input_dir}")
    profiles = []
    for path in files:
        tab = read_table(path)
        tab.require("lam", "V")
        x = float(tab.meta["x"])
        profiles.append((x, np.array(tab.column("lam")), np.array(tab.column("V"))))
    profiles.sort(key=lambda t: t[0])
    xs = np.array([p[0] for p in profiles])
    vmat = np.array([p[2] for p in profiles])        # [x, lam]

    cons = read_table(_input(spec, f"constrained_{spec.side}.csv"))
    cons.require("x", "K", "branch", "value", "lambda_star")
    k_target = _k_from_profiles(files[0])
    cx, ck = np.array(cons.column("x")), np.array(cons.column("K"))
    branch = cons.column("branch", numeric=False)
    cval = np.array(cons.column("value"))
    clam = np.array(cons.column("lambda_star"))
    k_near = ck[np.argmin(np.abs(ck - k_target))]
    at_k = np.isclose(ck, k_near, atol=1e-12)
    bx = cx[at_k]
    bbr = [b for b, m in zip(branch, at_k) if m]
    bval = cval[at_k]
    blam = clam[at_k]
    order = np.argsort(bx)
    bx, bval, blam = bx[order], bval[order], blam[order]
    bbr = [bbr[i] for i in order]
    feas = np.isfinite(bval)
    x_lo = float(bx[feas].min()) if feas.any() else float("nan")
    uncon = [x for x, br in zip(bx, bbr) if br == "unconstrained"]
    x_hi = float(min(uncon)) if uncon else float("nan")

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    for j in range(vmat.shape[1]):
        ax1.plot(xs, vmat[:, j], ls=":", lw=0.6, color="tab:blue")
    envelope = vmat.min(axis=1)
    band = (xs >= x_lo) & (xs <= (x_hi if np.isfinite(x_hi) else xs.max()))
    ax1.plot(xs[band], envelope[band], color="tab:red", lw=2.0, label="dual envelope")
    for xv in (x_lo, x_hi):
        if np.isfinite(xv):
            ax1.axvline(xv, ls=":", lw=0.8, color="black")
            ax2.axvline(xv, ls=":", lw=0.8, color="black")
    ax1.set_xlabel("initial capital x")
    ax1.set_ylabel("dual value")
    ax1.set_title(f"multiplier family and envelope ({spec.side}, K={k_target:g})")
    ax1.legend(loc="lower right")

    interior = np.array([br == "interior" for br in bbr])
    if interior.any():
        ax2.plot(bx[interior], blam[interior], color="tab:red", lw=1.5)
    ax2.set_xlabel("initial capital x")
    ax2.set_ylabel("optimal multiplier")
    ax2.set_yscale("log")
    ax2.set_title("binding multiplier")
    fig.tight_layout()
    return _save(fig, spec.output_path)


def _k_from_profiles(path: str) -> float:
    tab = read_table(path)
    if "K" not in tab.meta:
        raise SchemaError(f"{path}: missing K in metadata comment")
    return float(tab.meta["K"])


def _render_lagrange3d(spec: FigureSpec) -> str:
    cons = read_table(_input(spec, f"constrained_{spec.side}.csv"))
    cons.require("x", "K", "branch", "value", "lambda_star")
    xs = np.array(cons.column("x"))
    ks = np.array(cons.column("K"))
    vals = np.array(cons.column("value"))
    lams = np.array(cons.column("lambda_star"))
    ux = np.unique(xs)
    uk = np.unique(ks)
    vgrid = np.full((len(uk), len(ux)), np.nan)
    lgrid = np.full((len(uk), len(ux)), np.nan)
    for x, k, v, lam in zip(xs, ks, vals, lams):
        i = int(np.searchsorted(uk, k))
        j = int(np.searchsorted(ux, x))
        vgrid[i, j] = v
        lgrid[i, j] = lam

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=_FIGSIZE)
    infeasible = ~np.isfinite(vgrid)
    vmask = np.ma.masked_where(infeasible, vgrid)
    extent = (ux.min(), ux.max(), uk.min(), uk.max())
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("black")
    im1 = ax1.imshow(vmask, origin="lower", aspect="auto", extent=extent, cmap=cmap)
    fig.colorbar(im1, ax=ax1, shrink=0.9)
    ax1.set_xlabel("initial capital x")
    ax1.set_ylabel("constraint level K")
    ax1.set_title(f"constrained value ({spec.side}); infeasible masked dark")

    lmask = np.ma.masked_where(~np.isfinite(lgrid) | (lgrid <= 0), np.log10(
        np.where(np.isfinite(lgrid) & (lgrid > 0), lgrid, 1.0)
    ))
    cmap2 = plt.get_cmap("magma").copy()
    cmap2.set_bad("dimgray")
    im2 = ax2.imshow(lmask, origin="lower", aspect="auto", extent=extent, cmap=cmap2)
    fig.colorbar(im2, ax=ax2, shrink=0.9)
    ax2.set_xlabel("initial capital x")
    ax2.set_ylabel("constraint level K")
    ax2.set_title("log10 binding multiplier")
    fig.tight_layout()
    return _save(fig, spec.output_path)
