"""Minimization of u -> theta_{Lambda+u}(alpha) at fixed Lambda.

Grid argmin oracle, the large-alpha deep-hole crossing, the small-alpha
classification of asymptotic minimizers in 2D, and the layer-by-layer
elimination that drives it.

Numerical note: for small alpha the u-dependence of theta lives entirely in
the oscillating part of the Poisson dual sum, and layers beyond the first are
exponentially below double-precision resolution relative to the leading
layer.  All small-alpha comparisons are therefore done lexicographically
across dual layers (each layer's cosine sum compared at its own scale), which
is exactly the ordering the limit alpha -> 0 induces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jacobi import DEFAULT_RTOL
from .lattice import BravaisLattice, Shell, deep_holes_2d, dual, enumerate_shells, reduce_2d
from .theta_sum import theta

# relative tie tolerance for grid survivors, per shell cosine sum
LAYER_TIE_TOL = 1e-10
GRID_TIE_TOL = 1e-12


@dataclass(frozen=True)
class MinimizerReport:
    minimizers: list
    value: float
    alpha: float
    resolution: float


@dataclass(frozen=True)
class ClassificationResult:
    case_label: str
    C: list
    deciding_shell: int


def _grid_points(n: int, dim: int):
    axes = [np.arange(n) / n for _ in range(dim)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _layer_value_matrix(L: BravaisLattice, coords: np.ndarray, n_layers: int):
    """Rows: grid points (lattice coords); columns: per-dual-layer cosine sums."""
    Ld = dual(L)
    shells = enumerate_shells(Ld, None, n_layers + 1)
    cols = []
    for sh in shells[1:]:
        # dual vector s paired with x = B(c): <s, x> = (B^T s) . c
        m = (L.basis.T @ sh.points.T).T  # integer coefficient rows
        phases = coords @ m.T
        cols.append(np.sum(np.cos(2 * math.pi * phases), axis=1))
    return np.column_stack(cols), shells


def _lex_survivors(vals: np.ndarray, start: np.ndarray | None = None):
    """Indices minimizing the rows of vals lexicographically with per-column
    tie tolerance; returns (survivor indices, deciding column index)."""
    idx = np.arange(vals.shape[0]) if start is None else start
    deciding = 0
    for j in range(vals.shape[1]):
        col = vals[idx, j]
        vmin = col.min()
        tol = LAYER_TIE_TOL * max(1.0, np.abs(col).max())
        keep = col <= vmin + tol
        if keep.sum() < len(idx):
            deciding = j + 1
        idx = idx[keep]
        if len(idx) == 1:
            break
    return idx, deciding


def argmin_shift_grid(L: BravaisLattice, alpha: float, grid_n: int = 64,
                      refine_rounds: int = 2, rtol: float = DEFAULT_RTOL) -> MinimizerReport:
    """Grid argmin of u -> theta_{Lambda+u}(alpha) over the fundamental cell.

    The grid lives in lattice coordinates [0,1)^dim.  For alpha in the direct
    regime the positive Gaussian sums are compared as floats; in the Poisson
    regime the comparison is lexicographic across dual layers, which resolves
    orderings that are flat at double precision.  Each refinement round
    shrinks the mesh by 4 around the surviving points.
    """
    if grid_n < 8:
        raise ValueError("grid_n must be >= 8")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    d = L.dim
    # a reduced basis keeps enumeration boxes tight for skewed inputs
    work = reduce_2d(L) if d == 2 else L
    to_input = np.linalg.solve(L.basis, work.basis)  # work coords -> input coords
    direct_mode = alpha * work.min_gram_eigenvalue() >= 1.0

    shared_pts = None
    if direct_mode:
        from .lattice import lattice_points_within
        from .theta_sum import _solve_gamma

        gamma = _solve_gamma(1e-40, d)
        cell_diam = float(np.linalg.norm(work.basis @ np.ones(d)))
        shared_pts = lattice_points_within(work, np.zeros(d), math.sqrt(d * gamma / alpha) + cell_diam)

    def evaluate(coords: np.ndarray):
        if direct_mode:
            vals = np.empty(len(coords))
            for start in range(0, len(coords), 512):
                chunk = coords[start:start + 512]
                shifts = chunk @ work.basis.T
                diffs = shared_pts[None, :, :] + shifts[:, None, :]
                vals[start:start + 512] = np.sum(
                    np.exp(-math.pi * alpha * np.einsum("ijk,ijk->ij", diffs, diffs)), axis=1)
            return vals.reshape(len(coords), 1)
        vals, _ = _layer_value_matrix(work, coords, n_layers=8)
        return vals

    def survivors_of(coords: np.ndarray):
        vals = evaluate(coords)
        if direct_mode:
            vmin = vals[:, 0].min()
            keep = np.flatnonzero(vals[:, 0] <= vmin * (1 + GRID_TIE_TOL))
            return coords[keep]
        idx, _ = _lex_survivors(vals)
        return coords[idx]

    coords = _grid_points(grid_n, d)
    surv = survivors_of(coords)
    step = 1.0 / grid_n
    for _ in range(refine_rounds):
        step /= 4.0
        local = []
        offsets = np.stack([g.ravel() for g in np.meshgrid(*[np.arange(-4, 5)] * d, indexing="ij")], axis=1)
        for c in surv:
            local.append((c + offsets * step) % 1.0)
        coords = np.unique(np.round(np.vstack(local), 12), axis=0)
        surv = survivors_of(coords)

    # convert work-basis coordinates back to the input basis
    surv = (surv @ to_input.T) % 1.0
    surv = np.unique(np.round(surv % 1.0, 12), axis=0)
    order = np.lexsort(surv.T[::-1])
    surv = surv[order]
    value = theta(work, L.basis @ surv[0], alpha, rtol).value
    return MinimizerReport(minimizers=[c.copy() for c in surv], value=value,
                          alpha=alpha, resolution=step)


def deep_hole_crossing(L: BravaisLattice, x: np.ndarray, alpha_hi: float,
                       n_grid: int = 50, rtol: float = DEFAULT_RTOL):
    """Smallest sampled alpha from which theta_{Lambda+c} <= theta_{Lambda+x}
    persists up to alpha_hi, with c a deep hole; None if never.

    Refuses x congruent to a deep hole (the inequality is then trivial)."""
    if L.dim != 2:
        raise ValueError("deep_hole_crossing requires a 2D lattice")
    holes, _ = deep_holes_2d(L)
    c = holes[0]
    x = np.asarray(x, dtype=float)
    for h in holes:
        diff = L.to_lattice_coords(x - h)
        if np.max(np.abs(diff - np.round(diff))) <= 1e-9:
            raise ValueError("x is itself a deep hole of the lattice")
    alphas = np.geomspace(0.1, alpha_hi, n_grid)
    ok = np.zeros(len(alphas), dtype=bool)
    for i, a in enumerate(alphas):
        tc = theta(L, c, a, rtol)
        tx = theta(L, x, a, rtol)
        ok[i] = tc.value <= tx.value + tc.abs_error + tx.abs_error
    run = None
    for i in range(len(alphas) - 1, -1, -1):
        if ok[i]:
            run = alphas[i]
        else:
            break
    return float(run) if run is not None else None


def deciding_layer_2d(L: BravaisLattice, max_layers: int = 12, grid_n: int = 512):
    """Successive restriction of (s, t) in [0,1)^2 to the minimizers of the
    per-layer dual cosine sums; stops when the survivor set is stable for two
    consecutive layers or max_layers is reached.

    Returns (deciding layer index, list of survivor coordinate arrays per
    layer).  Layer k's sum is over the k-th nonzero shell of the dual.
    """
    if L.dim != 2:
        raise ValueError("deciding_layer_2d requires a 2D lattice")
    if max_layers < 1:
        raise ValueError("max_layers must be >= 1")
    coords = _grid_points(grid_n, 2)
    vals, _ = _layer_value_matrix(L, coords, max_layers)

    # zero-information layers are common mid-stream (their cosine sums are
    # constant on the current survivor set), so the scan runs through all
    # requested layers; `deciding` is the last one that cut the set down
    survivor_sets = []
    idx = np.arange(len(coords))
    deciding = 0
    stable = 0
    for j in range(max_layers):
        col = vals[idx, j]
        vmin = col.min()
        tol = LAYER_TIE_TOL * max(1.0, np.abs(col).max())
        keep = col <= vmin + tol
        new_idx = idx[keep]
        if len(new_idx) < len(idx):
            deciding = j + 1
            stable = 0
        else:
            stable += 1
        idx = new_idx
        survivor_sets.append(coords[idx])
        if stable >= 2 and len(idx) <= 8:
            break

    # two 4x refinements around the survivors of the full pass
    step = 1.0 / grid_n
    surv = coords[idx]
    for _ in range(2):
        step /= 4.0
        offsets = np.stack([g.ravel() for g in np.meshgrid(np.arange(-4, 5), np.arange(-4, 5), indexing="ij")], axis=1)
        local = np.vstack([(c + offsets * step) % 1.0 for c in surv])
        local = np.unique(np.round(local, 12), axis=0)
        lv, _ = _layer_value_matrix(L, local, max_layers)
        lidx, _ = _lex_survivors(lv)
        surv = local[lidx]
    surv = np.unique(np.round(surv, 12), axis=0)
    if survivor_sets:
        survivor_sets[-1] = surv
    return deciding, survivor_sets


def _halves_candidates(frac: np.ndarray) -> bool:
    return bool(np.max(np.abs(frac * 2 - np.round(frac * 2))) <= 1e-6)


def classify_asymptotic_2d(L: BravaisLattice) -> ClassificationResult:
    """Asymptotic (alpha -> 0) minimizers of x -> theta_{Lambda+x}(alpha).

    Branches on the first dual layer C1: 6 -> triangular (barycenter),
    4 -> rhombic (cell centre in the C1-adapted coordinates), 2 -> the
    successive-layer elimination, which lands on the cell centre when the
    reduced dual basis is generic and on the tied half-vector pair
    {(1/2, 0), (1/2, 1/2)} when the dual shortest vector half-divides the
    second generator.  Minimizer coordinates are reported in the input
    lattice basis, modulo 1, one representative per +- symmetry class.
    """
    if L.dim != 2:
        raise ValueError("classification requires a 2D lattice")
    Ld = dual(L)
    shells = enumerate_shells(Ld, None, 3)
    c1 = len(shells[1].points)
    if c1 not in (2, 4, 6):
        raise RuntimeError(f"impossible first dual layer cardinality {c1}")

    if c1 == 6:
        holes, _ = deep_holes_2d(L)
        frac = L.to_lattice_coords(holes[0]) % 1.0
        return ClassificationResult(case_label="triangular", C=[frac], deciding_shell=1)

    deciding, survivor_sets = deciding_layer_2d(L, max_layers=12, grid_n=256)
    surv = survivor_sets[-1]
    # one representative per {x, -x} class
    reps = []
    for c in surv:
        neg = np.round((-c) % 1.0, 9) % 1.0
        cc = np.round(c % 1.0, 9) % 1.0
        rep = min(tuple(cc), tuple(neg))
        if rep not in [tuple(r) for r in reps]:
            reps.append(np.array(rep))
    reps.sort(key=tuple)

    if c1 == 4:
        return ClassificationResult(case_label="rhombic_C1_4", C=reps, deciding_shell=deciding)
    if len(reps) == 1:
        return ClassificationResult(case_label="generic_C2_small", C=reps, deciding_shell=deciding)
    return ClassificationResult(case_label="generic_quarter", C=reps, deciding_shell=deciding)
