"""Bravais lattices as basis matrices.

Columns of the basis are the generators: Lambda = basis @ Z^d.  Presets for
the lattices used throughout (Z^d, A2, D3, FCC, BCC, the rectangular family
L_y, the body-centred-orthorhombic family L_{y,t}, rhombic), duals via the
inverse transpose, Iwasawa QDT decomposition, shell enumeration, 2D Lagrange
reduction and deep holes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SHELL_TOL = 1e-9

# unit-density layered scales for the cubic lattices (triangular-layer picture)
T_BCC = 2 ** (-2 / 3) * 3 ** (-1 / 2)
L_BCC = 2 ** (5 / 6)
T_FCC = 2 ** (2 / 3) * 3 ** (-1 / 2)
L_FCC = 2 ** (1 / 6)


@dataclass(frozen=True)
class BravaisLattice:
    """A full-rank lattice Lambda = basis @ Z^dim (generators are columns)."""

    basis: np.ndarray
    gram: np.ndarray = field(init=False, repr=False)
    covolume: float = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("basis must be a square matrix")
        det = np.linalg.det(b)
        if abs(det) < 1e-14:
            raise ValueError("basis is singular")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "gram", b.T @ b)
        object.__setattr__(self, "covolume", abs(det))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def min_gram_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.gram)[0])

    def to_lattice_coords(self, x: np.ndarray) -> np.ndarray:
        return np.linalg.solve(self.basis, np.asarray(x, dtype=float))

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        c = self.to_lattice_coords(x)
        return bool(np.max(np.abs(c - np.round(c))) <= tol)


@dataclass(frozen=True)
class Shell:
    """Lattice points sharing one squared norm, sorted lexicographically."""

    sq_norm: float
    points: np.ndarray


@dataclass(frozen=True)
class IwasawaQDT:
    """M = scale * Q diag(d_diag) T with Q in SO(d), prod(d_diag) = 1, T unit lower triangular."""

    q: np.ndarray
    d_diag: np.ndarray
    t_lower: np.ndarray
    scale: float


_PRESET_ARITY = {
    "Zd": 1,
    "A2": 1,
    "D3": 0,
    "FCC": 0,
    "BCC": 0,
    "Ly": 1,
    "Lyt": 2,
    "rhombic": 2,
}


def make_preset(name: str, params: list[float] | None = None) -> BravaisLattice:
    """Construct a named lattice.

    Zd: [d]; A2: [side]; D3/FCC/BCC: no params (integer-scale bases);
    Ly: [y]; Lyt: [y, t]; rhombic: [a, b].
    """
    params = list(params or [])
    if name not in _PRESET_ARITY:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(_PRESET_ARITY)}")
    if len(params) != _PRESET_ARITY[name]:
        raise ValueError(f"preset {name} takes {_PRESET_ARITY[name]} parameter(s), got {len(params)}")

    if name == "Zd":
        d = int(params[0])
        if d < 1 or d != params[0]:
            raise ValueError("Zd dimension must be a positive integer")
        return BravaisLattice(np.eye(d))
    if name == "A2":
        s = params[0]
        if s <= 0:
            raise ValueError("A2 side length must be positive")
        return BravaisLattice(s * np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]]))
    if name == "D3":
        return BravaisLattice(np.array([[1.0, 1.0, 0.0], [1.0, -1.0, 1.0], [0.0, 0.0, 1.0]]).T @ np.eye(3))
    if name == "FCC":
        return BravaisLattice(np.array([[0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]]).T)
    if name == "BCC":
        return BravaisLattice(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.5]]).T)
    if name == "Ly":
        y = params[0]
        if y < 1:
            raise ValueError("Ly requires y >= 1")
        return BravaisLattice(np.diag([math.sqrt(y), 1 / math.sqrt(y)]))
    if name == "Lyt":
        y, t = params
        if y < 1:
            raise ValueError("Lyt requires y >= 1")
        if t <= 0:
            raise ValueError("Lyt requires t > 0")
        ry = math.sqrt(y)
        return BravaisLattice(np.array([
            [ry, 0.0, ry / 2],
            [0.0, 1 / ry, 1 / (2 * ry)],
            [0.0, 0.0, t / 2],
        ]))
    # rhombic: generators (a, b), (0, 2a)
    a, b = params
    if a <= 0:
        raise ValueError("rhombic requires a > 0")
    return BravaisLattice(np.array([[a, 0.0], [b, 2 * a]]).T)


def dual(L: BravaisLattice) -> BravaisLattice:
    """The dual lattice, basis (B^T)^{-1}."""
    return BravaisLattice(np.linalg.inv(L.basis.T))


def normalize_density(L: BravaisLattice) -> BravaisLattice:
    """Uniformly rescale to covolume 1."""
    return BravaisLattice(L.basis / L.covolume ** (1.0 / L.dim))


def iwasawa_qdt(M: np.ndarray) -> IwasawaQDT:
    """Decompose M = scale * Q D T, Q special orthogonal, D positive diagonal of
    determinant one, T unit lower triangular.

    Columns are orthogonalized from last to first so that T comes out unit
    *lower* triangular.  A matrix with negative determinant cannot admit this
    form with Q in SO(d) (det M = det Q * prod D > 0 forced), so we first flip
    the sign of the first column; the generated lattice is unchanged and the
    reconstruction invariant refers to the sign-fixed matrix.
    """
    M = np.asarray(M, dtype=float)
    d = M.shape[0]
    if M.shape != (d, d):
        raise ValueError("matrix must be square")
    det = np.linalg.det(M)
    if abs(det) < 1e-14:
        raise ValueError("matrix is singular")
    if det < 0:
        M = M.copy()
        M[:, 0] = -M[:, 0]

    q = np.zeros((d, d))
    c = np.zeros(d)
    coeff = np.zeros((d, d))  # coeff[i, j]: component of column j along q_i
    for j in range(d - 1, -1, -1):
        v = M[:, j].copy()
        for i in range(j + 1, d):
            coeff[i, j] = q[:, i] @ M[:, j]
            v -= coeff[i, j] * q[:, i]
        c[j] = np.linalg.norm(v)
        if c[j] < 1e-14:
            raise ValueError("matrix is numerically singular")
        q[:, j] = v / c[j]

    t = np.eye(d)
    for j in range(d):
        for i in range(j + 1, d):
            t[i, j] = coeff[i, j] / c[i]
    scale = float(np.prod(c)) ** (1.0 / d)
    return IwasawaQDT(q=q, d_diag=c / scale, t_lower=t, scale=scale)


def _coefficient_box(L: BravaisLattice, center_coords: np.ndarray, radius: float):
    """Integer coordinate ranges covering the ball |B n - shift| <= radius."""
    Binv = np.linalg.inv(L.basis)
    row_norms = np.linalg.norm(Binv, axis=1)
    lo = np.floor(center_coords - row_norms * radius).astype(int)
    hi = np.ceil(center_coords + row_norms * radius).astype(int)
    return lo, hi


def lattice_points_within(L: BravaisLattice, center: np.ndarray, radius: float) -> np.ndarray:
    """All points of Lambda - center with |p| <= radius (exhaustive)."""
    center = np.asarray(center, dtype=float)
    cc = L.to_lattice_coords(center)
    lo, hi = _coefficient_box(L, cc, radius)
    grids = np.meshgrid(*[np.arange(l, h + 1) for l, h in zip(lo, hi)], indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    pts = coords @ L.basis.T - center
    keep = np.einsum("ij,ij->i", pts, pts) <= radius * radius * (1 + 1e-12)
    return pts[keep]


def enumerate_shells(L: BravaisLattice, center: np.ndarray | None = None, count: int = 1) -> list[Shell]:
    """The first `count` shells of {p - center : p in Lambda} by squared norm.

    Exhaustive within each returned norm: only shells whose norm is certified
    complete by the enumeration radius are returned.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if center is None:
        center = np.zeros(L.dim)
    # covolume-based guess for the radius holding `count` shells, then grow
    radius = 1.2 * (count + 1) ** (1.0 / L.dim) * L.covolume ** (1.0 / L.dim) + np.linalg.norm(center)
    for _ in range(60):
        pts = lattice_points_within(L, center, radius)
        sq = np.einsum("ij,ij->i", pts, pts)
        order = np.argsort(sq)
        sq, pts = sq[order], pts[order]
        shells: list[Shell] = []
        i = 0
        r2max = (radius * (1 - 1e-12)) ** 2
        while i < len(sq) and len(shells) < count:
            j = i
            tol = SHELL_TOL * max(1.0, sq[i])
            while j < len(sq) and sq[j] - sq[i] <= tol:
                j += 1
            if sq[i] > r2max:
                break  # shell may be clipped by the ball; need larger radius
            group = pts[i:j]
            key = np.lexsort(group.T[::-1])
            shells.append(Shell(sq_norm=float(np.mean(sq[i:j])), points=group[key]))
            i = j
        if len(shells) >= count:
            return shells[:count]
        radius *= 1.5
    raise RuntimeError("shell enumeration failed to converge")


def reduce_2d(L: BravaisLattice) -> BravaisLattice:
    """Lagrange-Gauss reduction: |v1| <= |v2| and |v1.v2| <= |v1|^2 / 2."""
    if L.dim != 2:
        raise ValueError("reduce_2d requires a 2D lattice")
    v1, v2 = L.basis[:, 0].copy(), L.basis[:, 1].copy()
    if v1 @ v1 > v2 @ v2:
        v1, v2 = v2, v1
    for _ in range(200):
        m = round((v1 @ v2) / (v1 @ v1))
        v2 = v2 - m * v1
        if v2 @ v2 >= v1 @ v1:
            break
        v1, v2 = v2, v1
    return BravaisLattice(np.column_stack([v1, v2]))


def _closest_lattice_distance(L: BravaisLattice, x: np.ndarray) -> float:
    """min_{p in Lambda} |x - p| by searching a small coefficient neighborhood."""
    c = L.to_lattice_coords(x)
    base = np.floor(c).astype(int)
    best = math.inf
    rng = range(-2, 4)
    if L.dim == 2:
        for i in rng:
            for j in rng:
                p = L.basis @ (base + np.array([i, j])) - x
                best = min(best, float(p @ p))
    else:
        for i in rng:
            for j in rng:
                for k in rng:
                    p = L.basis @ (base + np.array([i, j, k])) - x
                    best = min(best, float(p @ p))
    return math.sqrt(best)


def _circumcenter(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    ab, ac = b - a, c - a
    m = np.array([ab, ac])
    rhs = 0.5 * np.array([ab @ ab, ac @ ac])
    return a + np.linalg.solve(m, rhs)


def _is_obtuse(a, b, c) -> bool:
    for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
        if (q - p) @ (r - p) < -1e-12:
            return True
    return False


def deep_holes_2d(L: BravaisLattice) -> tuple[list[np.ndarray], float]:
    """Deep holes (maximizers of the distance to the lattice) of a 2D lattice.

    Reduced fundamental cell is split into the triangles (0, v1, v1+v2) and
    (0, v2, v1+v2); candidates are circumcenters, clamped to the longest edge
    midpoint for obtuse triangles, then polished by local grid refinement and
    deduplicated modulo the lattice.
    """
    if L.dim != 2:
        raise ValueError("deep_holes_2d requires a 2D lattice")
    R = reduce_2d(L)  # same lattice; keeps the closest-vector search local
    v1, v2 = R.basis[:, 0], R.basis[:, 1]
    if v1 @ v2 > 0:
        v2 = -v2  # obtuse-angle representative keeps the triangles fat
    zero = np.zeros(2)
    cands = []
    for tri in ((zero, v1, v1 + v2), (zero, v2, v1 + v2)):
        if _is_obtuse(*tri):
            edges = [(tri[0], tri[1]), (tri[1], tri[2]), (tri[0], tri[2])]
            a, b = max(edges, key=lambda e: (e[1] - e[0]) @ (e[1] - e[0]))
            cands.append((a + b) / 2)
        else:
            cands.append(_circumcenter(*tri))

    # local refinement around each candidate
    polished = []
    for c in cands:
        x = c.copy()
        step = 0.05 * math.sqrt(v1 @ v1)
        for _ in range(40):
            best, bestd = x, _closest_lattice_distance(R, x)
            for dx in (-step, 0.0, step):
                for dy in (-step, 0.0, step):
                    y = x + np.array([dx, dy])
                    dist = _closest_lattice_distance(R, y)
                    if dist > bestd:
                        best, bestd = y, dist
            x = best
            step *= 0.55
        polished.append((x, _closest_lattice_distance(R, x)))

    dist = max(d for _, d in polished)
    keep: list[np.ndarray] = []
    for x, d in polished:
        if d < dist - 1e-9:
            continue
        cx = L.to_lattice_coords(x) % 1.0
        cx[cx > 1 - 1e-9] = 0.0
        x = L.basis @ cx
        if not any(np.allclose(x, y, atol=1e-7) for y in keep):
            keep.append(x)
    keep.sort(key=lambda p: (round(p[0], 8), round(p[1], 8)))
    return keep, dist
