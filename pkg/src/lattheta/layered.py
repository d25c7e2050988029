"""Periodic layered stackings of a (d-1)-dimensional lattice.

A configuration stacks copies of a base lattice at vertical spacing t, the
k-th copy translated in-plane by scale_l * alphabet[sequence(k)].  The average
Gaussian energy per point is

    E(alpha) = (1/P) sum_{h=1..P} sum_{k in Z}
                 e^{-pi alpha t^2 (h-k)^2} * theta_{l(L0 + s(h) - s(k))}(alpha),

which for the bijection stackings over the triangular lattice reproduces the
FCC and BCC Bravais thetas, and for the period-2 stacking the HCP value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .jacobi import DEFAULT_RTOL
from .lattice import BravaisLattice, L_BCC, L_FCC, T_BCC, T_FCC, make_preset
from .theta_sum import ThetaResult, theta, theta_shift_gap


@dataclass(frozen=True)
class ShiftAlphabet:
    """A finite set H of in-plane shift vectors (pairwise distinct)."""

    vectors: tuple

    def __post_init__(self):
        vecs = tuple(np.asarray(v, dtype=float) for v in self.vectors)
        if len(vecs) < 1:
            raise ValueError("alphabet must contain at least one shift")
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                if np.max(np.abs(vecs[i] - vecs[j])) <= 1e-12:
                    raise ValueError("alphabet vectors must be pairwise distinct")
        object.__setattr__(self, "vectors", vecs)

    def __len__(self) -> int:
        return len(self.vectors)


@dataclass(frozen=True)
class ShiftSequence:
    """A periodic map Z -> {0, ..., |H|-1} given by one period of indices."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if len(idx) < 1:
            raise ValueError("period must be >= 1")
        object.__setattr__(self, "indices", idx)

    @property
    def period(self) -> int:
        return len(self.indices)

    def __call__(self, k: int) -> int:
        return self.indices[k % self.period]


@dataclass(frozen=True)
class LayeredConfig:
    base: BravaisLattice
    alphabet: ShiftAlphabet
    sequence: ShiftSequence
    spacing_t: float
    scale_l: float

    def __post_init__(self):
        if self.spacing_t <= 0 or self.scale_l <= 0:
            raise ValueError("spacing and scale must be positive")
        if max(self.sequence.indices) >= len(self.alphabet):
            raise ValueError("sequence indices exceed alphabet size")


# in-plane shift alphabet for triangular layers: origin and the two barycenters
_TRI_ALPHABET = ShiftAlphabet((
    (0.0, 0.0),
    (0.5, 0.5 / math.sqrt(3)),
    (0.0, 1.0 / math.sqrt(3)),
))


def preset_layered(name: str, unit_density: bool = True) -> LayeredConfig:
    """fcc / bcc / hcp as stackings of the triangular lattice A2.

    fcc and bcc use the period-3 bijection sequence, hcp the period-2
    alternation with fcc's spacing.  With unit_density the scales are the
    covolume-1 constants; otherwise the base keeps side 1 (scale_l = 1) and
    only the aspect ratio l/t is fixed.
    """
    if name not in ("fcc", "bcc", "hcp"):
        raise ValueError(f"unknown layered preset {name!r}")
    seq = ShiftSequence((0, 1, 2)) if name in ("fcc", "bcc") else ShiftSequence((0, 1))
    if name == "bcc":
        t, l = (T_BCC, L_BCC) if unit_density else (1.0 / (2 * math.sqrt(6)), 1.0)
    else:
        t, l = (T_FCC, L_FCC) if unit_density else (math.sqrt(2) / math.sqrt(3), 1.0)
    return LayeredConfig(base=make_preset("A2", [1.0]), alphabet=_TRI_ALPHABET,
                         sequence=seq, spacing_t=t, scale_l=l)


def _k_range(alpha: float, t: float, period: int, rtol: float) -> int:
    eps = rtol / 10.0
    return math.ceil(math.sqrt(max(math.log(1.0 / eps), 1.0) / (math.pi * alpha * t * t))) + period


def _shift_thetas(config: LayeredConfig, alpha: float, rtol: float) -> dict:
    """theta_{l(L0 + h_i - h_j)}(alpha) for every alphabet index pair."""
    scaled = BravaisLattice(config.scale_l * config.base.basis)
    cache: dict[tuple[int, int], ThetaResult] = {}
    H = config.alphabet.vectors
    for i in range(len(H)):
        for j in range(len(H)):
            delta = config.scale_l * (H[i] - H[j])
            cache[(i, j)] = theta(scaled, delta, alpha, rtol)
    return cache


def layered_theta(config: LayeredConfig, alpha: float, rtol: float = DEFAULT_RTOL) -> ThetaResult:
    """Average Gaussian energy per point of the layered configuration."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    P = config.sequence.period
    t = config.spacing_t
    cache = _shift_thetas(config, alpha, rtol)
    m = _k_range(alpha, t, P, rtol)
    value = 0.0
    err = 0.0
    npts = 0
    for h in range(P):
        for k in range(h - m, h + m + 1):
            w = math.exp(-math.pi * alpha * t * t * (h - k) ** 2)
            res = cache[(config.sequence(h), config.sequence(k))]
            value += w * res.value
            err += w * res.abs_error
            npts += res.points_summed
    value /= P
    err /= P
    # vertical tail: remaining |h-k| > m terms, bounded by a geometric series
    r = math.exp(-math.pi * alpha * t * t * (2 * m + 1))
    theta_max = max(res.value + res.abs_error for res in cache.values())
    err += 2 * theta_max * math.exp(-math.pi * alpha * t * t * m * m) * r / (1.0 - r)
    return ThetaResult(value=value, abs_error=err, method="layered", points_summed=npts)


def _rational_coords(base: BravaisLattice, vectors, max_den: int = 48):
    """Lattice coordinates of the vectors as exact small-denominator rationals,
    or None when they are not rational to within 1e-10."""
    from fractions import Fraction

    out = []
    for v in vectors:
        c = base.to_lattice_coords(np.asarray(v, dtype=float))
        fr = []
        for x in c:
            f = Fraction(x).limit_denominator(max_den)
            if abs(float(f) - x) > 1e-10:
                return None
            fr.append(f)
        out.append(tuple(fr))
    return out


def _rational_gram(base: BravaisLattice, max_den: int = 48):
    """Gram matrix as g0 * (integer matrix) / den, or None if not rational."""
    from fractions import Fraction

    G = base.gram
    g0 = G[0, 0]
    fr = []
    for i in range(base.dim):
        for j in range(base.dim):
            f = Fraction(G[i, j] / g0).limit_denominator(max_den)
            if abs(float(f) - G[i, j] / g0) > 1e-10:
                return None
            fr.append(f)
    den = math.lcm(*[f.denominator for f in fr])
    ints = np.array([int(f * den) for f in fr], dtype=object).reshape(base.dim, base.dim)
    return g0, ints, den


def _exact_class_gap(base: BravaisLattice, scale_l: float, coords1, coords2, alpha: float,
                     rtol: float) -> ThetaResult | None:
    """theta_{l(L0+d1)} - theta_{l(L0+d2)} with exponents tracked as exact
    integer multiples of one irrational unit, so isometric shift classes
    cancel exactly.  Returns None when the rational structure is unavailable.
    """
    rg = _rational_gram(base)
    if rg is None:
        return None
    g0, gint, gden = rg
    from fractions import Fraction

    D = math.lcm(*[f.denominator for f in coords1 + coords2])
    d = base.dim
    # exponent(n) = pi*alpha*l^2*g0/(gden*D^2) * integer_form(D n + D delta)
    unit = math.pi * alpha * scale_l ** 2 * g0 / (gden * D * D)
    # radius covering the certified ball on the scaled lattice
    from .theta_sum import _solve_gamma, _tail_factor

    neg_log_eps = -math.log(min(rtol / 4.0, 1e-6))
    lam_min = np.linalg.eigvalsh(base.gram)[0] * scale_l ** 2
    for _ in range(12):
        gamma = _solve_gamma(math.exp(-min(neg_log_eps, 700.0)), d)
        radius = math.sqrt(d * gamma / alpha)
        kmax = int(math.floor((math.pi * alpha * radius ** 2) / unit)) + 1
        counts: dict[int, int] = {}
        for coords, sign in ((coords1, 1), (coords2, -1)):
            dd = np.array([int(c * D) for c in coords], dtype=object)
            span = int(math.ceil(radius / math.sqrt(lam_min))) + 2
            rng = np.arange(-span, span + 1)
            grids = np.meshgrid(*[rng] * d, indexing="ij")
            nn = np.stack([g.ravel() for g in grids], axis=1).astype(object) * D
            w = nn + dd
            q = np.einsum("ij,jk,ik->i", w, gint, w)
            for qi in q:
                k = int(qi)
                if k <= kmax:
                    counts[k] = counts.get(k, 0) + sign
        value = 0.0
        mass = 0.0
        for k, c in sorted(counts.items()):
            term = math.exp(-unit * k)
            mass += abs(c) * term
            if c:
                value += c * term
        f = _tail_factor(gamma, d)
        tail = 2 * f * (1.0 + mass) / (1.0 - f) + 4e-16 * mass
        if abs(value) > 4 * tail or tail < 1e-290 or d * math.pi * gamma > 660:
            return ThetaResult(value=value, abs_error=tail, method="direct-exact", points_summed=0)
        neg_log_eps = min(neg_log_eps * 2.0, 700.0)
    return ThetaResult(value=value, abs_error=tail, method="direct-exact", points_summed=0)


def layered_theta_gap(a: LayeredConfig, b: LayeredConfig, alpha: float,
                      rtol: float = DEFAULT_RTOL) -> ThetaResult:
    """layered_theta(a) - layered_theta(b) as a sum of per-class differences.

    Requires the two configurations to share base, alphabet, spacing and
    scale; periods are lifted to the least common multiple.  When the shift
    alphabet is rational in lattice coordinates the in-plane differences are
    evaluated with exact integer exponent bookkeeping (isometric classes
    cancel exactly); otherwise a paired floating-point difference is used.
    Either way the result stays accurate far below the double-precision
    resolution of the individual energies.
    """
    if not np.allclose(a.base.basis, b.base.basis) or a.spacing_t != b.spacing_t \
            or a.scale_l != b.scale_l or len(a.alphabet) != len(b.alphabet):
        raise ValueError("gap evaluation needs identical base, alphabet, spacing and scale")
    P = math.lcm(a.sequence.period, b.sequence.period)
    t, l = a.spacing_t, a.scale_l
    scaled = BravaisLattice(l * a.base.basis)
    H = a.alphabet.vectors
    rat = _rational_coords(a.base, H)
    use_exact = rat is not None and alpha * scaled.min_gram_eigenvalue() >= 1.0
    m = _k_range(alpha, t, P, rtol)
    gap_cache: dict[tuple[int, int, int, int], ThetaResult] = {}
    value = 0.0
    err = 0.0
    for h in range(P):
        for k in range(h - m, h + m + 1):
            ia, ja = a.sequence(h), a.sequence(k)
            ib, jb = b.sequence(h), b.sequence(k)
            key = (ia, ja, ib, jb)
            if (ia, ja) == (ib, jb):
                continue  # identical classes cancel exactly
            if key not in gap_cache:
                res = None
                if use_exact:
                    c1 = tuple(x - y for x, y in zip(rat[ia], rat[ja]))
                    c2 = tuple(x - y for x, y in zip(rat[ib], rat[jb]))
                    res = _exact_class_gap(a.base, l, c1, c2, alpha, rtol)
                if res is None:
                    d1 = l * (H[ia] - H[ja])
                    d2 = l * (H[ib] - H[jb])
                    res = theta_shift_gap(scaled, d1, d2, alpha, rtol)
                gap_cache[key] = res
            res = gap_cache[key]
            w = math.exp(-math.pi * alpha * t * t * (h - k) ** 2)
            value += w * res.value
            err += w * res.abs_error
    value /= P
    err /= P
    r = math.exp(-math.pi * alpha * t * t * (2 * m + 1))
    err += 2 * math.exp(-math.pi * alpha * t * t * m * m) * r / (1.0 - r)
    return ThetaResult(value=value, abs_error=err, method="layered-gap", points_summed=0)


def same_symmetries_check(base: BravaisLattice, alphabet: ShiftAlphabet, radius: float) -> bool:
    """Finite-radius necessary condition for the alphabet to share the base
    lattice's symmetries: all pairwise difference-distance multisets agree
    after trimming boundary-sensitive entries."""
    H = alphabet.vectors
    diam = max(float(np.linalg.norm(x - y)) for x in H for y in H)
    if radius <= 2 * max(float(np.linalg.norm(h)) for h in H) or radius <= diam:
        raise ValueError("radius too small for a meaningful symmetry check")
    from .lattice import lattice_points_within

    pts = lattice_points_within(base, np.zeros(base.dim), radius)
    norms = np.linalg.norm(pts, axis=1)
    keep = norms <= radius - diam
    pts = pts[keep]
    spectra = []
    for x in H:
        for y in H:
            if np.max(np.abs(x - y)) <= 1e-12:
                continue
            dists = np.sort(np.linalg.norm(pts + (x - y), axis=1))
            spectra.append(dists)
    if not spectra:
        return True
    ref = spectra[0]
    return all(len(s) == len(ref) and np.allclose(s, ref, atol=1e-9, rtol=0) for s in spectra[1:])


def mismatch_fraction(sequence: ShiftSequence, k: int) -> float:
    """m_k: fraction of ordered (layer, +-k) pairs whose shifts differ."""
    if k < 1:
        raise ValueError("k must be >= 1")
    P = sequence.period
    mism = 0
    for h in range(P):
        for step in (k, -k):
            if sequence(h + step) != sequence(h):
                mism += 1
    return mism / (2 * P)


def _canonical_sequence(indices: tuple, alphabet_size: int) -> tuple:
    """Canonical form modulo cyclic shift and alphabet relabelling."""
    P = len(indices)
    best = None
    for s in range(P):
        rot = indices[s:] + indices[:s]
        relabel: dict[int, int] = {}
        out = []
        for v in rot:
            if v not in relabel:
                relabel[v] = len(relabel)
            out.append(relabel[v])
        cand = tuple(out)
        if best is None or cand < best:
            best = cand
    return best


def greedy_A_conditions(alphabet_size: int, period: int, depth: int) -> list[ShiftSequence]:
    """Survivors of the successive mismatch-maximization filters.

    Round k keeps the sequences realizing the maximum of m_k among the
    survivors of round k-1; results are deduplicated modulo cyclic shift and
    alphabet permutation.
    """
    if alphabet_size ** period > 10 ** 7:
        raise ValueError("search space exceeds the 1e7 guard")
    import itertools

    survivors = [ShiftSequence(ix) for ix in itertools.product(range(alphabet_size), repeat=period)]
    for k in range(1, depth + 1):
        vals = [mismatch_fraction(s, k) for s in survivors]
        best = max(vals)
        survivors = [s for s, v in zip(survivors, vals) if v >= best - 1e-12]
    seen = set()
    out = []
    for s in survivors:
        c = _canonical_sequence(s.indices, alphabet_size)
        if c not in seen:
            seen.add(c)
            out.append(ShiftSequence(c))
    out.sort(key=lambda s: s.indices)
    return out
