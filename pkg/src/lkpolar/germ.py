"""Local theory at cone germs: densities, polar invariants, localized
curvature measures and localized polar lengths.

Germs are restricted to exact cones: a PL link on the unit sphere (the germ
is the polyhedral cone over it) or the round circular cone.  Cones are
scale-invariant, which turns the iterated limits of the local theory into
finite computations: affine slices reduce radially to sub-level sets of the
link, densities are spherical cell volumes, and the truncated-cone curvature
measures are exact in the truncation radius.

The three quantities the verification table compares are

    sigma_k  - sigma_(k+1)   (mean Euler characteristic of affine slices),
    L_k^loc                  (mean alpha-weighted density of projected cones),
    Lambda_k(X, B_eps)/(b_k eps^k)   (curvature measure of the truncated cone),

which the local identity says are all equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geomkit import (
    Estimate,
    RandomSource,
    ball_volume,
    mean_estimate,
    sample_grassmannian,
    sample_unit_sphere,
    )
from .plstrata import (
    DegenerateDirectionError,
    StratifiedComplex,
    load_plstrat,
    normal_link,
    normal_morse_index,
    normal_morse_index_many,
)

__all__ = [
    "ConeGerm",
    "germ_from_name",
    "rays_germ",
    "halfplane_germ",
    "round_cone_germ",
    "cone_link_germ",
    "density",
    "sigma_invariant",
    "local_lambda",
    "local_polar_length",
    "verify_local_identities",
    "LocalIdentityRow",
]

MAX_RESAMPLES = 200


@dataclass(frozen=True)
class ConeGerm:
    """Germ at the origin of a closed cone.

    PL germs carry their link as a simplicial complex with vertices on the
    unit sphere; the germ is the cone over it, stratified by the apex and the
    open cone cells.  The round cone over a circle of spherical radius theta
    is the one smooth catalog germ.
    """

    name: str
    ambient_dim: int
    link: StratifiedComplex | None = None
    theta: float | None = None  # round cone half-angle
    model: StratifiedComplex | None = field(default=None, repr=False)

    def __post_init__(self):
        if (self.link is None) == (self.theta is None):
            raise ValueError("germ needs exactly one of a PL link or a round-cone angle")
        if self.link is not None:
            norms = np.linalg.norm(self.link.vertices, axis=1)
            if np.max(np.abs(norms - 1.0)) > 1e-10:
                raise ValueError("link vertices must lie on the unit sphere")
            object.__setattr__(self, "model", _cone_model(self.link))
        else:
            if not 0 < self.theta < math.pi / 2:
                raise ValueError("round-cone angle must be in (0, pi/2)")

    @property
    def is_round(self) -> bool:
        return self.theta is not None

    @property
    def dim(self) -> int:
        if self.is_round:
            return 2
        if not self.link.cells:
            return 0
        return self.link.dim + 1

    def cone_cells(self):
        """Cells of the simplicial model that contain the apex (index 0)."""
        for d in sorted(self.model.cells):
            for cell in self.model.cells[d]:
                if 0 in cell and d >= 1:
                    yield cell


def _cone_model(link: StratifiedComplex) -> StratifiedComplex:
    """Simplicial model of the unit cone: apex joined to every link cell."""
    verts = np.vstack([np.zeros((1, link.ambient_dim)), link.vertices])
    cells: dict[int, list] = {0: [(0,)]}
    for d, cs in link.cells.items():
        for c in cs:
            shifted = tuple(v + 1 for v in c)
            cells.setdefault(d, []).append(shifted)
            cells.setdefault(d + 1, []).append(tuple(sorted((0,) + shifted)))
    return StratifiedComplex(verts, cells)


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

def rays_germ(m: int) -> ConeGerm:
    """m equally spaced half-lines from the origin of the plane."""
    if m < 1:
        raise ValueError("need at least one ray")
    ang = 2 * math.pi * np.arange(m) / m + 0.1  # offset avoids axis alignment
    verts = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    link = StratifiedComplex(verts, {0: [(i,) for i in range(m)]})
    return ConeGerm(name=f"rays:{m}", ambient_dim=2, link=link)


def halfplane_germ(ambient_dim: int = 3) -> ConeGerm:
    """Half-plane germ {(a, b, 0, ...) : b >= 0}: the cone over a half circle
    realized as two quarter-plane sheets."""
    if ambient_dim < 2:
        raise ValueError("ambient dimension must be >= 2")
    e1 = np.zeros(ambient_dim)
    e1[0] = 1.0
    e2 = np.zeros(ambient_dim)
    e2[1] = 1.0
    verts = np.stack([e1, e2, -e1])
    link = StratifiedComplex.from_maximal_cells(verts, [(0, 1), (1, 2)])
    return ConeGerm(name=f"halfplane:{ambient_dim}", ambient_dim=ambient_dim, link=link)


def round_cone_germ(theta: float) -> ConeGerm:
    return ConeGerm(name=f"cone-circle:{theta:g}", ambient_dim=3, theta=float(theta))


def cone_link_germ(path: str) -> ConeGerm:
    link = load_plstrat(path)
    verts = link.vertices
    norms = np.linalg.norm(verts, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ValueError("link vertex at the origin")
    normalized = StratifiedComplex(verts / norms, {d: list(c) for d, c in link.cells.items()})
    return ConeGerm(name=f"cone-link:{path}", ambient_dim=link.ambient_dim, link=normalized)


def germ_from_name(spec: str) -> ConeGerm:
    head, _, rest = spec.partition(":")
    if head == "rays":
        return rays_germ(int(rest))
    if head == "halfplane":
        return halfplane_germ(int(rest))
    if head == "cone-circle":
        return round_cone_germ(float(rest))
    if head == "cone-link":
        return cone_link_germ(rest)
    raise ValueError(f"unknown germ {spec!r}")


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------

def _spherical_cell_volume(link: StratifiedComplex, cell) -> float:
    pts = link.vertices[list(cell)]
    d = len(cell) - 1
    if d == 0:
        return 1.0
    if d == 1:
        a, b = pts
        return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a @ b))
    if d == 2:
        a, b, c = pts
        num = abs(float(np.linalg.det(np.stack([a, b, c]))))
        den = 1.0 + float(a @ b) + float(b @ c) + float(a @ c)
        return 2.0 * abs(math.atan2(num, den))
    raise NotImplementedError("spherical volumes implemented up to dimension 2")


def _free_link_cells(link: StratifiedComplex, d: int):
    """d-cells of the link not contained in any higher cell (the d-dimensional
    part of the cone is the union of their cones)."""
    higher = set()
    for dd, cells in link.cells.items():
        if dd <= d:
            continue
        for c in cells:
            import itertools as _it

            for f in _it.combinations(c, d + 1):
                higher.add(tuple(sorted(f)))
    return [c for c in link.cells.get(d, []) if c not in higher]


def density(X: ConeGerm, k: int) -> float:
    """k-density of the germ at the origin: vol_k(X cap B_1) / b_k of the
    k-dimensional part, exact for cones via spherical link volumes."""
    n = X.ambient_dim
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range")
    if X.is_round:
        return math.sin(X.theta) if k == 2 else 0.0
    if k == 0:
        return 1.0 if not X.link.cells else 0.0
    total = 0.0
    for cell in _free_link_cells(X.link, k - 1):
        total += _spherical_cell_volume(X.link, cell) / k
    return total / ball_volume(k)


# ---------------------------------------------------------------------------
# exact affine slices of cones
# ---------------------------------------------------------------------------

class SliceUnstableError(RuntimeError):
    pass


def _pl_slice_chi(X: ConeGerm, A: np.ndarray, v: np.ndarray, delta: float) -> int:
    """chi((H + delta v) cap X cap B_1), where H^perp has orthonormal row
    basis A and v is a unit vector of H^perp.

    Radial reduction: y = t u with u on the link and t in (0, 1] solves
    A y = delta (A v) exactly when h(u) := <A u, A v> >= delta (k = 1), or
    when u further satisfies the alignment equations (k >= 2); the slice is
    homeomorphic to that subset of the link polyhedron.
    """
    link = X.link
    k = A.shape[0]
    n = X.ambient_dim
    c = A @ v  # unit coordinates of v in H^perp
    if k == n:
        return _point_membership_chi(X, v)
    Au = link.vertices @ A.T  # (V, k)
    h = Au @ c
    if k == 1:
        return _superlevel_chi(link, h, delta)
    if k == 2 and n == 3:
        # split the condition A u || c into {g = 0} and {h >= delta}
        c_perp = np.array([-c[1], c[0]])
        g = Au @ c_perp
        return _hyperplane_superlevel_chi(link, g, h, delta)
    raise NotImplementedError(f"slice for codimension k={k} in R^{n}")


def _superlevel_chi(link: StratifiedComplex, h: np.ndarray, delta: float) -> int:
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.min(np.abs(h - delta)) < 1e-12 * scale:
        raise SliceUnstableError("vertex value at the slice level")
    chi = 0
    for d, cells in link.cells.items():
        for cell in cells:
            if all(h[i] > delta for i in cell):
                chi += (-1) ** d
    return chi


def _hyperplane_superlevel_chi(link, g, h, delta) -> int:
    """chi of {g = 0, h >= delta} on the link polyhedron (additivity of the
    compact-support Euler characteristic over open link cells)."""
    scale = max(1.0, float(np.max(np.abs(g))))
    if np.min(np.abs(g)) < 1e-12 * scale:
        raise SliceUnstableError("vertex on the alignment hyperplane")
    chi = 0
    for d, cells in link.cells.items():
        for cell in cells:
            gs = g[list(cell)]
            if gs.min() > 0 or gs.max() < 0:
                continue  # the hyperplane misses the open cell
            # crossing points on the below/above vertex pairs
            vals = []
            for i in cell:
                for j in cell:
                    if g[i] < 0 < g[j]:
                        t = -g[i] / (g[j] - g[i])
                        vals.append(h[i] + t * (h[j] - h[i]))
            if not vals:
                continue
            if min(vals) > delta:
                chi += (-1) ** (d - 1)
            # a piece cut by {h = delta} or entirely below contributes 0
    return chi


def _point_membership_chi(X: ConeGerm, v: np.ndarray) -> int:
    """chi of the zero-dimensional slice {delta v} cap X: is v in the cone?"""
    link = X.link
    for d, cells in link.cells.items():
        for cell in cells:
            D = link.vertices[list(cell)].T  # (n, d+1)
            t, res, *_ = np.linalg.lstsq(D, v, rcond=None)
            if np.linalg.norm(D @ t - v) > 1e-9:
                continue
            if np.all(t > 1e-9):
                return 1
    return 0


def _round_slice_chi(X: ConeGerm, A: np.ndarray, v: np.ndarray, delta: float) -> int:
    """Slices of the round cone: radial reduction onto the link circle."""
    k = A.shape[0]
    theta = X.theta
    st, ct = math.sin(theta), math.cos(theta)
    c = A @ v

    def link_point(psi):
        return np.array([st * math.cos(psi), st * math.sin(psi), ct])

    # h(psi) = <A u(psi), c> = a cos(psi) + b sin(psi) + d
    e1 = A @ np.array([1.0, 0.0, 0.0])
    e2 = A @ np.array([0.0, 1.0, 0.0])
    e3 = A @ np.array([0.0, 0.0, 1.0])
    if k == 1:
        a = st * float(np.dot(e1, c))
        b = st * float(np.dot(e2, c))
        d = ct * float(np.dot(e3, c))
        return _trig_superlevel_chi(a, b, d, delta)
    if k == 2:
        c_perp = np.array([-c[1], c[0]])
        ag = st * float(e1 @ c_perp)
        bg = st * float(e2 @ c_perp)
        dg = ct * float(e3 @ c_perp)
        ah = st * float(e1 @ c)
        bh = st * float(e2 @ c)
        dh = ct * float(e3 @ c)
        amp = math.hypot(ag, bg)
        if amp < 1e-12:
            raise SliceUnstableError("alignment function is constant")
        phase = math.atan2(bg, ag)
        val = -dg / amp
        if abs(val) >= 1.0 - 1e-12:
            return 0
        roots = [phase + math.acos(val), phase - math.acos(val)]
        count = 0
        for psi in roots:
            if ah * math.cos(psi) + bh * math.sin(psi) + dh > delta:
                count += 1
        return count
    if k == 3:
        return 0  # the slice point misses the two-dimensional cone surface
    raise NotImplementedError


def _trig_superlevel_chi(a: float, b: float, d: float, delta: float) -> int:
    """chi of {psi : a cos(psi) + b sin(psi) + d >= delta} on the circle."""
    amp = math.hypot(a, b)
    lo, hi = d - amp, d + amp
    if abs(lo - delta) < 1e-12 or abs(hi - delta) < 1e-12:
        raise SliceUnstableError("tangent slice level")
    if lo > delta:
        return 0  # the whole circle
    if hi < delta:
        return 0  # empty
    return 1  # one arc


def slice_chi_stabilized(X: ConeGerm, A: np.ndarray, v: np.ndarray, delta0: float = 1e-3,
                         halvings: int = 10) -> int:
    """chi of the slice at delta and delta/2 must agree; halve until it does."""
    fn = _round_slice_chi if X.is_round else _pl_slice_chi
    delta = delta0
    prev = fn(X, A, v, delta)
    for _ in range(halvings):
        cur = fn(X, A, v, delta / 2)
        if cur == prev:
            return cur
        prev = cur
        delta /= 2
    raise SliceUnstableError("slice Euler characteristic failed to stabilize")


# ---------------------------------------------------------------------------
# polar invariants sigma_k
# ---------------------------------------------------------------------------

def sigma_invariant(X: ConeGerm, k: int, n_samples: int, rng: RandomSource) -> Estimate:
    """Mean over (H, v) of the Euler characteristic of the slice
    (H + delta v) cap X cap B_1, H uniform of codimension k."""
    n = X.ambient_dim
    if k == 0:
        return Estimate(1.0, 0.0, 1, rng.master_seed, method="definition")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range")

    def one(i: int) -> float:
        gen = rng.substream(i).generator()
        for _ in range(MAX_RESAMPLES):
            Hperp = sample_grassmannian(n, k, gen)
            A = Hperp.basis
            w = sample_unit_sphere(k, gen)
            v = w @ A
            try:
                return float(slice_chi_stabilized(X, A, v))
            except SliceUnstableError:
                continue
        raise RuntimeError("slice resample quota exceeded")

    vals = [one(i) for i in range(n_samples)]
    return mean_estimate(vals, seed=rng.master_seed, method="affine-slices")


# ---------------------------------------------------------------------------
# localized curvature measures
# ---------------------------------------------------------------------------

def _cone_cell_mean_index(X: ConeGerm, cell, n_dirs: int, rng: RandomSource) -> Estimate:
    """Mean normal Morse index over the unit normal sphere of a cone cell of
    the simplicial model (exact for empty links and 0-spheres)."""
    T = X.model
    n = T.ambient_dim
    d = len(cell) - 1
    link = normal_link(T, cell)
    if len(link.vertex_ids) == 0:
        return Estimate(1.0, 0.0, 1, rng.master_seed, method="empty-link")
    span = T.cell_span(cell)
    u, _, _ = np.linalg.svd(span.T, full_matrices=True)
    comp = u[:, span.shape[0]:].T
    m = n - d
    if m == 1:
        nu = comp[0]
        vals = [normal_morse_index(T, cell, s * nu, link) for s in (1.0, -1.0)]
        return Estimate(0.5 * (vals[0] + vals[1]), 0.0, 2, rng.master_seed, method="two-point")
    gen = rng.generator()
    g = gen.standard_normal((n_dirs, m))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    vs = g @ comp
    idx, ok = normal_morse_index_many(T, cell, vs, link)
    vals = idx[ok].astype(float)
    return mean_estimate(vals.tolist(), seed=rng.master_seed, method="normal-sphere-mc")


def local_lambda(X: ConeGerm, k: int, rng: RandomSource, eps_ladder=(1.0, 0.5, 0.25),
                 n_dirs: int = 4000) -> Estimate:
    """Lambda_k(X, X cap B_eps) / (b_k eps^k) on the truncated cone.

    For cones the ratio is exactly independent of eps; the ladder is still
    evaluated and its flatness asserted before returning the finest value.
    """
    n = X.ambient_dim
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range")
    values = [_local_lambda_at(X, k, float(e), rng, n_dirs) for e in eps_ladder]
    vals = [v.value for v in values]
    spread = max(vals) - min(vals)
    se = max(v.std_error for v in values)
    if spread > 5 * se + 1e-9:
        raise RuntimeError(f"eps ladder not flat: {vals}")
    return values[0]


def _local_lambda_at(X: ConeGerm, k: int, eps: float, rng: RandomSource, n_dirs: int) -> Estimate:
    n = X.ambient_dim
    norm = ball_volume(k) * eps**k
    if X.is_round:
        if k == 2:
            # flat normal slices on the sheet: lambda_2 = 1, area pi eps^2 sin(theta)
            area = math.pi * eps**2 * math.sin(X.theta)
            return Estimate(area / norm, 0.0, 1, rng.master_seed, method="round-exact")
        if k == 1:
            # sigma_1(II) integrates to zero over the two-point normal sphere
            return Estimate(0.0, 0.0, 1, rng.master_seed, method="round-exact")
        if k == 0:
            return _apex_lambda0_round(X, rng, n_dirs)
        return Estimate(0.0, 0.0, 1, rng.master_seed)
    if k == 0:
        return _apex_lambda0_pl(X, rng, n_dirs)
    total = Estimate(0.0, 0.0, 0, rng.master_seed)
    for i, cell in enumerate(X.cone_cells()):
        if len(cell) - 1 != k:
            continue
        link_cell = tuple(v - 1 for v in cell if v != 0)
        vol = _spherical_cell_volume(X.link, link_cell) / k * eps**k
        dens = _cone_cell_mean_index(X, cell, n_dirs, rng.substream(i))
        total = total + dens.scaled(vol)
    if total.n_samples == 0:
        return Estimate(0.0, 0.0, 1, rng.master_seed)
    return total.scaled(1.0 / norm)


def _apex_lambda0_pl(X: ConeGerm, rng: RandomSource, n_dirs: int) -> Estimate:
    T = X.model
    link = normal_link(T, (0,))
    gen = rng.generator()
    g = gen.standard_normal((n_dirs, X.ambient_dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    idx, ok = normal_morse_index_many(T, (0,), g, link)
    return mean_estimate(idx[ok].astype(float).tolist(), seed=rng.master_seed,
                         method="apex-lower-link")


def _apex_lambda0_round(X: ConeGerm, rng: RandomSource, n_dirs: int) -> Estimate:
    def one(i: int) -> float:
        gen = rng.substream(i).generator()
        for _ in range(MAX_RESAMPLES):
            v = sample_unit_sphere(3, gen)
            try:
                chi = slice_chi_stabilized(X, v[None, :], -v)
                return 1.0 - chi
            except SliceUnstableError:
                continue
        raise RuntimeError("apex slice quota exceeded")

    vals = [one(i) for i in range(n_dirs)]
    return mean_estimate(vals, seed=rng.master_seed, method="apex-slices")


# ---------------------------------------------------------------------------
# localized polar lengths
# ---------------------------------------------------------------------------

def local_polar_length(X: ConeGerm, k: int, n_planes: int, rng: RandomSource) -> Estimate:
    """Mean over planes P of dimension k+1 of the weighted densities of the
    projected polar cone components."""
    n = X.ambient_dim
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range")
    if k == n:
        return Estimate(density(X, n), 0.0, 1, rng.master_seed, method="density")
    if k > X.dim:
        return Estimate(0.0, 0.0, 1, rng.master_seed)

    def one(i: int) -> float:
        gen = rng.substream(i).generator()
        for _ in range(MAX_RESAMPLES):
            P = sample_grassmannian(n, k + 1, gen)
            try:
                if X.is_round:
                    return _round_local_polar_one(X, P)
                return _pl_local_polar_one(X, k, P)
            except (DegenerateDirectionError, SliceUnstableError):
                continue
        raise RuntimeError("plane resample quota exceeded")

    vals = [one(i) for i in range(n_planes)]
    return mean_estimate(vals, seed=rng.master_seed, method="local-polar-mc")


def _pl_local_polar_one(X: ConeGerm, k: int, P) -> float:
    T = X.model
    total = 0.0
    if k == 0:
        v = P.basis[0]
        link = normal_link(T, (0,))
        down = normal_morse_index(T, (0,), v, link)
        up = normal_morse_index(T, (0,), -v, link)
        return 0.5 * (down + up)
    for cell in X.cone_cells():
        if len(cell) - 1 != k:
            continue
        rays = T.vertices[[v for v in cell if v != 0]]
        proj = rays @ P.basis.T  # ray directions inside P
        norms = np.linalg.norm(proj, axis=1)
        if np.min(norms) < 1e-8:
            raise DegenerateDirectionError("projected ray collapses")
        unit = proj / norms[:, None]
        theta_vol = _projected_spherical_volume(unit)
        nu = _cone_image_normal(rays, P)
        link = normal_link(T, cell)
        # alpha is link-combinatorial, hence exactly constant along the
        # cone cell; no second-point stability probe is needed
        alpha = 0.5 * (
            normal_morse_index(T, cell, nu, link) + normal_morse_index(T, cell, -nu, link)
        )
        total += alpha * theta_vol / (k * ball_volume(k))
    return total


def _projected_spherical_volume(unit_rays: np.ndarray) -> float:
    """Spherical volume of the radial projection of the cone over the rays."""
    m = len(unit_rays)
    if m == 1:
        return 1.0
    if m == 2:
        a, b = unit_rays
        return math.atan2(float(np.linalg.norm(np.cross(a, b))), float(a @ b))
    if m == 3:
        a, b, c = unit_rays
        num = abs(float(np.linalg.det(np.stack([a, b, c]))))
        den = 1.0 + float(a @ b) + float(b @ c) + float(a @ c)
        return 2.0 * abs(math.atan2(num, den))
    raise NotImplementedError


def _cone_image_normal(rays: np.ndarray, P) -> np.ndarray:
    coords = rays @ P.basis.T  # (k, k+1)
    u_, s, vt = np.linalg.svd(coords, full_matrices=True)
    if s.min() < 1e-10:
        raise DegenerateDirectionError("projected cone is degenerate")
    nu = vt[-1] @ P.basis
    return nu / np.linalg.norm(nu)


def _round_local_polar_one(X: ConeGerm, P) -> float:
    k = P.dim - 1
    theta = X.theta
    if k == 2:
        # identity projection: one sheet component, point slices, alpha = 1
        return density(X, 2)
    if k == 1:
        # fold rays of the cone silhouette; a clean fold makes the slice
        # curve a min for one conormal sign and a max for the other
        u = P.orthogonal_complement().basis[0]
        st, ct = math.sin(theta), math.cos(theta)
        # normals n(psi) = (ct cos psi, ct sin psi, -st); folds solve <n,u> = 0
        amp = ct * math.hypot(u[0], u[1])
        if amp < 1e-12:
            raise DegenerateDirectionError("axis-aligned projection")
        val = st * u[2] / amp
        if abs(val) >= 1.0 - 1e-9:
            raise DegenerateDirectionError("tangent fold circle")
        phase = math.atan2(u[1], u[0])
        total = 0.0
        for root in (math.acos(val), -math.acos(val)):
            psi = phase + root
            ray = np.array([st * math.cos(psi), st * math.sin(psi), ct])
            # circumferential component of u: the fold is clean iff nonzero
            circ = np.array([-math.sin(psi), math.cos(psi), 0.0])
            b = float(u @ circ)
            if abs(b) < 1e-7:
                raise DegenerateDirectionError("view tangent to a fold ray")
            ind_plus, ind_minus = 1, -1  # min and max along the slice curve
            alpha = 0.5 * (ind_plus + ind_minus)
            total += alpha * 0.5  # ray density is one half
        return total
    if k == 0:
        v = P.basis[0]
        down = 1 - slice_chi_stabilized(X, v[None, :], -v)
        up = 1 - slice_chi_stabilized(X, v[None, :], v)
        return 0.5 * (down + up)
    return 0.0


# ---------------------------------------------------------------------------
# verification table
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalIdentityRow:
    k: int
    sigma_diff: Estimate
    polar: Estimate
    curvature: Estimate

    @property
    def passes(self) -> bool:
        vals = [self.sigma_diff, self.polar, self.curvature]
        for i in range(3):
            for j in range(i + 1, 3):
                gap = abs(vals[i].value - vals[j].value)
                tol = 3 * math.hypot(vals[i].std_error, vals[j].std_error) + 1e-9
                if gap > tol:
                    return False
        return True


@dataclass(frozen=True)
class LocalIdentityReport:
    rows: tuple[LocalIdentityRow, ...]
    sigma_top: Estimate
    density_top: float
    refined_lhs: Estimate  # L_0^loc
    refined_rhs: Estimate  # 1 - sigma_1

    @property
    def passes(self) -> bool:
        ok = all(r.passes for r in self.rows)
        gap = abs(self.sigma_top.value - self.density_top)
        ok &= gap <= 3 * self.sigma_top.std_error + 1e-9
        gap = abs(self.refined_lhs.value - self.refined_rhs.value)
        tol = 3 * math.hypot(self.refined_lhs.std_error, self.refined_rhs.std_error) + 1e-9
        return ok and gap <= tol


def verify_local_identities(
    X: ConeGerm,
    rng: RandomSource,
    n_samples: int = 3000,
    n_planes: int = 2000,
) -> LocalIdentityReport:
    """Table over k of (sigma_k - sigma_(k+1), L_k^loc, local Lambda_k), plus
    the top-density identity sigma_n = L_n^loc and the refined identity
    L_0^loc = 1 - sigma_1 at the apex stratum."""
    n = X.ambient_dim
    sigmas = [sigma_invariant(X, k, n_samples, rng.substream(1000 + k)) for k in range(n + 1)]
    sigmas.append(Estimate(0.0, 0.0, 1, rng.master_seed))
    rows = []
    for k in range(n + 1):
        sdiff = sigmas[k] - sigmas[k + 1]
        pol = local_polar_length(X, k, n_planes, rng.substream(2000 + k))
        lam = local_lambda(X, k, rng.substream(3000 + k), n_dirs=n_samples)
        rows.append(LocalIdentityRow(k=k, sigma_diff=sdiff, polar=pol, curvature=lam))
    refined_rhs = Estimate(1.0, 0.0, 1, rng.master_seed) - sigmas[1]
    return LocalIdentityReport(
        rows=tuple(rows),
        sigma_top=sigmas[n],
        density_top=density(X, n),
        refined_lhs=rows[0].polar,
        refined_rhs=refined_rhs,
    )
