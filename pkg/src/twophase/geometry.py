"""Implicit shapes, interface sampling, reflections, and moving-plane scans.

Shapes are represented by signed distance (negative inside), which makes the
containment test at the heart of the moving-plane machinery a plain sign
query on reflected boundary samples.  Built-in shapes: balls (exact
distance), disjoint unions of shapes (exact for separated components), and
smooth star-shaped curves given by a polar radius (ellipse, superellipse,
egg), whose distance is computed by a coarse closest-point scan refined with
damped Newton projection onto the boundary curve.  The residual accuracy of
that projection is estimated empirically at construction and recorded as
``distance_error_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateDirection, SamplingFailure

EVENT_INTERNAL_TANGENCY = "internal_tangency"
EVENT_ORTHOGONALITY = "orthogonality"

_TWO_PI = 2.0 * math.pi


def _as_points(x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not n > 0:
        raise ValueError("direction must be nonzero")
    return v / n


@dataclass(frozen=True)
class Hyperplane:
    """Plane x . gamma = lam with unit normal direction gamma."""

    gamma: np.ndarray
    lam: float

    def __post_init__(self):
        g = _unit(self.gamma)
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "lam", float(self.lam))


def reflect_point(x, plane: Hyperplane):
    """Mirror image of x across the plane: x + 2[lam - (x.gamma)] gamma."""
    pts, single = _as_points(x)
    proj = pts @ plane.gamma
    out = pts + 2.0 * (plane.lam - proj)[:, None] * plane.gamma[None, :]
    return out[0] if single else out


@dataclass(frozen=True)
class InterfaceSample:
    """Quadrature node on the interface: position, outward normal, length weight."""

    point: np.ndarray
    normal: np.ndarray
    arclength_weight: float
    component: int = 0


class Shape:
    """Base class: signed distance field of a bounded open set in R^2.

    Subclasses set ``components``, ``bounding_radius`` (radius of an
    origin-centered ball containing the set) and ``distance_error_bound``
    (0 for analytically exact distances).
    """

    components: int = 1
    bounding_radius: float = 1.0
    distance_error_bound: float = 0.0
    dim: int = 2

    def signed_distance(self, pts):
        raise NotImplementedError

    def measure(self) -> float:
        """Area of the set (used to size truncation boxes)."""
        raise NotImplementedError

    def boundary_samples(self, n_per_component: int):
        """Ordered boundary nodes: (points, normals, weights, component_ids)."""
        raise NotImplementedError

    def _dense_boundary(self, n: int = 2048):
        cache = getattr(self, "_boundary_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_boundary_cache", cache)
        if n not in cache:
            cache[n] = self.boundary_samples(n)
        return cache[n]


class Ball(Shape):
    """Disk of radius r centered at c; exact signed distance |x-c| - r."""

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.components = 1
        self.bounding_radius = float(np.linalg.norm(self.center) + radius)
        self.distance_error_bound = 0.0

    def signed_distance(self, pts):
        pts, single = _as_points(pts)
        d = np.linalg.norm(pts - self.center[None, :], axis=1) - self.radius
        return float(d[0]) if single else d

    def measure(self) -> float:
        return math.pi * self.radius**2

    def boundary_samples(self, n_per_component: int):
        th = np.arange(n_per_component) * _TWO_PI / n_per_component
        normals = np.stack([np.cos(th), np.sin(th)], axis=1)
        points = self.center[None, :] + self.radius * normals
        weights = np.full(n_per_component, _TWO_PI * self.radius / n_per_component)
        return points, normals, weights, np.zeros(n_per_component, dtype=int)


class PolarShape(Shape):
    """Star-shaped region around ``center`` with smooth boundary radius r(theta).

    Signed distance = Euclidean distance to the curve (coarse polyline scan +
    damped Newton refinement of the closest parameter), signed by comparing
    |x - center| with r(theta).
    """

    _COARSE = 1024
    _FD = 1e-6

    def __init__(self, center, radius_fn: Callable[[np.ndarray], np.ndarray], theta_offset: float = 0.0):
        self.center = np.asarray(center, dtype=float)
        self._radius_fn = radius_fn
        self._theta_offset = float(theta_offset)
        rr = radius_fn(np.linspace(0.0, _TWO_PI, 1024, endpoint=False))
        if np.any(rr <= 0):
            raise SamplingFailure("polar radius must stay positive")
        self.components = 1
        self.bounding_radius = float(np.linalg.norm(self.center) + rr.max())
        th = np.arange(self._COARSE) * _TWO_PI / self._COARSE
        self._coarse_theta = th
        self._coarse_pts = self._curve(th)
        self.distance_error_bound = self._estimate_distance_error()

    # -- curve helpers -------------------------------------------------
    def _curve(self, th):
        r = self._radius_fn(th)
        return self.center[None, :] + r[:, None] * np.stack([np.cos(th), np.sin(th)], axis=1)

    def _curve_velocity(self, th):
        d = self._FD
        return (self._curve(th + d) - self._curve(th - d)) / (2.0 * d)

    def _estimate_distance_error(self) -> float:
        rng = np.random.default_rng(12345)
        probes = rng.uniform(-1.2, 1.2, size=(160, 2)) * self.bounding_radius
        dense = self._curve(np.arange(16384) * _TWO_PI / 16384)
        seg_a = dense
        seg_v = np.roll(dense, -1, axis=0) - dense
        seg_len2 = (seg_v * seg_v).sum(axis=1)
        brute = np.empty(len(probes))
        for i, p in enumerate(probes):
            t = np.clip(((p[None, :] - seg_a) * seg_v).sum(axis=1) / seg_len2, 0.0, 1.0)
            foot = seg_a + t[:, None] * seg_v
            brute[i] = np.linalg.norm(foot - p[None, :], axis=1).min()
        mine = np.abs(self.signed_distance(probes))
        return float(np.abs(mine - brute).max())

    # -- Shape API -----------------------------------------------------
    def signed_distance(self, pts):
        pts, single = _as_points(pts)
        out = np.empty(len(pts))
        for start in range(0, len(pts), 4096):
            chunk = pts[start : start + 4096]
            out[start : start + len(chunk)] = self._signed_distance_chunk(chunk)
        return float(out[0]) if single else out

    def _refine_parabolic(self, pts, th, dth):
        """One parabolic-vertex refinement of the closest parameter.

        The vertex of the parabola through d^2 at {th-dth, th, th+dth} stays
        inside the bracket, so the step is safe even past the evolute; the
        distance is quadratically insensitive to the remaining parameter
        error.
        """
        dm = ((self._curve(th - dth) - pts) ** 2).sum(axis=1)
        d0 = ((self._curve(th) - pts) ** 2).sum(axis=1)
        dp = ((self._curve(th + dth) - pts) ** 2).sum(axis=1)
        denom = dm - 2.0 * d0 + dp
        shift = np.where(np.abs(denom) > 1e-300, 0.5 * (dm - dp) / np.where(denom == 0, 1, denom), 0.0)
        return th + np.clip(shift, -1.0, 1.0) * dth

    def _signed_distance_chunk(self, pts):
        rel = pts - self.center[None, :]
        rq = np.linalg.norm(rel, axis=1)
        th_pt = np.arctan2(rel[:, 1], rel[:, 0])
        inside = rq < self._radius_fn(np.mod(th_pt, _TWO_PI))
        # coarse closest vertex on the cached polyline, parabolic passes to
        # enter the Newton basin, then Newton polish (guarded: points near the
        # evolute keep the parabolic parameter)
        d2 = ((pts[:, None, :] - self._coarse_pts[None, :, :]) ** 2).sum(axis=2)
        th = self._coarse_theta[np.argmin(d2, axis=1)].copy()
        dth = _TWO_PI / self._COARSE
        th = self._refine_parabolic(pts, th, dth)
        th = self._refine_parabolic(pts, th, dth / 16.0)
        fd = 1e-5
        for _ in range(2):
            p = self._curve(th)
            vel = (self._curve(th + fd) - self._curve(th - fd)) / (2.0 * fd)
            acc = (self._curve(th + fd) - 2.0 * p + self._curve(th - fd)) / (fd * fd)
            g1 = ((p - pts) * vel).sum(axis=1)
            g2 = (vel * vel).sum(axis=1) - ((pts - p) * acc).sum(axis=1)
            safe = g2 > 1e-9
            th = np.where(safe, th - np.clip(g1 / np.where(safe, g2, 1.0), -dth, dth), th)
        dist = np.linalg.norm(self._curve(th) - pts, axis=1)
        return np.where(inside, -dist, dist)

    def measure(self) -> float:
        th = np.arange(8192) * _TWO_PI / 8192
        r = self._radius_fn(th)
        return float(0.5 * np.sum(r * r) * _TWO_PI / 8192)

    def boundary_samples(self, n_per_component: int):
        th = (np.arange(n_per_component) + self._theta_offset) * _TWO_PI / n_per_component
        points = self._curve(th)
        vel = self._curve_velocity(th)
        speed = np.linalg.norm(vel, axis=1)
        normals = np.stack([vel[:, 1], -vel[:, 0]], axis=1) / speed[:, None]
        weights = speed * _TWO_PI / n_per_component
        return points, normals, weights, np.zeros(n_per_component, dtype=int)


class Ellipse(PolarShape):
    """Axis-aligned ellipse with semi-axes (a, b)."""

    def __init__(self, center=(0.0, 0.0), a=2.0, b=1.0):
        if a <= 0 or b <= 0:
            raise ValueError("semi-axes must be positive")
        self.a, self.b = float(a), float(b)

        def radius(th):
            return self.a * self.b / np.sqrt((self.b * np.cos(th)) ** 2 + (self.a * np.sin(th)) ** 2)

        super().__init__(center, radius)

    def measure(self) -> float:
        return math.pi * self.a * self.b


class Superellipse(PolarShape):
    """|x/a|^p + |y/b|^p <= 1; smooth for even integer p."""

    def __init__(self, center=(0.0, 0.0), a=1.0, b=1.0, power=4.0):
        if power < 2:
            raise ValueError("power must be >= 2")
        self.a, self.b, self.power = float(a), float(b), float(power)
        smooth = power == int(power) and int(power) % 2 == 0

        def radius(th):
            c = np.abs(np.cos(th) / self.a) ** self.power
            s = np.abs(np.sin(th) / self.b) ** self.power
            return (c + s) ** (-1.0 / self.power)

        super().__init__(center, radius, theta_offset=0.0 if smooth else 0.5)


class Egg(PolarShape):
    """Ellipse modulated by an x-odd radial bump: r_e(th) * (1 + amp cos(k th)).

    Odd k breaks the x-symmetry while keeping the y-symmetry; amp must stay
    well below 1 so the curve remains star-shaped and C^2.
    """

    def __init__(self, center=(0.0, 0.0), a=1.6, b=1.0, bump_amplitude=0.15, bump_frequency=1):
        if not 0 <= bump_amplitude < 0.5:
            raise ValueError("bump amplitude out of range [0, 0.5)")
        if bump_frequency % 2 == 0:
            raise ValueError("bump frequency must be odd (x-odd perturbation)")
        self.a, self.b = float(a), float(b)
        self.bump_amplitude = float(bump_amplitude)
        self.bump_frequency = int(bump_frequency)

        def radius(th):
            base = self.a * self.b / np.sqrt((self.b * np.cos(th)) ** 2 + (self.a * np.sin(th)) ** 2)
            return base * (1.0 + self.bump_amplitude * np.cos(self.bump_frequency * th))

        super().__init__(center, radius)


class Union(Shape):
    """Disjoint union; signed distance = min over children (exact when separated)."""

    def __init__(self, shapes: Sequence[Shape]):
        if not shapes:
            raise ValueError("need at least one component")
        self.children = list(shapes)
        self.components = sum(s.components for s in self.children)
        self.bounding_radius = max(s.bounding_radius for s in self.children)
        self.distance_error_bound = max(s.distance_error_bound for s in self.children)
        for i, si in enumerate(self.children):
            for sj in self.children[i + 1 :]:
                probes_j, _, _, _ = sj.boundary_samples(64)
                if np.any(si.signed_distance(probes_j) <= 0):
                    raise ValueError("union components must be pairwise disjoint")

    def signed_distance(self, pts):
        pts, single = _as_points(pts)
        d = np.min(np.stack([s.signed_distance(pts) for s in self.children]), axis=0)
        return float(d[0]) if single else d

    def measure(self) -> float:
        return sum(s.measure() for s in self.children)

    def boundary_samples(self, n_per_component: int):
        pts, nrm, wts, comp = [], [], [], []
        offset = 0
        for child in self.children:
            p, nv, w, c = child.boundary_samples(n_per_component)
            pts.append(p)
            nrm.append(nv)
            wts.append(w)
            comp.append(c + offset)
            offset += child.components
        return (np.concatenate(pts), np.concatenate(nrm), np.concatenate(wts), np.concatenate(comp))


def sample_interface(shape: Shape, n: int) -> list[InterfaceSample]:
    """n quadrature nodes per connected component, ordered along each boundary.

    Normals are verified to point outward (positive signed distance a small
    step along the normal); weights sum to the boundary length per component.
    """
    if n < 4:
        raise ValueError("need at least 4 samples per component")
    points, normals, weights, comps = shape.boundary_samples(n)
    if len(points) == 0:
        raise SamplingFailure("no boundary points produced")
    eps = 1e-4 * max(1.0, shape.bounding_radius)
    outward = shape.signed_distance(points + eps * normals)
    inward = shape.signed_distance(points - eps * normals)
    flip = outward < inward
    normals = np.where(flip[:, None], -normals, normals)
    if np.any(shape.signed_distance(points + eps * normals) <= 0):
        raise SamplingFailure("could not orient outward normals on the zero level set")
    return [
        InterfaceSample(point=points[i], normal=normals[i], arclength_weight=float(weights[i]), component=int(comps[i]))
        for i in range(len(points))
    ]


@dataclass
class MovingPlaneResult:
    """Outcome of one directional moving-plane scan."""

    gamma: np.ndarray
    lambda_star: float
    event: str
    contact_point: np.ndarray
    symmetric: bool
    sym_defect: float
    ambiguous: bool = False
    secondary_contact: np.ndarray | None = None
    side_condition_ok: bool = True
    tangency_defect: float = math.nan
    orthogonality_value: float = math.nan

    def as_dict(self) -> dict:
        return {
            "gamma": [float(v) for v in self.gamma],
            "lambda_star": self.lambda_star,
            "event": self.event,
            "contact_point": [float(v) for v in self.contact_point],
            "symmetric": self.symmetric,
            "sym_defect": self.sym_defect,
            "ambiguous": self.ambiguous,
            "secondary_contact": None
            if self.secondary_contact is None
            else [float(v) for v in self.secondary_contact],
            "side_condition_ok": self.side_condition_ok,
            "tangency_defect": self.tangency_defect,
            "orthogonality_value": self.orthogonality_value,
        }


def _plane_crossings(points, normals, comps, lam, gamma):
    """Boundary points where x.gamma crosses lam, with interpolated normals."""
    crossings = []
    g = points @ gamma
    for c in np.unique(comps):
        idx = np.where(comps == c)[0]
        gc = g[idx]
        for k in range(len(idx)):
            k2 = (k + 1) % len(idx)
            a, b = gc[k] - lam, gc[k2] - lam
            if a == 0.0:
                crossings.append((points[idx[k]], normals[idx[k]]))
            elif a * b < 0.0:
                t = a / (a - b)
                p = (1 - t) * points[idx[k]] + t * points[idx[k2]]
                nv = (1 - t) * normals[idx[k]] + t * normals[idx[k2]]
                crossings.append((p, nv / np.linalg.norm(nv)))
    return crossings


def critical_plane_scan(
    shape: Shape,
    gamma,
    tol: float = 1e-6,
    n_boundary: int = 192,
    sym_tol: float | None = None,
) -> MovingPlaneResult:
    """Locate the critical plane offset for direction gamma by bisection.

    The reflected cap is contained in the shape for offsets above the
    critical one; containment is tested as a strict sign condition on the
    signed distance of reflected boundary samples.  The event is classified
    as internal tangency when the touching reflected sample sits off the
    plane (distance > 10 tol), as orthogonality when the boundary meets the
    plane with normal perpendicular to gamma, and as ambiguous when both
    hold (tangency preferred for downstream checks).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gamma = _unit(gamma)
    if sym_tol is None:
        sym_tol = 20.0 * tol + 4.0 * shape.distance_error_bound
    samples = sample_interface(shape, n_boundary)
    P = np.stack([s.point for s in samples])
    NU = np.stack([s.normal for s in samples])
    comps = np.array([s.component for s in samples])
    g = P @ gamma
    g_max, g_min = float(g.max()), float(g.min())
    # Samples within `band` of the plane reflect onto themselves to within
    # 2*band, so their signed distance carries no containment information and
    # roundoff there can poison the strictness test; exclude them.
    band = 1e-9 * max(1.0, shape.bounding_radius)

    def reflected_max_sdf(lam: float) -> float:
        cap = g > lam + band
        if not np.any(cap):
            return -math.inf
        refl = P[cap] + 2.0 * (lam - g[cap])[:, None] * gamma[None, :]
        return float(shape.signed_distance(refl).max())

    hi = g_max
    lo = g_min
    if reflected_max_sdf(lo) < 0.0:
        lo = g_min - (g_max - g_min)
        if reflected_max_sdf(lo) < 0.0:
            raise DegenerateDirection(
                f"containment never fails below the shape for direction {gamma}"
            )
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if reflected_max_sdf(mid) < 0.0:
            hi = mid
        else:
            lo = mid
    lam_star = 0.5 * (lo + hi)

    # contact candidates at the critical offset
    cap = g > lam_star
    refl = P[cap] + 2.0 * (lam_star - g[cap])[:, None] * gamma[None, :]
    d_refl = shape.signed_distance(refl)
    plane_dist = np.abs(refl @ gamma - lam_star)
    off_plane = plane_dist > 10.0 * tol
    touch_band = 10.0 * tol + 2.0 * shape.distance_error_bound

    tangency_defect = -math.inf
    contact_i = None
    if np.any(off_plane):
        k = int(np.argmax(np.where(off_plane, d_refl, -math.inf)))
        tangency_defect = float(d_refl[k])
        contact_i = refl[k]
    cand_i = contact_i is not None and tangency_defect > -touch_band

    crossings = _plane_crossings(P, NU, comps, lam_star, gamma)
    orth_value = math.inf
    contact_ii = None
    for p, nv in crossings:
        if abs(float(nv @ gamma)) < orth_value:
            orth_value = abs(float(nv @ gamma))
            contact_ii = p
    cand_ii = contact_ii is not None and orth_value < 0.05

    # side condition for orthogonality: gamma must not be tangential to the
    # boundary at any point of the upper portion
    upper = g > lam_star + 10.0 * tol
    side_ok = True
    if np.any(upper):
        side_ok = bool(np.min(np.abs(NU[upper] @ gamma)) > 1e-3)

    ambiguous = False
    if cand_i and cand_ii:
        event, contact, secondary = EVENT_INTERNAL_TANGENCY, contact_i, contact_ii
        ambiguous = True
    elif cand_ii:
        event, contact, secondary = EVENT_ORTHOGONALITY, contact_ii, None
        if not side_ok:
            ambiguous = True
    elif cand_i:
        event, contact, secondary = EVENT_INTERNAL_TANGENCY, contact_i, None
    else:
        # fall back to the closest reflected sample; resolution-limited
        k = int(np.argmax(d_refl)) if len(d_refl) else 0
        event, contact, secondary = EVENT_INTERNAL_TANGENCY, refl[k], None
        ambiguous = True

    refl_all = P + 2.0 * (lam_star - g)[:, None] * gamma[None, :]
    sym_defect = float(np.abs(shape.signed_distance(refl_all)).max())
    symmetric = sym_defect <= sym_tol

    return MovingPlaneResult(
        gamma=gamma,
        lambda_star=lam_star,
        event=event,
        contact_point=np.asarray(contact, dtype=float),
        symmetric=symmetric,
        sym_defect=sym_defect,
        ambiguous=ambiguous,
        secondary_contact=None if secondary is None else np.asarray(secondary, dtype=float),
        side_condition_ok=side_ok,
        tangency_defect=tangency_defect,
        orthogonality_value=orth_value if math.isfinite(orth_value) else math.nan,
    )


@dataclass
class SymmetryReport:
    """Per-direction scan results plus the overall ball-likeness verdict."""

    results: list[MovingPlaneResult]
    ball_like: bool
    center: np.ndarray
    center_residual: float

    def as_dict(self) -> dict:
        return {
            "ball_like": self.ball_like,
            "center": [float(v) for v in self.center],
            "center_residual": self.center_residual,
            "directions": [r.as_dict() for r in self.results],
        }


def symmetry_report(
    shape: Shape,
    directions: int = 16,
    tol: float = 1e-6,
    n_boundary: int = 192,
    sym_tol: float | None = None,
    center_tol: float | None = None,
) -> SymmetryReport:
    """Scan uniformly spread directions; ball-like iff every direction is
    symmetric and the critical planes share a common point."""
    if directions < 2:
        raise ValueError("need at least 2 directions")
    if center_tol is None:
        center_tol = 100.0 * tol
    results = []
    for k in range(directions):
        th = _TWO_PI * k / directions
        results.append(
            critical_plane_scan(shape, (math.cos(th), math.sin(th)), tol=tol, n_boundary=n_boundary, sym_tol=sym_tol)
        )
    G = np.stack([r.gamma for r in results])
    lam = np.array([r.lambda_star for r in results])
    center, *_ = np.linalg.lstsq(G, lam, rcond=None)
    residual = float(np.abs(G @ center - lam).max())
    ball_like = all(r.symmetric for r in results) and residual <= center_tol
    return SymmetryReport(results=results, ball_like=ball_like, center=center, center_residual=residual)
