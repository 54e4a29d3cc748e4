"""Poisson networks on a finite window: tessellation, users, and K functions.

The simulation half of the package lives on top of this module.  A network
realization is a BS Poisson process with an extra BS at the origin (the
typical one), its Voronoi tessellation clipped to the window, and one
uniformly placed user per cell.  Links derive from it in both directions.

Boundary handling: statistics must only use cells whose BS lies inside the
guard radius, but interference is collected from the whole window, so even
cells touching the window boundary carry a user (they transmit; they are
never measured).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Voronoi
from scipy.spatial import cKDTree

from .core import LinkGeometry, SystemConfig

__all__ = [
    "Disk",
    "Box",
    "PointSet",
    "Tessellation",
    "NetworkRealization",
    "DegenerateInput",
    "BoundaryCell",
    "InsufficientPoints",
    "OriginCellTouchesBoundary",
    "sample_ppp",
    "build_voronoi",
    "sample_user_in_cell",
    "interferer_intensity",
    "link_distance_pdf",
    "truncated_link_distance_pdf",
    "link_distance_cdf",
    "ripley_k",
    "k1_analytic",
    "k2_analytic",
    "sample_realization",
    "default_window",
    "GUARD_FACTOR",
    "WINDOW_FACTOR",
]

WINDOW_FACTOR = 15.0   # window radius in units of 1/sqrt(lambda)
GUARD_FACTOR = 10.0    # serving BSs beyond this radius are not measured


class DegenerateInput(ValueError):
    """Point configuration admits no proper tessellation."""


class BoundaryCell(ValueError):
    """Operation requires an interior cell."""


class InsufficientPoints(ValueError):
    """Too few points for the requested estimate."""


class OriginCellTouchesBoundary(RuntimeError):
    """The typical cell is cut by the window; enlarge it or resample."""


# ---- windows -----------------------------------------------------------------

@dataclass(frozen=True)
class Disk:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def extent(self) -> float:
        return 2.0 * self.radius

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)

    def contains(self, pts, slack: float = 0.0):
        pts = np.asarray(pts, dtype=float)
        d2 = (pts[..., 0] - self.center[0]) ** 2 + (pts[..., 1] - self.center[1]) ** 2
        return d2 <= (self.radius + slack) ** 2

    def boundary_distance(self, pts):
        pts = np.asarray(pts, dtype=float)
        d = np.hypot(pts[..., 0] - self.center[0], pts[..., 1] - self.center[1])
        return self.radius - d

    def sample(self, n: int, rng) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(n))
        phi = rng.random(n) * 2.0 * math.pi
        return np.column_stack([self.center[0] + r * np.cos(phi),
                                self.center[1] + r * np.sin(phi)])


@dataclass(frozen=True)
class Box:
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    @property
    def extent(self) -> float:
        return max(self.xmax - self.xmin, self.ymax - self.ymin)

    def bbox(self):
        return (self.xmin, self.xmax, self.ymin, self.ymax)

    def contains(self, pts, slack: float = 0.0):
        pts = np.asarray(pts, dtype=float)
        return ((pts[..., 0] >= self.xmin - slack) & (pts[..., 0] <= self.xmax + slack)
                & (pts[..., 1] >= self.ymin - slack) & (pts[..., 1] <= self.ymax + slack))

    def boundary_distance(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.minimum.reduce([
            pts[..., 0] - self.xmin, self.xmax - pts[..., 0],
            pts[..., 1] - self.ymin, self.ymax - pts[..., 1],
        ])

    def sample(self, n: int, rng) -> np.ndarray:
        u = rng.random((n, 2))
        return np.column_stack([self.xmin + u[:, 0] * (self.xmax - self.xmin),
                                self.ymin + u[:, 1] * (self.ymax - self.ymin)])


def default_window(lam: float) -> Disk:
    return Disk(center=(0.0, 0.0), radius=WINDOW_FACTOR / math.sqrt(lam))


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    window: object

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        object.__setattr__(self, "points", pts)
        if pts.size and not np.all(self.window.contains(pts, slack=1e-9)):
            raise ValueError("all points must lie inside the window")

    def __len__(self) -> int:
        return len(self.points)


def sample_ppp(lam: float, window, rng) -> PointSet:
    """Homogeneous Poisson process of intensity lam on the window."""
    if lam <= 0.0:
        raise ValueError(f"intensity must be positive, got {lam}")
    n = int(rng.poisson(lam * window.area))
    return PointSet(points=window.sample(n, rng), window=window)


# ---- tessellation ---------------------------------------------------------------

def _clip_convex(poly: np.ndarray, a: np.ndarray, b: float) -> np.ndarray:
    """Keep the part of a convex polygon with a.x <= b (Sutherland-Hodgman)."""
    if len(poly) == 0:
        return poly
    s = poly @ a - b
    out = []
    for i in range(len(poly)):
        j = (i + 1) % len(poly)
        if s[i] <= 0.0:
            out.append(poly[i])
        if (s[i] <= 0.0) != (s[j] <= 0.0):
            t = s[i] / (s[i] - s[j])
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.asarray(out).reshape(-1, 2)


def _poly_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _ccw(poly: np.ndarray) -> np.ndarray:
    if len(poly) >= 3:
        x, y = poly[:, 0], poly[:, 1]
        if np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)) < 0.0:
            return poly[::-1]
    return poly


@dataclass(frozen=True)
class Tessellation:
    """Voronoi cells of a point set, clipped to the window's bounding box.

    interior[i] is True when cell i lies entirely inside the window itself
    (not just its bounding box); only such cells have trustworthy geometry.
    """

    points: np.ndarray
    window: object
    polygons: list = field(repr=False)
    adjacency: list = field(repr=False)
    interior: np.ndarray = field(repr=False)

    def cell_area(self, i: int) -> float:
        return _poly_area(self.polygons[i])

    @property
    def n_cells(self) -> int:
        return len(self.points)


def build_voronoi(ps: PointSet) -> Tessellation:
    """Tessellate; duplicate points are nudged apart, degenerate sets rejected."""
    pts = np.array(ps.points, dtype=float)
    if len(pts) < 3:
        raise DegenerateInput(f"need at least 3 points, got {len(pts)}")
    # perturb exact duplicates so qhull sees distinct sites
    scale = ps.window.extent
    _, first = np.unique(np.round(pts / (1e-13 * scale)), axis=0, return_index=True)
    dup = np.setdiff1d(np.arange(len(pts)), first)
    if dup.size:
        pts[dup] += 1e-12 * scale * (1.0 + np.arange(dup.size))[:, None]

    xmin, xmax, ymin, ymax = ps.window.bbox()
    pad = 3.0 * max(xmax - xmin, ymax - ymin)
    ghosts = np.array([(xmin - pad, ymin - pad), (xmax + pad, ymin - pad),
                       (xmin - pad, ymax + pad), (xmax + pad, ymax + pad),
                       (0.5 * (xmin + xmax), ymin - pad), (0.5 * (xmin + xmax), ymax + pad),
                       (xmin - pad, 0.5 * (ymin + ymax)), (xmax + pad, 0.5 * (ymin + ymax))])
    try:
        vor = Voronoi(np.vstack([pts, ghosts]))
    except Exception as exc:  # qhull reports degeneracies in its own dialect
        raise DegenerateInput(str(exc)) from exc

    bbox_planes = [(np.array([-1.0, 0.0]), -xmin), (np.array([1.0, 0.0]), xmax),
                   (np.array([0.0, -1.0]), -ymin), (np.array([0.0, 1.0]), ymax)]
    polygons = []
    interior = np.zeros(len(pts), dtype=bool)
    for i in range(len(pts)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or len(region) == 0:
            raise DegenerateInput("unbounded cell survived ghost padding")
        poly = vor.vertices[region]
        clipped = poly
        for a, b in bbox_planes:
            clipped = _clip_convex(clipped, a, b)
        polygons.append(_ccw(clipped))
        interior[i] = len(poly) >= 3 and bool(
            np.all(ps.window.contains(poly, slack=-1e-9 * scale)))

    adjacency = [set() for _ in range(len(pts))]
    for (p, q), _ in zip(vor.ridge_points, vor.ridge_vertices):
        if p < len(pts) and q < len(pts):
            adjacency[p].add(int(q))
            adjacency[q].add(int(p))
    return Tessellation(points=pts, window=ps.window, polygons=polygons,
                        adjacency=[sorted(s) for s in adjacency], interior=interior)


def _sample_in_polygon(poly: np.ndarray, rng) -> np.ndarray:
    v0 = poly[0]
    e1 = poly[1:-1] - v0
    e2 = poly[2:] - v0
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    total = float(areas.sum())
    if total <= 0.0:
        raise BoundaryCell("cell has no area to sample")
    k = int(rng.choice(len(areas), p=areas / total))
    u, v = rng.random(2)
    if u + v > 1.0:
        u, v = 1.0 - u, 1.0 - v
    return v0 + u * e1[k] + v * e2[k]


def sample_user_in_cell(tess: Tessellation, cell_id: int, rng) -> np.ndarray:
    """Uniform point in an interior cell via area-weighted fan triangles."""
    if not tess.interior[cell_id]:
        raise BoundaryCell(f"cell {cell_id} touches the window boundary")
    return _sample_in_polygon(tess.polygons[cell_id], rng)


# ---- analytic approximations ------------------------------------------------------

def interferer_intensity(r, lam: float, variant: str = "paper"):
    """Intensity of interfering users at distance r from the typical BS.

    The paper variant reaches homogeneity at rate 12/5 per mean cell area;
    the baseline (independent-cell) variant at rate 1.
    """
    r = np.asarray(r, dtype=float)
    rate = 2.4 if variant == "paper" else 1.0
    if variant not in ("paper", "baseline"):
        raise ValueError(f"variant must be paper or baseline, got {variant!r}")
    vals = lam * (-np.expm1(-rate * lam * math.pi * r * r))
    return vals if vals.shape else float(vals)


def link_distance_pdf(r, lam: float = 1.0):
    """Density of the serving-link distance, Rayleigh with 5/4 area scaling."""
    r = np.asarray(r, dtype=float)
    vals = 2.5 * math.pi * lam * r * np.exp(-1.25 * lam * math.pi * r * r)
    vals = np.where(r >= 0.0, vals, 0.0)
    return vals if vals.shape else float(vals)


def link_distance_cdf(r, lam: float = 1.0):
    r = np.asarray(r, dtype=float)
    vals = -np.expm1(-1.25 * lam * math.pi * np.maximum(r, 0.0) ** 2)
    return vals if vals.shape else float(vals)


def truncated_link_distance_pdf(r, D: float, lam: float = 1.0):
    """Serving-distance density conditioned on R <= D."""
    if D <= 0.0:
        raise ValueError(f"truncation distance must be positive, got {D}")
    r = np.asarray(r, dtype=float)
    norm = -math.expm1(-1.25 * lam * math.pi * D * D)
    vals = np.where(r <= D, link_distance_pdf(r, lam) / norm, 0.0)
    return vals if vals.shape else float(vals)


def k1_analytic(r, lam: float = 1.0):
    """K of the rate-12/5 interferer intensity around the typical BS."""
    r = np.asarray(r, dtype=float)
    c = 2.4 * lam
    vals = math.pi * r * r + (np.exp(-c * math.pi * r * r) - 1.0) / c
    return vals if vals.shape else float(vals)


def k2_analytic(r, lam: float = 1.0):
    """K of the baseline rate-1 intensity (independent-cell approximation)."""
    r = np.asarray(r, dtype=float)
    vals = math.pi * r * r + (np.exp(-lam * math.pi * r * r) - 1.0) / lam
    return vals if vals.shape else float(vals)


def ripley_k(points: PointSet, center_mode: str, radii, lam: float | None = None):
    """Empirical K function.

    stationary: border-corrected estimator; only points farther than
    max(radii) from the window boundary serve as centers.  typical_bs:
    counts the given points around the origin and normalizes by the model
    intensity lam, matching the analytic K construction.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii < 0.0):
        raise ValueError("radii must be nonnegative")
    pts = points.points
    if center_mode == "typical_bs":
        if lam is None:
            raise ValueError("typical_bs mode needs the model intensity lam")
        d = np.hypot(pts[:, 0], pts[:, 1])
        return np.array([np.sum(d <= r) for r in radii], dtype=float) / lam
    if center_mode != "stationary":
        raise ValueError(f"unknown center mode {center_mode!r}")
    if len(pts) < 2:
        raise InsufficientPoints("stationary K needs at least two points")
    r_max = float(np.max(radii))
    centers = points.window.boundary_distance(pts) >= r_max
    if not np.any(centers):
        raise InsufficientPoints("no interior centers at the largest radius")
    lam_hat = len(pts) / points.window.area
    tree = cKDTree(pts)
    counts = np.zeros(radii.shape)
    idx = np.flatnonzero(centers)
    for r_i, r in enumerate(radii):
        neigh = tree.query_ball_point(pts[idx], r)
        counts[r_i] = sum(len(nb) - 1 for nb in neigh)  # exclude the center itself
    return counts / (lam_hat * idx.size)


# ---- full realizations --------------------------------------------------------------

@dataclass(frozen=True)
class NetworkRealization:
    """One network draw: BSs (origin first), tessellation, one user per cell.

    guarded lists the cells whose BS lies within the guard radius and whose
    cell is interior; only those enter statistics.  Users exist for every
    cell so that boundary cells still interfere.
    """

    bs: PointSet
    tess: Tessellation
    users: np.ndarray
    guarded: np.ndarray
    guard_radius: float

    @property
    def n_cells(self) -> int:
        return len(self.bs.points)

    def serving_distances(self) -> np.ndarray:
        return np.hypot(*(self.users - self.bs.points).T)

    def uplink_geometry(self, cell_id: int) -> LinkGeometry:
        """BS of cell_id receives from its own user; all other users interfere."""
        rx = self.bs.points[cell_id]
        R = float(np.hypot(*(self.users[cell_id] - rx)))
        mask = np.ones(self.n_cells, dtype=bool)
        mask[cell_id] = False
        d = np.hypot(*(self.users[mask] - rx).T)
        rxs = self.serving_distances()[mask]
        return LinkGeometry(R=R, d=d, rx=rxs)

    def downlink_geometry(self, cell_id: int) -> LinkGeometry:
        """User of cell_id receives from its BS; all other BSs interfere."""
        rx = self.users[cell_id]
        R = float(np.hypot(*(self.bs.points[cell_id] - rx)))
        mask = np.ones(self.n_cells, dtype=bool)
        mask[cell_id] = False
        d = np.hypot(*(self.bs.points[mask] - rx).T)
        rxs = self.serving_distances()[mask]
        return LinkGeometry(R=R, d=d, rx=rxs)

    def to_json(self) -> str:
        return json.dumps({
            "bs": self.bs.points.tolist(),
            "users": self.users.tolist(),
            "cell_ids": list(range(self.n_cells)),
            "guarded": np.flatnonzero(self.guarded).tolist(),
            "guard_radius": self.guard_radius,
            "window_radius": getattr(self.bs.window, "radius", None),
        })


def _boundary_cell_user(tess: Tessellation, cell_id: int, rng, max_tries: int = 256):
    # boundary polygons are clipped to the bbox, not the window, so sample
    # and reject until the point falls inside the window proper
    for _ in range(max_tries):
        p = _sample_in_polygon(tess.polygons[cell_id], rng)
        if tess.window.contains(p[None, :])[0]:
            return p
    return tess.points[cell_id]  # measure-zero sliver: park the user at its BS


def sample_realization(cfg: SystemConfig, window=None, rng=None,
                       require_origin_interior: bool = True) -> NetworkRealization:
    """Draw one network under the Palm measure (BS atom at the origin)."""
    if rng is None:
        rng = np.random.default_rng()
    if window is None:
        window = default_window(cfg.lam)
    others = sample_ppp(cfg.lam, window, rng)
    pts = np.vstack([[0.0, 0.0], others.points])
    if require_origin_interior and len(pts) < 3:
        raise OriginCellTouchesBoundary(
            "window too sparse to enclose the typical cell; enlarge it")
    bs = PointSet(points=pts, window=window)
    tess = build_voronoi(bs)
    if require_origin_interior and not tess.interior[0]:
        raise OriginCellTouchesBoundary(
            "the typical cell reaches the window boundary; enlarge the window")
    users = np.empty_like(pts)
    for i in range(len(pts)):
        if tess.interior[i]:
            users[i] = _sample_in_polygon(tess.polygons[i], rng)
        else:
            users[i] = _boundary_cell_user(tess, i, rng)
    guard_radius = GUARD_FACTOR / math.sqrt(cfg.lam)
    within_guard = np.hypot(pts[:, 0], pts[:, 1]) <= guard_radius
    guarded = within_guard & tess.interior
    return NetworkRealization(bs=bs, tess=tess, users=users, guarded=guarded,
                              guard_radius=guard_radius)
