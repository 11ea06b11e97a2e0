"""Irregular domains given implicitly, with per-axis integration bounds.

The fractional operators act along axis-aligned lines through a collocation
point, so every domain must report where such a line leaves it. Balls (disks
in 2-D) do this analytically; other domains march along the line and bisect
the indicator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .estimators import AxisBounds

__all__ = [
    "Ball",
    "CurveDomain",
    "Domain",
    "DomainError",
    "axis_bounds",
    "bisect_axis_bounds",
    "disk",
    "heart",
    "make_domain",
]


class DomainError(ValueError):
    pass


class Domain:
    """Base class: subclasses provide ``signed_distance`` and ``bbox``.

    ``signed_distance`` is negative inside, zero on the boundary and positive
    outside. It need not be an exact distance, only a proximity measure that
    vanishes on the boundary.
    """

    dim: int
    bbox: np.ndarray            # shape (dim, 2)

    def signed_distance(self, points) -> np.ndarray:
        raise NotImplementedError

    def inside(self, points) -> np.ndarray:
        return self.signed_distance(points) < 0

    @property
    def extent(self) -> float:
        return float(np.max(self.bbox[:, 1] - self.bbox[:, 0]))

    def axis_bounds(self, point, axis: int) -> AxisBounds:
        return bisect_axis_bounds(self, point, axis)

    def axis_bounds_many(self, points) -> np.ndarray:
        """Bounds for every point and axis, shape ``(n, dim, 2)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty((len(pts), self.dim, 2))
        for i, p in enumerate(pts):
            for a in range(self.dim):
                b = self.axis_bounds(p, a)
                out[i, a] = b.lb, b.ub
        return out

    def sample_interior(self, n: int, rng, margin: float = 0.0) -> np.ndarray:
        """Rejection sampling in the bounding box.

        With ``margin > 0`` only points at least that far inside (by
        ``signed_distance``) are kept.
        """
        if n < 1:
            raise ValueError("n must be >= 1")
        if margin < 0:
            raise ValueError("margin must be >= 0")
        rng = np.random.default_rng(rng)
        lo, hi = self.bbox[:, 0], self.bbox[:, 1]
        out, tried = [], 0
        have = 0
        while have < n:
            batch = max(1024, 2 * (n - have))
            cand = lo + (hi - lo) * rng.random((batch, self.dim))
            tried += batch
            ok = self.signed_distance(cand) < -margin if margin > 0 else self.inside(cand)
            keep = cand[ok]
            out.append(keep)
            have += len(keep)
            if tried >= 10**6 and have / tried < 1e-4:
                raise DomainError("acceptance rate below 1e-4, domain looks degenerate")
        return np.concatenate(out)[:n]

    def sample_boundary(self, n: int, rng) -> np.ndarray:
        raise DomainError(f"{type(self).__name__} has no boundary sampler")

    def validation_grid(self, per_axis: int) -> np.ndarray:
        """Tensor grid of the bounding box restricted to the interior."""
        axes = [np.linspace(lo, hi, per_axis + 2)[1:-1] for lo, hi in self.bbox]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, self.dim)
        return pts[self.inside(pts)]


def _check_interior(domain: Domain, point: np.ndarray) -> None:
    if not domain.inside(point[None])[0]:
        raise DomainError(f"point {point.tolist()} is not strictly inside the domain")


def bisect_axis_bounds(domain: Domain, point, axis: int, *,
                       march_steps: int = 2000) -> AxisBounds:
    """Crossings of the axis line through ``point`` found by marching + bisection.

    The line is walked from the point in steps of ``extent / march_steps`` until
    the indicator flips; the flip is refined by bisection to
    ``1e-10 * extent``. This yields the connected piece of the line that
    contains the point.
    """
    p = np.asarray(point, dtype=float)
    _check_interior(domain, p)
    step = domain.extent / march_steps
    tol = 1e-10 * domain.extent
    ends = []
    for sign in (-1.0, 1.0):
        inner = 0.0
        far = (domain.bbox[axis, 1] - p[axis]) if sign > 0 else (p[axis] - domain.bbox[axis, 0])
        outer = None
        s = step
        while s <= far + step:
            q = p.copy()
            q[axis] += sign * s
            if not domain.inside(q[None])[0]:
                outer = s
                break
            inner = s
            s += step
        if outer is None:
            raise DomainError("bounding box does not contain the domain")
        while outer - inner > tol:
            mid = 0.5 * (inner + outer)
            q = p.copy()
            q[axis] += sign * mid
            if domain.inside(q[None])[0]:
                inner = mid
            else:
                outer = mid
        ends.append(p[axis] + sign * 0.5 * (inner + outer))
    return AxisBounds(ends[0], ends[1])


def axis_bounds(domain: Domain, point, axis: int) -> AxisBounds:
    return domain.axis_bounds(point, axis)


@dataclass
class Ball(Domain):
    """Open ball ``|x - center| < radius`` in 2 or 3 dimensions."""

    center: tuple
    radius: float = 1.0
    dim: int = field(init=False)
    bbox: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1 or len(c) not in (2, 3):
            raise ValueError("center must have 2 or 3 coordinates")
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        self.center = tuple(c)
        self.dim = len(c)
        pad = 1e-9 * self.radius
        self.bbox = np.stack([c - self.radius - pad, c + self.radius + pad], axis=1)

    def signed_distance(self, points) -> np.ndarray:
        d = np.atleast_2d(points) - np.asarray(self.center)
        return np.sqrt(np.sum(d * d, axis=-1)) - self.radius

    def axis_bounds(self, point, axis: int) -> AxisBounds:
        p = np.asarray(point, dtype=float)
        _check_interior(self, p)
        b = self.axis_bounds_many(p[None])[0, axis]
        return AxisBounds(b[0], b[1])

    def axis_bounds_many(self, points) -> np.ndarray:
        d = np.atleast_2d(np.asarray(points, dtype=float)) - np.asarray(self.center)
        sq = np.sum(d * d, axis=-1)
        if np.any(sq >= self.radius**2):
            raise DomainError("axis bounds requested for a point outside the ball")
        out = np.empty(d.shape + (2,))
        c = np.asarray(self.center)
        for a in range(self.dim):
            half = np.sqrt(self.radius**2 - (sq - d[:, a] ** 2))
            out[:, a, 0] = c[a] - half
            out[:, a, 1] = c[a] + half
        return out

    def sample_boundary(self, n: int, rng) -> np.ndarray:
        rng = np.random.default_rng(rng)
        if self.dim == 2:
            t = rng.uniform(0.0, 2 * np.pi, n)
            dirs = np.stack([np.cos(t), np.sin(t)], axis=1)
        else:
            g = rng.standard_normal((n, 3))
            dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
        return np.asarray(self.center) + self.radius * dirs


def disk(center=(0.0, 0.0), radius: float = 1.0) -> Ball:
    return Ball(center, radius)


def _heart_xy(t, coeffs):
    sx, c1, c2, c3, c4 = coeffs
    x = sx * np.sin(t) ** 3
    y = c1 * np.cos(t) - c2 * np.cos(2 * t) - c3 * np.cos(3 * t) - c4 * np.cos(4 * t)
    return x, y


class CurveDomain(Domain):
    """Region enclosed by a closed parametric curve ``t -> (x(t), y(t))``.

    Two containment rules are available on a dense polygon through the curve:

    ``"evenodd"``
        Standard crossing parity; right for simple curves.
    ``"radial"``
        ``|p| <= R(theta_p)``, where ``R(theta)`` is the farthest crossing of
        the ray from the origin at angle ``theta`` with the curve. This is
        the star-shaped envelope of the curve about the origin, and is well
        defined even when the curve intersects itself.

    ``signed_distance`` is negative inside. Under the radial rule it is the
    radial gap ``|p| - R(theta_p)``.
    """

    def __init__(self, curve, n_vertices: int = 4096, name: str = "curve",
                 rule: str = "evenodd"):
        if rule not in ("evenodd", "radial"):
            raise ValueError(f"unknown containment rule {rule!r}")
        self.curve = curve
        self.name = name
        self.rule = rule
        t = np.linspace(0.0, 2 * np.pi, n_vertices, endpoint=False)
        x, y = curve(t)
        self.vertices = np.stack([x, y], axis=1)
        self.dim = 2
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        pad = 1e-3 * float(np.max(hi - lo))
        self.bbox = np.stack([lo - pad, hi + pad], axis=1)

    def _edges(self):
        a = self.vertices
        return a, np.roll(a, -1, axis=0)

    def _contains(self, pts: np.ndarray) -> np.ndarray:
        a, b = self._edges()
        px, py = pts[:, 0:1], pts[:, 1:2]
        ay, by = a[None, :, 1], b[None, :, 1]
        ax, bx = a[None, :, 0], b[None, :, 0]
        crosses = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (py - ay) * (bx - ax) / (by - ay)
        hits = crosses & (px < xcross)
        return (np.count_nonzero(hits, axis=1) % 2) == 1

    def radius_at(self, theta) -> np.ndarray:
        """Farthest crossing ``R(theta)`` of the ray at angle ``theta``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        a, b = self._edges()
        e = b - a
        out = np.empty(len(theta))
        for s in range(0, len(theta), 512):
            th = theta[s:s + 512, None]
            ux, uy = np.cos(th), np.sin(th)
            den = ux * e[None, :, 1] - uy * e[None, :, 0]
            with np.errstate(divide="ignore", invalid="ignore"):
                dist = (a[None, :, 0] * e[None, :, 1] - a[None, :, 1] * e[None, :, 0]) / den
                v = (a[None, :, 0] * uy - a[None, :, 1] * ux) / den
            ok = (den != 0) & (v >= 0) & (v <= 1) & (dist > 0)
            out[s:s + 512] = np.max(np.where(ok, dist, 0.0), axis=1)
        return out

    def _radial_gap(self, pts: np.ndarray) -> np.ndarray:
        r = np.hypot(pts[:, 0], pts[:, 1])
        return r - self.radius_at(np.arctan2(pts[:, 1], pts[:, 0]))

    def _distance(self, pts: np.ndarray) -> np.ndarray:
        a, b = self._edges()
        ab = b - a
        ap = pts[:, None, :] - a[None]
        t = np.clip(np.sum(ap * ab, -1) / np.sum(ab * ab, -1), 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        return np.min(np.linalg.norm(pts[:, None, :] - proj, axis=-1), axis=1)

    def signed_distance(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.rule == "radial":
            return self._radial_gap(pts)
        out = np.empty(len(pts))
        for s in range(0, len(pts), 256):
            chunk = pts[s:s + 256]
            d = self._distance(chunk)
            out[s:s + 256] = np.where(self._contains(chunk), -d, d)
        return out

    def inside(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.rule == "radial":
            return self._radial_gap(pts) < 0
        out = np.empty(len(pts), dtype=bool)
        for s in range(0, len(pts), 1024):
            out[s:s + 1024] = self._contains(pts[s:s + 1024])
        return out

    def boundary_at(self, t) -> np.ndarray:
        """Exact curve points (not the polygon) at parameters ``t``."""
        x, y = self.curve(np.asarray(t, dtype=float))
        return np.stack([x, y], axis=-1)

    def sample_boundary(self, n: int, rng) -> np.ndarray:
        """Uniform in the curve parameter, or in angle for the radial rule."""
        rng = np.random.default_rng(rng)
        if self.rule == "radial":
            # rays that miss the curve (R = 0) would all land on the origin
            out = np.empty((0, 2))
            while len(out) < n:
                th = rng.uniform(0.0, 2 * np.pi, 2 * n)
                r = self.radius_at(th)
                keep = r > 0
                pts = r[keep, None] * np.stack([np.cos(th[keep]), np.sin(th[keep])], axis=1)
                out = np.concatenate([out, pts])
            return out[:n]
        return self.boundary_at(rng.uniform(0.0, 2 * np.pi, n))


HEART_COEFFS = (1.6, 1.3, 5.0, 2.0, 1.0)


def heart(coeffs=HEART_COEFFS, n_vertices: int = 4096) -> CurveDomain:
    """``x = a sin^3 t``, ``y = b1 cos t - b2 cos 2t - b3 cos 3t - b4 cos 4t``.

    The default coefficients are the literal ``(1.6, 1.3, 5, 2, 1)``, for
    which the curve crosses itself; containment therefore uses the radial
    rule.
    """
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) != 5:
        raise ValueError("heart curve takes five coefficients")
    return CurveDomain(lambda t: _heart_xy(t, coeffs), n_vertices, name="heart", rule="radial")


def make_domain(name: str, **params) -> Domain:
    """Build a domain by configuration name: ``disk``, ``ball`` or ``heart``."""
    name = name.lower()
    if name == "disk":
        return Ball(tuple(params.get("center", (0.0, 0.0))), float(params.get("radius", 1.0)))
    if name == "ball":
        return Ball(tuple(params.get("center", (0.0, 0.0, 0.0))), float(params.get("radius", 0.5)))
    if name == "heart":
        return heart(params.get("coeffs", HEART_COEFFS))
    raise DomainError(f"unknown domain {name!r}")
