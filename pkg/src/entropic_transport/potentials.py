"""Support functions of convex bodies and the p-homogeneous potentials V = h_K^p.

Points are arrays of shape ``(..., d)``.  One-dimensional callers may pass a
flat array; it is promoted to shape ``(n, 1)`` by :func:`as_points`.
"""

from __future__ import annotations

import numpy as np


def as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        return x[..., None]
    if x.shape[-1] != dim:
        raise ValueError(f"expected points with trailing dimension {dim}, got {x.shape}")
    return x


class ConvexBodySupport:
    """Support function h_K of a convex body containing the origin in its interior.

    Either a Euclidean ball (``radius``) or a polytope given by its vertices.
    For polytopes ``h_K(x) = max_j <x, v_j>``, which is piecewise linear; passing
    ``smoothing=q`` replaces the max by the 1-homogeneous convex mollification
    ``(sum_j <x, v_j>_+^q)^(1/q)`` so that Hessians exist.
    """

    def __init__(self, *, radius=None, vertices=None, dim=None, smoothing=None):
        if (radius is None) == (vertices is None):
            raise ValueError("give exactly one of radius or vertices")
        if radius is not None:
            if dim is None:
                raise ValueError("ball support needs dim")
            if radius <= 0:
                raise ValueError("radius must be positive")
            self.radius = float(radius)
            self.vertices = None
            self.dim = int(dim)
        else:
            v = np.atleast_2d(np.asarray(vertices, dtype=float))
            self.vertices = v
            self.radius = None
            self.dim = v.shape[1]
        if smoothing is not None and smoothing < 2:
            raise ValueError("smoothing exponent must be >= 2")
        self.smoothing = smoothing
        if self.vertices is not None:
            # origin interior <=> h_K > 0 in every direction
            u = _direction_grid(self.dim)
            if np.any(self._raw(u) <= 0):
                raise ValueError("the origin must lie in the interior of the body")

    # constructors -----------------------------------------------------
    @classmethod
    def ball(cls, radius: float = 1.0, dim: int = 2):
        return cls(radius=radius, dim=dim)

    @classmethod
    def interval(cls, left: float, right: float):
        """Support function of [-left, right] on the line."""
        return cls(vertices=[[-left], [right]])

    @classmethod
    def polygon(cls, vertices, smoothing=None):
        return cls(vertices=vertices, smoothing=smoothing)

    @classmethod
    def from_support_values(cls, directions, values, smoothing=None):
        """Polygon {x : <x, u_j> <= h_j} from support values on a direction grid (2-D).

        Directions must be sorted by angle and every halfplane must be active.
        """
        u = np.asarray(directions, dtype=float)
        u = u / np.linalg.norm(u, axis=1, keepdims=True)
        hv = np.asarray(values, dtype=float)
        verts = []
        m = len(u)
        for j in range(m):
            a = np.array([u[j], u[(j + 1) % m]])
            b = np.array([hv[j], hv[(j + 1) % m]])
            verts.append(np.linalg.solve(a, b))
        return cls(vertices=np.array(verts), smoothing=smoothing)

    def with_smoothing(self, q):
        if self.vertices is None:
            return self
        return ConvexBodySupport(vertices=self.vertices, smoothing=q)

    # evaluation -------------------------------------------------------
    def _raw(self, x):
        if self.vertices is None:
            return self.radius * np.linalg.norm(x, axis=-1)
        proj = x @ self.vertices.T
        if self.smoothing is None:
            return proj.max(axis=-1)
        q = self.smoothing
        pos = np.maximum(proj, 0.0)
        scale = pos.max(axis=-1, keepdims=True)
        safe = np.where(scale > 0, scale, 1.0)
        return safe[..., 0] * np.sum((pos / safe) ** q, axis=-1) ** (1.0 / q)

    def __call__(self, x):
        return self._raw(as_points(x, self.dim))

    def grad(self, x):
        x = as_points(x, self.dim)
        if self.vertices is None:
            nrm = np.linalg.norm(x, axis=-1, keepdims=True)
            return self.radius * np.divide(x, nrm, out=np.zeros_like(x), where=nrm > 0)
        proj = x @ self.vertices.T
        if self.smoothing is None:
            return self.vertices[np.argmax(proj, axis=-1)]
        h = self._raw(x)[..., None]
        w = np.divide(np.maximum(proj, 0.0), h, out=np.zeros_like(proj), where=h > 0)
        return (w ** (self.smoothing - 1)) @ self.vertices

    def hess(self, x):
        x = as_points(x, self.dim)
        d = self.dim
        eye = np.eye(d)
        if self.vertices is None:
            nrm = np.linalg.norm(x, axis=-1)[..., None, None]
            xhat = np.divide(x, nrm[..., 0], out=np.zeros_like(x), where=nrm[..., 0] > 0)
            outer = xhat[..., :, None] * xhat[..., None, :]
            return self.radius * np.divide(eye - outer, nrm, out=np.zeros(outer.shape), where=nrm > 0)
        if self.smoothing is None:
            return np.zeros(x.shape + (d,))
        q = self.smoothing
        proj = x @ self.vertices.T
        h = self._raw(x)
        w = np.divide(np.maximum(proj, 0.0), h[..., None], out=np.zeros_like(proj), where=h[..., None] > 0)
        g = (w ** (q - 1)) @ self.vertices
        vv = self.vertices[:, :, None] * self.vertices[:, None, :]
        s = np.tensordot(w ** (q - 2), vv, axes=(-1, 0))
        coef = np.divide(q - 1, h, out=np.zeros_like(h), where=h > 0)[..., None, None]
        return coef * (s - g[..., :, None] * g[..., None, :])


def _direction_grid(dim, m=720):
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    if dim == 2:
        th = np.linspace(0, 2 * np.pi, m, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    rng = np.random.default_rng(0)
    u = rng.standard_normal((4000, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class HomogeneousPotential:
    """Convex p-homogeneous potential V(x) = h_K(x)^p, 1 < p < inf."""

    def __init__(self, p: float, body: ConvexBodySupport):
        if not 1 < p < np.inf:
            raise ValueError("p must lie in (1, inf)")
        self.p = float(p)
        self.body = body
        self.dim = body.dim

    @classmethod
    def gaussian(cls, dim: int = 1):
        """V = |x|^2 / 2."""
        return cls(2.0, ConvexBodySupport.ball(1 / np.sqrt(2.0), dim))

    @classmethod
    def radial(cls, p: float, dim: int = 2):
        """V = |x|^p / p."""
        return cls(p, ConvexBodySupport.ball(p ** (-1.0 / p), dim))

    @property
    def is_standard_gaussian(self) -> bool:
        b = self.body
        return self.p == 2.0 and b.vertices is None and np.isclose(b.radius, 1 / np.sqrt(2.0), rtol=0, atol=1e-15)

    def __call__(self, x):
        return self.body(x) ** self.p

    def grad(self, x):
        x = as_points(x, self.dim)
        h = self.body(x)[..., None]
        return self.p * h ** (self.p - 1) * self.body.grad(x)

    def hess(self, x):
        x = as_points(x, self.dim)
        p = self.p
        h = self.body(x)[..., None, None]
        g = self.body.grad(x)
        outer = g[..., :, None] * g[..., None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            out = p * (p - 1) * h ** (p - 2) * outer + p * h ** (p - 1) * self.body.hess(x)
        if p == 2 and self.body.vertices is None:
            # V = r^2 |x|^2 is smooth at the origin
            zero = (h == 0)[..., 0, 0]
            out[zero] = 2 * self.body.radius ** 2 * np.eye(self.dim)
        return np.nan_to_num(out, nan=0.0, posinf=0.0)

    def hess_fd(self, x, step: float = 1e-5):
        """Central finite-difference Hessian of V (fallback / cross-check)."""
        x = as_points(x, self.dim)
        d = self.dim
        out = np.empty(x.shape + (d,))
        for j in range(d):
            e = np.zeros(d)
            e[j] = step
            out[..., :, j] = (self.grad(x + e) - self.grad(x - e)) / (2 * step)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def level_radius(self, level: float) -> float:
        """Smallest r with V(x) >= level for every |x| >= r."""
        hmin = float(np.min(self.body(_direction_grid(self.dim))))
        return (level ** (1.0 / self.p)) / hmin

    def integral_exp_neg(self) -> float:
        """Closed form of int e^{-V} dx = Gamma(1 + n/p) * Vol({h_K <= 1}) for ball bodies."""
        from scipy.special import gamma

        if self.body.vertices is not None:
            raise NotImplementedError("closed form only for ball bodies")
        n = self.dim
        r = self.body.radius
        unit_ball = np.pi ** (n / 2) / gamma(n / 2 + 1)
        return float(gamma(1 + n / self.p) * unit_ball / r ** n)
