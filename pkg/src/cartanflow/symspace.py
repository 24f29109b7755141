"""Symmetric-space structure for the sphere S^n = SO(n+1)/SO(n) and the real
Grassmannian Gr(k,n) = SO(n)/(SO(k) x SO(n-k)).

The flat coordinates (p-coordinates) parameterize the -1 eigenspace of the
Cartan involution inside the relevant so(m). Basepoints are fixed: the north
pole e_{n+1} for the sphere and span(e_1..e_k) for the Grassmannian. The
p-block is flattened row-major for Gr(k,n); this ordering defines the space
the flow model is trained on and is recorded in dataset manifests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    RankDeficientError,  # noqa: F401  (re-exported: callers drop these rows)
    frobenius,
    qr_decompose,
    skew_exp,
    so_log,
)

POLE_TOL = 1e-12
MANIFOLD_TOL = 1e-10


class SizeMismatchError(ValueError):
    """Matrix or coordinate size does not match the space descriptor."""


class NotOnManifoldError(ValueError):
    """Point fails the manifold membership check."""


class AtPoleError(ValueError):
    """Stereographic projection is undefined at the projection pole."""


@dataclass(frozen=True)
class SpaceDescriptor:
    """Which symmetric space: Sphere(n) or Grassmann(k, n)."""

    kind: str  # "sphere" | "grassmann"
    n: int
    k: int = 0

    def __post_init__(self):
        if self.kind == "sphere":
            if self.n < 1:
                raise ValueError("sphere needs n >= 1")
        elif self.kind == "grassmann":
            if not 1 <= self.k < self.n:
                raise ValueError("grassmann needs 1 <= k < n")
        else:
            raise ValueError(f"unknown space kind {self.kind!r}")

    @classmethod
    def sphere(cls, n):
        return cls("sphere", n)

    @classmethod
    def grassmann(cls, k, n):
        return cls("grassmann", n, k)

    @property
    def matrix_size(self):
        """Size of the ambient skew matrices: so(n+1) for S^n, so(n) for Gr."""
        return self.n + 1 if self.kind == "sphere" else self.n

    @property
    def p_dim(self):
        return self.n if self.kind == "sphere" else self.k * (self.n - self.k)

    @property
    def group_dim(self):
        m = self.matrix_size
        return m * (m - 1) // 2

    def to_json(self):
        if self.kind == "sphere":
            return {"kind": "sphere", "n": self.n}
        return {"kind": "grassmann", "k": self.k, "n": self.n}

    @classmethod
    def from_json(cls, obj):
        if obj["kind"] == "sphere":
            return cls.sphere(int(obj["n"]))
        return cls.grassmann(int(obj["k"]), int(obj["n"]))


def _check_coords(coords, space):
    coords = np.asarray(coords, dtype=float).reshape(-1)
    if coords.shape[0] != space.p_dim:
        raise SizeMismatchError(
            f"expected {space.p_dim} coordinates for {space}, got {coords.shape[0]}"
        )
    if not np.all(np.isfinite(coords)):
        raise ValueError("coordinates contain non-finite entries")
    return coords


def p_embed(coords, space):
    """Embed flat p-coordinates as a skew matrix.

    Grassmann(k,n): the k x (n-k) block X sits upper-right (row-major from
    coords) with -X^T lower-left. Sphere(n): coords fill the first n entries
    of the last column, negated along the last row.
    """
    coords = _check_coords(coords, space)
    m = space.matrix_size
    a = np.zeros((m, m))
    if space.kind == "sphere":
        a[:-1, -1] = coords
        a[-1, :-1] = -coords
    else:
        k = space.k
        block = coords.reshape(k, space.n - k)
        a[:k, k:] = block
        a[k:, :k] = -block.T
    return a


def p_extract(a, space):
    """Read the p-block of a skew matrix, ignoring the k-block entirely."""
    a = np.asarray(a, dtype=float)
    m = space.matrix_size
    if a.shape != (m, m):
        raise SizeMismatchError(f"expected {m} x {m} matrix, got {a.shape}")
    if space.kind == "sphere":
        return a[:-1, -1].copy()
    return a[: space.k, space.k:].reshape(-1).copy()


def cartan_project(a, space):
    """Project onto the -1 eigenspace of the Cartan involution (idempotent)."""
    return p_embed(p_extract(a, space), space)


def group_to_manifold(q, space):
    """Action of the group element on the basepoint: pi(g) = g . p0.

    Sphere: last column of Q (image of the north pole). Grassmann: first k
    columns of Q as an orthonormal frame for the image subspace.
    """
    q = np.asarray(q, dtype=float)
    m = space.matrix_size
    if q.shape != (m, m):
        raise SizeMismatchError(f"expected {m} x {m} matrix, got {q.shape}")
    if space.kind == "sphere":
        return q[:, -1].copy()
    return q[:, : space.k].copy()


def basepoint(space):
    return group_to_manifold(np.eye(space.matrix_size), space)


def projector(frame):
    """Canonical Grassmann representation F F^T (frame is O(k)-ambiguous)."""
    frame = np.asarray(frame, dtype=float)
    return frame @ frame.T


def check_manifold_point(pt, space, tol=MANIFOLD_TOL):
    pt = np.asarray(pt, dtype=float)
    if space.kind == "sphere":
        if pt.shape != (space.n + 1,):
            raise NotOnManifoldError(f"expected vector of length {space.n + 1}")
        if abs(np.linalg.norm(pt) - 1.0) > tol:
            raise NotOnManifoldError("point is not unit length")
    else:
        if pt.shape != (space.n, space.k):
            raise NotOnManifoldError(f"expected {space.n} x {space.k} frame")
        if frobenius(pt.T @ pt - np.eye(space.k)) > tol:
            raise NotOnManifoldError("frame columns are not orthonormal")
    return pt


def geodesic(coords, t, space):
    """Geodesic through the basepoint: pi(exp(t * embed(coords)))."""
    return group_to_manifold(skew_exp(float(t) * p_embed(coords, space)), space)


def geodesic_symmetry(pt, space):
    """Geodesic symmetry s_{p0} at the basepoint.

    Realized directly on the point: the sphere involution negates the first n
    coordinates; the Grassmann involution conjugates by diag(I_k, -I_{n-k}),
    i.e. negates the bottom rows of the frame. Both equal pi(sigma(g)) for any
    group element g with pi(g) = pt, so no frame completion is needed.
    """
    pt = check_manifold_point(pt, space)
    if space.kind == "sphere":
        out = pt.copy()
        out[:-1] = -out[:-1]
        return out
    out = pt.copy()
    out[space.k:, :] = -out[space.k:, :]
    return out


def preprocess_point(x, space):
    """Map a raw n x k data matrix to p-coordinates.

    QR-decompose, flip the sign of Q's last column if det(Q) < 0 (the span of
    the first k columns is unchanged since k < n), take the principal log in
    so(n), and project onto the p-block. Raises RankDeficientError for
    degenerate input; callers drop such rows with a warning.
    """
    coords, _ = _preprocess_single(x, space)
    return coords


def _preprocess_single(x, space):
    if space.kind != "grassmann":
        raise SizeMismatchError("preprocessing expects a Grassmann space")
    x = np.asarray(x, dtype=float)
    if x.shape != (space.n, space.k):
        raise SizeMismatchError(f"expected {space.n} x {space.k} data, got {x.shape}")
    q, _ = qr_decompose(x)
    flipped = False
    if np.linalg.det(q) < 0.0:
        q[:, -1] = -q[:, -1]
        flipped = True
    a = so_log(q)
    return p_extract(a, space), flipped


@dataclass
class PreprocessStats:
    total: int = 0
    dropped: int = 0
    sign_flips: int = 0
    dropped_indices: tuple = ()
    span_discrepancy_mean: float = 0.0
    span_discrepancy_max: float = 0.0
    span_checked: int = 0


def preprocess_batch(rows, space, span_check_limit=200):
    """Preprocess a batch of flattened n x k rows; returns (coords, stats).

    Rank-deficient rows are dropped (recorded in stats, not imputed). The
    span discrepancy ||Q_k Q_k^T - F F^T||_F between the original subspace and
    the subspace reached by exp of the projected coordinates is reported for
    the first `span_check_limit` kept rows; dropping the k-component does not
    preserve the subspace in general, so this is diagnostic only.
    """
    rows = np.asarray(rows, dtype=float)
    n, k = space.n, space.k
    if rows.ndim != 2 or rows.shape[1] != n * k:
        raise SizeMismatchError(f"expected rows of length {n * k}, got {rows.shape}")
    stats = PreprocessStats(total=rows.shape[0])
    out = np.empty((rows.shape[0], space.p_dim))
    kept = 0
    dropped = []
    discrepancies = []
    for i, row in enumerate(rows):
        x = row.reshape(n, k)
        try:
            coords, flipped = _preprocess_single(x, space)
        except RankDeficientError:
            dropped.append(i)
            continue
        stats.sign_flips += int(flipped)
        if len(discrepancies) < span_check_limit:
            q, _ = qr_decompose(x)
            p_orig = projector(q[:, :k])
            p_mapped = projector(geodesic(coords, 1.0, space))
            discrepancies.append(frobenius(p_orig - p_mapped))
        out[kept] = coords
        kept += 1
    stats.dropped = len(dropped)
    stats.dropped_indices = tuple(dropped[:100])
    if discrepancies:
        stats.span_discrepancy_mean = float(np.mean(discrepancies))
        stats.span_discrepancy_max = float(np.max(discrepancies))
        stats.span_checked = len(discrepancies)
    return out[:kept], stats


# ------------------------------------------------------------- S^2 experiment

CHECKERBOARD_HALF_WIDTH = 2.0

_CHECKER_CELLS = np.array(
    [(i, j) for i in range(-2, 2) for j in range(-2, 2) if (i + j) % 2 == 0],
    dtype=float,
)


def sample_checkerboard(count, seed=0):
    """Uniform samples from the dark cells of a 4x4 checkerboard on [-2,2]^2."""
    rng = np.random.default_rng(seed)
    cells = _CHECKER_CELLS[rng.integers(0, len(_CHECKER_CELLS), size=count)]
    return cells + rng.random((count, 2))


def checkerboard_cell_parity(points):
    """0 for dark cells, 1 for light; -1 outside the board."""
    points = np.asarray(points, dtype=float)
    inside = np.all(np.abs(points) <= CHECKERBOARD_HALF_WIDTH, axis=-1)
    parity = (np.floor(points[..., 0]) + np.floor(points[..., 1])).astype(int) % 2
    return np.where(inside, parity, -1)


def default_checkerboard_scale(samples):
    """Scale pi/(2 max|sample|): keeps the support inside the injectivity
    radius pi of exp on p, so the wrapped target never wraps around."""
    peak = float(np.max(np.abs(samples))) if np.size(samples) else 0.0
    return np.pi / (2.0 * peak) if peak > 0 else 1.0


def wrap_checkerboard(samples, scale):
    """Identify R^2 with p for Sphere(2): coords = scale * sample.

    The target lives directly on p; it is mapped to the sphere only at
    visualization time via geodesic(., 1).
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != 2:
        raise SizeMismatchError("expected an array of 2-vectors")
    return scale * samples


def sphere_from_p(coords_batch):
    """Closed-form sphere image of p-coordinates (great-circle formula),
    vectorized over rows; equals geodesic(., 1, sphere) for each row."""
    b = np.asarray(coords_batch, dtype=float)
    norms = np.linalg.norm(b, axis=-1, keepdims=True)
    safe = np.where(norms > 0, norms, 1.0)
    out = np.zeros(b.shape[:-1] + (b.shape[-1] + 1,))
    out[..., :-1] = np.sin(norms) * b / safe
    out[..., -1] = np.cos(norms[..., 0])
    return out


def p_from_sphere(points):
    """Inverse of sphere_from_p inside the injectivity radius."""
    pts = np.asarray(points, dtype=float)
    z = np.clip(pts[..., -1], -1.0, 1.0)
    theta = np.arccos(z)
    tangent = pts[..., :-1]
    tnorm = np.linalg.norm(tangent, axis=-1, keepdims=True)
    safe = np.where(tnorm > 0, tnorm, 1.0)
    return theta[..., None] * tangent / safe


def stereographic_project(pt):
    """Project S^2 points from the south pole: (x,y,z) -> (x,y)/(1+z).

    Accepts a single point or a batch; raises AtPoleError when |1+z| < 1e-12.
    """
    pts = np.asarray(pt, dtype=float)
    denom = 1.0 + pts[..., 2]
    if np.any(np.abs(denom) < POLE_TOL):
        raise AtPoleError("point at (or numerically at) the south pole")
    return pts[..., :2] / denom[..., None]
