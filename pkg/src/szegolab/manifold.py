"""Parametrized submanifolds of R^{2N} = C^N.

A Chart carries a map gamma into interleaved real coordinates
(x1, y1, ..., xN, yN), its jacobian, periodicity flags and a
partition-of-unity weight.  From the jacobian columns we form the induced
metric G, the pulled-back symplectic form H, the endomorphism W = G^{-1}H
whose eigenvalues +-i lambda_ell classify the submanifold, and the Hessian
factor Delta_n that drives all trace asymptotics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import dsl

__all__ = [
    "Chart",
    "ChartedSubmanifold",
    "GeometryFrame",
    "Classification",
    "QuadratureBlock",
    "Quadrature",
    "frame_at",
    "classify",
    "d_prime",
    "delta_n",
    "quadrature",
    "real_to_complex",
    "circle",
    "torus_product",
    "parabola_patch",
    "plane_patch",
    "sphere3",
    "custom_chart",
    "manifold_from_spec",
    "amplitude_from_dsl",
    "default_max_degree",
    "default_periodic_nodes",
]

LAMBDA_TOL = 1e-8


def real_to_complex(x: np.ndarray) -> np.ndarray:
    """(m, 2N) interleaved reals -> (m, N) complex, z_j = x_j + i y_j."""
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


@dataclass(frozen=True)
class Chart:
    """Single parametrization t in a box of R^d -> R^{2N}.

    gamma and jacobian are vectorized: gamma maps (m, d) -> (m, 2N) and
    jacobian maps (m, d) -> (m, 2N, d) with columns d(gamma)/dt_j.
    """

    dim: int
    ambient_dim: int
    domain: tuple[tuple[float, float], ...]
    periodic: tuple[bool, ...]
    gamma: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    pou_weight: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "chart"

    def __post_init__(self):
        if len(self.domain) != self.dim or len(self.periodic) != self.dim:
            raise ValueError("domain and periodic must have one entry per axis")
        if not 1 <= self.dim <= 2 * self.ambient_dim:
            raise ValueError("chart dimension must lie in [1, 2N]")

    def points(self, t: np.ndarray) -> np.ndarray:
        """Complex ambient points at parameter values t: (m, d) -> (m, N)."""
        return real_to_complex(self.gamma(np.atleast_2d(np.asarray(t, float))))

    def pou(self, t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, float))
        if self.pou_weight is None:
            return np.ones(t.shape[0])
        return np.asarray(self.pou_weight(t), dtype=float)


@dataclass(frozen=True)
class ChartedSubmanifold:
    ambient_dim: int
    charts: tuple[Chart, ...]
    declared_class: Optional[str] = None
    label: str = "manifold"

    def __post_init__(self):
        if not self.charts:
            raise ValueError("at least one chart is required")
        dims = {c.dim for c in self.charts}
        if len(dims) != 1:
            raise ValueError("all charts must share the manifold dimension")
        for c in self.charts:
            if c.ambient_dim != self.ambient_dim:
                raise ValueError("chart ambient dimension mismatch")

    @property
    def dim(self) -> int:
        return self.charts[0].dim


@dataclass(frozen=True)
class GeometryFrame:
    """Pointwise first-order data: metric, symplectic form, W-spectrum."""

    G: np.ndarray
    H: np.ndarray
    W: np.ndarray
    lambdas: tuple[float, ...]  # positive ones, ascending; r of them
    half_rank: int
    vol_density: float

    @property
    def dim(self) -> int:
        return self.G.shape[0]


class SingularMetricError(ValueError):
    pass


class ClassificationError(ValueError):
    pass


def frame_at(chart: Chart, t) -> GeometryFrame:
    """Geometry frame at one interior parameter point."""
    t = np.asarray(t, dtype=float).reshape(1, -1)
    J = np.asarray(chart.jacobian(t), dtype=float)[0]  # (2N, d)
    return _frame_from_jacobian(J)


def _frame_from_jacobian(J: np.ndarray) -> GeometryFrame:
    cols = J[0::2, :] + 1j * J[1::2, :]  # (N, d) complex tangent columns
    G = J.T @ J
    # H_ij = omega(col_i, col_j) = Im(col_i . conj(col_j))
    H = -(cols.conj().T @ cols).imag
    if np.linalg.cond(G) > 1e12:
        raise SingularMetricError("induced metric is numerically singular")
    W = np.linalg.solve(G, H)
    # lambda_ell^2 are the (doubled) eigenvalues of the symmetric PSD matrix
    # G^{-1/2} H G^{-1} H^T G^{-1/2}; this avoids a nonsymmetric eigensolve.
    gl, gv = np.linalg.eigh(G)
    G_mhalf = gv @ np.diag(gl ** -0.5) @ gv.T
    A = G_mhalf @ H @ G_mhalf  # skew and similar to W
    S = A @ A.T  # = -A^2, eigenvalues lambda^2 doubled plus zeros
    lam2 = np.linalg.eigvalsh(S)
    # threshold on lambda^2 relative to the spectral scale: eigvalsh noise is
    # O(eps * scale) and would exceed LAMBDA_TOL after the square root
    scale = max(float(lam2.max(initial=0.0)), 1.0)
    keep = (lam2 > max(LAMBDA_TOL ** 2, 1e-13 * scale))
    lam = np.sqrt(np.clip(lam2, 0.0, None))
    pos = np.sort(lam[keep])
    if pos.size % 2 != 0:
        raise ClassificationError("W spectrum failed to pair into +-i lambda")
    lambdas = tuple(float(x) for x in pos[0::2])
    vol = math.sqrt(max(float(np.prod(gl)), 0.0))
    return GeometryFrame(G=G, H=H, W=W, lambdas=lambdas,
                         half_rank=len(lambdas), vol_density=vol)


def delta_n(frame: GeometryFrame, n: int) -> float:
    """Hessian factor n^{d/2-r} prod [(1+l)^n - (1-l)^n]/(2l) over lambdas."""
    if n < 1:
        raise ValueError("n must be >= 1")
    d, r = frame.dim, frame.half_rank
    value = float(n) ** (0.5 * d - r)
    for lam in frame.lambdas:
        if lam < 1e-12:
            value *= n
        else:
            value *= ((1.0 + lam) ** n - (1.0 - lam) ** n) / (2.0 * lam)
    return value


# --- classification ----------------------------------------------------------

@dataclass(frozen=True)
class Classification:
    tag: str  # isotropic | lagrangian | coisotropic | symplectic | generic
    dim: int
    ambient_dim: int
    half_rank: int
    lambda_range: tuple[float, float]  # (min, max) over nodes, 0s if r = 0
    max_unit_deviation: float  # max |lambda - 1| when coisotropic-shaped
    frames: tuple[GeometryFrame, ...] = field(repr=False, default=())

    @property
    def d_prime(self) -> int:
        return d_prime(self)


def _sample_nodes(sub: ChartedSubmanifold, per_axis: int = 5) -> list[tuple[Chart, np.ndarray]]:
    out = []
    for chart in sub.charts:
        axes = []
        for (lo, hi), per in zip(chart.domain, chart.periodic):
            if per:
                axes.append(lo + (hi - lo) * (np.arange(per_axis) + 0.5) / per_axis)
            else:
                # keep strictly interior for non-periodic axes
                axes.append(lo + (hi - lo) * (np.arange(1, per_axis + 1)) / (per_axis + 1))
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, chart.dim)
        out.append((chart, grid))
    return out


def classify(sub: ChartedSubmanifold, sample_nodes=None) -> Classification:
    """Classify by the K-endomorphism spectrum at sampled nodes.

    sample_nodes: optional list of (chart, (m, d) array) pairs; defaults to a
    coarse interior grid per chart.
    """
    if sample_nodes is None:
        sample_nodes = _sample_nodes(sub)
    frames = []
    for chart, nodes in sample_nodes:
        for t in np.atleast_2d(nodes):
            frames.append(frame_at(chart, t))
    ranks = {f.half_rank for f in frames}
    if len(ranks) != 1:
        raise ClassificationError(f"half rank varies across nodes: {sorted(ranks)}")
    r = ranks.pop()
    d, N = sub.dim, sub.ambient_dim
    all_lam = [lam for f in frames for lam in f.lambdas]
    lam_range = (min(all_lam), max(all_lam)) if all_lam else (0.0, 0.0)
    unit_dev = max((abs(lam - 1.0) for lam in all_lam), default=0.0)
    if r == 0:
        tag = "lagrangian" if d == N else "isotropic"
    elif d == N + r and unit_dev <= LAMBDA_TOL:
        tag = "coisotropic"
    elif 2 * r == d:
        tag = "symplectic"
    else:
        tag = "generic"
    return Classification(tag=tag, dim=d, ambient_dim=N, half_rank=r,
                          lambda_range=lam_range, max_unit_deviation=unit_dev,
                          frames=tuple(frames))


def d_prime(obj) -> int:
    """Effective Szego dimension: d if isotropic, 2N - d if coisotropic."""
    cls = obj if isinstance(obj, Classification) else classify(obj)
    if cls.tag in ("isotropic", "lagrangian"):
        return cls.dim
    if cls.tag == "coisotropic":
        return 2 * cls.ambient_dim - cls.dim
    raise ValueError(f"d' is undefined for a {cls.tag} submanifold")


# --- quadrature --------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureBlock:
    chart: Chart
    nodes: np.ndarray        # (m, d)
    weights: np.ndarray      # (m,) includes pou * sqrt(det G) * cell volume
    points: np.ndarray       # (m, N) complex ambient points

    @property
    def size(self) -> int:
        return self.nodes.shape[0]


@dataclass(frozen=True)
class Quadrature:
    blocks: tuple[QuadratureBlock, ...]

    @property
    def total_mass(self) -> float:
        return float(sum(b.weights.sum() for b in self.blocks))

    @property
    def size(self) -> int:
        return sum(b.size for b in self.blocks)

    def max_radius(self) -> float:
        return max(float(np.abs(b.points).max()) for b in self.blocks)

    def integrate(self, func: Callable[[QuadratureBlock], np.ndarray]) -> complex:
        """Sum of weights * func(block) over all blocks."""
        total = 0.0 + 0.0j
        for b in self.blocks:
            vals = np.asarray(func(b))
            total += complex(np.sum(b.weights * vals))
        return total if total.imag != 0 else total.real


def _axis_rule(lo: float, hi: float, periodic: bool, n: int):
    if n < 1:
        raise ValueError("quadrature order must be >= 1")
    if periodic:
        x = lo + (hi - lo) * np.arange(n) / n
        w = np.full(n, (hi - lo) / n)
    else:
        x0, w0 = np.polynomial.legendre.leggauss(n)
        x = 0.5 * (hi - lo) * (x0 + 1.0) + lo
        w = 0.5 * (hi - lo) * w0
    return x, w


def quadrature(sub: ChartedSubmanifold, order) -> Quadrature:
    """Tensor-product quadrature over all charts.

    order: nodes per axis, an integer or a sequence with one entry per axis.
    Periodic axes use the trapezoid rule, the rest Gauss-Legendre.  Weights
    include the partition-of-unity factor and the surface density sqrt(det G).
    """
    blocks = []
    for chart in sub.charts:
        if np.isscalar(order):
            per_axis = [int(order)] * chart.dim
        else:
            per_axis = [int(o) for o in order]
            if len(per_axis) != chart.dim:
                raise ValueError("per-axis order list must match chart dimension")
        axes = [_axis_rule(lo, hi, per, n)
                for (lo, hi), per, n in zip(chart.domain, chart.periodic, per_axis)]
        grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        nodes = np.stack(grids, axis=-1).reshape(-1, chart.dim)
        wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        cell = np.prod(np.stack(wgrids, axis=-1).reshape(-1, chart.dim), axis=1)
        J = np.asarray(chart.jacobian(nodes), dtype=float)  # (m, 2N, d)
        G = np.einsum("mad,mae->mde", J, J)
        detG = np.linalg.det(G)
        if np.any(detG <= 0):
            raise SingularMetricError("non-positive metric determinant at a node")
        weights = cell * chart.pou(nodes) * np.sqrt(detG)
        points = real_to_complex(chart.gamma(nodes))
        blocks.append(QuadratureBlock(chart=chart, nodes=nodes,
                                      weights=weights, points=points))
    total = sum(b.size for b in blocks)
    if total == 0:
        raise ValueError("empty quadrature")
    return Quadrature(blocks=tuple(blocks))


def default_periodic_nodes(k: float, radius: float) -> int:
    """Trapezoid nodes per periodic axis resolving the e^{ik omega} phase."""
    return max(64, 8 * math.ceil(math.sqrt(k)) * math.ceil(radius))


def default_max_degree(k: float, quad: Quadrature) -> int:
    """Truncation M = ceil(4 k R^2) with R the largest node radius."""
    target = 4.0 * k * quad.max_radius() ** 2
    return math.ceil(target * (1.0 - 1e-12))


# --- built-in catalog --------------------------------------------------------

def circle(radius: float = 1.0) -> ChartedSubmanifold:
    """Circle |z| = r in C^1; Lagrangian."""
    r = float(radius)

    def gamma(t):
        th = t[:, 0]
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)

    def jac(t):
        th = t[:, 0]
        return np.stack([-r * np.sin(th), r * np.cos(th)], axis=1)[:, :, None]

    chart = Chart(dim=1, ambient_dim=1, domain=((0.0, 2.0 * math.pi),),
                  periodic=(True,), gamma=gamma, jacobian=jac, label="circle")
    return ChartedSubmanifold(ambient_dim=1, charts=(chart,),
                              declared_class="lagrangian", label=f"circle(r={r})")


def torus_product(radii: Sequence[float], ambient_dim: Optional[int] = None) -> ChartedSubmanifold:
    """Product of d circles, z_j = r_j e^{i t_j}, in C^N (N >= d); isotropic."""
    radii = [float(r) for r in radii]
    d = len(radii)
    N = d if ambient_dim is None else int(ambient_dim)
    if N < d:
        raise ValueError("ambient_dim must be at least the number of circles")

    def gamma(t):
        out = np.zeros((t.shape[0], 2 * N))
        for j, r in enumerate(radii):
            out[:, 2 * j] = r * np.cos(t[:, j])
            out[:, 2 * j + 1] = r * np.sin(t[:, j])
        return out

    def jac(t):
        out = np.zeros((t.shape[0], 2 * N, d))
        for j, r in enumerate(radii):
            out[:, 2 * j, j] = -r * np.sin(t[:, j])
            out[:, 2 * j + 1, j] = r * np.cos(t[:, j])
        return out

    chart = Chart(dim=d, ambient_dim=N,
                  domain=tuple((0.0, 2.0 * math.pi) for _ in range(d)),
                  periodic=tuple(True for _ in range(d)),
                  gamma=gamma, jacobian=jac, label="torus")
    tag = "lagrangian" if d == N else "isotropic"
    return ChartedSubmanifold(ambient_dim=N, charts=(chart,),
                              declared_class=tag, label=f"torus(radii={radii})")


def parabola_patch(x1_range=(-1.0, 1.0), y1_range=(-1.0, 1.0)) -> ChartedSubmanifold:
    """Surface (z1, z2) = (x1 + i y1, x1^2/2) in C^2; symplectic."""

    def gamma(t):
        x1, y1 = t[:, 0], t[:, 1]
        return np.stack([x1, y1, 0.5 * x1 ** 2, np.zeros_like(x1)], axis=1)

    def jac(t):
        x1 = t[:, 0]
        m = t.shape[0]
        out = np.zeros((m, 4, 2))
        out[:, 0, 0] = 1.0
        out[:, 2, 0] = x1
        out[:, 1, 1] = 1.0
        return out

    chart = Chart(dim=2, ambient_dim=2,
                  domain=(tuple(map(float, x1_range)), tuple(map(float, y1_range))),
                  periodic=(False, False), gamma=gamma, jacobian=jac,
                  label="parabola")
    return ChartedSubmanifold(ambient_dim=2, charts=(chart,),
                              declared_class="symplectic", label="parabola_patch")


def plane_patch(ranges: Sequence[Sequence[float]]) -> ChartedSubmanifold:
    """Box patch of C^N itself, d = 2N; coisotropic with all lambdas 1."""
    ranges = [tuple(map(float, r)) for r in ranges]
    if len(ranges) % 2 != 0:
        raise ValueError("plane_patch needs 2N ranges (x1, y1, x2, y2, ...)")
    N = len(ranges) // 2
    d = 2 * N

    def gamma(t):
        return np.array(t, dtype=float, copy=True)

    def jac(t):
        return np.broadcast_to(np.eye(d), (t.shape[0], d, d)).copy()

    chart = Chart(dim=d, ambient_dim=N, domain=tuple(ranges),
                  periodic=tuple(False for _ in range(d)),
                  gamma=gamma, jacobian=jac, label="plane")
    return ChartedSubmanifold(ambient_dim=N, charts=(chart,),
                              declared_class="coisotropic", label="plane_patch")


def sphere3(radius: float = 1.0) -> ChartedSubmanifold:
    """Sphere |z| = r in C^2 (d = 3); coisotropic hypersurface.

    Chart (s, a, b) -> (r sqrt(1-s) e^{ia}, r sqrt(s) e^{ib}) with s in (0, 1)
    and periodic angles.  In this parametrization sqrt(det G) = r^3/2 exactly
    and basis-monomial integrands are polynomials in s, so Gauss-Legendre on
    the s axis is exact at modest order.  The endpoints are degenerate but
    interior quadrature nodes never touch them.
    """
    r = float(radius)

    def gamma(t):
        s, a, b = t[:, 0], t[:, 1], t[:, 2]
        c1 = r * np.sqrt(1.0 - s)
        c2 = r * np.sqrt(s)
        return np.stack([c1 * np.cos(a), c1 * np.sin(a),
                         c2 * np.cos(b), c2 * np.sin(b)], axis=1)

    def jac(t):
        s, a, b = t[:, 0], t[:, 1], t[:, 2]
        m = t.shape[0]
        c1 = r * np.sqrt(1.0 - s)
        c2 = r * np.sqrt(s)
        out = np.zeros((m, 4, 3))
        out[:, 0, 0] = -0.5 * r * np.cos(a) / np.sqrt(1.0 - s)
        out[:, 1, 0] = -0.5 * r * np.sin(a) / np.sqrt(1.0 - s)
        out[:, 2, 0] = 0.5 * r * np.cos(b) / np.sqrt(s)
        out[:, 3, 0] = 0.5 * r * np.sin(b) / np.sqrt(s)
        out[:, 0, 1] = -c1 * np.sin(a)
        out[:, 1, 1] = c1 * np.cos(a)
        out[:, 2, 2] = -c2 * np.sin(b)
        out[:, 3, 2] = c2 * np.cos(b)
        return out

    chart = Chart(dim=3, ambient_dim=2,
                  domain=((0.0, 1.0), (0.0, 2.0 * math.pi),
                          (0.0, 2.0 * math.pi)),
                  periodic=(False, True, True), gamma=gamma, jacobian=jac,
                  label="sphere3")
    return ChartedSubmanifold(ambient_dim=2, charts=(chart,),
                              declared_class="coisotropic", label=f"sphere3(r={r})")


def custom_chart(dim: int, ambient_dim: int, coords: Sequence[str],
                 periodic: Sequence[bool], domain: Sequence[Sequence[float]],
                 label: str = "custom") -> ChartedSubmanifold:
    """Single chart from 2N coordinate expressions in t1..td."""
    if len(coords) != 2 * ambient_dim:
        raise ValueError("need 2N coordinate expressions (x1, y1, ...)")
    exprs = [dsl.parse(s, dim) for s in coords]
    derivs = [[dsl.derive(e, j) for j in range(dim)] for e in exprs]

    def gamma(t):
        m = t.shape[0]
        out = np.empty((m, 2 * ambient_dim))
        for i in range(m):
            for c, e in enumerate(exprs):
                out[i, c] = dsl.evaluate(e, t[i])
        return out

    def jac(t):
        m = t.shape[0]
        out = np.empty((m, 2 * ambient_dim, dim))
        for i in range(m):
            for c in range(2 * ambient_dim):
                for j in range(dim):
                    out[i, c, j] = dsl.evaluate(derivs[c][j], t[i])
        return out

    chart = Chart(dim=dim, ambient_dim=ambient_dim,
                  domain=tuple(tuple(map(float, r)) for r in domain),
                  periodic=tuple(bool(p) for p in periodic),
                  gamma=gamma, jacobian=jac, label=label)
    return ChartedSubmanifold(ambient_dim=ambient_dim, charts=(chart,), label=label)


def manifold_from_spec(spec: dict) -> ChartedSubmanifold:
    """Build a catalog manifold from its JSON description."""
    kind = spec.get("kind")
    if kind == "circle":
        return circle(spec.get("radius", 1.0))
    if kind == "torus_product":
        return torus_product(spec["radii"], spec.get("ambient_dim"))
    if kind == "parabola_patch":
        return parabola_patch(spec.get("x1_range", (-1.0, 1.0)),
                              spec.get("y1_range", (-1.0, 1.0)))
    if kind == "plane_patch":
        return plane_patch(spec["ranges"])
    if kind == "sphere3":
        return sphere3(spec.get("radius", 1.0))
    if kind == "custom":
        return custom_chart(spec["dim"], spec["ambient_dim"], spec["coords"],
                            spec["periodic"], spec["domain"],
                            spec.get("label", "custom"))
    raise ValueError(f"unknown manifold kind {kind!r}")


def amplitude_from_dsl(text: str, dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized amplitude t -> a(t) from a DSL expression in t1..td."""
    expr = dsl.parse(text, dim)

    def func(t: np.ndarray) -> np.ndarray:
        t = np.atleast_2d(np.asarray(t, float))
        return np.array([dsl.evaluate(expr, row) for row in t])

    return func
