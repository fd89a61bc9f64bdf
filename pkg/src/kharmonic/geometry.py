"""Embedded constant-curvature targets and covariant calculus along curves.

Targets are the unit sphere S^n (curvature +1), Euclidean space (0), and the
upper hyperboloid sheet in Minkowski space (-1).  All covariant operations
reduce to tangent projection of parameter derivatives, so the same code runs
against any object with the small target interface used here (the product
module supplies a block-diagonal implementation).

Curves are uniform grids of ambient points over a periodic or interval
parameter domain.  Interval domains carry per-node validity masks that shrink
by (order/2) nodes per derivative degree at each end; no one-sided stencils
are used.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics as nx
from .errors import (
    ConstraintViolationError,
    DomainError,
    EmptyWindowError,
    PreconditionError,
    UnsupportedOrderError,
)

CONSTRUCTION_TOL = 1e-12   # embedding constraint at construction
OPERATION_TOL = 1e-9       # embedding constraint on operation inputs
TANGENCY_TOL = 1e-10

MAX_DERIVATIVE = 8


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TargetSpace:
    """Constant-curvature model space, embedded.

    curvature: one of -1, 0, +1.
    dim: intrinsic dimension n >= 1.

    K=+1 is S^n in R^{n+1} with <x,x>=1; K=-1 is the upper hyperboloid sheet
    in Minkowski R^{n,1} (last coordinate timelike) with <x,x>=-1; K=0 is
    R^n itself.  All inner products below use the induced ambient metric.
    """

    curvature: int
    dim: int

    def __post_init__(self):
        if self.curvature not in (-1, 0, 1):
            raise ValueError("curvature must be -1, 0 or +1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    @property
    def ambient_dim(self) -> int:
        return self.dim if self.curvature == 0 else self.dim + 1

    @property
    def metric_signs(self) -> np.ndarray:
        s = np.ones(self.ambient_dim)
        if self.curvature == -1:
            s[-1] = -1.0
        return s

    def inner(self, u, v):
        """Pointwise ambient inner product along the last axis."""
        if self.curvature == -1:
            return np.sum(u * v, axis=-1) - 2.0 * u[..., -1] * v[..., -1]
        return np.sum(u * v, axis=-1)

    def constraint_violation(self, x):
        """|<x,x> - c| per point (c = K for K=+-1); zero for flat."""
        if self.curvature == 0:
            return np.zeros(x.shape[:-1])
        return np.abs(self.inner(x, x) - self.curvature)

    def check_points(self, x, tol, what="point"):
        v = nx.to_float(self.constraint_violation(x))
        worst = float(np.max(v)) if np.size(v) else 0.0
        if worst > tol:
            raise ConstraintViolationError(
                f"{what} violates the embedding constraint by {worst:.3e} "
                f"(tolerance {tol:.1e})")
        if self.curvature == -1:
            last = nx.to_float(np.asarray(x)[..., -1])
            if np.any(last <= 0):
                raise ConstraintViolationError(
                    "hyperboloid points must have positive last coordinate")

    def project(self, x, w):
        """Tangent projection at x: w - K <w,x> x (identity for K=0)."""
        if self.curvature == 0:
            return w
        return w - self.curvature * self.inner(w, x)[..., None] * x

    def curvature_field(self, gp, v):
        """R(V, g')g' = K(<g',g'> V - <V,g'> g') pointwise."""
        if self.curvature == 0:
            return np.zeros_like(v)
        return self.curvature * (self.inner(gp, gp)[..., None] * v
                                 - self.inner(v, gp)[..., None] * gp)

    def retract(self, x):
        """Renormalize points back onto the embedded target."""
        if self.curvature == 0:
            return x
        q = self.inner(x, x)
        if self.curvature == 1:
            return x / nx.elem_sqrt(q)[..., None]
        return x / nx.elem_sqrt(-q)[..., None]

    def exp(self, x, v):
        """Geodesic exponential; exact closed form per curvature sign."""
        if self.curvature == 0:
            return x + v
        q = np.asarray(self.inner(v, v))
        q = np.where(nx.to_float(q) > 0, q, 0 * q)
        nrm = nx.elem_sqrt(q)
        safe = np.where(nx.to_float(nrm) > 0, nrm, 1 + 0 * nrm)
        if self.curvature == 1:
            out = nx.elem_cos(nrm)[..., None] * x \
                + (nx.elem_sin(nrm) / safe)[..., None] * v
        else:
            out = nx.elem_cosh(nrm)[..., None] * x \
                + (nx.elem_sinh(nrm) / safe)[..., None] * v
        return out


def sphere(dim: int = 2) -> TargetSpace:
    return TargetSpace(curvature=1, dim=dim)


def euclidean(dim: int) -> TargetSpace:
    return TargetSpace(curvature=0, dim=dim)


def hyperbolic(dim: int = 2) -> TargetSpace:
    return TargetSpace(curvature=-1, dim=dim)


# ---------------------------------------------------------------------------
# Domains and curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodicDomain:
    period: object  # float (or mpfr for high-precision grids)

    def __post_init__(self):
        if nx.to_float(self.period) <= 0:
            raise ValueError("period must be positive")

    def grid(self, n: int):
        h = self.period / n
        idx = np.arange(n)
        if nx.is_hp(self.period):
            return np.array([h * int(i) for i in idx], dtype=object)
        return idx * h

    def step(self, n: int):
        return self.period / n

    @property
    def periodic(self) -> bool:
        return True


@dataclass(frozen=True)
class IntervalDomain:
    a: object
    b: object

    def __post_init__(self):
        if not nx.to_float(self.a) < nx.to_float(self.b):
            raise ValueError("interval requires a < b")

    def grid(self, n: int):
        h = (self.b - self.a) / (n - 1)
        idx = np.arange(n)
        if nx.is_hp(self.a) or nx.is_hp(self.b):
            return np.array([self.a + h * int(i) for i in idx], dtype=object)
        return self.a + idx * h

    def step(self, n: int):
        return (self.b - self.a) / (n - 1)

    @property
    def periodic(self) -> bool:
        return False


MIN_GRID = 16


@dataclass
class SampledCurve:
    """A map from a circle or interval into an embedded target, on a grid.

    samples has shape (N, ambient_dim).  `source`, when present, is any
    object with a ``derivative_values(ts, j)`` method supplying closed-form
    parameter derivatives on the grid; operations use it instead of finite
    differences unless explicitly asked not to.
    """

    target: TargetSpace
    domain: object
    samples: np.ndarray
    valid: Optional[np.ndarray] = None
    source: Optional[object] = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples)
        n = self.samples.shape[0]
        if n < MIN_GRID:
            raise ValueError(f"grid size must be >= {MIN_GRID}, got {n}")
        if self.samples.ndim != 2 or self.samples.shape[1] != self.target.ambient_dim:
            raise ValueError("samples must have shape (N, ambient_dim)")
        if self.valid is None:
            self.valid = np.ones(n, dtype=bool)
        self.target.check_points(self.samples[self.valid], CONSTRUCTION_TOL,
                                 what="curve sample")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def step(self):
        return self.domain.step(self.n_samples)

    @property
    def ts(self) -> np.ndarray:
        return self.domain.grid(self.n_samples)

    @property
    def periodic(self) -> bool:
        return self.domain.periodic

    def with_samples(self, samples, source=None) -> "SampledCurve":
        return SampledCurve(self.target, self.domain, samples,
                            valid=self.valid.copy(), source=source)

    def to_float(self) -> "SampledCurve":
        """float64 copy (drops high-precision payload, keeps the source)."""
        dom = self.domain
        if isinstance(dom, PeriodicDomain) and nx.is_hp(dom.period):
            dom = PeriodicDomain(float(dom.period))
        elif isinstance(dom, IntervalDomain) and (nx.is_hp(dom.a) or nx.is_hp(dom.b)):
            dom = IntervalDomain(float(dom.a), float(dom.b))
        return SampledCurve(self.target, dom, nx.to_float(self.samples),
                            valid=self.valid.copy(), source=self.source)


@dataclass
class TangentField:
    """Vector field along a curve, pointwise tangent to the target."""

    base: SampledCurve
    vectors: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors)
        if self.vectors.shape != self.base.samples.shape:
            raise ValueError("vectors must match the base curve's samples")
        if self.valid is None:
            self.valid = self.base.valid.copy()
        worst = self.max_tangency_violation()
        if worst > TANGENCY_TOL:
            raise ConstraintViolationError(
                f"field is not tangent: worst <v,x> = {worst:.3e}")

    def max_tangency_violation(self) -> float:
        """Worst |<v,x>| over valid nodes, relative to max(1, |v|) there.

        The relative scaling matters: projection leaves <v,x> residue of
        order |v| times the sample's own constraint defect, so large iterated
        fields cannot meet an absolute bound in double precision.
        """
        if self.base.target.curvature == 0 or not self.valid.any():
            return 0.0
        t = self.base.target
        ip = np.abs(nx.to_float(t.inner(self.vectors, self.base.samples)))
        mag = np.sqrt(np.abs(nx.to_float(t.inner(self.vectors, self.vectors))))
        rel = ip / np.maximum(1.0, mag)
        return float(np.max(rel[self.valid]))

    def sup_norm(self) -> float:
        t = self.base.target
        n2 = nx.to_float(t.inner(self.vectors, self.vectors))
        if not self.valid.any():
            return 0.0
        return float(np.sqrt(np.max(n2[self.valid])))


@dataclass(frozen=True)
class DifferentiationScheme:
    """Central finite differences of even accuracy order.

    boundary_policy: 'auto' resolves to periodic wrap on circle domains and
    interior-only evaluation on intervals.  Requesting 'wrap' on an interval
    (or vice versa) is an error.
    """

    order: int = 8
    boundary_policy: str = "auto"

    def __post_init__(self):
        if self.order not in nx.SUPPORTED_ORDERS:
            raise ValueError(f"order must be one of {nx.SUPPORTED_ORDERS}")
        if self.boundary_policy not in ("auto", "wrap", "interior-only"):
            raise ValueError("unknown boundary policy")

    def resolve(self, domain) -> str:
        if self.boundary_policy == "auto":
            return "wrap" if domain.periodic else "interior-only"
        if self.boundary_policy == "wrap" and not domain.periodic:
            raise DomainError("wrap boundary requires a periodic domain")
        if self.boundary_policy == "interior-only" and domain.periodic:
            raise DomainError("interior-only boundary requires an interval")
        return self.boundary_policy

    def margin(self, j: int) -> int:
        """Nodes dropped per end on intervals: (order/2) per derivative degree."""
        return (self.order // 2) * j


@dataclass
class AmbientField:
    """Grid of ambient vectors (not necessarily tangent) with validity."""

    values: np.ndarray
    valid: np.ndarray


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def project_tangent(x, w, target: TargetSpace):
    """Project ambient vector(s) w onto the tangent space at point(s) x."""
    target.check_points(x, OPERATION_TOL)
    return target.project(x, w)


def _fd_derivative_values(curve: SampledCurve, j: int, scheme: DifferentiationScheme):
    policy = scheme.resolve(curve.domain)
    h = curve.step
    if policy == "wrap":
        vals = nx.apply_stencil_periodic(curve.samples, j, scheme.order, h)
        valid = curve.valid.copy()
    else:
        vals = nx.apply_stencil_interval(curve.samples, j, scheme.order, h)
        valid = nx.erode_mask(curve.valid, scheme.margin(j))
    return vals, valid


def derivative(curve: SampledCurve, j: int, scheme: DifferentiationScheme,
               method: str = "auto") -> AmbientField:
    """j-th parameter derivative of the curve at each grid node.

    method='auto' uses the curve's closed-form source when attached; 'fd'
    forces finite differences (e.g. for convergence studies).
    """
    if j < 1:
        raise ValueError("derivative degree must be >= 1")
    if j > MAX_DERIVATIVE:
        raise UnsupportedOrderError(
            f"derivatives above order {MAX_DERIVATIVE} are not supported")
    if method not in ("auto", "fd", "exact"):
        raise ValueError("method must be 'auto', 'fd' or 'exact'")
    use_exact = (method == "exact") or (method == "auto" and curve.source is not None)
    if method == "exact" and curve.source is None:
        raise PreconditionError("curve has no closed-form source")
    if use_exact:
        vals = np.asarray(curve.source.derivative_values(curve.ts, j))
        return AmbientField(vals, curve.valid.copy())
    if curve.n_samples < scheme.order + j + 1:
        raise PreconditionError(
            f"grid too small for the stencil: need N >= {scheme.order + j + 1}")
    vals, valid = _fd_derivative_values(curve, j, scheme)
    if not valid.any():
        raise EmptyWindowError("no valid nodes remain after differentiation")
    return AmbientField(vals, valid)


def _project_field(curve: SampledCurve, values, valid) -> TangentField:
    proj = curve.target.project(curve.samples, values)
    return TangentField(curve, proj, valid=valid)


def covariant_derivative(v: TangentField, scheme: DifferentiationScheme) -> TangentField:
    """Pullback-connection derivative: tangent projection of dV/dt."""
    curve = v.base
    policy = scheme.resolve(curve.domain)
    h = curve.step
    if policy == "wrap":
        dv = nx.apply_stencil_periodic(v.vectors, 1, scheme.order, h)
        valid = v.valid.copy()
    else:
        dv = nx.apply_stencil_interval(v.vectors, 1, scheme.order, h)
        valid = nx.erode_mask(v.valid, scheme.margin(1))
    if not valid.any():
        raise EmptyWindowError("validity window emptied by differentiation")
    return _project_field(curve, dv, valid)


def tension(curve: SampledCurve, scheme: DifferentiationScheme,
            method: str = "auto") -> TangentField:
    """Tension field: tangent projection of the second parameter derivative."""
    d2 = derivative(curve, 2, scheme, method=method)
    if not d2.valid.any():
        raise EmptyWindowError("validity window emptied by differentiation")
    return _project_field(curve, d2.values, d2.valid)


def rough_laplacian_iter(v: TangentField, j: int,
                         scheme: DifferentiationScheme) -> TangentField:
    """Apply the rough Laplacian V -> -cov(cov(V)) j times (flat domain)."""
    if j < 0:
        raise ValueError("iteration count must be >= 0")
    if j > 3:
        raise UnsupportedOrderError("rough Laplacian iterations above 3 unused")
    out = v
    for _ in range(j):
        dd = covariant_derivative(covariant_derivative(out, scheme), scheme)
        out = TangentField(out.base, -dd.vectors, valid=dd.valid)
    return out


def curvature_operator(v: TangentField, scheme: DifferentiationScheme,
                       method: str = "auto") -> TangentField:
    """Sectional-curvature term R(V, g')g' along the curve."""
    curve = v.base
    gp = derivative(curve, 1, scheme, method=method)
    vals = curve.target.curvature_field(gp.values, v.vectors)
    # the FD gamma' is tangent only to O(h^order); re-project
    vals = curve.target.project(curve.samples, vals)
    valid = v.valid & gp.valid
    return TangentField(curve, vals, valid=valid)


def exp_map(x, v, target: TargetSpace):
    """Geodesic exponential of tangent vector(s) v at point(s) x."""
    x = np.asarray(x)
    v = np.asarray(v)
    target.check_points(x, OPERATION_TOL)
    return target.exp(x, v)
