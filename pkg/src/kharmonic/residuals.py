"""k-harmonicity residuals in three independent formulations.

For a unit-speed curve on the round sphere the Euler-Lagrange operator of the
k-energy can be evaluated three ways:

* intrinsic: iterate the covariant derivative along the curve and assemble
  the order-2k condition directly;
* ambient: the expanded ODE in plain parameter derivatives, with
  inner-product tables g_ij = <gamma^(i), gamma^(j)> as coefficients;
* Frenet (2-sphere only): scalar ODEs in the signed geodesic curvature.

The three routes share no code beyond differentiation, which makes node-wise
agreement between them a strong correctness check; `verify_curve` runs the
applicable set and reports the cross-formulation discrepancy.

Coefficient provenance: the ambient and Frenet polynomial tables below were
re-derived symbolically from the covariant iteration and are validated by the
cross-formulation tests.  Two published variants of these equations circulate
with typos (a gamma' coefficient of -13 g23 instead of -15 g23 in the
order-8 ODE, and several garbled kappa terms in the curvature ODEs); the
derived forms are used throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics as nx
from .errors import DomainError, PreconditionError
from .geometry import (
    DifferentiationScheme,
    SampledCurve,
    TangentField,
    covariant_derivative,
    derivative,
    rough_laplacian_iter,
    tension,
)
from .parametric import ParametricCurve, TrigPoly

UNIT_SPEED_TOL = 1e-6

FORMULATIONS = ("intrinsic", "ambient3", "ambient4", "frenet3", "frenet4")


# ---------------------------------------------------------------------------
# Exact covariant algebra on trigonometric polynomials (sphere targets)
# ---------------------------------------------------------------------------

def _tp_project(gamma: TrigPoly, w: TrigPoly) -> TrigPoly:
    """Tangent projection W - <W, gamma> gamma on the unit sphere."""
    ip = w.dot(gamma)
    return w - gamma.mul_scalar_poly(ip)


def _tp_covariant(gamma: TrigPoly, w: TrigPoly) -> TrigPoly:
    return _tp_project(gamma, w.diff())


def _tp_laplacian(gamma: TrigPoly, w: TrigPoly) -> TrigPoly:
    return _tp_covariant(gamma, _tp_covariant(gamma, w)).scale(-1)


def _tp_tension(gamma: TrigPoly) -> TrigPoly:
    return _tp_project(gamma, gamma.diff().diff())


def _curve_poly(curve: SampledCurve) -> Optional[TrigPoly]:
    if isinstance(curve.source, ParametricCurve) and curve.target.curvature == 1:
        return TrigPoly.from_curve(curve.source)
    return None


def _wants_exact(curve: SampledCurve, method: str) -> bool:
    if method == "fd":
        return False
    if method == "exact":
        if curve.source is None:
            raise PreconditionError("curve has no closed-form source")
        return True
    return curve.source is not None


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class ResidualReport:
    """Per-node residual of one formulation.

    `vectors` holds ambient residual vectors; Frenet formulations store
    (tangent, normal) scalar pairs instead.  `sign_to_tau_k` converts the raw
    residual to the Euler-Lagrange field: tau_k = sign_to_tau_k * residual.
    """

    formulation: str
    k: int
    valid: np.ndarray
    sup_norm: float
    l2_norm: float
    sign_to_tau_k: int
    vectors: Optional[np.ndarray] = None
    scalars: Optional[np.ndarray] = None
    valid_node_range: Optional[tuple] = None

    @property
    def node_norms(self) -> np.ndarray:
        if self.vectors is not None:
            return np.sqrt(np.sum(nx.to_float(self.vectors) ** 2, axis=1))
        s = nx.to_float(self.scalars)
        return np.sqrt(s[:, 0] ** 2 + s[:, 1] ** 2)


def _window(valid: np.ndarray) -> tuple:
    idx = np.nonzero(valid)[0]
    return (int(idx[0]), int(idx[-1]))


def _make_report(formulation: str, k: int, curve: SampledCurve, valid,
                 vectors=None, scalars=None, sign: int = 1) -> ResidualReport:
    if vectors is not None:
        norms = np.sqrt(np.sum(nx.to_float(vectors) ** 2, axis=1))
    else:
        s = nx.to_float(scalars)
        norms = np.sqrt(s[:, 0] ** 2 + s[:, 1] ** 2)
    h = float(nx.to_float(curve.step))
    masked = norms[valid]
    sup = float(np.max(masked)) if masked.size else 0.0
    l2 = float(math.sqrt(h * float(np.sum(masked ** 2))))
    return ResidualReport(formulation=formulation, k=k, valid=valid,
                          sup_norm=sup, l2_norm=l2, sign_to_tau_k=sign,
                          vectors=vectors, scalars=scalars,
                          valid_node_range=_window(valid))


# ---------------------------------------------------------------------------
# Preconditions
# ---------------------------------------------------------------------------

def speed_values(curve: SampledCurve, scheme: DifferentiationScheme,
                 method: str = "auto"):
    d1 = derivative(curve, 1, scheme, method=method)
    sp = nx.elem_sqrt(curve.target.inner(d1.values, d1.values))
    return sp, d1


def require_unit_speed(curve: SampledCurve, scheme: DifferentiationScheme,
                       method: str = "auto", tol: float = UNIT_SPEED_TOL):
    sp, d1 = speed_values(curve, scheme, method)
    dev = np.abs(nx.to_float(sp) - 1.0)
    dev_masked = np.where(d1.valid, dev, 0.0)
    worst = int(np.argmax(dev_masked))
    if dev_masked[worst] > tol:
        raise PreconditionError(
            f"curve is not unit speed: | |gamma'| - 1 | = {dev_masked[worst]:.3e} "
            f"at node {worst} (tolerance {tol:.1e})")
    return d1


def _require_round_sphere(curve: SampledCurve, what: str):
    if curve.target.curvature != 1:
        raise PreconditionError(f"{what} requires a curve into the unit sphere")


# ---------------------------------------------------------------------------
# Euler-Lagrange field tau_k
# ---------------------------------------------------------------------------

def tau_k(curve: SampledCurve, k: int, scheme: DifferentiationScheme,
          method: str = "auto") -> TangentField:
    """Euler-Lagrange field of the k-energy along the curve.

    k=1 is the tension field itself; for k >= 2 the field is
    lap(lap^{k-2} tau) - R(lap^{k-2} tau) with the rough Laplacian `lap`
    and the curve's curvature operator R.
    """
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be in {1, 2, 3, 4}")
    if _wants_exact(curve, method):
        gamma_tp = _curve_poly(curve)
        if gamma_tp is not None:
            return _tau_k_exact_sphere(curve, gamma_tp, k)
        if curve.target.curvature == 0:
            return _tau_k_exact_flat(curve, k)
        # exact route unavailable for this source/target combination
        if method == "exact":
            raise PreconditionError(
                "no exact Euler-Lagrange route for this curve")
    tau = tension(curve, scheme, method="fd")
    if k == 1:
        return tau
    a = rough_laplacian_iter(tau, k - 2, scheme)
    lap_a = rough_laplacian_iter(a, 1, scheme)
    d1 = derivative(curve, 1, scheme, method="fd")
    r_a = curve.target.curvature_field(d1.values, a.vectors)
    valid = lap_a.valid & a.valid & d1.valid
    # the FD gamma' is tangent only to O(h^order); re-project the assembly
    vectors = curve.target.project(curve.samples, lap_a.vectors - r_a)
    return TangentField(curve, vectors, valid=valid)


def _tau_k_exact_sphere(curve: SampledCurve, gamma: TrigPoly, k: int) -> TangentField:
    tau = _tp_tension(gamma)
    if k == 1:
        out = tau
    else:
        a = tau
        for _ in range(k - 2):
            a = _tp_laplacian(gamma, a)
        lap_a = _tp_laplacian(gamma, a)
        gp = gamma.diff()
        sq = gp.dot(gp)
        r_a = a.mul_scalar_poly(sq) - gp.mul_scalar_poly(a.dot(gp))
        out = lap_a - r_a
    vals = out.eval(curve.ts)
    vals = curve.target.project(curve.samples, vals)  # shave roundoff
    return TangentField(curve, vals, valid=curve.valid.copy())


def _tau_k_exact_flat(curve: SampledCurve, k: int) -> TangentField:
    vals = np.asarray(curve.source.derivative_values(curve.ts, 2 * k))
    if k % 2 == 0:
        vals = -vals
    return TangentField(curve, vals, valid=curve.valid.copy())


# ---------------------------------------------------------------------------
# Intrinsic formulation
# ---------------------------------------------------------------------------

def intrinsic_curve_residual(curve: SampledCurve, k: int,
                             scheme: DifferentiationScheme,
                             method: str = "auto") -> ResidualReport:
    """Iterated-covariant-derivative form of the k-harmonic condition.

    The raw residual equals (-1)^(k-1) tau_k; the report records that sign.
    """
    if k not in (2, 3, 4):
        raise ValueError("intrinsic residual defined for k in {2, 3, 4}")
    _require_round_sphere(curve, "the intrinsic residual")
    if _wants_exact(curve, method):
        gamma = _curve_poly(curve)
        if gamma is None:
            raise PreconditionError("no exact route for this curve")
        _check_exact_unit_speed(curve, gamma)
        w = _tp_tension(gamma)
        a = w
        for _ in range(2 * (k - 2)):
            a = _tp_covariant(gamma, a)
        b = a
        for _ in range(2):
            b = _tp_covariant(gamma, b)
        gp = gamma.diff()
        res_tp = b + a - gp.mul_scalar_poly(a.dot(gp))
        vectors = res_tp.eval(curve.ts)
        valid = curve.valid.copy()
    else:
        d1 = require_unit_speed(curve, scheme, method="fd")
        w = tension(curve, scheme, method="fd")
        a = w
        for _ in range(2 * (k - 2)):
            a = covariant_derivative(a, scheme)
        b = covariant_derivative(covariant_derivative(a, scheme), scheme)
        ip = curve.target.inner(a.vectors, d1.values)
        vectors = b.vectors + a.vectors - ip[:, None] * d1.values
        valid = b.valid & a.valid & d1.valid
    return _make_report("intrinsic", k, curve, valid, vectors=vectors,
                        sign=(-1) ** (k - 1))


def _check_exact_unit_speed(curve: SampledCurve, gamma: TrigPoly):
    gp = gamma.diff()
    sq = nx.to_float(gp.dot(gp).eval(curve.ts)[:, 0])
    worst = int(np.argmax(np.abs(sq - 1.0)))
    if abs(sq[worst] - 1.0) > UNIT_SPEED_TOL:
        raise PreconditionError(
            f"curve is not unit speed: | |gamma'|^2 - 1 | = "
            f"{abs(sq[worst]-1.0):.3e} at node {worst}")


# ---------------------------------------------------------------------------
# Ambient formulations (Gram-coefficient ODEs)
# ---------------------------------------------------------------------------

@dataclass
class GramTable:
    """Pairwise ambient inner products g_ij = <gamma^(i), gamma^(j)>."""

    entries: dict
    valid: np.ndarray

    def g(self, i: int, j: int) -> np.ndarray:
        return self.entries[(min(i, j), max(i, j))]


def gram_table(curve: SampledCurve, pairs, scheme: DifferentiationScheme,
               method: str = "auto") -> GramTable:
    orders = sorted({o for p in pairs for o in p})
    derivs = {}
    valid = curve.valid.copy()
    for j in orders:
        d = derivative(curve, j, scheme, method=method)
        derivs[j] = d.values
        valid &= d.valid
    entries = {}
    for (i, j) in pairs:
        key = (min(i, j), max(i, j))
        entries[key] = np.sum(derivs[i] * derivs[j], axis=1)
    return GramTable(entries, valid)


_AMBIENT3_PAIRS = ((2, 2), (2, 3), (2, 4), (3, 3))
_AMBIENT4_PAIRS = _AMBIENT3_PAIRS + ((3, 4), (2, 5), (1, 6), (4, 4), (3, 5),
                                     (2, 6), (1, 7))


def ambient3_residual(curve: SampledCurve, scheme: DifferentiationScheme,
                      method: str = "auto") -> ResidualReport:
    """Order-6 ambient ODE residual for 3-harmonicity (unit-speed, sphere)."""
    _require_round_sphere(curve, "the ambient residual")
    exact = _wants_exact(curve, method)
    dmethod = "exact" if exact else "fd"
    if exact:
        gamma = _curve_poly(curve)
        if gamma is None:
            raise PreconditionError("no exact route for this curve")
        _check_exact_unit_speed(curve, gamma)
    else:
        require_unit_speed(curve, scheme, method="fd")
    gt = gram_table(curve, _AMBIENT3_PAIRS, scheme, method=dmethod)
    d = {j: derivative(curve, j, scheme, method=dmethod) for j in (1, 2, 4, 6)}
    g22, g23 = gt.g(2, 2), gt.g(2, 3)
    g24, g33 = gt.g(2, 4), gt.g(3, 3)
    vectors = (d[6].values + 2.0 * d[4].values
               + (2.0 - g22)[:, None] * d[2].values
               - (4.0 * g23)[:, None] * d[1].values
               + (2.0 - 3.0 * g22 - 9.0 * g24 - 8.0 * g33)[:, None] * curve.samples)
    valid = gt.valid & d[6].valid
    return _make_report("ambient3", 3, curve, valid, vectors=vectors, sign=1)


def ambient4_residual(curve: SampledCurve, scheme: DifferentiationScheme,
                      method: str = "auto") -> ResidualReport:
    """Order-8 ambient ODE residual for 4-harmonicity (unit-speed, sphere)."""
    _require_round_sphere(curve, "the ambient residual")
    exact = _wants_exact(curve, method)
    dmethod = "exact" if exact else "fd"
    if exact:
        gamma = _curve_poly(curve)
        if gamma is None:
            raise PreconditionError("no exact route for this curve")
        _check_exact_unit_speed(curve, gamma)
    else:
        require_unit_speed(curve, scheme, method="fd")
    gt = gram_table(curve, _AMBIENT4_PAIRS, scheme, method=dmethod)
    d = {j: derivative(curve, j, scheme, method=dmethod)
         for j in (1, 2, 3, 4, 6, 8)}
    g22, g23, g24, g33 = gt.g(2, 2), gt.g(2, 3), gt.g(2, 4), gt.g(3, 3)
    g34, g25, g16 = gt.g(3, 4), gt.g(2, 5), gt.g(1, 6)
    g44, g35, g26, g17 = gt.g(4, 4), gt.g(3, 5), gt.g(2, 6), gt.g(1, 7)
    # gamma' coefficient: the g23 weight is -15 (a -13 variant in circulation
    # fails the cross-check against the covariant iteration)
    c1 = 19.0 * g34 + 20.0 * g25 + 9.0 * g16 - 15.0 * g23
    c0 = (5.0 * g44 + 11.0 * g35 + 10.0 * g26 + 5.0 * g17
          - 40.0 * g33 - 43.0 * g24 + g22 * g22 - 5.0 * g22 + 2.0)
    vectors = (d[8].values + 2.0 * d[6].values
               + (2.0 - g22)[:, None] * d[4].values
               - (11.0 * g23)[:, None] * d[3].values
               + (-24.0 * g33 - 25.0 * g24 + 2.0 - 3.0 * g22)[:, None] * d[2].values
               + c1[:, None] * d[1].values
               + c0[:, None] * curve.samples)
    valid = gt.valid & d[8].valid
    return _make_report("ambient4", 4, curve, valid, vectors=vectors, sign=1)


# ---------------------------------------------------------------------------
# Frenet formulation (2-sphere)
# ---------------------------------------------------------------------------

@dataclass
class FrenetData:
    """Signed geodesic curvature and orthonormal frame along an S^2 curve."""

    base: SampledCurve
    kappa: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    valid: np.ndarray
    kappa_poly: Optional[TrigPoly] = None


def geodesic_curvature(curve: SampledCurve, scheme: DifferentiationScheme,
                       method: str = "auto") -> FrenetData:
    """Frenet data on S^2 with the orientation normal = gamma x tangent."""
    if curve.target.ambient_dim != 3 or curve.target.curvature != 1:
        raise PreconditionError("Frenet data requires a curve on S^2")
    if _wants_exact(curve, method):
        gamma = _curve_poly(curve)
        if gamma is None:
            raise PreconditionError("no exact route for this curve")
        _check_exact_unit_speed(curve, gamma)
        gp = gamma.diff()
        nrm = gamma.cross(gp)
        kp = _tp_tension(gamma).dot(nrm)
        t_vals = gp.eval(curve.ts)
        n_vals = nrm.eval(curve.ts)
        k_vals = kp.eval(curve.ts)[:, 0]
        return FrenetData(curve, k_vals, t_vals, n_vals, curve.valid.copy(),
                          kappa_poly=kp)
    d1 = require_unit_speed(curve, scheme, method="fd")
    tau = tension(curve, scheme, method="fd")
    t_vals = d1.values
    n_vals = np.cross(curve.samples, t_vals)
    k_vals = np.sum(tau.vectors * n_vals, axis=1)
    valid = d1.valid & tau.valid
    return FrenetData(curve, k_vals, t_vals, n_vals, valid)


def _kappa_derivatives(fd: FrenetData, scheme: DifferentiationScheme,
                       max_order: int):
    """kappa and its parameter derivatives 1..max_order on the grid."""
    curve = fd.base
    out = {0: fd.kappa}
    valid = fd.valid.copy()
    if fd.kappa_poly is not None:
        tp = fd.kappa_poly
        for j in range(1, max_order + 1):
            tp = tp.diff()
            out[j] = tp.eval(curve.ts)[:, 0]
        return out, valid
    h = curve.step
    policy = scheme.resolve(curve.domain)
    for j in range(1, max_order + 1):
        if policy == "wrap":
            out[j] = nx.apply_stencil_periodic(fd.kappa, j, scheme.order, h)
        else:
            out[j] = nx.apply_stencil_interval(fd.kappa, j, scheme.order, h)
    if policy != "wrap":
        valid = nx.erode_mask(fd.valid, scheme.margin(max_order))
    return out, valid


def frenet3_residual(fd: FrenetData, scheme: DifferentiationScheme) -> ResidualReport:
    """(tangent, normal) components of the 3-harmonic condition on S^2.

    The tangent component is the raw frame component, -5 times the normalized
    scalar law kappa kappa''' - 2 kappa^3 kappa' + 2 kappa' kappa''.
    """
    kd, valid = _kappa_derivatives(fd, scheme, 4)
    K, K1, K2, K3, K4 = (kd[j] for j in range(5))
    tangent = -5.0 * K * K3 + 10.0 * K ** 3 * K1 - 10.0 * K1 * K2
    normal = (K4 - 15.0 * K * K1 ** 2 - 10.0 * K ** 2 * K2 + K ** 5
              + K2 - K ** 3)
    scalars = np.stack([nx.to_float(tangent), nx.to_float(normal)], axis=1)
    return _make_report("frenet3", 3, fd.base, valid, scalars=scalars, sign=1)


def frenet4_residual(fd: FrenetData, scheme: DifferentiationScheme) -> ResidualReport:
    """(tangent, normal) components of the 4-harmonic condition on S^2."""
    kd, valid = _kappa_derivatives(fd, scheme, 6)
    K, K1, K2, K3, K4, K5, K6 = (kd[j] for j in range(7))
    tangent = (-7.0 * K * K5 - 21.0 * K1 * K4 - 35.0 * K2 * K3
               + 35.0 * K ** 3 * K3 + 210.0 * K ** 2 * K1 * K2
               - 21.0 * K ** 5 * K1 + 105.0 * K * K1 ** 3)
    normal = (K6 - 21.0 * K ** 2 * K4 - 105.0 * K * K1 * K3
              - 70.0 * K * K2 ** 2 - 105.0 * K1 ** 2 * K2
              + 35.0 * K ** 4 * K2 + 105.0 * K ** 3 * K1 ** 2 - K ** 7
              + K4 - 15.0 * K * K1 ** 2 - 10.0 * K ** 2 * K2 + K ** 5)
    scalars = np.stack([nx.to_float(tangent), nx.to_float(normal)], axis=1)
    return _make_report("frenet4", 4, fd.base, valid, scalars=scalars, sign=1)


# ---------------------------------------------------------------------------
# Scalar law for constant geodesic curvature, identities, conservation
# ---------------------------------------------------------------------------

def theorem10_scalar(kappa: float, k: int) -> float:
    """Euler-Lagrange scale of a constant-curvature circle on S^2.

    Returns (-1)^(k-2) kappa^(2(k-2)+1) (kappa^2 - 1); its magnitude equals
    the pointwise norm of tau_k on the circle of geodesic curvature kappa.
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    if k < 2:
        raise ValueError("k must be >= 2")
    return (-1.0) ** (k - 2) * kappa ** (2 * (k - 2) + 1) * (kappa ** 2 - 1.0)


@dataclass
class GramIdentityReport:
    """Per-node values of the arclength differentiation identities."""

    values: dict
    valid: np.ndarray
    max_violation: dict

    def worst(self) -> float:
        return max(self.max_violation.values())


def gram_identities_check(curve: SampledCurve, scheme: DifferentiationScheme,
                          method: str = "auto") -> GramIdentityReport:
    """Evaluate g12, g13+g22, g14+3 g23, g15+3 g33+4 g24 (all vanish on
    arclength curves).  Violations are reported, not raised."""
    dmethod = "exact" if _wants_exact(curve, method) else "fd"
    pairs = ((1, 2), (1, 3), (2, 2), (1, 4), (2, 3), (1, 5), (3, 3), (2, 4))
    gt = gram_table(curve, pairs, scheme, method=dmethod)
    vals = {
        "g12": gt.g(1, 2),
        "g13+g22": gt.g(1, 3) + gt.g(2, 2),
        "g14+3g23": gt.g(1, 4) + 3.0 * gt.g(2, 3),
        "g15+3g33+4g24": gt.g(1, 5) + 3.0 * gt.g(3, 3) + 4.0 * gt.g(2, 4),
    }
    vals = {k: nx.to_float(v) for k, v in vals.items()}
    mx = {k: float(np.max(np.abs(v[gt.valid]))) for k, v in vals.items()}
    return GramIdentityReport(vals, gt.valid, mx)


@dataclass
class ConservationReport:
    values: np.ndarray
    valid: np.ndarray
    sup_norm: float


def conservation_check(curve: SampledCurve, k: int,
                       scheme: DifferentiationScheme,
                       method: str = "auto") -> ConservationReport:
    """Divergence pairing <lap^{k-2} tau, gamma'> per node (k=1: <tau, gamma'>)."""
    if k not in (1, 2, 3, 4):
        raise ValueError("k must be in {1, 2, 3, 4}")
    exact = _wants_exact(curve, method)
    gamma = _curve_poly(curve) if exact else None
    if gamma is not None:
        tau = _tp_tension(gamma)
        a = tau
        for _ in range(max(k - 2, 0)):
            a = _tp_laplacian(gamma, a)
        vals = a.dot(gamma.diff()).eval(curve.ts)[:, 0]
        valid = curve.valid.copy()
    else:
        tau = tension(curve, scheme, method="fd")
        a = rough_laplacian_iter(tau, max(k - 2, 0), scheme)
        d1 = derivative(curve, 1, scheme, method="fd")
        vals = curve.target.inner(a.vectors, d1.values)
        valid = a.valid & d1.valid
    fl = np.abs(nx.to_float(vals))
    sup = float(np.max(fl[valid])) if valid.any() else 0.0
    return ConservationReport(vals, valid, sup)


# ---------------------------------------------------------------------------
# Verification driver
# ---------------------------------------------------------------------------

def applicable_formulations(curve: SampledCurve, k: int) -> list:
    out = ["intrinsic"]
    if k == 3:
        out.append("ambient3")
    if k == 4:
        out.append("ambient4")
    if curve.target.ambient_dim == 3 and curve.target.curvature == 1:
        if k == 3:
            out.append("frenet3")
        if k == 4:
            out.append("frenet4")
    return out


def pass_threshold(curve: SampledCurve, k: int, scheme: DifferentiationScheme,
                   method: str = "auto") -> float:
    """Residual acceptance level: max(1e-8, 10 h^order |gamma^(2k)|_sup).

    Exact-derivative verification has no h^p truncation; the floor applies.
    """
    if _wants_exact(curve, method):
        return 1e-8
    d = derivative(curve, min(2 * k, 8), scheme, method="fd")
    sup = float(np.max(np.sqrt(np.sum(nx.to_float(d.values) ** 2, axis=1))[d.valid]))
    h = float(nx.to_float(curve.step))
    return max(1e-8, 10.0 * h ** scheme.order * sup)


def _frame_components(report: ResidualReport, fd: FrenetData) -> np.ndarray:
    v = nx.to_float(report.vectors)
    t = np.sum(v * nx.to_float(fd.tangent), axis=1)
    n = np.sum(v * nx.to_float(fd.normal), axis=1)
    return np.stack([t, n], axis=1)


@dataclass
class VerificationResult:
    k: int
    reports: dict
    threshold: float
    passed: bool
    max_cross_discrepancy: float


def verify_curve(curve: SampledCurve, k: int, scheme: DifferentiationScheme,
                 formulations="auto", method: str = "auto",
                 threshold: Optional[float] = None) -> VerificationResult:
    """Run the requested residual formulations and cross-compare node-wise."""
    if formulations == "auto":
        formulations = applicable_formulations(curve, k)
    reports = {}
    fd_data = None
    for f in formulations:
        if f == "intrinsic":
            reports[f] = intrinsic_curve_residual(curve, k, scheme, method)
        elif f == "ambient3":
            if k != 3:
                raise PreconditionError("ambient3 applies to k=3 only")
            reports[f] = ambient3_residual(curve, scheme, method)
        elif f == "ambient4":
            if k != 4:
                raise PreconditionError("ambient4 applies to k=4 only")
            reports[f] = ambient4_residual(curve, scheme, method)
        elif f in ("frenet3", "frenet4"):
            if (f == "frenet3" and k != 3) or (f == "frenet4" and k != 4):
                raise PreconditionError(f"{f} does not apply to k={k}")
            fd_data = fd_data or geodesic_curvature(curve, scheme, method)
            rep = frenet3_residual(fd_data, scheme) if f == "frenet3" \
                else frenet4_residual(fd_data, scheme)
            reports[f] = rep
        else:
            raise ValueError(f"unknown formulation {f!r}")

    # node-wise cross-formulation discrepancy on the common window
    max_disc = 0.0
    vec_reports = {f: r for f, r in reports.items() if r.vectors is not None}
    names = list(vec_reports)
    common = curve.valid.copy()
    for r in reports.values():
        common &= r.valid
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = vec_reports[names[i]], vec_reports[names[j]]
            d = nx.to_float(a.vectors) - nx.to_float(b.vectors)
            max_disc = max(max_disc,
                           float(np.max(np.sqrt(np.sum(d * d, 1))[common])))
    for f, r in reports.items():
        if r.scalars is None or not vec_reports:
            continue
        ref = vec_reports[names[0]]
        comps = _frame_components(ref, fd_data)
        d = np.abs(comps - nx.to_float(r.scalars))
        max_disc = max(max_disc, float(np.max(d[common])))

    thr = pass_threshold(curve, k, scheme, method) if threshold is None else threshold
    passed = all(r.sup_norm <= thr for r in reports.values())
    return VerificationResult(k=k, reports=reports, threshold=thr,
                              passed=passed, max_cross_discrepancy=max_disc)
