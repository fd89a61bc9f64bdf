"""Discretized k-energies, projected gradient flow, and second variation.

The L^2 gradient of the k-energy is minus the Euler-Lagrange field tau_k, so
descent steps move along +tau_k followed by retraction to the target.  The
flow is an explicit scheme for an order-2k quasilinear operator: stable step
sizes scale like h^{2k}, which the defaults respect, and an energy-monotone
line search (step halving, bounded growth) guards the rest.

The second-variation quadratic form is the constant-curvature specialization
(curvature tensor R(X,Y)Z = K(<Y,Z>X - <X,Z>Y), no covariant-derivative-of-R
terms).  Its value at a critical curve matches central second differences of
the discrete energy along geodesic variations; that oracle is kept in the
test suite.  Hessians are assembled from the quadratic form by polarization
over per-node orthonormal tangent frames, which makes the matrix symmetric by
construction, and solved with a dense symmetric eigensolver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import numerics as nx
from .errors import (
    DomainError,
    FlowDivergedError,
    PreconditionError,
    SpectrumTooLargeError,
)
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
from .residuals import (
    _curve_poly,
    _tp_covariant,
    _tp_laplacian,
    _tp_tension,
    _wants_exact,
    pass_threshold,
    tau_k,
)

ENERGY_ORDERS = (1, 2, 3, 4)


# ---------------------------------------------------------------------------
# Energies
# ---------------------------------------------------------------------------

def _energy_density_field(curve: SampledCurve, k: int,
                          scheme: DifferentiationScheme, method: str):
    """Field whose half-squared norm integrates to E_k.

    k=1: gamma'; k=2: tau; k=3: cov(tau); k=4: lap(tau).
    """
    if _wants_exact(curve, method):
        gamma = _curve_poly(curve)
        if gamma is not None:
            if k == 1:
                tp = gamma.diff()
            else:
                tp = _tp_tension(gamma)
                if k == 3:
                    tp = _tp_covariant(gamma, tp)
                elif k == 4:
                    tp = _tp_laplacian(gamma, tp)
            return tp.eval(curve.ts)
        if curve.target.curvature == 0 and curve.source is not None:
            j = {1: 1, 2: 2, 3: 3, 4: 4}[k]
            vals = np.asarray(curve.source.derivative_values(curve.ts, j))
            return -vals if k == 4 else vals
    if k == 1:
        return derivative(curve, 1, scheme, method="fd").values
    tau = tension(curve, scheme, method="fd")
    if k == 2:
        return tau.vectors
    if k == 3:
        return covariant_derivative(tau, scheme).vectors
    return rough_laplacian_iter(tau, 1, scheme).vectors


def energy_k(curve: SampledCurve, k: int, scheme: DifferentiationScheme,
             method: str = "auto") -> float:
    """Discrete k-energy of a closed curve (uniform-grid quadrature)."""
    if k not in ENERGY_ORDERS:
        raise ValueError("k must be in {1, 2, 3, 4}")
    if not curve.periodic:
        raise DomainError("k-energies are defined for closed curves only")
    f = _energy_density_field(curve, k, scheme, method)
    dens = curve.target.inner(f, f)
    h = float(nx.to_float(curve.step))
    return 0.5 * h * float(np.sum(nx.to_float(dens)))


def gradient(curve: SampledCurve, k: int, scheme: DifferentiationScheme,
             method: str = "auto") -> TangentField:
    """L^2 gradient of E_k: minus the Euler-Lagrange field."""
    if not curve.periodic:
        raise DomainError("the energy gradient needs a closed curve")
    tk = tau_k(curve, k, scheme, method=method)
    return TangentField(curve, -tk.vectors, valid=tk.valid)


# ---------------------------------------------------------------------------
# Gradient flow
# ---------------------------------------------------------------------------

def default_step_size(k: int, h: float) -> float:
    """CFL-style defaults for the order-2k explicit scheme."""
    table = {1: 0.2 * h ** 2, 2: 0.1 * h ** 4, 3: 0.05 * h ** 6,
             4: 0.02 * h ** 8}
    return table[k]


@dataclass
class FlowConfig:
    k: int = 2
    step_size: Optional[float] = None
    max_steps: int = 20000
    grad_tol: float = 1e-6
    renormalize: bool = True
    scheme: DifferentiationScheme = field(default_factory=DifferentiationScheme)
    trace_every: int = 1
    step_growth: float = 1.2
    max_halvings: int = 30

    def __post_init__(self):
        if self.k not in ENERGY_ORDERS:
            raise ValueError("k must be in {1, 2, 3, 4}")
        if self.step_size is not None and self.step_size <= 0:
            raise ValueError("step size must be positive")


@dataclass
class FlowResult:
    curve: SampledCurve
    trace: np.ndarray          # rows (step, energy, sup|grad|)
    converged: bool
    stalled: bool
    steps: int
    final_step_size: float


def _flow_ops(target, x, h, order):
    def diff(arr, j):
        return nx.apply_stencil_periodic(arr, j, order, h)

    def proj(w):
        return target.project(x, w)
    return diff, proj


def _flow_descent(target, x, h, k, order):
    """tau_k as plain arrays (periodic wrap), the flow's descent direction."""
    diff, proj = _flow_ops(target, x, h, order)
    tau = proj(diff(x, 2))
    if k == 1:
        return tau
    a = tau
    for _ in range(k - 2):
        a = -proj(diff(proj(diff(a, 1)), 1))
    lap_a = -proj(diff(proj(diff(a, 1)), 1))
    gp = diff(x, 1)
    return lap_a - target.curvature_field(gp, a)


def _flow_energy(target, x, h, k, order):
    diff, proj = _flow_ops(target, x, h, order)
    if k == 1:
        f = diff(x, 1)
    elif k == 2:
        f = proj(diff(x, 2))
    elif k == 3:
        f = proj(diff(proj(diff(x, 2)), 1))
    else:
        tau = proj(diff(x, 2))
        f = -proj(diff(proj(diff(tau, 1)), 1))
    return 0.5 * h * float(np.sum(target.inner(f, f)))


def run_flow(init: SampledCurve, cfg: FlowConfig) -> FlowResult:
    """Energy-monotone projected gradient flow of E_k from `init`.

    Steps are x <- retract(x + eta * tau_k) with step halving whenever the
    energy would increase (up to cfg.max_halvings, then the flow reports
    stalled) and mild regrowth after accepted steps.
    """
    if not init.periodic:
        raise DomainError("gradient flow needs a closed initial curve")
    target = init.target
    order = cfg.scheme.order
    x = nx.to_float(init.samples).copy()
    h = float(nx.to_float(init.step))
    n = x.shape[0]
    if n < order + 2 * cfg.k + 1:
        raise PreconditionError("grid too small for the flow stencils")
    eta = cfg.step_size if cfg.step_size is not None \
        else default_step_size(cfg.k, h)
    eta0 = eta
    bound = eta * (math.pi / h) ** (2 * cfg.k)
    if bound >= 2.0:
        warnings.warn(
            f"step size {eta:.3e} exceeds the explicit-scheme stability "
            f"estimate ({bound:.2f} >= 2); the line search will shrink it",
            RuntimeWarning)

    energy = _flow_energy(target, x, h, cfg.k, order)
    desc = _flow_descent(target, x, h, cfg.k, order)
    gsup = float(np.sqrt(np.max(target.inner(desc, desc))))
    trace = [(0, energy, gsup)]
    converged = gsup <= cfg.grad_tol
    stalled = False
    steps = 0

    while not converged and steps < cfg.max_steps:
        if not np.isfinite(energy):
            raise FlowDivergedError("energy became non-finite",
                                    trace=np.asarray(trace))
        accepted = False
        for _ in range(cfg.max_halvings + 1):
            step_vec = target.project(x, desc)
            cand = x + eta * step_vec
            if cfg.renormalize:
                cand = target.retract(cand)
            cand_energy = _flow_energy(target, cand, h, cfg.k, order)
            if np.isfinite(cand_energy) and \
                    cand_energy <= energy * (1 + 1e-14) + 1e-300:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            stalled = True
            break
        x, energy = cand, cand_energy
        steps += 1
        desc = _flow_descent(target, x, h, cfg.k, order)
        gsup = float(np.sqrt(np.max(target.inner(desc, desc))))
        if steps % cfg.trace_every == 0 or gsup <= cfg.grad_tol:
            trace.append((steps, energy, gsup))
        converged = gsup <= cfg.grad_tol
        eta = min(eta * cfg.step_growth, 1e3 * eta0)

    final = SampledCurve(init.target, init.domain, x)
    return FlowResult(curve=final, trace=np.asarray(trace, dtype=float),
                      converged=converged, stalled=stalled, steps=steps,
                      final_step_size=eta)


# ---------------------------------------------------------------------------
# Second variation
# ---------------------------------------------------------------------------

class SecondVariationForm:
    """The k-energy Hessian quadratic form at a fixed curve.

    Curve-dependent fields are computed once (exactly, when the curve carries
    a closed form); evaluation on a variation field V is then a handful of
    stencil applications.  Valid for closed curves and k >= 2.
    """

    def __init__(self, curve: SampledCurve, k: int,
                 scheme: DifferentiationScheme, method: str = "auto",
                 allow_non_critical: bool = False):
        if k not in (2, 3, 4):
            raise ValueError("second variation implemented for k in {2, 3, 4}")
        if not curve.periodic:
            raise DomainError("second variation needs a closed curve")
        self.curve = curve
        self.k = k
        self.order = scheme.order
        self.h = float(nx.to_float(curve.step))
        self.target = curve.target
        self.x = nx.to_float(curve.samples)

        tk = tau_k(curve, k, scheme, method=method)
        resid = tk.sup_norm()
        thr = pass_threshold(curve, k, scheme, method)
        self.extension_dependent = resid > thr
        if self.extension_dependent and not allow_non_critical:
            raise PreconditionError(
                f"curve is not k-harmonic (|tau_k| = {resid:.3e} > {thr:.1e}); "
                "pass allow_non_critical=True for extension-dependent output")

        gamma = _curve_poly(curve) if _wants_exact(curve, method) else None
        ts = curve.ts
        if gamma is not None:
            gp = gamma.diff()
            tau = _tp_tension(gamma)
            dtau = _tp_covariant(gamma, tau)
            a = tau
            for _ in range(k - 2):
                a = _tp_laplacian(gamma, a)
            self.gp = nx.to_float(gp.eval(ts))
            self.tau = nx.to_float(tau.eval(ts))
            self.dtau = nx.to_float(dtau.eval(ts))
            self.lk2tau = nx.to_float(a.eval(ts))
        else:
            d1 = derivative(curve, 1, scheme, method="fd")
            tau = tension(curve, scheme, method="fd")
            dtau = covariant_derivative(tau, scheme)
            a = rough_laplacian_iter(tau, k - 2, scheme)
            self.gp = nx.to_float(d1.values)
            self.tau = nx.to_float(tau.vectors)
            self.dtau = nx.to_float(dtau.vectors)
            self.lk2tau = nx.to_float(a.vectors)

    # -- raw-array helpers ---------------------------------------------------

    def _diff(self, arr, j):
        return nx.apply_stencil_periodic(arr, j, self.order, self.h)

    def _cov(self, arr):
        return self.target.project(self.x, self._diff(arr, 1))

    def _lap(self, arr, times=1):
        for _ in range(times):
            arr = -self._cov(self._cov(arr))
        return arr

    def _rop(self, xv, yv, zv):
        """R(X,Y)Z = K(<Y,Z>X - <X,Z>Y) with the target inner product."""
        kk = self.target.curvature
        if kk == 0:
            return np.zeros_like(xv)
        inner = self.target.inner
        return kk * (inner(yv, zv)[:, None] * xv - inner(xv, zv)[:, None] * yv)

    def value(self, v_values: np.ndarray) -> float:
        """Q_k(V) for a tangent field given as a plain (N, d) array."""
        v = v_values
        gp, tau, dtau, lk2 = self.gp, self.tau, self.dtau, self.lk2tau
        inner = self.target.inner
        dv = self._cov(v)
        jv = self._lap(v) - self._rop(v, gp, gp)
        term1 = inner(jv, self._lap(jv, self.k - 2) if self.k > 2 else jv)

        s = self._rop(tau, v, tau) + self._rop(gp, dv, tau) \
            + 2.0 * self._rop(gp, v, dtau)
        s = self._lap(s, self.k - 2)
        s = s + self._rop(dv, gp, lk2) - 2.0 * self._rop(lk2, gp, dv)
        term2 = inner(v, s)
        return self.h * float(np.sum(term1 - term2))


def second_variation(curve: SampledCurve, v: TangentField, k: int,
                     scheme: DifferentiationScheme,
                     allow_non_critical: bool = False,
                     method: str = "auto") -> float:
    """Hessian quadratic form Q_k(V) of the k-energy at a critical curve.

    Raises unless the curve passes the k-harmonicity residual threshold; with
    allow_non_critical=True the value is still computed but depends on the
    chosen variation extension (geodesic, matching the test oracles).
    """
    form = SecondVariationForm(curve, k, scheme, method=method,
                               allow_non_critical=allow_non_critical)
    if form.extension_dependent:
        warnings.warn("second variation at a non-critical curve is "
                      "extension-dependent", RuntimeWarning)
    return form.value(nx.to_float(v.vectors))


# ---------------------------------------------------------------------------
# Hessian spectrum
# ---------------------------------------------------------------------------

@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray     # ascending, L^2-normalized
    negative_count: int
    eps0: float
    dim: int


def tangent_frames(curve: SampledCurve) -> np.ndarray:
    """Per-node orthonormal tangent frames, shape (N, n, ambient_dim).

    Gram-Schmidt against the target metric (Minkowski for the hyperboloid,
    where tangent spaces are spacelike, so the metric is positive there).
    """
    target = curve.target
    x = nx.to_float(curve.samples)
    n_nodes, d = x.shape
    n_tan = target.dim
    frames = np.zeros((n_nodes, n_tan, d))
    for i in range(n_nodes):
        basis = []
        for axis in range(d):
            cand = np.zeros(d)
            cand[axis] = 1.0
            if target.curvature != 0:
                cand = cand - target.curvature * target.inner(cand, x[i]) * x[i]
            for b in basis:
                cand = cand - target.inner(cand, b) * b
            nrm2 = float(target.inner(cand, cand))
            if nrm2 > 1e-20:
                basis.append(cand / math.sqrt(nrm2))
            if len(basis) == n_tan:
                break
        frames[i] = np.stack(basis)
    return frames


def hessian_spectrum(curve: SampledCurve, k: int,
                     scheme: DifferentiationScheme,
                     eps0: Optional[float] = None,
                     max_dim: int = 1024,
                     allow_non_critical: bool = False,
                     method: str = "auto") -> SpectrumReport:
    """Full spectrum of the k-energy Hessian at a critical curve.

    The matrix entry for frame directions (i,a), (j,b) is the polarization
    of the quadratic form on the corresponding delta fields, divided by the
    grid weight h so eigenvalues approximate the continuum operator's.
    """
    form = SecondVariationForm(curve, k, scheme, method=method,
                               allow_non_critical=allow_non_critical)
    frames = tangent_frames(curve)
    n_nodes, n_tan, d = frames.shape
    dim = n_nodes * n_tan
    if dim > max_dim:
        raise SpectrumTooLargeError(
            f"Hessian dimension {dim} exceeds the dense-solver cap {max_dim}")

    def basis_field(a):
        i, t = divmod(a, n_tan)
        out = np.zeros((n_nodes, d))
        out[i] = frames[i, t]
        return out

    fields = [basis_field(a) for a in range(dim)]
    diag = np.array([form.value(f) for f in fields])
    mat = np.zeros((dim, dim))
    for a in range(dim):
        mat[a, a] = diag[a]
        ia = a // n_tan
        offs, _ = nx.stencil(1, scheme.order)
        reach = 2 * (k - 1) * offs[-1] + 2 * offs[-1] + 2  # stencil footprint
        for b in range(a + 1, dim):
            ib = b // n_tan
            gap = abs(ia - ib)
            gap = min(gap, n_nodes - gap)
            if gap > reach:
                continue
            q = 0.5 * (form.value(fields[a] + fields[b]) - diag[a] - diag[b])
            mat[a, b] = q
            mat[b, a] = q
    mat /= form.h
    eigs = np.linalg.eigvalsh(mat)
    if eps0 is None:
        eps0 = 1e-6 * float(np.max(np.abs(eigs)))
    neg = int(np.sum(eigs < -eps0))
    return SpectrumReport(eigenvalues=eigs, negative_count=neg,
                          eps0=float(eps0), dim=dim)
