"""Numerical Lyapunov-Schmidt reduction for critical spheres.

Solves, at fixed radius r, the projected system

    pi1( Phi~ ) = 0   (3 equations, matched by the center offset tau)
    pi0( Phi~ ) = 0   (1 equation, matched by the Lagrange parameter lam)
    Pperp coefficients of Phi~ up to the solver band limit = 0
                      (matched by the graph coefficients phi in Kperp)

where Phi~ is the physical Euler-Lagrange residual of the surface
exp_{c(tau)}(r x (1 + r^2 phi)).  Pointwise Phi = r^3 Phi~, so zeros of this
system are zeros of the rescaled operator; the solver works with the
physical normalization because it is the better-conditioned one numerically.

The kernel constraint is enforced by construction: phi simply has no
degree-0/1 coefficients, so it never enters the Newton system.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .background import InitialDataSet, concentration_scalar, curvature_at
from .el_operator import el_residual
from .errors import ContinuationBroken, DegenerateHessian, HawkfolError, NonConvergence
from .functionals import EnergyReport, hawking_energy
from .geodesic import RayFan, transported_center_frame
from .grid import SphereGrid, default_grid
from .harmonics import (HarmonicField, analyze, biharmonic_solve,
                        project_Kperp)
from .surface import graph_surface


@dataclass
class CriticalSurfaceSolution:
    """A solved critical sphere (r, tau, lambda, phi) with diagnostics.

    `phi` is the r^2-normalized graph coefficient field (the full radial
    factor of the surface is 1 + r^2 phi); its degree-0/1 coefficients vanish
    identically.
    """

    r: float
    tau: np.ndarray
    lam: float
    phi: HarmonicField
    residual_norm: float          # projected L2 norm of Phi~ (solved block)
    residual_norm_full: float     # full-field L2 norm of Phi~
    newton_iterations: int
    converged: bool
    energy: Optional[EnergyReport] = None

    def to_dict(self) -> dict:
        return {
            "r": self.r, "tau": list(self.tau), "lambda": self.lam,
            "phi_coeffs": list(self.phi.coeffs), "phi_band_limit": self.phi.band_limit,
            "residual_norm": self.residual_norm,
            "residual_norm_full": self.residual_norm_full,
            "newton_iterations": self.newton_iterations, "converged": self.converged,
            "energy": self.energy.to_dict() if self.energy else None,
        }


@dataclass
class FoliationTrace:
    """Ordered leaves of a solved foliation with lapse diagnostics."""

    solutions: list
    r: np.ndarray
    tau: np.ndarray                  # (n, 3)
    lam: np.ndarray
    dtau_dr: np.ndarray              # (n, 3) centered differences
    lapse_min: np.ndarray
    foliation_valid: bool
    lambda0_extrapolated: float
    dtau_dr_at_zero: np.ndarray
    hawking_functional: np.ndarray
    hawking_energy: np.ndarray
    area: np.ndarray
    epsilon0_sq_proxy: float

    def to_dict(self) -> dict:
        return {
            "r": list(self.r), "tau": [list(t) for t in self.tau],
            "lambda": list(self.lam), "dtau_dr": [list(t) for t in self.dtau_dr],
            "lapse_min": list(self.lapse_min), "foliation_valid": self.foliation_valid,
            "lambda0_extrapolated": self.lambda0_extrapolated,
            "dtau_dr_at_zero": list(self.dtau_dr_at_zero),
            "hawking_functional": list(self.hawking_functional),
            "hawking_energy": list(self.hawking_energy),
            "area": list(self.area),
            "epsilon0_sq_proxy": self.epsilon0_sq_proxy,
            "solutions": [s.to_dict() for s in self.solutions],
        }


@dataclass
class NonexistenceReport:
    grad_f: np.ndarray
    grad_norm: float
    excluded: bool
    hessian_eigenvalues: Optional[np.ndarray]
    verdict: str


# ----------------------------------------------------------------------
# initial guess from the closed-form r -> 0 limit
# ----------------------------------------------------------------------

def initial_guess(ds: InitialDataSet, p, band_limit: int = 8,
                  grid: Optional[SphereGrid] = None):
    """(lambda0, phi0) of the r -> 0 limit of the reduction.

    lambda0 = -Sc/3 - |k|^2/15 - (tr k)^2/5 at p, and phi0 solves

        L phi0 = Pperp( (4 Ric_ij + 6 tr k k_ij + 4 k_si k_sj) x^i x^j
                        - 9 (k_ij x^i x^j)^2 )

    with L = l(l+1)(l(l+1) - 2) spectrally, all curvature at p.  The
    right-hand side is the Kperp content of the r^2 coefficient of the
    residual on geodesic spheres, so the fixed point of the reduction is
    phi(r) -> phi0 as r -> 0 (verified against solved surfaces; note the
    sign relative to the operator convention, which is pinned by the
    kernel-projection constants 8 pi (lambda + Sc/3 + ...)).
    """
    grid = grid or default_grid()
    c = curvature_at(ds, p)
    lam0 = -c.scalar / 3.0 - c.norm_k_sq / 15.0 - c.tr_k ** 2 / 5.0

    x = grid.nodes
    kmat = _k_at(ds, p)
    kxx = np.einsum("ij,ni,nj->n", kmat, x, x)
    ksq = kmat @ kmat
    quad = 4.0 * c.ricci + 6.0 * c.tr_k * kmat + 4.0 * ksq
    rhs_vals = np.einsum("ij,ni,nj->n", quad, x, x) - 9.0 * kxx * kxx
    rhs = project_Kperp(analyze(grid, rhs_vals).restricted(band_limit))
    phi0 = biharmonic_solve(rhs)
    return lam0, phi0


def _k_at(ds: InitialDataSet, p):
    return ds.k_tensor(np.asarray(p, dtype=float).reshape(1, 3))[0]


# ----------------------------------------------------------------------
# the projected Newton system
# ----------------------------------------------------------------------

class _ReducedSystem:
    """Residual and forward-difference Jacobian of the projected equations."""

    def __init__(self, ds, p, r, grid, band_limit, fan_steps=64):
        self.ds = ds
        self.p = np.asarray(p, dtype=float).reshape(3)
        self.r = float(r)
        self.grid = grid
        self.band_limit = band_limit
        self.n_coeffs = (band_limit + 1) ** 2
        self.n_phi = self.n_coeffs - 4
        self.fan_steps = fan_steps
        self._fans = {}
        self.evaluations = 0

    def fan_for(self, tau):
        key = tuple(np.round(np.asarray(tau, dtype=float), 14))
        if key not in self._fans:
            center, frame = transported_center_frame(self.ds, self.p, tau)
            self._fans[key] = RayFan(self.ds, center, frame, self.grid.nodes,
                                     s_max=1.3 * self.r, n_steps=self.fan_steps)
            if len(self._fans) > 12:
                self._fans.pop(next(iter(self._fans)))
        return self._fans[key]

    def unpack(self, u):
        tau = u[:3]
        lam = u[3]
        coeffs = np.zeros(self.n_coeffs)
        coeffs[4:] = u[4:]
        return tau, lam, HarmonicField(coeffs, self.band_limit)

    def surface(self, u):
        tau, lam, phi = self.unpack(u)
        full_phi = HarmonicField(self.r ** 2 * phi.coeffs, self.band_limit)
        fan = self.fan_for(tau)
        return graph_surface(self.ds, self.p, tau, self.r, full_phi, self.grid,
                             fan=fan, check_band=False), lam

    def residual_field(self, u):
        surf, lam = self.surface(u)
        self.evaluations += 1
        return el_residual(self.ds, surf, lam), surf

    def project(self, res):
        f = analyze(self.grid, res.values, check=False)
        out = np.empty(4 + self.n_phi)
        out[:3] = res.proj_k1
        out[3] = res.proj_k0
        out[4:] = f.coeffs[4:self.n_coeffs]
        return out, float(np.linalg.norm(f.coeffs))

    def residual(self, u):
        res, _ = self.residual_field(u)
        return self.project(res)

    def jacobian(self, u, r_vec):
        """Forward-difference Jacobian; the lam column is exact (residual is
        linear in lam with slope H)."""
        n = u.size
        jac = np.empty((n, n))
        res0, surf = self.residual_field(u)
        h_proj, _ = self.project(
            type(res0).from_values(self.grid, surf.mean_curvature, 0.0))
        jac[:, 3] = h_proj
        step_tau = 1e-6 * max(self.r, 1e-3)
        for i in range(3):
            du = u.copy()
            du[i] += step_tau
            jac[:, i] = (self.residual(du)[0] - r_vec) / step_tau
        step_phi = 1e-6
        for i in range(4, n):
            du = u.copy()
            du[i] += step_phi
            jac[:, i] = (self.residual(du)[0] - r_vec) / step_phi
        return jac


def solve_critical(ds: InitialDataSet, p, r: float, guess=None,
                   grid: Optional[SphereGrid] = None, band_limit: int = 8,
                   tol: float = 1e-7, max_iter: int = 25, fix_tau: bool = False,
                   allow_degenerate: bool = False,
                   with_energy: bool = True) -> CriticalSurfaceSolution:
    """Newton solve of the reduced system at one radius.

    Parameters
    ----------
    guess : None, (tau, lam, phi) triple, or CriticalSurfaceSolution
        Starting point; defaults to the closed-form r -> 0 guess at p.
    tol : float
        Convergence threshold on the projected L2 norm of Phi~ (the rescaled
        residual Phi then satisfies |Phi| < tol * r^3).
    fix_tau : bool
        Solve only the (lam, phi) block with tau frozen; used to measure the
        kernel obstruction at points where no critical sphere exists.
    allow_degenerate : bool
        Skip the concentration-scalar Hessian conditioning gate.
    """
    grid = grid or default_grid()
    if not fix_tau and not allow_degenerate:
        _, _, hess = concentration_scalar(ds, p)
        sv = np.linalg.svd(hess, compute_uv=False)
        if sv[-1] == 0 or sv[0] / sv[-1] > 1e8:
            raise DegenerateHessian(
                f"concentration-scalar Hessian condition {sv[0] / max(sv[-1], 1e-300):.2e} "
                "exceeds 1e8; no isolated critical point to center on")

    system = _ReducedSystem(ds, p, r, grid, band_limit)
    if guess is None:
        lam0, phi0 = initial_guess(ds, p, band_limit=band_limit, grid=grid)
        tau0 = np.zeros(3)
    elif isinstance(guess, CriticalSurfaceSolution):
        tau0, lam0, phi0 = guess.tau, guess.lam, guess.phi.restricted(band_limit)
    else:
        tau0, lam0, phi0 = guess
        phi0 = phi0.restricted(band_limit)

    u = np.concatenate([np.asarray(tau0, dtype=float).reshape(3), [float(lam0)],
                        phi0.coeffs[4:]])
    free = np.arange(u.size) if not fix_tau else np.arange(3, u.size)

    r_vec, full_norm = system.residual(u)
    best = np.linalg.norm(r_vec[free])
    jac = None
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if np.linalg.norm(r_vec[free]) < tol:
            break
        if jac is None or iterations % 4 == 1:
            jac = system.jacobian(u, r_vec)
        sub = jac[np.ix_(free, free)]
        try:
            step = np.linalg.solve(sub, -r_vec[free])
        except np.linalg.LinAlgError:
            raise NonConvergence("singular reduced Jacobian", iterations=iterations,
                                 residual=best)
        scale = 1.0
        for _ in range(5):
            u_try = u.copy()
            u_try[free] += scale * step
            try:
                r_try, full_norm = system.residual(u_try)
            except HawkfolError:
                scale *= 0.5
                continue
            if np.linalg.norm(r_try[free]) < np.linalg.norm(r_vec[free]) or scale < 0.2:
                u, r_vec = u_try, r_try
                break
            scale *= 0.5
        else:
            u[free] += step
            r_vec, full_norm = system.residual(u)
        best = min(best, np.linalg.norm(r_vec[free]))

    converged = bool(np.linalg.norm(r_vec[free]) < tol)
    if not converged:
        raise NonConvergence(
            f"projected residual {np.linalg.norm(r_vec[free]):.3e} after "
            f"{iterations} iterations (tol {tol:.1e})",
            iterations=iterations, residual=float(np.linalg.norm(r_vec[free])))

    tau, lam, phi = system.unpack(u)
    surf, _ = system.surface(u)
    energy = hawking_energy(surf) if with_energy else None
    return CriticalSurfaceSolution(
        r=r, tau=tau.copy(), lam=lam, phi=phi,
        residual_norm=float(np.linalg.norm(r_vec[free])),
        residual_norm_full=full_norm, newton_iterations=iterations,
        converged=converged, energy=energy)


def kernel_obstruction(ds: InitialDataSet, p, r: float, grid=None,
                       band_limit: int = 8, tol: float = 1e-7):
    """pi1(Phi~) after solving the solvable (lam, phi) block with tau = 0.

    Equals pi1(Phi)/r^3; its r -> 0 limit is (4 pi / 3) grad f(p), the
    quantitative obstruction to concentrations of critical spheres.
    """
    grid = grid or default_grid()
    sol = solve_critical(ds, p, r, grid=grid, band_limit=band_limit, tol=tol,
                         fix_tau=True, with_energy=False)
    system = _ReducedSystem(ds, p, r, grid, band_limit)
    u = np.concatenate([sol.tau, [sol.lam], sol.phi.coeffs[4:]])
    res, _ = system.residual_field(u)
    return res.proj_k1


def nonexistence_check(ds: InitialDataSet, p, tol: float = 1e-8) -> NonexistenceReport:
    """Concentration verdict at p from the concentration scalar's gradient."""
    _, grad, hess = concentration_scalar(ds, p)
    norm = float(np.linalg.norm(grad))
    if norm > tol:
        return NonexistenceReport(grad_f=grad, grad_norm=norm, excluded=True,
                                  hessian_eigenvalues=None,
                                  verdict="gradient nonzero: no concentration of "
                                          "critical spheres at this point")
    eigs = np.linalg.eigvalsh(hess)
    degenerate = np.min(np.abs(eigs)) == 0 or np.max(np.abs(eigs)) / np.min(np.abs(eigs)) > 1e8
    verdict = ("critical point with degenerate Hessian: reduction inconclusive"
               if degenerate else
               "critical point with nondegenerate Hessian: foliation candidate")
    return NonexistenceReport(grad_f=grad, grad_norm=norm, excluded=False,
                              hessian_eigenvalues=eigs, verdict=verdict)


# ----------------------------------------------------------------------
# continuation in r
# ----------------------------------------------------------------------

def foliate(ds: InitialDataSet, p, r_range, n_steps: int,
            grid: Optional[SphereGrid] = None, band_limit: int = 8,
            tol: float = 1e-7, max_iter: int = 25,
            warm_start: Optional[list] = None) -> FoliationTrace:
    """Trace the foliation over a geometric radius grid by continuation.

    Marches from r_min upward with the previous solution as warm start; on a
    failed solve the step is halved twice before aborting with
    ContinuationBroken (carrying the partial trace).  `warm_start` resumes a
    previous run: its solutions seed the trace and the corresponding leading
    radii of the (identical) geometric grid are skipped.
    """
    grid = grid or default_grid()
    r_min, r_max = float(r_range[0]), float(r_range[1])
    if not (0 < r_min < r_max):
        raise ValueError("need 0 < r_min < r_max")
    radii = list(np.geomspace(r_min, r_max, int(n_steps)))

    solutions = []
    guess = None
    if warm_start:
        solutions = list(warm_start)
        guess = solutions[-1]
        radii = radii[len(solutions):]
    for r in radii:
        attempt_r = r
        sol = None
        for _ in range(3):
            try:
                sol = solve_critical(ds, p, attempt_r, guess=guess, grid=grid,
                                     band_limit=band_limit, tol=tol, max_iter=max_iter)
                break
            except HawkfolError:
                if not solutions:
                    raise
                attempt_r = 0.5 * (attempt_r + solutions[-1].r)
        if sol is None:
            raise ContinuationBroken(
                f"continuation stalled near r = {r:.4g}", trace=_trace_from(solutions, grid))
        solutions.append(sol)
        guess = sol
    return _trace_from(solutions, grid)


def _trace_from(solutions, grid) -> FoliationTrace:
    if not solutions:
        raise ContinuationBroken("no solved leaves", trace=None)
    r = np.array([s.r for s in solutions])
    tau = np.array([s.tau for s in solutions])
    lam = np.array([s.lam for s in solutions])
    if len(solutions) > 1:
        dtau = np.gradient(tau, r, axis=0)
    else:
        dtau = np.zeros_like(tau)

    lapse_min = np.empty(r.size)
    for i, sol in enumerate(solutions):
        alpha = 1.0 + grid.nodes @ dtau[i]
        lapse_min[i] = float(alpha.min())

    # Richardson extrapolation of lambda(r) = lam0 + b r^2 (+ c r^4)
    if r.size >= 3:
        A = np.vstack([np.ones_like(r), r ** 2, r ** 4]).T
        lam0 = float(np.linalg.lstsq(A, lam, rcond=None)[0][0])
    elif r.size == 2:
        lam0 = float(lam[0] - r[0] ** 2 * (lam[1] - lam[0]) / (r[1] ** 2 - r[0] ** 2))
    else:
        lam0 = float(lam[0])
    dtau0 = dtau[0] - r[0] * (dtau[1] - dtau[0]) / (r[1] - r[0]) if r.size > 1 else dtau[0]

    hf = np.array([s.energy.hawking_functional_value if s.energy else np.nan
                   for s in solutions])
    he = np.array([s.energy.hawking_energy if s.energy else np.nan for s in solutions])
    area = np.array([s.energy.area if s.energy else np.nan for s in solutions])
    eps0 = 10.0 * float(np.nanmax(hf - 4.0 * np.pi)) if np.any(np.isfinite(hf)) else np.nan

    return FoliationTrace(
        solutions=solutions, r=r, tau=tau, lam=lam, dtau_dr=dtau,
        lapse_min=lapse_min, foliation_valid=bool(np.all(lapse_min > 0)),
        lambda0_extrapolated=lam0, dtau_dr_at_zero=dtau0,
        hawking_functional=hf, hawking_energy=he, area=area,
        epsilon0_sq_proxy=eps0)


def trace_to_json(trace: FoliationTrace, path) -> None:
    with open(path, "w") as fh:
        json.dump(trace.to_dict(), fh, indent=1)
