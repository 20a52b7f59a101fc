"""Area-constrained Euler-Lagrange residual of the Hawking functional.

`el_residual` evaluates, on a physical surface,

    lam H + Lap_Sigma H + H |B0|^2 + H Ric(nu, nu)
    + P (grad_nu tr k - grad_nu k(nu, nu)) - 2 P div_Sigma(k(., nu))
    + 1/2 H P^2 - 2 k(grad_Sigma P, nu)

with every ambient derivative of k taken from the background's covariant
grad_k at the node (never by differencing node data), and the tangential
divergence expanded through the identity

    div_Sigma(k(., nu)) = (div k)(nu) - grad_nu k(nu, nu) - H k(nu, nu)
                          + g_Sigma(k, B).

`rescaled_phi` evaluates the same operator on the rescaled data
(g_{tau,r}, k_{tau,r}) over the unit ball, with the Lagrange term r^2 lam H;
its node values equal r^3 times the physical residual at matching parameter
points, which is verified rather than assumed.  `w_split` separates the
k-independent part W1 from the k-dependent part W2 of the rescaled operator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .background import InitialDataSet, ambient_fields
from .errors import NonEmbedded
from .geodesic import VariationBundle, transported_center_frame
from .grid import SphereGrid
from .harmonics import (HarmonicField, analyze_compensated, project_K0,
                        project_K1, synthesize_derivatives)
from .surface import EmbeddedSurface, geometry_from_embedding


@dataclass
class ResidualField:
    """Node values of the residual with norms and kernel projections.

    Norms are taken in the round measure of the parameter sphere, which is
    what the reduction solver projects against.
    """

    values: np.ndarray
    lam: float
    l2_norm: float
    c0_norm: float
    proj_k0: float
    proj_k1: np.ndarray

    @classmethod
    def from_values(cls, grid: SphereGrid, values: np.ndarray, lam: float) -> "ResidualField":
        l2 = float(np.sqrt(np.sum(grid.weights * values * values)))
        return cls(values=values, lam=float(lam), l2_norm=l2,
                   c0_norm=float(np.abs(values).max()),
                   proj_k0=project_K0(grid, values),
                   proj_k1=project_K1(grid, values))

    def to_csv(self, grid: SphereGrid, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["node", "x", "y", "z", "residual"])
            for n in range(grid.n_nodes):
                writer.writerow([n, *grid.nodes[n], self.values[n]])


def _angle_hessian(grid: SphereGrid, values: np.ndarray):
    """Spectral first and second angle derivatives of a node field."""
    field = analyze_compensated(grid, np.asarray(values, dtype=float))
    _, ft, fp, ftt, ftp, fpp = synthesize_derivatives(field, grid)
    d1f = np.stack([ft, fp], axis=1)
    d2f = np.empty((grid.n_nodes, 2, 2))
    d2f[:, 0, 0] = ftt
    d2f[:, 0, 1] = ftp
    d2f[:, 1, 0] = ftp
    d2f[:, 1, 1] = fpp
    return d1f, d2f


def _laplacian(grid: SphereGrid, metric_inv, gamma_sigma, values):
    d1f, d2f = _angle_hessian(grid, values)
    correction = np.einsum("ncab,nc->nab", gamma_sigma, d1f)
    return np.einsum("nab,nab->n", metric_inv, d2f - correction)


def laplace_beltrami(surface: EmbeddedSurface, values: np.ndarray) -> np.ndarray:
    """Laplace-Beltrami operator of the induced metric on a node field.

    Angle derivatives of the field are spectral; the connection correction
    uses the surface Christoffel symbols assembled pointwise from the ambient
    data, so no node-to-node differencing enters.
    """
    stretched = surface.stretched
    lap = _laplacian(surface.grid, stretched["metric_inv"],
                     stretched["surface_christoffel"], values)
    return lap / (surface.scale * surface.scale)


def _residual_terms(grid, geo, amb_like, lam, h_field=None):
    """All eight terms of the residual from geometry + ambient node data.

    `amb_like` must provide metric_inv, ricci, k, k_trace, grad_k at the
    nodes.  Returns a dict of per-node arrays; the residual is their sum.
    """
    h = geo["mean_curvature"] if h_field is None else h_field
    nu = geo["normal"]
    d1 = geo["d1"]
    ginv_s = geo["metric_inv"]
    b = geo["second_form"]

    ric_nn = np.einsum("nij,ni,nj->n", amb_like.ricci, nu, nu)
    k = amb_like.k
    grad_k = amb_like.grad_k
    trk = amb_like.k_trace
    g_inv = amb_like.metric_inv

    k_nn = np.einsum("nij,ni,nj->n", k, nu, nu)
    p = trk - k_nn

    # grad_nu tr k and grad_nu k(nu, nu) from the covariant gradient of k
    grad_trk = np.einsum("nij,nsij->ns", g_inv, grad_k)
    grad_k_nn = np.einsum("nsij,ni,nj->ns", grad_k, nu, nu)
    nu_trk = np.einsum("ns,ns->n", grad_trk, nu)
    nu_k_nn = np.einsum("ns,ns->n", grad_k_nn, nu)

    # div_Sigma(k(., nu)) via the expanded first-variation identity
    div_k_nu_full = np.einsum("nsl,nslj,nj->n", g_inv, grad_k, nu)
    k_surf = np.einsum("nij,nai,nbj->nab", k, d1, d1)
    k_dot_b = np.einsum("nac,nbd,nab,ncd->n", ginv_s, ginv_s, k_surf, b)
    div_sigma = div_k_nu_full - nu_k_nn - h * k_nn + k_dot_b

    # tangential gradient of P: dP_a = d1_a^l (grad_l trk - grad_l k(nu,nu))
    #                                  - 2 B_a^b k(d1_b, nu)
    b_mixed = np.einsum("nbc,nac->nab", ginv_s, b)  # B_a^b
    k_d1_nu = np.einsum("nij,nbi,nj->nb", k, d1, nu)
    dp = (np.einsum("nal,nl->na", d1, grad_trk - grad_k_nn)
          - 2.0 * np.einsum("nab,nb->na", b_mixed, k_d1_nu))
    grad_p_vec = np.einsum("nab,nb,nai->ni", ginv_s, dp, d1)
    k_gradp_nu = np.einsum("nij,ni,nj->n", k, grad_p_vec, nu)

    lap_h = geo["laplacian_of_h"]
    terms = {
        "lam_h": lam * h,
        "laplacian_h": lap_h,
        "h_b_traceless": h * geo["traceless_second_norm_sq"],
        "h_ricci": h * ric_nn,
        "p_normal_derivatives": p * (nu_trk - nu_k_nn),
        "p_divergence": -2.0 * p * div_sigma,
        "h_p_squared": 0.5 * h * p * p,
        "k_grad_p": -2.0 * k_gradp_nu,
    }
    return terms


@dataclass
class _NodeAmbient:
    metric_inv: np.ndarray
    ricci: np.ndarray
    k: np.ndarray
    k_trace: np.ndarray
    grad_k: np.ndarray


def el_residual(ds: InitialDataSet, surface: EmbeddedSurface, lam: float,
                return_terms: bool = False):
    """Physical-surface residual of the area-constrained equation.

    Returns a ResidualField over the parameter sphere; with `return_terms`
    also the dict of individual terms (in physical units).

    The evaluation runs in the stretched surface coordinates and divides by
    scale^3 at the end, which is an exact identity for the operator and keeps
    the numerical floor independent of the surface size.
    """
    grid = surface.grid
    s = surface.scale
    geo = dict(surface.stretched)
    geo["laplacian_of_h"] = _laplacian(grid, geo["metric_inv"],
                                       geo["surface_christoffel"],
                                       geo["mean_curvature"])
    amb = surface.ambient
    node_amb = _NodeAmbient(metric_inv=amb.metric_inv, ricci=s * s * amb.ricci,
                            k=s * amb.k, k_trace=s * amb.k_trace,
                            grad_k=s * s * amb.grad_k)
    terms = _residual_terms(grid, geo, node_amb, s * s * lam)
    s3 = s ** 3
    terms = {name: vals / s3 for name, vals in terms.items()}
    values = sum(terms.values())
    res = ResidualField.from_values(grid, values, lam)
    if return_terms:
        return res, terms
    return res


# ----------------------------------------------------------------------
# the rescaled operator on the unit ball
# ----------------------------------------------------------------------

def _rescaled_node_data(ds: InitialDataSet, center, tau, radius: float,
                        grid: SphereGrid, radial_factor: np.ndarray,
                        n_steps: int = 64):
    """Ambient data of (g_{tau,r}, k_{tau,r}) at the graph nodes of the ball.

    Pulls every tensor back through the normal-coordinate chart F_tau using
    the exact chart differentials (Jacobi fields) and Hessians (second
    variations), then applies the constant rescaling weights.
    """
    n = grid.n_nodes
    if radius == 0.0:
        eye = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        return _NodeAmbient(
            metric_inv=eye.copy(), ricci=np.zeros((n, 3, 3)), k=np.zeros((n, 3, 3)),
            k_trace=np.zeros(n), grad_k=np.zeros((n, 3, 3, 3))), eye.copy(), np.zeros((n, 3, 3, 3))

    center_pt, frame = transported_center_frame(ds, center, tau)
    radii = radius * radial_factor
    bundle = VariationBundle(ds, center_pt, frame, grid.nodes, radii, n_steps=n_steps)
    amb = ambient_fields(ds, bundle.points)

    df = bundle.df        # (n, a, i): manifold a, chart i
    d2f = bundle.d2f      # (n, a, i, j)
    df_inv = np.linalg.inv(df)

    g_hat = np.einsum("nab,nai,nbj->nij", amb.metric, df, df)
    gamma_hat = np.einsum("nkc,ncij->nkij", df_inv,
                          d2f + np.einsum("ncab,nai,nbj->ncij", amb.christoffel, df, df))
    ric_hat = np.einsum("nab,nai,nbj->nij", amb.ricci, df, df)
    k_hat = np.einsum("nab,nai,nbj->nij", amb.k, df, df)
    grad_k_hat = np.einsum("ncab,ncs,nai,nbj->nsij", amb.grad_k, df, df, df)

    # rescaled components on the ball: g(y) = ghat(ry), Gamma = r Gammahat,
    # Ric = r^2 Richat, k = r khat, grad k = r^2 gradhat
    g_resc = g_hat
    gamma_resc = radius * gamma_hat
    ric_resc = radius * radius * ric_hat
    k_resc = radius * k_hat
    grad_k_resc = radius * radius * grad_k_hat
    g_inv = np.linalg.inv(g_resc)
    trk = np.einsum("nij,nij->n", g_inv, k_resc)
    node_amb = _NodeAmbient(metric_inv=g_inv, ricci=ric_resc, k=k_resc,
                            k_trace=trk, grad_k=grad_k_resc)
    return node_amb, g_resc, gamma_resc


def _rescaled_geometry(ds: InitialDataSet, center, tau, radius: float,
                       phi: Optional[HarmonicField], lam: float, grid: SphereGrid,
                       n_steps: int = 64):
    """Geometry of S_phi in the rescaled ball plus the residual term dict."""
    if phi is None:
        phi_vals = np.zeros(grid.n_nodes)
        pt = pp = ptt = ptp = ppp = np.zeros(grid.n_nodes)
    else:
        phi_vals, pt, pp, ptt, ptp, ppp = synthesize_derivatives(phi, grid)
    factor = 1.0 + phi_vals
    if np.any(factor <= 0):
        raise NonEmbedded(f"1 + phi reaches {factor.min():.3g} <= 0")

    x1, x2 = grid.embedding_derivatives
    x = grid.nodes
    d1 = factor[:, None, None] * x1 + np.stack([pt, pp], axis=1)[:, :, None] * x[:, None, :]
    dphi2 = np.empty((grid.n_nodes, 2, 2))
    dphi2[:, 0, 0] = ptt
    dphi2[:, 0, 1] = ptp
    dphi2[:, 1, 0] = ptp
    dphi2[:, 1, 1] = ppp
    dphi1 = np.stack([pt, pp], axis=1)
    d2 = (factor[:, None, None, None] * x2
          + dphi2[:, :, :, None] * x[:, None, None, :]
          + dphi1[:, :, None, None] * x1[:, None, :, :]
          + dphi1[:, None, :, None] * x1[:, :, None, :])

    node_amb, g_resc, gamma_resc = _rescaled_node_data(
        ds, center, tau, radius, grid, factor, n_steps=n_steps)
    geo = geometry_from_embedding(grid, d1, d2, g_resc, gamma_resc,
                                  node_amb.k, node_amb.k_trace)
    geo["d1"] = d1

    # Laplace-Beltrami of H on the rescaled surface, same spectral route
    geo["laplacian_of_h"] = _laplacian(grid, geo["metric_inv"],
                                       geo["surface_christoffel"],
                                       geo["mean_curvature"])

    lam_eff = radius * radius * lam
    terms = _residual_terms(grid, geo, node_amb, lam_eff)
    return terms


def rescaled_phi(ds: InitialDataSet, center, tau, radius: float,
                 phi: Optional[HarmonicField], lam: float, grid: SphereGrid,
                 n_steps: int = 64) -> ResidualField:
    """The rescaled operator at (r, tau, phi, lam); equals r^3 times the
    physical residual at matching parameter points."""
    terms = _rescaled_geometry(ds, center, tau, radius, phi, lam, grid, n_steps=n_steps)
    values = sum(terms.values())
    return ResidualField.from_values(grid, values, lam)


def w_split(ds: InitialDataSet, center, tau, radius: float,
            phi: Optional[HarmonicField], lam: float, grid: SphereGrid,
            n_steps: int = 64):
    """(W1, W2): the k-independent and k-dependent parts of the rescaled operator."""
    terms = _rescaled_geometry(ds, center, tau, radius, phi, lam, grid, n_steps=n_steps)
    w1 = terms["lam_h"] + terms["laplacian_h"] + terms["h_b_traceless"] + terms["h_ricci"]
    w2 = (terms["p_normal_derivatives"] + terms["p_divergence"]
          + terms["h_p_squared"] + terms["k_grad_p"])
    return (ResidualField.from_values(grid, w1, lam),
            ResidualField.from_values(grid, w2, lam))
