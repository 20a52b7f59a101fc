"""Geodesic shooting and radial ray bundles.

Surfaces are built from radial geodesics ("rays") leaving a common center.
A RayFan integrates one geodesic per grid direction once (as its deviation
from the straight chord, for conditioning) and answers position queries at
arbitrary radii through cubic Hermite interpolation, so changing the radial
graph function never forces a re-integration.  A VariationBundle additionally
carries the Jacobi fields and second variations of the exponential map, which
give the exact differential and Hessian of the normal-coordinate chart needed
by the rescaled operator.
"""

from __future__ import annotations

import numpy as np

from .background import (InitialDataSet, _d3g_of, _dg_of, _d2g_of,
                         _inverse_metric, christoffel_from)
from .errors import ChartExceeded, StepSizeUnderflow


def _gamma_at(ds: InitialDataSet, pts):
    g_inv = _inverse_metric(ds.metric(pts))
    return christoffel_from(g_inv, _dg_of(ds, pts))


def orthonormal_frame(ds: InitialDataSet, point) -> np.ndarray:
    """Columns form a g-orthonormal basis at the point (Cholesky gauge)."""
    point = np.asarray(point, dtype=float).reshape(3)
    g = ds.metric_at(point[None, :], check=True)[0]
    chol = np.linalg.cholesky(g)
    return np.linalg.inv(chol).T


def exp_map(ds: InitialDataSet, base, v, n_steps: int = 64) -> np.ndarray:
    """Endpoint exp_base(v) of the geodesic with initial velocity v.

    `v` may carry leading batch axes.  Fixed-step RK4 on the first-order
    system; the trajectory is chart-checked at every step.
    """
    base = np.asarray(base, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    v2 = np.atleast_2d(v)
    if n_steps < 1:
        raise StepSizeUnderflow("n_steps must be positive")
    h = 1.0 / n_steps

    x = np.broadcast_to(base, v2.shape).copy()
    u = v2.copy()

    def rhs(x, u):
        gam = _gamma_at(ds, x)
        return u, -np.einsum("...ajk,...j,...k->...a", gam, u, u)

    for _ in range(n_steps):
        k1x, k1u = rhs(x, u)
        k2x, k2u = rhs(x + 0.5 * h * k1x, u + 0.5 * h * k1u)
        k3x, k3u = rhs(x + 0.5 * h * k2x, u + 0.5 * h * k2u)
        k4x, k4u = rhs(x + h * k3x, u + h * k3u)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        u = u + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        ds.check_chart(x)
    return x[0] if single else x


def parallel_transport(ds: InitialDataSet, base, v, vectors, n_steps: int = 64) -> np.ndarray:
    """Transport `vectors` (columns) along the geodesic t -> exp_base(t v)."""
    base = np.asarray(base, dtype=float).reshape(3)
    v = np.asarray(v, dtype=float).reshape(3)
    w = np.asarray(vectors, dtype=float).copy()  # (3, m) columns
    h = 1.0 / n_steps
    x = base[None, :].copy()
    u = v[None, :].copy()

    def rhs(x, u, w):
        gam = _gamma_at(ds, x)[0]
        ax = u
        au = -np.einsum("ajk,...j,...k->...a", gam, u, u)
        aw = -np.einsum("ajk,j,km->am", gam, u[0], w)
        return ax, au, aw

    for _ in range(n_steps):
        k1 = rhs(x, u, w)
        k2 = rhs(x + 0.5 * h * k1[0], u + 0.5 * h * k1[1], w + 0.5 * h * k1[2])
        k3 = rhs(x + 0.5 * h * k2[0], u + 0.5 * h * k2[1], w + 0.5 * h * k2[2])
        k4 = rhs(x + h * k3[0], u + h * k3[1], w + h * k3[2])
        x = x + (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        u = u + (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        w = w + (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
        ds.check_chart(x)
    return w


def transported_center_frame(ds: InitialDataSet, p, tau, n_steps: int = 64):
    """Center c(tau) = exp_p(tau^i e_i) and the parallel frame e_i^tau there.

    `tau` is given in the orthonormal frame at p.
    """
    p = np.asarray(p, dtype=float).reshape(3)
    tau = np.asarray(tau, dtype=float).reshape(3)
    frame_p = orthonormal_frame(ds, p)
    if np.allclose(tau, 0.0):
        return p.copy(), frame_p
    v = frame_p @ tau
    center = exp_map(ds, p, v, n_steps=n_steps)
    frame = parallel_transport(ds, p, v, frame_p, n_steps=n_steps)
    return center, frame


class RayFan:
    """Radial geodesics from a common center, stored for Hermite queries.

    Rays are parameterized by arclength (unit g-speed), one per grid node
    direction.  Only the deviation xi(s) = gamma(s) - (center + s u) from the
    straight chord is integrated and stored: xi vanishes identically in flat
    space and is O(s^3 Gamma) in general, so integration roundoff never
    pollutes the leading part of the positions (which downstream spectral
    differentiation would amplify).  `positions_at(s)` reconstructs
    center + s u + xi(s) with cubic Hermite interpolation of xi.
    """

    def __init__(self, ds: InitialDataSet, center, frame, directions, s_max: float,
                 n_steps: int = 128):
        center = np.asarray(center, dtype=float).reshape(3)
        directions = np.asarray(directions, dtype=float)
        if s_max <= 0:
            raise ValueError("s_max must be positive")
        if s_max / n_steps < 1e-14:
            raise StepSizeUnderflow("ray step underflows double precision")
        self.ds = ds
        self.center = center
        self.frame = np.asarray(frame, dtype=float)
        self.s_max = float(s_max)
        self.n_steps = int(n_steps)

        n = directions.shape[0]
        h = self.s_max / n_steps
        u = directions @ self.frame.T  # chart components of unit initial velocities
        self._u = u
        xi = np.zeros((n, 3))
        dxi = np.zeros((n, 3))
        xis = np.empty((n, n_steps + 1, 3))
        dxis = np.empty((n, n_steps + 1, 3))
        xis[:, 0] = 0.0
        dxis[:, 0] = 0.0

        def rhs(s, xi, dxi):
            pos = center + s * u + xi
            vel = u + dxi
            gam = _gamma_at(ds, pos)
            return dxi, -np.einsum("...ajk,...j,...k->...a", gam, vel, vel)

        s = 0.0
        for j in range(n_steps):
            k1x, k1v = rhs(s, xi, dxi)
            k2x, k2v = rhs(s + 0.5 * h, xi + 0.5 * h * k1x, dxi + 0.5 * h * k1v)
            k3x, k3v = rhs(s + 0.5 * h, xi + 0.5 * h * k2x, dxi + 0.5 * h * k2v)
            k4x, k4v = rhs(s + h, xi + h * k3x, dxi + h * k3v)
            xi = xi + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            dxi = dxi + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
            s += h
            xis[:, j + 1] = xi
            dxis[:, j + 1] = dxi
            ds.check_chart(center + s * u + xi)
        self._xis = xis
        self._dxis = dxis
        self._h = h

    def offsets_at(self, s: np.ndarray) -> np.ndarray:
        """Chord-plus-deviation offsets s u + xi(s) from the center.

        Keeping the center out preserves full relative accuracy of the
        offsets even when the center coordinates are much larger than s.
        """
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > self.s_max * (1 + 1e-12)):
            raise ChartExceeded(
                f"requested radius outside the integrated ray range [0, {self.s_max:.4g}]")
        h = self._h
        j = np.clip((s / h).astype(int), 0, self.n_steps - 1)
        t = ((s - j * h) / h)[:, None]
        idx = np.arange(s.size)
        x0 = self._xis[idx, j]
        x1 = self._xis[idx, j + 1]
        v0 = self._dxis[idx, j]
        v1 = self._dxis[idx, j + 1]
        h00 = (1 + 2 * t) * (1 - t) ** 2
        h10 = t * (1 - t) ** 2
        h01 = t * t * (3 - 2 * t)
        h11 = t * t * (t - 1)
        xi = h00 * x0 + h * h10 * v0 + h01 * x1 + h * h11 * v1
        return s[:, None] * self._u + xi

    def positions_at(self, s: np.ndarray) -> np.ndarray:
        """Points at arclength s (one value per ray)."""
        return self.center + self.offsets_at(s)


_PAIR_I = np.array([0, 1, 2, 0, 0, 1])
_PAIR_J = np.array([0, 1, 2, 1, 2, 2])


class VariationBundle:
    """Exponential-map differentials along the rays of a graph sphere.

    For each node direction d and target radius s the bundle integrates the
    geodesic together with three Jacobi fields and their six second
    variations, yielding the pullback data of the normal-coordinate chart:
    point F(s d), differential DF (manifold x chart), and Hessian D2F.
    """

    def __init__(self, ds: InitialDataSet, center, frame, directions, radii,
                 n_steps: int = 64):
        center = np.asarray(center, dtype=float).reshape(3)
        directions = np.asarray(directions, dtype=float)
        radii = np.asarray(radii, dtype=float)
        n = directions.shape[0]
        if np.any(radii <= 0):
            raise ValueError("bundle radii must be positive (use the flat shortcut at r = 0)")
        frame = np.asarray(frame, dtype=float)

        h = radii / n_steps  # per-node step
        x = np.broadcast_to(center, (n, 3)).copy()
        v = directions @ frame.T
        A = np.zeros((n, 3, 3))   # A[:, i, :] = Jacobi field for chart direction e_i
        B = np.broadcast_to(frame.T, (n, 3, 3)).copy()  # B[:, i, :] = dA_i/ds
        C = np.zeros((n, 6, 3))
        D = np.zeros((n, 6, 3))

        def rhs(x, v, A, B, C, D):
            # Christoffel data contracted with the velocity as early as
            # possible; the full d^2 Gamma tensor is never materialized.
            g_inv = _inverse_metric(ds.metric(x))
            dg = _dg_of(ds, x)
            d2g = _d2g_of(ds, x)
            d3g = _d3g_of(ds, x)

            s = (np.einsum("njlk->nljk", dg) + np.einsum("nklj->nljk", dg) - dg)
            s_v = np.einsum("nljk,nk->nlj", s, v)
            s_vv = np.einsum("nlj,nj->nl", s_v, v)
            ds_ = (np.einsum("nmjlk->nmljk", d2g) + np.einsum("nmklj->nmljk", d2g)
                   - np.einsum("nmljk->nmljk", d2g))
            ds_v = np.einsum("nmljk,nk->nmlj", ds_, v)
            ds_vv = np.einsum("nmlj,nj->nml", ds_v, v)
            if d3g.any():
                t1 = np.einsum("nmqjlk,nj,nk->nmql", d3g, v, v, optimize=True)
                t3 = np.einsum("nmqljk,nj,nk->nmql", d3g, v, v, optimize=True)
                d2s_vv = 2.0 * t1 - t3
            else:
                d2s_vv = np.zeros_like(ds_)[..., 0]

            dginv = -np.einsum("nia,nmab,nbl->nmil", g_inv, dg, g_inv, optimize=True)

            gam = 0.5 * np.einsum("nal,nljk->najk", g_inv, s)
            gam_v = 0.5 * np.einsum("nal,nlj->naj", g_inv, s_v)
            gam_vv = 0.5 * np.einsum("nal,nl->na", g_inv, s_vv)
            dgam_v = 0.5 * (np.einsum("nmal,nlj->nmaj", dginv, s_v)
                            + np.einsum("nal,nmlj->nmaj", g_inv, ds_v))
            dgam_vv = 0.5 * (np.einsum("nmal,nl->nma", dginv, s_vv)
                             + np.einsum("nal,nml->nma", g_inv, ds_vv))

            # (d2 ginv)[m,q,i,l] s_vv[l] without materializing the rank-5 array
            u = np.einsum("nbl,nl->nb", g_inv, s_vv)
            dg_u = np.einsum("nqab,nb->nqa", dg, u)
            d2g_u = np.einsum("nmqab,nb->nmqa", d2g, u)
            dginv_s = np.einsum("nmbl,nl->nmb", dginv, s_vv)
            d2ginv_s = -(np.einsum("nmia,nqa->nmqi", dginv, dg_u)
                         + np.einsum("nia,nmqa->nmqi", g_inv, d2g_u)
                         + np.einsum("nia,nqab,nmb->nmqi", g_inv, dg, dginv_s, optimize=True))
            d2gam_vv = 0.5 * (d2ginv_s
                              + np.einsum("nmal,nql->nmqa", dginv, ds_vv)
                              + np.einsum("nqal,nml->nmqa", dginv, ds_vv)
                              + np.einsum("nal,nmql->nmqa", g_inv, d2s_vv))

            dv = -gam_vv
            dB = -(np.einsum("nma,nim->nia", dgam_vv, A)
                   + 2.0 * np.einsum("naj,nij->nia", gam_v, B))
            A1 = A[:, _PAIR_I]
            A2 = A[:, _PAIR_J]
            B1 = B[:, _PAIR_I]
            B2 = B[:, _PAIR_J]
            dD = -(np.einsum("nmqa,npm,npq->npa", d2gam_vv, A1, A2, optimize=True)
                   + np.einsum("nma,npm->npa", dgam_vv, C)
                   + 2.0 * np.einsum("nmaj,npm,npj->npa", dgam_v, A2, B1, optimize=True)
                   + 2.0 * np.einsum("nmaj,npm,npj->npa", dgam_v, A1, B2, optimize=True)
                   + 2.0 * np.einsum("naj,npj->npa", gam_v, D)
                   + 2.0 * np.einsum("najk,npj,npk->npa", gam, B1, B2, optimize=True))
            return v, dv, B, dB, D, dD

        hh = h[:, None]
        hhh = h[:, None, None]
        for _ in range(n_steps):
            k1 = rhs(x, v, A, B, C, D)
            k2 = rhs(x + 0.5 * hh * k1[0], v + 0.5 * hh * k1[1], A + 0.5 * hhh * k1[2],
                     B + 0.5 * hhh * k1[3], C + 0.5 * hhh * k1[4], D + 0.5 * hhh * k1[5])
            k3 = rhs(x + 0.5 * hh * k2[0], v + 0.5 * hh * k2[1], A + 0.5 * hhh * k2[2],
                     B + 0.5 * hhh * k2[3], C + 0.5 * hhh * k2[4], D + 0.5 * hhh * k2[5])
            k4 = rhs(x + hh * k3[0], v + hh * k3[1], A + hhh * k3[2],
                     B + hhh * k3[3], C + hhh * k3[4], D + hhh * k3[5])
            x = x + (hh / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            v = v + (hh / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            A = A + (hhh / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            B = B + (hhh / 6.0) * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3])
            C = C + (hhh / 6.0) * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4])
            D = D + (hhh / 6.0) * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5])
            ds.check_chart(x)

        self.points = x
        # DF[:, a, i] = (A_i(s))^a / s ; D2F[:, a, i, j] = (C_ij(s))^a / s^2
        self.df = np.einsum("nia->nai", A) / radii[:, None, None]
        d2f = np.zeros((n, 3, 3, 3))
        s2 = radii ** 2
        for p, (i, j) in enumerate(zip(_PAIR_I, _PAIR_J)):
            d2f[:, :, i, j] = C[:, p] / s2[:, None]
            d2f[:, :, j, i] = C[:, p] / s2[:, None]
        self.d2f = d2f
