"""Discrete DG residuals and Jacobians.

Solution arrays are element-major: scalar fields have shape (Ne, Np) and
conservative fields (Ne, Np, 4).  The flattened global index of
``U[e, i, v]`` is ``(e * Np + i) * nv + v``, so each element owns one
contiguous block of the Jacobian.

Face quantities are stored for every element-face pair, shape
(Ne, nfaces, Nfq, ...), ordered along that element's own face parameter.
The trace seen from the neighbour is the neighbour's face array reversed
along the point axis.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .boundary import (BoundaryConfigurationError, CompressibleBC, Dirichlet, Neumann)
from .geometry import FROM_GEOMETRY, compute_geometry_maps
from .physics import (GasModel, NonphysicalStateError, inviscid_flux, inviscid_flux_jacobian,
                      roe_pike_flux, viscous_flux)

ANALYTIC = "analytic"
FINITE_DIFFERENCE = "fd"

IP_PENALTY = 10.0
BR2_ETA = {"tri": 3.0, "quad": 4.0}


# --------------------------------------------------------------------------
# Shared operators


class Discretization:
    """Element operators of one (mesh, reference element, normal mode) triple.

    Attributes of note: ``G`` physical basis gradients at volume points
    (Ne, Nq, 2, Np); ``wJ`` weights times J_v (Ne, Nq); ``Minv`` inverse
    mass matrices; ``Gf``/``wJf``/``normal``/``x_face`` the face analogues;
    ``lift`` (Ne, nf, Np, 2, Nfq) maps face values to the coefficient of
    M^-1 int phi n (.) dGamma; ``D`` (Ne, 2, Np, Np) the projected gradient.
    """

    def __init__(self, mesh, ref, maps=None, normal_mode=FROM_GEOMETRY):
        if maps is None:
            maps = compute_geometry_maps(mesh, ref, normal_mode)
        self.mesh, self.ref, self.maps = mesh, ref, maps
        ne, nf = mesh.num_elements, ref.num_faces
        self.ne, self.nf = ne, nf
        self.np_ = ref.num_nodes
        self.B = np.asarray(ref.vol_basis)
        self.Bf = np.asarray(ref.face_basis)
        self.G = np.einsum("eqad,aqn->eqdn", maps.inv_jac, ref.vol_grad)
        self.wJ = ref.vol_weights[None, :] * maps.jac_det
        self.Gf = np.einsum("efqad,faqn->efqdn", maps.face_inv_jac, ref.face_grad)
        self.wJf = ref.face_weights[None, None, :] * maps.area_elem
        self.normal = maps.normal
        self.x_vol = maps.x_vol
        self.x_face = maps.x_face
        self.M = np.einsum("eq,qn,qm->enm", self.wJ, self.B, self.B)
        self.Minv = np.linalg.inv(self.M)
        self.lift = np.einsum("enm,fsm,efs,efsd->efnds", self.Minv, self.Bf, self.wJf, self.normal)
        self.D = np.einsum("enl,eq,ql,eqdm->ednm", self.Minv, self.wJ, self.B, self.G)
        self.face_length = self.wJf.sum(axis=2)

        self.nbr_e = -np.ones((ne, nf), dtype=np.int64)
        self.nbr_f = -np.ones((ne, nf), dtype=np.int64)
        for eL, fL, eR, fR, orient in mesh.interior_faces:
            if orient != 1:
                raise ValueError("face orientation mismatch")
            self.nbr_e[eL, fL], self.nbr_f[eL, fL] = eR, fR
            self.nbr_e[eR, fR], self.nbr_f[eR, fR] = eL, fL
        flat_nbr = (self.nbr_e * nf + self.nbr_f).ravel()
        self.int_slots = np.nonzero(flat_nbr >= 0)[0]
        self.partner = flat_nbr[self.int_slots]
        self.bnd_groups = {}
        for (e, f), tag in zip(mesh.boundary_faces, mesh.boundary_tags):
            self.bnd_groups.setdefault(str(tag), []).append(e * nf + f)
        self.bnd_groups = {t: np.array(v, dtype=np.int64) for t, v in self.bnd_groups.items()}
        self.is_interior = (self.nbr_e >= 0)
        # neighbour face basis seen from this side, (Ne, nf, Nfq, Np)
        nfs = np.where(self.nbr_f >= 0, self.nbr_f, 0)
        self.Bf_other = self.Bf[nfs][:, :, ::-1, :] * self.is_interior[:, :, None, None]

    # ---- traces
    def trace(self, U):
        return np.einsum("fsn,en...->efs...", self.Bf, U)

    def other_side(self, T):
        """Neighbour trace at each element-face pair; boundary slots zero."""
        ne, nf = self.ne, self.nf
        flat = T.reshape((ne * nf,) + T.shape[2:])
        out = np.zeros_like(flat)
        out[self.int_slots] = flat[self.partner][:, ::-1]
        return out.reshape(T.shape)

    def check_tags(self, bcs):
        missing = [t for t in self.bnd_groups if t not in bcs]
        if missing:
            raise BoundaryConfigurationError(f"no boundary condition for tag(s) {missing}")

    def block_neighbors(self):
        return self.nbr_e


# --------------------------------------------------------------------------
# Block-sparse Jacobian


class JacobianMatrix:
    """Diagonal blocks (Ne, b, b) and face-neighbour blocks (Ne, nf, b, b).

    ``nbr[e, f]`` is the column element of ``off[e, f]`` (-1 on boundary
    faces, whose blocks are zero).
    """

    def __init__(self, diag, off, nbr):
        self.diag = np.ascontiguousarray(diag)
        self.off = np.ascontiguousarray(off)
        self.nbr = np.asarray(nbr)
        self.ne, self.bs = diag.shape[0], diag.shape[1]
        self.shape = (self.ne * self.bs, self.ne * self.bs)
        self._mask = (self.nbr >= 0)
        self._safe = np.where(self._mask, self.nbr, 0)

    def matvec(self, x):
        X = np.asarray(x).reshape(self.ne, self.bs)
        y = np.einsum("eij,ej->ei", self.diag, X)
        Xn = X[self._safe] * self._mask[..., None]
        y += np.einsum("efij,efj->ei", self.off, Xn)
        return y.ravel()

    __matmul__ = matvec

    def to_bsr(self):
        rows = []
        data = []
        indptr = [0]
        for e in range(self.ne):
            cols = [e] + [int(c) for c in self.nbr[e] if c >= 0]
            blocks = [self.diag[e]] + [self.off[e, f] for f in range(self.nbr.shape[1]) if self.nbr[e, f] >= 0]
            order = np.argsort(cols)
            rows.extend(np.array(cols)[order])
            data.extend([blocks[i] for i in order])
            indptr.append(len(rows))
        return sp.bsr_matrix((np.array(data), np.array(rows), np.array(indptr)), shape=self.shape)

    def to_csr(self):
        return self.to_bsr().tocsr()

    def to_dense(self):
        return self.to_bsr().toarray()

    def negated(self):
        return JacobianMatrix(-self.diag, -self.off, self.nbr)


def _nbr_blocks(disc, nv):
    np_ = disc.np_
    return (np.zeros((disc.ne, np_, nv, np_, nv)), np.zeros((disc.ne, disc.nf, np_, nv, np_, nv)))


def _pack(disc, diag, off):
    ne, nf = disc.ne, disc.nf
    b = diag.shape[1] * diag.shape[2]
    return JacobianMatrix(diag.reshape(ne, b, b), off.reshape(ne, nf, b, b), disc.nbr_e)


# --------------------------------------------------------------------------
# Poisson (interior penalty, mixed form)


class PoissonSystem:
    """Mixed-form Poisson problem lap u = s with interior-penalty traces.

    u* = {u}, q* = {grad u} - tau [[u]], tau = ``eta`` k^2 / h_f.
    Dirichlet faces use u* = g and the penalised one-sided flux; Neumann
    faces use u* = u and q*.n = g_n.
    """

    nv = 1
    is_linear = True

    def __init__(self, disc: Discretization, bcs, source, eta=IP_PENALTY):
        disc.check_tags(bcs)
        self.disc, self.bcs, self.source = disc, bcs, source
        self.tau = eta * disc.ref.k ** 2 / disc.face_length  # (Ne, nf)
        self.s_vol = np.asarray(source(disc.x_vol))
        self._matrix = None
        self._b = None

    @property
    def size(self):
        return self.disc.ne * self.disc.np_

    def _face_terms(self, u):
        d = self.disc
        uf = d.trace(u)
        uo = d.other_side(uf)
        gf = np.einsum("efsdn,en->efsd", d.Gf, u)
        go = d.other_side(gf)
        n = d.normal
        star = 0.5 * (uf + uo)
        gn = 0.5 * np.einsum("efsd,efsd->efs", gf + go, n)
        qn = gn - self.tau[..., None] * (uf - uo)
        shape = uf.shape
        star, qn = star.reshape(-1, shape[-1]), qn.reshape(-1, shape[-1])
        uf_flat = uf.reshape(-1, shape[-1])
        gfn = np.einsum("efsd,efsd->efs", gf, n).reshape(-1, shape[-1])
        tau = np.broadcast_to(self.tau[..., None], shape).reshape(-1, shape[-1])
        for tag, idx in d.bnd_groups.items():
            bc = self.bcs[tag]
            x = d.x_face.reshape(-1, shape[-1], 2)[idx]
            if isinstance(bc, Dirichlet):
                g = bc.g(x)
                star[idx] = g
                qn[idx] = gfn[idx] - tau[idx] * (uf_flat[idx] - g)
            elif isinstance(bc, Neumann):
                star[idx] = uf_flat[idx]
                qn[idx] = bc.g_n(x)
            else:
                raise BoundaryConfigurationError(f"tag {tag!r}: not a Poisson condition")
        return uf, star.reshape(shape), qn.reshape(shape)

    def gradient(self, u):
        """q_h coefficients (Ne, Np, 2) from the strong-form gradient equation."""
        d = self.disc
        uf, star, _ = self._face_terms(u)
        return self._gradient(u, uf, star)

    def _gradient(self, u, uf, star):
        d = self.disc
        q = np.einsum("ednm,em->end", d.D, u)
        q += np.einsum("efnds,efs->end", d.lift, star - uf)
        return q

    def residual(self, u):
        d = self.disc
        u = np.asarray(u).reshape(d.ne, d.np_)
        uf, star, qn = self._face_terms(u)
        q = self._gradient(u, uf, star)
        qv = np.einsum("qn,end->eqd", d.B, q)
        R = -np.einsum("eq,eqdn,eqd->en", d.wJ, d.G, qv)
        R += np.einsum("efs,fsn,efs->en", d.wJf, d.Bf, qn)
        R -= np.einsum("eq,qn,eq->en", d.wJ, d.B, self.s_vol)
        return R

    def jacobian(self, u=None, mode=ANALYTIC):
        if mode == FINITE_DIFFERENCE:
            u0 = np.zeros((self.disc.ne, self.disc.np_)) if u is None else u
            return finite_difference_jacobian(self.residual, u0, self.disc)
        if self._matrix is None:
            self._matrix = self._assemble()
        return self._matrix

    def _assemble(self):
        d = self.disc
        ne, nf, P = d.ne, d.nf, d.np_
        n = d.normal
        # kind of each face slot: 0 interior, 1 Dirichlet, 2 Neumann
        kind = np.zeros((ne, nf), dtype=int)
        for tag, idx in d.bnd_groups.items():
            kind.flat[idx] = 1 if isinstance(self.bcs[tag], Dirichlet) else 2
        interior = (kind == 0)[..., None]
        dirich = (kind == 1)[..., None]
        # u* - uf sensitivities (Ne, nf, Nfq, P)
        ds_self = (-0.5 * interior - 1.0 * dirich)[..., None] * d.Bf[None]
        ds_oth = 0.5 * interior[..., None] * d.Bf_other
        # q coefficient sensitivities (Ne, P, 2, P)
        dq_self = np.transpose(d.D, (0, 2, 1, 3)) + np.einsum("efnds,efsm->endm", d.lift, ds_self)
        dq_oth = np.einsum("efnds,efsm->efndm", d.lift, ds_oth)
        K = np.einsum("eq,eqdn,ql->enld", d.wJ, d.G, d.B)  # volume: -K q
        diag = -np.einsum("enld,eldm->enm", K, dq_self)
        off = -np.einsum("enld,efldm->efnm", K, dq_oth)
        # q*.n sensitivities
        gfn = np.einsum("efsdn,efsd->efsn", d.Gf, n)
        gfn_oth = d.other_side(np.einsum("efsdn,efsd->efsn", d.Gf, -n))  # neighbour grad . n_own
        # other_side reverses the neighbour's own face data; partner normals are -n
        tau = self.tau[..., None, None]
        dqn_self = np.where(interior[..., None], 0.5 * gfn - tau * d.Bf[None],
                            np.where(dirich[..., None], gfn - tau * d.Bf[None], 0.0))
        dqn_oth = np.where(interior[..., None], 0.5 * gfn_oth + tau * d.Bf_other, 0.0)
        diag += np.einsum("efs,fsn,efsm->enm", d.wJf, d.Bf, dqn_self)
        off += np.einsum("efs,fsn,efsm->efnm", d.wJf, d.Bf, dqn_oth)
        return JacobianMatrix(diag, off, d.nbr_e)

    def rhs(self):
        """b with residual(u) = J u - b."""
        return -self.residual(np.zeros((self.disc.ne, self.disc.np_))).ravel()


# --------------------------------------------------------------------------
# Compressible flow (Euler weak form, Navier-Stokes with BR2)


def _cs_derivative(fun, X, h=1e-30):
    """Complex-step derivative of ``fun`` along the last axis of X -> (..., out..., n)."""
    X = np.asarray(X)
    cols = []
    for j in range(X.shape[-1]):
        Xc = X.astype(complex)
        Xc[..., j] += 1j * h
        cols.append(np.imag(fun(Xc)) / h)
    return np.stack(cols, axis=-1)


class CompressibleSystem:
    """Steady compressible flow residual and its analytic Jacobian.

    With ``gas.mu == 0`` (or ``viscous=False``) this is the Euler weak form
    with Roe-Pike face fluxes.  Otherwise the gradient equation with trace
    W* = {W} defines Q_h = Q0 + sum_f R_f (projected gradient plus face
    liftings) and the viscous face flux is the BR2 average
    {F^v(W, Q0 + eta R_f)}.
    """

    nv = 4

    def __init__(self, disc: Discretization, bcs, gas: GasModel, viscous=None, eta=None):
        disc.check_tags(bcs)
        for tag, bc in bcs.items():
            if not isinstance(bc, CompressibleBC):
                raise BoundaryConfigurationError(f"tag {tag!r}: not a compressible condition")
        self.disc, self.bcs, self.gas = disc, bcs, gas
        self.viscous = (gas.mu > 0) if viscous is None else bool(viscous)
        self.eta = BR2_ETA[disc.mesh.kind] if eta is None else float(eta)
        ne, nf, nfq = disc.ne, disc.nf, len(disc.ref.face_points)
        self.heat_mask = np.ones((ne * nf, nfq))
        for tag, idx in disc.bnd_groups.items():
            self.heat_mask[idx] = bcs[tag].heat_mask
        self.heat_mask = self.heat_mask.reshape(ne, nf, nfq)

    @property
    def size(self):
        return self.disc.ne * self.disc.np_ * 4

    # ---- helpers over boundary groups
    def _bnd(self, T):
        d = self.disc
        return T.reshape((d.ne * d.nf,) + T.shape[2:])

    def _apply_bc(self, method, Wf, out):
        d = self.disc
        Wflat, oflat = self._bnd(Wf), self._bnd(out)
        nflat, xflat = self._bnd(d.normal), self._bnd(d.x_face)
        for tag, idx in d.bnd_groups.items():
            bc = self.bcs[tag]
            oflat[idx] = getattr(bc, method)(Wflat[idx], nflat[idx], xflat[idx], self.gas)
        return out

    def _fields(self, U, check=True):
        d = self.disc
        U = np.asarray(U).reshape(d.ne, d.np_, 4)
        Wv = np.einsum("qn,env->eqv", d.B, U)
        Wf = d.trace(U)
        if check:
            for name, W in (("volume", Wv), ("face", Wf)):
                rho = np.real(W[..., 0])
                p = np.real(W[..., 3] - 0.5 * (W[..., 1] ** 2 + W[..., 2] ** 2) / W[..., 0])
                if np.any(rho <= 0) or np.any(p <= 0):
                    bad = np.argwhere((rho <= 0) | (p <= 0))[0]
                    raise NonphysicalStateError(f"nonphysical state at {name} point of element {bad[0]}",
                                                state=np.real(W[tuple(bad)]))
        Wo = self._apply_bc("ghost", Wf, d.other_side(Wf))
        f = dict(U=U, Wv=Wv, Wf=Wf, Wo=Wo)
        if self.viscous:
            Wb = self._apply_bc("boundary_state", Wf, 0.5 * (Wf + Wo))
            delta = Wb - Wf
            Q0 = np.einsum("ednm,emv->envd", d.D, U)
            Rl = np.einsum("efnds,efsv->efnvd", d.lift, delta)
            Qc = Q0 + Rl.sum(axis=1)
            Qv = np.einsum("qn,envd->eqvd", d.B, Qc)
            Qown = np.einsum("fsn,efnvd->efsvd", d.Bf, Q0[:, None] + self.eta * Rl)
            Qoth = d.other_side(Qown)
            f.update(Wb=Wb, Q0=Q0, Rl=Rl, Qv=Qv, Qown=Qown, Qoth=Qoth)
        return f

    def _face_flux(self, f, check=True):
        d, gas = self.disc, self.gas
        Fn = roe_pike_flux(f["Wf"], f["Wo"], d.normal, gas, check=check)
        if self.viscous:
            n = d.normal
            own = viscous_flux(f["Wf"], f["Qown"], gas)
            oth = viscous_flux(f["Wo"], f["Qoth"], gas)
            Fv = 0.5 * np.einsum("efsvd,efsd->efsv", own + oth, n)
            vb = viscous_flux(f["Wb"], f["Qown"], gas, heat_mask=self.heat_mask)
            Fvb = np.einsum("efsvd,efsd->efsv", vb, n)
            Fv = np.where(d.is_interior[..., None, None], Fv, Fvb)
            Fn = Fn - Fv
        return Fn

    def residual(self, U, check=True):
        d, gas = self.disc, self.gas
        f = self._fields(U, check=check)
        F = inviscid_flux(f["Wv"], gas, check=False)
        if self.viscous:
            F = F - viscous_flux(f["Wv"], f["Qv"], gas)
        R = -np.einsum("eq,eqdn,eqvd->env", d.wJ, d.G, F)
        R = R + np.einsum("efs,fsn,efsv->env", d.wJf, d.Bf, self._face_flux(f, check=False))
        return R

    # ---- Jacobian
    def jacobian(self, U, mode=ANALYTIC):
        if mode == FINITE_DIFFERENCE:
            return finite_difference_jacobian(self.residual, U, self.disc)
        if mode != ANALYTIC:
            raise ValueError(f"unknown Jacobian mode {mode!r}")
        return self._analytic_jacobian(U)

    def _analytic_jacobian(self, U):
        d, gas = self.disc, self.gas
        f = self._fields(U)
        n = d.normal
        ne, nf, P = d.ne, d.nf, d.np_
        I4 = np.eye(4)
        diag, off = _nbr_blocks(d, 4)

        # volume flux: closed-form inviscid part
        AW = inviscid_flux_jacobian(f["Wv"], gas)  # (e,q,v,d,w)
        if self.viscous:
            Qv = f["Qv"]
            AW = AW - _cs_derivative(lambda W: viscous_flux(W, Qv, gas), f["Wv"])
            Wv = f["Wv"]
            AQ = -_cs_derivative(lambda Qf: viscous_flux(Wv, Qf.reshape(Qf.shape[:-1] + (4, 2)), gas),
                                 Qv.reshape(Qv.shape[:-2] + (8,)))
            AQ = AQ.reshape(AQ.shape[:-1] + (4, 2))  # (e,q,v,d,w,c)
        GW = np.einsum("eq,eqdn->eqdn", d.wJ, d.G)
        diag -= np.einsum("eqdn,eqvdw,qm->envmw", GW, AW, d.B, optimize=True)

        # face flux kernels
        is_int = d.is_interior[..., None, None, None]
        dRL = _cs_derivative(lambda W: roe_pike_flux(W, f["Wo"], n, gas, check=False), f["Wf"])
        dRR = _cs_derivative(lambda W: roe_pike_flux(f["Wf"], W, n, gas, check=False), f["Wo"])
        if not self.viscous:
            dFo = np.where(is_int, dRR, 0.0)
            dFs = dRL + self._boundary_chain(f, dRR, "ghost")
        else:
            def vdot(W, Q):
                return np.einsum("efsvd,efsd->efsv", viscous_flux(W, Q, gas), n)

            Wf, Wo, Wb = f["Wf"], f["Wo"], f["Wb"]
            Qown, Qoth = f["Qown"], f["Qoth"]
            q8 = Qown.shape[:-2] + (8,)
            dV_W_own = _cs_derivative(lambda W: vdot(W, Qown), Wf)
            dV_W_oth = _cs_derivative(lambda W: vdot(W, Qoth), Wo)
            dV_Q_own = _cs_derivative(lambda Q: vdot(Wf, Q.reshape(Qown.shape)), Qown.reshape(q8))
            dV_Q_oth = _cs_derivative(lambda Q: vdot(Wo, Q.reshape(Qown.shape)), Qoth.reshape(q8))
            hm = self.heat_mask
            dVb_W = _cs_derivative(lambda W: np.einsum(
                "efsvd,efsd->efsv", viscous_flux(W, Qown, gas, heat_mask=hm), n), Wb)
            dVb_Q = _cs_derivative(lambda Q: np.einsum(
                "efsvd,efsd->efsv", viscous_flux(Wb, Q.reshape(Qown.shape), gas, heat_mask=hm), n),
                Qown.reshape(q8))
            dWb = self._boundary_jac(f, "boundary_state")  # (e,f,s,w,w') boundary slots
            dG = self._boundary_jac(f, "ghost")
            # total derivatives of the face flux with respect to own/other traces and gradients
            dFs = np.where(is_int, dRL - 0.5 * dV_W_own,
                           dRL + np.einsum("efsvw,efswx->efsvx", dRR, dG)
                           - np.einsum("efsvw,efswx->efsvx", dVb_W, dWb))
            dFo = np.where(is_int, dRR - 0.5 * dV_W_oth, 0.0)
            shp = dV_Q_own.shape[:-1] + (4, 2)
            dFQs = np.where(is_int[..., None], -0.5 * dV_Q_own.reshape(shp), -dVb_Q.reshape(shp))
            dFQo = np.where(is_int[..., None], -0.5 * dV_Q_oth.reshape(shp), 0.0)

            # sensitivities of the trace difference delta = W* - W_own
            dd_self = np.where(is_int, -0.5 * I4, dWb - I4)
            dd_oth = np.where(is_int, 0.5 * I4, 0.0)
            # lifted coefficients R_f (e,f,l,w,c) w.r.t. own / neighbour coefficients (m,x)
            dR_self = np.einsum("eflcs,efswx,fsm->eflwcmx", d.lift, dd_self, d.Bf, optimize=True)
            dR_oth = np.einsum("eflcs,efswx,efsm->eflwcmx", d.lift, dd_oth, d.Bf_other, optimize=True)
            dQ0 = np.einsum("eclm,wx->elwcmx", d.D, I4)
            # volume gradient Q = Q0 + sum_f R_f
            dQv_self = np.einsum("ql,elwcmx->eqwcmx", d.B, dQ0 + dR_self.sum(axis=1), optimize=True)
            dQv_oth = np.einsum("ql,eflwcmx->efqwcmx", d.B, dR_oth, optimize=True)
            T = np.einsum("eqdn,eqvdwc->eqnvwc", GW, AQ, optimize=True)
            diag -= np.einsum("eqnvwc,eqwcmx->envmx", T, dQv_self, optimize=True)
            off -= np.einsum("eqnvwc,efqwcmx->efnvmx", T, dQv_oth, optimize=True)
            # face gradients Q0 + eta R_f on the own side and as seen from the neighbour
            dQo_self = np.einsum("fsl,eflwcmx->efswcmx", d.Bf, dQ0[:, None] + self.eta * dR_self,
                                 optimize=True)
            dQo_oth = self.eta * np.einsum("fsl,eflwcmx->efswcmx", d.Bf, dR_oth, optimize=True)
            # the neighbour's own-side gradient depends on its self block (our nbr) and on us
            dQn_nbr = d.other_side(dQo_self)
            dQn_self = d.other_side(dQo_oth)
            WB = np.einsum("efs,fsn->efsn", d.wJf, d.Bf)
            diag += np.einsum("efsn,efsvwc,efswcmx->envmx", WB, dFQs, dQo_self, optimize=True)
            diag += np.einsum("efsn,efsvwc,efswcmx->envmx", WB, dFQo, dQn_self, optimize=True)
            off += np.einsum("efsn,efsvwc,efswcmx->efnvmx", WB, dFQs, dQo_oth, optimize=True)
            off += np.einsum("efsn,efsvwc,efswcmx->efnvmx", WB, dFQo, dQn_nbr, optimize=True)

        WB = np.einsum("efs,fsn->efsn", d.wJf, d.Bf)
        diag += np.einsum("efsn,efsvw,fsm->envmw", WB, dFs, d.Bf, optimize=True)
        off += np.einsum("efsn,efsvw,efsm->efnvmw", WB, dFo, d.Bf_other, optimize=True)
        return _pack(d, diag, off)

    def _boundary_jac(self, f, method):
        """d(method)/dW_own at boundary slots (e,f,s,4,4); zero elsewhere."""
        d = self.disc
        nfq = f["Wf"].shape[2]
        out = np.zeros((d.ne * d.nf, nfq, 4, 4))
        Wflat = self._bnd(f["Wf"])
        nflat, xflat = self._bnd(d.normal), self._bnd(d.x_face)
        for tag, idx in d.bnd_groups.items():
            bc = self.bcs[tag]
            out[idx] = _cs_derivative(lambda W: getattr(bc, method)(W, nflat[idx], xflat[idx], self.gas),
                                      Wflat[idx])
        return out.reshape(d.ne, d.nf, nfq, 4, 4)

    def _boundary_chain(self, f, dRR, method):
        dG = self._boundary_jac(f, method)
        return np.einsum("efsvw,efswx->efsvx", dRR * (~self.disc.is_interior)[..., None, None, None], dG)


# --------------------------------------------------------------------------
# Finite-difference Jacobian


def distance2_coloring(nbr):
    """Greedy colouring in which elements sharing a face neighbour differ."""
    ne = nbr.shape[0]
    adj = [set(int(c) for c in row if c >= 0) for row in nbr]
    color = -np.ones(ne, dtype=int)
    for e in range(ne):
        ring = set(adj[e])
        for a in adj[e]:
            ring |= adj[a]
        ring.discard(e)
        used = {color[c] for c in ring if color[c] >= 0}
        c = 0
        while c in used:
            c += 1
        color[e] = c
    return color


def finite_difference_jacobian(residual_fn, U, disc: Discretization, eps=None):
    """One-sided coloured differences with step sqrt(eps) (1 + |coefficient|)."""
    U = np.array(U, dtype=float)
    shape = U.shape
    ne, P = disc.ne, disc.np_
    nv = 1 if U.ndim == 2 else shape[2]
    Uf = U.reshape(ne, P * nv)
    R0 = np.asarray(residual_fn(U)).reshape(ne, P * nv)
    b = P * nv
    diag = np.zeros((ne, b, b))
    off = np.zeros((ne, disc.nf, b, b))
    color = distance2_coloring(disc.nbr_e)
    root = np.sqrt(np.finfo(float).eps if eps is None else eps)
    for c in range(color.max() + 1):
        members = np.nonzero(color == c)[0]
        for j in range(b):
            step = root * (1.0 + np.abs(Uf[members, j]))
            Up = Uf.copy()
            Up[members, j] += step
            dR = (np.asarray(residual_fn(Up.reshape(shape))).reshape(ne, b) - R0)
            col = np.full(ne, np.nan)
            col[members] = step
            diag[members, :, j] = dR[members] / step[:, None]
            for fi in range(disc.nf):
                nb = disc.nbr_e[:, fi]
                rows = np.nonzero((nb >= 0) & (color[np.maximum(nb, 0)] == c))[0]
                if len(rows):
                    off[rows, fi, :, j] = dR[rows] / col[nb[rows]][:, None]
    return JacobianMatrix(diag, off, disc.nbr_e)
