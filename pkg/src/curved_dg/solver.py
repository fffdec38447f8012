"""Newton iteration with restarted GMRES / CG and block preconditioners."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .physics import NonphysicalStateError

log = logging.getLogger(__name__)

CG = "cg"
GMRES = "gmres"
NONE = "none"
BLOCK_JACOBI = "block_jacobi"
ILU0 = "ilu0"
LU = "lu"
AUTO = "auto"
# below this many unknowns a direct factorisation is cheaper than fighting ILU(0)
AUTO_LU_LIMIT = 40000
LINE_SEARCH = "line_search"
PSEUDO_TRANSIENT = "pseudo_transient"


class LinearSolverBreakdown(RuntimeError):
    pass


class NotSPDError(LinearSolverBreakdown):
    pass


class SingularBlockError(np.linalg.LinAlgError):
    pass


class NewtonFailure(RuntimeError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass
class NewtonConfig:
    abs_tol: float = 1e-12
    rel_tol: float = 1e-12
    max_newton: int = 50
    linear: str = GMRES
    restart: int = 60
    linear_tol: float = 1e-4
    final_linear_tol: float = 1e-10
    max_linear_iters: int = 2000
    preconditioner: str = ILU0
    globalization: str = LINE_SEARCH
    cfl0: float = 10.0
    cfl_growth: float = 2.0
    jacobian_mode: str = "analytic"

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.linear_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.restart < 1:
            raise ValueError("restart must be >= 1")


@dataclass
class SolveReport:
    converged: bool = False
    newton_iterations: int = 0
    residual_history: list = field(default_factory=list)
    linear_iterations: list = field(default_factory=list)
    wall_time: float = 0.0
    message: str = ""

    def as_dict(self):
        return {
            "converged": self.converged,
            "newton_iterations": self.newton_iterations,
            "residual_history": [float(r) for r in self.residual_history],
            "linear_iterations": [int(i) for i in self.linear_iterations],
            "wall_time": self.wall_time,
            "message": self.message,
        }


# --------------------------------------------------------------------------
# Krylov methods


def _as_op(A):
    if callable(A):
        return A
    if hasattr(A, "matvec"):
        return A.matvec
    return lambda x: A @ x


def gmres(matvec, rhs, m=60, tol=1e-10, precond=None, x0=None, max_iters=2000, info=None):
    """Restarted GMRES(m) with right preconditioning.

    Convergence is judged on the recomputed true residual
    ||b - A x|| <= tol ||b||.  Three consecutive restarts without progress
    raise :class:`LinearSolverBreakdown`.
    """
    A = _as_op(matvec)
    M = (lambda v: v) if precond is None else _as_op(precond)
    b = np.asarray(rhs, dtype=float)
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0:
        return np.zeros_like(b)
    r = b - A(x)
    rnorm = np.linalg.norm(r)
    total = 0
    stalls = 0
    V = None
    while True:
        if rnorm <= tol * bnorm:
            break
        if total >= max_iters:
            raise LinearSolverBreakdown(f"gmres: no convergence in {max_iters} iterations "
                                        f"(relative residual {rnorm / bnorm:.3e})")
        if V is None:
            V = np.zeros((m + 1, b.size))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = rnorm
        V[0] = r / rnorm
        j_done = 0
        for j in range(m):
            # copy: an operator may hand back its own input
            w = np.array(A(M(V[j])), dtype=float)
            # classical Gram-Schmidt, applied twice
            Vj = V[:j + 1]
            h = Vj @ w
            w -= h @ Vj
            h2 = Vj @ w
            w -= h2 @ Vj
            H[:j + 1, j] = h + h2
            H[j + 1, j] = np.linalg.norm(w)
            if H[j + 1, j] > 1e-14 * abs(H[j, j]) + 1e-300:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            den = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / den, H[j + 1, j] / den
            H[j, j] = den
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            j_done = j + 1
            total += 1
            if abs(g[j + 1]) <= 0.5 * tol * bnorm or total >= max_iters:
                break
            if H[j, j] == 0:
                break
        y = sla.solve_triangular(H[:j_done, :j_done], g[:j_done])
        x = x + M(y @ V[:j_done])
        r = b - A(x)
        new = np.linalg.norm(r)
        stalls = stalls + 1 if new > 0.999 * rnorm else 0
        rnorm = new
        if stalls >= 3:
            raise LinearSolverBreakdown(f"gmres: stagnation over 3 restarts "
                                        f"(relative residual {rnorm / bnorm:.3e})")
    if info is not None:
        info["iterations"] = total
        info["residual"] = rnorm / bnorm
    return x


def cg(matvec, rhs, tol=1e-10, precond=None, x0=None, max_iters=None, info=None):
    """Preconditioned conjugate gradients for SPD operators.

    A nonpositive curvature p.Ap raises :class:`NotSPDError`.
    """
    A = _as_op(matvec)
    M = (lambda v: v) if precond is None else _as_op(precond)
    b = np.asarray(rhs, dtype=float)
    n = b.size
    max_iters = 10 * n if max_iters is None else max_iters
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    r = b - A(x)
    z = M(r)
    p = z.copy()
    rz = r @ z
    it = 0
    while np.linalg.norm(r) > tol * bnorm:
        if it >= max_iters:
            raise LinearSolverBreakdown(f"cg: no convergence in {max_iters} iterations")
        Ap = A(p)
        curv = p @ Ap
        if curv <= 0:
            raise NotSPDError("cg: operator not SPD (negative curvature)")
        alpha = rz / curv
        x += alpha * p
        r -= alpha * Ap
        # drift correction keeps the true residual honest
        if it % 50 == 49:
            r = b - A(x)
        z = M(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    r = b - A(x)
    if np.linalg.norm(r) > tol * bnorm * 10:
        raise LinearSolverBreakdown("cg: true residual above tolerance")
    if info is not None:
        info["iterations"] = it
        info["residual"] = np.linalg.norm(r) / bnorm
    return x


# --------------------------------------------------------------------------
# Preconditioners


class BlockJacobi:
    """Inverse of the element diagonal blocks."""

    def __init__(self, jac):
        diag = jac.diag
        self.bs = diag.shape[1]
        try:
            lu = [sla.lu_factor(b, check_finite=True) for b in diag]
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise SingularBlockError(str(exc)) from exc
        for e, (lu_e, _) in enumerate(lu):
            d = np.abs(np.diag(lu_e))
            if d.min() <= 1e-14 * max(d.max(), 1e-300):
                raise SingularBlockError(f"singular diagonal block in element {e}")
        self.inv = np.stack([sla.lu_solve(f, np.eye(self.bs)) for f in lu])

    def __call__(self, x):
        X = np.asarray(x).reshape(-1, self.bs)
        return np.einsum("eij,ej->ei", self.inv, X).ravel()

    matvec = __call__


def block_jacobi_preconditioner(jacobian):
    return BlockJacobi(jacobian)


class BlockILU0:
    """Zero-fill block incomplete LU on the element adjacency pattern."""

    def __init__(self, jac):
        ne, nf = jac.nbr.shape
        self.ne, self.bs = ne, jac.bs
        cols = []
        blocks = []
        for e in range(ne):
            c = {e: jac.diag[e].copy()}
            for f in range(nf):
                nb = int(jac.nbr[e, f])
                if nb >= 0:
                    c[nb] = jac.off[e, f].copy()
            cols.append(c)
        dinv = [None] * ne
        for i in range(ne):
            row = cols[i]
            for k in sorted(j for j in row if j < i):
                Lik = row[k] @ dinv[k]
                row[k] = Lik
                for j, Ukj in cols[k].items():
                    if j > k and j in row:
                        row[j] = row[j] - Lik @ Ukj
            try:
                dinv[i] = np.linalg.inv(row[i])
            except np.linalg.LinAlgError as exc:
                raise SingularBlockError(f"singular pivot block in element {i}") from exc
        # triangular factors handed to SuperLU in natural order: no fill, no
        # pivoting, and the sweeps run in compiled code
        bs = self.bs
        blk_rows, blk_cols, data = [], [], []
        for i in range(ne):
            for j, B in cols[i].items():
                if j < i:
                    blk_rows.append(i)
                    blk_cols.append(j)
                    data.append(B)
        eye = np.eye(bs)
        lower = _block_csc(ne, bs, blk_rows + list(range(ne)), blk_cols + list(range(ne)),
                           data + [eye] * ne)
        # upper factor scaled to a unit diagonal: U = D (I + D^-1 U_strict)
        self.dinv = np.stack(dinv)
        blk_rows, blk_cols, data = list(range(ne)), list(range(ne)), [eye] * ne
        for i in range(ne):
            for j, B in cols[i].items():
                if j > i:
                    blk_rows.append(i)
                    blk_cols.append(j)
                    data.append(dinv[i] @ B)
        upper = _block_csc(ne, bs, blk_rows, blk_cols, data)
        opts = dict(permc_spec="NATURAL", diag_pivot_thresh=0.0,
                    options=dict(SymmetricMode=True))
        self._lower = spla.splu(lower, **opts)
        self._upper = spla.splu(upper, **opts)

    def __call__(self, x):
        y = self._lower.solve(np.asarray(x, dtype=float).ravel()).reshape(self.ne, self.bs)
        return self._upper.solve(np.einsum("eij,ej->ei", self.dinv, y).ravel())

    matvec = __call__


def _block_csc(nb, bs, rows, cols, blocks):
    blocks = np.asarray(blocks)
    r = (np.asarray(rows)[:, None, None] * bs + np.arange(bs)[None, :, None]) + 0 * blocks
    c = (np.asarray(cols)[:, None, None] * bs + np.arange(bs)[None, None, :]) + 0 * blocks
    return sp.csc_matrix((blocks.ravel(), (r.ravel().astype(int), c.ravel().astype(int))),
                         shape=(nb * bs, nb * bs))


class SparseLU:
    """Exact factorisation of the assembled matrix (SuperLU)."""

    def __init__(self, jac):
        self._lu = spla.splu(jac.to_csr().tocsc())

    def __call__(self, x):
        return self._lu.solve(np.asarray(x, dtype=float))

    matvec = __call__


PRECONDITIONERS = {NONE: None, BLOCK_JACOBI: BlockJacobi, ILU0: BlockILU0, LU: SparseLU}


def make_preconditioner(name, jac):
    if name == AUTO:
        name = LU if jac.diag.shape[0] * jac.bs <= AUTO_LU_LIMIT else ILU0
    if name not in PRECONDITIONERS:
        raise ValueError(f"unknown preconditioner {name!r}")
    cls = PRECONDITIONERS[name]
    return None if cls is None else cls(jac)


# --------------------------------------------------------------------------
# Newton


def _norm(R):
    return float(np.linalg.norm(np.ravel(R)))


def newton_solve(system, state0, config: NewtonConfig | None = None, mass=None):
    """Drive ``system.residual`` to zero.

    ``system`` exposes ``residual(U)`` and ``jacobian(U, mode)`` returning a
    :class:`~curved_dg.assembly.JacobianMatrix`.  Returns (state, report).
    The linear tolerance follows an Eisenstat-Walker schedule, tightened to
    ``0.1 target / |R|`` (floored at ``final_linear_tol``) once the residual is
    within 1e4 of the target.  Systems with ``is_linear`` set get the tight
    tolerance from the first step.
    """
    cfg = config or NewtonConfig()
    # a linear system gets one exact step instead of an inexact Newton sequence
    linear = getattr(system, "is_linear", False)
    t0 = time.perf_counter()
    U = np.array(state0, dtype=float)
    shape = U.shape
    report = SolveReport()
    try:
        R = system.residual(U)
    except NonphysicalStateError as exc:
        report.message = f"initial state nonphysical: {exc}"
        report.wall_time = time.perf_counter() - t0
        raise NewtonFailure(report.message, report) from exc
    r0 = _norm(R)
    report.residual_history.append(r0)
    target = max(cfg.abs_tol, cfg.rel_tol * r0)
    eta = cfg.linear_tol
    cfl = cfg.cfl0
    prev = r0
    for it in range(cfg.max_newton):
        rn = report.residual_history[-1]
        if rn <= target:
            report.converged = True
            break
        J = system.jacobian(U, mode=cfg.jacobian_mode)
        if cfg.globalization == PSEUDO_TRANSIENT and mass is not None:
            J = _add_pseudo_time(J, mass, rn, r0, cfl)
        # near the target only ask the linear solve for the reduction still needed
        if linear or rn <= 1e4 * target:
            floor = 1e-14 if linear else cfg.final_linear_tol
            tol = max(floor, 0.1 * target / rn)
        else:
            tol = eta
        info = {}
        rhs = -np.ravel(R)
        try:
            dU = _linear_solve(cfg, J, rhs, tol, info)
        except NotSPDError:
            raise
        except (LinearSolverBreakdown, SingularBlockError) as exc:
            report.message = f"linear solve failed: {exc}"
            report.newton_iterations = it
            report.wall_time = time.perf_counter() - t0
            raise NewtonFailure(report.message, report) from exc
        report.linear_iterations.append(info.get("iterations", 0))
        dU = dU.reshape(shape)

        step = 1.0
        while True:
            try:
                Un = U + step * dU
                Rn = system.residual(Un)
                nrm = _norm(Rn)
                if not np.isfinite(nrm):
                    raise NonphysicalStateError("non-finite residual")
                if cfg.globalization == LINE_SEARCH and nrm > rn and step > 1e-3:
                    raise NonphysicalStateError("no decrease")
                break
            except NonphysicalStateError:
                if cfg.globalization == NONE or step < 1e-4:
                    report.message = "step rejected: nonphysical or non-decreasing trial state"
                    report.newton_iterations = it + 1
                    report.wall_time = time.perf_counter() - t0
                    raise NewtonFailure(report.message, report)
                step *= 0.5
                cfl *= 0.5
        U, R = Un, Rn
        report.residual_history.append(nrm)
        report.newton_iterations = it + 1
        log.debug("newton %d: |R| = %.3e (linear its %s, step %.3g)", it + 1, nrm,
                  info.get("iterations"), step)
        # Eisenstat-Walker choice 2
        eta = min(cfg.linear_tol, max(0.9 * (nrm / prev) ** 2, 1e-8)) if prev > 0 else cfg.linear_tol
        prev = nrm
        cfl *= cfg.cfl_growth
    else:
        if report.residual_history[-1] <= target:
            report.converged = True
    report.wall_time = time.perf_counter() - t0
    if not report.converged:
        report.message = f"max_newton={cfg.max_newton} exceeded (|R| = {report.residual_history[-1]:.3e})"
        raise NewtonFailure(report.message, report)
    report.message = "converged"
    return U, report


def _linear_solve(cfg, J, rhs, tol, info):
    if cfg.linear == CG:
        # the assembled elliptic operator is negative definite
        neg = J.negated()
        pc = make_preconditioner(cfg.preconditioner, neg)
        return cg(neg.matvec, -rhs, tol=tol, precond=pc, info=info, max_iters=cfg.max_linear_iters)
    if cfg.linear == GMRES:
        pc = make_preconditioner(cfg.preconditioner, J)
        return gmres(J.matvec, rhs, m=cfg.restart, tol=tol, precond=pc, info=info,
                     max_iters=cfg.max_linear_iters)
    raise ValueError(f"unknown linear solver {cfg.linear!r}")


def _add_pseudo_time(J, mass, rn, r0, cfl):
    """J + M / dt with dt growing as the residual drops (switched evolution relaxation)."""
    from .assembly import JacobianMatrix
    local_cfl = cfl * r0 / max(rn, 1e-300)
    diag = J.diag + mass / local_cfl
    return JacobianMatrix(diag, J.off, J.nbr)
