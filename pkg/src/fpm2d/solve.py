"""Linear solve, field reconstruction and error norms."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .approximation import Material, ShapeSet
from .assembly import Discretization, GlobalSystem, ReducedSystem, apply_constraints
from .geometry import Partition
from .quadrature import polygon_rule


class SingularSystemError(RuntimeError):
    """Reduced stiffness is singular or, in strict mode, not positive definite."""

    def __init__(self, msg: str, dof: int):
        super().__init__(msg)
        self.dof = dof


class IndefiniteSystemWarning(RuntimeWarning):
    """The penalty is too small for the symmetric flux form to stay coercive."""


def _describe(dof: int) -> str:
    return f"dof {dof} (point {dof // 2}, component u{dof % 2 + 1})"


def _factorize(K: sp.csc_matrix, free: np.ndarray, pivot_tol: float, spd_only: bool):
    diag = K.diagonal()
    scale = np.abs(diag).max() if len(diag) else 1.0
    bad = np.flatnonzero(diag <= pivot_tol * scale)
    if len(bad):
        d = int(free[bad[0]])
        raise SingularSystemError(f"non-positive stiffness diagonal at {_describe(d)}", d)
    try:
        lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options=dict(SymmetricMode=True))
    except RuntimeError as exc:  # exactly singular
        raise SingularSystemError(f"factorization failed: {exc}", int(free[0])) from exc
    piv = lu.U.diagonal()
    # pivot k belongs to the original column i with perm_c[i] == k
    owner = np.argsort(lu.perm_c)
    tiny = np.flatnonzero(np.abs(piv) <= pivot_tol * scale)
    if len(tiny):
        d = int(free[owner[tiny[0]]])
        raise SingularSystemError(
            f"zero pivot {piv[tiny[0]]:.3e} at {_describe(d)}; the system is singular "
            f"(missing displacement constraints or a disconnected region)", d)
    neg = np.flatnonzero(piv < 0)
    if len(neg):
        d = int(free[owner[neg[0]]])
        msg = (f"negative pivot {piv[neg[0]]:.3e} at {_describe(d)}: the stiffness is indefinite, "
               f"typically because the penalty is too small")
        if spd_only:
            raise SingularSystemError(msg, d)
        warnings.warn(msg + "; solving with a pivoted LU factorization", IndefiniteSystemWarning, stacklevel=4)
        lu = spla.splu(K, permc_spec="COLAMD")
    return lu


def solve_reduced(red: ReducedSystem, method: str = "direct", pivot_tol: float = 1e-12,
                  cg_rtol: float = 1e-12, cg_maxiter: int | None = None, spd_only: bool = False) -> np.ndarray:
    """Solve the reduced system.

    The direct path factorizes symmetrically without pivoting, so its pivots
    are the LDL^T pivots: a (near) zero pivot raises SingularSystemError naming
    the dof, a negative one warns and refactorizes with pivoting unless
    ``spd_only`` is set.
    """
    if len(red.free) == 0:
        return red.expand(np.zeros(0))
    K = red.K
    if method == "direct":
        lu = _factorize(K.tocsc(), red.free, pivot_tol, spd_only)
        qf = lu.solve(red.rhs)
    elif method == "cg":
        d = K.diagonal()
        if np.any(d <= 0):
            i = int(np.flatnonzero(d <= 0)[0])
            raise SingularSystemError(f"non-positive stiffness diagonal at {_describe(int(red.free[i]))}",
                                      int(red.free[i]))
        M = sp.diags(1.0 / d)
        qf, info = spla.cg(K, red.rhs, rtol=cg_rtol, atol=0.0, M=M,
                           maxiter=cg_maxiter or 20 * K.shape[0])
        if info != 0:
            raise RuntimeError(f"conjugate gradients did not converge (info={info})")
    else:
        raise ValueError(f"unknown solver {method!r}")
    return red.expand(qf)


def solve_system(system: GlobalSystem, method: str = "direct", **kw) -> np.ndarray:
    """Solve K q = Q with the strong constraints of ``system``; returns the full q."""
    return solve_reduced(apply_constraints(system), method, **kw)


def residual(system: GlobalSystem, q: np.ndarray) -> float:
    """Relative residual of the free equations."""
    red = apply_constraints(system)
    if len(red.free) == 0:
        return 0.0
    r = red.K @ q[red.free] - red.rhs
    nrm = np.linalg.norm(red.rhs)
    return float(np.linalg.norm(r) / nrm) if nrm > 0 else float(np.linalg.norm(r))


@dataclass
class FieldSolution:
    """Nodal displacements and per-subdomain strain and stress.

    ``strain`` holds (e11, e22, 2 e12) and ``stress`` (s11, s22, s12), both
    evaluated at each point; they are constant per subdomain for linear trials.
    """

    q: np.ndarray
    partition: Partition
    material: Material
    shapes: list[ShapeSet]
    strain: np.ndarray
    stress: np.ndarray
    energy: float

    @property
    def u(self) -> np.ndarray:
        return self.q.reshape(-1, 2)

    @property
    def D(self) -> np.ndarray:
        return self.material.D

    def local(self, p: int) -> np.ndarray:
        return self.q[self.shapes[p].dofs]

    def displacement_in(self, p: int, x) -> np.ndarray:
        return np.einsum("nia,a->ni", self.shapes[p].N(x), self.local(p))

    def grad_in(self, p: int, x) -> np.ndarray:
        """Displacement gradient du_i/dx_j of subdomain ``p``'s trial function -> (n, 2, 2)."""
        return np.einsum("nija,a->nij", self.shapes[p].grad(x), self.local(p))

    def strain_in(self, p: int, x) -> np.ndarray:
        return np.einsum("nra,a->nr", self.shapes[p].B(x), self.local(p))

    def stress_in(self, p: int, x) -> np.ndarray:
        return self.strain_in(p, x) @ self.D.T

    def displacement_at(self, x) -> np.ndarray:
        """u^h at arbitrary points, using the subdomain that contains each one."""
        x = np.atleast_2d(np.asarray(x, float))
        cells = self.partition.locate(x)
        if np.any(cells < 0):
            raise ValueError("query point outside the partition")
        return np.vstack([self.displacement_in(int(c), xi[None]) for c, xi in zip(cells, x)])

    def segment_stress(self, segments=None) -> np.ndarray:
        """Average of the two adjacent subdomain stresses on internal segments."""
        part = self.partition
        segs = np.arange(part.n_segments) if segments is None else np.atleast_1d(segments)
        if self.shapes[0].order == 1:
            return 0.5 * (self.stress[part.left[segs]] + self.stress[part.right[segs]])
        mid = part.seg_midpoint[segs]
        return np.array([0.5 * (self.stress_in(int(part.left[s]), m[None])[0]
                                + self.stress_in(int(part.right[s]), m[None])[0])
                         for s, m in zip(segs, mid)])


def postprocess(q: np.ndarray, disc: Discretization) -> FieldSolution:
    """Per-point strain and stress from the solved displacements."""
    part = disc.partition
    shapes = [disc.shapes(p) for p in range(part.n_points)]
    strain = np.zeros((part.n_points, 3))
    for p, s in enumerate(shapes):
        strain[p] = s.B(part.points[p])[0] @ q[s.dofs]
    stress = strain @ disc.D.T
    energy = 0.5 * float(q @ (disc.K @ q))
    return FieldSolution(q, part, disc.material, shapes, strain, stress, energy)


def solve(disc: Discretization, scale: float = 1.0, method: str = "direct") -> FieldSolution:
    """Assemble, solve and postprocess in one call."""
    return postprocess(solve_system(disc.system(scale), method), disc)


def error_norms(solution: FieldSolution, exact, degree: int = 5) -> tuple[float, float]:
    """Relative L2 displacement error r_u and energy-norm error r_E.

    ``exact`` exposes ``displacement(x) -> (n, 2)`` and ``stress(x) -> (n, 3)``.
    Both integrals use a fan rule on every subdomain with the discrete field of
    that subdomain.
    """
    D = solution.D
    Dinv = np.linalg.inv(D)
    num_u = den_u = num_e = den_e = 0.0
    for p, cell in enumerate(solution.partition.cells):
        rl = polygon_rule(cell, degree)
        w = rl.weights
        ue = np.asarray(exact.displacement(rl.points), float)
        ee = np.asarray(exact.stress(rl.points), float) @ Dinv.T
        uh = solution.displacement_in(p, rl.points)
        eh = solution.strain_in(p, rl.points)
        du, de = uh - ue, eh - ee
        num_u += w @ np.einsum("ni,ni->n", du, du)
        den_u += w @ np.einsum("ni,ni->n", ue, ue)
        num_e += w @ np.einsum("ni,ij,nj->n", de, D, de)
        den_e += w @ np.einsum("ni,ij,nj->n", ee, D, ee)
    if den_u <= 0 or den_e <= 0:
        raise ValueError("exact field has zero norm; relative error undefined")
    return float(np.sqrt(num_u / den_u)), float(np.sqrt(num_e / den_e))


def bilinear_energy(solution: FieldSolution, disc: Discretization) -> dict:
    """Independent evaluation of the discrete energy terms by quadrature.

    Returns the bulk strain energy, the consistency and penalty contributions
    and their total, which equals ½ qᵀKq.
    """
    part, D = solution.partition, solution.D
    bulk = 0.0
    for p in range(part.n_points):
        rl = disc.point_rules[p]
        e = solution.strain_in(p, rl.points)
        bulk += 0.5 * rl.weights @ np.einsum("ni,ij,nj->n", e, D, e)
    cons = pen = 0.0
    for s in range(part.n_segments):
        if s in disc.released:
            continue
        rl = disc.seg_rules[s]
        L, R = int(part.left[s]), int(part.right[s])
        jump = solution.displacement_in(L, rl.points) - solution.displacement_in(R, rl.points)
        sig = 0.5 * (solution.stress_in(L, rl.points) + solution.stress_in(R, rl.points))
        n1, n2 = part.seg_normal[s]
        t = np.column_stack([sig[:, 0] * n1 + sig[:, 2] * n2, sig[:, 2] * n1 + sig[:, 1] * n2])
        cons -= rl.weights @ np.einsum("ni,ni->n", t, jump)
        pen += 0.5 * disc.eta / part.seg_length[s] * rl.weights @ np.einsum("ni,ni->n", jump, jump)
    return {"bulk": float(bulk), "consistency": float(cons), "penalty": float(pen),
            "total": float(bulk + cons + pen)}
