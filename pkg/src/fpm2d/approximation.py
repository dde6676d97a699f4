"""Point-based trial functions: derivative recovery, shape and strain matrices.

Within the subdomain of point P0 the displacement is the Taylor expansion

    u(x) = u0 + [h(x) 0; 0 h(x)] a,        a = C u_E

where ``u_E`` stacks the displacements of P0 and its support points
(interleaved ``u1, u2`` per point) and ``C`` recovers the derivatives at P0
from them.  ``C`` has ``2 * nb`` rows, ``nb = 2`` (linear) or ``5``
(quadratic), ordered ``d/dx1, d/dx2[, d2/dx1^2, d2/dx2^2, d2/dx1dx2]`` for u1
followed by the same for u2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

PLANE_STRESS = "stress"
PLANE_STRAIN = "strain"


class RecoveryError(ValueError):
    """Derivative recovery impossible for the given support."""

    def __init__(self, msg: str, condition: float = np.inf):
        super().__init__(msg)
        self.condition = condition


class IsolatedPointError(RecoveryError):
    pass


@dataclass(frozen=True)
class Material:
    E: float
    nu: float
    plane: str = PLANE_STRESS

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("Young's modulus must be positive")
        if not (0.0 <= self.nu < 0.5):
            raise ValueError(f"Poisson ratio {self.nu} outside [0, 0.5)")
        if self.plane not in (PLANE_STRESS, PLANE_STRAIN):
            raise ValueError(f"unknown plane state {self.plane!r}")

    @property
    def E_bar(self) -> float:
        return self.E if self.plane == PLANE_STRESS else self.E / (1.0 - self.nu ** 2)

    @property
    def nu_bar(self) -> float:
        return self.nu if self.plane == PLANE_STRESS else self.nu / (1.0 - self.nu)

    @property
    def shear_modulus(self) -> float:
        return self.E_bar / (2.0 * (1.0 + self.nu_bar))

    @property
    def kolosov(self) -> float:
        return (3.0 - self.nu_bar) / (1.0 + self.nu_bar)

    @property
    def D(self) -> np.ndarray:
        return elasticity_matrix(self)


def elasticity_matrix(material: Material) -> np.ndarray:
    """3x3 isotropic stress-strain matrix acting on (e11, e22, 2 e12)."""
    E, v = material.E_bar, material.nu_bar
    return E / (1.0 - v * v) * np.array([[1.0, v, 0.0], [v, 1.0, 0.0], [0.0, 0.0, 0.5 * (1.0 - v)]])


def n_basis(order: int) -> int:
    if order == 1:
        return 2
    if order == 2:
        return 5
    raise ValueError("trial order must be 1 or 2")


def basis_row(dx: np.ndarray, order: int) -> np.ndarray:
    """Taylor basis h evaluated at offsets ``dx`` (n,2) -> (n, nb)."""
    dx = np.atleast_2d(dx)
    x, y = dx[:, 0], dx[:, 1]
    if order == 1:
        return np.column_stack([x, y])
    return np.column_stack([x, y, 0.5 * x * x, 0.5 * y * y, x * y])


def basis_grad(dx: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    dx = np.atleast_2d(dx)
    x, y = dx[:, 0], dx[:, 1]
    one, zero = np.ones_like(x), np.zeros_like(x)
    if order == 1:
        return np.column_stack([one, zero]), np.column_stack([zero, one])
    return (np.column_stack([one, zero, x, zero, y]),
            np.column_stack([zero, one, zero, y, x]))


@dataclass
class RecoveryMatrix:
    """Derivative-recovery matrix of one point.

    ``dof_points`` lists the point itself first, then its supports; ``C`` maps
    the interleaved displacements of those points to the derivative vector.
    """

    point: int
    dof_points: np.ndarray
    C: np.ndarray
    order: int
    method: str

    @property
    def dofs(self) -> np.ndarray:
        p = np.asarray(self.dof_points, dtype=np.int64)
        return np.column_stack([2 * p, 2 * p + 1]).ravel()


def _expand(C1: np.ndarray) -> np.ndarray:
    """Scalar recovery rows (nb, m+1) -> two-component C (2nb, 2(m+1))."""
    nb, mp1 = C1.shape
    C = np.zeros((2 * nb, 2 * mp1))
    C[:nb, 0::2] = C1
    C[nb:, 1::2] = C1
    return C


def gfd_weights(x0, xs, order: int, weights=None, pinv: bool = False, rcond: float = 1e-10) -> np.ndarray:
    """Scalar GFD recovery rows (nb, m+1) for point ``x0`` and supports ``xs``."""
    xs = np.atleast_2d(np.asarray(xs, float))
    m = len(xs)
    nb = n_basis(order)
    if m == 0:
        raise IsolatedPointError("point has no supporting points")
    dx = xs - np.asarray(x0, float)
    scale = np.abs(dx).max()
    A = basis_row(dx / scale, order)
    w = np.ones(m) if weights is None else np.asarray(weights, float)
    AtW = A.T * w
    M = AtW @ A
    sv = np.linalg.svd(M, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if m < nb or not cond * rcond < 1.0:
        if not pinv:
            raise RecoveryError(
                f"least-squares matrix is rank deficient (m={m}, basis={nb}, cond={cond:.3e})", cond)
        rows = np.linalg.pinv(M, rcond=rcond, hermitian=True) @ AtW
    else:
        rows = np.linalg.solve(M, AtW)
    C1 = np.empty((nb, m + 1))
    C1[:, 0] = -rows.sum(axis=1)
    C1[:, 1:] = rows
    # undo the coordinate scaling: first derivatives / scale, second / scale^2
    C1[:2] /= scale
    C1[2:] /= scale ** 2
    return C1


def gfd_recovery(points: np.ndarray, support, point: int, order: int = 1, weights=None) -> RecoveryMatrix:
    """Weighted least-squares (generalized finite difference) recovery.

    ``support`` is a SupportSet or a sequence of supporting point ids.
    Raises RecoveryError when the least-squares matrix is rank deficient and
    IsolatedPointError when the support is empty; a single supporting point
    must go through :func:`two_point_fallback`.
    """
    members = np.asarray(getattr(support, "members", support), dtype=np.int64)
    if len(members) == 1:
        raise RecoveryError("single supporting point: use two_point_fallback", np.inf)
    C1 = gfd_weights(points[point], points[members], order, weights)
    return RecoveryMatrix(point, np.concatenate([[point], members]), _expand(C1), order, "gfd")


def two_point_fallback(p0, p1, order: int = 1, point: int = -1, neighbor: int = -1) -> RecoveryMatrix:
    """Directional difference between a point and its only supporting point."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    d = p1 - p0
    L2 = float(d @ d)
    if L2 <= 0:
        raise RecoveryError("coincident points")
    nb = n_basis(order)
    C1 = np.zeros((nb, 2))
    C1[0] = [-d[0] / L2, d[0] / L2]
    C1[1] = [-d[1] / L2, d[1] / L2]
    return RecoveryMatrix(point, np.array([point, neighbor]), _expand(C1), order, "two-point")


def csrbf_kernel(d, r):
    """Wendland-type kernel (1 - d/r)^3 (1 + 3 d/r), zero beyond ``r``."""
    t = np.asarray(d, float) / r
    return np.where(t <= 1.0, (1.0 - t) ** 3 * (1.0 + 3.0 * t), 0.0)


def _kernel_derivs(x0, xi, r):
    """Gradient and Hessian entries of R_i at x0: (dx1, dx2, dx1x1, dx2x2, dx1x2)."""
    delta = x0[None, :] - xi
    d = np.hypot(delta[:, 0], delta[:, 1])
    t = d / r
    inside = t < 1.0
    g = np.where(inside, -12.0 * (1.0 - t) ** 2 / r ** 2, 0.0)
    safe = np.where(d > 0, d, 1.0)
    gp = np.where(inside & (d > 0), 24.0 * (1.0 - t) / (r ** 3 * safe), 0.0)
    dx, dy = delta[:, 0], delta[:, 1]
    return np.stack([g * dx, g * dy, g + gp * dx * dx, g + gp * dy * dy, gp * dx * dy])


def csrbf_weights(x0, xs, order: int, radius: float | None = None, rcond: float = 1e-13) -> np.ndarray:
    """Scalar CSRBF recovery rows (nb, m+1); the point itself is node 0."""
    x0 = np.asarray(x0, float)
    xs = np.atleast_2d(np.asarray(xs, float))
    nodes = np.vstack([x0, xs])
    far = np.hypot(*(xs - x0).T).max() if len(xs) else 0.0
    if radius is None:
        radius = 1.5 * far
    if len(xs) == 0 or radius <= 0:
        raise IsolatedPointError("point has no supporting points")
    if radius < far:
        raise RecoveryError(f"radius {radius} smaller than farthest support {far}; supports would vanish")
    scale = far
    loc = (nodes - x0) / scale
    r = radius / scale
    diff = loc[:, None, :] - loc[None, :, :]
    Rm = csrbf_kernel(np.hypot(diff[..., 0], diff[..., 1]), r)
    x, y = loc[:, 0], loc[:, 1]
    if order == 1:
        S = np.column_stack([np.ones_like(x), x, y])
        dS = np.array([[0, 1, 0], [0, 0, 1]], float)
    else:
        S = np.column_stack([np.ones_like(x), x, y, x * x, y * y, x * y])
        dS = np.array([[0, 1, 0, 0, 0, 0], [0, 0, 1, 0, 0, 0],
                       [0, 0, 0, 2, 0, 0], [0, 0, 0, 0, 2, 0], [0, 0, 0, 0, 0, 1]], float)
    mp1, q = S.shape
    G = np.zeros((mp1 + q, mp1 + q))
    G[:mp1, :mp1] = Rm
    G[:mp1, mp1:] = S
    G[mp1:, :mp1] = S.T
    sv = np.linalg.svd(G, compute_uv=False)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if not cond * rcond < 1.0:
        raise RecoveryError(f"CSRBF interpolation matrix is singular (cond={cond:.3e})", cond)
    nb = n_basis(order)
    dR = _kernel_derivs(np.zeros(2), loc, r)[:nb]
    rhs = np.hstack([dR, dS[:nb]])
    # G is symmetric, so phi-rows = rhs @ G^-1 = solve(G, rhs^T)^T
    phi = np.linalg.solve(G, rhs.T).T[:, :mp1]
    phi[:2] /= scale
    phi[2:] /= scale ** 2
    return phi


def csrbf_recovery(points: np.ndarray, support, point: int, order: int = 1, radius: float | None = None) -> RecoveryMatrix:
    """Compactly-supported RBF interpolation with polynomial augmentation."""
    members = np.asarray(getattr(support, "members", support), dtype=np.int64)
    C1 = csrbf_weights(points[point], points[members], order, radius)
    return RecoveryMatrix(point, np.concatenate([[point], members]), _expand(C1), order, "csrbf")


def zero_recovery(point: int, order: int) -> RecoveryMatrix:
    nb = n_basis(order)
    return RecoveryMatrix(point, np.array([point]), np.zeros((2 * nb, 2)), order, "isolated")


def recover_point(points, adjacency, point: int, order: int = 1, backend: str = "gfd",
                  rings: int | None = None, csrbf_factor: float = 1.5) -> RecoveryMatrix:
    """Recovery with the fallback policy used during assembly.

    Tries the configured backend on the configured ring depth; a rank-deficient
    ring-1 support escalates once to two rings.  A lone supporting point uses
    the two-point difference, an empty support yields zero derivatives, and a
    support that stays rank deficient after escalation uses the minimum-norm
    least-squares solution.
    """
    rings = rings or (1 if order == 1 else 2)
    members = np.asarray(adjacency.support(point, rings), dtype=np.int64)
    if len(members) == 0:
        return zero_recovery(point, order)
    if len(members) == 1 and rings == 1:
        return two_point_fallback(points[point], points[members[0]], order, point, int(members[0]))
    try:
        return _recover(points, members, point, order, backend, csrbf_factor)
    except RecoveryError:
        if rings == 1:
            wide = np.asarray(adjacency.support(point, 2), dtype=np.int64)
            try:
                return _recover(points, wide, point, order, backend, csrbf_factor)
            except RecoveryError:
                members = wide
    if len(members) == 1:
        return two_point_fallback(points[point], points[members[0]], order, point, int(members[0]))
    C1 = gfd_weights(points[point], points[members], order, pinv=True)
    return RecoveryMatrix(point, np.concatenate([[point], members]), _expand(C1), order, "gfd-pinv")


def _recover(points, members, point, order, backend, csrbf_factor):
    if backend == "gfd":
        if len(members) == 1:
            raise RecoveryError("single support")
        C1 = gfd_weights(points[point], points[members], order)
    elif backend == "csrbf":
        far = np.hypot(*(points[members] - points[point]).T).max()
        C1 = csrbf_weights(points[point], points[members], order, csrbf_factor * far)
    else:
        raise ValueError(f"unknown recovery backend {backend!r}")
    return RecoveryMatrix(point, np.concatenate([[point], members]), _expand(C1), order, backend)


@dataclass
class ShapeSet:
    """Shape functions of one point's subdomain."""

    recovery: RecoveryMatrix
    center: np.ndarray

    @property
    def order(self) -> int:
        return self.recovery.order

    @property
    def dofs(self) -> np.ndarray:
        return self.recovery.dofs

    def N(self, x) -> np.ndarray:
        """Shape matrices at points ``x`` -> (n, 2, 2(m+1))."""
        x = np.atleast_2d(np.asarray(x, float))
        C = self.recovery.C
        nb = n_basis(self.order)
        h = basis_row(x - self.center, self.order)
        out = np.zeros((len(x), 2, C.shape[1]))
        out[:, 0] = h @ C[:nb]
        out[:, 1] = h @ C[nb:]
        out[:, 0, 0] += 1.0
        out[:, 1, 1] += 1.0
        return out

    def grad(self, x) -> np.ndarray:
        """Displacement-gradient operator G with grad_u[i, j] = G[:, i, j] @ u_E -> (n, 2, 2, ndof)."""
        x = np.atleast_2d(np.asarray(x, float))
        C = self.recovery.C
        nb = n_basis(self.order)
        g1, g2 = basis_grad(x - self.center, self.order)
        out = np.empty((len(x), 2, 2, C.shape[1]))
        out[:, 0, 0] = g1 @ C[:nb]
        out[:, 0, 1] = g2 @ C[:nb]
        out[:, 1, 0] = g1 @ C[nb:]
        out[:, 1, 1] = g2 @ C[nb:]
        return out

    def B(self, x) -> np.ndarray:
        """Strain matrices (e11, e22, 2 e12) at points ``x`` -> (n, 3, 2(m+1))."""
        G = self.grad(x)
        return np.stack([G[:, 0, 0], G[:, 1, 1], G[:, 0, 1] + G[:, 1, 0]], axis=1)


def shape_matrices(recovery: RecoveryMatrix, center) -> ShapeSet:
    return ShapeSet(recovery, np.asarray(center, float))


def warn_penalty(eta: float, E: float) -> None:
    if not (1e-2 * E <= eta <= 1e2 * E):
        warnings.warn(f"penalty {eta:g} outside the recommended range [1e-2 E, 1e2 E]", stacklevel=3)
