"""Closed-form elasticity fields used as exact solutions and auxiliary states."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .approximation import Material


class OutOfRegionError(ValueError):
    pass


@dataclass
class AnalyticField:
    """Displacement and stress samplers of a closed-form solution.

    ``displacement(x) -> (n, 2)``, ``stress(x) -> (n, 3)`` with
    (s11, s22, s12) and optionally ``gradient(x) -> (n, 2, 2)`` holding
    du_i/dx_j; without it the gradient is taken by central differences.
    """

    name: str
    material: Material
    _u: Callable[[np.ndarray], np.ndarray]
    _s: Callable[[np.ndarray], np.ndarray]
    _g: Callable[[np.ndarray], np.ndarray] | None = None
    region: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        if self.region is not None:
            ok = self.region(x)
            if not np.all(ok):
                bad = x[~ok][0]
                raise OutOfRegionError(f"{self.name}: point {bad.tolist()} outside the field's region")
        return x

    def displacement(self, x) -> np.ndarray:
        return self._u(self._check(x))

    def stress(self, x) -> np.ndarray:
        return self._s(self._check(x))

    def strain(self, x) -> np.ndarray:
        return self.stress(x) @ np.linalg.inv(self.material.D).T

    def gradient(self, x, step: float = 1e-6) -> np.ndarray:
        x = self._check(x)
        if self._g is not None:
            return self._g(x)
        out = np.empty((len(x), 2, 2))
        for j in range(2):
            dx = np.zeros(2)
            dx[j] = step
            out[:, :, j] = (self._u(x + dx) - self._u(x - dx)) / (2 * step)
        return out


def _const(x, v):
    return np.broadcast_to(np.asarray(v, float), (len(x), len(v))).copy()


def patch_field(E: float = 1.0, nu: float = 0.3) -> AnalyticField:
    """u = (x1 + x2, x1 + x2) under plane stress."""
    mat = Material(E, nu)
    s = np.array([E / (1 - nu), E / (1 - nu), E / (1 + nu)])
    return AnalyticField(
        "patch", mat,
        lambda x: np.column_stack([x[:, 0] + x[:, 1], x[:, 0] + x[:, 1]]),
        lambda x: _const(x, s),
        lambda x: np.broadcast_to(np.ones((2, 2)), (len(x), 2, 2)).copy(),
        params=dict(E=E, nu=nu))


def cantilever_field(P: float = 1.0, E: float = 1e5, nu: float = 0.3, H: float = 1.0, L: float = 8.0) -> AnalyticField:
    """Beam on x1 in [0, L], x2 in [0, H] with a parabolic end shear of resultant P."""
    I = H ** 3 / 12.0
    c = P / (6 * E * I)

    def u(x):
        x1, x2 = x[:, 0], x[:, 1]
        y = x2 - H / 2
        u1 = -c * y * (3 * x1 * (2 * L - x1) + (2 + nu) * x2 * (x2 - H))
        u2 = c * (x1 ** 2 * (3 * L - x1) + 3 * nu * (L - x1) * y ** 2 + (4 + 5 * nu) / 4 * H ** 2 * x1)
        return np.column_stack([u1, u2])

    def s(x):
        x1, x2 = x[:, 0], x[:, 1]
        return np.column_stack([-P / I * (L - x1) * (x2 - H / 2), np.zeros(len(x)),
                                -P * x2 / (2 * I) * (x2 - H)])

    return AnalyticField("cantilever", Material(E, nu), u, s, params=dict(P=P, E=E, nu=nu, H=H, L=L))


def _polar(x, origin=(0.0, 0.0)):
    d = x - np.asarray(origin, float)
    return np.hypot(d[:, 0], d[:, 1]), np.arctan2(d[:, 1], d[:, 0])


def ring_field(a: float = 1.0, b: float = 2.0, p: float = 1.0, E: float = 1e5, nu: float = 0.3,
               tol: float = 1e-3) -> AnalyticField:
    """Thick ring a <= r <= b with radial tension p on r = b (plane stress).

    ``tol`` widens the region relatively so polygonal approximations of the
    arcs stay admissible.
    """
    k = b * b / (b * b - a * a)

    def s(x):
        r, t = _polar(x)
        srr = k * (1 - a * a / r ** 2) * p
        stt = k * (1 + a * a / r ** 2) * p
        c, sn = np.cos(t), np.sin(t)
        return np.column_stack([srr * c * c + stt * sn * sn, srr * sn * sn + stt * c * c, (srr - stt) * sn * c])

    def u(x):
        r, t = _polar(x)
        ur = ((1 - nu) * k * p * r + (1 + nu) * a * a * k * p / r) / E
        return np.column_stack([ur * np.cos(t), ur * np.sin(t)])

    def region(x):
        r = np.hypot(x[:, 0], x[:, 1])
        return (r >= a * (1 - tol)) & (r <= b * (1 + tol))

    return AnalyticField("ring", Material(E, nu), u, s, region=region, params=dict(a=a, b=b, p=p, E=E, nu=nu))


def hole_field(a: float = 1.0, p: float = 1.0, E: float = 1.0, nu: float = 0.3, tol: float = 1e-3) -> AnalyticField:
    """Infinite plate with a circular hole of radius a under remote tension p along x1."""

    def s(x):
        r, t = _polar(x)
        q2, q4 = a * a / r ** 2, a ** 4 / r ** 4
        s11 = p * (1 - q2 * (1.5 * np.cos(2 * t) + np.cos(4 * t)) + 1.5 * q4 * np.cos(4 * t))
        s12 = p * (-q2 * (0.5 * np.sin(2 * t) + np.sin(4 * t)) + 1.5 * q4 * np.sin(4 * t))
        s22 = p * (-q2 * (0.5 * np.cos(2 * t) - np.cos(4 * t)) - 1.5 * q4 * np.cos(4 * t))
        return np.column_stack([s11, s22, s12])

    def u(x):
        r, t = _polar(x)
        f = (1 + nu) / E * p
        u1 = f * (r * np.cos(t) / (1 + nu) + 2 / (1 + nu) * a * a / r * np.cos(t)
                  + 0.5 * a * a / r * np.cos(3 * t) - 0.5 * a ** 4 / r ** 3 * np.cos(3 * t))
        u2 = f * (-nu / (1 + nu) * r * np.sin(t) - (1 - nu) / (1 + nu) * a * a / r * np.sin(t)
                  + 0.5 * a * a / r * np.sin(3 * t) - 0.5 * a ** 4 / r ** 3 * np.sin(3 * t))
        return np.column_stack([u1, u2])

    def region(x):
        return np.hypot(x[:, 0], x[:, 1]) >= a * (1 - tol)

    return AnalyticField("hole", Material(E, nu), u, s, region=region, params=dict(a=a, p=p, E=E, nu=nu))


def _tip_polar(x, tip, angle):
    d = x - np.asarray(tip, float)
    c, s = np.cos(angle), np.sin(angle)
    xl = c * d[:, 0] + s * d[:, 1]
    yl = -s * d[:, 0] + c * d[:, 1]
    return np.hypot(xl, yl), np.arctan2(yl, xl), c, s


def _crack_field(KI, KII, material: Material, tip, angle, name):
    """Williams leading-order field for mixed-mode loading in a crack frame.

    The crack lies along the local direction theta = +-pi from ``tip``;
    ``angle`` is the orientation of the local x1 axis.
    """
    mu, kap = material.shear_modulus, material.kolosov

    def local(x):
        r, t, c, s = _tip_polar(x, tip, angle)
        if np.any(r <= 0):
            raise OutOfRegionError(f"{name}: crack-tip field is singular at the tip")
        return r, t, c, s

    def rot_vec(v, c, s):
        return np.column_stack([c * v[:, 0] - s * v[:, 1], s * v[:, 0] + c * v[:, 1]])

    def u(x):
        r, t, c, s = local(x)
        h, g = np.sin(t / 2), np.cos(t / 2)
        f = np.sqrt(r / (2 * np.pi)) / (2 * mu)
        u1 = f * (KI * g * (kap - 1 + 2 * h * h) + KII * h * (kap + 1 + 2 * g * g))
        u2 = f * (KI * h * (kap + 1 - 2 * g * g) - KII * g * (kap - 1 - 2 * h * h))
        return rot_vec(np.column_stack([u1, u2]), c, s)

    def s_(x):
        r, t, c, s = local(x)
        h, g = np.sin(t / 2), np.cos(t / 2)
        h3, g3 = np.sin(1.5 * t), np.cos(1.5 * t)
        f = 1.0 / np.sqrt(2 * np.pi * r)
        s11 = f * (KI * g * (1 - h * h3) - KII * h * (2 + g * g3))
        s22 = f * (KI * g * (1 + h * h3) + KII * h * g * g3)
        s12 = f * (KI * g * h * g3 + KII * g * (1 - h * h3))
        # rotate the local tensor to the global frame
        cc, ss, cs = c * c, s * s, c * s
        return np.column_stack([cc * s11 + ss * s22 - 2 * cs * s12,
                                ss * s11 + cc * s22 + 2 * cs * s12,
                                cs * (s11 - s22) + (cc - ss) * s12])

    def grad(x):
        r, t, c, s = local(x)
        h, g = np.sin(t / 2), np.cos(t / 2)
        F1 = KI * g * (kap - 1 + 2 * h * h) + KII * h * (kap + 1 + 2 * g * g)
        F2 = KI * h * (kap + 1 - 2 * g * g) - KII * g * (kap - 1 - 2 * h * h)
        dF1 = (KI * (-0.5 * h * (kap - 1 + 2 * h * h) + 2 * h * g * g)
               + KII * (0.5 * g * (kap + 1 + 2 * g * g) - 2 * h * h * g))
        dF2 = (KI * (0.5 * g * (kap + 1 - 2 * g * g) + 2 * h * h * g)
               - KII * (-0.5 * h * (kap - 1 - 2 * h * h) - 2 * h * g * g))
        f = 1.0 / (2 * mu * np.sqrt(2 * np.pi))
        sr = np.sqrt(r)
        # d/dr and (1/r) d/dtheta of u_local
        dr = np.stack([f * F1 / (2 * sr), f * F2 / (2 * sr)], axis=1)
        dt = np.stack([f * dF1 / sr, f * dF2 / sr], axis=1)
        ct, st = np.cos(t), np.sin(t)
        Gl = np.empty((len(x), 2, 2))
        Gl[:, :, 0] = dr * ct[:, None] - dt * st[:, None]
        Gl[:, :, 1] = dr * st[:, None] + dt * ct[:, None]
        Rm = np.array([[c, -s], [s, c]])
        return np.einsum("ij,njk,lk->nil", Rm, Gl, Rm)

    return AnalyticField(name, material, u, s_, grad,
                         params=dict(K_I=KI, K_II=KII, tip=tuple(np.asarray(tip, float)), angle=angle))


def mode1_field(K_I: float = 1.0, E: float = 1.0, nu: float = 0.3, plane: str = "stress",
                tip=(0.0, 0.0), angle: float = 0.0) -> AnalyticField:
    """Near-tip mode-I field; the crack lies behind the tip along local -x1."""
    return _crack_field(K_I, 0.0, Material(E, nu, plane), tip, angle, "mode1")


def mode2_field(K_II: float = 1.0, E: float = 1.0, nu: float = 0.3, plane: str = "stress",
                tip=(0.0, 0.0), angle: float = 0.0) -> AnalyticField:
    """Near-tip mode-II field (standard Williams form)."""
    return _crack_field(0.0, K_II, Material(E, nu, plane), tip, angle, "mode2")


def crack_tip_field(K_I: float, K_II: float, material: Material, tip=(0.0, 0.0), angle: float = 0.0) -> AnalyticField:
    return _crack_field(K_I, K_II, material, tip, angle, "crack_tip")
