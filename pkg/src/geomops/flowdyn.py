"""Flows of gradient-like vector fields and the dynamical identities they satisfy.

All integration is fixed-step classical RK4, vectorised over seeds, so a
report is reproducible bit for bit.  The flow Jacobian comes from the
variational equation ``M' = DX(gamma) M`` integrated on the same grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .box import Box
from .calculus import as_scalar, bracket, grad_left, grad_right, hamilton_poisson_field, leibniz_field_sym
from .errors import FlowBlowupError, PreconditionError
from .fields import VectorField, as_points, require_order
from .measure import VolumeForm, laplace_left, laplace_right
from .quad import QuadRule
from .structure import GeometricStructure, definiteness_probe

__all__ = [
    "Trajectory",
    "FlowJacobian",
    "integrate",
    "flow_jacobian",
    "gradient_field",
    "check_flow_bracket",
    "constant_of_motion_residual",
    "transport_check",
    "periodicity_monotonicity_check",
    "FlowReport",
]


@dataclass
class Trajectory:
    """States on a uniform grid; ``states`` is ``(K+1, n)`` or ``(K+1, s, n)`` for ``s`` seeds."""

    t: np.ndarray
    states: np.ndarray
    h: float
    integrator: str = "rk4"

    @property
    def end(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class FlowJacobian:
    t: np.ndarray
    matrices: np.ndarray  # (K+1, [s,] n, n)
    trajectory: Trajectory

    @property
    def end(self) -> np.ndarray:
        return self.matrices[-1]

    def det(self) -> np.ndarray:
        return np.linalg.det(self.matrices)


def _check_finite(y, k, t, last):
    if not np.all(np.isfinite(y)):
        raise FlowBlowupError(f"non-finite state at step {k} (t={t:.6g})", last_valid=last, step=k)


def _rk4(rhs, y0: np.ndarray, T: float, steps: int):
    if steps < 1:
        raise ValueError("steps must be at least 1")
    h = T / steps
    ys = np.empty((steps + 1,) + y0.shape)
    ys[0] = y0
    y = y0
    for k in range(steps):
        t = k * h
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(y, k + 1, t + h, ys[k])
        ys[k + 1] = y
    return np.linspace(0.0, T, steps + 1), ys, h


def _seeds(X, p0):
    pts = np.asarray(p0, dtype=float)
    single = pts.ndim == 1
    pts, _ = as_points(pts, X.dim)
    return pts, single


def integrate(X: VectorField, p0, T: float, steps: int) -> Trajectory:
    """RK4 integral curve(s) of ``X`` from ``p0`` (one point or ``(s, n)`` seeds)."""
    pts, single = _seeds(X, p0)

    def rhs(y):
        with np.errstate(all="ignore"):
            return X(y)

    t, ys, h = _rk4(rhs, pts, T, steps)
    return Trajectory(t, ys[:, 0] if single else ys, h)


def flow_jacobian(X: VectorField, p0, T: float, steps: int) -> FlowJacobian:
    """RK4 on the coupled system ``(gamma, M)`` with ``M(0) = I``."""
    require_order(X, 1, "flow_jacobian")
    pts, single = _seeds(X, p0)
    s, n = pts.shape
    y0 = np.concatenate([pts, np.broadcast_to(np.eye(n).ravel(), (s, n * n))], axis=1)

    def rhs(y):
        p = y[:, :n]
        M = y[:, n:].reshape(s, n, n)
        with np.errstate(all="ignore"):
            j = X.jet(p, 1)
        return np.concatenate([j.val, (j.grad @ M).reshape(s, n * n)], axis=1)

    t, ys, h = _rk4(rhs, y0, T, steps)
    states = ys[:, :, :n]
    mats = ys[:, :, n:].reshape(len(t), s, n, n)
    if single:
        states, mats = states[:, 0], mats[:, 0]
    return FlowJacobian(t, mats, Trajectory(t, states, h))


def gradient_field(b: GeometricStructure, F, kind: str = "left") -> VectorField:
    """The gradient-like field named by ``kind``: left, right, sym or skew."""
    makers = {"left": grad_left, "right": grad_right, "sym": leibniz_field_sym, "skew": hamilton_poisson_field}
    key = {"L": "left", "R": "right"}.get(kind, kind)
    if key not in makers:
        raise ValueError(f"unknown field kind {kind!r}; use left, right, sym or skew")
    return makers[key](b, F)


@dataclass
class FlowReport:
    name: str
    residual: float
    values: dict = dc_field(default_factory=dict)

    def passed(self, tol: float) -> bool:
        return bool(self.residual < tol)

    def to_dict(self) -> dict:
        return {"name": self.name, "residual": self.residual, **self.values}


def check_flow_bracket(b: GeometricStructure, F, f, p0, T: float, steps: int, chirality: str = "L") -> FlowReport:
    """``d/dt f(gamma)`` by five-point central differences against ``{f,F}`` (left flow) or ``{F,f}`` (right flow)."""
    F, f = as_scalar(F, b.dim), as_scalar(f, b.dim)
    if chirality == "L":
        X, rate = grad_left(b, F), bracket(b, f, F)
    elif chirality == "R":
        X, rate = grad_right(b, F), bracket(b, F, f)
    else:
        raise ValueError("chirality must be 'L' or 'R'")
    if steps < 4:
        raise ValueError("need at least 4 steps for the five-point stencil")
    traj = integrate(X, p0, T, steps)
    ys = traj.states
    fv = f(ys.reshape(-1, b.dim)).reshape(ys.shape[:-1])
    # fourth-order central stencil, so the stencil error stays well below the RK4 error
    dfdt = (fv[:-4] - 8.0 * fv[1:-3] + 8.0 * fv[3:-1] - fv[4:]) / (12.0 * traj.h)
    rv = rate(ys[2:-2].reshape(-1, b.dim)).reshape(dfdt.shape)
    res = np.abs(dfdt - rv)
    k = int(np.argmax(res.reshape(len(res), -1).max(axis=1)))
    return FlowReport(
        f"flow_bracket_{chirality}", float(res.max()),
        {"nodes": int(res.shape[0]), "argmax_t": float(traj.t[2 + k]), "max_rate": float(np.max(np.abs(rv)))},
    )


def constant_of_motion_residual(b: GeometricStructure, F, G, seeds, T: float, steps: int,
                                points=None) -> FlowReport:
    """Drift of ``F`` along the ``gradL G`` flow and of ``G`` along the ``gradR F`` flow.

    Both drifts vanish exactly when ``{F, G}_b = 0``; the sampled size of the
    bracket is reported alongside.
    """
    F, G = as_scalar(F, b.dim), as_scalar(G, b.dim)
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    tl = integrate(grad_left(b, G), seeds, T, steps).states
    tr = integrate(grad_right(b, F), seeds, T, steps).states
    n = b.dim
    Fv = F(tl.reshape(-1, n)).reshape(tl.shape[:-1])
    Gv = G(tr.reshape(-1, n)).reshape(tr.shape[:-1])
    drift_F = float(np.max(np.abs(Fv - Fv[0])))
    drift_G = float(np.max(np.abs(Gv - Gv[0])))
    pts = b.probes() if points is None else as_points(points, n)[0]
    brk = float(np.max(np.abs(bracket(b, F, G)(pts))))
    return FlowReport(
        "constant_of_motion", max(drift_F, drift_G),
        {"drift_F_along_gradL_G": drift_F, "drift_G_along_gradR_F": drift_G, "max_abs_bracket": brk},
    )


def _volume_and_rate(mu: VolumeForm, lap, X, rule, T, steps):
    """``m(Phi_t U)`` and ``int_{Phi_t U} lap dm`` for every grid time, by pulling back to ``U``."""
    J = flow_jacobian(X, rule.nodes, T, steps)
    n = X.dim
    pos = J.trajectory.states  # (K+1, N, n)
    dets = np.abs(np.linalg.det(J.matrices))
    flat = pos.reshape(-1, n)
    rho = mu.density(flat).reshape(dets.shape)
    lv = lap(flat).reshape(dets.shape)
    vol = np.sum(rule.weights * rho * dets, axis=1)
    rate = np.sum(rule.weights * lv * rho * dets, axis=1)
    return J, vol, rate


def transport_check(b: GeometricStructure, mu: VolumeForm, F, U: Box, T: float, steps: int,
                    order: int = 8, chirality: str = "L", domain: Box | None = None) -> FlowReport:
    """``d/dt m_mu(Phi_t U) = int_{Phi_t U} Lap F dm_mu`` at ``t = T``.

    The volume is computed as ``int_U rho(Phi_t p) |det D Phi_t(p)| dp``; the
    derivative is a central difference using one extra step past ``T``.
    ``residual`` is relative: ``|lhs - rhs| / max(1, |rhs|)``.
    """
    F = as_scalar(F, b.dim)
    if chirality == "L":
        X, lap = grad_left(b, F), laplace_left(b, mu, F)
    elif chirality == "R":
        X, lap = grad_right(b, F), laplace_right(b, mu, F)
    else:
        raise ValueError("chirality must be 'L' or 'R'")
    h = T / steps
    rule = QuadRule.on_box(U, order)
    J, vol, rate = _volume_and_rate(mu, lap, X, rule, T + h, steps + 1)
    lhs = (vol[-1] - vol[-3]) / (2.0 * h)
    rhs = rate[-2]
    values = {
        "T": T,
        "volume": float(vol[-2]),
        "volume_initial": float(vol[0]),
        "lhs": float(lhs),
        "rhs": float(rhs),
        "volumes": vol[:-1].tolist(),
        "order": order,
        "chirality": chirality,
    }
    if domain is not None:
        values["left_domain"] = bool(not np.all(domain.contains(J.trajectory.states[:-1].reshape(-1, b.dim), 1e-12)))
    return FlowReport("transport", float(abs(lhs - rhs) / max(1.0, abs(rhs))), values)


def periodicity_monotonicity_check(b: GeometricStructure, F, seeds, T: float, steps: int,
                                   chirality: str = "L", crit_tol: float = 1e-8) -> FlowReport:
    """Strict monotonicity of ``F`` along gradient-like orbits when the bracket is definite.

    Refuses (PreconditionError) unless the definiteness probe returns
    positive or negative, and rejects seeds where ``|dF| <= crit_tol``.
    ``residual`` counts the steps that violate strict monotonicity.
    """
    F = as_scalar(F, b.dim)
    probe = definiteness_probe(b)
    if probe.classification not in ("positive", "negative"):
        raise PreconditionError(
            f"bracket of {b.name} is not definite on the probes ({probe.classification}); "
            "periodic orbits are not excluded"
        )
    sign = 1.0 if probe.classification == "positive" else -1.0
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    dF = np.linalg.norm(F.jet(seeds, 1).grad, axis=-1)
    if np.any(dF <= crit_tol):
        i = int(np.argmin(dF))
        raise PreconditionError(f"seed {seeds[i].tolist()} is (numerically) a critical point of {F.label}")
    X = gradient_field(b, F, chirality)
    traj = integrate(X, seeds, T, steps)
    n = b.dim
    Fv = F(traj.states.reshape(-1, n)).reshape(traj.states.shape[:-1])  # (K+1, s)
    inc = sign * np.diff(Fv, axis=0)
    slack = 1e-12 * (1.0 + np.abs(Fv[:-1]))
    violations = int(np.sum(~(inc > -slack)))
    strict = int(np.sum(~(inc > 0)))
    brk = bracket(b, F, F)(traj.states.reshape(-1, n))
    return FlowReport(
        "periodic_orbit_exclusion", float(violations),
        {
            "definiteness": probe.classification,
            "seeds": len(seeds),
            "non_increasing_steps": strict,
            "min_total_change": float(np.min(sign * (Fv[-1] - Fv[0]))),
            "min_bracket_along_orbits": float(np.min(sign * brk)),
            "evidence": probe.note,
        },
    )
