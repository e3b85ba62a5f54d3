"""Complex-conjugate square-root branch pair in the inverse charge.

Model: ``f(xi) = sqrt(w) (A1 + A2 w)`` with ``w = (xi + a)**2 + b**2``, i.e.
singularities at ``xi = -a +- i b`` of modulus ``r``.  Its Maclaurin
coefficients obey three-term recurrences that follow from
``2 w f' = w' f`` (and ``2 w g' = 3 w' g`` for ``g = w**1.5``).  Scaled by
``r**n`` they depend only on ``cos(theta) = -a / r``, which makes a vectorized
search over the angle cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, ValidationError

FIT_FOUND = "fit-found"
NO_FIT = "no-fit"
MIN_TAIL_ORDER = 20
MIN_TAIL_LENGTH = 4


@dataclass(frozen=True)
class BranchPairModel:
    a: float
    b: float
    A1: float
    A2: float

    def __post_init__(self):
        if self.b < 0:
            raise ValidationError(f"b must be non-negative, got {self.b}")

    @property
    def r(self) -> float:
        return float(np.hypot(self.a, self.b))

    @classmethod
    def polar(cls, r: float, theta: float, A1: float, A2: float) -> "BranchPairModel":
        # singularity at rho = -a + i b = r exp(i theta)
        return cls(float(-r * np.cos(theta)), float(abs(r * np.sin(theta))), float(A1), float(A2))


@dataclass
class BranchSearchReport:
    verdict: str
    max_misfit: float
    misfits: list[float]
    orders: list[int]
    radius_max: float
    threshold: float
    evaluations: int = 0

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "max_misfit": self.max_misfit,
                "misfits": list(self.misfits), "orders": list(self.orders),
                "radius_max": self.radius_max, "threshold": self.threshold,
                "evaluations": self.evaluations}


def branch_pair_expand(model: BranchPairModel, order: int, prec: int = 113) -> list:
    """Maclaurin coefficients ``[f_0, ..., f_order]`` as mpf values."""
    if order < 0:
        raise ValidationError("order must be non-negative")
    if model.a == 0 and model.b == 0:
        raise DomainError("branch points at the origin: no regular expansion about xi = 0")
    with mpmath.workprec(prec):
        a, b = mpmath.mpf(model.a), mpmath.mpf(model.b)
        w0, w1 = a * a + b * b, 2 * a
        r = mpmath.sqrt(w0)
        f = [r, w1 / (2 * r)]
        g = [w0 * r, 3 * r * w1 / 2]
        for n in range(1, order):
            f.append((w1 * (1 - 2 * n) * f[n] + (4 - 2 * n) * f[n - 1]) / (2 * w0 * (n + 1)))
            g.append((w1 * (3 - 2 * n) * g[n] + (8 - 2 * n) * g[n - 1]) / (2 * w0 * (n + 1)))
        A1, A2 = mpmath.mpf(model.A1), mpmath.mpf(model.A2)
        return [+(A1 * fn + A2 * gn) for fn, gn in zip(f, g)][: order + 1]


def _scaled_series(cos_theta: np.ndarray, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    """``u_n = f_n r**(n-1)`` and ``v_n = g_n r**(n-3)`` for each angle, n = 0..nmax."""
    c = np.asarray(cos_theta, dtype=float)
    u = np.zeros((nmax + 1,) + c.shape)
    v = np.zeros_like(u)
    u[0], v[0] = 1.0, 1.0
    if nmax >= 1:
        u[1], v[1] = -c, -3.0 * c
    for n in range(1, nmax):
        u[n + 1] = (-c * (1 - 2 * n) * u[n] + (2 - n) * u[n - 1]) / (n + 1)
        v[n + 1] = (-c * (3 - 2 * n) * v[n] + (4 - n) * v[n - 1]) / (n + 1)
    return u, v


def _scaled_series_scalar(c: float, orders: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Same recurrence as :func:`_scaled_series` for one angle, picked at ``orders``."""
    nmax = int(orders.max())
    u, v = [1.0, -c], [1.0, -3.0 * c]
    for n in range(1, nmax):
        u.append((-c * (1 - 2 * n) * u[n] + (2 - n) * u[n - 1]) / (n + 1))
        v.append((-c * (3 - 2 * n) * v[n] + (4 - n) * v[n - 1]) / (n + 1))
    return np.array(u)[orders][:, None], np.array(v)[orders][:, None]


class _Objective:
    """Relative misfit of the best (A1, A2) for a given singularity location."""

    def __init__(self, orders: np.ndarray, values: np.ndarray):
        self.orders = orders
        self.sign = np.sign(values)
        self.log_abs = np.log(np.abs(values))
        self.evaluations = 0

    def linear(self, r: np.ndarray, u: np.ndarray, v: np.ndarray):
        """Vectorized over trailing axes of u, v; r broadcasts against them.

        Returns (misfit rows, scaled coefficients, log scale) with the true
        amplitudes equal to ``coef * exp(-log_scale)``.
        """
        n = self.orders.reshape((-1,) + (1,) * (u.ndim - 1))
        logr = np.log(r)
        log_row = (1 - n) * logr - self.log_abs.reshape(n.shape)
        shift = log_row.max(axis=0)
        w = np.exp(log_row - shift)
        x1, x2 = w * u, w * (r * r) * v
        y = np.broadcast_to(self.sign.reshape(n.shape), x1.shape)
        # 2x2 normal equations, solved per candidate
        s11, s12, s22 = (x1 * x1).sum(0), (x1 * x2).sum(0), (x2 * x2).sum(0)
        t1, t2 = (x1 * y).sum(0), (x2 * y).sum(0)
        det = s11 * s22 - s12 * s12
        scale = np.maximum(s11 * s22, 1e-300)
        ok = np.abs(det) > 1e-12 * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = np.where(ok, (s22 * t1 - s12 * t2) / det, t1 / np.maximum(s11, 1e-300))
            c2 = np.where(ok, (s11 * t2 - s12 * t1) / det, 0.0)
        misfit = np.abs(x1 * c1 + x2 * c2 - y)
        self.evaluations += int(np.size(c1))
        return misfit, (c1, c2), shift

    def point(self, r: float, theta: float):
        u, v = _scaled_series_scalar(float(np.cos(theta)), self.orders)
        misfit, (c1, c2), shift = self.linear(np.array([r]), u, v)
        return misfit[:, 0], c1[0], c2[0], shift[0]


def _amplitudes(c1: float, c2: float, shift: float) -> tuple[float, float]:
    k = mpmath.exp(-mpmath.mpf(shift))
    return float(c1 * k), float(c2 * k)


def branch_pair_search(target_tail: Sequence[tuple[int, float]], radius_max: float,
                       threshold: float = 0.1, radius_min: float | None = None,
                       n_radius: int = 48, n_angle: int = 1441, n_refine: int = 8
                       ) -> tuple[BranchPairModel, BranchSearchReport]:
    """Best branch pair with ``r < radius_max`` for a tail of large-order coefficients.

    ``A1`` and ``A2`` enter linearly and are eliminated by least squares on
    the relative misfit; the location ``(r, theta)`` is scanned on a grid
    and the best cells are polished with Nelder-Mead.
    """
    if not np.isfinite(radius_max) or radius_max <= 0:
        raise ValidationError(f"radius_max must be positive, got {radius_max}")
    if not target_tail:
        raise ValidationError("empty target tail")
    orders = np.array([int(n) for n, _ in target_tail])
    values = np.array([float(e) for _, e in target_tail])
    if len(orders) < MIN_TAIL_LENGTH:
        raise ValidationError(f"need at least {MIN_TAIL_LENGTH} tail entries, got {len(orders)}")
    if orders.min() < MIN_TAIL_ORDER:
        raise ValidationError(f"tail orders must be >= {MIN_TAIL_ORDER}")
    if len(set(orders.tolist())) != len(orders):
        raise ValidationError("duplicate orders in target tail")
    if np.any(values == 0) or not np.all(np.isfinite(values)):
        raise ValidationError("target coefficients must be finite and non-zero")

    obj = _Objective(orders, values)
    r_hi = radius_max * (1 - 1e-9)
    r_lo = radius_min if radius_min is not None else radius_max / 20
    radii = np.geomspace(r_lo, r_hi, n_radius)
    thetas = np.linspace(0.0, np.pi, n_angle)
    u, v = _scaled_series(np.cos(thetas), int(orders.max()))
    u, v = u[orders][:, None, :], v[orders][:, None, :]
    misfit, _, _ = obj.linear(radii[None, :, None], u, v)
    score = (misfit ** 2).sum(0)
    flat = np.argsort(score, axis=None)[:n_refine]

    def loss(p):
        r = r_hi / (1 + np.exp(-p[0]))
        m = obj.point(r, p[1])[0]
        return float((m ** 2).sum())

    best = None
    for idx in flat:
        i, j = np.unravel_index(idx, score.shape)
        ratio = radii[i] / r_hi
        p0 = [np.log(ratio / (1 - ratio)) if ratio < 1 else 20.0, thetas[j]]
        res = minimize(loss, p0, method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-24, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    r = r_hi / (1 + np.exp(-best.x[0]))
    theta = float(np.mod(best.x[1], 2 * np.pi))
    if theta > np.pi:
        theta = 2 * np.pi - theta
    m, c1, c2, shift = obj.point(r, theta)
    A1, A2 = _amplitudes(c1, c2, shift)
    model = BranchPairModel.polar(float(r), theta, A1, A2)
    worst = float(m.max())
    report = BranchSearchReport(FIT_FOUND if worst < threshold else NO_FIT, worst,
                                [float(x) for x in m], orders.tolist(), float(radius_max),
                                float(threshold), obj.evaluations)
    return model, report
