"""Large-argument behavior of the normalized oscillatory kernel.

F_g(t) = sqrt(w_k(k1) w_k(k2)) e^{-i<k1, g k2>} E_k(i k1, g k2) along a pair
of curves (k1(t), k2(t)) staying inside a margin-truncated cone. F satisfies
a linear coupled system F' = A(t) F whose matrix has entries only at
(g, sigma_alpha g), coefficients built from logarithmic derivatives of the
curve pairings, and oscillatory phases exp(-i (2/|alpha|^2) <alpha,k1><alpha,g k2>).
The length factor in the phase matters for root systems whose roots are not
all of square length 2; it follows from <k1, (sigma_alpha - 1) g k2>.

The limit vector v = lim F(t) is estimated from checkpoint values at
doubling times with one Richardson step to cancel the O(1/t) tail.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.integrate import solve_ivp

from scipy.linalg import expm

from .geometry import ConeSpec, in_cone_delta
from .kernel import (
    MAGNUS_PHASE,
    EvalContext,
    OrbitVector,
    eval_orbit,
    magnus_generator,
)
from .rootsys import ConfigError, NumericError, weight_w_k

_CURVE_KINDS = ("ray", "rotating_ray")


def _rot2(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclasses.dataclass(frozen=True)
class AdmissibleCurvePair:
    """Two unbounded curves k1(t) = t u1, k2(t) = t u2(t) inside the cone.

    Rays keep both directions fixed. A rotating ray turns the second
    direction by -rotation_rate/t (rank 2 only), so the angular speed decays
    and the curve still escapes to infinity inside the cone.
    """

    kind: str
    directions: np.ndarray  # (2, n) unit rows
    rotation_rate: float
    delta: float
    t_min: float = 1.0

    def __post_init__(self):
        if self.kind not in _CURVE_KINDS:
            raise ConfigError("curve kind must be one of %s" % (_CURVE_KINDS,))
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.shape[0] != 2:
            raise ConfigError("curve pair needs exactly two directions")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ConfigError("curve directions must be unit vectors")
        object.__setattr__(self, "directions", dirs)
        if self.kind == "ray" and self.rotation_rate != 0.0:
            raise ConfigError("rays have zero rotation rate")
        if self.kind == "rotating_ray" and dirs.shape[1] != 2:
            raise ConfigError("rotating rays are implemented for rank 2")
        if self.t_min <= 0:
            raise ConfigError("t_min must be positive")

    def validate_in_cone(self, rs) -> None:
        spec = ConeSpec(delta=self.delta)
        grid = np.geomspace(self.t_min, self.t_min * 1e6, 64)
        for t in grid:
            k1, k2 = self.kappa(float(t))
            for v in (k1, k2):
                if not in_cone_delta(rs, spec, v):
                    raise ConfigError(
                        "curve leaves the cone at t=%g" % t)

    def _u2(self, t: float) -> np.ndarray:
        if self.kind == "ray":
            return self.directions[1]
        return _rot2(-self.rotation_rate / t) @ self.directions[1]

    def kappa(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return t * self.directions[0], t * self._u2(t)

    def kappa_prime(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        d1 = self.directions[0]
        u2 = self._u2(t)
        if self.kind == "ray":
            return d1, u2
        # d/dt [t u2(t)] with u2 rotated by -rate/t
        perp = np.array([-u2[1], u2[0]])
        return d1, u2 + (self.rotation_rate / t) * perp


def f_normalized(ctx: EvalContext, x: np.ndarray, y: np.ndarray) -> OrbitVector:
    """sqrt(w(x) w(y)) e^{-i<x, g y>} E(ix, g y) for every g; bounded by the
    weight product and O(1) under the corollary's regime."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    wx = weight_w_k(ctx.rs, xa)
    wy = weight_w_k(ctx.rs, ya)
    if wx == 0.0 or wy == 0.0:
        raise NumericError("weight vanishes: argument lies on a wall")
    ev = eval_orbit(ctx, xa, 1j * ya, 1.0)
    phases = ctx.pairings(xa, ya).real
    vals = math.sqrt(wx * wy) * np.exp(-1j * phases) * ev.result.values
    return OrbitVector(ctx.group, vals)


def ode_matrix_A(ctx: EvalContext, curve: AdmissibleCurvePair,
                 t: float) -> np.ndarray:
    """Coupling matrix at time t; zero when all multiplicities vanish."""
    rs = ctx.rs
    k1, k2 = curve.kappa(t)
    d1, d2 = curve.kappa_prime(t)
    gk2 = ctx.matrices @ k2
    gd2 = ctx.matrices @ d2
    size = ctx.order
    A = np.zeros((size, size), dtype=complex)
    mults = rs.root_multiplicities()
    rows = np.arange(size)
    for r, alpha in enumerate(rs.positive_roots):
        ka = mults[r]
        if ka == 0.0:
            continue
        a_k1 = float(alpha @ k1)
        a_d1 = float(alpha @ d1)
        a_gk2 = gk2 @ alpha
        a_gd2 = gd2 @ alpha
        if abs(a_k1) < 1e-14 or np.min(np.abs(a_gk2)) < 1e-14:
            raise NumericError("curve pairing vanished; curve not admissible")
        coef = ka * (a_d1 / a_k1 + a_gd2 / a_gk2)
        phase = np.exp(-1j * (2.0 / float(alpha @ alpha)) * a_k1 * a_gk2)
        A[rows, ctx.sigma_perms[r]] += coef * phase
    return A


def _max_frequency(ctx: EvalContext, curve: AdmissibleCurvePair,
                   t: float) -> float:
    """Largest phase speed d/dt of the coupling phases at time t."""
    rs = ctx.rs
    k1, k2 = curve.kappa(t)
    d1, d2 = curve.kappa_prime(t)
    gk2 = ctx.matrices @ k2
    gd2 = ctx.matrices @ d2
    best = 0.0
    for alpha in rs.positive_roots:
        scale = 2.0 / float(alpha @ alpha)
        speed = np.abs((alpha @ d1) * (gk2 @ alpha)
                       + (alpha @ k1) * (gd2 @ alpha)) * scale
        best = max(best, float(np.max(speed)))
    return best


def _ray_coupling(ctx: EvalContext, curve: AdmissibleCurvePair
                  ) -> tuple[list[np.ndarray], list[float], list[np.ndarray]]:
    """Per-arc structure of the ray system: permutations, multiplicities,
    and phase slopes c with F'_g = sum (2k/t) e^{-i c_g t^2} F[perm g]."""
    rs = ctx.rs
    u1, u2 = curve.directions
    mults = rs.root_multiplicities()
    gu2 = ctx.matrices @ u2
    perms: list[np.ndarray] = []
    weights: list[float] = []
    slopes: list[np.ndarray] = []
    for r, alpha in enumerate(rs.positive_roots):
        if mults[r] == 0.0:
            continue
        c = (2.0 / float(alpha @ alpha)) * float(alpha @ u1) * (gu2 @ alpha)
        perms.append(ctx.sigma_perms[r])
        weights.append(float(mults[r]))
        slopes.append(c)
    return perms, weights, slopes


def _live_roots(rs) -> list[tuple[int, np.ndarray, float, float]]:
    """(index, root, multiplicity, 2/|root|^2) for roots that couple."""
    mults = rs.root_multiplicities()
    return [(r, rs.positive_roots[r], float(mults[r]),
             2.0 / float(rs.positive_roots[r] @ rs.positive_roots[r]))
            for r in range(len(mults)) if mults[r] != 0.0]


def _rhs_closure(ctx: EvalContext, curve: AdmissibleCurvePair):
    """Matrix-free A(t) F evaluation, precomputed as far as the curve allows."""
    if curve.kind == "ray":
        perms, weights, slopes = _ray_coupling(ctx, curve)

        def apply_ray(t: float, F: np.ndarray) -> np.ndarray:
            out = np.zeros_like(F)
            tt = t * t
            for p, k, c in zip(perms, weights, slopes):
                out += (2.0 * k / t) * np.exp(-1j * c * tt) * F[p]
            return out

        return apply_ray

    live = _live_roots(ctx.rs)

    def apply_general(t: float, F: np.ndarray) -> np.ndarray:
        k1, k2 = curve.kappa(t)
        d1, d2 = curve.kappa_prime(t)
        gk2 = ctx.matrices @ k2
        gd2 = ctx.matrices @ d2
        out = np.zeros_like(F)
        for r, alpha, k, scale in live:
            a_k1 = float(alpha @ k1)
            a_d1 = float(alpha @ d1)
            a_gk2 = gk2 @ alpha
            a_gd2 = gd2 @ alpha
            coef = k * (a_d1 / a_k1 + a_gd2 / a_gk2)
            out += coef * np.exp(-1j * scale * a_k1 * a_gk2) * F[ctx.sigma_perms[r]]
        return out

    return apply_general


def _magnus_switch(ctx: EvalContext, curve: AdmissibleCurvePair) -> float:
    """Earliest time from which one-exponential pieces hold their budget.

    Slopes are taken at the limiting directions; for a rotating ray the
    instantaneous frequencies differ by O(rate/t), immaterial here.
    """
    _, _, slopes = _ray_coupling(ctx, curve)
    if not slopes:
        return np.inf
    cmin = min(float(np.min(np.abs(c))) for c in slopes)
    if cmin <= 0.0:
        return np.inf
    return math.sqrt(MAGNUS_PHASE / cmin)


def _integrate_classical(ctx: EvalContext, curve: AdmissibleCurvePair,
                         f: np.ndarray, t0: float, t1: float,
                         rtol: float) -> np.ndarray:
    apply_A = _rhs_closure(ctx, curve)
    atol = 1e-13 * max(1.0, float(np.max(np.abs(f))))

    def rhs(t, flat):
        return apply_A(t, flat.view(complex)).view(float)

    s = t0
    forward = t1 >= t0
    while (s < t1) if forward else (s > t1):
        e = min(2.0 * s, t1) if forward else max(0.5 * s, t1)
        omega = max(_max_frequency(ctx, curve, s),
                    _max_frequency(ctx, curve, e), 1e-6)
        # cap at ~pi samples per oscillation period: enough to rule out
        # aliasing, while the error controller owns the accuracy
        sol = solve_ivp(rhs, (s, e), f.view(float).copy(), method="DOP853",
                        rtol=rtol, atol=atol, max_step=2.0 / omega)
        if not sol.success:
            raise NumericError("F integration failed at t=%g: %s"
                               % (s, sol.message))
        f = sol.y[:, -1].copy().view(complex)
        s = e
    return f


def _integrate_magnus_ray(ctx: EvalContext, curve: AdmissibleCurvePair,
                          f: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """One matrix exponential per doubling piece of u = t^2.

    In u the ray system reads dF/du = (1/u) sum k e^{i dpsi u} F[perm] with
    psi_g = <u1, g u2>, the same form the kernel march takes, so the shared
    generator applies with no scalar decay part.
    """
    perms, weights, _ = _ray_coupling(ctx, curve)
    u1, u2 = curve.directions
    psi = (ctx.matrices @ u2) @ u1
    a = t0 * t0
    ub = t1 * t1
    forward = ub >= a
    while (a < ub * (1.0 - 1e-12)) if forward else (a > ub * (1.0 + 1e-12)):
        b = min(2.0 * a, ub) if forward else max(0.5 * a, ub)
        Om = magnus_generator(perms, weights, psi, a, b)
        f = expm(Om) @ f
        a = b
    return f


def _pairing_phases(ctx: EvalContext, curve: AdmissibleCurvePair,
                    u: float) -> np.ndarray:
    """<k1(t), g k2(t)> for every g at u = t^2; F_g carries e^{-i psi_g}."""
    t = math.sqrt(u)
    k1, k2 = curve.kappa(t)
    return (ctx.matrices @ k2) @ k1


def _arc_weights(ctx: EvalContext, curve: AdmissibleCurvePair,
                 live: list, u: float) -> list[np.ndarray]:
    """u times the arc amplitudes of dF/du at u = t^2, one row per live
    root; exactly the multiplicity on a pure ray leg."""
    t = math.sqrt(u)
    k1, k2 = curve.kappa(t)
    d1, d2 = curve.kappa_prime(t)
    gk2 = ctx.matrices @ k2
    gd2 = ctx.matrices @ d2
    out = []
    for _, alpha, k, _ in live:
        a_k1 = float(alpha @ k1)
        a_d1 = float(alpha @ d1)
        out.append(k * (a_d1 / a_k1 + (gd2 @ alpha) / (gk2 @ alpha))
                   * u / (2.0 * t))
    return out


def _integrate_magnus_rotating(ctx: EvalContext, curve: AdmissibleCurvePair,
                               f: np.ndarray, t0: float, t1: float
                               ) -> np.ndarray:
    """One-exponential pieces for a rotating second leg, in u = t^2.

    The pairing phases are evaluated exactly at the piece ends; each piece
    runs on the secant frequencies plus a midpoint offset, with midpoint
    amplitudes, and halves itself until the leftover phase curvature fits a
    fixed budget. Piece counts then grow only like u^(1/4), so the rotation
    never drags the cost back to the oscillation period.
    """
    live = _live_roots(ctx.rs)
    perms = [ctx.sigma_perms[r] for r, _, _, _ in live]
    a = t0 * t0
    ub = t1 * t1
    forward = ub >= a
    psi_a = _pairing_phases(ctx, curve, a)
    while (a < ub * (1.0 - 1e-12)) if forward else (a > ub * (1.0 + 1e-12)):
        b = min(2.0 * a, ub) if forward else max(0.5 * a, ub)
        psi_b = _pairing_phases(ctx, curve, b)
        for _ in range(60):
            um = 0.5 * (a + b)
            psi_m = _pairing_phases(ctx, curve, um)
            curvature = float(np.max(np.abs(psi_a - 2.0 * psi_m + psi_b)))
            if curvature <= 1e-3:
                break
            b = um
            psi_b = psi_m
        slope = (psi_b - psi_a) / (b - a)
        offsets = psi_m - slope * um
        weights = _arc_weights(ctx, curve, live, um)
        Om = magnus_generator(perms, weights, slope, a, b, offsets=offsets)
        f = expm(Om) @ f
        a = b
        psi_a = psi_b
    return f


def integrate_F(ctx: EvalContext, curve: AdmissibleCurvePair,
                t0: float, t1: float, *, rtol: float = 1e-10,
                f_init: np.ndarray | None = None) -> OrbitVector:
    """Propagate F from t0 to t1 along the curve; endpoint as OrbitVector.

    Stepping segments double in length with the step cap tied to the local
    oscillation period, so the integrator never skips a cycle. On rays,
    once every arc oscillates fast enough the remaining span collapses to
    one matrix exponential per doubling piece. Works in either direction.
    """
    if f_init is None:
        k1, k2 = curve.kappa(t0)
        f = f_normalized(ctx, k1, k2).values.copy()
    else:
        f = np.asarray(f_init, dtype=complex).copy()

    ts = _magnus_switch(ctx, curve)
    fast = (_integrate_magnus_ray if curve.kind == "ray"
            else _integrate_magnus_rotating)
    if t1 >= t0:
        mid = float(np.clip(ts, t0, t1))
        if mid > t0:
            f = _integrate_classical(ctx, curve, f, t0, mid, rtol)
        if t1 > mid:
            f = fast(ctx, curve, f, mid, t1)
    else:
        mid = float(np.clip(ts, t1, t0))
        if mid < t0:
            f = fast(ctx, curve, f, t0, mid)
        if t1 < mid:
            f = _integrate_classical(ctx, curve, f, mid, t1, rtol)
    if not np.all(np.isfinite(f)):
        raise NumericError("F integration produced non-finite values")
    return OrbitVector(ctx.group, f)


def estimate_v(ctx: EvalContext, curve: AdmissibleCurvePair,
               tol: float = 1e-2, *, t_start: float = 8.0,
               max_doublings: int = 14) -> tuple[OrbitVector, dict]:
    """Limit vector of F along the curve, with a convergence table.

    Checkpoints sit at t_j = t_start 2^j. The extrapolant R_j =
    2 F(t_{j+1}) - F(t_j) cancels a c/t tail exactly, and the estimate is
    accepted once consecutive extrapolants agree componentwise below tol
    twice in a row. Slow tails are reported as non-convergence, not raised.
    """
    curve.validate_in_cone(ctx.rs)
    ts = [t_start * 2.0 ** j for j in range(max_doublings + 1)]
    k1, k2 = curve.kappa(ts[0])
    f = f_normalized(ctx, k1, k2).values
    checkpoints = [f]
    table = [[ts[0]] + _flatten(f)]
    richardson: list[np.ndarray] = []
    residuals: list[float] = []
    converged = False
    v = f
    for j in range(max_doublings):
        f = integrate_F(ctx, curve, ts[j], ts[j + 1], f_init=f).values
        checkpoints.append(f)
        table.append([ts[j + 1]] + _flatten(f))
        richardson.append(2.0 * f - checkpoints[-2])
        if len(richardson) >= 2:
            delta = float(np.max(np.abs(richardson[-1] - richardson[-2])))
            residuals.append(delta)
            v = richardson[-1]
            if len(residuals) >= 2 and residuals[-1] < tol and residuals[-2] < tol:
                converged = True
                break
    norm_v = float(np.max(np.abs(v)))
    if norm_v <= 0.0:
        raise NumericError("estimated limit vector is zero")
    diagnostics = {
        "checkpoints": [float(t) for t in ts[:len(checkpoints)]],
        "table": table,
        "residuals": residuals,
        "converged": converged,
        "tol": tol,
        "norm": norm_v,
    }
    return OrbitVector(ctx.group, v), diagnostics


def _flatten(values: np.ndarray) -> list[float]:
    out: list[float] = []
    for z in values:
        out.append(float(z.real))
        out.append(float(z.imag))
    return out


def derivative_residuals(ctx: EvalContext, curve: AdmissibleCurvePair,
                         ts: np.ndarray, *, h_scale: float = 0.1
                         ) -> np.ndarray:
    """Relative residual between A(t) F(t) and a Richardson central
    difference of the directly evaluated F, one value per requested t."""
    out = np.empty(len(ts))
    for i, t in enumerate(np.asarray(ts, dtype=float)):
        omega = max(_max_frequency(ctx, curve, t), 1e-6)
        h = h_scale / omega

        def F(tt: float) -> np.ndarray:
            k1, k2 = curve.kappa(tt)
            return f_normalized(ctx, k1, k2).values

        lhs = ode_matrix_A(ctx, curve, t) @ F(t)
        d_h = (F(t + h) - F(t - h)) / (2.0 * h)
        d_h2 = (F(t + 0.5 * h) - F(t - 0.5 * h)) / h
        fd = (4.0 * d_h2 - d_h) / 3.0
        scale = max(float(np.max(np.abs(lhs))), 1e-30)
        out[i] = float(np.max(np.abs(fd - lhs))) / scale
    return out
