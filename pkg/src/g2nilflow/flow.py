"""Laplacian flow d phi/dt = Delta_phi phi on the 35-dimensional space of
invariant 3-forms, plus the reduced u-v system, blow-up location, bracket
flow and curvature-decay tracking.

The integrator is an embedded Dormand-Prince 5(4) pair with a
proportional-integral step controller.  Trial stages that leave the positive
cone are treated as rejected steps; a blow-up event is recorded when the step
size underflows, positivity fails, or a coefficient exceeds the overflow
guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import default_tol
from .curvature import SolitonCertificate, levi_civita, nilsoliton_solve, riemann
from .forms import DIM, INDEX_POS, INDICES, KForm, pullback
from .g2 import (
    DegenerateFormError,
    NonPositiveFormError,
    identity_metric,
    metric_from_g2,
    pipeline_for,
)
from .liealg import LieAlgebra, ce_differential

N3 = len(INDICES[3])

STEP_UNDERFLOW = 1e-14
COEFF_OVERFLOW = 1e12


@dataclass(frozen=True)
class FlowState:
    t: float
    c: np.ndarray  # 35 coefficients in lexicographic multi-index order

    def form(self) -> KForm:
        return KForm.from_vector(3, self.c)


@dataclass(frozen=True)
class StepRecord:
    t: float
    h: float
    error: float


@dataclass(frozen=True)
class FlowEvent:
    type: str  # "blowup" | "completed"
    t: float
    reason: str

    def to_json_obj(self) -> dict:
        return {"type": self.type, "t": self.t, "reason": self.reason}


@dataclass
class Trajectory:
    samples: list[FlowState]
    step_meta: list[StepRecord] = field(default_factory=list)
    events: list[FlowEvent] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([s.c for s in self.samples])

    def state_at(self, t: float, tol: float = 1e-9) -> FlowState:
        for s in self.samples:
            if abs(s.t - t) <= tol:
                return s
        raise KeyError(f"no sample at t = {t}")

    @property
    def completed(self) -> bool:
        return any(e.type == "completed" for e in self.events)


def blowup_time(events) -> float:
    if hasattr(events, "events"):
        events = events.events
    for e in events:
        if e.type == "blowup":
            return e.t
    raise ValueError("no blow-up event recorded")


class _StageFailure(Exception):
    """Trial RK stage left the admissible region; retry with a smaller step."""


# Dormand-Prince 5(4) tableau (FSAL)
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                   -92097 / 339200, 187 / 2100, 1 / 40])
_ERR_W = _DP_B5 - _DP_B4

# PI controller constants
_PI_ALPHA = 0.7 / 5.0
_PI_BETA = 0.4 / 5.0
_SAFETY, _FAC_MIN, _FAC_MAX = 0.9, 0.2, 10.0
_REJECT_ERR = 16.0  # pseudo-error assigned to failed trial stages


def _dopri5(f, t0: float, y0: np.ndarray, t_end: float, rtol: float, atol: float,
            t_eval=None, guard=None):
    """Adaptive DOPRI5 core.

    ``f(t, y)`` may raise _StageFailure to reject a trial stage; ``guard(y)``
    vets accepted states the same way.  Sampling: every accepted step when
    ``t_eval`` is None, else exactly the requested times (plus t0).  Returns
    (samples, step_meta, events).
    """
    direction = 1.0 if t_end >= t0 else -1.0
    span = abs(t_end - t0)
    samples = [(t0, y0.copy())]
    meta: list[StepRecord] = []
    events: list[FlowEvent] = []
    if span == 0.0:
        events.append(FlowEvent("completed", t0, "zero span"))
        return samples, meta, events

    record_all = t_eval is None
    # queue[-1] must always be the next target in integration direction
    queue = [] if record_all else sorted(
        {float(t) for t in t_eval if (float(t) - t0) * direction > 0
         and (t_end - float(t)) * direction >= -1e-12 * span},
        reverse=(direction > 0),
    )

    k1 = f(t0, y0)  # also validates the initial state
    scale0 = atol + rtol * max(1.0, float(np.abs(y0).max()))
    d1 = float(np.abs(k1).max()) / scale0
    h = direction * min(0.01 / d1 if d1 > 0 else 1e-6 * span, span)

    t, y = t0, y0.copy()
    err_prev = 1.0

    while (t_end - t) * direction > 1e-14 * max(1.0, abs(t_end)):
        target = queue[-1] if queue else t_end
        clamped = (t + h - target) * direction >= 0.0
        h_try = target - t if clamped else h

        if abs(h_try) < STEP_UNDERFLOW:
            events.append(FlowEvent("blowup", t, "step size underflow"))
            return samples, meta, events

        try:
            K = [k1]
            for s in range(1, 7):
                ys = y + h_try * np.tensordot(_DP_A[s], np.array(K[:s]), axes=(0, 0))
                K.append(f(t + _DP_C[s] * h_try, ys))
            Karr = np.array(K)
            y5 = y + h_try * (_DP_B5 @ Karr)
            err_vec = h_try * (_ERR_W @ Karr)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
            if not math.isfinite(err):
                raise _StageFailure("non-finite error estimate")
            if err <= 1.0 and guard is not None:
                guard(y5)
        except _StageFailure:
            err = _REJECT_ERR

        if err <= 1.0:  # accept
            t = target if clamped else t + h_try
            y = y5
            k1 = K[6]  # FSAL: last stage is f at the new state
            meta.append(StepRecord(t, h_try, err))
            if float(np.abs(y).max()) > COEFF_OVERFLOW:
                samples.append((t, y.copy()))
                events.append(FlowEvent("blowup", t, "coefficient overflow"))
                return samples, meta, events
            if record_all:
                samples.append((t, y.copy()))
            elif clamped and queue and target == queue[-1]:
                queue.pop()
                samples.append((t, y.copy()))
            fac = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA if err > 0 else _FAC_MAX
            err_prev = max(err, 1e-10)
            base = h if clamped else h_try  # clamping must not shrink future steps
        else:  # reject
            fac = _SAFETY * err ** (-_PI_ALPHA)
            base = h_try
        h = base * min(_FAC_MAX, max(_FAC_MIN, fac))

    events.append(FlowEvent("completed", t, "reached t_end"))
    return samples, meta, events


# ---------------------------------------------------------------------------
# the full 35-dimensional flow
# ---------------------------------------------------------------------------

def flow_rhs(state: FlowState, L: LieAlgebra) -> np.ndarray:
    """Right-hand side Delta phi as a 35-vector."""
    return pipeline_for(L).laplacian_vec(np.asarray(state.c, dtype=float))


def integrate(L: LieAlgebra, phi0: KForm, t_end: float, tol: float = 1e-10,
              t_eval=None, atol: float = 1e-12) -> Trajectory:
    """Integrate the Laplacian flow from a closed positive 3-form.

    Samples are recorded at every accepted step, or exactly at ``t_eval``
    when given.  Negative ``t_end`` integrates backward; finite-time
    degeneration is reported as a blow-up event holding the last valid time.
    """
    if phi0.degree != 3:
        raise ValueError("initial datum must be a 3-form")
    if ce_differential(phi0, L).max_abs() > default_tol() * max(1.0, phi0.max_abs()):
        raise ValueError("initial form is not closed")
    metric_from_g2(phi0)  # raises if not positive
    pipe = pipeline_for(L)

    def f(t, c):
        try:
            return pipe.laplacian_vec(c)
        except (DegenerateFormError, NonPositiveFormError) as exc:
            raise _StageFailure(str(exc)) from exc

    def guard(c):
        try:
            pipe.metric_of(c)
        except (DegenerateFormError, NonPositiveFormError) as exc:
            raise _StageFailure(str(exc)) from exc

    samples, meta, events = _dopri5(f, 0.0, phi0.to_vector(), float(t_end), tol,
                                    atol, t_eval=t_eval, guard=guard)
    return Trajectory([FlowState(t, c) for t, c in samples], meta, events)


def closedness_drift(traj: Trajectory, L: LieAlgebra) -> float:
    """max over samples of ||d phi(t)||_inf."""
    pipe = pipeline_for(L)
    return max(pipe.closedness_residual(s.c) for s in traj.samples)


def log_times(t_end: float, per_decade: int = 512, t_min: float = 1e-3) -> np.ndarray:
    """0 plus log-spaced sample times up to t_end (sign-aware)."""
    sign = 1.0 if t_end >= 0 else -1.0
    span = abs(t_end)
    if span <= t_min:
        return np.array([0.0, t_end])
    decades = math.log10(span / t_min)
    n = max(2, int(round(per_decade * decades)))
    ts = t_min * 10.0 ** np.linspace(0.0, decades, n)
    return np.concatenate([[0.0], sign * ts[:-1], [t_end]])


# ---------------------------------------------------------------------------
# reduced u-v system shared by the two 3-step families
# ---------------------------------------------------------------------------

OMEGA_U_MAX = 2.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class ReducedState:
    u: float
    v: float

    def in_domain(self) -> bool:
        return 0.0 < self.u < OMEGA_U_MAX and self.v > 0.0


def reduced_rhs(y: np.ndarray) -> np.ndarray:
    """u' = (2/3)(2-u^3)/(u^3 v^3),  v' = -(2/3)(1-2u^3)/(u^4 v^2)."""
    u, v = y
    return np.array([
        (2.0 / 3.0) * (2.0 - u ** 3) / (u ** 3 * v ** 3),
        -(2.0 / 3.0) * (1.0 - 2.0 * u ** 3) / (u ** 4 * v ** 2),
    ])


@dataclass
class ReducedTrajectory:
    samples: list[tuple[float, ReducedState]]
    events: list[FlowEvent] = field(default_factory=list)

    def final(self) -> tuple[float, ReducedState]:
        return self.samples[-1]


def reduced_flow_n4(s0: ReducedState, t_end: float, tol: float = 1e-10,
                    t_eval=None) -> ReducedTrajectory:
    """Integrate the reduced system inside Omega = {0 < u < 2^(1/3), v > 0}."""
    if not s0.in_domain():
        raise ValueError("initial state outside the phase domain")

    def check(y):
        if not (0.0 < y[0] < OMEGA_U_MAX and y[1] > 0.0) or not np.all(np.isfinite(y)):
            raise _StageFailure("left phase domain")

    def f(t, y):
        check(y)
        return reduced_rhs(y)

    samples, meta, events = _dopri5(f, 0.0, np.array([s0.u, s0.v]), float(t_end),
                                    tol, 1e-12, t_eval=t_eval, guard=check)
    return ReducedTrajectory([(t, ReducedState(y[0], y[1])) for t, y in samples],
                             events)


# the two 3-step families reduce to the identical vector field
reduced_flow_n6 = reduced_flow_n4


def t_min_quadrature(abs_tol: float = 1e-12) -> float:
    """-(3/2) * integral_0^1 x^{3/2} (2 - x^3)^{-5/2} dx by adaptive Simpson."""

    def f(x: float) -> float:
        return x ** 1.5 * (2.0 - x ** 3) ** -2.5

    def simpson(a, fa, fm, fb, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def adapt(a, fa, b, fb, fm, whole, tol_piece, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(a, fa, flm, fm, m)
        right = simpson(m, fm, frm, fb, b)
        if depth > 60 or abs(left + right - whole) <= 15.0 * tol_piece:
            return left + right + (left + right - whole) / 15.0
        return (adapt(a, fa, m, fm, flm, left, tol_piece / 2.0, depth + 1)
                + adapt(m, fm, b, fb, frm, right, tol_piece / 2.0, depth + 1))

    a, b = 0.0, 1.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    integral = adapt(a, fa, b, fb, fm, simpson(a, fa, fm, fb, b), abs_tol, 0)
    return -1.5 * integral


# ---------------------------------------------------------------------------
# matching the full flow against the reduced solution displays
# ---------------------------------------------------------------------------

def _uv_from_coeffs(c: np.ndarray, family: str) -> tuple[float, float]:
    """Invert the coefficient map: s = u^2 v and w = u v^2 determine (u, v)."""
    if family == "n4":
        s = c[INDEX_POS[3][(1, 3, 5)]]
        w = -c[INDEX_POS[3][(1, 2, 4)]] - 0.25 * (s - 1.0) ** 2
    elif family == "n6":
        s = c[INDEX_POS[3][(1, 4, 5)]]
        w = c[INDEX_POS[3][(1, 2, 3)]] - 0.25 * (s - 1.0) ** 2
    else:
        raise ValueError("reduction matching supports n4 and n6")
    if s <= 0 or w <= 0:
        raise ValueError("coefficients left the reduced chart")
    return (s * s / w) ** (1.0 / 3.0), (w * w / s) ** (1.0 / 3.0)


def _display_coeffs(u: float, v: float, family: str) -> np.ndarray:
    """The 35-vector of the published solution for the given (u, v)."""
    s = u * u * v
    w = u * v * v
    c = np.zeros(N3)
    pos = INDEX_POS[3]
    if family == "n4":
        c[pos[(1, 2, 4)]] = -0.25 * (s * s - 2.0 * s + 4.0 * w + 1.0)
        c[pos[(1, 2, 7)]] = 0.5 * (s - 1.0)
        c[pos[(1, 3, 5)]] = s
        c[pos[(1, 6, 7)]] = 1.0
        c[pos[(2, 3, 6)]] = -1.0
        c[pos[(2, 4, 5)]] = 0.5 * (s - 1.0)
        c[pos[(2, 5, 7)]] = 1.0
        c[pos[(3, 4, 7)]] = 1.0
        c[pos[(4, 5, 6)]] = -1.0
    else:
        c[pos[(1, 2, 3)]] = 0.25 * (1.0 + 4.0 * w - 2.0 * s + s * s)
        c[pos[(3, 4, 7)]] = 1.0
        c[pos[(3, 5, 6)]] = 1.0
        c[pos[(1, 6, 7)]] = 1.0
        c[pos[(2, 4, 6)]] = -1.0
        c[pos[(2, 5, 7)]] = 1.0
        c[pos[(1, 4, 5)]] = s
        c[pos[(1, 3, 6)]] = 0.5 * (1.0 - s)
        c[pos[(1, 2, 7)]] = -0.5 * (1.0 - s)
    return c


def full_flow_matches_reduction(traj: Trajectory, family: str) -> float:
    """Max residual of the published coefficient identities along a trajectory.

    (u, v) are read off each sample through the coefficient map; every one of
    the 35 coefficients is then compared against the solution display.
    """
    worst = 0.0
    for st in traj.samples:
        u, v = _uv_from_coeffs(st.c, family)
        worst = max(worst, float(np.abs(st.c - _display_coeffs(u, v, family)).max()))
    return worst


def reduced_conservation_residual(rt: ReducedTrajectory) -> float:
    """Max deviation of v - 1/sqrt(u(2-u^3)) along a reduced trajectory."""
    return max(abs(st.v - 1.0 / math.sqrt(st.u * (2.0 - st.u ** 3)))
               for _, st in rt.samples)


# ---------------------------------------------------------------------------
# bracket flow
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BracketState:
    t: float
    mu: tuple[KForm, ...]  # d x^k of the evolved bracket, degree-2 forms

    def sup_norm(self) -> float:
        return max(f.max_abs() for f in self.mu)


@dataclass(frozen=True)
class FrameNormalization:
    """Sparsity pattern of the allowed frame change.

    Diagonal scalings x^a = f_a e^a, plus shear entries (a, b) meaning
    x^a = f_a e^a + h e^b.  Each shear column b may be hit by at most one
    shear, and shear rows must not themselves be shear columns.
    """

    shears: tuple[tuple[int, int], ...] = ()


_NORMALIZATIONS: dict[str, FrameNormalization] = {
    "n2": FrameNormalization(),
    "n12-orthonormal": FrameNormalization(),
    "n4": FrameNormalization(shears=((5, 1), (6, 2), (7, 4))),
    "n6": FrameNormalization(shears=((6, 2), (7, 3))),
}


def _solve_frame(c: np.ndarray, phi0: KForm, spec: FrameNormalization,
                 tol: float = 1e-7) -> np.ndarray:
    """Frame-change matrix A with Lambda^3(A) phi0 = phi(t), or raise.

    Since phi0 induces the identity metric, any admissible A satisfies
    A^T A = g(phi(t)); within the diagonal-plus-shear pattern that equation
    is solved entry by entry (positive diagonal), then verified against the
    actual coefficients.
    """
    g = metric_from_g2(KForm.from_vector(3, c)).G
    shear_cols = {b for _, b in spec.shears}
    A = np.zeros((DIM, DIM))
    for i in range(1, DIM + 1):
        if i not in shear_cols:
            if g[i - 1, i - 1] <= 0:
                raise ValueError("frame normalization failed: lost positivity")
            A[i - 1, i - 1] = math.sqrt(g[i - 1, i - 1])
    for a, b in spec.shears:
        A[a - 1, b - 1] = g[a - 1, b - 1] / A[a - 1, a - 1]
    for b in shear_cols:
        rem = g[b - 1, b - 1] - sum(A[a - 1, b - 1] ** 2 for a, bb in spec.shears if bb == b)
        if rem <= 0:
            raise ValueError("frame normalization failed: lost positivity")
        A[b - 1, b - 1] = math.sqrt(rem)

    if np.abs(pullback(phi0, A).to_vector() - c).max() > tol * max(1.0, np.abs(c).max()):
        raise ValueError("frame normalization failed: residual too large")
    return A


def _normalized_bracket(L: LieAlgebra, A: np.ndarray) -> tuple[KForm, ...]:
    """Structure 2-forms d x^k of the bracket pushed through the frame change."""
    Ainv = np.linalg.inv(A)
    mu = []
    for k in range(DIM):
        de = KForm.zero(2)
        for j in range(DIM):
            if A[k, j] != 0.0:
                de = de + A[k, j] * L.d1[j]
        mu.append(pullback(de, Ainv))
    return tuple(mu)


def bracket_flow(L: LieAlgebra, phi0: KForm, t_end: float, tol: float = 1e-10,
                 t_eval=None) -> list[BracketState]:
    """Fix the 3-form, evolve the bracket: push d through the normalization.

    Supported for the catalog forms whose flow stays inside the
    diagonal-plus-shear frame family (n2, n4, n6, n12-orthonormal).
    """
    spec = _NORMALIZATIONS.get(L.name)
    if spec is None:
        raise ValueError(f"frame normalization failed: no scheme for {L.name!r}")
    traj = integrate(L, phi0, t_end, tol=tol, t_eval=t_eval)
    return [BracketState(s.t, _normalized_bracket(L, _solve_frame(s.c, phi0, spec)))
            for s in traj.samples]


# ---------------------------------------------------------------------------
# curvature decay and solitons along the flow
# ---------------------------------------------------------------------------

def curvature_decay(traj: Trajectory, L: LieAlgebra) -> list[tuple[float, float]]:
    """Per-sample sup-norm of the Riemann tensor of g(phi(t)).

    Components are taken in a g(t)-orthonormal frame (Cholesky of the running
    metric), the frame in which the published decay laws are stated; fixed
    raw-frame components would pick up spurious scale factors.
    """
    out = []
    for s in traj.samples:
        g = metric_from_g2(s.form())
        R = riemann(levi_civita(L, g), L).R
        Q = np.linalg.inv(np.linalg.cholesky(g.G)).T  # Q^T G Q = identity
        Rx = np.einsum("ijkl,ia,jb,kc,ld->abcd", R, Q, Q, Q, Q)
        out.append((s.t, float(np.abs(Rx).max())))
    return out


def soliton_along_flow(traj: Trajectory, L: LieAlgebra,
                       phi0: KForm | None = None) -> list[tuple[float, SolitonCertificate]]:
    """Nilsoliton certificates in the normalized orthonormal frame per sample."""
    spec = _NORMALIZATIONS.get(L.name)
    if spec is None:
        raise ValueError(f"frame normalization failed: no scheme for {L.name!r}")
    if phi0 is None:
        phi0 = traj.samples[0].form()
    out = []
    for s in traj.samples:
        mu = _normalized_bracket(L, _solve_frame(s.c, phi0, spec))
        evolved = LieAlgebra(f"{L.name}:t={s.t:g}", mu)
        out.append((s.t, nilsoliton_solve(evolved, identity_metric())))
    return out
