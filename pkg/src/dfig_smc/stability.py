"""Checkable stability certificates for the sliding-mode bank.

Four certificates back the closed-loop design:

* switching-gain bound: on the actuated channel, any gain above
  k_min = (||A||_2 + M) / |alpha.b| dominates the linear drift plus a
  norm-bounded unmodeled term ||phi(x, u)|| < M ||x||, which is a
  sufficient condition for s ds/dt < 0 during reaching;

* Lyapunov matrix condition: the sliding dynamics (the order-(n-1)
  regular-form reduction along the surface, and the full-order loop
  closed by the equivalent-control feedback) must admit a symmetric
  P > 0 with (A - B L)^T P + P (A - B L) = -I; the small linear system
  is solved exactly via a Kronecker-product vectorization;

* non-quadratic surface function: V = sum_i P_i s_i^2 over the bank's
  surfaces (positive weights), the quantity whose runtime descent the
  engine records;

* reaching monitor: a trace-level check of s ds/dt <= -eta |s| outside
  the boundary layer, with ds/dt from central differences. This is the
  ground-truth runtime verification that the analytic bounds only
  approximate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    LengthMismatch,
    NonPositiveWeight,
    SingularCB,
    SingularLyapunov,
    TooShortTrace,
    ValidationError,
)
from .multimodel import SubModel

_AUTHORITY_TOL = 1e-12
_PAIR_SUM_TOL = 1e-9
# maximum admissible runtime violation fraction for a certificate to pass
REACHING_FRACTION_LIMIT = 0.01


@dataclass(frozen=True)
class NonlinearBound:
    """Norm bound on the unmodeled part: ||phi(x, u)|| < m ||x||."""

    m: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.m) or self.m < 0:
            raise ValidationError(f"m >= 0 (got {self.m!r})")


@dataclass(frozen=True)
class ReachingReport:
    """Runtime reaching-condition audit over one recorded surface."""

    violation_fraction: float
    violation_times: np.ndarray
    n_eligible: int


@dataclass(frozen=True)
class StabilityCertificate:
    """Per-sub-model certificate results plus the runtime reaching audit."""

    gain_ok: tuple[bool, ...]
    lyapunov_p: tuple[np.ndarray, ...]       # reduced-order P, one per sub-model
    min_eig_p: tuple[float, ...]
    full_order_min_eig: tuple[float, ...]
    reaching_violation_fraction: float = 0.0

    def __post_init__(self):
        for p, me in zip(self.lyapunov_p, self.min_eig_p):
            if np.max(np.abs(p - p.T)) > 1e-10:
                raise ValidationError("lyapunov_p must be symmetric to 1e-10")
            if abs(float(np.linalg.eigvalsh(p).min()) - me) > 1e-8:
                raise ValidationError("min_eig_p inconsistent with lyapunov_p")
        if not 0.0 <= self.reaching_violation_fraction <= 1.0:
            raise ValidationError(
                f"reaching_violation_fraction in [0,1] "
                f"(got {self.reaching_violation_fraction!r})"
            )

    @property
    def ok(self) -> bool:
        return (
            all(self.gain_ok)
            and all(me > 0 for me in self.min_eig_p)
            and all(me > 0 for me in self.full_order_min_eig)
            and self.reaching_violation_fraction < REACHING_FRACTION_LIMIT
        )


def gain_bound(a_mat: np.ndarray, alpha: np.ndarray, b_col: np.ndarray,
               m_bound: float = 0.0) -> float:
    """Minimal admissible switching gain on one channel.

    k_min = (||A||_2 + M) / |alpha.b|: gains above it dominate the linear
    drift plus any disturbance bounded by M ||x||.
    """
    if m_bound < 0:
        raise ValidationError(f"m_bound >= 0 (got {m_bound!r})")
    a_mat = np.atleast_2d(np.asarray(a_mat, dtype=float))
    ab = float(np.dot(np.ravel(alpha), np.ravel(b_col)))
    if abs(ab) <= _AUTHORITY_TOL:
        raise SingularCB(f"alpha.b = {ab!r}: no authority, no finite gain bound")
    return (float(np.linalg.norm(a_mat, 2)) + m_bound) / abs(ab)


def lyapunov_check(
    a_red: np.ndarray,
    b_red: np.ndarray | None = None,
    l_red: np.ndarray | None = None,
) -> tuple[np.ndarray, float]:
    """Solve (A - B L)^T P + P (A - B L) = -I for symmetric P.

    Returns (P, min eigenvalue of P); the closed loop is certified stable
    iff the minimum eigenvalue is positive. Vectorized small-dimension
    solve: (I (x) Acl^T + Acl^T (x) I) vec(P) = -vec(I).
    """
    a_red = np.atleast_2d(np.asarray(a_red, dtype=float))
    n = a_red.shape[0]
    if a_red.shape != (n, n):
        raise ValidationError(f"closed-loop matrix must be square (got {a_red.shape})")
    acl = a_red
    if b_red is not None and l_red is not None:
        b = np.asarray(b_red, dtype=float).reshape(n, -1)
        l = np.asarray(l_red, dtype=float).reshape(-1, n)
        acl = a_red - b @ l

    # a pair of eigenvalues summing to zero makes the Lyapunov operator
    # singular (marginal closed loop) -- reject before solving
    eigs = np.linalg.eigvals(acl)
    pair_sums = np.abs(eigs[:, None] + eigs[None, :])
    scale = max(1.0, float(np.max(np.abs(eigs))))
    if float(pair_sums.min()) <= _PAIR_SUM_TOL * scale:
        raise SingularLyapunov(
            "closed-loop eigenvalues sum to zero in a pair; "
            "Lyapunov solve is singular (marginal stability)"
        )

    eye = np.eye(n)
    lhs = np.kron(eye, acl.T) + np.kron(acl.T, eye)
    try:
        vec_p = np.linalg.solve(lhs, -eye.reshape(-1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught above
        raise SingularLyapunov(str(exc)) from exc
    p = vec_p.reshape(n, n)
    p = 0.5 * (p + p.T)
    return p, float(np.linalg.eigvalsh(p).min())


def regular_form_reduction(
    a_mat: np.ndarray, b_col: np.ndarray, alpha: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Order-(n-1) sliding dynamics along the surface alpha.

    Rotates the state so the input column spans the last coordinate, then
    eliminates it through the constraint s = 0. Returns (A11, A12, L) with
    the sliding motion governed by A11 - A12 L.
    """
    a_mat = np.asarray(a_mat, dtype=float)
    b_col = np.asarray(b_col, dtype=float).reshape(-1)
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    n = b_col.shape[0]
    if a_mat.shape != (n, n) or alpha.shape != (n,):
        raise ValidationError("a_mat, b_col and alpha dimensions must agree")
    nb = float(np.linalg.norm(b_col))
    if nb <= _AUTHORITY_TOL:
        raise SingularCB("input column is zero")
    bn = b_col / nb

    # orthogonal completion with the input direction last
    q, _ = np.linalg.qr(np.column_stack([bn, np.eye(n)]))
    if float(q[:, 0] @ bn) < 0:
        q = q.copy()
        q[:, 0] *= -1.0
    t = np.column_stack([q[:, 1:], q[:, 0]])

    a_bar = t.T @ a_mat @ t
    alpha_bar = alpha @ t
    a2 = float(alpha_bar[-1])
    if abs(a2) <= _AUTHORITY_TOL:
        raise SingularCB("surface row has no component along the input direction")
    l_red = alpha_bar[:-1] / a2
    return a_bar[:-1, :-1], a_bar[:-1, -1], l_red


def full_order_feedback(
    a_mat: np.ndarray, b_col: np.ndarray, alpha: np.ndarray, k: float
) -> np.ndarray:
    """Equivalent-control feedback row closing the full-order loop.

    L = (alpha.b)^-1 (alpha.A + k alpha): the closed loop A - b L keeps the
    sliding eigenvalues and maps the surface coordinate to ds/dt = -k s.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(-1)
    b_col = np.asarray(b_col, dtype=float).reshape(-1)
    ab = float(alpha @ b_col)
    if abs(ab) <= _AUTHORITY_TOL:
        raise SingularCB(f"alpha.b = {ab!r}: cannot form equivalent feedback")
    if k <= 0:
        raise ValidationError(f"k > 0 (got {k!r})")
    return (alpha @ np.asarray(a_mat, dtype=float) + k * alpha) / ab


def nonquadratic_V(p_weights: np.ndarray, surface_values: np.ndarray) -> float:
    """V = sum_i P_i s_i^2 with strictly positive weights."""
    p = np.asarray(p_weights, dtype=float).reshape(-1)
    s = np.asarray(surface_values, dtype=float).reshape(-1)
    if p.shape != s.shape:
        raise LengthMismatch(f"weights ({p.shape}) and surfaces ({s.shape}) must align")
    if np.any(p <= 0):
        raise NonPositiveWeight(f"all weights must be > 0 (got {p.tolist()})")
    return float(p @ (s * s))


def reaching_monitor(
    t: np.ndarray,
    s: np.ndarray,
    eta: float = 1.0,
    omega_layer: float = 0.0,
) -> ReachingReport:
    """Audit s ds/dt <= -eta |s| on a recorded surface trace.

    ds/dt comes from central differences (one-sided at the ends). Samples
    inside the boundary layer |s| < omega_layer are in the sliding phase,
    where the continuous-time inequality does not apply, and are excluded.
    A 1e-9 band absorbs discretization noise. No eligible samples means no
    violations.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    s = np.asarray(s, dtype=float).reshape(-1)
    if t.shape != s.shape:
        raise LengthMismatch(f"t ({t.shape}) and s ({s.shape}) must align")
    if t.size < 2:
        raise TooShortTrace(f"need >= 2 samples to difference (got {t.size})")
    if eta <= 0:
        raise ValidationError(f"eta > 0 (got {eta!r})")
    if omega_layer < 0:
        raise ValidationError(f"omega_layer >= 0 (got {omega_layer!r})")

    sdot = np.gradient(s, t)
    eligible = np.abs(s) >= omega_layer
    violating = eligible & (s * sdot > -eta * np.abs(s) + 1e-9)
    n_eligible = int(eligible.sum())
    fraction = float(violating.sum() / n_eligible) if n_eligible else 0.0
    return ReachingReport(
        violation_fraction=fraction,
        violation_times=t[violating],
        n_eligible=n_eligible,
    )


def certify_bank(
    bank: list[SubModel],
    m_bound: float = 0.0,
    reaching_violation_fraction: float = 0.0,
) -> StabilityCertificate:
    """Run every analytic certificate over a sub-model bank.

    Gain bounds and both Lyapunov families (reduced sliding dynamics and
    the full-order equivalent-control loop) are evaluated per sub-model;
    a runtime reaching fraction measured on a trace may be folded in.
    """
    gain_ok: list[bool] = []
    p_mats: list[np.ndarray] = []
    min_eigs: list[float] = []
    full_eigs: list[float] = []
    for model in bank:
        k_min = gain_bound(model.a_mat, model.alpha, model.b_col, m_bound)
        gain_ok.append(bool(model.k_gain > k_min))
        a11, a12, l_red = regular_form_reduction(
            model.a_mat, model.b_col, model.alpha
        )
        p, me = lyapunov_check(a11, a12, l_red)
        p_mats.append(p)
        min_eigs.append(me)
        l_full = full_order_feedback(
            model.a_mat, model.b_col, model.alpha, model.k_gain
        )
        _, me_full = lyapunov_check(model.a_mat, model.b_col, l_full)
        full_eigs.append(me_full)
    return StabilityCertificate(
        gain_ok=tuple(gain_ok),
        lyapunov_p=tuple(p_mats),
        min_eig_p=tuple(min_eigs),
        full_order_min_eig=tuple(full_eigs),
        reaching_violation_fraction=reaching_violation_fraction,
    )
