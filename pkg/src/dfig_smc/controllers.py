"""Sliding-mode control laws for the electromagnetic subsystem.

All laws act on scalar surfaces s = alpha . (x - x_d) built over the
electromagnetic state x = (phi_dr, phi_qr, i_ds, i_qs). Three families:

* first-order sliding mode: u = u_eq - k * switch(s). The equivalent term
  u_eq = -(alpha.b)^-1 (alpha.A) x pins ds/dt = 0 on the nominal model;
  switch(s) is a hard sign, a boundary-layer saturation, or a plain
  proportional term.

* super-twisting: u = -lam2 sqrt(|s|) sign(s) + w with dw/dt = -W sign(s),
  lam2 = 1.5 sqrt(k), W = 1.1 k. The discontinuity lives inside the
  integrator, so the applied voltage is continuous and chattering drops by
  orders of magnitude without a model-based term.

* multimodel fusion: every sub-model contributes u_i = u_eq,i + u_s,i with
  a saturation switching term; the bank is blended by validity weights into
  u_g = sum_i v_i u_i alongside the fused surface S = sum_i v_i s_i.

Sign conventions match the plant module: with e = x - x_d and constant
references, ds/dt = (alpha.A) x + (alpha.b) u. The switching terms assume
positive authority alpha.b > 0 on the actuated channel (true for the
default surface rows, and validated by the engine; flip the row sign
otherwise), under which each law enforces s ds/dt = -k (alpha.b) |s| < 0
on the nominal model whenever the gain clears the disturbance bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SingularCB, ValidationError

MODES = ("smc1", "smc2", "smmc")
SWITCH_LAWS = ("sign", "saturation", "proportional")

# Super-twisting gains relative to the base switching gain k.
ST_GAIN_FACTOR = 1.5      # lam2 = 1.5 sqrt(k)
ST_INTEGRAL_FACTOR = 1.1  # W = 1.1 k

_AUTHORITY_TOL = 1e-12


@dataclass(frozen=True)
class SurfaceSpec:
    """Surface row and switching gain for one input channel."""

    alpha: np.ndarray
    k: float

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if not np.all(np.isfinite(alpha)) or not np.any(alpha):
            raise ValidationError("alpha must be finite and nonzero")
        object.__setattr__(self, "alpha", alpha)
        if not self.k > 0:
            raise ValidationError(f"k > 0 (got {self.k!r})")


@dataclass(frozen=True)
class ControllerConfig:
    """Controller family and tuning shared by the simulation engine."""

    mode: str = "smmc"
    k: float = 45.0               # switching gain for smc1/smc2
    switch_fn: str = "sign"       # smc1 switching law
    use_equivalent: bool = True   # smc1: add the model-based term
    lam: float = 1.0              # saturation ceiling
    omega_layer: float = 2.0      # boundary-layer half-width

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES} (got {self.mode!r})")
        if self.switch_fn not in SWITCH_LAWS:
            raise ValidationError(
                f"switch_fn must be one of {SWITCH_LAWS} (got {self.switch_fn!r})"
            )
        if not self.k > 0:
            raise ValidationError(f"k > 0 (got {self.k!r})")
        if not self.lam > 0:
            raise ValidationError(f"lam > 0 (got {self.lam!r})")
        if not self.omega_layer > 0:
            raise ValidationError(
                f"omega_layer > 0 (got {self.omega_layer!r})"
            )


def sliding_surface(alpha: np.ndarray, x: np.ndarray, x_d: np.ndarray) -> float:
    """s = alpha . (x - x_d)."""
    e = np.asarray(x, dtype=float) - np.asarray(x_d, dtype=float)
    return float(np.dot(np.asarray(alpha, dtype=float), e))


def equivalent_control(
    alpha: np.ndarray,
    a_mat: np.ndarray,
    b_col: np.ndarray,
    x: np.ndarray,
) -> float:
    """Model-based term u_eq = -(alpha.b)^-1 (alpha.A) x pinning ds/dt = 0."""
    ab = float(np.dot(alpha, b_col))
    if abs(ab) <= _AUTHORITY_TOL:
        raise SingularCB(f"surface row has no authority on this channel (alpha.b = {ab!r})")
    return -float(alpha @ a_mat @ np.asarray(x, dtype=float)) / ab


def switching_control(s: float, k: float) -> float:
    """Hard switching term -k sign(s), with sign(0) = 0."""
    return -k * float(np.sign(s))


def saturation_control(s: float, lam: float, omega_layer: float) -> float:
    """Boundary-layer primitive: lam sign(s) outside |s| >= omega_layer,
    linear lam s / omega_layer inside. Continuous at the layer edge."""
    if lam <= 0:
        raise ValidationError(f"lam > 0 (got {lam!r})")
    if omega_layer <= 0:
        raise ValidationError(f"omega_layer > 0 (got {omega_layer!r})")
    if abs(s) >= omega_layer:
        return lam * float(np.sign(s))
    return lam * s / omega_layer


def smc1_control(
    x: np.ndarray,
    x_d: np.ndarray,
    alpha: np.ndarray,
    a_mat: np.ndarray,
    b_col: np.ndarray,
    config: ControllerConfig,
) -> float:
    """First-order sliding-mode voltage on one input channel."""
    s = sliding_surface(alpha, x, x_d)
    u = 0.0
    if config.use_equivalent:
        u = equivalent_control(alpha, a_mat, b_col, x)
    if config.switch_fn == "sign":
        u = u + switching_control(s, config.k)
    elif config.switch_fn == "saturation":
        u = u - config.k * saturation_control(s, config.lam, config.omega_layer)
    else:  # proportional
        u = u - config.k * s
    return u


def smc2_control(s: float, k: float, w: float, dt: float) -> tuple[float, float]:
    """One super-twisting step on a scalar surface.

    Returns the applied control and the advanced integrator state; the
    caller owns w between steps (one integrator per channel).
    """
    if k <= 0:
        raise ValidationError(f"k > 0 (got {k!r})")
    sgn = float(np.sign(s))
    u = -ST_GAIN_FACTOR * math.sqrt(k) * math.sqrt(abs(s)) * sgn + w
    w_next = w - ST_INTEGRAL_FACTOR * k * sgn * dt
    return u, w_next


@dataclass(frozen=True)
class FusionStep:
    """Per-model breakdown of one fused control evaluation."""

    surfaces: np.ndarray      # s_i
    equivalents: np.ndarray   # u_eq,i
    switchings: np.ndarray    # u_s,i
    controls: np.ndarray      # u_i = u_eq,i + u_s,i
    fused_control: float      # u_g = sum v_i u_i
    fused_surface: float      # S = sum v_i s_i


def smmc_control(
    x: np.ndarray,
    x_d: np.ndarray,
    a_mats: list[np.ndarray],
    alphas: list[np.ndarray],
    gains: list[float],
    b_col: np.ndarray,
    validities: np.ndarray,
    lam: float = 1.0,
    omega_layer: float = 2.0,
) -> FusionStep:
    """Validity-weighted fusion of per-model equivalent-plus-saturation laws."""
    n = len(a_mats)
    v = np.asarray(validities, dtype=float)
    if not (len(alphas) == len(gains) == n) or v.shape != (n,):
        raise LengthMismatch(
            f"bank sizes must align (a: {n}, alpha: {len(alphas)}, "
            f"k: {len(gains)}, v: {v.shape})"
        )
    s = np.empty(n)
    u_eq = np.empty(n)
    u_sw = np.empty(n)
    for i in range(n):
        s[i] = sliding_surface(alphas[i], x, x_d)
        u_eq[i] = equivalent_control(alphas[i], a_mats[i], b_col, x)
        u_sw[i] = -gains[i] * saturation_control(s[i], lam, omega_layer)
    u = u_eq + u_sw
    return FusionStep(
        surfaces=s,
        equivalents=u_eq,
        switchings=u_sw,
        controls=u,
        fused_control=float(v @ u),
        fused_surface=float(v @ s),
    )
