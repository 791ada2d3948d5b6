"""Doubly-fed induction generator model in the rotating dq frame.

State is x = (phi_dr, phi_qr, i_ds, i_qs, omega): rotor flux components,
stator current components, and rotor angular velocity. The electromagnetic
subsystem splits into a flux part x_f = (phi_dr, phi_qr) and a current part
x_c = (i_ds, i_qs):

    x_f' = a * x_c + A_f(w) * x_f        A_f(w) = [[-b, -p*w], [p*w, -b]]
    x_c' = -g1 * x_c + B_c(w) * x_f + g4 * u
                                         B_c(w) = [[-g2, g3*w], [-g3*w, -g2]]
    J * w' = T_e - C_l - f_v * w
    T_e = p * (Lm / Lr) * (i_qs * phi_dr - i_ds * phi_qr)

with coefficients derived from the electrical parameters:

    sigma = 1 - Lm^2 / (Ls * Lr)
    g1 = Rs / (sigma * Ls) + Rr * Lm^2 / (sigma * Ls * Lr^2)
    g2 = Rr * Lm / (sigma * Ls * Lr^2)
    g3 = Lm * p / (sigma * Ls * Lr)
    g4 = 1 / (sigma * Ls)
    a  = (Rr / Lr) * Lm
    b  = Rr / Lr

Both speed couplings are skew-symmetric, so the electromagnetic dynamics
commute with a common rotation of (x_f, x_c, u) and the torque is rotation
invariant. A legacy sign variant (``as_printed``) flips the flux-q coupling
and the input sign; it exists only for side-by-side comparison and breaks
the rotational symmetry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularLeakage, ValidationError, ZeroFlux


@dataclass(frozen=True)
class MachineParams:
    """Electrical and mechanical machine parameters (SI units)."""

    rs: float = 1.2       # stator resistance [ohm]
    rr: float = 1.8       # rotor resistance [ohm]
    ls: float = 0.155     # stator inductance [H]
    lr: float = 0.156     # rotor inductance [H]
    lm: float = 0.15      # mutual inductance [H]
    j: float = 0.07       # rotor inertia [kg m^2]
    p: int = 2            # pole-pair count
    fv: float = 0.001     # viscous friction [N m s]

    def validate(self) -> None:
        for name in ("rs", "rr", "ls", "lr", "j", "fv"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} > 0 (got {getattr(self, name)!r})")
        if self.lm < 0:
            raise ValidationError(f"lm >= 0 (got {self.lm!r})")
        if self.p < 1 or self.p != int(self.p):
            raise ValidationError(f"p must be a positive integer (got {self.p!r})")
        if self.lm * self.lm >= self.ls * self.lr:
            raise SingularLeakage(
                "lm^2 < ls*lr required for a positive leakage factor "
                f"(lm^2 = {self.lm * self.lm:g}, ls*lr = {self.ls * self.lr:g})"
            )


@dataclass(frozen=True)
class DerivedCoeffs:
    """Coefficients of the dq model, all functions of MachineParams."""

    sigma: float
    gamma1: float
    gamma2: float
    gamma3: float
    gamma4: float
    a: float
    b: float


@dataclass(frozen=True)
class PlantState:
    phi_dr: float
    phi_qr: float
    i_ds: float
    i_qs: float
    omega: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.phi_dr, self.phi_qr, self.i_ds, self.i_qs, self.omega]
        )

    @staticmethod
    def from_array(x: np.ndarray) -> "PlantState":
        return PlantState(*(float(v) for v in x))


@dataclass(frozen=True)
class PlantInput:
    v_ds: float
    v_qs: float
    load_torque: float = 0.0


@dataclass(frozen=True)
class ReferenceState:
    """Field-oriented target: q-flux zero, currents set by flux and torque."""

    phi_dr: float
    phi_qr: float
    i_ds: float
    i_qs: float
    omega: float

    def em_array(self) -> np.ndarray:
        """Electromagnetic components (the part surfaces act on)."""
        return np.array([self.phi_dr, self.phi_qr, self.i_ds, self.i_qs])


def derive_coefficients(params: MachineParams) -> DerivedCoeffs:
    """Compute the dq model coefficients; raises SingularLeakage if sigma <= 0."""
    params.validate()
    sigma = 1.0 - params.lm * params.lm / (params.ls * params.lr)
    sls = sigma * params.ls
    return DerivedCoeffs(
        sigma=sigma,
        gamma1=params.rs / sls + params.rr * params.lm * params.lm / (sls * params.lr * params.lr),
        gamma2=params.rr * params.lm / (sls * params.lr * params.lr),
        gamma3=params.lm * params.p / (sls * params.lr),
        gamma4=1.0 / sls,
        a=params.rr / params.lr * params.lm,
        b=params.rr / params.lr,
    )


def electromagnetic_torque(params: MachineParams, state: PlantState) -> float:
    """T_e = p*(Lm/Lr)*(i_qs*phi_dr - i_ds*phi_qr)."""
    return params.p * (params.lm / params.lr) * (
        state.i_qs * state.phi_dr - state.i_ds * state.phi_qr
    )


def em_state_matrix(params: MachineParams, omega: float) -> np.ndarray:
    """4x4 electromagnetic state matrix A(omega) for x_em = (x_f, x_c)."""
    c = derive_coefficients(params)
    pw = params.p * omega
    g3w = c.gamma3 * omega
    return np.array(
        [
            [-c.b, -pw, c.a, 0.0],
            [pw, -c.b, 0.0, c.a],
            [-c.gamma2, g3w, -c.gamma1, 0.0],
            [-g3w, -c.gamma2, 0.0, -c.gamma1],
        ]
    )


def em_input_matrix(params: MachineParams) -> np.ndarray:
    """4x2 input matrix: voltages act on the current subsystem only."""
    c = derive_coefficients(params)
    return np.array([[0.0, 0.0], [0.0, 0.0], [c.gamma4, 0.0], [0.0, c.gamma4]])


def plant_derivative(
    params: MachineParams,
    state: PlantState,
    u: PlantInput,
    as_printed: bool = False,
) -> np.ndarray:
    """Time derivative of the full 5-state model.

    ``as_printed`` selects the legacy sign variant (flux-q coupling
    -p*w*phi_dr and negated input); the default is the canonical
    rotation-symmetric form.
    """
    c = derive_coefficients(params)
    phi_dr, phi_qr, i_ds, i_qs, w = (
        state.phi_dr, state.phi_qr, state.i_ds, state.i_qs, state.omega,
    )
    pw = params.p * w
    g3w = c.gamma3 * w
    gin = -c.gamma4 if as_printed else c.gamma4
    qcoup = -pw if as_printed else pw

    d_phi_dr = c.a * i_ds - c.b * phi_dr - pw * phi_qr
    d_phi_qr = c.a * i_qs - c.b * phi_qr + qcoup * phi_dr
    d_i_ds = -c.gamma1 * i_ds - c.gamma2 * phi_dr + g3w * phi_qr + gin * u.v_ds
    d_i_qs = -c.gamma1 * i_qs - c.gamma2 * phi_qr - g3w * phi_dr + gin * u.v_qs

    te = electromagnetic_torque(params, state)
    d_omega = (te - u.load_torque - params.fv * w) / params.j

    out = np.array([d_phi_dr, d_phi_qr, d_i_ds, d_i_qs, d_omega])
    if not np.all(np.isfinite(out)):
        raise ValidationError("plant derivative is non-finite")
    return out


def reference_state(
    torque_ref: float,
    flux_ref: float,
    params: MachineParams,
    omega: float = 0.0,
) -> ReferenceState:
    """Field-oriented set-point for a torque and rotor-flux reference.

    phi_qr = 0 and phi_dr = Lm * i_ds (the steady state of the flux-d
    equation), i_qs carries the torque. ``omega`` is the speed reference the
    caller tracks against; it does not affect the electromagnetic targets.
    """
    if flux_ref <= 0:
        raise ZeroFlux(f"flux_ref > 0 required (got {flux_ref!r})")
    if params.lm <= 0:
        raise ValidationError("lm > 0 required for current set-points")
    return ReferenceState(
        phi_dr=flux_ref,
        phi_qr=0.0,
        i_ds=flux_ref / params.lm,
        i_qs=torque_ref * params.lr / (params.p * params.lm * flux_ref),
        omega=omega,
    )


def rated_slip_check(params: MachineParams) -> float:
    """Leakage factor sigma, handy as a quick conditioning diagnostic."""
    return derive_coefficients(params).sigma


def _rotation(theta: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([[ct, -st], [st, ct]])


def rotate_state(state: PlantState, theta: float) -> PlantState:
    """Rotate flux and current pairs by a common angle (omega unchanged)."""
    r = _rotation(theta)
    f = r @ np.array([state.phi_dr, state.phi_qr])
    c = r @ np.array([state.i_ds, state.i_qs])
    return PlantState(f[0], f[1], c[0], c[1], state.omega)


def rotate_input(u: PlantInput, theta: float) -> PlantInput:
    r = _rotation(theta)
    v = r @ np.array([u.v_ds, u.v_qs])
    return PlantInput(v[0], v[1], u.load_torque)
