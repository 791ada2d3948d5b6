"""Bank of linearized sub-models and validity-weighted fusion.

Each sub-model freezes the electromagnetic state matrix at one operating
speed and carries a sliding-surface row and a switching gain. A sub-model is
bound to the input channel on which its surface row has control authority
(the column of B where |alpha . B| peaks); rows with no authority anywhere
are rejected at construction.

Validities are normalized inverse distances to the operating speeds,

    v_i = (1 / (|w - w_i| + delta)) / sum_j (1 / (|w - w_j| + delta)),

and weight both the fused surface S = sum v_i s_i and the fused control
u_g = sum v_i u_i. The same vector serves as activation degree and fusion
weight. Any alternative validity law (e.g. residual-based) can be used by
computing the vector externally and passing it to the fusion functions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyBank, LengthMismatch, SingularCB, ValidationError
from .plant import MachineParams, em_input_matrix, em_state_matrix

_AUTHORITY_TOL = 1e-12


@dataclass(frozen=True)
class SubModel:
    """One frozen linearization with its surface row and switching gain."""

    index: int
    omega_op: float
    a_mat: np.ndarray          # 4x4 electromagnetic state matrix at omega_op
    b_mat: np.ndarray          # 4x2 input matrix
    c_mat: np.ndarray          # output matrix (identity by default)
    alpha: np.ndarray          # 1x4 surface row
    k_gain: float              # switching gain
    channel: int = field(init=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float).reshape(-1)
        if alpha.shape != (4,):
            raise ValidationError(f"alpha must have 4 entries (got {alpha.shape})")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "a_mat", np.asarray(self.a_mat, dtype=float))
        object.__setattr__(self, "b_mat", np.asarray(self.b_mat, dtype=float))
        if self.a_mat.shape != (4, 4) or self.b_mat.shape != (4, 2):
            raise ValidationError("a_mat must be 4x4 and b_mat 4x2")
        if self.k_gain <= 0:
            raise ValidationError(f"k_gain > 0 (got {self.k_gain!r})")
        g = alpha @ self.b_mat
        ch = int(np.argmax(np.abs(g)))
        if abs(g[ch]) <= _AUTHORITY_TOL:
            raise SingularCB(
                "surface row has no control authority on any channel "
                f"(alpha.B = {g.tolist()})"
            )
        object.__setattr__(self, "channel", ch)

    @property
    def b_col(self) -> np.ndarray:
        """Input column of the actuated channel."""
        return self.b_mat[:, self.channel]

    @property
    def cb(self) -> float:
        """Scalar surface/input product on the actuated channel."""
        return float(self.alpha @ self.b_col)


def linearize_submodel(
    params: MachineParams,
    omega_op: float,
    alpha: np.ndarray,
    k_gain: float,
    index: int = 0,
) -> SubModel:
    """Freeze the electromagnetic dynamics at one operating speed."""
    return SubModel(
        index=index,
        omega_op=float(omega_op),
        a_mat=em_state_matrix(params, omega_op),
        b_mat=em_input_matrix(params),
        c_mat=np.eye(4),
        alpha=alpha,
        k_gain=float(k_gain),
    )


def compute_validities(
    current_omega: float, bank: list[SubModel], delta: float = 0.1
) -> np.ndarray:
    """Normalized inverse-distance validities over the bank's speeds."""
    if not bank:
        raise EmptyBank("bank must contain at least one sub-model")
    if delta <= 0:
        raise ValidationError(f"delta > 0 (got {delta!r})")
    w = np.array([1.0 / (abs(current_omega - m.omega_op) + delta) for m in bank])
    return w / w.sum()


def fuse_surfaces(validities: np.ndarray, surfaces: np.ndarray) -> float:
    """S = sum_i v_i s_i."""
    v = np.asarray(validities, dtype=float)
    s = np.asarray(surfaces, dtype=float)
    if v.shape != s.shape:
        raise LengthMismatch(
            f"validities ({v.shape}) and surfaces ({s.shape}) must align"
        )
    return float(v @ s)


def fuse_controls(validities: np.ndarray, controls: np.ndarray) -> np.ndarray:
    """u_g = sum_i v_i u_i, componentwise over control vectors."""
    v = np.asarray(validities, dtype=float)
    u = np.atleast_2d(np.asarray(controls, dtype=float))
    if v.shape[0] != u.shape[0]:
        raise LengthMismatch(
            f"validities ({v.shape[0]}) and controls ({u.shape[0]}) must align"
        )
    return v @ u
