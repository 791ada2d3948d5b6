"""Closed-loop simulation: scenario assembly, stepping, metrics.

The engine glues the pieces together: it freezes the sub-model bank,
resolves switching gains (explicit or certificate-backed automatic ones),
lowers the reference signals, and drives the stepping kernel with a
zero-order-hold controller at every integration step. Recorded traces
carry the full state, the applied voltages, the sliding surfaces, the
running Lyapunov value and the validity weights, on a fixed column grid
shared by every controller mode.

Integration is classical fixed-step Runge-Kutta with the control held
over each step. The compiled kernel and its interpreted twin produce
bit-identical trajectories (see _kernel); `use_kernel=False` exists for
cross-validation and debugging.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .controllers import ControllerConfig
from .errors import (
    EmptyTrace,
    NonFiniteState,
    TooShortTrace,
    ValidationError,
)
from .multimodel import SubModel, linearize_submodel
from .plant import MachineParams, em_input_matrix, em_state_matrix
from .signals import PiecewiseSignal, constant, step
from .stability import gain_bound

_trapz = getattr(np, "trapezoid", None) or np.trapz

_MODE_CODES = {"smc1": 0, "smc2": 1, "smmc": 2}
_SWITCH_CODES = {"sign": 0, "saturation": 1, "proportional": 2}
_S2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class BankSpec:
    """Sub-model bank layout: operating speeds, surface rows, gain policy.

    With `gains=None` every sub-model receives the certificate-backed
    automatic gain  gain_margin * k_min + epsilon  computed from its own
    linearization; an explicit tuple (one entry per speed, applied to both
    channels) overrides that.
    """

    speeds: tuple[float, ...] = (-1.0, -2.0, -3.0)
    delta: float = 0.1
    gains: tuple[float, ...] | None = None
    gain_margin: float = 1.1
    epsilon: float = 0.5
    m_bound: float = 0.0
    alpha_d: tuple[float, float, float, float] = (_S2, 0.0, _S2, 0.0)
    alpha_q: tuple[float, float, float, float] = (0.0, _S2, 0.0, _S2)

    def validate(self) -> None:
        if len(self.speeds) == 0:
            raise ValidationError("bank needs at least one operating speed")
        if not all(np.isfinite(self.speeds)):
            raise ValidationError("bank speeds must be finite")
        if len(set(self.speeds)) != len(self.speeds):
            raise ValidationError("bank speeds must be distinct")
        if not self.delta > 0:
            raise ValidationError(f"delta > 0 (got {self.delta!r})")
        if self.gains is not None:
            if len(self.gains) != len(self.speeds):
                raise ValidationError(
                    f"gains ({len(self.gains)}) must match speeds ({len(self.speeds)})"
                )
            if not all(g > 0 for g in self.gains):
                raise ValidationError("explicit gains must be > 0")
        if not self.gain_margin >= 1:
            raise ValidationError(f"gain_margin >= 1 (got {self.gain_margin!r})")
        if not self.epsilon >= 0:
            raise ValidationError(f"epsilon >= 0 (got {self.epsilon!r})")
        if self.m_bound < 0:
            raise ValidationError(f"m_bound >= 0 (got {self.m_bound!r})")
        for name, row in (("alpha_d", self.alpha_d), ("alpha_q", self.alpha_q)):
            if len(row) != 4 or not all(np.isfinite(row)):
                raise ValidationError(f"{name} must be 4 finite entries")
        # strict per-channel decoupling: each row may touch only its own
        # input column, with positive authority (switching sign convention)
        if self.alpha_d[3] != 0.0 or not self.alpha_d[2] > 0.0:
            raise ValidationError(
                "alpha_d must have alpha_d[3] = 0 and alpha_d[2] > 0 "
                "(d-channel authority only)"
            )
        if self.alpha_q[2] != 0.0 or not self.alpha_q[3] > 0.0:
            raise ValidationError(
                "alpha_q must have alpha_q[2] = 0 and alpha_q[3] > 0 "
                "(q-channel authority only)"
            )


@dataclass(frozen=True)
class Scenario:
    """Everything the closed loop needs besides the controller itself."""

    machine: MachineParams = field(default_factory=MachineParams)
    flux_ref: float = 1.0
    torque_ref: PiecewiseSignal = field(
        default_factory=lambda: step(1.0, 0.0, 4.0)
    )
    load_torque: PiecewiseSignal = field(default_factory=lambda: constant(0.0))
    speed_ref: float = -2.0
    omega0: float = -2.0
    em0: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    horizon: float = 100.0
    dt: float = 1e-4
    record_stride: int = 10
    rated_torque: float | None = None

    def validate(self) -> None:
        self.machine.validate()
        if not isinstance(self.torque_ref, PiecewiseSignal):
            raise ValidationError("torque_ref must be a PiecewiseSignal")
        if not isinstance(self.load_torque, PiecewiseSignal):
            raise ValidationError("load_torque must be a PiecewiseSignal")
        if not self.flux_ref > 0:
            raise ValidationError(f"flux_ref > 0 (got {self.flux_ref!r})")
        if not self.dt > 0:
            raise ValidationError(f"dt > 0 (got {self.dt!r})")
        if not self.horizon >= self.dt:
            raise ValidationError(
                f"horizon >= dt (got horizon={self.horizon!r}, dt={self.dt!r})"
            )
        if not (isinstance(self.record_stride, int) and self.record_stride >= 1):
            raise ValidationError(
                f"record_stride must be an integer >= 1 (got {self.record_stride!r})"
            )
        if len(self.em0) != 4 or not all(np.isfinite(self.em0)):
            raise ValidationError("em0 must be 4 finite values")
        if not np.isfinite(self.omega0) or not np.isfinite(self.speed_ref):
            raise ValidationError("omega0 and speed_ref must be finite")
        if self.rated_torque is not None and not self.rated_torque > 0:
            raise ValidationError(f"rated_torque > 0 (got {self.rated_torque!r})")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    @property
    def rated(self) -> float:
        """Torque scale for tracking bands: explicit, else the reference peak."""
        if self.rated_torque is not None:
            return self.rated_torque
        peak = self.torque_ref.peak_abs
        if peak <= 0:
            raise ValidationError(
                "rated torque undefined: zero torque reference and no rated_torque"
            )
        return peak


def default_scenario() -> Scenario:
    """The standard braking scenario: torque and load step together.

    The shaft is free, so a torque reference can only be held where the
    mechanical balance T_e = C_l + fv*omega admits it; stepping the load
    with the reference pins that balance near the initial speed.
    """
    return Scenario(load_torque=step(1.0, 0.0, 4.0))


_COLUMN_BASE = [
    "t", "phi_dr", "phi_qr", "i_ds", "i_qs", "omega", "te", "te_ref",
    "u_d", "u_q", "s_d", "s_q", "s_fused", "v_lyap",
]


@dataclass(frozen=True)
class SimTrace:
    """Recorded closed-loop run on the fixed column grid."""

    data: np.ndarray
    n_models: int
    meta: dict

    def column_names(self) -> list[str]:
        return _COLUMN_BASE + [f"v_{i + 1}" for i in range(self.n_models)]

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def _col(self, i: int) -> np.ndarray:
        return self.data[:, i]

    @property
    def t(self) -> np.ndarray:
        return self._col(0)

    @property
    def phi_dr(self) -> np.ndarray:
        return self._col(1)

    @property
    def phi_qr(self) -> np.ndarray:
        return self._col(2)

    @property
    def i_ds(self) -> np.ndarray:
        return self._col(3)

    @property
    def i_qs(self) -> np.ndarray:
        return self._col(4)

    @property
    def omega(self) -> np.ndarray:
        return self._col(5)

    @property
    def te(self) -> np.ndarray:
        return self._col(6)

    @property
    def te_ref(self) -> np.ndarray:
        return self._col(7)

    @property
    def u_d(self) -> np.ndarray:
        return self._col(8)

    @property
    def u_q(self) -> np.ndarray:
        return self._col(9)

    @property
    def s_d(self) -> np.ndarray:
        return self._col(10)

    @property
    def s_q(self) -> np.ndarray:
        return self._col(11)

    @property
    def s_fused(self) -> np.ndarray:
        return self._col(12)

    @property
    def v_lyap(self) -> np.ndarray:
        return self._col(13)

    @property
    def validities(self) -> np.ndarray:
        return self.data[:, _kernel.N_FIXED_COLS:]


def resolve_bank_gains(
    machine: MachineParams, bank: BankSpec
) -> tuple[tuple[float, ...], tuple[float, ...]]:
    """Per-speed switching gains for the d and q channels."""
    if bank.gains is not None:
        return tuple(bank.gains), tuple(bank.gains)
    b_mat = em_input_matrix(machine)
    a_d = np.asarray(bank.alpha_d)
    a_q = np.asarray(bank.alpha_q)
    kd = []
    kq = []
    for w_op in bank.speeds:
        a = em_state_matrix(machine, w_op)
        kd.append(
            bank.gain_margin * gain_bound(a, a_d, b_mat[:, 0], bank.m_bound)
            + bank.epsilon
        )
        kq.append(
            bank.gain_margin * gain_bound(a, a_q, b_mat[:, 1], bank.m_bound)
            + bank.epsilon
        )
    return tuple(kd), tuple(kq)


def build_bank(machine: MachineParams, bank: BankSpec) -> list[SubModel]:
    """Freeze the (speed x channel) sub-models with their resolved gains."""
    bank.validate()
    machine.validate()
    kd, kq = resolve_bank_gains(machine, bank)
    models: list[SubModel] = []
    for i, w_op in enumerate(bank.speeds):
        models.append(
            linearize_submodel(machine, w_op, np.asarray(bank.alpha_d), kd[i],
                               index=2 * i)
        )
        models.append(
            linearize_submodel(machine, w_op, np.asarray(bank.alpha_q), kq[i],
                               index=2 * i + 1)
        )
    return models


def run_scenario(
    scenario: Scenario | None = None,
    controller: ControllerConfig | None = None,
    bank: BankSpec | None = None,
    use_kernel: bool = True,
) -> SimTrace:
    """Simulate one controller on one scenario and record the trace."""
    scenario = scenario if scenario is not None else default_scenario()
    controller = controller if controller is not None else ControllerConfig()
    bank = bank if bank is not None else BankSpec()
    scenario.validate()
    controller.validate()
    bank.validate()

    mach = scenario.machine
    from .plant import derive_coefficients

    c = derive_coefficients(mach)
    if mach.lm <= 0:
        raise ValidationError("lm > 0 required to form current set-points")

    alpha_d = np.ascontiguousarray(bank.alpha_d, dtype=np.float64)
    alpha_q = np.ascontiguousarray(bank.alpha_q, dtype=np.float64)
    ab_d = float(alpha_d[2] * c.gamma4)
    ab_q = float(alpha_q[3] * c.gamma4)

    a_single = np.ascontiguousarray(
        em_state_matrix(mach, scenario.speed_ref), dtype=np.float64
    )
    a_bank = np.ascontiguousarray(
        np.stack([em_state_matrix(mach, w) for w in bank.speeds]),
        dtype=np.float64,
    )
    kd, kq = resolve_bank_gains(mach, bank)

    tq_t, tq_v = scenario.torque_ref.as_arrays()
    ld_t, ld_v = scenario.load_torque.as_arrays()

    n_steps = scenario.n_steps
    stride = scenario.record_stride
    n_rows = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    n_models = len(bank.speeds)
    out = np.zeros((n_rows, _kernel.N_FIXED_COLS + n_models))
    acc = np.zeros(_kernel.N_ACC)

    x_init = np.ascontiguousarray(
        list(scenario.em0) + [scenario.omega0], dtype=np.float64
    )
    tq_c = mach.p * (mach.lm / mach.lr)
    ids_star = scenario.flux_ref / mach.lm
    iqs_coef = mach.lr / (mach.p * mach.lm * scenario.flux_ref)

    stepper = _kernel.closed_loop_jit if use_kernel else _kernel.closed_loop
    started = time.perf_counter()
    status = stepper(
        n_steps, scenario.dt, stride,
        x_init,
        c.a, c.b, c.gamma1, c.gamma2, c.gamma3, c.gamma4,
        float(mach.p), tq_c, mach.j, mach.fv,
        scenario.flux_ref, ids_star, iqs_coef,
        tq_t, tq_v, ld_t, ld_v,
        _MODE_CODES[controller.mode], _SWITCH_CODES[controller.switch_fn],
        1 if controller.use_equivalent else 0,
        controller.k, controller.lam, controller.omega_layer,
        alpha_d, alpha_q, ab_d, ab_q,
        a_single,
        np.asarray(bank.speeds, dtype=np.float64), bank.delta,
        a_bank, np.asarray(kd), np.asarray(kq),
        out, acc,
    )
    elapsed = time.perf_counter() - started
    if status != _kernel.OK:
        raise NonFiniteState(
            f"state left the finite range at step {status} "
            f"(t = {status * scenario.dt:.6g} s)"
        )

    meta = {
        "mode": controller.mode,
        "controller": controller,
        "scenario": scenario,
        "bank": bank,
        "bank_gains_d": kd,
        "bank_gains_q": kq,
        "elapsed_s": elapsed,
        "used_kernel": bool(use_kernel),
        # control-activity tallies taken at the integration rate; a
        # subsampled trace hides fast chatter, these never do
        "chatter": {
            "tv_d": float(acc[0] + acc[1]),
            "tv_q": float(acc[2] + acc[3]),
            "tv_d_halves": (float(acc[0]), float(acc[1])),
            "tv_q_halves": (float(acc[2]), float(acc[3])),
            "switches_d": int(acc[4]),
            "switches_q": int(acc[5]),
        },
    }
    return SimTrace(data=out, n_models=n_models, meta=meta)


def integrate_plant(
    machine: MachineParams,
    x0,
    v_ds: float,
    v_qs: float,
    load_torque: float,
    horizon: float,
    dt: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Open-loop fixed-step integration under constant inputs.

    Returns (times, states) with one row per step including the initial
    state; mainly a harness for convergence checks of the stepper.
    """
    from .plant import derive_coefficients

    machine.validate()
    if not dt > 0 or not horizon >= dt:
        raise ValidationError("need dt > 0 and horizon >= dt")
    c = derive_coefficients(machine)
    tq_c = machine.p * (machine.lm / machine.lr)
    n = int(round(horizon / dt))
    states = np.empty((n + 1, 5))
    states[0] = np.asarray(x0, dtype=np.float64)
    phd, phq, ids, iqs, w = states[0]
    for k in range(n):
        phd, phq, ids, iqs, w = _kernel.plant_step(
            phd, phq, ids, iqs, w, v_ds, v_qs, load_torque, dt,
            c.a, c.b, c.gamma1, c.gamma2, c.gamma3, c.gamma4,
            float(machine.p), tq_c, machine.j, machine.fv,
        )
        states[k + 1] = (phd, phq, ids, iqs, w)
    return np.arange(n + 1) * dt, states


@dataclass(frozen=True)
class Metrics:
    """Chattering and tracking summary of one recorded trace."""

    chattering_tv: float      # total variation of u, both channels
    tv_d: float
    tv_q: float
    switch_count: int         # direction reversals of u, both channels
    switches_d: int
    switches_q: int
    sse: float                # mean |te - te_ref| over the final 20 %
    settling_time: float      # entry into the 2 %-of-rated band (horizon if never)
    ise: float                # integral of the squared torque error


def _total_variation(u: np.ndarray) -> float:
    return float(np.sum(np.abs(np.diff(u))))


def _direction_switches(u: np.ndarray) -> int:
    """Count sign reversals of the increments, ignoring flat stretches."""
    sg = np.sign(np.diff(u))
    nz = sg[sg != 0]
    if nz.size == 0:
        return 0
    return int(1 + np.sum(nz[1:] != nz[:-1]))


def compute_metrics(trace: SimTrace, rated: float | None = None) -> Metrics:
    """Evaluate the comparison metrics on a recorded trace.

    Control-activity figures (total variation, direction switches) come
    from the engine's integration-rate tallies when the trace carries
    them; recording every tenth sample would otherwise alias fast
    chatter into near-zero variation. Traces built by hand or loaded
    from disk fall back to differences of the recorded control columns.
    """
    if trace.n_rows == 0:
        raise EmptyTrace("trace has no samples")
    if trace.n_rows < 2:
        raise TooShortTrace("metrics need at least 2 samples")
    if rated is None:
        rated = trace.meta["scenario"].rated
    if not rated > 0:
        raise ValidationError(f"rated > 0 (got {rated!r})")

    t = trace.t
    err = np.abs(trace.te - trace.te_ref)

    band = 0.02 * rated
    bad = err > band
    if not bad.any():
        settling = float(t[0])
    else:
        last_bad = int(np.nonzero(bad)[0][-1])
        settling = float(t[-1]) if last_bad == len(t) - 1 else float(t[last_bad + 1])

    tail = t >= t[0] + 0.8 * (t[-1] - t[0])
    chatter = trace.meta.get("chatter")
    if chatter is not None:
        tv_d = chatter["tv_d"]
        tv_q = chatter["tv_q"]
        sw_d = chatter["switches_d"]
        sw_q = chatter["switches_q"]
    else:
        tv_d = _total_variation(trace.u_d)
        tv_q = _total_variation(trace.u_q)
        sw_d = _direction_switches(trace.u_d)
        sw_q = _direction_switches(trace.u_q)
    return Metrics(
        chattering_tv=tv_d + tv_q,
        tv_d=tv_d,
        tv_q=tv_q,
        switch_count=sw_d + sw_q,
        switches_d=sw_d,
        switches_q=sw_q,
        sse=float(np.mean(err[tail])),
        settling_time=settling,
        ise=float(_trapz(err * err, t)),
    )
