"""Run configuration: strict YAML parsing with exact round-trips.

A config file has four optional sections — machine, scenario, controller,
bank — plus an output directory and the controller selection for
comparison runs. Absent keys take the shipped defaults; unknown keys are
a hard error so typos cannot silently fall back to defaults. Serializing
echoes every resolved value, and parse(serialize(parse(text))) returns an
object equal to parse(text): all leaves are floats, ints, bools, strings
and tuples, which YAML reproduces exactly.

Reference and load signals accept three spellings::

    torque_ref: 3.5                          # constant shorthand
    torque_ref: {constant: 3.5}
    torque_ref: {step: {at: 1.0, from: 0.0, to: 4.0}}
    torque_ref: {piecewise: {times: [0.0, 1.0], values: [0.0, 4.0]}}
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import yaml

from .controllers import MODES, ControllerConfig
from .engine import BankSpec, Scenario, default_scenario
from .errors import ParseError, UnknownKeyError, ValidationError
from .plant import MachineParams
from .signals import PiecewiseSignal, constant, piecewise, step

_MACHINE_KEYS = ("rs", "rr", "ls", "lr", "lm", "j", "p", "fv")
_SCENARIO_KEYS = (
    "flux_ref", "torque_ref", "load_torque", "speed_ref", "omega0",
    "em0", "horizon", "dt", "record_stride", "rated_torque",
)
_CONTROLLER_KEYS = ("mode", "k", "switch_fn", "use_equivalent", "lam",
                    "omega_layer")
_BANK_KEYS = ("speeds", "delta", "gains", "gain_margin", "epsilon",
              "m_bound", "alpha_d", "alpha_q")
_TOP_KEYS = ("machine", "scenario", "controller", "bank", "out_dir",
             "controllers")

#: Controller settings used by comparison runs, one per mode. SMC1 is the
#: classical relay (switching term only), the configuration whose torque
#: error does not converge on the default scenario; SMC2 and SMMC carry
#: their library defaults.
COMPARISON_PRESETS = {
    "smc1": ControllerConfig(mode="smc1", k=45.0, switch_fn="sign",
                             use_equivalent=False),
    "smc2": ControllerConfig(mode="smc2", k=45.0),
    "smmc": ControllerConfig(mode="smmc"),
}


def controller_preset(name: str) -> ControllerConfig:
    """Comparison preset for a controller name."""
    try:
        return COMPARISON_PRESETS[name]
    except KeyError:
        raise ValidationError(
            f"unknown controller {name!r} (choose from {sorted(COMPARISON_PRESETS)})"
        ) from None


@dataclass(frozen=True)
class RunConfig:
    """Fully-resolved run description (defaults already applied)."""

    scenario: Scenario = field(default_factory=default_scenario)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    bank: BankSpec = field(default_factory=BankSpec)
    out_dir: str = "out"
    controllers: tuple[str, ...] = ("smc1", "smc2", "smmc")

    def validate(self) -> None:
        self.scenario.validate()
        self.controller.validate()
        self.bank.validate()
        if not isinstance(self.out_dir, str) or not self.out_dir:
            raise ValidationError(f"out_dir must be a non-empty path "
                                  f"(got {self.out_dir!r})")
        if len(self.controllers) == 0:
            raise ValidationError("controllers selection must not be empty")
        for name in self.controllers:
            if name not in MODES:
                raise ValidationError(
                    f"controllers entries must be one of {MODES} (got {name!r})"
                )


def _mapping(node, path: str) -> dict:
    if node is None:
        return {}
    if not isinstance(node, dict):
        raise ValidationError(f"{path} must be a mapping (got {type(node).__name__})")
    return node


def _reject_unknown(mapping: dict, allowed: tuple[str, ...], path: str) -> None:
    for key in mapping:
        if key not in allowed:
            raise UnknownKeyError(
                f"unknown key {path}.{key} (allowed: {', '.join(allowed)})"
            )


def _float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path} must be a number (got {value!r})")
    return float(value)


def _int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{path} must be an integer (got {value!r})")
    return value


def _bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"{path} must be true or false (got {value!r})")
    return value


def _str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"{path} must be a string (got {value!r})")
    return value


def _float_tuple(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise ValidationError(f"{path} must be a list of numbers (got {value!r})")
    return tuple(_float(v, f"{path}[{i}]") for i, v in enumerate(value))


def _parse_signal(node, path: str) -> PiecewiseSignal:
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return constant(float(node))
    m = _mapping(node, path)
    if len(m) != 1:
        raise ValidationError(
            f"{path} must be a number or exactly one of constant/step/piecewise"
        )
    kind, body = next(iter(m.items()))
    if kind == "constant":
        return constant(_float(body, f"{path}.constant"))
    if kind == "step":
        body = _mapping(body, f"{path}.step")
        _reject_unknown(body, ("at", "from", "to"), f"{path}.step")
        for key in ("at", "from", "to"):
            if key not in body:
                raise ValidationError(f"{path}.step needs 'at', 'from' and 'to'")
        return step(_float(body["at"], f"{path}.step.at"),
                    _float(body["from"], f"{path}.step.from"),
                    _float(body["to"], f"{path}.step.to"))
    if kind == "piecewise":
        body = _mapping(body, f"{path}.piecewise")
        _reject_unknown(body, ("times", "values"), f"{path}.piecewise")
        if "times" not in body or "values" not in body:
            raise ValidationError(f"{path}.piecewise needs 'times' and 'values'")
        return piecewise(_float_tuple(body["times"], f"{path}.piecewise.times"),
                         _float_tuple(body["values"], f"{path}.piecewise.values"))
    raise UnknownKeyError(
        f"unknown signal kind {path}.{kind} (allowed: constant, step, piecewise)"
    )


def _signal_node(sig: PiecewiseSignal):
    if len(sig.times) == 1:
        return {"constant": sig.values[0]}
    if len(sig.times) == 2:
        return {"step": {"at": sig.times[1], "from": sig.values[0],
                         "to": sig.values[1]}}
    return {"piecewise": {"times": list(sig.times), "values": list(sig.values)}}


def _parse_machine(node) -> MachineParams:
    m = _mapping(node, "machine")
    _reject_unknown(m, _MACHINE_KEYS, "machine")
    kwargs = {}
    for key in _MACHINE_KEYS:
        if key in m:
            kwargs[key] = (_int(m[key], f"machine.{key}") if key == "p"
                           else _float(m[key], f"machine.{key}"))
    return MachineParams(**kwargs)


def _parse_scenario(node, machine: MachineParams) -> Scenario:
    m = _mapping(node, "scenario")
    _reject_unknown(m, _SCENARIO_KEYS, "scenario")
    kwargs = {}
    for key in ("flux_ref", "speed_ref", "omega0", "horizon", "dt"):
        if key in m:
            kwargs[key] = _float(m[key], f"scenario.{key}")
    if "torque_ref" in m:
        kwargs["torque_ref"] = _parse_signal(m["torque_ref"], "scenario.torque_ref")
    if "load_torque" in m:
        kwargs["load_torque"] = _parse_signal(m["load_torque"],
                                              "scenario.load_torque")
    if "em0" in m:
        em0 = _float_tuple(m["em0"], "scenario.em0")
        if len(em0) != 4:
            raise ValidationError(f"scenario.em0 needs 4 entries (got {len(em0)})")
        kwargs["em0"] = em0
    if "record_stride" in m:
        kwargs["record_stride"] = _int(m["record_stride"], "scenario.record_stride")
    if "rated_torque" in m and m["rated_torque"] is not None:
        kwargs["rated_torque"] = _float(m["rated_torque"], "scenario.rated_torque")
    return replace(default_scenario(), machine=machine, **kwargs)


def _parse_controller(node) -> ControllerConfig:
    m = _mapping(node, "controller")
    _reject_unknown(m, _CONTROLLER_KEYS, "controller")
    kwargs = {}
    if "mode" in m:
        kwargs["mode"] = _str(m["mode"], "controller.mode")
    if "switch_fn" in m:
        kwargs["switch_fn"] = _str(m["switch_fn"], "controller.switch_fn")
    if "use_equivalent" in m:
        kwargs["use_equivalent"] = _bool(m["use_equivalent"],
                                         "controller.use_equivalent")
    for key in ("k", "lam", "omega_layer"):
        if key in m:
            kwargs[key] = _float(m[key], f"controller.{key}")
    return ControllerConfig(**kwargs)


def _parse_bank(node) -> BankSpec:
    m = _mapping(node, "bank")
    _reject_unknown(m, _BANK_KEYS, "bank")
    kwargs = {}
    if "speeds" in m:
        kwargs["speeds"] = _float_tuple(m["speeds"], "bank.speeds")
    if "gains" in m and m["gains"] is not None:
        kwargs["gains"] = _float_tuple(m["gains"], "bank.gains")
    for key in ("delta", "gain_margin", "epsilon", "m_bound"):
        if key in m:
            kwargs[key] = _float(m[key], f"bank.{key}")
    for key in ("alpha_d", "alpha_q"):
        if key in m:
            row = _float_tuple(m[key], f"bank.{key}")
            if len(row) != 4:
                raise ValidationError(f"bank.{key} needs 4 entries (got {len(row)})")
            kwargs[key] = row
    return BankSpec(**kwargs)


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a YAML run configuration."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ParseError(f"malformed config: {exc}",
                         line=None if mark is None else mark.line + 1) from exc
    raw = _mapping(raw, "config")
    _reject_unknown(raw, _TOP_KEYS, "config")

    machine = _parse_machine(raw.get("machine"))
    scenario = _parse_scenario(raw.get("scenario"), machine)
    controller = _parse_controller(raw.get("controller"))
    bank = _parse_bank(raw.get("bank"))

    out_dir = _str(raw["out_dir"], "out_dir") if "out_dir" in raw else "out"
    if "controllers" in raw:
        sel = raw["controllers"]
        if not isinstance(sel, (list, tuple)):
            raise ValidationError("controllers must be a list of controller names")
        controllers = tuple(_str(v, f"controllers[{i}]") for i, v in enumerate(sel))
    else:
        controllers = ("smc1", "smc2", "smmc")

    cfg = RunConfig(scenario=scenario, controller=controller, bank=bank,
                    out_dir=out_dir, controllers=controllers)
    cfg.validate()
    return cfg


def _floats(values) -> list[float]:
    # plain builtins only: numpy scalars would trip YAML's representer
    return [float(v) for v in values]


def serialize_config(cfg: RunConfig) -> str:
    """Echo a RunConfig as YAML with every resolved value spelled out."""
    mach = cfg.scenario.machine
    sc = cfg.scenario
    ctl = cfg.controller
    bank = cfg.bank
    doc = {
        "machine": {key: (int(mach.p) if key == "p"
                          else float(getattr(mach, key)))
                    for key in _MACHINE_KEYS},
        "scenario": {
            "flux_ref": float(sc.flux_ref),
            "torque_ref": _signal_node(sc.torque_ref),
            "load_torque": _signal_node(sc.load_torque),
            "speed_ref": float(sc.speed_ref),
            "omega0": float(sc.omega0),
            "em0": _floats(sc.em0),
            "horizon": float(sc.horizon),
            "dt": float(sc.dt),
            "record_stride": int(sc.record_stride),
            "rated_torque": (None if sc.rated_torque is None
                             else float(sc.rated_torque)),
        },
        "controller": {
            "mode": ctl.mode,
            "k": float(ctl.k),
            "switch_fn": ctl.switch_fn,
            "use_equivalent": bool(ctl.use_equivalent),
            "lam": float(ctl.lam),
            "omega_layer": float(ctl.omega_layer),
        },
        "bank": {
            "speeds": _floats(bank.speeds),
            "delta": float(bank.delta),
            "gains": None if bank.gains is None else _floats(bank.gains),
            "gain_margin": float(bank.gain_margin),
            "epsilon": float(bank.epsilon),
            "m_bound": float(bank.m_bound),
            "alpha_d": _floats(bank.alpha_d),
            "alpha_q": _floats(bank.alpha_q),
        },
        "out_dir": cfg.out_dir,
        "controllers": list(cfg.controllers),
    }
    return yaml.safe_dump(doc, sort_keys=False)
