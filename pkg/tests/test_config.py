"""Config parsing: defaults, strict keys, exact round-trips."""

from __future__ import annotations

import pytest

from dfig_smc.config import (
    COMPARISON_PRESETS,
    RunConfig,
    controller_preset,
    parse_config,
    serialize_config,
)
from dfig_smc.engine import default_scenario
from dfig_smc.errors import (
    LengthMismatch,
    ParseError,
    UnknownKeyError,
    ValidationError,
)
from dfig_smc.signals import constant, piecewise, step

NONTRIVIAL = """
machine:
  rs: 2.4
  lm: 0.12
  p: 3
scenario:
  flux_ref: 0.8
  speed_ref: -1.5
  omega0: -1.4
  horizon: 2.5
  dt: 5.0e-5
  record_stride: 4
  rated_torque: 6.0
  torque_ref:
    piecewise:
      times: [0.0, 0.5, 1.5]
      values: [0.0, 3.0, -2.0]
  load_torque: 0.25
controller:
  mode: smc1
  k: 30.0
  switch_fn: saturation
  use_equivalent: false
bank:
  speeds: [-0.5, -1.5, -2.5, -3.5]
  delta: 0.2
  gains: [20.0, 21.0, 22.0, 23.0]
  alpha_d: [0.5, 0.0, 2.0, 0.0]
out_dir: results
controllers: [smc2, smmc]
"""


class TestDefaults:
    def test_empty_text_gives_shipped_defaults(self):
        assert parse_config("") == RunConfig()

    def test_default_scenario_is_the_shipped_one(self):
        cfg = parse_config("")
        assert cfg.scenario == default_scenario()
        assert cfg.controller.mode == "smmc"
        assert cfg.controllers == ("smc1", "smc2", "smmc")
        assert cfg.out_dir == "out"

    def test_minimal_machine_only_config(self):
        cfg = parse_config("machine:\n  rs: 2.0\n")
        assert cfg.scenario.machine.rs == 2.0
        assert cfg.scenario.machine.rr == default_scenario().machine.rr
        assert cfg.scenario.horizon == 100.0

    def test_serialized_defaults_echo_everything(self):
        text = serialize_config(RunConfig())
        for token in ("rs:", "dt:", "record_stride: 10", "mode: smmc",
                      "gain_margin:", "out_dir: out", "controllers:"):
            assert token in text


class TestRoundTrip:
    @pytest.mark.parametrize("text", ["", NONTRIVIAL], ids=["defaults", "full"])
    def test_parse_serialize_parse_is_identity(self, text):
        first = parse_config(text)
        again = parse_config(serialize_config(first))
        assert again == first

    def test_nontrivial_values_survive(self):
        cfg = parse_config(NONTRIVIAL)
        assert cfg.scenario.machine.p == 3
        assert cfg.scenario.torque_ref == piecewise([0.0, 0.5, 1.5],
                                                    [0.0, 3.0, -2.0])
        assert cfg.scenario.load_torque == constant(0.25)
        assert cfg.bank.gains == (20.0, 21.0, 22.0, 23.0)
        assert cfg.bank.alpha_d == (0.5, 0.0, 2.0, 0.0)
        assert cfg.controllers == ("smc2", "smmc")
        assert cfg.out_dir == "results"

    def test_exotic_floats_round_trip(self):
        text = "scenario:\n  dt: 1.2345678901234567e-4\n  horizon: 0.1\n"
        cfg = parse_config(text)
        assert parse_config(serialize_config(cfg)) == cfg


class TestSignals:
    def test_step_spelling(self):
        cfg = parse_config(
            "scenario:\n  torque_ref:\n    step: {at: 2.0, from: 1.0, to: -1.0}\n"
        )
        assert cfg.scenario.torque_ref == step(2.0, 1.0, -1.0)

    def test_constant_spellings(self):
        long_form = parse_config("scenario:\n  load_torque: {constant: 3.0}\n")
        short_form = parse_config("scenario:\n  load_torque: 3.0\n")
        assert long_form.scenario.load_torque == short_form.scenario.load_torque

    def test_step_needs_all_three_fields(self):
        with pytest.raises(ValidationError):
            parse_config("scenario:\n  torque_ref:\n    step: {at: 2.0}\n")

    def test_unknown_signal_kind(self):
        with pytest.raises(UnknownKeyError):
            parse_config("scenario:\n  torque_ref:\n    ramp: {}\n")

    def test_signal_needs_exactly_one_kind(self):
        with pytest.raises(ValidationError):
            parse_config(
                "scenario:\n  torque_ref:\n    constant: 1.0\n    step:"
                " {at: 1.0, from: 0.0, to: 1.0}\n"
            )

    def test_piecewise_length_mismatch_propagates(self):
        with pytest.raises(LengthMismatch):
            parse_config(
                "scenario:\n  torque_ref:\n    piecewise:\n"
                "      times: [0.0, 1.0]\n      values: [1.0]\n"
            )


class TestStrictKeys:
    @pytest.mark.parametrize("text,fragment", [
        ("mashine:\n  rs: 2.0\n", "config.mashine"),
        ("machine:\n  rss: 2.0\n", "machine.rss"),
        ("scenario:\n  dtt: 1.0\n", "scenario.dtt"),
        ("controller:\n  gain: 1.0\n", "controller.gain"),
        ("bank:\n  speed: [1.0]\n", "bank.speed"),
    ])
    def test_unknown_keys_name_their_path(self, text, fragment):
        with pytest.raises(UnknownKeyError, match=fragment):
            parse_config(text)

    def test_unknown_key_error_is_a_parse_error(self):
        with pytest.raises(ParseError):
            parse_config("nonsense: 1\n")


class TestErrors:
    def test_yaml_syntax_error_carries_line(self):
        with pytest.raises(ParseError) as info:
            parse_config("machine:\n  rs: [unclosed\nbank:\n")
        assert info.value.line is not None

    def test_dt_zero_names_the_invariant(self):
        with pytest.raises(ValidationError, match="dt > 0"):
            parse_config("scenario:\n  dt: 0.0\n")

    def test_type_errors_name_the_key(self):
        with pytest.raises(ValidationError, match="machine.rs"):
            parse_config("machine:\n  rs: fast\n")
        with pytest.raises(ValidationError, match="machine.p"):
            parse_config("machine:\n  p: 2.5\n")
        with pytest.raises(ValidationError, match="use_equivalent"):
            parse_config("controller:\n  use_equivalent: 1\n")
        with pytest.raises(ValidationError, match="record_stride"):
            parse_config("scenario:\n  record_stride: 2.5\n")

    def test_top_level_must_be_mapping(self):
        with pytest.raises(ValidationError):
            parse_config("- just\n- a\n- list\n")

    def test_em0_needs_four_entries(self):
        with pytest.raises(ValidationError, match="em0"):
            parse_config("scenario:\n  em0: [0.0, 0.0]\n")

    def test_controller_selection_validated(self):
        with pytest.raises(ValidationError):
            parse_config("controllers: [smc9]\n")
        with pytest.raises(ValidationError):
            parse_config("controllers: []\n")

    def test_bad_mode_rejected(self):
        with pytest.raises(ValidationError):
            parse_config("controller:\n  mode: pid\n")


class TestPresets:
    def test_presets_cover_all_modes(self):
        assert set(COMPARISON_PRESETS) == {"smc1", "smc2", "smmc"}

    def test_smc1_preset_is_the_pure_relay(self):
        preset = controller_preset("smc1")
        assert preset.switch_fn == "sign"
        assert preset.use_equivalent is False

    def test_duplicate_selection_is_allowed(self):
        cfg = parse_config("controllers: [smmc, smmc]\n")
        assert cfg.controllers == ("smmc", "smmc")

    def test_unknown_preset_name(self):
        with pytest.raises(ValidationError):
            controller_preset("lqr")
