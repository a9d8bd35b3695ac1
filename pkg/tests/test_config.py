import json
import re

import pytest

from fracsap.config import DEFAULTS, load_config, load_dict, shipped
from fracsap.errors import ConfigError

MINIMAL = {"operator": {"alpha": 1.5, "eigenvalues": [-2.0]}}


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestDefaults:
    def test_minimal(self):
        cfg = load_dict(MINIMAL)
        r = cfg.resolved
        assert r["operator"]["mu"] == -2.0
        assert r["noise"]["dim"] == 1 and r["noise"]["Q"] == [0.0]
        assert r["model"]["phi"]["value"] == [1.0]
        assert r["coefficients"]["sap_omega"] == r["model"]["omega"] == 1.0
        assert r["coefficients"]["f"]["period"] == 1.0
        assert r["analysis"]["omega"] == 1.0
        assert cfg.solver.step == DEFAULTS["solver"]["step"]
        assert cfg.model.dim == 1 and not cfg.model.coefficients.f.active

    def test_unpack(self):
        model, solver, analysis = load_dict(MINIMAL)
        assert analysis.checkpoints == (5.0, 10.0, 20.0, 40.0, 80.0)

    @pytest.mark.parametrize("name", ["deterministic", "sap", "sap_periodic", "failing"])
    def test_shipped_load(self, name):
        cfg = load_config(shipped(name))
        assert cfg.source.endswith(f"{name}.toml")

    def test_unknown_shipped(self):
        with pytest.raises(ConfigError):
            shipped("nope")


class TestRejection:
    def test_k0_out_of_range(self):
        raw = {**MINIMAL, "coefficients": {"k0": 1.2}}
        with pytest.raises(ConfigError, match="k0"):
            load_dict(raw)

    def test_misaligned_step(self):
        raw = {**MINIMAL, "model": {"tau": 1.0}, "solver": {"step": 0.3, "horizon": 3.0}}
        with pytest.raises(ConfigError, match="0.3"):
            load_dict(raw)

    @pytest.mark.parametrize("raw, where", [
        ({**MINIMAL, "solver": {"stepsize": 0.1}}, "solver.stepsize"),
        ({**MINIMAL, "extra": {}}, "extra"),
        ({**MINIMAL, "coefficients": {"f": {"kind": "linear", "amp": 1.0}}}, "coefficients.f.amp"),
        ({**MINIMAL, "noise": {"atoms": [{"mark": 1.0, "rate": 1.0, "size": 2}]}}, "noise.atoms[0].size"),
    ])
    def test_unknown_key(self, raw, where):
        with pytest.raises(ConfigError, match=re.escape(f"unknown key '{where}'")):
            load_dict(raw)

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="operator.eigenvalues"):
            load_dict({"operator": {"alpha": 1.5}})

    def test_bad_preset_names_role(self):
        raw = {**MINIMAL, "coefficients": {"g": {"kind": "cubic"}}}
        with pytest.raises(ConfigError, match="coefficients.g"):
            load_dict(raw)

    def test_atom_needs_rate(self):
        with pytest.raises(ConfigError, match="mark and rate"):
            load_dict({**MINIMAL, "noise": {"atoms": [{"mark": 1.0}]}})

    def test_parse_error_location(self, tmp_path):
        p = write(tmp_path, "[operator]\nalpha = 1.5\neigenvalues = [-1.0\n")
        with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
            load_config(p)

    def test_json_parse_error_location(self, tmp_path):
        p = write(tmp_path, '{"config": {', "m.json")
        with pytest.raises(ConfigError, match=r"line 1, column \d+"):
            load_config(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.toml")

    def test_sector_violation(self):
        with pytest.raises(ConfigError):
            load_dict({"operator": {"alpha": 2.5, "eigenvalues": [-1.0]}})


class TestRoundTrip:
    @pytest.mark.parametrize("name", ["sap", "failing"])
    def test_manifest_echo(self, tmp_path, name):
        first = load_config(shipped(name))
        p = write(tmp_path, json.dumps({"artifact": "x", "config": first.resolved}), "manifest.json")
        again = load_config(p)
        assert again.resolved == first.resolved
        assert repr(again.model) == repr(first.model)
        assert again.solver == first.solver and again.analysis == first.analysis

    def test_resolved_is_idempotent(self):
        r = load_dict(MINIMAL).resolved
        assert load_dict(json.loads(json.dumps(r))).resolved == r
