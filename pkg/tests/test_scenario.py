"""Tests for scenario serialization, validation, and the shipped presets."""

import json

import pytest

from swarmguide.scenario import (
    PRESET_NAMES,
    Scenario,
    ScenarioError,
    build_labyrinth_preset,
    build_rhombus_preset,
    canonical_json,
    load_preset,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    scenario_violations,
)


class TestPresets:
    def test_rhombus_preset_loads(self):
        sc = load_preset("rhombus-4")
        assert sc.name == "rhombus-4"
        assert sc.formation.n_drones == 4
        assert sc.formation.velocity_gain == -7.0
        link = sc.formation.links[0]
        assert link.params.mass == 1.9
        assert link.params.damping == 12.6
        assert link.params.stiffness == 21.0
        assert link.limits.x == 0.25
        assert sc.obstacles == []

    def test_labyrinth_preset_loads(self):
        sc = load_preset("triangle-3-labyrinth")
        assert sc.formation.n_drones == 3
        assert len(sc.obstacles) == 2
        assert all(o.influence > o.radius for o in sc.obstacles)
        assert sc.finish is not None
        dists = sc.formation.default_pair_distances()
        assert all(abs(d - 0.5) < 1e-12 for d in dists.values())

    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            load_preset("hexagon-7")

    def test_preset_names_all_load(self):
        for name in PRESET_NAMES:
            assert load_preset(name).schema_version == 1


class TestRoundTrip:
    def test_load_save_load_fixed_point(self, tmp_path):
        sc = build_labyrinth_preset()
        p1 = str(tmp_path / "a.json")
        p2 = str(tmp_path / "b.json")
        save_scenario(sc, p1)
        again = load_scenario(p1)
        save_scenario(again, p2)
        assert open(p1).read() == open(p2).read()

    def test_hash_stable_under_key_reordering(self):
        doc = scenario_to_dict(build_rhombus_preset())
        reordered = json.loads(json.dumps(doc, sort_keys=False))
        reordered = dict(reversed(list(reordered.items())))
        assert canonical_json(doc) == canonical_json(reordered)

    def test_hash_changes_with_content(self):
        a = build_rhombus_preset()
        b = build_rhombus_preset()
        b.sample_time = 1.0 / 120.0
        assert a.hash() != b.hash()

    def test_dict_round_trip_preserves_hash(self):
        sc = build_labyrinth_preset()
        again = scenario_from_dict(scenario_to_dict(sc))
        assert sc.hash() == again.hash()

    def test_defaults_round_trip(self):
        sc = build_rhombus_preset()
        again = scenario_from_dict(scenario_to_dict(sc))
        assert again.pid_xy.kp == 8.0
        assert again.limits.d_min == 0.15
        assert again.thresholds.cooldown_ms == 300.0
        assert again.avoidance_enabled is True


class TestValidation:
    def bad_doc(self, **overrides):
        doc = scenario_to_dict(build_labyrinth_preset())
        doc.update(overrides)
        return doc

    def test_valid_doc_no_violations(self):
        assert scenario_violations(scenario_to_dict(build_rhombus_preset())) == []

    def test_influence_not_above_radius_rejected(self):
        doc = self.bad_doc()
        doc["obstacles"][0]["influence"] = doc["obstacles"][0]["radius"]
        violations = scenario_violations(doc)
        assert any("influence" in v and "exceed" in v for v in violations)

    def test_version_mismatch_named(self):
        violations = scenario_violations(self.bad_doc(schema_version=99))
        assert any("schema_version 99" in v for v in violations)

    def test_collects_multiple_violations(self):
        doc = self.bad_doc(schema_version=99)
        del doc["name"]
        doc["apf"]["repulsive"] = -1.0
        doc["sample_time"] = 0.0
        violations = scenario_violations(doc)
        assert len(violations) >= 4
        assert any("name" in v for v in violations)
        assert any("repulsive" in v for v in violations)
        assert any("sample_time" in v for v in violations)

    def test_unreachable_drone_reported(self):
        doc = self.bad_doc()
        doc["formation"]["links"] = doc["formation"]["links"][:1]
        violations = scenario_violations(doc)
        assert any("reachable" in v for v in violations)

    def test_bad_anchor_kind(self):
        doc = self.bad_doc()
        doc["formation"]["drones"][0]["anchor"]["kind"] = "planet"
        violations = scenario_violations(doc)
        assert any("anchor kind" in v for v in violations)

    def test_midpoint_arity_checked(self):
        doc = self.bad_doc()
        doc["formation"]["drones"][0]["anchor"] = {"kind": "midpoint", "indices": [1]}
        violations = scenario_violations(doc)
        assert any("needs 2 indices" in v for v in violations)

    def test_scenario_from_dict_raises_with_all(self):
        doc = self.bad_doc(schema_version=99)
        doc["apf"]["max_speed"] = 0.0
        with pytest.raises(ScenarioError) as exc:
            scenario_from_dict(doc)
        assert len(exc.value.violations) >= 2

    def test_non_object_document(self):
        assert scenario_violations([1, 2, 3]) == ["scenario document must be a JSON object"]

    def test_bool_is_not_a_number(self):
        doc = self.bad_doc()
        doc["sample_time"] = True
        violations = scenario_violations(doc)
        assert any("sample_time" in v and "bool" in v for v in violations)

    def test_exit_margin_must_stay_below_theta(self):
        doc = self.bad_doc()
        doc["thresholds"]["exit_margin"] = 0.5
        violations = scenario_violations(doc)
        assert any("exit_margin" in v for v in violations)

    def test_negative_pid_gain_rejected(self):
        doc = self.bad_doc()
        doc["pid"]["xy"]["kp"] = -1.0
        violations = scenario_violations(doc)
        assert any("pid.xy" in v and "kp" in v for v in violations)

    def test_finish_region_validated(self):
        doc = self.bad_doc()
        doc["finish"] = {"center": [0.0], "radius": -1.0}
        violations = scenario_violations(doc)
        assert any("finish" in v and "center" in v for v in violations)
        assert any("finish" in v and "radius" in v for v in violations)
