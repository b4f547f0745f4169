from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from socio_grid_sim import (
    ScenarioParseError,
    SimulationResult,
    ValidationError,
    builtin_case_study,
    load_scenario,
    scenario_from_dict,
    scenario_to_dict,
    simulate,
    write_results,
    write_scenario,
)


def minimal_doc() -> dict:
    return {
        "schema_version": 1,
        "label": "demo",
        "params": {"horizon_hours": 4.0},
        "agents": {"count": 3, "groups": [0, 0, 1], "initial_dissatisfaction": 0.5},
        "network": {"full_within_groups": {"weight": 1.0}},
        "schedules": {
            "electricity": {"broadcast": [[0.0, 1.0], [2.0, 0.5]]},
            "media_access": {"broadcast": [[0.0, 1.0]]},
        },
    }


class TestBuiltinCaseStudy:
    def test_population_structure(self):
        scenario = builtin_case_study("full_access")
        assert scenario.n_agents == 9
        assert scenario.network.n_groups == 3
        assert np.array_equal(scenario.network.group_sizes, [3, 3, 3])
        assert np.all(scenario.initial_dissatisfaction == 0.5)
        assert scenario.params.horizon_hours == 48.0

    def test_full_access_schedules(self):
        scenario = builtin_case_study("full_access")
        assert scenario.electricity[0].value_at(20.0) == 0.5
        assert scenario.media_access[0].value_at(20.0) == 1.0

    def test_limited_access_schedules(self):
        scenario = builtin_case_study("limited_access")
        for t in (0.0, 17.0, 33.9, 47.9):
            assert scenario.media_access[4].value_at(t) == 0.5

    def test_no_shedding_outside_window(self):
        for variant in ("full_access", "limited_access"):
            scenario = builtin_case_study(variant)
            for t in (5.0, 40.0):
                assert 1.0 - scenario.electricity[0].value_at(t) == 0.0
            assert 1.0 - scenario.electricity[0].value_at(20.0) == 0.5

    def test_rejects_unknown_variant(self):
        with pytest.raises(ValidationError, match="variant"):
            builtin_case_study("offline")


class TestScenarioDocuments:
    def test_loads_minimal_document(self, tmp_path: Path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps(minimal_doc()))
        scenario = load_scenario(path)
        assert scenario.label == "demo"
        assert scenario.n_agents == 3
        assert scenario.electricity[0].value_at(3.0) == 0.5
        assert scenario.params.omega1 == 0.5  # defaults fill in

    def test_round_trip_identity(self, tmp_path: Path):
        original = scenario_from_dict(minimal_doc())
        path = tmp_path / "out.json"
        write_scenario(original, path)
        reloaded = load_scenario(path)
        assert reloaded == original
        write_scenario(reloaded, tmp_path / "again.json")
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()

    def test_round_trip_builtin(self, tmp_path: Path):
        original = builtin_case_study("limited_access")
        path = tmp_path / "case.json"
        write_scenario(original, path)
        assert load_scenario(path) == original

    def test_per_agent_schedules_and_dense_network(self, tmp_path: Path):
        doc = minimal_doc()
        doc["network"] = {"dense": [[0.0, 2.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]}
        doc["schedules"]["electricity"] = {
            "per_agent": [[[0.0, 1.0]], [[0.0, 0.5]], [[0.0, 0.25], [1.0, 0.75]]]
        }
        scenario = scenario_from_dict(doc)
        assert scenario.network.base_weights[0, 1] == 2.0
        assert scenario.electricity[2].value_at(2.0) == 0.75

    def test_initial_state_violation_names_agent_and_bound(self):
        doc = minimal_doc()
        doc["agents"]["initial_dissatisfaction"] = [0.5, 1.5, 0.5]
        with pytest.raises(ValidationError) as excinfo:
            scenario_from_dict(doc)
        assert any(
            "initial_dissatisfaction[1]" in v and "[0, 1]" in v for v in excinfo.value.violations
        )

    def test_collects_every_violation(self):
        doc = minimal_doc()
        doc["params"] = {"horizon_hours": -2.0, "omega1": 0.9, "omega2": 0.9}
        doc["agents"]["initial_dissatisfaction"] = [0.5, -0.1, 1.2]
        doc["schedules"]["media_access"] = {"broadcast": [[0.0, 7.0]]}
        with pytest.raises(ValidationError) as excinfo:
            scenario_from_dict(doc)
        text = "\n".join(excinfo.value.violations)
        assert "params:" in text
        assert "initial_dissatisfaction[1]" in text
        assert "initial_dissatisfaction[2]" in text
        assert "media_access" in text
        assert len(excinfo.value.violations) >= 4

    def test_unknown_keys_rejected(self):
        doc = minimal_doc()
        doc["params"]["omega3"] = 0.5
        doc["extras"] = {}
        with pytest.raises(ValidationError) as excinfo:
            scenario_from_dict(doc)
        text = "\n".join(excinfo.value.violations)
        assert "omega3" in text and "extras" in text

    def test_schema_version_checked(self):
        doc = minimal_doc()
        doc["schema_version"] = 99
        with pytest.raises(ValidationError, match="schema_version"):
            scenario_from_dict(doc)

    def test_fuzzed_corruptions_always_name_a_field(self):
        corruptions = [
            ("params", "omega1", 3.0),
            ("params", "omega2", -0.5),
            ("params", "dt_hours", 0.0),
            ("params", "horizon_hours", "soon"),
            ("params", "report_every_hours", 0.37),
            ("agents", "count", 0),
            ("agents", "groups", [0, 0, 5]),
            ("agents", "groups", "everyone"),
            ("agents", "initial_dissatisfaction", [0.5]),
            ("network", "full_within_groups", {"weight": -2.0}),
            ("network", "full_within_groups", {"weights": 1.0}),
            ("schedules", "electricity", {"broadcast": [[1.0, 0.5]]}),
            ("schedules", "electricity", {"broadcast": [[0.0, 2.0]]}),
            ("schedules", "media_access", {"per_agent": [[[0.0, 1.0]]]}),
            ("schedules", "media_access", 7),
        ]
        for section, key, value in corruptions:
            doc = minimal_doc()
            if isinstance(doc.get(section), dict):
                doc[section] = dict(doc[section])
                doc[section][key] = value
            else:
                doc[section] = value
            with pytest.raises(ValidationError) as excinfo:
                scenario_from_dict(doc)
            named = [v for v in excinfo.value.violations if section in v or key in v]
            assert named, f"no violation names {section}.{key}: {excinfo.value.violations}"

    def test_parse_error_reports_location(self, tmp_path: Path):
        path = tmp_path / "broken.json"
        path.write_text('{"schema_version": 1,,}')
        with pytest.raises(ScenarioParseError, match="line 1"):
            load_scenario(path)

    def test_missing_file_is_io_error(self, tmp_path: Path):
        with pytest.raises(OSError):
            load_scenario(tmp_path / "nope.json")

    def test_broadcast_detection_on_export(self):
        scenario = builtin_case_study("full_access")
        doc = scenario_to_dict(scenario)
        assert "broadcast" in doc["schedules"]["electricity"]
        assert doc["agents"]["count"] == 9


class TestWriteResults:
    def test_case_study_files(self, tmp_path: Path):
        result = simulate(builtin_case_study("full_access"))
        paths = write_results(result, tmp_path / "out")
        assert [p.name for p in paths] == ["agents.csv", "aggregates.csv", "manifest.json"]
        agg_lines = (tmp_path / "out" / "aggregates.csv").read_text().splitlines()
        assert agg_lines[0] == "t_hours,scope,mean_s,min_s,max_s,std_s"
        first_global = next(l for l in agg_lines[1:] if l.split(",")[1] == "global")
        assert first_global.split(",")[0] == "0"
        assert first_global.split(",")[2] == "0.5"
        agents_lines = (tmp_path / "out" / "agents.csv").read_text().splitlines()
        assert agents_lines[0] == "t_hours,agent_id,group,dissatisfaction,satisfaction"
        assert len(agents_lines) == 1 + 49 * 9

    def test_manifest_has_resolved_parameters_and_digest(self, tmp_path: Path):
        scenario = builtin_case_study("full_access")
        result = simulate(scenario)
        write_results(result, tmp_path)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["params"]["omega1"] == 0.5
        assert manifest["params"]["dt_hours"] == 0.1
        assert manifest["scenario_digest"] == scenario.content_digest()
        assert manifest["aggregation_std"] == "population"
        assert manifest["clamp_activations"] == 0
        assert manifest["tool_version"]
        assert "timestamp" not in json.dumps(manifest).lower()

    def test_empty_result_writes_headers_only(self, tmp_path: Path):
        empty = SimulationResult(
            times=np.zeros(0),
            dissatisfaction=np.zeros((0, 4)),
            groups=np.zeros(4, dtype=int),
            aggregates=(),
            manifest={"label": "empty"},
        )
        write_results(empty, tmp_path)
        assert (tmp_path / "agents.csv").read_text() == "t_hours,agent_id,group,dissatisfaction,satisfaction\n"
        assert (tmp_path / "aggregates.csv").read_text() == "t_hours,scope,mean_s,min_s,max_s,std_s\n"

    def test_two_identical_runs_are_byte_identical(self, tmp_path: Path):
        scenario = builtin_case_study("limited_access")
        write_results(simulate(scenario), tmp_path / "a")
        write_results(simulate(scenario), tmp_path / "b")
        for name in ("agents.csv", "aggregates.csv", "manifest.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
