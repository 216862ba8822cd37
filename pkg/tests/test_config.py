"""Config loading, aggregated validation, and builder behavior."""

import json

import pytest

from icstream.config import (
    ENDPOINT_ENV,
    ExperimentConfig,
    load_config,
    memory_config,
    parse_config,
    predictor_configs,
    stream_factory,
)
from icstream.errors import ConfigError
from icstream.ingestion.synthetic import GaussianDriftSource, RotatingHyperplaneSource


def minimal_doc(**overrides):
    doc = {
        "version": 1,
        "source": {
            "kind": "gaussian_drift",
            "segments": [
                {"length": 300, "priors": [0.5, 0.5], "means": [[0.0], [3.0]]},
            ],
        },
        "memory": {"m": 32, "short_ratio": 0.75, "t_warm": 10},
        "predictors": [{"kind": "knn", "k": 3}],
        "seeds": [0, 1],
    }
    doc.update(overrides)
    return doc


def problems_of(doc):
    with pytest.raises(ConfigError) as excinfo:
        parse_config(doc)
    return excinfo.value.problems


class TestLoading:
    def test_yaml_roundtrip(self, tmp_path):
        path = tmp_path / "exp.yaml"
        path.write_text(
            "version: 1\n"
            "dataset: demo\n"
            "source:\n"
            "  kind: rotating_hyperplane\n"
            "  dims: 4\n"
            "  rotation_rate: 0.001\n"
            "  length: 5000\n"
            "memory:\n"
            "  m: 200\n"
            "  short_ratio: 0.75\n"
            "predictors:\n"
            "  - kind: naive_bayes\n"
            "seeds: [0, 1, 2]\n"
            "window: 500\n"
        )
        config = load_config(path)
        assert config.dataset == "demo"
        assert config.label() == "demo"
        assert config.source.dims == 4
        assert config.memory.short_ratio == 0.75
        assert config.window == 500
        assert config.seeds == [0, 1, 2]

    def test_json_roundtrip(self, tmp_path):
        path = tmp_path / "exp.json"
        path.write_text(json.dumps(minimal_doc()))
        config = load_config(path)
        assert config.memory.m == 32
        assert [p.kind for p in config.predictors] == ["knn"]

    def test_missing_file_names_path(self, tmp_path):
        path = tmp_path / "absent.yaml"
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert str(path) in str(excinfo.value)

    def test_bad_yaml_syntax(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("memory: [unclosed\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(path)

    def test_bad_json_syntax(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"version\": 1,,}")
        with pytest.raises(ConfigError, match="cannot parse"):
            load_config(path)

    def test_top_level_must_be_mapping(self):
        problems = problems_of(["not", "a", "mapping"])
        assert any("mapping" in p for p in problems)


class TestValidation:
    def test_minimal_doc_passes(self):
        config = parse_config(minimal_doc())
        assert isinstance(config, ExperimentConfig)
        assert config.window == 1000
        assert config.report_formats == ["json", "csv"]
        assert config.output_dir == "runs"

    def test_all_problems_reported_at_once(self):
        doc = minimal_doc(
            version=3,
            seeds=[7, 7],
            report_formats=["xml"],
            window=0,
            typo_field=True,
        )
        doc["source"] = {"kind": "csv", "path": "x.csv", "class_names": ["only"]}
        problems = problems_of(doc)
        found = "\n".join(problems)
        assert "unsupported config version 3" in found
        assert "source.csv.class_names" in found
        assert "seeds must be distinct" in found
        assert "report_formats" in found
        assert "window" in found
        assert "typo_field" in found
        assert len(problems) >= 6

    def test_structural_and_semantic_in_one_pass(self):
        doc = minimal_doc(seeds=[])
        doc["memory"] = {"m": 1, "short_ratio": 2.0}
        doc["predictors"] = [{"kind": "remote"}, {"kind": "knn", "k": 0}]
        doc["source"] = {
            "kind": "csv",
            "path": "/nowhere/data.csv",
            "class_names": ["a", "b"],
        }
        problems = problems_of(doc)
        found = "\n".join(problems)
        assert "seeds" in found
        assert "memory:" in found
        assert "predictors[0]" in found and "endpoint" in found
        assert "predictors[1]" in found
        assert "no such file" in found

    def test_unknown_source_kind(self):
        problems = problems_of(minimal_doc(source={"kind": "parquet"}))
        assert any("source" in p for p in problems)

    def test_singular_predictor_key_accepted(self):
        doc = minimal_doc()
        doc["predictor"] = doc.pop("predictors")[0]
        config = parse_config(doc)
        assert len(config.predictors) == 1
        assert config.predictors[0].kind == "knn"

    def test_both_predictor_keys_rejected(self):
        doc = minimal_doc()
        doc["predictor"] = {"kind": "no_change"}
        problems = problems_of(doc)
        assert any("predictor" in p and "Extra" in p for p in problems)

    def test_inconsistent_drift_segments(self):
        doc = minimal_doc()
        doc["source"]["segments"].append(
            {"length": 300, "priors": [0.5, 0.5], "means": [[0.0, 1.0], [3.0, 1.0]]}
        )
        problems = problems_of(doc)
        assert any("segments must share the feature count" in p for p in problems)

    def test_empty_predictors_rejected(self):
        problems = problems_of(minimal_doc(predictors=[]))
        assert any("predictors" in p for p in problems)


class TestBuilders:
    def test_memory_config_fields(self):
        config = parse_config(minimal_doc())
        built = memory_config(config)
        assert built.m == 32
        assert built.t_warm == 10
        assert built.variant == "dual"

    def test_predictor_configs(self):
        config = parse_config(minimal_doc())
        (built,) = predictor_configs(config)
        assert built.kind == "knn"
        assert built.k == 3

    def test_endpoint_env_override(self, monkeypatch):
        doc = minimal_doc(
            predictors=[
                {"kind": "remote", "endpoint": "localhost:4000"},
                {"kind": "knn", "endpoint": "localhost:4000"},
            ]
        )
        monkeypatch.setenv(ENDPOINT_ENV, "10.0.0.5:9000")
        remote, knn = predictor_configs(parse_config(doc))
        assert remote.endpoint == "10.0.0.5:9000"
        assert knn.endpoint == "localhost:4000"

    def test_endpoint_without_env_keeps_file_value(self, monkeypatch):
        monkeypatch.delenv(ENDPOINT_ENV, raising=False)
        doc = minimal_doc(predictors=[{"kind": "remote", "endpoint": "localhost:4000"}])
        (built,) = predictor_configs(parse_config(doc))
        assert built.endpoint == "localhost:4000"

    def test_stream_factory_gaussian(self):
        config = parse_config(minimal_doc())
        factory = stream_factory(config)
        stream = factory(5)
        assert isinstance(stream, GaussianDriftSource)
        first = next(iter(stream))
        assert len(first.features) == 1

    def test_stream_factory_hyperplane(self):
        doc = minimal_doc(
            source={
                "kind": "rotating_hyperplane",
                "dims": 3,
                "rotation_rate": 0.01,
                "length": 100,
            }
        )
        stream = stream_factory(parse_config(doc))(0)
        assert isinstance(stream, RotatingHyperplaneSource)

    def test_stream_factory_csv_ignores_seed(self, tmp_path):
        path = tmp_path / "tiny.csv"
        path.write_text("f1,f2,label\n0.1,0.2,yes\n0.3,0.4,no\n")
        doc = minimal_doc(
            source={
                "kind": "csv",
                "path": str(path),
                "class_names": ["yes", "no"],
            }
        )
        factory = stream_factory(parse_config(doc))
        rows_a = [(tuple(e.features), e.label) for e in factory(0)]
        rows_b = [(tuple(e.features), e.label) for e in factory(99)]
        assert rows_a == rows_b
        assert len(rows_a) == 2

    def test_label_falls_back_to_stem_then_kind(self, tmp_path):
        path = tmp_path / "electricity.csv"
        path.write_text("a,b\n1,x\n2,y\n")
        doc = minimal_doc(
            source={"kind": "csv", "path": str(path), "class_names": ["x", "y"]}
        )
        assert parse_config(doc).label() == "electricity"
        assert parse_config(minimal_doc()).label() == "gaussian_drift"

    def test_ablation_defaults_match_protocol(self):
        config = parse_config(minimal_doc())
        assert config.ablation.m_values == [600, 800, 1000]
        assert config.ablation.ratio_values == [0.65, 0.75, 0.85]
        assert set(config.ablation.variants) == {"dual", "long_only", "short_only"}
