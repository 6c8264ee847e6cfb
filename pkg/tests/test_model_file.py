"""
Tests for the JSON model file.
"""
import json

import numpy as np
import pytest

from fvsggm.core.exceptions import ModelFileError, ModelInvariantError
from fvsggm.schemas.model_file import ModelFile, ModelMetadata, load_model
from fvsggm.services.experiments import random_fvs_model


@pytest.fixture
def model():
    return random_fvs_model(12, 2, seed=17)


@pytest.fixture
def model_json(model):
    metadata = ModelMetadata(algorithm="greedy-fvs", objective=0.125, ridge=1e-8)
    return ModelFile.from_model(model, metadata).to_json()


def test_round_trip_is_byte_identical(model_json):
    """Test serialize -> parse -> serialize."""
    assert ModelFile.from_json(model_json).to_json() == model_json


def test_round_trip_keeps_the_model(model, model_json):
    """Test that the rebuilt model has the same information matrix."""
    loaded, parsed = load_model(model_json)
    np.testing.assert_array_equal(loaded.assemble(), model.assemble())
    assert loaded.part == model.part
    assert parsed.metadata.algorithm == "greedy-fvs"
    assert parsed.metadata.ridge == 1e-8


def test_round_trip_with_potential_and_labels(model):
    """Test the optional h, labels and sigma fields."""
    h = np.linspace(-1.0, 1.0, model.n)
    labels = [f"x{i}" for i in range(model.n)]
    text = ModelFile.from_model(model.with_potential(h), node_labels=labels, sigma=np.eye(model.n)).to_json()
    loaded, parsed = load_model(text)
    np.testing.assert_array_equal(loaded.potential(), h)
    assert parsed.node_labels == labels
    assert parsed.sigma[0][0] == 1.0
    assert ModelFile.from_json(text).to_json() == text


def test_off_tree_entry_is_an_invariant_violation(model_json):
    """Test that a J_T nonzero between non-adjacent tree nodes is rejected."""
    data = json.loads(model_json)
    edges = {tuple(e) for e in data["tree_edges"]}
    tree_nodes = sorted({a for a, b, _ in data["j_t"] if a == b})
    pair = next((a, b) for a in tree_nodes for b in tree_nodes if a < b and (a, b) not in edges)
    data["j_t"].append([pair[0], pair[1], 0.1])
    with pytest.raises(ModelInvariantError):
        load_model(json.dumps(data))


def test_cycle_is_an_invariant_violation(model_json):
    """Test that tree_edges must be acyclic."""
    data = json.loads(model_json)
    edges = [tuple(e) for e in data["tree_edges"]]
    first, second = next(
        (e, f) for i, e in enumerate(edges) for f in edges[i + 1:] if set(e) & set(f)
    )
    ends = sorted(set(first) ^ set(second))
    data["tree_edges"].append(ends)
    with pytest.raises(ModelInvariantError):
        load_model(json.dumps(data))


def test_indefinite_model_is_an_invariant_violation(model_json):
    """Test that a non-PD J is rejected on load."""
    data = json.loads(model_json)
    data["j_t"] = [[a, b, -v if a == b else v] for a, b, v in data["j_t"]]
    with pytest.raises(ModelInvariantError):
        load_model(json.dumps(data))


def test_malformed_json_is_a_file_error():
    with pytest.raises(ModelFileError):
        load_model("{not json")


def test_unknown_field_is_a_file_error(model_json):
    data = json.loads(model_json)
    data["extra"] = 1
    with pytest.raises(ModelFileError):
        load_model(json.dumps(data))


def test_wrong_schema_version_is_a_file_error(model_json):
    data = json.loads(model_json)
    data["schema_version"] = "999"
    with pytest.raises(ModelFileError, match="schema version"):
        load_model(json.dumps(data))


def test_mismatched_fvs_count_is_a_file_error(model_json):
    data = json.loads(model_json)
    data["k"] = 3
    with pytest.raises(ModelFileError):
        load_model(json.dumps(data))


def test_duplicate_entry_is_a_file_error(model_json):
    """Test that an entry listed twice is rejected."""
    data = json.loads(model_json)
    data["j_t"].append(data["j_t"][0])
    with pytest.raises(ModelFileError, match="twice"):
        load_model(json.dumps(data))


def test_entry_in_wrong_block_is_a_file_error(model_json):
    """Test that a J_M entry must pair a tree node with a feedback node."""
    data = json.loads(model_json)
    fvs = data["fvs"]
    data["j_m"].append([fvs[0], fvs[1], 0.5])
    with pytest.raises(ModelFileError):
        load_model(json.dumps(data))
