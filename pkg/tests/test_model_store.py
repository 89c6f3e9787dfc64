import json

import numpy as np
import pytest

from rsowatch.anchor_ae import TrainedModel, score_matrix
from rsowatch.model_store import FORMAT_VERSION, ModelFormatError, load_model, save_model


class TestRoundTrip:
    def test_everything_survives(self, trained_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(trained_model, path)
        loaded = load_model(path)
        assert loaded.config == trained_model.config
        for name in trained_model.params:
            assert np.array_equal(loaded.params[name], trained_model.params[name]), name
        assert np.array_equal(loaded.norm.mean, trained_model.norm.mean)
        assert np.array_equal(loaded.norm.std, trained_model.norm.std)
        assert np.array_equal(loaded.err_mean, trained_model.err_mean)
        assert np.array_equal(loaded.err_std, trained_model.err_std)
        assert np.array_equal(loaded.latent_ref, trained_model.latent_ref)
        assert loaded.metadata == trained_model.metadata

    def test_scoring_identical_after_reload(self, trained_model, training_matrix, tmp_path):
        path = tmp_path / "model.json"
        save_model(trained_model, path)
        loaded = load_model(path)
        E0, F0, K0 = score_matrix(trained_model, training_matrix[:10])
        E1, F1, K1 = score_matrix(loaded, training_matrix[:10])
        assert np.array_equal(E0, E1)
        assert np.array_equal(F0, F1)
        assert np.array_equal(K0, K1)

    def test_save_load_save_is_byte_stable(self, trained_model, tmp_path):
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"
        save_model(trained_model, first)
        save_model(load_model(first), second)
        assert first.read_bytes() == second.read_bytes()


class TestRefusals:
    def test_uncalibrated_model_refused(self, trained_model, tmp_path):
        bare = TrainedModel(config=trained_model.config, norm=trained_model.norm,
                            params=trained_model.params)
        with pytest.raises(ValueError, match="uncalibrated"):
            save_model(bare, tmp_path / "bare.json")

    def test_unknown_version_refused(self, trained_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(trained_model, path)
        doc = json.loads(path.read_text())
        doc["format_version"] = FORMAT_VERSION + 1
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError, match="format version"):
            load_model(path)

    def test_missing_version_refused(self, trained_model, tmp_path):
        path = tmp_path / "model.json"
        save_model(trained_model, path)
        doc = json.loads(path.read_text())
        del doc["format_version"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_garbage_file_refused(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("definitely not json {")
        with pytest.raises(ModelFormatError):
            load_model(path)

    def test_no_temp_files_left_behind(self, trained_model, tmp_path):
        save_model(trained_model, tmp_path / "model.json")
        leftovers = [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]
        assert leftovers == []
