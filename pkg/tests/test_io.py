import json

import numpy as np
import pytest

from vcbot.config import (
    RunConfig,
    config_from_dict,
    demo_network_config,
    load_config,
    save_config,
)
from vcbot.dataset import (
    CATEGORIES,
    encode_primitives,
    export_primitives,
    load_primitives,
    macaw_cub_primitives,
)
from vcbot.encoding import decode_frames
from vcbot.errors import ConfigError, DatasetError


class TestDemoSet:
    def test_seven_primitives_of_72_steps(self):
        pset = macaw_cub_primitives()
        assert pset.labels == CATEGORIES
        assert pset.positions.shape == (7, 72, 2)

    def test_inside_workspace_and_closed(self):
        pset = macaw_cub_primitives()
        assert np.abs(pset.positions).max() <= 1.0
        assert all(pset.closed())

    def test_clockwise_winding(self):
        # Signed area of each cycle is negative for clockwise traversal.
        pset = macaw_cub_primitives()
        for rows in pset.positions:
            x, y = rows[:, 0], rows[:, 1]
            area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            assert area < 0


class TestPrimitiveFiles:
    def test_shipped_files_match_generator(self):
        from pathlib import Path

        shipped = Path(__file__).resolve().parents[1] / "data" / "primitives"
        loaded = load_primitives(shipped, require_closed=True)
        pset = macaw_cub_primitives()
        assert sorted(loaded.labels) == sorted(pset.labels)
        for label in pset.labels:
            assert np.allclose(loaded.by_label(label), pset.by_label(label),
                               atol=1e-9)

    def test_export_load_roundtrip(self, tmp_path):
        pset = macaw_cub_primitives()
        export_primitives(pset, tmp_path)
        loaded = load_primitives(tmp_path, require_closed=True)
        assert loaded.labels == sorted(CATEGORIES)
        for label in CATEGORIES:
            assert np.allclose(loaded.by_label(label), pset.by_label(label),
                               atol=1e-9)

    def test_out_of_range_value_names_file_and_row(self, tmp_path):
        (tmp_path / "Bad.csv").write_text("x,y\n0.0,0.0\n1.5,0.0\n")
        with pytest.raises(DatasetError, match=r"Bad\.csv row 3"):
            load_primitives(tmp_path)

    def test_empty_directory_is_explicit(self, tmp_path):
        with pytest.raises(DatasetError, match="no primitive"):
            load_primitives(tmp_path)

    def test_wrong_header_rejected(self, tmp_path):
        (tmp_path / "A.csv").write_text("a,b\n0,0\n0.1,0.1\n")
        with pytest.raises(DatasetError, match="header"):
            load_primitives(tmp_path)

    def test_wrong_column_count_rejected(self, tmp_path):
        (tmp_path / "A.csv").write_text("x,y\n0,0,0\n")
        with pytest.raises(DatasetError, match="columns"):
            load_primitives(tmp_path)

    def test_duplicate_labels_rejected(self, tmp_path):
        (tmp_path / "head.csv").write_text("x,y\n0,0\n0.1,0\n")
        (tmp_path / "Head.csv").write_text("x,y\n0,0\n0.1,0\n")
        with pytest.raises(DatasetError, match="duplicate"):
            load_primitives(tmp_path)

    def test_mixed_lengths_rejected(self, tmp_path):
        (tmp_path / "A.csv").write_text("x,y\n0,0\n0.1,0\n")
        (tmp_path / "B.csv").write_text("x,y\n0,0\n0.1,0\n0.2,0\n")
        with pytest.raises(DatasetError, match="mixed lengths"):
            load_primitives(tmp_path)


class TestEncodePrimitives:
    def test_roundtrip_error_below_tolerance(self):
        config = RunConfig()
        tset = encode_primitives(macaw_cub_primitives(), config.network)
        decoded = decode_frames(tset.frames)
        assert np.abs(decoded - tset.positions).max() < 0.01

    def test_frames_normalized(self):
        config = RunConfig()
        tset = encode_primitives(macaw_cub_primitives(), config.network)
        assert np.abs(tset.frames.sum(axis=-1) - 1.0).max() <= 1e-9


class TestRunConfig:
    def test_default_embeds_demo_architecture(self):
        net = demo_network_config()
        low, high = net.layers
        assert (low.d_units, low.z_units, low.timescale) == (40, 4, 2.0)
        assert (high.d_units, high.z_units, high.timescale) == (10, 1, 10.0)

    def test_round_trip_idempotent(self, tmp_path):
        config = RunConfig()
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_config(config, p1)
        save_config(load_config(p1), p2)
        assert p1.read_text() == p2.read_text()

    def test_unknown_key_rejected_by_name(self, tmp_path):
        data = RunConfig().to_dict()
        data["mixer"]["gama"] = 0.5
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError, match="gama"):
            load_config(path)

    def test_unknown_root_key_rejected(self):
        with pytest.raises(ConfigError, match="sessions"):
            config_from_dict({"sessions": {}})

    def test_validation_catches_bad_ranges(self):
        with pytest.raises(ConfigError):
            config_from_dict({"mixer": {"gamma": 1.5}})
        with pytest.raises(ConfigError):
            config_from_dict({"network": {"layers": []}})
        with pytest.raises(ConfigError):
            config_from_dict(
                {"network": {"layers": [
                    {"d_units": 4, "z_units": 1, "timescale": 8},
                    {"d_units": 4, "z_units": 1, "timescale": 2},
                ]}}
            )

    def test_hash_tracks_content(self):
        c1, c2 = RunConfig(), RunConfig()
        assert c1.hash() == c2.hash()
        c2.mixer.gamma = 0.5
        assert c1.hash() != c2.hash()
