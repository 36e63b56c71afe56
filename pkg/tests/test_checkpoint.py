"""
Tests for the binary checkpoint container.
"""

import json
import struct

import numpy as np
import pytest

from rsg_core.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    atomic_write,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from rsg_core.models import CheckpointError, ModelSpec
from rsg_core.zoo import init_state, predict


@pytest.fixture
def trained(gen):
    spec = ModelSpec(kind="rs_glinear", input_length=12, horizon=6, n_channels=3, depth=2)
    state = init_state(spec, seed=8)
    state.params["alpha"] = gen.uniform(0.5, 2.0, (1, 3))
    state.params["beta"] = gen.normal(0, 1, (1, 3))
    return spec, state


class TestRoundTrip:
    """save -> load keeps every bit."""

    def test_parameters_bit_exact(self, tmp_path, trained):
        spec, state = trained
        path = save_checkpoint(tmp_path / "model.bin", spec, state, {"dataset": "etth1"})
        ckpt = load_checkpoint(path)
        assert ckpt.spec == spec
        assert ckpt.meta == {"dataset": "etth1"}
        for name, value in state.params.items():
            assert np.array_equal(ckpt.state.params[name], value)

    def test_same_predictions(self, tmp_path, trained, gen):
        spec, state = trained
        ckpt = load_checkpoint(save_checkpoint(tmp_path / "m.bin", spec, state))
        x = gen.standard_normal((12, 6))
        assert np.array_equal(predict(ckpt.spec, ckpt.state, x), predict(spec, state, x))

    def test_encoding_deterministic(self, trained):
        spec, state = trained
        assert encode_checkpoint(spec, state, {"a": 1}) == encode_checkpoint(spec, state, {"a": 1})

    def test_header_layout(self, trained):
        spec, state = trained
        data = encode_checkpoint(spec, state)
        assert data[:4] == MAGIC
        (length,) = struct.unpack("<I", data[4:8])
        header = json.loads(data[8:8 + length])
        assert header["format_version"] == FORMAT_VERSION
        assert [p["name"] for p in header["parameters"]] == ["W_1", "W_2", "W_out", "alpha", "beta"]
        payload = len(data) - 8 - length
        assert payload == 8 * (2 * 144 + 72 + 6)


class TestCorruption:
    """Malformed files are rejected with BAD_CHECKPOINT."""

    def test_bad_magic(self, trained):
        data = encode_checkpoint(*trained)
        with pytest.raises(CheckpointError) as exc:
            decode_checkpoint(b"XXXX" + data[4:])
        assert exc.value.code == "BAD_CHECKPOINT"

    def test_bad_version(self, trained):
        data = encode_checkpoint(*trained)
        (length,) = struct.unpack("<I", data[4:8])
        header = json.loads(data[8:8 + length])
        header["format_version"] = 99
        raw = json.dumps(header).encode()
        with pytest.raises(CheckpointError, match="format_version"):
            decode_checkpoint(MAGIC + struct.pack("<I", len(raw)) + raw + data[8 + length:])

    def test_truncated_payload(self, trained):
        data = encode_checkpoint(*trained)
        with pytest.raises(CheckpointError, match="truncated"):
            decode_checkpoint(data[:-8])

    def test_garbage_header(self):
        with pytest.raises(CheckpointError):
            decode_checkpoint(MAGIC + struct.pack("<I", 4) + b"\xff\xfe{]")

    def test_header_not_object(self):
        raw = json.dumps([1, 2]).encode()
        with pytest.raises(CheckpointError, match="JSON object"):
            decode_checkpoint(MAGIC + struct.pack("<I", len(raw)) + raw)

    @pytest.mark.parametrize("header", [
        {"format_version": FORMAT_VERSION},
        {"format_version": FORMAT_VERSION, "spec": None, "parameters": []},
        {"format_version": FORMAT_VERSION, "spec": {"kind": "linear"}, "parameters": []},
        {"format_version": FORMAT_VERSION, "spec": {"kind": "mlp", "input_length": 4, "horizon": 2, "n_channels": 1}, "parameters": []},
    ])
    def test_malformed_spec(self, header):
        raw = json.dumps(header).encode()
        with pytest.raises(CheckpointError, match="Malformed") as exc:
            decode_checkpoint(MAGIC + struct.pack("<I", len(raw)) + raw)
        assert exc.value.code == "BAD_CHECKPOINT"

    @pytest.mark.parametrize("entry", [
        {"name": "W"},
        {"name": "W", "shape": [2], "offset": 0},
        {"name": "W", "shape": [2, "x"], "offset": 0},
        {"name": "W", "shape": [2, 4], "offset": -8},
        {"name": "W", "shape": [2, 4], "offset": None},
        "W",
    ])
    def test_malformed_parameter_entry(self, entry):
        spec = {"kind": "linear", "input_length": 4, "horizon": 2, "n_channels": 1}
        raw = json.dumps({"format_version": FORMAT_VERSION, "spec": spec, "parameters": [entry]}).encode()
        with pytest.raises(CheckpointError, match="Malformed"):
            decode_checkpoint(MAGIC + struct.pack("<I", len(raw)) + raw + bytes(64))

    def test_parameter_set_mismatch(self, trained):
        data = encode_checkpoint(*trained)
        (length,) = struct.unpack("<I", data[4:8])
        header = json.loads(data[8:8 + length])
        header["parameters"] = header["parameters"][:-1]
        raw = json.dumps(header).encode()
        with pytest.raises(CheckpointError, match="do not match"):
            decode_checkpoint(MAGIC + struct.pack("<I", len(raw)) + raw + data[8 + length:])

    def test_non_finite_payload(self):
        spec = ModelSpec(kind="linear", input_length=2, horizon=1, n_channels=1)
        state = init_state(spec, 0)
        data = bytearray(encode_checkpoint(spec, state))
        data[-8:] = struct.pack("<d", float("nan"))
        with pytest.raises(CheckpointError):
            decode_checkpoint(bytes(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError) as exc:
            load_checkpoint(tmp_path / "absent.bin")
        assert exc.value.code == "FILE_NOT_FOUND"


class TestAtomicWrite:
    """Replace-on-rename writes."""

    def test_no_temp_files_left(self, tmp_path):
        target = tmp_path / "sub" / "out.bin"
        atomic_write(target, b"one")
        atomic_write(target, b"two")
        assert target.read_bytes() == b"two"
        assert [p.name for p in target.parent.iterdir()] == ["out.bin"]
