import hashlib

import numpy as np
import pytest

from flrw_dust.checkpoint import MAGIC, read_checkpoint, write_checkpoint
from flrw_dust.error import CheckpointError, CheckpointMismatch

from .conftest import dusty, make_perturbed_state

DIGEST = hashlib.sha256(b"config").digest()


@pytest.fixture
def saved(tmp_path):
    """Provide a checkpoint file and the state written to it."""
    state = make_perturbed_state(dusty())
    state = state.replace(0.375, state.data)
    path = write_checkpoint(tmp_path / "ck.bin", state, 42, DIGEST)
    yield path, state


class TestCheckpoint:
    """Test checkpoint writing and validation."""

    def test_bitwise_round_trip(self, saved):
        """Test data, time, step and hash survive bitwise."""
        path, state = saved
        ck = read_checkpoint(path, DIGEST)
        assert ck.step == 42
        assert ck.state.t == 0.375
        assert ck.config_hash == DIGEST
        assert ck.state.grid.n == 8
        assert np.array_equal(ck.state.data, state.data)

    def test_no_temporary_left(self, saved):
        """Test the atomic write leaves only the final file."""
        path, _ = saved
        assert sorted(p.name for p in path.parent.iterdir()) == ["ck.bin"]

    def test_hash_mismatch(self, saved):
        """Test a checkpoint of another configuration is refused."""
        path, _ = saved
        with pytest.raises(CheckpointMismatch):
            read_checkpoint(path, hashlib.sha256(b"other").digest())

    def test_hash_not_checked_when_omitted(self, saved):
        """Test reading without an expected hash accepts any configuration."""
        path, _ = saved
        assert read_checkpoint(path).step == 42

    def test_bad_magic(self, saved):
        """Test a foreign file is refused."""
        path, _ = saved
        raw = bytearray(path.read_bytes())
        raw[: len(MAGIC)] = b"NOTADUST"
        path.write_bytes(bytes(raw))
        with pytest.raises(CheckpointMismatch, match="magic"):
            read_checkpoint(path)

    def test_truncated_payload(self, saved):
        """Test a short payload is refused."""
        path, _ = saved
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError):
            read_checkpoint(path)

    def test_truncated_header(self, tmp_path):
        """Test a file shorter than the header is refused."""
        path = tmp_path / "short.bin"
        path.write_bytes(MAGIC)
        with pytest.raises(CheckpointMismatch, match="header"):
            read_checkpoint(path)

    def test_hash_length_checked(self, tmp_path):
        """Test the configuration digest must be 32 bytes."""
        state = make_perturbed_state(dusty())
        with pytest.raises(ValueError):
            write_checkpoint(tmp_path / "x.bin", state, 0, b"short")
