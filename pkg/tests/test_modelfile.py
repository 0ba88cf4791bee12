import struct

import numpy as np
import pytest

from umtr import engine
from umtr.dataset import two_moons
from umtr.engine import EngineConfig
from umtr.gbdt import TreeParams
from umtr.modelfile import (
    FORMAT_VERSION,
    MAGIC,
    ModelChecksumError,
    ModelFormatError,
    ModelVersionError,
)


@pytest.fixture(scope="module")
def saved_model(tmp_path_factory):
    data = two_moons(60, 0.1, seed=3)
    config = EngineConfig(seed=3, k_dup=2, trees=TreeParams(rounds=10))
    model = engine.fit(data, config)
    path = tmp_path_factory.mktemp("model") / "model.umtr"
    model.save(path)
    return model, path


def test_round_trip_preserves_everything(saved_model, tmp_path):
    model, path = saved_model
    loaded = engine.load_model(path)
    assert loaded.schema == model.schema
    assert loaded.labels == model.labels
    assert loaded.config == model.config
    assert loaded.train_ranges == model.train_ranges
    for a, b in zip(loaded.marginals, model.marginals):
        assert np.array_equal(a, b)
    for a, b in zip(loaded.bins, model.bins):
        assert np.array_equal(a.edges, b.edges) and a.alpha == b.alpha
    resaved = tmp_path / "resaved.umtr"
    loaded.save(resaved)
    assert resaved.read_bytes() == path.read_bytes()


def test_round_trip_generation_bit_identical(saved_model):
    model, path = saved_model
    loaded = engine.load_model(path)
    a = engine.generate(model, 40, seed=0)
    b = engine.generate(loaded, 40, seed=0)
    assert np.array_equal(a.values, b.values)


def test_round_trip_imputation_bit_identical(saved_model):
    from umtr.dataset import apply_mcar

    model, path = saved_model
    loaded = engine.load_model(path)
    masked = apply_mcar(two_moons(60, 0.1, seed=3), 0.5, 0.5, seed=1)
    a = engine.impute(model, masked, m=2, seed=5)
    b = engine.impute(loaded, masked, m=2, seed=5)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)


def test_every_corrupted_byte_is_detected(saved_model, tmp_path):
    _, path = saved_model
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.umtr"
    rng = np.random.default_rng(0)
    for pos in rng.choice(len(raw), size=40, replace=False):
        clone = bytearray(raw)
        clone[pos] ^= 0xFF
        bad.write_bytes(bytes(clone))
        with pytest.raises(ModelFormatError):
            engine.load_model(bad)


def test_truncated_file_rejected(saved_model, tmp_path):
    _, path = saved_model
    raw = path.read_bytes()
    bad = tmp_path / "trunc.umtr"
    for cut in (3, len(raw) // 2, len(raw) - 1):
        bad.write_bytes(raw[:cut])
        with pytest.raises(ModelFormatError):
            engine.load_model(bad)


def test_future_version_rejected(saved_model, tmp_path):
    import zlib

    _, path = saved_model
    raw = bytearray(path.read_bytes())
    payload = raw[:-4]
    struct.pack_into("<H", payload, len(MAGIC), FORMAT_VERSION + 1)
    payload_bytes = bytes(payload)
    bad = tmp_path / "future.umtr"
    bad.write_bytes(payload_bytes + struct.pack("<I", zlib.crc32(payload_bytes)))
    with pytest.raises(ModelVersionError):
        engine.load_model(bad)


def test_bad_magic_rejected(saved_model, tmp_path):
    _, path = saved_model
    raw = bytearray(path.read_bytes())
    raw[0] = ord(b"X")
    bad = tmp_path / "magic.umtr"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ModelFormatError):
        engine.load_model(bad)


def test_checksum_error_type(saved_model, tmp_path):
    _, path = saved_model
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0x01
    bad = tmp_path / "crc.umtr"
    bad.write_bytes(bytes(raw))
    with pytest.raises(ModelChecksumError):
        engine.load_model(bad)
