"""Binary model file: magic "UMTR", version, config, schema, per-feature
discretizers and tree ensembles, trailing CRC32.  All integers little-endian.

Trees serialize as flat pre-order records (feature u32, threshold f64,
default_left u8, leaf flag u8, leaf value f64); the pre-order walk plus leaf
flags reconstructs the shape without child pointers.
"""

import io
import struct
import zlib

import numpy as np

from .dataset import FeatureKind
from .discretizer import BinSpec, ConstantColumn
from .engine import EngineConfig, UnmaskingModel
from .gbdt import BoostedClassifier, Tree, TreeParams

MAGIC = b"UMTR"
FORMAT_VERSION = 1

_NODE = struct.Struct("<IdBBd")
_CODEC_BINS, _CODEC_CATEGORICAL, _CODEC_CONSTANT = 0, 1, 2


class ModelFormatError(ValueError):
    """File is not a parseable model (bad magic, truncation, structure)."""


class ModelVersionError(ModelFormatError):
    """File declares a format version this reader does not understand."""


class ModelChecksumError(ModelFormatError):
    """Stored CRC32 does not match the file contents."""


def _w(buf, fmt, *vals):
    buf.write(struct.pack("<" + fmt, *vals))


def _w_str(buf, s: str):
    raw = s.encode("utf-8")
    _w(buf, "I", len(raw))
    buf.write(raw)


def _w_f64s(buf, arr):
    buf.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _tree_bytes(tree: Tree) -> bytes:
    out = [struct.pack("<I", tree.n_nodes)]
    stack = [0]
    while stack:
        nid = stack.pop()
        if tree.feature[nid] < 0:
            out.append(_NODE.pack(0, 0.0, 0, 1, float(tree.value[nid])))
        else:
            out.append(
                _NODE.pack(int(tree.feature[nid]), float(tree.threshold[nid]),
                           int(tree.default_left[nid]), 0, 0.0)
            )
            stack.append(int(tree.right[nid]))
            stack.append(int(tree.left[nid]))
    return b"".join(out)


def save_model(model: UnmaskingModel, path) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    _w(buf, "H", FORMAT_VERSION)

    cfg = model.config
    t = cfg.trees
    _w(buf, "IdIdq", cfg.n_bins, cfg.top_p, cfg.k_dup, cfg.alpha, cfg.seed)
    _w(buf, "IdIddI", t.rounds, t.learning_rate, t.max_depth,
       t.min_child_weight, t.reg_lambda, t.n_hist_bins)

    _w(buf, "I", model.n_features)
    for j, (name, kind) in enumerate(model.schema):
        _w_str(buf, name)
        if kind.is_categorical:
            _w(buf, "BI", 1, kind.cardinality)
            for lab in model.labels[j]:
                _w_str(buf, lab)
        else:
            _w(buf, "B", 0)

    for j in range(model.n_features):
        lo, hi = model.train_ranges[j]
        _w(buf, "dd", lo, hi)
        spec = model.bins[j]
        if isinstance(spec, BinSpec):
            _w(buf, "BId", _CODEC_BINS, spec.n_bins, spec.alpha)
            _w_f64s(buf, spec.edges)
        elif isinstance(spec, ConstantColumn):
            _w(buf, "Bd", _CODEC_CONSTANT, spec.value)
        else:
            _w(buf, "B", _CODEC_CATEGORICAL)
        marg = model.marginals[j]
        _w(buf, "I", marg.size)
        _w_f64s(buf, marg)

        clf = model.classifiers[j]
        _w(buf, "II", clf.n_classes, clf.n_features)
        _w_f64s(buf, clf.base_score)
        _w(buf, "I", len(clf.trees))
        for round_trees in clf.trees:
            for tree in round_trees:
                buf.write(_tree_bytes(tree))

    payload = buf.getvalue()
    with open(path, "wb") as fh:
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        s = struct.Struct("<" + fmt)
        if self.pos + s.size > len(self.data):
            raise ModelFormatError("truncated model file")
        vals = s.unpack_from(self.data, self.pos)
        self.pos += s.size
        return vals if len(vals) > 1 else vals[0]

    def take_str(self) -> str:
        n = self.take("I")
        if self.pos + n > len(self.data):
            raise ModelFormatError("truncated model file")
        raw = self.data[self.pos : self.pos + n]
        self.pos += n
        return raw.decode("utf-8")

    def take_f64s(self, count: int) -> np.ndarray:
        nbytes = 8 * count
        if self.pos + nbytes > len(self.data):
            raise ModelFormatError("truncated model file")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.pos)
        self.pos += nbytes
        return arr.astype(np.float64)


def _read_tree(cur: _Cursor) -> Tree:
    n_nodes = cur.take("I")
    feature = np.empty(n_nodes, dtype=np.int32)
    threshold = np.zeros(n_nodes)
    default_left = np.zeros(n_nodes, dtype=bool)
    left = np.full(n_nodes, -1, dtype=np.int32)
    right = np.full(n_nodes, -1, dtype=np.int32)
    value = np.zeros(n_nodes)

    stack = []
    for nid in range(n_nodes):
        feat, thr, dl, leaf, val = cur.take("IdBBd")
        if stack:
            p = stack[-1]
            if left[p] < 0:
                left[p] = nid
            else:
                right[p] = nid
                stack.pop()
        if leaf:
            feature[nid] = -1
            value[nid] = val
        else:
            feature[nid] = feat
            threshold[nid] = thr
            default_left[nid] = bool(dl)
            stack.append(nid)
    if stack:
        raise ModelFormatError("malformed tree encoding")
    return Tree(feature, threshold, default_left, left, right, value)


def load_model(path) -> UnmaskingModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 2 + 4:
        raise ModelFormatError("file too short to be a model")
    if raw[: len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic bytes")
    (stored_crc,) = struct.unpack("<I", raw[-4:])
    payload = raw[:-4]
    if zlib.crc32(payload) != stored_crc:
        raise ModelChecksumError("checksum mismatch: file corrupted")

    cur = _Cursor(payload)
    cur.pos = len(MAGIC)
    version = cur.take("H")
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"unsupported model format version {version} (reader supports "
            f"{FORMAT_VERSION})"
        )

    n_bins, top_p, k_dup, alpha, seed = cur.take("IdIdq")
    rounds, lr, depth, mcw, lam, hist = cur.take("IdIddI")
    config = EngineConfig(
        n_bins=n_bins, top_p=top_p, k_dup=k_dup, alpha=alpha,
        trees=TreeParams(rounds=rounds, learning_rate=lr, max_depth=depth,
                         min_child_weight=mcw, reg_lambda=lam, n_hist_bins=hist),
        seed=seed,
    )

    d = cur.take("I")
    schema = []
    labels = {}
    for j in range(d):
        name = cur.take_str()
        tag = cur.take("B")
        if tag == 1:
            card = cur.take("I")
            schema.append((name, FeatureKind.categorical(card)))
            labels[j] = [cur.take_str() for _ in range(card)]
        elif tag == 0:
            schema.append((name, FeatureKind.continuous()))
        else:
            raise ModelFormatError(f"unknown feature kind tag {tag}")

    bins, marginals, train_ranges, classifiers = [], [], [], []
    for j in range(d):
        lo, hi = cur.take("dd")
        train_ranges.append((lo, hi))
        codec = cur.take("B")
        if codec == _CODEC_BINS:
            b, bin_alpha = cur.take("Id")
            edges = cur.take_f64s(b + 1)
            bins.append(BinSpec(edges, bin_alpha))
        elif codec == _CODEC_CONSTANT:
            bins.append(ConstantColumn(cur.take("d")))
        elif codec == _CODEC_CATEGORICAL:
            bins.append(None)
        else:
            raise ModelFormatError(f"unknown codec tag {codec}")
        msize = cur.take("I")
        marginals.append(cur.take_f64s(msize))

        n_classes, n_features = cur.take("II")
        base = cur.take_f64s(n_classes)
        n_rounds = cur.take("I")
        trees = [
            [_read_tree(cur) for _ in range(n_classes)] for _ in range(n_rounds)
        ]
        classifiers.append(
            BoostedClassifier(n_classes, n_features, base, trees, config.trees)
        )

    if cur.pos != len(payload):
        raise ModelFormatError("trailing bytes after model payload")
    return UnmaskingModel(schema, labels, bins, classifiers, marginals,
                          train_ranges, config)
