"""Counter-based random streams for reproducible, order-independent sampling.

Every random decision in this package draws from a Philox stream keyed by
(seed, operation) with the row / feature / replicate indices packed into the
256-bit counter.  Streams for distinct (operation, row, feature, replicate)
tuples never overlap, so work units can run in any order, or in parallel,
and still produce bit-identical results.
"""

import numpy as np

# Operation codes.  Each independent consumer of randomness gets its own
# code so that streams never collide across operations sharing one seed.
OP_MOONS = 1
OP_MCAR = 2
OP_MASK_PERM = 3
OP_GEN_ORDER = 4
OP_GEN_VALUE = 5
OP_IMPUTE_ORDER = 6
OP_IMPUTE_VALUE = 7

_U64 = np.uint64


def stream(seed: int, op: int, row: int = 0, feature: int = 0, rep: int = 0) -> np.random.Generator:
    """Return the Generator for one (seed, op, row, feature, rep) tuple.

    The row index sits in the top counter word and (feature, rep) share the
    next word, leaving 2**128 blocks of headroom per stream; a stream would
    have to draw ~10**38 values before touching a neighbour's range.
    """
    if not 0 <= feature < (1 << 32):
        raise ValueError(f"feature index out of range: {feature}")
    if not 0 <= rep < (1 << 32):
        raise ValueError(f"replicate index out of range: {rep}")
    key = np.array([_U64(seed & 0xFFFFFFFFFFFFFFFF), _U64(op)], dtype=np.uint64)
    counter = np.array(
        [0, 0, _U64(feature) | (_U64(rep) << _U64(32)), _U64(row & 0xFFFFFFFFFFFFFFFF)],
        dtype=np.uint64,
    )
    return np.random.Generator(np.random.Philox(counter=counter, key=key))
