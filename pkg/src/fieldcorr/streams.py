"""Seedable, splittable Gaussian random streams.

Streams are built on the Philox counter-based bit generator so that a
(seed, stream id) pair always yields the same variates, independent of
how many other streams exist or in which order they are consumed.
Gaussian values are produced by the inverse normal CDF applied to a
fixed-width uniform lattice; every draw consumes exactly one 64-bit
word, so sequences are platform-stable and free of rejection-count
effects.
"""

import numpy as np
from scipy.special import ndtri

# Disjoint stream-id namespaces for the different consumers of randomness.
PURPOSE_GENERIC = 0
PURPOSE_SWEEP = 1
PURPOSE_CALIBRATION = 2
PURPOSE_WALK = 3

_LATTICE = 1 << 52
_MASK64 = (1 << 64) - 1


def stream_id(purpose, index):
    """Pack a purpose tag and a point/block index into one stream id."""
    if not 0 <= index < (1 << 32):
        raise ValueError("stream index out of range")
    return (purpose << 32) | index


class NormalStream:
    """A deterministic stream of standard normal variates.

    Parameters
    ----------
    seed : int
        Master seed shared by all streams of one run.
    sid : int
        Stream id, typically from :func:`stream_id`. Distinct ids give
        statistically independent streams.
    """

    def __init__(self, seed, sid=0):
        self.seed = int(seed)
        self.sid = int(sid)
        key = np.array([self.seed & _MASK64, self.sid & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniforms(self, n):
        """Return n uniforms on the open interval (0, 1), one word each."""
        k = self._gen.integers(0, _LATTICE, size=n, dtype=np.uint64)
        return (k.astype(np.float64) + 0.5) / float(_LATTICE)

    def normals(self, n):
        """Return n standard normal variates as a float64 array."""
        return ndtri(self.uniforms(n))

    def normal(self):
        """Return a single standard normal variate."""
        return float(self.normals(1)[0])


def derived_stream(seed, purpose, index):
    """Stream for one unit of work (sweep point, walker block, grid row)."""
    return NormalStream(seed, stream_id(purpose, index))
