"""Counter-based random number generation with keyed replay.

All randomness in the package flows through Philox generators keyed by
``(seed, stream tag)`` with an explicit 256-bit counter.  A draw is a pure
function of its key and counter start, so any increment can be regenerated
in any order, on any worker, without storing a noise tape.  Distinct tags
give statistically independent streams under one master seed; in particular
the spatial Wiener noise and the scalar driver never share key material.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1

# Stream tags (arbitrary distinct 64-bit constants).
WIENER_TAG = 0x5749454E45523031  # spatial cylindrical Wiener increments
DRIVER_TAG = 0x4452495645523031  # scalar driver spectral coefficients
L0_WIENER_TAG = 0x4C30574945523031  # finite-dimensional Wiener paths (analysis)
L0_MARK_TAG = 0x4C304D41524B3031  # time-zero marks for analysis integrands


def keyed_generator(seed: int, tag: int, counter: int = 0) -> np.random.Generator:
    """Return a Generator whose output depends only on (seed, tag, counter).

    ``counter`` selects a block of the Philox counter space; it is placed in
    the third 64-bit counter word, leaving 2^128 draws of headroom per block
    so consecutive blocks can never overlap.
    """
    bg = np.random.Philox(
        counter=[0, 0, counter & _MASK64, 0],
        key=[seed & _MASK64, tag & _MASK64],
    )
    return np.random.Generator(bg)


def keyed_normals(seed: int, tag: int, counter: int, n: int) -> np.ndarray:
    """Draw ``n`` standard normals for the given key block.

    Replay-invariant: the same arguments always return the identical vector,
    and a longer draw from the same block extends a shorter one
    (prefix-stable).
    """
    return keyed_generator(seed, tag, counter).standard_normal(n)
