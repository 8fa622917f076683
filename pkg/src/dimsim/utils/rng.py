"""Keyed random substreams.

Every stochastic draw in dimsim comes from a Philox generator keyed by
``(seed, purpose, *key)``. Paths, anchors and time steps therefore own
independent streams, and results never depend on evaluation order or on the
number of worker threads.
"""

import numpy as np

OUTER = 0
INNER = 1
AUGMENT = 2


def substream(seed, purpose, *key):
    """Returns the generator owned by ``(seed, purpose, *key)``."""

    spawn_key = (int(purpose),) + tuple(int(k) for k in key)
    sequence = np.random.SeedSequence(int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def keyed_normals(seed, purpose, keys, size, prefix=()):
    """Standard normal draws, one row of `size` per key.

    Parameters
    ----------
    keys : :obj:`numpy.ndarray` of int
        Row keys, typically path indices.
    prefix : :obj:`tuple` of int
        Key components shared by all rows (e.g. the time index).

    Returns
    -------
    :obj:`numpy.ndarray`
        Array of shape ``(len(keys), size)``.
    """
    keys = np.asarray(keys)
    result = np.empty((len(keys), size))

    for row, key in enumerate(keys):
        result[row] = substream(seed, purpose, *prefix, key).standard_normal(size)

    return result
