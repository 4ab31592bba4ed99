"""
Random streams and the worker pool.

A stream is a `numpy.random.Generator` over a Philox bit generator whose key comes from
`SeedSequence(master_seed, spawn_key=key)`. Keys are small integer tuples such as
`(FAMILY, replica_id)` or `(FAMILY, site_id)`, so a stream depends only on what it is for and
never on the order in which work happens to be scheduled.
"""

from concurrent.futures import ProcessPoolExecutor

import numpy as np


def generator(master_seed, *key):
    """
    Returns the counter-based generator for `(master_seed, key)`.
    """
    sequence = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(sequence))


def split_blocks(replicas, workers, min_block=1):
    """
    Cuts `range(replicas)` into contiguous `(start, count)` blocks, about four per worker.
    """
    if replicas <= 0:
        return []
    target = max(min_block, -(-replicas // max(1, 4 * workers)))
    return [(start, min(target, replicas - start)) for start in range(0, replicas, target)]


def fixed_blocks(replicas, size=1024):
    """
    Cuts `range(replicas)` into blocks of `size`, independent of the worker count. Vectorized
    samplers key one stream per block, so their results must not depend on how many workers run.
    """
    return [(start, min(size, replicas - start)) for start in range(0, max(replicas, 0), size)]


def run_blocks(fn, blocks, workers=1):
    """
    Applies `fn` to every work item and returns the results in submission order.

    `fn` must be a module-level function and the items picklable when `workers > 1`.
    """
    blocks = list(blocks)
    if workers <= 1 or len(blocks) <= 1:
        return [fn(block) for block in blocks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))
