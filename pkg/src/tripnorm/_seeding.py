import zlib

import numpy as np


def _key(part):
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if isinstance(part, (bytes, bytearray)):
        return zlib.crc32(bytes(part))
    return int(part) & 0xFFFFFFFFFFFFFFFF


def derive_rng(base_seed, *keys):
    """Independent generator for a (base_seed, key...) tuple."""
    return np.random.default_rng(np.random.SeedSequence([_key(base_seed), *map(_key, keys)]))


def derive_seed(base_seed, *keys):
    ss = np.random.SeedSequence([_key(base_seed), *map(_key, keys)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])
