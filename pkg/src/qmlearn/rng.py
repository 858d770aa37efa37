"""Splittable seeded random streams."""
from __future__ import annotations

import random


class RandomStream(random.Random):
    """A ``random.Random`` that remembers its seed label and can spawn substreams.

    Substreams are seeded from the string ``"<label>/<key>"``; string seeds are
    hashed with SHA-512 by the stdlib, so streams are independent of each
    other and stable across platforms.
    """

    def __init__(self, seed: int | str = 0):
        self.label = str(seed)
        super().__init__(self.label)

    def spawn(self, *keys) -> "RandomStream":
        label = "/".join([self.label, *map(str, keys)])
        return RandomStream(label)

    def __reduce__(self):
        return (RandomStream, (self.label,), {"state": self.getstate()})

    def __setstate__(self, st):
        self.setstate(st["state"])

    def __repr__(self):
        return f"RandomStream({self.label!r})"
