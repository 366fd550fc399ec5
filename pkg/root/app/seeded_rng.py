import numpy as np


class Rng:
    """
    Seeded random stream shared by sampling, initialization and data
    generation.

    Backed by numpy's PCG64 bit generator, whose output is specified bit for
    bit, so identical seeds give identical streams on every platform. An Rng
    has a single owner; parallel code must call `spawn` and hand each worker
    its own child stream.

    Attributes:
        seed (int): The 64-bit seed the stream was created from.
        draws (int): Number of draw calls served so far.
    """

    def __init__(self, seed: int, _seed_sequence: np.random.SeedSequence = None):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._seed_sequence = _seed_sequence or np.random.SeedSequence(self.seed)
        self._generator = np.random.Generator(np.random.PCG64(self._seed_sequence))
        self.draws = 0

    def spawn(self, count: int) -> list["Rng"]:
        """
        Derives `count` independent child streams.

        Children depend only on this stream's seed and on how many children
        were spawned before, never on how many values were drawn.
        """
        return [
            Rng(self.seed, _seed_sequence=child)
            for child in self._seed_sequence.spawn(count)
        ]

    def integers(self, low: int, high: int = None, size=None):
        self.draws += 1
        return self._generator.integers(low, high, size=size)

    def random(self, size=None):
        self.draws += 1
        return self._generator.random(size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        self.draws += 1
        return self._generator.normal(loc, scale, size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        self.draws += 1
        return self._generator.uniform(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        self.draws += 1
        return self._generator.permutation(n)

    @property
    def generator(self) -> np.random.Generator:
        """The underlying numpy generator, for libraries that accept one."""
        self.draws += 1
        return self._generator
