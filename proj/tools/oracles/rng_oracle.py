#!/usr/bin/env python3
# Copyright 2026 The tpaware Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Independent reference for the "mt64-v1" random streams.

Prints the values frozen in tests/test_rng.cpp. Pure Python, no numpy.
"""

import math

MASK = (1 << 64) - 1


class MT64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK

    def below(self, n):
        limit = MASK - ((MASK % n) + 1) % n
        x = self.next()
        while x > limit:
            x = self.next()
        return x % n

    def uniform(self):
        return (self.next() >> 11) * 2.0**-53


def stream_seed(seed, stream):
    z = (seed + 0x9E3779B97F4A7C15 * (stream + 1)) & MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def random_permutation(size, seed):
    rng = MT64(seed)
    e = list(range(size))
    for i in range(size - 1, 0, -1):
        j = rng.below(i + 1)
        e[i], e[j] = e[j], e[i]
    return e


def normals(seed, count):
    rng = MT64(seed)
    out = []
    while len(out) < count:
        u1 = 1.0 - rng.uniform()
        u2 = rng.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        out.append(r * math.cos(2.0 * math.pi * u2))
        out.append(r * math.sin(2.0 * math.pi * u2))
    return out[:count]


def main():
    rng = MT64(5489)
    for _ in range(9999):
        rng.next()
    print("mt19937_64(5489) output 10000:", rng.next())
    print("stream_seed(0, 1):", stream_seed(0, 1))
    print("stream_seed(42, 5):", stream_seed(42, 5))
    print("random_permutation(10, 42):", random_permutation(10, 42))
    print("random_permutation(16, stream_seed(7, 1)):", random_permutation(16, stream_seed(7, 1)))
    rng = MT64(123)
    print("below(10) x8, seed 123:", [rng.below(10) for _ in range(8)])
    print("normals(99, 4):", [repr(v) for v in normals(99, 4)])


if __name__ == "__main__":
    main()
