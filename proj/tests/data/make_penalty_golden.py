#!/usr/bin/env python3
# Copyright (c) 2026, The npat Authors. All rights reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Brute-force penalty matrix for the two-note golden fixture.

Note A: 90 frames, 3 morae; note B: 60 frames, 1 mora. decay=60, shift=15, r=1.
The last band keeps its end at the song end. Every cell is computed on its own from the band/decay rule.
"""
from fractions import Fraction
import math
import sys

DECAY = 60
SHIFT = 15
NOTES = [(0, 90, [2, 2, 1]), (90, 150, [2])]  # (start, end, phonemes per mora)


def round_half_up(x):
    return math.floor(x + Fraction(1, 2))


rows = []
for start, end, morae in NOTES:
    length, m = end - start, len(morae)
    for j, count in enumerate(morae):
        lo = start + round_half_up(Fraction(j * length, m)) - SHIFT
        hi = start + round_half_up(Fraction((j + 1) * length, m)) - SHIFT
        if hi + SHIFT == NOTES[-1][1]:
            hi = NOTES[-1][1]  # the final band is not pulled away from the song end
        for _ in range(count):
            rows.append((lo, hi))

total = NOTES[-1][1]
out = sys.stdout
for lo, hi in rows:
    cells = []
    for f in range(total):
        if lo <= f <= hi - 1:
            value = 0.0
        else:
            nearest = lo if f < lo else hi - 1
            value = min(1.0, abs(f - nearest) / DECAY)
        cells.append(repr(value))
    out.write(",".join(cells) + "\n")
