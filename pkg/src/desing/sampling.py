"""Deterministic rational sample points on charts.

Max-locus detection works over the aligned candidate lattice; sampling is the
guard that catches inputs whose action escapes that lattice.  Samples must be
reproducible across processes, so seeding mixes the caller's seed with a
stable digest of the chart id (never the built-in ``hash``).
"""

from __future__ import annotations

import random
import zlib
from fractions import Fraction
from itertools import combinations
from typing import List, Tuple

from .charts import Chart

_STRATUM_CAP = 6  # strata subsets enumerated fully up to this many hypersurfaces


def _rng_for(chart: Chart, seed: int) -> random.Random:
    digest = zlib.crc32(chart.cid.encode("utf8"))
    return random.Random((seed & 0xFFFFFFFF) ^ digest)


def _nonzero(rng: random.Random) -> Fraction:
    num = rng.choice([n for n in range(-9, 10) if n])
    den = rng.randint(1, 4)
    return Fraction(num, den)


def chart_sample_points(chart: Chart, seed: int = 0, count: int = 20) -> List[Tuple[Fraction, ...]]:
    """Stratum representatives plus seeded random rational points of W.

    For every subset of the tracked hypersurfaces in the chart a point is
    produced with exactly those coordinates zero and generic nonzero values
    elsewhere; the chart origin and ``count`` loose random points round the
    sample out.
    """
    rng = _rng_for(chart, seed)
    active = chart.active_coords()
    hyp_idx = sorted(idx for _, idx in chart.hyps)
    points = [chart.origin()]

    def build(zero_set) -> Tuple[Fraction, ...]:
        pt = []
        for i in range(chart.nvars):
            if i in chart.w_coords or i in zero_set:
                pt.append(Fraction(0))
            else:
                pt.append(_nonzero(rng))
        return tuple(pt)

    subsets = []
    if len(hyp_idx) <= _STRATUM_CAP:
        for size in range(len(hyp_idx) + 1):
            subsets.extend(combinations(hyp_idx, size))
    else:
        subsets = [(), tuple(hyp_idx)]
        for i in hyp_idx:
            subsets.append((i,))
    for zero_set in subsets:
        points.append(build(set(zero_set)))
        points.append(build(set(zero_set)))

    for _ in range(count):
        pt = []
        for i in range(chart.nvars):
            if i in chart.w_coords:
                pt.append(Fraction(0))
            else:
                pt.append(Fraction(rng.randint(-9, 9), rng.randint(1, 3)))
        points.append(tuple(pt))
    return points
