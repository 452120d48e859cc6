"""Truncation ladders for the two membership examples.

Harmonic head 1/k on [1, M]: the l^1 norm grows like log M while the dyadic
norm settles. Power head |k|^(-1/s) on 1 <= |k| <= M with q <= s < r: the l^r
norm settles while the dyadic norm keeps growing, at least as fast as the
per-level witness bound.

    python3 scripts/counterexample_ladders.py --top 24
"""

from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass

from bmseq import Params
from bmseq.studies import harmonic_ladder, power_ladder


@dataclass
class LadderConfig:
    harmonic: tuple[float, float, float] = (2.0, 4.0, 2.0)
    power: tuple[float, float, float] = (2.0, 3.0, 4.0)
    s: float = 3.0
    bottom: int = 10
    top: int = 20
    chunk_level: int = 20


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bottom", type=int, default=LadderConfig.bottom)
    ap.add_argument("--top", type=int, default=LadderConfig.top, help="largest size is 2^top (30 takes about a minute)")
    ns = ap.parse_args()
    cfg = LadderConfig(bottom=ns.bottom, top=ns.top)
    sizes = [2**k for k in range(cfg.bottom, cfg.top + 1)]

    t0 = time.perf_counter()
    harm = harmonic_ladder(Params(*cfg.harmonic), sizes, cfg.chunk_level)
    t1 = time.perf_counter()
    power = power_ladder(Params(*cfg.power), cfg.s, sizes, cfg.chunk_level)
    t2 = time.perf_counter()

    print(json.dumps({
        "config": asdict(cfg),
        "harmonic": [row.as_dict() for row in harm],
        "power": [row.as_dict() for row in power],
        "seconds": {"harmonic": round(t1 - t0, 2), "power": round(t2 - t1, 2)},
    }, indent=2))


if __name__ == "__main__":
    main()
