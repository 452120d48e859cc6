"""How often does ||x * y|| <= ||y||_1 ||x|| fail for the dyadic norm?

Sweeps r/p with p and q fixed. At r = p the norm is a multiple of the l^p
norm and the bound holds; away from it the dyadic grid breaks translation
invariance and the ratio can exceed 1, though never the translation constant.

    python3 scripts/convolution_probe.py --pairs 2000
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from bmseq import Params, SparseSeq, convolve, dnorm, lp_norm, translation_constant


@dataclass
class ProbeConfig:
    p: float = 1.5
    q: float = 6.0
    r_grid: list[float] = field(default_factory=lambda: [1.0, 1.5, 2.0, 3.0, 6.0])
    pairs: int = 2000
    seed: int = 0


def random_pair(rng):
    out = []
    for _ in range(2):
        size = int(rng.integers(1, 9))
        idx = rng.choice(np.arange(-16, 16), size=size, replace=False)
        out.append(SparseSeq(idx, rng.uniform(-10, 10, size=size)))
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=ProbeConfig.pairs)
    ap.add_argument("--seed", type=int, default=ProbeConfig.seed)
    ns = ap.parse_args()
    cfg = ProbeConfig(pairs=ns.pairs, seed=ns.seed)
    rows = []
    for r in cfg.r_grid:
        P = Params(cfg.p, cfg.q, r)
        rng = np.random.default_rng(cfg.seed)
        ratios = []
        for _ in range(cfg.pairs):
            x, y = random_pair(rng)
            ratios.append(dnorm(convolve(x, y), P) / (lp_norm(y, 1) * dnorm(x, P)))
        ratios = np.array(ratios)
        rows.append({
            "r": r,
            "violation_rate": float(np.mean(ratios > 1 + 1e-12)),
            "max_ratio": float(ratios.max()),
            "translation_constant": translation_constant(P),
        })
    print(json.dumps({"config": asdict(cfg), "rows": rows}, indent=2))


if __name__ == "__main__":
    main()
