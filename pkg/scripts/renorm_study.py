"""Compare the three interval families on a random corpus.

Part one checks the r = p identity (dyadic norm = C_{p,q} times the l^p norm).
Part two asks whether the centered norm, in its convergent regime, is a scalar
multiple of the l^p norm: a constant ratio across the corpus would say yes, a
spread says it is a genuinely different norm.

    python3 scripts/renorm_study.py --corpus-size 200 --seed 0
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass, field

from bmseq import Params, c_pq_constant, centered_norm, dyadic_norm, lp_norm
from bmseq.studies import random_corpus


@dataclass
class RenormConfig:
    p: float = 2.0
    q_grid: list[float] = field(default_factory=lambda: [3.0, 4.0, 8.0])
    centered_triples: list[tuple[float, float, float]] = field(
        default_factory=lambda: [(1.0, 2.0, 6.0), (1.0, 4.0, 4.0), (2.0, 8.0, 12.0)]
    )
    corpus_size: int = 100
    seed: int = 0
    tol: float = 1e-10


def identity_rows(cfg: RenormConfig, corpus) -> list[dict]:
    rows = []
    for q in cfg.q_grid:
        P = Params(cfg.p, q, cfg.p)
        C = c_pq_constant(P)
        ratios = [dyadic_norm(x, P).value / (C * lp_norm(x, P.p)) for x in corpus]
        rows.append({"q": q, "C_pq": C, "max_deviation": max(abs(v - 1) for v in ratios)})
    return rows


def centered_rows(cfg: RenormConfig, corpus) -> list[dict]:
    rows = []
    for p, q, r in cfg.centered_triples:
        P = Params(p, q, r)
        ratios = []
        for x in corpus:
            res = centered_norm(x, P, tol=cfg.tol)
            if res.verdict == "divergent":
                break
            ratios.append(res.value / lp_norm(x, P.p))
        rows.append({
            "p": p, "q": q, "r": r,
            "convergent": len(ratios) == len(corpus),
            "ratio_min": min(ratios, default=None),
            "ratio_max": max(ratios, default=None),
        })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus-size", type=int, default=RenormConfig.corpus_size)
    ap.add_argument("--seed", type=int, default=RenormConfig.seed)
    ns = ap.parse_args()
    cfg = RenormConfig(corpus_size=ns.corpus_size, seed=ns.seed)
    corpus = random_corpus(cfg.corpus_size, cfg.seed)
    report = {
        "config": asdict(cfg),
        "r_equals_p_identity": identity_rows(cfg, corpus),
        "centered_ratio_spread": centered_rows(cfg, corpus),
    }
    print(json.dumps(report, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
