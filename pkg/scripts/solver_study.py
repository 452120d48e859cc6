"""Neumann versus Wiener on the geometric kernel, plus a kernel beyond Neumann's reach.

    python3 scripts/solver_study.py --samples 20
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from bmseq import Kernel, Params, SparseSeq, dnorm, geometric_kernel, neumann_solve, wiener_solve
from bmseq.operators import PreconditionError


@dataclass
class SolverConfig:
    lam: float = 0.3
    alpha: float = 0.5
    cutoff: int = 64
    p: float = 2.0
    q: float = 4.0
    r: float = 2.0
    tol: float = 1e-8
    samples: int = 20
    seed: int = 0


def random_rhs(rng: np.random.Generator) -> SparseSeq:
    size = int(rng.integers(1, 9))
    idx = rng.choice(np.arange(-32, 32), size=size, replace=False)
    return SparseSeq(idx, rng.uniform(-10, 10, size=size))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=SolverConfig.samples)
    ap.add_argument("--seed", type=int, default=SolverConfig.seed)
    ns = ap.parse_args()
    cfg = SolverConfig(samples=ns.samples, seed=ns.seed)
    P = Params(cfg.p, cfg.q, cfg.r)
    k = geometric_kernel(cfg.lam, cfg.alpha, cfg.cutoff)
    rng = np.random.default_rng(cfg.seed)

    rows = []
    for i in range(cfg.samples):
        f = random_rhs(rng)
        a = neumann_solve(k, f, P, tol=cfg.tol)
        b = wiener_solve(k, f, P)
        fn = dnorm(f, P)
        rows.append({
            "sample": i,
            "difference": dnorm(a.solution - b.solution, P),
            "bound_sum": a.error_bound + b.error_bound,
            "neumann_terms": a.iterations,
            "neumann_residual": a.residual,
            "wiener_residual": b.residual,
            "stability_ratio": dnorm(b.solution, P) / fn,
        })

    wide = Kernel(SparseSeq([-1, 1], [0.55, 0.6]))
    try:
        neumann_solve(wide, SparseSeq.unit(0), P)
        neumann_status = "ran"
    except PreconditionError as exc:
        neumann_status = f"rejected: {exc}"
    w = wiener_solve(wide, SparseSeq.unit(0), P)

    print(json.dumps({
        "config": asdict(cfg),
        "kernel_l1": k.l1_norm,
        "rows": rows,
        "wide_kernel": {
            "l1": wide.l1_norm,
            "neumann": neumann_status,
            "wiener_residual": w.residual,
            "symbol_min_gap": w.symbol_min_gap,
            "inverse_kernel_l1": w.diagnostics["inverse_kernel_l1"],
        },
    }, indent=2))


if __name__ == "__main__":
    main()
