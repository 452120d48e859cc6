"""Command-line studies: norm, renorm-study, counterexamples, duality, solve.

Reports are deterministic JSON on stdout (sorted keys, fixed seeds); tables
can also be written as CSV. Exit codes:

    0  success
    1  bad input (unreadable file, invalid exponents, malformed options)
    2  a divergent norm was requested as a scalar (--scalar)
    3  a tolerance, sandwich gap or study check was not met
    4  a contraction / invertibility precondition failed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import block_norm_upper, default_max_level, require_interior
from .core import Params, SparseSeq, load_seq, lp_norm, parse_exponent, save_seq
from .duality import block_norm_lower_certificate, bm_norm_lower_certificate
from .norms import (
    DIVERGENT,
    c_pq_constant,
    centered_norm,
    dyadic_length_norm,
    dyadic_norm,
    dyadic_tail_bound,
    embedding_constant_K,
    q_infty_constants,
    q_infty_norm,
)
from .operators import (
    Kernel,
    PreconditionError,
    ToleranceError,
    geometric_kernel,
    neumann_solve,
    nonlinear_solve,
    wiener_solve,
)
from .studies import harmonic_ladder, increasing, last_increment, power_ladder, random_corpus

EXIT_OK, EXIT_INPUT, EXIT_DIVERGENT, EXIT_TOLERANCE, EXIT_PRECONDITION = 0, 1, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class StudyConfig:
    """Everything a command needs; serialised verbatim into its report."""

    command: str
    p: str = "2"
    q: str = "4"
    r: str = "2"
    input: str | None = None
    kernel: str | None = None
    output: str | None = None
    csv: str | None = None
    tol: float = 1e-12
    max_level: int | None = None
    seed: int = 0
    scalar: bool = False
    which: str = "dyadic"
    include_singletons: bool = False
    format: str = "json"
    q_grid: list[str] = field(default_factory=lambda: ["3", "4", "8"])
    corpus_size: int = 100
    sizes: list[int] = field(default_factory=lambda: [2**k for k in range(10, 17)])
    s: str | None = None
    ladder: list[int] = field(default_factory=lambda: [0, 1, 2, 5, 10, 20, 40])
    max_gap: float = 0.1
    candidates: int = 64
    iterations: int = 500
    solver: str = "wiener"
    geometric: list[float] | None = None
    lipschitz: float = 0.0
    nonlinearity: str = "zero"

    def params(self) -> Params:
        return Params(self.p, self.q, self.r)


def _seq_file(path: str | None, what: str) -> SparseSeq:
    if path is None:
        raise CliError(EXIT_INPUT, f"--{what} is required")
    try:
        return load_seq(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise CliError(EXIT_INPUT, f"cannot read {what} file {path!r}: {exc}") from exc


def _envelope(cfg: StudyConfig, P: Params | None, body: dict) -> dict:
    return {
        "command": cfg.command,
        "version": __version__,
        "params": P.as_dict() if P is not None else None,
        "config": asdict(cfg),
        **body,
    }


def _write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        Path(path).write_text("")
        return
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    Path(path).write_text(buf.getvalue())


# --- commands ----------------------------------------------------------------------------


def cmd_norm(cfg: StudyConfig) -> tuple[dict, int]:
    P = cfg.params()
    x = _seq_file(cfg.input, "input")
    results = {}
    if P.q_finite:
        results["dyadic"] = dyadic_norm(x, P)
        K = embedding_constant_K(P)
    else:
        results["dyadic"] = q_infty_norm(x, P)
        K = None
    results["centered"] = centered_norm(x, P, tol=cfg.tol)
    results["dyadic_length"] = dyadic_length_norm(x, P, tol=cfg.tol, include_singletons=cfg.include_singletons)
    l1, lr = lp_norm(x, 1), lp_norm(x, P.r)
    d = results["dyadic"].value
    chain = {"lr_le_dyadic": d - lr}
    if K is not None:
        chain["dyadic_le_K_l1"] = K * l1 - d
        chain["K"] = K
    else:
        lo, hi = q_infty_constants(P)
        chain["dyadic_le_C_lr"] = hi * lr - d
        chain["C"] = hi
    body = {
        "norms": {k: v.to_json_obj() for k, v in results.items()},
        "l1_norm": l1,
        "lr_norm": lr,
        "embedding_slacks": chain,
    }
    def unmet(res):
        return res.converged and not res.tolerance_met

    if cfg.scalar:
        chosen = results[cfg.which]
        if not chosen.converged:
            return _envelope(cfg, P, body), EXIT_DIVERGENT
        return _envelope(cfg, P, {"value": chosen.value}), EXIT_TOLERANCE if unmet(chosen) else EXIT_OK
    return _envelope(cfg, P, body), EXIT_TOLERANCE if any(map(unmet, results.values())) else EXIT_OK


def cmd_renorm_study(cfg: StudyConfig) -> tuple[dict, int]:
    p = cfg.p
    corpus = random_corpus(cfg.corpus_size, cfg.seed)
    rows = []
    ok = True
    for q in cfg.q_grid if corpus else []:
        P = Params(p, q, p)
        C = c_pq_constant(P)
        K = embedding_constant_K(P)
        d_ratios, s_ratios = [], []
        s_verdict = None
        l1_chain_ok = True
        for x in corpus:
            d = dyadic_norm(x, P).value
            lp = lp_norm(x, P.p)
            d_ratios.append(d / (C * lp))
            l1_chain_ok &= lp_norm(x, P.r) <= d + 1e-10 and d <= K * lp_norm(x, 1) + 1e-10
            s = centered_norm(x, P, tol=cfg.tol)
            s_verdict = s.verdict
            if s.verdict != DIVERGENT:
                s_ratios.append(s.value / lp)
        dev = max((abs(v - 1.0) for v in d_ratios), default=0.0)
        ok &= dev <= 1e-12 and l1_chain_ok
        rows.append({
            "q": P.as_dict()["q"],
            "C_pq": C,
            "dyadic_ratio_min": min(d_ratios, default=None),
            "dyadic_ratio_max": max(d_ratios, default=None),
            "dyadic_ratio_max_deviation": dev,
            "embedding_chain_ok": l1_chain_ok,
            "centered_verdict": s_verdict,
            "centered_ratio_min": min(s_ratios, default=None),
            "centered_ratio_max": max(s_ratios, default=None),
        })
    if cfg.csv:
        _write_csv(cfg.csv, rows)
    body = {"corpus_size": len(corpus), "rows": rows, "identity_holds": ok}
    return _envelope(cfg, Params(p, cfg.q_grid[0], p) if cfg.q_grid else None, body), EXIT_OK if ok else EXIT_TOLERANCE


def cmd_counterexamples(cfg: StudyConfig) -> tuple[dict, int]:
    P = cfg.params()
    s = parse_exponent(cfg.s) if cfg.s is not None else P.q
    try:
        harm = harmonic_ladder(P, cfg.sizes)
        power = power_ladder(P, s, cfg.sizes) if P.q <= s < P.r else None
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    checks = {}
    hl1 = [row.lp_norm for row in harm]
    hd = [row.dyadic_norm for row in harm]
    study_a = {"rows": [row.as_dict() for row in harm]}
    if len(harm) > 1:
        diffs = np.diff(hd)
        checks["harmonic_l1_increasing"] = increasing(hl1)
        checks["harmonic_dyadic_increasing"] = increasing(hd)
        checks["harmonic_dyadic_increments_decreasing"] = bool(np.all(np.diff(diffs) <= 1e-15)) if diffs.size > 1 else True
        study_a["l1_last_increment"] = last_increment(hl1)
        study_a["dyadic_last_increment"] = last_increment(hd)
    body = {"study_a": study_a}
    if power is not None:
        pr = [row.lp_norm for row in power]
        pd = [row.dyadic_norm for row in power]
        study_b = {"s": s, "rows": [row.as_dict() for row in power]}
        checks["power_dyadic_above_witness"] = all(row.dyadic_norm >= row.lower_bound * (1 - 1e-12) for row in power)
        if len(power) > 1:
            checks["power_dyadic_increasing"] = increasing(pd)
            study_b["lr_last_increment"] = last_increment(pr)
            study_b["dyadic_last_increment"] = last_increment(pd)
        body["study_b"] = study_b
    else:
        body["study_b"] = {"skipped": "needs q <= s < r"}
    body["checks"] = checks
    if cfg.csv:
        _write_csv(cfg.csv, [dict(study="harmonic", **row.as_dict()) for row in harm]
                   + [dict(study="power", **row.as_dict()) for row in (power or [])])
    return _envelope(cfg, P, body), EXIT_OK if all(checks.values()) else EXIT_TOLERANCE


def cmd_duality(cfg: StudyConfig) -> tuple[dict, int]:
    P = cfg.params()
    try:
        require_interior(P)
    except ValueError as exc:
        raise CliError(EXIT_INPUT, str(exc)) from exc
    y = _seq_file(cfg.input, "input")
    if y.is_zero():
        body = {"block_lower": 0.0, "block_upper": 0.0, "relative_gap": 0.0, "ladder": []}
        return _envelope(cfg, P, body), EXIT_OK
    L = default_max_level(y) if cfg.max_level is None else cfg.max_level
    upper, rep = block_norm_upper(y, P, L, cfg.iterations)
    lower = block_norm_lower_certificate(
        y, P, count=cfg.candidates, seed=cfg.seed, max_level=L, iterations=cfg.iterations
    )
    gap = (upper - lower.certified_value) / upper
    norm = dyadic_norm(y, P).value
    ladder = []
    for J in cfg.ladder:
        cert = bm_norm_lower_certificate(y, P, J).certified_value
        ladder.append({
            "max_level": J,
            "certified": cert,
            "gap": norm - cert,
            "rth_power_gap": norm**P.r - cert**P.r,
            "tail_bound": dyadic_tail_bound(y, P, J),
        })
    body = {
        "max_level": L,
        "block_lower": lower.certified_value,
        "block_upper": upper,
        "relative_gap": gap,
        "upper_terms": len(rep),
        "lower_test_vector": lower.test_vector.to_json_obj(),
        "dyadic_norm": norm,
        "ladder": ladder,
    }
    if P.r == P.p:
        body["r_equals_p_value"] = lp_norm(y, P.p_conj) / c_pq_constant(P)
    return _envelope(cfg, P, body), EXIT_OK if gap <= cfg.max_gap else EXIT_TOLERANCE


NONLINEARITIES = {
    "zero": lambda v: 0.0 * v,
    "sin": np.sin,
    "tanh": np.tanh,
}


def cmd_solve(cfg: StudyConfig) -> tuple[dict, int]:
    P = cfg.params()
    if cfg.geometric is not None:
        lam, alpha, cutoff = cfg.geometric
        k = geometric_kernel(lam, alpha, int(cutoff))
    else:
        k = Kernel(_seq_file(cfg.kernel, "kernel"))
    f = _seq_file(cfg.input, "input")
    tol = cfg.tol
    try:
        if cfg.solver == "neumann":
            rep = neumann_solve(k, f, P, tol)
        elif cfg.solver == "wiener":
            rep = wiener_solve(k, f, P)
        else:
            base = NONLINEARITIES[cfg.nonlinearity]
            F = lambda v: cfg.lipschitz * base(v)  # noqa: E731
            rep = nonlinear_solve(k, F, cfg.lipschitz, f, P, tol)
    except PreconditionError as exc:
        raise CliError(EXIT_PRECONDITION, f"precondition failed: {exc}") from exc
    except ToleranceError as exc:
        raise CliError(EXIT_TOLERANCE, str(exc)) from exc
    obj = rep.to_json_obj()
    obj.pop("inverse_kernel", None)
    fn = dyadic_norm(f, P).value
    obj["stability_ratio"] = dyadic_norm(rep.solution, P).value / fn if fn > 0 else 0.0
    obj["kernel_l1"] = k.l1_norm
    obj["kernel_tail_mass"] = k.tail_mass
    if cfg.output:
        save_seq(rep.solution, cfg.output)
    return _envelope(cfg, P, obj), EXIT_OK


COMMANDS = {
    "norm": cmd_norm,
    "renorm-study": cmd_renorm_study,
    "counterexamples": cmd_counterexamples,
    "duality": cmd_duality,
    "solve": cmd_solve,
}


# --- argument parsing ----------------------------------------------------------------------


def _csv_list(conv):
    def parse(text: str):
        text = text.strip()
        return [conv(t) for t in text.split(",")] if text else []

    return parse


def _size(text: str) -> int:
    text = text.strip()
    if text.startswith("2^"):
        return 2 ** int(text[2:])
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="bmseq", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--p", default="2")
        sp.add_argument("--q", default="4", help='accepts "inf"')
        sp.add_argument("--r", default="2")
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--max-level", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", choices=["json", "csv"], default="json")
        sp.add_argument("--csv", help="also write the main table to this CSV file")

    sp = sub.add_parser("norm", help="all three norms, l^1/l^r norms and embedding slacks")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--scalar", action="store_true", help="print one value; exit 2 if it diverges")
    sp.add_argument("--which", choices=["dyadic", "centered", "dyadic_length"], default="dyadic")
    sp.add_argument("--include-singletons", action="store_true")

    sp = sub.add_parser("renorm-study", help="r = p identity and centered-norm ratios over a random corpus")
    common(sp)
    sp.add_argument("--q-grid", type=_csv_list(str), default=["3", "4", "8"])
    sp.add_argument("--corpus-size", type=int, default=100)

    sp = sub.add_parser("counterexamples", help="harmonic and power truncation ladders")
    common(sp)
    sp.add_argument("--sizes", type=_csv_list(_size), default=[2**k for k in range(10, 17)])
    sp.add_argument("--s", default=None, help="power-head exponent (default q)")

    sp = sub.add_parser("duality", help="block-norm sandwich and certificate ladder")
    common(sp)
    sp.add_argument("--input", required=True)
    sp.add_argument("--ladder", type=_csv_list(int), default=[0, 1, 2, 5, 10, 20, 40])
    sp.add_argument("--max-gap", type=float, default=0.1)
    sp.add_argument("--candidates", type=int, default=64)
    sp.add_argument("--iterations", type=int, default=500)

    sp = sub.add_parser("solve", help="solve (I - T_k) x = f (+ F(x))")
    common(sp)
    sp.add_argument("--input", required=True, help="right-hand side f")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--kernel")
    src.add_argument("--geometric", type=float, nargs=3, metavar=("LAMBDA", "ALPHA", "CUTOFF"))
    sp.add_argument("--solver", choices=["neumann", "wiener", "nonlinear"], default="wiener")
    sp.add_argument("--lipschitz", type=float, default=0.0)
    sp.add_argument("--nonlinearity", choices=sorted(NONLINEARITIES), default="zero")
    sp.add_argument("--output", help="write the solution sequence here")
    return top


DEFAULT_TOL = {"norm": 1e-12, "renorm-study": 1e-12, "counterexamples": 1e-12, "duality": 1e-12, "solve": 1e-8}


def config_from_args(ns: argparse.Namespace) -> StudyConfig:
    fields = {k: v for k, v in vars(ns).items() if k in StudyConfig.__dataclass_fields__ and v is not None}
    fields["tol"] = ns.tol if ns.tol is not None else DEFAULT_TOL[ns.command]
    return StudyConfig(**fields)


def _render(report: dict, fmt: str) -> str:
    if fmt == "csv":
        rows = report.get("rows") or report.get("study_a", {}).get("rows") or report.get("ladder")
        if rows is None:
            flat = {k: v for k, v in report.items() if not isinstance(v, (dict, list))}
            rows = [flat]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else [], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue()
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False)


def run(argv: list[str] | None = None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = config_from_args(ns)
        report, code = COMMANDS[ns.command](cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if cfg.scalar and "value" in report:
        print(repr(report["value"]), file=out)
    else:
        print(_render(report, cfg.format), file=out)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
