"""Command line interface: samplers, quantity tables, verification suites.

Output contract: every file embeds the run configuration; reruns with the
same flags reproduce the file byte for byte except the timestamp line. JSON
floats carry 17 significant digits; CSV always uses the '.' decimal point.
Exit codes: 0 ok, 1 a verification check failed, 2 configuration error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from . import cell_stats, discrete_dpp, probabilities, sampling
from .mc_engine import stream

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


# ---------------------------------------------------------------------------
# deterministic serialization
# ---------------------------------------------------------------------------


def format_float(x: float) -> str:
    if isinstance(x, float) and not math.isfinite(x):
        return f'"{x!r}"'
    return format(float(x), ".17g")


def _json_dump(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad}  {json.dumps(str(k))}: {_json_dump(v, indent + 1)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}  {_json_dump(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    return json.dumps(str(obj))


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _csv_text(header: list, rows: list, config: dict) -> str:
    lines = [f"# {k}={_cell(v)}" for k, v in config.items()]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _emit(payload: dict, config: dict, fmt: str, out: str | None,
          header: list | None = None, rows: list | None = None) -> None:
    if fmt == "csv":
        if header is None:
            raise ValueError("this command has no CSV table form")
        text = _csv_text(header, rows, config)
    else:
        body = {"config": config}
        body.update(payload)
        text = _json_dump(body) + "\n"
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_config(args, command: str) -> dict:
    return {
        "command": command,
        "seed": args.seed,
        "M": args.m_modes,
        "budget": args.budget,
        "threads": args.threads,
        "format": args.format,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

_SAMPLE_MODELS = ("ginibre", "palm", "matrix", "kostlan", "thinned", "poisson")


def cmd_sample(args) -> int:
    m, seed = args.m_modes, args.seed
    if m < 1:
        raise ValueError("-M must be >= 1")
    if args.model == "ginibre":
        points = sampling.truncated_ginibre_sample(m, seed).points
    elif args.model == "palm":
        points = sampling.truncated_palm_sample(m, seed).points
    elif args.model == "matrix":
        points = sampling.ginibre_matrix_sample(m, seed).points
    elif args.model == "kostlan":
        radii = sampling.kostlan_radii(m, seed)
        config = _run_config(args, "sample")
        config["model"] = args.model
        payload = {"model": args.model, "count": int(radii.size),
                   "radii": [float(r) for r in radii]}
        _emit(payload, config, "json", args.out)
        return EXIT_OK
    elif args.model == "thinned":
        base = sampling.truncated_ginibre_sample(m, seed)
        points = sampling.thin_and_rescale(base, args.alpha, seed,
                                           stream_id=1).points
    elif args.model == "poisson":
        points = sampling.poisson_sample(1.0 / math.pi, math.sqrt(m),
                                         seed).points
    else:
        raise ValueError(f"unknown model {args.model!r}")
    config = _run_config(args, "sample")
    config["model"] = args.model
    payload = {
        "model": args.model,
        "count": int(points.size),
        "points": [[float(z.real), float(z.imag)] for z in points],
    }
    _emit(payload, config, "json", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _checks_analytic(seed: int, budget: int):
    yield "typical_cell_mean_area", _check_typical_cell_mean
    yield "germ_cell_mean_bound", _check_germ_bound
    yield "void_product_envelope_grid", _check_envelope_grid
    yield "capture_bound_chain", _check_capture_chain
    yield "area_gap_two_paths", _check_gap_two_paths
    yield "extra_point_marginal", _check_extra_point


def _check_typical_cell_mean():
    v = float(probabilities.ev_typical_cell())
    return abs(v - math.pi) < 1e-6, {"value": v, "target": math.pi}


def _check_germ_bound():
    v = probabilities.ev_inserted_germ_cell()
    margin = 0.75 * math.pi - v.value
    return margin > 0, {"value": v.value, "bound": 0.75 * math.pi,
                        "margin": margin, "quad_error": v.quad_error}


def _check_envelope_grid():
    ts = np.linspace(0.01, 10.0, 1000)
    worst = -math.inf
    for t in ts:
        p = math.exp(probabilities.log_void_product(float(t)))
        worst = max(worst, p - probabilities.mehta_envelope(float(t)))
    return worst <= 0.0, {"worst_excess": worst, "grid": len(ts)}


def _check_capture_chain():
    b = probabilities.neighbor_capture_bound()
    ok = b.value >= b.simple_lower - 1e-12 and b.simple_lower >= b.floor - 1e-12
    return ok, {"value": b.value, "simple_lower": b.simple_lower,
                "floor": b.floor}


def _check_gap_two_paths():
    gap_quad = float(probabilities.area_gap_radial())
    gap_diff = math.pi - float(probabilities.ev_inserted_germ_cell())
    return abs(gap_quad - gap_diff) < 1e-6, {
        "radial_quadrature": gap_quad, "difference_path": gap_diff}


def _check_extra_point():
    details = {}
    ok = True
    for r in (0.5, 1.0, 2.0):
        value, bound = probabilities.extra_point_prob_disk_via_counts(r)
        target = 1.0 - math.exp(-r * r)
        ok = ok and abs(value - target) <= bound + 1e-12
        details[f"r={r}"] = {"value": value, "target": target,
                             "truncation_bound": bound}
    return ok, details


def _checks_discrete(seed: int, budget: int):
    yield "block_counting_vs_enumeration", lambda: _check_counting(seed)
    yield "anchored_counting_vs_enumeration", lambda: _check_conditioned(seed)
    yield "count_cdf_gap_vs_enumeration", lambda: _check_cdf_gap(seed)
    yield "modified_minor_cdf_vs_enumeration", lambda: _check_modified(seed)
    yield "matched_gramians_equal_laws", lambda: _check_matched(seed)
    yield "loewner_domination_campaign", lambda: _check_domination(seed)


def _random_instance(rng, n):
    return discrete_dpp.FiniteDPP(discrete_dpp.random_kernel(n, rng))


def _check_counting(seed: int, n_cases: int = 40):
    rng = stream(seed, 11)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(3, 9))
        d = _random_instance(rng, n)
        blocks, counts = _random_blocks(rng, n)
        law = discrete_dpp.law_block_counts(discrete_dpp.exact_law(d), blocks)
        brute = float(law[tuple(min(c, len(b)) for c, b in zip(counts, blocks))])
        formula = discrete_dpp.counting_distribution(d, blocks, counts)
        worst = max(worst, abs(formula - brute))
    return worst < 1e-10, {"worst_abs_error": worst, "cases": n_cases}


def _random_blocks(rng, n):
    perm = rng.permutation(n)
    n_blocks = int(rng.integers(1, 4))
    cut = sorted(rng.choice(np.arange(1, n), size=n_blocks - 1,
                            replace=False)) if n_blocks > 1 else []
    pieces = np.split(perm, cut)
    blocks = [list(map(int, p)) for p in pieces if p.size]
    counts = [int(rng.integers(0, len(b) + 1)) for b in blocks]
    return blocks, counts


def _check_conditioned(seed: int, n_cases: int = 40):
    rng = stream(seed, 12)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(4, 9))
        d = _random_instance(rng, n)
        anchor = int(rng.integers(0, n))
        rest = [j for j in range(n) if j != anchor]
        blocks, counts = _random_blocks(rng, len(rest))
        blocks = [[rest[j] for j in b] for b in blocks]
        cond = discrete_dpp.FiniteDPP(
            discrete_dpp._schur_at(d.k_matrix, [anchor]))
        remap = {j: i for i, j in enumerate(rest)}
        law = discrete_dpp.law_block_counts(
            discrete_dpp.exact_law(cond), [[remap[j] for j in b] for b in blocks])
        idx = tuple(min(c, len(b)) for c, b in zip(counts, blocks))
        brute = float(law[idx])
        formula = discrete_dpp.conditioned_counting(d, anchor, blocks, counts)
        worst = max(worst, abs(formula - brute))
    return worst < 1e-10, {"worst_abs_error": worst, "cases": n_cases}


def _check_cdf_gap(seed: int, n_cases: int = 40):
    rng = stream(seed, 13)
    worst = 0.0
    bound_ok = True
    for _ in range(n_cases):
        n = int(rng.integers(3, 9))
        d = _random_instance(rng, n)
        u = int(rng.integers(0, n))
        k = int(rng.integers(0, n))
        res = discrete_dpp.count_cdf_gap(d, u, k)
        worst = max(worst, abs(res.value - res.exact))
        bound_ok = bound_ok and res.bound_factor_ok
    return worst < 1e-10 and bound_ok, {
        "worst_abs_error": worst, "eigenvalue_floor_bound_ok": bound_ok}


def _check_modified(seed: int, n_cases: int = 40):
    rng = stream(seed, 14)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(4, 9))
        d = _random_instance(rng, n)
        u = int(rng.integers(0, n))
        subset = [j for j in range(n) if j != u]
        k = int(rng.integers(0, len(subset)))
        via_minor = discrete_dpp.anchored_cdf_via_modified_minor(d, u, k,
                                                                subset)
        cond = discrete_dpp.FiniteDPP(
            discrete_dpp._schur_at(d.k_matrix, [u]))
        pmf = cond.count_pmf()
        exact = float(np.sum(pmf[: k + 1]))
        worst = max(worst, abs(via_minor - exact))
    return worst < 1e-10, {"worst_abs_error": worst, "cases": n_cases}


def _check_matched(seed: int, n_cases: int = 10):
    rng = stream(seed, 15)
    worst = 0.0
    for _ in range(n_cases):
        n = int(rng.integers(4, 8))
        n_modes = int(rng.integers(2, n + 1))
        z = rng.normal(size=(n, n_modes)) + 1j * rng.normal(size=(n, n_modes))
        q, _ = np.linalg.qr(z)
        alphas = rng.uniform(0.05, 0.9, size=n_modes)
        blocks, _ = _random_blocks(rng, n)
        pa = discrete_dpp.ProjectionFactorization(q[:, :n_modes], alphas,
                                                  blocks)
        pb = discrete_dpp.realize_matched_blocks(pa)
        worst = max(worst, discrete_dpp.block_law_discrepancy(pa, pb))
    return worst < 1e-8, {"worst_law_discrepancy": worst, "cases": n_cases}


def _check_domination(seed: int, n_pairs: int = 40):
    rng = stream(seed, 16)
    violations = 0
    worst = -math.inf
    for i in range(n_pairs):
        n = int(rng.integers(4, 9))
        dom, sub = discrete_dpp.random_loewner_pair(n, rng,
                                                    rank=1 + (i % 2))
        mode = "full" if n <= 8 else "elementary"
        rep = discrete_dpp.domination_check(dom, sub, mode=mode)
        violations += rep.violation
        worst = max(worst, rep.worst_margin)
    return violations == 0, {"pairs": n_pairs, "violations": violations,
                             "worst_margin": worst}


def _checks_montecarlo(seed: int, budget: int):
    yield "w1_constant_half", lambda: _check_w1(seed, budget)
    yield "typical_cell_mc_mean", lambda: _check_moment_plane(seed, budget)
    yield "tail_bound_first_moment", lambda: _check_tail(seed, budget)
    yield "side_count_3_smoke", lambda: _check_side3(seed)
    yield "empirical_cells_smoke", lambda: _check_cells(seed)


def _check_w1(seed: int, budget: int):
    est = cell_stats.w_constant(1, budget=max(10_000, budget), seed=seed)
    return est.within(0.5), est.as_dict()


def _check_moment_plane(seed: int, budget: int):
    est = cell_stats.moment_in_region(1, "whole_plane", "ginibre_formula",
                                      budget=max(10_000, budget), seed=seed)
    return est.within(math.pi), est.as_dict()


def _check_tail(seed: int, budget: int):
    rows = cell_stats.tail_bound_check(1, budget=max(10_000, budget),
                                       seed=seed)
    ok = all(r.margin > 0 for r in rows)
    return ok, {"rows": [r.as_dict() for r in rows]}


def _check_side3(seed: int, budget: int = 500):
    side = cell_stats.side_probability(3, budget=budget, seed=seed)
    ok = (side.acceptance > 0.02 and side.estimate.value >= 0.0
          and side.estimate.value < 0.2)
    return ok, {"estimate": side.estimate.as_dict(),
                "acceptance": side.acceptance}


def _check_cells(seed: int):
    # 48 modes keeps the edge-discard fraction well under the ensemble cap
    ens = cell_stats.empirical_typical_cell(m_modes=48, n_cells=400,
                                            seed=seed)
    dev = abs(ens.mean_area - math.pi) / max(ens.area_stderr, 1e-12)
    return dev < 4.0, {"mean_area": ens.mean_area,
                       "stderr": ens.area_stderr, "n_kept": ens.n_kept,
                       "deviation_sigma": dev}


_SUITES = {
    "analytic": _checks_analytic,
    "discrete": _checks_discrete,
    "montecarlo": _checks_montecarlo,
}


def cmd_verify(args) -> int:
    suite = args.suite
    checks = []
    all_ok = True
    for name, fn in _SUITES[suite](args.seed, args.budget or 50_000):
        try:
            ok, details = fn()
        except Exception as exc:
            ok, details = False, {"error": repr(exc)}
        checks.append({"name": name, "ok": bool(ok), "details": details})
        all_ok = all_ok and ok
        if not ok:
            print(f"verify: check failed: {name}", file=sys.stderr)
    config = _run_config(args, "verify")
    config["suite"] = suite
    _emit({"suite": suite, "all_ok": all_ok, "checks": checks},
          config, "json", args.out)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# table
# ---------------------------------------------------------------------------

_QUANTITIES = ("void_prob", "gap_density", "w_constant", "overlap",
               "side_prob", "moment")


def _grid(spec: str) -> list:
    lo, hi, n = spec.split(":")
    return [float(x) for x in np.linspace(float(lo), float(hi), int(n))]


def cmd_table(args) -> int:
    q = args.quantity
    seed = args.seed
    if q == "void_prob":
        rs = _grid(args.grid or "0.25:3.0:12")
        header = ["r", "value", "stderr", "seed"]
        rows = [[r, probabilities.void_prob_disk(r), None, None] for r in rs]
    elif q == "gap_density":
        ts = _grid(args.grid or "0.1:8.0:40")
        header = ["t", "value", "stderr", "seed"]
        rows = [[t, probabilities.area_gap_density_radial(t), None, None]
                for t in ts]
    elif q == "overlap":
        rs = _grid(args.grid or "0.5:3.0:11")
        header = ["R", "value", "stderr", "seed"]
        rows = [[r, cell_stats.overlap_integral(r), None, None] for r in rs]
    elif q == "w_constant":
        k = args.k
        est = cell_stats.w_constant(k, budget=args.budget or 200_000,
                                    seed=seed)
        header = ["k", "value", "stderr", "seed"]
        rows = [[k, est.value, est.stderr, seed]]
    elif q == "side_prob":
        header = ["k", "value", "stderr", "seed"]
        rows = []
        for k in (3, 4, 5, 6):
            side = cell_stats.side_probability(
                k, budget=args.budget or 2000, seed=seed)
            rows.append([k, side.estimate.value, side.estimate.stderr, seed])
    elif q == "moment":
        region = _parse_region(args.region)
        est = cell_stats.moment_in_region(
            args.k, region, args.model, budget=args.budget or 100_000,
            seed=seed, m_modes=args.m_modes)
        header = ["k", "region", "model", "value", "stderr", "seed"]
        rows = [[args.k, args.region, args.model, est.value, est.stderr,
                 seed]]
    else:
        raise ValueError(f"unknown quantity {q!r}")
    config = _run_config(args, "table")
    config["quantity"] = q
    payload = {"quantity": q,
               "rows": [dict(zip(header, row)) for row in rows]}
    _emit(payload, config, args.format, args.out, header=header, rows=rows)
    return EXIT_OK


def _parse_region(text: str):
    if text in ("plane", "whole_plane"):
        return "whole_plane"
    tag, _, value = text.partition(":")
    if tag == "ball":
        return ("ball", float(value))
    if tag in ("complement", "complement_ball"):
        return ("complement_ball", float(value))
    raise ValueError(f"unknown region {text!r} (use ball:R, complement:R, plane)")


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("-M", dest="m_modes", type=int, default=64,
                        help="mode count / window size parameter")
    common.add_argument("--budget", type=int, default=None,
                        help="draw budget for Monte Carlo quantities")
    common.add_argument("--out", type=str, default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = argparse.ArgumentParser(
        prog="ginibre-lab",
        description="Planar determinantal process and Voronoi cell toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", parents=[common],
                              help="draw a point configuration")
    p_sample.add_argument("--model", choices=_SAMPLE_MODELS, required=True)
    p_sample.add_argument("--alpha", type=float, default=0.5,
                          help="retention probability for the thinned model")
    p_sample.set_defaults(fn=cmd_sample)

    p_verify = sub.add_parser("verify", parents=[common],
                              help="run a verification suite")
    p_verify.add_argument("--suite", choices=tuple(_SUITES), required=True)
    p_verify.set_defaults(fn=cmd_verify)

    p_table = sub.add_parser("table", parents=[common],
                             help="tabulate a quantity")
    p_table.add_argument("--quantity", choices=_QUANTITIES, required=True)
    p_table.add_argument("--grid", type=str, default=None,
                         help="lo:hi:n parameter grid")
    p_table.add_argument("--k", type=int, default=1)
    p_table.add_argument("--region", type=str, default="plane")
    p_table.add_argument("--model", type=str, default="ginibre_formula")
    p_table.set_defaults(fn=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"ginibre-lab: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
