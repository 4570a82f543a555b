"""Command-line front end: state construction, measure evaluation, protocol
sweeps, and bound curves, with JSON/CSV output and deterministic seeds.

Grammar: ``privstate <noun> <verb> [flags]`` with nouns state, measure,
protocol, bounds. Exit codes: 0 success, 2 validation failure, 3 dimension
budget exceeded, 4 bad arguments.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import bounds as bounds_mod
from . import measures, protocol, relent, sampling, serialize, states
from .ccq import ccq_of, dw_rate, ku_witness, multipartite_rate, pair_ccqs, twisting_of_spec
from .operators import (
    DEFAULT_DIM_BUDGET,
    Bipartition,
    BudgetExceeded,
    DensityOperator,
    TensorOperator,
    ValidationError,
    identity,
)
from .relent import FwParams
from .states import MultipartiteSpec, PrivateStateSpec

STATE_KINDS = (
    "basic-pdit",
    "pdit",
    "flower",
    "key-attack",
    "omega",
    "werner",
    "rec-ppt",
    "mpdit",
    "abs-sep-sample",
)
MEASURES = (
    "entropy",
    "relent",
    "negativity",
    "lognegativity",
    "ppt",
    "abssep2q",
    "tracedist",
    "dwrate",
    "witness",
    "er-fw",
    "er-trivial",
    "thm2",
)


# ---------------------------------------------------------------------------
# plumbing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; the contract says 4
        self.exit(4, f"{self.prog}: error: {message}\n")


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _fmt_cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".12g")


def _csv_text(header: list[str], rows: list[list]) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt_cell(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def _table_text(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "json":
        return _json_text([dict(zip(header, row)) for row in rows])
    return _csv_text(header, rows)


def _n_threads() -> int:
    env = os.environ.get("PRIVSTATE_THREADS")
    if env is not None:
        n = int(env)
        if n < 1:
            raise ValidationError("PRIVSTATE_THREADS must be a positive integer")
        return n
    return min(8, os.cpu_count() or 1)


def _map_grid(fn, xs: list):
    """Evaluate fn over the grid, possibly in parallel; output keeps grid order."""
    workers = _n_threads()
    if workers == 1 or len(xs) <= 1:
        return [fn(x) for x in xs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, xs))


def _parse_number(tok: str) -> float:
    tok = tok.strip()
    if "^" in tok:
        base, exp = tok.split("^", 1)
        return float(base) ** float(exp)
    return float(tok)


def _parse_grid(spec: str) -> list[float]:
    """Grids: 'a,b,c' explicit, 'a..b' or 'a:b' doubling from a to b."""
    if "," in spec:
        vals = [_parse_number(t) for t in spec.split(",")]
    elif ".." in spec or ":" in spec:
        sep = ".." if ".." in spec else ":"
        lo_s, hi_s = spec.split(sep, 1)
        lo, hi = _parse_number(lo_s), _parse_number(hi_s)
        if lo <= 0 or hi < lo:
            raise ValidationError(f"bad grid range {spec!r}")
        vals = []
        x = lo
        while x <= hi * (1.0 + 1e-12):
            vals.append(x)
            x *= 2.0
    else:
        vals = [_parse_number(spec)]
    if not vals:
        raise ValidationError("empty grid")
    return vals


def _parse_dims(spec: str) -> tuple[int, ...]:
    return tuple(int(t) for t in spec.split(","))


def _render_plot(path: str, x: list, series: dict[str, list], xlabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, y in series.items():
        ax.plot(x, y, marker="o", markersize=3, linewidth=1.2, label=label)
    ax.set_xlabel(xlabel)
    if len(x) > 2 and min(x) > 0 and max(x) / min(x) > 64:
        ax.set_xscale("log", base=2)
    if len(series) > 1:
        ax.legend(frameon=False)
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _budget(args, fallback: int = DEFAULT_DIM_BUDGET) -> int:
    return args.budget_dim if args.budget_dim is not None else fallback


# ---------------------------------------------------------------------------
# state build


def _maxcorr_sigma(dims: tuple[int, ...]) -> DensityOperator:
    if len(dims) != 2 or dims[0] != dims[1]:
        raise ValidationError("maximally correlated sigma needs two equal shield factors")
    s = dims[0]
    m = np.zeros((s * s, s * s), dtype=np.complex128)
    for i in range(s):
        for j in range(s):
            m[i * s + i, j * s + j] = 0.0
        m[i * s + i, i * s + i] = 1.0 / s
    return DensityOperator(dims, m)


def _sigma_of(choice: str, dims: tuple[int, ...], rng: np.random.Generator) -> DensityOperator:
    if choice == "maxcorr":
        return _maxcorr_sigma(dims)
    if choice == "uniform":
        total = int(np.prod(dims)) if dims else 1
        return DensityOperator(dims, np.eye(total, dtype=np.complex128) / total)
    if choice == "random":
        return sampling.random_density(dims, rng)
    raise ValidationError(f"unknown sigma choice {choice!r}")


def _derived_path(out: str, tag: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + f".{tag}" + p.suffix))


def cmd_state_build(args) -> int:
    kind = args.kind
    out = args.out or f"{kind}.json"
    budget = _budget(args)
    rng = np.random.default_rng(args.seed)
    written = [out]
    builder: dict = {"kind": kind, "seed": args.seed}

    if kind in ("basic-pdit", "pdit", "key-attack", "flower"):
        if kind == "flower":
            spec = states.flower(args.d)
        elif kind == "basic-pdit":
            dims = _parse_dims(args.shield_dims)
            spec = states.basic_spec(args.d, _sigma_of(args.sigma, dims, rng), args.n_alice_shield)
        else:
            spec = states.random_private_spec(
                args.d, _parse_dims(args.shield_dims), rng, args.n_alice_shield
            )
        rho = states.key_attack(spec, budget) if kind == "key-attack" else states.pdit(spec, budget)
        sf = serialize.state_file_of(rho, spec.key_cut(), builder=builder, spec=spec)
    elif kind == "omega":
        om, v = states.omega_example(args.theta)
        builder["theta"] = args.theta
        sf = serialize.state_file_of(om, Bipartition((0,), (1,)), builder=builder)
        v_file = serialize.StateFile(v.dims, 1, v.mat, kind="unitary", builder=builder)
        serialize.save(_derived_path(out, "v"), v_file)
        tilde = states.omega_tilde()
        serialize.save(
            _derived_path(out, "tilde"),
            serialize.state_file_of(tilde, Bipartition((0,), (1,)), builder=builder),
        )
        written += [_derived_path(out, "v"), _derived_path(out, "tilde")]
    elif kind == "werner":
        rho = states.werner(args.d, args.werner_kind)
        builder["werner_kind"] = args.werner_kind
        sf = serialize.state_file_of(rho, Bipartition((0,), (1,)), builder=builder)
    elif kind == "rec-ppt":
        rho = states.rec_ppt_key_state(args.p, args.dtilde, args.k, args.m, budget)
        builder.update(
            p=args.p,
            dtilde=args.dtilde,
            k=args.k,
            m=args.m,
            expected_ppt=states.rec_ppt_expected_ppt(args.p, args.dtilde, args.k),
        )
        sf = serialize.state_file_of(rho, states.rec_ppt_cut(args.m), builder=builder)
    elif kind == "mpdit":
        dims = _parse_dims(args.shield_dims)
        sigma = _sigma_of(args.sigma, dims, rng)
        if args.random_twist:
            us = tuple(
                TensorOperator(dims, sampling.haar_unitary(int(np.prod(dims)), rng))
                for _ in range(args.d)
            )
        else:
            us = (identity(dims),) * args.d
        mspec = MultipartiteSpec(args.d, args.n_bobs, dims, sigma, us)
        rho = states.multipartite_pdit(mspec, budget)
        builder["n_bobs"] = args.n_bobs
        cut = Bipartition((0,), tuple(range(1, len(rho.dims))))
        sf = serialize.state_file_of(rho, cut, builder=builder, spec=mspec)
    elif kind == "abs-sep-sample":
        rho = states.abs_sep_sample(args.seed)
        sf = serialize.state_file_of(rho, Bipartition((0,), (1,)), builder=builder)
    else:
        raise ValidationError(f"unknown state kind {kind!r}")

    serialize.save(out, sf)
    report = {"written": written, "dims": list(sf.dims), "cut": sf.cut}
    sys.stdout.write(_json_text(report))
    return 0


# ---------------------------------------------------------------------------
# measure


def _fw_params(args) -> FwParams:
    return FwParams(
        max_iters=args.fw_max_iters,
        restarts=args.fw_restarts,
        oracle_sweeps=args.fw_sweeps,
        tol=args.tol if args.tol is not None else 1e-7,
        seed=args.seed,
    )


def _load_other(args) -> DensityOperator:
    if not args.other:
        raise ValidationError("this measure needs a second state via --other")
    return serialize.load(args.other).density()


def cmd_measure(args) -> int:
    name = args.name
    sf = serialize.load(args.state)
    report: dict = {"measure": name, "state": args.state}
    conventions: dict = {"log_base": 2}

    if name in ("relent", "tracedist"):
        rho = sf.density()
        other = _load_other(args)
        if other.dim != rho.dim:
            raise ValidationError("state dimensions do not match")
        if name == "relent":
            value = measures.relative_entropy(rho, other)
            value = value if math.isfinite(value) else math.inf
        else:
            value = measures.trace_distance(rho, other)
            conventions["normalization"] = "unhalved trace norm"
            report["halved"] = 0.5 * value
    elif name == "entropy":
        value = measures.vn_entropy(sf.density())
    elif name in ("negativity", "lognegativity", "ppt"):
        rho, cut = sf.density(), sf.bipartition()
        conventions["cut"] = f"first {sf.cut} factors vs rest"
        if name == "negativity":
            value = measures.negativity(rho, cut)
        elif name == "lognegativity":
            value = measures.log_negativity(rho, cut)
        else:
            value = measures.is_ppt(rho, cut, args.tol if args.tol is not None else 1e-9)
    elif name == "abssep2q":
        value = measures.is_abs_separable_2q(sf.density())
        conventions["criterion"] = "lam1 <= lam3 + 2 sqrt(lam2 lam4)"
    elif name == "dwrate":
        rho = sf.density()
        spec = sf.private_spec() if sf.spec is not None else None
        if isinstance(spec, MultipartiteSpec):
            keys = tuple(range(spec.n_parties))
            value = multipartite_rate(pair_ccqs(rho, keys))
            conventions["variant"] = "min over (A, B_j) pairs"
        else:
            if sf.cut < 1 or sf.cut >= len(sf.dims):
                raise ValidationError("dwrate needs at least one factor on each side")
            value = dw_rate(ccq_of(rho, (0, sf.cut)))
            conventions["key_pair"] = [0, sf.cut]
    elif name == "witness":
        spec = sf.private_spec()
        if not isinstance(spec, PrivateStateSpec):
            raise ValidationError("witness needs a bipartite private-state spec block")
        lib = serialize.from_side_major(sf, spec.key_cut())
        rho = DensityOperator(spec.dims, lib.mat)
        value = ku_witness(rho, twisting_of_spec(spec).dagger())
        conventions["twisting"] = "inverse of the recorded generating twisting"
    elif name == "er-fw":
        est = relent.er_upper_fw(sf.density(), sf.bipartition(), _fw_params(args))
        value = est.value
        report.update(converged=est.converged, iterations=est.iterations, gap=est.gap)
        conventions["direction"] = "upper bound via separable witness"
    elif name == "er-trivial":
        value = relent.er_trivial_upper(sf.density())
        conventions["witness"] = "maximally mixed"
    elif name == "thm2":
        spec = sf.private_spec()
        if not isinstance(spec, PrivateStateSpec):
            raise ValidationError("thm2 needs a bipartite private-state spec block")
        rep = relent.thm2_bound(spec, args.estimator, _fw_params(args), _budget(args, 4096))
        value = rep.value
        report.update(shield_estimate=rep.shield_estimate, note=rep.note)
        conventions["estimator"] = rep.estimator
    else:
        raise ValidationError(f"unknown measure {name!r}")

    if isinstance(value, (bool, np.bool_)):
        report["value"] = bool(value)
    elif isinstance(value, float) and not math.isfinite(value):
        report["value"] = "inf"
    else:
        report["value"] = float(value)
    report["conventions"] = conventions
    _emit(_json_text(report), args.out)
    if args.out:
        sys.stdout.write(_json_text({"written": [args.out]}))
    return 0


# ---------------------------------------------------------------------------
# protocol


def _params_of(args, m: int) -> protocol.ProtocolParams:
    return protocol.ProtocolParams(
        d=args.d,
        m=m,
        kd_sigma=args.kd_sigma,
        eps=args.eps,
        delta=args.delta,
        delta_prime=args.delta_prime,
        log_dt=args.log_dt,
        p_bound=args.p_bound,
    )


_SWEEP_COLUMNS = [
    "m",
    "per_copy_rate",
    "lower_bound_bits",
    "p_B_bound",
    "type_entropy_term",
    "g1",
    "g2",
    "f",
    "t_min",
    "delta",
    "delta_clipped",
    "asymptote",
]


def cmd_protocol_rate(args) -> int:
    report = protocol.lemma1_lower_bound(_params_of(args, int(round(args.m))))
    obj = dataclasses.asdict(report)
    obj["below_asymptote"] = report.below_asymptote
    _emit(_json_text(obj), args.out)
    return 0


def cmd_protocol_sweep(args) -> int:
    ms = [int(round(x)) for x in _parse_grid(args.m_grid)]

    def row(m: int) -> list:
        r = protocol.lemma1_lower_bound(_params_of(args, m))
        return [
            m,
            r.per_copy_rate,
            r.lower_bound_bits,
            r.p_B_bound,
            r.type_entropy_term,
            r.g1,
            r.g2,
            r.f,
            r.t_min,
            r.delta,
            r.delta_clipped,
            r.asymptote,
        ]

    rows = _map_grid(row, ms)
    _emit(_table_text(_SWEEP_COLUMNS, rows, args.format), args.out)
    if args.plot:
        _render_plot(
            args.plot,
            [r[0] for r in rows],
            {"per_copy_rate": [r[1] for r in rows], "asymptote": [r[11] for r in rows]},
            "m",
            "one-way rate lower bound",
        )
    return 0


def _random_descriptor(d: int, m: int, rng: np.random.Generator) -> protocol.BlockStateDescriptor:
    shields = [sampling.random_density((2,), rng) for _ in range(d)]
    log_dt = float(rng.integers(0, 2))
    delta = float(rng.uniform(0.05, 0.6))
    return protocol.build_rho_m_prime(d, m, shields, (log_dt, 2**d), delta=delta)


def cmd_protocol_oracle(args) -> int:
    budget = _budget(args, 4096)
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    values = []
    for _ in range(args.count):
        desc = _random_descriptor(args.d, args.m, rng)
        rep = protocol.cdw_exact(desc, budget)
        worst = max(worst, rep.discrepancy)
        values.append(rep.value_formula)
    obj = {
        "d": args.d,
        "m": args.m,
        "descriptors": args.count,
        "max_discrepancy": worst,
        "values": values,
    }
    _emit(_json_text(obj), args.out)
    return 0


# ---------------------------------------------------------------------------
# bounds


def cmd_bounds_zd(args) -> int:
    z = bounds_mod.z_of_d(args.d)
    residual = abs(1.0 / 6.0 - 2.0 * measures.eta(z) / (3.0 * math.log2(args.d)) - z)
    _emit(_json_text({"bound": "zd", "d": args.d, "value": z, "residual": residual}), args.out)
    return 0


_CURVE_AXIS = {
    "zd": "d",
    "locc-z": "d",
    "sep-distance": "d_k",
    "sec6-eps": "m",
    "sec6-f": "eps",
}


def cmd_bounds_curve(args) -> int:
    grid = _parse_grid(args.grid)
    fn = {name: lambda x, n=name: bounds_mod.curve(n, [x]).values[0] for name in _CURVE_AXIS}
    if args.name not in fn:
        raise ValidationError(f"unknown bound {args.name!r}; known: {', '.join(sorted(_CURVE_AXIS))}")
    values = _map_grid(fn[args.name], grid)
    curve = bounds_mod.BoundCurve(args.name, tuple(grid), tuple(values))
    axis = _CURVE_AXIS[args.name]
    rows = [[g, v] for g, v in zip(curve.grid, curve.values)]
    _emit(_table_text([axis, args.name], rows, args.format), args.out)
    if args.plot:
        _render_plot(args.plot, list(curve.grid), {args.name: list(curve.values)}, axis, args.name)
    return 0


def cmd_bounds_sec6(args) -> int:
    eps = bounds_mod.sec6_epsilon(args.m)
    obj = {"m": args.m, "epsilon": eps}
    try:
        obj["f"] = bounds_mod.sec6_f(eps)
    except ValidationError as exc:
        obj["f"] = None
        obj["note"] = str(exc)
    _emit(_json_text(obj), args.out)
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--budget-dim", type=int, default=None, help=f"dense dimension cap (default {DEFAULT_DIM_BUDGET})")


def build_parser() -> _Parser:
    root = _Parser(prog="privstate", description=__doc__)
    nouns = root.add_subparsers(dest="noun", required=True)

    st = nouns.add_parser("state", help="construct and serialize states")
    st_verbs = st.add_subparsers(dest="verb", required=True)
    b = st_verbs.add_parser("build", help="build a named state and write it to JSON")
    b.add_argument("--kind", required=True, choices=STATE_KINDS)
    b.add_argument("--d", type=int, default=2, help="key dimension")
    b.add_argument("--theta", type=float, default=0.7)
    b.add_argument("--p", type=float, default=1.0 / 3.0)
    b.add_argument("--dtilde", type=int, default=4)
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--m", type=int, default=1)
    b.add_argument("--n-bobs", type=int, default=2)
    b.add_argument("--shield-dims", default="2,2", help="comma-separated shield factor dims")
    b.add_argument("--sigma", choices=("maxcorr", "uniform", "random"), default="maxcorr")
    b.add_argument("--n-alice-shield", type=int, default=-1)
    b.add_argument("--werner-kind", choices=("symmetric", "antisymmetric"), default="symmetric")
    b.add_argument("--random-twist", action="store_true", help="mpdit: Haar twisting instead of identity")
    _add_common(b)
    b.set_defaults(func=cmd_state_build)

    me = nouns.add_parser("measure", help="evaluate a measure on a state file")
    me_verbs = me.add_subparsers(dest="name", required=True)
    for name in MEASURES:
        mp = me_verbs.add_parser(name)
        mp.add_argument("state", help="state file path")
        mp.add_argument("--other", help="second state (relent, tracedist)")
        mp.add_argument("--estimator", choices=("fw", "trivial"), default="fw")
        mp.add_argument("--fw-max-iters", type=int, default=300)
        mp.add_argument("--fw-restarts", type=int, default=2)
        mp.add_argument("--fw-sweeps", type=int, default=12)
        _add_common(mp)
        mp.set_defaults(func=cmd_measure, name=name)

    pr = nouns.add_parser("protocol", help="rate bound evaluation and sweeps")
    pr_verbs = pr.add_subparsers(dest="verb", required=True)
    r = pr_verbs.add_parser("rate")
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--m", type=float, required=True)
    r.add_argument("--kd-sigma", type=float, required=True)
    r.add_argument("--eps", type=float, default=0.0)
    r.add_argument("--delta", type=float, default=None)
    r.add_argument("--delta-prime", type=float, default=None)
    r.add_argument("--log-dt", type=float, default=None)
    r.add_argument("--p-bound", type=float, default=None)
    _add_common(r)
    r.set_defaults(func=cmd_protocol_rate)

    s = pr_verbs.add_parser("sweep")
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--m-grid", required=True, help="e.g. 2^10..2^27 (doubling) or 16,32,64")
    s.add_argument("--kd-sigma", type=float, required=True)
    s.add_argument("--eps", type=float, default=0.0)
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--delta-prime", type=float, default=None)
    s.add_argument("--log-dt", type=float, default=None)
    s.add_argument("--p-bound", type=float, default=None)
    s.add_argument("--plot", help="also render a line plot (PNG/SVG by extension)")
    _add_common(s)
    s.set_defaults(func=cmd_protocol_sweep)

    o = pr_verbs.add_parser("oracle")
    o.add_argument("--d", type=int, default=2)
    o.add_argument("--m", type=int, default=3)
    o.add_argument("--count", type=int, default=5, help="randomized descriptors to check")
    _add_common(o)
    o.set_defaults(func=cmd_protocol_oracle)

    bo = nouns.add_parser("bounds", help="closed-form bound values and curves")
    bo_verbs = bo.add_subparsers(dest="verb", required=True)
    z = bo_verbs.add_parser("zd")
    z.add_argument("--d", type=float, required=True)
    _add_common(z)
    z.set_defaults(func=cmd_bounds_zd)

    c = bo_verbs.add_parser("curve")
    c.add_argument("--name", required=True, choices=tuple(sorted(_CURVE_AXIS)))
    c.add_argument("--grid", required=True)
    c.add_argument("--plot", help="also render a line plot")
    _add_common(c)
    c.set_defaults(func=cmd_bounds_curve)

    s6 = bo_verbs.add_parser("sec6")
    s6.add_argument("--m", type=int, required=True)
    _add_common(s6)
    s6.set_defaults(func=cmd_bounds_sec6)

    return root


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse help (0) or usage error (4)
        code = exc.code
        return code if isinstance(code, int) else 4
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValidationError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
