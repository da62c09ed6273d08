"""Batch front end: table runs, single hedges, and the tree verification suite.

Subcommands
-----------
price            closed-form call price for the configured market
hedge            one signal, one epsilon or alpha target
table-point      capital-fraction table over point-signal levels x epsilons
                 (both conditioning modes are emitted side by side)
table-indicator  same table for interval-indicator signals (rejection sampling)
oracle           exact verification suite on the reference and random trees
version          print the package version

Configuration is a flat key/value text file (see DEFAULT_CONFIG_KEYS);
command-line flags override file keys, and the INSIDER_HEDGE_CONFIG
environment variable supplies a default config path.  Reruns with the
same config and seed write byte-identical output files regardless of
the worker count: all sampling uses block-deterministic streams and
cells are assembled in grid order.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

from . import __version__
from .insider_signal import (
    AcceptanceRateError,
    ConditioningMode,
    interval_signal_from_prices,
    point_signal_from_price,
)
from .measure_engine import build_batch
from .model_core import ModelParams, bs_call_price
from .np_solver import AtomGapWarning, HedgePlan, make_hedge_plan
from .rng import derive_seed
from .tree_oracle import (
    achievable_levels,
    build_atom_table,
    exact_quantile_hedge,
    exhaustive_epsilon_check,
    exhaustive_optimality_check,
    perturb_atom,
    random_market,
    reference_market,
    verify_theorems,
)

__all__ = [
    "RunConfig",
    "CellResult",
    "run_table_point",
    "run_table_indicator",
    "run_oracle_suite",
    "write_cells",
    "render_cells",
    "main",
]

ENV_CONFIG = "INSIDER_HEDGE_CONFIG"
CSV_HEADER = "signal,epsilon,alpha,alpha_stderr,success_prob,k,n_paths,mode,flags"

DEFAULT_LEVELS = tuple(float(x) for x in range(105, 116))
DEFAULT_INTERVALS = ((109.0, 111.0), (108.0, 112.0), (107.0, 113.0), (112.0, 114.0), (106.0, 108.0))
DEFAULT_EPSILONS = (0.01, 0.05, 0.10, 0.15, 0.20, 0.25)

DEFAULT_CONFIG_KEYS = (
    "mu", "sigma", "s0", "strike", "t_expiry", "delta",
    "signal.kind", "signal.levels", "signal.intervals",
    "epsilons", "mode", "n_paths", "seed", "output", "format",
)


@dataclass(frozen=True)
class RunConfig:
    """One table run: market, signal grid, epsilon grid, sampling budget."""

    model: ModelParams
    signal_kind: str = "point"
    levels: tuple = DEFAULT_LEVELS
    intervals: tuple = DEFAULT_INTERVALS
    epsilons: tuple = DEFAULT_EPSILONS
    mode: ConditioningMode = ConditioningMode.BRIDGE_EXACT
    n_paths: int = 1_000_000
    seed: int = 0
    output: str | None = None
    fmt: str = "csv"
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_paths < 1000:
            raise ValueError(f"n_paths must be >= 1000, got {self.n_paths}")
        if self.signal_kind not in ("point", "interval"):
            raise ValueError(f"signal_kind must be point or interval, got {self.signal_kind}")
        if self.signal_kind == "point" and not self.levels:
            raise ValueError("empty level grid")
        if self.signal_kind == "interval" and not self.intervals:
            raise ValueError("empty interval grid")
        if not self.epsilons:
            raise ValueError("empty epsilon grid")
        if any(not 0.0 <= e <= 1.0 for e in self.epsilons):
            raise ValueError("epsilons must lie in [0,1]")
        if self.fmt not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.fmt}")


@dataclass(frozen=True)
class CellResult:
    """One (signal, epsilon) cell of a table run."""

    signal: str
    epsilon: float
    alpha: float
    alpha_stderr: float
    success_prob: float
    k: float
    n_paths: int
    mode: str
    flags: str
    runtime_ms: float


def _plan_cell(batch, epsilon: float) -> tuple[HedgePlan, list[str]]:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", AtomGapWarning)
        plan = make_hedge_plan(batch, epsilon=epsilon)
    flags = ["atom_gap"] if any(issubclass(w.category, AtomGapWarning) for w in caught) else []
    if plan.alpha < 2.0 * plan.mc_stderr_alpha:
        flags.append("below_se_floor")
    return plan, flags


def _cell(descriptor: str, epsilon: float, plan: HedgePlan, flags: list[str],
          n_paths: int, mode: str, t0: float) -> CellResult:
    return CellResult(
        signal=descriptor,
        epsilon=epsilon,
        alpha=plan.alpha,
        alpha_stderr=plan.mc_stderr_alpha,
        success_prob=plan.success_prob,
        k=plan.k,
        n_paths=n_paths,
        mode=mode,
        flags="|".join(flags),
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


def run_table_point(config: RunConfig) -> list[CellResult]:
    """Point-signal table: one row per (level, epsilon, conditioning mode).

    Levels are stock prices of the post-expiry price, converted to
    Brownian space internally.  Both conditioning modes are computed
    from per-level derived seeds so their disagreement is visible in
    the output: cells where the two modes differ by more than 3
    combined standard errors carry the mode_disagree flag.
    """
    modes = (ConditioningMode.BRIDGE_EXACT, ConditioningMode.PAPER_SHIFT)
    cells: list[CellResult] = []
    for i_level, level in enumerate(config.levels):
        signal = point_signal_from_price(level, config.model)
        t0 = time.perf_counter()
        batches = {
            mode: build_batch(signal, mode, config.n_paths, config.model,
                              derive_seed(config.seed, i_level, j), workers=config.workers)
            for j, mode in enumerate(modes)
        }
        for epsilon in config.epsilons:
            pair = {}
            for mode in modes:
                plan, flags = _plan_cell(batches[mode], epsilon)
                pair[mode] = (plan, flags)
            b_plan, s_plan = pair[modes[0]][0], pair[modes[1]][0]
            gap = abs(b_plan.alpha - s_plan.alpha)
            band = 3.0 * math.hypot(b_plan.mc_stderr_alpha, s_plan.mc_stderr_alpha)
            for mode in modes:
                plan, flags = pair[mode]
                if gap > band:
                    flags = flags + ["mode_disagree"]
                cells.append(_cell(f"S={level:g}", epsilon, plan, flags,
                                   config.n_paths, mode.value, t0))
    return cells


def run_table_indicator(config: RunConfig) -> list[CellResult]:
    """Indicator-signal table: one row per (interval, epsilon), observed G=1.

    Intervals are stock-price ranges for the post-expiry price; each
    cell uses n_paths accepted rejection samples.  An interval whose
    conditioning event is too rare to sample yields NaN cells flagged
    acceptance_floor instead of aborting the run.
    """
    cells: list[CellResult] = []
    for i_sig, (lo, hi) in enumerate(config.intervals):
        signal = interval_signal_from_prices(lo, hi, config.model, observed=1)
        descriptor = f"S=[{lo:g}..{hi:g}]"
        t0 = time.perf_counter()
        try:
            batch = build_batch(signal, None, config.n_paths, config.model,
                                derive_seed(config.seed, i_sig), workers=config.workers)
        except AcceptanceRateError:
            nan = float("nan")
            for epsilon in config.epsilons:
                cells.append(CellResult(
                    signal=descriptor, epsilon=epsilon, alpha=nan, alpha_stderr=nan,
                    success_prob=nan, k=nan, n_paths=config.n_paths, mode="rejection",
                    flags="acceptance_floor",
                    runtime_ms=(time.perf_counter() - t0) * 1e3,
                ))
            continue
        for epsilon in config.epsilons:
            plan, flags = _plan_cell(batch, epsilon)
            cells.append(_cell(descriptor, epsilon, plan, flags,
                               config.n_paths, "rejection", t0))
    return cells


# ---------------------------------------------------------------------------
# tree verification suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OracleReport:
    passed: bool
    lines: tuple


def _check_instance(name: str, market) -> tuple[bool, str]:
    table = build_atom_table(market)
    report = verify_theorems(table)
    if not report.passed:
        return False, f"{name}: FAIL {report.failures[0]}"
    n_levels = 0
    for g in market.signal_values:
        for success_prob, budget in achievable_levels(table, g):
            n_levels += 1
            if not exhaustive_optimality_check(table, g, budget):
                return False, f"{name}: FAIL budget optimality at g={g!r}, alpha={budget}"
            if not exhaustive_epsilon_check(table, g, 1 - success_prob):
                return False, f"{name}: FAIL shortfall optimality at g={g!r}, 1-eps={success_prob}"
    return True, f"{name}: ok ({report.n_checks} identities, {n_levels} exhaustive levels)"


def run_oracle_suite(seed: int, instance_count: int) -> OracleReport:
    """Reference market, negative control, and seeded random instances.

    Passes only when every identity holds exactly, every achievable
    level is solved optimally (verified by subset enumeration), the
    known threshold non-existence case is flagged rather than
    mis-solved, and the deliberately corrupted table is rejected.
    """
    if instance_count < 1:
        raise ValueError("instance_count must be >= 1")
    lines: list[str] = []
    passed = True

    ref = reference_market()
    ok, line = _check_instance("reference", ref)
    passed &= ok
    lines.append(line)

    table = build_atom_table(ref)
    flagged = exact_quantile_hedge(table, 1, epsilon=Fraction(1, 4))
    if flagged.exact:
        passed = False
        lines.append("reference: FAIL epsilon=1/4 should have no exact threshold")
    else:
        lines.append("reference: non-existence case flagged (epsilon=1/4, conservative "
                     f"success={flagged.success_prob})")

    mutated = perturb_atom(table, index=0)
    if verify_theorems(mutated).passed:
        passed = False
        lines.append("negative-control: FAIL mutation not detected")
    else:
        lines.append("negative-control: mutation detected")

    for i in range(instance_count):
        ok, line = _check_instance(f"instance {i:03d}", random_market(seed + i))
        passed &= ok
        lines.append(line)

    lines.append(f"oracle suite: {'PASS' if passed else 'FAIL'} "
                 f"({instance_count} random instances)")
    return OracleReport(passed=passed, lines=tuple(lines))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _fmt_num(x: float) -> str:
    return f"{x:.6g}"


def _json_num(x: float):
    if not math.isfinite(x):
        return "inf" if math.isinf(x) else "nan"
    return float(f"{x:.6g}")


def write_cells(cells: list[CellResult], path: str, fmt: str) -> None:
    """CSV or JSON table; runtime_ms is deliberately not serialized."""
    if fmt == "csv":
        lines = [CSV_HEADER]
        for c in cells:
            lines.append(",".join([
                c.signal, _fmt_num(c.epsilon), _fmt_num(c.alpha), _fmt_num(c.alpha_stderr),
                _fmt_num(c.success_prob), _fmt_num(c.k), str(c.n_paths), c.mode, c.flags,
            ]))
        text = "\n".join(lines) + "\n"
    else:
        rows = [{
            "signal": c.signal,
            "epsilon": _json_num(c.epsilon),
            "alpha": _json_num(c.alpha),
            "alpha_stderr": _json_num(c.alpha_stderr),
            "success_prob": _json_num(c.success_prob),
            "k": _json_num(c.k),
            "n_paths": c.n_paths,
            "mode": c.mode,
            "flags": c.flags,
        } for c in cells]
        text = json.dumps(rows, indent=2, allow_nan=False) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def render_cells(cells: list[CellResult]) -> str:
    """Aligned human-readable table.

    Cells whose alpha sits below twice its standard error are printed
    with the "<" sentinel (mirroring the source tables' "<0.01" style);
    the machine outputs always keep the numeric value plus a flag.
    """
    header = f"{'signal':>16} {'eps':>5} {'mode':>13} {'alpha':>10} {'stderr':>9} {'success':>8} flags"
    lines = [header]
    for c in cells:
        if c.alpha < 2.0 * c.alpha_stderr:
            alpha_txt = f"<{2.0 * c.alpha_stderr:.2g}"
        else:
            alpha_txt = f"{c.alpha:.4f}"
        lines.append(
            f"{c.signal:>16} {c.epsilon:>5.2f} {c.mode:>13} {alpha_txt:>10} "
            f"{c.alpha_stderr:>9.2g} {c.success_prob:>8.4f} {c.flags}"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# configuration plumbing
# ---------------------------------------------------------------------------

def parse_config_file(path: str) -> dict:
    """Flat key/value config; '#' starts a comment, '=' separates."""
    options: dict = {}
    with open(path, encoding="utf-8") as fh:
        for i, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{i}: expected 'key = value', got {raw!r}")
            options[key.strip()] = value.strip()
    unknown = set(options) - set(DEFAULT_CONFIG_KEYS)
    if unknown:
        raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
    return options


def _parse_floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.replace(";", ",").split(",") if tok.strip())


def _parse_intervals(text: str) -> tuple:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        lo, sep, hi = tok.partition(":")
        if not sep:
            raise ValueError(f"interval {tok!r} must look like LO:HI")
        out.append((float(lo), float(hi)))
    return tuple(out)


def build_config(args: argparse.Namespace) -> RunConfig:
    """File options first, command-line flags override."""
    path = args.config or os.environ.get(ENV_CONFIG)
    opts = parse_config_file(path) if path else {}

    def pick(flag, key, cast, fallback):
        if flag is not None:
            return flag
        if key in opts:
            return cast(opts[key])
        return fallback

    model = ModelParams(
        mu=pick(args.mu, "mu", float, 0.08),
        sigma=pick(args.sigma, "sigma", float, 0.25),
        s0=pick(args.s0, "s0", float, 100.0),
        strike=pick(args.strike, "strike", float, 110.0),
        t_expiry=pick(args.t_expiry, "t_expiry", float, 0.25),
        delta=pick(args.delta, "delta", float, 0.02),
    )
    return RunConfig(
        model=model,
        signal_kind=pick(getattr(args, "signal_kind", None), "signal.kind", str, "point"),
        levels=pick(getattr(args, "levels", None), "signal.levels", _parse_floats, DEFAULT_LEVELS),
        intervals=pick(getattr(args, "intervals", None), "signal.intervals",
                       _parse_intervals, DEFAULT_INTERVALS),
        epsilons=pick(getattr(args, "epsilons", None), "epsilons", _parse_floats,
                      DEFAULT_EPSILONS),
        mode=ConditioningMode(pick(getattr(args, "mode", None), "mode", str, "bridge_exact")),
        n_paths=pick(getattr(args, "n_paths", None), "n_paths", int, 1_000_000),
        seed=pick(args.seed, "seed", int, 0),
        output=pick(getattr(args, "output", None), "output", str, None),
        fmt=pick(getattr(args, "fmt", None), "format", str, "csv"),
        workers=args.workers if getattr(args, "workers", None) else 1,
    )


def _add_model_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="config file path (default: $INSIDER_HEDGE_CONFIG)")
    sub.add_argument("--mu", type=float)
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--s0", type=float)
    sub.add_argument("--strike", type=float)
    sub.add_argument("--t-expiry", dest="t_expiry", type=float)
    sub.add_argument("--delta", type=float)
    sub.add_argument("--seed", type=int)


def _add_run_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--epsilons", type=_parse_floats)
    sub.add_argument("--n-paths", dest="n_paths", type=int)
    sub.add_argument("--output", help="write the table here (csv or json)")
    sub.add_argument("--format", dest="fmt", choices=("csv", "json"))
    sub.add_argument("--workers", type=int, default=1)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="insider-hedge",
        description="Quantile hedging with advance information: tables, single "
                    "hedges and the exact tree verification suite.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p_price = commands.add_parser("price", help="closed-form call price")
    _add_model_flags(p_price)

    p_hedge = commands.add_parser("hedge", help="solve one signal for one target")
    _add_model_flags(p_hedge)
    _add_run_flags(p_hedge)
    p_hedge.add_argument("--level", type=float, help="point signal: stock level of S_{T+delta}")
    p_hedge.add_argument("--interval", type=str,
                         help="indicator signal: stock interval LO:HI for S_{T+delta}")
    p_hedge.add_argument("--observed", type=int, default=1, choices=(0, 1))
    p_hedge.add_argument("--mode", choices=[m.value for m in ConditioningMode])
    p_hedge.add_argument("--epsilon", type=float)
    p_hedge.add_argument("--alpha", type=float)

    p_tp = commands.add_parser("table-point", help="point-signal table, both modes")
    _add_model_flags(p_tp)
    _add_run_flags(p_tp)
    p_tp.add_argument("--levels", type=_parse_floats)

    p_ti = commands.add_parser("table-indicator", help="interval-signal table")
    _add_model_flags(p_ti)
    _add_run_flags(p_ti)
    p_ti.add_argument("--intervals", type=_parse_intervals)

    p_or = commands.add_parser("oracle", help="exact tree verification suite")
    p_or.add_argument("--seed", type=int, default=0)
    p_or.add_argument("--instances", type=int, default=100)

    commands.add_parser("version", help="print the package version")

    args = parser.parse_args(argv)

    if args.command == "version":
        print(__version__)
        return 0

    if args.command == "oracle":
        report = run_oracle_suite(args.seed, args.instances)
        print("\n".join(report.lines))
        return 0 if report.passed else 1

    if args.command == "price":
        config = build_config(args)
        print(_fmt_num(bs_call_price(config.model)))
        return 0

    if args.command == "hedge":
        config = build_config(args)
        if (args.level is None) == (args.interval is None):
            parser.error("pass exactly one of --level / --interval")
        if (args.epsilon is None) == (args.alpha is None):
            parser.error("pass exactly one of --epsilon / --alpha")
        if args.level is not None:
            signal = point_signal_from_price(args.level, config.model)
            mode = config.mode
        else:
            lo, _, hi = args.interval.partition(":")
            signal = interval_signal_from_prices(float(lo), float(hi), config.model,
                                                 observed=args.observed)
            mode = None
        try:
            batch = build_batch(signal, mode, config.n_paths, config.model,
                                config.seed, workers=config.workers)
        except AcceptanceRateError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        plan = make_hedge_plan(batch, epsilon=args.epsilon, alpha=args.alpha)
        for name in ("k", "alpha", "success_prob", "initial_capital",
                     "mc_stderr_alpha", "mc_stderr_success"):
            print(f"{name} = {_fmt_num(getattr(plan, name))}")
        print(f"knockout_payoff = {plan.knockout_payoff}")
        print(f"signal = {signal.describe()}")
        print(f"mode = {mode.value if mode else 'rejection'}")
        return 0

    config = build_config(args)
    if args.command == "table-point":
        cells = run_table_point(config)
    else:
        cells = run_table_indicator(replace(config, signal_kind="interval"))
    if config.output:
        write_cells(cells, config.output, config.fmt)
        print(f"wrote {len(cells)} cells to {config.output}", file=sys.stderr)
    print(render_cells(cells))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
