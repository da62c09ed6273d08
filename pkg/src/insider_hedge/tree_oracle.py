"""Exact finite-market laboratory: binomial tree with a finite-valued signal.

Everything the continuous model estimates by Monte Carlo is computed here
by enumeration, in rational arithmetic, so the change-of-measure
identities and the optimality of threshold success sets can be verified
exactly:

  * the insider measure density z/p per atom and its marginals,
  * independence of the horizon sigma-algebra and the signal under it,
  * the martingale property of z/p and of the price on the enlarged tree,
  * unit conditional mass of the tilted density D,
  * threshold optimality against brute-force enumeration of success sets,
  * the replicating holdings for any nonnegative horizon target.

Paths are tuples of moves (1 = up, 0 = down).  A market with `periods`
steps carries the signal on time-N paths and the payoff on time-T nodes,
T = hedge_horizon <= N.  Rational arithmetic is used up to 12 periods;
larger markets fall back to floats with 1e-12 tolerances.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

__all__ = [
    "TreeMarket",
    "TreeAtom",
    "AtomTable",
    "TheoremReport",
    "ExactHedge",
    "TreeStrategy",
    "build_atom_table",
    "verify_theorems",
    "perturb_atom",
    "conditional_law",
    "achievable_levels",
    "exact_quantile_hedge",
    "exhaustive_optimality_check",
    "exhaustive_epsilon_check",
    "replicate_on_tree",
    "knockout_target",
    "random_market",
    "reference_market",
    "market_to_text",
    "market_from_text",
]

EXACT_PERIOD_LIMIT = 12
ENUM_ATOM_LIMIT = 24
FLOAT_TOL = 1e-12

Path = tuple  # tuple of 0/1 moves


def _rat(x) -> Fraction:
    """Exact rational from int/Fraction/str; floats read via their decimal repr."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def _paths(length: int):
    return itertools.product((0, 1), repeat=length)


class TreeMarket:
    """Multi-period binomial market with advance information.

    Parameters
    ----------
    periods : total tree depth N.
    hedge_horizon : trading horizon T as a period index, 1 <= T <= N.
    u, d : up/down factors with 0 < d < 1 < u (zero rate, so the
        risk-neutral up probability q = (1-d)/(u-d) lies in (0,1)).
    p_up : physical up probability in (0,1).
    s0 : initial price (> 0).
    payoff : map {ups at horizon -> nonnegative value}.
    signal : map {terminal ups -> label} or {terminal path -> label};
        labels form the finite value set of the signal.

    Construction fails when some signal value has zero conditional
    probability at a node before the horizon: the theory requires the
    conditional law of the signal to stay equivalent to its prior, and
    the offending node is named in the error.
    """

    def __init__(self, periods: int, hedge_horizon: int, u, d, p_up, s0,
                 payoff: Mapping, signal: Mapping) -> None:
        if periods < 1:
            raise ValueError("periods must be >= 1")
        if not 1 <= hedge_horizon <= periods:
            raise ValueError(f"hedge_horizon must be in [1, {periods}]")
        self.periods = int(periods)
        self.hedge_horizon = int(hedge_horizon)
        self.u = _rat(u)
        self.d = _rat(d)
        self.p_up = _rat(p_up)
        self.s0 = _rat(s0)
        if not 0 < self.d < 1 < self.u:
            raise ValueError(f"need 0 < d < 1 < u, got d={self.d}, u={self.u}")
        if not 0 < self.p_up < 1:
            raise ValueError(f"p_up must be in (0,1), got {self.p_up}")
        if self.s0 <= 0:
            raise ValueError("s0 must be positive")

        self.payoff = {int(j): _rat(v) for j, v in payoff.items()}
        for j in range(self.hedge_horizon + 1):
            if j not in self.payoff:
                raise ValueError(f"payoff missing node with {j} ups at the horizon")
            if self.payoff[j] < 0:
                raise ValueError(f"payoff must be nonnegative, got {self.payoff[j]} at {j} ups")

        self.signal = self._normalize_signal(signal)
        self.signal_values = tuple(sorted(set(self.signal.values())))
        self._cond = self._conditional_signal_probs()
        self._check_equivalence()

    @property
    def q(self) -> Fraction:
        """Risk-neutral up probability (1-d)/(u-d)."""
        return (1 - self.d) / (self.u - self.d)

    def price(self, prefix: Path) -> Fraction:
        ups = sum(prefix)
        return self.s0 * self.u**ups * self.d ** (len(prefix) - ups)

    def prob(self, prefix: Path) -> Fraction:
        ups = sum(prefix)
        return self.p_up**ups * (1 - self.p_up) ** (len(prefix) - ups)

    def qf_prob(self, prefix: Path) -> Fraction:
        ups = sum(prefix)
        return self.q**ups * (1 - self.q) ** (len(prefix) - ups)

    def cond_signal_prob(self, prefix: Path, g) -> Fraction:
        """P(G = g | the first len(prefix) moves equal prefix)."""
        return self._cond[prefix].get(g, Fraction(0))

    def signal_prob(self, g) -> Fraction:
        return self.cond_signal_prob((), g)

    def _normalize_signal(self, signal: Mapping) -> dict:
        keys = list(signal.keys())
        if all(isinstance(k, int) for k in keys):
            by_ups = {int(k): v for k, v in signal.items()}
            missing = [j for j in range(self.periods + 1) if j not in by_ups]
            if missing:
                raise ValueError(f"signal missing terminal ups {missing}")
            return {path: by_ups[sum(path)] for path in _paths(self.periods)}
        out = {tuple(k): v for k, v in signal.items()}
        missing = [pth for pth in _paths(self.periods) if pth not in out]
        if missing:
            raise ValueError(f"signal missing terminal path {missing[0]}")
        return out

    def _conditional_signal_probs(self) -> dict:
        # backward recursion over prefixes: P(G=g | prefix)
        cond: dict = {path: {self.signal[path]: Fraction(1)} for path in _paths(self.periods)}
        for t in range(self.periods - 1, -1, -1):
            for prefix in _paths(t):
                up = cond[prefix + (1,)]
                down = cond[prefix + (0,)]
                merged: dict = {}
                for g, pr in up.items():
                    merged[g] = merged.get(g, Fraction(0)) + self.p_up * pr
                for g, pr in down.items():
                    merged[g] = merged.get(g, Fraction(0)) + (1 - self.p_up) * pr
                cond[prefix] = merged
        return cond

    def _check_equivalence(self) -> None:
        if len(self.signal_values) < 1:
            raise ValueError("signal must take at least one value")
        for t in range(self.hedge_horizon + 1):
            for prefix in _paths(t):
                for g in self.signal_values:
                    if self.cond_signal_prob(prefix, g) == 0:
                        word = "".join("u" if m else "d" for m in prefix) or "(root)"
                        raise ValueError(
                            f"signal value {g!r} unreachable from node {word} at time {t}: "
                            "conditional signal law not equivalent to the prior"
                        )


@dataclass(frozen=True)
class TreeAtom:
    """One (horizon node, signal value) atom with all exact densities."""

    prefix: Path
    g: object
    prob: Fraction          # P(prefix and G=g)
    z_f: Fraction           # risk-neutral density on the node
    p_g: Fraction           # signal density P(G=g|node)/P(G=g)
    qg_density: Fraction    # z_f / p_g
    h: Fraction             # payoff on the node
    d_star: Fraction        # h * qg_density / E_QG[H]


@dataclass(frozen=True)
class AtomTable:
    market: TreeMarket
    atoms: tuple
    e_qg_h: Fraction
    exact: bool

    def signal_prob(self, g):
        return sum((a.prob for a in self.atoms if a.g == g), start=_zero(self.exact))


def _zero(exact: bool):
    return Fraction(0) if exact else 0.0


def _cast(x, exact: bool):
    return x if exact else float(x)


def _eq(exact: bool):
    if exact:
        return lambda a, b: a == b
    return lambda a, b: abs(a - b) <= FLOAT_TOL


def build_atom_table(m: TreeMarket, exact: bool | None = None) -> AtomTable:
    """Exact per-atom densities for the market.

    z on a node with j ups in T steps is (q/p)^j ((1-q)/(1-p))^(T-j);
    the signal density is the conditional over the prior probability.
    Markets deeper than 12 periods are evaluated in floats.
    """
    if exact is None:
        exact = m.periods <= EXACT_PERIOD_LIMIT
    th = m.hedge_horizon
    q, p = _cast(m.q, exact), _cast(m.p_up, exact)
    e_qf_h = sum(
        _cast(m.qf_prob(prefix), exact) * _cast(m.payoff[sum(prefix)], exact)
        for prefix in _paths(th)
    )
    if e_qf_h <= 0:
        raise ValueError("payoff has zero risk-neutral expectation; D is undefined")
    atoms = []
    for prefix in _paths(th):
        ups = sum(prefix)
        z = (q / p) ** ups * ((1 - q) / (1 - p)) ** (th - ups)
        h = _cast(m.payoff[ups], exact)
        for g in m.signal_values:
            cond = _cast(m.cond_signal_prob(prefix, g), exact)
            prior = _cast(m.signal_prob(g), exact)
            p_g = cond / prior
            qg = z / p_g
            atoms.append(TreeAtom(
                prefix=prefix, g=g,
                prob=_cast(m.prob(prefix), exact) * cond,
                z_f=z, p_g=p_g, qg_density=qg, h=h,
                d_star=h * qg / e_qf_h,
            ))
    table = AtomTable(market=m, atoms=tuple(atoms), e_qg_h=e_qf_h, exact=exact)
    eq = _eq(exact)
    total_p = sum(a.prob for a in atoms)
    total_qg = sum(a.prob * a.qg_density for a in atoms)
    if not (eq(total_p, 1) and eq(total_qg, 1)):
        raise AssertionError(f"atom masses do not normalize: P={total_p}, Q_G={total_qg}")
    return table


@dataclass(frozen=True)
class TheoremReport:
    passed: bool
    n_checks: int
    failures: tuple


def verify_theorems(table: AtomTable) -> TheoremReport:
    """Machine-check the change-of-measure identities on the table.

    (a) horizon nodes and signal are independent under the insider measure;
    (b) its marginals are the risk-neutral law on nodes and the prior on
        signal values;
    (c) z/p is a martingale under P on the enlarged tree (all one-step
        conditional expectations up to the horizon);
    (d) the price is a martingale under the insider measure on the
        enlarged tree;
    (e) the tilted density D has unit conditional mass given each signal
        value.

    Checks are exact on rational tables and 1e-12 otherwise; the report
    lists every violated identity with the offending atom.
    """
    m = table.market
    exact = table.exact
    eq = _eq(exact)
    th = m.hedge_horizon
    q, p = _cast(m.q, exact), _cast(m.p_up, exact)
    failures = []
    n_checks = 0

    qg_mass = {(a.prefix, a.g): a.prob * a.qg_density for a in table.atoms}
    qg_node = {}
    qg_sig = {}
    for (prefix, g), w in qg_mass.items():
        qg_node[prefix] = qg_node.get(prefix, _zero(exact)) + w
        qg_sig[g] = qg_sig.get(g, _zero(exact)) + w

    # (a) product form of the insider measure on atoms
    for (prefix, g), w in qg_mass.items():
        n_checks += 1
        if not eq(w, qg_node[prefix] * qg_sig[g]):
            failures.append(f"(a) independence fails at atom ({prefix}, {g!r})")

    # (b) marginals
    for prefix in _paths(th):
        n_checks += 1
        if not eq(qg_node[prefix], _cast(m.qf_prob(prefix), exact)):
            failures.append(f"(b) node marginal differs from risk-neutral law at {prefix}")
    for g in m.signal_values:
        n_checks += 1
        if not eq(qg_sig[g], _cast(m.signal_prob(g), exact)):
            failures.append(f"(b) signal marginal differs from prior at {g!r}")

    # (c) z/p martingale under P on the enlarged tree
    def z_f(prefix):
        ups = sum(prefix)
        return (q / p) ** ups * ((1 - q) / (1 - p)) ** (len(prefix) - ups)

    def p_sig(prefix, g):
        return _cast(m.cond_signal_prob(prefix, g), exact) / _cast(m.signal_prob(g), exact)

    for t in range(th):
        for prefix in _paths(t):
            for g in m.signal_values:
                n_checks += 1
                cond_here = _cast(m.cond_signal_prob(prefix, g), exact)
                expect = _zero(exact)
                for move, pm in ((1, p), (0, 1 - p)):
                    nxt = prefix + (move,)
                    move_prob = pm * _cast(m.cond_signal_prob(nxt, g), exact) / cond_here
                    expect = expect + move_prob * z_f(nxt) / p_sig(nxt, g)
                if not eq(expect, z_f(prefix) / p_sig(prefix, g)):
                    failures.append(f"(c) z/p not a martingale at ({prefix}, {g!r})")

    # (d) price martingale under the insider measure on the enlarged tree
    qg_t: dict = dict(qg_mass)
    for t in range(th - 1, -1, -1):
        for prefix in _paths(t):
            for g in m.signal_values:
                qg_t[(prefix, g)] = qg_t[(prefix + (1,), g)] + qg_t[(prefix + (0,), g)]
    for t in range(th):
        for prefix in _paths(t):
            for g in m.signal_values:
                n_checks += 1
                mass = qg_t[(prefix, g)]
                expect = sum(
                    qg_t[(prefix + (mv,), g)] * _cast(m.price(prefix + (mv,)), exact)
                    for mv in (0, 1)
                ) / mass
                if not eq(expect, _cast(m.price(prefix), exact)):
                    failures.append(f"(d) price not a QG-martingale at ({prefix}, {g!r})")

    # (e) unit conditional mass of D
    for g in m.signal_values:
        n_checks += 1
        pg = sum(a.prob for a in table.atoms if a.g == g)
        mean_d = sum(a.prob * a.d_star for a in table.atoms if a.g == g) / pg
        if not eq(mean_d, 1):
            failures.append(f"(e) E[D | G={g!r}] = {mean_d} != 1")

    return TheoremReport(passed=not failures, n_checks=n_checks, failures=tuple(failures))


def perturb_atom(table: AtomTable, index: int = 0, rel=Fraction(1, 10**6)) -> AtomTable:
    """Negative control: one atom's insider density nudged by a factor 1+rel."""
    atoms = list(table.atoms)
    a = atoms[index]
    factor = (1 + rel) if table.exact else float(1 + rel)
    atoms[index] = TreeAtom(
        prefix=a.prefix, g=a.g, prob=a.prob, z_f=a.z_f, p_g=a.p_g,
        qg_density=a.qg_density * factor, h=a.h, d_star=a.d_star,
    )
    return AtomTable(market=table.market, atoms=tuple(atoms),
                     e_qg_h=table.e_qg_h, exact=table.exact)


# ---------------------------------------------------------------------------
# exact threshold solving and brute-force optimality
# ---------------------------------------------------------------------------

def conditional_law(table: AtomTable, g) -> list:
    """[(prefix, d_star, P(prefix | G=g))], sorted by d_star."""
    atoms = [a for a in table.atoms if a.g == g]
    if not atoms:
        raise ValueError(f"unknown signal value {g!r}")
    pg = sum(a.prob for a in atoms)
    law = [(a.prefix, a.d_star, a.prob / pg) for a in atoms]
    law.sort(key=lambda item: item[1])
    return law


def _threshold_candidates(law, exact: bool):
    """(k, P(D<=k), E[D 1{D<=k}]) at k = 0 and at each distinct value of D."""
    zero = _zero(exact)
    cands = [(zero, zero, zero)]
    cum_p, cum_cost = zero, zero
    for i, (_, d, pc) in enumerate(law):
        cum_p = cum_p + pc
        cum_cost = cum_cost + pc * d
        last_of_group = i + 1 == len(law) or law[i + 1][1] != d
        if last_of_group:
            if d == 0:
                cands[0] = (zero, cum_p, cum_cost)
            else:
                cands.append((d, cum_p, cum_cost))
    return cands


def achievable_levels(table: AtomTable, g):
    """Exactly attainable (success probability, capital fraction) pairs."""
    law = conditional_law(table, g)
    return [(cp, cc) for _, cp, cc in _threshold_candidates(law, table.exact)]


@dataclass(frozen=True)
class ExactHedge:
    """Threshold solution on the exact conditional law.

    `exact` is False when atoms of D prevent hitting the target level;
    the fields then hold the conservative attainable solution.
    """

    k: object
    alpha: object
    success_prob: object
    success_set: tuple
    exact: bool


def exact_quantile_hedge(table: AtomTable, g, *, epsilon=None, alpha=None) -> ExactHedge:
    """Solve either problem exactly on the conditional law of D given G=g.

    Pass Fractions for exact target comparisons on rational tables.
    """
    if (epsilon is None) == (alpha is None):
        raise ValueError("pass exactly one of epsilon= / alpha=")
    law = conditional_law(table, g)
    cands = _threshold_candidates(law, table.exact)
    if epsilon is not None:
        if not 0 <= epsilon <= 1:
            raise ValueError("epsilon must be in [0,1]")
        target = 1 - epsilon
        sel = next((c for c in cands if c[1] >= target), cands[-1])
    else:
        if not 0 <= alpha <= 1:
            raise ValueError("alpha must be in [0,1]")
        affordable = [c for c in cands if c[2] <= alpha]
        sel = affordable[-1] if affordable else cands[0]
    k, cum_p, cum_cost = sel
    hit = (cum_p == 1 - epsilon) if epsilon is not None else (cum_cost == alpha)
    success_set = tuple(prefix for prefix, d, _ in law if d <= k)
    return ExactHedge(k=k, alpha=cum_cost, success_prob=cum_p,
                      success_set=success_set, exact=bool(hit))


def _enumerate_sets(law):
    n = len(law)
    if n > ENUM_ATOM_LIMIT:
        raise ValueError(f"{n} conditional atoms exceed the enumeration bound {ENUM_ATOM_LIMIT}")
    for mask in range(1 << n):
        p_a = cost = 0
        for i in range(n):
            if mask >> i & 1:
                p_a += law[i][2]
                cost += law[i][2] * law[i][1]
        yield mask, p_a, cost


def exhaustive_optimality_check(table: AtomTable, g, alpha) -> bool:
    """Brute-force the budget problem: no success set beats the threshold set.

    Enumerates every subset of the conditional horizon atoms and checks
    that any set affordable at the budget has success probability at
    most the solver's.  Valid at achievable budget levels (the theorem's
    existence hypothesis); between levels non-threshold sets can win.
    """
    law = conditional_law(table, g)
    solver = exact_quantile_hedge(table, g, alpha=alpha)
    slack = 0 if table.exact else FLOAT_TOL
    return all(
        p_a <= solver.success_prob + slack
        for _, p_a, cost in _enumerate_sets(law)
        if cost <= alpha + slack
    )


def exhaustive_epsilon_check(table: AtomTable, g, epsilon) -> bool:
    """Brute-force the shortfall problem: no cheaper set meets the constraint.

    At achievable success levels 1-epsilon the solver's capital fraction
    must equal the enumerated minimum cost over all sets with success
    probability >= 1-epsilon.
    """
    law = conditional_law(table, g)
    solver = exact_quantile_hedge(table, g, epsilon=epsilon)
    slack = 0 if table.exact else FLOAT_TOL
    best = None
    for _, p_a, cost in _enumerate_sets(law):
        if p_a >= 1 - epsilon - slack and (best is None or cost < best):
            best = cost
    return best is not None and _eq(table.exact)(best, solver.alpha)


# ---------------------------------------------------------------------------
# replication on the enlarged tree
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TreeStrategy:
    """Self-financing replication: values and holdings per (node, signal).

    values[(prefix, g)] is the portfolio value, holdings[(prefix, g)]
    the stock position chosen at that node; initial_capital[g] is the
    time-0 value given the realized signal.
    """

    values: dict
    holdings: dict
    initial_capital: dict


def knockout_target(table: AtomTable, thresholds: Mapping) -> dict:
    """Target H * 1{D <= k(g)} for signal-dependent thresholds k(g)."""
    out = {}
    for a in table.atoms:
        if a.g not in thresholds:
            raise ValueError(f"no threshold supplied for signal value {a.g!r}")
        keep = a.d_star <= thresholds[a.g]
        out[(a.prefix, a.g)] = a.h if keep else _zero(table.exact)
    return out


def replicate_on_tree(m: TreeMarket, target: Mapping) -> TreeStrategy:
    """Backward-induction replication of a horizon target on the enlarged tree.

    `target` maps (horizon prefix, signal value) -> value; plain
    {prefix -> value} or {ups -> value} maps are broadcast over signal
    values.  Values must be nonnegative.  The returned strategy matches
    the target exactly, is self-financing along every edge and keeps a
    nonnegative value process.
    """
    th = m.hedge_horizon
    exact = m.periods <= EXACT_PERIOD_LIMIT
    tgt = _normalize_target(m, target, exact)
    if any(v < 0 for v in tgt.values()):
        raise ValueError("target must be nonnegative")

    # insider-measure mass of enlarged atoms, built from the horizon up
    mass = {}
    table = build_atom_table(m, exact=exact)
    for a in table.atoms:
        mass[(a.prefix, a.g)] = a.prob * a.qg_density
    for t in range(th - 1, -1, -1):
        for prefix in _paths(t):
            for g in m.signal_values:
                mass[(prefix, g)] = mass[(prefix + (1,), g)] + mass[(prefix + (0,), g)]

    values = dict(tgt)
    holdings = {}
    for t in range(th - 1, -1, -1):
        for prefix in _paths(t):
            s_here = _cast(m.price(prefix), exact)
            s_up = _cast(m.price(prefix + (1,)), exact)
            s_dn = _cast(m.price(prefix + (0,)), exact)
            for g in m.signal_values:
                v_up = values[(prefix + (1,), g)]
                v_dn = values[(prefix + (0,), g)]
                w_up = mass[(prefix + (1,), g)]
                w_dn = mass[(prefix + (0,), g)]
                v_here = (w_up * v_up + w_dn * v_dn) / (w_up + w_dn)
                xi = (v_up - v_dn) / (s_up - s_dn)
                # self-financing must hold along both edges
                for v_next, s_next in ((v_up, s_up), (v_dn, s_dn)):
                    gap = v_next - v_here - xi * (s_next - s_here)
                    if not _eq(exact)(gap, 0):
                        raise AssertionError(
                            f"self-financing violated at ({prefix}, {g!r}): gap {gap}"
                        )
                if v_here < 0:
                    raise AssertionError(f"negative value at ({prefix}, {g!r}): {v_here}")
                values[(prefix, g)] = v_here
                holdings[(prefix, g)] = xi
    initial = {g: values[((), g)] for g in m.signal_values}
    return TreeStrategy(values=values, holdings=holdings, initial_capital=initial)


def _normalize_target(m: TreeMarket, target: Mapping, exact: bool) -> dict:
    keys = list(target.keys())
    th = m.hedge_horizon
    if keys and all(isinstance(k, tuple) and len(k) == 2 and isinstance(k[0], tuple) for k in keys):
        out = {k: _cast(_rat(v) if exact else v, exact) for k, v in target.items()}
        for prefix in _paths(th):
            for g in m.signal_values:
                if (prefix, g) not in out:
                    raise ValueError(f"target missing atom ({prefix}, {g!r})")
        return out
    if keys and all(isinstance(k, int) for k in keys):
        by_node = {j: target[j] for j in target}
        expand = {prefix: by_node[sum(prefix)] for prefix in _paths(th)}
    else:
        expand = {tuple(k): v for k, v in target.items()}
        for prefix in _paths(th):
            if prefix not in expand:
                raise ValueError(f"target missing horizon node {prefix}")
    return {
        (prefix, g): _cast(_rat(v) if exact else v, exact)
        for prefix, v in expand.items()
        for g in m.signal_values
    }


# ---------------------------------------------------------------------------
# fixtures: serialization and random instances
# ---------------------------------------------------------------------------

def market_to_text(m: TreeMarket) -> str:
    """Human-readable fixture format: one line per parameter, one per atom."""
    lines = [
        f"periods = {m.periods}",
        f"hedge_horizon = {m.hedge_horizon}",
        f"u = {m.u}",
        f"d = {m.d}",
        f"p_up = {m.p_up}",
        f"s0 = {m.s0}",
    ]
    for j in sorted(m.payoff):
        lines.append(f"payoff {j} = {m.payoff[j]}")
    for path in _paths(m.periods):
        word = "".join("u" if mv else "d" for mv in path)
        lines.append(f"signal {word} = {m.signal[path]}")
    return "\n".join(lines) + "\n"


def market_from_text(text: str) -> TreeMarket:
    scalars: dict = {}
    payoff: dict = {}
    signal: dict = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key.startswith("payoff "):
            payoff[int(key.split()[1])] = Fraction(value)
        elif key.startswith("signal "):
            word = key.split()[1]
            path = tuple(1 if c == "u" else 0 for c in word)
            signal[path] = int(value)
        else:
            scalars[key] = value
    return TreeMarket(
        periods=int(scalars["periods"]),
        hedge_horizon=int(scalars["hedge_horizon"]),
        u=Fraction(scalars["u"]),
        d=Fraction(scalars["d"]),
        p_up=Fraction(scalars["p_up"]),
        s0=Fraction(scalars["s0"]),
        payoff=payoff,
        signal=signal,
    )


def random_market(seed: int) -> TreeMarket:
    """Seeded random instance for the verification suite.

    u in (1.1, 3) with d = 1/u, physical up probability in (0.2, 0.8),
    2-4 periods, horizon strictly inside, signal 1{terminal price in B}
    with B resampled until the equivalence condition holds, and a call
    payoff struck strictly inside the horizon price range.
    """
    rng = random.Random(seed)
    for _ in range(500):
        u = Fraction(rng.randint(111, 299), 100)
        d = 1 / u
        p_up = Fraction(rng.randint(21, 79), 100)
        n = rng.choice((2, 3, 4))
        th = rng.randint(1, n - 1)
        labels = {j: rng.randint(0, 1) for j in range(n + 1)}
        if len(set(labels.values())) < 2:
            continue
        prices = sorted({Fraction(u) ** (2 * j - th) for j in range(th + 1)})
        i = rng.randrange(len(prices) - 1)
        strike = (prices[i] + prices[i + 1]) / 2
        payoff = {j: max(u ** (2 * j - th) - strike, Fraction(0)) for j in range(th + 1)}
        try:
            return TreeMarket(
                periods=n, hedge_horizon=th, u=u, d=d, p_up=p_up, s0=1,
                payoff=payoff, signal=labels,
            )
        except ValueError:
            continue
    raise RuntimeError(f"no valid market found for seed {seed}")


def reference_market() -> TreeMarket:
    """Two-period market used as the worked example throughout the tests.

    u=2, d=1/2, p_up=3/5, s0=1, horizon 1, payoff (S_1 - 1)^+, signal
    1{S_2 = 1}.
    """
    return TreeMarket(
        periods=2, hedge_horizon=1, u=2, d=Fraction(1, 2), p_up=Fraction(3, 5), s0=1,
        payoff={0: 0, 1: 1},
        signal={0: 0, 1: 1, 2: 0},  # terminal ups -> 1{S_2 == 1}
    )
