"""Command-line entry point.

Subcommands:
  guess   play the observe-then-majority guesser against a random-function
          model for each epsilon and grade the two probability bounds
  sweep   same engine over a descending epsilon list, emphasizing the
          convergence of the expected payoff toward 1
  ctmp    build the guaranteeing response to a mixed opponent in the
          discounted matching-pennies game and grade gamma > 1 - eps
  verify  run the library's invariant suites (oracle comparisons, delay
          property, information flow, constant-sum, seed independence)

Exit codes: 0 all bounds hold, 1 a bound or suite failed, 2 usage or
configuration error, 3 malformed spec file.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from .catalog import aqua_catalog, bard_catalog, mixed_from_json, strategy_from_json
from .engine import (
    AQUA,
    BARD,
    MixedStrategy,
    check_nonanticipativity,
    construct_play,
    construct_play_seeded,
    default_truncation,
    expected_payoff,
    random_control,
    truncated_mp_payoffs,
)
from .errors import ConfigError, SpecParseError, UsageError
from .bestresponse import verify_guarantee
from .guessing import (
    alpha_epsilon_factory,
    apply_alpha_epsilon,
    build_schedule,
    cheating_factory,
    enforce_information_flow,
    run_guessing_game,
)
from .randomfn import (
    RandomFunctionModel,
    generate_constant_sections,
    generate_dyadic_uniform,
    generate_piecewise,
    n_star,
)
from .rational import frac_str, to_frac
from .reports import ExperimentReport, StopWatch, finalize_meta, write_report
from .stepfn import StepFunction, agreement_measure, discounted_integral
from . import plots


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctgames",
        description="exact verification of two continuous-time guessing games")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model_help):
        p.add_argument("--model", required=False, help=model_help)
        p.add_argument("--eps", default="", metavar="LIST",
                       help="comma-separated rationals in (0, 1/2), e.g. 1/5,0.1")
        p.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed")
        p.add_argument("--mode", choices=("exact", "mc"), default="exact")
        p.add_argument("--samples", type=int, default=None,
                       help="sample count for mc mode / verify suites")
        p.add_argument("--out", default="reports", help="output directory")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both")
        p.add_argument("--no-plot", action="store_true",
                       help="skip figure rendering")

    p = sub.add_parser("guess", help="grade the guessing-game bounds")
    common(p, "model spec file or builtin:<name>")

    p = sub.add_parser("sweep", help="epsilon sweep toward value 1")
    common(p, "model spec file or builtin:<name>")

    p = sub.add_parser("ctmp", help="guaranteeing response in matching pennies")
    common(p, "opponent mixed-strategy file or builtin:<catalog-name>[@bard]")
    p.add_argument("--r", type=float, default=1.0, help="discount rate > 0")
    p.add_argument("--strategy", default=None,
                   help="evaluate this strategy spec instead of building one")

    p = sub.add_parser("verify", help="run the invariant suites")
    common(p, "unused for verify")
    p.add_argument("--inject-cheater", action="store_true",
                   help="run the planted look-ahead responder as if honest "
                        "(demonstrates the failing path)")
    return parser


# -- config plumbing ---------------------------------------------------------------


def parse_eps_list(text: str) -> list[Fraction]:
    if not text.strip():
        raise UsageError("--eps requires at least one value")
    values = []
    for token in text.split(","):
        eps = to_frac(token.strip())
        if not 0 < eps < Fraction(1, 2):
            raise UsageError(f"eps must lie in (0, 1/2), got {token.strip()}")
        values.append(eps)
    deduped = list(dict.fromkeys(values))
    if len(deduped) < len(values):
        print("warning: duplicate eps values deduplicated", file=sys.stderr)
    return deduped


def check_seed(seed: int) -> int:
    if not 0 <= seed < 2**64:
        raise UsageError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _read_spec(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"spec file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise SpecParseError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_model(spec: str | None, seed: int) -> RandomFunctionModel:
    """A random-function model from a builtin name or a JSON file."""
    if not spec:
        raise UsageError("--model is required")
    if spec.startswith("builtin:"):
        name = spec[len("builtin:"):]
        if name.startswith("dyadic-uniform-"):
            level = int(name.rsplit("-", 1)[1])
            return generate_dyadic_uniform(level, seed=seed)
        if name == "piecewise":
            return generate_piecewise(max_pieces=4, atom_count=20, seed=seed)
        if name == "constant-sections":
            return generate_constant_sections()
        raise ConfigError(f"unknown builtin model {name!r}")
    return RandomFunctionModel.from_json(_read_spec(spec))


def load_opponent(spec: str | None) -> MixedStrategy:
    """A mixed strategy from a catalog name or a JSON file."""
    if not spec:
        raise UsageError("--model is required")
    if spec.startswith("builtin:"):
        name = spec[len("builtin:"):]
        seat = AQUA
        if "@" in name:
            name, seat = name.split("@", 1)
        catalog = aqua_catalog() if seat == AQUA else bard_catalog()
        if seat not in (AQUA, BARD):
            raise ConfigError(f"unknown seat {seat!r} in {spec!r}")
        if name not in catalog:
            raise ConfigError(
                f"unknown builtin opponent {name!r}; known: {', '.join(sorted(catalog))}")
        return catalog[name]
    return mixed_from_json(_read_spec(spec))


def _config_echo(args, **extra) -> dict:
    echo = {
        "model": args.model,
        "eps": [frac_str(e) for e in extra.pop("eps", [])],
        "seed": args.seed,
        "mode": args.mode,
        "samples": args.samples,
        "format": args.format,
        "plot": not args.no_plot,
    }
    echo.update(extra)
    return echo


# -- guess / sweep -----------------------------------------------------------------


def _mc_guess_row(model: RandomFunctionModel, eps: Fraction, seed: int,
                  samples: int) -> dict:
    """Seeded atom sampling; agreements stay exact, aggregates are estimates."""
    rng = random.Random(seed)
    schedule = build_schedule(n_star(model, eps), eps)
    weights = [float(p) for p, _ in model.atoms]
    draws = rng.choices(range(len(model.atoms)), weights=weights, k=samples)
    agreements = []
    for i in draws:
        section = model.atoms[i][1]
        agreements.append(agreement_measure(section, apply_alpha_epsilon(section, schedule)))
    floor = 1 - 2 * eps
    payoff = sum(agreements, Fraction(0)) / samples
    good = Fraction(sum(1 for a in agreements if a >= floor), samples)
    fs = [float(a) for a in agreements]
    mean = sum(fs) / samples
    sd = math.sqrt(sum((x - mean) ** 2 for x in fs) / max(samples - 1, 1))
    gf = float(good)
    return {
        "eps": frac_str(eps),
        "n_star": schedule.n_star,
        "prob_good": frac_str(good),
        "expected_payoff": frac_str(payoff),
        "ci95_expected_payoff": 1.96 * sd / math.sqrt(samples),
        "ci95_prob_good": 1.96 * math.sqrt(gf * (1 - gf) / samples),
        "samples": samples,
    }


def cmd_guess(args) -> ExperimentReport:
    eps_list = parse_eps_list(args.eps)
    model = load_model(args.model, check_seed(args.seed))
    results = []
    bounds = []
    for eps in eps_list:
        if args.mode == "mc":
            samples = args.samples or 200
            results.append(_mc_guess_row(model, eps, args.seed, samples))
            continue  # estimates carry confidence radii, not bound verdicts
        rep = run_guessing_game(model, eps)
        row = rep.to_json()
        row["agreement_bound_holds"] = rep.agreement_bound_holds
        row["payoff_bound_holds"] = rep.payoff_bound_holds
        results.append(row)
        bounds.append({"name": f"prob-good@eps={frac_str(eps)}",
                       "holds": rep.agreement_bound_holds})
        bounds.append({"name": f"payoff>=1-3eps@eps={frac_str(eps)}",
                       "holds": rep.payoff_bound_holds})
    return ExperimentReport("guess", _config_echo(args, eps=eps_list),
                            results, bounds)


def cmd_sweep(args) -> ExperimentReport:
    eps_list = parse_eps_list(args.eps)
    if len(eps_list) < 3:
        raise UsageError("sweep needs at least 3 eps values")
    model = load_model(args.model, check_seed(args.seed))
    family = model.label or "model"
    results = []
    bounds = []
    payoffs = {}
    for eps in eps_list:
        rep = run_guessing_game(model, eps)
        results.append({
            "family": family,
            "eps": frac_str(eps),
            "expected_payoff": frac_str(rep.expected_payoff),
            "one_minus_3eps": frac_str(1 - 3 * eps),
            "holds": rep.payoff_bound_holds,
        })
        payoffs[eps] = rep.expected_payoff
        bounds.append({"name": f"payoff>=1-3eps@eps={frac_str(eps)}",
                       "holds": rep.payoff_bound_holds})
    ordered = sorted(payoffs)  # ascending eps
    increasing = all(payoffs[a] > payoffs[b]
                     for a, b in zip(ordered, ordered[1:]))
    bounds.append({"name": "payoff_increases_as_eps_decreases",
                   "holds": increasing})
    return ExperimentReport("sweep", _config_echo(args, eps=eps_list),
                            results, bounds)


# -- ctmp --------------------------------------------------------------------------


def _mc_ctmp_row(opponent: MixedStrategy, report_row: dict, strategy, plan,
                 r: float, seed: int, samples: int) -> dict:
    """Opponent-atom resampling around the already-built response."""
    rng = random.Random(seed)
    seat = report_row["seat"]
    t_trunc = max(default_truncation(r), plan.horizon + 1)
    weights = [float(p) for p, _ in opponent.atoms]
    draws = rng.choices(range(len(opponent.atoms)), weights=weights, k=samples)
    payoffs = []
    for i in draws:
        atom = opponent.atoms[i][1]
        if opponent.player == AQUA:
            play = construct_play(atom, strategy, t_trunc)
        else:
            play = construct_play(strategy, atom, t_trunc)
        pay_a, pay_b = truncated_mp_payoffs(play, r, t_trunc)
        payoffs.append(pay_b if seat == BARD else pay_a)
    mean = sum(payoffs) / samples
    sd = math.sqrt(sum((x - mean) ** 2 for x in payoffs) / max(samples - 1, 1))
    row = dict(report_row)
    row["gamma_mc"] = mean
    row["ci95_gamma"] = 1.96 * sd / math.sqrt(samples)
    row["samples"] = samples
    return row


def _evaluate_fixed_strategy(opponent: MixedStrategy, spec_path: str, eps_list,
                             r: float) -> tuple[list[dict], list[dict]]:
    strategy = strategy_from_json(_read_spec(spec_path))
    seat = BARD if opponent.player == AQUA else AQUA
    mine = MixedStrategy.pure(seat, strategy)
    if seat == BARD:
        summary = expected_payoff(opponent, mine, r)
        gamma = summary.gamma_bard
    else:
        summary = expected_payoff(mine, opponent, r)
        gamma = summary.gamma_aqua
    results, bounds = [], []
    for eps in eps_list:
        bound = 1.0 - float(eps)
        results.append({
            "seat": seat, "eps_target": frac_str(eps), "r": r,
            "gamma": gamma, "bound": bound, "passed": gamma > bound,
            "margin": gamma - bound,
            "tail_bound": summary.tail_bound,
            "strategy": strategy.name,
        })
        bounds.append({"name": f"gamma>1-eps@eps={frac_str(eps)}",
                       "holds": gamma > bound})
    return results, bounds


def cmd_ctmp(args) -> ExperimentReport:
    eps_list = parse_eps_list(args.eps)
    if args.r <= 0:
        raise UsageError(f"discount rate must be positive, got {args.r}")
    check_seed(args.seed)
    opponent = load_opponent(args.model)
    echo = _config_echo(args, eps=eps_list, r=args.r, strategy=args.strategy)
    if args.strategy:
        results, bounds = _evaluate_fixed_strategy(
            opponent, args.strategy, eps_list, args.r)
        return ExperimentReport("ctmp", echo, results, bounds)
    results, bounds = [], []
    for eps in eps_list:
        rep = verify_guarantee(opponent, eps, args.r)
        row = rep.to_json()
        if args.mode == "mc":
            row = _mc_ctmp_row(opponent, row, rep.strategy, rep.plan, args.r,
                               args.seed, args.samples or 100)
        results.append(row)
        bounds.append({"name": f"gamma>1-eps@eps={frac_str(eps)}",
                       "holds": rep.passed})
    return ExperimentReport("ctmp", echo, results, bounds)


# -- verify ------------------------------------------------------------------------


def _riemann_agreement(f: StepFunction, g: StepFunction, points: int) -> float:
    import numpy as np
    end = float(f.domain_end)
    ts = (np.arange(points) + 0.5) * (end / points)
    fb = np.array([float(b) for b in f.breakpoints])
    gb = np.array([float(b) for b in g.breakpoints])
    fv = np.array(f.values)
    gv = np.array(g.values)
    same = fv[np.searchsorted(fb, ts, side="right") - 1] == \
        gv[np.searchsorted(gb, ts, side="right") - 1]
    return float(same.mean()) * end


def _random_step(rng: random.Random) -> StepFunction:
    cuts = sorted({Fraction(rng.randint(1, 63), 64)
                   for _ in range(rng.randint(0, 6))})
    pieces = [(Fraction(0), rng.choice("ab"))]
    pieces += [(c, rng.choice("ab")) for c in cuts]
    return StepFunction.from_pieces(pieces, Fraction(1))


def _random_pair(rng: random.Random) -> tuple[StepFunction, StepFunction]:
    return _random_step(rng), _random_step(rng)


def _suite_oracle_agreement(rng, pairs: int) -> dict:
    worst = 0.0
    for _ in range(pairs):
        f, g = _random_pair(rng)
        exact = float(agreement_measure(f, g))
        approx = _riemann_agreement(f, g, 100_000)
        worst = max(worst, abs(exact - approx))
    return {"name": "oracle-agreement", "holds": worst <= 2e-3,
            "detail": f"{pairs} pairs, worst |exact - riemann| = {worst:.2e}"}


def _float_value(f: StepFunction, breaks: list[float], t: float) -> str:
    # breaks[i] is the start of piece i, so the piece index is one left
    from bisect import bisect_right
    return f.values[max(bisect_right(breaks, t) - 1, 0)]


def _suite_oracle_discounted(rng, instances: int) -> dict:
    from scipy.integrate import quad
    worst = 0.0
    for _ in range(instances):
        f, g = _random_pair(rng)
        r = rng.choice((0.25, 1.0, 4.0))
        exact = discounted_integral(f, r, lambda a, b: a == b, g=g)
        fb = [float(b) for b in f.breakpoints]
        gb = [float(b) for b in g.breakpoints]
        val, _err = quad(
            lambda t: r * math.exp(-r * t)
            * (_float_value(f, fb, t) == _float_value(g, gb, t)),
            0.0, 1.0, points=sorted(set(fb + gb)), limit=200)
        worst = max(worst, abs(exact - val))
    return {"name": "oracle-discounted", "holds": worst <= 1e-9,
            "detail": f"{instances} instances, worst defect = {worst:.2e}"}


def _suite_nonanticipativity(seed: int, samples: int) -> dict:
    failures = []
    for name, mixed in aqua_catalog().items():
        for idx, (_, strat) in enumerate(mixed.atoms):
            ok, witness = check_nonanticipativity(strat, samples=samples, seed=seed)
            if not ok:
                failures.append(f"{name}[{idx}] round {witness.round}")
    return {"name": "nonanticipativity", "holds": not failures,
            "detail": f"catalog x {samples} samples; failures: {failures or 'none'}"}


def _suite_information_flow(inject_cheater: bool) -> dict:
    model = generate_dyadic_uniform(2, subsample=16)
    eps = Fraction(1, 5)
    honest_ok, _ = enforce_information_flow(alpha_epsilon_factory, model, eps)
    cheater_ok, witness = enforce_information_flow(cheating_factory, model, eps)
    if inject_cheater:
        # the planted fixture is run as if honest: the suite must fail
        return {"name": "information-flow", "holds": honest_ok and cheater_ok,
                "detail": "injected cheater treated as honest"}
    detected = not cheater_ok and witness is not None
    return {"name": "information-flow", "holds": honest_ok and detected,
            "detail": f"honest pass: {honest_ok}; cheater detected: {detected}"}


def _suite_constant_sum(r: float = 1.0) -> dict:
    aquas = aqua_catalog()
    bards = bard_catalog()
    worst = 0.0
    for a_name in ("pure-constant", "two-constant-mixture", "alternating-segment"):
        for b_name in ("delayed-copier", "two-constant-mixture"):
            summary = expected_payoff(aquas[a_name], bards[b_name], r)
            worst = max(worst, summary.constant_sum_defect)
    return {"name": "constant-sum", "holds": worst <= 1e-9,
            "detail": f"worst |gamma_a + gamma_b - 1| = {worst:.2e}"}


def _suite_seed_independence(seed: int, seeds: int) -> dict:
    aquas = aqua_catalog()
    s_aqua = aquas["alternating-segment"].atoms[0][1]
    s_bard = bard_catalog()["delayed-copier"].atoms[0][1]
    horizon = Fraction(3)
    reference = construct_play(s_aqua, s_bard, horizon)
    rng = random.Random(seed)
    mismatches = 0
    for _ in range(seeds):
        seed_a = random_control(rng, horizon)
        seed_b = random_control(rng, horizon)
        play = construct_play_seeded(s_aqua, s_bard, horizon, seed_a, seed_b)
        if play.aqua != reference.aqua or play.bard != reference.bard:
            mismatches += 1
    return {"name": "seed-independence", "holds": mismatches == 0,
            "detail": f"{seeds} seed pairs, {mismatches} mismatches"}


def cmd_verify(args) -> ExperimentReport:
    seed = check_seed(args.seed)
    rng = random.Random(seed)
    n = args.samples or 150
    suites = [
        _suite_oracle_agreement(rng, pairs=n),
        _suite_oracle_discounted(rng, instances=max(n // 3, 20)),
        _suite_nonanticipativity(seed, samples=n),
        _suite_information_flow(args.inject_cheater),
        _suite_constant_sum(),
        _suite_seed_independence(seed, seeds=max(n // 5, 10)),
    ]
    bounds = [{"name": s["name"], "holds": s["holds"]} for s in suites]
    echo = _config_echo(args, eps=[], inject_cheater=args.inject_cheater)
    return ExperimentReport("verify", echo, suites, bounds)


# -- entry point -------------------------------------------------------------------


_COMMANDS = {"guess": cmd_guess, "sweep": cmd_sweep,
             "ctmp": cmd_ctmp, "verify": cmd_verify}

_FIGURES = {"guess": plots.plot_guess, "sweep": plots.plot_sweep,
            "ctmp": plots.plot_ctmp}


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        with StopWatch() as watch:
            report = _COMMANDS[args.command](args)
            if not args.no_plot and args.command in _FIGURES and report.results:
                fig_path = Path(args.out) / f"{args.command}.png"
                _FIGURES[args.command](report.results, fig_path)
                report.figures.append(fig_path.name)
        finalize_meta(report, watch.elapsed)
        paths = write_report(report, args.out, args.format)
    except SpecParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for b in report.bounds:
        print(f"{'PASS' if b['holds'] else 'FAIL'}  {b['name']}")
    for p in paths:
        print(f"wrote {p}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
