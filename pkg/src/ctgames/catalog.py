"""Registered responder catalog and ready-made strategy builders.

Responders are looked up by name so strategy spec files stay declarative:
{"name": "constant", "params": {"symbol": "a"}}. The registry is the
extension point; the best-response builder registers itself here on import.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Sequence

from .errors import ConfigError, UsageError
from .rational import to_frac
from .engine import AQUA, BARD, DelayStrategy, Grid, MixedStrategy, Responder
from .stepfn import DEFAULT_ALPHABET, StepFunction, Symbol, splice

# builder(grid, params, alphabet) -> Responder
ResponderBuilder = Callable[[Grid, dict, Sequence[Symbol]], Responder]

_REGISTRY: dict[str, ResponderBuilder] = {}


def register_responder(name: str, builder: ResponderBuilder) -> None:
    if name in _REGISTRY:
        raise ConfigError(f"responder {name!r} already registered")
    _REGISTRY[name] = builder


def responder_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def build_responder(name: str, grid: Grid, params: dict | None = None,
                    alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> Responder:
    try:
        builder = _REGISTRY[name]
    except KeyError:
        raise ConfigError(
            f"unregistered responder {name!r}; known: {', '.join(responder_names())}")
    return builder(grid, params or {}, alphabet)


def build_strategy(name: str, grid: Grid, params: dict | None = None,
                   alphabet: Sequence[Symbol] = DEFAULT_ALPHABET,
                   label: str = "") -> DelayStrategy:
    built = build_responder(name, grid, params, alphabet)
    if isinstance(built, DelayStrategy):
        # self-gridding entries return complete strategies
        if label:
            return DelayStrategy(built.grid, built.responder, label)
        return built
    return DelayStrategy(grid, built, label or name)


# -- catalog entries -------------------------------------------------------------


def _constant(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    symbol = params.get("symbol", alphabet[0])

    def respond(n, start, end, opponent):
        return StepFunction.constant(symbol, end - start)

    return respond


def _copy_last(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    """Play the value the opponent showed just before the round started."""
    initial = params.get("initial", alphabet[0])

    def respond(n, start, end, opponent):
        if n == 0:
            value = initial
        else:
            prefix = opponent.prefix(start)
            value = prefix.values[-1]
        return StepFunction.constant(value, end - start)

    return respond


def _grid_switcher(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    """Cycle through the alphabet, advancing one symbol per own round."""
    order = tuple(params.get("order", alphabet))

    def respond(n, start, end, opponent):
        return StepFunction.constant(order[n % len(order)], end - start)

    return respond


def _alternating_segment(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    """Split every round in half and play two different symbols within it.

    Produces controls whose breakpoints are not grid points, exercising
    prediction of pre-planned mid-round moves.
    """
    first = params.get("first", alphabet[0])
    second = params.get("second", alphabet[1])

    def respond(n, start, end, opponent):
        width = end - start
        return StepFunction.from_pieces(
            [(Fraction(0), first), (width / 2, second)], width)

    return respond


def _delayed_copier(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    """Replay the opponent's restriction from one own-round earlier.

    Round n >= 1 echoes the opponent on [t_{n-1}, t_n), stretched or shrunk
    onto the current round, so momentary opponent moves come back later.
    """
    initial = params.get("initial", alphabet[1])

    def respond(n, start, end, opponent):
        if n == 0:
            return StepFunction.constant(initial, end - start)
        prev = grid.point(n - 1)
        echo = opponent.restrict(prev, start)
        width = end - start
        if echo.domain_end == width:
            return echo
        scale = Fraction(width, echo.domain_end)
        return StepFunction(width, tuple(b * scale for b in echo.breakpoints),
                            echo.values, None)

    return respond


def _peek_ahead(grid: Grid, params: dict, alphabet: Sequence[Symbol]) -> Responder:
    """Cheating fixture: reads the opponent inside the round being committed.

    Violates the delay property by construction; exists so the detector has
    a guaranteed positive case.
    """

    def respond(n, start, end, opponent):
        probe = start + (end - start) * Fraction(3, 4)
        return StepFunction.constant(opponent.value_at(probe), end - start)

    return respond


def _alpha_eps_best_response(grid: Grid, params: dict,
                             alphabet: Sequence[Symbol]) -> DelayStrategy:
    """Self-gridding entry: builds the guaranteeing response to an opponent.

    The declared grid is a placeholder; the construction derives its own
    (cell edges plus every reachable sub-round boundary), so the whole
    strategy is returned and build_strategy passes it through.
    """
    from .bestresponse import build_best_response
    from .errors import SpecParseError
    try:
        opponent = mixed_from_json(params["opponent"], alphabet)
        eps_target = to_frac(params["eps_target"])
        r = float(params["r"])
    except KeyError as exc:
        raise ConfigError(
            f"alpha-eps-best-response requires parameter {exc}") from exc
    except SpecParseError as exc:
        raise ConfigError(f"bad opponent spec: {exc}") from exc
    strategy, _ = build_best_response(opponent, eps_target, r, params.get("seat"))
    return strategy


register_responder("constant", _constant)
register_responder("copy-last", _copy_last)
register_responder("grid-switcher", _grid_switcher)
register_responder("alternating-segment", _alternating_segment)
register_responder("delayed-copier", _delayed_copier)
register_responder("peek-ahead", _peek_ahead)
register_responder("alpha-eps-best-response", _alpha_eps_best_response)


# -- serialization of strategy specs ----------------------------------------------

def strategy_from_json(obj: dict,
                       alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> DelayStrategy:
    from .errors import SpecParseError
    try:
        # grid may be omitted for self-gridding responders; the trivial
        # unit-step grid stands in otherwise
        grid = Grid.from_json(obj["grid"]) if "grid" in obj else Grid()
        name = obj["responder"]["name"]
        params = obj["responder"].get("params", {})
    except (KeyError, TypeError) as exc:
        raise SpecParseError(f"bad strategy object: {exc}") from exc
    return build_strategy(name, grid, params, alphabet, obj.get("label", ""))


def strategy_to_json(strategy_spec: dict) -> dict:
    # strategy specs are stored declaratively; runtime strategies carry
    # closures and are not round-tripped
    return strategy_spec


def mixed_from_json(obj: dict,
                    alphabet: Sequence[Symbol] = DEFAULT_ALPHABET) -> MixedStrategy:
    from .errors import SpecParseError
    try:
        player = obj["player"]
        atoms = tuple((to_frac(a["p"]), strategy_from_json(a, alphabet))
                      for a in obj["atoms"])
    except (KeyError, TypeError) as exc:
        raise SpecParseError(f"bad mixed strategy object: {exc}") from exc
    try:
        return MixedStrategy(player, atoms, obj.get("label", ""))
    except UsageError as exc:
        raise SpecParseError(str(exc)) from exc


# -- acceptance catalog -------------------------------------------------------------

def aqua_catalog() -> dict[str, MixedStrategy]:
    """The five opponent mixtures the best response is graded against."""
    F = Fraction
    pure_constant = MixedStrategy.pure(
        AQUA, build_strategy("constant", Grid(), {"symbol": "a"}),
        label="pure-constant")
    constant_mixture = MixedStrategy(AQUA, (
        (F(1, 2), build_strategy("constant", Grid(), {"symbol": "a"})),
        (F(1, 2), build_strategy("constant", Grid(), {"symbol": "b"})),
    ), label="two-constant-mixture")
    switchers = MixedStrategy(AQUA, (
        (F(1, 4), build_strategy("grid-switcher", Grid((F(0),), F(1, 3)))),
        (F(1, 4), build_strategy("grid-switcher", Grid((F(0),), F(1, 2)))),
        (F(1, 4), build_strategy("grid-switcher", Grid((F(0), F(2, 5)), F(2, 5)))),
        (F(1, 4), build_strategy("grid-switcher", Grid((F(0), F(3, 7)), F(3, 7)))),
    ), label="four-grid-switchers")
    delayed = MixedStrategy.pure(
        AQUA, build_strategy("delayed-copier", Grid((F(0),), F(1, 2))),
        label="delayed-copier")
    alternating = MixedStrategy.pure(
        AQUA, build_strategy("alternating-segment", Grid((F(0),), F(2, 3))),
        label="alternating-segment")
    return {
        "pure-constant": pure_constant,
        "two-constant-mixture": constant_mixture,
        "four-grid-switchers": switchers,
        "delayed-copier": delayed,
        "alternating-segment": alternating,
    }


def mirror_to_player(mixed: MixedStrategy, player: str) -> MixedStrategy:
    """Same atoms, rebadged for the other seat."""
    return MixedStrategy(player, mixed.atoms, mixed.label)


def bard_catalog() -> dict[str, MixedStrategy]:
    return {name: mirror_to_player(m, BARD) for name, m in aqua_catalog().items()}
