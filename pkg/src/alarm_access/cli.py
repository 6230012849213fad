"""Command-line front end: entropy tables, trade-off sweeps, power curves,
Monte-Carlo campaigns and raw bound dumps.

Settings are resolved with the precedence

    command-line flag > environment variable > config file > built-in default

where only the thread count has an environment variable
(``ALARM_ACCESS_THREADS``). Tables go to standard output (or ``--out``) as
CSV with a leading ``# config:`` comment holding the fully resolved config,
or as a JSON document with ``--format json``. Progress goes to standard
error. The exit status is 0 only when every computation finished and every
verdict passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .bounds import BoundEvaluator, ChannelConfig, ExponentSearchConfig
from .model import CorrelationModel, entropy_terms
from .optimizer import ReliabilityTargets, sweep_population, sweep_tradeoff
from .simulator import run_campaign, wilson_halfwidth

THREADS_ENV = "ALARM_ACCESS_THREADS"
COMMANDS = ("entropy", "tradeoff", "power", "simulate", "bounds")


class ConfigError(ValueError):
    """Invalid config file or field."""


# --------------------------------------------------------------------------
# config
# --------------------------------------------------------------------------

@dataclass
class ModelSection:
    p_a: float = 1.0
    p_s: float = 0.2
    p_d: float = 0.8
    N: int = 6
    M_a: int = 2
    M_s: int = 8


@dataclass
class ChannelSection:
    n: int = 200
    P_avg: float = 1.0
    # None stands for no power cap (JSON has no infinity)
    P_max: Optional[float] = None


@dataclass
class TargetSection:
    eps_a: float = 1e-5
    eps_s: float = 1e-1
    eps_sa: float = 1e-1
    eps_fp: float = 1e-5


@dataclass
class SearchSection:
    rho_grid: int = 64
    lambda_bracket: Tuple[float, float] = (1e-9, 1e3)
    refine_iters: int = 40
    qt_samples: int = 0
    lambda_grid: int = 48
    screen_exponent: Optional[float] = 50.0
    tol: float = 1e-4


@dataclass
class GridSection:
    # None means every K from 1 (entropy) or 0 (bounds) to N
    K: Optional[List[int]] = None
    p_d: List[float] = field(default_factory=lambda: [0.0, 0.001, 0.01, 0.05, 0.1, 0.2, 0.5, 1.0])
    N: List[int] = field(default_factory=lambda: [500, 1000, 1500, 2000])
    p_a: List[float] = field(default_factory=lambda: [0.25, 0.5, 1.0])


_SECTIONS = {"model": ModelSection, "channel": ChannelSection, "targets": TargetSection,
             "search": SearchSection, "grids": GridSection}


@dataclass
class ExperimentConfig:
    """Everything a command needs, as one declarative document.

    ``model.M_s`` may be given as ``M_s_bits`` in the file; it is always
    written back as the exact integer ``M_s``.
    """

    scenario: str = "baseline"
    model: ModelSection = field(default_factory=ModelSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    targets: TargetSection = field(default_factory=TargetSection)
    search: SearchSection = field(default_factory=SearchSection)
    grids: GridSection = field(default_factory=GridSection)
    trials: int = 10_000
    seed: int = 0
    threads: int = 1
    out: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["search"]["lambda_bracket"] = list(self.search.lambda_bracket)
        return d

    def to_json(self, indent: Optional[int] = None) -> str:
        separators = None if indent else (",", ":")
        return json.dumps(self.to_dict(), indent=indent, separators=separators)

    def audit_dict(self) -> Dict[str, Any]:
        """The settings that determine the results (no threads or output path)."""
        d = self.to_dict()
        del d["threads"], d["out"]
        return d

    def validate(self) -> "ExperimentConfig":
        """Build every library object once so bad values fail before any work."""
        for section, build in (("model", self.correlation_model), ("channel", self.channel_config),
                               ("targets", self.reliability_targets), ("search", self.search_config)):
            try:
                build()
            except ValueError as exc:
                raise ConfigError(f"field {section}: {exc}") from None
        if self.trials < 0:
            raise ConfigError(f"field trials: must be non-negative, got {self.trials}")
        if self.threads < 1:
            raise ConfigError(f"field threads: must be at least 1, got {self.threads}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"field seed: must be an unsigned 64-bit integer, got {self.seed}")
        return self

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown field(s) {', '.join(unknown)}")
        kwargs = {}
        for name, value in data.items():
            if name in _SECTIONS:
                kwargs[name] = _section(name, _SECTIONS[name], value)
            else:
                kind = str if name in ("scenario", "out") else int
                kwargs[name] = _coerce(name, value, kind, optional=name == "out")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_json(fh.read())
            except ConfigError as exc:
                raise ConfigError(f"{path}: {exc}") from None

    # -- library objects ----------------------------------------------------

    def correlation_model(self) -> CorrelationModel:
        m = self.model
        return CorrelationModel(m.p_a, m.p_s, m.p_d, m.N, m.M_a, m.M_s)

    def channel_config(self) -> ChannelConfig:
        c = self.channel
        return ChannelConfig(c.n, c.P_avg, math.inf if c.P_max is None else c.P_max)

    def reliability_targets(self) -> ReliabilityTargets:
        t = self.targets
        return ReliabilityTargets(t.eps_a, t.eps_s, t.eps_sa, t.eps_fp)

    def search_config(self) -> ExponentSearchConfig:
        s = self.search
        return ExponentSearchConfig(s.rho_grid, tuple(s.lambda_bracket), s.refine_iters,
                                    s.qt_samples, s.lambda_grid, s.screen_exponent)


def _coerce(where: str, value, kind, optional=False):
    if value is None:
        if optional:
            return None
        raise ConfigError(f"field {where}: must not be null")
    if kind is bool or isinstance(value, bool):
        raise ConfigError(f"field {where}: expected {kind.__name__}, got {value!r}")
    if kind is int:
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
    elif kind is float and isinstance(value, (int, float)):
        return float(value)
    elif kind is str and isinstance(value, str):
        return value
    raise ConfigError(f"field {where}: expected {kind.__name__}, got {value!r}")


def _coerce_list(where, value, kind, optional=False):
    if value is None and optional:
        return None
    if not isinstance(value, list):
        raise ConfigError(f"field {where}: expected a list, got {value!r}")
    return [_coerce(f"{where}[{i}]", v, kind) for i, v in enumerate(value)]


# field name -> (element type, optional) for every non-scalar or nullable field
_SPECIAL = {
    ("channel", "P_max"): ("float", True),
    ("search", "screen_exponent"): ("float", True),
    ("search", "lambda_bracket"): ("pair", False),
    ("grids", "K"): ("ints", True),
    ("grids", "p_d"): ("floats", False),
    ("grids", "N"): ("ints", False),
    ("grids", "p_a"): ("floats", False),
}


def _section(name, cls, data):
    if not isinstance(data, dict):
        raise ConfigError(f"field {name}: expected an object, got {data!r}")
    data = dict(data)
    if name == "model" and "M_s_bits" in data:
        if "M_s" in data:
            raise ConfigError("field model: give M_s or M_s_bits, not both")
        data["M_s"] = 2 ** _coerce("model.M_s_bits", data.pop("M_s_bits"), int)
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown field(s) {', '.join(f'{name}.{u}' for u in unknown)}")
    kwargs = {}
    for key, value in data.items():
        where = f"{name}.{key}"
        kind, optional = _SPECIAL.get((name, key), (None, False))
        if kind == "float":
            kwargs[key] = _coerce(where, value, float, optional)
        elif kind == "pair":
            pair = _coerce_list(where, value, float)
            if len(pair) != 2:
                raise ConfigError(f"field {where}: expected two numbers, got {value!r}")
            kwargs[key] = tuple(pair)
        elif kind == "ints":
            kwargs[key] = _coerce_list(where, value, int, optional)
        elif kind == "floats":
            kwargs[key] = _coerce_list(where, value, float, optional)
        else:
            kwargs[key] = _coerce(where, value, type(getattr(defaults, key)))
    return cls(**kwargs)


def resolve_config(args: argparse.Namespace, environ=os.environ) -> ExperimentConfig:
    """Merge config file, environment and flags (flags win)."""
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    if environ.get(THREADS_ENV):
        config.threads = _coerce(THREADS_ENV, _parse_int(THREADS_ENV, environ[THREADS_ENV]), int)
    if args.threads is not None:
        config.threads = args.threads
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out = args.out
    return config.validate()


def _parse_int(where, text):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None


# --------------------------------------------------------------------------
# results
# --------------------------------------------------------------------------

@dataclass
class Table:
    """Rows of one command plus the overall verdict."""

    columns: List[str]
    rows: List[List[Any]]
    ok: bool = True
    notes: Dict[str, Any] = field(default_factory=dict)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else value
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    return value


def _json_value(value):
    value = _clean(value)
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, list):
        return [_json_value(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    return value


def render(table: Table, config: ExperimentConfig, command: str, fmt: str) -> str:
    if fmt == "json":
        doc = {"command": command, "config": config.audit_dict(), "columns": table.columns,
               "rows": [dict(zip(table.columns, row)) for row in table.rows],
               "notes": table.notes, "ok": table.ok}
        return json.dumps(_json_value(doc), indent=2) + "\n"
    buf = io.StringIO()
    buf.write(f"# config: {json.dumps(config.audit_dict(), separators=(',', ':'))}\n")
    for key, value in table.notes.items():
        buf.write(f"# {key}: {json.dumps(_json_value(value), separators=(',', ':'))}\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow(["" if v is None else _csv_cell(v) for v in _clean(row)])
    return buf.getvalue()


def _csv_cell(value):
    if isinstance(value, list):
        return " ".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return value


def _progress(label):
    def report(done, total):
        print(f"{label}: {done}/{total}", file=sys.stderr, flush=True)
    return report


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_entropy(config: ExperimentConfig) -> Table:
    """Joint entropy, spectral efficiency and chain-rule terms per K."""
    model = config.correlation_model()
    n = config.channel.n
    Ks = config.grids.K if config.grids.K is not None else range(1, model.N + 1)
    rows = []
    for K in Ks:
        terms = entropy_terms(model, int(K))
        H = float(terms.sum())
        rows.append([int(K), H / n, H, [float(t) for t in terms]])
    return Table(["K", "spectral_efficiency", "joint_entropy_bits", "conditional_entropy_bits"], rows)


def cmd_tradeoff(config: ExperimentConfig) -> Table:
    """Spectral efficiency against the alarm-error bound along a p_d sweep."""
    model = config.correlation_model()
    P_avg, rows = sweep_tradeoff(
        model, config.channel.n, config.reliability_targets(), p_d_grid=config.grids.p_d,
        search=config.search_config(), tol=config.search.tol,
        progress=_progress("tradeoff"), seed=config.seed)
    return Table(["p_d", "spectral_efficiency", "eps_a_bound", "eps_sa_bound"],
                 [[r.p_d, r.spectral_efficiency, r.eps_a_bound, r.eps_sa_bound] for r in rows],
                 notes={"P_avg": P_avg})


def cmd_power(config: ExperimentConfig, db: bool = False) -> Table:
    """Minimum power and energy per bit over the N and p_a grids."""
    model = config.correlation_model()
    args = (config.channel.n,)
    grid = [int(N) for N in config.grids.N]
    report = _progress("power")

    def one(N):
        return sweep_population(model, *args, [N], config.grids.p_a, config.reliability_targets(),
                                config.search_config(), config.search.tol, seed=config.seed)

    results = []
    if config.threads > 1 and len(grid) > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            for i, part in enumerate(pool.map(one, grid)):
                results.extend(part)
                report(i + 1, len(grid))
    else:
        for i, N in enumerate(grid):
            results.extend(one(N))
            report(i + 1, len(grid))

    def eb(value):
        if not db:
            return value
        return 10.0 * math.log10(value) if value > 0 else -math.inf

    unit = "_db" if db else ""
    columns = ["N", "p_a", "P_avg", "p_d", f"energy_per_bit{unit}", "feasible", "fallback",
               "binding", "P_avg_uncorrelated", f"energy_per_bit_uncorrelated{unit}"]
    rows = [[r.N, r.p_a, r.P_avg, r.p_d, eb(r.energy_per_bit), r.feasible, r.fallback, r.binding,
             r.P_avg_uncorrelated, eb(r.energy_per_bit_uncorrelated)] for r in results]
    return Table(columns, rows, ok=all(r.feasible for r in results))


def cmd_simulate(config: ExperimentConfig) -> Table:
    """Monte-Carlo error rates beside the analytical bounds, with verdicts.

    A rate passes when it does not exceed its bound by more than the 95%
    Wilson half-width; rates with no trials behind them are reported as
    ``n/a`` and do not fail.
    """
    model = config.correlation_model()
    cfg = config.channel_config()
    tally = run_campaign(model, cfg, config.trials, config.seed, config.threads,
                         progress=_progress("simulate"))
    rates, dens = tally.rates(), tally.denominators()
    bounds = {}
    if config.trials > 0:
        ev = BoundEvaluator.for_model(model, cfg, config.search_config(), config.seed)
        bounds = ev.bound_set(model).as_dict()
    rows, ok = [], True
    for key in ("eps_a", "eps_fp", "eps_s", "eps_sa"):
        den = dens[key]
        if den == 0:
            rows.append([key, None, 0, None, bounds.get(key), "n/a"])
            continue
        hw = wilson_halfwidth(rates[key], den)
        passed = rates[key] <= bounds[key] + hw
        ok &= passed
        rows.append([key, rates[key], den, hw, bounds[key], "PASS" if passed else "FAIL"])
    return Table(["quantity", "rate", "trials", "halfwidth", "bound", "verdict"], rows, ok,
                 notes={"tally": tally.as_dict()})


def cmd_bounds(config: ExperimentConfig) -> Table:
    """Per-(K, K_a) bound terms, with the four aggregates as a note."""
    model = config.correlation_model()
    cfg = config.channel_config()
    Ks = config.grids.K if config.grids.K is not None else range(model.N + 1)
    ev = BoundEvaluator.for_model(model, cfg, config.search_config(), config.seed)
    bound_set = ev.bound_set(model, table_Ks=Ks)
    keys = ("a", "b", "c", "c_rest", "d", "e")
    rows = [[K, Ka] + [terms[k] for k in keys]
            for (K, Ka), terms in sorted(bound_set.per_k_terms.items())]
    return Table(["K", "K_a", *keys], rows, notes={"aggregate": bound_set.as_dict(), "p0": ev.p0})


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alarm-access",
        description="Bounds, sweeps and simulations for alarm random access on the GMAC.",
        epilog=f"Precedence: flags > ${THREADS_ENV} > --config file > defaults.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON experiment config")
    parser.add_argument("--seed", type=int, help="RNG seed (unsigned 64-bit)")
    parser.add_argument("--format", choices=("csv", "json"), default=None,
                        help="output format (default: json for simulate, csv otherwise)")
    parser.add_argument("--db", action="store_true", help="report energy per bit in dB")
    parser.add_argument("--out", help="write output here instead of standard output")
    parser.add_argument("--threads", type=int, help="worker threads")
    return parser


def run(command: str, config: ExperimentConfig, db: bool = False) -> Table:
    if command == "entropy":
        return cmd_entropy(config)
    if command == "tradeoff":
        return cmd_tradeoff(config)
    if command == "power":
        return cmd_power(config, db)
    if command == "simulate":
        return cmd_simulate(config)
    return cmd_bounds(config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    fmt = args.format or ("json" if args.command == "simulate" else "csv")
    try:
        table = run(args.command, config, args.db)
    except (ValueError, RuntimeError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1
    text = render(table, config, args.command, fmt)
    if config.out:
        with open(config.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if not table.ok:
        print(f"{args.command}: at least one verdict failed", file=sys.stderr)
    return 0 if table.ok else 1


if __name__ == "__main__":
    sys.exit(main())
