"""Command line: Green-function tables, oracle comparisons, delta(t) figure data, self-validation.

Exit codes: 0 success, 1 tolerance/validation failure, 2 configuration error,
3 truncation sentinel.
"""
from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import math
import operator
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from . import fock_oracle, greens, measures, reduced_state
from .model import InitialState, SystemParams, TimeGrid, TruncationError, normal_mode_frequencies

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_TRUNCATION = 3

OUTPUT_SERIES = ("delta", "purity", "entropy", "trace_distance", "greens")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<config>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams
    initial: InitialState
    grid: TimeGrid
    n_max: int = 40
    truncation_budget: float = fock_oracle.TRUNCATION_BUDGET
    max_cutoff: int = fock_oracle.MAX_CUTOFF
    outputs: tuple = field(default=OUTPUT_SERIES)

    def __post_init__(self):
        if self.n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {self.n_max}")
        if not 0 < self.truncation_budget <= 1e-4:
            raise ValueError(f"truncation_budget must lie in (0, 1e-4], got {self.truncation_budget}")
        unknown = set(self.outputs) - set(OUTPUT_SERIES)
        if unknown:
            raise ValueError(f"unknown outputs {sorted(unknown)}; choose from {', '.join(OUTPUT_SERIES)}")


def demo_config() -> RunConfig:
    """omega1 = omega2 = 1, V12 = 1, alpha = (0.5, 0.3), gamma = 1, theta = 0, 200 steps over [0, 2 pi]."""
    return RunConfig(
        system=SystemParams(1.0, 1.0, 1.0),
        initial=InitialState(0.5, 0.3, 1.0, 0.0),
        grid=TimeGrid(0.0, 2 * math.pi, 200),
    )


# ---------------------------------------------------------------- config parsing

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
           ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "j": 1j, "i": 1j}
_FUNCS = {"exp": np.exp, "sqrt": np.sqrt, "cos": math.cos, "sin": math.sin}


def _eval_number(text: str) -> complex:
    """Arithmetic on numbers, pi, j and exp/sqrt/cos/sin; nothing else is evaluated."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
            if len(node.args) != 1 or node.keywords:
                raise ValueError("functions take one argument")
            return complex(_FUNCS[node.func.id](ev(node.args[0])))
        raise ValueError(f"unsupported expression {text!r}")

    try:
        return complex(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, TypeError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse number {text!r}") from exc


def _key_lines(text: str) -> dict:
    lines = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            lines[(section, None)] = lineno
        elif "=" in line and section is not None:
            lines[(section, line.split("=", 1)[0].strip().lower())] = lineno
    return lines


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("file must start with a [section] header", exc.lineno, source) from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line", lineno, source) from exc
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", exc.lineno, source) from exc
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, source) from exc
    except configparser.Error as exc:
        raise ConfigError(str(exc), None, source) from exc

    lines = _key_lines(text)
    known = {
        "system": {"omega1", "omega2", "v12", "v12_abs", "v12_phase"},
        "initial": {"alpha1", "alpha2", "gamma", "theta"},
        "grid": {"t0", "t", "n_steps"},
        "run": {"n_max", "truncation_budget", "max_cutoff", "outputs"},
    }
    for section in parser.sections():
        if section not in known:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)), source)
        for key in parser[section]:
            if key not in known[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]", lines.get((section, key)), source)

    def where(section, key):
        return lines.get((section, key), lines.get((section, None)))

    def number(section, key, default=None, kind=float, check=None):
        if not parser.has_option(section, key):
            if default is None:
                raise ConfigError(f"missing required key {key!r} in [{section}]", where(section, key), source)
            return default
        raw = parser.get(section, key)
        try:
            value = _eval_number(raw)
            if kind is complex:
                return value
            if abs(value.imag) > 0:
                raise ValueError(f"{key} must be real, got {raw!r}")
            if kind is int:
                if value.real != int(value.real):
                    raise ValueError(f"{key} must be an integer, got {raw!r}")
                value = int(value.real)
            else:
                value = float(value.real)
            if check is not None and not check(value):
                raise ValueError(f"{key} = {raw.strip()} is out of range")
            return value
        except ValueError as exc:
            raise ConfigError(str(exc), where(section, key), source) from exc

    def build(section, key_for_error, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc), where(section, key_for_error), source) from exc

    def positive(x):
        return x > 0

    if parser.has_option("system", "v12") and parser.has_option("system", "v12_abs"):
        raise ConfigError("give either v12 or v12_abs/v12_phase, not both", where("system", "v12_abs"), source)
    if parser.has_option("system", "v12_abs"):
        v12 = number("system", "v12_abs") * np.exp(1j * number("system", "v12_phase", 0.0))
    else:
        v12 = number("system", "v12", 0j, complex)
    system = build(
        "system",
        "omega1",
        lambda: SystemParams(number("system", "omega1", check=positive), number("system", "omega2", check=positive), v12),
    )
    initial = build(
        "initial",
        "gamma",
        lambda: InitialState(
            number("initial", "alpha1", 0j, complex),
            number("initial", "alpha2", 0j, complex),
            number("initial", "gamma", 0.0, check=lambda g: g >= 0),
            number("initial", "theta", 0.0),
        ),
    )
    grid = build(
        "grid", "t", lambda: TimeGrid(number("grid", "t0", 0.0), number("grid", "t"), number("grid", "n_steps", kind=int, check=positive))
    )
    outputs = OUTPUT_SERIES
    if parser.has_option("run", "outputs"):
        outputs = tuple(s.strip() for s in parser.get("run", "outputs").split(",") if s.strip())
    budget_key = "truncation_budget"
    return build(
        "run",
        budget_key if parser.has_option("run", budget_key) else "outputs",
        lambda: RunConfig(
            system=system,
            initial=initial,
            grid=grid,
            n_max=number("run", "n_max", 40, int, check=positive),
            truncation_budget=number("run", budget_key, fock_oracle.TRUNCATION_BUDGET, check=lambda b: 0 < b <= 1e-4),
            max_cutoff=number("run", "max_cutoff", fock_oracle.MAX_CUTOFF, int),
            outputs=outputs,
        ),
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", None, path) from exc
    return parse_config(text, source=path)


# ---------------------------------------------------------------- CSV helpers


def _fmt(x: float) -> str:
    # + 0.0 turns -0.0 into 0.0
    return format(float(x) + 0.0, ".17g")


def write_csv(stream: TextIO, header: list[str], rows) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])


def _complex_cols(name: str) -> list[str]:
    return [f"{name}_re", f"{name}_im"]


# ---------------------------------------------------------------- commands


def cmd_greens(config: RunConfig, out: TextIO) -> int:
    sol = greens.solve_greens(config.system, config.initial, config.grid)
    header = ["time"] + sum((_complex_cols(n) for n in ("u", "v0", "v1", "v2")), []) + [
        "unitarity",
        "future_influence",
    ]
    cols = [sol.times]
    for arr in (sol.u, sol.v0, sol.v1, sol.v2):
        cols += [arr.real, arr.imag]
    cols += [sol.unitarity, sol.future_influence]
    write_csv(out, header, np.column_stack(cols))
    return EXIT_OK


_COMPARE_COLUMNS = {
    "trace_distance": ["trace_distance", "fidelity"],
    "purity": ["purity_analytical", "purity_oracle"],
    "entropy": ["entropy_oracle"],
    "delta": ["delta_t"],
}


def cmd_compare(config: RunConfig, out: TextIO, tolerance: float = 1e-7, log: TextIO | None = None) -> int:
    reports, cutoff = measures.compare_with_oracle(
        config.system,
        config.initial,
        config.grid,
        n_max=config.n_max,
        budget=config.truncation_budget,
        max_cutoff=config.max_cutoff,
    )
    fields = [c for key in ("trace_distance", "purity", "entropy", "delta") if key in config.outputs
              for c in _COMPARE_COLUMNS[key]]
    header = ["time"] + [("delta" if f == "delta_t" else f) for f in fields]
    rows = [[r.time] + [getattr(r, f) for f in fields] for r in reports]
    if "greens" in config.outputs:
        header += _complex_cols("u") + _complex_cols("v0")
        times = np.array([r.time for r in reports])
        u = np.asarray(greens.u_of(config.system, config.grid.t0, times))
        v0 = np.asarray(greens.v0_of(config.system, config.grid.t0, times))
        rows = [row + [a.real, a.imag, b.real, b.imag] for row, a, b in zip(rows, u, v0)]
    write_csv(out, header, rows)
    worst = max(r.trace_distance for r in reports)
    passed = worst <= tolerance
    (log or sys.stderr).write(
        f"max_trace_distance={_fmt(worst)} tolerance={_fmt(tolerance)} oracle_cutoff={cutoff} "
        f"{'PASS' if passed else 'FAIL'}\n"
    )
    return EXIT_OK if passed else EXIT_FAIL


@dataclass(frozen=True)
class Fig1Curve:
    name: str
    params: SystemParams
    state: InitialState


FIG1_BASE = dict(omega1=2.0, omega2=1.0, v12=1.0, gamma=2.0)
FIG1_PERIODS = 4
FIG1_STEPS = 2000


def fig1_curves(variant: str) -> list[Fig1Curve]:
    """Parameter sets behind each panel; unswept values come from panel (a)."""
    b = FIG1_BASE

    def curve(name, omega1=b["omega1"], omega2=b["omega2"], v12=b["v12"], gamma=b["gamma"]):
        return Fig1Curve(name, SystemParams(omega1, omega2, v12), InitialState(0.0, 0.0, gamma, 0.0))

    if variant == "a":
        return [curve("delta")]
    if variant == "b":
        return [curve(f"delta_gamma_{g:g}", gamma=g) for g in (2.0, 1.0, 0.5)]
    if variant == "c":
        return [curve(f"delta_v12_{v:g}", v12=v) for v in (2.0, 1.0, 0.5)]
    if variant == "d":
        pairs = ((1.0, 1.0, "1"), (2.0, 1.0, "2"), (math.sqrt(2.0), 1.0, "sqrt2"))
        return [curve(f"delta_omega1_{label}", omega1=w1, omega2=w2) for w1, w2, label in pairs]
    raise ValueError(f"unknown variant {variant!r}; choose a, b, c or d")


def fig1_grid(curves: list[Fig1Curve]) -> TimeGrid:
    slowest = min(normal_mode_frequencies(c.params)[0] - normal_mode_frequencies(c.params)[1] for c in curves)
    return TimeGrid(0.0, FIG1_PERIODS * 2 * math.pi / slowest, FIG1_STEPS)


def fig1_table(variant: str) -> tuple[list[str], np.ndarray]:
    curves = fig1_curves(variant)
    grid = fig1_grid(curves)
    times = grid.points
    if variant == "a":
        d = measures.delta_of(curves[0].params, curves[0].state, grid.t0, times)
        return ["time", "delta_pow0", "delta_pow1", "delta_pow2"], np.column_stack([times, d ** 0, d, d ** 2])
    with ThreadPoolExecutor() as pool:
        # map preserves curve order, so the output is independent of scheduling
        cols = list(pool.map(lambda c: measures.delta_of(c.params, c.state, grid.t0, times), curves))
    return ["time"] + [c.name for c in curves], np.column_stack([times] + cols)


def cmd_fig1(variant: str, out: TextIO) -> int:
    header, table = fig1_table(variant)
    write_csv(out, header, table)
    return EXIT_OK


# ---------------------------------------------------------------- validation


def _check_unitarity():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        w1, w2 = rng.uniform(0.5, 3.0, 2)
        v = rng.uniform(0, 2) * np.exp(1j * rng.uniform(0, 2 * math.pi))
        p = SystemParams(w1, w2, v)
        taus = np.linspace(0, 20, 100)
        worst = max(worst, np.max(np.abs(np.abs(greens.u_of(p, 0, taus)) ** 2 + np.abs(greens.v0_of(p, 0, taus)) ** 2 - 1)))
    return worst <= 1e-12, f"max | |u|^2+|v0|^2-1 | = {worst:.2e}"


def _check_residuals():
    p = SystemParams(2.0, 1.0, 1.0)
    coarse, fine = TimeGrid(0, 10, 500), TimeGrid(0, 10, 1000)
    ru = greens.residual_u(p, coarse) / greens.residual_u(p, fine)
    rv = greens.residual_v0(p, coarse) / greens.residual_v0(p, fine)
    return min(ru, rv) >= 3.5, f"refinement ratios u={ru:.2f} v0={rv:.2f}"


def _check_oracle_equivalence():
    cfg = demo_config()
    reports, cutoff = measures.compare_with_oracle(cfg.system, cfg.initial, cfg.grid, n_max=cfg.n_max)
    worst = max(r.trace_distance for r in reports)
    return worst <= 1e-7, f"max trace distance {worst:.2e} (oracle cutoff {cutoff})"


def _check_classical_limit():
    p = SystemParams(1.0, 1.0, 1.0)
    s = InitialState(0.5, 0.3, 0.0, 0.0)
    times = np.linspace(0, 2 * math.pi, 50)
    series = fock_oracle.oracle_reduced_states(p, s, 0.0, times)
    worst_mean = worst_purity = worst_delta = 0.0
    for t, raw in zip(times, series.rho1):
        c = reduced_state.coefficients(p, s, 0.0, t)
        rho = raw.normalized()
        worst_mean = max(worst_mean, abs(rho.expectation_a() - c.alpha_t))
        worst_purity = max(worst_purity, abs(1 - reduced_state.rho1_purity_analytical(c)), abs(1 - rho.purity))
        worst_delta = max(worst_delta, abs(c.delta_t))
    ok = worst_mean <= 1e-9 and worst_purity <= 1e-9 and worst_delta == 0.0
    return ok, f"|<a1>-alpha(t)| {worst_mean:.1e}, |1-purity| {worst_purity:.1e}, max delta {worst_delta:.1e}"


def _check_partial_trace():
    n = 1
    bell = np.zeros(4, dtype=complex)
    bell[0 * 2 + 1] = bell[1 * 2 + 0] = 1 / math.sqrt(2)
    rho = fock_oracle.partial_trace_mode2(bell, n).data
    err_bell = np.max(np.abs(rho - np.diag([0.5, 0.5])))
    skew = np.zeros(4, dtype=complex)
    skew[0 * 2 + 1] = math.sqrt(0.3)  # |0,1>
    skew[1 * 2 + 0] = math.sqrt(0.7)  # |1,0>
    rho = fock_oracle.partial_trace_mode2(skew, n).data
    err_skew = np.max(np.abs(rho - np.diag([0.3, 0.7])))
    worst = max(err_bell, err_skew)
    return worst <= 1e-14, f"Bell and unbalanced one-photon states, max error {worst:.1e}"


def _check_single_excitation():
    worst = 0.0
    for p in (SystemParams(1.0, 1.0, 1.0), SystemParams(2.0, 1.0, 0.8 * np.exp(1j * math.pi / 3))):
        prop = fock_oracle.DensePropagator(fock_oracle.build_hamiltonian(p, 1))
        for start, target, fn in ((1 * 2 + 0, 1 * 2 + 0, greens.u_of), (0 * 2 + 1, 1 * 2 + 0, greens.v0_of)):
            psi0 = np.zeros(4, dtype=complex)
            psi0[start] = 1.0
            for t in np.linspace(0, 10, 41):
                worst = max(worst, abs(prop.evolve(psi0, t)[target] - fn(p, 0.0, t)))
    return worst <= 1e-10, f"max amplitude error {worst:.1e}"


VALIDATION_CHECKS: list[tuple[str, Callable]] = [
    ("unitarity", _check_unitarity),
    ("residual_convergence", _check_residuals),
    ("single_excitation", _check_single_excitation),
    ("partial_trace_selftest", _check_partial_trace),
    ("classical_limit", _check_classical_limit),
    ("oracle_equivalence", _check_oracle_equivalence),
]


def run_validation() -> list[tuple[str, bool, str]]:
    results = []
    for name, check in VALIDATION_CHECKS:
        try:
            ok, detail = check()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, bool(ok), detail))
    return results


def cmd_validate(out: TextIO) -> int:
    results = run_validation()
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        out.write(f"{'PASS' if ok else 'FAIL'}  {name:<{width}}  {detail}\n")
    failed = [name for name, ok, _ in results if not ok]
    out.write(f"{len(results) - len(failed)}/{len(results)} checks passed" +
              (f"; failing: {', '.join(failed)}\n" if failed else "\n"))
    return EXIT_OK if not failed else EXIT_FAIL


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twomode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with [system], [initial], [grid], [run] sections")
        p.add_argument("--n-max", type=int, help="override [run] n_max")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")

    common(sub.add_parser("greens", help="u, v0, v1, v2 on the time grid"))
    p = sub.add_parser("compare", help="analytical rho1 vs exact two-mode evolution")
    common(p)
    p.add_argument("--tolerance", type=float, default=1e-7, help="max allowed trace distance")
    p = sub.add_parser("fig1", help="delta(t) curves for the four figure panels")
    p.add_argument("--variant", required=True, choices=["a", "b", "c", "d"])
    p.add_argument("--out", default="-")
    sub.add_parser("validate", help="run the invariant suite")
    return parser


def _config_from_args(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else demo_config()
    if args.n_max is not None:
        try:
            cfg = RunConfig(cfg.system, cfg.initial, cfg.grid, args.n_max, cfg.truncation_budget,
                            cfg.max_cutoff, cfg.outputs)
        except ValueError as exc:
            raise ConfigError(str(exc), None, "--n-max") from exc
    return cfg


def _run(args, out: TextIO) -> int:
    if args.command == "greens":
        return cmd_greens(_config_from_args(args), out)
    if args.command == "compare":
        return cmd_compare(_config_from_args(args), out, tolerance=args.tolerance)
    if args.command == "fig1":
        return cmd_fig1(args.variant, out)
    return cmd_validate(out)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    target = getattr(args, "out", "-")
    buffer = io.StringIO()
    try:
        code = _run(args, buffer)
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except TruncationError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_TRUNCATION
    if target == "-":
        sys.stdout.write(buffer.getvalue())
        sys.stdout.flush()
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(buffer.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
