"""
Command-line front end for the quasidirac package.

Subcommands emit figure-ready tables:

    dad           DAD weights per node
    moments       moments against alpha^n
    envelope      transmitted envelope against the shifted target
    transmission  T(p) against exp(-i alpha p), with window boundaries
    postselect    optimal pre/post-selection report

Parameters come from built-in defaults, then an optional flat key=value
file (--config), then explicit flags. Exit codes: 0 success, 1 parameter
error, 2 insufficient precision, 3 I/O error.
"""

import argparse
import logging
import sys
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from tqdm import tqdm

from quasidirac.dad import DadSpec, build_dad, moment_table
from quasidirac.errors import (
    InsufficientPrecisionError,
    InvalidParameterError,
    PrecisionOverflowError,
    QuasiDiracError,
)
from quasidirac.momentum import (
    analytic_window,
    bandwidth_fit_check,
    empirical_window,
    spectral_amplitude,
    transmission,
)
from quasidirac.output import (
    dad_record,
    exact_repr,
    format_parts,
    format_value,
    output_digits,
    precision_record,
    write_report,
    write_table,
)
from quasidirac.postselect import optimal_states, spin_component, success_probability
from quasidirac.precision import (
    CRat,
    PrecisionCtx,
    PrecisionMode,
    as_rational,
    re_im,
    resolve_context,
    to_mpc,
    to_mpf,
    working_context,
)
from quasidirac.pulse import (
    GaussianEnvelope,
    NormalizationMode,
    TransmittedPulse,
    distortion,
    evaluation_grid,
    target_envelope,
    transmitted_curve,
)
from quasidirac.scenario import (
    ScenarioParams,
    arrival_times,
    channel_durations,
    delta_x as scenario_delta_x,
    larmor_phase,
    validity_check,
)
from utils.config import GRID_POINTS, LOG_FORMAT, LOG_LEVEL, OUTPUT_DIR, SHOW_PROGRESS, WINDOW_TOL

logger = logging.getLogger(__name__)

COMMANDS = ("dad", "moments", "envelope", "transmission", "postselect")

EXIT_OK = 0
EXIT_PARAMETER = 1
EXIT_PRECISION = 2
EXIT_IO = 3

GAUGE_NOTE = (
    "States are given in the N(a) = 1 gauge with zero pre-selection phases; "
    "success probability and |G~| do not depend on this choice."
)


class RunConfig(BaseModel):
    """Fully resolved parameters of one CLI run."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    command: Literal["dad", "moments", "envelope", "transmission", "postselect"]
    K: List[int] = Field(default_factory=lambda: [1])
    alpha_re: List[Fraction] = Field(default_factory=lambda: [Fraction(0)])
    alpha_im: Fraction = Fraction(0)
    delta_x: Optional[Fraction] = None
    sigma: Optional[Fraction] = None
    omega_L: Optional[Fraction] = None
    d: Optional[Fraction] = None
    p0: Optional[Fraction] = None
    n_max: int = Field(default=40, ge=0)
    grid_points: int = Field(default=GRID_POINTS, ge=2)
    p_max: Optional[Fraction] = None
    digits: Optional[int] = None
    format: Literal["csv", "json"] = "csv"
    out: Path = OUTPUT_DIR
    units: Literal["length", "delta-x", "K-delta-x"] = "length"
    tol: float = WINDOW_TOL
    log_level: str = LOG_LEVEL

    @field_validator("K", mode="before")
    @classmethod
    def _split_orders(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [int(v) for v in value.replace(",", " ").split()]
        if isinstance(value, int):
            return [value]
        return value

    @field_validator("K")
    @classmethod
    def _non_negative_orders(cls, value: List[int]) -> List[int]:
        if not value or any(k < 0 for k in value):
            raise ValueError("orders must be a non-empty list of non-negative integers")
        return value

    @field_validator("alpha_re", mode="before")
    @classmethod
    def _split_shifts(cls, value: Any) -> Any:
        if isinstance(value, str):
            value = value.replace(",", " ").split()
        if not isinstance(value, (list, tuple)):
            value = [value]
        return [as_rational(v) for v in value]

    @field_validator("alpha_im", "delta_x", "sigma", "omega_L", "d", "p0", "p_max", mode="before")
    @classmethod
    def _to_rational(cls, value: Any) -> Any:
        return None if value is None else as_rational(value)

    @field_validator("delta_x", "sigma", "omega_L", "d", "p0", "p_max")
    @classmethod
    def _positive(cls, value: Optional[Fraction]) -> Optional[Fraction]:
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("tol")
    @classmethod
    def _tolerance(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError("tolerance must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        scenario = [self.omega_L, self.d, self.p0]
        if any(v is not None for v in scenario):
            if any(v is None for v in scenario):
                raise ValueError("--omega-L, --d and --p0 must be given together")
            if self.sigma is None:
                raise ValueError("scenario parameters need --sigma")
            derived = self.omega_L * self.d / (self.p0 * self.p0)
            if self.delta_x is not None and self.delta_x != derived:
                raise ValueError(f"--delta-x {self.delta_x} contradicts omega_L d / p0^2 = {derived}")
        if self.command == "envelope" and self.sigma is None:
            raise ValueError("the envelope command needs --sigma")
        if self.units == "K-delta-x" and 0 in self.K:
            raise ValueError("K-delta-x units are undefined for K = 0")
        return self

    @property
    def has_scenario(self) -> bool:
        return self.omega_L is not None

    def echo(self) -> Dict[str, Any]:
        """Configuration recorded in output metadata (paths and log level excluded)."""
        return self.model_dump(exclude={"out", "log_level"})


@dataclass(frozen=True)
class Case:
    """One (K, alpha) combination of a run."""

    spec: DadSpec
    label: str
    sigma: Optional[Fraction]
    scenario: Optional[ScenarioParams]


def _tag(value: Fraction) -> str:
    """Filename-safe rendering of a rational: -15.5 -> m15p5, 1/3 -> 1_3."""
    text = str(value)
    if value.denominator != 1:
        with localcontext() as ctx:
            ctx.prec = 60
            decimal = Decimal(value.numerator) / Decimal(value.denominator)
        if Fraction(decimal) == value:
            text = str(decimal.normalize())
    return text.replace("-", "m").replace(".", "p").replace("/", "_")


def build_cases(config: RunConfig) -> List[Case]:
    """Expand a run configuration into DAD problems, applying the input units."""
    cases = []
    for K in config.K:
        scenario = None
        if config.has_scenario:
            base = config.delta_x or config.omega_L * config.d / (config.p0 * config.p0)
        else:
            base = config.delta_x or Fraction(1)
        unit = {"length": Fraction(1), "delta-x": base, "K-delta-x": K * base}[config.units]
        sigma = config.sigma * unit if config.sigma is not None else None
        if config.has_scenario:
            scenario = ScenarioParams(omega_L=config.omega_L, d=config.d, p0=config.p0, K=K, sigma=sigma)
        for alpha_re in config.alpha_re:
            alpha = CRat(alpha_re, config.alpha_im) * unit
            label = f"K{K}_alpha{_tag(alpha_re)}"
            if config.alpha_im != 0:
                label += f"_{_tag(config.alpha_im)}i"
            cases.append(Case(DadSpec(K, base, alpha), label, sigma, scenario))
    return cases


def _context(case: Case, config: RunConfig) -> PrecisionCtx:
    """Numeric policy for a case; --digits forces FLOAT mode and must reach required_digits."""
    if config.digits is not None:
        return working_context(case.spec, resolve_context(case.spec, PrecisionMode.FLOAT, config.digits))
    return resolve_context(case.spec)


def _metadata(command: str, title: str, case: Case, config: RunConfig, ctx: PrecisionCtx) -> Dict[str, Any]:
    metadata = {
        "command": command,
        "title": title,
        "config": config.echo(),
        "precision": precision_record(ctx, case.spec),
    }
    if case.scenario is not None:
        metadata["scenario"] = _scenario_record(case)
    return metadata


def _scenario_record(case: Case) -> Dict[str, Any]:
    params = case.scenario
    report = validity_check(params)
    record = {
        "delta_x": str(scenario_delta_x(params)),
        "larmor_phase": str(larmor_phase(params)),
        "validity": {
            "ratio": None if report.ratio is None else str(report.ratio),
            "threshold": str(report.threshold),
            "passed": report.passed,
            "caveat": report.caveat,
        },
        "channel_durations": [[m, str(t)] for m, t in channel_durations(params)],
    }
    if case.spec.alpha.is_real:
        times = arrival_times(params, case.spec.alpha)
        record["arrival_times"] = {
            "delay": str(times.delay),
            "traversal_time": str(times.traversal_time),
            "naive_inference_fails": times.naive_inference_fails,
        }
    return record


def cmd_dad(config: RunConfig) -> List[Path]:
    """Per-node weight tables, one file per (K, alpha)."""
    written = []
    for case in build_cases(config):
        ctx = _context(case, config)
        digits = output_digits(case.spec)
        dad = build_dad(case.spec, ctx)
        rows = []
        mp = ctx.mp
        for m, e in enumerate(dad.eta):
            modulus = abs(e.re) if dad.exact and e.is_real else abs(to_mpc(e, mp))
            rows.append([str(m), *format_parts(e, digits), format_value(modulus, digits),
                         exact_repr(e) if dad.exact else None])
        metadata = _metadata("dad", "DAD weights", case, config, ctx)
        metadata["dad"] = dad_record(dad, digits)
        metadata["is_kronecker"] = dad.is_kronecker
        written += write_table(config.out / f"dad_{case.label}",
                               ["m", "eta_re", "eta_im", "eta_abs", "eta_exact"],
                               rows, metadata, config.format)
    return written


def cmd_moments(config: RunConfig) -> List[Path]:
    """Moment tables x^n against alpha^n for n = 0..n_max."""
    written = []
    for case in build_cases(config):
        ctx = _context(case, config)
        digits = output_digits(case.spec)
        dad = build_dad(case.spec, ctx)
        rows = []
        for row in moment_table(dad, config.n_max, ctx):
            ratio = format_parts(row.ratio, digits) if row.ratio is not None else [None, None]
            rows.append([str(row.n), *format_parts(row.moment, digits), *format_parts(row.target, digits), *ratio])
        metadata = _metadata("moments", "DAD moments", case, config, ctx)
        written += write_table(config.out / f"moments_{case.label}",
                               ["n", "moment_re", "moment_im", "target_re", "target_im", "ratio_re", "ratio_im"],
                               rows, metadata, config.format)
    return written


def cmd_envelope(config: RunConfig) -> List[Path]:
    """Transmitted envelope scaled by 1/sqrt(P_best) against the shifted target."""
    written = []
    for case in build_cases(config):
        ctx = _context(case, config)
        digits = output_digits(case.spec)
        dad = build_dad(case.spec, ctx)
        env = GaussianEnvelope(case.sigma)
        pulse = TransmittedPulse(dad, env, NormalizationMode.BEST_PROBABILITY_SCALED)
        check = bandwidth_fit_check(case.spec, env)

        grid = evaluation_grid(pulse, config.grid_points)
        curve = transmitted_curve(pulse, grid, ctx)
        shift, _ = re_im(case.spec.alpha)
        rows = []
        for X, value in zip(grid, curve):
            reference = target_envelope(env, shift, X, ctx).real
            rows.append([format_value(X, digits), *format_parts(value, digits),
                         format_value(abs(value), digits), format_value(reference, digits)])

        metadata = _metadata("envelope", "Transmitted envelope times 1/sqrt(P_best)", case, config, ctx)
        metadata["p_best"] = str(1 / dad.abs_sum ** 2) if isinstance(dad.abs_sum, Fraction) else None
        metadata["p_best_decimal"] = format_value(1 / to_mpf(dad.abs_sum, ctx.mp) ** 2, digits)
        metadata["bandwidth"] = {
            "fits": check.fits,
            "margin": format_value(check.margin, 15),
            "unbounded": check.unbounded,
        }
        metadata["distortion"] = format_value(distortion(pulse, ctx), 10)
        written += write_table(config.out / f"envelope_{case.label}",
                               ["X", "G_re", "G_im", "G_abs", "target"],
                               rows, metadata, config.format)
    return written


def _momentum_grid(half_width: Any, points: int) -> List[Any]:
    """Symmetric grid with an exact zero at the centre (points rounded up to odd)."""
    steps = max(points // 2, 1)
    return [Fraction(0) if j == 0 else half_width * j / steps for j in range(-steps, steps + 1)]


def cmd_transmission(config: RunConfig) -> List[Path]:
    """T(p) against exp(-i alpha p), the spectral amplitude and both window estimates."""
    written = []
    for case in build_cases(config):
        ctx = _context(case, config)
        digits = output_digits(case.spec)
        dad = build_dad(case.spec, ctx)
        analytic = analytic_window(case.spec)
        empirical = empirical_window(dad, config.tol, ctx)

        mp = ctx.mp
        if config.p_max is not None:
            half_width = to_mpf(config.p_max, mp)
        elif analytic.unbounded or analytic.p_hi == 0:
            half_width = mp.pi / to_mpf(case.spec.delta_x, mp)
        else:
            half_width = 2 * mp.mpf(analytic.p_hi)
        grid = _momentum_grid(half_width, config.grid_points)

        env = GaussianEnvelope(case.sigma) if case.sigma is not None else None
        peak = spectral_amplitude(env, 0, ctx) if env is not None else None
        alpha = case.spec.alpha
        rows = []
        for p in tqdm(grid, desc="Transmission", disable=not SHOW_PROGRESS):
            value = transmission(dad, p, ctx)
            T = to_mpc(value, mp)
            target = mp.exp(-1j * to_mpc(alpha, mp) * to_mpf(p, mp))
            amplitude = spectral_amplitude(env, p, ctx) if env is not None else None
            rows.append([
                format_value(p, digits),
                *format_parts(value, digits),
                format_value(abs(T), digits),
                *format_parts(target, digits),
                format_value(abs(T / target), digits),
                format_value(amplitude, digits),
                format_value(amplitude / peak if amplitude is not None else None, digits),
            ])

        metadata = _metadata("transmission", "Transmission amplitude T(p)", case, config, ctx)
        metadata["windows"] = {
            "analytic": _window_record(analytic),
            "empirical": _window_record(empirical),
        }
        if env is not None:
            check = bandwidth_fit_check(case.spec, env)
            metadata["bandwidth"] = {"fits": check.fits, "margin": format_value(check.margin, 15),
                                     "unbounded": check.unbounded}
        written += write_table(config.out / f"transmission_{case.label}",
                               ["p", "T_re", "T_im", "T_abs", "target_re", "target_im", "ratio_abs",
                                "A", "A_normalized"],
                               rows, metadata, config.format)
    return written


def _window_record(window) -> Dict[str, Any]:
    return {
        "p_lo": format_value(window.p_lo, 15),
        "p_hi": format_value(window.p_hi, 15),
        "tol": window.tol,
        "unbounded": window.unbounded,
        "capped": window.capped,
    }


def cmd_postselect(config: RunConfig) -> List[Path]:
    """Optimal pre/post-selection report per (K, alpha)."""
    written = []
    for case in build_cases(config):
        ctx = _context(case, config)
        digits = output_digits(case.spec)
        dad = build_dad(case.spec, ctx)
        best = optimal_states(dad, case.scenario, ctx=ctx)
        probability = success_probability(dad, best.weights, ctx)
        states = []
        for k in range(case.spec.K + 1):
            m = spin_component(k)
            states.append({
                "component": m,
                "a": format_parts(best.states.amplitude_a(m), digits),
                "b": format_parts(best.states.amplitude_b(m), digits),
            })
        exact = isinstance(best.p_best, Fraction)
        payload = _metadata("postselect", "Optimal post-selection", case, config, ctx)
        payload.update({
            "dad": dad_record(dad, digits),
            "abs_sum": format_value(dad.abs_sum, digits),
            "p_best": str(best.p_best) if exact else None,
            "p_best_decimal": format_value(best.p_best, digits),
            "p_optimal_weights": format_value(probability, digits),
            "weights": [exact_repr(z) if exact else format_value(z, digits) for z in best.weights.z],
            "states": states,
            "gauge_note": GAUGE_NOTE,
        })
        written.append(write_report(config.out / f"postselect_{case.label}", payload))
    return written


HANDLERS = {
    "dad": cmd_dad,
    "moments": cmd_moments,
    "envelope": cmd_envelope,
    "transmission": cmd_transmission,
    "postselect": cmd_postselect,
}


def read_config_file(path: Path) -> Dict[str, str]:
    """
    Parse a flat key=value file.

    Blank lines and '#' comments are skipped; keys may use dashes or
    underscores ("alpha-re" and "alpha_re" are the same key).
    """
    values = {}
    with open(path) as f:
        for number, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(f"{path}:{number}: expected key = value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors map onto the parameter-error exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAMETER, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="quasidirac",
        description="Quasi-Dirac delay amplitude distributions and superoscillatory transmission",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, handler in HANDLERS.items():
        sub = subparsers.add_parser(name, help=handler.__doc__)
        sub.add_argument("--config", type=Path, help="Flat key=value file; flags override its entries")
        sub.add_argument("--K", nargs="+", type=int, help="One or more orders")
        sub.add_argument("--alpha-re", nargs="+", help="One or more real parts of the shift")
        sub.add_argument("--alpha-im", help="Imaginary part of the shift (shared by all real parts)")
        sub.add_argument("--delta-x", help="Node spacing")
        sub.add_argument("--sigma", help="Envelope width")
        sub.add_argument("--omega-L", dest="omega_L", help="Larmor frequency (derives delta_x)")
        sub.add_argument("--d", help="Field region width")
        sub.add_argument("--p0", help="Mean momentum (unit mass)")
        sub.add_argument("--n-max", type=int, help="Highest moment order")
        sub.add_argument("--grid-points", type=int, help="Samples per curve")
        sub.add_argument("--p-max", help="Half width of the momentum grid")
        sub.add_argument("--digits", type=int, help="Force FLOAT mode at this working precision")
        sub.add_argument("--format", choices=["csv", "json"], help="Output format")
        sub.add_argument("--out", type=Path, help="Output directory")
        sub.add_argument("--units", choices=["length", "delta-x", "K-delta-x"],
                         help="Unit of the alpha and sigma inputs")
        sub.add_argument("--tol", type=float, help="Relative tolerance of the empirical window search")
        sub.add_argument("--log-level", help="Logging level")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults < config file < flags into a validated RunConfig."""
    values: Dict[str, Any] = {}
    if args.config is not None:
        values.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if key != "config" and value is not None:
            values[key] = value
    return RunConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = (args.log_level or LOG_LEVEL).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)

    try:
        config = resolve_config(args)
        written = HANDLERS[config.command](config)
    except ValidationError as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_PARAMETER
    except (InsufficientPrecisionError, PrecisionOverflowError) as e:
        logger.error(f"Precision error: {e}")
        return EXIT_PRECISION
    except (InvalidParameterError, QuasiDiracError) as e:
        logger.error(f"Invalid parameters: {e}")
        return EXIT_PARAMETER
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO

    logger.info(f"{config.command}: wrote {len(written)} file(s)")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
