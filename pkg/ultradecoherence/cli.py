''' Command-line front end

Runs one experiment per invocation. The run is configured by an INI file
with the sections [model], [experiment], [solver], [tolerances] and
[output]; command-line flags override file values. Every experiment writes
its tables as CSV, the resolved model as model.json and a manifest.json
describing the run.

Usage::

    python -m ultradecoherence --config run.ini --out results survival
    python -m ultradecoherence --print-defaults

Exit codes: 0 on success, 1 for configuration errors, 2 for numerical
failures.

Classes
-------
RunConfig
    Validated configuration of a run.
RunManifest
    Record of a completed run.

Functions
---------
load_config(path, overrides)
    Read the defaults, a config file and overrides.
run(config)
    Run an experiment and write its outputs.
main(argv)
    Entry point.
'''

import argparse
import configparser
import logging
import sys
import time

from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from ultradecoherence import __version__
from ultradecoherence.core import (BlockDensityMatrix, ConfigurationError, ForbiddenTransitionError, NumericalError,
                                   Tolerances, validate)
from ultradecoherence.export import trajectories_to_frame, write_json, write_plot_data, write_table
from ultradecoherence.integrators import IntegratorConfig
from ultradecoherence.jumps import back_react, empirical_survival, first_step_distribution, sample_trajectories, survival
from ultradecoherence.lindblad import evolve_full
from ultradecoherence.models import (analytic_arrival_density_two_site, analytic_survival, analytic_survival_two_site,
                                     basis_state, DEVICES, get_device)
from ultradecoherence.reduction import KMode, compute_reduced, evolve_diagonal
from ultradecoherence.utils import as_float_list, get_kwarg_names

logger = logging.getLogger(__name__)


DEFAULTS = """\
[model]
# von-neumann, photon-detector, two-site, random or custom
name = von-neumann
# mixed, basis:k, fock:n, amplitudes:a0,a1,..., coherent:alpha, L or R
state = mixed
# every other key is passed to the model, e.g.
# num_outcomes = 2
# coupling = 1.0
# dephasing_rate = 100.0
# the custom model reads the model.json written by an earlier run:
# spec = results/model.json

[experiment]
t_max = 100
t_points = 501
source = 0
seed =
n_traj = 10000
gammas = 50, 100, 200, 400, 800
max_clicks = 1
confidence = 0.95

[solver]
# expm, RK45 or RK4
method = expm
rel_tol = 1e-8
abs_tol = 1e-10
max_step = 0.05
# resonant or exact
k_mode = resonant

[tolerances]
trace = 1e-9
hermitian = 1e-10
psd = 1e-8
degenerate = 1e-12

[output]
dir = results
emit_plot_data = false
n_jobs = 1
progress = false
"""



# CONFIGURATION



def _parse_value(text: str):
    # Model properties: numbers, comma separated lists, booleans, none or strings
    text = text.strip()
    lowered = text.lower()
    if lowered in ("none", ""):
        return None
    if lowered in ("true", "false"):
        return lowered == "true"
    for convert in (int, float):
        try:
            return convert(text)
        except ValueError:
            pass
    if "," in text:
        try:
            return tuple(as_float_list(text))
        except ValueError:
            pass
    return text


def _get(parser: configparser.ConfigParser, section: str, key: str, convert: Callable):
    text = parser.get(section, key, fallback="").strip()
    try:
        if convert is bool:
            return parser.getboolean(section, key)
        return convert(text)
    except ValueError:
        raise ConfigurationError("{0}.{1}: cannot read {2!r}".format(section, key, text)) from None


def _optional_int(text: str) -> Optional[int]:
    return int(text) if text else None


def load_config(path=None, overrides: Dict[Tuple[str, str], str] = None) -> configparser.ConfigParser:
    ''' Read the configuration.

    Parameters
    ----------
    path : str or Path, optional
        INI file; values replace the defaults.
    overrides : dict, optional
        ``(section, key) -> value`` applied last.

    Returns
    -------
    ConfigParser

    Raises
    ------
    ConfigurationError
        If the file cannot be read or parsed.
    '''

    parser = configparser.ConfigParser()
    parser.read_string(DEFAULTS)

    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError("config: no such file {0}".format(path))
        try:
            parser.read(path)
        except configparser.Error as error:
            raise ConfigurationError("config: {0}".format(error)) from error

    for (section, key), value in (overrides or {}).items():
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section, key, str(value))
    return parser



@dataclass(frozen=True)
class RunConfig:
    ''' Configuration of a run.

    Parameters
    ----------
    experiment : str
        One of the keys of `EXPERIMENTS`.
    model_name : str
    model_params : dict
        Properties passed to the model device.
    state : str
        Initial state of Q, see `models.parse_state`.
    t_max, t_points
        Output time grid.
    source : int
        Initial device level.
    seed : int, optional
        Master seed; required for trajectories.
    n_traj : int
    gammas : tuple of float
        Dephasing rates of the gamma sweep.
    max_clicks : int
        Transitions per trajectory; 1 for first-click statistics.
    confidence : float
        Level of the Monte Carlo confidence half-widths.
    solver : IntegratorConfig
    k_mode : KMode
    tolerances : Tolerances
    output_dir : Path
    emit_plot_data : bool
    n_jobs : int
    progress : bool
    '''

    experiment: str
    model_name: str = "von-neumann"
    model_params: Dict[str, object] = field(default_factory=dict)
    state: str = "mixed"
    t_max: float = 100.0
    t_points: int = 501
    source: int = 0
    seed: Optional[int] = None
    n_traj: int = 10000
    gammas: Tuple[float, ...] = (50.0, 100.0, 200.0, 400.0, 800.0)
    max_clicks: int = 1
    confidence: float = 0.95
    solver: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(method="expm"))
    k_mode: KMode = KMode.RESONANT
    tolerances: Tolerances = field(default_factory=Tolerances)
    output_dir: Path = Path("results")
    emit_plot_data: bool = False
    n_jobs: int = 1
    progress: bool = False

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigurationError("experiment must be one of {0}, got {1!r}".format(
                sorted(EXPERIMENTS), self.experiment))
        if not self.t_max > 0:
            raise ConfigurationError("experiment.t_max must be positive, got {0!r}".format(self.t_max))
        if not self.t_points >= 2:
            raise ConfigurationError("experiment.t_points must be at least 2, got {0!r}".format(self.t_points))
        if not self.n_traj >= 1:
            raise ConfigurationError("experiment.n_traj must be at least 1, got {0!r}".format(self.n_traj))
        if not self.max_clicks >= 1:
            raise ConfigurationError("experiment.max_clicks must be at least 1, got {0!r}".format(self.max_clicks))
        if not 0 < self.confidence < 1:
            raise ConfigurationError("experiment.confidence must lie in (0, 1), got {0!r}".format(self.confidence))
        if self.seed is not None and self.seed < 0:
            raise ConfigurationError("experiment.seed must be nonnegative, got {0}".format(self.seed))
        if self.n_jobs == 0:
            raise ConfigurationError("output.n_jobs must be nonzero")

        if self.experiment == "trajectories" and self.seed is None:
            raise ConfigurationError("experiment.seed is required for trajectories")
        if self.experiment == "gamma-sweep":
            gammas = self.gammas
            if len(gammas) < 2:
                raise ConfigurationError("experiment.gammas needs at least 2 values, got {0}".format(len(gammas)))
            if any(not gamma > 0 for gamma in gammas):
                raise ConfigurationError("experiment.gammas must all be positive, got {0}".format(list(gammas)))
            if any(later <= earlier for earlier, later in zip(gammas, gammas[1:])):
                raise ConfigurationError("experiment.gammas must be strictly ascending, got {0}".format(list(gammas)))

    @classmethod
    def from_parser(cls, parser: configparser.ConfigParser, experiment: str) -> "RunConfig":
        model = dict(parser.items("model"))
        name = model.pop("name", "von-neumann").strip()
        state = model.pop("state", "mixed").strip()
        params = {key: _parse_value(value) for key, value in model.items()}
        params = {key: value for key, value in params.items() if value is not None}

        try:
            gammas = tuple(as_float_list(parser.get("experiment", "gammas", fallback="")))
        except ValueError:
            raise ConfigurationError("experiment.gammas: cannot read {0!r}".format(
                parser.get("experiment", "gammas"))) from None

        solver = IntegratorConfig(method=parser.get("solver", "method").strip(),
                                  rel_tol=_get(parser, "solver", "rel_tol", float),
                                  abs_tol=_get(parser, "solver", "abs_tol", float),
                                  max_step=_get(parser, "solver", "max_step", float))
        tolerances = Tolerances(**{key: _get(parser, "tolerances", key, float)
                                   for key in ("trace", "hermitian", "psd", "degenerate")})

        return cls(experiment=experiment,
                   model_name=name,
                   model_params=params,
                   state=state,
                   t_max=_get(parser, "experiment", "t_max", float),
                   t_points=_get(parser, "experiment", "t_points", int),
                   source=_get(parser, "experiment", "source", int),
                   seed=_get(parser, "experiment", "seed", _optional_int),
                   n_traj=_get(parser, "experiment", "n_traj", int),
                   gammas=gammas,
                   max_clicks=_get(parser, "experiment", "max_clicks", int),
                   confidence=_get(parser, "experiment", "confidence", float),
                   solver=solver,
                   k_mode=KMode.parse(parser.get("solver", "k_mode")),
                   tolerances=tolerances,
                   output_dir=Path(parser.get("output", "dir").strip()),
                   emit_plot_data=_get(parser, "output", "emit_plot_data", bool),
                   n_jobs=_get(parser, "output", "n_jobs", int),
                   progress=_get(parser, "output", "progress", bool))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["k_mode"] = self.k_mode.value
        data["output_dir"] = str(self.output_dir)
        data["gammas"] = list(self.gammas)
        return data

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.t_points)



@dataclass
class RunManifest:
    ''' Record of a completed run.

    Parameters
    ----------
    config : dict
        Echo of the run configuration.
    version : str
    started : str
        ISO timestamp.
    duration : float
        Wall-clock seconds.
    outputs : list of str
    warnings : list of str
        Warnings logged during the run.
    '''

    config: dict
    version: str
    started: str
    duration: float
    outputs: List[str]
    warnings: List[str]

    def to_dict(self) -> dict:
        return asdict(self)



# EXPERIMENTS



def _device(config: RunConfig):
    device_class = DEVICES.get(config.model_name)
    if device_class is not None:
        unknown = set(config.model_params) - set(get_kwarg_names(device_class.__init__))
        if unknown:
            raise ConfigurationError("model.{0}: not a parameter of {1}".format(sorted(unknown)[0], config.model_name))
    return get_device(config.model_name, state=config.state, **config.model_params)


def _model(config: RunConfig, outputs: List[Path], name: str = "model", **overrides):
    device = _device(config)
    spec = device.resolve(**overrides)
    outputs.append(write_json(spec.to_dict(), config.output_dir / (name + ".json")))
    violations = validate(spec, config.tolerances)
    if violations:
        raise ConfigurationError("model: {0}".format("; ".join(violations)))
    if not 0 <= config.source < spec.num_levels:
        raise ConfigurationError("experiment.source must lie in 0..{0}, got {1}".format(
            spec.num_levels - 1, config.source))
    return spec, device.resolve_state(**overrides)


def _reduced(config: RunConfig, spec, outputs: List[Path]):
    reduced = compute_reduced(spec, config.k_mode)
    outputs.append(write_json(reduced.to_dict(), config.output_dir / "reduced_model.json"))
    return reduced


def _write(config: RunConfig, name: str, frame: pd.DataFrame, outputs: List[Path], summary: dict = None):
    outputs.append(write_table(frame, config.output_dir / (name + ".csv"), summary))
    if config.emit_plot_data:
        outputs.append(write_plot_data(frame, config.output_dir / (name + ".dat")))


def run_validate(config: RunConfig) -> List[Path]:
    spec = _device(config).resolve()
    violations = validate(spec, config.tolerances)
    outputs = [write_json(spec.to_dict(), config.output_dir / "model.json")]
    _write(config, "validation", pd.DataFrame({"violation": violations}, dtype=object), outputs,
           {"violations": len(violations)})
    if violations:
        raise ConfigurationError("model: {0}".format("; ".join(violations)))
    return outputs


def run_survival(config: RunConfig) -> List[Path]:
    outputs = []
    spec, rho0 = _model(config, outputs)
    reduced = _reduced(config, spec, outputs)
    t_grid = config.time_grid()

    timeline = back_react(reduced.back_reaction(config.source), rho0, spec.system.hamiltonian, t_grid,
                          config.solver, config.tolerances)
    curve = survival(timeline)
    analytic = analytic_survival(spec, rho0, t_grid) if config.source == 0 else None
    if analytic is None:
        analytic = np.full(len(t_grid), np.nan)

    frame = pd.DataFrame({"t": t_grid, "p_numeric": curve.values, "p_analytic": analytic,
                          "abs_diff": np.abs(curve.values - analytic)})
    summary = {"survival_at_t_max": float(curve.values[-1])}
    if np.all(np.isfinite(analytic)):
        summary["max_abs_diff"] = float(np.max(frame["abs_diff"]))
    _write(config, "survival", frame, outputs, summary)
    return outputs


def run_firststep(config: RunConfig) -> List[Path]:
    outputs = []
    spec, rho0 = _model(config, outputs)
    reduced = _reduced(config, spec, outputs)

    distribution = first_step_distribution(reduced, rho0, config.source, None, config.solver,
                                           tolerances=config.tolerances)
    _write(config, "firststep", distribution.to_frame(), outputs,
           {"escape_total": distribution.escape_total, "remainder": distribution.remainder,
            "t_max": distribution.t_max})
    return outputs


def run_trajectories(config: RunConfig) -> List[Path]:
    outputs = []
    spec, rho0 = _model(config, outputs)
    reduced = _reduced(config, spec, outputs)
    t_grid = config.time_grid()

    trajectories = sample_trajectories(reduced, rho0, config.source, config.n_traj, config.seed, config.t_max,
                                       config.solver, n_jobs=config.n_jobs, progress=config.progress,
                                       max_clicks=config.max_clicks, tolerances=config.tolerances)

    frame = trajectories_to_frame(trajectories)
    summary = {"n_traj": len(trajectories), "seed": config.seed, "censored": int(frame["censored"].sum())}
    clicked = frame[frame["censored"] == 0]
    for level in reduced.targets(config.source):
        summary["frequency_{0}".format(level)] = float(np.mean(frame["to_level"] == level))
    if len(clicked):
        summary["mean_t_click"] = float(clicked["t_click"].mean())
    _write(config, "trajectories", frame, outputs, summary)

    if summary["censored"]:
        logger.warning("%d of %d trajectories censored at t_max = %g", summary["censored"], len(trajectories),
                       config.t_max)

    curve = empirical_survival(trajectories, t_grid, config.confidence)
    analytic = analytic_survival(spec, rho0, t_grid) if config.source == 0 else None
    if analytic is None:
        analytic = np.full(len(t_grid), np.nan)
    _write(config, "survival_mc", curve.to_frame("p_emp", analytic), outputs)

    if config.max_clicks > 1:
        rows = [(trajectory.index, number, event.time, event.from_level, event.to_level)
                for trajectory in trajectories for number, event in enumerate(trajectory.events)]
        clicks = pd.DataFrame(rows, columns=["seed_index", "click", "t", "from_level", "to_level"])
        _write(config, "clicks", clicks, outputs, {"extrapolation": "transitions after the first click"})
    return outputs


def _compare_populations(config: RunConfig, spec, rho0, reduced):
    t_grid = config.time_grid()
    initial = BlockDensityMatrix.product(rho0, spec.num_levels, config.source)
    full = evolve_full(spec, initial, t_grid, config.solver, config.tolerances)
    diagonal = evolve_diagonal(reduced, {config.source: rho0}, t_grid, config.solver, config.tolerances)
    return full, full.populations(), diagonal.populations()


def run_compare(config: RunConfig) -> List[Path]:
    outputs = []
    spec, rho0 = _model(config, outputs)
    reduced = _reduced(config, spec, outputs)
    full, p_full, p_reduced = _compare_populations(config, spec, rho0, reduced)

    frame = pd.DataFrame({"t": full.times})
    for mu in range(spec.num_levels):
        frame["p_full_{0}".format(mu)] = p_full[:, mu]
    for mu in range(spec.num_levels):
        frame["p_reduced_{0}".format(mu)] = p_reduced[:, mu]
    frame["maxcoh"] = full.max_coherence()

    _write(config, "full_timeline", full.to_frame(), outputs)
    _write(config, "compare", frame, outputs, {"max_abs_error": float(np.max(np.abs(p_full - p_reduced)))})
    return outputs


def run_gamma_sweep(config: RunConfig) -> List[Path]:
    outputs = []
    errors = []
    for gamma in config.gammas:
        logger.info("gamma = %g", gamma)
        spec, rho0 = _model(config, outputs, "model_gamma_{0:g}".format(gamma), dephasing_rate=gamma)
        reduced = compute_reduced(spec, config.k_mode)
        _, p_full, p_reduced = _compare_populations(config, spec, rho0, reduced)
        errors.append(float(np.max(np.abs(p_full - p_reduced))))

    monotone = all(later < earlier for earlier, later in zip(errors, errors[1:]))
    if not monotone:
        logger.warning("Reduction error does not decrease monotonically with gamma: %s", errors)
    _write(config, "gamma_sweep", pd.DataFrame({"gamma": config.gammas, "sup_error": errors}), outputs,
           {"monotone_decreasing": monotone})
    return outputs


def run_arrival(config: RunConfig) -> List[Path]:
    if config.model_name != "two-site":
        raise ConfigurationError("model.name: the arrival experiment needs the two-site model, got {0!r}".format(
            config.model_name))
    outputs = []
    spec, rho0 = _model(config, outputs)
    reduced = _reduced(config, spec, outputs)
    t_grid = config.time_grid()

    timeline = back_react(reduced.back_reaction(0), rho0, spec.system.hamiltonian, t_grid, config.solver,
                          config.tolerances)
    frame = pd.DataFrame({"t": t_grid, "survival_numeric": timeline.traces()})
    if np.max(np.abs(rho0 - basis_state(2, 0))) < 1e-12:
        hopping, chi = spec.metadata["hopping"], spec.metadata["chi"]
        frame["survival_analytic"] = analytic_survival_two_site(hopping, chi, t_grid)
        frame["density_numeric"] = timeline.density()
        frame["density_analytic"] = analytic_arrival_density_two_site(hopping, chi, t_grid)
    else:
        frame["survival_analytic"] = np.nan
        frame["density_numeric"] = timeline.density()
        frame["density_analytic"] = np.nan

    summary = {
        "max_abs_diff_survival": float(np.max(np.abs(frame["survival_numeric"] - frame["survival_analytic"]))),
        "max_abs_diff_density": float(np.max(np.abs(frame["density_numeric"] - frame["density_analytic"]))),
    }
    _write(config, "arrival", frame, outputs, summary)
    return outputs


EXPERIMENTS = {
    "validate": run_validate,
    "survival": run_survival,
    "firststep": run_firststep,
    "trajectories": run_trajectories,
    "compare": run_compare,
    "gamma-sweep": run_gamma_sweep,
    "arrival": run_arrival,
}



# RUNNING



class _WarningCollector(logging.Handler):

    def __init__(self):
        super().__init__(level=logging.WARNING)
        self.messages = []

    def emit(self, record):
        self.messages.append("{0}: {1}".format(record.name, record.getMessage()))


def run(config: RunConfig) -> RunManifest:
    ''' Run an experiment.

    Writes the experiment tables and manifest.json to `config.output_dir`.

    Parameters
    ----------
    config : RunConfig

    Returns
    -------
    RunManifest
    '''

    collector = _WarningCollector()
    package_logger = logging.getLogger("ultradecoherence")
    package_logger.addHandler(collector)

    started = datetime.now(timezone.utc).isoformat()
    clock = time.perf_counter()
    try:
        logger.info("Running %s on %s", config.experiment, config.model_name)
        outputs = EXPERIMENTS[config.experiment](config)
    finally:
        package_logger.removeHandler(collector)

    manifest = RunManifest(config=config.to_dict(),
                           version=__version__,
                           started=started,
                           duration=time.perf_counter() - clock,
                           outputs=[str(path) for path in outputs],
                           warnings=collector.messages)
    write_json(manifest.to_dict(), config.output_dir / "manifest.json")
    return manifest



class _ArgumentParser(argparse.ArgumentParser):
    # Usage errors are configuration errors (exit code 1)

    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="ultradecoherence",
                             description="Simulate measurement devices in the ultradecoherence limit.")
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--k-mode", choices=[mode.value for mode in KMode], help="evaluation of the K operators")
    parser.add_argument("--n-jobs", type=int, help="worker threads for trajectory ensembles")
    parser.add_argument("--multi-click", type=int, metavar="MAX_CLICKS",
                        help="chain up to MAX_CLICKS transitions per trajectory (extrapolation)")
    parser.add_argument("--emit-plot-data", action="store_true", help="also write gnuplot data files")
    parser.add_argument("--progress", action="store_true", help="show a progress bar for trajectory ensembles")
    parser.add_argument("--print-defaults", action="store_true", help="print the default configuration and exit")
    parser.add_argument("--log-level", default="WARNING", help="logging level, e.g. INFO or DEBUG")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)

    subparsers = parser.add_subparsers(dest="experiment", metavar="experiment")
    for name in EXPERIMENTS:
        subparsers.add_parser(name)
    return parser


def _overrides(args) -> Dict[Tuple[str, str], str]:
    flags = {
        ("experiment", "seed"): args.seed,
        ("output", "dir"): args.out,
        ("solver", "k_mode"): args.k_mode,
        ("output", "n_jobs"): args.n_jobs,
        ("experiment", "max_clicks"): args.multi_click,
        ("output", "emit_plot_data"): "true" if args.emit_plot_data else None,
        ("output", "progress"): "true" if args.progress else None,
    }
    return {key: value for key, value in flags.items() if value is not None}


def main(argv=None) -> int:
    ''' Entry point.

    Parameters
    ----------
    argv : list of str, optional
        Arguments; ``sys.argv[1:]`` by default.

    Returns
    -------
    int
        Exit code.
    '''

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigurationError as error:
        parser.print_usage(sys.stderr)
        print("error: {0}".format(error), file=sys.stderr)
        return 1

    level = logging.getLevelName(str(args.log_level).upper())
    if not isinstance(level, int):
        print("error: unknown log level {0!r}".format(args.log_level), file=sys.stderr)
        return 1
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    if args.print_defaults:
        print(DEFAULTS, end="")
        return 0
    if args.experiment is None:
        parser.print_usage(sys.stderr)
        print("error: an experiment is required", file=sys.stderr)
        return 1

    try:
        parser_config = load_config(args.config, _overrides(args))
        config = RunConfig.from_parser(parser_config, args.experiment)
        manifest = run(config)
    except (ConfigurationError, ForbiddenTransitionError) as error:
        logger.error("Configuration error: %s", error)
        return 1
    except NumericalError as error:
        logger.error("Numerical failure: %s", error)
        return 2

    logger.info("Wrote %d files in %.2f s", len(manifest.outputs), manifest.duration)
    return 0
