"""Config-file parsing for the command line interface.

Plain INI-style key/value sections. Every key has a default matching the
shipped `paper.cfg`; unknown sections or keys are rejected so typos cannot
silently fall back to defaults.
"""

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import adaptive, geometry, harness


class ConfigError(Exception):
    """Invalid, unreadable or unknown configuration input."""


_SCHEMA = {
    "scenario": {
        "primary_source": "-2.8 0.3 0.0",
        "sound_speed": "343.0",
        "g_hat_error_std": "0.0",
    },
    "methods": {
        "mpc": "true",
        "total_ki_betas": "0.0 2.0",
        "individual_ki_beta": "10.0",
        "individual_ki_beta_secondary": "",
    },
    "kernel": {
        "lambda": "1e-3",
        "mc_samples": "2500",
    },
    "nlms": {
        "mu0": "0.5",
        "epsilon": "1e-3",
    },
    "run": {
        "frequency_hz": "200.0",
        "iterations": "12000",
        "checkpoint_every": "100",
        "snr_db": "40.0",
        "seed": "12345",
        "excitation": "gaussian",
    },
    "sweep": {
        "f_start_hz": "100.0",
        "f_stop_hz": "600.0",
        "f_step_hz": "10.0",
        "iterations": "12000",
    },
    "perturb": {
        "f_start_hz": "100.0",
        "f_stop_hz": "600.0",
        "f_step_hz": "10.0",
        "trials": "50",
        "radial_std_m": "0.05",
        "azimuth_std_deg": "6.0",
        "zenith_std_deg": "3.0",
        "iterations": "12000",
    },
}


def _parse_float(raw, where):
    try:
        return float(raw)
    except ValueError as err:
        raise ConfigError(f"{where}: expected a number, got {raw!r}") from err


def _parse_int(raw, where):
    try:
        return int(raw)
    except ValueError as err:
        raise ConfigError(f"{where}: expected an integer, got {raw!r}") from err


def _parse_floats(raw, where):
    return [_parse_float(tok, where) for tok in raw.split()]


def _parse_bool(raw, where):
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _parse_snr(raw, where):
    lowered = raw.strip().lower()
    if lowered in ("inf", "+inf", "none"):
        return math.inf
    return _parse_float(raw, where)


@dataclass(frozen=True)
class ExperimentConfig:
    """All resolved settings of one experiment configuration file."""

    scenario: geometry.Scenario
    methods: tuple
    lam: float
    mc_samples: int
    nlms: adaptive.NlmsParams
    seed: int
    snr_db: float
    excitation: str
    g_hat_error_std: float
    run_frequency_hz: float
    run_iterations: int
    checkpoint_every: int
    sweep_f_start_hz: float
    sweep_f_stop_hz: float
    sweep_f_step_hz: float
    sweep_iterations: int
    perturb_f_start_hz: float
    perturb_f_stop_hz: float
    perturb_f_step_hz: float
    perturb_trials: int
    perturb_stds: harness.PerturbationStds
    perturb_iterations: int

    def base_run_config(self, frequency_hz=None, n_iterations=None):
        """RunConfig template (first method; studies substitute the rest)."""
        return harness.RunConfig(
            scenario=self.scenario,
            method=self.methods[0],
            frequency_hz=self.run_frequency_hz if frequency_hz is None else frequency_hz,
            n_iterations=self.run_iterations if n_iterations is None else n_iterations,
            snr_db=self.snr_db,
            seed=self.seed,
            mc_samples=self.mc_samples,
            checkpoint_every=self.checkpoint_every,
            lam=self.lam,
            nlms=self.nlms,
            excitation=self.excitation,
            g_hat_error_std=self.g_hat_error_std,
        )

    def to_dict(self):
        """JSON-ready echo of every resolved setting."""
        scn = self.scenario
        return {
            "scenario": {
                "num_secondary": scn.num_secondary,
                "num_mics": scn.num_mics,
                "num_reference": scn.num_reference,
                "sound_speed": scn.sound_speed,
                "primary_source": list(scn.primary_source),
                "region_center": list(scn.region.center),
                "region_half_extents": list(scn.region.half_extents),
                "secondary_sources": [list(p) for p in scn.secondary_sources],
                "error_mics": [list(p) for p in scn.error_mics],
                "fingerprint": geometry.scenario_fingerprint(scn),
            },
            "methods": [
                {
                    "kind": m.kind,
                    "beta": m.beta,
                    "beta_secondary": m.beta_secondary,
                    "label": m.label,
                }
                for m in self.methods
            ],
            "kernel": {"lambda": self.lam, "mc_samples": self.mc_samples},
            "nlms": {"mu0": self.nlms.mu0, "epsilon": self.nlms.epsilon},
            "run": {
                "frequency_hz": self.run_frequency_hz,
                "iterations": self.run_iterations,
                "checkpoint_every": self.checkpoint_every,
                "snr_db": None if math.isinf(self.snr_db) else self.snr_db,
                "seed": self.seed,
                "excitation": self.excitation,
                "g_hat_error_std": self.g_hat_error_std,
            },
            "sweep": {
                "f_start_hz": self.sweep_f_start_hz,
                "f_stop_hz": self.sweep_f_stop_hz,
                "f_step_hz": self.sweep_f_step_hz,
                "iterations": self.sweep_iterations,
            },
            "perturb": {
                "f_start_hz": self.perturb_f_start_hz,
                "f_stop_hz": self.perturb_f_stop_hz,
                "f_step_hz": self.perturb_f_step_hz,
                "trials": self.perturb_trials,
                "radial_std_m": self.perturb_stds.radial_m,
                "azimuth_std_deg": self.perturb_stds.azimuth_deg,
                "zenith_std_deg": self.perturb_stds.zenith_deg,
                "iterations": self.perturb_iterations,
            },
        }


def _build_methods(values):
    methods = []
    if _parse_bool(values["methods"]["mpc"], "[methods] mpc"):
        methods.append(harness.MethodSpec(kind="mpc"))
    for beta in _parse_floats(values["methods"]["total_ki_betas"], "[methods] total_ki_betas"):
        methods.append(harness.MethodSpec(kind="total_ki", beta=beta))
    raw_beta = values["methods"]["individual_ki_beta"].strip()
    if raw_beta:
        beta = _parse_float(raw_beta, "[methods] individual_ki_beta")
        raw_sec = values["methods"]["individual_ki_beta_secondary"].strip()
        beta_sec = _parse_float(raw_sec, "[methods] individual_ki_beta_secondary") if raw_sec else None
        methods.append(harness.MethodSpec(kind="individual_ki", beta=beta, beta_secondary=beta_sec))
    if not methods:
        raise ConfigError("[methods]: at least one method must be enabled")
    return tuple(methods)


def resolve(values):
    """Validated ExperimentConfig from a raw {section: {key: str}} mapping."""
    primary = _parse_floats(values["scenario"]["primary_source"], "[scenario] primary_source")
    if len(primary) != 3:
        raise ConfigError("[scenario] primary_source: expected three coordinates")
    scenario = geometry.build_paper_scenario()
    base = geometry.Scenario(
        secondary_sources=scenario.secondary_sources,
        error_mics=scenario.error_mics,
        primary_source=np.array(primary),
        region=scenario.region,
        num_reference=scenario.num_reference,
        sound_speed=_parse_float(values["scenario"]["sound_speed"], "[scenario] sound_speed"),
    )
    try:
        return ExperimentConfig(
            scenario=base,
            methods=_build_methods(values),
            lam=_parse_float(values["kernel"]["lambda"], "[kernel] lambda"),
            mc_samples=_parse_int(values["kernel"]["mc_samples"], "[kernel] mc_samples"),
            nlms=adaptive.NlmsParams(
                mu0=_parse_float(values["nlms"]["mu0"], "[nlms] mu0"),
                epsilon=_parse_float(values["nlms"]["epsilon"], "[nlms] epsilon"),
            ),
            seed=_parse_int(values["run"]["seed"], "[run] seed"),
            snr_db=_parse_snr(values["run"]["snr_db"], "[run] snr_db"),
            excitation=values["run"]["excitation"].strip(),
            g_hat_error_std=_parse_float(
                values["scenario"]["g_hat_error_std"], "[scenario] g_hat_error_std"
            ),
            run_frequency_hz=_parse_float(values["run"]["frequency_hz"], "[run] frequency_hz"),
            run_iterations=_parse_int(values["run"]["iterations"], "[run] iterations"),
            checkpoint_every=_parse_int(values["run"]["checkpoint_every"], "[run] checkpoint_every"),
            sweep_f_start_hz=_parse_float(values["sweep"]["f_start_hz"], "[sweep] f_start_hz"),
            sweep_f_stop_hz=_parse_float(values["sweep"]["f_stop_hz"], "[sweep] f_stop_hz"),
            sweep_f_step_hz=_parse_float(values["sweep"]["f_step_hz"], "[sweep] f_step_hz"),
            sweep_iterations=_parse_int(values["sweep"]["iterations"], "[sweep] iterations"),
            perturb_f_start_hz=_parse_float(values["perturb"]["f_start_hz"], "[perturb] f_start_hz"),
            perturb_f_stop_hz=_parse_float(values["perturb"]["f_stop_hz"], "[perturb] f_stop_hz"),
            perturb_f_step_hz=_parse_float(values["perturb"]["f_step_hz"], "[perturb] f_step_hz"),
            perturb_trials=_parse_int(values["perturb"]["trials"], "[perturb] trials"),
            perturb_stds=harness.PerturbationStds(
                radial_m=_parse_float(values["perturb"]["radial_std_m"], "[perturb] radial_std_m"),
                azimuth_deg=_parse_float(
                    values["perturb"]["azimuth_std_deg"], "[perturb] azimuth_std_deg"
                ),
                zenith_deg=_parse_float(
                    values["perturb"]["zenith_std_deg"], "[perturb] zenith_std_deg"
                ),
            ),
            perturb_iterations=_parse_int(values["perturb"]["iterations"], "[perturb] iterations"),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from err


def load_config(path):
    """Parse and validate a config file; missing file or unknown keys fail."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except (configparser.Error, UnicodeDecodeError) as err:
        raise ConfigError(f"cannot parse {path}: {err}") from err

    values = {section: dict(defaults) for section, defaults in _SCHEMA.items()}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {key!r} in section [{section}]")
            values[section][key] = raw
    return resolve(values)


def default_config():
    """The built-in defaults (identical to the shipped paper.cfg)."""
    return resolve({section: dict(defaults) for section, defaults in _SCHEMA.items()})
