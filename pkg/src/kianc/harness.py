"""Experiment harness: convergence runs, frequency sweeps, perturbation studies.

One `RunConfig` fully determines one adaptive run (geometry, method,
frequency, seeds), and identical configs reproduce results bit for bit.
Multi-run studies fan out over independent jobs whose random streams are
derived from the root seed and the job key, so any worker count yields the
same output. The reported metric is the regional noise power reduction
evaluated with the true physics fields on the evaluation grid, never with
the kernel estimates.
"""

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import acoustics, adaptive, geometry, kernel
from .rng import freq_key, substream

P_RED_FLOOR_DB = -300.0

# a run is declared diverged when the control filter norm exceeds its value
# at iteration 100 by this factor
DIVERGENCE_FACTOR = 1e6

_METHOD_KINDS = ("mpc", "total_ki", "individual_ki")


@dataclass(frozen=True)
class MethodSpec:
    """One adaptive algorithm plus the kernel sharpness it runs with."""

    kind: str
    beta: float = 0.0
    beta_secondary: float = None
    label: str = None

    def __post_init__(self):
        if self.kind not in _METHOD_KINDS:
            raise ValueError(f"unknown method kind {self.kind!r}, expected one of {_METHOD_KINDS}")
        if self.beta < 0:
            raise ValueError(f"beta must be non-negative, got {self.beta}")
        if self.beta_secondary is None:
            object.__setattr__(self, "beta_secondary", self.beta)
        if self.label is None:
            if self.kind == "mpc":
                label = "MPC"
            elif self.kind == "total_ki":
                label = f"TotalKI(beta={self.beta:g})"
            else:
                label = f"IndividualKI(beta={self.beta:g})"
            object.__setattr__(self, "label", label)


def paper_methods(total_betas=(0.0, 2.0), individual_beta=10.0):
    """The four compared controllers of the reproduced experiments."""
    methods = [MethodSpec(kind="mpc")]
    methods += [MethodSpec(kind="total_ki", beta=b) for b in total_betas]
    methods.append(MethodSpec(kind="individual_ki", beta=individual_beta))
    return tuple(methods)


@dataclass(frozen=True)
class PerturbationStds:
    """Spherical-coordinate standard deviations of the source perturbation."""

    radial_m: float = 0.05
    azimuth_deg: float = 6.0
    zenith_deg: float = 3.0


@dataclass(frozen=True)
class RunConfig:
    """Everything one adaptive run depends on.

    `snr_db=None` disables measurement noise; `excitation` is "gaussian"
    (i.i.d. circularly symmetric unit-variance reference per iteration) or
    "constant" (stationary x = 1, used by descent tests). `trial` keys the
    random substreams of repeated perturbation trials.
    """

    scenario: geometry.Scenario
    method: MethodSpec
    frequency_hz: float
    n_iterations: int
    snr_db: float = 40.0
    seed: int = 0
    mc_samples: int = 2500
    checkpoint_every: int = 100
    lam: float = 1e-3
    nlms: adaptive.NlmsParams = field(default_factory=adaptive.NlmsParams)
    excitation: str = "gaussian"
    amplitude: complex = 1.0 + 0.0j
    trial: int = 0
    perturbation: PerturbationStds = None
    eval_counts: tuple = (17, 17, 5)
    g_hat_error_std: float = 0.0
    record_cost: bool = False

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError(f"frequency must be positive, got {self.frequency_hz}")
        if self.n_iterations < 0:
            raise ValueError(f"iteration count must be non-negative, got {self.n_iterations}")
        if self.checkpoint_every < 1:
            raise ValueError("checkpoint interval must be >= 1")
        if self.mc_samples < 1:
            raise ValueError("need at least one Monte Carlo sample")
        if self.excitation not in ("gaussian", "constant"):
            raise ValueError(f"unknown excitation mode {self.excitation!r}")
        if self.snr_db is not None and not np.isfinite(self.snr_db) and not np.isposinf(self.snr_db):
            raise ValueError(f"snr_db must be finite, +inf or None, got {self.snr_db}")
        if self.scenario.num_reference != 1:
            raise ValueError("the harness models exactly one reference channel")
        if self.amplitude == 0:
            raise ValueError("primary amplitude must be nonzero")


@dataclass
class RunResult:
    """Trajectory and final state of one adaptive run."""

    checkpoints: list
    p_red_db: list
    final_w: np.ndarray
    final_field_ue: np.ndarray
    final_field_up: np.ndarray
    eval_points: np.ndarray
    diverged: bool
    wall_time_s: float
    config: RunConfig
    cost_trace: list = None

    @property
    def final_p_red_db(self):
        return self.p_red_db[-1]


class SweepRow(NamedTuple):
    frequency_hz: float
    method: str
    p_red_db: float
    diverged: bool


class PerturbRow(NamedTuple):
    frequency_hz: float
    method: str
    mean_p_red_db: float
    std_p_red_db: float
    trials: int
    diverged: bool


def p_red(u_e, u_p):
    """Regional noise power reduction in dB over the evaluation points.

    10 log10 of the controlled-to-uncontrolled energy ratio; 0 dB means no
    change, negative is reduction. An exactly zero controlled field is
    floored at -300 dB.
    """
    u_e = np.asarray(u_e)
    u_p = np.asarray(u_p)
    if u_e.shape != u_p.shape:
        raise ValueError("field vectors must have equal length")
    den = float(np.sum(np.abs(u_p) ** 2))
    if den <= 0.0:
        raise ValueError("uncontrolled field power must be positive")
    num = float(np.sum(np.abs(u_e) ** 2))
    if num == 0.0:
        return P_RED_FLOOR_DB
    return 10.0 * np.log10(num / den)


def _effective_primary(cfg):
    """Primary source position after the configured perturbation, if any."""
    if cfg.perturbation is None:
        return cfg.scenario.primary_source
    stds = cfg.perturbation
    return geometry.perturb_primary_source(
        cfg.scenario.primary_source,
        stds.radial_m,
        stds.azimuth_deg,
        stds.zenith_deg,
        substream(cfg.seed, "perturbation", cfg.trial),
    )


def _secondary_path_model(cfg, g_true):
    """Secondary-path model; optionally degraded by multiplicative noise."""
    if cfg.g_hat_error_std == 0.0:
        return g_true
    rng = substream(cfg.seed, "ghat-error", freq_key(cfg.frequency_hz))
    z = rng.standard_normal((2,) + g_true.shape)
    return g_true * (1.0 + cfg.g_hat_error_std * (z[0] + 1j * z[1]) / np.sqrt(2.0))


def build_method_matrices(cfg, g_hat=None):
    """Region-integral matrices required by the configured method.

    Multipoint control needs none and returns an empty bundle. The Monte
    Carlo sample set is derived from the root seed alone, so all methods,
    frequencies and trials of one experiment share it.
    """
    scn = cfg.scenario
    k = acoustics.Wavenumber.from_frequency(cfg.frequency_hz, scn.sound_speed)
    method = cfg.method
    if method.kind == "mpc":
        return kernel.InterpMatrices(n_samples=0, seed=cfg.seed)

    samples = geometry.monte_carlo_samples(
        scn.region, cfg.mc_samples, substream(cfg.seed, "mc")
    )
    eta_primary = geometry.direction_to(scn.primary_source, scn.region.center)
    if method.kind == "total_ki":
        params = kernel.KernelParams(beta=method.beta, eta=eta_primary, lam=cfg.lam)
        a = kernel.interp_matrix_total(scn.error_mics, k, params, samples)
        return kernel.InterpMatrices(a=a, n_samples=len(samples), seed=cfg.seed)

    if g_hat is None:
        g_true = acoustics.transfer_matrix(scn.secondary_sources, scn.error_mics, k)
        g_hat = _secondary_path_model(cfg, g_true)
    secondary_dirs = np.array(
        [geometry.direction_to(src, scn.region.center) for src in scn.secondary_sources]
    )
    primary_params = kernel.KernelParams(beta=method.beta, eta=eta_primary, lam=cfg.lam)
    return kernel.interp_matrices_individual(
        scn.error_mics,
        k,
        primary_params,
        secondary_dirs,
        method.beta_secondary,
        cfg.lam,
        g_hat,
        samples,
        seed=cfg.seed,
    )


def matrices_cache_token(cfg):
    """Filename-safe cache key: frequency, geometry, kernel and sampling setup."""
    method = cfg.method
    parts = (
        f"f={freq_key(cfg.frequency_hz)}",
        f"geom={geometry.scenario_fingerprint(cfg.scenario)}",
        f"kind={method.kind}",
        f"beta={method.beta!r}",
        f"beta_sec={method.beta_secondary!r}",
        f"lam={cfg.lam!r}",
        f"n={cfg.mc_samples}",
        f"seed={cfg.seed}",
        f"ghat_err={cfg.g_hat_error_std!r}",
    )
    return hashlib.sha256("|".join(parts).encode("utf-8")).hexdigest()


def load_or_build_matrices(cfg, cache_dir=None):
    """Build the method's region matrices, round-tripping a sidecar cache.

    The offline matrix assembly dominates setup time, so repeated runs of
    one configuration can reuse files keyed by `matrices_cache_token`.
    """
    if cache_dir is None:
        return build_method_matrices(cfg)
    path = Path(cache_dir) / f"{matrices_cache_token(cfg)}.npz"
    if path.is_file():
        return kernel.load_matrices(path)
    mats = build_method_matrices(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    kernel.save_matrices(path, mats)
    return mats


def _build_controller(cfg, g_hat, mats):
    method = cfg.method
    if method.kind == "mpc":
        return adaptive.MpcNlms(g_hat, cfg.nlms)
    if method.kind == "total_ki":
        return adaptive.TotalKiNlms(g_hat, mats.a, cfg.nlms)
    return adaptive.IndividualKiNlms(g_hat, mats.a_yd, mats.a_yy, cfg.nlms)


def _cost_of(cfg, mats, g_hat, e, y):
    if cfg.method.kind == "mpc":
        return float(np.real(np.vdot(e, e)))
    if cfg.method.kind == "total_ki":
        return adaptive.cost_total(e, mats.a)
    d_hat, _ = adaptive.decompose_error(e, g_hat, y)
    return adaptive.cost_individual(d_hat, y, mats.a_dd, mats.a_yd, mats.a_yy)


def run_adaptation(cfg, mats=None):
    """Run one adaptive noise-control simulation.

    Per iteration: draw the reference sample, form the primary noise at the
    microphones, drive the secondary sources, measure the noisy residual,
    and apply the configured NLMS update. The regional power reduction is
    recorded at iteration 0, every `checkpoint_every` iterations and at the
    final iteration, always from the true simulated fields.

    Parameters
    ----------
    cfg : RunConfig
    mats : kernel.InterpMatrices, optional
        precomputed region matrices (from `build_method_matrices`); built
        on demand when omitted

    Returns
    -------
    RunResult
        the `diverged` flag is set and the run aborted if the filter norm
        explodes past DIVERGENCE_FACTOR times its value at iteration 100
    """
    t_start = time.perf_counter()
    scn = cfg.scenario
    k = acoustics.Wavenumber.from_frequency(cfg.frequency_hz, scn.sound_speed)
    primary_pos = _effective_primary(cfg)

    g_true = acoustics.transfer_matrix(scn.secondary_sources, scn.error_mics, k)
    g_hat = _secondary_path_model(cfg, g_true)
    if mats is None:
        mats = build_method_matrices(cfg, g_hat=g_hat)
    controller = _build_controller(cfg, g_hat, mats)

    # primary noise at the mics per unit reference sample (the reference
    # taps the source signal directly, without propagation delay)
    d_unit = cfg.amplitude * acoustics.green(primary_pos, scn.error_mics, k)

    grid = geometry.eval_grid(scn.region, cfg.eval_counts)
    u_p_eval = acoustics.primary_field(primary_pos, grid, k, cfg.amplitude)
    g_eval_sec = acoustics.transfer_matrix(scn.secondary_sources, grid, k)

    if cfg.snr_db is None or np.isposinf(cfg.snr_db):
        sigma = 0.0
    else:
        sigma = float(np.sqrt(np.mean(np.abs(d_unit) ** 2) / 10.0 ** (cfg.snr_db / 10.0)))

    # excitation and noise are keyed by frequency only: perturbation trials
    # share them (common random numbers), so the trial spread isolates the
    # effect of the source position
    fkey = freq_key(cfg.frequency_hz)
    rng_x = substream(cfg.seed, "excitation", fkey)
    rng_noise = substream(cfg.seed, "noise", fkey)

    n_l, n_m, n_r = scn.num_secondary, scn.num_mics, scn.num_reference
    w = np.zeros((n_l, n_r), dtype=complex)

    def regional_reduction(w_now):
        u_e = u_p_eval + g_eval_sec @ w_now[:, 0]
        return p_red(u_e, u_p_eval)

    checkpoints = [0]
    trajectory = [regional_reduction(w)]
    cost_trace = [] if cfg.record_cost else None
    w_norm_ref = None
    diverged = False

    for n in range(1, cfg.n_iterations + 1):
        if cfg.excitation == "gaussian":
            z = rng_x.standard_normal((2, n_r))
            x = (z[0] + 1j * z[1]) / np.sqrt(2.0)
        else:
            x = np.ones(n_r, dtype=complex)
        d = d_unit * x[0]
        y = w @ x
        e = d + g_true @ y
        if sigma > 0.0:
            z = rng_noise.standard_normal((2, n_m))
            e = e + sigma * (z[0] + 1j * z[1]) / np.sqrt(2.0)
        if cost_trace is not None:
            cost_trace.append(_cost_of(cfg, mats, g_hat, e, y))
        w = controller.update(w, x, e)

        if n == 100:
            w_norm_ref = float(np.linalg.norm(w))
        if n % cfg.checkpoint_every == 0 or n == cfg.n_iterations:
            checkpoints.append(n)
            trajectory.append(regional_reduction(w))
            if (
                w_norm_ref is not None
                and w_norm_ref > 0.0
                and float(np.linalg.norm(w)) > DIVERGENCE_FACTOR * w_norm_ref
            ):
                diverged = True
                break

    u_e_final = u_p_eval + g_eval_sec @ w[:, 0]
    return RunResult(
        checkpoints=checkpoints,
        p_red_db=trajectory,
        final_w=w,
        final_field_ue=u_e_final,
        final_field_up=u_p_eval,
        eval_points=grid.points,
        diverged=diverged,
        wall_time_s=time.perf_counter() - t_start,
        config=cfg,
        cost_trace=cost_trace,
    )


def _run_job(job):
    cfg, mats = job
    return run_adaptation(cfg, mats)


def _run_many(jobs_list, jobs=1):
    """Run independent (config, matrices) jobs, serially or on a pool, in order."""
    jobs_list = list(jobs_list)
    if jobs <= 1 or len(jobs_list) <= 1:
        return [_run_job(job) for job in jobs_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_job, jobs_list))


def convergence_runs(base_cfg, methods, jobs=1):
    """One run per method under identical streams; returns RunResults in order."""
    configs = [replace(base_cfg, method=m) for m in methods]
    return _run_many([(cfg, None) for cfg in configs], jobs)


def frequency_range(f_start, f_stop, f_step):
    """Inclusive arithmetic frequency grid with validation."""
    if f_step <= 0:
        raise ValueError(f"frequency step must be positive, got {f_step}")
    if f_stop < f_start or f_start <= 0:
        raise ValueError(f"invalid frequency range [{f_start}, {f_stop}]")
    n = int(np.floor((f_stop - f_start) / f_step + 1e-9)) + 1
    return [float(f_start + i * f_step) for i in range(n)]


def frequency_sweep(base_cfg, methods, f_start=100.0, f_stop=600.0, f_step=10.0, jobs=1):
    """Final regional reduction per frequency per method.

    Returns one SweepRow per (frequency, method), frequencies ascending,
    methods in the given order.
    """
    freqs = frequency_range(f_start, f_stop, f_step)
    configs = [
        replace(base_cfg, frequency_hz=f, method=m) for f in freqs for m in methods
    ]
    results = _run_many([(cfg, None) for cfg in configs], jobs)
    rows = []
    for cfg, res in zip(configs, results):
        rows.append(
            SweepRow(
                frequency_hz=cfg.frequency_hz,
                method=cfg.method.label,
                p_red_db=res.final_p_red_db,
                diverged=res.diverged,
            )
        )
    return rows


def perturbation_study(base_cfg, methods, frequencies, stds=PerturbationStds(), trials=50, jobs=1):
    """Mean and spread of the final reduction under source-position errors.

    Each trial perturbs the true primary source while the kernels keep the
    nominal prior direction; the region matrices depend only on (frequency,
    method) and are built once and shared across the trials of a group.
    Standard deviations are population deviations, zero for a single trial.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    group_configs = [
        replace(base_cfg, frequency_hz=f, method=m, perturbation=stds)
        for f in frequencies
        for m in methods
    ]
    if jobs > 1 and len(group_configs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            group_mats = list(pool.map(build_method_matrices, group_configs))
    else:
        group_mats = [build_method_matrices(cfg) for cfg in group_configs]

    jobs_list = [
        (replace(cfg, trial=t), mats)
        for cfg, mats in zip(group_configs, group_mats)
        for t in range(trials)
    ]
    results = _run_many(jobs_list, jobs)
    rows = []
    idx = 0
    for cfg in group_configs:
        finals = [results[idx + t].final_p_red_db for t in range(trials)]
        any_diverged = any(results[idx + t].diverged for t in range(trials))
        idx += trials
        rows.append(
            PerturbRow(
                frequency_hz=float(cfg.frequency_hz),
                method=cfg.method.label,
                mean_p_red_db=float(np.mean(finals)),
                std_p_red_db=float(np.std(finals)),
                trials=trials,
                diverged=any_diverged,
            )
        )
    return rows
