"""Training loops, ADAM optimizer, and seeded ensemble drivers.

One run learns one target: draw a random local Hamiltonian, normalize it,
form its thermal state, then descend the chosen divergence direction with
per-epoch full-batch gradients (the dataset is a single density matrix, so
an epoch is exactly one ADAM update). Ensembles vary the target draw, the
initialization draw, or both, over independent child RNG streams derived
from the base seed, and reduce the per-epoch metrics to mean/std curves.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import divergence
from .hamiltonians import LCUHamiltonian, normalize, random_three_local, random_two_local
from .models import QBMParams, UQNNParams, build_qbm, build_uqnn, qbm_visible_state, uqnn_visible_state
from .states import DensityMatrix, fidelity, thermal_state

DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPS_ADAM = 1e-8


class TrainingError(RuntimeError):
    """A training run failed; the message carries the failing epoch."""


@dataclass
class AdamState:
    """First/second moment accumulators plus the step counter."""

    step: int
    m: np.ndarray
    v: np.ndarray
    lr: float
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    eps_adam: float = DEFAULT_EPS_ADAM

    def __post_init__(self) -> None:
        self.m = np.asarray(self.m, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.m.shape != self.v.shape:
            raise ValueError("moment vectors must have equal shape")
        if self.step < 0:
            raise ValueError("step must be >= 0")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")

    @classmethod
    def init(cls, n_params: int, lr: float, **kwargs) -> "AdamState":
        return cls(0, np.zeros(n_params), np.zeros(n_params), lr, **kwargs)


def adam_step(
    state: AdamState, params: np.ndarray, grads: np.ndarray
) -> tuple[AdamState, np.ndarray]:
    """One bias-corrected ADAM update; returns the new state and parameters."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != state.m.shape or grads.shape != state.m.shape:
        raise ValueError(
            f"parameter/gradient shape {params.shape}/{grads.shape} "
            f"does not match optimizer state {state.m.shape}"
        )
    bad = np.nonzero(~np.isfinite(grads))[0]
    if bad.size:
        raise FloatingPointError(f"diverged gradient at index {int(bad[0])}")
    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads**2
    m_hat = m / (1.0 - state.beta1**step)
    v_hat = v / (1.0 - state.beta2**step)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps_adam)
    new_state = AdamState(step, m, v, state.lr, state.beta1, state.beta2, state.eps_adam)
    return new_state, new_params


@dataclass
class TrainConfig:
    """Everything one seeded run needs: model, target recipe, optimizer knobs.

    The target is drawn from the run's target stream: a random two- or
    three-local Hamiltonian (singles std target_std_single, defaulting to
    sqrt(0.1) for locality 2 and 1.0 for locality 3; pairs/triples std
    target_std_pair for locality 2), normalized to operator norm tau, then
    exponentiated to its thermal state. target_reg mixes in the maximally
    mixed state, rho <- (1-eps) rho + eps I/d, for deliberately
    ill-conditioned targets; 0 leaves the thermal state untouched.

    lr = 0 is allowed and freezes the parameters (useful as a no-op probe).
    """

    kind: str
    n_v: int
    n_h: int
    epochs: int
    lr: float = 1e-3
    direction: str = "reverse"
    l2_penalty: float = 0.0
    seed: int = 0
    series_tol: float = 1e-10
    log_every: int = 1
    target_locality: int = 2
    tau: float = 1.0
    target_std_single: float | None = None
    target_std_pair: float = 1.0
    target_reg: float = 0.0
    layout: str = "exhaustive"
    repetitions: int = 1
    normalize_init: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("uqnn", "qbm"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.direction not in ("reverse", "forward"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.n_v < 1 or self.n_h < 0:
            raise ValueError("need n_v >= 1 and n_h >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be >= 0")
        if self.series_tol <= 0:
            raise ValueError("series_tol must be positive")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")
        if self.target_locality not in (2, 3):
            raise ValueError("target_locality must be 2 or 3")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if not 0.0 <= self.target_reg < 1.0:
            raise ValueError("target_reg must lie in [0, 1)")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def resolved_std_single(self) -> float:
        if self.target_std_single is not None:
            return self.target_std_single
        return math.sqrt(0.1) if self.target_locality == 2 else 1.0

    def to_json_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainConfig":
        return cls(**doc)

    def config_hash(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class MetricsRow:
    epoch: int
    loss: float
    penalized_loss: float
    fidelity: float
    grad_inf_norm: float
    wall_ms: float


CSV_COLUMNS = ["epoch", "loss", "penalized_loss", "fidelity", "grad_inf_norm", "wall_ms"]


@dataclass
class MetricsLog:
    """Per-epoch training curve plus run identity.

    Row 0 is the state before any update; row e is the state after e ADAM
    updates, with loss, fidelity, and gradient all evaluated at that row's
    parameters. grad_inf_norm is the infinity norm of the full training
    gradient, penalty term included.
    """

    config_hash: str
    seed: int
    rows: list[MetricsRow] = field(default_factory=list)
    checkpoint: dict | None = None

    def validate(self) -> "MetricsLog":
        last = -1
        for r in self.rows:
            if r.epoch <= last:
                raise ValueError(f"epochs not strictly increasing at {r.epoch}")
            last = r.epoch
            for name in ("loss", "penalized_loss", "fidelity", "grad_inf_norm", "wall_ms"):
                if not math.isfinite(getattr(r, name)):
                    raise ValueError(f"non-finite {name} at epoch {r.epoch}")
        return self

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def initial_fidelity(self) -> float:
        return self.rows[0].fidelity

    def final_fidelity(self) -> float:
        return self.rows[-1].fidelity

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [r.epoch] + [repr(float(getattr(r, c))) for c in CSV_COLUMNS[1:]]
                )

    def to_json_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "rows": [asdict(r) for r in self.rows],
            "checkpoint": self.checkpoint,
        }


def run_streams(
    base_seed: int, run_idx: int, vary: str
) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (target, init) generators for one ensemble member.

    Streams are children of the base seed keyed by (run index, role), role 0
    for the target draw and 1 for the initialization draw; a stream held
    fixed by `vary` uses run index 0. The hidden-unit count is deliberately
    not part of the derivation, so ensembles differing only in n_h see
    identical targets.
    """
    if vary not in ("target", "init", "both"):
        raise ValueError(f"unknown vary mode {vary!r}")
    t_idx = run_idx if vary in ("target", "both") else 0
    i_idx = run_idx if vary in ("init", "both") else 0
    target_rng = np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(t_idx, 0)))
    init_rng = np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(i_idx, 1)))
    return target_rng, init_rng


def draw_target(cfg: TrainConfig, rng: np.random.Generator) -> tuple[LCUHamiltonian, DensityMatrix]:
    """Random normalized target Hamiltonian and its (optionally mixed) thermal state."""
    if cfg.target_locality == 2:
        h = random_two_local(cfg.n_v, cfg.resolved_std_single(), cfg.target_std_pair, rng)
    else:
        h = random_three_local(cfg.n_v, cfg.resolved_std_single(), rng)
    h = normalize(h, cfg.tau)
    rho = thermal_state(h)
    if cfg.target_reg > 0.0:
        d = rho.dim
        mixed = (1.0 - cfg.target_reg) * rho.mat + cfg.target_reg * np.eye(d) / d
        rho = DensityMatrix(rho.n_qubits, mixed)
    return h, rho


def _build_model(cfg: TrainConfig, init_rng: np.random.Generator):
    if cfg.kind == "uqnn":
        return build_uqnn(cfg.n_v, cfg.n_h, init_rng, layout=cfg.layout, repetitions=cfg.repetitions)
    return build_qbm(cfg.n_v, cfg.n_h, init_rng, normalize_init=cfg.normalize_init)


def _loss_and_grad_fns(
    cfg: TrainConfig, rho: DensityMatrix
) -> tuple[Callable, Callable, Callable]:
    """(visible_state, raw_loss, raw_grad) callables for the configured model."""
    if cfg.kind == "uqnn":
        vis = uqnn_visible_state
        if cfg.direction == "reverse":
            return (
                vis,
                lambda p: divergence.renyi2_reverse(vis(p), rho).value,
                lambda p: divergence.uqnn_grad_reverse(p, rho),
            )
        return (
            vis,
            lambda p: divergence.renyi2_forward(rho, vis(p)).value,
            lambda p: divergence.uqnn_grad_forward(p, rho),
        )
    vis = qbm_visible_state
    if cfg.direction == "reverse":
        return (
            vis,
            lambda p: divergence.renyi2_reverse(vis(p), rho).value,
            lambda p: divergence.qbm_grad_reverse(p, rho, series_tol=cfg.series_tol),
        )
    return (
        vis,
        lambda p: divergence.renyi2_forward(rho, vis(p)).value,
        lambda p: divergence.qbm_grad_forward(p, rho, series_tol=cfg.series_tol),
    )


def _train(cfg: TrainConfig, run_idx: int = 0, vary: str = "both", out_dir: str | None = None) -> MetricsLog:
    target_rng, init_rng = run_streams(cfg.seed, run_idx, vary)
    _, rho = draw_target(cfg, target_rng)
    model = _build_model(cfg, init_rng)
    vis_fn, loss_fn, grad_fn = _loss_and_grad_fns(cfg, rho)
    lam = cfg.l2_penalty

    log = MetricsLog(config_hash=cfg.config_hash(), seed=cfg.seed)
    opt = AdamState.init(len(model.thetas), cfg.lr)

    def full_gradient(epoch: int) -> np.ndarray:
        try:
            return grad_fn(model) + 2.0 * lam * model.thetas
        except (divergence.SingularStateError, ArithmeticError) as exc:
            raise TrainingError(f"epoch {epoch}: {exc}") from exc

    def log_row(epoch: int, grad: np.ndarray, t_start: float) -> None:
        try:
            raw = loss_fn(model)
        except (divergence.SingularStateError, ArithmeticError) as exc:
            raise TrainingError(f"epoch {epoch}: {exc}") from exc
        penal = raw + lam * float(model.thetas @ model.thetas)
        fid = fidelity(vis_fn(model), rho)
        wall = (time.perf_counter() - t_start) * 1000.0
        log.rows.append(MetricsRow(epoch, raw, penal, fid, float(np.max(np.abs(grad))), wall))

    # One gradient per epoch: the vector logged at row e also drives update e+1.
    t0 = time.perf_counter()
    grad = full_gradient(0)
    log_row(0, grad, t0)
    t0 = time.perf_counter()
    for epoch in range(1, cfg.epochs + 1):
        opt, model.thetas = adam_step(opt, model.thetas, grad)
        grad = full_gradient(epoch)
        if epoch % cfg.log_every == 0 or epoch == cfg.epochs:
            log_row(epoch, grad, t0)
            t0 = time.perf_counter()

    log.checkpoint = model.to_checkpoint(rng_seed=cfg.seed, epoch=cfg.epochs)
    log.validate()
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log.to_csv(os.path.join(out_dir, f"run_{run_idx:03d}.csv"))
        with open(os.path.join(out_dir, f"run_{run_idx:03d}_checkpoint.json"), "w") as fh:
            json.dump(log.checkpoint, fh, indent=1)
    return log


def train_uqnn(cfg: TrainConfig, out_dir: str | None = None) -> MetricsLog:
    """Train a unitary circuit model against one seeded thermal target."""
    if cfg.kind != "uqnn":
        raise ValueError(f"config kind {cfg.kind!r} is not 'uqnn'")
    return _train(cfg, out_dir=out_dir)


def train_qbm(cfg: TrainConfig, out_dir: str | None = None) -> MetricsLog:
    """Train a Boltzmann machine against one seeded thermal target."""
    if cfg.kind != "qbm":
        raise ValueError(f"config kind {cfg.kind!r} is not 'qbm'")
    return _train(cfg, out_dir=out_dir)


def load_checkpoint_model(doc: dict) -> UQNNParams | QBMParams:
    """Rebuild the trained model a checkpoint dict describes."""
    kind = doc.get("kind")
    if kind == "uqnn":
        return UQNNParams.from_checkpoint(doc)
    if kind == "qbm":
        return QBMParams.from_checkpoint(doc)
    raise ValueError(f"unknown checkpoint kind {kind!r}")


@dataclass
class EnsembleSummary:
    """Per-epoch mean/std curves over the successful runs of an ensemble."""

    n_runs: int
    failures: list[str]
    epoch: list[int]
    stats: dict[str, list[float]]

    def final(self, name: str) -> float:
        return self.stats[name][-1]

    def to_csv(self, path: str) -> None:
        names = list(self.stats)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch"] + names)
            for i, ep in enumerate(self.epoch):
                writer.writerow([ep] + [repr(float(self.stats[n][i])) for n in names])

    def to_json_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "failures": self.failures,
            "epoch": self.epoch,
            "stats": self.stats,
        }


def _ensemble_worker(args: tuple) -> MetricsLog:
    cfg_doc, run_idx, vary = args
    return _train(TrainConfig.from_json_dict(cfg_doc), run_idx=run_idx, vary=vary)


def run_ensemble(
    cfg: TrainConfig,
    n_runs: int,
    vary: str = "both",
    jobs: int = 1,
    out_dir: str | None = None,
) -> tuple[list[MetricsLog], EnsembleSummary]:
    """Many independent seeded runs of one config, reduced to mean/std curves.

    `vary` picks which draws differ between runs: the target, the
    initialization, or both. Failed runs are recorded in the summary and
    skipped in the statistics; once failures exceed 20% of n_runs the
    ensemble aborts. Results are deterministic for a given (cfg, n_runs,
    vary) regardless of `jobs`.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    if vary not in ("target", "init", "both"):
        raise ValueError(f"unknown vary mode {vary!r}")
    if jobs < 1:
        raise ValueError("jobs must be >= 1")

    logs: dict[int, MetricsLog] = {}
    failures: list[str] = []
    max_failures = 0.2 * n_runs

    def note_failure(run_idx: int, exc: Exception) -> None:
        failures.append(f"run {run_idx}: {exc}")
        if len(failures) > max_failures:
            raise TrainingError(
                f"{len(failures)} of {n_runs} runs failed (> 20%): " + "; ".join(failures)
            )

    if jobs == 1:
        for run_idx in range(n_runs):
            try:
                logs[run_idx] = _train(cfg, run_idx=run_idx, vary=vary)
            except TrainingError as exc:
                note_failure(run_idx, exc)
    else:
        cfg_doc = cfg.to_json_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            args = [(cfg_doc, run_idx, vary) for run_idx in range(n_runs)]
            futures = {pool.submit(_ensemble_worker, a): a[1] for a in args}
            for fut, run_idx in futures.items():
                try:
                    logs[run_idx] = fut.result()
                except TrainingError as exc:
                    note_failure(run_idx, exc)

    if not logs:
        raise TrainingError(f"all {n_runs} runs failed: " + "; ".join(failures))

    ordered = [logs[i] for i in sorted(logs)]
    epochs = [r.epoch for r in ordered[0].rows]
    for lg in ordered[1:]:
        if [r.epoch for r in lg.rows] != epochs:
            raise TrainingError("runs logged different epoch grids; cannot summarize")
    stats: dict[str, list[float]] = {}
    for name in ("loss", "penalized_loss", "fidelity", "grad_inf_norm"):
        cols = np.stack([lg.column(name) for lg in ordered])
        stats[f"{name}_mean"] = [float(x) for x in cols.mean(axis=0)]
        std = cols.std(axis=0, ddof=1) if len(ordered) > 1 else np.zeros(cols.shape[1])
        stats[f"{name}_std"] = [float(x) for x in std]
    summary = EnsembleSummary(n_runs=n_runs, failures=failures, epoch=epochs, stats=stats)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for run_idx, lg in zip(sorted(logs), ordered):
            lg.to_csv(os.path.join(out_dir, f"run_{run_idx:03d}.csv"))
            with open(os.path.join(out_dir, f"run_{run_idx:03d}_checkpoint.json"), "w") as fh:
                json.dump(lg.checkpoint, fh, indent=1)
        summary.to_csv(os.path.join(out_dir, "summary.csv"))
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(summary.to_json_dict(), fh, indent=1)
    return ordered, summary


__all__ = [
    "AdamState",
    "TrainConfig",
    "MetricsRow",
    "MetricsLog",
    "EnsembleSummary",
    "TrainingError",
    "adam_step",
    "run_streams",
    "draw_target",
    "train_uqnn",
    "train_qbm",
    "run_ensemble",
    "load_checkpoint_model",
]
