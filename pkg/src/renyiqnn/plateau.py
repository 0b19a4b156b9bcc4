"""Gradient-magnitude diagnostics over random initializations and Haar ensembles.

A loss landscape flattens exponentially ("barren plateau") when gradient
second moments decay like 2^{-2n}. This module measures the moments three
ways: Haar-conjugated states against the closed-form lower-bound
expressions, random circuit initializations at epoch 0, and a linear
expectation loss as the decaying baseline the divergence losses are
contrasted with.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import qmath
from .divergence import SingularStateError, state_gradient_entry, uqnn_grad_linear, uqnn_grad_reverse
from .hamiltonians import LCUHamiltonian
from .models import build_uqnn, conjugated_generator_vec, uqnn_statevector, visible_from_statevector
from .states import DensityMatrix, haar_unitary, thermal_state


@dataclass
class PlateauRecord:
    """Statistics for one (n_v, n_h, loss_kind) configuration."""

    n_v: int
    n_h: int
    loss_kind: str
    stats: dict[str, float] = field(default_factory=dict)


@dataclass
class PlateauReport:
    """Gradient statistics per configuration; ensemble_size members each.

    Quantiles are degenerate for ensemble_size 1; two or more members are
    needed before the spread statistics mean anything.
    """

    ensemble_size: int
    records: list[PlateauRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.ensemble_size < 1:
            raise ValueError("ensemble_size must be >= 1")
        for rec in self.records:
            for name, value in rec.stats.items():
                if not math.isfinite(value):
                    raise ValueError(
                        f"non-finite statistic {name}={value} in "
                        f"(n_v={rec.n_v}, n_h={rec.n_h}, {rec.loss_kind})"
                    )

    def to_json_dict(self) -> dict:
        return {
            "ensemble_size": self.ensemble_size,
            "records": [
                {
                    "n_v": r.n_v,
                    "n_h": r.n_h,
                    "loss_kind": r.loss_kind,
                    "stats": {k: float(v) for k, v in r.stats.items()},
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PlateauReport":
        records = [
            PlateauRecord(int(r["n_v"]), int(r["n_h"]), str(r["loss_kind"]), dict(r["stats"]))
            for r in doc["records"]
        ]
        return cls(int(doc["ensemble_size"]), records)

    def save_json(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)

    def to_csv(self, path: str) -> None:
        """One row per statistic: n_v, n_h, loss_kind, stat_name, value."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n_v", "n_h", "loss_kind", "stat_name", "value"])
            for r in self.records:
                for name, value in r.stats.items():
                    writer.writerow([r.n_v, r.n_h, r.loss_kind, name, repr(float(value))])

    def stat(self, n_v: int, n_h: int, loss_kind: str, name: str) -> float:
        for r in self.records:
            if (r.n_v, r.n_h, r.loss_kind) == (n_v, n_h, loss_kind):
                return r.stats[name]
        raise KeyError(f"no record for (n_v={n_v}, n_h={n_h}, {loss_kind})")


def haar_gradient_moment(
    sigma: DensityMatrix,
    dsigma: np.ndarray,
    rho: DensityMatrix,
    direction: str,
    n_samples: int,
    rng: np.random.Generator,
) -> float:
    """Mean squared gradient entry under Haar conjugation of the model state.

    Each sample conjugates sigma and dsigma by the same Haar-random unitary
    (rho stays fixed) and evaluates the exact all-visible gradient entry for
    the chosen divergence direction; the average of its square estimates the
    Haar second moment that the lower-bound expressions of lemma1_bounds
    control.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if sigma.dim != rho.dim:
        raise ValueError("sigma and rho dimensions differ")
    dsigma = np.asarray(dsigma, dtype=complex)
    if dsigma.shape != sigma.mat.shape:
        raise ValueError(f"dsigma shape {dsigma.shape} does not match the state")
    if not qmath.is_hermitian(dsigma, 1e-10):
        raise ValueError("dsigma must be Hermitian")
    n = sigma.n_qubits
    acc = 0.0
    for _ in range(n_samples):
        u = haar_unitary(n, rng)
        s_u = u @ sigma.mat @ u.conj().T
        d_u = u @ dsigma @ u.conj().T
        g = state_gradient_entry(s_u, d_u, rho.mat, direction)
        acc += g * g
    return acc / n_samples


def lemma1_bounds(sigma: DensityMatrix, dsigma: np.ndarray, n: int) -> tuple[float, float]:
    """The two closed-form lower-bound expressions for the Haar second moment.

    Returns, without any asymptotic constant,

        first  = Tr^2(sigma^-2 dsigma) / (2^{2n} Tr^2(sigma^-1))
        second = Tr^2(sigma dsigma) / (2^{2n} |sigma|^4)

    with |sigma| the operator norm. Which expression pairs with which
    divergence direction is left to the caller; both are reference scales,
    not strict bounds (tests compare against them with an explicit factor).
    """
    if 2**n != sigma.dim:
        raise ValueError(f"n={n} does not match a {sigma.dim}-dimensional state")
    dsigma = np.asarray(dsigma, dtype=complex)
    if dsigma.shape != sigma.mat.shape:
        raise ValueError(f"dsigma shape {dsigma.shape} does not match the state")
    if not qmath.is_hermitian(dsigma, 1e-10):
        raise ValueError("dsigma must be Hermitian")
    w, v = np.linalg.eigh(0.5 * (sigma.mat + sigma.mat.conj().T))
    wmin, wmax = float(w[0]), float(w[-1])
    if wmax <= 0.0 or wmin < 1e-12 * wmax:
        raise SingularStateError("singular state", wmin)
    inv2 = (v / w**2) @ v.conj().T
    tr_inv = float(np.sum(1.0 / w))
    scale = 2.0 ** (2 * n)
    first = float(np.real(np.trace(inv2 @ dsigma))) ** 2 / (scale * tr_inv**2)
    second = float(np.real(np.trace(sigma.mat @ dsigma))) ** 2 / (scale * wmax**4)
    return first, second


def _second_expr_mean(p, psi: np.ndarray, sv: np.ndarray) -> float:
    """Mean over circuit angles of the inverse-free bound expression.

    Circuit states are pure, so only the second lemma1_bounds expression
    (which needs no sigma^-1) is defined at epoch 0; it is evaluated on the
    visible reduction for every angle and averaged.
    """
    dv = sv.shape[0]
    psi_m = psi.reshape(dv, -1)
    wmax = float(np.linalg.eigvalsh(0.5 * (sv + sv.conj().T))[-1])
    scale = float(dv) ** 2 * wmax**4
    acc = 0.0
    for k in range(1, len(p.generators) + 1):
        phi_m = conjugated_generator_vec(p, k, psi).reshape(dv, -1)
        a_mat = phi_m @ psi_m.conj().T
        dsv = -1j * (a_mat - a_mat.conj().T)
        acc += float(np.real(np.trace(sv @ dsv))) ** 2 / scale
    return acc / len(p.generators)


def init_gradient_scan(
    n_v: int,
    target: LCUHamiltonian,
    n_h_list: list[int],
    ensemble: int,
    rng: np.random.Generator,
    layout: str = "exhaustive",
    repetitions: int = 1,
) -> PlateauReport:
    """Epoch-0 gradient statistics of random circuits against one thermal target.

    For each hidden-unit count, `ensemble` circuits are drawn with
    theta ~ N(0, 1) and the full reverse-divergence gradient is evaluated at
    initialization, alongside the linear expectation loss Tr(M sigma_v) with
    M the dense target state (the bounded baseline whose gradients are
    expected to decay). Records hold per-entry moments, infinity-norm
    quantiles over the ensemble, and for the divergence loss the mean
    inverse-free bound expression.
    """
    if ensemble < 1:
        raise ValueError("ensemble must be >= 1")
    if target.n_qubits != n_v:
        raise ValueError(f"target acts on {target.n_qubits} qubits, expected n_v={n_v}")
    rho = thermal_state(target)
    records: list[PlateauRecord] = []
    for n_h in n_h_list:
        grads = {"reverse": [], "linear": []}
        bound_vals = []
        for _ in range(ensemble):
            p = build_uqnn(n_v, n_h, rng, layout=layout, repetitions=repetitions)
            grads["reverse"].append(uqnn_grad_reverse(p, rho))
            grads["linear"].append(uqnn_grad_linear(p, rho.mat))
            psi = uqnn_statevector(p)
            sv = visible_from_statevector(psi, n_v, n_h)
            bound_vals.append(_second_expr_mean(p, psi, sv))
        for kind, gs in grads.items():
            flat = np.concatenate(gs)
            inf_norms = np.array([float(np.max(np.abs(g))) for g in gs])
            stats = {
                "grad_abs_mean": float(np.mean(np.abs(flat))),
                "grad_sq_mean": float(np.mean(flat**2)),
                "inf_norm_mean": float(np.mean(inf_norms)),
                "inf_norm_q10": float(np.quantile(inf_norms, 0.10)),
                "inf_norm_median": float(np.quantile(inf_norms, 0.50)),
                "inf_norm_q90": float(np.quantile(inf_norms, 0.90)),
                "inf_norm_max": float(np.max(inf_norms)),
            }
            if kind == "reverse":
                stats["lemma1_second_expr_mean"] = float(np.mean(bound_vals))
            records.append(PlateauRecord(n_v, n_h, kind, stats))
    return PlateauReport(ensemble, records)


__all__ = [
    "PlateauRecord",
    "PlateauReport",
    "haar_gradient_moment",
    "lemma1_bounds",
    "init_gradient_scan",
]
