"""Renyi-2 divergence losses and analytic gradients for both architectures.

Loss conventions (natural log throughout):
    forward  D2(rho || sigma) = ln Tr(rho^2 sigma^-1)   (model state inverted)
    reverse  D2(sigma || rho) = ln Tr(sigma^2 rho^-1)   (target inverted)

Gradient entries are computed from the commutator form
d sigma / d theta_k = -i [H~_k, sigma] for circuit models and from the
operator-exponential derivative series for Boltzmann machines. Both have
independent oracles: central finite differences, and (for the Boltzmann
series) an exact divided-difference evaluation of the integral form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import qmath
from .hamiltonians import string_trace
from .models import (
    QBMParams,
    UQNNParams,
    apply_gate,
    apply_pauli,
    uqnn_statevector,
    visible_from_statevector,
)
from .states import DensityMatrix

DEFAULT_REL_CUTOFF = 1e-12
DEFAULT_SERIES_TOL = 1e-10
P_MAX = 60


class SingularStateError(ValueError):
    """Raised when an inverted state is rank-deficient beyond the cutoff."""

    def __init__(self, msg: str, conditioning: float):
        super().__init__(f"{msg} (smallest eigenvalue {conditioning:.3e})")
        self.conditioning = conditioning


@dataclass
class LossValue:
    """value = ln(numerator); conditioning = smallest eigenvalue of the inverted state."""

    value: float
    numerator: float
    conditioning: float


def _checked_inverse(mat: np.ndarray, rel_cutoff: float, what: str) -> tuple[np.ndarray, float]:
    w, v = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    wmin, wmax = float(w[0]), float(w[-1])
    if wmax <= 0.0 or wmin < rel_cutoff * wmax:
        raise SingularStateError(f"singular {what}", wmin)
    inv = (v / w) @ v.conj().T
    return inv, wmin


def _real_trace(m: np.ndarray, tol: float = 1e-9) -> float:
    # roundoff in Tr of a product scales with the operand norms, not the result
    t = complex(np.trace(m))
    scale = max(1.0, float(np.linalg.norm(m)), abs(t.real))
    if abs(t.imag) > tol * scale:
        raise ArithmeticError(f"trace expression has imaginary residue {t.imag:.3e}")
    return t.real


def renyi2_forward(
    rho: DensityMatrix, sigma: DensityMatrix, rel_cutoff: float = DEFAULT_REL_CUTOFF
) -> LossValue:
    """D2(rho || sigma) = ln Tr(rho^2 sigma^-1). sigma must be full rank."""
    inv, wmin = _checked_inverse(sigma.mat, rel_cutoff, "model state")
    num = _real_trace(rho.mat @ inv @ rho.mat)
    return LossValue(math.log(num), num, wmin)


def renyi2_reverse(
    sigma: DensityMatrix, rho: DensityMatrix, rel_cutoff: float = DEFAULT_REL_CUTOFF
) -> LossValue:
    """D2(sigma || rho) = ln Tr(sigma^2 rho^-1). rho must be full rank."""
    inv, wmin = _checked_inverse(rho.mat, rel_cutoff, "target state")
    num = _real_trace(sigma.mat @ inv @ sigma.mat)
    return LossValue(math.log(num), num, wmin)


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Umegaki relative entropy S(rho||sigma) = Tr rho (ln rho - ln sigma), in nats."""
    wr, vr = np.linalg.eigh(rho.mat)
    ws, vs = np.linalg.eigh(sigma.mat)
    if float(ws[0]) <= 0.0:
        raise SingularStateError("singular second argument", float(ws[0]))
    wr_pos = np.clip(wr, 1e-300, None)
    s_rho = float(np.sum(np.where(wr > 1e-15, wr * np.log(wr_pos), 0.0)))
    log_sigma = (vs * np.log(ws)) @ vs.conj().T
    return s_rho - _real_trace(rho.mat @ log_sigma)


# ---------------------------------------------------------------------------
# Unitary-network gradients.
#
# For entry k the dense formulas reduce to +-2 Im <psi| M W_k H_k W_k^dag |psi>
# over the common denominator, where M is a fixed Hermitian kernel. Sweeping
# a_k = W_k^dag M|psi> and b_k = W_k^dag|psi> turns the whole gradient into
# O(N) gate applications instead of O(N^2).
# ---------------------------------------------------------------------------


def _kernel_sweep(p: UQNNParams, kernel_v: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """2 Im <psi| (kernel_v x I_h) W_k H_k W_k^dag |psi> for every k."""
    dv, dh = 2**p.n_v, 2**p.n_h
    a = (kernel_v @ psi.reshape(dv, dh)).reshape(-1)
    b = psi.copy()
    tables = p.tables()
    out = np.empty(len(tables))
    for k, table in enumerate(tables):
        z = np.vdot(a, apply_pauli(b, table))
        out[k] = 2.0 * z.imag
        a = apply_gate(a, table, p.thetas[k], inverse=True)
        b = apply_gate(b, table, p.thetas[k], inverse=True)
    return out


def uqnn_grad_reverse(
    p: UQNNParams, rho: DensityMatrix, rel_cutoff: float = DEFAULT_REL_CUTOFF
) -> np.ndarray:
    """Gradient of D2(sigma_v || rho) wrt every circuit angle.

    Entry k is -i Tr({Tr_h([H~_k, sigma]), sigma_v} rho^-1) / Tr(sigma_v^2 rho^-1);
    entries are real by construction.
    """
    rinv, _ = _checked_inverse(rho.mat, rel_cutoff, "target state")
    psi = uqnn_statevector(p)
    sv = visible_from_statevector(psi, p.n_v, p.n_h)
    denom = _real_trace(sv @ rinv @ sv)
    q = sv @ rinv + rinv @ sv
    return _kernel_sweep(p, q, psi) / denom


def uqnn_grad_forward(
    p: UQNNParams, rho: DensityMatrix, rel_cutoff: float = DEFAULT_REL_CUTOFF
) -> np.ndarray:
    """Gradient of D2(rho || sigma_v); requires a full-rank visible reduction.

    Entry k is i Tr(rho^2 sigma_v^-1 Tr_h([H~_k, sigma]) sigma_v^-1) / Tr(rho^2 sigma_v^-1).
    """
    psi = uqnn_statevector(p)
    sv = visible_from_statevector(psi, p.n_v, p.n_h)
    svinv, _ = _checked_inverse(sv, rel_cutoff, "model state")
    denom = _real_trace(rho.mat @ svinv @ rho.mat)
    q = svinv @ rho.mat @ rho.mat @ svinv
    return -_kernel_sweep(p, q, psi) / denom


def uqnn_grad_linear(p: UQNNParams, observable: np.ndarray) -> np.ndarray:
    """Gradient of the plain expectation loss Tr(M sigma_v); plateau baseline."""
    psi = uqnn_statevector(p)
    return _kernel_sweep(p, np.asarray(observable, dtype=complex), psi)


def state_gradient_entry(
    sigma: np.ndarray, dsigma: np.ndarray, rho: np.ndarray, direction: str
) -> float:
    """Single gradient entry from an explicit state derivative (all-visible).

    reverse: Tr(dsigma {sigma, rho^-1}) / Tr(sigma^2 rho^-1)
    forward: -Tr(dsigma sigma^-1 rho^2 sigma^-1) / Tr(rho^2 sigma^-1)
    """
    if direction == "reverse":
        rinv, _ = _checked_inverse(rho, DEFAULT_REL_CUTOFF, "target state")
        num = _real_trace(dsigma @ (sigma @ rinv + rinv @ sigma))
        den = _real_trace(sigma @ rinv @ sigma)
        return num / den
    if direction == "forward":
        sinv, _ = _checked_inverse(sigma, DEFAULT_REL_CUTOFF, "model state")
        num = -_real_trace(dsigma @ sinv @ rho @ rho @ sinv)
        den = _real_trace(rho @ sinv @ rho)
        return num / den
    raise ValueError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Boltzmann-machine gradients.
#
# d/dtheta_m e^{-H} = -G_m with G_m = sum_p Ad_{-H}^p(dH_m) e^{-H} / (p+1)!.
# Production path: by trace cyclicity Tr(Ad_{-H}^p(X) Y) = Tr(X Ad_H^p(Y)), so
# one kernel series R = sum_p Ad_H^p(E (Q x I_h)) / (p+1)! serves every weight,
# each of which then costs a single O(dim) Pauli trace. The series is summed in
# the eigenbasis of H, where Ad_H acts entrywise as (w_i - w_j); term norms
# (Frobenius, unitarily invariant) and the truncation decisions are identical
# to the matrix-commutator iteration, without its cancellation blow-up.
# ---------------------------------------------------------------------------


def _qbm_state_parts(p: QBMParams):
    hd = p.hamiltonian_dense()
    w, v = np.linalg.eigh(hd)
    ew = np.exp(-w)
    e_mat = (v * ew) @ v.conj().T
    z = float(np.sum(ew))
    sv = qmath.partial_trace(e_mat, p.n_v, p.n_h) / z
    return w, v, e_mat, z, sv


def _ad_series_kernel(
    w: np.ndarray, v: np.ndarray, y: np.ndarray, series_tol: float, p_max: int
) -> np.ndarray:
    """sum_p Ad_H^p(y) / (p+1)! truncated when a term's Frobenius share drops
    below series_tol; raises if p_max terms do not reach that."""
    yb = v.conj().T @ y @ v
    scale = float(np.linalg.norm(yb))
    if scale == 0.0:
        return np.zeros_like(y)
    delta = w[:, None] - w[None, :]
    term = yb.copy()
    acc = yb.copy()  # p = 0 term, weight 1/1!
    fact = 1.0
    converged = False
    for p in range(1, p_max + 1):
        term = delta * term
        fact *= p + 1
        contrib = float(np.linalg.norm(term)) / fact
        acc += term / fact
        if contrib < series_tol * scale:
            converged = True
            break
    if not converged:
        raise ArithmeticError(f"series not converged after {p_max} commutator terms")
    return v @ acc @ v.conj().T


def _qbm_grad(
    p: QBMParams,
    rho: DensityMatrix,
    series_tol: float,
    p_max: int,
    direction: str,
    rel_cutoff: float = DEFAULT_REL_CUTOFF,
) -> np.ndarray:
    w, v, e_mat, z, sv = _qbm_state_parts(p)
    eye_h = np.eye(2**p.n_h)
    if direction == "reverse":
        rinv, _ = _checked_inverse(rho.mat, rel_cutoff, "target state")
        denom = _real_trace(sv @ rinv @ sv)
        q = sv @ rinv + rinv @ sv
        r = _ad_series_kernel(w, v, e_mat @ np.kron(q, eye_h), series_tol, p_max)
        kernel = -r / (z * denom) + 2.0 * e_mat / z
    else:
        svinv, _ = _checked_inverse(sv, rel_cutoff, "model state")
        denom = _real_trace(rho.mat @ svinv @ rho.mat)
        qf = svinv @ rho.mat @ rho.mat @ svinv
        r = _ad_series_kernel(w, v, e_mat @ np.kron(qf, eye_h), series_tol, p_max)
        kernel = r / (z * denom) - e_mat / z
    grads = np.empty(len(p.basis))
    imag_tol = max(1e-9, 100.0 * series_tol)
    for m, t in enumerate(p.basis):
        idx, col_phase = t.action(p.n_qubits)
        g = string_trace(kernel, idx, col_phase)
        if abs(g.imag) > imag_tol * max(1.0, abs(g.real)):
            raise ArithmeticError(f"gradient entry {m} has imaginary residue {g.imag:.3e}")
        grads[m] = g.real
    return grads


def qbm_grad_reverse(
    p: QBMParams,
    rho: DensityMatrix,
    series_tol: float = DEFAULT_SERIES_TOL,
    p_max: int = P_MAX,
) -> np.ndarray:
    """Gradient of D2(sigma_v(theta) || rho) wrt the basis weights.

    Entry m: -sum_p Tr(Ad_{-H}^p(dH_m) e^{-H} ({sigma_v, rho^-1} x I_h))
    / (Tr(sigma_v^2 rho^-1) Z (p+1)!)  +  2 Tr(dH_m e^{-H}) / Z.
    """
    return _qbm_grad(p, rho, series_tol, p_max, "reverse")


def qbm_grad_forward(
    p: QBMParams,
    rho: DensityMatrix,
    series_tol: float = DEFAULT_SERIES_TOL,
    p_max: int = P_MAX,
) -> np.ndarray:
    """Gradient of D2(rho || sigma_v(theta)) wrt the basis weights.

    Entry m: +sum_p Tr(rho^2 sigma_v^-1 Tr_h(Ad_{-H}^p(dH_m) e^{-H}) sigma_v^-1)
    / (Tr(rho^2 sigma_v^-1) Z (p+1)!)  -  Tr(dH_m e^{-H}) / Z.
    """
    return _qbm_grad(p, rho, series_tol, p_max, "forward")


def frechet_exp_neg_derivative(w: np.ndarray, v: np.ndarray, pm: np.ndarray) -> np.ndarray:
    """G_m = integral_0^1 e^{-sH} P_m e^{-(1-s)H} ds, exactly, in the eigenbasis of H.

    Entrywise: G'_ij = B_ij exp(-(w_i+w_j)/2) sinh(d/2)/(d/2), d = w_i - w_j.
    Satisfies d(e^{-H})/dtheta_m = -G_m. Independent of the commutator series;
    used as a second oracle against it.
    """
    b = v.conj().T @ pm @ v
    delta = w[:, None] - w[None, :]
    mean = 0.5 * (w[:, None] + w[None, :])
    half = 0.5 * delta
    # sinh(x)/x with a series fallback at small x
    small = np.abs(half) < 1e-8
    ratio = np.where(small, 1.0 + half**2 / 6.0, np.sinh(np.where(small, 1.0, half)) / np.where(small, 1.0, half))
    phi = np.exp(-mean) * ratio
    return v @ (b * phi) @ v.conj().T


def _qbm_grad_frechet(p: QBMParams, rho: DensityMatrix, direction: str) -> np.ndarray:
    w, v, e_mat, z, sv = _qbm_state_parts(p)
    if direction == "reverse":
        rinv, _ = _checked_inverse(rho.mat, DEFAULT_REL_CUTOFF, "target state")
        denom = _real_trace(sv @ rinv @ sv)
        q = sv @ rinv + rinv @ sv
    else:
        svinv, _ = _checked_inverse(sv, DEFAULT_REL_CUTOFF, "model state")
        denom = _real_trace(rho.mat @ svinv @ rho.mat)
        q = svinv @ rho.mat @ rho.mat @ svinv
    grads = np.empty(len(p.basis))
    for m, t in enumerate(p.basis):
        pm = t.dense(p.n_qubits)
        g_m = frechet_exp_neg_derivative(w, v, pm)
        trace_pm_e = _real_trace(pm @ e_mat)
        dsv = -qmath.partial_trace(g_m, p.n_v, p.n_h) / z + sv * (trace_pm_e / z)
        if direction == "reverse":
            grads[m] = _real_trace(dsv @ q) / denom
        else:
            grads[m] = -_real_trace(dsv @ q) / denom
    return grads


def qbm_grad_reverse_frechet(p: QBMParams, rho: DensityMatrix) -> np.ndarray:
    """Exact divided-difference route for the reverse gradient (oracle)."""
    return _qbm_grad_frechet(p, rho, "reverse")


def qbm_grad_forward_frechet(p: QBMParams, rho: DensityMatrix) -> np.ndarray:
    """Exact divided-difference route for the forward gradient (oracle)."""
    return _qbm_grad_frechet(p, rho, "forward")


def fd_gradient(loss: Callable[[np.ndarray], float], thetas: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences (L(t + h e_k) - L(t - h e_k)) / 2h."""
    if h <= 0:
        raise ValueError("h must be positive")
    thetas = np.asarray(thetas, dtype=float)
    out = np.empty(len(thetas))
    for k in range(len(thetas)):
        tp = thetas.copy()
        tm = thetas.copy()
        tp[k] += h
        tm[k] -= h
        out[k] = (loss(tp) - loss(tm)) / (2.0 * h)
    return out
