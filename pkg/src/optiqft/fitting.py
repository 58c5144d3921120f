"""Least-squares estimation of the fringe model from detector traces.

The forward model per detector is scale_i * I_i(x; lam * phi + mu) + bias_i
where I_i are the simulated detector intensities.  The per-detector scale
and bias enter linearly, so they are solved in closed form at every
iterate, shrinking the nonlinear search to six parameters (lam, mu,
x_1..x_4) handled by a damped Gauss-Newton loop with a central-difference
Jacobian.  Multi-start over a coarse grid of phase initializations guards
against the secondary local minima of the trigonometric objective.

The model has an exact discrete symmetry: shifting mu by pi while moving x
by (pi, -pi, 0, pi) leaves every intensity unchanged.  Fits are reported on
the branch with |mu| <= pi/2 so recovered phases are comparable.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .experiment import (DetectorTrace, ExperimentConfig,
                         detector_intensity_curves, fourier_setpoints)

TWO_PI = 2.0 * np.pi

#: x shift accompanying a mu -> mu + pi branch move (intensities invariant).
MU_BRANCH_X_SHIFT = np.array([np.pi, -np.pi, 0.0, np.pi])


@dataclass(frozen=True)
class FitModel:
    """Forward-model parameters: per-detector scale and bias, global phase
    scale and offset, and the four tunable phases."""

    scale: tuple = (1.0, 1.0, 1.0)
    bias: tuple = (0.0, 0.0, 0.0)
    phase_scale: float = 1.0
    phase_offset: float = 0.0
    x: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "scale", tuple(float(v) for v in self.scale))
        object.__setattr__(self, "bias", tuple(float(v) for v in self.bias))
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        if len(self.scale) != 3 or len(self.bias) != 3 or len(self.x) != 4:
            raise ValueError("need 3 scales, 3 biases and 4 phases")

    def to_dict(self) -> dict:
        return {"scale": list(self.scale), "bias": list(self.bias),
                "phase_scale": self.phase_scale,
                "phase_offset": self.phase_offset, "x": list(self.x)}


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 200
    step_tol: float = 1e-10
    fd_step: float = 1e-6
    initial_damping: float = 1e-3
    #: offsets around the initial x per coordinate; the Cartesian product
    #: gives the multi-start grid (3 values -> 81 starts).
    multistart_offsets: tuple = (-np.pi / 2, 0.0, np.pi / 2)
    #: stop scanning starts once the best cost falls below this value
    #: (relative to sum of squared data); None scans all starts.
    early_stop_relative_cost: float | None = 1e-16


@dataclass(frozen=True)
class FitResult:
    model: FitModel
    residual: float
    per_detector_residual: tuple
    delta_x: tuple
    converged: bool
    iterations: int
    final_step: float
    starts: int

    def to_dict(self) -> dict:
        return {"model": self.model.to_dict(), "residual": self.residual,
                "per_detector_residual": list(self.per_detector_residual),
                "delta_x": list(self.delta_x), "converged": self.converged,
                "iterations": self.iterations, "final_step": self.final_step,
                "starts": self.starts}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def model_predict(model: FitModel, cfg: ExperimentConfig, phi) -> np.ndarray:
    """Forward model intensities, shape (N, 3) over a phi grid (or (3,)
    for a scalar phi)."""
    scalar = np.isscalar(phi)
    grid = np.atleast_1d(np.asarray(phi, dtype=float))
    curves = detector_intensity_curves(model.x, grid, cfg,
                                       model.phase_scale, model.phase_offset)
    out = np.asarray(model.scale)[None, :] * curves + np.asarray(model.bias)[None, :]
    return out[0] if scalar else out


def _inner_scale_bias(curves: np.ndarray, data: np.ndarray):
    """Closed-form least-squares (scale, bias) per detector for
    data ~ scale * curves + bias, with bias clamped at zero."""
    n = curves.shape[0]
    scale = np.empty(3)
    bias = np.empty(3)
    for i in range(3):
        m, y = curves[:, i], data[:, i]
        sm, sy = m.sum(), y.sum()
        smm, smy = (m * m).sum(), (m * y).sum()
        den = n * smm - sm * sm
        if abs(den) < 1e-30:
            scale[i], bias[i] = 1.0, max(0.0, (sy - sm) / n)
            continue
        a = (n * smy - sm * sy) / den
        b = (sy - a * sm) / n
        if b < 0.0:
            b = 0.0
            a = smy / smm if smm > 0 else 1.0
        scale[i] = a if a > 0 else max(1e-12, a)
        bias[i] = b
    return scale, bias


def _residual(theta: np.ndarray, cfg: ExperimentConfig, phi: np.ndarray,
              data: np.ndarray):
    lam, mu = theta[0], theta[1]
    curves = detector_intensity_curves(theta[2:], phi, cfg, lam, mu)
    scale, bias = _inner_scale_bias(curves, data)
    resid = (scale[None, :] * curves + bias[None, :] - data).ravel()
    return resid, scale, bias


def objective_gradient(theta: Sequence[float], cfg: ExperimentConfig,
                       trace: DetectorTrace, fd_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of the sum-of-squares objective in the
    six nonlinear parameters (lam, mu, x)."""
    theta = np.asarray(theta, dtype=float)
    data = trace.intensities
    grad = np.empty(6)
    for k in range(6):
        tp = theta.copy(); tp[k] += fd_step
        tm = theta.copy(); tm[k] -= fd_step
        rp = _residual(tp, cfg, trace.phi, data)[0]
        rm = _residual(tm, cfg, trace.phi, data)[0]
        grad[k] = (rp @ rp - rm @ rm) / (2.0 * fd_step)
    return grad


def _gauss_newton(theta0: np.ndarray, cfg: ExperimentConfig, phi: np.ndarray,
                  data: np.ndarray, opts: FitOptions):
    theta = np.asarray(theta0, dtype=float).copy()
    resid, scale, bias = _residual(theta, cfg, phi, data)
    cost = float(resid @ resid)
    damping = opts.initial_damping
    step_norm = np.inf
    iters = 0
    for iters in range(1, opts.max_iterations + 1):
        jac = np.empty((resid.size, 6))
        for k in range(6):
            tp = theta.copy(); tp[k] += opts.fd_step
            tm = theta.copy(); tm[k] -= opts.fd_step
            jac[:, k] = (_residual(tp, cfg, phi, data)[0]
                         - _residual(tm, cfg, phi, data)[0]) / (2.0 * opts.fd_step)
        grad = jac.T @ resid
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        diag[diag < 1e-30] = 1e-30
        step = np.zeros(6)
        improved = False
        for _ in range(60):
            try:
                step = np.linalg.solve(hess + damping * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            r_new, s_new, b_new = _residual(theta + step, cfg, phi, data)
            c_new = float(r_new @ r_new)
            if c_new < cost:
                theta = theta + step
                resid, scale, bias, cost = r_new, s_new, b_new, c_new
                damping = max(damping / 3.0, 1e-14)
                improved = True
                break
            damping *= 10.0
        step_norm = float(np.linalg.norm(step)) if improved else 0.0
        if not improved or step_norm < opts.step_tol:
            break
    converged = step_norm < opts.step_tol or not np.isfinite(step_norm)
    return theta, scale, bias, cost, iters, step_norm, converged


def _canonical_branch(theta: np.ndarray) -> np.ndarray:
    """Fold the fitted parameters onto the |mu| <= pi/2 branch."""
    theta = theta.copy()
    mu = (theta[1] + np.pi) % TWO_PI - np.pi
    if mu > np.pi / 2:
        mu -= np.pi
        theta[2:] = theta[2:] - MU_BRANCH_X_SHIFT
    elif mu <= -np.pi / 2:
        mu += np.pi
        theta[2:] = theta[2:] + MU_BRANCH_X_SHIFT
    theta[1] = mu
    theta[2:] = np.mod(theta[2:], TWO_PI)
    return theta


def fit(trace: DetectorTrace, cfg: ExperimentConfig,
        init: FitModel | None = None,
        options: FitOptions | None = None) -> FitResult:
    """Fit the fringe model to a detector trace.

    Requires at least 30 points spanning a full period.  Starts from
    init (default: unit scales, zero biases, nominal setpoints) plus the
    multi-start grid of phase offsets, and returns the best local minimum,
    reported on the canonical mu branch with delta_x relative to the
    nominal setpoints, wrapped to (-pi, pi].
    """
    opts = options or FitOptions()
    phi, data = trace.phi, trace.intensities
    if phi.size < 30:
        raise ValueError(f"trace needs >= 30 points, got {phi.size}")
    if phi[-1] - phi[0] < TWO_PI * 0.99:
        raise ValueError("trace must span at least one full period")
    if np.max(data.max(axis=0) - data.min(axis=0)) < 1e-12:
        raise ValueError("degenerate trace: all detector signals constant")
    if init is None:
        init = FitModel(x=fourier_setpoints(cfg))

    data_scale = float(np.sum(data * data))
    stop_cost = (None if opts.early_stop_relative_cost is None
                 else opts.early_stop_relative_cost * max(data_scale, 1e-30))

    best = None
    starts = 0
    x0 = np.asarray(init.x, dtype=float)
    for offsets in itertools.product(opts.multistart_offsets, repeat=4):
        starts += 1
        theta0 = np.concatenate([[init.phase_scale, init.phase_offset],
                                 x0 + np.asarray(offsets)])
        outcome = _gauss_newton(theta0, cfg, phi, data, opts)
        if best is None or outcome[3] < best[3]:
            best = outcome
        if stop_cost is not None and best[3] <= stop_cost:
            break

    theta, scale, bias, cost, iters, step_norm, converged = best
    theta = _canonical_branch(theta)
    resid, scale, bias = _residual(theta, cfg, phi, data)
    cost = float(resid @ resid)
    per_det = tuple(float(np.sum(resid.reshape(-1, 3)[:, i] ** 2)) for i in range(3))
    model = FitModel(tuple(scale), tuple(bias), float(theta[0]), float(theta[1]),
                     tuple(float(v) for v in theta[2:]))
    ref = np.asarray(fourier_setpoints(cfg))
    delta = np.mod(np.asarray(model.x) - ref + np.pi, TWO_PI) - np.pi
    return FitResult(model, cost, per_det, tuple(float(d) for d in delta),
                     converged, iters, step_norm, starts)


def residual_report(result: FitResult, trace: DetectorTrace,
                    cfg: ExperimentConfig) -> dict:
    """Per-detector goodness summary: RMS residual normalized by the data
    range, and a fringe-visibility estimate (max - min) over
    (max + min - 2 bias)."""
    pred = model_predict(result.model, cfg, trace.phi)
    data = trace.intensities
    report = {}
    for i in range(3):
        r = pred[:, i] - data[:, i]
        lo, hi = float(data[:, i].min()), float(data[:, i].max())
        span = hi - lo
        rms = float(np.sqrt(np.mean(r * r)))
        b = result.model.bias[i]
        denom = hi + lo - 2.0 * b
        visibility = span / denom if abs(denom) > 1e-30 else float("inf")
        report[f"d{i}"] = {"rms": rms,
                           "normalized_rms": rms / span if span > 0 else float("inf"),
                           "visibility": visibility}
    return report
