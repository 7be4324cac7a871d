"""Streaming H0 estimation by stochastic natural gradient, and the online GLRT.

The recursion after ``T`` frames is

    theta <- exp_theta( -(alpha0 / ((T + offset) n p)) grad f_{T+1}(theta) )

where ``grad`` is the Riemannian gradient of the new frame's cost for the
normalized metric of :mod:`sgkron.geometry`. Dividing by ``n p`` turns it into
the natural gradient for the per-frame Fisher information, so ``alpha0 = 1``
is the efficient step and needs no line search.

``max_step`` caps the whitened sup-norm of the tangent vector (largest
``|eig(A^-1/2 xi_A A^-1/2)|``, same for ``B``, and ``max |xi_tau / tau|``) by
shrinking the whole vector. The update is first order, so a step that would
multiply a texture by ``e**500`` is meaningless; this happens when a
single-frame initial fit is nearly singular (``n`` close to ``p``). Steps
shrink like ``1/T``, so the cap stops binding after a few frames.

``offset = 1`` (default) weighs the initial single-frame fit as one frame of
evidence, which makes the texture update an exact running mean to first
order. ``offset = 0`` gives a unit step on the first update, which throws the
initial fit away and leaves a large transient (several times the batch error
at ``T = 100`` for ``n < p``).
"""

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .estimators import DETECTION_CONFIG, kron_mle, minimized_cost
from .geometry import exp_map, riemannian_grad
from .model import ModelDims, nll_patch


@dataclass(frozen=True)
class SgdConfig:
    alpha0: float = 1.0
    offset: int = 1
    max_step: float = 1.0

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")
        if self.offset < 0:
            raise ValueError("offset must be >= 0")
        if self.max_step is not None and not self.max_step > 0:
            raise ValueError("max_step must be positive or None")


@dataclass(frozen=True)
class OnlineState:
    """Running H0 estimate plus accumulated costs.

    ``h0_cost_sum`` is prequential: frame ``t`` is scored at the estimate
    built from frames ``1..t-1``. ``h1_cost_sum`` sums the per-frame
    minimized costs.
    """

    theta_hat: object
    frames_seen: int
    h1_cost_sum: float
    h0_cost_sum: float

    @property
    def log_glrt(self):
        return self.h0_cost_sum - self.h1_cost_sum


def init_state(first_patch, dims, cfg=DETECTION_CONFIG):
    theta, _, _ = kron_mle(first_patch, dims, cfg)
    cost = float(minimized_cost(theta.textures, dims.p))
    return OnlineState(theta_hat=theta, frames_seen=1, h1_cost_sum=cost, h0_cost_sum=cost)


def sgd_direction(state, patch, cfg=SgdConfig()):
    """Tangent vector fed to the exponential map by :func:`sgd_step`."""
    theta = state.theta_hat
    step = cfg.alpha0 / ((state.frames_seen + cfg.offset) * theta.n * theta.a * theta.b)
    xi = riemannian_grad(theta, patch) * (-step)
    if cfg.max_step is not None:
        size = whitened_size(theta, xi)
        if size > cfg.max_step:
            xi = xi * (cfg.max_step / size)
    return xi


def whitened_size(theta, xi):
    """Sup-norm of the tangent in the coordinates where the base point is identity."""
    parts = [np.max(np.abs(xi.xi_tau / theta.textures))]
    for m, x in ((theta.a_factor, xi.xi_a), (theta.b_factor, xi.xi_b)):
        if m.shape[0] > 1:
            parts.append(np.max(np.abs(scipy.linalg.eigvalsh(x, m))))
    return float(max(parts))


def sgd_step(state, patch, cfg=SgdConfig()):
    """Advance the H0 estimate by one frame. Cost sums are left untouched."""
    xi = sgd_direction(state, patch, cfg)
    return replace(state, theta_hat=exp_map(state.theta_hat, xi),
                   frames_seen=state.frames_seen + 1)


def online_glrt_update(state, patch, fp_cfg=DETECTION_CONFIG, sgd_cfg=SgdConfig(),
                       h1_cost=None):
    """Score a new frame, then take the SGD step.

    Parameters
    ----------
    state : OnlineState
    patch : ndarray, shape (n, p)
    fp_cfg, sgd_cfg
    h1_cost : float, optional
        Precomputed minimized single-frame cost of ``patch``; computed with
        :func:`kron_mle` when omitted.

    Returns
    -------
    state : OnlineState
    log_glrt : float
        ``h0_cost_sum - h1_cost_sum`` after this frame.
    """
    theta = state.theta_hat
    h0 = nll_patch(patch, theta)
    if h1_cost is None:
        fit, _, _ = kron_mle(patch, theta.dims, fp_cfg)
        h1_cost = float(minimized_cost(fit.textures, theta.a * theta.b))
    new = sgd_step(state, patch, sgd_cfg)
    new = replace(new, h0_cost_sum=state.h0_cost_sum + h0,
                  h1_cost_sum=state.h1_cost_sum + h1_cost)
    return new, new.log_glrt


def run_online(stream, dims, fp_cfg=DETECTION_CONFIG, sgd_cfg=SgdConfig(), h1_costs=None):
    """Feed a ``(T, n, p)`` stream through the online detector.

    Returns
    -------
    scores : ndarray, shape (T,)
        Running log-GLRT after each frame (the first entry is 0).
    state : OnlineState
        Final state.
    """
    x = np.asarray(stream)
    state = init_state(x[0], dims, fp_cfg)
    if h1_costs is not None:
        state = replace(state, h1_cost_sum=float(h1_costs[0]), h0_cost_sum=float(h1_costs[0]))
    scores = np.zeros(x.shape[0])
    for t in range(1, x.shape[0]):
        hc = None if h1_costs is None else float(h1_costs[t])
        state, scores[t] = online_glrt_update(state, x[t], fp_cfg, sgd_cfg, h1_cost=hc)
    return scores, state


def unstructured_dims(p, n):
    """Dims for the unstructured online detector (``a = p``, ``b = 1``)."""
    return ModelDims.unstructured(p, n)
