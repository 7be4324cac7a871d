"""Change detectors and sliding-window detection maps.

Every statistic is a cost difference, ``H0 cost - sum of per-frame H1 costs``,
i.e. the log-GLRT. The unstructured detectors are the Kronecker ones with
``a = p`` and ``b = 1``.
"""

import enum
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .estimators import DETECTION_CONFIG, kron_mle, minimized_cost, per_frame_mle
from .exceptions import DimensionMismatch, SgkronError, WindowTooLarge
from .model import ModelDims
from .online import SgdConfig, run_online


class DetectorKind(enum.Enum):
    SG = "sg"
    KSG = "ksg"
    SG_ONLINE = "sg-online"
    KSG_ONLINE = "ksg-online"

    @property
    def online(self):
        return self in (DetectorKind.SG_ONLINE, DetectorKind.KSG_ONLINE)

    @property
    def structured(self):
        return self in (DetectorKind.KSG, DetectorKind.KSG_ONLINE)

    def model_dims(self, dims):
        """Dims the detector actually fits (flattened for unstructured kinds)."""
        if self.structured:
            return dims
        return ModelDims.unstructured(dims.p, dims.n)


@dataclass(frozen=True)
class DetectionResult:
    log_glrt: float
    threshold: Optional[float] = None
    decision: Optional[bool] = None

    def __post_init__(self):
        if (self.threshold is None) != (self.decision is None):
            raise ValueError("threshold and decision must be given together")

    def with_threshold(self, threshold):
        return DetectionResult(self.log_glrt, threshold, bool(self.log_glrt > threshold))


def _as_kind(kind):
    return kind if isinstance(kind, DetectorKind) else DetectorKind(kind)


def offline_costs(patches, dims, cfg=DETECTION_CONFIG):
    """``(H0 cost, per-frame H1 costs)`` for a ``(T, n, p)`` stack."""
    x = np.asarray(patches)
    T = x.shape[0]
    theta0, _, _ = kron_mle(x, dims, cfg)
    h0 = float(minimized_cost(theta0.textures, dims.p, T))
    *_, h1 = per_frame_mle(x, dims, cfg)
    return h0, h1


def glrt_offline(patches, kind, dims, cfg=DETECTION_CONFIG):
    """Offline log-GLRT of a ``(T, n, p)`` stack, ``T >= 2``."""
    kind = _as_kind(kind)
    if kind.online:
        raise ValueError(f"{kind} is an online detector")
    x = np.asarray(patches)
    if x.ndim != 3 or x.shape[0] < 2:
        raise DimensionMismatch("offline detection needs a (T, n, p) stack with T >= 2")
    h0, h1 = offline_costs(x, kind.model_dims(dims), cfg)
    return DetectionResult(h0 - float(np.sum(h1)))


def glrt_online(stream, kind, dims, fp_cfg=DETECTION_CONFIG, sgd_cfg=SgdConfig()):
    """Running online log-GLRT after each frame of a ``(T, n, p)`` stream."""
    kind = _as_kind(kind)
    if not kind.online:
        raise ValueError(f"{kind} is an offline detector")
    x = np.asarray(stream)
    if x.ndim == 2:
        x = x[None]
    scores, _ = run_online(x, kind.model_dims(dims), fp_cfg, sgd_cfg)
    return [DetectionResult(float(s)) for s in scores]


def score_stack(patches, kind, dims, fp_cfg=DETECTION_CONFIG, sgd_cfg=SgdConfig()):
    """Final score of one stack for any detector kind."""
    kind = _as_kind(kind)
    if kind.online:
        return glrt_online(patches, kind, dims, fp_cfg, sgd_cfg)[-1].log_glrt
    return glrt_offline(patches, kind, dims, fp_cfg).log_glrt


def _map_rows(args):
    slab, rows, window, kind, dims, fp_cfg, sgd_cfg = args
    T, _, width, p = slab.shape
    ncols = width - window + 1
    out = np.full((len(rows), ncols), np.nan)
    for k, r in enumerate(rows):
        for c in range(ncols):
            patch = slab[:, r:r + window, c:c + window, :].reshape(T, window * window, p)
            try:
                out[k, c] = score_stack(patch, kind, dims, fp_cfg, sgd_cfg)
            except (SgkronError, np.linalg.LinAlgError):
                pass
    return out


def map_shape(height, width, window):
    """Shape of the valid-region map for an image of the given size."""
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    if window > min(height, width):
        raise WindowTooLarge(f"window {window} exceeds image size {height}x{width}")
    return height - window + 1, width - window + 1


def detection_map(stack, window, kind, dims, fp_cfg=DETECTION_CONFIG, sgd_cfg=SgdConfig(),
                  workers=1):
    """Log-GLRT of every ``window x window`` neighbourhood of an image stack.

    Parameters
    ----------
    stack : ndarray, shape (T, height, width, p)
    window : int
        Odd window side; patches hold ``window**2`` pixels.
    kind : DetectorKind or str
    dims : ModelDims
        Kronecker sizes; ``dims.n`` must equal ``window**2``.
    workers : int
        Processes used to evaluate rows. Output does not depend on it.

    Returns
    -------
    scores : ndarray, shape (height - window + 1, width - window + 1)
        Valid region only. Entry ``(r, c)`` is centred on pixel
        ``(r + window // 2, c + window // 2)``. Failed windows are NaN.
    n_failed : int
    """
    kind = _as_kind(kind)
    stack = np.asarray(stack)
    if stack.ndim != 4:
        raise DimensionMismatch("stack must have shape (T, height, width, p)")
    T, height, width, p = stack.shape
    nrows, _ = map_shape(height, width, window)
    if dims.p != p or dims.n != window * window:
        raise DimensionMismatch(f"{dims} incompatible with p={p}, window={window}")
    if not kind.online and T < 2:
        raise DimensionMismatch("offline detection needs T >= 2")
    chunks = np.array_split(np.arange(nrows), max(1, min(nrows, 4 * workers)))
    tasks = [
        (stack[:, ch[0]:ch[-1] + window], ch - ch[0], window, kind, dims, fp_cfg, sgd_cfg)
        for ch in chunks if len(ch)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_map_rows, tasks))
    else:
        parts = [_map_rows(t) for t in tasks]
    scores = np.vstack(parts)
    return scores, int(np.isnan(scores).sum())
