"""Robust change detection in multivariate image time series.

Scaled-Gaussian pixels with Kronecker-structured scatter ``tau_i A (x) B``:
fixed-point MLEs, offline and online GLRT detectors, the Fisher-metric
geometry behind the online recursion and intrinsic Cramer-Rao bounds.
"""

from .cxlinalg import (expm, hermitian_toeplitz, herm_matfun, is_hpd, kron, kron_quad_form, logm,
                       reshape_sample, sqrtm, invsqrtm, unit_det_normalize, unreshape_sample)
from .detectors import (DetectionResult, DetectorKind, detection_map, glrt_offline, glrt_online,
                        score_stack)
from .estimators import (FixedPointConfig, TylerEstimate, kron_mle, minimized_cost, per_frame_mle,
                         tyler_mle)
from .exceptions import (DimensionMismatch, EmptyInput, InsufficientSamples, InvalidCoefficient,
                         InvalidDims, IoError, MalformedHeader, NonPositiveTexture, NotConverged,
                         NotPositiveDefinite, SgkronError, SizeMismatch, WindowTooLarge)
from .geometry import (GeodesicDistance, IcrbReport, Tangent, exp_map, fisher_inner,
                       geodesic_distance, icrb, project_tangent, riemannian_grad)
from .io import load_map, load_mits, save_map, save_mits
from .model import ModelDims, ThetaKron, nll_h0_stack, nll_patch, sample_sg_kron, sample_textures
from .online import (OnlineState, SgdConfig, init_state, online_glrt_update, run_online, sgd_step,
                     unstructured_dims)
from .simlab import (CovGenSpec, RocScenario, auc, gen_unitdet_hpd, mse_benchmark, roc_benchmark,
                     roc_curve)

__version__ = "0.1.0"
