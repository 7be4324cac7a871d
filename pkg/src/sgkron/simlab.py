"""Desk-scale reproduction of the estimation and detection experiments.

Trials are seeded with ``numpy.random.default_rng([seed, ...trial ids])`` so a
trial's data do not depend on which worker ran it or in which order.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cxlinalg import hermitian_toeplitz, unit_det_normalize
from .detectors import DetectorKind
from .estimators import DETECTION_CONFIG, FixedPointConfig, kron_fixed_point, kron_mle, minimized_cost, per_frame_mle
from .exceptions import EmptyInput, SgkronError
from .geometry import geodesic_distance, icrb
from .model import ModelDims, ThetaKron, sample_sg_kron, sample_textures
from .online import SgdConfig, run_online, init_state, sgd_step

FULL_MSE_TRIALS = 1000
FULL_ROC_TRIALS = 5000


@dataclass(frozen=True)
class CovGenSpec:
    dim: int
    condition: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.condition > 1:
            raise ValueError("condition must be > 1")


def random_unitary(dim, rng):
    """Haar unitary from the QR decomposition of a complex Gaussian matrix."""
    g = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    qmat, r = np.linalg.qr(g)
    d = np.diag(r)
    return qmat * (d / np.abs(d))


def gen_unitdet_hpd(spec, rng=None):
    """Random unit-determinant HPD matrix with condition number ``spec.condition``.

    Eigenvalues are ``1/sqrt(c)``, ``sqrt(c)`` and ``dim - 2`` uniform draws in
    between, rotated by a random unitary, then rescaled to unit determinant.
    """
    if spec.dim < 2:
        raise ValueError("dim must be >= 2")
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    c = spec.condition
    lo, hi = 1 / np.sqrt(c), np.sqrt(c)
    lam = np.concatenate([[lo, hi], rng.uniform(lo, hi, spec.dim - 2)])
    u = random_unitary(spec.dim, rng)
    return unit_det_normalize((u * lam) @ u.conj().T)[0]


def roc_curve(h0_scores, h1_scores):
    """Empirical ROC from detector scores under both hypotheses.

    Thresholds run over ``-inf`` and every distinct pooled score; a score is a
    detection when it is strictly above the threshold.

    Returns
    -------
    p_fa, p_d : ndarray
        Nonincreasing along the array, starting at ``(1, 1)``.
    """
    h0 = np.sort(np.asarray(h0_scores, dtype=float))
    h1 = np.sort(np.asarray(h1_scores, dtype=float))
    if h0.size == 0 or h1.size == 0:
        raise EmptyInput("both score arrays must be nonempty")
    thr = np.concatenate([[-np.inf], np.unique(np.concatenate([h0, h1]))])
    p_fa = 1.0 - np.searchsorted(h0, thr, side="right") / h0.size
    p_d = 1.0 - np.searchsorted(h1, thr, side="right") / h1.size
    return p_fa, p_d


def auc(p_fa, p_d):
    """Area under an ROC given as nonincreasing ``(p_fa, p_d)`` arrays."""
    p_fa = np.asarray(p_fa)[::-1]
    p_d = np.asarray(p_d)[::-1]
    return float(np.sum(np.diff(p_fa) * (p_d[1:] + p_d[:-1]) / 2))


def _run_trials(fn, args_list, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, args_list))
    return [fn(a) for a in args_list]


# ---------------------------------------------------------------------------
# MSE versus ICRB


@dataclass
class MseResult:
    rows: list
    errors: dict  # (estimator, T) -> (trials, 4) array of A, B, tau, total errors
    failures: int
    t_grid: tuple

    def summary(self, estimator, T):
        """Mean and Monte-Carlo standard error per component (A, B, tau, total)."""
        e = self.errors[(estimator, T)]
        return e.mean(axis=0), e.std(axis=0, ddof=1) / np.sqrt(e.shape[0])


def _components(truth, est):
    d = geodesic_distance(truth, est)
    return [d.a_part, d.b_part, d.tau_part / truth.n, d.total]


def _mse_trial(args):
    dims, nu, t_grid, seed, trial, condition, fp_cfg, sgd_cfg = args
    rng = np.random.default_rng([seed, trial])
    a_mat = gen_unitdet_hpd(CovGenSpec(dims.a, condition), rng)
    b_mat = gen_unitdet_hpd(CovGenSpec(dims.b, condition), rng)
    tau = sample_textures(nu, dims.n, rng)
    truth = ThetaKron(a_mat, b_mat, tau)
    t_max = max(t_grid)
    x = sample_sg_kron(a_mat, b_mat, nu, dims.n, rng, textures=tau, size=(t_max,))
    try:
        gd = {T: _components(truth, kron_mle(x[:T], dims, fp_cfg)[0]) for T in t_grid}
        state = init_state(x[0], dims, fp_cfg)
        sgd = {}
        for t in range(1, t_max + 1):
            if t in t_grid:
                sgd[t] = _components(truth, state.theta_hat)
            if t < t_max:
                state = sgd_step(state, x[t], sgd_cfg)
    except (SgkronError, np.linalg.LinAlgError):
        return None
    return gd, sgd


def mse_benchmark(dims=ModelDims(4, 3, 8), nu=1.0, t_grid=(1, 2, 5, 10, 20, 50, 100, 200, 500, 1000),
                  trials=200, seed=0, condition=10.0, fp_cfg=FixedPointConfig(tol=1e-8, max_iter=2000),
                  sgd_cfg=SgdConfig(), workers=1):
    """Mean squared geodesic errors of the batch MLE (GD) and SGD versus ``T``.

    Returns
    -------
    MseResult
        ``rows`` are dicts with keys ``T, component, estimator, mse, icrb``;
        ``component`` is one of ``A, B, tau, total``. The ``tau`` error is
        per pixel, ``||log(tau_hat / tau)||^2 / n``.
    """
    t_grid = tuple(sorted(set(int(t) for t in t_grid)))
    args = [(dims, nu, t_grid, seed, k, condition, fp_cfg, sgd_cfg) for k in range(trials)]
    out = _run_trials(_mse_trial, args, workers)
    ok = [o for o in out if o is not None]
    errors = {}
    rows = []
    for T in t_grid:
        bound = icrb(dims, T)
        bounds = [bound.bound_a, bound.bound_b, bound.bound_tau, bound.total]
        for name, idx in (("GD", 0), ("SGD", 1)):
            e = np.array([o[idx][T] for o in ok])
            errors[(name, T)] = e
            for comp, m, bnd in zip(("A", "B", "tau", "total"), e.mean(axis=0), bounds):
                rows.append({"T": T, "component": comp, "estimator": name,
                             "mse": float(m), "icrb": float(bnd)})
    return MseResult(rows=rows, errors=errors, failures=len(out) - len(ok), t_grid=t_grid)


# ---------------------------------------------------------------------------
# ROC


@dataclass(frozen=True)
class RocScenario:
    dims: ModelDims = ModelDims(3, 4, 13)
    rho0_a: complex = 0.3 + 0.7j
    rho1_a: complex = 0.3 + 0.5j
    rho0_b: complex = 0.3 + 0.6j
    rho1_b: complex = 0.4 + 0.5j
    T: int = 50
    nu: float = 1.0
    trials: int = 500
    change_at: int = None
    horizons: tuple = ()
    seed: int = 0

    def __post_init__(self):
        for r in (self.rho0_a, self.rho1_a, self.rho0_b, self.rho1_b):
            if abs(r) >= 1:
                raise ValueError("all correlation coefficients need |rho| < 1")
        if self.change_at is not None and not 1 <= self.change_at <= self.T:
            raise ValueError("change_at must lie in [1, T]")

    def change_index(self, T):
        """Frames ``1..k`` come from the pre-change model, where ``k`` is returned."""
        if T == self.T and self.change_at is not None:
            return self.change_at
        return max(1, T // 2)

    @property
    def online_horizons(self):
        return tuple(sorted(set(self.horizons) | {self.T}))


def simulate_stack(scenario, T, changed, rng):
    """One ``(T, n, p)`` stack; pre/post-change frames differ only in ``A``, ``B``."""
    d = scenario.dims
    tau = sample_textures(scenario.nu, d.n, rng)
    a0 = hermitian_toeplitz(scenario.rho0_a, d.a)
    b0 = hermitian_toeplitz(scenario.rho0_b, d.b)
    if not changed:
        return sample_sg_kron(a0, b0, scenario.nu, d.n, rng, textures=tau, size=(T,))
    k = scenario.change_index(T)
    a1 = hermitian_toeplitz(scenario.rho1_a, d.a)
    b1 = hermitian_toeplitz(scenario.rho1_b, d.b)
    pre = sample_sg_kron(a0, b0, scenario.nu, d.n, rng, textures=tau, size=(k,))
    post = sample_sg_kron(a1, b1, scenario.nu, d.n, rng, textures=tau, size=(T - k,))
    return np.concatenate([pre, post])


def simulate_image_stack(scenario, T, height, width, region=None, seed=0):
    """Synthetic ``(T, height, width, p)`` stack with a change inside ``region``.

    Textures are drawn once per pixel. Pixels in ``region = (r0, r1, c0, c1)``
    (half-open) switch to the post-change factors after frame
    ``scenario.change_index(T)``; everything else follows the pre-change model
    throughout. ``region=None`` gives a change-free stack.
    """
    d = scenario.dims
    rng = np.random.default_rng([seed, T, height, width])
    npix = height * width
    tau = sample_textures(scenario.nu, npix, rng)
    a0 = hermitian_toeplitz(scenario.rho0_a, d.a)
    b0 = hermitian_toeplitz(scenario.rho0_b, d.b)
    x = sample_sg_kron(a0, b0, scenario.nu, npix, rng, textures=tau, size=(T,))
    x = x.reshape(T, height, width, d.p)
    if region is not None:
        r0, r1, c0, c1 = region
        if not (0 <= r0 < r1 <= height and 0 <= c0 < c1 <= width):
            raise ValueError(f"region {region} outside a {height}x{width} image")
        k = scenario.change_index(T)
        a1 = hermitian_toeplitz(scenario.rho1_a, d.a)
        b1 = hermitian_toeplitz(scenario.rho1_b, d.b)
        post = sample_sg_kron(a1, b1, scenario.nu, npix, rng, textures=tau, size=(T - k,))
        post = post.reshape(T - k, height, width, d.p)
        x[k:, r0:r1, c0:c1] = post[:, r0:r1, c0:c1]
    return x


def _roc_trial(args):
    scenario, T, hyp, trial, fp_cfg, sgd_cfg, offline = args
    rng = np.random.default_rng([scenario.seed, T, trial, hyp])
    x = simulate_stack(scenario, T, bool(hyp), rng)
    out = {}
    for structured in (False, True):
        dims = scenario.dims if structured else ModelDims.unstructured(scenario.dims.p, scenario.dims.n)
        try:
            *_, h1 = per_frame_mle(x, dims, fp_cfg)
            if offline:
                _, _, tau0, _, _ = kron_fixed_point(x[None], dims.a, dims.b, fp_cfg.tol, fp_cfg.max_iter)
                h0 = float(minimized_cost(tau0[0], dims.p, T))
                kind = DetectorKind.KSG if structured else DetectorKind.SG
                out[kind] = h0 - float(np.sum(h1))
            scores, _ = run_online(x, dims, fp_cfg, sgd_cfg, h1_costs=h1)
            if np.isfinite(scores[-1]):
                kind = DetectorKind.KSG_ONLINE if structured else DetectorKind.SG_ONLINE
                out[kind] = float(scores[-1])
        except (SgkronError, np.linalg.LinAlgError):
            pass
    return out


@dataclass
class RocResult:
    scenario: RocScenario
    scores: dict = field(default_factory=dict)  # (kind, T) -> (h0 array, h1 array)
    failures: int = 0

    def curve(self, kind, T):
        h0, h1 = self.scores[(DetectorKind(kind), T)]
        return roc_curve(h0, h1)

    def auc(self, kind, T):
        return auc(*self.curve(kind, T))

    @property
    def rows(self):
        rows = []
        for (kind, T) in sorted(self.scores, key=lambda k: (k[0].value, k[1])):
            for pfa, pd in zip(*self.curve(kind, T)):
                rows.append({"detector": kind.value, "horizon_T": T, "p_fa": float(pfa),
                             "p_d": float(pd)})
        return rows


def roc_benchmark(scenario=RocScenario(), fp_cfg=DETECTION_CONFIG,
                  sgd_cfg=SgdConfig(), workers=1):
    """Paired H0/H1 detector scores and ROC curves.

    Offline detectors are scored on stacks of length ``scenario.T``; online
    detectors at every horizon in ``scenario.online_horizons``, each on its own
    simulated stack of that length with the change in the middle. At the full
    horizon all four detectors share the same stacks.
    """
    tasks = []
    for T in scenario.online_horizons:
        for trial in range(scenario.trials):
            for hyp in (0, 1):
                tasks.append((scenario, T, hyp, trial, fp_cfg, sgd_cfg, T == scenario.T))
    outs = _run_trials(_roc_trial, tasks, workers)
    collected = {}
    failures = 0
    for (_, T, hyp, trial, *_), out in zip(tasks, outs):
        expected = 4 if T == scenario.T else 2
        failures += expected - len(out)
        for kind, s in out.items():
            collected.setdefault((kind, T), ([], []))[hyp].append(s)
    scores = {k: (np.array(v[0]), np.array(v[1])) for k, v in collected.items()}
    return RocResult(scenario=scenario, scores=scores, failures=failures)


def write_csv(rows, path, fieldnames):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


MSE_FIELDS = ("T", "component", "estimator", "mse", "icrb")
ROC_FIELDS = ("detector", "horizon_T", "p_fa", "p_d")
