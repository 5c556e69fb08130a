"""Matrix Fisher distribution on SO(3).

The density with respect to the normalized Haar measure is

    p(R | F) = exp(tr(F^T R)) / c(F),

and ``c`` depends on ``F`` only through its proper singular values ``s``. It
is evaluated from the one-dimensional Bessel integral

    c(s) = int_{-1}^{1} 1/2 I0(1/2 (s1 - s2)(1 - u)) I0(1/2 (s1 + s2)(1 + u)) exp(s3 u) du

with composite Gauss-Legendre quadrature in log space. Exact samples come from
the equivalent Bingham distribution on unit quaternions, drawn by rejection
from an angular central Gaussian envelope.

Note on naming: ``mode`` is the density maximizer ``U V^T``; pose-estimation code
often call it the "expected rotation". The actual first moment ``E[R]`` is
returned by :func:`expected_rotation` and is not a rotation in general.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import brentq
from scipy.special import i0e, i1e, logsumexp

from . import so3
from .errors import ConvergenceError, InvalidArgumentError, OutOfRangeError, SamplerError

S_MAX = 500.0
DEFAULT_TOL = 1e-9
MIN_ORDER = 16
MAX_ORDER = 512
MAX_PROPOSALS = 10**6


@lru_cache(maxsize=None)
def _gauss_legendre(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=4096)
def _panel_edges(scale):
    """Panel edges on [-1, 1], geometrically graded toward both endpoints.

    Boundary layers of the integrand have width about ``1 / scale``.
    """
    h = 1.0 / max(float(scale), 1.0)
    steps = [0.0]
    t = h
    while t < 1.0:
        steps.append(t)
        t *= 2.0
    steps = np.array(steps)
    edges = np.unique(np.concatenate([-1.0 + steps, [0.0], 1.0 - steps, [-1.0, 1.0]]))
    edges.setflags(write=False)
    return edges


def _nodes(edges, order):
    x, w = _gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    u = (lo + hi) * 0.5 + half * x
    return u.ravel(), (half * w).ravel()


def _check_s(s):
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise InvalidArgumentError(f"s must be a 3-vector, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise InvalidArgumentError(f"s must be finite, got {s!r}")
    if np.any(np.abs(s) > S_MAX * (1.0 + 1e-12)):
        raise OutOfRangeError(f"|s_i| must be <= {S_MAX:g}, got {s!r}")
    return s


def _log_integrand(s, u):
    a = 0.5 * (s[0] - s[1]) * (1.0 - u)
    b = 0.5 * (s[0] + s[1]) * (1.0 + u)
    logf = np.log(0.5) + np.log(i0e(a)) + np.abs(a) + np.log(i0e(b)) + np.abs(b) + s[2] * u
    return logf, a, b


def _grad_factors(u, a, b):
    # I1/I0 ratios; i1e is odd so negative arguments keep their sign
    ra = i1e(a) / i0e(a)
    rb = i1e(b) / i0e(b)
    left = 0.5 * (1.0 - u) * ra
    right = 0.5 * (1.0 + u) * rb
    return np.stack([left + right, right - left, u])


def _quadrature(s, tol, with_grad):
    edges = _panel_edges(round(float(np.sum(np.abs(s))), 6))
    prev = None
    err = np.inf
    order = MIN_ORDER
    while order <= MAX_ORDER:
        u, w = _nodes(edges, order)
        logf, a, b = _log_integrand(s, u)
        logc = float(logsumexp(logf, b=w))
        grad = None
        if with_grad:
            weights = w * np.exp(logf - logc)
            grad = _grad_factors(u, a, b) @ weights
        if prev is not None:
            err = abs(np.expm1(logc - prev[0]))
            if with_grad:
                err = max(err, float(np.max(np.abs(grad - prev[1]))))
            if err <= tol:
                return logc, grad
        prev = (logc, grad)
        order *= 2
    raise ConvergenceError(
        f"normalizing-constant quadrature did not reach tol={tol:g} for s={s!r}",
        error_estimate=err,
    )


def log_norm_const(s, tol=DEFAULT_TOL):
    """Log of the normalizing constant for proper singular values ``s``.

    Raises ``OutOfRangeError`` when ``|s_i| > 500`` and ``ConvergenceError``
    if the relative tolerance is not met at quadrature order 512.
    """
    return _quadrature(_check_s(s), tol, with_grad=False)[0]


def dlogc_ds(s, tol=DEFAULT_TOL):
    """Gradient of :func:`log_norm_const` with respect to ``s``.

    Computed by quadrature of the differentiated integrand, normalized by
    ``c``. Each component lies in (-1, 1).
    """
    return _quadrature(_check_s(s), tol, with_grad=True)[1]


def kappa_from_s(s):
    """Per-axis concentrations ``(s2 + s3, s1 + s3, s1 + s2)``."""
    s = np.asarray(s, dtype=float)
    return np.array([s[1] + s[2], s[0] + s[2], s[0] + s[1]])


class MatrixFisher:
    """Matrix Fisher distribution with parameter ``f``.

    The proper SVD, mode and concentrations are computed at construction.
    The log normalizing constant and its gradient are evaluated on first
    use and then kept, so sampling-only callers skip the quadrature.
    Instances are treated as immutable.
    """

    def __init__(self, f, tol=DEFAULT_TOL):
        f = np.array(f, dtype=float)
        if f.shape != (3, 3):
            raise InvalidArgumentError(f"F must be 3x3, got shape {f.shape}")
        svd = so3.proper_svd(f)
        _check_s(svd.s)
        f.setflags(write=False)
        self.f = f
        self.svd = svd
        self.s = svd.s
        self.u = svd.u
        self.v = svd.v
        self.tol = tol
        self.mode = svd.u @ svd.v.T
        self.kappa = kappa_from_s(svd.s)

    def __repr__(self):
        return f"MatrixFisher(s={np.round(self.s, 6).tolist()})"

    @classmethod
    def from_mode(cls, mode, s):
        """Build ``F = mode @ diag(s)`` so that the mode is ``mode`` when ``s`` is proper."""
        return cls(np.asarray(mode, dtype=float) * np.asarray(s, dtype=float))

    @cached_property
    def log_c(self):
        return log_norm_const(self.s, self.tol)

    @cached_property
    def dlogc(self):
        return dlogc_ds(self.s, self.tol)

    @cached_property
    def mean(self):
        return (self.u * self.dlogc) @ self.v.T


@dataclass(frozen=True)
class FisherSummary:
    mode: np.ndarray
    kappa: np.ndarray
    total_concentration: float
    log_c: float
    negative_s3: bool
    nonpositive_axes: tuple

    def to_dict(self):
        return {
            "mode_quaternion": so3.rot_to_quat(self.mode).tolist(),
            "mode_matrix": self.mode.ravel().tolist(),
            "kappa": self.kappa.tolist(),
            "total_concentration": self.total_concentration,
            "log_c": self.log_c,
            "negative_s3": self.negative_s3,
            "nonpositive_axes": list(self.nonpositive_axes),
        }


def mode(d):
    return d.mode


def concentrations(d):
    return d.kappa


def summary(d):
    """Per-joint confidence summary; ``total_concentration`` is the sum of kappas.

    Since ``s2 >= |s3|`` the kappas are never negative; axes with zero
    concentration and a negative ``s3`` (``det F < 0``) are flagged.
    """
    return FisherSummary(
        mode=d.mode,
        kappa=d.kappa.copy(),
        total_concentration=float(np.sum(d.kappa)),
        log_c=d.log_c,
        negative_s3=bool(d.s[2] < 0),
        nonpositive_axes=tuple(int(j) for j in np.flatnonzero(d.kappa <= 0)),
    )


def expected_rotation(d):
    """First moment ``E[R] = U diag(dlogc/ds) V^T``."""
    return d.mean


def _trace_term(d, r):
    r = np.asarray(r, dtype=float)
    out = np.einsum("ij,...ij->...", d.f, r)
    return float(out) if out.ndim == 0 else out


def log_density(d, r):
    """Log density w.r.t. normalized Haar measure; broadcasts over stacked ``r``."""
    return _trace_term(d, r) - d.log_c


def nll(d, r):
    return d.log_c - _trace_term(d, r)


def grad_nll_f(d, r):
    """Gradient of :func:`nll` with respect to ``F``: ``E[R] - R``."""
    return d.mean - np.asarray(r, dtype=float)


@dataclass(frozen=True)
class BinghamDiag:
    """Bingham exponents on quaternion components ``(w, x, y, z)``.

    ``a`` is shifted so ``max(a) == 0``; ``a + offset`` is the unshifted form.
    """

    a: np.ndarray
    offset: float

    @property
    def unshifted(self):
        return self.a + self.offset


def bingham_from_s(s):
    """Exponents ``b`` with ``tr(diag(s) R(q)) = q^T diag(b) q`` for unit ``q``."""
    s1, s2, s3 = np.asarray(s, dtype=float)
    b = np.array([s1 + s2 + s3, s1 - s2 - s3, -s1 + s2 - s3, -s1 - s2 + s3])
    top = float(np.max(b))
    return BinghamDiag(a=b - top, offset=top)


def _acg_b(lam):
    """Root of sum_i 1 / (b + 2 lam_i) = 1 on (0, 4] for lam >= 0 with min 0."""
    if np.all(lam == 0):
        return 4.0
    g = lambda b: np.sum(1.0 / (b + 2.0 * lam)) - 1.0
    return brentq(g, 1e-12, 4.0, xtol=1e-14, rtol=1e-14)


def sample_bingham(a, rng, n):
    """Draw ``n`` unit quaternions with density proportional to ``exp(q^T diag(a) q)``.

    ``a`` must satisfy ``max(a) == 0``. Returns ``(q, n_proposed)``; the
    acceptance rate is ``n / n_proposed``.
    """
    lam = -np.asarray(a, dtype=float)
    if np.any(lam < 0) or lam.min() != 0:
        raise InvalidArgumentError(f"Bingham exponents must have max 0, got {a!r}")
    b = _acg_b(lam)
    omega = 1.0 + 2.0 * lam / b
    log_m = -0.5 * (4.0 - b) + 2.0 * np.log(4.0 / b)
    inv_sd = 1.0 / np.sqrt(omega)

    out = np.empty((n, 4))
    filled = 0
    proposed = 0
    batch = max(n, 8)
    while filled < n:
        if proposed > MAX_PROPOSALS * max(n, 1):
            raise SamplerError(f"rejection sampler exceeded {proposed} proposals")
        y = rng.standard_normal((batch, 4)) * inv_sd
        x = y / np.linalg.norm(y, axis=1, keepdims=True)
        x2 = x * x
        log_ratio = -(x2 @ lam) + 2.0 * np.log(x2 @ omega) - log_m
        keep = np.log(rng.random(batch)) < log_ratio
        proposed += batch
        acc = x[keep][: n - filled]
        out[filled : filled + len(acc)] = acc
        filled += len(acc)
        rate = max(keep.mean(), 0.05)
        batch = max(int(1.2 * (n - filled) / rate) + 1, 8)
    return out, proposed


def sample(d, rng, size=None):
    """Exact draw(s) from ``d``; ``(3, 3)`` if ``size`` is None else ``(size, 3, 3)``."""
    n = 1 if size is None else int(size)
    q, _ = sample_bingham(bingham_from_s(d.s).a, rng, n)
    r = d.u @ so3.quat_to_rot(q) @ d.v.T
    return r[0] if size is None else r


@dataclass
class FitResult:
    dist: MatrixFisher
    converged: bool
    at_cap: bool
    iterations: int
    nll_trace: list
    grad_norm: float


def _clip_spectrum(f, cap):
    svd = so3.proper_svd(f)
    s = np.clip(svd.s, -cap, cap)
    return (svd.u * s) @ svd.v.T


def fit(samples, init=None, lr=0.05, max_iters=2000, tol=1e-6, grow=2.0, max_halvings=30, cap=S_MAX):
    """Maximum-likelihood ``F`` for rotation samples by projected gradient descent.

    Minimizes the mean NLL ``log c(F) - <F, mean(R)>`` with gradient
    ``E[R] - mean(R)``. A step that would raise the NLL is retried with the
    step size halved (up to ``max_halvings`` times); accepted steps grow it
    by ``grow``. Singular values are clipped to ``cap``, which is where the
    MLE of a degenerate (all-identical) sample set ends up. Stops when the
    projected-gradient norm falls below ``tol``.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3 or samples.shape[1:] != (3, 3) or len(samples) < 2:
        raise InvalidArgumentError("need at least 2 rotation samples of shape (n, 3, 3)")
    r_mean = samples.mean(axis=0)
    f = np.zeros((3, 3)) if init is None else _clip_spectrum(np.asarray(init, dtype=float), cap)
    d = MatrixFisher(f)
    obj = d.log_c - float(np.sum(f * r_mean))
    trace = [obj]
    step = float(lr)
    gnorm = np.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        g = d.mean - r_mean
        gnorm = float(np.linalg.norm((f - _clip_spectrum(f - step * g, cap)) / step))
        if gnorm < tol:
            converged = True
            it -= 1
            break
        accepted = False
        for _ in range(max_halvings + 1):
            f_new = _clip_spectrum(f - step * g, cap)
            d_new = MatrixFisher(f_new)
            obj_new = d_new.log_c - float(np.sum(f_new * r_mean))
            if obj_new <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        f, d, obj = f_new, d_new, obj_new
        trace.append(obj)
        step *= grow
    at_cap = bool(np.max(np.abs(d.s)) >= cap * (1.0 - 1e-9))
    return FitResult(d, converged, at_cap, it, trace, gnorm)
