"""
Growth coefficients of the period sequence.

Nonzero coefficients satisfy log c_d ~ A*d - (dim/2)*log d + B, with A the
entropy of a probability vector p attached to the weights. For weighted
projective spaces p_i = a_i/a; for rank-2 varieties p comes from the unique
direction (mu, nu) in C solving
    sum_i (a_i*b - b_i*a) * log(a_i*mu + b_i*nu) = 0.

Also hosts the Gaussian (local central limit) oracles and the numerical
bounds of B + theta*A over the probability simplex.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect, minimize
from scipy.special import gammaln

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class AsymptoticData:
    """A, B and the probability vector p; theta and direction only for rank 2."""

    p: tuple
    A: float
    B: float
    dim: int
    theta: float = None
    direction: tuple = None

    def as_dict(self):
        out = {'A': self.A, 'B': self.B, 'dim': self.dim, 'p': list(self.p)}
        if self.theta is not None:
            out['theta'] = self.theta
            out['mu'], out['nu'] = self.direction
        return out


@dataclass(frozen=True)
class GaussianApprox:
    """Constrained maximiser x* of the term size on a degree-d line."""

    x_star: tuple
    quad_form: np.ndarray
    lagrange_check: float


def _entropy_terms(p):
    p = np.asarray(p, dtype=np.float64)
    A = float(-np.sum(p * np.log(p)))
    return p, A


def wps_asymptotics(w):
    """A and B of P(a_1, ..., a_N) with p_i = a_i / a."""
    p, A = _entropy_terms([ai / w.a for ai in w.weights])
    B = -(w.dim / 2.0) * LOG_2PI - 0.5 * float(np.sum(np.log(p)))
    return AsymptoticData(p=tuple(p.tolist()), A=A, B=B, dim=w.dim)


def direction_residual(w, direction):
    """f(mu, nu) = sum_i (a_i*b - b_i*a) * log(a_i*mu + b_i*nu)."""
    mu, nu = direction
    total = 0.0
    for (ai, bi), s in zip(w.columns, w.imbalance):
        total += -s * math.log(ai * mu + bi * nu)
    return total


def rank2_direction(w):
    """
    The direction (mu, nu) in C where the period terms concentrate.

    Bisection runs along the segment between the two boundary rays of C,
    kept 1e-12 away from either end; the residual tends to +inf at one end
    and -inf at the other.

    Returns:
        (mu, nu) normalised so that |mu| + |nu| = 1
    """
    r_lo, r_hi = w.cone.boundary_rays()

    def point(t):
        return ((1.0 - t) * r_lo[0] + t * r_hi[0], (1.0 - t) * r_lo[1] + t * r_hi[1])

    def f(t):
        return direction_residual(w, point(t))

    lo, hi = 1e-12, 1.0 - 1e-12
    try:
        t = bisect(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    except (ValueError, RuntimeError) as err:
        raise RuntimeError('no interior root: {}'.format(err)) from err
    mu, nu = point(t)
    scale = abs(mu) + abs(nu)
    return mu / scale, nu / scale


def rank2_asymptotics(w):
    """
    A, B and theta of a rank-2 variety.

    p_i = (mu*a_i + nu*b_i) / (mu*a + nu*b)
    theta = sum_i (a_i*b - b_i*a)^2 / (ell^2 * p_i)
    B = -(dim/2) log(2 pi) - 1/2 sum log p_i - 1/2 log theta
    """
    mu, nu = rank2_direction(w)
    denominator = mu * w.a + nu * w.b
    p, A = _entropy_terms([(mu * ai + nu * bi) / denominator for ai, bi in w.columns])
    imbalance = np.asarray(w.imbalance, dtype=np.float64)
    theta = float(np.sum(imbalance ** 2 / (w.ell ** 2 * p)))
    B = -(w.dim / 2.0) * LOG_2PI - 0.5 * float(np.sum(np.log(p))) - 0.5 * math.log(theta)
    return AsymptoticData(p=tuple(p.tolist()), A=A, B=B, dim=w.dim, theta=theta,
                          direction=(mu, nu))


def predicted_log_coeff(asy, d):
    if d < 1:
        raise ValueError('prediction needs d >= 1, got {}'.format(d))
    return asy.A * d - (asy.dim / 2.0) * math.log(d) + asy.B


def residual_series(seq, asy, ds):
    """log c_d minus the prediction, for every d in ds."""
    out = []
    for d in ds:
        if seq.is_zero(d):
            raise ValueError('zero coefficient at d={}'.format(d))
        out.append(float(seq.log_coeffs[d]) - predicted_log_coeff(asy, d))
    return out


def gaussian_approx(w, d):
    """
    Maximiser of the term size on the line a*k + b*l = d.

    x* = d * (mu, nu) / (mu*a + nu*b), so that a_i k + b_i l = d * p_i there.
    The quadratic form sum_i alpha_i alpha_i^T / p_i governs the Gaussian
    decay around x*; lagrange_check is the component of
    sum_i alpha_i log(alpha_i . x*) + alpha orthogonal to alpha = (a, b).
    """
    asy = rank2_asymptotics(w)
    mu, nu = asy.direction
    scale = d / (mu * w.a + nu * w.b)
    x_star = np.array([mu * scale, nu * scale])
    alphas = np.asarray(w.columns, dtype=np.float64)
    p = np.asarray(asy.p)
    quad = (alphas.T / p) @ alphas
    gradient = (alphas * np.log(alphas @ x_star)[:, None]).sum(axis=0)
    gradient += np.array([w.a, w.b], dtype=np.float64)
    normal = np.array([w.b, -w.a], dtype=np.float64)
    lagrange = float(gradient @ normal / np.linalg.norm(normal))
    return GaussianApprox(x_star=tuple(x_star.tolist()), quad_form=quad, lagrange_check=lagrange)


def gaussian_term_ratio(w, d, point):
    """
    Ratio of one period term to its Gaussian approximation around x*.

    The term at x = (k, l) is d! / prod_i (a_i k + b_i l)!; the approximation
    is the term at x* times exp(-(x - x*)^T Q (x - x*) / (2d)).
    """
    approx = gaussian_approx(w, d)
    alphas = np.asarray(w.columns, dtype=np.float64)
    x = np.asarray(point, dtype=np.float64)
    x_star = np.asarray(approx.x_star)

    def log_term(y):
        m = alphas @ y
        if np.any(m < 0):
            raise ValueError('point {} lies outside the cone C'.format(tuple(y)))
        return float(gammaln(d + 1.0) - gammaln(m + 1.0).sum())

    delta = x - x_star
    exponent = log_term(x) - log_term(x_star) + float(delta @ approx.quad_form @ delta) / (2.0 * d)
    return math.exp(exponent)


def local_clt_ratio(p, d, k):
    """
    Multinomial probability against its local Gaussian approximation.

    Returns:
        d^((n-1)/2) * multinomial(d; k) * prod p_i^k_i divided by
        exp(-1/2 sum q_i x_i^2) / ((2 pi)^((n-1)/2) sqrt(p_1...p_n)),
        with q_i = 1 - p_i and x_i = (k_i - d p_i) / sqrt(d p_i q_i)
    """
    p = np.asarray(p, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    n = p.size
    if n < 2 or np.any(p <= 0) or np.any(p >= 1) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError('degenerate probability vector {}'.format(p.tolist()))
    if k.size != n or np.any(k < 0) or k.sum() != d:
        raise ValueError('counts {} must be non-negative and sum to d={}'.format(k.tolist(), d))
    q = 1.0 - p
    log_multinomial = gammaln(d + 1.0) - gammaln(k + 1.0).sum()
    lhs = 0.5 * (n - 1) * math.log(d) + log_multinomial + float(np.sum(k * np.log(p)))
    x = (k - d * p) / np.sqrt(d * p * q)
    rhs = -0.5 * float(np.sum(q * x ** 2)) - 0.5 * (n - 1) * LOG_2PI - 0.5 * float(np.sum(np.log(p)))
    return math.exp(lhs - rhs)


def cluster_objective(p, theta):
    """B + theta*A for the WPS with probability vector p (dim = len(p) - 1)."""
    p = np.asarray(p, dtype=np.float64)
    n = p.size
    return (-0.5 * (n - 1) * LOG_2PI - 0.5 * float(np.sum(np.log(p)))
            - theta * float(np.sum(p * np.log(p))))


def _cluster_gradient(p, theta):
    return -0.5 / p - theta * (np.log(p) + 1.0)


def _softmax(z):
    e = np.exp(z - z.max())
    return e / e.sum()


def _minimise_on_simplex(theta, n, rng, restarts):
    def fun(z):
        return cluster_objective(_softmax(z), theta)

    def jac(z):
        p = _softmax(z)
        g = _cluster_gradient(p, theta)
        return p * (g - p @ g)

    results = []
    starts = [np.zeros(n)] + [rng.normal(size=n) for _ in range(restarts - 1)]
    for z0 in starts:
        res = minimize(fun, z0, jac=jac, method='BFGS', options={'gtol': 1e-10, 'maxiter': 2000})
        if res.success or np.linalg.norm(jac(res.x)) < 1e-7:
            results.append((float(res.fun), tuple(_softmax(res.x).tolist())))
    return results


def _ordered_starts(n, eps, rng, restarts):
    """Structured starts (k smallest entries at eps, rest equal) plus sorted Dirichlet draws."""
    starts = []
    for k in range(n):
        rest = (1.0 - k * eps) / (n - k)
        starts.append(np.array([eps] * k + [rest] * (n - k)))
    while len(starts) < restarts:
        draw = np.sort(rng.dirichlet(np.ones(n)))
        starts.append(eps + (1.0 - n * eps) * draw)
    return starts


def _maximise_on_ordered_simplex(theta, n, eps, rng, restarts):
    def fun(p):
        return -cluster_objective(p, theta)

    def jac(p):
        return -_cluster_gradient(p, theta)

    constraints = [{'type': 'eq', 'fun': lambda p: p.sum() - 1.0,
                    'jac': lambda p: np.ones_like(p)}]
    for i in range(n - 1):
        row = np.zeros(n)
        row[i], row[i + 1] = -1.0, 1.0
        constraints.append({'type': 'ineq', 'fun': lambda p, r=row: r @ p,
                            'jac': lambda p, r=row: r})
    results = []
    for p0 in _ordered_starts(n, eps, rng, restarts):
        res = minimize(fun, p0, jac=jac, method='SLSQP', bounds=[(eps, 1.0)] * n,
                       constraints=constraints, options={'ftol': 1e-12, 'maxiter': 500})
        if res.success:
            p = np.clip(res.x, eps, 1.0)
            results.append((cluster_objective(p, theta), tuple(p.tolist())))
    return results


def cluster_bound(theta, n, mode='min', eps=None, restarts=64, seed=0):
    """
    Optimise B + theta*A over probability vectors of length n.

    mode='min' searches the open simplex through p = softmax(z); mode='max'
    searches {eps <= p_1 <= ... <= p_n, sum p = 1}. Restarts are seeded and
    the best value wins, ties broken by the lexicographically smaller p.

    Returns:
        (value, p)
    """
    if n < 2:
        raise ValueError('need n >= 2, got {}'.format(n))
    if mode not in ('min', 'max'):
        raise ValueError("mode must be 'min' or 'max', got {!r}".format(mode))
    rng = np.random.default_rng(seed)
    if mode == 'min':
        results = _minimise_on_simplex(theta, n, rng, restarts)
        key = lambda item: (item[0], item[1])  # noqa: E731
    else:
        if eps is None or eps <= 0 or n * eps > 1:
            raise ValueError('mode=max needs 0 < eps <= 1/n, got eps={}'.format(eps))
        results = _maximise_on_ordered_simplex(theta, n, eps, rng, restarts)
        key = lambda item: (-item[0], item[1])  # noqa: E731
    if not results:
        raise RuntimeError('did not converge: no restart reached tolerance')
    value, p = min(results, key=key)
    logger.debug('cluster_bound: mode=%s theta=%s n=%d -> %.12f', mode, theta, n, value)
    return value, p
