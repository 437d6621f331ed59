"""Smoothness constants of a task pool, the closed-form step-size, envelope,
norm-transfer and time bounds of the convergence analysis, and checks that
compare those bounds with what trajectories actually do.

Every check returns a ``CheckReport``. When the hypotheses a bound is proved
under do not hold, the report is marked ``hypothesis-violated`` whatever the
numbers say, since the bound makes no claim there.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import qmc

from .flow import Stop, euler_integrate, maml_ode_field, rk4_integrate, solve_bi_maml_ode
from .losses import finite_diff_grad
from .meta_grad import maml_grad, maml_hess, maml_loss, monitor
from .task_model import (
    HypothesisViolation,
    MamlConfig,
    MamlError,
    TaskPool,
    Trajectory,
    as_vector,
    expected_grad,
    expected_loss,
    uncounted,
)
from .theory_map import register

STATUSES = ("pass", "fail", "hypothesis-violated", "inconclusive")
MAX_EXACT_VERTEX_DIM = 20


class NotStronglyConvex(MamlError):
    def __init__(self, message: str, estimates: dict):
        self.estimates = estimates
        super().__init__(message)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=np.float64))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=np.float64))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("box bounds must be 1-d arrays of equal length")
        if np.any(hi < lo) or not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("box must be non-empty and bounded")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def cube(cls, dim: int, radius: float, center=None) -> "Box":
        c = np.zeros(dim) if center is None else as_vector(center, dim)
        return cls(c - radius, c + radius)

    @classmethod
    def hull(cls, points, margin: float = 0.1) -> "Box":
        """Bounding box of ``points`` widened by ``margin`` times its width on each side."""
        P = np.atleast_2d(np.asarray(points, dtype=np.float64))
        lo, hi = P.min(axis=0), P.max(axis=0)
        center = 0.5 * (lo + hi)
        pad = np.maximum(margin * (hi - lo), 1e-6 * (1.0 + np.abs(center)))
        return cls(lo - pad, hi + pad)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def scale(self, unit) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * unit

    def contains(self, w) -> bool:
        w = as_vector(w, self.dim)
        return bool(np.all(w >= self.lo) and np.all(w <= self.hi))

    def to_dict(self):
        return {"lo": self.lo.tolist(), "hi": self.hi.tolist()}


@dataclass(frozen=True)
class SmoothnessConstants:
    """L, mu, kappa, sigma for a pool, certified on ``region``.

    ``exact`` is True when every constant came from a closed form rather
    than from sampling.
    """

    L: float
    mu: float
    kappa: float
    sigma: float
    region: object = None
    f_star: float | None = None
    exact: bool = False
    w_star: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (math.isfinite(self.L) and self.L > 0):
            raise ValueError("L must be finite and > 0")
        if not (math.isfinite(self.mu) and 0 < self.mu <= self.L * (1 + 1e-12)):
            raise ValueError(f"need 0 < mu <= L, got mu={self.mu!r}, L={self.L!r}")
        if not self.kappa >= 0:
            raise ValueError("kappa must be >= 0")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError("sigma must be finite and >= 0")

    def replace(self, **kw) -> "SmoothnessConstants":
        d = {k: getattr(self, k) for k in ("L", "mu", "kappa", "sigma", "region", "f_star", "exact", "w_star")}
        d.update(kw)
        return SmoothnessConstants(**d)

    def to_dict(self):
        region = self.region.to_dict() if isinstance(self.region, Box) else self.region
        return {
            "L": self.L,
            "mu": self.mu,
            "kappa": self.kappa,
            "sigma": self.sigma,
            "f_star": self.f_star,
            "exact": self.exact,
            "region": region,
        }


@dataclass
class CheckReport:
    check: str
    status: str
    margin: float
    hypothesis: dict
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_dict(self):
        return _jsonable(asdict(self))


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, Box):
        return x.to_dict()
    return x


def _status(holds: bool, ok: bool) -> str:
    if not holds:
        return "hypothesis-violated"
    return "pass" if ok else "fail"


def _hyp(statement: str, holds: bool, **values) -> dict:
    return {"statement": statement, "holds": bool(holds), **values}


# ---------------------------------------------------------------- constants


def _variance_form(pool: TaskPool):
    """E||grad f_i - grad f||^2 = w'Qw + 2q'w + r for a quadratic pool."""
    H, b, _ = pool.quadratic_stack
    p = pool.weights
    D = H - np.einsum("i,ijk->jk", p, H)[None]
    e = b - (p @ b)[None]
    Q = np.einsum("i,ikj,ikl->jl", p, D, D)
    q = np.einsum("i,ikj,ik->j", p, D, e)
    r = float(np.einsum("i,ij,ij->", p, e, e))
    return Q, q, r


def _quad_values(P, Q, q, r):
    return np.einsum("ij,jk,ik->i", P, Q, P) + 2.0 * P @ q + r


def quadratic_variance_sup(pool: TaskPool, region) -> tuple[float, bool]:
    """sup of E||grad f_i(w) - grad f(w)||^2 over ``region`` and whether it is exact.

    The variance is a convex quadratic in w, so on a box the sup sits at a
    vertex; vertices are enumerated up to dimension 20, beyond that a
    first-order-plus-curvature upper bound is returned.
    """
    Q, q, r = _variance_form(pool)
    if np.abs(Q).max() <= 1e-15 * max(1.0, abs(r)):
        return max(r, 0.0), True
    if not isinstance(region, Box):
        P = np.atleast_2d(np.asarray(region, dtype=np.float64))
        return float(max(_quad_values(P, Q, q, r).max(), 0.0)), True
    d = region.dim
    if d <= MAX_EXACT_VERTEX_DIM:
        best = -math.inf
        chunk = 1 << min(d, 16)
        bits = ((np.arange(chunk)[:, None] >> np.arange(min(d, 16))[None]) & 1).astype(np.float64)
        span = region.hi - region.lo
        for hi_bits in itertools.product((0.0, 1.0), repeat=max(d - 16, 0)):
            unit = np.hstack([bits, np.broadcast_to(np.array(hi_bits), (chunk, max(d - 16, 0)))])
            best = max(best, float(_quad_values(region.lo + span * unit, Q, q, r).max()))
        return max(best, 0.0), True
    c = region.center
    h = 0.5 * (region.hi - region.lo)
    lin = 2.0 * np.abs(h * (Q @ c + q)).sum()
    curv = np.abs(h[:, None] * Q * h[None, :]).sum()
    return float(_quad_values(c[None], Q, q, r)[0] + lin + curv), False


def _probe_points(region, n: int, seed: int) -> np.ndarray:
    if isinstance(region, Box):
        sampler = qmc.Halton(d=region.dim, scramble=True, seed=seed)
        pts = region.scale(sampler.random(n))
        return np.vstack([region.center[None], pts])
    return np.atleast_2d(np.asarray(region, dtype=np.float64))


def _variance_at(pool: TaskPool, w) -> float:
    grads = np.stack([t.grad(w) for t in pool.tasks])
    mean = pool.weights @ grads
    return float(pool.weights @ np.sum((grads - mean) ** 2, axis=1))


def _f_star_by_descent(pool: TaskPool, L: float, start, tol: float = 1e-12, max_iters: int = 1_000_000):
    w = np.array(start, dtype=np.float64)
    step = 1.0 / L
    for _ in range(max_iters):
        g = expected_grad(pool, w)
        if np.linalg.norm(g) <= tol:
            break
        w = w - step * g
    return expected_loss(pool, w), w


@register("smoothness-assumptions", operation="estimate_constants")
def estimate_constants(
    pool: TaskPool,
    region=None,
    samples: int = 10_000,
    pairs: int = 5_000,
    seed: int = 0,
) -> SmoothnessConstants:
    """Certify (L, mu, kappa, sigma) for ``pool`` on ``region``.

    ``region`` is a Box or an (n, d) array of points; the default is the
    cube [-10, 10]^d. Quadratic pools get exact eigenvalue-based constants.
    Other pools use per-task closed-form curvature bounds when every task
    provides them, and otherwise Halton probes of the region.
    """
    d = pool.dim
    region = Box.cube(d, 10.0) if region is None else region
    if not isinstance(region, Box) and np.atleast_2d(region).shape[0] == 0:
        raise ValueError("region must be non-empty")
    with uncounted():
        if pool.is_quadratic:
            H, b, _ = pool.quadratic_stack
            eig = np.linalg.eigvalsh(H)
            mu, L, kappa = float(eig[:, 0].min()), float(eig[:, -1].max()), 0.0
            var, exact = quadratic_variance_sup(pool, region)
            sigma = math.sqrt(var)
            estimates = {"L": L, "mu": mu, "kappa": kappa, "sigma": sigma}
            if not mu > 1e-12 * max(L, 1.0):
                raise NotStronglyConvex("pool not strongly convex on region", estimates)
            Hbar = np.einsum("i,ijk->jk", pool.weights, H)
            w_star = np.linalg.lstsq(Hbar, -(pool.weights @ b), rcond=None)[0]
            f_star = expected_loss(pool, w_star)
            return SmoothnessConstants(L, mu, kappa, sigma, region, f_star, exact, w_star)

        probes = _probe_points(region, samples, seed)
        bounds = [t.curvature_bounds() for t in pool.tasks]
        curvature_exact = all(bd is not None for bd in bounds)
        if curvature_exact:
            mu = min(bd[0] for bd in bounds)
            L = max(bd[1] for bd in bounds)
            kappa = max(bd[2] for bd in bounds)
        else:
            mu, L, kappa = _sampled_curvature(pool, probes, pairs, seed)
        sigma = math.sqrt(max(max(_variance_at(pool, w) for w in probes), 0.0))
        estimates = {"L": L, "mu": mu, "kappa": kappa, "sigma": sigma}
        if not mu > 1e-12 * max(L, 1.0):
            raise NotStronglyConvex("pool not strongly convex on region", estimates)
        start = region.center if isinstance(region, Box) else probes.mean(axis=0)
        f_star, w_star = _f_star_by_descent(pool, L, start)
    return SmoothnessConstants(L, mu, kappa, sigma, region, f_star, False, w_star)


def _sampled_curvature(pool, probes, pairs, seed):
    mu, L = math.inf, -math.inf
    hess = []
    for w in probes:
        hs = [t.hess(w) for t in pool.tasks]
        for h in hs:
            ev = np.linalg.eigvalsh(h)
            mu, L = min(mu, float(ev[0])), max(L, float(ev[-1]))
        hess.append(hs)
    rng = np.random.default_rng(seed)
    kappa = 0.0
    n = len(probes)
    if n > 1:
        for _ in range(pairs):
            a, b = rng.choice(n, size=2, replace=False)
            dist = np.linalg.norm(probes[a] - probes[b])
            if dist == 0:
                continue
            for i in range(pool.M):
                kappa = max(kappa, float(np.linalg.norm(hess[a][i] - hess[b][i], 2)) / dist)
    return mu, L, kappa


# ---------------------------------------------------------- step-size bounds


def _ratio(num: float, den: float) -> float:
    return math.inf if den == 0 else num / den


@register("convergence-maml-ode", operation="alpha_bound_thm1")
def alpha_bound_thm1(c: SmoothnessConstants, printed: bool = False) -> float:
    """Largest inner step for which the MAML ODE convergence guarantee applies.

    The last term is mu/(15 L^2), the value the underlying requirement
    (5/2) L^2 alpha < mu/6 gives. ``printed=True`` uses sqrt(1/15) mu L^-2
    instead, which is looser than that requirement whenever mu < 15 L^2.
    """
    L, mu, ks = c.L, c.mu, c.kappa * c.sigma
    terms = [
        1.0 / (2.0 * L),
        _ratio(mu**1.5, 36.0 * ks + 28.0 * c.kappa * math.sqrt(mu) * c.sigma),
        _ratio(mu**1.5, 16.0 * math.sqrt(L) * ks + 24.0 * c.kappa * math.sqrt(mu) * c.sigma),
        (2.0 / 15.0) ** (1.0 / 3.0) * mu ** (1.0 / 3.0) * L ** (-5.0 / 3.0),
        math.sqrt(1.0 / 15.0) * math.sqrt(mu) * L**-2,
        math.sqrt(1.0 / 15.0) * mu * L**-2 if printed else mu / (15.0 * L**2),
    ]
    return min(terms)


def _kappa_terms_thm1(c: SmoothnessConstants) -> float:
    mu = c.mu
    return min(
        _ratio(mu**1.5, 36.0 * c.kappa * c.sigma + 28.0 * c.kappa * math.sqrt(mu) * c.sigma),
        _ratio(mu**1.5, 16.0 * math.sqrt(c.L) * c.kappa * c.sigma + 24.0 * c.kappa * math.sqrt(mu) * c.sigma),
    )


@register("convergence-bi-maml-ode", operation="alpha_bound_thm2")
def alpha_bound_thm2(c: SmoothnessConstants, eps0: float) -> float:
    if not eps0 > 0:
        raise ValueError("eps0 must be > 0")
    mu, k, s = c.mu, c.kappa, c.sigma
    return min(
        1.0 / (2.0 * c.L),
        _ratio(mu, 36.0 * k * eps0 + 28.0 * k * s),
        _ratio(mu**1.5, 16.0 * math.sqrt(c.L) * k * s + 24.0 * k * math.sqrt(mu) * s),
    )


@register("strong-convexity-window", operation="alpha_bound_strong_convexity")
def alpha_bound_strong_convexity(c: SmoothnessConstants, K: float, for_uniqueness: bool = False) -> float:
    """min{1/(2L), mu/(8 kappa (2K + sigma))}; ``for_uniqueness`` swaps in 1/(4L)."""
    if not K > 0:
        raise ValueError("K must be > 0")
    first = 1.0 / ((4.0 if for_uniqueness else 2.0) * c.L)
    return min(first, _ratio(c.mu, 8.0 * c.kappa * (2.0 * K + c.sigma)))


# ------------------------------------------------- Lyapunov rate and envelope


def zeta(c: SmoothnessConstants, alpha: float) -> float:
    """Decay rate mu - (5/4) L^2 alpha (L^3 alpha^2 + 2 L^2 alpha + 2)."""
    L = c.L
    return c.mu - 1.25 * L**2 * alpha * (L**3 * alpha**2 + 2.0 * L**2 * alpha + 2.0)


@register("lyapunov-descent", operation="lyapunov_rhs")
@register("cross-term-bound", operation="lyapunov_rhs")
def lyapunov_rhs(c: SmoothnessConstants, alpha: float, gradf_norm_sq: float) -> float:
    """Upper bound on d/dt (1/2)||grad f(w(t))||^2 along the MAML ODE."""
    return -zeta(c, alpha) * gradf_norm_sq + 0.5 * c.sigma**2


@dataclass(frozen=True)
class EnvelopeParams:
    """y(t) = (y0 - gamma/zeta) exp(-zeta t) + gamma/zeta, an upper bound on ||grad f(w(t))||^2.

    When zeta*y0 <= gamma the exponential form would start at or below its
    own limit; the envelope is then the constant max(y0, gamma/zeta).
    """

    zeta: float
    gamma: float
    c0: float
    iota: float
    y0: float
    constant: bool

    @property
    def asymptote(self) -> float:
        return self.gamma / self.zeta

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.constant:
            return np.full_like(t, max(self.y0, self.asymptote)) if t.ndim else max(self.y0, self.asymptote)
        out = (self.y0 - self.asymptote) * np.exp(-self.zeta * t) + self.asymptote
        return out if t.ndim else float(out)


@register("gradient-envelope", operation="envelope")
def envelope(c: SmoothnessConstants, alpha: float, y0: float) -> EnvelopeParams:
    z = zeta(c, alpha)
    if not z > 0:
        raise HypothesisViolation("step size too large for envelope")
    gamma = 0.5 * c.sigma**2
    iota = z - 0.5 * c.mu
    if z * y0 > gamma:
        return EnvelopeParams(z, gamma, -math.log(z * y0 - gamma) / z, iota, float(y0), False)
    return EnvelopeParams(z, gamma, math.nan, iota, float(y0), True)


# ------------------------------------------------------------ norm transfer


@register("norm-transfer-forward", operation="grad_norm_transfer_fwd")
def grad_norm_transfer_fwd(G: float, c: SmoothnessConstants, alpha: float) -> float:
    """Bound on ||grad F|| wherever ||grad f|| <= G."""
    if G < 0:
        raise ValueError("G must be >= 0")
    aL = alpha * c.L
    return (1.0 + 2.0 * aL + aL**2) * G + (2.0 * aL + aL**2) * c.sigma


@register("norm-transfer-backward", operation="grad_norm_transfer_bwd")
def grad_norm_transfer_bwd(Fnorm: float, c: SmoothnessConstants, alpha: float) -> float:
    """Bound on ||grad f|| wherever ||grad F|| <= Fnorm; needs alpha < 1/(4L)."""
    if not alpha < 1.0 / (4.0 * c.L):
        raise HypothesisViolation(f"alpha = {alpha!r} is not below 1/(4L) = {1.0 / (4.0 * c.L)!r}")
    aL = alpha * c.L
    return (Fnorm + 2.0 * aL * c.sigma) / (1.0 - 2.0 * aL)


# ------------------------------------------------------------- time bounds


def _log_pos(x: float) -> float:
    return math.log(x) if x > 1.0 else 0.0


@register("convergence-maml-ode", operation="time_bound_thm1")
def time_bound_thm1(c: SmoothnessConstants, alpha: float, gradf0_norm: float, eps: float) -> float | None:
    """Explicit time after which the MAML ODE has ||grad F|| <= eps, or None when not applicable.

    Not applicable when sigma = 0 (the expression divides by sigma) or when
    iota = zeta - mu/2 <= 0. A phase whose log argument is <= 1 adds 0.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    mu, s = c.mu, c.sigma
    iota = zeta(c, alpha) - 0.5 * mu
    if s == 0 or not iota > 0:
        return None
    g2 = gradf0_norm**2
    t = 0.0
    if g2 > s**2 / mu:
        t += (2.0 / mu) * _log_pos((mu**2 * g2 - mu * s**2 / 2.0) / (iota * s**2))
    t += (16.0 / mu) * _log_pos((5.0 + 9.0 / math.sqrt(mu)) * s / (4.0 * eps))
    return t


@register("convergence-bi-maml-ode", operation="time_bound_thm2")
def time_bound_thm2(c: SmoothnessConstants, alpha: float, eps0: float, gradf0_norm: float, eps: float) -> float:
    if not (eps0 > 0 and eps > 0):
        raise ValueError("eps0 and eps must be > 0")
    mu = c.mu
    first = (2.0 / mu) * _log_pos(gradf0_norm**2 / eps0**2)
    second = (16.0 / mu) * _log_pos((9.0 * eps0 + 5.0 * c.sigma) / (4.0 * eps))
    return first + second


# ------------------------------------------------------ trajectory checks


def _lyapunov_hypothesis(c, alpha):
    holds = alpha < 1.0 / (2.0 * c.L)
    return _hyp("alpha < 1/(2L)", holds, alpha=alpha, limit=1.0 / (2.0 * c.L))


@register("lyapunov-descent", check="lyapunov")
@register("cross-term-bound", check="lyapunov")
def check_lyapunov(trajectory: Trajectory, c: SmoothnessConstants, alpha: float, tol: float = 1e-6) -> CheckReport:
    """Central-difference d/dt (1/2)||grad f||^2 at interior samples against ``lyapunov_rhs``.

    A sample violates when the derivative exceeds the bound by more than
    tol * (1 + ||grad f||^2); ``max_excess`` is the largest excess in those
    same normalized units (negative when every sample has slack).
    """
    if len(trajectory) < 3:
        raise ValueError("trajectory too short (need at least 3 samples)")
    t = trajectory.t
    g2 = trajectory.column("gradf_norm") ** 2
    E = 0.5 * g2
    dE = (E[2:] - E[:-2]) / (t[2:] - t[:-2])
    rhs = lyapunov_rhs(c, alpha, g2[1:-1])
    excess = (dE - rhs) / (1.0 + g2[1:-1])
    violations = int(np.count_nonzero(excess > tol))
    hyp = _lyapunov_hypothesis(c, alpha)
    return CheckReport(
        "lyapunov",
        _status(hyp["holds"], violations == 0),
        float(-excess.max()),
        hyp,
        {
            "samples": int(excess.size),
            "violations": violations,
            "violation_fraction": violations / excess.size,
            "max_excess": float(excess.max()),
            "tol": tol,
        },
    )


def _iota_hypothesis(c, alpha, extra_limit=math.inf):
    iota = zeta(c, alpha) - 0.5 * c.mu
    limit = min(1.0 / (2.0 * c.L), extra_limit)
    holds = alpha < limit and iota > 0
    return _hyp("alpha < 1/(2L) and iota = zeta - mu/2 > 0", holds, alpha=alpha, limit=limit, iota=iota)


@register("gradient-envelope", check="envelope")
def check_envelope(trajectory: Trajectory, c: SmoothnessConstants, alpha: float, rel_tol: float = 1e-6) -> CheckReport:
    """||grad f(w(t))||^2 <= y(t)(1 + rel_tol) at every sample, and gamma/zeta < sigma^2/mu."""
    hyp = _iota_hypothesis(c, alpha)
    g2 = trajectory.column("gradf_norm") ** 2
    try:
        env = envelope(c, alpha, float(g2[0]))
    except HypothesisViolation as exc:
        return CheckReport("envelope", "hypothesis-violated", math.nan, hyp, {"error": str(exc)})
    y = env(trajectory.t)
    ratio = g2 / (y * (1.0 + rel_tol))
    violations = int(np.count_nonzero(g2 > y * (1.0 + rel_tol)))
    limit = c.sigma**2 / c.mu
    asym_ok = env.asymptote < limit if c.sigma > 0 else env.asymptote == 0
    return CheckReport(
        "envelope",
        _status(hyp["holds"], violations == 0 and asym_ok),
        float(1.0 - ratio.max()),
        hyp,
        {
            "violations": violations,
            "max_ratio": float(ratio.max()),
            "asymptote": env.asymptote,
            "sigma_sq_over_mu": limit,
            "zeta": env.zeta,
            "iota": env.iota,
            "constant_envelope": env.constant,
        },
    )


@register("norm-transfer-forward", check="norm_transfer")
@register("norm-transfer-backward", check="norm_transfer")
def check_norm_transfer(trajectory: Trajectory, c: SmoothnessConstants, alpha: float) -> CheckReport:
    """Pointwise ||grad F|| <= fwd(||grad f||), and ||grad f|| <= bwd(||grad F||) when alpha < 1/(4L)."""
    gF = trajectory.column("gradF_norm")
    gf = trajectory.column("gradf_norm")
    fwd = np.array([grad_norm_transfer_fwd(g, c, alpha) for g in gf])
    slack_fwd = fwd - gF
    tiny = 1e-12 * (1.0 + fwd)
    fwd_viol = int(np.count_nonzero(slack_fwd < -tiny))
    details = {"fwd_violations": fwd_viol, "fwd_min_slack": float(slack_fwd.min())}
    margin = float(slack_fwd.min())
    bwd_applies = alpha < 1.0 / (4.0 * c.L)
    bwd_viol = 0
    if bwd_applies:
        bwd = np.array([grad_norm_transfer_bwd(g, c, alpha) for g in gF])
        slack_bwd = bwd - gf
        bwd_viol = int(np.count_nonzero(slack_bwd < -1e-12 * (1.0 + bwd)))
        details.update(bwd_violations=bwd_viol, bwd_min_slack=float(slack_bwd.min()))
        margin = min(margin, float(slack_bwd.min()))
    details["bwd_checked"] = bwd_applies
    hyp = _hyp("sigma certified on the trajectory region", True)
    return CheckReport("norm_transfer", _status(True, fwd_viol == 0 and bwd_viol == 0), margin, hyp, details)


# ------------------------------------------------------------ landscape


def _sample_sublevel(pool, alpha, center, K, n, rng, radius, max_batches=400):
    """Rejection-sample n points with ||grad F|| <= K around ``center``, shrinking the radius on low acceptance."""
    d = pool.dim
    found = [np.asarray(center, dtype=np.float64)]
    batch = max(4 * n, 64)
    tried = 0
    while len(found) < n and tried < max_batches:
        tried += 1
        z = rng.standard_normal((batch, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = radius * rng.random(batch) ** (1.0 / d)
        cand = center + r[:, None] * z
        keep = [w for w in cand if np.linalg.norm(monitor(pool, alpha, w)[1]) <= K]
        found.extend(keep)
        if len(keep) < 0.05 * batch:
            radius *= 0.5
    return np.array(found[:n]) if found else np.empty((0, d))


def _find_critical_point(pool, alpha, w0, L):
    field = maml_ode_field(pool, alpha)
    with uncounted():
        traj = rk4_integrate(field, w0, 0.5 / L, Stop(eps=1e-10, max_iters=200_000))
    return traj.final.w, traj.termination


@register("strong-convexity-window", check="strong_convexity")
@register("local-strong-convexity", operation="hess_window_check", check="strong_convexity")
def hess_window_check(
    pool: TaskPool,
    alpha: float,
    c: SmoothnessConstants,
    K: float,
    n_probes: int = 100,
    seed: int = 0,
    centers=None,
    tol: float | None = None,
) -> CheckReport:
    """Eigenvalues of the MAML Hessian at points of U(K) against [mu/8, 9L/8].

    Probes are rejection-sampled in balls around ``centers`` (by default the
    critical point reached by the MAML ODE from the origin).
    """
    tol = 1e-6 * c.L if tol is None else tol
    limit = alpha_bound_strong_convexity(c, K)
    hyp = _hyp("alpha <= min{1/(2L), mu/(8 kappa (2K + sigma))}", alpha <= limit, alpha=alpha, limit=limit, K=K)
    rng = np.random.default_rng(seed)
    if centers is None:
        start = c.w_star if c.w_star is not None else np.zeros(pool.dim)
        centers = [_find_critical_point(pool, alpha, start, c.L)[0]]
    centers = [as_vector(w, pool.dim) for w in centers]
    radius = 2.0 * (2.0 * K + c.sigma) / c.mu
    per = -(-n_probes // len(centers))
    with uncounted():
        probes = [p for w in centers for p in _sample_sublevel(pool, alpha, w, K, per, rng, radius)][:n_probes]
        probes = [p for p in probes if np.linalg.norm(monitor(pool, alpha, p)[1]) <= K]
        if not probes:
            return CheckReport("strong_convexity", "inconclusive", math.nan, hyp, {"probes": 0})
        eigs = np.array([np.linalg.eigvalsh(maml_hess(pool, alpha, w)) for w in probes])
    lo, hi = c.mu / 8.0, 9.0 * c.L / 8.0
    emin, emax = float(eigs.min()), float(eigs.max())
    inside = emin >= lo - tol and emax <= hi + tol
    worst = int(np.argmin(eigs.min(axis=1)))
    return CheckReport(
        "strong_convexity",
        _status(hyp["holds"], inside),
        float(min(emin - lo, hi - emax)),
        hyp,
        {
            "probes": len(probes),
            "window": [lo, hi],
            "min_eigenvalue": emin,
            "max_eigenvalue": emax,
            "argmin": probes[worst],
            "negative_curvature_found": emin < 0,
        },
    )


@register("region-inclusion", operation="region_membership")
@register("sublevel-inclusion", operation="region_membership")
def region_membership(pool: TaskPool, c: SmoothnessConstants, w, K: float, v_level: float, alpha: float) -> dict:
    """{'in_U': ||grad F(w)|| <= K, 'in_V': f(w) - f* <= v_level}."""
    if c.f_star is None:
        raise ValueError("constants carry no f_star; V membership is undefined")
    with uncounted():
        _, gF, _ = monitor(pool, alpha, w)
        fw = expected_loss(pool, w)
    return {"in_U": bool(np.linalg.norm(gF) <= K), "in_V": bool(fw - c.f_star <= v_level)}


@register("region-inclusion", check="region_inclusion")
@register("sublevel-inclusion", check="region_inclusion")
def check_inclusions(pool: TaskPool, c: SmoothnessConstants, alpha: float, K: float, n: int = 1000, seed: int = 0) -> CheckReport:
    """Spot-check U(K) in V((2K+sigma)^2/(2mu)) in U(sigma + sqrt(L/mu)(2K+sigma)) and
    V((K'-sigma)^2/(2L)) in U(K') for K' = (1 + sqrt(L/mu)) sigma + K."""
    if c.w_star is None or c.f_star is None:
        raise ValueError("constants need w_star and f_star")
    rng = np.random.default_rng(seed)
    hyp = _hyp("alpha < 1/(4L)", alpha < 1.0 / (4.0 * c.L), alpha=alpha, limit=1.0 / (4.0 * c.L))
    r = math.sqrt(c.L / c.mu)
    v1 = (2.0 * K + c.sigma) ** 2 / (2.0 * c.mu)
    u2 = c.sigma + r * (2.0 * K + c.sigma)
    Kp = (1.0 + r) * c.sigma + K
    v3 = (Kp - c.sigma) ** 2 / (2.0 * c.L)
    radius = 1.2 * (2.0 * K + c.sigma) / c.mu
    bad = {"U_in_V": 0, "V_in_U": 0, "Vp_in_Up": 0}
    counts = {"U_samples": 0, "V_samples": 0}
    with uncounted():
        d = pool.dim
        z = rng.standard_normal((n, d))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        pts = c.w_star + (radius * rng.random(n) ** (1.0 / d))[:, None] * z
        for w in pts:
            _, gF, _ = monitor(pool, alpha, w)
            gFn = float(np.linalg.norm(gF))
            gap = expected_loss(pool, w) - c.f_star
            if gFn <= K:
                counts["U_samples"] += 1
                bad["U_in_V"] += gap > v1 * (1 + 1e-12) + 1e-12
            if gap <= v1:
                counts["V_samples"] += 1
                bad["V_in_U"] += gFn > u2 * (1 + 1e-12)
            if gap <= v3:
                bad["Vp_in_Up"] += gFn > Kp * (1 + 1e-12)
    total = sum(bad.values())
    status = "inconclusive" if counts["U_samples"] == 0 else _status(hyp["holds"], total == 0)
    return CheckReport(
        "region_inclusion", status, float(-total), hyp,
        {**counts, "violations": bad, "K": K, "V_level": v1, "U_outer": u2, "K_prime": Kp},
    )


def uniqueness_K(c: SmoothnessConstants) -> float:
    """Smallest admissible K for the uniqueness statement, plus a relative margin of 1e-6."""
    return (1.0 + math.sqrt(c.L / c.mu)) * c.sigma + 1e-6 * (1.0 + c.sigma)


@register("unique-minimum", operation="uniqueness_probe", check="uniqueness")
@register("critical-point-existence", operation="uniqueness_probe", check="uniqueness")
def uniqueness_probe(
    pool: TaskPool,
    alpha: float,
    n_starts: int = 20,
    box: Box | None = None,
    tol: float = 1e-4,
    c: SmoothnessConstants | None = None,
    seed: int = 0,
    beta: float | None = None,
    eps: float = 1e-8,
    max_iters: int = 500_000,
) -> CheckReport:
    """Run the MAML ODE (RK4) from ``n_starts`` uniform points in ``box``.

    All runs must reach ||grad F|| <= eps, end within ``tol`` of each other,
    and end inside V((K - sigma)^2/(2L)). When ``c`` is None the constants
    are certified on the hull of all computed iterates.
    """
    d = pool.dim
    box = Box.cube(d, 10.0) if box is None else box
    rng = np.random.default_rng(seed)
    starts = box.scale(rng.random((n_starts, d)))
    field = maml_ode_field(pool, alpha)
    if beta is None:
        L_guess = c.L if c is not None else _pool_L(pool)
        beta = 0.5 / L_guess
    with uncounted():
        trajs = [rk4_integrate(field, w0, beta, Stop(eps=eps, max_iters=max_iters)) for w0 in starts]
    if c is None:
        c = estimate_constants(pool, Box.hull(np.vstack([t.ws for t in trajs])))
    K = uniqueness_K(c)
    limit = alpha_bound_strong_convexity(c, K, for_uniqueness=True)
    hyp = _hyp("alpha <= min{1/(4L), mu/(8 kappa (2K + sigma))}", alpha <= limit, alpha=alpha, limit=limit, K=K)
    ends = np.array([t.final.w for t in trajs])
    converged = [t.termination == "converged" for t in trajs]
    level = (K - c.sigma) ** 2 / (2.0 * c.L)
    in_V = [region_membership(pool, c, w, K, level, alpha)["in_V"] for w in ends]
    diffs = ends[:, None, :] - ends[None, :, :]
    spread = float(np.sqrt((diffs**2).sum(-1)).max())
    details = {
        "starts": n_starts,
        "converged": int(sum(converged)),
        "max_pairwise_distance": spread,
        "terminal_point": ends.mean(axis=0),
        "V_level": level,
        "all_in_V": bool(all(in_V)),
        "beta": beta,
    }
    if not all(converged):
        return CheckReport("uniqueness", "inconclusive", math.nan, hyp, details)
    ok = spread < tol and all(in_V)
    return CheckReport("uniqueness", _status(hyp["holds"], ok), tol - spread, hyp, details)


def _pool_L(pool):
    if pool.is_quadratic:
        return float(np.linalg.eigvalsh(pool.quadratic_stack[0])[:, -1].max())
    bounds = [t.curvature_bounds() for t in pool.tasks]
    if all(b is not None for b in bounds):
        return max(b[1] for b in bounds)
    with uncounted():
        return max(float(np.abs(np.linalg.eigvalsh(t.hess(np.zeros(pool.dim)))).max()) for t in pool.tasks) or 1.0


# -------------------------------------------------------------- time checks


@register("convergence-maml-ode", check="time_bound_maml")
def check_time_bound_maml(pool, c, alpha, w0, eps, beta: float = 1e-3, max_time: float | None = None) -> CheckReport:
    """First time the RK4 MAML ODE reaches ||grad F|| <= eps against ``time_bound_thm1``."""
    with uncounted():
        gf0 = float(np.linalg.norm(expected_grad(pool, w0)))
    bound = time_bound_thm1(c, alpha, gf0, eps)
    hyp = _iota_hypothesis(c, alpha, _kappa_terms_thm1(c))
    hyp["sigma_positive"] = c.sigma > 0
    if bound is None:
        return CheckReport("time_bound_maml", "hypothesis-violated" if not hyp["holds"] else "inconclusive",
                           math.nan, hyp, {"bound": None})
    horizon = max_time if max_time is not None else 1.5 * bound
    with uncounted():
        traj = rk4_integrate(maml_ode_field(pool, alpha), w0, beta, Stop(eps=eps, max_time=horizon, max_iters=10**8))
    t_obs = traj.first_time_below("gradF_norm", eps)
    if t_obs is None:
        return CheckReport("time_bound_maml", _status(hyp["holds"], False), -math.inf, hyp,
                           {"bound": bound, "observed": None})
    return CheckReport("time_bound_maml", _status(hyp["holds"], t_obs <= bound), bound - t_obs, hyp,
                       {"bound": bound, "observed": t_obs})


@register("convergence-bi-maml-ode", check="time_bound_bi_maml")
@register("biphasic-ode", check="time_bound_bi_maml")
def check_time_bound_bi_maml(pool, c, alpha, eps0, w0, eps, beta: float = 1e-3) -> CheckReport:
    with uncounted():
        gf0 = float(np.linalg.norm(expected_grad(pool, w0)))
    bound = time_bound_thm2(c, alpha, eps0, gf0, eps)
    limit = alpha_bound_thm2(c, eps0)
    hyp = _hyp("alpha < min{1/(2L), kappa terms}", alpha < limit, alpha=alpha, limit=limit)
    cfg = MamlConfig(alpha=alpha, beta=beta, eps=eps, eps0=eps0, integrator="rk4",
                     max_iters=10**8, max_time=1.5 * bound + 1.0)
    with uncounted():
        traj = solve_bi_maml_ode(pool, cfg, w0)
    t_obs = traj.final.t if traj.termination == "converged" else None
    details = {"bound": bound, "observed": t_obs, "switch_time": traj.meta.get("switch_time")}
    if t_obs is None:
        return CheckReport("time_bound_bi_maml", _status(hyp["holds"], False), -math.inf, hyp, details)
    return CheckReport("time_bound_bi_maml", _status(hyp["holds"], t_obs <= bound), bound - t_obs, hyp, details)


# ------------------------------------------------------- counterexample scan


def _sinusoid_params(pool):
    from .losses import SinusoidalQuadraticLoss

    if pool.dim != 1 or not all(isinstance(t, SinusoidalQuadraticLoss) for t in pool.tasks):
        return None
    return [(t.a, t.amp, t.freq) for t in pool.tasks]


def maml_derivatives_1d(pool: TaskPool, alpha: float, grid) -> tuple[np.ndarray, np.ndarray]:
    """F'(w) and F''(w) on a grid for a one-dimensional pool."""
    grid = np.asarray(grid, dtype=np.float64)
    params = _sinusoid_params(pool)
    if params is None:
        if pool.dim != 1:
            raise ValueError("scan needs a one-dimensional pool")
        with uncounted():
            d1 = np.array([maml_grad(pool, alpha, [w])[0] for w in grid])
            d2 = np.array([maml_hess(pool, alpha, [w])[0, 0] for w in grid])
        return d1, d2
    d1 = np.zeros_like(grid)
    d2 = np.zeros_like(grid)
    for p, (a, amp, fr) in zip(pool.weights, params):
        g = lambda x: 2 * a * x + amp * fr * np.cos(fr * x)
        h = lambda x: 2 * a - amp * fr**2 * np.sin(fr * x)
        k3 = -amp * fr**3 * np.cos(fr * grid)
        u = grid - alpha * g(grid)
        A = 1.0 - alpha * h(grid)
        d1 += p * A * g(u)
        d2 += p * (A**2 * h(u) - alpha * k3 * g(u))
    return d1, d2


def _sign_changes(x) -> int:
    s = np.sign(x)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


@register("nonconvex-example", operation="scan_counterexample", check="counterexample")
def scan_counterexample(alpha: float = 0.4, grid_min: float = -3.0, grid_max: float = 3.0, step: float = 1e-3, pool=None) -> dict:
    """Scan F' and F'' of a one-dimensional pool (default: the non-convex example pool)."""
    from .losses import counterexample_pool

    if not step > 0:
        raise ValueError("step must be > 0")
    if not grid_max > grid_min:
        raise ValueError("grid_max must exceed grid_min")
    pool = counterexample_pool() if pool is None else pool
    n = int(math.floor((grid_max - grid_min) / step + 1e-9)) + 1
    grid = grid_min + step * np.arange(n)
    d1, d2 = maml_derivatives_1d(pool, alpha, grid)
    k = int(np.argmin(d2))
    s = np.sign(d1)
    idx = np.flatnonzero(s[1:] * s[:-1] < 0)
    intervals = [[float(grid[i]), float(grid[i + 1])] for i in idx]
    return {
        "alpha": alpha,
        "grid": grid,
        "dF": d1,
        "d2F": d2,
        "min_d2F": float(d2[k]),
        "argmin_d2F": float(grid[k]),
        "dF_sign_change_intervals": intervals,
        "dF_slope_sign_changes": _sign_changes(np.diff(d1) / step),
    }


# ------------------------------------------------------- mechanism checks


def check_gradient_fd(pool: TaskPool, alpha: float, n_probes: int = 50, seed: int = 0, radius: float = 2.0,
                      rtol: float | None = None) -> CheckReport:
    """maml_grad against central differences of maml_loss at random points.

    Relative error is ||g - g_fd|| / max(||g||, 1e-12); the default
    tolerance is 1e-6 for quadratic pools and 1e-4 otherwise.
    """
    rtol = (1e-6 if pool.is_quadratic else 1e-4) if rtol is None else rtol
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-radius, radius, size=(n_probes, pool.dim))
    errs = []
    with uncounted():
        for w in pts:
            g = maml_grad(pool, alpha, w)
            fd = finite_diff_grad(lambda v: maml_loss(pool, alpha, v), w)
            errs.append(float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1e-12)))
    worst = max(errs)
    return CheckReport("gradient_fd", _status(True, worst < rtol), rtol - worst, _hyp("none", True),
                       {"probes": n_probes, "max_rel_error": worst, "rtol": rtol})


def check_euler_equivalence(pool: TaskPool, config: MamlConfig, w0) -> CheckReport:
    """One Euler step on the MAML field, one MAML iteration and w - beta grad F(w) must coincide."""
    from .optimizers import run_maml

    w0 = as_vector(w0, pool.dim)
    cfg = config.replace(max_iters=1, eps=min(config.eps, 1e-300))
    with uncounted():
        a = euler_integrate(maml_ode_field(pool, cfg.alpha), w0, cfg.beta, Stop(eps=0.0, max_iters=1)).final.w
        b = run_maml(pool, cfg, w0).final.w
        c = w0 - cfg.beta * maml_grad(pool, cfg.alpha, w0)
    scale = max(float(np.linalg.norm(c)), 1e-300)
    rel = max(float(np.linalg.norm(a - b)), float(np.linalg.norm(a - c))) / scale
    return CheckReport("euler_equivalence", _status(True, rel <= 1e-15), 1e-15 - rel, _hyp("none", True),
                       {"relative_difference": rel})


def check_flow_descent(trajectory: Trajectory, rtol: float = 1e-8) -> CheckReport:
    """F(w(t)) must not increase along a gradient-flow trajectory of F."""
    F = trajectory.column("F_val")
    inc = (F[1:] - F[:-1]) / (1.0 + np.abs(F[:-1]))
    worst = float(inc.max()) if inc.size else 0.0
    return CheckReport("flow_descent", _status(True, worst <= rtol), rtol - worst, _hyp("none", True),
                       {"steps": int(inc.size), "max_relative_increase": worst})


def check_phase_latch(trajectory: Trajectory, M: int, hess_per_step: int | None = None) -> CheckReport:
    """Phases form an expected_loss prefix then maml; no Hessians before the
    switch and exactly ``hess_per_step`` (default M) per maml-phase step."""
    per = M if hess_per_step is None else hess_per_step
    phases = [s.phase for s in trajectory.samples]
    k = next((i for i, ph in enumerate(phases) if ph == "maml"), len(phases))
    prefix_ok = all(ph == "maml" for ph in phases[k:])
    hess = trajectory.column("hess_evals_cum")
    early_ok = bool(np.all(hess[: k + 1] == 0))
    steps_ok = bool(np.all(np.diff(hess[k:]) == per))
    ok = prefix_ok and early_ok and steps_ok
    return CheckReport("phase_latch", _status(True, ok), 0.0 if ok else -1.0, _hyp("none", True),
                       {"switch_sample": k if k < len(phases) else None, "monotone": prefix_ok,
                        "no_hessians_before_switch": early_ok, "hessians_per_step": steps_ok})


@register("smoothness-assumptions", check="constants")
def check_constants(pool: TaskPool, c: SmoothnessConstants, n: int = 1000, seed: int = 1) -> CheckReport:
    """Fresh random points of the certified region must respect mu, L and sigma."""
    region = c.region if c.region is not None else Box.cube(pool.dim, 10.0)
    rng = np.random.default_rng(seed)
    pts = region.scale(rng.random((n, pool.dim))) if isinstance(region, Box) else np.atleast_2d(region)
    lo, hi, var = math.inf, -math.inf, 0.0
    with uncounted():
        for w in pts:
            for t in pool.tasks:
                ev = np.linalg.eigvalsh(t.hess(w))
                lo, hi = min(lo, float(ev[0])), max(hi, float(ev[-1]))
            var = max(var, _variance_at(pool, w))
    tol = 1e-9 * (1.0 + c.L)
    ok = lo >= c.mu - tol and hi <= c.L + tol and var <= c.sigma**2 * (1 + 1e-9) + 1e-12
    margin = min(lo - c.mu, c.L - hi, c.sigma**2 - var)
    return CheckReport("constants", _status(True, ok), float(margin), _hyp("none", True),
                       {"min_eigenvalue": lo, "max_eigenvalue": hi, "max_variance": var, "constants": c.to_dict()})


def check_bi_maml_efficiency(pool: TaskPool, config: MamlConfig, w0, bi_iters: int = 25, maml_iters: int = 50) -> CheckReport:
    """BI-MAML after ``bi_iters`` steps against MAML after ``maml_iters`` steps,
    and Hessian evaluations of both after ``maml_iters`` steps."""
    from .optimizers import run_bi_maml, run_maml

    cfg = config.replace(max_iters=maml_iters, eps=1e-300)
    pool.reset_counters()
    bi = run_bi_maml(pool, cfg, w0)
    pool.reset_counters()
    mm = run_maml(pool, cfg, w0)
    pool.reset_counters()
    bi_g = bi[min(bi_iters, len(bi) - 1)].gradF_norm
    mm_g = mm[min(maml_iters, len(mm) - 1)].gradF_norm
    bi_h = bi[min(maml_iters, len(bi) - 1)].hess_evals_cum
    mm_h = mm[min(maml_iters, len(mm) - 1)].hess_evals_cum
    ok = bi_g < mm_g and bi_h < mm_h
    return CheckReport(
        "bi_maml_efficiency", _status(True, ok), float(mm_g - bi_g), _hyp("none", True),
        {"bi_gradF_at": [bi_iters, bi_g], "maml_gradF_at": [maml_iters, mm_g],
         "bi_hess_evals": int(bi_h), "maml_hess_evals": int(mm_h), "switch_iter": bi.meta.get("switch_iter")},
    )


# ---------------------------------------------------------------- suite

CHECKS = (
    "constants",
    "gradient_fd",
    "euler_equivalence",
    "flow_descent",
    "phase_latch",
    "lyapunov",
    "envelope",
    "norm_transfer",
    "strong_convexity",
    "uniqueness",
    "region_inclusion",
    "time_bound_maml",
    "time_bound_bi_maml",
)
OPTIONAL_CHECKS = ("bi_maml_efficiency",)


def verify(
    pool: TaskPool,
    alpha: float,
    w0,
    checks=None,
    eps: float = 1e-2,
    eps0: float = 0.1,
    beta: float = 1e-3,
    step: float = 0.05,
    horizon: float = 10.0,
    seed: int = 0,
    n_probes: int = 100,
    n_starts: int = 20,
) -> tuple[list[CheckReport], SmoothnessConstants]:
    """Run the selected checks and return their reports with the constants used.

    ``beta`` is the RK4 step for continuous-time checks, ``step`` the outer
    step of the discrete ones. Constants are certified on the hull of an RK4
    MAML ODE trajectory of length ``horizon`` from ``w0`` (joined with the
    start box of the uniqueness probe when that check is selected).
    """
    from .optimizers import run_bi_maml

    checks = CHECKS if checks is None else tuple(checks)
    unknown = sorted(set(checks) - set(CHECKS) - set(OPTIONAL_CHECKS))
    if unknown:
        raise ValueError(f"unknown check(s) {unknown}")
    w0 = as_vector(w0, pool.dim)
    with uncounted():
        traj = rk4_integrate(maml_ode_field(pool, alpha), w0, beta, Stop(eps=0.0, max_time=horizon, max_iters=10**8))
    pts = traj.ws
    if "uniqueness" in checks:
        cube = Box.cube(pool.dim, 10.0)
        pts = np.vstack([pts, cube.lo, cube.hi])
    c = estimate_constants(pool, Box.hull(pts))
    K = uniqueness_K(c)
    discrete = MamlConfig(alpha=alpha, beta=step, eps=1e-8, eps0=eps0, max_iters=2000)
    out = []
    for name in checks:
        if name == "constants":
            out.append(check_constants(pool, c, seed=seed + 1))
        elif name == "gradient_fd":
            out.append(check_gradient_fd(pool, alpha, seed=seed))
        elif name == "euler_equivalence":
            out.append(check_euler_equivalence(pool, discrete, w0))
        elif name == "flow_descent":
            out.append(check_flow_descent(traj))
        elif name == "phase_latch":
            pool.reset_counters()
            out.append(check_phase_latch(run_bi_maml(pool, discrete, w0), pool.M))
            pool.reset_counters()
        elif name == "lyapunov":
            out.append(check_lyapunov(traj, c, alpha))
        elif name == "envelope":
            out.append(check_envelope(traj, c, alpha))
        elif name == "norm_transfer":
            out.append(check_norm_transfer(traj, c, alpha))
        elif name == "strong_convexity":
            out.append(hess_window_check(pool, alpha, c, K, n_probes=n_probes, seed=seed))
        elif name == "uniqueness":
            out.append(uniqueness_probe(pool, alpha, n_starts=n_starts, c=c, seed=seed))
        elif name == "region_inclusion":
            out.append(check_inclusions(pool, c, alpha, K, seed=seed))
        elif name == "time_bound_maml":
            out.append(check_time_bound_maml(pool, c, alpha, w0, eps, beta=beta))
        elif name == "time_bound_bi_maml":
            out.append(check_time_bound_bi_maml(pool, c, alpha, eps0, w0, eps, beta=beta))
        elif name == "bi_maml_efficiency":
            out.append(check_bi_maml_efficiency(pool, discrete.replace(eps=eps), w0))
    return out, c
