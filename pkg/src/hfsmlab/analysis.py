"""Statistical verification of the scaling, growth and modulus laws.

Estimators here avoid second moments throughout: scales are fitted from the
empirical characteristic function, central tendencies use medians, and
ensemble pooling of suprema is done by max (heavy-tail safe) or by mean of
per-path statistics where an almost-sure per-path quantity is being emulated.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError, ParameterError
from .meyer import theta_hat, theta_time
from .lepage import LOG2

# ---------------------------------------------------------------------------
# Dyadic bookkeeping
# ---------------------------------------------------------------------------


def kbar_j(j, u, v):
    """Integer center index at level j for the interval (u, v)."""
    if not u < v:
        raise ParameterError(f"need u < v, got ({u}, {v})")
    return int(math.floor(2.0 ** (j - 1) * (u + v)))


def dyadic_scale_j0(t1, t2, rho_tilde):
    """The unique level with 2^(-j0-1) (2 rho) < |t1 - t2| <= 2^(-j0) (2 rho)."""
    if t1 == t2:
        raise DomainError("the two times must differ")
    d = abs(t2 - t1)
    span = 2.0 * rho_tilde
    j0 = int(math.floor(math.log(span / d, 2.0)))
    while 2.0 ** -j0 * span < d:
        j0 -= 1
    while 2.0 ** -(j0 + 1) * span >= d:
        j0 += 1
    return j0


# ---------------------------------------------------------------------------
# Smoothed-increment functionals
# ---------------------------------------------------------------------------


# Radius beyond which the time-domain bump is numerically negligible; the
# "full" window mode integrates out to here when the grid and the interval
# allow it.
THETA_RADIUS = 64.0


def _wj_nodes(t_grid, j, u, v, mode="full"):
    """Path-grid indices, bump weights and quadrature step for one level.

    mode "tight" truncates the bump window at 2^(j/2) (the form the
    asymptotic lower-bound argument uses); mode "full" integrates over the
    whole numerically supported bump, capped so the path argument stays
    inside (u, v) and inside the grid.  The scale law targets the full
    integral, for which "tight" is a poor proxy at small j.
    """
    dt = t_grid[1] - t_grid[0]
    center_val = 2.0 ** -j * kbar_j(j, u, v)
    rc = (center_val - t_grid[0]) / dt
    i_c = int(round(rc))
    if abs(rc - i_c) > 1e-9:
        raise DomainError("level center does not fall on the path grid")
    step = 2.0 ** j * dt
    if mode == "tight":
        radius = 2.0 ** (j / 2.0)
    elif mode == "full":
        radius = min(THETA_RADIUS,
                     2.0 ** j * (v - center_val),
                     2.0 ** j * (center_val - u))
    else:
        raise ParameterError(f"unknown window mode {mode!r}")
    n_off = int(math.floor(radius / step))
    if n_off < 2:
        raise DomainError(f"level-{j} bump window resolves fewer than 5 grid nodes")
    if i_c - n_off < 0 or i_c + n_off >= t_grid.size:
        raise DomainError(
            f"path grid does not cover the level-{j} window around {center_val}")
    offs = np.arange(-n_off, n_off + 1)
    theta_vals = theta_time(offs * step)
    # trapezoid weights folded into the bump values
    w = np.full(offs.size, step)
    w[0] *= 0.5
    w[-1] *= 0.5
    return i_c, i_c + offs, theta_vals * w


def wj_functional(t_grid, x, j, u, v, mode="full"):
    """Bump-smoothed increment of one path at dyadic level j.

    Trapezoid quadrature of the windowed bump against the recentred path;
    see _wj_nodes for the window modes.
    """
    i_c, idx, w = _wj_nodes(np.asarray(t_grid, float), j, u, v, mode)
    x = np.asarray(x, float)
    return float((x[idx] - x[i_c]) @ w)


def wj_scale_constant(alpha, hurst, n_grid=4001):
    """Scale constant of the exact smoothed increments at level 0:
    (integral |eta|^(-alpha H - 1) theta_hat(eta)^alpha d eta)^(1/alpha)."""
    eta = np.linspace(0.5, 1.0, n_grid)
    vals = eta ** (-alpha * hurst - 1.0) * theta_hat(eta) ** alpha
    return float((2.0 * np.trapezoid(vals, eta)) ** (1.0 / alpha))


def wj_samples(ens, j, u, v, mode="full"):
    """Smoothed increments of every ensemble path at one level (vectorized)."""
    i_c, idx, w = _wj_nodes(ens.t, j, u, v, mode)
    return (ens.paths[:, idx] - ens.paths[:, [i_c]]) @ w


def wj_scale_regression(ens, j_range=(2, 8), u=None, v=None, mode="full"):
    """Fit log empirical scale of the smoothed increments against the level.

    Returns (slope, intercept, details); the slope target is -hurst * log 2.
    """
    if ens.n_paths < 100:
        raise ParameterError("need at least 100 paths for scale estimation")
    if u is None:
        u = -ens.config.rho_tilde
    if v is None:
        v = ens.config.rho_tilde
    j_lo, j_hi = j_range
    levels = np.arange(j_lo, j_hi + 1)
    scales, alpha_hats = [], []
    for j in levels:
        w = wj_samples(ens, int(j), u, v, mode)
        scale, a_hat = ecf_scale_alpha(w)
        scales.append(scale)
        alpha_hats.append(a_hat)
    scales = np.array(scales)
    y = np.log(scales)
    slope, intercept = np.polyfit(levels, y, 1)
    resid = y - (slope * levels + intercept)
    se = float(np.sqrt(np.sum(resid ** 2) / max(levels.size - 2, 1)
                       / np.sum((levels - levels.mean()) ** 2)))
    return float(slope), float(intercept), {
        "levels": levels, "scales": scales, "alpha_hats": np.array(alpha_hats),
        "slope_se": se,
    }


def wj_running_max(ens, hurst, alpha, j_max_list, u=None, v=None, mode="tight"):
    """Ensemble mean of the per-path running max of the normalized smoothed
    increments 2^(jH) (j+1)^(-1/alpha) |W_j|, for each cutoff in j_max_list.

    The per-path running max emulates the almost-sure growth of the statistic
    (the tight window is the form that statement is proved for); the mean
    across paths is its stable ensemble summary.
    """
    if u is None:
        u = -ens.config.rho_tilde
    if v is None:
        v = ens.config.rho_tilde
    j_top = max(j_max_list)
    norm_vals = []
    for j in range(0, j_top + 1):
        w = wj_samples(ens, j, u, v, mode)
        norm_vals.append(2.0 ** (j * hurst) * (j + 1.0) ** (-1.0 / alpha) * np.abs(w))
    norm_vals = np.stack(norm_vals, axis=1)          # (paths, levels)
    running = np.maximum.accumulate(norm_vals, axis=1)
    return {int(jm): float(np.mean(running[:, jm])) for jm in j_max_list}


# ---------------------------------------------------------------------------
# Characteristic-function estimation and reference samplers
# ---------------------------------------------------------------------------


def ecf_scale_alpha(samples, n_fit=17):
    """Scale and stability index from the empirical characteristic function.

    Fits log(-log |ecf|) against log theta over about a decade chosen where
    -log |ecf| is O(1); for exact stable data the relation is linear with
    slope alpha and intercept alpha * log(scale).
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ParameterError(f"need at least 100 samples, got {x.size}")
    s0 = float(np.median(np.abs(x)))
    if s0 == 0.0:
        raise NumericError("degenerate sample: median absolute value is zero")
    probe = np.geomspace(1e-3 / s0, 1e3 / s0, 61)
    nl = _neg_log_ecf(x, probe)
    usable = nl > 1e-3
    if not np.any(usable):
        raise NumericError("degenerate sample: |ecf| at 1 for all probed theta")
    # Fit over a decade around the probe closest to -log|ecf| = 0.5, keeping
    # only theta where the ecf magnitude stays well above its 1/sqrt(n) noise
    # floor; beyond that -log|ecf| saturates and drags the slope down.
    pivot = probe[usable][np.argmin(np.abs(nl[usable] - 0.5))]
    theta = np.geomspace(pivot / math.sqrt(10.0), pivot * math.sqrt(10.0), n_fit)
    nl = _neg_log_ecf(x, theta)
    nl_cap = min(2.5, math.log(math.sqrt(x.size) / 3.0))
    good = (nl > 0.02) & (nl < nl_cap)
    if np.count_nonzero(good) < 5:
        raise NumericError("degenerate sample: too few usable theta points")
    coef = np.polyfit(np.log(theta[good]), np.log(nl[good]), 1)
    alpha_hat = float(coef[0])
    scale = float(np.exp(coef[1] / alpha_hat))
    return scale, alpha_hat


def _neg_log_ecf(x, theta):
    phase = np.multiply.outer(theta, x)
    mag = np.abs(np.exp(1j * phase).mean(axis=1))
    with np.errstate(divide="ignore"):
        return -np.log(np.minimum(mag, 1.0))


def ecf_distance(a, b, n_theta=16):
    """Max characteristic-function distance on a shared theta grid, plus a
    null-fluctuation threshold ~5 sigma for equal-law samples."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    s = float(np.median(np.abs(np.concatenate([a, b]))))
    if s == 0.0:
        raise NumericError("degenerate samples")
    theta = np.geomspace(0.1 / s, 3.0 / s, n_theta)
    ea = np.exp(1j * np.multiply.outer(theta, a)).mean(axis=1)
    eb = np.exp(1j * np.multiply.outer(theta, b)).mean(axis=1)
    dist = float(np.max(np.abs(ea - eb)))
    threshold = 5.0 * math.sqrt(2.0 / min(a.size, b.size))
    return dist, threshold


def sas_samples(alpha, scale, size, rng):
    """Independent symmetric stable variates (power-transform method)."""
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"alpha must be in (0, 2], got {alpha}")
    phi = (rng.random(size) - 0.5) * np.pi
    w = rng.standard_exponential(size)
    if alpha == 1.0:
        return scale * np.tan(phi)
    x = np.sin(alpha * phi) / np.cos(phi) ** (1.0 / alpha) \
        * (np.cos((1.0 - alpha) * phi) / w) ** ((1.0 - alpha) / alpha)
    return scale * x


def fbm_davies_harte(n_steps, hurst, rng, span=1.0):
    """Exact fractional Brownian path on [0, span] by circulant embedding.

    Returns (t, x) with n_steps + 1 points and x[0] = 0.
    """
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"hurst must be in (0, 1), got {hurst}")
    n = int(n_steps)
    k = np.arange(n)
    rho = 0.5 * (np.abs(k + 1.0) ** (2 * hurst) + np.abs(k - 1.0) ** (2 * hurst)) \
        - np.abs(k) ** (2 * hurst)
    c = np.concatenate([rho, [0.0], rho[:0:-1]])
    eig = np.fft.fft(c).real
    if np.min(eig) < -1e-9:
        raise NumericError("circulant embedding produced negative eigenvalues")
    eig = np.maximum(eig, 0.0)
    z = np.empty(2 * n, dtype=complex)
    z[0] = rng.normal()
    z[n] = rng.normal()
    re = rng.normal(size=n - 1)
    im = rng.normal(size=n - 1)
    z[1:n] = (re + 1j * im) / math.sqrt(2.0)
    z[n + 1:] = np.conj(z[1:n][::-1])
    fgn = math.sqrt(2 * n) * np.fft.ifft(np.sqrt(eig) * z).real[:n]
    fgn *= (span / n) ** hurst
    t = np.arange(n + 1) * (span / n)
    return t, np.concatenate([[0.0], np.cumsum(fgn)])


def weierstrass(t, hurst, n_levels=15):
    """Deterministic test signal that is exactly Hoelder of the given order
    with no logarithmic correction; used as a control for the modulus fit."""
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    golden = 0.6180339887498949
    for lev in range(n_levels):
        out += 2.0 ** (-lev * hurst) * np.cos(2.0 ** lev * t + 2.0 * np.pi * ((lev * golden) % 1.0))
    return out


# ---------------------------------------------------------------------------
# Marginal scaling and stationarity
# ---------------------------------------------------------------------------


def self_similarity_check(ens, t_list=None):
    """Fit the scaling exponent of the marginal scale and probe increment
    stationarity via the characteristic-function distance.

    Returns a dict with the fitted exponent, its error, per-t scales and the
    stationarity distance/threshold pair.
    """
    if ens.n_paths < 100:
        raise ParameterError("need at least 100 paths")
    rho = ens.config.rho_tilde
    dt = ens.config.dt
    if t_list is None:
        t_list = rho * np.array([1 / 16, 1 / 8, 1 / 4, 1 / 2, 3 / 4, 1.0])
    t_list = np.asarray(t_list, float)
    if np.any(t_list <= 0.0) or np.any(t_list > rho + 1e-12):
        raise ParameterError("t_list must lie in (0, rho_tilde]")
    center = ens.t.size // 2
    scales, alpha_hats = [], []
    for tv in t_list:
        idx = center + int(round(tv / dt))
        scale, a_hat = ecf_scale_alpha(ens.paths[:, idx])
        scales.append(scale)
        alpha_hats.append(a_hat)
    scales = np.array(scales)
    lx = np.log(t_list)
    ly = np.log(scales)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    se = float(np.sqrt(np.sum(resid ** 2) / max(lx.size - 2, 1)
                       / np.sum((lx - lx.mean()) ** 2)))
    # increments of equal lag at two positions, half a span apart
    lag = int(round(rho / 8 / dt))
    i1 = center - int(round(0.75 * rho / dt))
    i2 = center + int(round(0.25 * rho / dt))
    d1 = ens.paths[:, i1 + lag] - ens.paths[:, i1]
    d2 = ens.paths[:, i2 + lag] - ens.paths[:, i2]
    dist, threshold = ecf_distance(d1, d2)
    return {
        "t_list": t_list, "scales": scales, "alpha_hats": np.array(alpha_hats),
        "exponent": float(slope), "exponent_se": se, "intercept": float(intercept),
        "stationarity_distance": dist, "stationarity_threshold": threshold,
    }


# ---------------------------------------------------------------------------
# Modulus of continuity
# ---------------------------------------------------------------------------


@dataclass
class ModulusReport:
    """Per-lag suprema and the fitted log-exponent of the modulus law."""

    lags: np.ndarray
    sup_increments: np.ndarray
    gamma_hat: float
    gamma_se: float
    hurst_hat: float
    alpha_hat: float
    n_paths: int
    dof: int
    verdicts: dict
    wj_values: np.ndarray = field(default=None)
    wj_scale_slope: float = field(default=None)

    def validate(self):
        if np.any(np.diff(self.lags) >= 0.0):
            raise ParameterError("lags must be strictly decreasing")
        if np.any(self.sup_increments < 0.0):
            raise ParameterError("suprema must be nonnegative")
        if self.dof < 3:
            raise ParameterError("fit must keep at least 3 degrees of freedom")
        return True


def _as_paths(ensemble_or_pair):
    if hasattr(ensemble_or_pair, "paths"):
        return ensemble_or_pair.t, ensemble_or_pair.paths
    t, paths = ensemble_or_pair
    return np.asarray(t, float), np.atleast_2d(np.asarray(paths, float))


def modulus_profile(ensemble_or_pair, hurst, alpha, n_range=(5, 12),
                    min_disjoint=64, n_groups=16):
    """Fit the modulus log-exponent from dyadic-lag increment suprema.

    Per path the statistic is the max absolute increment at lag exactly
    2^(-n).  Paths are pooled into groups: within a group suprema are pooled
    by max (emulating the almost-sure supremum), across groups the log
    suprema are averaged, which keeps the exponent target while shrinking the
    fluctuation of a single pooled extreme.  The exponent is the slope of
    log(sup / lag^hurst) against log log(1/lag).
    """
    t, paths = _as_paths(ensemble_or_pair)
    dt = t[1] - t[0]
    span = t[-1] - t[0]
    n_lo, n_hi = int(n_range[0]), int(n_range[1])
    if n_hi - n_lo + 1 < 5:
        raise ParameterError("need at least 5 dyadic lags (fit dof >= 3)")
    if np.max(np.abs(paths)) == 0.0:
        raise ParameterError("degenerate ensemble: all paths are zero")
    lags = 2.0 ** -np.arange(n_lo, n_hi + 1)
    if span / lags[0] < min_disjoint:
        raise ParameterError(
            f"coarsest lag 2^-{n_lo} admits fewer than {min_disjoint} disjoint "
            f"increments on a span of {span:g}")
    steps = lags / dt
    if np.any(np.abs(steps - np.round(steps)) > 1e-9) or np.any(steps < 1.0):
        raise ParameterError("every lag must be an integer multiple of the grid step")
    n_paths = paths.shape[0]
    groups = np.array_split(np.arange(n_paths), max(1, min(n_groups, n_paths)))
    sups = np.empty(lags.size)
    medians = np.empty(lags.size)
    y = np.empty(lags.size)
    for i, lag in enumerate(lags):
        s = int(round(lag / dt))
        d = np.abs(paths[:, s:] - paths[:, :-s])
        per_path = d.max(axis=1)
        sups[i] = float(per_path.max())
        medians[i] = float(np.median(d))
        y[i] = float(np.mean([np.log(per_path[g].max()) for g in groups])) \
            - hurst * math.log(lags[i])
    ns = np.arange(n_lo, n_hi + 1, dtype=float)
    x = np.log(ns * LOG2)
    gamma, intercept = np.polyfit(x, y, 1)
    resid = y - (gamma * x + intercept)
    dof = x.size - 2
    gamma_se = float(np.sqrt(np.sum(resid ** 2) / dof / np.sum((x - x.mean()) ** 2)))
    hurst_hat = float(np.polyfit(np.log(lags), np.log(medians), 1)[0])
    mid_step = int(round(lags[lags.size // 2] / dt))
    incs = (paths[:, mid_step:] - paths[:, :-mid_step]).ravel()
    if incs.size > 100000:
        incs = incs[:: incs.size // 100000 + 1]
    try:
        _, alpha_hat = ecf_scale_alpha(incs)
    except NumericError:
        alpha_hat = float("nan")
    bracket = (1.0 / alpha - 0.3, 1.0 / alpha + 0.4)
    verdicts = {
        "gamma_in_bracket": bool(bracket[0] <= gamma <= bracket[1]),
        "gamma_below_old_law": bool(gamma < 1.0 / alpha + 0.5 - 0.1),
        "bracket": bracket,
    }
    report = ModulusReport(lags=lags, sup_increments=sups, gamma_hat=float(gamma),
                           gamma_se=gamma_se, hurst_hat=hurst_hat,
                           alpha_hat=float(alpha_hat), n_paths=paths.shape[0],
                           dof=dof, verdicts=verdicts)
    report.validate()
    return report
