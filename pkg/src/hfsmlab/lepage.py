"""Random ingredients of the series representation and their analytic constants.

One draw consists of three mutually independent sequences sharing a master
seed: unit-rate Poisson arrival times, heavy log-tailed frequencies, and
complex Gaussian marks normalized so that E|Re g|^alpha = 1.  Frequencies are
kept as (sign, log magnitude) internally because the log magnitude has a
power-law tail that overflows float64 through exp for a few percent of draws;
those extreme frequencies never intersect any usable dyadic band.
"""

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma_fn

from .errors import ParameterError
from .meyer import PSI_SUPPORT, band_profile

LOG2 = math.log(2.0)

# Stream indices for the counter-based per-draw generators.
STREAM_GAMMA = 0
STREAM_ZETA = 1
STREAM_GAUSS = 2

# |log|zeta|| values are clipped here; the clipped mass (~1e-300 for eps ~ 0.5)
# lies outside every dyadic band reachable with |j| < 1e17.
_LOG_CLIP = 1e18

_DRAW_MAGIC = b"HFSMLP01"


def stream_rng(master_seed, draw_id, stream):
    """Counter-based generator for one named stream of one draw."""
    ss = np.random.SeedSequence(entropy=int(master_seed),
                                spawn_key=(int(draw_id), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


# ---------------------------------------------------------------------------
# Analytic constants
# ---------------------------------------------------------------------------

def _sin_moment_quad(alpha, x_break=1.0, x_tail=1000.0):
    """integral_0^inf x^(-alpha) sin x dx by series + panels + tail recursion."""
    # Power series of sin on [0, x_break]; terms fall like 1/(2k+1)!.
    head = 0.0
    for k in range(18):
        head += (-1.0) ** k * x_break ** (2 * k + 2 - alpha) / (
            math.factorial(2 * k + 1) * (2 * k + 2 - alpha))
    # Composite Gauss-Legendre on [x_break, x_tail], ~4 panels per period.
    nodes, weights = np.polynomial.legendre.leggauss(12)
    n_panels = int(np.ceil((x_tail - x_break) / (np.pi / 2)))
    edges = np.linspace(x_break, x_tail, n_panels + 1)
    half = 0.5 * np.diff(edges)
    cent = 0.5 * (edges[1:] + edges[:-1])
    x = (cent[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    mid = float(np.sum(w * np.sin(x) * x ** (-alpha)))
    # Tail beyond x_tail by repeated integration by parts; each step gains a
    # factor s / x_tail, so eight steps leave a remainder ~ 1e-20.
    tail = 0.0
    coeff = 1.0
    s = alpha
    trig_is_sin = True
    for _ in range(8):
        if trig_is_sin:
            tail += coeff * x_tail ** (-s) * math.cos(x_tail)
            coeff *= -s
        else:
            tail += -coeff * x_tail ** (-s) * math.sin(x_tail)
            coeff *= s
        s += 1.0
        trig_is_sin = not trig_is_sin
    return head + mid + tail


@lru_cache(maxsize=128)
def a_alpha(alpha):
    """Normalizing constant of the series: (integral_0^inf x^-alpha sin x dx)^(-1/alpha).

    Computed by oscillatory quadrature; for alpha != 1 it agrees with the
    closed form (Gamma(1-alpha) cos(pi alpha / 2))^(-1/alpha) to ~1e-12.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must be in (0, 2), got {alpha}")
    return _sin_moment_quad(alpha) ** (-1.0 / alpha)


def a_alpha_closed_form(alpha):
    """Closed-form counterpart used as an independent oracle in tests."""
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must be in (0, 2), got {alpha}")
    if alpha == 1.0:
        return 2.0 / math.pi
    return (_gamma_fn(1.0 - alpha) * math.cos(0.5 * math.pi * alpha)) ** (-1.0 / alpha)


def gaussian_sigma(alpha):
    """Standard deviation sigma with E|N(0, sigma^2)|^alpha = 1."""
    alpha = float(alpha)
    if not 0.0 < alpha <= 2.0:
        raise ParameterError(f"alpha must be in (0, 2], got {alpha}")
    return (math.sqrt(math.pi) / (2.0 ** (0.5 * alpha) * _gamma_fn(0.5 * (alpha + 1.0)))) ** (1.0 / alpha)


def mu_alpha_eps(alpha, eps, rtol=1e-6):
    """Supremum over the band of the density-compensated spectrum magnitude.

    Grid supremum of (4/eps)^(1/a) xi^(1/a) (1+log xi)^((1+eps)/a) |psi_hat(xi)|
    over the positive support, refined by doubling until stable to rtol.
    """
    alpha = float(alpha)
    eps = float(eps)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must be in (0, 2), got {alpha}")
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    lo, hi = PSI_SUPPORT
    pref = (4.0 / eps) ** (1.0 / alpha)

    def grid_sup(n):
        xi = np.linspace(lo, hi, n)
        vals = pref * xi ** (1.0 / alpha) * (1.0 + np.log(xi)) ** ((1.0 + eps) / alpha) \
            * band_profile(xi)
        return float(np.max(vals))

    n = 4097
    prev = grid_sup(n)
    for _ in range(16):
        n = 2 * n - 1
        cur = grid_sup(n)
        if abs(cur - prev) <= rtol * cur:
            return cur
        prev = cur
    return prev


def p_j(j, eps):
    """Probability that a sampled frequency scaled by 2^-j lands in the band.

    Closed form of the log-substituted integral of the frequency density over
    [2^(j+1) pi/3, 2^(j+3) pi/3].
    """
    if j < 0 or int(j) != j:
        raise ParameterError(f"j must be a nonnegative integer, got {j}")
    eps = float(eps)
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    u1 = 1.0 + math.log(2.0 ** (j + 1) * math.pi / 3.0)
    u2 = 1.0 + math.log(2.0 ** (j + 3) * math.pi / 3.0)
    return 0.5 * (u1 ** -eps - u2 ** -eps)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------

def sample_gammas(count, rng):
    """Unit-rate Poisson arrival times: cumulative sums of iid Exp(1)."""
    if count < 1:
        raise ParameterError(f"count must be >= 1, got {count}")
    return np.cumsum(rng.standard_exponential(int(count)))


def zeta_cdf(xi, eps):
    """Closed-form CDF of the heavy log-tailed frequency law."""
    eps = float(eps)
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    xi = np.asarray(xi, dtype=float)
    ax = np.abs(xi)
    la = np.abs(np.log(np.where(ax > 0.0, ax, 1.0)))
    val = 0.25 * (1.0 + la) ** -eps
    upper = np.where(ax <= 1.0, 0.5 + val, 1.0 - val)
    upper = np.where(ax == 0.0, 0.5, upper)
    out = np.where(xi >= 0.0, upper, 1.0 - upper)
    return out if out.ndim else float(out)


def zeta_cdf_from_log(signs, log_mags, eps):
    """CDF values computed from the (sign, log|zeta|) representation.

    Mathematically identical to zeta_cdf(sign * exp(log_mag)) but exact for
    log magnitudes beyond float exp range.
    """
    eps = float(eps)
    t = np.asarray(log_mags, dtype=float)
    val = 0.25 * (1.0 + np.abs(t)) ** -eps
    upper = np.where(t <= 0.0, 0.5 + val, 1.0 - val)
    out = np.where(np.asarray(signs) >= 0, upper, 1.0 - upper)
    return out if out.ndim else float(out)


def sample_zeta_parts(rng, eps, size):
    """Inverse-CDF sampling in (sign, log magnitude) form."""
    eps = float(eps)
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    u = rng.random((3, size))
    signs = np.where(u[0] < 0.5, -1.0, 1.0)
    mag = np.minimum(u[2] ** (-1.0 / eps) - 1.0, _LOG_CLIP)
    log_mags = np.where(u[1] < 0.5, -mag, mag)
    return signs, log_mags


def sample_zeta(rng, eps, size=None):
    """Sample frequencies as floats; never exactly zero.

    Log magnitudes are clipped to the float exp range, which only affects
    frequencies outside every dyadic band reachable in practice.
    """
    scalar = size is None
    signs, logs = sample_zeta_parts(rng, eps, 1 if scalar else int(size))
    vals = signs * np.exp(np.clip(logs, -700.0, 700.0))
    return float(vals[0]) if scalar else vals


def sample_g(rng, sigma, size=None):
    """Complex Gaussian marks with independent N(0, sigma^2) parts."""
    scalar = size is None
    n = 1 if scalar else int(size)
    re = rng.normal(0.0, sigma, n)
    im = rng.normal(0.0, sigma, n)
    out = re + 1j * im
    return complex(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Draws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeedRecord:
    master_seed: int
    draw_id: int


@dataclass(frozen=True)
class LePageDraw:
    """One realization of the three sequences up to a fixed truncation."""

    alpha: float
    eps: float
    truncation: int
    gammas: np.ndarray
    zeta_signs: np.ndarray
    zeta_logs: np.ndarray
    g_re: np.ndarray
    g_im: np.ndarray
    sigma_g: float
    seed: SeedRecord

    @property
    def zetas(self):
        """Frequencies as floats (log magnitudes clamped to exp range)."""
        return self.zeta_signs * np.exp(np.clip(self.zeta_logs, -700.0, 700.0))

    def validate(self):
        if np.any(np.diff(self.gammas) <= 0.0) or self.gammas[0] <= 0.0:
            raise ParameterError("arrival times must be strictly increasing and positive")
        if np.any(self.zetas == 0.0):
            raise ParameterError("zero frequency sampled")
        expected = gaussian_sigma(self.alpha)
        if abs(self.sigma_g - expected) > 1e-12 * expected:
            raise ParameterError("sigma_g inconsistent with alpha")
        return True


def draw_lepage(alpha, eps, truncation, master_seed, draw_id=0):
    """Draw the three sequences from per-stream counter-based generators."""
    alpha = float(alpha)
    eps = float(eps)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must be in (0, 2), got {alpha}")
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    if truncation < 2:
        raise ParameterError(f"truncation must be >= 2, got {truncation}")
    m = int(truncation)
    gammas = sample_gammas(m, stream_rng(master_seed, draw_id, STREAM_GAMMA))
    signs, logs = sample_zeta_parts(stream_rng(master_seed, draw_id, STREAM_ZETA), eps, m)
    sigma = gaussian_sigma(alpha)
    grng = stream_rng(master_seed, draw_id, STREAM_GAUSS)
    g_re = grng.normal(0.0, sigma, m)
    g_im = grng.normal(0.0, sigma, m)
    return LePageDraw(alpha=alpha, eps=eps, truncation=m, gammas=gammas,
                      zeta_signs=signs, zeta_logs=logs, g_re=g_re, g_im=g_im,
                      sigma_g=sigma, seed=SeedRecord(int(master_seed), int(draw_id)))


def save_draw(draw, path):
    """Versioned binary serialization for replay (layout in README)."""
    with open(path, "wb") as fh:
        fh.write(_DRAW_MAGIC)
        fh.write(struct.pack("<3d", draw.alpha, draw.eps, draw.sigma_g))
        fh.write(struct.pack("<qQq", draw.truncation,
                             draw.seed.master_seed, draw.seed.draw_id))
        fh.write(draw.gammas.astype("<f8").tobytes())
        fh.write(draw.zeta_signs.astype("<i1").tobytes())
        fh.write(draw.zeta_logs.astype("<f8").tobytes())
        fh.write(draw.g_re.astype("<f8").tobytes())
        fh.write(draw.g_im.astype("<f8").tobytes())


def load_draw(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _DRAW_MAGIC:
            raise ParameterError(f"not a draw file: {path}")
        alpha, eps, sigma = struct.unpack("<3d", fh.read(24))
        m, master, draw_id = struct.unpack("<qQq", fh.read(24))
        gammas = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        signs = np.frombuffer(fh.read(m), dtype="<i1").astype(float)
        logs = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        g_re = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
        g_im = np.frombuffer(fh.read(8 * m), dtype="<f8").copy()
    return LePageDraw(alpha=alpha, eps=eps, truncation=m, gammas=gammas,
                      zeta_signs=signs, zeta_logs=logs, g_re=g_re, g_im=g_im,
                      sigma_g=sigma, seed=SeedRecord(master, draw_id))
