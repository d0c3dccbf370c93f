"""Frequency-domain construction of the band-limited mother wavelet and of the
even test bump used by the lower-bound functionals.

Everything is defined through the Fourier transform; the time-domain wavelet is
never materialized.  The band profile uses the classical degree-7 polynomial
ramp, which makes the spectrum C^3 and gives cubic-or-better decay of every
kernel derived from it.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

TWO_PI = 2.0 * np.pi

# Support of the mother wavelet spectrum in |xi|.
PSI_SUPPORT = (TWO_PI / 3.0, 4.0 * TWO_PI / 3.0)
# Support of the test bump spectrum in |xi|.
THETA_SUPPORT = (0.5, 1.0)

# Ramp nu(x) = x^4 (35 - 84 x + 70 x^2 - 20 x^3); C^3 gluing at 0 and 1.
_NU_INNER = (35.0, -84.0, 70.0, -20.0)


class WaveletKind(enum.Enum):
    MEYER_PSI = "meyer_psi"
    THETA_BUMP = "theta_bump"


@dataclass(frozen=True)
class WaveletSpec:
    """Frequency-domain description of one of the two fixed spectra."""

    kind: WaveletKind
    support_lo: float
    support_hi: float
    aux_poly_coeffs: tuple

    @classmethod
    def meyer_psi(cls):
        return cls(WaveletKind.MEYER_PSI, PSI_SUPPORT[0], PSI_SUPPORT[1], _NU_INNER)

    @classmethod
    def theta_bump(cls):
        return cls(WaveletKind.THETA_BUMP, THETA_SUPPORT[0], THETA_SUPPORT[1], _NU_INNER)

    def validate(self, n_grid=1001):
        """Check the ramp identities nu(0)=0, nu(1)=1, nu(x)+nu(1-x)=1 on a grid."""
        x = np.linspace(0.0, 1.0, n_grid)
        v = nu_poly(x)
        if abs(v[0]) > 1e-15 or abs(v[-1] - 1.0) > 1e-15:
            raise NumericError("ramp endpoints violated")
        if np.max(np.abs(v + nu_poly(1.0 - x) - 1.0)) > 1e-12:
            raise NumericError("ramp symmetry nu(x)+nu(1-x)=1 violated")
        if self.kind is WaveletKind.MEYER_PSI:
            ok = self.support_lo == PSI_SUPPORT[0] and self.support_hi == PSI_SUPPORT[1]
        else:
            ok = self.support_lo == THETA_SUPPORT[0] and self.support_hi == THETA_SUPPORT[1]
        if not ok:
            raise NumericError("support endpoints do not match the fixed construction")
        return True


MEYER_PSI_SPEC = WaveletSpec.meyer_psi()
THETA_BUMP_SPEC = WaveletSpec.theta_bump()


def nu_poly(x):
    """Degree-7 ramp on [0,1]: monotone, nu(0)=0, nu(1)=1, C^3 flat at both ends.

    Accepts scalars or arrays; raises DomainError outside [0,1].
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("nu_poly argument outside [0, 1]")
    a, b, c, d = _NU_INNER
    val = x ** 4 * (a + x * (b + x * (c + x * d)))
    return val if val.ndim else float(val)


def _nu_clipped(x):
    # Ramp extended by 0 below 0 and by 1 above 1; used internally where the
    # piecewise band formulas feed arguments slightly outside [0,1].
    x = np.clip(x, 0.0, 1.0)
    a, b, c, d = _NU_INNER
    return x ** 4 * (a + x * (b + x * (c + x * d)))


def band_profile(x):
    """Real band amplitude b(x) for x = |xi|: sine ramp up on [2pi/3, 4pi/3],
    cosine ramp down on [4pi/3, 8pi/3], zero elsewhere."""
    x = np.asarray(x, dtype=float)
    lo = TWO_PI / 3.0
    mid = 2.0 * lo
    hi = 4.0 * lo
    out = np.zeros_like(x)
    up = (x >= lo) & (x <= mid)
    down = (x > mid) & (x <= hi)
    if np.any(up):
        out[up] = np.sin(0.5 * np.pi * _nu_clipped(3.0 * x[up] / TWO_PI - 1.0))
    if np.any(down):
        out[down] = np.cos(0.5 * np.pi * _nu_clipped(1.5 * x[down] / TWO_PI - 1.0))
    return out


def psi_hat(xi):
    """Mother wavelet spectrum at radian frequency xi (scalar or array).

    Returns exp(i xi / 2) * b(|xi|); the half-sample phase makes the
    time-domain wavelet real, so psi_hat(-xi) == conj(psi_hat(xi)).
    """
    xi = np.asarray(xi, dtype=float)
    val = band_profile(np.abs(xi)) * np.exp(0.5j * xi)
    return val if val.ndim else complex(val)


def theta_hat(xi):
    """Even real bump supported exactly in 1/2 <= |xi| <= 1, peak value 1.

    Built as sin^2(pi * nu(2|xi| - 1)) so that it is C^3 and vanishes to high
    order at both support endpoints; theta_hat(0) = 0, hence the time-domain
    bump integrates to zero.
    """
    xi = np.asarray(xi, dtype=float)
    ax = np.abs(xi)
    out = np.zeros_like(ax)
    inside = (ax >= THETA_SUPPORT[0]) & (ax <= THETA_SUPPORT[1])
    if np.any(inside):
        out[inside] = np.sin(np.pi * _nu_clipped(2.0 * ax[inside] - 1.0)) ** 2
    return out if out.ndim else float(out)


def _gl_panels(lo, hi, n_panels, n_nodes):
    """Composite Gauss-Legendre nodes/weights on [lo, hi]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _theta_quad(t, n_panels, n_nodes=12):
    nodes, weights = _gl_panels(THETA_SUPPORT[0], THETA_SUPPORT[1], n_panels, n_nodes)
    f = theta_hat(nodes) * weights
    # theta(t) = (1/pi) * integral_{1/2}^{1} cos(t xi) theta_hat(xi) d xi
    return np.cos(np.multiply.outer(t, nodes)) @ f / np.pi


def theta_time(t, rtol=1e-9):
    """Time-domain test bump theta(t) by compact-support quadrature.

    Real, even and rapidly decaying; integral over the line is zero because
    the spectrum vanishes at the origin.  Raises NumericError if doubling the
    quadrature resolution does not confirm convergence.
    """
    t = np.asarray(t, dtype=float)
    tmax = float(np.max(np.abs(t))) if t.size else 0.0
    # Resolve the oscillation cos(t xi): at least 8 panels, ~4 per period.
    n_panels = max(8, int(np.ceil(tmax * (THETA_SUPPORT[1] - THETA_SUPPORT[0]))) * 2)
    coarse = _theta_quad(t, n_panels)
    fine = _theta_quad(t, 2 * n_panels)
    scale = max(np.max(np.abs(fine)), 1e-300)
    err = np.max(np.abs(fine - coarse))
    if err > rtol * scale:
        raise NumericError(
            f"theta quadrature did not converge: residual {err:.3e} at "
            f"{2 * n_panels} panels (scale {scale:.3e})"
        )
    return fine if fine.ndim else float(fine)
