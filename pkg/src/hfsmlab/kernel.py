"""Tabulation of the fractional kernel and its derivative.

The kernel is the inverse Fourier transform of the band-limited wavelet
spectrum weighted by |xi|^(-H-1/alpha).  It is evaluated once on a symmetric
uniform grid by composite Gauss-Legendre quadrature with panels aligned to the
smooth pieces of the band profile, then served through cubic interpolation.
Synthesis touches the kernel at ~1e7 points, so the quadrature cost is
amortized into the table build.
"""

import hashlib
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NumericError, ParameterError
from .meyer import PSI_SUPPORT, TWO_PI, psi_hat

_CACHE_MAGIC = b"HFSMKT01"
# Imaginary residue above this magnitude means the conjugate symmetry of the
# spectrum is broken somewhere upstream.
_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class KernelTable:
    """Tabulated kernel values on |y| <= grid_half_width with step grid_step.

    decay_constant is the grid supremum of (|K(y)| + |K'(y)|) (1 + |y|)^3;
    shifted variants (1 + 2 rho + |y|)^3 are applied at call sites.
    """

    alpha: float
    hurst: float
    grid_half_width: float
    grid_step: float
    rho_tilde: float
    psi_values: np.ndarray
    psi_prime_values: np.ndarray
    decay_constant: float
    _spline: CubicSpline = field(repr=False, compare=False)
    _spline_prime: CubicSpline = field(repr=False, compare=False)

    @property
    def y_grid(self):
        n = self.psi_values.size
        return (np.arange(n) - (n - 1) // 2) * self.grid_step


def _quadrature_nodes(half_width, oversample=1.0, n_nodes=8):
    """GL nodes/weights on the positive support, panels aligned with the two
    smooth pieces of the band profile and sized to resolve exp(i y xi) at the
    largest tabulated |y| (panel width <= pi / (4 max|y|), >= 8 nodes/period)."""
    lo, hi = PSI_SUPPORT
    mid = 2.0 * lo
    width_cap = np.pi / (4.0 * max(half_width, 1.0)) / oversample
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    nodes, weights = [], []
    for a, b in ((lo, mid), (mid, hi)):
        n_panels = max(4, int(np.ceil((b - a) / width_cap)))
        edges = np.linspace(a, b, n_panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        cent = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((cent[:, None] + half[:, None] * x[None, :]).ravel())
        weights.append((half[:, None] * w[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def build_table(alpha, hurst, grid_half_width=64.0, grid_step=1.0 / 64.0,
                rho_tilde=1.0, oversample=1.0):
    """Build a KernelTable for the given stability index and Hurst exponent.

    The integral over each half-line of the support is computed separately and
    summed; the imaginary residue of the sum certifies the conjugate symmetry
    of the spectrum and is required to stay below 1e-10 before it is dropped.
    """
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must be in (0, 2), got {alpha}")
    if not 0.0 < hurst < 1.0:
        raise ParameterError(f"hurst must be in (0, 1), got {hurst}")
    if grid_half_width <= 0.0 or grid_step <= 0.0:
        raise ParameterError("grid_half_width and grid_step must be positive")

    xi, w = _quadrature_nodes(grid_half_width, oversample=oversample)
    p = hurst + 1.0 / alpha
    f_pos = psi_hat(xi) * xi ** (-p) * w          # positive frequencies
    f_neg = psi_hat(-xi) * xi ** (-p) * w         # negative frequencies, xi -> -xi

    n_half = int(round(grid_half_width / grid_step))
    y = (np.arange(2 * n_half + 1) - n_half) * grid_step

    psi = np.empty(y.size)
    psi_prime = np.empty(y.size)
    max_imag = 0.0
    chunk = max(1, int(4e6 // max(xi.size, 1)))
    for i0 in range(0, y.size, chunk):
        yc = y[i0:i0 + chunk]
        e = np.exp(1j * np.multiply.outer(yc, xi))
        vals = e @ f_pos + np.conj(e) @ f_neg
        dvals = e @ (1j * xi * f_pos) + np.conj(e) @ (-1j * xi * f_neg)
        max_imag = max(max_imag, np.max(np.abs(vals.imag)), np.max(np.abs(dvals.imag)))
        psi[i0:i0 + chunk] = vals.real
        psi_prime[i0:i0 + chunk] = dvals.real
    if max_imag > _IMAG_TOL:
        raise NumericError(
            f"kernel quadrature left imaginary residue {max_imag:.3e} > {_IMAG_TOL:.0e}"
        )

    decay = float(np.max((np.abs(psi) + np.abs(psi_prime)) * (1.0 + np.abs(y)) ** 3))
    return KernelTable(
        alpha=float(alpha), hurst=float(hurst),
        grid_half_width=float(grid_half_width), grid_step=float(grid_step),
        rho_tilde=float(rho_tilde),
        psi_values=psi, psi_prime_values=psi_prime, decay_constant=decay,
        _spline=CubicSpline(y, psi, extrapolate=False),
        _spline_prime=CubicSpline(y, psi_prime, extrapolate=False),
    )


def _eval(spline, table, y):
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    out = spline(np.clip(y, -table.grid_half_width, table.grid_half_width))
    out = np.where(np.abs(y) > table.grid_half_width, 0.0, out)
    return float(out) if scalar else out


def eval_psi(table, y):
    """Kernel value by cubic interpolation; 0 beyond the tabulated range.

    The far field is a documented truncation, not an error; its magnitude is
    bounded by far_field_bias(table).
    """
    return _eval(table._spline, table, y)


def eval_psi_prime(table, y):
    """Kernel derivative by cubic interpolation; 0 beyond the tabulated range."""
    return _eval(table._spline_prime, table, y)


def far_field_bias(table):
    """Bound on the absolute error of the far-field zero rule."""
    return table.decay_constant * (1.0 + table.grid_half_width) ** -3


def table_key(alpha, hurst, grid_half_width, grid_step):
    raw = struct.pack("<4d", alpha, hurst, grid_half_width, grid_step)
    return hashlib.sha256(raw).hexdigest()[:12]


def save_table(table, path):
    """Serialize a table; header + little-endian float64 arrays (see README)."""
    n = table.psi_values.size
    with open(path, "wb") as fh:
        fh.write(_CACHE_MAGIC)
        fh.write(struct.pack("<5d", table.alpha, table.hurst,
                             table.grid_half_width, table.grid_step,
                             table.rho_tilde))
        fh.write(struct.pack("<d", table.decay_constant))
        fh.write(struct.pack("<q", n))
        fh.write(table.psi_values.astype("<f8").tobytes())
        fh.write(table.psi_prime_values.astype("<f8").tobytes())


def load_table(path):
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _CACHE_MAGIC:
            raise ParameterError(f"not a kernel table cache: {path}")
        alpha, hurst, hw, step, rho = struct.unpack("<5d", fh.read(40))
        decay, = struct.unpack("<d", fh.read(8))
        n, = struct.unpack("<q", fh.read(8))
        psi = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
        psi_prime = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
    y = (np.arange(n) - (n - 1) // 2) * step
    return KernelTable(
        alpha=alpha, hurst=hurst, grid_half_width=hw, grid_step=step,
        rho_tilde=rho, psi_values=psi, psi_prime_values=psi_prime,
        decay_constant=decay,
        _spline=CubicSpline(y, psi, extrapolate=False),
        _spline_prime=CubicSpline(y, psi_prime, extrapolate=False),
    )


def cached_table(alpha, hurst, grid_half_width=64.0, grid_step=1.0 / 64.0,
                 rho_tilde=1.0, cache_dir=None):
    """Load the table from cache_dir if present, otherwise build and store it."""
    if cache_dir is None:
        return build_table(alpha, hurst, grid_half_width, grid_step, rho_tilde)
    os.makedirs(cache_dir, exist_ok=True)
    key = table_key(alpha, hurst, grid_half_width, grid_step)
    path = os.path.join(cache_dir, f"kernel_{key}.bin")
    if os.path.exists(path):
        return load_table(path)
    table = build_table(alpha, hurst, grid_half_width, grid_step, rho_tilde)
    save_table(table, path)
    return table
