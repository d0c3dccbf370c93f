"""Wavelet coefficients of the synthesized process from one random draw.

The real coefficient at location (j, k) is a weighted series over the draw's
terms; only terms whose scaled frequency lands in the spectrum band contribute,
which at any level leaves a sparse active subset.  Values are computed both by
direct truncated summation and by a summation-by-parts rearrangement whose
partial sums agree with the direct form exactly; the rearranged form also
yields an a-posteriori truncation-tail estimate.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, ResourceError
from .lepage import LOG2, SeedRecord, a_alpha, p_j
from .meyer import PSI_SUPPORT, psi_hat

_FIELD_MAGIC = b"HFSMCF01"

_LOG_LO = np.log(PSI_SUPPORT[0])
_LOG_HI = np.log(PSI_SUPPORT[1])

# k-chunk size for the level-wide phase matrices.
_K_CHUNK = 4096


def _check_m(draw, M, need_next=False):
    if M < 1:
        raise ParameterError(f"M must be >= 1, got {M}")
    limit = draw.truncation - 1 if need_next else draw.truncation
    if M > limit:
        raise ParameterError(
            f"M={M} exceeds draw truncation {draw.truncation}"
            + (" (one extra arrival time needed)" if need_next else "")
        )
    return int(M)


def _active_terms(draw, j, M):
    """Indices, scaled frequencies and complex prefactors of the active terms.

    The prefactor bundles the density compensation, the dyadic scale factor and
    the spectrum value; multiplying by exp(i k zeta_scaled) gives the k-th
    coefficient weight.  Works in log-frequency space so that extreme draws
    never overflow.
    """
    logs = draw.zeta_logs[:M]
    scaled_log = logs - j * LOG2
    sel = (scaled_log >= _LOG_LO) & (scaled_log <= _LOG_HI)
    idx = np.nonzero(sel)[0]
    if idx.size == 0:
        return idx, np.empty(0), np.empty(0, dtype=complex)
    zs = draw.zeta_signs[idx] * np.exp(scaled_log[idx])
    inv_a = 1.0 / draw.alpha
    pref = (4.0 / draw.eps) ** inv_a * np.abs(zs) ** inv_a \
        * (1.0 + np.abs(logs[idx])) ** ((1.0 + draw.eps) * inv_a)
    return idx, zs, pref * psi_hat(-zs)


def lambdas(j, k, zeta_n, alpha, eps):
    """Real and imaginary weight components for a single term.

    Returns (0, 0) whenever the scaled frequency falls outside the band.
    """
    if zeta_n == 0.0:
        raise DomainError("zeta must be nonzero")
    scaled = 2.0 ** (-j) * zeta_n
    if not PSI_SUPPORT[0] <= abs(scaled) <= PSI_SUPPORT[1]:
        return 0.0, 0.0
    inv_a = 1.0 / alpha
    pref = (4.0 / eps) ** inv_a * abs(scaled) ** inv_a \
        * (1.0 + abs(np.log(abs(zeta_n)))) ** ((1.0 + eps) * inv_a)
    val = pref * np.exp(1j * k * scaled) * psi_hat(-scaled)
    return float(val.real), float(val.imag)


def _lambda_arrays(draw, j, k, M):
    lam0 = np.zeros(M)
    lam1 = np.zeros(M)
    idx, zs, pref = _active_terms(draw, j, M)
    if idx.size:
        vals = pref * np.exp(1j * k * zs)
        lam0[idx] = vals.real
        lam1[idx] = vals.imag
    return lam0, lam1


def partial_sums(j, k, draw, M):
    """Cumulative weighted-mark sums S_{l,m}, m = 0..M, with S_{l,0} = 0."""
    M = _check_m(draw, M)
    lam0, lam1 = _lambda_arrays(draw, j, k, M)
    s0 = np.concatenate(([0.0], np.cumsum(lam0 * draw.g_re[:M])))
    s1 = np.concatenate(([0.0], np.cumsum(lam1 * draw.g_im[:M])))
    return s0, s1


def coeff_direct(j, k, draw, M):
    """Truncated direct series for the real coefficient at (j, k)."""
    M = _check_m(draw, M)
    idx, zs, pref = _active_terms(draw, j, M)
    if idx.size == 0:
        return 0.0
    vals = pref * np.exp(1j * k * zs)
    terms = draw.gammas[idx] ** (-1.0 / draw.alpha) * (
        vals.real * draw.g_re[idx] - vals.imag * draw.g_im[idx])
    return a_alpha(draw.alpha) * float(np.sum(terms))


def _tail_factor(draw, j, b_m, M):
    """Integral estimate of the tail weight beyond M.

    Extrapolates the arrival times by their realized mean rate and the active
    count linearly with the level hit probability, then integrates the
    summation-by-parts weight against the growth-envelope shape.
    """
    alpha = draw.alpha
    inv_a = 1.0 / alpha
    gam_rate = draw.gammas[M] / (M + 1)          # uses the (M+1)-th arrival
    rate = p_j(j, draw.eps) if j >= 0 else max(b_m, 1.0) / M
    decay = inv_a - 0.5
    s_max = min(80.0 / max(decay, 0.02), 4000.0)
    x_nodes, w = np.polynomial.legendre.leggauss(96)
    s = 0.5 * s_max * (x_nodes + 1.0)
    ws = 0.5 * s_max * w
    x = M * np.exp(s)
    integrand = x ** (-inv_a) * np.exp(-0.0 * s) * np.sqrt(
        (b_m + rate * (x - M)) * np.log(3.0 + x))
    # d(x)/x = ds absorbed: integral dx of x^(-1-1/a) f(x) = integral ds of x^(-1/a) f
    return inv_a * gam_rate ** (-inv_a) * float(np.sum(ws * integrand))


def coeff_abel(j, k, draw, M):
    """Summation-by-parts form of the coefficient plus a tail estimate.

    The value is an exact rearrangement of coeff_direct at the same truncation.
    The tail estimate combines the realized normalized-sup of the partial sums
    with the integrated weight of the discarded terms; it is a diagnostic, not
    a bound.
    """
    M = _check_m(draw, M, need_next=True)
    s0, s1 = partial_sums(j, k, draw, M)
    gam_pow = draw.gammas[:M] ** (-1.0 / draw.alpha)
    d = s0[1:] - s1[1:]                       # D_m, m = 1..M
    value = gam_pow[M - 1] * d[M - 1]
    if M > 1:
        value += float(np.sum((gam_pow[:M - 1] - gam_pow[1:M]) * d[:M - 1]))
    value *= a_alpha(draw.alpha)

    idx, _, _ = _active_terms(draw, j, M)
    if idx.size == 0:
        return float(value), 0.0
    rank = np.arange(1, idx.size + 1)
    denom = np.sqrt(rank * np.log(3.0 + (idx + 1.0)))
    # Envelope constant from the recent half of the active history; the early
    # terms carry one-off spikes that say nothing about the tail regime.
    half = idx.size // 2
    kappa0 = float(np.max(np.abs(s0[idx + 1])[half:] / denom[half:]))
    kappa1 = float(np.max(np.abs(s1[idx + 1])[half:] / denom[half:]))
    tail = a_alpha(draw.alpha) * (kappa0 + kappa1) * _tail_factor(draw, j, idx.size, M)
    return float(value), float(tail)


def binomial_counts(j, draw, M):
    """Running count of draw terms active at level j (a binomial sequence)."""
    if j < 0:
        raise ParameterError(f"level must be nonnegative, got {j}")
    M = _check_m(draw, M)
    scaled_log = draw.zeta_logs[:M] - j * LOG2
    hit = (scaled_log >= _LOG_LO) & (scaled_log <= _LOG_HI)
    return np.cumsum(hit.astype(np.int64))


def level_coefficients(draw, j, k_lo, k_hi, M=None):
    """Real coefficients for every k in [k_lo, k_hi] at level j (vectorized).

    Shares the per-term prefactors across k; the k-dependence is applied as a
    per-term phase recurrence (one complex multiply per step), whose magnitude
    drift over a window of width W stays below ~W * eps.
    """
    if M is None:
        M = draw.truncation
    M = _check_m(draw, M)
    n_k = int(k_hi) - int(k_lo) + 1
    idx, zs, pref = _active_terms(draw, j, M)
    if idx.size == 0:
        return np.zeros(n_k)
    weights = draw.gammas[idx] ** (-1.0 / draw.alpha) * pref \
        * (draw.g_re[idx] + 1j * draw.g_im[idx])
    rows = np.empty((n_k, idx.size), dtype=complex)
    rows[0] = weights * np.exp(1j * float(k_lo) * zs)
    if n_k > 1:
        rows[1:] = np.exp(1j * zs)[None, :]
        np.multiply.accumulate(rows, axis=0, out=rows)
    return a_alpha(draw.alpha) * rows.sum(axis=1).real


def _level_values_and_tails(draw, j, k_lo, k_hi, M):
    """Vectorized Abel values and tail estimates for a whole level window."""
    n_k = int(k_hi) - int(k_lo) + 1
    values = np.zeros(n_k)
    tails = np.zeros(n_k)
    idx, zs, pref = _active_terms(draw, j, M)
    if idx.size == 0:
        return values, tails
    aa = a_alpha(draw.alpha)
    g0 = draw.g_re[idx]
    g1 = draw.g_im[idx]
    gam_pow = draw.gammas[idx] ** (-1.0 / draw.alpha)
    rank = np.arange(1, idx.size + 1)
    denom = np.sqrt(rank * np.log(3.0 + (idx + 1.0)))
    t_factor = aa * _tail_factor(draw, j, idx.size, M)
    ks = np.arange(int(k_lo), int(k_hi) + 1, dtype=float)
    half = idx.size // 2
    for i0 in range(0, n_k, _K_CHUNK):
        kc = ks[i0:i0 + _K_CHUNK]
        e = pref[None, :] * np.exp(1j * np.multiply.outer(kc, zs))
        values[i0:i0 + _K_CHUNK] = (e @ (gam_pow * (g0 + 1j * g1))).real * aa
        s0 = np.cumsum(e.real * g0[None, :], axis=1)
        s1 = np.cumsum(e.imag * g1[None, :], axis=1)
        kappa = np.max(np.abs(s0)[:, half:] / denom[None, half:], axis=1) \
            + np.max(np.abs(s1)[:, half:] / denom[None, half:], axis=1)
        tails[i0:i0 + _K_CHUNK] = kappa * t_factor
    return values, tails


@dataclass(frozen=True)
class CoeffField:
    """Coefficients over the window 0 <= j <= j_max, |k| <= 2^j rho."""

    j_max: int
    rho: float
    truncation: int
    alpha: float
    eps: float
    values: dict        # j -> array over k = -K_j .. K_j
    remainders: dict    # j -> matching tail estimates
    binomials: dict     # j -> running active counts, m = 1..M
    draw_seed: SeedRecord

    def k_half_width(self, j):
        return int(np.floor(2.0 ** j * self.rho))

    def value(self, j, k):
        arr = self.values[j]
        half = self.k_half_width(j)
        if abs(k) > half:
            raise ParameterError(f"k={k} outside window at level {j}")
        return float(arr[k + half])

    def max_abs_by_level(self):
        return np.array([np.max(np.abs(self.values[j])) for j in range(self.j_max + 1)])


def field_memory_estimate(j_max, rho, M):
    n_coeff = sum(2 * int(np.floor(2.0 ** j * rho)) + 1 for j in range(j_max + 1))
    return 16 * n_coeff + 8 * (j_max + 1) * M


def coeff_field(draw, j_max, rho, M=None, mem_cap_bytes=2 ** 31):
    """Fill the coefficient window, sharing per-level term prefactors across k.

    Raises ResourceError with a suggested j_max when the estimated footprint
    exceeds mem_cap_bytes.
    """
    if j_max < 0:
        raise ParameterError(f"j_max must be >= 0, got {j_max}")
    if rho <= 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    if M is None:
        M = draw.truncation - 1
    M = _check_m(draw, M, need_next=True)
    est = field_memory_estimate(j_max, rho, M)
    if est > mem_cap_bytes:
        j_ok = j_max
        while j_ok > 0 and field_memory_estimate(j_ok, rho, M) > mem_cap_bytes:
            j_ok -= 1
        raise ResourceError(
            f"estimated field footprint {est} bytes exceeds cap {mem_cap_bytes}; "
            f"largest feasible j_max is {j_ok}"
        )
    values, remainders, binomials = {}, {}, {}
    for j in range(j_max + 1):
        half = int(np.floor(2.0 ** j * rho))
        vals, tails = _level_values_and_tails(draw, j, -half, half, M)
        values[j] = vals
        remainders[j] = tails
        binomials[j] = binomial_counts(j, draw, M)
    return CoeffField(j_max=int(j_max), rho=float(rho), truncation=M,
                      alpha=draw.alpha, eps=draw.eps, values=values,
                      remainders=remainders, binomials=binomials,
                      draw_seed=draw.seed)


def write_coeff_csv(field, path):
    """Columns j,k,value,tail_estimate; floats in shortest round-trip form."""
    with open(path, "w", newline="\n") as fh:
        fh.write("j,k,value,tail_estimate\n")
        for j in range(field.j_max + 1):
            half = field.k_half_width(j)
            vals = field.values[j]
            tails = field.remainders[j]
            for i, k in enumerate(range(-half, half + 1)):
                fh.write(f"{j},{k},{float(vals[i])!r},{float(tails[i])!r}\n")


def save_field(field, path):
    with open(path, "wb") as fh:
        fh.write(_FIELD_MAGIC)
        fh.write(struct.pack("<qdqdd", field.j_max, field.rho, field.truncation,
                             field.alpha, field.eps))
        fh.write(struct.pack("<Qq", field.draw_seed.master_seed,
                             field.draw_seed.draw_id))
        for j in range(field.j_max + 1):
            fh.write(struct.pack("<q", field.values[j].size))
            fh.write(field.values[j].astype("<f8").tobytes())
            fh.write(field.remainders[j].astype("<f8").tobytes())
            fh.write(struct.pack("<q", field.binomials[j].size))
            fh.write(field.binomials[j].astype("<i8").tobytes())


def load_field(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _FIELD_MAGIC:
            raise ParameterError(f"not a coefficient field file: {path}")
        j_max, rho, m, alpha, eps = struct.unpack("<qdqdd", fh.read(40))
        master, draw_id = struct.unpack("<Qq", fh.read(16))
        values, remainders, binomials = {}, {}, {}
        for j in range(j_max + 1):
            n, = struct.unpack("<q", fh.read(8))
            values[j] = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
            remainders[j] = np.frombuffer(fh.read(8 * n), dtype="<f8").copy()
            nb, = struct.unpack("<q", fh.read(8))
            binomials[j] = np.frombuffer(fh.read(8 * nb), dtype="<i8").copy()
    return CoeffField(j_max=j_max, rho=rho, truncation=m, alpha=alpha, eps=eps,
                      values=values, remainders=remainders, binomials=binomials,
                      draw_seed=SeedRecord(master, draw_id))


def growth_slopes(max_by_level_rows, pooling="gmean"):
    """Regression diagnostics for the coefficient growth across levels.

    Input: iterable of per-draw arrays max_k |coeff| indexed by level, pooled
    across draws by geometric mean (default) or by max.  Geometric-mean
    pooling is the stable choice: a max pool is dominated by where the single
    heaviest draw term happens to land, which at accessible levels decreases
    with j and swamps the growth trend under study.  Returns the slope of
    log(pooled) on log(1 + j), its standard error, and the coefficient of the
    extra regressor j*log(2) in a joint fit, which measures any residual
    dyadic-power growth on top of the polylogarithmic trend.
    """
    rows = np.asarray(list(max_by_level_rows), dtype=float)
    if np.any(rows <= 0.0):
        raise ParameterError("level maxima must be positive")
    if pooling == "gmean":
        pooled = np.exp(np.mean(np.log(rows), axis=0))
    elif pooling == "max":
        pooled = rows.max(axis=0)
    else:
        raise ParameterError(f"unknown pooling {pooling!r}")
    j = np.arange(pooled.size, dtype=float)
    y = np.log(pooled)
    x1 = np.log(1.0 + j)
    slope, intercept = np.polyfit(x1, y, 1)
    resid = y - (slope * x1 + intercept)
    dof = max(y.size - 2, 1)
    se = float(np.sqrt(np.sum(resid ** 2) / dof / np.sum((x1 - x1.mean()) ** 2)))
    x2 = j * LOG2
    design = np.column_stack([x1, x2, np.ones_like(x1)])
    beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    return {
        "slope_loglog": float(slope),
        "slope_se": se,
        "dyadic_component": float(beta[1]),
        "pooled_max": pooled,
    }
