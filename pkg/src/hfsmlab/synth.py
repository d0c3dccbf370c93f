"""Sample-path synthesis on a uniform time grid.

A path is the level sum of coefficient-weighted kernel differences.  Per level
only the kernel window |2^j t - k| <= k_cut plus the fixed window |k| <= k_cut
contribute (the kernel decays cubically); the same accumulation routine is
used for the moving and the fixed part so that the value at t = 0 cancels
termwise to an exact zero.  Levels j >= 0 are split into a near part (k inside
the window tied to the domain half-width) and a far part; negative levels form
the smooth low-frequency part.
"""

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .coeffs import level_coefficients
from .errors import NumericError, ParameterError
from .lepage import draw_lepage

_ENS_MAGIC = b"HFSMEN01"


@dataclass(frozen=True)
class SynthConfig:
    """Synthesis parameters; defaults resolve one unit interval at level 12."""

    alpha: float
    hurst: float
    rho_tilde: float = 1.0
    dt: float = 2.0 ** -14
    j_low: int = -8
    j_high: int = 12
    k_cut: int = 16
    truncation: int = 10000
    eps: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ParameterError(f"alpha must be in (0, 2), got {self.alpha}")
        if not 0.0 < self.hurst < 1.0:
            raise ParameterError(f"hurst must be in (0, 1), got {self.hurst}")
        if self.rho_tilde <= 0.0:
            raise ParameterError("rho_tilde must be positive")
        if not (self.j_low <= -1 <= 0 <= self.j_high):
            raise ParameterError("level range must satisfy j_low <= -1 and j_high >= 0")
        if self.k_cut < 8:
            raise ParameterError("k_cut must be >= 8")
        if self.dt > 2.0 ** -self.j_high:
            raise ParameterError("dt must not exceed 2^-j_high")
        n_half = round(self.rho_tilde / self.dt)
        if abs(n_half * self.dt - self.rho_tilde) > 1e-12 * self.rho_tilde:
            raise ParameterError("rho_tilde must be an integer multiple of dt")

    @property
    def n_half(self):
        return int(round(self.rho_tilde / self.dt))

    @property
    def t_grid(self):
        n = self.n_half
        return (np.arange(2 * n + 1) - n) * self.dt


def k_window(j, rho_tilde):
    """Integer window |k| <= 2^j (rho_tilde + 1) of the near high-frequency part."""
    if j < 0:
        raise ParameterError(f"level must be nonnegative, got {j}")
    half = int(np.floor(2.0 ** j * (rho_tilde + 1.0)))
    return -half, half


def _window_sum(u, coeffs, k_lo, k_cut, table, near_half=None):
    """Sum over the kernel window around each u; optional near/far split at
    |k| <= near_half.

    The kernel grid step divides 1, so shifting the argument by the integer
    offset d moves the cubic piece index by d/step while the local coordinate
    is unchanged; the piece polynomials are gathered per offset against shared
    coordinate powers.  Accumulation order is fixed by the offset loop, so the
    center element (u = 0) doubles as the exact fixed-window sum.
    """
    c = table._spline.c
    h = table.grid_step
    per_unit = int(round(1.0 / h))
    base = np.rint(u).astype(np.int64)
    frac = u - base
    ix0 = np.floor((frac + table.grid_half_width) / h).astype(np.int64)
    dx = frac - ((ix0 * h) - table.grid_half_width)
    dx2 = dx * dx
    dx3 = dx2 * dx
    near = np.zeros(u.size)
    far = np.zeros(u.size) if near_half is not None else None
    split = near_half is not None and bool(np.max(np.abs(base)) + k_cut > near_half)
    for d in range(-k_cut, k_cut + 1):
        ix = ix0 - d * per_unit
        vals = (c[0, ix] * dx3 + c[1, ix] * dx2 + c[2, ix] * dx + c[3, ix]) \
            * coeffs[base + d - k_lo]
        if split:
            inside = np.abs(base + d) <= near_half
            near += np.where(inside, vals, 0.0)
            far += np.where(inside, 0.0, vals)
        else:
            near += vals
    return near, far


def synth_path(draw, config, kernel_table):
    """Synthesize one path plus its low/high-near/high-far component split.

    Returns (x, components) where components has keys 'low', 'high1', 'high2'
    and x is their sum; x[center] is exactly zero by termwise cancellation.
    """
    if draw.alpha != config.alpha or draw.eps != config.eps:
        raise ParameterError("draw parameters do not match the config")
    if kernel_table.alpha != config.alpha or kernel_table.hurst != config.hurst:
        raise ParameterError("kernel table parameters do not match the config")
    if kernel_table.grid_half_width < config.k_cut + 1:
        raise ParameterError("kernel table too narrow for the requested k_cut")
    t = config.t_grid
    center = t.size // 2
    low = np.zeros(t.size)
    high1 = np.zeros(t.size)
    high2 = np.zeros(t.size)
    for j in range(config.j_low, config.j_high + 1):
        scale = 2.0 ** j
        u = scale * t
        k_lo = int(np.floor(u[0])) - config.k_cut
        k_hi = int(np.ceil(u[-1])) + config.k_cut
        c = level_coefficients(draw, j, k_lo, k_hi)
        if not np.all(np.isfinite(c)):
            bad = int(np.nonzero(~np.isfinite(c))[0][0]) + k_lo
            raise NumericError(f"non-finite coefficient at (j={j}, k={bad})")
        weight = 2.0 ** (-j * config.hurst)
        # The fixed-window sum equals the moving sum at the center of the grid
        # (u = 0 there), so subtracting the center element realizes the
        # termwise cancellation at t = 0 exactly.
        if j < 0:
            moving, _ = _window_sum(u, c, k_lo, config.k_cut, kernel_table)
            low += weight * (moving - moving[center])
        else:
            near_half = k_window(j, config.rho_tilde)[1]
            m1, m2 = _window_sum(u, c, k_lo, config.k_cut, kernel_table, near_half)
            high1 += weight * (m1 - m1[center])
            if m2 is not None:
                high2 += weight * (m2 - m2[center])
        if not (np.all(np.isfinite(low)) and np.all(np.isfinite(high1))
                and np.all(np.isfinite(high2))):
            raise NumericError(f"non-finite partial path after level j={j}")
    x = low + high1 + high2
    return x, {"low": low, "high1": high1, "high2": high2}


@dataclass(frozen=True)
class PathEnsemble:
    """Paths over a shared grid, one independent draw per path."""

    config: SynthConfig
    master_seed: int
    t: np.ndarray
    paths: np.ndarray
    draw_ids: np.ndarray
    components: dict = field(default=None, compare=False)

    @property
    def n_paths(self):
        return self.paths.shape[0]

    def validate(self):
        center = self.t.size // 2
        if not np.all(self.paths[:, center] == 0.0):
            raise NumericError("a path violates the exact zero at t = 0")
        if not np.all(np.isfinite(self.paths)):
            raise NumericError("non-finite path values")
        return True


def ensemble(config, n_paths, master_seed, kernel_table=None, threads=1,
             keep_components=False, cache_dir=None):
    """Generate independent paths with per-path derived seed streams.

    Identical (config, master_seed) give bit-identical ensembles at any thread
    count; paths are reduced into a preallocated array by index.
    """
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    if kernel_table is None:
        from .kernel import cached_table
        kernel_table = cached_table(config.alpha, config.hurst, cache_dir=cache_dir)
    t = config.t_grid
    paths = np.empty((n_paths, t.size))
    comps = {name: np.empty((n_paths, t.size)) for name in ("low", "high1", "high2")} \
        if keep_components else None

    def work(i):
        draw = draw_lepage(config.alpha, config.eps, config.truncation,
                           master_seed, draw_id=i)
        x, parts = synth_path(draw, config, kernel_table)
        paths[i] = x
        if comps is not None:
            for name in comps:
                comps[name][i] = parts[name]

    if threads <= 1:
        for i in range(n_paths):
            work(i)
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            list(pool.map(work, range(n_paths)))
    ens = PathEnsemble(config=config, master_seed=int(master_seed), t=t,
                       paths=paths, draw_ids=np.arange(n_paths, dtype=np.int64),
                       components=comps)
    ens.validate()
    return ens


_CONFIG_FIELDS = ("alpha", "hurst", "rho_tilde", "dt", "j_low", "j_high",
                  "k_cut", "truncation", "eps")


def save_ensemble(ens, path):
    """Binary ensemble format: header with config, then row-major float64."""
    cfg = ens.config
    with open(path, "wb") as fh:
        fh.write(_ENS_MAGIC)
        fh.write(struct.pack("<4d", cfg.alpha, cfg.hurst, cfg.rho_tilde, cfg.dt))
        fh.write(struct.pack("<4q", cfg.j_low, cfg.j_high, cfg.k_cut, cfg.truncation))
        fh.write(struct.pack("<d", cfg.eps))
        fh.write(struct.pack("<Q", ens.master_seed))
        fh.write(struct.pack("<qqq", ens.n_paths, ens.t.size,
                             1 if ens.components else 0))
        fh.write(ens.paths.astype("<f8").tobytes())
        if ens.components:
            for name in ("low", "high1", "high2"):
                fh.write(ens.components[name].astype("<f8").tobytes())


def load_ensemble(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _ENS_MAGIC:
            raise ParameterError(f"not an ensemble file: {path}")
        alpha, hurst, rho, dt = struct.unpack("<4d", fh.read(32))
        j_low, j_high, k_cut, trunc = struct.unpack("<4q", fh.read(32))
        eps, = struct.unpack("<d", fh.read(8))
        master, = struct.unpack("<Q", fh.read(8))
        n_paths, n_t, has_comp = struct.unpack("<qqq", fh.read(24))
        paths = np.frombuffer(fh.read(8 * n_paths * n_t), dtype="<f8") \
            .reshape(n_paths, n_t).copy()
        comps = None
        if has_comp:
            comps = {}
            for name in ("low", "high1", "high2"):
                comps[name] = np.frombuffer(fh.read(8 * n_paths * n_t),
                                            dtype="<f8").reshape(n_paths, n_t).copy()
    cfg = SynthConfig(alpha=alpha, hurst=hurst, rho_tilde=rho, dt=dt,
                      j_low=int(j_low), j_high=int(j_high), k_cut=int(k_cut),
                      truncation=int(trunc), eps=eps)
    return PathEnsemble(config=cfg, master_seed=master, t=cfg.t_grid,
                        paths=paths, draw_ids=np.arange(n_paths, dtype=np.int64),
                        components=comps)


def write_path_csv(t, x, parts, path):
    """Columns t,x,x_low,x_high1,x_high2 in shortest round-trip float form."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,x,x_low,x_high1,x_high2\n")
        for i in range(t.size):
            fh.write(f"{float(t[i])!r},{float(x[i])!r},{float(parts['low'][i])!r},"
                     f"{float(parts['high1'][i])!r},{float(parts['high2'][i])!r}\n")
