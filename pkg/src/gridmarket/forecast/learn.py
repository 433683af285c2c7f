"""Fit the amplitude model, update marginals and copula of a forecast archive."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse, stats
from scipy.optimize import linprog

log = logging.getLogger(__name__)

YEAR_DAYS = 365.25
MIN_CELL = 10


# ---------------------------------------------------------------------------
# archive

@dataclass
class Archive:
    """Rolling forecasts as a dense table.

    ``values[t, h]`` is the forecast issued at step ``t`` for step ``t + h``
    (NaN when missing) and ``observations[T]`` the realized value.
    """

    values: np.ndarray
    observations: np.ndarray
    delta_t: float = 1.0
    start_day: float = 1.0   # day of year of step 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.observations = np.asarray(self.observations, dtype=float)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise ValueError("archive values must be a (launch, horizon) table")
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")

    @property
    def n_horizons(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_records(cls, records, observations, delta_t: float = 1.0,
                     start_day: float = 1.0) -> "Archive":
        """Build from ``(t_exec, t_target, value)`` triples with integer steps."""
        records = [(int(a), int(b), float(v)) for a, b, v in records]
        if any(b < a for a, b, _ in records):
            raise ValueError("archive contains a target before its execution step")
        n = len(observations)
        h = 1 + max((b - a for a, b, _ in records), default=0)
        table = np.full((n, h), np.nan)
        for a, b, v in records:
            if 0 <= a < n:
                table[a, b - a] = v
        return cls(table, observations, delta_t, start_day)

    def records(self):
        for t, h in zip(*np.nonzero(np.isfinite(self.values))):
            yield int(t), int(t + h), float(self.values[t, h])


def day_of_year(steps, delta_t: float, start_day: float = 1.0) -> np.ndarray:
    days = start_day - 1.0 + np.asarray(steps, dtype=float) * delta_t / 24.0
    return 1.0 + np.mod(days, YEAR_DAYS)


# ---------------------------------------------------------------------------
# amplitude model

@dataclass
class NormalizationModel:
    """Seasonal upper envelope ``Max(y) = c + sum_i a_i sin(2 pi i y / 365.25) + b_i cos(...)``."""

    intercept: float
    sin: np.ndarray
    cos: np.ndarray
    quantile: float = 0.999
    floor: float = 1e-9

    @property
    def harmonics(self) -> int:
        return len(self.sin)

    def at_day(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.full(y.shape, self.intercept)
        for i, (a, b) in enumerate(zip(self.sin, self.cos), start=1):
            w = 2 * np.pi * i * y / YEAR_DAYS
            out += a * np.sin(w) + b * np.cos(w)
        return np.maximum(out, self.floor)

    def at_steps(self, steps, delta_t: float, start_day: float = 1.0) -> np.ndarray:
        return self.at_day(day_of_year(steps, delta_t, start_day))


def harmonic_basis(y: np.ndarray, m: int) -> np.ndarray:
    cols = [np.ones_like(y)]
    for i in range(1, m + 1):
        w = 2 * np.pi * i * y / YEAR_DAYS
        cols += [np.sin(w), np.cos(w)]
    return np.column_stack(cols)


def quantile_fit(X: np.ndarray, y: np.ndarray, q: float) -> np.ndarray:
    """Exact linear quantile regression (pinball loss) solved as an LP."""
    n, k = X.shape
    # columns: beta (free), u+ (>=0), u- (>=0);  X beta + u+ - u- = y
    c = np.concatenate([np.zeros(k), np.full(n, q), np.full(n, 1 - q)])
    eye = sparse.identity(n, format="csr")
    A = sparse.hstack([sparse.csr_matrix(X), eye, -eye], format="csr")
    bounds = [(None, None)] * k + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=A, b_eq=y, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"quantile regression failed: {res.message}")
    return res.x[:k]


def fit_normalization(observations, delta_t: float = 1.0, start_day: float = 1.0,
                      harmonics: int = 3, quantile: float = 0.999) -> NormalizationModel:
    """Upper-quantile seasonal envelope of ``observations``.

    Archives shorter than a year get a flat envelope: the seasonal terms
    would otherwise extrapolate wildly outside the observed window.
    """
    obs = np.asarray(observations, dtype=float)
    ok = np.isfinite(obs)
    steps = np.nonzero(ok)[0]
    if steps.size == 0:
        raise ValueError("no finite observations to normalize")
    y = day_of_year(steps, delta_t, start_day)
    span = (steps[-1] - steps[0] + 1) * delta_t / 24.0
    m = harmonics if span >= YEAR_DAYS else 0
    X = harmonic_basis(y, m)
    beta = quantile_fit(X, obs[ok], quantile)
    scale = float(np.max(np.abs(obs[ok]))) if np.any(obs[ok]) else 1.0
    model = NormalizationModel(beta[0], beta[1::2].copy(), beta[2::2].copy(), quantile,
                               floor=max(1e-6 * scale, 1e-12))
    if np.all(model.at_day(y) <= model.floor):
        model = NormalizationModel(scale, np.zeros(m), np.zeros(m), quantile, model.floor)
    return model


# ---------------------------------------------------------------------------
# update marginals

@dataclass
class HorizonMarginal:
    """Update samples of one horizon, binned by the previous forecast value."""

    edges: np.ndarray                 # inner bin edges, ascending
    samples: list[np.ndarray]         # sorted samples per bin

    def bin(self, prev) -> np.ndarray:
        return np.searchsorted(self.edges, prev, side="right")

    def inverse(self, u, prev) -> np.ndarray:
        """Update value at quantile ``u`` for forecasts currently at ``prev``."""
        u, prev = np.broadcast_arrays(np.asarray(u, float), np.asarray(prev, float))
        out = np.empty(u.shape)
        bins = self.bin(prev)
        for k, s in enumerate(self.samples):
            sel = bins == k
            if np.any(sel):
                out[sel] = np.quantile(s, u[sel]) if s.size else 0.0
        return out

    def cdf(self, x, prev) -> np.ndarray:
        x, prev = np.broadcast_arrays(np.asarray(x, float), np.asarray(prev, float))
        out = np.empty(x.shape)
        bins = self.bin(prev)
        for k, s in enumerate(self.samples):
            sel = bins == k
            if np.any(sel):
                out[sel] = np.searchsorted(s, x[sel], side="right") / max(s.size, 1)
        return out


@dataclass
class UpdateDistributions:
    horizons: list[HorizonMarginal]
    errors: np.ndarray                # sorted real-time estimation errors (normalized)

    @property
    def n_horizons(self) -> int:
        return len(self.horizons)

    def for_horizon(self, h: int) -> HorizonMarginal:
        return self.horizons[min(h, len(self.horizons) - 1)]


def bin_updates(prev: np.ndarray, upd: np.ndarray, n_bins: int = 10,
                min_cell: int = MIN_CELL, label: str = "") -> HorizonMarginal:
    if upd.size == 0:
        return HorizonMarginal(np.zeros(0), [np.zeros(1)])
    inner = np.unique(np.quantile(prev, np.arange(1, n_bins) / n_bins))
    idx = np.searchsorted(inner, prev, side="right")
    cells = [upd[idx == k] for k in range(len(inner) + 1)]
    edges = list(inner)
    merged = False
    while len(cells) > 1:
        small = [k for k, c in enumerate(cells) if c.size < min_cell]
        if not small:
            break
        k = min(small, key=lambda j: (cells[j].size, j))
        if k == 0:
            j = 1
        elif k == len(cells) - 1:
            j = k - 1
        else:
            j = k - 1 if cells[k - 1].size <= cells[k + 1].size else k + 1
        lo, hi = min(k, j), max(k, j)
        cells[lo:hi + 1] = [np.concatenate([cells[lo], cells[hi]])]
        del edges[lo]
        merged = True
    if merged:
        log.warning("update cells with fewer than %d samples merged%s", min_cell, label)
    return HorizonMarginal(np.asarray(edges), [np.sort(c) for c in cells])


# ---------------------------------------------------------------------------
# copula

@dataclass
class CopulaModel:
    spearman: np.ndarray
    correlation: np.ndarray           # Gaussian correlation
    cholesky: np.ndarray

    @property
    def dim(self) -> int:
        return self.correlation.shape[0]

    @classmethod
    def independent(cls, dim: int) -> "CopulaModel":
        eye = np.eye(dim)
        return cls(eye.copy(), eye.copy(), eye.copy())


def nearest_correlation(c: np.ndarray, eps: float = 1e-10) -> np.ndarray:
    """Symmetric, unit-diagonal, positive semidefinite repair by eigenvalue clipping."""
    c = 0.5 * (c + c.T)
    w, v = np.linalg.eigh(c)
    if w.min() >= eps:
        return c
    c = (v * np.maximum(w, eps)) @ v.T
    d = np.sqrt(np.diag(c))
    c = c / np.outer(d, d)
    np.fill_diagonal(c, 1.0)
    return c


def fit_copula(updates: np.ndarray) -> CopulaModel:
    """Gaussian copula of same-launch updates across horizons."""
    dim = updates.shape[1]
    rows = updates[np.all(np.isfinite(updates), axis=1)]
    rho_s = np.eye(dim)
    live = [j for j in range(dim) if rows.shape[0] > 2 and np.ptp(rows[:, j]) > 0]
    if len(live) >= 2:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            r = stats.spearmanr(rows[:, live]).statistic
        r = np.atleast_2d(np.nan_to_num(r))
        for a, i in enumerate(live):
            for b, j in enumerate(live):
                if i != j:
                    rho_s[i, j] = r[a, b]
    pearson = 2.0 * np.sin(np.pi * rho_s / 6.0)
    np.fill_diagonal(pearson, 1.0)
    corr = nearest_correlation(pearson)
    chol = np.linalg.cholesky(corr + 1e-12 * np.eye(dim))
    return CopulaModel(rho_s, corr, chol)


# ---------------------------------------------------------------------------
# learning

@dataclass
class ForecastModel:
    normalization: NormalizationModel
    updates: UpdateDistributions
    copula: CopulaModel
    delta_t: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def n_horizons(self) -> int:
        return self.updates.n_horizons


def normalized_updates(archive: Archive, norm: NormalizationModel):
    """(updates[t, h], previous forecast[t, h], errors[T]) in normalized units."""
    n, H = archive.values.shape
    steps = np.arange(n)
    target = steps[:, None] + np.arange(H)[None, :]
    mx = norm.at_steps(target, archive.delta_t, archive.start_day)
    f = archive.values / mx
    upd = np.full((n, max(H - 1, 1)), np.nan)
    prev = np.full_like(upd, np.nan)
    if H > 1:
        upd[1:] = f[1:, :-1] - f[:-1, 1:]
        prev[1:] = f[:-1, 1:]
    obs = archive.observations / norm.at_steps(steps, archive.delta_t, archive.start_day)
    err = f[:, 0] - obs
    return upd, prev, err


def learn(archive: Archive, harmonics: int = 3, quantile: float = 0.999,
          n_bins: int = 10) -> ForecastModel:
    norm = fit_normalization(archive.observations, archive.delta_t, archive.start_day,
                             harmonics, quantile)
    upd, prev, err = normalized_updates(archive, norm)
    margins = []
    for h in range(upd.shape[1]):
        ok = np.isfinite(upd[:, h]) & np.isfinite(prev[:, h])
        margins.append(bin_updates(prev[ok, h], upd[ok, h], n_bins, label=f" at horizon {h}"))
    err = np.sort(err[np.isfinite(err)])
    if err.size == 0:
        err = np.zeros(1)
    copula = fit_copula(upd)
    return ForecastModel(norm, UpdateDistributions(margins, err), copula, archive.delta_t,
                         {"harmonics": norm.harmonics, "quantile": quantile})
