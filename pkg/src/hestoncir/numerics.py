"""Shared numerical machinery: adaptive complex quadrature and random streams.

The pricing formulas in this package all reduce to one integral of a
smooth, oscillatory, rapidly decaying complex function over the real
line.  The integrator here is an adaptive Gauss-Kronrod (7-15) scheme
with bisection of the worst panel and geometric growth of the
truncation window until the tail contribution is negligible.

Random variates come from counter-based Philox streams so that
(master_seed, stream_id) pairs give independent, reproducible sequences
suitable for deterministic parallel Monte Carlo.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuadratureConfig",
    "QuadratureResult",
    "QuadratureError",
    "RngStream",
    "integrate_real_line",
    "integrate_interval",
    "sample_standard_normal",
    "sample_noncentral_chisq",
]


class QuadratureError(Exception):
    """Raised when an integrand misbehaves or convergence fails hard."""


@dataclass
class QuadratureConfig:
    """Tolerances and budget for the adaptive integrator.

    ``truncation_bound`` is the initial half-width L of the window
    [-L, L]; the window is doubled until the outermost strip contributes
    less than ``abs_tol``.
    """

    abs_tol: float = 1e-9
    rel_tol: float = 1e-9
    max_evals: int = 500_000
    truncation_bound: float = 100.0

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be nonnegative")
        if self.max_evals < 15:
            raise ValueError("max_evals must be at least 15 (one panel)")
        if not self.truncation_bound > 0:
            raise ValueError("truncation_bound must be positive")


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int
    converged: bool


# Gauss-Kronrod 7-15 nodes and weights on [-1, 1].  The 7 Gauss nodes
# are the odd-indexed Kronrod nodes; the embedded difference gives the
# per-panel error estimate.
_XGK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_WGK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
    0.381830050505119, 0.279705391489277, 0.129484966168870,
])


def _gk_panel(f, a, b):
    """One Gauss-Kronrod 7-15 rule application on [a, b].

    Returns (kronrod estimate, |kronrod - gauss| error, evaluations).
    """
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid + half * _XGK
    vals = np.asarray(f(nodes), dtype=complex)
    if vals.shape != nodes.shape:
        raise QuadratureError(
            "integrand must be vectorized: expected shape %s, got %s"
            % (nodes.shape, np.shape(vals)))
    bad = ~np.isfinite(vals)
    if np.any(bad):
        where = nodes[bad.nonzero()[0][0]]
        raise QuadratureError(
            "integrand returned a non-finite value at l=%r" % (where,))
    resk = half * np.sum(_WGK * vals)
    resg = half * np.sum(_WG * vals[1::2])
    return resk, abs(resk - resg), nodes.size


class _PanelHeap:
    """Worst-panel-first refinement over a set of subintervals."""

    def __init__(self, f):
        self.f = f
        self.heap = []
        self.value = 0.0 + 0.0j
        self.error = 0.0
        self.evals = 0
        self._tick = 0

    def push(self, a, b):
        val, err, n = _gk_panel(self.f, a, b)
        self.evals += n
        self._tick += 1
        self.value += val
        self.error += err
        heapq.heappush(self.heap, (-err, self._tick, a, b, val))

    def refine(self, abs_tol, rel_tol, evals_budget):
        """Bisect worst panels until tolerance or budget is exhausted.

        Panels narrower than ~1e-13 of their location are frozen rather
        than split: below that width the error estimate reflects the
        integrand's rounding noise, not truncation error.
        """
        while self.heap:
            tol = max(abs_tol, rel_tol * abs(self.value))
            if self.error <= tol:
                return True
            if self.evals + 30 > evals_budget:
                return False
            negerr, tick, a, b, val = heapq.heappop(self.heap)
            if b - a < 1e-13 * (1.0 + abs(a) + abs(b)):
                # contribution and error stay counted; panel never splits
                continue
            self.value -= val
            self.error -= -negerr
            self.push(a, 0.5 * (a + b))
            self.push(0.5 * (a + b), b)
        return self.error <= max(abs_tol, rel_tol * abs(self.value))


def integrate_interval(f, a, b, cfg=None):
    """Adaptively integrate a complex-valued vectorized f over [a, b]."""
    cfg = cfg or QuadratureConfig()
    ph = _PanelHeap(f)
    ph.push(a, b)
    ok = ph.refine(cfg.abs_tol, cfg.rel_tol, cfg.max_evals)
    return QuadratureResult(ph.value, ph.error, ph.evals, ok)


def integrate_real_line(f, cfg=None):
    """Estimate the integral of f over (-inf, inf).

    f must accept an ndarray of real abscissae and return complex values.
    The initial window [-L, L] (L = cfg.truncation_bound) is split at 0
    so l = 0 is never an abscissa, and then grown by doubling; each new
    pair of strips [L, 2L] and [-2L, -L] is refined jointly, and growth
    stops when that pair's combined contribution is below abs_tol.  The
    pair is taken together because odd parts of the integrand cancel
    only between mirrored strips.
    """
    cfg = cfg or QuadratureConfig()
    L = cfg.truncation_bound

    ph = _PanelHeap(f)
    ph.push(-L, 0.0)
    ph.push(0.0, L)
    converged = ph.refine(cfg.abs_tol, cfg.rel_tol, cfg.max_evals)
    value = ph.value
    error = ph.error
    evals = ph.evals

    while evals < cfg.max_evals:
        strip = _PanelHeap(f)
        strip.push(L, 2.0 * L)
        strip.push(-2.0 * L, -L)
        ok = strip.refine(cfg.abs_tol, 0.0, cfg.max_evals - evals)
        evals += strip.evals
        contribution = strip.value
        value += contribution
        error += strip.error
        converged = converged and ok
        L *= 2.0
        if abs(contribution) < cfg.abs_tol:
            break
    else:
        converged = False

    return QuadratureResult(value, error, evals, converged)


@dataclass
class RngStream:
    """A reproducible Philox substream.

    Streams with distinct (master_seed, stream_id) are statistically
    independent by construction of the counter-based generator, which
    makes path-parallel Monte Carlo deterministic under any scheduling.
    """

    master_seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(
        default=None, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            key = (self.master_seed & (2**64 - 1)) | (int(self.stream_id) << 64)
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen


def sample_standard_normal(rng: RngStream, size=None):
    """Standard normal draw(s) from the given stream."""
    out = rng.generator.standard_normal(size)
    return float(out) if size is None else out


def sample_noncentral_chisq(df, noncentrality, rng: RngStream, size=None):
    """Draw from the noncentral chi-square law chi2(df, noncentrality).

    Uses the Poisson mixture representation: J ~ Poisson(nc / 2), then a
    central chi-square with df + 2J degrees of freedom realized as
    2 * Gamma(df/2 + J).  The gamma sampler is valid for shapes below 1,
    so Feller-violating CIR parameter sets sample correctly.

    ``df`` and ``noncentrality`` may be scalars or broadcastable arrays;
    the output shape follows numpy broadcasting (plus ``size``).
    """
    df = np.asarray(df, dtype=float)
    nc = np.asarray(noncentrality, dtype=float)
    if np.any(df <= 0):
        raise ValueError("df must be positive")
    if np.any(nc < 0):
        raise ValueError("noncentrality must be nonnegative")
    gen = rng.generator
    j = gen.poisson(0.5 * nc, size=size)
    out = 2.0 * gen.standard_gamma(0.5 * df + j)
    if size is None and out.ndim == 0:
        return float(out)
    return out
