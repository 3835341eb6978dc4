"""Polarization properties of kernels.

Partial-distance profiles, the error exponent, binary-erasure-channel
erasure profiles per input, and the heuristic scaling exponent obtained
by power iteration of the erasure-polynomial operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gf2
from .gf2 import BitMatrix


class ConvergenceError(RuntimeError):
    """Power iteration failed to converge (or the kernel does not polarize)."""


@dataclass
class Kernel:
    """Invertible square kernel with cached polarization metadata."""

    mat: BitMatrix
    name: str = ""
    pdp: list[int] | None = None

    def __post_init__(self):
        if self.mat.rows != self.mat.cols:
            raise ValueError("kernel must be square")
        if gf2.rank(self.mat) != self.mat.rows:
            raise ValueError("kernel must be invertible")

    @property
    def l(self) -> int:
        return self.mat.rows

    @classmethod
    def arikan(cls, t: int) -> "Kernel":
        return cls(gf2.arikan(t), name=f"F{t}")

    @classmethod
    def from_file(cls, path) -> "Kernel":
        return cls(gf2.load_kernel(path), name=str(path))


@dataclass
class ErasureProfile:
    """Per-input erasure-pattern counts of a kernel over the BEC.

    counts[i][w] = number of weight-w erasure patterns for which input i
    cannot be recovered.  The erasure polynomial of input i is
    f_i(z) = sum_w counts[i][w] z^w (1-z)^(l-w).
    """

    l: int
    counts: np.ndarray  # shape (l, l+1), int64

    def f(self, z) -> np.ndarray:
        """Evaluate all f_i at points z; returns shape (l, len(z))."""
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        w = np.arange(self.l + 1)
        zp = z[None, :] ** w[:, None] * (1.0 - z[None, :]) ** (self.l - w)[:, None]
        return self.counts @ zp


@dataclass
class ExponentReport:
    E: float
    mu: float | None
    pdp: list[int]


def compute_pdp(k: Kernel) -> list[int]:
    """Exact partial-distance profile; cached on the kernel."""
    if k.pdp is not None:
        return k.pdp
    if k.l > 32:
        raise ValueError("PDP enumeration limited to l <= 32")
    rows = [k.mat.row(i) for i in range(k.l)]
    k.pdp = gf2.partial_weight_profile(rows)
    return k.pdp


def error_exponent(pdp, l: int) -> float:
    """(1/l) * sum_i log_l(pdp[i])."""
    pdp = list(pdp)
    if len(pdp) != l:
        raise ValueError(f"profile length {len(pdp)} != l = {l}")
    if any(d < 1 for d in pdp):
        raise ValueError("partial distances must be >= 1")
    lg = math.log(l)
    return sum(math.log(d) for d in pdp) / (l * lg)


def min_weight_form(k: Kernel) -> Kernel:
    """Equivalent kernel whose row weights equal its partial distances.

    Adds rows j > i into row i (which preserves every span <rows >= p>,
    hence the PDP) until wt(row i) = pdp[i].
    """
    pdp = compute_pdp(k)
    m = k.mat.copy()
    l = k.l
    for i in range(l - 1):
        if m.row_weight(i) == pdp[i]:
            continue
        gens = [m.row(j) for j in range(i + 1, l)]
        w, combo = gf2.coset_min_weight(gens, m.row(i), stop_at=pdp[i])
        if w != pdp[i]:
            raise AssertionError("coset search disagrees with cached profile")
        acc = m.row(i)
        g = combo
        while g:
            b = (g & -g).bit_length() - 1
            acc ^= gens[b]
            g &= g - 1
        m.set_row(i, acc)
    out = Kernel(m, name=k.name + "'" if k.name else "")
    out.pdp = list(pdp)
    return out


def erasure_profile(k: Kernel, allow_large: bool = False) -> ErasureProfile:
    """Erasure-pattern counts by exhaustive enumeration of 2^l patterns.

    For each erasure set, one bottom-up elimination over the unerased
    columns classifies every input at once: input i is unrecoverable
    exactly when row i restricted to unerased columns lies in the span of
    the later rows' restrictions.

    l <= 16 by default; pass allow_large=True for l <= 32 (exponentially
    long-running in pure Python).
    """
    l = k.l
    if l > 32 or (l > 16 and not allow_large):
        raise ValueError(
            f"erasure profile over 2^{l} patterns refused; "
            "pass allow_large=True for l <= 32"
        )
    rows = [k.mat.row(i) for i in range(l)]
    counts = np.zeros((l, l + 1), dtype=np.int64)
    full = (1 << l) - 1
    rng_l = range(l - 1, -1, -1)
    for e in range(1 << l):
        keep = full ^ e
        w = e.bit_count()
        # Bottom-up elimination: basis holds reduced restrictions of rows
        # below the current one, keyed by top set bit.
        basis: dict[int, int] = {}
        for i in rng_l:
            v = rows[i] & keep
            while v:
                top = v.bit_length() - 1
                b = basis.get(top)
                if b is None:
                    basis[top] = v
                    break
                v ^= b
            else:
                counts[i, w] += 1
    return ErasureProfile(l, counts)


def _dominant_ratio(
    p: ErasureProfile, grid_size: int, tol: float, max_iter: int
) -> float:
    """Dominant ratio of (Th)(z) = (1/l) sum_i h(f_i(z)) on a uniform grid.

    Power iteration with linear interpolation, boundary values pinned to
    zero and sup-normalization each step.
    """
    z = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    fvals = p.f(z)  # (l, grid)
    nodes = np.concatenate(([0.0], z, [1.0]))
    h = z * (1.0 - z)
    h /= h.max()
    lam_prev = None
    for _ in range(max_iter):
        hx = np.concatenate(([0.0], h, [0.0]))
        th = np.interp(fvals, nodes, hx).mean(axis=0)
        lam = th.max()
        if lam <= 0:
            raise ConvergenceError("iterate collapsed to zero")
        h = th / lam
        if lam_prev is not None and abs(lam - lam_prev) < tol:
            return lam
        lam_prev = lam
    raise ConvergenceError(f"no convergence within {max_iter} iterations")


def _boundary_exponent(p: ErasureProfile, lam: float) -> float:
    """Exponent theta of the eigenfunction h(z) ~ z^theta near z = 0.

    Near zero each f_i(z) ~ c_i z with c_i = counts[i][1] (inputs with no
    single-erasure failure contribute higher powers and drop out), so the
    eigenvalue equation forces (1/l) sum_i c_i^theta = lambda.  Solved by
    bisection; theta governs the grid-refinement error of the linear-
    interpolation discretization and drives Richardson extrapolation.
    """
    lin = [int(c) for c in p.counts[:, 1] if c > 0]
    lo, hi = 1e-9, 1.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if sum(c**mid for c in lin) / p.l < lam:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scaling_exponent(
    p: ErasureProfile,
    grid_size: int = 1024,
    tol: float = 1e-7,
    max_iter: int = 10_000,
) -> float:
    """Heuristic BEC scaling exponent via power iteration.

    The dominant ratio lambda of the erasure-polynomial operator is
    computed on uniform grids of grid_size/2 and grid_size points and
    Richardson-extrapolated at the eigenfunction's boundary exponent
    (the raw discretization converges only at that fractional order);
    mu = ln(l) / ln(1/lambda).
    """
    if grid_size < 32:
        raise ValueError("grid_size too small")
    lam_half = _dominant_ratio(p, grid_size // 2, tol, max_iter)
    lam_full = _dominant_ratio(p, grid_size, tol, max_iter)
    if lam_full >= 1.0 - 10 * tol:
        raise ConvergenceError(
            f"dominant ratio {lam_full:.9f} ~ 1: kernel does not polarize"
        )
    theta = _boundary_exponent(p, lam_full)
    lam = lam_full + (lam_full - lam_half) / (2.0**theta - 1.0)
    if not (0.0 < lam < 1.0):
        raise ConvergenceError(f"extrapolated ratio {lam:.9f} out of (0, 1)")
    return math.log(p.l) / math.log(1.0 / lam)


def exponent_report(k: Kernel, with_mu: bool = False, allow_large: bool = False) -> ExponentReport:
    pdp = compute_pdp(k)
    e = error_exponent(pdp, k.l)
    mu = None
    if with_mu:
        mu = scaling_exponent(erasure_profile(k, allow_large=allow_large))
    return ExponentReport(E=e, mu=mu, pdp=list(pdp))
