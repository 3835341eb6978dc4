"""Kernel shortening and the optimal-pattern search.

Shortening removes a set of columns from a kernel; each removal XORs the
last row carrying a one in that column into the earlier rows that also
carry one (additions of later rows into earlier rows preserve every
kernel code, hence all polarization properties), then deletes that row
and column.  The search for the error-exponent-optimal pattern runs two
passes over all C(l, t) patterns: a cheap lower-bound pass that seeds the
incumbent, then a pruned pass that evaluates exact partial distances only
where the weight-based upper bound clears the incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import gf2
from .analysis import Kernel, compute_pdp, error_exponent, min_weight_form
from .gf2 import BitMatrix


@dataclass(frozen=True)
class ShorteningPattern:
    """Sorted set of removed column indices of an l-column kernel."""

    l: int
    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(sorted(set(self.positions)))
        object.__setattr__(self, "positions", pos)
        if not (1 <= len(pos) <= self.l - 2):
            raise ValueError(
                f"pattern size must be in [1, l-2], got {len(pos)} for l={self.l}"
            )
        if pos[0] < 0 or pos[-1] >= self.l:
            raise ValueError("pattern positions out of range")

    @property
    def t(self) -> int:
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)


@dataclass
class ShorteningResult:
    """Shortened kernel plus the index bookkeeping of the procedure."""

    kernel: Kernel
    pattern: ShorteningPattern
    removed_rows: tuple[int, ...]        # parent row indices, sorted
    surviving_map: tuple[int, ...]       # shortened row i -> parent row A_i
    modified_rows: frozenset[int]        # parent indices of surviving rows touched
    column_map: tuple[int, ...]          # shortened col j -> parent col J_j
    transform: BitMatrix                 # T with (T @ parent) zero on pattern
                                         # columns of surviving rows


@dataclass
class SearchOutcome:
    best_pattern: ShorteningPattern
    best_E: float
    patterns_examined: int
    patterns_pruned: int
    exact_pdp_evaluations: int
    exhaustive: bool = True
    best_pdp: list[int] = field(default_factory=list)
    ties: list[ShorteningPattern] = field(default_factory=list)


def shorten_single(k: Kernel, j: int):
    """Shorten a kernel on one column.

    Returns (shortened Kernel, removed row index, touched row indices).
    """
    l = k.l
    if l < 3:
        raise ValueError("kernel too small to shorten")
    if not (0 <= j < l):
        raise ValueError(f"column {j} out of range for l={l}")
    m = k.mat.copy()
    col = m.col_mask(j)
    assert col != 0, "invertible kernel cannot have an all-zero column"
    a = col.bit_length() - 1
    touched = set()
    for i in range(a):
        if (col >> i) & 1:
            m.xor_rows(i, a)
            touched.add(i)
    rows = []
    keep_mask_low = (1 << j) - 1
    for i in range(l):
        if i == a:
            continue
        v = m.row(i)
        rows.append((v & keep_mask_low) | ((v >> (j + 1)) << j))
    return Kernel(BitMatrix(l - 1, l - 1, rows)), a, touched


def shorten(k: Kernel, p: ShorteningPattern, order=None) -> ShorteningResult:
    """Shorten on every column of the pattern (canonical increasing order).

    The resulting kernel codes are order-independent; the bookkeeping
    (touched-row set, transform) is reported for the order actually used.
    ``order`` overrides the processing order with a permutation of the
    pattern's positions (used by the order-invariance checks).
    """
    l = k.l
    if p.l != l:
        raise ValueError("pattern built for a different kernel size")
    cols = list(order) if order is not None else list(p.positions)
    if sorted(cols) != list(p.positions):
        raise ValueError("order must permute the pattern positions")

    m = k.mat.copy()
    transform = BitMatrix.identity(l)
    a_map = list(range(l))   # current row index -> parent row index
    j_map = list(range(l))   # current col index -> parent col index
    removed: list[int] = []
    touched_parents: set[int] = set()

    for pcol in cols:
        jcur = j_map.index(pcol)
        cur_l = len(a_map)
        col = m.col_mask(jcur)
        assert col != 0, "invertible kernel cannot have an all-zero column"
        a = col.bit_length() - 1
        for i in range(a):
            if (col >> i) & 1:
                m.xor_rows(i, a)
                transform.xor_rows(a_map[i], a_map[a])
                touched_parents.add(a_map[i])
        removed.append(a_map[a])
        rows = []
        low = (1 << jcur) - 1
        for i in range(cur_l):
            if i == a:
                continue
            v = m.row(i)
            rows.append((v & low) | ((v >> (jcur + 1)) << jcur))
        m = BitMatrix(cur_l - 1, cur_l - 1, rows)
        del a_map[a]
        del j_map[jcur]

    removed_set = set(removed)
    return ShorteningResult(
        kernel=Kernel(m),
        pattern=p,
        removed_rows=tuple(sorted(removed)),
        surviving_map=tuple(a_map),
        modified_rows=frozenset(touched_parents - removed_set),
        column_map=tuple(j_map),
        transform=transform,
    )


def removed_rows_only(k: Kernel, positions) -> list[int]:
    """Removed-row set of a pattern without materializing the shortening.

    Bottom-pivot elimination on the pattern's columns (tracked as parent
    row bitmasks) reproduces exactly the rows Alg.-style shortening
    deletes; used by the cheap lower-bound pass.
    """
    cols = {c: k.mat.col_mask(c) for c in positions}
    removed = []
    pending = list(positions)
    for c in pending:
        m = cols[c]
        a = m.bit_length() - 1
        removed.append(a)
        touched = m ^ (1 << a)
        dead = ~(1 << a)
        for c2 in pending:
            if c2 == c:
                continue
            v = cols[c2]
            if (v >> a) & 1:
                v ^= touched
            cols[c2] = v & dead
        cols[c] = 0
    return sorted(removed)


def pd_bounds(parent: Kernel, result: ShorteningResult):
    """Per-row (lower, upper) partial-distance bounds after shortening.

    Requires the parent in minimum-weight form (row weights equal to the
    partial distances); rows whose parent row was never touched get an
    exact value (lower == upper), touched rows get the parent distance as
    lower bound and the modified row weight as upper bound.
    """
    pdp = compute_pdp(parent)
    for i in range(parent.l):
        if parent.mat.row_weight(i) != pdp[i]:
            raise ValueError(
                "pd_bounds requires the parent in minimum-weight form "
                f"(row {i} has weight {parent.mat.row_weight(i)}, distance {pdp[i]})"
            )
    bounds = []
    for i, ai in enumerate(result.surviving_map):
        if ai in result.modified_rows:
            bounds.append((pdp[ai], result.kernel.mat.row_weight(i)))
        else:
            bounds.append((pdp[ai], pdp[ai]))
    return bounds


def exact_pdp_of_shortening(
    parent_pdp, result: ShorteningResult, stop_at_lower: bool = True
) -> list[int]:
    """Exact PDP of a shortened kernel, enumerating only modified rows.

    Unmodified surviving rows keep the parent partial distance; modified
    rows are resolved by coset search, stopping early once the proven
    lower bound is attained.
    """
    m = result.kernel.mat
    lp = m.rows
    out = [0] * lp
    rows = [m.row(i) for i in range(lp)]
    for i, ai in enumerate(result.surviving_map):
        if ai not in result.modified_rows:
            out[i] = parent_pdp[ai]
        else:
            lo = parent_pdp[ai]
            w, _ = gf2.coset_min_weight(
                rows[i + 1 :], rows[i], stop_at=lo if stop_at_lower else None
            )
            out[i] = w
    if result.kernel.pdp is None:
        result.kernel.pdp = out
    return out


def pattern_to_hex(p: ShorteningPattern) -> str:
    """Big-endian hex of sum(2^p), zero-padded to ceil(l/4) digits."""
    v = 0
    for pos in p.positions:
        v |= 1 << pos
    return format(v, "0{}X".format((p.l + 3) // 4))


def parse_hex(s: str, l: int) -> ShorteningPattern:
    try:
        v = int(s, 16)
    except ValueError as e:
        raise ValueError(f"bad hex pattern {s!r}") from e
    if v <= 0:
        raise ValueError("pattern is empty")
    if v.bit_length() > l:
        raise ValueError(f"pattern {s!r} sets a bit >= l = {l}")
    positions = tuple(i for i in range(l) if (v >> i) & 1)
    return ShorteningPattern(l, positions)


def _kernel_code_sets(mat: BitMatrix) -> list[frozenset[int]]:
    """Codeword sets of every kernel code <rows phi..l-1>, phi in [l]."""
    l = mat.rows
    if l > 14:
        raise ValueError("kernel-code enumeration limited to l <= 14")
    sets = []
    span = {0}
    for phi in range(l - 1, -1, -1):
        r = mat.row(phi)
        span |= {c ^ r for c in span}
        sets.append(frozenset(span))
    sets.reverse()
    return sets


def verify_order_invariance(k: Kernel, p: ShorteningPattern, trials: int, seed: int = 0) -> bool:
    """Check order-invariance of the shortened kernel codes.

    Shortens under ``trials`` random column orders and compares the
    resulting kernel-code codeword sets phase by phase.
    """
    rng = np.random.default_rng(seed)
    ref = _kernel_code_sets(shorten(k, p).kernel.mat)
    for _ in range(trials):
        order = list(p.positions)
        rng.shuffle(order)
        got = _kernel_code_sets(shorten(k, p, order=order).kernel.mat)
        if got != ref:
            return False
    return True


def find_optimal_shortening(
    k: Kernel,
    t: int,
    sample_budget: int | None = None,
    seed: int = 0,
    prune: bool = True,
    mu_refine: bool = False,
    tie_cap: int = 64,
) -> SearchOutcome:
    """Search for the shortening pattern maximizing the error exponent.

    Pass 1 scans patterns computing the lower bound from surviving parent
    distances and seeds the incumbent; pass 2 skips any pattern whose
    weight-based upper bound falls below the incumbent and evaluates the
    exact profile otherwise.  Ties on the final exponent resolve to the
    lexicographically smallest pattern.  ``sample_budget`` restricts both
    passes to a seeded random subset (the outcome is then flagged
    non-exhaustive).  ``prune=False`` disables the bound test (used to
    check that pruning is lossless).
    """
    l = k.l
    if not (1 <= t <= l - 2):
        raise ValueError(f"t must be in [1, l-2], got {t} for l={l}")
    lp = l - t
    log_lp = math.log(lp)

    kp = min_weight_form(k)
    pdp = compute_pdp(kp)
    logd = [math.log(d) for d in pdp]
    sum_logd = sum(logd)

    if sample_budget is None:
        def patterns():
            return combinations(range(l), t)
        exhaustive = True
    else:
        rng = np.random.default_rng(seed)
        sampled = sorted(
            {
                tuple(int(x) for x in sorted(rng.choice(l, size=t, replace=False)))
                for _ in range(sample_budget)
            }
        )
        def patterns():
            return iter(sampled)
        exhaustive = False

    # Pass 1: lower bound over surviving parent distances.
    best_e = 0.0
    for pos in patterns():
        removed = removed_rows_only(kp, pos)
        e_lb = (sum_logd - sum(logd[r] for r in removed)) / (lp * log_lp)
        if e_lb > best_e:
            best_e = e_lb

    # Pass 2: upper bound gate, then exact evaluation of modified rows.
    best_pattern: ShorteningPattern | None = None
    best_pdp: list[int] = []
    ties: list[tuple[int, ...]] = []
    examined = 0
    pruned = 0
    exact_evals = 0
    for pos in patterns():
        examined += 1
        pat = ShorteningPattern(l, pos)
        res = shorten(kp, pat)
        ub = 0.0
        for i, ai in enumerate(res.surviving_map):
            if ai in res.modified_rows:
                ub += math.log(res.kernel.mat.row_weight(i))
            else:
                ub += logd[ai]
        e_ub = ub / (lp * log_lp)
        if prune and e_ub < best_e - 1e-12:
            pruned += 1
            continue
        exact_evals += 1
        dp = exact_pdp_of_shortening(pdp, res)
        e = error_exponent(dp, lp)
        if e > best_e + 1e-12 or (
            abs(e - best_e) <= 1e-12
            and (best_pattern is None or pos < best_pattern.positions)
        ):
            if e > best_e + 1e-12:
                ties = []
            best_e = e
            best_pattern = pat
            best_pdp = dp
        if mu_refine and abs(e - best_e) <= 1e-12 and len(ties) < tie_cap:
            ties.append(pos)

    if best_pattern is None:
        raise RuntimeError(
            "no pattern achieved the seeded bound; "
            "this cannot happen with exhaustive enumeration"
        )

    tie_patterns = [ShorteningPattern(l, p) for p in ties] if mu_refine else []
    return SearchOutcome(
        best_pattern=best_pattern,
        best_E=best_e,
        patterns_examined=examined,
        patterns_pruned=pruned,
        exact_pdp_evaluations=exact_evals,
        exhaustive=exhaustive,
        best_pdp=best_pdp,
        ties=tie_patterns,
    )
