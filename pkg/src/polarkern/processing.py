"""Kernel processing: phase LLRs for kernels and shortened kernels.

Channel LLRs are plain floats extended with +/-inf for symbols known with
certainty; all combining rules saturate exactly (a contradictory pair of
infinities raises rather than silently producing NaN).  Max-mode scores
are path penalties: a codeword c scores R(c) = -sum_j pen(llr_j, c_j)
where pen is |llr| on a sign mismatch and 0 otherwise.  The min-sum
Arikan recursion, the window enumeration and the exact marginalizer all
agree with this scoring exactly, which is what makes the cross-checks in
the tests equalities instead of approximations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import gf2
from .analysis import Kernel
from .gf2 import BitMatrix
from .shortening import ShorteningResult

INF = math.inf


class InconsistentLLRError(ValueError):
    """Hard LLR constraints rule out both hypotheses."""


class UnsupportedKernelError(ValueError):
    """Kernel does not admit the requested processing scheme."""


# -- scalar extended-real combining -----------------------------------------


def chk(a: float, b: float) -> float:
    """Check-node combine: sign(a)sign(b) * min(|a|, |b|)."""
    m = min(abs(a), abs(b))
    return -m if (a < 0) != (b < 0) else m


def var(a: float, b: float, u: int) -> float:
    """Variable-node combine (-1)^u * a + b with saturating infinities."""
    s = -a if u else a
    if math.isinf(s) and math.isinf(b) and (s > 0) != (b > 0):
        raise InconsistentLLRError("contradictory certain LLRs at variable node")
    return s + b


def pen(llr: float, bit: int) -> float:
    """Path penalty of deciding ``bit`` against ``llr``."""
    if bit == 0:
        return -llr if llr < 0 else 0.0
    return llr if llr > 0 else 0.0


# -- Arikan-transform recursion ---------------------------------------------


def _sllr(y: list, v: list, j: int) -> float:
    """Min-sum LLR of phase j of the 2^t transform given prefix v_0^{j-1}."""
    n = len(y)
    if n == 1:
        return y[0]
    i, r = divmod(j, 2)
    p = len(v) // 2
    alpha = [v[2 * s] ^ v[2 * s + 1] for s in range(p)]
    beta = [v[2 * s + 1] for s in range(p)]
    a = _sllr(y[0::2], alpha, i)
    b = _sllr(y[1::2], beta, i)
    if r == 0:
        return chk(a, b)
    return var(a, b, v[j - 1])


def arikan_layer_llrs(t: int, partial, llrs) -> float:
    """Phase-(len(partial)) LLR of the size-2^t Arikan transform.

    Check-node steps use min-magnitude/sign-product, variable-node steps
    sign-adjusted sums; infinities saturate.
    """
    y = [float(x) for x in llrs]
    if len(y) != 1 << t:
        raise ValueError(f"need 2^{t} LLRs, got {len(y)}")
    v = [int(b) for b in partial]
    if len(v) >= len(y):
        raise ValueError("prefix must leave at least one undecided phase")
    return _sllr(y, v, len(v))


def max_score(y: list, v: list) -> float:
    """max over codewords of the 2^t transform consistent with prefix v of
    -sum_j pen(y_j, c_j).  Always <= 0; -inf when no consistent codeword
    avoids a certain-symbol mismatch."""
    if not v:
        return 0.0
    n = len(y)
    if n == 1:
        return -pen(y[0], v[0])
    m = len(v)
    p = m // 2
    alpha = [v[2 * s] ^ v[2 * s + 1] for s in range(p)]
    beta = [v[2 * s + 1] for s in range(p)]
    if m % 2 == 0:
        return max_score(y[0::2], alpha) + max_score(y[1::2], beta)
    best = -INF
    for x in (0, 1):
        s = max_score(y[0::2], alpha + [v[-1] ^ x]) + max_score(y[1::2], beta + [x])
        if s > best:
            best = s
    return best


# -- exact kernel processing -------------------------------------------------


class ExactKernelProcessor:
    """Exact phase-probability computations by suffix enumeration.

    Cost is 2^(l-phase-1) codeword scores per call; guarded to l <= 20.
    Suffix codeword tables and their unpacked bit matrices are cached per
    phase.
    """

    def __init__(self, mat: BitMatrix):
        if mat.rows != mat.cols:
            raise ValueError("kernel must be square")
        if mat.rows > 20:
            raise ValueError("exact processing limited to l <= 20")
        self.mat = mat
        self.l = mat.rows
        self.rows = [mat.row(i) for i in range(self.l)]
        self._tables: dict[int, np.ndarray] = {}
        self._bits: dict[int, np.ndarray] = {}

    def _table(self, phase: int) -> np.ndarray:
        tab = self._tables.get(phase)
        if tab is None:
            gens = np.array(self.rows[phase + 1 :], dtype=np.uint64)
            tab = np.zeros(1 << len(gens), dtype=np.uint64)
            for g in range(len(gens)):
                half = 1 << g
                tab[half : 2 * half] = tab[:half] ^ gens[g]
            self._tables[phase] = tab
        return tab

    def _bit_matrix(self, phase: int) -> np.ndarray:
        bits = self._bits.get(phase)
        if bits is None:
            tab = self._table(phase)
            cols = np.arange(self.l, dtype=np.uint64)
            bits = ((tab[:, None] >> cols[None, :]) & 1).astype(np.float64)
            self._bits[phase] = bits
        return bits

    def _prefix_base(self, prefix) -> int:
        acc = 0
        for j, b in enumerate(prefix):
            if b:
                acc ^= self.rows[j]
        return acc

    def _scores(self, phase: int, base: int, weights, offset: float, inf_mask: int,
                inf_required: int) -> np.ndarray:
        """Per-suffix scores sum_j w_j c_j + offset, -inf where a
        certain-symbol position mismatches."""
        tab = self._table(phase)
        bits = self._bit_matrix(phase)
        base_bits = np.array(
            [(base >> j) & 1 for j in range(self.l)], dtype=np.float64
        )
        # c = table ^ base: c_j = t_j XOR b_j -> weight contribution
        # w_j*(t_j xor b_j) = t_j * w_j * (1-2b_j) + w_j*b_j
        w = np.asarray(weights, dtype=np.float64)
        scores = bits @ (w * (1.0 - 2.0 * base_bits)) + float((w * base_bits).sum()) + offset
        if inf_mask:
            bad = (tab ^ np.uint64(base ^ inf_required)) & np.uint64(inf_mask)
            scores = np.where(bad != 0, -INF, scores)
        return scores

    def _llr_parts(self, phase: int, prefix, llrs, mode: str):
        y = [float(x) for x in llrs]
        if len(y) != self.l:
            raise ValueError("LLR vector length mismatch")
        if len(prefix) != phase:
            raise ValueError("prefix length must equal phase")
        inf_mask = 0
        inf_required = 0
        weights = np.zeros(self.l)
        offset = 0.0
        if mode == "max":
            # score(c) = -sum pen(y_j, c_j); pen(l, c) = l*c for l >= 0 and
            # -l*(1-c) for l < 0, so -pen = (-l)*c + min(l, 0).
            for j, lj in enumerate(y):
                if math.isinf(lj):
                    inf_mask |= 1 << j
                    if lj < 0:
                        inf_required |= 1 << j
                else:
                    weights[j] = -lj
                    if lj < 0:
                        offset += lj
        elif mode == "sum":
            for j, lj in enumerate(y):
                if math.isinf(lj):
                    inf_mask |= 1 << j
                    if lj < 0:
                        inf_required |= 1 << j
                else:
                    # logW(c) = -softplus((2c-1) l) = logw0 + c*(logw1-logw0)
                    logw0 = -np.logaddexp(0.0, -lj)
                    logw1 = -np.logaddexp(0.0, lj)
                    weights[j] = logw1 - logw0
                    offset += logw0
        else:
            raise ValueError(f"unknown mode {mode!r}")
        base0 = self._prefix_base(prefix)
        base1 = base0 ^ self.rows[phase]
        s0 = self._scores(phase, base0, weights, offset, inf_mask, inf_required)
        s1 = self._scores(phase, base1, weights, offset, inf_mask, inf_required)
        return s0, s1

    def llr(self, phase: int, prefix, llrs, mode: str = "max") -> float:
        """Log-ratio of phase probabilities under u_phase = 0 vs 1."""
        s0, s1 = self._llr_parts(phase, prefix, llrs, mode)
        if mode == "max":
            m0 = float(s0.max())
            m1 = float(s1.max())
        else:
            m0 = _logsumexp(s0)
            m1 = _logsumexp(s1)
        if m0 == -INF and m1 == -INF:
            raise InconsistentLLRError("both hypotheses impossible")
        if m0 == -INF:
            return -INF
        if m1 == -INF:
            return INF
        return m0 - m1

    def prob(self, phase: int, prefix, priors) -> float:
        """Sum over suffixes of prod_j W(c_j | y_j); prefix includes u_phase."""
        if len(prefix) != phase + 1:
            raise ValueError("prefix must include the phase symbol")
        pr = np.asarray(priors, dtype=np.float64)
        if pr.shape != (self.l, 2):
            raise ValueError("priors must have shape (l, 2)")
        weights = np.zeros(self.l)
        offset = 0.0
        inf_mask = 0
        inf_required = 0
        with np.errstate(divide="ignore"):
            lw = np.log(pr)
        for j in range(self.l):
            w0, w1 = lw[j]
            if w0 == -INF and w1 == -INF:
                return 0.0
            if w0 == -INF or w1 == -INF:
                inf_mask |= 1 << j
                if w0 == -INF:
                    inf_required |= 1 << j
                offset += max(w0, w1)
            else:
                weights[j] = w1 - w0
                offset += w0
        base = self._prefix_base(prefix)
        s = self._scores(phase, base, weights, offset, inf_mask, inf_required)
        return float(math.exp(_logsumexp(s)))


def _logsumexp(x: np.ndarray) -> float:
    m = float(x.max())
    if m == -INF:
        return -INF
    return m + float(np.log(np.exp(x - m).sum()))


@lru_cache(maxsize=128)
def _exact_proc(mat: BitMatrix) -> ExactKernelProcessor:
    return ExactKernelProcessor(mat)


def exact_kernel_prob(k: Kernel, phase: int, prefix, priors) -> float:
    return _exact_proc(k.mat).prob(phase, prefix, priors)


def exact_kernel_llr(k: Kernel, phase: int, prefix, llrs, mode: str = "sum") -> float:
    return _exact_proc(k.mat).llr(phase, prefix, llrs, mode)


# -- window processing --------------------------------------------------------


@dataclass(frozen=True)
class WindowPlan:
    """Decoding-window description of a kernel against the Arikan transform.

    T satisfies T @ K = F_t.  tau[phi] is the last nonzero row of column
    phi of T; h[phi] = max(tau[0..phi]); the window of phase phi is the
    set of undetermined positions of v_0^{h_phi}.
    """

    kernel: BitMatrix
    t: int
    T: BitMatrix
    tau: tuple[int, ...]
    h: tuple[int, ...]
    windows: tuple[tuple[int, ...], ...]
    tcols: tuple[int, ...]  # column masks of T

    @property
    def l(self) -> int:
        return self.kernel.rows


def build_window_plan(k: Kernel) -> WindowPlan:
    """Solve T = F_t K^{-1} and derive the decoding windows.

    Requires l = 2^t and pairwise-distinct tau (kernels violating that
    are not supported by this processor)."""
    l = k.l
    t = l.bit_length() - 1
    if 1 << t != l:
        raise UnsupportedKernelError(f"window processing needs l = 2^t, got {l}")
    T = gf2.mat_mul(gf2.arikan(t), gf2.inverse(k.mat))
    tau = []
    tcols = []
    for phi in range(l):
        cm = T.col_mask(phi)
        tau.append(cm.bit_length() - 1)
        tcols.append(cm)
    if len(set(tau)) != l:
        raise UnsupportedKernelError(
            "window processing requires distinct last-nonzero rows per column"
        )
    h = []
    windows = []
    hmax = -1
    fixed: set[int] = set()
    for phi in range(l):
        hmax = max(hmax, tau[phi])
        fixed.add(tau[phi])
        h.append(hmax)
        windows.append(tuple(s for s in range(hmax + 1) if s not in fixed))
    return WindowPlan(
        kernel=k.mat.copy(),
        t=t,
        T=T,
        tau=tuple(tau),
        h=tuple(h),
        windows=tuple(windows),
        tcols=tuple(tcols),
    )


@lru_cache(maxsize=128)
def _window_plan(mat: BitMatrix) -> WindowPlan:
    return build_window_plan(Kernel(mat))


def window_llr(
    plan: WindowPlan,
    phase: int,
    prefix,
    llrs,
    forced_zero=frozenset(),
    counter=None,
) -> float:
    """Phase LLR via candidate enumeration over the decoding window.

    Scores every v_0^{h_phi} consistent with the prefix under u_phase = 0
    and = 1 and returns the difference of the maxima.  ``forced_zero``
    pins window positions to zero (used for shortened kernels; pruned
    candidates are provably impossible)."""
    l = plan.l
    y = [float(x) for x in llrs]
    if len(y) != l:
        raise ValueError("LLR vector length mismatch")
    u = [int(b) for b in prefix]
    if len(u) != phase:
        raise ValueError("prefix length must equal phase")
    hphi = plan.h[phase]
    # forced positions stay zero in every candidate; only the rest are free
    free = [s for s in plan.windows[phase] if s not in forced_zero]
    # resolve determined positions in increasing tau order
    resolve = sorted((plan.tau[j], j) for j in range(phase + 1))
    best = [-INF, -INF]
    n_eval = 0
    for b in (0, 1):
        uu = u + [b]
        for assign in range(1 << len(free)):
            v = [0] * (hphi + 1)
            vint = 0
            for idx, s in enumerate(free):
                bit = (assign >> idx) & 1
                v[s] = bit
                vint |= bit << s
            for tau_j, j in resolve:
                bit = uu[j] ^ (
                    (vint & plan.tcols[j] & ((1 << tau_j) - 1)).bit_count() & 1
                )
                v[tau_j] = bit
                vint |= bit << tau_j
            s_val = max_score(y, v)
            n_eval += 1
            if s_val > best[b]:
                best[b] = s_val
    if counter is not None:
        counter[0] += n_eval
    m0, m1 = best
    if m0 == -INF and m1 == -INF:
        raise InconsistentLLRError("both hypotheses impossible")
    if m0 == -INF:
        return -INF
    if m1 == -INF:
        return INF
    return m0 - m1


# -- shortened-kernel processing ----------------------------------------------


@dataclass
class EmbeddingPlan:
    """Everything needed to process a shortened kernel through its parent.

    The recorded shortening transform T turns the parent kernel into a
    form whose surviving rows are zero on the removed columns; phase-wise
    queries scatter the shortened prefix into parent coordinates, apply
    the leading block of T and delegate to a parent processor with +inf
    channel LLRs at the removed columns.
    """

    parent: Kernel
    shortening: ShorteningResult
    khat: BitMatrix
    tcols: tuple[int, ...]          # column masks of the recorded transform
    removed_rows: tuple[int, ...]
    pattern_cols: tuple[int, ...]
    column_map: tuple[int, ...]
    surviving_map: tuple[int, ...]
    window: WindowPlan | None       # parent window plan when admissible
    forced_zero: frozenset[int]     # v positions pinned to zero (window only)
    reduced_windows: tuple[tuple[int, ...], ...] | None

    @property
    def short_l(self) -> int:
        return self.parent.l - len(self.pattern_cols)


def build_embedding(parent: Kernel, shortening: ShorteningResult) -> EmbeddingPlan:
    """Derive the parent-processor embedding of a shortened kernel."""
    T = shortening.transform
    khat = gf2.mat_mul(T, parent.mat)
    removed = set(shortening.removed_rows)
    pat = shortening.pattern.positions
    for i in range(parent.l):
        if i in removed:
            continue
        for p in pat:
            if khat.get(i, p):
                raise ValueError(
                    "shortening transform does not clear pattern columns; "
                    "was the result produced from this parent?"
                )
    tcols = tuple(T.col_mask(j) for j in range(parent.l))

    window = None
    forced: frozenset[int] = frozenset()
    reduced = None
    try:
        window = build_window_plan(parent)
    except UnsupportedKernelError:
        window = None
    if window is not None:
        # u = x . M with M = T_w T^{-1}; a removed phase r whose M-column
        # has a single nonzero at row s makes u_r = x_s, forcing x_s = 0.
        M = gf2.mat_mul(window.T, gf2.inverse(T))
        forced_set = set()
        for r in shortening.removed_rows:
            cm = M.col_mask(r)
            if cm and cm & (cm - 1) == 0:
                forced_set.add(cm.bit_length() - 1)
        forced = frozenset(forced_set)
        reduced = tuple(
            tuple(s for s in window.windows[phi] if s not in forced)
            for phi in range(parent.l)
        )
    return EmbeddingPlan(
        parent=parent,
        shortening=shortening,
        khat=khat,
        tcols=tcols,
        removed_rows=shortening.removed_rows,
        pattern_cols=pat,
        column_map=shortening.column_map,
        surviving_map=shortening.surviving_map,
        window=window,
        forced_zero=forced,
        reduced_windows=reduced,
    )


class WindowProcessor:
    """Decoder-facing max-mode processor backed by a window plan."""

    def __init__(self, plan: WindowPlan):
        self.plan = plan
        self.l = plan.l

    def llr(self, phase: int, prefix, llrs) -> float:
        return window_llr(self.plan, phase, prefix, llrs)


class ExactProcessor:
    """Decoder-facing max-mode processor backed by exact marginalization."""

    def __init__(self, mat: BitMatrix):
        self.proc = ExactKernelProcessor(mat)
        self.l = self.proc.l

    def llr(self, phase: int, prefix, llrs) -> float:
        return self.proc.llr(phase, prefix, llrs, mode="max")


class EmbeddedProcessor:
    """Decoder-facing max-mode processor for a shortened kernel."""

    def __init__(self, plan: EmbeddingPlan, backend: str | None = None):
        if backend is None:
            backend = "window" if plan.window is not None else "exact"
        if backend == "exact" and plan.parent.l > 20:
            raise UnsupportedKernelError(
                "no window plan and parent too large for exact processing"
            )
        self.plan = plan
        self.backend = backend
        self.l = plan.short_l

    def llr(self, phase: int, prefix, llrs) -> float:
        return shortened_kernel_llr(
            self.plan, phase, prefix, llrs, backend=self.backend
        )


def shortened_kernel_llr(
    plan: EmbeddingPlan,
    phase: int,
    prefix,
    llrs,
    backend: str = "window",
    mode: str = "max",
    counter=None,
) -> float:
    """Phase LLR of the shortened kernel via the parent processor.

    Builds the extended channel vector (+inf at removed columns) and the
    extended input prefix (zeros at removed rows), applies the leading
    block of the shortening transform and queries the parent at the
    extended phase; removed parent phases are never queried.
    """
    lp = plan.short_l
    y = [float(x) for x in llrs]
    if len(y) != lp:
        raise ValueError("LLR vector length mismatch")
    u = [int(b) for b in prefix]
    if len(u) != phase:
        raise ValueError("prefix length must equal phase")

    l = plan.parent.l
    ytilde = [INF] * l
    for j, pj in enumerate(plan.column_map):
        ytilde[pj] = y[j]

    psi = plan.surviving_map[phase]
    uint = 0
    for i in range(phase):
        if u[i]:
            uint |= 1 << plan.surviving_map[i]
    # w = u~ . T restricted to the leading block (T upper triangular)
    w_prefix = [
        (uint & plan.tcols[j]).bit_count() & 1 for j in range(psi)
    ]
    flip = (uint & plan.tcols[psi] & ((1 << psi) - 1)).bit_count() & 1

    if backend == "window":
        if plan.window is None:
            raise UnsupportedKernelError("parent kernel has no window plan")
        lam = window_llr(
            plan.window, psi, w_prefix, ytilde,
            forced_zero=plan.forced_zero, counter=counter,
        )
    elif backend == "exact":
        lam = _exact_proc(plan.parent.mat).llr(psi, w_prefix, ytilde, mode=mode)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return -lam if flip else lam
