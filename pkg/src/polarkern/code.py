"""Mixed-kernel polar codes: construction, encoding, SC/SCL decoding.

A code is an ordered kernel sequence (K_0 outermost) with a frozen set.
The u vector is processed in natural order: each consecutive block of
l_0 symbols passes through K_0 and output coordinate j feeds the j-th
child stream, recursively.  The decoder runs batched over frames with a
path axis; all-F2 layers take a fully vectorized min-sum path, other
kernels delegate to their processors.  Path metrics are min-sum
penalties; list pruning is a stable sort, so ties resolve by path index
and L=1 reproduces plain successive cancellation bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gf2, processing
from .analysis import Kernel
from .gf2 import BitMatrix
from .shortening import ShorteningPattern, parse_hex, shorten

_F2 = BitMatrix.from_rows([[1, 0], [1, 1]])


@dataclass
class KernelEntry:
    """One layer of the transform: a kernel and its processor."""

    mat: BitMatrix
    label: str = ""
    pattern_hex: str | None = None  # set when this is a shortened kernel
    _proc: object = field(default=None, repr=False)

    @property
    def l(self) -> int:
        return self.mat.rows

    @property
    def is_f2(self) -> bool:
        return self.mat == _F2

    def processor(self):
        if self._proc is None:
            try:
                self._proc = processing.WindowProcessor(
                    processing.build_window_plan(Kernel(self.mat))
                )
            except processing.UnsupportedKernelError:
                self._proc = processing.ExactProcessor(self.mat)
        return self._proc

    def __getstate__(self):
        d = {"mat": self.mat, "label": self.label, "pattern_hex": self.pattern_hex}
        return d

    def __setstate__(self, d):
        self.mat = d["mat"]
        self.label = d["label"]
        self.pattern_hex = d["pattern_hex"]
        self._proc = None


def shortened_entry(parent: Kernel, pattern: ShorteningPattern, label: str = "") -> KernelEntry:
    """Kernel entry for a shortened kernel, processed through its parent."""
    res = shorten(parent, pattern)
    plan = processing.build_embedding(parent, res)
    entry = KernelEntry(
        mat=res.kernel.mat,
        label=label or f"s_{pattern.positions}",
        pattern_hex=None,
    )
    entry._proc = processing.EmbeddedProcessor(plan)
    return entry


@dataclass
class CodeSpec:
    """Mixed-kernel code: kernel sequence, dimension and frozen set."""

    entries: list[KernelEntry]
    k: int
    frozen: np.ndarray

    def __post_init__(self):
        n = self.n
        self.frozen = np.array(sorted(int(i) for i in np.asarray(self.frozen).ravel()), dtype=np.int64)
        if len(self.frozen) != n - self.k:
            raise ValueError(
                f"frozen set size {len(self.frozen)} != n - k = {n - self.k}"
            )
        if len(self.frozen) and (self.frozen[0] < 0 or self.frozen[-1] >= n):
            raise ValueError("frozen indices out of range")
        if len(set(self.frozen.tolist())) != len(self.frozen):
            raise ValueError("duplicate frozen indices")

    @property
    def n(self) -> int:
        p = 1
        for e in self.entries:
            p *= e.l
        return p

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def info_positions(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.frozen] = False
        return np.flatnonzero(mask)

    @classmethod
    def arikan(cls, m: int, k: int, frozen) -> "CodeSpec":
        entries = [KernelEntry(_F2.copy(), label="F1") for _ in range(m)]
        return cls(entries, k, frozen)


# -- encoding -----------------------------------------------------------------


def _encode_rec(u: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
    """u shape (..., length); kernel uint8 arrays outermost first."""
    if not mats:
        return u
    K = mats[0]
    l = K.shape[0]
    length = u.shape[-1]
    blocks = u.reshape(u.shape[:-1] + (length // l, l))
    c = np.matmul(blocks.astype(np.uint16), K) & 1
    parts = [_encode_rec(c[..., j].astype(np.uint8), mats[1:]) for j in range(l)]
    return np.concatenate(parts, axis=-1)


def encode_u(spec: CodeSpec, u: np.ndarray) -> np.ndarray:
    """Transform full input vectors (..., n) to codewords, layer by layer."""
    u = np.asarray(u, dtype=np.uint8)
    if u.shape[-1] != spec.n:
        raise ValueError(f"u length {u.shape[-1]} != n = {spec.n}")
    mats = [e.mat.to_array() for e in spec.entries]
    return _encode_rec(u, mats)


def encode(spec: CodeSpec, info_bits) -> np.ndarray:
    """Scatter info bits into non-frozen positions (frozen = 0) and encode."""
    info = np.asarray(info_bits, dtype=np.uint8).ravel()
    if info.shape[0] != spec.k:
        raise ValueError(f"expected {spec.k} info bits, got {info.shape[0]}")
    u = np.zeros(spec.n, dtype=np.uint8)
    u[spec.info_positions] = info
    return encode_u(spec, u)


def build_generator(spec: CodeSpec) -> BitMatrix:
    """Explicit generator: digit-reversed Kronecker product of the kernels.

    For oracle/testing use; guarded to n <= 4096."""
    n = spec.n
    if n > 4096:
        raise ValueError("explicit generator limited to n <= 4096")
    kr = spec.entries[0].mat
    for e in spec.entries[1:]:
        kr = gf2.kron(kr, e.mat)
    perm = gf2.digit_reversal([e.l for e in spec.entries])
    rows = [kr.row(perm.forward[i]) for i in range(n)]
    return BitMatrix(n, n, rows)


# -- batched SC / SCL engine ---------------------------------------------------


class _Engine:
    """Batched list decoder over a mixed-kernel spec.

    State arrays carry (batch, list) leading axes.  chan[i] holds the
    current-position LLR of every depth-i stream; bufs[i] the symbols of
    each stream's current kernel block.  All-F2 depths use vectorized
    min-sum updates; other kernels call their processor per stream.
    """

    def __init__(self, spec: CodeSpec):
        self.spec = spec
        self.ls = [e.l for e in spec.entries]
        self.m = len(self.ls)
        self.n = spec.n
        self.strides = [1] * self.m
        for i in range(1, self.m):
            self.strides[i] = self.strides[i - 1] * self.ls[i - 1]
        self.f2 = [e.is_f2 for e in spec.entries]
        self.procs = [None if e.is_f2 else e.processor() for e in spec.entries]
        self.mats = [e.mat.to_array() for e in spec.entries]
        self.frozen_mask = np.zeros(self.n, dtype=bool)
        self.frozen_mask[spec.frozen] = True

    def decode(self, chan_llrs: np.ndarray, L: int, genie_u: np.ndarray | None = None):
        """Decode a batch of frames.

        chan_llrs: (B, n) float.  Returns (u_hat (B, n) uint8, metrics (B,)).
        With genie_u given, decisions are forced to the true bits and the
        return gains a (B, n) bool array of raw-decision mismatches.

        Path pruning does not physically reorder the state arrays; each
        stage carries a pending path permutation that forks compose and
        that is resolved only when the stage is actually read or written.
        """
        B, n = chan_llrs.shape
        assert n == self.n
        m, ls, strides = self.m, self.ls, self.strides
        genie = genie_u is not None
        if genie:
            L = 1

        chan = [np.zeros((B, L, strides[i])) for i in range(m)]
        chan.append(np.ascontiguousarray(chan_llrs, dtype=np.float64)[:, None, :])
        bufs = [np.zeros((B, L, strides[i], ls[i]), dtype=np.uint8) for i in range(m)]
        self._has_inf = bool(np.isinf(chan_llrs).any())
        metrics = np.full((B, L), math.inf)
        metrics[:, 0] = 0.0
        hist_bit = np.zeros((n, B, L), dtype=np.uint8)
        hist_parent = np.zeros((n, B, L), dtype=np.int64)
        mismatch = np.zeros((B, n), dtype=bool) if genie else None
        idx_l = np.arange(L)
        brows = np.arange(B)[:, None]
        # pending path permutations per stage (None = identity)
        self._pc = [None] * (m + 1)  # chan[m] is shared across paths
        self._pb = [None] * m

        for phi in range(n):
            # refresh stale stream LLRs, deepest first
            for i in range(m - 1, -1, -1):
                if phi % strides[i] == 0:
                    self._refresh(i, phi, chan, bufs, B, L, brows)
            llr = chan[0][:, :, 0]  # (B, L)

            if genie:
                truth = genie_u[:, phi].astype(np.uint8)
                decide = llr[:, 0] < 0
                mismatch[:, phi] = decide != (truth != 0)
                bit = np.broadcast_to(truth[:, None], (B, L))
                parent = np.broadcast_to(idx_l, (B, L))
                metrics = metrics + np.where(bit == 0, np.maximum(0.0, -llr), np.maximum(0.0, llr))
            elif self.frozen_mask[phi]:
                metrics = metrics + np.maximum(0.0, -llr)
                bit = np.zeros((B, L), dtype=np.uint8)
                parent = np.broadcast_to(idx_l, (B, L))
            else:
                p0 = metrics + np.maximum(0.0, -llr)
                p1 = metrics + np.maximum(0.0, llr)
                cands = np.concatenate([p0, p1], axis=1)  # (B, 2L)
                order = np.argsort(cands, axis=1, kind="stable")[:, :L]
                metrics = np.take_along_axis(cands, order, axis=1)
                parent = order % L
                bit = (order // L).astype(np.uint8)
                if L > 1:
                    for i in range(m):
                        pc = self._pc[i]
                        self._pc[i] = parent.copy() if pc is None else pc[brows, parent]
                        pb = self._pb[i]
                        self._pb[i] = parent.copy() if pb is None else pb[brows, parent]

            hist_bit[phi] = bit
            hist_parent[phi] = parent
            t0 = phi % ls[0]
            self._settle_buf(0, bufs, brows)
            bufs[0][:, :, 0, t0] = bit
            # cascade completed blocks downward
            i = 0
            while i < m - 1 and (phi + 1) % strides[i + 1] == 0:
                self._settle_buf(i + 1, bufs, brows)
                c = np.matmul(bufs[i].astype(np.uint16), self.mats[i]) & 1
                ti1 = (phi // strides[i + 1]) % ls[i + 1]
                bufs[i + 1][:, :, :, ti1] = c.reshape(B, L, -1).astype(np.uint8)
                i += 1

        best = np.argmin(metrics, axis=1)
        u_hat = np.zeros((B, n), dtype=np.uint8)
        cur = best.copy()
        rows = np.arange(B)
        for phi in range(n - 1, -1, -1):
            u_hat[:, phi] = hist_bit[phi][rows, cur]
            cur = hist_parent[phi][rows, cur]
        best_metrics = metrics[rows, best]
        if genie:
            return u_hat, best_metrics, mismatch
        return u_hat, best_metrics

    def _settle_buf(self, i: int, bufs, brows) -> None:
        if self._pb[i] is not None:
            bufs[i] = bufs[i][brows, self._pb[i]]
            self._pb[i] = None

    def _refresh(self, i: int, phi: int, chan, bufs, B: int, L: int, brows) -> None:
        pos = phi // self.strides[i]
        t = pos % self.ls[i]
        child = chan[i + 1]
        if self._pc[i + 1] is not None:
            child = child[brows, self._pc[i + 1]]
            chan[i + 1] = child
            self._pc[i + 1] = None
        if t != 0 or not self.f2[i]:
            self._settle_buf(i, bufs, brows)
        if self.f2[i]:
            pair = child.reshape(child.shape[0], child.shape[1], -1, 2)
            a = pair[..., 0]
            b = pair[..., 1]
            if t == 0:
                mag = np.minimum(np.abs(a), np.abs(b))
                out = np.where((a < 0) != (b < 0), -mag, mag)
            else:
                u = bufs[i][:, :, :, 0]
                s = np.where(u != 0, -a, a)
                if self._has_inf:
                    with np.errstate(invalid="ignore"):
                        r = s + b
                    out = np.where(np.isnan(r), 0.0, r)
                else:
                    out = s + b
            if out.shape[1] != L:
                out = np.broadcast_to(out, (B, L, out.shape[2])).copy()
            chan[i] = out
        else:
            proc = self.procs[i]
            l = self.ls[i]
            S = self.strides[i]
            lshare = child.shape[1]  # 1 when the child axis is shared
            out = np.zeros((B, L, S))
            for bi in range(B):
                for pi in range(L):
                    ci = child[bi, pi if lshare > 1 else 0]
                    for s in range(S):
                        prefix = bufs[i][bi, pi, s, :t].tolist()
                        y = ci[s * l : (s + 1) * l].tolist()
                        try:
                            v = proc.llr(t, prefix, y)
                        except processing.InconsistentLLRError:
                            v = 0.0
                        out[bi, pi, s] = v
            chan[i] = out
        self._pc[i] = None


def sc_decode(spec: CodeSpec, channel_llrs):
    """Successive cancellation decoding of one frame.

    Returns (info_bits, codeword); frozen phases are forced to zero."""
    llrs = np.asarray(channel_llrs, dtype=np.float64).reshape(1, -1)
    u_hat, _ = _Engine(spec).decode(llrs, L=1)
    info = u_hat[0][spec.info_positions]
    return info, encode_u(spec, u_hat[0])


def scl_decode(spec: CodeSpec, channel_llrs, L: int):
    """Successive cancellation list decoding of one frame.

    Returns (info_bits, path_metric) of the lowest-metric surviving path."""
    if L < 1:
        raise ValueError("list size must be >= 1")
    llrs = np.asarray(channel_llrs, dtype=np.float64).reshape(1, -1)
    u_hat, metrics = _Engine(spec).decode(llrs, L=L)
    return u_hat[0][spec.info_positions], float(metrics[0])


def construct_frozen(
    entries_or_spec,
    k: int,
    design_snr_db: float,
    budget: int,
    seed: int = 0,
    batch: int = 256,
) -> np.ndarray:
    """Genie-aided Monte-Carlo frozen set construction.

    Simulates successive cancellation with known data at the design SNR.
    Each phase decision is evaluated against the true bit with the
    preceding decisions forced correct, so every input index accumulates
    its own error count in one pass (counting only the first error per
    frame starves all indices past the worst few of statistics and
    degenerates at rate 1).  The n - k most error-prone indices are
    frozen; count ties resolve toward freezing lower indices.
    Deterministic under (seed, budget)."""
    if budget < 1000:
        raise ValueError("construction budget must be >= 1000")
    if isinstance(entries_or_spec, CodeSpec):
        entries = entries_or_spec.entries
    else:
        entries = list(entries_or_spec)
    n = 1
    for e in entries:
        n *= e.l
    if not (0 < k <= n):
        raise ValueError(f"k must be in (0, n], got {k}")
    if k == n:
        return np.array([], dtype=np.int64)

    probe = CodeSpec(entries, n, np.array([], dtype=np.int64))
    eng = _Engine(probe)
    rate = k / n
    sigma2 = 1.0 / (2.0 * rate * 10.0 ** (design_snr_db / 10.0))
    sigma = math.sqrt(sigma2)
    counts = np.zeros(n, dtype=np.int64)
    rng = np.random.default_rng((int(seed), 0x706B))
    done = 0
    while done < budget:
        b = min(batch, budget - done)
        u = rng.integers(0, 2, size=(b, n), dtype=np.uint8)
        c = encode_u(probe, u)
        x = 1.0 - 2.0 * c.astype(np.float64)
        y = x + sigma * rng.standard_normal((b, n))
        llrs = 2.0 * y / sigma2
        _, _, mismatch = eng.decode(llrs, L=1, genie_u=u)
        counts += mismatch.sum(axis=0)
        done += b
    # most error-prone first; ties freeze lower indices
    order = np.lexsort((np.arange(n), -counts))
    return np.array(sorted(order[: n - k].tolist()), dtype=np.int64)


# -- code spec files ------------------------------------------------------------


def parse_kernel_ref(ref: str, base_dir=None) -> KernelEntry:
    """Kernel reference: 'arikan:T', 'inline:ROW;ROW;...', or a file path,
    optionally followed by 'pattern=HEX' to shorten it."""
    import os

    parts = ref.split()
    src = parts[0]
    pattern_hex = None
    for extra in parts[1:]:
        if extra.startswith("pattern="):
            pattern_hex = extra[len("pattern="):]
        else:
            raise ValueError(f"unrecognized kernel option {extra!r}")
    if src.startswith("arikan:"):
        t = int(src.split(":", 1)[1])
        mat = gf2.arikan(t)
        label = f"F{t}"
    elif src.startswith("inline:"):
        rows = [[int(c) for c in r] for r in src.split(":", 1)[1].split(";") if r]
        mat = BitMatrix.from_rows(rows)
        if mat.rows != mat.cols or gf2.rank(mat) != mat.rows:
            raise ValueError("inline kernel must be square and invertible")
        label = "inline"
    else:
        path = src
        if base_dir is not None and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        mat = gf2.load_kernel(path)
        label = src
    if pattern_hex is not None:
        pattern = parse_hex(pattern_hex, mat.rows)
        return shortened_entry(Kernel(mat, name=label), pattern,
                               label=f"s_{pattern_hex}({label})")
    return KernelEntry(mat, label=label)


def load_frozen_file(path) -> np.ndarray:
    with open(path, "r", encoding="ascii") as f:
        vals = [int(ln.strip()) for ln in f if ln.strip()]
    return np.array(sorted(vals), dtype=np.int64)


def save_frozen_file(path, frozen) -> None:
    with open(path, "w", encoding="ascii") as f:
        for i in frozen:
            f.write(f"{int(i)}\n")


def parse_spec_text(text: str, base_dir=None):
    """Parse a code spec file into (entries, k, frozen_directive, params).

    Lines are 'key = value'; 'kernel' lines repeat, outermost kernel
    first.  The frozen directive is 'auto' or a file path."""
    entries: list[KernelEntry] = []
    k = None
    frozen = None
    params = {"design_snr": 0.0, "construct_frames": 10_000, "construct_seed": 1}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad spec line {line!r}; want 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key == "kernel":
            entries.append(parse_kernel_ref(val, base_dir))
        elif key == "k":
            k = int(val)
        elif key == "frozen":
            frozen = val
        elif key == "design_snr":
            params["design_snr"] = float(val)
        elif key == "construct_frames":
            params["construct_frames"] = int(val)
        elif key == "construct_seed":
            params["construct_seed"] = int(val)
        else:
            raise ValueError(f"unknown spec key {key!r}")
    if not entries:
        raise ValueError("spec file declares no kernels")
    if k is None:
        raise ValueError("spec file declares no k")
    return entries, k, frozen, params


def load_code_spec(path, construct_missing: bool = True) -> CodeSpec:
    """Load a code spec file; construct the frozen set when 'frozen = auto'."""
    import os

    with open(path, "r", encoding="ascii") as f:
        text = f.read()
    base = os.path.dirname(os.path.abspath(path))
    entries, k, frozen, params = parse_spec_text(text, base_dir=base)
    n = 1
    for e in entries:
        n *= e.l
    if frozen is None or frozen == "auto":
        if k == n:
            fr = np.array([], dtype=np.int64)
        elif construct_missing:
            fr = construct_frozen(
                entries, k, params["design_snr"],
                params["construct_frames"], params["construct_seed"],
            )
        else:
            raise ValueError("spec has no frozen set and construction is disabled")
    else:
        fpath = frozen
        if not os.path.isabs(fpath):
            fpath = os.path.join(base, fpath)
        fr = load_frozen_file(fpath)
    return CodeSpec(entries, k, fr)
