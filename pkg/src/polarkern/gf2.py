"""Dense GF(2) linear algebra on packed-word rows.

Rows are stored as Python integers (bit j of ``rows[i]`` is entry [i, j]),
which keeps XOR row operations and Hamming weights cheap for the kernel
sizes this package cares about (l <= 32) while still allowing the wide
generator matrices produced by Kronecker products.  Hot enumeration loops
(coset minimum-weight search) are chunked through numpy ``bitwise_count``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Chunk size (log2) for vectorized coset enumeration.  2^20 uint64 = 8 MB.
_CHUNK_BITS = 20


class BitMatrix:
    """Dense binary matrix with row-major packed storage."""

    __slots__ = ("rows", "cols", "_r")

    def __init__(self, rows: int, cols: int, row_ints=None):
        if rows < 1 or cols < 1:
            raise ValueError(f"BitMatrix needs rows, cols >= 1, got {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        if row_ints is None:
            self._r = [0] * rows
        else:
            self._r = list(row_ints)
            if len(self._r) != rows:
                raise ValueError("row count mismatch")
            mask = (1 << cols) - 1
            for v in self._r:
                if v & ~mask:
                    raise ValueError("row has bits set beyond column count")

    # -- constructors -------------------------------------------------

    @classmethod
    def from_rows(cls, rows_of_bits) -> "BitMatrix":
        """Build from an iterable of 0/1 iterables (bit j = column j)."""
        data = [list(r) for r in rows_of_bits]
        if not data:
            raise ValueError("empty matrix")
        cols = len(data[0])
        ints = []
        for r in data:
            if len(r) != cols:
                raise ValueError("ragged rows")
            v = 0
            for j, b in enumerate(r):
                if b not in (0, 1):
                    raise ValueError(f"non-binary entry {b!r}")
                v |= b << j
            ints.append(v)
        return cls(len(data), cols, ints)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    # -- element / row access -----------------------------------------

    def row(self, i: int) -> int:
        return self._r[i]

    def get(self, i: int, j: int) -> int:
        if not (0 <= j < self.cols):
            raise IndexError(f"column {j} out of range")
        return (self._r[i] >> j) & 1

    def set(self, i: int, j: int, bit: int) -> None:
        if not (0 <= j < self.cols):
            raise IndexError(f"column {j} out of range")
        if bit:
            self._r[i] |= 1 << j
        else:
            self._r[i] &= ~(1 << j)

    def set_row(self, i: int, value: int) -> None:
        if value & ~((1 << self.cols) - 1):
            raise ValueError("row value exceeds column count")
        self._r[i] = value

    def xor_rows(self, dst: int, src: int) -> None:
        """row[dst] ^= row[src]."""
        self._r[dst] ^= self._r[src]

    def row_weight(self, i: int) -> int:
        return self._r[i].bit_count()

    def col_mask(self, j: int) -> int:
        """Column j as an integer (bit i = entry [i, j])."""
        if not (0 <= j < self.cols):
            raise IndexError(f"column {j} out of range")
        m = 0
        for i, v in enumerate(self._r):
            m |= ((v >> j) & 1) << i
        return m

    # -- conveniences --------------------------------------------------

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self._r)

    def to_lists(self) -> list[list[int]]:
        return [[(v >> j) & 1 for j in range(self.cols)] for v in self._r]

    def to_array(self) -> np.ndarray:
        return np.array(self.to_lists(), dtype=np.uint8)

    def transpose(self) -> "BitMatrix":
        out = BitMatrix.zeros(self.cols, self.rows)
        for i, v in enumerate(self._r):
            while v:
                j = (v & -v).bit_length() - 1
                out._r[j] |= 1 << i
                v &= v - 1
        return out

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.rows == other.rows
            and self.cols == other.cols
            and self._r == other._r
        )

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(self._r)))

    def __repr__(self) -> str:
        body = "\n".join(
            "".join(str((v >> j) & 1) for j in range(self.cols)) for v in self._r
        )
        return f"BitMatrix({self.rows}x{self.cols})\n{body}"


# -- basic operations ------------------------------------------------------


def mat_mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """GF(2) matrix product a @ b."""
    if a.cols != b.rows:
        raise ValueError(f"dimension mismatch: {a.rows}x{a.cols} @ {b.rows}x{b.cols}")
    out = []
    brows = b._r
    for v in a._r:
        acc = 0
        w = v
        while w:
            j = (w & -w).bit_length() - 1
            acc ^= brows[j]
            w &= w - 1
        out.append(acc)
    return BitMatrix(a.rows, b.cols, out)


def mat_vec(v_bits: int, m: BitMatrix) -> int:
    """Row-vector (packed int) times matrix over GF(2)."""
    acc = 0
    w = v_bits
    while w:
        j = (w & -w).bit_length() - 1
        acc ^= m._r[j]
        w &= w - 1
    return acc


def kron(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    """Kronecker product a (x) b."""
    rows = a.rows * b.rows
    cols = a.cols * b.cols
    if rows * cols > (1 << 26):
        raise ValueError(f"Kronecker product too large: {rows}x{cols}")
    out = []
    for ia in range(a.rows):
        va = a._r[ia]
        for ib in range(b.rows):
            vb = b._r[ib]
            acc = 0
            w = va
            while w:
                ja = (w & -w).bit_length() - 1
                acc |= vb << (ja * b.cols)
                w &= w - 1
            out.append(acc)
    return BitMatrix(rows, cols, out)


def rank(m: BitMatrix) -> int:
    """GF(2) rank via Gaussian elimination on packed rows."""
    rows = list(m._r)
    r = 0
    for col in range(m.cols):
        bit = 1 << col
        pivot = -1
        for i in range(r, len(rows)):
            if rows[i] & bit:
                pivot = i
                break
        if pivot < 0:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & bit:
                rows[i] ^= rows[r]
        r += 1
        if r == len(rows):
            break
    return r


def inverse(m: BitMatrix) -> BitMatrix:
    """Inverse of a square invertible GF(2) matrix."""
    if m.rows != m.cols:
        raise ValueError("inverse needs a square matrix")
    n = m.rows
    left = list(m._r)
    right = [1 << i for i in range(n)]
    r = 0
    for col in range(n):
        bit = 1 << col
        pivot = -1
        for i in range(r, n):
            if left[i] & bit:
                pivot = i
                break
        if pivot < 0:
            raise ValueError("matrix is singular")
        left[r], left[pivot] = left[pivot], left[r]
        right[r], right[pivot] = right[pivot], right[r]
        for i in range(n):
            if i != r and left[i] & bit:
                left[i] ^= left[r]
                right[i] ^= right[r]
        r += 1
    return BitMatrix(n, n, right)


def is_upper_triangular(m: BitMatrix) -> bool:
    """True when all entries strictly below the diagonal are zero."""
    for i in range(m.rows):
        if m._r[i] & ((1 << min(i, m.cols)) - 1):
            return False
    return True


# -- coset minimum-weight enumeration --------------------------------------


def _combo_table(generators: np.ndarray, nbits: int) -> np.ndarray:
    """All XOR combinations of the first nbits generators, indexed by subset."""
    table = np.zeros(1 << nbits, dtype=np.uint64)
    for g in range(nbits):
        half = 1 << g
        table[half : 2 * half] = table[:half] ^ generators[g]
    return table


def coset_min_weight(
    generators,
    rep: int,
    width: int | None = None,
    stop_at: int | None = None,
):
    """Minimum Hamming weight over the coset rep + span(generators).

    Visits all 2^k generator combinations (chunked, vectorized popcounts)
    and returns ``(weight, combo)`` where ``combo`` is a bitmask over
    ``generators`` achieving the minimum (bit g set = generator g used).

    ``stop_at`` is an early-exit floor: when a combination of weight
    <= stop_at is found the search stops (callers pass a proven lower
    bound, so the returned weight is still exact).
    """
    gens = list(generators)
    k = len(gens)
    if k > 63:
        raise ValueError("too many generators for packed enumeration")
    if k == 0:
        return rep.bit_count(), 0
    low_bits = min(k, _CHUNK_BITS)
    garr = np.array(gens, dtype=np.uint64)
    table = _combo_table(garr, low_bits)

    best_w = rep.bit_count()
    best_combo = 0
    if stop_at is not None and best_w <= stop_at:
        return best_w, 0

    high_gens = gens[low_bits:]
    n_high = k - low_bits
    base = rep
    hv_gray = 0
    for hv in range(1 << n_high):
        if hv > 0:
            # Gray step: flip the generator named by the changed bit.
            changed = (hv ^ (hv >> 1)) ^ hv_gray
            hv_gray ^= changed
            base ^= high_gens[changed.bit_length() - 1]
        wts = np.bitwise_count(table ^ np.uint64(base))
        idx = int(np.argmin(wts))
        w = int(wts[idx])
        if w < best_w:
            best_w = w
            best_combo = (hv_gray << low_bits) | idx
            if best_w <= (stop_at if stop_at is not None else 0):
                break
    return best_w, best_combo


def partial_weight_profile(rows) -> list[int]:
    """For each i, the minimum weight over {XOR of a subset S of rows, min(S)=i}.

    Single pass over all 2^l - 1 nonzero subsets, bucketed by lowest
    participating row; equals the per-row coset minimum distances
    d(rows[i], span(rows[i+1:])) in one enumeration.
    """
    rows = list(rows)
    l = len(rows)
    if l > 32:
        raise ValueError("profile enumeration limited to 32 rows")
    out = [0] * l
    low_bits = min(l, _CHUNK_BITS)
    garr = np.array(rows, dtype=np.uint64)
    table = _combo_table(garr, low_bits)
    high = rows[low_bits:]
    n_high = l - low_bits
    best = np.full(l, 1 << 30, dtype=np.int64)

    base = 0
    hv_gray = 0
    for hv in range(1 << n_high):
        if hv > 0:
            changed = (hv ^ (hv >> 1)) ^ hv_gray
            hv_gray ^= changed
            base ^= high[changed.bit_length() - 1]
        wts = np.bitwise_count(table ^ np.uint64(base)).astype(np.int64)
        # Peel buckets by lowest set bit of the low index: odd indices are
        # bucket 0, then halve.  The final survivor is the low==0 element.
        w = wts
        for g in range(low_bits):
            odd = w[1::2]
            if odd.size:
                m = int(odd.min())
                if m < best[g]:
                    best[g] = m
            w = w[0::2]
        if hv > 0:
            g = low_bits + (hv_gray & -hv_gray).bit_length() - 1
            if int(w[0]) < best[g]:
                best[g] = int(w[0])
    for i in range(l):
        out[i] = int(best[i])
    return out


# -- digit reversal permutation --------------------------------------------


@dataclass(frozen=True)
class IndexPermutation:
    """Permutation over prod(radices) indices with its inverse."""

    radices: tuple[int, ...]
    forward: tuple[int, ...]
    inverse: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.forward)

    def apply(self, i: int) -> int:
        return self.forward[i]


def digit_reversal(radices) -> IndexPermutation:
    """Mixed-radix digit reversal.

    An index decomposed little-endian over ``radices`` (first radix is the
    fastest digit) maps to the index with the same digits read big-endian
    (first radix slowest).  For radices (2, 2) this is (0, 2, 1, 3).
    """
    radices = tuple(int(r) for r in radices)
    if not radices or any(r < 2 for r in radices):
        raise ValueError("radices must be a nonempty list of integers >= 2")
    n = 1
    for r in radices:
        n *= r
    forward = [0] * n
    for i in range(n):
        v = i
        digits = []
        for r in radices:
            digits.append(v % r)
            v //= r
        # big-endian reassembly: digit k gets weight prod(radices[k+1:])
        weight = n
        acc = 0
        for d, r in zip(digits, radices):
            weight //= r
            acc += d * weight
        forward[i] = acc
    inv = [0] * n
    for i, f in enumerate(forward):
        inv[f] = i
    return IndexPermutation(radices, tuple(forward), tuple(inv))


# -- kernel text format -----------------------------------------------------


def parse_kernel_text(text: str) -> BitMatrix:
    """Parse the kernel file format: first line l, then l rows of l chars."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty kernel file")
    try:
        l = int(lines[0])
    except ValueError as e:
        raise ValueError(f"first line must be the kernel size, got {lines[0]!r}") from e
    if l < 1:
        raise ValueError(f"kernel size must be positive, got {l}")
    if len(lines) != l + 1:
        raise ValueError(f"expected {l} rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        if len(ln) != l or set(ln) - {"0", "1"}:
            raise ValueError(f"bad kernel row {ln!r}: need exactly {l} chars from 0/1")
        rows.append([int(c) for c in ln])
    m = BitMatrix.from_rows(rows)
    if rank(m) != l:
        raise ValueError("kernel matrix is singular")
    return m


def format_kernel_text(m: BitMatrix) -> str:
    if m.rows != m.cols:
        raise ValueError("kernel must be square")
    body = "\n".join(
        "".join(str((m.row(i) >> j) & 1) for j in range(m.cols)) for i in range(m.rows)
    )
    return f"{m.rows}\n{body}\n"


def load_kernel(path) -> BitMatrix:
    with open(path, "r", encoding="ascii") as f:
        return parse_kernel_text(f.read())


def save_kernel(m: BitMatrix, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(format_kernel_text(m))


def arikan(t: int) -> BitMatrix:
    """The 2^t x 2^t Kronecker power of [[1,0],[1,1]]."""
    if t < 1:
        raise ValueError("t must be >= 1")
    f2 = BitMatrix.from_rows([[1, 0], [1, 1]])
    m = f2
    for _ in range(t - 1):
        m = kron(m, f2)
    return m


def random_invertible(l: int, rng: np.random.Generator) -> BitMatrix:
    """Uniformly sampled invertible l x l matrix (rejection sampling)."""
    while True:
        bits = rng.integers(0, 2, size=(l, l), dtype=np.uint8)
        m = BitMatrix.from_rows(bits.tolist())
        if rank(m) == l:
            return m
