"""AWGN Monte-Carlo experiment runner.

BPSK over AWGN with E_b/N_0 accounting: noise variance is
sigma^2 = 1/(2 * rate * 10^(snr_db/10)) and channel LLRs are 2y/sigma^2.
Every frame draws from its own counter-based RNG stream keyed by
(seed, snr_index, frame_index), so results do not depend on batching or
worker scheduling; early stopping truncates at the exact frame where the
error budget is reached.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .code import CodeSpec, _Engine, _encode_rec

CSV_HEADER = "snr_db,frames,frame_errors,bit_errors,fer,ber,wall_time_s"


@dataclass
class ExperimentConfig:
    spec: CodeSpec
    snr_grid: list[float]
    list_size: int = 8
    max_frames: int = 10_000
    max_frame_errors: int = 100
    seed: int = 1
    batch: int = 128

    def __post_init__(self):
        if not self.snr_grid:
            raise ValueError("SNR grid is empty")
        if self.max_frames < 1 or self.list_size < 1 or self.batch < 1:
            raise ValueError("budgets and list size must be positive")
        if not (0.0 < self.spec.rate <= 1.0):
            raise ValueError("code rate must be in (0, 1]")


@dataclass
class ResultRow:
    snr_db: float
    frames: int
    frame_errors: int
    bit_errors: int
    fer: float
    ber: float
    wall_time_s: float

    def to_csv(self) -> str:
        return (
            f"{self.snr_db!r},{self.frames},{self.frame_errors},{self.bit_errors},"
            f"{self.fer!r},{self.ber!r},{self.wall_time_s!r}"
        )

    @classmethod
    def from_csv(cls, line: str) -> "ResultRow":
        parts = line.strip().split(",")
        if len(parts) != 7:
            raise ValueError(f"bad result row: {line!r}")
        return cls(
            snr_db=float(parts[0]),
            frames=int(parts[1]),
            frame_errors=int(parts[2]),
            bit_errors=int(parts[3]),
            fer=float(parts[4]),
            ber=float(parts[5]),
            wall_time_s=float(parts[6]),
        )


def noise_sigma(snr_db: float, rate: float) -> float:
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (snr_db / 10.0)))


def awgn_llrs(codeword, snr_db: float, rate: float, rng: np.random.Generator) -> np.ndarray:
    """BPSK (0 -> +1, 1 -> -1) over AWGN; returns LLRs 2y/sigma^2."""
    if not (0.0 < rate <= 1.0):
        raise ValueError("rate must be in (0, 1]")
    c = np.asarray(codeword, dtype=np.float64)
    sigma = noise_sigma(snr_db, rate)
    y = (1.0 - 2.0 * c) + sigma * rng.standard_normal(c.shape)
    return 2.0 * y / (sigma * sigma)


def _frame_rng(seed: int, snr_index: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng((int(seed), int(snr_index), int(frame_index)))


def _simulate_point(
    cfg: ExperimentConfig, snr_index: int, engine: _Engine
) -> ResultRow:
    spec = cfg.spec
    snr_db = float(cfg.snr_grid[snr_index])
    rate = spec.rate
    n, k = spec.n, spec.k
    info_pos = spec.info_positions
    t0 = time.perf_counter()
    frames = 0
    frame_errors = 0
    bit_errors = 0
    done = False
    while frames < cfg.max_frames and not done:
        b = min(cfg.batch, cfg.max_frames - frames)
        u = np.zeros((b, n), dtype=np.uint8)
        rngs = []
        for j in range(b):
            rng = _frame_rng(cfg.seed, snr_index, frames + j)
            u[j, info_pos] = rng.integers(0, 2, size=k, dtype=np.uint8)
            rngs.append(rng)
        c = _encode_rec(u, engine.mats)
        llrs = np.empty((b, n), dtype=np.float64)
        for j in range(b):
            llrs[j] = awgn_llrs(c[j], snr_db, rate, rngs[j])
        u_hat, _ = engine.decode(llrs, L=cfg.list_size)
        errs = (u_hat[:, info_pos] != u[:, info_pos])
        frame_err = errs.any(axis=1)
        # truncate at the exact frame where the error budget is hit
        for j in range(b):
            frames += 1
            if frame_err[j]:
                frame_errors += 1
                bit_errors += int(errs[j].sum())
                if cfg.max_frame_errors and frame_errors >= cfg.max_frame_errors:
                    done = True
                    break
    wall = time.perf_counter() - t0
    return ResultRow(
        snr_db=snr_db,
        frames=frames,
        frame_errors=frame_errors,
        bit_errors=bit_errors,
        fer=frame_errors / frames,
        ber=bit_errors / (frames * k),
        wall_time_s=wall,
    )


def run_experiment(
    cfg: ExperimentConfig,
    out_path=None,
    resume: bool = True,
    progress=None,
    threads: int = 1,
) -> list[ResultRow]:
    """Simulate every SNR point, appending rows to ``out_path`` as CSV.

    With ``resume``, points whose rows already exist in the output file
    are kept verbatim and skipped (per-SNR-point granularity).  SNR
    points may run on a thread pool; per-frame RNG streams make the rows
    identical for any worker count."""
    existing: dict[float, ResultRow] = {}
    if out_path is not None and resume:
        try:
            for row in read_results(out_path):
                existing[row.snr_db] = row
        except FileNotFoundError:
            pass

    todo = [si for si, snr in enumerate(cfg.snr_grid) if float(snr) not in existing]
    results: dict[int, ResultRow] = {}
    if threads > 1 and len(todo) > 1:
        from concurrent.futures import ThreadPoolExecutor

        def work(si):
            # one engine per point: decode state is not shareable
            return si, _simulate_point(cfg, si, _Engine(cfg.spec))

        with ThreadPoolExecutor(max_workers=threads) as ex:
            for si, row in ex.map(work, todo):
                results[si] = row
        rows = [
            existing.get(float(snr)) or results[si]
            for si, snr in enumerate(cfg.snr_grid)
        ]
        if progress is not None:
            for r in rows:
                progress(r)
        if out_path is not None:
            write_results(out_path, rows)
        return rows

    rows: list[ResultRow] = []
    for si, snr in enumerate(cfg.snr_grid):
        if float(snr) in existing:
            rows.append(existing[float(snr)])
        else:
            rows.append(_simulate_point(cfg, si, _Engine(cfg.spec)))
        if progress is not None:
            progress(rows[-1])
        if out_path is not None:
            write_results(out_path, rows)
    return rows


def write_results(path, rows: list[ResultRow]) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(CSV_HEADER + "\n")
        for r in rows:
            f.write(r.to_csv() + "\n")


def read_results(path) -> list[ResultRow]:
    with open(path, "r", encoding="ascii") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        return []
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {lines[0]!r}")
    return [ResultRow.from_csv(ln) for ln in lines[1:]]


def parse_snr_grid(text: str) -> list[float]:
    """Parse 'A:B:STEP' (inclusive ends) or a comma-separated list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad SNR range {text!r}; want A:B:STEP")
        a, b, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("SNR step must be positive")
        out = []
        v = a
        while v <= b + 1e-9:
            out.append(round(v, 9))
            v += step
        return out
    return [float(p) for p in text.split(",") if p.strip()]
