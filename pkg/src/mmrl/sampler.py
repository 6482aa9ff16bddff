"""Symmetric stable variates and the finest-level multistable increment sheet.

Randomness is counter based: a 64-bit key is derived from ``(seed, replica)``
and entry ``l`` of a sheet reads the two uniforms at counters ``2l+1`` and
``2l+2`` of that key. Sheets are therefore pure functions of
``(seed, replica, J, alpha)`` and can be generated in any order or split.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .errors import DomainError, ResourceError
from .kernel_haar import HaarIndex, block_sums, haar_analysis
from .params import AlphaFunction

SHEET_GUARD = 26
# replicas per work unit; fixed so results do not depend on the thread count
CHUNK = 64

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_SEED_SALT = 0x243F6A8885A308D3


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, replica: int = 0, tag: int = 0) -> int:
    """64-bit stream key for ``(seed, replica, tag)``."""
    if seed < 0 or replica < 0 or tag < 0:
        raise DomainError("seed, replica and tag must be nonnegative")
    k = _mix64(_mix64(seed ^ _SEED_SALT) + (replica + 1) * _GAMMA)
    return _mix64(k + tag * _GAMMA) if tag else k


class Stream:
    """Sequential reader over one counter stream."""

    def __init__(self, seed: int, replica: int = 0, tag: int = 0):
        self.key = stream_key(seed, replica, tag)
        self.position = 0

    def uniform_pairs(self, n: int):
        u1, u2 = kernels.uniform_pairs(self.key, self.position, n)
        self.position += n
        return u1, u2


def _cms(alpha0, scale, u1, u2):
    u = np.pi * (u1 - 0.5)
    w = -np.log(u2)
    if alpha0 == 2.0:
        return 2.0 * scale * np.sin(u) * np.sqrt(w)
    if alpha0 == 1.0:
        return scale * np.tan(u)
    return (scale * np.sin(alpha0 * u) / np.cos(u) ** (1.0 / alpha0)
            * (np.cos((1.0 - alpha0) * u) / w) ** ((1.0 - alpha0) / alpha0))


def sample_sas(alpha0: float, scale: float, stream: Stream, size=None):
    """SaS(alpha0) draws with characteristic function ``exp(-scale**alpha0 |xi|**alpha0)``."""
    if not 0.0 < alpha0 <= 2.0:
        raise DomainError(f"stability index must lie in (0, 2], got {alpha0}")
    if scale < 0.0:
        raise DomainError(f"scale must be nonnegative, got {scale}")
    n = 1 if size is None else int(np.prod(size))
    u1, u2 = stream.uniform_pairs(n)
    out = _cms(float(alpha0), float(scale), u1, u2)
    if scale == 0.0:
        out = np.zeros(n)
    return float(out[0]) if size is None else out.reshape(size)


def _check_level(J: int) -> None:
    if J < 1:
        raise DomainError(f"sheet level must be >= 1, got {J}")
    if J > SHEET_GUARD:
        raise ResourceError(f"sheet level {J} exceeds the guard {SHEET_GUARD}")


def sheet_laws(alpha: AlphaFunction, J: int):
    """Per-entry stability index ``alpha(2**-J l)`` and scale ``(2**-J)**(1/alpha)``."""
    _check_level(J)
    n = 1 << J
    a = np.ascontiguousarray(alpha(np.arange(n) / n), dtype=float)
    return a, np.ascontiguousarray(2.0 ** (-J / a))


@dataclass(frozen=True)
class IncrementSheet:
    level: int
    increments: np.ndarray = field(repr=False)
    seed: int = 0
    replica_index: int = 0
    alpha_snapshot: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.increments.shape != (1 << self.level,):
            raise DomainError(f"sheet of level {self.level} needs {1 << self.level} entries")
        self.increments.setflags(write=False)

    @property
    def J(self) -> int:
        return self.level

    @classmethod
    def from_values(cls, values, seed: int = 0, replica_index: int = 0) -> "IncrementSheet":
        values = np.array(values, dtype=float)
        return cls(values.size.bit_length() - 1, values, seed, replica_index)


def _keys(seed: int, replicas) -> np.ndarray:
    return np.array([stream_key(seed, int(r)) for r in replicas], dtype=np.uint64)


def _fan_out(work, chunks, threads: int):
    if threads <= 1 or len(chunks) <= 1:
        return [work(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(work, chunks))


def _chunks(replicas):
    replicas = list(replicas)
    return [replicas[i:i + CHUNK] for i in range(0, len(replicas), CHUNK)]


def sample_sheets(alpha: AlphaFunction, J: int, seed: int, replicas, threads: int = 1) -> np.ndarray:
    """Increment sheets for several replicas, shape ``(len(replicas), 2**J)``."""
    a, scale = sheet_laws(alpha, J)

    def work(chunk):
        out = np.empty((len(chunk), a.size))
        kernels.sas_sheets(_keys(seed, chunk), a, scale, out)
        return out

    parts = _fan_out(work, _chunks(replicas), threads)
    return np.concatenate(parts) if parts else np.empty((0, a.size))


def project_sheets(alpha: AlphaFunction, J: int, seed: int, replicas, weights,
                   threads: int = 1) -> np.ndarray:
    """``weights @ sheet`` for each replica without keeping the sheets, shape ``(R, m)``."""
    a, scale = sheet_laws(alpha, J)
    weights = np.ascontiguousarray(np.atleast_2d(weights), dtype=float)
    if weights.shape[1] != a.size:
        raise DomainError(f"weights need {a.size} columns, got {weights.shape[1]}")

    def work(chunk):
        out = np.empty((len(chunk), weights.shape[0]))
        kernels.sas_project(_keys(seed, chunk), a, scale, weights, out)
        return out

    parts = _fan_out(work, _chunks(replicas), threads)
    return np.concatenate(parts) if parts else np.empty((0, weights.shape[0]))


def sample_increment_sheet(alpha: AlphaFunction, J: int, seed: int, replica_index: int = 0) -> IncrementSheet:
    values = sample_sheets(alpha, J, seed, [replica_index])[0]
    return IncrementSheet(J, values, seed, replica_index, sheet_laws(alpha, J)[0])


def coarsen(sheet: IncrementSheet, level: int) -> np.ndarray:
    """Level-``level`` increments: sums of consecutive blocks of the sheet."""
    if not 0 <= level <= sheet.level:
        raise DomainError(f"level must lie in [0, {sheet.level}], got {level}")
    return block_sums(sheet.increments, level)


def eta_from_sheet(sheet: IncrementSheet) -> float:
    return float(np.sum(sheet.increments))


def epsilon_level(increments: np.ndarray, j: int) -> np.ndarray:
    """All ``eps_{j,k}`` (k along the last axis) from finest-level increments."""
    J = increments.shape[-1].bit_length() - 1
    if not 0 <= j < J:
        raise DomainError(f"scale j={j} must be below the sheet level {J}")
    halves = block_sums(increments, j + 1)
    return halves[..., 0::2] - halves[..., 1::2]


def epsilon_from_sheet(sheet: IncrementSheet, idx: HaarIndex) -> float:
    if idx.j >= sheet.level:
        raise DomainError(f"scale j={idx.j} must be below the sheet level {sheet.level}")
    return float(epsilon_level(sheet.increments, idx.j)[idx.k])


def haar_randomness(increments: np.ndarray) -> np.ndarray:
    """Packed ``(eta, eps_{0,0}, eps_{1,0}, eps_{1,1}, ...)`` along the last axis."""
    return haar_analysis(increments, weighted=False)


@dataclass(frozen=True)
class MartingaleTrace:
    j: int
    tau: np.ndarray = field(repr=False)
    max_abs: float = 0.0


def martingale_trace(sheet: IncrementSheet, j: int) -> MartingaleTrace:
    tau = np.cumsum(epsilon_level(sheet.increments, j))
    return MartingaleTrace(j, tau, float(np.max(np.abs(tau))))


def doob_statistic(increments, zeta: float, j_max: int) -> np.ndarray:
    """Per-row ``max_{j <= j_max} (1+j)**-zeta max_k |tau_{j,k}|``."""
    x = np.atleast_2d(np.asarray(increments, dtype=float))
    J = x.shape[-1].bit_length() - 1
    if j_max >= J:
        raise DomainError(f"j_max={j_max} must be below the sheet level {J}")
    stat = np.zeros(x.shape[0])
    s = block_sums(x, j_max + 1)
    for j in range(j_max, -1, -1):
        tau = np.cumsum(s[:, 0::2] - s[:, 1::2], axis=1)
        stat = np.maximum(stat, (1.0 + j) ** -zeta * np.abs(tau).max(axis=1))
        s = s[:, 0::2] + s[:, 1::2]
    return stat


# ---------------------------------------------------------------------------
# binary replay files

_MAGIC = b"MMRLSHT\0"
_VERSION = 1
_HEADER = struct.Struct("<8sIIQQ")


def write_sheet(path, sheet: IncrementSheet) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, sheet.level, sheet.seed, sheet.replica_index))
        fh.write(np.asarray(sheet.increments, dtype="<f8").tobytes())


def read_sheet(path) -> IncrementSheet:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DomainError("truncated sheet header")
        magic, version, J, seed, replica = _HEADER.unpack(head)
        if magic != _MAGIC or version != _VERSION:
            raise DomainError("not a sheet file (bad magic or version)")
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != 1 << J:
        raise DomainError(f"sheet file holds {data.size} values, header says {1 << J}")
    return IncrementSheet(J, data.astype(float), seed, replica)
