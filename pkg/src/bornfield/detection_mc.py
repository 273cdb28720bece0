"""Seeded Monte Carlo photodetection.

Counts are drawn by inverse-CDF lookup on the cumulative pmf.  The sample
budget is cut into fixed chunks of ``CHUNK`` draws; chunk ``k`` of a run with
seed ``s`` uses numpy's PCG64 bit generator seeded from
``SeedSequence(entropy=s, spawn_key=(k,))``.  The chunk layout does not depend
on the number of workers, so a record is reproducible from
``(pmf, n_samples, seed)`` alone.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .probability_rules import CountPMF

CHUNK = 1 << 16
RNG_NAME = "numpy.PCG64/SeedSequence(entropy=seed, spawn_key=(chunk,))"


class DetectionError(ValueError):
    pass


def substream(seed: int, k: int) -> np.random.Generator:
    """Generator for chunk ``k`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(k),))
    return np.random.Generator(np.random.PCG64(ss))


def pmf_id(pmf: CountPMF) -> str:
    """Short content hash identifying the sampled pmf."""
    return hashlib.sha256(np.ascontiguousarray(pmf.probs).tobytes()).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class DetectionRecord:
    counts: np.ndarray
    seed: int
    n_samples: int
    pmf_id: str
    sample_mean: float
    sample_stderr: float

    def __eq__(self, other):
        if not isinstance(other, DetectionRecord):
            return NotImplemented
        return self.summary() == other.summary() and np.array_equal(self.counts, other.counts)

    __hash__ = None

    @property
    def total_counts(self) -> int:
        return int(self.counts.sum())

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "n_samples": self.n_samples,
            "pmf_id": self.pmf_id,
            "mean": self.sample_mean,
            "stderr": self.sample_stderr,
            "rng": RNG_NAME,
        }


def record_from_counts(counts, seed: int, pmf_ref: str = "") -> DetectionRecord:
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or counts.size == 0:
        raise DetectionError("a detection record needs at least one count")
    if np.any(counts < 0):
        raise DetectionError("counts must be non-negative")
    n = counts.size
    total = int(counts.sum())
    mean = total / n
    if n > 1:
        # exact integer sums keep the variance free of cancellation
        sq = int(np.dot(counts, counts))
        var = (n * sq - total * total) / (n * (n - 1))
    else:
        var = 0.0
    counts = counts.copy()
    counts.setflags(write=False)
    return DetectionRecord(counts, int(seed), n, pmf_ref, mean, math.sqrt(max(var, 0.0) / n))


def _draw(cdf: np.ndarray, size: int, seed: int, k: int) -> np.ndarray:
    u = substream(seed, k).random(size)
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def sample_counts(pmf: CountPMF, n_samples: int, seed: int, workers: int = 1) -> DetectionRecord:
    """Draw ``n_samples`` i.i.d. photon counts from ``pmf``."""
    if n_samples < 1:
        raise DetectionError(f"n_samples must be >= 1, got {n_samples}")
    cdf = np.cumsum(pmf.probs)
    cdf[-1] = 1.0
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _draw(cdf, job[1], seed, job[0]), jobs))
    else:
        parts = [_draw(cdf, size, seed, k) for k, size in jobs]
    return record_from_counts(np.concatenate(parts), seed, pmf_id(pmf))


def infer_amplitude(record: DetectionRecord) -> tuple[float, float]:
    """Field amplitude ``sqrt(<n>)`` and its delta-method error."""
    if record.n_samples < 1:
        raise DetectionError("empty detection record")
    if record.sample_mean < 0:
        raise DetectionError("negative sample mean")
    amp = math.sqrt(record.sample_mean)
    if amp > 0:
        return amp, record.sample_stderr / (2.0 * amp)
    return 0.0, math.sqrt(record.sample_stderr)


def detection_energy(record: DetectionRecord, omega: float, hbar: float = 1.0) -> float:
    """Total absorbed energy ``sum(n) * hbar * omega`` implied by the counts."""
    if not omega > 0:
        raise DetectionError(f"omega must be positive, got {omega!r}")
    return record.total_counts * hbar * omega
