"""Vectorized numpy backend for the per-trial simulation loop.

Implements exactly the same counter-based draw sequence as the compiled
backend (see _simkernel.pyx): image i of a trial consumes stream values at
counters 2*i (ground truth) and 2*i+1 (filter decision), where value(key, j)
is the SplitMix64 finalizer applied to key + (j+1)*GAMMA modulo 2**64 and
uniforms take the top 53 bits. Because every draw is addressed by counter,
results are independent of batch size, chunking, and scheduling, and the two
backends agree bit for bit.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_TWO = np.uint64(2)
_U53 = 2.0 ** -53

_CHUNK = 1 << 20


def _values(key: int, counters: np.ndarray) -> np.ndarray:
    """Stream values at the given uint64 counters."""
    z = np.uint64(key) + (counters + _ONE) * _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _uniforms(key: int, counters: np.ndarray) -> np.ndarray:
    return (_values(key, counters) >> np.uint64(11)).astype(np.float64) * _U53


def draw_images(
    key: int,
    start: int,
    count: int,
    p_clean: float,
    pass_clean: float,
    pass_defect: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-image (is_clean, passed_filter) booleans for images [start, start+count).

    Exposed for validation: rebuilding a trial's outcomes image by image must
    reproduce the counts any backend reports for the same key.
    """
    idx = np.arange(start, start + count, dtype=np.uint64)
    truth_counters = idx * _TWO
    clean = _uniforms(key, truth_counters) < p_clean
    threshold = np.where(clean, pass_clean, pass_defect)
    passed = _uniforms(key, truth_counters + _ONE) < threshold
    return clean, passed


def _count(clean: np.ndarray, passed: np.ndarray) -> tuple[int, int, int, int]:
    tp = int(np.count_nonzero(clean & passed))
    fp = int(np.count_nonzero(~clean & passed))
    fn = int(np.count_nonzero(clean & ~passed))
    tn = int(np.count_nonzero(~clean & ~passed))
    return tp, fp, tn, fn


def run_fixed(
    key: int, n_gen: int, p_clean: float, pass_clean: float, pass_defect: float
) -> tuple[int, int, int, int, int]:
    """Simulate a fixed number of generated images; returns (n_gen, tp, fp, tn, fn)."""
    tp = fp = tn = fn = 0
    start = 0
    while start < n_gen:
        count = min(_CHUNK, n_gen - start)
        clean, passed = draw_images(key, start, count, p_clean, pass_clean, pass_defect)
        dtp, dfp, dtn, dfn = _count(clean, passed)
        tp += dtp
        fp += dfp
        tn += dtn
        fn += dfn
        start += count
    return n_gen, tp, fp, tn, fn


def run_target(
    key: int,
    target: int,
    cap: int,
    batch: int,
    p_clean: float,
    pass_clean: float,
    pass_defect: float,
) -> tuple[int, int, int, int, int, bool]:
    """Generate until ``target`` images are accepted or ``cap`` images were generated.

    Batches amortize the vectorized draws; the final batch is truncated at
    the exact image that reaches the target, so the accepted count equals the
    target when it is reached. Returns (n_gen, tp, fp, tn, fn, reached).
    """
    tp = fp = tn = fn = 0
    start = 0
    while start < cap:
        count = min(batch, cap - start)
        clean, passed = draw_images(key, start, count, p_clean, pass_clean, pass_defect)
        accepted = clean & passed
        cum = np.cumsum(accepted)
        need = target - tp
        if cum.size and int(cum[-1]) >= need:
            cut = int(np.searchsorted(cum, need)) + 1
            dtp, dfp, dtn, dfn = _count(clean[:cut], passed[:cut])
            return start + cut, tp + dtp, fp + dfp, tn + dtn, fn + dfn, True
        dtp, dfp, dtn, dfn = _count(clean, passed)
        tp += dtp
        fp += dfp
        tn += dtn
        fn += dfn
        start += count
    return start, tp, fp, tn, fn, False
