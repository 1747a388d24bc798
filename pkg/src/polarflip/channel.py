"""BPSK over AWGN and the LLR front end for the decoder.

Noise is drawn from a counter-based generator keyed on (master seed,
frame index), so any frame can be regenerated independently of worker
scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .codes import LLR_MAX, _as_bits


def ebn0_to_sigma(ebn0_db: float, code_rate: float) -> float:
    """Noise standard deviation for a given Eb/N0 and code rate."""
    if not 0.0 < code_rate <= 1.0:
        raise ValueError(f"code rate must be in (0, 1], got {code_rate}")
    return float(np.sqrt(1.0 / (2.0 * code_rate * 10.0 ** (ebn0_db / 10.0))))


@dataclass(frozen=True)
class ChannelParams:
    ebn0_db: float
    code_rate: float
    seed: int = 0
    sigma: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma", ebn0_to_sigma(self.ebn0_db, self.code_rate))


def frame_rng(seed: int, frame_index: int, stream: int = 0) -> np.random.Generator:
    """Independent, replayable random stream for one frame.

    stream separates uses that must not collide (0 = channel noise,
    1 = payload bits).
    """
    if not 0 <= frame_index < (1 << 62):
        raise ValueError("frame index out of range")
    key = np.array([seed % (1 << 64), (stream << 62) | frame_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def llr_from_symbols(y: np.ndarray, sigma: float) -> np.ndarray:
    """Channel LLRs 2y/sigma^2, clipped so downstream ln(1+e^x) stays finite."""
    return np.clip(2.0 * y / (sigma * sigma), -LLR_MAX, LLR_MAX)


def transmit(codeword, params: ChannelParams, frame_index: int = 0) -> np.ndarray:
    """Modulate, add noise and return per-position channel LLRs."""
    bits = _as_bits(codeword)
    rng = frame_rng(params.seed, frame_index)
    symbols = 1.0 - 2.0 * bits.astype(np.float64)
    y = symbols + rng.normal(0.0, params.sigma, bits.size)
    return llr_from_symbols(y, params.sigma)
