"""Polar code construction, encoding, CRC handling and critical-set derivation.

Bit positions in every public interface are 1-based (u_1 .. u_N); numpy
arrays passed around as bit vectors are plain uint8 arrays of 0/1.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

#: Channel LLR clip magnitude (natural-log units).
LLR_MAX = _kernels.LLR_MAX

# 3GPP CRC24A generator (MSB-first, implicit leading 1).
CRC24_POLY = 0x864CFB


@dataclass(frozen=True)
class CrcSpec:
    """Cyclic redundancy check: generator polynomial with implicit leading 1."""

    width: int
    poly: int
    init: int = 0

    def __post_init__(self):
        if self.width not in (8, 16, 24):
            raise ValueError(f"unsupported CRC width {self.width}")
        if not 0 < self.poly < (1 << self.width):
            raise ValueError("poly must have degree equal to width")
        if not 0 <= self.init < (1 << self.width):
            raise ValueError("init out of range")


CRC24 = CrcSpec(width=24, poly=CRC24_POLY, init=0)


@dataclass(eq=False)
class PolarCode:
    """Static description of one (N, K) polar code.

    Immutable by convention once constructed; safe to share across workers.
    """

    n_bits: int
    k_info: int
    info_set: tuple[int, ...]          # 1-based, sorted
    frozen_mask: np.ndarray            # bool, natural 0-based order
    crc: CrcSpec | None
    critical_set: tuple[int, ...]      # 1-based, sorted
    design_snr_db: float

    def __post_init__(self):
        self.info_positions0 = np.asarray(self.info_set, dtype=np.int64) - 1
        self._frozen_u8 = self.frozen_mask.astype(np.uint8)
        self._bitrev = _kernels.bitrev_permutation(self.n_bits)

    @property
    def code_rate(self) -> float:
        return self.k_info / self.n_bits

    @property
    def payload_bits(self) -> int:
        """Message bits carried per block, CRC excluded."""
        return self.k_info - (self.crc.width if self.crc else 0)

    def to_json(self) -> str:
        doc = {
            "format_version": 1,
            "n_bits": self.n_bits,
            "k_info": self.k_info,
            "info_set": list(self.info_set),
            "crc": None if self.crc is None else {
                "width": self.crc.width, "poly": self.crc.poly, "init": self.crc.init,
            },
            "critical_set": list(self.critical_set),
            "design_snr_db": self.design_snr_db,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PolarCode":
        doc = json.loads(text)
        if doc.get("format_version") != 1:
            raise ValueError(f"unsupported code document version {doc.get('format_version')}")
        info_set = tuple(doc["info_set"])
        n_bits = doc["n_bits"]
        frozen = np.ones(n_bits, dtype=bool)
        frozen[np.asarray(info_set) - 1] = False
        crc = None
        if doc["crc"] is not None:
            crc = CrcSpec(width=doc["crc"]["width"], poly=doc["crc"]["poly"],
                          init=doc["crc"]["init"])
        return cls(n_bits=n_bits, k_info=doc["k_info"], info_set=info_set,
                   frozen_mask=frozen, crc=crc,
                   critical_set=tuple(doc["critical_set"]),
                   design_snr_db=doc["design_snr_db"])


def code_fingerprint(code: PolarCode, list_size: int) -> dict:
    """Identity tying model weights and datasets to one (code, L) pair."""
    cs = ",".join(str(i) for i in code.critical_set)
    digest = hashlib.sha256(
        f"{code.n_bits}:{code.k_info}:{list_size}:{cs}".encode()).hexdigest()[:16]
    return {"n_bits": code.n_bits, "k_info": code.k_info,
            "list_size": list_size, "cs_hash": digest}


# ---------------------------------------------------------------------------
# construction

def _phi(x: float) -> float:
    # Chung's approximation of E[tanh(L/2)] under L ~ N(x, 2x)
    if x < 1e-12:
        return 1.0
    if x < 10.0:
        return math.exp(-0.4527 * x ** 0.86 + 0.0218)
    return math.sqrt(math.pi / x) * math.exp(-x / 4.0) * (1.0 - 10.0 / (7.0 * x))


def _phi_inv(y: float) -> float:
    # numeric inverse of the monotone-decreasing _phi on (0, 1]
    if y >= 1.0:
        return 0.0
    lo, hi = 0.0, 10.0
    while _phi(hi) > y:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _phi(mid) > y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ga_channel_means(n_bits: int, k_info: int, design_snr_db: float) -> np.ndarray:
    """Mean decision LLR of each synthetic channel under Gaussian approximation.

    Natural bit order matching the decoder schedule: at every polarization
    level the check-node branch takes index bit 0 and the variable-node
    branch bit 1, most significant bit first.
    """
    rate = k_info / n_bits
    sigma_sq = 1.0 / (2.0 * rate * 10.0 ** (design_snr_db / 10.0))
    means = np.array([2.0 / sigma_sq])
    while means.size < n_bits:
        nxt = np.empty(means.size * 2)
        for i, m in enumerate(means):
            nxt[2 * i] = _phi_inv(1.0 - (1.0 - _phi(m)) ** 2)
            nxt[2 * i + 1] = 2.0 * m
        means = nxt
    return means


def construct_code(n_bits: int, k_info: int, crc: CrcSpec | None = None,
                   design_snr_db: float = 2.0) -> PolarCode:
    """Build a PolarCode with the k_info most reliable synthetic channels.

    Parameters
    ----------
    n_bits : block length N, a power of two.
    k_info : non-frozen positions, CRC bits counted inside.
    crc : CRC attached to the tail of the message, or None.
    design_snr_db : Eb/N0 design point of the reliability ordering.
    """
    if n_bits < 2 or n_bits & (n_bits - 1):
        raise ValueError(f"N must be a power of two, got {n_bits}")
    if not 0 < k_info <= n_bits:
        raise ValueError(f"K must be in 1..{n_bits}, got {k_info}")
    if crc is not None and crc.width >= k_info:
        raise ValueError("CRC width must be smaller than K")

    means = ga_channel_means(n_bits, k_info, design_snr_db)
    # total deterministic order: reliability descending, index ascending
    order = np.lexsort((np.arange(n_bits), -means))
    info0 = np.sort(order[:k_info])
    frozen = np.ones(n_bits, dtype=bool)
    frozen[info0] = False
    info_set = tuple(int(i) + 1 for i in info0)
    code = PolarCode(n_bits=n_bits, k_info=k_info, info_set=info_set,
                     frozen_mask=frozen, crc=crc, critical_set=(),
                     design_snr_db=design_snr_db)
    code.critical_set = critical_set_of(code)
    return code


def critical_set_of(code: PolarCode) -> tuple[int, ...]:
    """First leaf of every maximal all-information subtree, 1-based sorted.

    A subtree of the code tree is rate-1 when every leaf in its block is a
    non-frozen position; maximal ones are those whose parent is not rate-1.
    """
    frozen = code.frozen_mask
    out = []
    stack = [(0, code.n_bits)]
    while stack:
        start, size = stack.pop()
        if not frozen[start:start + size].any():
            out.append(start + 1)
        elif size > 1:
            half = size // 2
            stack.append((start + half, half))
            stack.append((start, half))
    return tuple(sorted(out))


# ---------------------------------------------------------------------------
# encoding and CRC

def _as_bits(vec, length: int | None = None) -> np.ndarray:
    bits = np.asarray(vec, dtype=np.uint8)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("bit vector must be 1-D and non-empty")
    if np.any(bits > 1):
        raise ValueError("bit vector entries must be 0 or 1")
    if length is not None and bits.size != length:
        raise ValueError(f"expected {length} bits, got {bits.size}")
    return bits


def encode(code: PolarCode, message) -> np.ndarray:
    """Polar-encode a K-bit message (CRC already attached) to the N-bit word.

    Computed as the in-place butterfly u * F^{(x)n} followed by the
    bit-reversal permutation.
    """
    message = _as_bits(message, code.k_info)
    u = np.zeros(code.n_bits, dtype=np.uint8)
    u[code.info_positions0] = message
    _kernels.butterfly(u)
    return u[code._bitrev]


def crc_attach(payload, crc: CrcSpec) -> np.ndarray:
    """Append the CRC remainder (MSB first) to the payload bits."""
    payload = _as_bits(payload)
    rem = _kernels.crc_remainder(payload, crc.poly, crc.width, crc.init)
    tail = np.array([(rem >> (crc.width - 1 - i)) & 1 for i in range(crc.width)],
                    dtype=np.uint8)
    return np.concatenate([payload, tail])


def crc_check(codeblock, crc: CrcSpec) -> bool:
    """True iff the block's trailing CRC field matches its payload."""
    codeblock = _as_bits(codeblock)
    if codeblock.size <= crc.width:
        raise ValueError("block shorter than the CRC field")
    return bool(_kernels.crc_passes(codeblock, crc.poly, crc.width, crc.init))
