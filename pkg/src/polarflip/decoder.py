"""SC and CA-SCL decoding with full tracing of every 2L -> L path selection.

The trace keeps, for each information bit, the reserved candidates in
ascending-metric order together with the metrics of the candidates that were
thrown away; every flip-ordering metric downstream is computed from it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .codes import PolarCode, _as_bits, crc_check


def pm_increment(current_pm: float, decision_bit: int, decision_llr: float) -> float:
    """Path-metric update ln(1 + exp(-(1-2u)*L)), numerically stabilized."""
    x = (2.0 * decision_bit - 1.0) * decision_llr
    return current_pm + max(x, 0.0) + np.log1p(np.exp(-abs(x)))


@dataclass
class SclSnapshot:
    """One 2L -> L selection: both halves of the candidate set, sorted."""

    info_index: int                    # 1-based bit position
    pm_reserved: np.ndarray            # (L,) ascending
    pm_discarded: np.ndarray           # (L,) ascending
    decision_llrs_reserved: np.ndarray
    decisions_reserved: np.ndarray


@dataclass
class SclTrace:
    """Per-information-bit record of one SCL run.

    Row k describes the k-th information bit: reserved-path decisions,
    parent ranks, decision LLRs and metrics, in ascending-metric order.
    Rows from n_growth on carry the discarded candidates' metrics as well.
    """

    info_indices: np.ndarray           # (K,) 1-based
    list_size: int
    n_growth: int                      # initial bits where the list doubled
    decisions: np.ndarray              # (K, L) uint8
    parents: np.ndarray                # (K, L) rank of each survivor's parent
    decision_llrs: np.ndarray          # (K, L)
    pm_reserved: np.ndarray            # (K, L)
    pm_info: np.ndarray                # (K, L) metric restricted to info bits
    pm_discarded: np.ndarray           # (K, L), valid from row n_growth on
    active: np.ndarray                 # (K,) live paths after each row

    @property
    def first_split_indices(self) -> tuple[int, ...]:
        return tuple(int(i) for i in self.info_indices[:self.n_growth])

    @property
    def selection_rows(self) -> np.ndarray:
        return np.arange(self.n_growth, self.info_indices.size)

    @property
    def snapshots(self) -> list[SclSnapshot]:
        return [
            SclSnapshot(
                info_index=int(self.info_indices[k]),
                pm_reserved=self.pm_reserved[k],
                pm_discarded=self.pm_discarded[k],
                decision_llrs_reserved=self.decision_llrs[k],
                decisions_reserved=self.decisions[k],
            )
            for k in self.selection_rows
        ]


@dataclass
class DecodeOutcome:
    message: np.ndarray                # (K,) info bits incl. CRC field
    crc_ok: bool
    trace: SclTrace | None
    chosen_path_pm: float


def _validate_flip(code: PolarCode, list_size: int, flip_directive: int) -> int:
    n_growth = int(np.log2(list_size))
    if flip_directive not in code.info_set:
        raise ValueError(f"flip index {flip_directive} is not an information position")
    if flip_directive in code.info_set[:n_growth]:
        raise ValueError(
            f"flip index {flip_directive} falls in the first log2(L) information "
            "bits, where no candidates are discarded")
    return flip_directive - 1


def scl_decode(code: PolarCode, llrs: np.ndarray, list_size: int,
               flip_directive: int | None = None,
               min_sum: bool = False) -> DecodeOutcome:
    """CRC-aided successive cancellation list decoding.

    Parameters
    ----------
    llrs : channel LLRs in codeword order.
    list_size : number of surviving paths L, a power of two.
    flip_directive : 1-based information position at which the selection
        keeps the L discarded candidates instead of the L best ones.
    min_sum : replace the exact check-node update with min-sum.

    Returns the lowest-metric CRC-passing path, or the lowest-metric path
    with crc_ok=False when none passes.
    """
    if list_size < 1 or list_size & (list_size - 1):
        raise ValueError(f"list size must be a power of two, got {list_size}")
    flip_leaf = -1
    if flip_directive is not None:
        flip_leaf = _validate_flip(code, list_size, flip_directive)

    n_bits, k, L = code.n_bits, code.k_info, list_size
    llrs = np.asarray(llrs, dtype=np.float64)
    if llrs.shape != (n_bits,):
        raise ValueError(f"expected {n_bits} channel LLRs")
    llr_tree = llrs[code._bitrev]

    uhat = np.empty((L, n_bits), dtype=np.uint8)
    pm_out = np.empty(L)
    decisions = np.zeros((k, L), dtype=np.uint8)
    parents = np.zeros((k, L), dtype=np.int32)
    dllr = np.zeros((k, L))
    pm_res = np.zeros((k, L))
    pm_info = np.zeros((k, L))
    pm_disc = np.zeros((k, L))
    active = np.zeros(k, dtype=np.int32)

    n_live = _kernels.scl_kernel(llr_tree, code._frozen_u8, L, flip_leaf,
                                 not min_sum, uhat, pm_out,
                                 decisions, parents, dllr, pm_res, pm_info,
                                 pm_disc, active)

    trace = SclTrace(info_indices=code.info_positions0 + 1, list_size=L,
                     n_growth=int(np.log2(L)), decisions=decisions,
                     parents=parents, decision_llrs=dllr, pm_reserved=pm_res,
                     pm_info=pm_info, pm_discarded=pm_disc, active=active)

    messages = uhat[:n_live][:, code.info_positions0]
    best, best_ok = 0, False
    if code.crc is not None:
        for r in range(n_live):
            if _kernels.crc_passes(messages[r], code.crc.poly, code.crc.width,
                                   code.crc.init):
                best, best_ok = r, True
                break
    return DecodeOutcome(message=messages[best], crc_ok=best_ok, trace=trace,
                         chosen_path_pm=float(pm_out[best]))


# ---------------------------------------------------------------------------
# successive cancellation (independent of the list kernel; also the L=1 oracle)

def _f_exact(a, b):
    m = np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))
    return m + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def _f_minsum(a, b):
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def _sc_recurse(llr, frozen, f):
    """Batched SC on one subtree; returns (decisions, partial sums), (B, M)."""
    if llr.shape[1] == 1:
        if frozen[0]:
            u = np.zeros_like(llr, dtype=np.uint8)
        else:
            u = (llr < 0).astype(np.uint8)
        return u, u
    half = llr.shape[1] // 2
    a, b = llr[:, :half], llr[:, half:]
    u_left, x_left = _sc_recurse(f(a, b), frozen[:half], f)
    u_right, x_right = _sc_recurse(b + (1.0 - 2.0 * x_left) * a, frozen[half:], f)
    return (np.concatenate([u_left, u_right], axis=1),
            np.concatenate([x_left ^ x_right, x_right], axis=1))


def sc_decode_batch(code: PolarCode, llrs: np.ndarray,
                    min_sum: bool = False) -> np.ndarray:
    """Hard-decision SC over a (B, N) batch of frames; returns (B, K) messages."""
    llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
    f = _f_minsum if min_sum else _f_exact
    u, _ = _sc_recurse(llrs[:, code._bitrev], code.frozen_mask, f)
    return u[:, code.info_positions0]


def sc_decode(code: PolarCode, llrs: np.ndarray, min_sum: bool = False) -> DecodeOutcome:
    """Plain successive cancellation decoding of a single frame."""
    message = sc_decode_batch(code, llrs, min_sum=min_sum)[0]
    ok = crc_check(message, code.crc) if code.crc is not None else False
    return DecodeOutcome(message=message, crc_ok=ok, trace=None,
                         chosen_path_pm=float("nan"))


def dump_trace_csv(traces, fileobj) -> None:
    """Debug dump: one row per selection with reserved and discarded metrics."""
    writer = csv.writer(fileobj)
    first = traces[0] if traces else None
    L = first.list_size if first else 0
    writer.writerow(["frame", "info_index"]
                    + [f"pm_reserved_{i}" for i in range(L)]
                    + [f"pm_discarded_{i}" for i in range(L)])
    for frame, trace in enumerate(traces):
        for k in trace.selection_rows:
            writer.writerow([frame, int(trace.info_indices[k])]
                            + [repr(v) for v in trace.pm_reserved[k]]
                            + [repr(v) for v in trace.pm_discarded[k]])
