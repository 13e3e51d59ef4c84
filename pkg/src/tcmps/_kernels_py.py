"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``.

Both implementations must agree to rounding; ``tests/test_kernels.py``
checks them against each other.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
from scipy import signal

# gate codes shared with the compiled module
RZ, H, CRZ, SWAP = 0, 1, 2, 3

_SQ = 1.0 / math.sqrt(2.0)


def ar1_filter(x: np.ndarray, r: float, y0: float) -> np.ndarray:
    """``y[0] = y0``, ``y[k] = r y[k-1] + x[k-1]``; returns ``len(x) + 1`` values."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.size + 1)
    out[0] = y0
    if x.size:
        out[1:], _ = signal.lfilter([1.0], [1.0, -r], x, zi=[r * y0])
    return out


def _two_site(code: int, angle: float) -> np.ndarray:
    if code == CRZ:
        return np.diag([1.0, 1.0, 1.0, cmath.exp(1j * angle)])
    return np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


_HL = np.kron(np.array([[1, 1], [1, -1]]) * _SQ, np.eye(2)).astype(complex)
_HR = np.kron(np.eye(2), np.array([[1, 1], [1, -1]]) * _SQ).astype(complex)


def fuse_gates(codes, sites, angles, n_sites: int):
    """Collapse a gate list into blocks for an MPS sweep.

    Returns ``(kind, site, mats, phases)``: ``kind[b]`` is 1 for a one-site
    block (matrix in ``mats[b, :2, :2]``) and 2 for a block on
    ``(site, site + 1)``; ``phases`` are leftover ``RZ`` angles per site to be
    applied after all blocks.
    """
    n = len(codes)
    kinds = np.zeros(n + 1, dtype=np.int8)
    bsite = np.zeros(n + 1, dtype=np.int32)
    mats = np.zeros((n + 1, 4, 4), dtype=complex)
    phase = [0.0] * n_sites
    nb = 0
    psite = -1
    pend = None
    for c, s, a in zip(codes.tolist(), sites.tolist(), angles.tolist()):
        if c == RZ:
            if psite >= 0 and (s == psite or s == psite + 1):
                lo, hi = cmath.exp(-0.5j * a), cmath.exp(0.5j * a)
                if s == psite:
                    pend[:2] *= lo
                    pend[2:] *= hi
                else:
                    pend[0::2] *= lo
                    pend[1::2] *= hi
            else:
                phase[s] += a
        elif c == H:
            if psite >= 0 and (s == psite or s == psite + 1):
                pend = (_HL if s == psite else _HR) @ pend
            else:
                h = 0.5 * phase[s]
                phase[s] = 0.0
                lo, hi = cmath.exp(-1j * h) * _SQ, cmath.exp(1j * h) * _SQ
                kinds[nb] = 1
                bsite[nb] = s
                mats[nb, :2, :2] = [[lo, hi], [lo, -hi]]
                nb += 1
        else:
            g = _two_site(c, a)
            if psite == s:
                pend = g @ pend
            else:
                if psite >= 0:
                    kinds[nb], bsite[nb], mats[nb] = 2, psite, pend
                    nb += 1
                ha, hb = 0.5 * phase[s], 0.5 * phase[s + 1]
                phase[s] = phase[s + 1] = 0.0
                pre = np.array([cmath.exp(-1j * (ha + hb)), cmath.exp(-1j * (ha - hb)),
                                cmath.exp(1j * (ha - hb)), cmath.exp(1j * (ha + hb))])
                pend = g * pre[None, :]
                psite = s
    if psite >= 0:
        kinds[nb], bsite[nb], mats[nb] = 2, psite, pend
        nb += 1
    return kinds[:nb], bsite[:nb], mats[:nb], np.array(phase)
