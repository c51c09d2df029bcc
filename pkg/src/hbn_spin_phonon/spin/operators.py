from __future__ import annotations

from fractions import Fraction

import numpy as np

from hbn_spin_phonon.domain.spin import SpinOperatorSet
from hbn_spin_phonon.errors import DataError

SUPPORTED_SPINS = (Fraction(1, 2), Fraction(1))


def build_spin_operators(spin: Fraction | float) -> SpinOperatorSet:
    """
    Angular momentum matrices in the |m> basis ordered from m = +s down to m = -s.
    """
    s = Fraction(spin).limit_denominator(2)
    if s not in SUPPORTED_SPINS or abs(float(s) - float(spin)) > 1e-12:
        raise DataError(f"unsupported spin {spin}; expected 1/2 or 1")
    dim = int(2 * s + 1)
    m = float(s) - np.arange(dim, dtype=float)

    s_plus = np.zeros((dim, dim), dtype=complex)
    for b in range(dim - 1):
        mm = m[b + 1]
        s_plus[b, b + 1] = np.sqrt(float(s) * (float(s) + 1) - mm * (mm + 1))
    s_minus = s_plus.conj().T

    return SpinOperatorSet(
        dimension=dim,
        s_x=(s_plus + s_minus) / 2,
        s_y=(s_plus - s_minus) / 2j,
        s_z=np.diag(m).astype(complex),
        s_plus=s_plus,
        s_minus=s_minus,
    )


def embed(op: np.ndarray, index: int, dims: tuple[int, ...]) -> np.ndarray:
    """Lift a single-factor operator into the tensor-product space (factor 0 varies slowest)."""
    out = np.ones((1, 1), dtype=complex)
    for k, d in enumerate(dims):
        out = np.kron(out, op if k == index else np.eye(d, dtype=complex))
    return out
