from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hbn_spin_phonon.constants import CONSTANTS, PhysicalConstants
from hbn_spin_phonon.domain.spin import SpinSystem
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.spin.operators import build_spin_operators, embed


@dataclass(frozen=True)
class Eigensystem:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns


def hilbert_dims(system: SpinSystem) -> tuple[int, int, int, int]:
    n = system.nuclear_dim
    return (3, n, n, n)


def build_hamiltonian(system: SpinSystem, *, constants: PhysicalConstants = CONSTANTS) -> np.ndarray:
    """
    H = D Sz^2 + gamma_e B Sz + sum_j S.A^j.I^j - sum_j gamma_n B Iz^j   (MHz)

    Basis: electron index slowest, then nuclei 1..3, m descending in every factor.
    """
    dims = hilbert_dims(system)
    electron = build_spin_operators(1)
    nucleus = build_spin_operators(system.isotope.nuclear_spin)

    s_ops = [embed(op, 0, dims) for op in (electron.s_x, electron.s_y, electron.s_z)]
    s_z = s_ops[2]

    h = system.zfs_d * (s_z @ s_z) + constants.gamma_e * system.b_z * s_z
    for j, tensor in enumerate(system.tensors, start=1):
        i_ops = [embed(op, j, dims) for op in (nucleus.s_x, nucleus.s_y, nucleus.s_z)]
        a = tensor.as_matrix()
        for p in range(3):
            for q in range(3):
                if a[p, q] != 0.0:
                    h = h + a[p, q] * (s_ops[p] @ i_ops[q])
        h = h - system.gamma_n * system.b_z * i_ops[2]
    return h


def diagonalize(h: np.ndarray, *, hermitian_tol: float = 1e-9) -> Eigensystem:
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DataError(f"expected a square matrix, got shape {h.shape}")
    scale = max(float(np.linalg.norm(h)), np.finfo(float).tiny)
    asym = float(np.linalg.norm(h - h.conj().T))
    if asym > hermitian_tol * scale:
        raise DataError(f"matrix is not Hermitian (|H - H^dag| / |H| = {asym / scale:.3e})")
    values, vectors = np.linalg.eigh(h)
    return Eigensystem(values=values, vectors=vectors)
