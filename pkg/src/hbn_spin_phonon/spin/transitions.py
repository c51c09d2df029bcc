from __future__ import annotations

import logging

import numpy as np

from hbn_spin_phonon.constants import CONSTANTS, PhysicalConstants
from hbn_spin_phonon.domain.spin import Branch, Isotope, SpinSystem, TransitionLine
from hbn_spin_phonon.errors import DataError
from hbn_spin_phonon.spin.hamiltonian import build_hamiltonian, diagonalize, hilbert_dims
from hbn_spin_phonon.spin.operators import build_spin_operators, embed

logger = logging.getLogger(__name__)


def total_projection_values(isotope: Isotope) -> np.ndarray:
    """Total nuclear projections M of the three nuclei, ascending."""
    three_i = float(3 * isotope.nuclear_spin)
    return np.arange(-three_i, three_i + 0.5, 1.0)


def multiplicity_weights(isotope: Isotope) -> np.ndarray:
    """
    Number of nuclear configurations per total projection M (ascending M), normalized to 1.
    N15 -> 1:3:3:1, N14 -> 1:3:6:7:6:3:1.
    """
    single = np.ones(int(2 * isotope.nuclear_spin + 1))
    counts = np.convolve(np.convolve(single, single), single)
    return counts / counts.sum()


def _round_half(x: float) -> float:
    return round(2.0 * x) / 2.0


def _branch_for(frequency: float, sz_other: float, center_minus: float, center_plus: float) -> Branch:
    d_minus = abs(frequency - center_minus)
    d_plus = abs(frequency - center_plus)
    if abs(d_minus - d_plus) <= 1e-9:
        # zero field: fall back to the electron projection of the |m_s| = 1 state
        return Branch.minus if sz_other < 0 else Branch.plus
    return Branch.minus if d_minus < d_plus else Branch.plus


def merge_degenerate(lines: list[TransitionLine], *, tol: float = 1e-6) -> list[TransitionLine]:
    """Merge same-branch lines closer than `tol` MHz; amplitudes add, label is the weighted mean M."""
    out: list[TransitionLine] = []
    for branch in (Branch.minus, Branch.plus):
        group = sorted((ln for ln in lines if ln.branch is branch), key=lambda ln: ln.frequency)
        cluster: list[TransitionLine] = []

        def _flush() -> None:
            if not cluster:
                return
            amp = sum(c.amplitude for c in cluster)
            freq = sum(c.frequency * c.amplitude for c in cluster) / amp if amp > 0 else cluster[0].frequency
            m_label = sum(c.m_i_total * c.amplitude for c in cluster) / amp if amp > 0 else cluster[0].m_i_total
            out.append(
                TransitionLine(frequency=freq, amplitude=amp, branch=branch, m_i_total=_round_half(m_label))
            )
            cluster.clear()

        for ln in group:
            if cluster and ln.frequency - cluster[-1].frequency > tol:
                _flush()
            cluster.append(ln)
        _flush()
    return out


def transition_lines_exact(
    system: SpinSystem,
    *,
    amplitude_floor: float = 1e-6,
    merge_tol: float = 1e-6,
    constants: PhysicalConstants = CONSTANTS,
) -> list[TransitionLine]:
    """
    ODMR lines from exact diagonalization.

    Only |m_s=0>-like <-> |m_s|=1-like pairs are kept (the microwave-driven electron
    transitions); amplitude is |<i|S_x (x) 1|j>|^2 for a linearly polarized drive.
    Lines below `amplitude_floor` * max amplitude are dropped, then degenerate lines merged.
    """
    h = build_hamiltonian(system, constants=constants)
    eig = diagonalize(h)
    dims = hilbert_dims(system)
    electron = build_spin_operators(1)
    nucleus = build_spin_operators(system.isotope.nuclear_spin)

    vecs = eig.vectors
    sx = embed(electron.s_x, 0, dims)
    sz = embed(electron.s_z, 0, dims)
    iz_total = sum(embed(nucleus.s_z, j, dims) for j in (1, 2, 3))

    sx_eig = vecs.conj().T @ sx @ vecs
    amp = np.abs(sx_eig) ** 2
    sz_expect = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), sz, vecs))
    sz2_expect = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), sz @ sz, vecs))
    m_expect = np.real(np.einsum("ij,ik,kj->j", vecs.conj(), iz_total, vecs))

    center_minus = system.zfs_d - constants.gamma_e * system.b_z
    center_plus = system.zfs_d + constants.gamma_e * system.b_z

    # <Sz^2> separates m_s = 0 from the |m_s| = 1 manifold even when +1 and -1 mix at zero field
    is_zero = sz2_expect < 0.5
    max_amp = float(amp[np.ix_(is_zero, ~is_zero)].max()) if is_zero.any() and (~is_zero).any() else 0.0
    if max_amp <= 0:
        logger.warning("no allowed electron transitions found")
        return []

    raw: list[TransitionLine] = []
    lam = eig.values
    for i in np.flatnonzero(is_zero):
        for j in np.flatnonzero(~is_zero):
            a = float(amp[i, j])
            if a < amplitude_floor * max_amp:
                continue
            freq = float(abs(lam[j] - lam[i]))
            if freq <= 0:
                continue
            raw.append(
                TransitionLine(
                    frequency=freq,
                    amplitude=a,
                    branch=_branch_for(freq, float(sz_expect[j]), center_minus, center_plus),
                    m_i_total=_round_half(float(m_expect[i])),
                )
            )
    return merge_degenerate(raw, tol=merge_tol)


def secular_lines(
    d: float,
    b_z: float,
    a_zz: float,
    isotope: Isotope,
    *,
    constants: PhysicalConstants = CONSTANTS,
) -> list[TransitionLine]:
    """
    Secular-approximation lines: minus branch at d - gamma_e b - a_zz M, plus branch at
    d + gamma_e b + a_zz M, weighted by the unpolarized multiplicity of M (sum 1 per branch).
    Returned minus branch first, each branch in ascending M.
    """
    if d <= 0:
        raise DataError(f"zfs must be > 0, got {d}")
    m_values = total_projection_values(isotope)
    weights = multiplicity_weights(isotope)
    zeeman = constants.gamma_e * b_z

    lines: list[TransitionLine] = []
    for m, w in zip(m_values, weights):
        lines.append(
            TransitionLine(frequency=d - zeeman - a_zz * m, amplitude=float(w), branch=Branch.minus, m_i_total=float(m))
        )
    for m, w in zip(m_values, weights):
        lines.append(
            TransitionLine(frequency=d + zeeman + a_zz * m, amplitude=float(w), branch=Branch.plus, m_i_total=float(m))
        )
    if a_zz == 0:
        return merge_degenerate(lines)
    return lines
