from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hbn_spin_phonon.constants import CONSTANTS


class Isotope(str, Enum):
    N15 = "N15"
    N14 = "N14"

    @property
    def nuclear_spin(self) -> Fraction:
        return Fraction(1, 2) if self is Isotope.N15 else Fraction(1)

    @property
    def lines_per_branch(self) -> int:
        # three equivalent nuclei: total projection runs over 2*(3I)+1 values
        return int(2 * (3 * self.nuclear_spin) + 1)

    @property
    def gamma_n_sign(self) -> int:
        return -1 if self is Isotope.N15 else 1

    def default_gamma_n(self) -> float:
        if self is Isotope.N15:
            return -CONSTANTS.gamma_n15
        return CONSTANTS.gamma_n14


class Branch(str, Enum):
    minus = "minus"  # |0> <-> |-1>
    plus = "plus"  # |0> <-> |+1>


class HyperfineTensor(BaseModel):
    """
    Per-nucleus hyperfine tensor in the defect frame (MHz).

    xz/yz/zx/zy entries are structurally zero; a_yx is a_xy by construction.
    """

    model_config = ConfigDict(frozen=True)

    a_xx: float = 0.0
    a_yy: float = 0.0
    a_zz: float = 0.0
    a_xy: float = 0.0

    @classmethod
    def secular(cls, a_zz: float) -> "HyperfineTensor":
        return cls(a_zz=a_zz)

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.a_xx, self.a_xy, 0.0],
                [self.a_xy, self.a_yy, 0.0],
                [0.0, 0.0, self.a_zz],
            ],
            dtype=float,
        )

    def max_abs(self) -> float:
        return max(abs(self.a_xx), abs(self.a_yy), abs(self.a_zz), abs(self.a_xy))


class SpinSystem(BaseModel):
    """
    Electron spin-1 plus the three nearest nitrogen nuclei (the ground-state Hamiltonian inputs).
    """

    model_config = ConfigDict(frozen=True)

    isotope: Isotope = Isotope.N15
    b_z: float = Field(default=0.0, ge=0, description="Axial field, Gauss.")
    zfs_d: float = Field(default=3480.0, gt=0, description="Zero-field splitting D, MHz.")
    tensors: tuple[HyperfineTensor, HyperfineTensor, HyperfineTensor] = Field(
        default_factory=lambda: (HyperfineTensor(), HyperfineTensor(), HyperfineTensor()),
        description="Exactly three nuclear tensors.",
    )
    gamma_n: float = Field(default=0.0, description="Signed nuclear gyromagnetic ratio, MHz/G (defaulted per isotope).")

    @field_validator("tensors", mode="before")
    @classmethod
    def _three_tensors(cls, v):
        v = tuple(v)
        if len(v) != 3:
            raise ValueError(f"expected exactly 3 hyperfine tensors, got {len(v)}")
        return v

    @model_validator(mode="before")
    @classmethod
    def _resolve_gamma_n(cls, data):
        if not isinstance(data, dict):
            return data
        isotope = Isotope(data.get("isotope", Isotope.N15))
        gamma_n = data.get("gamma_n")
        if gamma_n is None:
            gamma_n = isotope.default_gamma_n()
        elif isotope is Isotope.N15:
            # 15N has a negative gyromagnetic ratio; only the magnitude is user-tunable
            gamma_n = -abs(float(gamma_n))
        return {**data, "isotope": isotope, "gamma_n": gamma_n}

    @classmethod
    def with_uniform_tensor(
        cls,
        tensor: HyperfineTensor,
        *,
        isotope: Isotope = Isotope.N15,
        b_z: float = 0.0,
        zfs_d: float = 3480.0,
    ) -> "SpinSystem":
        return cls(isotope=isotope, b_z=b_z, zfs_d=zfs_d, tensors=(tensor, tensor, tensor))

    @property
    def nuclear_dim(self) -> int:
        return int(2 * self.isotope.nuclear_spin + 1)

    @property
    def dimension(self) -> int:
        return 3 * self.nuclear_dim**3

    def max_abs_hyperfine(self) -> float:
        return max(t.max_abs() for t in self.tensors)


class TransitionLine(BaseModel):
    model_config = ConfigDict(frozen=True)

    frequency: float = Field(..., description="MHz")
    amplitude: float = Field(..., ge=0)
    branch: Branch
    m_i_total: float = Field(..., description="Total nuclear projection label (half-integer).")


@dataclass(frozen=True)
class SpinOperatorSet:
    dimension: int
    s_x: np.ndarray
    s_y: np.ndarray
    s_z: np.ndarray
    s_plus: np.ndarray
    s_minus: np.ndarray
