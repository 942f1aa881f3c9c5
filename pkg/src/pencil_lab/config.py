"""Single record holding every numerical tolerance and guard used by the package."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    # linear algebra
    residual_rel: float = 1e-9
    symmetry: float = 1e-10
    psd_clip: float = 1e-12
    cluster: float = 1e-7
    rank: float = 1e-8
    # pencil spectra
    sigma_floor: float = 1e-14
    sigma_certificate: float = 1e-6
    converged: float = 1e-3
    factorial_normalization: bool = False
    # discretization guards
    max_degree: int = 12
    max_dim: int = 4096

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "Tolerances":
        if not data:
            return cls()
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
        return replace(cls(), **data)


DEFAULT_TOLERANCES = Tolerances()
