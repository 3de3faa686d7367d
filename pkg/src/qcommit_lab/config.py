"""Numerical tolerances and resource caps shared by every module."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace


class LabError(Exception):
    """Base class for all errors raised by the lab."""


class DimensionCapError(LabError):
    """A dense object would exceed the configured entry cap."""

    def __init__(self, what: str, entries: int, cap: int):
        super().__init__(f"{what}: {entries} entries exceeds dense cap {cap}")
        self.what = what
        self.entries = entries
        self.cap = cap


class LayoutError(LabError):
    """Unknown register names or inconsistent register dimensions."""


class ValidityError(LabError):
    """An input violates a documented invariant (PSD, trace, completeness...)."""


class NumericError(LabError):
    """A numerical construction failed beyond tolerance."""


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    trace: float = 1e-10
    psd: float = 1e-10
    norm: float = 1e-10
    povm: float = 1e-10
    unitary: float = 1e-10
    pgm_cutoff: float = 1e-12
    threshold: float = 1e-12
    probability: float = 1e-12
    dense_cap: int = 2**20

    def with_overrides(self, **kw) -> "Tolerances":
        known = {f.name for f in fields(self)}
        bad = set(kw) - known
        if bad:
            raise ValueError(f"unknown tolerance(s): {sorted(bad)}")
        cast = {k: (int(v) if k == "dense_cap" else float(v)) for k, v in kw.items()}
        return replace(self, **cast)

    def as_dict(self) -> dict:
        return asdict(self)


TOL = Tolerances()


def check_cap(what: str, entries: int, tol: Tolerances = TOL) -> None:
    if entries > tol.dense_cap:
        raise DimensionCapError(what, entries, tol.dense_cap)
