"""
Edge-signal calculus on an oriented complex.

Edge signals are arrays whose first axis runs over the complex's edges; a
second axis, when present, is time and every column is treated independently.
Positive values mean flow from tail to tip.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .hodge import HodgeSpectrum


def _check_rows(name: str, x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[0] != n:
        raise ValidationError(f"{name} has {x.shape[0] if x.ndim else 0} rows, expected {n}")
    return x


def divergence(b1, e) -> np.ndarray:
    """Net inflow per node, ``B1 @ e``: positive at sinks, negative at sources."""
    e = _check_rows("edge signal", e, b1.shape[1])
    return np.asarray(b1 @ e, dtype=float)


def curl(b2, e) -> np.ndarray:
    """Signed circulation around each triangle, ``B2^T @ e``."""
    e = _check_rows("edge signal", e, b2.shape[0])
    return np.asarray(b2.T @ e, dtype=float)


@dataclass(frozen=True)
class HodgeComponents:
    down: np.ndarray
    up: np.ndarray
    harm: np.ndarray

    def energies(self) -> dict[str, float]:
        return {
            "down": float(np.sum(self.down**2)),
            "up": float(np.sum(self.up**2)),
            "harm": float(np.sum(self.harm**2)),
        }


def _project(basis: np.ndarray, e: np.ndarray) -> np.ndarray:
    return basis @ (basis.T @ e)


def hodge_decompose(s: HodgeSpectrum, e) -> HodgeComponents:
    """Orthogonal projections of ``e`` onto the gradient, curl and harmonic blocks."""
    e = _check_rows("edge signal", e, s.n_edges)
    return HodgeComponents(
        down=_project(s.grad_eigvecs, e),
        up=_project(s.curl_eigvecs, e),
        harm=_project(s.harm_eigvecs, e),
    )


def curl_energy_fraction(down_block, up_block) -> float:
    """Share of curl energy among the non-harmonic energy, in [0, 1]."""
    down = float(np.sum(np.asarray(down_block, dtype=float) ** 2))
    up = float(np.sum(np.asarray(up_block, dtype=float) ** 2))
    if down + up == 0:
        raise ValidationError("degenerate signal: gradient and curl energies are both zero")
    return up / (down + up)


@dataclass(frozen=True)
class SpectralCoefficients:
    """Fourier coefficients in :attr:`HodgeSpectrum.basis` order.

    ``values`` has one row per basis vector (plus a time axis for series).
    """

    values: np.ndarray
    kinds: np.ndarray
    eigvals: np.ndarray

    def of_kind(self, kind: str) -> np.ndarray:
        return self.values[self.kinds == kind]


def tft(s: HodgeSpectrum, e) -> SpectralCoefficients:
    """Topological Fourier transform: coordinates of ``e`` in the Hodge eigenbasis."""
    e = _check_rows("edge signal", e, s.n_edges)
    return SpectralCoefficients(s.basis.T @ e, s.kinds, s.eigvals)


def itft(s: HodgeSpectrum, coeffs) -> np.ndarray:
    values = coeffs.values if isinstance(coeffs, SpectralCoefficients) else coeffs
    values = np.asarray(values, dtype=float)
    if values.ndim not in (1, 2) or values.shape[0] != s.n_edges:
        raise ValidationError(
            f"got {values.shape[0] if values.ndim else 0} coefficients for E = {s.n_edges}"
        )
    return s.basis @ values
