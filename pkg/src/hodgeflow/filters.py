"""
Simplicial convolutional filters

    H = h_harm * I + sum_m alphas[m-1] * L1_down**m + sum_n betas[n-1] * L1_up**n

Polynomial indices start at 1; the constant term is ``h_harm`` alone, so the
response is ``h_harm`` on harmonic modes, ``h_harm + alpha(lambda)`` on
gradient modes and ``h_harm + beta(lambda)`` on curl modes.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .hodge import HodgeLaplacians, HodgeSpectrum

GROWTH_LIMIT = 1e12


@dataclass(frozen=True)
class FilterSpec:
    h_harm: float = 0.0
    alphas: tuple[float, ...] = field(default_factory=tuple)
    betas: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "h_harm", float(self.h_harm))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))

    @classmethod
    def from_dict(cls, data: dict) -> "FilterSpec":
        try:
            return cls(data.get("h_harm", 0.0), data.get("alphas", ()), data.get("betas", ()))
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed filter spec: {exc}") from exc

    @classmethod
    def load(cls, path) -> "FilterSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid JSON ({exc})") from exc

    def to_dict(self) -> dict:
        return {"h_harm": self.h_harm, "alphas": list(self.alphas), "betas": list(self.betas)}


def _poly_shift(op, coeffs: tuple[float, ...], e: np.ndarray) -> np.ndarray:
    """``sum_m coeffs[m-1] * op**m @ e`` by Horner's rule (matrix-vector products only)."""
    if not coeffs:
        return np.zeros_like(e)
    ref = max(float(np.linalg.norm(e)), np.finfo(float).tiny)
    acc = coeffs[-1] * e
    for c in reversed(coeffs[:-1]):
        acc = c * e + op @ acc
        if np.linalg.norm(acc) > GROWTH_LIMIT * ref:
            warnings.warn(
                "spatial filter intermediates exceed 1e12 x the input norm; "
                "prefer the spectral path for this filter",
                RuntimeWarning,
                stacklevel=3,
            )
            ref = np.inf
    return np.asarray(op @ acc, dtype=float)


def apply_spatial(f: FilterSpec, h: HodgeLaplacians, e) -> np.ndarray:
    """Filter by repeated local shifts with the lower and upper Laplacians."""
    e = np.asarray(e, dtype=float)
    n = h.l1.shape[0]
    if e.ndim not in (1, 2) or e.shape[0] != n:
        raise ValidationError(f"edge signal has {e.shape[0] if e.ndim else 0} rows, expected {n}")
    out = f.h_harm * e
    if f.alphas:
        out = out + _poly_shift(h.l1_down.astype(float), f.alphas, e)
    if f.betas:
        out = out + _poly_shift(h.l1_up.astype(float), f.betas, e)
    return out


def frequency_response(f: FilterSpec, lam: float, kind: str) -> float:
    lam = float(lam)
    if lam < 0:
        raise ValidationError(f"frequencies are non-negative, got {lam}")
    if kind == "harmonic":
        if lam > 0:
            raise ValidationError(f"harmonic modes have frequency 0, got {lam}")
        return f.h_harm
    if kind not in ("gradient", "curl"):
        raise ValidationError(f"unknown subspace kind {kind!r}")
    if lam == 0:
        raise ValidationError(f"{kind} modes have positive frequency")
    coeffs = f.alphas if kind == "gradient" else f.betas
    return f.h_harm + sum(c * lam ** (m + 1) for m, c in enumerate(coeffs))


def spectral_response(f: FilterSpec, s: HodgeSpectrum) -> np.ndarray:
    """Response at every basis vector of ``s``, in basis order."""
    return np.array(
        [f.h_harm] * s.n_harm
        + [frequency_response(f, lam, "gradient") for lam in s.grad_eigvals]
        + [frequency_response(f, lam, "curl") for lam in s.curl_eigvals]
    )


def apply_spectral(f: FilterSpec, s: HodgeSpectrum, e) -> np.ndarray:
    """Filter by scaling each Fourier coefficient with the frequency response."""
    e = np.asarray(e, dtype=float)
    if e.ndim not in (1, 2) or e.shape[0] != s.n_edges:
        raise ValidationError(
            f"edge signal has {e.shape[0] if e.ndim else 0} rows, expected {s.n_edges}"
        )
    resp = spectral_response(f, s)
    if resp.size and np.all(resp == resp[0]):
        # flat response: the filter is a multiple of the identity
        return resp[0] * e
    u = s.basis
    coeffs = u.T @ e
    scaled = resp[:, None] * coeffs if e.ndim == 2 else resp * coeffs
    return u @ scaled
