"""Coin tossing operators: unitary matrices of normalized d-th roots of unity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CoinMatrix", "coin_matrix", "coin_from_array", "validate_coin"]

UNITARITY_TOL = 1e-12
MODULUS_TOL = 1e-15


@dataclass(frozen=True)
class CoinMatrix:
    """A d x d unitary whose entries all have modulus 1/sqrt(d)."""

    order: int
    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=np.complex128)
        if h.shape != (self.order, self.order):
            raise ValueError(f"coin order {self.order} does not match shape {h.shape}")
        problems = validate_coin(h)
        if problems:
            raise ValueError("invalid coin matrix: " + "; ".join(problems))
        h.setflags(write=False)
        object.__setattr__(self, "h", h)


def validate_coin(h: np.ndarray) -> list[str]:
    """Return violations of the coin invariants (empty when valid)."""
    h = np.asarray(h, dtype=np.complex128)
    problems = []
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        return [f"coin must be square, got shape {h.shape}"]
    d = h.shape[0]
    gram = h @ h.conj().T
    if not np.allclose(gram, np.eye(d), atol=UNITARITY_TOL, rtol=0.0):
        problems.append("not unitary within 1e-12")
    if np.max(np.abs(np.abs(h) - 1.0 / np.sqrt(d))) > 1e-12:
        problems.append("entry modulus differs from 1/sqrt(d)")
    return problems


def coin_matrix(d: int) -> CoinMatrix:
    """The order-d coin.

    d=2 is the real Hadamard [[1, 1], [1, -1]]/sqrt(2); general d is the
    discrete-Fourier matrix h[j, k] = w^(j*k)/sqrt(d) with w = exp(2*pi*i/d)
    (0-based exponents), which degenerates to the Hadamard row pattern at
    d=2 and to (1) at d=1.

    Raises
    ------
    ValueError
        If d < 1.
    """
    if d < 1:
        raise ValueError(f"coin order must be >= 1, got {d}")
    if d == 2:
        h = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / np.sqrt(2.0)
    else:
        j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        h = np.exp(2j * np.pi * (j * k % d) / d) / np.sqrt(d)
    return CoinMatrix(order=d, h=h)


def coin_from_array(values) -> CoinMatrix:
    """Build a CoinMatrix from explicit entries, enforcing the invariants.

    Accepts a nested sequence of complex numbers or of (re, im) pairs, as
    used by the run-configuration coin override.
    """
    arr = np.asarray(values)
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = arr[..., 0] + 1j * arr[..., 1]
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"coin override must be square, got shape {arr.shape}")
    return CoinMatrix(order=arr.shape[0], h=arr)
