"""Heat-kernel graph wavelets applied through Chebyshev polynomial filters.

Coefficients come from Chebyshev interpolation at the n+1 first-kind nodes,
evaluated with a type-II DCT.  The constant coefficient is stored already
halved, so a filter is simply ``sum_j tau[j] * T_j(L~)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse as sp

Kernel = Callable[[np.ndarray], np.ndarray]

SAFETY = 1.01
ORACLE_CAP = 256


def heat_kernel(x):
    return np.exp(-np.asarray(x, dtype=float))


def inverse_heat_kernel(x):
    return np.exp(np.asarray(x, dtype=float))


def spectrum_bound(L, iters: int = 100, seed: int = 0) -> float:
    """Power-iteration estimate of the largest eigenvalue, times 1.01.

    Returns 1.0 for a zero operator.
    """
    n = L.shape[0]
    if n == 0:
        return 1.0
    x = np.random.default_rng(seed).standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = L @ x
        norm = np.linalg.norm(y)
        if norm == 0:
            return 1.0
        lam = float(x @ y)
        x = y / norm
    lam = max(lam, float(x @ (L @ x)))
    if lam <= 0:
        return 1.0
    return lam * SAFETY


def chebyshev_nodes(n: int) -> np.ndarray:
    k = np.arange(n + 1)
    return np.cos((2 * k + 1) * np.pi / (2 * n + 2))


def chebyshev_interpolant(f: Callable[[np.ndarray], np.ndarray], p: int, n: int) -> np.ndarray:
    """Coefficients tau[0..p] of f on [-1, 1] from its values at n+1 Chebyshev nodes."""
    if p > n:
        raise ValueError(f"order p={p} exceeds interpolation degree n={n}")
    values = np.asarray(f(chebyshev_nodes(n)), dtype=float)
    # DCT-II: X_j = 2 sum_k x_k cos(pi j (2k+1) / (2(n+1)))
    tau = scipy.fft.dct(values, type=2)[: p + 1] / (n + 1)
    tau[0] *= 0.5
    return tau


def chebyshev_coeffs(kernel: Kernel, kappa: float, p: int, n: int, g_max: float) -> np.ndarray:
    """Coefficients of ``lambda -> kernel(kappa * lambda)`` on [0, g_max]."""
    def pulled_back(x):
        return kernel(kappa * g_max * (x + 1.0) / 2.0)

    return chebyshev_interpolant(pulled_back, p, n)


def apply_poly_filter(L, g_max: float, tau, x) -> np.ndarray:
    """y = sum_j tau_j T_j(L~) x with L~ = (2/g_max) L - I, by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != L.shape[0]:
        raise ValueError(f"signal has {x.shape[0]} rows, operator is {L.shape[0]}x{L.shape[1]}")
    tau = np.asarray(tau, dtype=float)
    scale = 2.0 / g_max

    def shifted(v):
        return scale * (L @ v) - v

    t_prev = x
    y = tau[0] * t_prev
    if tau.size == 1:
        return y
    t_cur = shifted(x)
    y = y + tau[1] * t_cur
    for j in range(2, tau.size):
        t_prev, t_cur = t_cur, 2.0 * shifted(t_cur) - t_prev
        y = y + tau[j] * t_cur
    return y


@dataclass
class ExactSpectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def exact_spectrum(L, cap: int = ORACLE_CAP) -> ExactSpectrum:
    """Dense symmetric eigendecomposition (QR-algorithm driver)."""
    dense = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
    n = dense.shape[0]
    if n > cap:
        raise ValueError(f"exact spectrum limited to n <= {cap}, got {n}")
    lam, u = scipy.linalg.eigh(dense, driver="ev")
    return ExactSpectrum(lam, u)


def exact_wavelet(
    spectrum: ExactSpectrum, kernel: Kernel, kappa: float, inverse: bool = False, cap: int = ORACLE_CAP
) -> np.ndarray:
    """Dense U g(kappa Lambda) U^T; ``inverse`` uses g(-x)."""
    lam = spectrum.eigenvalues
    if spectrum.eigenvectors.shape[0] > cap:
        raise ValueError(f"exact wavelet limited to n <= {cap}")
    g = kernel(-kappa * lam) if inverse else kernel(kappa * lam)
    u = spectrum.eigenvectors
    return (u * g) @ u.T


def smallest_positive_eigenvalue(L, g_max: float) -> float | None:
    dense = L.toarray() if sp.issparse(L) else np.asarray(L, dtype=float)
    lam = scipy.linalg.eigvalsh(dense)
    pos = lam[lam > 1e-9 * g_max]
    return float(pos[0]) if pos.size else None


def scale_grid(scales_count: int, g_max: float, lambda_min_pos: float | None, kappa_cap: float = 4.0) -> np.ndarray:
    """Geometric scales from 1/g_max up to min(2/lambda_min+, kappa_cap/g_max)."""
    if scales_count < 1:
        raise ValueError("scales_count must be >= 1")
    k_min = 1.0 / g_max
    k_max = kappa_cap / g_max
    if lambda_min_pos is not None:
        k_max = min(k_max, 2.0 / lambda_min_pos)
    k_max = max(k_max, k_min)
    if scales_count == 1:
        return np.array([k_min])
    return np.geomspace(k_min, k_max, scales_count)


@dataclass
class WaveletFilterBank:
    """Per-scale forward/inverse coefficient vectors for one Laplacian.

    In ``mode="exact"`` the dense wavelet matrices are used instead of the
    polynomial filters (oracle for tests, small graphs only).
    """

    L: object  # sparse or dense [n, n]
    g_max: float
    scales: np.ndarray
    forward_coeffs: list[np.ndarray]
    inverse_coeffs: list[np.ndarray]
    p: int
    n_interp: int
    mode: str = "chebyshev"
    _exact: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.L.shape[0]

    @property
    def n_scales(self) -> int:
        return len(self.scales)

    def forward(self, s: int, x: np.ndarray) -> np.ndarray:
        if self.mode == "exact":
            return self._exact[s][0] @ x
        return apply_poly_filter(self.L, self.g_max, self.forward_coeffs[s], x)

    def inverse(self, s: int, x: np.ndarray) -> np.ndarray:
        if self.mode == "exact":
            return self._exact[s][1] @ x
        return apply_poly_filter(self.L, self.g_max, self.inverse_coeffs[s], x)

    def exact(self) -> "WaveletFilterBank":
        """Same scales, with the dense eigendecomposition wavelets."""
        spec = exact_spectrum(self.L)
        mats = [
            (exact_wavelet(spec, heat_kernel, k), exact_wavelet(spec, heat_kernel, k, inverse=True))
            for k in self.scales
        ]
        return WaveletFilterBank(
            self.L, self.g_max, self.scales, self.forward_coeffs, self.inverse_coeffs,
            self.p, self.n_interp, "exact", mats,
        )


def build_filter_bank(
    L,
    scales_count: int = 4,
    p: int = 3,
    n: int = 50,
    kappa_cap: float = 4.0,
    scales=None,
    dense_below: int = 512,
) -> WaveletFilterBank:
    """Heat-kernel filter bank on a geometric scale grid adapted to the spectrum."""
    op = L
    if sp.issparse(L) and L.shape[0] <= dense_below:
        op = L.toarray()
    g_max = spectrum_bound(op)
    if scales is None:
        lam_pos = smallest_positive_eigenvalue(op, g_max) if op.shape[0] > 1 else None
        scales = scale_grid(scales_count, g_max, lam_pos, kappa_cap)
    scales = np.asarray(scales, dtype=float)
    fwd = [chebyshev_coeffs(heat_kernel, k, p, n, g_max) for k in scales]
    inv = [chebyshev_coeffs(inverse_heat_kernel, k, p, n, g_max) for k in scales]
    return WaveletFilterBank(op, g_max, scales, fwd, inv, p, n)


def filter_matrix(bank: WaveletFilterBank, s: int, inverse: bool = False) -> np.ndarray:
    """Dense matrix of one polynomial filter, built by filtering the identity."""
    eye = np.eye(bank.n_nodes)
    return bank.inverse(s, eye) if inverse else bank.forward(s, eye)
