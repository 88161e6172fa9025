"""Periodic spectral transforms, derivatives, and the screened-Poisson solver.

Two independent routes are provided for the static scalar field:

- yukawa_invert: spectral division by -(k^2 + m^2), exact for the
  trigonometric interpolant of the source.
- yukawa_convolve_direct: real-space quadrature of the Green-function
  convolution. The kernel is singular (kinked in 1D, 1/r in 3D), so a plain
  node-sampled sum would be second order and useless as a 1e-6 oracle;
  instead each lattice cell integrates the kernel against a degree-7
  local Lagrange model of the source (product integration). The two routes
  share nothing beyond the lattice, which is what makes their agreement a
  meaningful cross-check.

Transform normalization for stored spectra is unitary (norm="ortho");
operators below use plain forward/inverse pairs where the convention
cancels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft as sfft

from .model import Grid

__all__ = [
    "Spectrum",
    "forward_transform",
    "inverse_transform",
    "spectral_derivative",
    "laplacian",
    "yukawa_invert",
    "yukawa_convolve_direct",
    "MAX_DIRECT_POINTS",
]

# The direct convolution is O(points^2); the 3D acceptance size 32^3 = 2^15
# takes about a minute, anything larger is rejected.
MAX_DIRECT_POINTS = 2**15


@dataclass(frozen=True)
class Spectrum:
    """Unitary-normalized spectral coefficients tied to their grid."""

    coefficients: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        if self.coefficients.shape != self.grid.shape:
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} does not match "
                f"grid {self.grid.shape}")


def forward_transform(field: np.ndarray, grid: Grid) -> Spectrum:
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    return Spectrum(coefficients=sfft.fftn(field, norm="ortho"), grid=grid)


def inverse_transform(spectrum: Spectrum) -> np.ndarray:
    return sfft.ifftn(spectrum.coefficients, norm="ortho")


def spectral_derivative(field: np.ndarray, grid: Grid, axis: int = 0,
                        order: int = 1) -> np.ndarray:
    """Exact derivative of the trigonometric interpolant along one axis.

    order 1 zeroes the Nyquist mode (the sawtooth mode has no well-defined
    odd derivative and zeroing keeps real fields real); order 2 keeps it
    with multiplier -k_nyq^2.
    """
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if not (0 <= axis < grid.dim):
        raise ValueError(f"axis {axis} out of range for dim {grid.dim}")
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    if order == 1:
        mult = 1j * k
        mult[grid.n // 2] = 0.0
    else:
        mult = -(k**2)
    shape = [1] * grid.dim
    shape[axis] = grid.n
    hat = sfft.fft(field, axis=axis) * mult.reshape(shape)
    out = sfft.ifft(hat, axis=axis)
    if not np.iscomplexobj(field):
        return out.real
    return out


def laplacian(field: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral Laplacian over all grid axes."""
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    hat = sfft.fftn(field) * (-grid.k_squared)
    out = sfft.ifftn(hat)
    if not np.iscomplexobj(field):
        return out.real
    return out


def yukawa_invert(source: np.ndarray, m: float, grid: Grid) -> np.ndarray:
    """Solve (Lap - m^2) phi = source on the periodic lattice, spectrally.

    The operator is negative definite for m > 0; the result is real for
    real sources and everywhere <= 0 for sources >= 0. m = 0 would leave
    the k = 0 mode non-invertible and is rejected.
    """
    if m <= 0.0:
        raise ValueError(f"scalar mass must be positive, got {m}")
    if source.shape != grid.shape:
        raise ValueError(f"source shape {source.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(source):
        raise ValueError("source must be real-valued")
    hat = sfft.rfftn(source)
    k2 = _rfft_k_squared(grid)
    return -sfft.irfftn(hat / (m * m + k2), s=grid.shape)


def _rfft_k_squared(grid: Grid) -> np.ndarray:
    kfull = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    khalf = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.spacing)
    if grid.dim == 1:
        return khalf**2
    return (kfull[:, None, None] ** 2 + kfull[None, :, None] ** 2
            + khalf[None, None, :] ** 2)


# ---------------------------------------------------------------------------
# direct product-integration route


def yukawa_convolve_direct(source: np.ndarray, m: float, grid: Grid) -> np.ndarray:
    """Solve (Lap - m^2) phi = source by direct Green-function quadrature.

    Independent oracle for yukawa_invert: convolves the source with the
    periodic screened-Coulomb kernel (cosh closed form in 1D, minimum-image
    exp(-m r)/(4 pi r) in 3D) using per-cell product integration. O(points^2)
    apply; guarded to MAX_DIRECT_POINTS total points.
    """
    if m <= 0.0:
        raise ValueError(f"scalar mass must be positive, got {m}")
    if source.shape != grid.shape:
        raise ValueError(f"source shape {source.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(source):
        raise ValueError("source must be real-valued")
    if source.size > MAX_DIRECT_POINTS:
        raise ValueError(
            f"direct convolution limited to {MAX_DIRECT_POINTS} points, "
            f"got {source.size}")
    w = _direct_weights(grid.dim, grid.n, grid.length, m)
    return -_convolve_gather(w, np.ascontiguousarray(source, dtype=float))


_P = 8            # Lagrange stencil size per axis (degree 7)
_HALF = _P // 2 - 1   # stencil spans nodes [-3 .. 4] around the cell [0, 1]

_weight_cache: dict[tuple, np.ndarray] = {}


def _direct_weights(dim: int, n: int, length: float, m: float) -> np.ndarray:
    key = (dim, n, float(length).hex(), float(m).hex())
    if key not in _weight_cache:
        if dim == 1:
            _weight_cache[key] = _direct_weights_1d(n, length, m)
        else:
            _weight_cache[key] = _direct_weights_3d(n, length, m)
        if len(_weight_cache) > 8:
            _weight_cache.pop(next(iter(_weight_cache)))
    return _weight_cache[key]


def _lagrange_basis(tau: np.ndarray) -> np.ndarray:
    """Degree-7 Lagrange basis at positions tau, nodes at integers -3..4."""
    nodes = np.arange(_P) - _HALF
    tau = np.asarray(tau, dtype=float)
    B = np.ones((tau.size, _P))
    for a in range(_P):
        for b in range(_P):
            if b != a:
                B[:, a] *= (tau - nodes[b]) / (nodes[a] - nodes[b])
    return B


def _gauss01(q: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(q)
    return 0.5 * (x + 1.0), 0.5 * w


def _direct_weights_1d(n: int, length: float, m: float, q: int = 20) -> np.ndarray:
    """Quadrature weights w[d] with phi_i = -sum_j w[(j - i) mod n] s_j.

    The 1D periodic kernel of (m^2 - d2/dx2) is closed form,
    cosh(m(L/2 - |x|)) / (2 m sinh(mL/2)); its kink always falls on a cell
    boundary, so plain Gauss per cell sees a smooth integrand.
    """
    dx = length / n
    tau, om = _gauss01(q)
    B = _lagrange_basis(tau)                              # (q, P)
    w = np.zeros(n)
    sh = np.sinh(0.5 * m * length)
    e = np.arange(n)[:, None]                             # cell corner minus node
    arg = (e + tau[None, :] + n / 2) % n - n / 2          # lattice units, min image
    K = np.cosh(m * (0.5 * length - np.abs(arg) * dx)) / (2.0 * m * sh)
    contrib = (K * om[None, :]) @ B                       # (n, P)
    idx = np.arange(n)
    for a in range(_P):
        np.add.at(w, (idx - _HALF + a) % n, dx * contrib[:, a])
    return w


def _direct_weights_3d(n: int, length: float, m: float,
                       q_bulk: int = 6, q_shell: int = 16,
                       q_corner: int = 16) -> np.ndarray:
    """3D analogue of _direct_weights_1d for the kernel exp(-mr)/(4 pi r).

    Cells are classified by their corner offset from the target node:
    the 8 cells touching the singularity get a Duffy-transformed rule
    (the tau^2 Jacobian of xi = tau*(1, u, v) cancels the 1/r), the
    surrounding 4^3-block shell gets dense tensor Gauss, and the smooth
    bulk gets q=6 tensor Gauss evaluated for all cells at once with the
    Lagrange contraction done axis by axis. The first shell of periodic
    images is summed with the bulk rule (those terms stay a distance
    >= L/2 from the singularity, so they are smooth on every cell);
    images beyond it are below e^(-3mL/2) and ignored. Domains shorter
    than ~10/m should not use this route.
    """
    dx = length / n
    idx = np.arange(n)
    w = np.zeros((n, n, n))

    def kernel(r: np.ndarray) -> np.ndarray:
        return np.exp(-m * r) / (4.0 * np.pi * r)

    def scatter(block: np.ndarray, e1: int, e2: int, e3: int) -> None:
        d1 = (e1 - _HALF + np.arange(_P)) % n
        d2 = (e2 - _HALF + np.arange(_P)) % n
        d3 = (e3 - _HALF + np.arange(_P)) % n
        w[np.ix_(d1, d2, d3)] += block

    # bulk
    tb, ob = _gauss01(q_bulk)
    Bb = _lagrange_basis(tb)
    e_mi = (idx + n / 2) % n - n / 2
    arg = (e_mi[:, None] + tb[None, :] + n / 2) % n - n / 2
    special_ax = np.isin(e_mi, (-2, -1, 0, 1))
    r2x = (arg * dx) ** 2
    X = np.sqrt(r2x[:, None, None, :, None, None]
                + r2x[None, :, None, None, :, None]
                + r2x[None, None, :, None, None, :])
    X = kernel(X)
    X[special_ax[:, None, None] & special_ax[None, :, None]
      & special_ax[None, None, :]] = 0.0
    y2 = {s: (arg * dx + s * length) ** 2 for s in (-1, 0, 1)}
    for v1 in (-1, 0, 1):
        for v2 in (-1, 0, 1):
            for v3 in (-1, 0, 1):
                nnz = abs(v1) + abs(v2) + abs(v3)
                if nnz == 0 or m * length * np.sqrt(nnz) > 80.0:
                    continue
                X += kernel(np.sqrt(
                    y2[v1][:, None, None, :, None, None]
                    + y2[v2][None, :, None, None, :, None]
                    + y2[v3][None, None, :, None, None, :]))
    X *= ob[:, None, None] * ob[None, :, None] * ob[None, None, :]
    X = np.tensordot(X, Bb, axes=([5], [0]))
    X = np.tensordot(X, Bb, axes=([4], [0]))
    X = np.tensordot(X, Bb, axes=([3], [0]))              # (e1,e2,e3,a3,a2,a1)
    X = np.moveaxis(X, (3, 4, 5), (5, 4, 3))
    X *= dx**3
    for a1 in range(_P):
        d1 = (idx - _HALF + a1) % n
        for a2 in range(_P):
            d2 = (idx - _HALF + a2) % n
            for a3 in range(_P):
                d3 = (idx - _HALF + a3) % n
                w[np.ix_(d1, d2, d3)] += X[:, :, :, a1, a2, a3]
    del X

    # shell: the 4^3 block minus the 8 singular corner cells
    ts, os_ = _gauss01(q_shell)
    Bs = _lagrange_basis(ts)
    ww = os_[:, None, None] * os_[None, :, None] * os_[None, None, :]
    offs = (-2, -1, 0, 1)
    for e1 in offs:
        for e2 in offs:
            for e3 in offs:
                if e1 in (-1, 0) and e2 in (-1, 0) and e3 in (-1, 0):
                    continue
                y1 = (e1 + ts) * dx
                y2 = (e2 + ts) * dx
                y3 = (e3 + ts) * dx
                r = np.sqrt(y1[:, None, None] ** 2 + y2[None, :, None] ** 2
                            + y3[None, None, :] ** 2)
                K = kernel(r) * ww * dx**3
                C = np.tensordot(K, Bs, axes=([2], [0]))
                C = np.tensordot(C, Bs, axes=([1], [0]))
                C = np.tensordot(C, Bs, axes=([0], [0]))
                scatter(np.moveaxis(C, (0, 1, 2), (2, 1, 0)), e1, e2, e3)

    # corner cells: Duffy split into 3 pyramids along the largest coordinate
    td, od = _gauss01(q_corner)
    T = td[:, None, None] * np.ones((1, q_corner, q_corner))
    U = td[None, :, None] * np.ones((q_corner, 1, q_corner))
    V = td[None, None, :] * np.ones((q_corner, q_corner, 1))
    WT = od[:, None, None] * od[None, :, None] * od[None, None, :]
    R = np.sqrt(1.0 + U**2 + V**2)
    core = (T * np.exp(-m * dx * T * R) / (4.0 * np.pi * R) * WT * dx**2).ravel()
    pyramids = ((T, T * U, T * V), (T * U, T, T * V), (T * U, T * V, T))
    for s1 in (1, -1):
        for s2 in (1, -1):
            for s3 in (1, -1):
                acc = np.zeros((_P, _P, _P))
                for xi in pyramids:
                    # position within the cell in [0, 1] per axis; cells on the
                    # negative side of the node are mirrored
                    q1 = xi[0] if s1 > 0 else 1.0 - xi[0]
                    q2 = xi[1] if s2 > 0 else 1.0 - xi[1]
                    q3 = xi[2] if s3 > 0 else 1.0 - xi[2]
                    B1 = _lagrange_basis(q1.ravel())
                    B2 = _lagrange_basis(q2.ravel())
                    B3 = _lagrange_basis(q3.ravel())
                    acc += np.einsum("g,ga,gb,gc->abc", core, B1, B2, B3,
                                     optimize=True)
                scatter(acc, 0 if s1 > 0 else -1, 0 if s2 > 0 else -1,
                        0 if s3 > 0 else -1)
    return w


def _convolve_gather(w: np.ndarray, s: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Dense circulant apply out_i = sum_j w[(j - i) mod n per axis] s_j."""
    shape = s.shape
    n = shape[0]
    N = s.size
    sf = s.ravel()
    wf = w.ravel()
    grids = np.indices(shape).reshape(s.ndim, N).astype(np.int32)
    strides = np.array([int(np.prod(shape[a + 1:], dtype=int))
                        for a in range(s.ndim)], dtype=np.int32)
    out = np.empty(N)
    for lo in range(0, N, chunk):
        hi = min(lo + chunk, N)
        flat = np.zeros((hi - lo, N), dtype=np.int32)
        for a in range(s.ndim):
            flat += ((grids[a][None, :] - grids[a][lo:hi, None]) % n) * strides[a]
        out[lo:hi] = wf[flat] @ sf
    return out.reshape(shape)
