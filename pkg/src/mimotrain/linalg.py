"""Dense complex linear-algebra kernels shared by both training schemes.

Everything here operates on plain ``numpy`` arrays of ``complex128``.  The
pseudo-inverse is SVD based with a rank tolerance of
``max(rows, cols) * eps * sigma_max``, which stays robust for the
ill-conditioned channel draws that dominate the error rate at high SNR.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "SingularMatrixError",
    "pinv",
    "regularized_pinv",
    "null_projector",
    "taylor_pinv",
    "sample_complex_gaussian",
    "stream_rng",
]


class SingularMatrixError(np.linalg.LinAlgError):
    """A matrix that must have full column rank is numerically rank deficient."""


def _checked_svd(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {a.shape}")
    rows, cols = a.shape
    if rows < cols:
        raise ValueError(f"expected rows >= cols, got {rows}x{cols}")
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tol = max(rows, cols) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    return u, s, vh, tol


def pinv(a):
    """Pseudo-inverse ``(A^H A)^{-1} A^H`` of a tall full-column-rank matrix.

    Raises
    ------
    SingularMatrixError
        If the smallest singular value falls below the rank tolerance.
    """
    u, s, vh, tol = _checked_svd(a)
    if s.size and s[-1] <= tol:
        raise SingularMatrixError(
            f"smallest singular value {s[-1]:.3e} below tolerance {tol:.3e}"
        )
    return (vh.conj().T * (1.0 / s)) @ u.conj().T


def regularized_pinv(a):
    """Pseudo-inverse that zeroes singular values below the rank tolerance.

    Returns ``(pinv, degenerate)`` where ``degenerate`` flags that at least
    one singular value was dropped.  Receivers use this variant so that a
    rank-deficient channel estimate still yields bit decisions instead of
    aborting the frame.
    """
    u, s, vh, tol = _checked_svd(a)
    keep = s > tol
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vh.conj().T * inv) @ u.conj().T, bool(~keep.all())


def null_projector(h):
    """Orthogonal projector onto the orthogonal complement of ``range(H)``.

    Returns ``I - H (H^H H)^{-1} H^H``, a Hermitian idempotent matrix of
    trace ``rows - cols``.
    """
    u, s, vh, tol = _checked_svd(h)
    if s.size and s[-1] <= tol:
        raise SingularMatrixError(
            f"smallest singular value {s[-1]:.3e} below tolerance {tol:.3e}"
        )
    rows = h.shape[0]
    proj = np.eye(rows, dtype=np.complex128) - u @ u.conj().T
    # symmetrise away the last bits of rounding
    return 0.5 * (proj + proj.conj().T)


def taylor_pinv(h, dh):
    """First-order expansion of ``pinv(H + dH)`` around ``H``.

    Assembles the three-term expression

    ``H^# - H^# dH H^# + (H^H H)^{-1} dH^H P``

    with ``P`` the projector from :func:`null_projector`.  The omitted
    remainder is quadratic in ``dH``.
    """
    h = np.asarray(h, dtype=np.complex128)
    dh = np.asarray(dh, dtype=np.complex128)
    if h.shape != dh.shape:
        raise ValueError(f"shape mismatch: {h.shape} vs {dh.shape}")
    hp = pinv(h)
    proj = null_projector(h)
    gram = h.conj().T @ h
    third = np.linalg.solve(gram, dh.conj().T @ proj)
    return hp - hp @ dh @ hp + third


def sample_complex_gaussian(rows, cols, variance, rng):
    """Circularly symmetric complex Gaussian matrix with ``E|x|^2 = variance``.

    Real and imaginary parts are independent ``N(0, variance / 2)``.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return scale * (re + 1j * im)


def stream_rng(master_seed, stream):
    """Counter-based generator for sub-stream ``stream`` of ``master_seed``.

    The returned generator is a pure function of ``(master_seed, stream)``,
    so trial ``i`` draws the same variates no matter how trials are batched
    or scheduled across workers.
    """
    seq = np.random.SeedSequence(master_seed, spawn_key=(stream,))
    return np.random.Generator(np.random.Philox(seq))
