"""Dense complex linear algebra with fixed index conventions.

Conventions used across the package:
  * register/qubit 0 is the most significant bit of a flattened index;
  * replica (copy) index varies slower than the intra-replica index;
  * vectorization interleaves (ket, bra) per copy, so the vectorized
    permutation state on m copies of a q-qubit space reads
    |P_q(s)> = sum |i_1, i_{s(1)}, i_2, i_{s(2)}, ..., i_m, i_{s(m)}>.
"""
from __future__ import annotations

import numpy as np

from .permgroup import Permutation


def digit_permute_codes(images, base: int) -> np.ndarray:
    """Index map for permuting base-`base` digit strings.

    Returns IDX with IDX[code] = code', where digit j of code' equals digit
    images[j] of code (digit 0 most significant).
    """
    m = len(images)
    codes = np.arange(base**m)
    out = np.zeros_like(codes)
    for j, src in enumerate(images):
        dig = (codes // base ** (m - 1 - src)) % base
        out += dig * base ** (m - 1 - j)
    return out


def permutation_operator(p: Permutation, d: int) -> np.ndarray:
    """P(p) on m copies of C^d: P(p)|y_1..y_m> = |y_{p(1)}..y_{p(m)}>."""
    dim = d ** p.degree
    rows = digit_permute_codes(p.images, d)
    P = np.zeros((dim, dim))
    P[rows, np.arange(dim)] = 1.0
    return P


def permutation_vector_state(p: Permutation, q: int, m: int = None) -> np.ndarray:
    """Vectorized permutation operator on m copies of a q-qubit space.

    Unnormalized; inner products satisfy <P_q(t)|P_q(s)> = (2^q)^{#(s t^-1)}.
    """
    if m is None:
        m = p.degree
    if p.degree != m:
        raise ValueError("permutation degree does not match copy count")
    d = 2**q
    v = np.zeros(d ** (2 * m), dtype=complex)
    # index = interleaved digits (i_1, i_{p(1)}, i_2, i_{p(2)}, ...)
    ivecs = np.arange(d**m)
    idx = np.zeros_like(ivecs)
    for j in range(m):
        ket = (ivecs // d ** (m - 1 - j)) % d
        bra = (ivecs // d ** (m - 1 - p.images[j])) % d
        idx += ket * d ** (2 * m - 1 - 2 * j) + bra * d ** (2 * m - 2 - 2 * j)
    v[idx] = 1.0
    return v


def trace_norm(a: np.ndarray, herm_tol: float = 1e-8) -> float:
    """Sum of singular values; Hermitian inputs go through eigvalsh."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("trace_norm expects a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite entries")
    scale = max(np.abs(a).max(), 1.0)
    if np.abs(a - a.conj().T).max() <= herm_tol * scale:
        return float(np.abs(np.linalg.eigvalsh((a + a.conj().T) / 2)).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


def partial_trace(a: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out the factors of a = op on (x) H_i not listed in `keep`."""
    dims = list(dims)
    keep = sorted(keep)
    n = len(dims)
    if a.shape != (int(np.prod(dims)), int(np.prod(dims))):
        raise ValueError(f"shape {a.shape} does not factor as {dims}")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError("keep indices out of range")
    T = a.reshape(dims + dims)
    drop = [i for i in range(n) if i not in keep]
    for count, i in enumerate(drop):
        ax = i - sum(1 for j in drop[:count] if j < i)
        T = np.trace(T, axis1=ax, axis2=ax + T.ndim // 2)
    dkeep = int(np.prod([dims[i] for i in keep])) if keep else 1
    return T.reshape(dkeep, dkeep)


def kron_all(mats) -> np.ndarray:
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def unitary_conjugation_invariance_check(v: np.ndarray, p: Permutation, m: int = None) -> float:
    """Defect ||(V (x) V*)^{(x)m} |P(p)> - |P(p)>||.

    This identity (zero defect for any unitary V) is what licenses trading
    gauge unitaries on the temporal legs for nothing inside diagram values.
    """
    v = np.asarray(v, dtype=complex)
    d = v.shape[0]
    herm_defect = np.abs(v.conj().T @ v - np.eye(d)).max()
    if herm_defect > 1e-8:
        raise ValueError(f"input not unitary (defect {herm_defect:.2e})")
    q = int(round(np.log2(d)))
    if 2**q != d:
        raise ValueError("dimension must be a power of two")
    if m is None:
        m = p.degree
    vec = permutation_vector_state(p, q, m)
    op = kron_all([np.kron(v, v.conj())] * m)
    return float(np.linalg.norm(op @ vec - vec))


def haar_moment_operator(n_a: int, k: int) -> np.ndarray:
    """k-th moment of Haar-random pure states on n_a qubits.

    Equals sum_{s in S_k} P(s) / (d (d+1) ... (d+k-1)) with d = 2^n_a;
    unit trace, supported on the symmetric subspace.
    """
    from .permgroup import enumerate_sym

    if n_a * k > 14:
        raise ValueError("2^(n_a*k) too large for dense construction")
    d = 2**n_a
    denom = 1.0
    for j in range(k):
        denom *= d + j
    out = np.zeros((d**k, d**k))
    for p in enumerate_sym(k):
        out += permutation_operator(p, d)
    return (out / denom).astype(complex)


def assert_moment_operator(rho: np.ndarray, tol: float = 1e-9) -> None:
    """Hermitian, unit trace, eigenvalues >= -tol."""
    if np.abs(rho - rho.conj().T).max() > tol:
        raise AssertionError("moment operator not Hermitian")
    if abs(np.trace(rho) - 1.0) > tol:
        raise AssertionError("moment operator trace != 1")
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if w.min() < -10 * tol:
        raise AssertionError(f"moment operator not PSD (min eig {w.min():.2e})")
