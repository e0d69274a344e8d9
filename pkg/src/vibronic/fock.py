"""Truncated electronic-vibrational Hilbert space and its sparse operators.

The space is one two-level electronic system tensored with one truncated
bosonic mode.  Basis index ``i = s * n_cutoff + n`` with ``s = 0`` for the
ground state ``|g>``, ``s = 1`` for the excited state ``|e>`` and ``n`` the
vibrational Fock number.  Every other module relies on this ordering.

Operators are ``scipy.sparse.csr_matrix`` (complex128, sorted indices),
pure states are 1-D complex arrays and density matrices are dense 2-D
complex arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import eval_genlaguerre, gammaln

from .errors import AmplitudeTooLargeError, DimensionError

__all__ = [
    "HilbertSpec",
    "annihilation",
    "sigma_minus",
    "excited_projector",
    "vib_number",
    "identity",
    "displacement",
    "displacement_matrix",
    "parity",
    "vib_parity",
    "kron",
    "dag",
    "commutator",
    "is_hermitian",
    "expect",
    "basis_state",
    "coherent_state",
    "cat_state",
    "vib_coherent",
    "vib_cat",
    "random_low_energy_state",
    "normalize",
    "ket_to_dm",
    "check_density_matrix",
]


@dataclass(frozen=True)
class HilbertSpec:
    """Size of the truncated vibronic space.

    ``n_cutoff`` vibrational levels (0..n_cutoff-1) are kept, so the total
    dimension is ``2 * n_cutoff``.
    """

    n_cutoff: int

    def __post_init__(self):
        if int(self.n_cutoff) != self.n_cutoff or self.n_cutoff < 2:
            raise ValueError(f"n_cutoff must be an integer >= 2, got {self.n_cutoff!r}")

    @property
    def dim(self) -> int:
        return 2 * self.n_cutoff

    def index(self, s: int, n: int) -> int:
        """Flat basis index of the state |s, n>."""
        if s not in (0, 1) or not 0 <= n < self.n_cutoff:
            raise IndexError(f"state (s={s}, n={n}) outside the truncated space")
        return s * self.n_cutoff + n


def _canon(m) -> sp.csr_matrix:
    # row-major storage with sorted column indices keeps iteration order
    # (and therefore every downstream floating-point sum) reproducible
    out = sp.csr_matrix(m, dtype=np.complex128)
    out.sum_duplicates()
    out.sort_indices()
    out.eliminate_zeros()
    return out


def _vib_annihilation(n_cutoff: int) -> sp.csr_matrix:
    return _canon(sp.diags(np.sqrt(np.arange(1, n_cutoff, dtype=float)), 1))


def _embed_vib(op, n_cutoff: int) -> sp.csr_matrix:
    return _canon(sp.kron(sp.identity(2), op))


def _embed_elec(op, n_cutoff: int) -> sp.csr_matrix:
    return _canon(sp.kron(op, sp.identity(n_cutoff)))


def identity(spec: HilbertSpec) -> sp.csr_matrix:
    return _canon(sp.identity(spec.dim))


def annihilation(spec: HilbertSpec) -> sp.csr_matrix:
    """Vibrational lowering operator ``I_2 (x) b`` with b|n> = sqrt(n)|n-1>.

    The truncation simply drops the outflow above the cutoff, so
    ``[b, b^dag] = I`` holds on every level except the top one.
    """
    return _embed_vib(_vib_annihilation(spec.n_cutoff), spec.n_cutoff)


def sigma_minus(spec: HilbertSpec) -> sp.csr_matrix:
    """Electronic lowering operator ``|g><e| (x) I_vib``."""
    lower = sp.csr_matrix(([1.0], ([0], [1])), shape=(2, 2))
    return _embed_elec(lower, spec.n_cutoff)


def excited_projector(spec: HilbertSpec) -> sp.csr_matrix:
    """``sigma^dag sigma`` (population of |e>)."""
    return _embed_elec(sp.diags([0.0, 1.0]), spec.n_cutoff)


def vib_number(spec: HilbertSpec) -> sp.csr_matrix:
    """``b^dag b`` on the full space."""
    return _embed_vib(sp.diags(np.arange(spec.n_cutoff, dtype=float)), spec.n_cutoff)


def displacement_matrix(n_cutoff: int, alpha: complex) -> np.ndarray:
    """Dense truncated matrix of the single-mode displacement D(alpha).

    Elements are the exact infinite-space Fock matrix elements

        <m|D|n> = sqrt(n!/m!) alpha^(m-n) exp(-|alpha|^2/2) L_n^(m-n)(|alpha|^2),  m >= n

    and the mirrored expression with ``-conj(alpha)`` above the diagonal.
    Because nothing is renormalized, the matrix is unitary only on the
    part of the ladder well below the cutoff.
    """
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    m_idx, n_idx = np.meshgrid(np.arange(n_cutoff), np.arange(n_cutoff), indexing="ij")
    lo = np.minimum(m_idx, n_idx)
    k = np.abs(m_idx - n_idx)
    log_ratio = 0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1))
    lag = eval_genlaguerre(lo, k, x)
    base = np.where(m_idx >= n_idx, alpha, -np.conj(alpha))
    with np.errstate(invalid="ignore"):
        power = np.where(k == 0, 1.0 + 0j, base.astype(complex) ** k)
    return np.exp(log_ratio - x / 2) * power * lag


def displacement(spec: HilbertSpec, eta: float) -> sp.csr_matrix:
    """Vibrational displacement ``I_2 (x) D(eta)`` (identity on the electronic factor)."""
    if not np.isfinite(eta):
        raise ValueError(f"eta must be finite, got {eta!r}")
    d = displacement_matrix(spec.n_cutoff, eta)
    d[np.abs(d) < 1e-300] = 0.0
    return _embed_vib(sp.csr_matrix(d), spec.n_cutoff)


def vib_parity(n_cutoff: int) -> sp.csr_matrix:
    """Vibrational parity ``(-1)^(b^dag b)`` on the bare mode."""
    return _canon(sp.diags((-1.0) ** np.arange(n_cutoff)))


def parity(spec: HilbertSpec) -> sp.csr_matrix:
    """Total parity ``exp[i pi (sigma^dag sigma + b^dag b)]``: entry (-1)^(s+n)."""
    s = np.repeat([0, 1], spec.n_cutoff)
    n = np.tile(np.arange(spec.n_cutoff), 2)
    return _canon(sp.diags((-1.0) ** (s + n)))


def kron(a, b) -> sp.csr_matrix:
    return _canon(sp.kron(sp.csr_matrix(a), sp.csr_matrix(b)))


def dag(a) -> sp.csr_matrix:
    return _canon(sp.csr_matrix(a).conj().T)


def commutator(a, b) -> sp.csr_matrix:
    a = sp.csr_matrix(a)
    b = sp.csr_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"cannot commute {a.shape} with {b.shape}")
    return _canon(a @ b - b @ a)


def is_hermitian(a, tol: float = 1e-12) -> bool:
    diff = sp.csr_matrix(a) - sp.csr_matrix(a).conj().T
    return diff.nnz == 0 or float(np.max(np.abs(diff.data))) < tol


def expect(op, state: np.ndarray) -> complex:
    """Expectation value on a ket (normalized internally) or a density matrix."""
    state = np.asarray(state)
    if op.shape[0] != state.shape[0]:
        raise DimensionError(f"operator dim {op.shape[0]} != state dim {state.shape[0]}")
    if state.ndim == 1:
        return complex(np.vdot(state, op @ state) / np.vdot(state, state).real)
    if sp.issparse(op):
        return complex(op.T.multiply(state).sum())
    return complex(np.trace(op @ state))


def normalize(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=np.complex128)
    return np.outer(psi, psi.conj())


def basis_state(spec: HilbertSpec, s: int, n: int) -> np.ndarray:
    psi = np.zeros(spec.dim, dtype=np.complex128)
    psi[spec.index(s, n)] = 1.0
    return psi


def _check_amplitude(n_cutoff: int, beta: complex) -> None:
    if abs(beta) ** 2 >= n_cutoff / 4:
        raise AmplitudeTooLargeError(
            f"|beta|^2 = {abs(beta) ** 2:.4g} must stay below n_cutoff/4 = {n_cutoff / 4:.4g}"
        )


def _coherent_amplitudes(n_cutoff: int, beta: complex) -> np.ndarray:
    n = np.arange(n_cutoff)
    beta = complex(beta)
    if beta == 0:
        out = np.zeros(n_cutoff, dtype=np.complex128)
        out[0] = 1.0
        return out
    log_mag = -abs(beta) ** 2 / 2 + n * np.log(abs(beta)) - 0.5 * gammaln(n + 1)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(beta))


def vib_coherent(n_cutoff: int, beta: complex) -> np.ndarray:
    """Normalized truncated coherent state of the bare vibrational mode."""
    _check_amplitude(n_cutoff, beta)
    return normalize(_coherent_amplitudes(n_cutoff, beta))


def vib_cat(n_cutoff: int, beta: complex, sign: int) -> np.ndarray:
    """``(|beta> + sign |-beta>) / sqrt(N)`` with ``N = 2 + sign 2 exp(-2|beta|^2)``.

    The quoted normalization is applied verbatim (no re-normalization of the
    truncated vector), so the norm deviates from 1 only by the cutoff tail.
    """
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign!r}")
    _check_amplitude(n_cutoff, beta)
    norm = 2.0 + sign * 2.0 * np.exp(-2.0 * abs(beta) ** 2)
    if norm < 1e-12:
        raise ValueError("odd cat with beta = 0 has zero norm")
    psi = _coherent_amplitudes(n_cutoff, beta) + sign * _coherent_amplitudes(n_cutoff, -beta)
    return psi / np.sqrt(norm)


def coherent_state(spec: HilbertSpec, beta: complex) -> np.ndarray:
    """``|g> (x) |beta>`` on the full space."""
    return np.kron([1.0, 0.0], vib_coherent(spec.n_cutoff, beta)).astype(np.complex128)


def cat_state(spec: HilbertSpec, beta: complex, sign: int) -> np.ndarray:
    """``|g> (x) |cat_sign>`` on the full space."""
    return np.kron([1.0, 0.0], vib_cat(spec.n_cutoff, beta, sign)).astype(np.complex128)


def random_low_energy_state(spec: HilbertSpec, rng: np.random.Generator,
                            n_max: int = 3) -> np.ndarray:
    """Random normalized superposition of |s, n> with n < n_max."""
    n_max = min(n_max, spec.n_cutoff)
    psi = np.zeros(spec.dim, dtype=np.complex128)
    for s in (0, 1):
        lo = spec.index(s, 0)
        psi[lo:lo + n_max] = rng.normal(size=n_max) + 1j * rng.normal(size=n_max)
    return normalize(psi)


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10, trace_tol: float = 1e-8,
                         pos_tol: float = 1e-8) -> list[str]:
    """Return a list of violated density-matrix invariants (empty when valid)."""
    rho = np.asarray(rho)
    problems = []
    if np.max(np.abs(rho - rho.conj().T)) > herm_tol:
        problems.append("not Hermitian")
    if abs(np.trace(rho) - 1.0) > trace_tol:
        problems.append(f"trace {np.trace(rho).real:.12g} != 1")
    evals = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    if evals.min() < -pos_tol:
        problems.append(f"negative eigenvalue {evals.min():.3g}")
    return problems
