"""Lindblad superoperator, time propagation and steady states.

Vectorization is column stacking, ``vec(rho)[i + j*D] = rho[i, j]``, for
which ``vec(A rho B) = (B^T kron A) vec(rho)``.  The generator is therefore

    L = -i (I kron H - H^T kron I)
        + sum_c (gamma_c / 2) (2 conj(c) kron c - I kron c^+c - (c^+c)^T kron I)

with gamma_c the angular rate 2pi * nu_c.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import DimensionError, SingularSystemError, StepSizeError
from .fock import HilbertSpec
from .model import JumpChannel

log = logging.getLogger(__name__)

__all__ = [
    "build_liouvillian",
    "SteadyState",
    "steady_state",
    "propagate",
    "apply_liouvillian",
    "population_leak",
    "vec",
    "unvec",
    "hermitize",
    "trace_distance",
    "DegenerateSteadyStateWarning",
    "DIRECT_SOLVE_LIMIT",
]

# above this many unknowns the steady state goes through preconditioned GMRES
DIRECT_SOLVE_LIMIT = 40_000


class DegenerateSteadyStateWarning(UserWarning):
    pass


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho, dtype=np.complex128).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    return v.reshape((dim, dim), order="F")


def hermitize(rho: np.ndarray) -> np.ndarray:
    return (rho + rho.conj().T) / 2


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    evals = np.linalg.eigvalsh(hermitize(np.asarray(a) - np.asarray(b)))
    return 0.5 * float(np.sum(np.abs(evals)))


def build_liouvillian(h, channels: list[JumpChannel]) -> sp.csc_matrix:
    """Column-stacked Lindblad generator for Hamiltonian ``h`` (rad/ns)."""
    h = sp.csr_matrix(h, dtype=np.complex128)
    d = h.shape[0]
    if h.shape != (d, d):
        raise DimensionError(f"Hamiltonian must be square, got {h.shape}")
    eye = sp.identity(d, dtype=np.complex128, format="csr")
    lv = -1j * (sp.kron(eye, h) - sp.kron(h.T, eye))
    for ch in channels:
        c = sp.csr_matrix(ch.operator, dtype=np.complex128)
        if c.shape != (d, d):
            raise DimensionError(f"jump operator {ch.label!r} has shape {c.shape}, expected {(d, d)}")
        if ch.rate == 0:
            continue
        cdc = (c.conj().T @ c).tocsr()
        lv = lv + ch.angular_rate / 2 * (
            2 * sp.kron(c.conj(), c) - sp.kron(eye, cdc) - sp.kron(cdc.T, eye)
        )
    lv = sp.csc_matrix(lv)
    lv.sum_duplicates()
    lv.sort_indices()
    return lv


def apply_liouvillian(lv, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return unvec(lv @ vec(rho), d)


@dataclass
class SteadyState:
    rho: np.ndarray
    residual: float
    method: str

    def expect(self, op) -> float:
        from .fock import expect

        return expect(op, self.rho).real


def _trace_row(d: int) -> sp.csr_matrix:
    cols = np.arange(d) * (d + 1)
    return sp.csr_matrix((np.ones(d), (np.zeros(d, dtype=int), cols)), shape=(1, d * d))


def _constrained_system(lv):
    d2 = lv.shape[0]
    d = int(round(np.sqrt(d2)))
    # replace the rho_00 equation by Tr(rho) = 1
    rows = sp.csr_matrix(lv, dtype=np.complex128)[1:]
    a = sp.vstack([_trace_row(d), rows]).tocsc()
    rhs = np.zeros(d2, dtype=np.complex128)
    rhs[0] = 1.0
    return a, rhs, d


def steady_state(lv, *, check_degeneracy: bool = False, tol: float = 1e-10,
                 method: str = "auto") -> SteadyState:
    """Solve ``L vec(rho) = 0`` with ``Tr rho = 1``.

    One scalar equation is swapped for the trace condition and the system is
    factorized directly (SuperLU).  Systems with more than
    ``DIRECT_SOLVE_LIMIT`` unknowns, or ``method="iterative"``, use restarted
    GMRES preconditioned by an incomplete LU factorization.

    With ``check_degeneracy`` the two slowest Liouvillian eigenvalues are
    inspected and a :class:`DegenerateSteadyStateWarning` is emitted when a
    second, independent fixed point is numerically present.
    """
    a, rhs, d = _constrained_system(lv)
    if method == "auto":
        method = "direct" if a.shape[0] <= DIRECT_SOLVE_LIMIT else "iterative"
    if method == "direct":
        with warnings.catch_warnings():
            warnings.simplefilter("error", spla.MatrixRankWarning)
            try:
                x = spla.spsolve(a, rhs, use_umfpack=False)
            except (spla.MatrixRankWarning, RuntimeError) as exc:
                raise SingularSystemError(f"constrained steady-state system is singular: {exc}") from exc
    elif method == "iterative":
        try:
            ilu = spla.spilu(a, drop_tol=1e-6, fill_factor=20)
        except RuntimeError as exc:
            raise SingularSystemError(f"ILU preconditioner failed: {exc}") from exc
        prec = spla.LinearOperator(a.shape, ilu.solve, dtype=np.complex128)
        x, info = spla.gmres(a, rhs, M=prec, rtol=tol, restart=200, maxiter=2000)
        if info != 0:
            raise SingularSystemError(f"GMRES did not converge (info={info})")
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("steady-state solve produced non-finite values")
    rho = hermitize(unvec(x, d))
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(lv @ vec(rho)))
    if check_degeneracy:
        _check_degeneracy(lv, residual)
    log.debug("steady state: dim=%d method=%s residual=%.3g", d, method, residual)
    return SteadyState(rho=rho, residual=residual, method=method)


def _check_degeneracy(lv, residual: float, rel_tol: float = 1e-9) -> None:
    scale = float(abs(lv).sum(axis=0).max())
    shift = -1e-7 * scale
    try:
        vals = spla.eigs(lv, k=2, sigma=shift, which="LM", return_eigenvectors=False)
    except Exception as exc:  # eigs may fail to converge on tiny systems
        log.debug("degeneracy check skipped: %s", exc)
        return
    vals = np.sort(np.abs(vals))
    if vals[1] < rel_tol * scale:
        warnings.warn(
            f"Liouvillian has a second near-zero eigenvalue ({vals[1]:.3g}); "
            "steady state is not unique",
            DegenerateSteadyStateWarning,
            stacklevel=3,
        )


def propagate(lv, rho0: np.ndarray, t_grid, *, rtol: float = 1e-9, atol: float = 1e-11,
              method: str = "BDF") -> list[np.ndarray]:
    """Integrate ``d rho/dt = L rho`` and return rho at each time in ``t_grid`` (ns).

    An implicit adaptive integrator is used because vibrational damping and
    strong drives make the generator stiff.  Outputs are Hermitized.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0:
        raise ValueError("t_grid must be a non-empty 1-D sequence")
    if np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    rho0 = np.asarray(rho0, dtype=np.complex128)
    d = rho0.shape[0]
    if lv.shape[0] != d * d:
        raise DimensionError(f"Liouvillian acts on dim {lv.shape[0]}, rho0 has dim {d}")
    if lv.nnz == 0:
        return [hermitize(rho0.copy()) for _ in t_grid]
    lv = sp.csr_matrix(lv)
    y0 = vec(rho0)
    t0 = min(0.0, t_grid[0])
    out: list[np.ndarray] = []
    sol = solve_ivp(
        lambda t, y: lv @ y,
        (t0, t_grid[-1]) if t_grid[-1] > t0 else (t0, t0 + 1e-30),
        y0,
        method=method,
        t_eval=t_grid,
        jac=lv if method in ("BDF", "Radau", "LSODA") else None,
        rtol=rtol,
        atol=atol,
    )
    if sol.status != 0:
        raise StepSizeError(f"integration failed: {sol.message}")
    for k in range(t_grid.size):
        out.append(hermitize(unvec(sol.y[:, k], d)))
    return out


def population_leak(rho: np.ndarray, spec: HilbertSpec) -> float:
    """Total population in the top two Fock levels of both electronic branches."""
    diag = np.real(np.diag(rho))
    n = spec.n_cutoff
    top = [n - 2, n - 1, 2 * n - 2, 2 * n - 1]
    return float(np.sum(diag[top]))
