"""Complex linear algebra over qubit registers and open-system time evolution.

Conventions used throughout the package:

* All frequencies and rates are angular, in rad/us and 1/us respectively.
* Basis ordering: qubit 1 is the most significant bit.  Basis index ``b``
  has qubit ``j`` excited iff bit ``(L - j)`` of ``b`` is set, so index 0
  is the all-ground product state.
* ``sigma_z = |e><e| - |g><g|``, i.e. the excited state is the +1
  eigenstate.  With the (g, e) ordering of the single-qubit basis this
  makes ``sigma_z = diag(-1, +1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eig as dense_eig

__all__ = [
    "StateVector",
    "DensityOperator",
    "LinearOperator",
    "TimeDependentOperator",
    "LindbladModel",
    "TimeGrid",
    "NullSpaceResult",
    "SINGLE_QUBIT_OPS",
    "pauli_string",
    "basis_index",
    "product_state",
    "evolve_state",
    "evolve_density",
    "lindblad_rhs",
    "liouvillian_matrix",
    "steady_states",
    "steady_state_projection",
    "expectation",
    "StepInstabilityError",
    "PositivityError",
]

NORM_TOL = 1e-9
HERM_TOL = 1e-12
DRIFT_HARD = 1e-6      # one-step norm drift that aborts integration
DRIFT_SOFT = 1e-8      # largest renormalization correction tolerated per step


class StepInstabilityError(RuntimeError):
    """Integration step too large: norm drifted beyond bounds in one step."""


class PositivityError(RuntimeError):
    """Density matrix developed a negative eigenvalue beyond tolerance."""


# single-qubit operators in the (g, e) basis ordering
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, 1j], [-1j, 0]], dtype=complex)
_SZ = np.array([[-1, 0], [0, 1]], dtype=complex)
_SP = np.array([[0, 0], [1, 0]], dtype=complex)   # |e><g|
_SM = np.array([[0, 1], [0, 0]], dtype=complex)   # |g><e|
_NUM = np.array([[0, 0], [0, 1]], dtype=complex)  # |e><e|

SINGLE_QUBIT_OPS = {
    "x": _SX,
    "y": _SY,
    "z": _SZ,
    "+": _SP,
    "-": _SM,
    "n": _NUM,
}


@dataclass(frozen=True)
class StateVector:
    """Pure state of an L-qubit register.

    ``amplitudes`` has length ``2**L`` and unit Euclidean norm (within
    1e-9).  Instances are immutable; evolution routines return copies.
    """

    amplitudes: np.ndarray
    L: int

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amp)
        if self.L < 1 or amp.shape != (2 ** self.L,):
            raise ValueError(f"amplitudes must have shape (2**{self.L},)")
        nrm = np.linalg.norm(amp)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {nrm} deviates from 1 beyond {NORM_TOL}")

    def to_density(self) -> "DensityOperator":
        return DensityOperator(np.outer(self.amplitudes, self.amplitudes.conj()), self.L)


@dataclass(frozen=True)
class DensityOperator:
    """Mixed state of an L-qubit register: Hermitian, unit trace, positive."""

    matrix: np.ndarray
    L: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        d = 2 ** self.L
        if m.shape != (d, d):
            raise ValueError(f"matrix must have shape ({d}, {d})")
        if np.max(np.abs(m - m.conj().T)) > NORM_TOL:
            raise ValueError("density matrix is not Hermitian within 1e-9")
        tr = np.trace(m).real
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"trace {tr} deviates from 1 beyond {NORM_TOL}")
        wmin = float(np.linalg.eigvalsh(m)[0])
        if wmin < -1e-8:
            raise ValueError(f"minimum eigenvalue {wmin} below -1e-8")


class LinearOperator:
    """Sparse operator on a 2**L-dimensional (or vectorized) Hilbert space.

    Wraps a CSR matrix together with a Hermiticity flag.  Supports the
    small amount of arithmetic needed to assemble Hamiltonians.
    """

    def __init__(self, entries, hermitian: bool | None = None):
        m = sp.csr_matrix(entries, dtype=complex)
        if m.shape[0] != m.shape[1]:
            raise ValueError("operator must be square")
        self.entries = m
        self.dim = m.shape[0]
        if hermitian is None:
            hermitian = self._check_hermitian()
        elif hermitian and not self._check_hermitian():
            raise ValueError("hermitian flag set but operator is not Hermitian")
        self.hermitian_flag = bool(hermitian)

    def _check_hermitian(self) -> bool:
        diff = (self.entries - self.entries.conj().T).tocoo()
        return diff.nnz == 0 or np.max(np.abs(diff.data)) <= HERM_TOL

    def to_dense(self) -> np.ndarray:
        return self.entries.toarray()

    def dag(self) -> "LinearOperator":
        return LinearOperator(self.entries.conj().T.tocsr(), hermitian=self.hermitian_flag)

    def dot(self, vec: np.ndarray) -> np.ndarray:
        return self.entries.dot(vec)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(self.entries + other.entries)

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(self.entries - other.entries)

    def __mul__(self, scalar: complex) -> "LinearOperator":
        return LinearOperator(self.entries * scalar)

    __rmul__ = __mul__

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        return LinearOperator(self.entries @ other.entries)


class TimeDependentOperator:
    """Hamiltonian of the form ``sum_k c_k(t) A_k [+ conj(c_k(t)) A_k^dag]``.

    Each term holds a coefficient (complex constant or callable
    ``t -> complex``) and a static sparse operator.  Terms added with
    ``add_conjugate=True`` contribute their Hermitian conjugate with the
    conjugated coefficient, which keeps H(t) Hermitian by construction.
    """

    _DENSE_MAX = 128   # small systems run faster on dense term matrices

    def __init__(self, dim: int):
        self.dim = dim
        self._terms: list[tuple[object, object, bool]] = []

    def add_term(self, coef, op: LinearOperator, add_conjugate: bool = False):
        mat = op.to_dense() if self.dim <= self._DENSE_MAX else op.entries
        self._terms.append((coef, mat, False))
        if add_conjugate:
            dag = mat.conj().T if isinstance(mat, np.ndarray) else mat.conj().T.tocsr()
            self._terms.append((coef, dag, True))
        return self

    def at(self, t: float) -> np.ndarray:
        h = np.zeros((self.dim, self.dim), dtype=complex)
        for c, mat in self._coefs(t):
            h += c * (mat if isinstance(mat, np.ndarray) else mat.toarray())
        return h

    def matvec(self, t: float, psi: np.ndarray) -> np.ndarray:
        out = np.zeros_like(psi)
        for c, mat in self._coefs(t):
            out += c * mat.dot(psi)
        return out

    def _coefs(self, t: float):
        for coef, mat, conjugate in self._terms:
            c = coef(t) if callable(coef) else coef
            yield (np.conj(c) if conjugate else c), mat


@dataclass(frozen=True)
class LindbladModel:
    """Hamiltonian plus jump operators with non-negative rates (1/us)."""

    hamiltonian: LinearOperator | TimeDependentOperator
    jumps: tuple = ()

    def __post_init__(self):
        dim = self.hamiltonian.dim
        jumps = tuple(self.jumps)
        object.__setattr__(self, "jumps", jumps)
        for op, rate in jumps:
            if rate < 0:
                raise ValueError("jump rates must be >= 0")
            if op.dim != dim:
                raise ValueError("jump operator dimension mismatch")

    @property
    def dim(self) -> int:
        return self.hamiltonian.dim

    def is_static(self) -> bool:
        return isinstance(self.hamiltonian, LinearOperator)


@dataclass(frozen=True)
class TimeGrid:
    """Fixed-step integration grid with a sampling stride."""

    t_start: float
    dt_integration: float
    n_steps: int
    sample_stride: int = 1

    def __post_init__(self):
        if self.dt_integration <= 0:
            raise ValueError("dt_integration must be > 0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.sample_stride < 1 or self.n_steps % self.sample_stride != 0:
            raise ValueError("sample_stride must be >= 1 and divide n_steps")

    @property
    def sample_times(self) -> np.ndarray:
        k = self.n_steps // self.sample_stride
        return self.t_start + self.dt_integration * self.sample_stride * np.arange(k + 1)


def basis_index(excited_sites: Sequence[int], L: int) -> int:
    """Basis index of the product state with the given 1-based sites excited."""
    idx = 0
    for s in excited_sites:
        if not 1 <= s <= L:
            raise ValueError(f"site {s} out of range 1..{L}")
        idx |= 1 << (L - s)
    return idx


def product_state(excited_sites: Sequence[int], L: int) -> StateVector:
    amp = np.zeros(2 ** L, dtype=complex)
    amp[basis_index(excited_sites, L)] = 1.0
    return StateVector(amp, L)


def pauli_string(spec: Sequence[tuple[int, str]], L: int) -> LinearOperator:
    """Tensor product of single-qubit operators at given sites, identity elsewhere.

    Parameters
    ----------
    spec : sequence of (site, axis)
        1-based site indices with axis in {x, y, z, +, -, n}.  Sites must
        be distinct.
    L : int
        Number of qubits.
    """
    sites = [s for s, _ in spec]
    if len(set(sites)) != len(sites):
        raise ValueError("duplicate site in pauli string")
    by_site = {}
    for s, ax in spec:
        if not 1 <= s <= L:
            raise ValueError(f"site {s} out of range 1..{L}")
        if ax not in SINGLE_QUBIT_OPS:
            raise ValueError(f"unknown axis {ax!r}")
        by_site[s] = SINGLE_QUBIT_OPS[ax]
    out = sp.identity(1, dtype=complex, format="csr")
    for j in range(1, L + 1):
        m = by_site.get(j)
        out = sp.kron(out, sp.csr_matrix(m) if m is not None else sp.identity(2, dtype=complex),
                      format="csr")
    return LinearOperator(out)


def _rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def evolve_state(hamiltonian, psi0: StateVector, grid: TimeGrid) -> list[StateVector]:
    """Integrate the Schrodinger equation with classical fixed-step RK4.

    The state is renormalized after every step.  A one-step norm drift
    above 1e-6 aborts as a step-size instability; a drift above 1e-8 (the
    largest tolerated renormalization correction) aborts as well.

    Returns the sampled states, including the initial one.
    """
    if isinstance(hamiltonian, LinearOperator):
        if not hamiltonian.hermitian_flag:
            raise ValueError("Hamiltonian must be Hermitian")
        mat = hamiltonian.entries

        def rhs(t, y):
            return -1j * mat.dot(y)
    else:
        def rhs(t, y):
            return -1j * hamiltonian.matvec(t, y)

    psi = psi0.amplitudes.copy()
    dt = grid.dt_integration
    samples = [StateVector(psi.copy(), psi0.L)]
    for step in range(1, grid.n_steps + 1):
        t = grid.t_start + (step - 1) * dt
        psi = _rk4_step(rhs, t, psi, dt)
        nrm = np.linalg.norm(psi)
        drift = abs(nrm - 1.0)
        if drift > DRIFT_HARD:
            raise StepInstabilityError(
                f"norm drift {drift:.2e} in one step at t={t + dt:.6f} us; reduce dt_integration")
        if drift > DRIFT_SOFT:
            raise StepInstabilityError(
                f"renormalization correction {drift:.2e} exceeds {DRIFT_SOFT} at t={t + dt:.6f} us")
        psi /= nrm
        if step % grid.sample_stride == 0:
            samples.append(StateVector(psi.copy(), psi0.L))
    return samples


class _LindbladRHS:
    """Precomputed dense right-hand side of a Lindblad master equation."""

    def __init__(self, model: LindbladModel):
        self.model = model
        self.static = model.is_static()
        if self.static:
            if not model.hamiltonian.hermitian_flag:
                raise ValueError("Hamiltonian must be Hermitian")
            self.h = model.hamiltonian.to_dense()
        self.ops = [(op.to_dense(), rate) for op, rate in model.jumps]
        self.ldl_sum = np.zeros((model.dim, model.dim), dtype=complex)
        for l, rate in self.ops:
            self.ldl_sum += rate * (l.conj().T @ l)

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        h = self.h if self.static else self.model.hamiltonian.at(t)
        out = -1j * (h @ rho - rho @ h)
        for l, rate in self.ops:
            out += rate * (l @ rho @ l.conj().T)
        out -= 0.5 * (self.ldl_sum @ rho + rho @ self.ldl_sum)
        return out


def lindblad_rhs(model: LindbladModel, rho: np.ndarray, t: float = 0.0) -> np.ndarray:
    """Right-hand side of the master equation for the given model."""
    return _LindbladRHS(model)(t, rho)


def evolve_density(model: LindbladModel, rho0: DensityOperator,
                   grid: TimeGrid) -> list[DensityOperator]:
    """RK4 integration of the Lindblad master equation.

    Every returned sample is validated against the DensityOperator
    invariants; a positivity violation beyond -1e-6 during integration
    raises :class:`PositivityError` (step too large).
    """
    rhs = _LindbladRHS(model)
    rho = rho0.matrix.copy()
    dt = grid.dt_integration
    samples = [DensityOperator(rho.copy(), rho0.L)]
    for step in range(1, grid.n_steps + 1):
        t = grid.t_start + (step - 1) * dt
        rho = _rk4_step(rhs, t, rho, dt)
        rho = 0.5 * (rho + rho.conj().T)
        if step % grid.sample_stride == 0:
            wmin = float(np.linalg.eigvalsh(rho)[0])
            if wmin < -1e-6:
                raise PositivityError(
                    f"eigenvalue {wmin:.2e} at t={t + dt:.6f} us; reduce dt_integration")
            samples.append(DensityOperator(rho.copy(), rho0.L))
    return samples


def liouvillian_matrix(model: LindbladModel, self_check: bool = True) -> LinearOperator:
    """Dense superoperator M with vec(drho/dt) = M vec(rho), row-stacking vec.

    Guarded to 2**L <= 64 (the superoperator is dense of dimension 4**L).
    When ``self_check`` is set, the action of M is verified against
    :func:`lindblad_rhs` on random density matrices to 1e-10.
    """
    if not model.is_static():
        raise ValueError("liouvillian_matrix requires a time-independent Hamiltonian")
    d = model.dim
    if d > 64:
        raise ValueError("dimension guard exceeded: liouvillian_matrix supports 2**L <= 64")
    h = model.hamiltonian.to_dense()
    ident = np.eye(d, dtype=complex)
    m = -1j * (np.kron(h, ident) - np.kron(ident, h.T))
    for op, rate in model.jumps:
        l = op.to_dense()
        ldl = l.conj().T @ l
        m += rate * (np.kron(l, l.conj())
                     - 0.5 * np.kron(ldl, ident)
                     - 0.5 * np.kron(ident, ldl.T))
    if self_check:
        rng = np.random.default_rng(np.random.Philox(key=2024))
        rhs = _LindbladRHS(model)
        for _ in range(3):
            a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            rho = a @ a.conj().T
            rho /= np.trace(rho)
            diff = np.max(np.abs((m @ rho.flatten()).reshape(d, d) - rhs(0.0, rho)))
            if diff > 1e-10:
                raise AssertionError(f"liouvillian action mismatch {diff:.2e}")
    return LinearOperator(m)


@dataclass
class NullSpaceResult:
    """Orthonormal null-space basis of a Liouvillian, as vectorized operators."""

    basis: list[np.ndarray]
    dimension: int
    singular_values: np.ndarray
    ambiguous: bool


def steady_states(liouvillian: LinearOperator, rel_tol: float = 1e-10) -> NullSpaceResult:
    """Null space of the Liouvillian via SVD.

    Singular values below ``rel_tol * s_max`` count as zero.  If any
    singular value falls within a factor 10 of the cutoff (on either
    side), the result is flagged ambiguous rather than silently resolved.
    """
    m = liouvillian.to_dense()
    d = int(round(np.sqrt(m.shape[0])))
    s, vh = np.linalg.svd(m)[1:]
    cutoff = rel_tol * s[0]
    null_mask = s < cutoff
    ambiguous = bool(np.any((~null_mask) & (s < 10 * cutoff))
                     or np.any(null_mask & (s > cutoff / 10)))
    basis = [vh[i].conj().reshape(d, d) for i in np.nonzero(null_mask)[0]]
    for b in basis:
        resid = np.linalg.norm(m @ b.flatten())
        if resid > 1e-8:
            raise AssertionError(f"null vector residual {resid:.2e} above 1e-8")
    return NullSpaceResult(basis, len(basis), s, ambiguous)


def steady_state_projection(liouvillian: LinearOperator,
                            rho0: DensityOperator) -> DensityOperator:
    """Asymptotic state lim_t exp(M t) rho0 via the spectral zero-projector.

    Uses biorthogonalized right/left null eigenvectors of the Liouvillian;
    the orthogonal projection would be wrong for a non-normal generator.
    """
    m = liouvillian.to_dense()
    d = int(round(np.sqrt(m.shape[0])))
    w, vr = dense_eig(m)
    right = vr[:, np.abs(w) < 1e-10]
    wl, vl = dense_eig(m.conj().T)
    left = vl[:, np.abs(wl) < 1e-10]
    if right.shape[1] != left.shape[1] or right.shape[1] == 0:
        raise RuntimeError("could not pair left/right null spaces")
    gram = left.conj().T @ right
    coef = np.linalg.solve(gram, left.conj().T @ rho0.matrix.flatten())
    rho = (right @ coef).reshape(d, d)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    L = int(round(np.log2(d)))
    return DensityOperator(rho, L)


def expectation(op: LinearOperator, state: StateVector | DensityOperator) -> float:
    """<psi|A|psi> or Tr(A rho) for Hermitian A; imaginary residue checked."""
    if not op.hermitian_flag:
        raise ValueError("expectation requires a Hermitian operator")
    if isinstance(state, StateVector):
        val = complex(np.vdot(state.amplitudes, op.dot(state.amplitudes)))
    else:
        val = complex(np.trace(op.entries.dot(state.matrix)))
    if abs(val.imag) > 1e-9:
        raise AssertionError(f"imaginary residue {val.imag:.2e} above 1e-9")
    return float(val.real)
