"""Jordan-Wigner machinery, the conserved sector classifier, and sector states.

An odd XX chain with reflection-symmetric couplings and pump/loss on the
center qubit conserves the *square* of a fermionic exchange charge.  The
charge counts symmetric minus antisymmetric reflection modes (plus the
center occupation, minus 1/2); its square has the (l+1) distinct
eigenvalues (eta + 1/2)^2 with eta = 0..l and l = (L-1)/2, and commutes
with both the chain Hamiltonian and the center jump operators.  The
classifier built here is validated by brute-force commutators rather than
assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .qcore import (
    LinearOperator,
    StateVector,
    basis_index,
    pauli_string,
    product_state,
)

__all__ = [
    "FermionModeSet",
    "jordan_wigner_modes",
    "ConservedClassifier",
    "conserved_classifier",
    "sector_projectors",
    "SectorDecomposition",
    "sector_weights",
    "sector_state",
    "bell_chain_state",
    "apply_gate",
    "bell_prep_circuit",
    "predicted_steady_value",
    "predicted_phase_curve",
    "ClassifierValidationError",
]

CAR_TOL = 1e-12
COMM_TOL = 1e-10


class ClassifierValidationError(RuntimeError):
    """No candidate conserved classifier passed the commutator validation."""


@dataclass(frozen=True)
class FermionModeSet:
    """Annihilation operators f_k = (prod_{j<k} -sigma_j^z) sigma_k^- for k=1..L."""

    modes: tuple
    L: int
    convention: str = "jw-negative-z-string"

    def __getitem__(self, k: int) -> LinearOperator:
        """1-based mode access."""
        return self.modes[k - 1]


def jordan_wigner_modes(L: int, check: bool = True) -> FermionModeSet:
    """Fermion modes on L qubits; canonical anticommutation verified on request."""
    if L < 1:
        raise ValueError("L must be >= 1")
    modes = []
    for k in range(1, L + 1):
        spec = [(j, "z") for j in range(1, k)] + [(k, "-")]
        op = pauli_string(spec, L)
        if (k - 1) % 2 == 1:
            op = -1.0 * op
        modes.append(op)
    ms = FermionModeSet(tuple(modes), L)
    if check:
        _check_car(ms)
    return ms


def _check_car(ms: FermionModeSet):
    ident = sp.identity(2 ** ms.L, dtype=complex, format="csr")
    for j in range(1, ms.L + 1):
        for k in range(j, ms.L + 1):
            fj, fk = ms[j].entries, ms[k].entries
            anti = fj @ fk.conj().T + fk.conj().T @ fj
            target = ident if j == k else None
            err = anti - ident if j == k else anti
            if np.max(np.abs(err.toarray())) > CAR_TOL:
                raise AssertionError(f"{{f_{j}, f_{k}^dag}} violates CAR")
            anti2 = (fj @ fk + fk @ fj).toarray()
            if np.max(np.abs(anti2)) > CAR_TOL:
                raise AssertionError(f"{{f_{j}, f_{k}}} violates CAR")


@dataclass
class ConservedClassifier:
    """Validated conserved operator whose square labels the symmetry sectors.

    ``candidate`` records which construction survived validation:
    ``"exchange-verbatim"`` (one-sided mode exchange, no center term),
    ``"exchange-hermitian"`` (Hermitian completion with center occupation),
    or ``"antisymmetric-count"`` (fallback: number of antisymmetric modes).
    """

    operator: LinearOperator       # the charge C; classifier is C^2
    squared: LinearOperator
    candidate: str
    L: int
    commutator_norms: dict
    eigenvalue_labels: dict        # eta -> eigenvalue of C^2


def _candidates(L: int):
    l = (L - 1) // 2
    c = l + 1
    ms = jordan_wigner_modes(L, check=False)
    ident = sp.identity(2 ** L, dtype=complex, format="csr")

    verbatim = -0.5 * ident
    for k in range(1, l + 1):
        verbatim = verbatim + (ms[k].dag() @ ms[L + 1 - k]).entries

    n0 = (ms[c].dag() @ ms[c]).entries
    hermitian = n0 - 0.5 * ident
    for k in range(1, l + 1):
        t = (ms[k].dag() @ ms[L + 1 - k]).entries
        hermitian = hermitian + t + t.conj().T

    n_minus = sp.csr_matrix((2 ** L, 2 ** L), dtype=complex)
    for k in range(1, l + 1):
        a_minus = (ms[k].entries - ms[L + 1 - k].entries) / np.sqrt(2)
        n_minus = n_minus + a_minus.conj().T @ a_minus

    return [
        ("exchange-verbatim", LinearOperator(verbatim)),
        ("exchange-hermitian", LinearOperator(hermitian)),
        ("antisymmetric-count", LinearOperator(n_minus)),
    ]


def _comm_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a @ b - b @ a)))


def conserved_classifier(L: int, test_couplings=None, tol: float = COMM_TOL) -> ConservedClassifier:
    """Build and validate the conserved sector classifier for an odd chain.

    Candidates are tried in order and the first whose square commutes with
    a reflection-symmetric test Hamiltonian *and* with the center pump and
    loss operators (all commutator norms <= tol) is returned.  If none
    passes, :class:`ClassifierValidationError` carries the diagnostics.
    """
    if L < 3 or L % 2 == 0:
        raise ValueError("classifier requires odd L >= 3")
    l = (L - 1) // 2
    c = l + 1
    if test_couplings is None:
        test_couplings = np.ones(L - 1)
    test_couplings = np.asarray(test_couplings, dtype=float)
    if test_couplings.shape != (L - 1,):
        raise ValueError("test_couplings must have length L-1")

    h = sp.csr_matrix((2 ** L, 2 ** L), dtype=complex)
    for i in range(1, L):
        hop = (pauli_string([(i, "+"), (i + 1, "-")], L)).entries
        h = h + test_couplings[i - 1] * (hop + hop.conj().T)
    hd = h.toarray()
    lp = pauli_string([(c, "+")], L).to_dense()
    lm = pauli_string([(c, "-")], L).to_dense()

    diagnostics = {}
    for name, cand in _candidates(L):
        c2 = (cand @ cand).entries.toarray()
        norms = {
            "hamiltonian": _comm_norm(c2, hd),
            "pump": _comm_norm(c2, lp),
            "loss": _comm_norm(c2, lm),
        }
        diagnostics[name] = norms
        if max(norms.values()) <= tol:
            labels = _label_spectrum(c2, L, name)
            return ConservedClassifier(
                operator=cand,
                squared=LinearOperator(c2),
                candidate=name,
                L=L,
                commutator_norms=norms,
                eigenvalue_labels=labels,
            )
    raise ClassifierValidationError(
        f"no conserved classifier validated for L={L}: {diagnostics}")


def _label_spectrum(c2: np.ndarray, L: int, candidate: str) -> dict:
    l = (L - 1) // 2
    if candidate == "antisymmetric-count":
        return {eta: float(eta) for eta in range(l + 1)}
    return {eta: (eta + 0.5) ** 2 for eta in range(l + 1)}


def sector_projectors(classifier: ConservedClassifier) -> list[np.ndarray]:
    """Spectral projectors of the classifier, ordered by sector label eta=0..l.

    The projectors resolve the identity and are mutually orthogonal.
    """
    c2 = classifier.squared.to_dense()
    w, v = np.linalg.eigh(c2)
    projectors = []
    for eta in sorted(classifier.eigenvalue_labels):
        lam = classifier.eigenvalue_labels[eta]
        cols = v[:, np.abs(w - lam) < 1e-6]
        if cols.shape[1] == 0:
            raise RuntimeError(f"no eigenvalue near {lam} for sector {eta}")
        projectors.append(cols @ cols.conj().T)
    total = sum(projectors)
    if np.max(np.abs(total - np.eye(c2.shape[0]))) > 1e-10:
        raise AssertionError("sector projectors do not resolve the identity")
    return projectors


@dataclass(frozen=True)
class SectorDecomposition:
    """Weights of a state across the symmetry sectors eta = 0..l."""

    weights: np.ndarray
    residual: float

    def __post_init__(self):
        if np.any(self.weights < -1e-12):
            raise ValueError("negative sector weight")
        s = float(np.sum(self.weights)) + self.residual
        if abs(s - 1.0) > 1e-9:
            raise ValueError(f"weights + residual = {s}, expected 1")


def sector_weights(state, projectors: list[np.ndarray]) -> SectorDecomposition:
    """Decompose a StateVector or DensityOperator over the sector projectors."""
    if isinstance(state, StateVector):
        w = np.array([float(np.real(np.vdot(state.amplitudes, p @ state.amplitudes)))
                      for p in projectors])
    else:
        w = np.array([float(np.real(np.trace(p @ state.matrix))) for p in projectors])
    w = np.clip(w, 0.0, None)
    residual = float(1.0 - np.sum(w))
    return SectorDecomposition(w, residual)


def _pair_sites(L: int, k: int) -> tuple[int, int]:
    """Sites of the k-th nested Bell pair: (l-k+1, L-l+k) around the center."""
    l = (L - 1) // 2
    return l - k + 1, L - l + k


def sector_state(L: int, eta: int) -> StateVector:
    """Representative state of sector eta: nested Bell pairs with staggered signs.

    eta = 0 is the all-ground product state; each additional pair k adds
    (sigma^+_{l-k+1} + (-1)^k sigma^+_{L-l+k})/sqrt(2) applied in order
    k = 1..eta, giving excitation number eta and unit weight in sector eta.
    """
    l = (L - 1) // 2
    if not 0 <= eta <= l:
        raise ValueError(f"eta must be in 0..{l}")
    psi = product_state([], L).amplitudes
    for k in range(1, eta + 1):
        a, b = _pair_sites(L, k)
        sign = (-1.0) ** k
        creator = (pauli_string([(a, "+")], L).entries
                   + sign * pauli_string([(b, "+")], L).entries) / np.sqrt(2)
        psi = creator.dot(psi)
    nrm = np.linalg.norm(psi)
    return StateVector(psi / nrm, L)


def bell_chain_state(L: int, phi: float) -> StateVector:
    """Bell pair (|eg> + e^{i phi}|ge>)/sqrt(2) on the sites beside the center.

    The pair occupies (center-1, center+1); all other qubits are ground.
    phi = pi reproduces sector_state(L, 1) up to a global phase, phi = 0
    lies entirely in sector 0.
    """
    if L < 3 or L % 2 == 0:
        raise ValueError("bell_chain_state requires odd L >= 3")
    c = (L + 1) // 2
    amp = np.zeros(2 ** L, dtype=complex)
    amp[basis_index([c - 1], L)] = 1.0 / np.sqrt(2)
    amp[basis_index([c + 1], L)] = np.exp(1j * phi) / np.sqrt(2)
    return StateVector(amp, L)


# two-qubit gates on the span of one shared excitation, (g,e) ordering
_ISWAP = np.array([
    [1, 0, 0, 0],
    [0, 0, 1j, 0],
    [0, 1j, 0, 0],
    [0, 0, 0, 1],
], dtype=complex)

# 50/50 excitation beam splitter: hopping evolution for a quarter period
_HALF_SWAP = np.array([
    [1, 0, 0, 0],
    [0, 1 / np.sqrt(2), -1j / np.sqrt(2), 0],
    [0, -1j / np.sqrt(2), 1 / np.sqrt(2), 0],
    [0, 0, 0, 1],
], dtype=complex)


def _two_qubit_gate(mat4: np.ndarray, a: int, b: int, L: int) -> sp.csr_matrix:
    """Embed a 4x4 gate given in the (gg, ge, eg, ee) ordering of (a, b)."""
    d = 2 ** L
    rows, cols, vals = [], [], []
    bit_a, bit_b = 1 << (L - a), 1 << (L - b)
    for idx in range(d):
        ia = 1 if idx & bit_a else 0
        ib = 1 if idx & bit_b else 0
        col_sub = 2 * ia + ib
        base = idx & ~bit_a & ~bit_b
        for row_sub in range(4):
            v = mat4[row_sub, col_sub]
            if v == 0:
                continue
            ra, rb = row_sub >> 1, row_sub & 1
            ridx = base | (bit_a if ra else 0) | (bit_b if rb else 0)
            rows.append(ridx)
            cols.append(idx)
            vals.append(v)
    return sp.csr_matrix((vals, (rows, cols)), shape=(d, d), dtype=complex)


def apply_gate(gate: str, state: StateVector, *args) -> StateVector:
    """Apply a named gate: rz(theta, site), x(site), half_swap(a,b), iswap(a,b).

    All gates are exact unitaries; rz(theta) = exp(-i sigma^z theta / 2).
    half_swap is the 50/50 excitation beam splitter used for Bell-pair
    preparation; its convention phase is -i on the transferred amplitude.
    """
    L = state.L
    if gate == "rz":
        theta, site = args
        if not 1 <= site <= L:
            raise ValueError(f"site {site} out of range")
        d = 2 ** L
        bit = 1 << (L - site)
        phase = np.where(np.arange(d) & bit,
                         np.exp(-1j * theta / 2), np.exp(1j * theta / 2))
        return StateVector(phase * state.amplitudes, L)
    if gate == "x":
        (site,) = args
        u = pauli_string([(site, "x")], L)
        return StateVector(u.dot(state.amplitudes), L)
    if gate in ("half_swap", "iswap"):
        a, b = args
        if a == b:
            raise ValueError("gate sites must be distinct")
        for s in (a, b):
            if not 1 <= s <= L:
                raise ValueError(f"site {s} out of range")
        mat = _HALF_SWAP if gate == "half_swap" else _ISWAP
        u = _two_qubit_gate(mat, a, b, L)
        return StateVector(u.dot(state.amplitudes), L)
    raise ValueError(f"unknown gate {gate!r}")


def bell_prep_circuit(L: int, phi: float) -> StateVector:
    """Gate-level preparation of the center-adjacent Bell pair with phase phi.

    Excite one partner, split the excitation with half_swap, then set the
    relative phase with rz.  The output overlaps bell_chain_state(L, phi)
    with fidelity 1 up to numerical rounding.
    """
    if L < 3 or L % 2 == 0:
        raise ValueError("bell_prep_circuit requires odd L >= 3")
    c = (L + 1) // 2
    psi = product_state([], L)
    psi = apply_gate("x", psi, c - 1)
    psi = apply_gate("half_swap", psi, c - 1, c + 1)
    # half_swap leaves relative phase -pi/2; rz(theta) on c+1 shifts it by -theta
    psi = apply_gate("rz", psi, -(np.pi / 2) - phi, c + 1)
    return psi


def predicted_steady_value(L: int, eta: int) -> float:
    """Steady end-to-end z-correlation for sectors eta = 0 and 1.

    Returns 1/L for eta = 0 and (l-4)/(L*l) for eta = 1 with l = (L-1)/2.
    Closed forms for eta >= 2 are not available.
    """
    l = (L - 1) // 2
    if eta == 0:
        return 1.0 / L
    if eta == 1:
        return (l - 4.0) / (L * l)
    raise ValueError("closed-form steady values are available for eta in {0, 1} only")


def predicted_phase_curve(L: int, phi: float) -> float:
    """Sector-weighted steady correlation for the Bell input with phase phi.

    cos^2(phi/2) weight in sector 0 plus sin^2(phi/2) in sector 1; for
    L = 5 this reduces to cos(phi)/5.
    """
    w0 = np.cos(phi / 2.0) ** 2
    w1 = np.sin(phi / 2.0) ** 2
    return float(w0 * predicted_steady_value(L, 0) + w1 * predicted_steady_value(L, 1))
