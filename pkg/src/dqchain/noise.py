"""Binary-noise unravelling of local pump/loss: sampling, pulses, ensembles.

Symmetric pump and loss of strength gamma on one site is equivalent to
averaging unitary trajectories driven by a white-noise transverse field.
Discretized into sections of length dt, the field is constant per section
with amplitude sqrt(gamma / 2 dt) and random signs on the x and y
quadratures, which is exactly a fixed-amplitude resonant pulse whose
phase takes one of {pi/4, 3pi/4, 5pi/4, 7pi/4}.  Averaging M such unitary
evolutions recovers the dissipative dynamics with a weak bias linear in
dt.

Reproducibility contract: all randomness comes from the counter-based
Philox4x64 generator keyed by a 64-bit trajectory seed (stream 0 for the
section signs, stream 1 for jump draws).  Ensemble reduction always runs
in seed-list order, so results are bit-identical for any worker count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.optimize import curve_fit

from .qcore import (
    LinearOperator,
    LindbladModel,
    StateVector,
    TimeGrid,
    evolve_state,
    pauli_string,
)

__all__ = [
    "PRNG_NAME",
    "NoiseRealization",
    "PulseSchedule",
    "EnsembleResult",
    "sample_noise",
    "noise_hamiltonian",
    "to_pulse_schedule",
    "rabi_curve",
    "fit_rabi_amplitude",
    "run_trajectory",
    "run_ensemble",
    "mcwf_ensemble",
    "EnsembleSpec",
    "exact_section_average",
    "weak_order_check",
]

PRNG_NAME = "numpy-philox4x64-v1"
DEFAULT_DT_SECTION = 0.0075      # us (7.5 ns)
DEFAULT_SUBSTEPS = 5

_PHASE_SET = (np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4, 7 * np.pi / 4)


def _rng(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class NoiseRealization:
    """Per-section sign draws for each dissipative site (x then y channel).

    ``eta`` has shape (n_sections, 2 * len(site_list)) with entries in
    {+1, -1}; column order is per site: x channel, then y channel.
    """

    eta: np.ndarray
    dt_section: float
    seed: int
    site_list: tuple

    def __post_init__(self):
        eta = np.asarray(self.eta, dtype=np.int8)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "site_list", tuple(self.site_list))
        if eta.ndim != 2 or eta.shape[1] != 2 * len(self.site_list):
            raise ValueError("eta must have shape (n_sections, 2 * n_sites)")
        if not np.all(np.abs(eta) == 1):
            raise ValueError("eta entries must be +1 or -1")
        if self.dt_section <= 0:
            raise ValueError("dt_section must be > 0")

    @property
    def n_sections(self) -> int:
        return self.eta.shape[0]

    def channels(self, site: int) -> tuple[np.ndarray, np.ndarray]:
        """(eta_x, eta_y) columns for a 1-based site in site_list."""
        k = self.site_list.index(site)
        return self.eta[:, 2 * k], self.eta[:, 2 * k + 1]


def sample_noise(seed: int, n_sections: int, site_list,
                 dt_section: float = DEFAULT_DT_SECTION) -> NoiseRealization:
    """Fair +/-1 draws for every section and channel, deterministic in seed."""
    if n_sections < 1:
        raise ValueError("n_sections must be >= 1")
    site_list = tuple(site_list)
    if len(site_list) == 0:
        raise ValueError("site_list must not be empty")
    gen = _rng(seed, 0)
    eta = gen.integers(0, 2, size=(n_sections, 2 * len(site_list)), dtype=np.int8)
    return NoiseRealization(eta * 2 - 1, dt_section, seed, site_list)


def noise_hamiltonian(real: NoiseRealization, section: int, gamma: float,
                      site: int, L: int) -> LinearOperator:
    """Section Hamiltonian sqrt(gamma/2dt) (eta1 sx + eta2 sy) on one site."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if not 0 <= section < real.n_sections:
        raise ValueError("section index out of range")
    ex, ey = real.channels(site)
    amp = np.sqrt(gamma / (2.0 * real.dt_section))
    op = amp * (float(ex[section]) * pauli_string([(site, "x")], L)
                + float(ey[section]) * pauli_string([(site, "y")], L))
    return LinearOperator(op.entries, hermitian=True)


@dataclass(frozen=True)
class PulseSchedule:
    """Fixed-amplitude resonant pulse train equivalent to a noise realization.

    ``amplitude`` is the coefficient of the unit-norm drive operator
    cos(theta) sx + sin(theta) sy, i.e. sqrt(gamma/dt); phases lie exactly
    in {pi/4, 3pi/4, 5pi/4, 7pi/4}.
    """

    amplitude: float
    phases: np.ndarray
    duration: float

    def __post_init__(self):
        ph = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "phases", ph)
        if not np.all(np.isin(np.round(ph, 12), np.round(_PHASE_SET, 12))):
            raise ValueError("phases must lie in the four-element set")

    @property
    def n_sections(self) -> int:
        return len(self.phases)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["section", "start_us", "duration_us",
                        "amplitude_rad_per_us", "phase_rad"])
            for i, ph in enumerate(self.phases):
                w.writerow([i, repr(i * self.duration), repr(self.duration),
                            repr(self.amplitude), repr(float(ph))])


def to_pulse_schedule(real: NoiseRealization, gamma: float,
                      site: int | None = None) -> PulseSchedule:
    """Map sign draws to the pulse train: theta = atan2(eta_y, eta_x) in [0, 2pi)."""
    if site is None:
        if len(real.site_list) != 1:
            raise ValueError("site must be given for multi-site realizations")
        site = real.site_list[0]
    ex, ey = real.channels(site)
    theta = np.mod(np.arctan2(ey.astype(float), ex.astype(float)), 2 * np.pi)
    amp = np.sqrt(gamma / real.dt_section)
    return PulseSchedule(amplitude=float(amp), phases=theta, duration=real.dt_section)


def gamma_from_amplitude(amplitude: float, dt_section: float) -> float:
    """Invert the pulse calibration: gamma = amplitude^2 * dt."""
    return float(amplitude) ** 2 * dt_section


def rabi_curve(omega: float, durations, theta: float = 0.0,
               dt: float = 5e-4) -> np.ndarray:
    """Excited population under a resonant drive (omega/2)(cos sx + sin sy).

    Starts from ground; equals sin^2(omega T / 2) up to integrator error.
    """
    drive = 0.5 * omega * (np.cos(theta) * pauli_string([(1, "x")], 1)
                           + np.sin(theta) * pauli_string([(1, "y")], 1))
    drive = LinearOperator(drive.entries, hermitian=True)
    out = []
    psi0 = StateVector(np.array([1.0, 0.0], dtype=complex), 1)
    for T in durations:
        if T == 0:
            out.append(0.0)
            continue
        n = max(1, round(T / dt))
        samples = evolve_state(drive, psi0, TimeGrid(0.0, T / n, n, n))
        out.append(float(np.abs(samples[-1].amplitudes[1]) ** 2))
    return np.array(out)


def fit_rabi_amplitude(durations, pe, omega_guess: float) -> float:
    """Recover the drive amplitude from a measured oscillation."""

    def model(t, omega, a):
        return a * np.sin(0.5 * omega * t) ** 2

    popt, _ = curve_fit(model, np.asarray(durations), np.asarray(pe),
                        p0=[omega_guess, 1.0], maxfev=10000)
    return abs(float(popt[0]))


# ---------------------------------------------------------------------------
# trajectory engines


@dataclass(frozen=True)
class EnsembleSpec:
    """Everything one trajectory needs, minus its seed.

    ``hamiltonian`` is a static LinearOperator (or None for a bare site).
    Decoherence channels run in one of two modes: ``"jump"`` unravels them
    with first-order quantum jumps inside each pure-state trajectory (the
    default, usable at any register size); ``"density"`` evolves each
    trajectory as a density matrix with the channels applied exactly,
    which is limited to small registers by the 4**L propagators.
    """

    L: int
    hamiltonian: LinearOperator | None
    gamma: float
    sites: tuple
    psi0: StateVector
    observables: tuple                  # (name, LinearOperator) pairs
    n_sections: int
    dt_section: float = DEFAULT_DT_SECTION
    substeps: int = 1
    decoherence: tuple = ()             # (LinearOperator, rate) pairs
    sample_every: int = 1               # sections between observable samples
    mode: str = "jump"

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        object.__setattr__(self, "observables", tuple(self.observables))
        object.__setattr__(self, "decoherence", tuple(self.decoherence))
        if self.n_sections % self.sample_every != 0:
            raise ValueError("sample_every must divide n_sections")
        if self.mode not in ("jump", "density"):
            raise ValueError("mode must be 'jump' or 'density'")
        if self.mode == "density" and self.L > 5:
            raise ValueError("density mode is guarded to L <= 5; use mode='jump'")

    @property
    def sample_times(self) -> np.ndarray:
        k = self.n_sections // self.sample_every
        return self.dt_section * self.sample_every * np.arange(k + 1)


class _SectionEngine:
    """Propagators for one section, keyed by the tuple of channel signs.

    The per-section Hamiltonian is static, so the exact matrix exponential
    is used.  In jump mode with decoherence the propagator is the
    non-Hermitian effective one and jumps are drawn per substep; in
    density mode the full 4**L superoperator exponential applies the
    channels exactly and no substeps are needed.
    """

    def __init__(self, spec: EnsembleSpec):
        self.spec = spec
        self.density = spec.mode == "density"
        d = 2 ** spec.L
        hc = spec.hamiltonian.to_dense() if spec.hamiltonian is not None \
            else np.zeros((d, d), dtype=complex)
        if spec.decoherence and not self.density:
            h0 = hc.copy()
            for op, rate in spec.decoherence:
                h0 = h0 - 0.5j * rate * (op.dag() @ op).to_dense()
            self.jump_ops = [(op.to_dense(), rate) for op, rate in spec.decoherence]
        else:
            h0 = hc
            self.jump_ops = []
        self.h0 = h0
        if self.density:
            ident = np.eye(d, dtype=complex)
            self.dissipator = np.zeros((d * d, d * d), dtype=complex)
            for op, rate in spec.decoherence:
                l = op.to_dense()
                ldl = l.conj().T @ l
                self.dissipator += rate * (np.kron(l, l.conj())
                                           - 0.5 * np.kron(ldl, ident)
                                           - 0.5 * np.kron(ident, ldl.T))
        self.amp = np.sqrt(spec.gamma / (2.0 * spec.dt_section)) if spec.gamma > 0 else 0.0
        self.sx = {s: pauli_string([(s, "x")], spec.L).to_dense() for s in spec.sites}
        self.sy = {s: pauli_string([(s, "y")], spec.L).to_dense() for s in spec.sites}
        self.dt_sub = spec.dt_section / spec.substeps
        self._cache: dict[tuple, np.ndarray] = {}

    def _section_hamiltonian(self, signs: tuple) -> np.ndarray:
        h = self.h0.copy()
        for k, s in enumerate(self.spec.sites):
            h = h + self.amp * (signs[2 * k] * self.sx[s] + signs[2 * k + 1] * self.sy[s])
        return h

    def propagator(self, signs: tuple) -> np.ndarray:
        u = self._cache.get(signs)
        if u is None:
            h = self._section_hamiltonian(signs)
            if self.density:
                d = h.shape[0]
                ident = np.eye(d, dtype=complex)
                gen = -1j * (np.kron(h, ident) - np.kron(ident, h.T)) + self.dissipator
                u = expm(gen * self.spec.dt_section)
            else:
                u = expm(-1j * h * self.dt_sub)
            self._cache[signs] = u
        return u


def _observe(spec: EnsembleSpec, psi: np.ndarray) -> np.ndarray:
    return np.array([float(np.real(np.vdot(psi, op.dot(psi))))
                     for _, op in spec.observables])


def run_trajectory(spec: EnsembleSpec, noise: int | NoiseRealization,
                   engine: _SectionEngine | None = None) -> np.ndarray:
    """One stochastic trajectory; returns observables at the sample times.

    ``noise`` is either a seed (the realization is drawn from it) or an
    explicit :class:`NoiseRealization` of matching shape.  Pure-state
    unitary evolution per section; when decoherence channels are present,
    first-order quantum jumps are drawn every substep from the
    trajectory's second Philox stream.
    """
    if engine is None:
        engine = _SectionEngine(spec)
    if isinstance(noise, NoiseRealization):
        real = noise
        if real.n_sections != spec.n_sections or real.site_list != spec.sites:
            raise ValueError("noise realization shape does not match the spec")
        if abs(real.dt_section - spec.dt_section) > 1e-15:
            raise ValueError("noise realization dt_section does not match the spec")
        seed = real.seed
    else:
        seed = int(noise)
        real = sample_noise(seed, spec.n_sections, spec.sites, spec.dt_section)
    if engine.density:
        return _run_density_trajectory(spec, real, engine)
    jump_gen = _rng(seed, 1) if engine.jump_ops else None

    psi = spec.psi0.amplitudes.copy()
    n_samples = spec.n_sections // spec.sample_every
    out = np.empty((len(spec.observables), n_samples + 1))
    out[:, 0] = _observe(spec, psi)
    k = 1
    for i in range(spec.n_sections):
        signs = tuple(int(v) for v in real.eta[i])
        u = engine.propagator(signs)
        if not engine.jump_ops:
            for _ in range(spec.substeps):
                psi = u @ psi
        else:
            for _ in range(spec.substeps):
                phi = u @ psi
                survive = float(np.real(np.vdot(phi, phi)))
                if jump_gen.random() < 1.0 - survive:
                    weights = np.array([rate * float(np.real(np.vdot(l @ psi, l @ psi)))
                                        for l, rate in engine.jump_ops])
                    total = weights.sum()
                    if total <= 0:
                        psi = phi / np.sqrt(survive)
                        continue
                    choice = np.searchsorted(np.cumsum(weights) / total, jump_gen.random())
                    l, _ = engine.jump_ops[min(choice, len(weights) - 1)]
                    psi = l @ psi
                    psi = psi / np.linalg.norm(psi)
                else:
                    psi = phi / np.sqrt(survive)
        if not engine.jump_ops:
            nrm = np.linalg.norm(psi)
            psi = psi / nrm
        if (i + 1) % spec.sample_every == 0:
            out[:, k] = _observe(spec, psi)
            k += 1
    return out


def _run_density_trajectory(spec: EnsembleSpec, real: NoiseRealization,
                            engine: _SectionEngine) -> np.ndarray:
    """Density-matrix variant: decoherence applied exactly per section."""
    d = 2 ** spec.L
    rho = np.outer(spec.psi0.amplitudes, spec.psi0.amplitudes.conj()).flatten()
    obs = [op.to_dense() for _, op in spec.observables]

    def observe(vec):
        m = vec.reshape(d, d)
        return [float(np.real(np.trace(o @ m))) for o in obs]

    n_samples = spec.n_sections // spec.sample_every
    out = np.empty((len(spec.observables), n_samples + 1))
    out[:, 0] = observe(rho)
    k = 1
    for i in range(spec.n_sections):
        signs = tuple(int(v) for v in real.eta[i])
        rho = engine.propagator(signs) @ rho
        if (i + 1) % spec.sample_every == 0:
            out[:, k] = observe(rho)
            k += 1
    return out


@dataclass(frozen=True)
class EnsembleResult:
    """Trajectory-averaged observables with their standard errors."""

    times: np.ndarray
    observable_ids: tuple
    means: np.ndarray        # (n_obs, n_times)
    sems: np.ndarray
    M: int
    seeds: tuple

    def mean(self, name: str) -> np.ndarray:
        return self.means[self.observable_ids.index(name)]

    def sem(self, name: str) -> np.ndarray:
        return self.sems[self.observable_ids.index(name)]


def _reduce(spec: EnsembleSpec, seeds, stack: np.ndarray) -> EnsembleResult:
    m = len(seeds)
    means = stack.mean(axis=0)
    if m > 1:
        sems = stack.std(axis=0, ddof=1) / np.sqrt(m)
    else:
        sems = np.zeros_like(means)
    return EnsembleResult(
        times=spec.sample_times,
        observable_ids=tuple(name for name, _ in spec.observables),
        means=means,
        sems=sems,
        M=m,
        seeds=tuple(int(s) for s in seeds),
    )


def _chunk_worker(args):
    spec, seeds = args
    engine = _SectionEngine(spec)
    return np.stack([run_trajectory(spec, s, engine) for s in seeds])


def run_ensemble(spec: EnsembleSpec, seed_list, workers: int = 1) -> EnsembleResult:
    """Average run_trajectory over a seed list with a fixed reduction order.

    Trajectories are independent work units; any worker count produces the
    same bytes because each trajectory is computed identically and the
    reduction always follows seed-list order.
    """
    seeds = [int(s) for s in seed_list]
    if len(seeds) != len(set(seeds)):
        raise ValueError("duplicate seeds in seed_list")
    if len(seeds) == 0:
        raise ValueError("seed_list must not be empty")
    if workers <= 1 or len(seeds) == 1:
        stack = _chunk_worker((spec, seeds))
    else:
        chunks = [seeds[i::workers] for i in range(workers)]
        chunks = [c for c in chunks if c]
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(_chunk_worker, [(spec, c) for c in chunks]))
        stack = np.empty((len(seeds),) + results[0].shape[1:])
        for chunk, block in zip(chunks, results):
            for row, seed in enumerate(chunk):
                stack[seeds.index(seed)] = block[row]
    return _reduce(spec, seeds, stack)


def mcwf_ensemble(model: LindbladModel, psi0: StateVector, grid: TimeGrid,
                  observables, seed_list, workers: int = 1) -> EnsembleResult:
    """Quantum-jump unravelling of a static Lindblad model.

    Independent of the binary-noise scheme; the ensemble mean converges to
    the master-equation solution, which makes this the cross-validation
    route (and the only trajectory route for asymmetric pump/loss rates).
    """
    if not model.is_static():
        raise ValueError("mcwf_ensemble requires time-independent jumps")
    spec = EnsembleSpec(
        L=psi0.L,
        hamiltonian=model.hamiltonian if model.hamiltonian.entries.nnz else None,
        gamma=0.0,
        sites=(1,),
        psi0=psi0,
        observables=tuple(observables),
        n_sections=grid.n_steps // grid.sample_stride,
        dt_section=grid.dt_integration * grid.sample_stride,
        substeps=grid.sample_stride,
        decoherence=tuple(model.jumps),
        sample_every=1,
    )
    return run_ensemble(spec, seed_list, workers)


# ---------------------------------------------------------------------------
# weak-convergence diagnostics


def exact_section_average(gamma: float, dt_section: float, n_sections: int,
                          z0: float = 1.0) -> float:
    """Infinite-ensemble <sigma_z> of the binary-noise scheme on one qubit.

    Averages the four-phase channel exactly section by section, which is
    the full conditional average (zero-variance limit) of the Monte Carlo
    estimator.  For a z-polarized start this equals cos(2 sqrt(gamma dt))^n.
    """
    amp = np.sqrt(gamma / (2.0 * dt_section))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, 1j], [-1j, 0]], dtype=complex)
    us = [expm(-1j * dt_section * amp * (e1 * sx + e2 * sy))
          for e1 in (1, -1) for e2 in (1, -1)]
    rho = np.array([[0.5 * (1 - z0), 0], [0, 0.5 * (1 + z0)]], dtype=complex)
    for _ in range(n_sections):
        rho = sum(u @ rho @ u.conj().T for u in us) / 4.0
    return float(np.real(rho[1, 1] - rho[0, 0]))


def _mc_single_qubit(gamma: float, dt_section: float, eta: np.ndarray) -> np.ndarray:
    """Vectorized per-trajectory <sigma_z> from |e> after all sections.

    The update is written as explicit 2x2 arithmetic (no matrix kernels),
    so each trajectory's lane is independent of the batch size and the
    result is bit-stable under any chunking.
    """
    amp = np.sqrt(gamma / (2.0 * dt_section))
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, 1j], [-1j, 0]], dtype=complex)
    us = {(e1, e2): expm(-1j * dt_section * amp * (e1 * sx + e2 * sy))
          for e1 in (1, -1) for e2 in (1, -1)}
    m, n = eta.shape[0], eta.shape[1]
    a = np.zeros(m, dtype=complex)        # ground amplitude
    b = np.ones(m, dtype=complex)         # excited amplitude
    for i in range(n):
        for key, u in us.items():
            mask = (eta[:, i, 0] == key[0]) & (eta[:, i, 1] == key[1])
            a_new = u[0, 0] * a[mask] + u[0, 1] * b[mask]
            b_new = u[1, 0] * a[mask] + u[1, 1] * b[mask]
            a[mask], b[mask] = a_new, b_new
    return np.abs(b) ** 2 - np.abs(a) ** 2


def weak_order_check(gamma: float, dt_coarse: float, t_eval: float,
                     M: int = 0, seeds=None) -> dict:
    """Bias of the ensemble mean at two step sizes (dt and dt/2) from |e>.

    The biases are computed exactly by full conditional averaging of the
    estimator (``exact_section_average``), which is its zero-variance
    limit; first-order weak convergence makes their ratio approach 2.

    When ``M`` and ``seeds`` are given, a raw common-random-number Monte
    Carlo estimate is attached: each seed draws the fine-level section
    table and the coarse level subsamples every other row of the same
    table.  At desk-scale M the raw estimate carries a standard error far
    above the bias itself, so it is reported for consistency checking
    rather than asserted on.
    """
    n_c = round(t_eval / dt_coarse)
    if abs(n_c * dt_coarse - t_eval) > 1e-12:
        raise ValueError("t_eval must sit on the coarse section grid")
    dt_fine = dt_coarse / 2.0
    exact = np.exp(-2.0 * gamma * t_eval)
    bias_c = exact_section_average(gamma, dt_coarse, n_c) - exact
    bias_f = exact_section_average(gamma, dt_fine, 2 * n_c) - exact
    out = {
        "bias_coarse": float(bias_c),
        "bias_fine": float(bias_f),
        "ratio": float(bias_c / bias_f),
        "exact": float(exact),
    }
    if M:
        if seeds is None:
            seeds = range(M)
        seeds = [int(s) for s in seeds]
        eta_fine = np.empty((len(seeds), 2 * n_c, 2), dtype=np.int8)
        for row, s in enumerate(seeds):
            gen = _rng(s, 0)
            eta_fine[row] = gen.integers(0, 2, size=(2 * n_c, 2), dtype=np.int8) * 2 - 1
        z_f = _mc_single_qubit(gamma, dt_fine, eta_fine)
        z_c = _mc_single_qubit(gamma, dt_coarse, eta_fine[:, ::2, :])
        m = len(seeds)
        out.update({
            "mc_bias_coarse": float(z_c.mean() - exact),
            "mc_bias_fine": float(z_f.mean() - exact),
            "mc_sem_coarse": float(z_c.std(ddof=1) / np.sqrt(m)),
            "mc_sem_fine": float(z_f.std(ddof=1) / np.sqrt(m)),
            "mc_M": m,
        })
    return out
