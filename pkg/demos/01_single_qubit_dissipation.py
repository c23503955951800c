"""Single qubit under symmetric pump and loss, three ways.

The same relaxation curve <sigma_z>(t) = e^{-2 gamma t} is produced by
(1) the master equation, (2) averaging binary-noise pulse trajectories
(the hardware-friendly unravelling), and (3) standard quantum jumps.
Also shows the pulse-schedule view of one trajectory: fixed amplitude,
phases hopping through {pi/4, 3pi/4, 5pi/4, 7pi/4}.
"""

import numpy as np

from dqchain import (
    LindbladModel,
    LinearOperator,
    TimeGrid,
    evolve_density,
    expectation,
    mcwf_ensemble,
    pauli_string,
    product_state,
    run_ensemble,
    sample_noise,
    to_pulse_schedule,
)
from dqchain.noise import EnsembleSpec

gamma = 1.0          # 1/us
dt = 0.0075          # 7.5 ns sections
n_sections = 333     # ~2.5 us
sz = pauli_string([(1, "z")], 1)
excited = product_state([1], 1)

# (1) master equation
model = LindbladModel(
    hamiltonian=LinearOperator(np.zeros((2, 2)), hermitian=True),
    jumps=((pauli_string([(1, "+")], 1), gamma),
           (pauli_string([(1, "-")], 1), gamma)))
grid = TimeGrid(0.0, dt / 5, n_sections * 5, sample_stride=5)
lme = [expectation(sz, rho) for rho in evolve_density(model, excited.to_density(), grid)]

# (2) binary-noise pulse trajectories
spec = EnsembleSpec(L=1, hamiltonian=None, gamma=gamma, sites=(1,),
                    psi0=excited, observables=(("sz", sz),),
                    n_sections=n_sections, dt_section=dt)
sse = run_ensemble(spec, seed_list=range(100))

# (3) quantum jumps
mcwf = mcwf_ensemble(model, excited, grid, (("sz", sz),), seed_list=range(100, 200))

print("t/us   LME      pulse-SSE (+-SEM)   quantum jumps")
for k in range(0, n_sections + 1, 40):
    print(f"{sse.times[k]:5.2f}  {lme[k]:+.4f}  {sse.means[0][k]:+.4f} "
          f"({sse.sems[0][k]:.4f})    {mcwf.means[0][k]:+.4f}")

# the pulse-sequence view of trajectory 0
schedule = to_pulse_schedule(sample_noise(0, 10, [1], dt), gamma)
print(f"\npulse amplitude {schedule.amplitude / (2 * np.pi):.3f} MHz * 2pi, "
      f"first ten phases/pi: {np.round(schedule.phases / np.pi, 2)}")
