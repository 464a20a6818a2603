"""Compare the compiled and pure-numpy density-matrix kernels.

    python3 benchmarks/bench_kernels.py [--repeat 20]

Times one evolution of the deepest circuit of each RPE generation under a
noisy model, and checks both kernels agree.
"""

import argparse
import timeit

import numpy as np

from czrpe import kernels
from czrpe.circuits import rpe_circuit
from czrpe.model import TARGETS
from czrpe.sim import NoiseModel, compile_circuit, initial_state


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--k-max", type=int, default=10)
    args = parser.parse_args(argv)

    noise = NoiseModel(depolarizing_rate_per_cz=0.01, depolarizing_rate_per_1q=0.001, prep_flip_prob=(0.01, 0.01))
    rho0 = initial_state(noise)
    # first call pays compilation (or cache load)
    warm = compile_circuit(rpe_circuit("phi_10_11", "I", 0), noise, TARGETS)
    kernels.evolve_numba(rho0, warm.ops, warm.channels, warm.rates)

    print(f"{'k':>3} {'layers':>7} {'numba [us]':>11} {'numpy [us]':>11} {'speedup':>8} {'max |diff|':>11}")
    for k in range(0, args.k_max + 1, 2):
        c = compile_circuit(rpe_circuit("phi_10_11", "I", k), noise, TARGETS)
        call = (rho0, c.ops, c.channels, c.rates)
        t_nb = min(timeit.repeat(lambda: kernels.evolve_numba(*call), number=1, repeat=args.repeat))
        t_np = min(timeit.repeat(lambda: kernels.evolve_numpy(*call), number=1, repeat=max(3, args.repeat // 4)))
        diff = np.max(np.abs(kernels.evolve_numba(*call) - kernels.evolve_numpy(*call)))
        print(f"{k:>3} {len(c.ops):>7} {t_nb * 1e6:>11.1f} {t_np * 1e6:>11.1f} {t_np / t_nb:>8.1f} {diff:>11.1e}")


if __name__ == "__main__":
    main()
