"""Throughput comparison of the numba and numpy collision backends.

Runs the same seeded relaxation in two subprocesses, one per value of
KINETICS_BACKEND (backend choice is frozen at import time, hence the
subprocesses), and reports steps/second plus the terminal state agreement.

    python benchmarks/bench_backends.py [--n-particles 100000] [--steps 200]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, os, sys, time
import numpy as np
from kinetics.backend import ACTIVE_BACKEND
from kinetics.dsmc import Maxwellian, SimConfig, init_ensemble, step

n_particles, n_steps, seed = json.loads(sys.argv[1])
config = SimConfig(e=0.7, gamma=1.0, n_particles=n_particles, t_final=1.0,
                   seed=seed, initial=Maxwellian(1.0), n_cutoff=8.0)
ensemble = init_ensemble(config)
step(ensemble, config)  # warm-up: table builds and (if active) jit compilation
ensemble = init_ensemble(config)
start = time.perf_counter()
collisions = 0
for _ in range(n_steps):
    stats = step(ensemble, config)
    collisions += stats.accepted
elapsed = time.perf_counter() - start
print(json.dumps({
    "backend": ACTIVE_BACKEND,
    "elapsed": elapsed,
    "steps_per_s": n_steps / elapsed,
    "collisions": collisions,
    "energy": float(np.mean(np.einsum("ij,ij->i", ensemble.velocities,
                                      ensemble.velocities))),
    "checksum": float(np.sum(ensemble.velocities)),
}))
"""


def run_backend(backend, n_particles, steps, seed):
    env = dict(os.environ, KINETICS_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", WORKER, json.dumps([n_particles, steps, seed])],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-particles", type=int, default=100000)
    parser.add_argument("--steps", type=int, default=200)
    parser.add_argument("--seed", type=int, default=12345)
    args = parser.parse_args(argv)

    results = {}
    for backend in ("numpy", "numba"):
        try:
            results[backend] = run_backend(backend, args.n_particles, args.steps, args.seed)
        except subprocess.CalledProcessError as exc:
            print(f"{backend}: worker failed\n{exc.stderr}", file=sys.stderr)
            return 1

    for backend, res in results.items():
        print(
            f"{backend:>6}: {res['steps_per_s']:8.1f} steps/s "
            f"({res['elapsed']:.2f}s for {args.steps} steps, "
            f"{res['collisions']} collisions, energy {res['energy']:.6f})"
        )
    ratio = results["numba"]["steps_per_s"] / results["numpy"]["steps_per_s"]
    print(f"numba speedup: {ratio:.2f}x")
    same = results["numba"]["collisions"] == results["numpy"]["collisions"]
    drift = abs(results["numba"]["checksum"] - results["numpy"]["checksum"])
    print(f"identical collision counts: {same}; terminal checksum delta: {drift:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
