"""Compare the numba and pure-numpy statevector kernels.

Usage: python benchmarks/bench_kernels.py [--qubits 10] [--batch 400] [--repeat 5]

Each kernel runs on identical inputs under both backends; outputs are checked
for agreement before timings are reported. With GEOQML_DISABLE_NUMBA=1 only
the numpy backend is timed.
"""

import argparse
import time

import numpy as np

from geoqml import circuits, kernels
from geoqml._accel import NUMBA_ENABLED


def _time(fn, make_input, repeat):
    fn(make_input())  # warm-up (triggers JIT compilation)
    best = np.inf
    for _ in range(repeat):
        data = make_input()
        start = time.perf_counter()
        fn(data)
        best = min(best, time.perf_counter() - start)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", type=int, default=10)
    ap.add_argument("--batch", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    n, m = args.qubits, args.batch
    rng = np.random.default_rng(0)
    base = rng.normal(size=(m, 1 << n)) + 1j * rng.normal(size=(m, 1 << n))
    probs = np.abs(base) ** 2
    U = circuits.rotation_matrix("RY", 0.3)
    circ = circuits.hardware_efficient(n, 3)
    theta = rng.uniform(0, 2 * np.pi, circ.num_params)

    cases = {
        "apply_1q (all wires)": (
            lambda s, b: [kernels.apply_1q(s, U, w, n, b) for w in range(n)], base),
        "apply_cnot (ring)": (
            lambda s, b: [kernels.apply_cnot(s, w, (w + 1) % n, n, b) for w in range(n)], base),
        "walsh_hadamard": (lambda s, b: kernels.walsh_hadamard(s, b), probs),
        f"circuit forward ({len(circ.gates)} gates)": (
            lambda s, b: circuits.run_angles(circ, circ.gate_angles(theta), s, backend=b), base),
    }
    backends = ["numpy"] + (["numba"] if NUMBA_ENABLED else [])
    print(f"qubits={n} batch={m} repeat={args.repeat} backends={','.join(backends)}")
    print(f"{'kernel':34s} " + " ".join(f"{b + ' [ms]':>12s}" for b in backends)
          + ("   speedup" if len(backends) == 2 else ""))
    for name, (fn, data) in cases.items():
        outs = {}
        for b in backends:
            arr = np.ascontiguousarray(data.copy())
            fn(arr, b)
            outs[b] = arr
        if len(backends) == 2 and not np.allclose(outs["numpy"], outs["numba"], atol=1e-10):
            raise SystemExit(f"backend mismatch in {name}")
        times = [_time(lambda s, b=b: fn(s, b), lambda: np.ascontiguousarray(data.copy()),
                       args.repeat) for b in backends]
        line = f"{name:34s} " + " ".join(f"{1e3 * t:12.3f}" for t in times)
        if len(times) == 2:
            line += f"   {times[0] / times[1]:7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
