"""Time the compiled kernels against the pure-numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the per-call time of each backend and the
speed-up. Without the compiled extension only the numpy timings are shown.
"""

import argparse
import timeit

import numpy as np

from pulsebench._kernels import _pykernels

try:
    from pulsebench._kernels import _ckernels
except ImportError:  # pragma: no cover - depends on the build
    _ckernels = None


def random_hermitian(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def random_state(rng, d):
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def cases():
    """Named kernel calls as ``(name, build)`` where ``build(module)`` returns a thunk."""
    rng = np.random.default_rng(0)
    amps, freqs, phases = rng.standard_normal(1000), rng.uniform(-5, 5, 1000), rng.uniform(0, 6.3, 1000)
    h4, rho4 = random_hermitian(rng, 4), random_state(rng, 4)
    ls4 = np.array([0.03 * random_hermitian(rng, 4) for _ in range(4)])
    h22, rho22 = random_hermitian(rng, 22), random_state(rng, 22)
    ls22 = np.array([0.1 * random_hermitian(rng, 22) for _ in range(2)])
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    ops = np.array([np.kron(sx, np.eye(2)), np.kron(np.eye(2), sx)])
    h0 = np.kron(sz, np.eye(2)) + np.kron(np.eye(2), sz)
    t_out = np.linspace(0.5, 20.0, 40)

    def coef(t):
        return [0.4 * np.cos(1.9 * t), 0.4 * np.sin(2.1 * t)]

    def dp45(mod):
        return lambda: mod.dp45(coef, h0, ops, ls4, rho4, 0.0, 20.0, t_out, 1e-8, 1e-10, 0.5, 0.0, 1e-10)

    return [
        ("cosine_sum m=1000", lambda mod: lambda: mod.cosine_sum(1.7, amps, freqs, phases)),
        ("lindblad_rhs d=4", lambda mod: lambda: mod.lindblad_rhs(h4, rho4, ls4)),
        ("lindblad_rhs d=22", lambda mod: lambda: mod.lindblad_rhs(h22, rho22, ls22)),
        ("dp45 two qubits, t=20", dp45),
    ]


def per_call(thunk, repeat):
    number, _ = timeit.Timer(thunk).autorange()
    return min(timeit.repeat(thunk, number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    print(f"{'kernel':<24}{'numpy':>14}{'cython':>14}{'speed-up':>10}")
    for name, build in cases():
        t_py = per_call(build(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:<24}{t_py * 1e6:>11.1f} us{'-':>14}{'-':>10}")
            continue
        t_c = per_call(build(_ckernels), args.repeat)
        print(f"{name:<24}{t_py * 1e6:>11.1f} us{t_c * 1e6:>11.1f} us{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
