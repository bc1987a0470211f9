"""Benchmark the jitted kernels against their pure-numpy fallbacks.

Usage:
    python3 benchmarks/bench_kernels.py [--repeats N] [--seed S]

Times both implementations of the edit-distance DP and the inverted-index
score accumulation on synthetic workloads of a few sizes, then prints a
table with the median per-call time and the speedup.  Runs fine without
numba installed (only the numpy column is filled in).
"""

import argparse
import random
import statistics
import time

import numpy as np

from ontomatch import _kernels as K


def time_call(fn, args, repeats):
    """Median seconds per call over ``repeats`` timed calls (1 warmup)."""
    fn(*args)
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def random_codepoints(rng, length):
    return K.codepoints("".join(rng.choice("abcdefghijklmnop ") for _ in range(length)))


def edit_distance_cases(rng):
    for length in (8, 32, 128):
        a, b = random_codepoints(rng, length), random_codepoints(rng, length)
        yield f"edit_distance len={length}", (a, b)


def idf_cases(rng):
    for n_classes, n_tokens, hits_per_token in ((1_000, 500, 20), (50_000, 5_000, 200)):
        counts = np.array([rng.randint(1, hits_per_token) for _ in range(n_tokens)])
        offsets = np.zeros(n_tokens + 1, dtype=np.int64)
        np.cumsum(counts, out=offsets[1:])
        postings = np.array([rng.randrange(n_classes) for _ in range(offsets[-1])],
                            dtype=np.int64)
        query = np.array(sorted(rng.sample(range(n_tokens), 50)), dtype=np.int64)
        idf = np.abs(np.array([rng.random() for _ in range(n_tokens)]))
        out = np.zeros(n_classes, dtype=np.float64)
        name = f"accumulate_idf classes={n_classes} postings={offsets[-1]}"
        yield name, (offsets, postings, idf, query, out)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=200,
                        help="timed calls per case (default 200)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    rng = random.Random(args.seed)
    pairs = []  # (case name, jitted fn or None, numpy fn, args)
    for name, case_args in edit_distance_cases(rng):
        jitted = K._edit_distance_nb if K._HAVE_NUMBA else None
        pairs.append((name, jitted, K._edit_distance_np, case_args))
    for name, case_args in idf_cases(rng):
        jitted = K._accumulate_idf_nb if K._HAVE_NUMBA else None
        pairs.append((name, jitted, K._accumulate_idf_np, case_args))

    if not K._HAVE_NUMBA:
        print("numba not importable; timing the numpy fallback only\n")

    header = f"{'case':<44} {'numba':>10} {'numpy':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, jitted, fallback, case_args in pairs:
        # accumulation kernels write into their out array; give each timed
        # implementation a fresh copy so both see identical inputs
        def run(fn, _args=case_args):
            copies = tuple(np.array(a) if isinstance(a, np.ndarray) else a
                           for a in _args)
            return time_call(fn, copies, args.repeats)

        numpy_s = run(fallback)
        if jitted is not None:
            numba_s = run(jitted)
            print(f"{name:<44} {numba_s * 1e6:>8.1f}us {numpy_s * 1e6:>8.1f}us "
                  f"{numpy_s / numba_s:>7.1f}x")
        else:
            print(f"{name:<44} {'-':>10} {numpy_s * 1e6:>8.1f}us {'-':>8}")


if __name__ == "__main__":
    main()
