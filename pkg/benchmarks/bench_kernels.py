"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--tokens N] [--repeat R]

Compilation happens in a warm-up call and is not timed.
"""

import argparse
import time

import numpy as np

from fwan import _kernels
from fwan.corpus import default_lexicon
from fwan.synthetic import make_authors, sample_tokens, split_speeches
from fwan.wan import encode_units


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tokens", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    lex = default_lexicon()
    rng = np.random.default_rng(0)
    author = make_authors(1, lex.words, seed=0)[0]
    tokens = sample_tokens(author, args.tokens, rng)
    units = [s.tokens for s in split_speeches(tokens, rng)]
    ids, offsets = encode_units(units, lex.words)
    n = len(lex)

    q = _kernels.wan_accumulate_numpy(ids, offsets, n, 0.75, 10)
    p = q / q.sum(axis=1, keepdims=True)
    cum = np.cumsum(author.transitions, axis=1)
    u = rng.random(args.tokens)

    cases = [
        ("wan_accumulate", lambda: _kernels.wan_accumulate_numba(ids, offsets, n, 0.75, 10),
         lambda: _kernels.wan_accumulate_numpy(ids, offsets, n, 0.75, 10)),
        ("power_iteration", lambda: _kernels.damped_power_iteration_numba(p, 1e-6, 1e-12, 100_000),
         lambda: _kernels.damped_power_iteration_numpy(p, 1e-6, 1e-12, 100_000)),
        ("sample_chain", lambda: _kernels.sample_chain_numba(cum, u, 0),
         lambda: _kernels.sample_chain_numpy(cum, u, 0)),
    ]
    print(f"{args.tokens} tokens, best of {args.repeat}")
    print(f"{'kernel':<18}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, fast, slow in cases:
        a, b = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<18}{1e3 * a:>10.2f}{1e3 * b:>10.2f}{b / a:>8.1f}x")


if __name__ == "__main__":
    main()
