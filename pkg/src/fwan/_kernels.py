"""Hot numeric loops, compiled with numba when available.

Every kernel has a pure-numpy twin.  Set ``FWAN_DISABLE_NUMBA=1`` in the
environment (before import) to force the numpy path; it is also used when
numba cannot be imported.  Both paths compute the same quantities; results
agree to floating-point summation order.
"""

import bisect
import os

import numpy as np

try:
    import numba as nb
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None

USE_NUMBA = nb is not None and os.environ.get("FWAN_DISABLE_NUMBA", "") not in ("1", "true", "yes")

if nb is not None:
    njit = nb.njit(cache=True, nogil=True)
else:  # pragma: no cover
    njit = None


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def wan_accumulate_numpy(ids, offsets, n, alpha, window):
    """Discounted directed co-occurrence counts within units.

    ``ids`` holds the lexicon index of every token (``-1`` for tokens outside
    the lexicon), units concatenated; unit ``h`` spans
    ``ids[offsets[h]:offsets[h + 1]]``.
    """
    ids = np.asarray(ids, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    q = np.zeros(n * n, dtype=np.float64)
    if ids.size < 2 or n == 0:
        return q.reshape(n, n)
    unit = np.repeat(np.arange(offsets.size - 1), np.diff(offsets))
    weight = 1.0
    for d in range(1, min(window, ids.size - 1) + 1):
        src = ids[:-d]
        dst = ids[d:]
        ok = (src >= 0) & (dst >= 0) & (unit[:-d] == unit[d:])
        if ok.any():
            q += np.bincount(src[ok] * n + dst[ok], minlength=n * n) * weight
        weight *= alpha
    return q.reshape(n, n)


def damped_power_iteration_numpy(p, eps, tol, max_iter):
    """Fixed point of ``(1 - eps) p + eps / n`` by power iteration from uniform.

    Returns ``(pi, iterations, converged)``.
    """
    n = p.shape[0]
    x = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        y = (1.0 - eps) * (x @ p) + eps / n
        y /= y.sum()
        if np.abs(y - x).sum() < tol:
            return y, it, True
        x = y
    return x, max_iter, False


def sample_chain_numpy(cum, uniforms, start):
    """Sample a Markov chain path given row-wise cumulative probabilities."""
    rows = [list(r) for r in cum]
    out = np.empty(len(uniforms), dtype=np.int64)
    state = start
    last = cum.shape[1] - 1
    for k, u in enumerate(uniforms.tolist()):
        state = min(bisect.bisect_right(rows[state], u), last)
        out[k] = state
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if nb is not None:

    @njit
    def wan_accumulate_numba(ids, offsets, n, alpha, window):
        q = np.zeros((n, n), dtype=np.float64)
        powers = np.empty(window, dtype=np.float64)
        w = 1.0
        for d in range(window):
            powers[d] = w
            w *= alpha
        for h in range(offsets.size - 1):
            lo = offsets[h]
            hi = offsets[h + 1]
            for e in range(lo, hi):
                i = ids[e]
                if i < 0:
                    continue
                stop = min(hi, e + window + 1)
                for f in range(e + 1, stop):
                    j = ids[f]
                    if j >= 0:
                        q[i, j] += powers[f - e - 1]
        return q

    @njit
    def damped_power_iteration_numba(p, eps, tol, max_iter):
        n = p.shape[0]
        x = np.full(n, 1.0 / n)
        y = np.empty(n)
        for it in range(1, max_iter + 1):
            for j in range(n):
                y[j] = 0.0
            for i in range(n):
                xi = x[i]
                if xi != 0.0:
                    for j in range(n):
                        y[j] += xi * p[i, j]
            s = 0.0
            for j in range(n):
                y[j] = (1.0 - eps) * y[j] + eps / n
                s += y[j]
            diff = 0.0
            for j in range(n):
                y[j] /= s
                diff += abs(y[j] - x[j])
            if diff < tol:
                return y.copy(), it, True
            x, y = y, x
        return x.copy(), max_iter, False

    @njit
    def sample_chain_numba(cum, uniforms, start):
        out = np.empty(uniforms.size, dtype=np.int64)
        state = start
        last = cum.shape[1] - 1
        for k in range(uniforms.size):
            state = min(np.searchsorted(cum[state], uniforms[k], side="right"), last)
            out[k] = state
        return out


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def backend():
    return "numba" if USE_NUMBA else "numpy"


def wan_accumulate(ids, offsets, n, alpha, window):
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    offsets = np.ascontiguousarray(offsets, dtype=np.int64)
    if USE_NUMBA:
        return wan_accumulate_numba(ids, offsets, int(n), float(alpha), int(window))
    return wan_accumulate_numpy(ids, offsets, n, alpha, window)


def damped_power_iteration(p, eps, tol, max_iter):
    p = np.ascontiguousarray(p, dtype=np.float64)
    if USE_NUMBA:
        return damped_power_iteration_numba(p, float(eps), float(tol), int(max_iter))
    return damped_power_iteration_numpy(p, eps, tol, max_iter)


def sample_chain(cum, uniforms, start):
    cum = np.ascontiguousarray(cum, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    if USE_NUMBA:
        return sample_chain_numba(cum, uniforms, int(start))
    return sample_chain_numpy(cum, uniforms, int(start))
