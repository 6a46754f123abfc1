"""Compiled inner loops: the graph process step and the expectation recursion."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _pick(x, endpoints, two_t, n_vertices, q):
    # q = 2t / (2t + delta V); q == 1 is plain preferential attachment
    if x < q:
        i = np.int64(x / q * two_t)
        if i >= two_t:
            i = two_t - 1
        return np.int64(endpoints[i])
    i = np.int64((x - q) / (1.0 - q) * n_vertices)
    if i >= n_vertices:
        i = n_vertices - 1
    return i


@njit(cache=True, nogil=True)
def pick_one(x, endpoints, t, n_vertices, delta):
    two_t = 2 * t
    q = 1.0
    if delta > 0.0:
        q = two_t / (two_t + delta * n_vertices)
    return _pick(x, endpoints, two_t, n_vertices, q)


@njit(cache=True, nogil=True)
def run_steps(endpoints, degrees, births, t, n_vertices, fvals, uniforms, delta, track_births):
    """Advance ``len(fvals)`` steps in place; returns the new (t, n_vertices).

    Step i moves t -> t+1 and uses f(t+1) = fvals[i] and three uniforms
    (z, x1, x2). A vertex-step ignores x2 so the stream position never
    depends on the step type.
    """
    for i in range(fvals.shape[0]):
        two_t = 2 * t
        q = 1.0
        if delta > 0.0:
            q = two_t / (two_t + delta * n_vertices)
        z = uniforms[3 * i]
        u1 = _pick(uniforms[3 * i + 1], endpoints, two_t, n_vertices, q)
        if z < fvals[i]:
            v = n_vertices
            endpoints[two_t] = u1
            endpoints[two_t + 1] = v
            degrees[u1] += 1
            degrees[v] = 1
            if track_births:
                births[v] = t + 1
            n_vertices += 1
        else:
            u2 = _pick(uniforms[3 * i + 2], endpoints, two_t, n_vertices, q)
            endpoints[two_t] = u1
            endpoints[two_t + 1] = u2
            degrees[u1] += 1
            degrees[u2] += 1
        t += 1
    return t, n_vertices


@njit(cache=True, nogil=True)
def run_many(fvals, uniforms, replicas, t_target, delta):
    """Run ``replicas`` independent copies from G_1 to ``t_target``.

    Replica r consumes uniforms[r*3*(t_target-1) : (r+1)*3*(t_target-1)].
    Returns a (replicas, t_target) degree matrix, zero-padded past V_t.
    """
    steps = t_target - 1
    out = np.zeros((replicas, t_target), dtype=np.int64)
    endpoints = np.empty(2 * t_target, dtype=np.int64)
    degrees = np.empty(t_target, dtype=np.int64)
    births = np.empty(0, dtype=np.int64)
    for r in range(replicas):
        endpoints[0] = 0
        endpoints[1] = 0
        degrees[:] = 0
        degrees[0] = 2
        _, n = run_steps(
            endpoints, degrees, births, 1, 1, fvals,
            uniforms[r * 3 * steps:(r + 1) * 3 * steps], delta, False,
        )
        out[r, :n] = degrees[:n]
    return out


@njit(cache=True, nogil=True)
def evolve_expectations(a, fvals, t0, t1):
    """Advance E N_t(d) in place from t0 to t1; ``a[d]`` holds degree d (a[0] unused).

    Source degree k at time t moves to k, k+1, k+2 with probabilities
      stay(k) = 1 - (2-f)k/(2t) + (1-f)k^2/(4t^2)
      up1(k)  = (2-f)k/(2t) - 2(1-f)k^2/(4t^2)
      up2(k)  = (1-f)k^2/(4t^2)
    with f = fvals[t+1]; the newborn vertex adds f to degree 1.
    Entries above len(a)-1 are dropped, so a[d] stays exact for every kept d.
    """
    d_max = a.shape[0] - 1
    for t in range(t0, t1):
        f = fvals[t + 1]
        c1 = (2.0 - f) / (2.0 * t)
        c2 = (1.0 - f) / (4.0 * t * t)
        top = min(d_max, 2 * t + 2)
        # sweep upward keeping the two previous old values
        prev1 = 0.0  # old a[d-1]
        prev2 = 0.0  # old a[d-2]
        for d in range(1, top + 1):
            cur = a[d]
            k1 = d - 1
            k2 = d - 2
            v = (1.0 - c1 * d + c2 * d * d) * cur
            v += (c1 * k1 - 2.0 * c2 * k1 * k1) * prev1
            v += c2 * k2 * k2 * prev2
            prev2 = prev1
            prev1 = cur
            a[d] = v
        a[1] += f
    return a
