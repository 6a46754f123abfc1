"""Brute-force reference computations used by several test modules.

The enumerator walks the full step tree of the process from G_1 and keeps
the exact law of the degree multiset (first vertex tracked separately). It
shares no code with the package, so it checks both the simulator and the expectation recursion.
"""
from collections import defaultdict
from fractions import Fraction


def _key(degrees):
    return (degrees[0], *sorted(degrees[1:]))


def enumerate_degree_law(f, t_final):
    """Law of the degree tuple at time ``t_final``.

    States are ``(degree of the first vertex, *sorted other degrees)``.

    ``f(s)`` is the vertex-step probability for the step into time s; pass
    Fractions for exact arithmetic.
    """
    law = {(2,): Fraction(1) if isinstance(f(2), Fraction) else 1.0}
    for t in range(1, t_final):
        p_vertex = f(t + 1)
        nxt = defaultdict(lambda: 0 * p_vertex)
        total = 2 * t
        for degrees, prob in law.items():
            n = len(degrees)
            for i in range(n):
                w_i = Fraction(degrees[i], total) if isinstance(prob, Fraction) else degrees[i] / total
                # vertex-step attaching to i
                new = list(degrees)
                new[i] += 1
                new.append(1)
                nxt[_key(new)] += prob * p_vertex * w_i
                # edge-step with endpoints i, j drawn independently
                for j in range(n):
                    w_j = Fraction(degrees[j], total) if isinstance(prob, Fraction) else degrees[j] / total
                    new = list(degrees)
                    new[i] += 1
                    new[j] += 1
                    nxt[_key(new)] += prob * (1 - p_vertex) * w_i * w_j
        law = dict(nxt)
    return law


def expected_counts(law):
    """E N_t(d) as a dict d -> value."""
    out = defaultdict(lambda: 0)
    for degrees, prob in law.items():
        for d in degrees:
            out[d] += prob
    return dict(out)


def expected_first_degree(law):
    return sum(prob * degrees[0] for degrees, prob in law.items())
