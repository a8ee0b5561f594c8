"""Independent reference computations used to freeze expected values.

Nothing here imports the package: each oracle re-derives its quantity the
slow, obvious way (enumeration, unvectorised loops, textbook formulas).
"""
import itertools
import math

import numpy as np


def enumerate_states(cards):
    """All level tuples in mixed-radix order (first variable most significant)."""
    return list(itertools.product(*[range(c) for c in cards]))


def index_by_enumeration(cards, values):
    return enumerate_states(cards).index(tuple(values))


def siblings_by_enumeration(cards, s, i):
    states = enumerate_states(cards)
    me = states[s]
    return [k for k, t in enumerate(states) if all(t[j] == me[j] for j in range(len(cards)) if j != i)]


def bias_by_enumeration(q, cards, s):
    per_var = []
    for i in range(len(cards)):
        rows = [q[t] for t in siblings_by_enumeration(cards, s, i)]
        per_var.append([sum(r[a] for r in rows) / len(rows) for a in range(len(q[s]))])
    n = len(per_var)
    return [sum(v[a] for v in per_var) / n for a in range(len(q[s]))]


def softmax_closed_form(row, t):
    """Boltzmann probabilities straight from the definition, no max shift."""
    z = [math.exp(v / t) for v in row]
    tot = math.fsum(z)
    return [x / tot for x in z]


def sarsa_lambda_dense(stream, n_s, n_a, alpha, gamma, lam):
    """Replacing traces over the whole table; stream of (s, a, r, s', a')."""
    q = np.zeros((n_s, n_a))
    e = np.zeros((n_s, n_a))
    for s, a, r, s2, a2 in stream:
        delta = r + gamma * q[s2, a2] - q[s, a]
        e *= gamma * lam
        e[s, a] = 1.0
        q += alpha * delta * e
    return q


def true_online_sarsa(stream, n_s, n_a, alpha, gamma, lam):
    """True online SARSA(lambda) written with one-hot features and unscaled dutch traces.

    e <- gamma*lam*e + (1 - alpha*gamma*lam * e.x) x
    theta <- theta + alpha*(delta + Q - Q_old)*e - alpha*(Q - Q_old)*x
    """
    theta = np.zeros(n_s * n_a)
    e = np.zeros(n_s * n_a)
    q_old = 0.0
    for s, a, r, s2, a2 in stream:
        x = np.zeros(n_s * n_a)
        x[s * n_a + a] = 1.0
        x2 = np.zeros(n_s * n_a)
        x2[s2 * n_a + a2] = 1.0
        qv = theta @ x
        qn = theta @ x2
        delta = r + gamma * qn - qv
        e = gamma * lam * e + (1 - alpha * gamma * lam * (e @ x)) * x
        theta = theta + alpha * (delta + qv - q_old) * e - alpha * (qv - q_old) * x
        q_old = qn
    return theta.reshape(n_s, n_a)


def value_iteration_loops(nxt, rew, gamma, tol=1e-13):
    """Deterministic MDP: nxt[s][a] successor, rew[s][a] reward."""
    n_s, n_a = len(nxt), len(nxt[0])
    q = [[0.0] * n_a for _ in range(n_s)]
    while True:
        new = [[rew[s][a] + gamma * max(q[nxt[s][a]]) for a in range(n_a)] for s in range(n_s)]
        res = max(abs(new[s][a] - q[s][a]) for s in range(n_s) for a in range(n_a))
        q = new
        if res < tol:
            return np.array(q)


def anova_by_hand(groups):
    allv = [x for g in groups for x in g]
    grand = sum(allv) / len(allv)
    ssb = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in groups)
    ssw = sum((x - sum(g) / len(g)) ** 2 for g in groups for x in g)
    dfb, dfw = len(groups) - 1, len(allv) - len(groups)
    return ssb, ssw, (ssb / dfb) / (ssw / dfw)
