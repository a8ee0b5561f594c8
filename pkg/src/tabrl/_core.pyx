# cython: language_level=3
"""Compiled learning agent.

Mirrors ``tabrl.agent.PyAgent`` operation for operation so that both produce
the same Q tables.  Only the per-step work lives here: TD updates, trace
bookkeeping, softmax / Q-biased softmax sampling and the loop-evasion
controller.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp
from libc.float cimport DBL_MIN

cnp.import_array()

cdef enum:
    ALG_Q = 0
    ALG_SARSA = 1
    ALG_SARSA_LAMBDA = 2
    ALG_TOSL = 3

cdef enum:
    TR_NONE = 0
    TR_REPLACING = 1
    TR_DUTCH = 2
    TR_DENSE = 3

cdef enum:
    SEL_EGREEDY = 0
    SEL_SOFTMAX = 1
    SEL_QBIAS = 2

ALGORITHM_CODES = {"q": ALG_Q, "sarsa": ALG_SARSA, "sarsa_lambda": ALG_SARSA_LAMBDA, "tosl": ALG_TOSL}
STRATEGY_CODES = {"epsilon_greedy": SEL_EGREEDY, "softmax": SEL_SOFTMAX, "qbiassr": SEL_QBIAS}


cdef class Agent:
    cdef readonly object q
    cdef double[:, ::1] qv
    cdef double[::1] qf
    cdef Py_ssize_t n_s, n_a, n_pairs
    cdef int algo, trace_kind, strategy
    cdef double alpha, gamma, decay, q_old
    # reduced register, oldest first in [0, count)
    cdef Py_ssize_t[::1] keys
    cdef double[::1] vals
    cdef Py_ssize_t count, capacity
    cdef double threshold
    # dense traces
    cdef double[::1] dense
    cdef Py_ssize_t[::1] last_visit
    cdef Py_ssize_t clock
    # selection
    cdef double epsilon, base_t, temp, t_cap, factor
    cdef bint normalize
    cdef double[::1] work, bias, acc
    cdef Py_ssize_t n_vars
    cdef Py_ssize_t[::1] cards, radices
    # loop evasion
    cdef bint lrle
    cdef Py_ssize_t lr_size, lr_head, lr_len, lr_unique
    cdef Py_ssize_t[::1] lr_seq
    cdef double[::1] lr_rew
    cdef int[::1] lr_counts

    def __init__(self, q, str algorithm, double alpha, double gamma, double lam, str trace_kind,
                 Py_ssize_t capacity, double threshold, str strategy, double epsilon, double base_temperature,
                 double temperature_cap, double factor, bint normalize, bint lrle, Py_ssize_t lrle_size,
                 cardinalities, radices):
        values = q.values
        if not (isinstance(values, np.ndarray) and values.dtype == np.float64 and values.flags.c_contiguous):
            raise ValueError("Q values must be a C-contiguous float64 array")
        self.q = q
        self.qv = values
        self.qf = values.reshape(-1)
        self.n_s = values.shape[0]
        self.n_a = values.shape[1]
        self.n_pairs = self.n_s * self.n_a
        self.algo = ALGORITHM_CODES[algorithm]
        self.alpha = alpha
        self.gamma = gamma
        self.decay = gamma * lam
        self.q_old = 0.0
        self.trace_kind = {"none": TR_NONE, "replacing": TR_REPLACING, "dutch": TR_DUTCH, "dense": TR_DENSE}[trace_kind]
        self.capacity = capacity
        self.threshold = threshold
        self.count = 0
        if self.trace_kind == TR_REPLACING or self.trace_kind == TR_DUTCH:
            if capacity < 1:
                raise ValueError("reduced traces need capacity >= 1")
            self.keys = np.zeros(capacity + 1, dtype=np.intp)
            self.vals = np.zeros(capacity + 1, dtype=np.float64)
        if self.trace_kind == TR_DENSE:
            self.dense = np.zeros(self.n_pairs, dtype=np.float64)
            self.last_visit = np.full(self.n_pairs, -1, dtype=np.intp)
        self.clock = 0
        self.strategy = STRATEGY_CODES[strategy]
        self.epsilon = epsilon
        self.base_t = base_temperature
        self.temp = base_temperature
        self.t_cap = temperature_cap
        self.factor = factor
        self.normalize = normalize
        self.work = np.zeros(self.n_a, dtype=np.float64)
        self.bias = np.zeros(self.n_a, dtype=np.float64)
        self.acc = np.zeros(self.n_a, dtype=np.float64)
        self.n_vars = len(cardinalities)
        self.cards = np.asarray(cardinalities, dtype=np.intp)
        self.radices = np.asarray(radices, dtype=np.intp)
        self.lrle = lrle
        self.lr_size = max(lrle_size, 1)
        self.lr_seq = np.zeros(self.lr_size, dtype=np.intp)
        self.lr_rew = np.zeros(self.lr_size, dtype=np.float64)
        self.lr_counts = np.zeros(self.n_s if lrle else 1, dtype=np.intc)
        self.lr_head = 0
        self.lr_len = 0
        self.lr_unique = 0

    backend = "cython"

    @property
    def temperature(self):
        return self.temp

    # ------------------------------------------------------------------ traces

    cdef inline void _remove_at(self, Py_ssize_t i) noexcept nogil:
        cdef Py_ssize_t j
        for j in range(i, self.count - 1):
            self.keys[j] = self.keys[j + 1]
            self.vals[j] = self.vals[j + 1]
        self.count -= 1

    cdef inline double _decay_reduced(self, Py_ssize_t sa, double floor) noexcept nogil:
        """Decay, drop traces below ``floor``, detach ``sa``; return its decayed trace."""
        cdef Py_ssize_t i, w = 0
        cdef double e, found = 0.0
        for i in range(self.count):
            e = self.vals[i] * self.decay
            if e < floor:
                continue
            if self.keys[i] == sa:
                found = e
                continue
            self.keys[w] = self.keys[i]
            self.vals[w] = e
            w += 1
        self.count = w
        return found

    cdef inline void _push_reduced(self, Py_ssize_t sa, double e) noexcept nogil:
        self.keys[self.count] = sa
        self.vals[self.count] = e
        self.count += 1
        if self.count > self.capacity:
            self._remove_at(0)

    cdef inline void _apply_reduced(self, double coef) noexcept nogil:
        cdef Py_ssize_t i
        for i in range(self.count):
            self.qf[self.keys[i]] += coef * self.vals[i]

    cdef void _dense_step(self, Py_ssize_t sa, double coef, bint dutch) noexcept nogil:
        cdef Py_ssize_t i, n = self.n_pairs
        cdef double d = self.decay, e
        cdef double* tr = &self.dense[0]
        cdef double* qq = &self.qf[0]
        for i in range(n):
            e = tr[i] * d
            tr[i] = e if e >= DBL_MIN else 0.0
        if dutch:
            tr[sa] = (1.0 - self.alpha) * tr[sa] + self.alpha
        else:
            tr[sa] = 1.0
        self.last_visit[sa] = self.clock
        for i in range(n):
            qq[i] += coef * tr[i]

    cdef double _replacing_update(self, Py_ssize_t sa, double delta) noexcept nogil:
        cdef double floor = self.threshold if self.threshold > DBL_MIN else DBL_MIN
        if self.trace_kind == TR_DENSE:
            self._dense_step(sa, self.alpha * delta, False)
        else:
            self._decay_reduced(sa, floor)
            self._push_reduced(sa, 1.0)
            self._apply_reduced(self.alpha * delta)
        return delta

    cdef double _dutch_update(self, Py_ssize_t sa, double delta, double dq) noexcept nogil:
        cdef double old
        if self.trace_kind == TR_DENSE:
            self._dense_step(sa, delta + dq, True)
        else:
            old = self._decay_reduced(sa, DBL_MIN)
            self._push_reduced(sa, (1.0 - self.alpha) * old + self.alpha)
            self._apply_reduced(delta + dq)
        self.qf[sa] -= self.alpha * dq
        return delta

    # ------------------------------------------------------------------ learning

    cpdef double update(self, Py_ssize_t s, Py_ssize_t a, double r, Py_ssize_t s_next, Py_ssize_t a_next,
                        bint terminal=False) except? -1.0:
        cdef double q_next = 0.0, q_sa, delta, dq, m
        cdef Py_ssize_t b, sa
        if not (0 <= s < self.n_s and 0 <= a < self.n_a and 0 <= s_next < self.n_s):
            raise IndexError(f"transition ({s}, {a}, {s_next}) out of range")
        if r != r or r - r != 0.0:
            raise ValueError(f"non-finite reward {r!r}")
        if self.algo == ALG_Q:
            if not terminal:
                m = self.qv[s_next, 0]
                for b in range(1, self.n_a):
                    if self.qv[s_next, b] > m:
                        m = self.qv[s_next, b]
                q_next = m
            delta = r + self.gamma * q_next - self.qv[s, a]
            self.qv[s, a] += self.alpha * delta
            return delta
        if not terminal:
            if not 0 <= a_next < self.n_a:
                raise IndexError(f"next action {a_next} out of range")
            q_next = self.qv[s_next, a_next]
        q_sa = self.qv[s, a]
        delta = r + self.gamma * q_next - q_sa
        sa = s * self.n_a + a
        self.clock += 1
        if self.algo == ALG_SARSA:
            self.qv[s, a] += self.alpha * delta
        elif self.algo == ALG_SARSA_LAMBDA:
            self._replacing_update(sa, delta)
        else:
            dq = q_sa - self.q_old
            self._dutch_update(sa, delta, dq)
            self.q_old = q_next
        return delta

    def end_episode(self):
        self.count = 0
        self.q_old = 0.0
        if self.trace_kind == TR_DENSE:
            self.dense[:] = 0.0
            self.last_visit[:] = -1
        self._lrle_reset()

    def trace_entries(self):
        """(state, action, magnitude), most recent first."""
        cdef Py_ssize_t i
        if self.trace_kind == TR_DENSE:
            live = [i for i in range(self.n_pairs) if self.dense[i] != 0.0]
            live.sort(key=lambda k: -self.last_visit[k])
            return [(k // self.n_a, k % self.n_a, self.dense[k]) for k in live]
        return [(self.keys[i] // self.n_a, self.keys[i] % self.n_a, self.vals[i])
                for i in range(self.count - 1, -1, -1)]

    @property
    def carry(self):
        return self.q_old

    # ------------------------------------------------------------------ selection

    cdef void _fill_bias(self, Py_ssize_t s) noexcept nogil:
        cdef Py_ssize_t i, l, a, base, card, rad, na = self.n_a
        cdef double* bias = &self.bias[0]
        cdef double* acc = &self.acc[0]
        cdef double* row
        cdef double* qq = &self.qf[0]
        for a in range(na):
            bias[a] = 0.0
        for i in range(self.n_vars):
            card = self.cards[i]
            rad = self.radices[i]
            base = s - ((s // rad) % card) * rad
            for a in range(na):
                acc[a] = 0.0
            for l in range(card):
                row = qq + (base + l * rad) * na
                for a in range(na):
                    acc[a] += row[a]
            for a in range(na):
                bias[a] += acc[a] / card
        for a in range(na):
            bias[a] = bias[a] / self.n_vars

    cdef void _softmax(self, Py_ssize_t s) noexcept nogil:
        """Leave the selection distribution of ``s`` in ``work``."""
        cdef Py_ssize_t a
        cdef double m, tot = 0.0, t = self.temp
        if self.strategy == SEL_QBIAS:
            self._fill_bias(s)
            for a in range(self.n_a):
                self.work[a] = self.qv[s, a] + self.bias[a]
        else:
            for a in range(self.n_a):
                self.work[a] = self.qv[s, a]
        if self.normalize:
            for a in range(self.n_a):
                self.work[a] = self.work[a] * self.factor
        m = self.work[0]
        for a in range(1, self.n_a):
            if self.work[a] > m:
                m = self.work[a]
        for a in range(self.n_a):
            self.work[a] = exp((self.work[a] - m) / t)
            tot += self.work[a]
        for a in range(self.n_a):
            self.work[a] = self.work[a] / tot

    def probabilities(self, Py_ssize_t s):
        if not 0 <= s < self.n_s:
            raise IndexError(f"state {s} out of range")
        self._softmax(s)
        return np.asarray(self.work).copy()

    cpdef Py_ssize_t select(self, Py_ssize_t s, object rng) except -1:
        cdef Py_ssize_t a, best
        cdef double u, cum = 0.0, m
        if not 0 <= s < self.n_s:
            raise IndexError(f"state {s} out of range")
        if self.strategy == SEL_EGREEDY:
            if rng.random() < self.epsilon:
                return rng.randrange(self.n_a)
            best = 0
            m = self.qv[s, 0]
            for a in range(1, self.n_a):
                if self.qv[s, a] > m:
                    m = self.qv[s, a]
                    best = a
            return best
        self._softmax(s)
        u = rng.random()
        for a in range(self.n_a):
            cum += self.work[a]
            if u < cum:
                return a
        return self.n_a - 1

    # ------------------------------------------------------------------ loop evasion

    cdef void _lrle_reset(self) noexcept:
        cdef Py_ssize_t i
        if self.lrle:
            for i in range(self.lr_len):
                self.lr_counts[self.lr_seq[(self.lr_head + i) % self.lr_size]] = 0
        self.lr_head = 0
        self.lr_len = 0
        self.lr_unique = 0
        self.temp = self.base_t

    cpdef double observe(self, Py_ssize_t s, double r) except? -1.0:
        cdef Py_ssize_t old, i, pos, end
        cdef double tot = 0.0, redundancy
        cdef double* rew
        if not self.lrle:
            return self.temp
        if not 0 <= s < self.n_s:
            raise IndexError(f"state {s} out of range")
        if self.lr_len == self.lr_size:
            old = self.lr_seq[self.lr_head]
            self.lr_counts[old] -= 1
            if self.lr_counts[old] == 0:
                self.lr_unique -= 1
            self.lr_head = (self.lr_head + 1) % self.lr_size
            self.lr_len -= 1
        pos = (self.lr_head + self.lr_len) % self.lr_size
        self.lr_seq[pos] = s
        self.lr_rew[pos] = r
        self.lr_len += 1
        if self.lr_counts[s] == 0:
            self.lr_unique += 1
        self.lr_counts[s] += 1
        # oldest to newest, in two contiguous runs of the ring buffer
        rew = &self.lr_rew[0]
        end = self.lr_head + self.lr_len
        if end > self.lr_size:
            for i in range(self.lr_head, self.lr_size):
                tot += rew[i]
            for i in range(end - self.lr_size):
                tot += rew[i]
        else:
            for i in range(self.lr_head, end):
                tot += rew[i]
        redundancy = <double>self.lr_len / <double>self.lr_unique
        if self.lr_counts[s] >= 2 and tot < 0.0 and redundancy > 2.0:
            self.temp = self.temp + 0.25 * redundancy
            if self.temp > self.t_cap:
                self.temp = self.t_cap
        else:
            self.temp = self.base_t
        return self.temp


cdef class NullAgent:
    """Agent-shaped no-op; the benchmark subtracts its loop time as overhead."""

    backend = "cython"

    cpdef double update(self, Py_ssize_t s, Py_ssize_t a, double r, Py_ssize_t s_next, Py_ssize_t a_next,
                        bint terminal=False) except? -1.0:
        return 0.0

    cpdef Py_ssize_t select(self, Py_ssize_t s, object rng) except -1:
        return 0

    cpdef double observe(self, Py_ssize_t s, double r) except? -1.0:
        return 1.0
