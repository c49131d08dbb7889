"""Hot loops: the two-class priority queue event loop and sequence DPs.

Every function here is numba-compatible and decorated with the switchable
``njit`` from ``_accel``. Inputs are numpy arrays; token sequences are mapped
to integer ids by the callers.
"""

import numpy as np

from tcintent._accel import njit

HIGH = 0
LOW = 1

# Layout of the statistics vector returned by ``priority_queue_kernel``.
# Per-class blocks of _CLASS_STRIDE slots start at 0 (high) and _CLASS_STRIDE (low).
OFFERED = 0
OFFERED_W = 1
SERVED = 2
SERVED_W = 3
DROPPED = 4
DROPPED_W = 5
WAIT_SUM = 6
WAIT_N = 7
QUEUE_AREA = 8
_CLASS_STRIDE = 9
BUSY_TIME = 2 * _CLASS_STRIDE
IN_QUEUE_HIGH = BUSY_TIME + 1
IN_QUEUE_LOW = BUSY_TIME + 2
IN_SERVICE_CLASS = BUSY_TIME + 3
N_STATS = BUSY_TIME + 4


def stat_index(cls, field):
    return cls * _CLASS_STRIDE + field


@njit
def priority_queue_kernel(arr_h, svc_h, arr_l, svc_l, capacity, horizon, warmup):
    """Event loop of a single-server, non-preemptive two-class queue.

    ``arr_*`` are sorted arrival instants, ``svc_*`` the service demand drawn
    for each arriving packet. ``capacity`` bounds the total occupancy
    including the packet in service. At full occupancy a low arrival is
    dropped; a high arrival evicts the most recently queued low packet if
    there is one, otherwise it is dropped. Statistics whose packets arrived
    before ``warmup`` are excluded from the windowed counters and areas.
    """
    n_h = arr_h.shape[0]
    n_l = arr_l.shape[0]
    size = min(capacity, max(n_h, n_l)) + 1
    q_h = np.empty(size, np.int64)
    q_l = np.empty(size, np.int64)
    head_h = 0
    len_h = 0
    head_l = 0
    len_l = 0

    st = np.zeros(N_STATS, np.float64)
    lo_base = _CLASS_STRIDE

    ih = 0
    il = 0
    busy = False
    serving_cls = -1
    serving_arr = 0.0
    t_dep = np.inf
    t_last = 0.0
    inf = np.inf

    while True:
        ta_h = arr_h[ih] if ih < n_h else inf
        ta_l = arr_l[il] if il < n_l else inf
        ta = ta_h if ta_h <= ta_l else ta_l
        t_next = ta if ta < t_dep else t_dep
        if t_next > horizon:
            break

        lo = t_last if t_last > warmup else warmup
        if t_next > lo:
            dt = t_next - lo
            st[QUEUE_AREA] += len_h * dt
            st[lo_base + QUEUE_AREA] += len_l * dt
            if busy:
                st[BUSY_TIME] += dt
        t_last = t_next

        if t_dep <= ta:
            # departure
            base = 0 if serving_cls == HIGH else lo_base
            st[base + SERVED] += 1.0
            if serving_arr >= warmup:
                st[base + SERVED_W] += 1.0
            busy = False
            serving_cls = -1
            t_dep = inf
            if len_h > 0:
                idx = q_h[head_h]
                head_h = (head_h + 1) % size
                len_h -= 1
                a = arr_h[idx]
                if a >= warmup:
                    st[WAIT_SUM] += t_next - a
                    st[WAIT_N] += 1.0
                busy = True
                serving_cls = HIGH
                serving_arr = a
                t_dep = t_next + svc_h[idx]
            elif len_l > 0:
                idx = q_l[head_l]
                head_l = (head_l + 1) % size
                len_l -= 1
                a = arr_l[idx]
                if a >= warmup:
                    st[lo_base + WAIT_SUM] += t_next - a
                    st[lo_base + WAIT_N] += 1.0
                busy = True
                serving_cls = LOW
                serving_arr = a
                t_dep = t_next + svc_l[idx]
            continue

        # arrival
        if ta_h <= ta_l:
            cls = HIGH
            idx = ih
            ih += 1
        else:
            cls = LOW
            idx = il
            il += 1
        base = 0 if cls == HIGH else lo_base
        in_window = ta >= warmup
        st[base + OFFERED] += 1.0
        if in_window:
            st[base + OFFERED_W] += 1.0

        occupancy = len_h + len_l + (1 if busy else 0)
        if occupancy >= capacity:
            if cls == HIGH and len_l > 0:
                tail = (head_l + len_l - 1) % size
                victim = q_l[tail]
                len_l -= 1
                st[lo_base + DROPPED] += 1.0
                if arr_l[victim] >= warmup:
                    st[lo_base + DROPPED_W] += 1.0
            else:
                st[base + DROPPED] += 1.0
                if in_window:
                    st[base + DROPPED_W] += 1.0
                continue

        if not busy:
            busy = True
            serving_cls = cls
            serving_arr = ta
            if in_window:
                st[base + WAIT_N] += 1.0
            t_dep = ta + (svc_h[idx] if cls == HIGH else svc_l[idx])
        elif cls == HIGH:
            q_h[(head_h + len_h) % size] = idx
            len_h += 1
        else:
            q_l[(head_l + len_l) % size] = idx
            len_l += 1

    lo = t_last if t_last > warmup else warmup
    if horizon > lo:
        dt = horizon - lo
        st[QUEUE_AREA] += len_h * dt
        st[lo_base + QUEUE_AREA] += len_l * dt
        if busy:
            st[BUSY_TIME] += dt

    st[IN_QUEUE_HIGH] = len_h
    st[IN_QUEUE_LOW] = len_l
    st[IN_SERVICE_CLASS] = serving_cls
    return st


@njit
def lcs_length(a, b):
    """Length of the longest common subsequence of two int sequences."""
    n = a.shape[0]
    m = b.shape[0]
    if n == 0 or m == 0:
        return 0
    prev = np.zeros(m + 1, np.int64)
    cur = np.zeros(m + 1, np.int64)
    for i in range(1, n + 1):
        ai = a[i - 1]
        cur[0] = 0
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                cur[j] = prev[j - 1] + 1
            elif prev[j] >= cur[j - 1]:
                cur[j] = prev[j]
            else:
                cur[j] = cur[j - 1]
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]


@njit
def levenshtein(a, b):
    """Unit-cost edit distance between two int sequences."""
    n = a.shape[0]
    m = b.shape[0]
    if n == 0:
        return m
    if m == 0:
        return n
    prev = np.arange(m + 1).astype(np.int64)
    cur = np.zeros(m + 1, np.int64)
    for i in range(1, n + 1):
        cur[0] = i
        ai = a[i - 1]
        for j in range(1, m + 1):
            cost = 0 if ai == b[j - 1] else 1
            best = prev[j - 1] + cost
            if prev[j] + 1 < best:
                best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            cur[j] = best
        for j in range(m + 1):
            prev[j] = cur[j]
    return prev[m]
