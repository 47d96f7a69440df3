# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels.RankKernel`` exactly."""

from libc.stdlib cimport malloc, free


cdef class RankKernel:
    cdef int n
    cdef int n_pairs
    cdef int *rank
    cdef int *pair_a
    cdef int *pair_b
    cdef int *scratch
    cdef int *parent

    def __cinit__(self, rank, pair_a, pair_b):
        cdef int i, j
        self.n = len(rank)
        self.n_pairs = len(pair_a)
        self.rank = <int *> malloc(max(1, self.n * self.n) * sizeof(int))
        self.pair_a = <int *> malloc(max(1, self.n_pairs) * sizeof(int))
        self.pair_b = <int *> malloc(max(1, self.n_pairs) * sizeof(int))
        self.scratch = <int *> malloc(max(1, self.n) * sizeof(int))
        self.parent = <int *> malloc(max(1, self.n) * sizeof(int))
        if not (self.rank and self.pair_a and self.pair_b and self.scratch and self.parent):
            raise MemoryError()
        for i in range(self.n):
            row = rank[i]
            for j in range(self.n):
                self.rank[i * self.n + j] = row[j]
        for i in range(self.n_pairs):
            self.pair_a[i] = pair_a[i]
            self.pair_b[i] = pair_b[i]

    def __dealloc__(self):
        free(self.rank)
        free(self.pair_a)
        free(self.pair_b)
        free(self.scratch)
        free(self.parent)

    def __reduce__(self):
        n = self.n
        rank = [[self.rank[i * n + j] for j in range(n)] for i in range(n)]
        return (RankKernel, (rank, [self.pair_a[i] for i in range(self.n_pairs)],
                             [self.pair_b[i] for i in range(self.n_pairs)]))

    def select_delegates(self, int v, order):
        cdef int k = len(order)
        cdef int i, j, w, u, best, best_r, r_vw, r_uw
        cdef int n = self.n
        cdef int *live
        cdef int *seq
        cdef int *row_v = self.rank + v * n
        cdef int *row_w
        out = []
        if k == 0:
            return out
        live = <int *> malloc(2 * k * sizeof(int))
        if not live:
            raise MemoryError()
        seq = live + k
        try:
            for i in range(k):
                seq[i] = order[i]
                live[i] = 1
            for i in range(k):
                w = seq[i]
                r_vw = row_v[w]
                row_w = self.rank + w * n
                best = -1
                best_r = r_vw
                for j in range(k):
                    if not live[j]:
                        continue
                    u = seq[j]
                    r_uw = row_w[u]
                    if u != w and r_uw < best_r and row_v[u] < r_vw:
                        best = u
                        best_r = r_uw
                if best >= 0:
                    live[i] = 0
                out.append(best)
        finally:
            free(live)
        return out

    cdef inline int _find(self, int x) noexcept:
        cdef int *parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def spanning_forest(self, const unsigned char[:] present):
        cdef int n = self.n
        cdef int r, ra, rb, x, count = 0
        cdef int need = n - 1
        cdef int limit = min(self.n_pairs, present.shape[0])
        for x in range(n):
            self.parent[x] = x
        chosen = []
        for r in range(limit):
            if count >= need:
                break
            if present[r]:
                ra = self._find(self.pair_a[r])
                rb = self._find(self.pair_b[r])
                if ra != rb:
                    if rb < ra:
                        ra, rb = rb, ra
                    self.parent[rb] = ra
                    chosen.append(r)
                    count += 1
        labels = [self._find(x) for x in range(n)]
        return chosen, labels, n - count

    def find_witness(self, chosen):
        cdef int n = self.n
        cdef int m = len(chosen)
        cdef int i, j, a, b, v, w, u, r_vw, deg
        cdef int *row_v
        cdef int *deg_of
        cdef int *adj
        if m == 0:
            return None
        deg_of = <int *> malloc(n * sizeof(int))
        adj = <int *> malloc(n * n * sizeof(int))
        if not deg_of or not adj:
            free(deg_of)
            free(adj)
            raise MemoryError()
        try:
            for v in range(n):
                deg_of[v] = 0
            for i in range(m):
                a = self.pair_a[<int> chosen[i]]
                b = self.pair_b[<int> chosen[i]]
                adj[a * n + deg_of[a]] = b
                deg_of[a] += 1
                adj[b * n + deg_of[b]] = a
                deg_of[b] += 1
            for v in range(n):
                deg = deg_of[v]
                _sort_ints(adj + v * n, deg)
                row_v = self.rank + v * n
                for i in range(deg):
                    w = adj[v * n + i]
                    r_vw = row_v[w]
                    for j in range(deg):
                        u = adj[v * n + j]
                        if u != w and row_v[u] < r_vw and self.rank[u * n + w] < r_vw:
                            return (u, v, w)
        finally:
            free(deg_of)
            free(adj)
        return None

    def longest_invalid(self, const unsigned char[:] present, const unsigned char[:] valid):
        cdef int r
        for r in range(min(self.n_pairs, present.shape[0]) - 1, -1, -1):
            if present[r] and not valid[r]:
                return r
        return -1


cdef void _sort_ints(int *xs, int k) noexcept:
    cdef int i, j, key
    for i in range(1, k):
        key = xs[i]
        j = i - 1
        while j >= 0 and xs[j] > key:
            xs[j + 1] = xs[j]
            j -= 1
        xs[j + 1] = key
