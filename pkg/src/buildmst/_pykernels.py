"""Pure-Python hot kernels; reference behaviour for ``_ckernels.pyx``.

All kernels work on node *indices* and pair *ranks* (see
:class:`buildmst.tree_metric.Metric`), never on distances.
"""


class RankKernel:
    def __init__(self, rank, pair_a, pair_b):
        self.n = len(rank)
        self.rank = [list(row) for row in rank]
        self.pair_a = list(pair_a)
        self.pair_b = list(pair_b)
        self.n_pairs = len(self.pair_a)

    def select_delegates(self, v, order):
        """For each ``w`` of ``order``: nearest-to-w live witness, or -1 to introduce.

        Witnesses are drawn from the live set, which shrinks as neighbours
        are delegated away.
        """
        rank = self.rank
        row_v = rank[v]
        live = set(order)
        out = []
        for w in order:
            r_vw = row_v[w]
            row_w = rank[w]
            best = -1
            best_r = r_vw
            for u in live:
                r_uw = row_w[u]
                if u != w and r_uw < best_r and row_v[u] < r_vw:
                    best = u
                    best_r = r_uw
            if best >= 0:
                live.discard(w)
            out.append(best)
        return out

    def spanning_forest(self, present):
        """Kruskal over present pair ranks.

        Returns ``(chosen ranks ascending, component label per node, component count)``;
        labels are the smallest node index of each component.
        """
        parent = list(range(self.n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        chosen = []
        pair_a, pair_b = self.pair_a, self.pair_b
        need = self.n - 1
        for r in range(self.n_pairs):
            if present[r]:
                ra, rb = find(pair_a[r]), find(pair_b[r])
                if ra != rb:
                    if rb < ra:
                        ra, rb = rb, ra
                    parent[rb] = ra
                    chosen.append(r)
                    if len(chosen) == need:
                        break
        labels = [find(x) for x in range(self.n)]
        return chosen, labels, self.n - len(chosen)

    def find_witness(self, chosen):
        """Some ``(u, v, w)`` with u < (v,w) and {v,u}, {v,w} both among ``chosen`` ranks."""
        adj = [[] for _ in range(self.n)]
        for r in chosen:
            a, b = self.pair_a[r], self.pair_b[r]
            adj[a].append(b)
            adj[b].append(a)
        rank = self.rank
        for v in range(self.n):
            row_v = rank[v]
            nbrs = sorted(adj[v])
            for w in nbrs:
                r_vw = row_v[w]
                for u in nbrs:
                    if u != w and row_v[u] < r_vw and rank[u][w] < r_vw:
                        return (u, v, w)
        return None

    def longest_invalid(self, present, valid):
        """Highest rank present but not valid, or -1."""
        for r in range(self.n_pairs - 1, -1, -1):
            if present[r] and not valid[r]:
                return r
        return -1
