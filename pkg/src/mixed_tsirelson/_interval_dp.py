"""Exact interval dynamic program for norms in ``T[(F_n, theta_n)]``.

Positions ``0..N-1`` carry the support indices ``p`` and magnitudes ``|x_i|``.
For an interval ``[i..j]`` of positions the norm of the restriction is

    N(i, j) = max(max |x|, max_n theta_n * A_n(i, j))

where ``A_n`` is the best sum of piece norms over tilings of a suffix of
``[i..j]`` whose start indices form a member of ``F_n`` (a single piece is
only allowed when it starts after ``i``). For the Schreier ladder a start set
in ``S(m)`` is a run of at most ``p_s`` groups, each a tiling whose start set
lies in ``S(m-1)``; ``R_m(s, e)`` is the best such value for tilings starting
exactly at ``s``. Weights at or beyond the least ``n`` for which the whole
index set of the interval is in ``F_n`` are dominated by that ``n``, which
then contributes ``theta_n * l1`` in closed form.

All values are kept as integers in units of ``1/scale``. Sums and maxima are
then exact in machine integers; the only division (by a weight denominator)
is checked, and a failed check restarts with a larger scale.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Sequence

import numpy as np

from .theta import ThetaSequence

_INT64_SAFE = 2**61


class _Rescale(Exception):
    pass


def schreier_reach_table(p: Sequence[int], levels: int) -> list[list[int]]:
    """``reach[n][s]``: end position of the longest run from ``s`` whose indices lie in S(n)."""
    N = len(p)
    reach = [[s + 1 for s in range(N)]]
    for _ in range(levels):
        prev = reach[-1]
        cur = []
        for s in range(N):
            j, budget = s, p[s]
            while budget > 0 and j < N:
                j = prev[j]
                budget -= 1
            cur.append(j)
        reach.append(cur)
    return reach


class IntervalNormSolver:
    """Solve every interval of one vector at once; answers norm and root-weight queries."""

    def __init__(
        self,
        positions: Sequence[int],
        magnitudes: Sequence[Fraction],
        ladder: str,
        theta: ThetaSequence,
        weights: Sequence[int] = (),
    ) -> None:
        if len(positions) != len(magnitudes) or not positions:
            raise ValueError("need a non-empty support with one magnitude per index")
        self.p = [int(v) for v in positions]
        self.mag = [Fraction(v) for v in magnitudes]
        self.ladder = ladder
        self.theta = theta
        self.N = N = len(self.p)
        # a set with minimum 1 is a singleton, so index 1 never joins a block
        self.lead_one = ladder == "S" and self.p[0] == 1 and N > 1
        if ladder == "S":
            first = 1 if self.lead_one else 0
            reach = schreier_reach_table(self.p, 1)
            top = 0
            while reach[top][first] < N:
                top += 1
                if top >= len(reach):
                    reach = schreier_reach_table(self.p, top)
            self.reach = reach
            self.root_rank = top
            wanted = max([w for w in weights if w < top], default=0)
            self.levels = max(top - 1, wanted)
            weight_range = top
        else:
            self.reach = None
            self.root_rank = N if N > 1 else 0
            self.levels = 1
            weight_range = N
        self.weight_range = weight_range
        self.theta_q = [None] + [theta.at(n) for n in range(1, weight_range + 1)]
        self._layer_cache: dict[int, tuple[list, list]] = {}
        self._scale_denominator_power = 2
        self._run()

    # -- setup ---------------------------------------------------------------

    def _choose_scale(self) -> None:
        base = 1
        for v in self.mag:
            base = lcm(base, v.denominator)
        tden = 1
        for t in self.theta_q[1:]:
            tden = lcm(tden, t.denominator)
        self.scale = base * tden**self._scale_denominator_power
        self.ints = [int(v * self.scale) for v in self.mag]
        total = sum(self.ints)
        self.dtype = np.int64 if 4 * total < _INT64_SAFE else object

    def _run(self) -> None:
        while True:
            self._choose_scale()
            try:
                self._solve()
                return
            except _Rescale:
                self._scale_denominator_power += 3
                self._layer_cache.clear()

    def _nstar(self, s: int, e: int) -> int:
        """Least weight index whose family contains the indices at positions s..e."""
        if e == s:
            return 0
        if self.ladder == "A":
            return e - s + 1
        n = 1
        while self.reach[n][s] <= e:
            n += 1
        return n

    def _budget(self, s: int) -> int:
        return min(self.p[s], self.N - s) if self.ladder == "S" else self.N - s

    def _weighted(self, n: int, value: int) -> tuple[int, int]:
        t = self.theta_q[n]
        return t.numerator * value, t.denominator

    # -- forward pass --------------------------------------------------------

    def _solve(self) -> None:
        N, L, dt = self.N, self.levels, self.dtype
        neg = -1
        self.Nv = np.zeros((N, N), dtype=dt)
        self.R = [None] + [np.zeros((N, N), dtype=dt) for _ in range(L)]
        if self.ladder == "S":
            SR = [None] + [np.full(N, neg, dtype=dt) for _ in range(L)]
        else:
            SR = np.full((N + 1, N), neg, dtype=dt)
        self.SR_history = None
        for s in range(N - 1, -1, -1):
            D, _ = self._layers(s, record_plus=False, SR=SR)
            if self.ladder == "S":
                for m in range(1, L + 1):
                    SR[m][s:] = np.maximum(SR[m][s:], self.R[m][s, s:])
            else:
                K = self._budget(s)
                Dm = D[1]
                SR[1 : K + 1, s:] = np.maximum(SR[1 : K + 1, s:], Dm[1 : K + 1, s:])
                if K < N:
                    SR[K + 1 :, s:] = np.maximum(SR[K + 1 :, s:], Dm[K, s:][None, :])
        self.SR_final = SR

    def _layers(self, s: int, record_plus: bool, SR=None):
        """Run the per-start layered tables for start position ``s``.

        During the forward pass this also fills ``N(s, e)`` and ``R_m(s, e)``;
        afterwards it recomputes ``D`` and ``D^+`` for backtracking.
        """
        if record_plus and s in self._layer_cache:
            return self._layer_cache[s]
        N, L, dt = self.N, self.levels, self.dtype
        forward = not record_plus
        K = self._budget(s)
        D = [None] + [np.zeros((K + 1, N), dtype=dt) for _ in range(L)]
        P = [None] + [np.zeros((K + 1, N), dtype=dt) for _ in range(L)] if record_plus else None
        l1 = 0
        mx = 0
        for e in range(s, N):
            l1 += self.ints[e]
            mx = max(mx, self.ints[e])
            khi = min(K, e - s + 1)
            pluses = []
            base = np.array([-1], dtype=dt)
            for m in range(1, L + 1):
                if self.ladder == "S":
                    G = self.Nv if m == 1 else self.R[m - 1]
                else:
                    G = self.Nv
                if khi >= 2:
                    block = D[m][1:khi, s:e] + G[s + 1 : e + 1, e][None, :]
                    rows = block.max(axis=1)
                    plus = np.maximum.accumulate(np.concatenate((base, rows)))
                else:
                    plus = base.copy()
                pluses.append(plus)
                if self.ladder == "S":
                    base = plus[-1:].copy()
            if forward:
                value = self._interval_value(s, e, l1, mx, pluses, SR)
                self.Nv[s, e] = value
            else:
                value = self.Nv[s, e]
            for m in range(1, L + 1):
                col = np.maximum(pluses[m - 1], value)
                D[m][1 : khi + 1, e] = col
                D[m][khi + 1 :, e] = col[-1]
                if record_plus:
                    P[m][1 : khi + 1, e] = pluses[m - 1]
                    P[m][khi + 1 :, e] = pluses[m - 1][-1]
                if forward and self.ladder == "S":
                    self.R[m][s, e] = col[-1]
        if record_plus:
            self._layer_cache[s] = (D, P)
            return D, P
        return D, None

    def _interval_value(self, s: int, e: int, l1: int, mx: int, pluses, SR) -> int:
        if e == s:
            return mx
        if s == 0 and self.lead_one:
            return max(mx, int(self.Nv[1, e]))
        ns = self._nstar(s, e)
        best_num, best_den = mx, 1
        if self.ladder == "S":
            for n in range(1, ns):
                inner = max(int(pluses[n - 1][-1]), int(SR[n][e]))
                num, den = self._weighted(n, inner)
                if num * best_den > best_num * den:
                    best_num, best_den = num, den
        else:
            plus = pluses[0]
            for n in range(1, ns):
                inner = max(int(plus[n - 1]), int(SR[n][e]))
                num, den = self._weighted(n, inner)
                if num * best_den > best_num * den:
                    best_num, best_den = num, den
        num, den = self._weighted(ns, l1)
        if num * best_den > best_num * den:
            best_num, best_den = num, den
        if best_num % best_den:
            raise _Rescale()
        return best_num // best_den

    # -- queries -------------------------------------------------------------

    def to_fraction(self, value: int) -> Fraction:
        return Fraction(int(value), self.scale)

    @property
    def norm(self) -> Fraction:
        return self.to_fraction(self.Nv[0, self.N - 1])

    def _root_best(self, j: int) -> int:
        """Best start-selection sum at root weight ``j`` (integer units)."""
        if j >= self.root_rank:
            if self.lead_one:
                return max(sum(self.ints[1:]), int(self.Nv[0, self.N - 1]))
            return sum(self.ints)
        return int(self.SR_final[j][self.N - 1])

    def weighted_norm(self, j: int) -> Fraction:
        if j < 1:
            raise ValueError("weights are indexed from 1")
        if self.ladder == "S" and self.levels < j < self.root_rank:
            raise ValueError(f"weight {j} was not requested when the solver was built")
        return self.theta.at(j) * self.to_fraction(self._root_best(j))

    # -- backtracking --------------------------------------------------------

    def _R_value(self, m: int, s: int, e: int) -> int:
        if m == 0:
            return int(self.Nv[s, e])
        if self.ladder == "S":
            return int(self.R[m][s, e])
        D, _ = self._layers(s, record_plus=True)
        return int(D[1][min(m, self._budget(s)), e])

    def _pieces(self, m: int, s: int, e: int, k: int, allow_single: bool) -> list[tuple[int, int]]:
        """Pieces of an optimal level-``m`` tiling of ``[s..e]`` with at most ``k`` groups."""
        D, P = self._layers(s, record_plus=True)
        lvl = m if self.ladder == "S" else 1
        k = min(k, self._budget(s))
        if allow_single and int(D[lvl][k, e]) == int(self.Nv[s, e]):
            return [(s, e)]
        target = int(P[lvl][k, e])
        while k >= 2:
            for t in range(s + 1, e + 1):
                if self.ladder == "S":
                    tail = int(self.Nv[t, e]) if m == 1 else int(self.R[m - 1][t, e])
                else:
                    tail = int(self.Nv[t, e])
                if int(D[lvl][k - 1, t - 1]) + tail == target:
                    head = self._pieces(m, s, t - 1, k - 1, True)
                    if self.ladder == "S" and m > 1:
                        rest = self._pieces(m - 1, t, e, self._budget(t), True)
                    else:
                        rest = [(t, e)]
                    return head + rest
            k -= 1
        if self.ladder == "S" and m > 1 and int(P[lvl][1, e]) == target:
            return self._pieces(m - 1, s, e, self._budget(s), False)
        raise AssertionError("backtracking failed to locate an optimal split")

    def _argmax_position(self, s: int, e: int) -> int:
        return max(range(s, e + 1), key=lambda i: (self.ints[i], -i))

    def interval_tree(self, s: int, e: int, signs: Sequence[int]):
        """An optimal norming tree for the restriction to positions ``s..e``."""
        from .trees import Leaf, Node

        value = int(self.Nv[s, e])
        mx = max(self.ints[s : e + 1])
        if value == mx:
            i = self._argmax_position(s, e)
            return Leaf(signs[i], self.p[i])
        if s == 0 and self.lead_one:
            return self.interval_tree(1, e, signs)
        ns = self._nstar(s, e)
        num, den = self._weighted(ns, sum(self.ints[s : e + 1]))
        if num == value * den:
            return Node(ns, tuple(Leaf(signs[i], self.p[i]) for i in range(s, e + 1)))
        for n in range(1, ns):
            start, single = self._best_start(n, s, e)
            num, den = self._weighted(n, self._R_or_plus(n, start, e, single))
            if num == value * den:
                pieces = self._pieces(n, start, e, self._group_budget(n, start), single)
                return Node(n, tuple(self.interval_tree(a, b, signs) for a, b in pieces))
        raise AssertionError("no candidate reproduces the interval norm")

    def _group_budget(self, n: int, s: int) -> int:
        return min(self._budget(s), n) if self.ladder == "A" else self._budget(s)

    def _R_or_plus(self, n: int, s: int, e: int, single: bool) -> int:
        D, P = self._layers(s, record_plus=True)
        lvl = n if self.ladder == "S" else 1
        k = self._group_budget(n, s)
        return int(D[lvl][k, e]) if single else int(P[lvl][k, e])

    def _best_start(self, n: int, s: int, e: int) -> tuple[int, bool]:
        """Start position and single-piece flag attaining ``A_n(s, e)``."""
        best = (self._R_or_plus(n, s, e, False), s, False)
        for t in range(s + 1, e + 1):
            v = self._R_or_plus(n, t, e, True)
            if v > best[0]:
                best = (v, t, True)
        return best[1], best[2]

    def weighted_tree(self, j: int, signs: Sequence[int]):
        """A norming tree of root weight index ``j`` attaining ``weighted_norm(j)``."""
        from .trees import Leaf, Node

        e = self.N - 1
        if j >= self.root_rank:
            first = 0
            if self.lead_one:
                if int(self.Nv[0, e]) >= sum(self.ints[1:]):
                    return Node(j, (self.interval_tree(0, e, signs),))
                first = 1
            return Node(j, tuple(Leaf(signs[i], self.p[i]) for i in range(first, self.N)))
        best = None
        for s in range(self.N):
            v = self._R_or_plus(j, s, e, True)
            if best is None or v > best[0]:
                best = (v, s)
        s = best[1]
        pieces = self._pieces(j, s, e, self._group_budget(j, s), True)
        return Node(j, tuple(self.interval_tree(a, b, signs) for a, b in pieces))
