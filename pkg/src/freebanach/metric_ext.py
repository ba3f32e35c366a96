"""Extending the norm on an even stage to a bi-invariant metric on the next
word stage.

The auxiliary function delta gives per-pair initial upper bounds: rank-0
pairs minimize sums of previous-stage norms of differences over aligned
factorizations into previous-stage elements; positive-rank pairs dispatch
on membership of the elements and their inverses; mixed-rank pairs recurse
convexly on the canonical decomposition.  The metric itself is the greatest
function below delta closed under simultaneous inversion, product
splitting, and the two convex inequalities; it is computed by relaxation.

delta is genuinely partial: an element whose word contains a negative
occurrence of a promoted-combination generator is not a product of
previous-stage elements, so its rank-0 minimum runs over an empty set.
The inversion rule restores finiteness at the fixpoint, and the final
table is checked to be finite, symmetric and positive off the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .relax import (
    ConstraintSystem,
    Equality,
    PairComposition,
    RelaxError,
    UpperCombo,
    relax_fixpoint,
)
from .terms import UNIT_ID

Letters = tuple[tuple[int, int], ...]


class MetricExtensionError(RelaxError):
    pass


def _reduce_concat(a: Letters, b: Letters) -> Letters:
    """Reduced product of two already-irreducible words."""
    la, lb = list(a), list(b)
    while la and lb and la[-1][0] == lb[0][0] and la[-1][1] == -lb[0][1]:
        la.pop()
        lb.pop(0)
    return tuple(la) + tuple(lb)


class WordSpace:
    """Ambient irreducible words over a fixed signed-letter alphabet, with a
    dense reduced-product table for the composition engine."""

    def __init__(self, alphabet: list[tuple[int, int]], max_len: int):
        self.alphabet = list(alphabet)
        self.max_len = max_len
        self.words: list[Letters] = [()]
        self.index: dict[Letters, int] = {(): 0}
        frontier: list[Letters] = [()]
        for _ in range(max_len):
            nxt: list[Letters] = []
            for w in frontier:
                for letter in self.alphabet:
                    if w and w[-1][0] == letter[0] and w[-1][1] == -letter[1]:
                        continue
                    grown = w + (letter,)
                    if grown not in self.index:
                        self.index[grown] = len(self.words)
                        self.words.append(grown)
                        nxt.append(grown)
            frontier = nxt

    def __len__(self) -> int:
        return len(self.words)

    def idx(self, w: Letters) -> Optional[int]:
        return self.index.get(w)

    def product_table(self) -> np.ndarray:
        n = len(self.words)
        prod = np.full((n, n), -1, dtype=np.int32)
        for i, u in enumerate(self.words):
            for j, v in enumerate(self.words):
                p = _reduce_concat(u, v)
                if len(p) <= self.max_len:
                    k = self.index.get(p)
                    if k is not None:
                        prod[i, j] = k
        return prod

    def inverse_map(self) -> np.ndarray:
        out = np.empty(len(self.words), dtype=np.int32)
        for i, w in enumerate(self.words):
            inv = tuple((b, -s) for b, s in reversed(w))
            out[i] = self.index[inv]
        return out


@dataclass
class DeltaTable:
    """Symmetric per-pair bounds; absent key means +infinity (no clause)."""

    values: dict[tuple[int, int], Fraction] = field(default_factory=dict)

    @staticmethod
    def key(a: int, b: int) -> tuple[int, int]:
        return (a, b) if a <= b else (b, a)

    def get(self, a: int, b: int) -> Optional[Fraction]:
        if a == b:
            return Fraction(0)
        return self.values.get(self.key(a, b))

    def put_min(self, a: int, b: int, value: Fraction) -> None:
        k = self.key(a, b)
        cur = self.values.get(k)
        if cur is None or value < cur:
            self.values[k] = value


def _vector_diff_id(universe, a: int, b: int) -> Optional[int]:
    """Id of the vector difference a - b, if that element is interned."""
    store = universe.store
    acc: dict[int, object] = {}
    for eid, sign in ((a, 1), (b, -1)):
        for basis_id, coeff in store.coeffs_of(eid):
            c = coeff if sign > 0 else -coeff
            cur = acc.get(basis_id)
            nxt = c if cur is None else cur + c
            if nxt:
                acc[basis_id] = nxt
            elif cur is not None:
                del acc[basis_id]
    return store.lookup(store.combo_from_map(acc))


def _norm_of_diff(universe, prev, a: int, b: int) -> Optional[Fraction]:
    """prev-stage norm of a - b when the difference lies in prev, else None."""
    diff = _vector_diff_id(universe, a, b)
    if diff is None or diff not in prev.member_set:
        return None
    return prev.table[diff]


def delta_rank0_closure(universe, stage, prev, cfg) -> DeltaTable:
    """Min-plus closure realizing the rank-0 factorization minimum.

    Atoms are pairs (a, b) of prev-stage elements with a - b in the previous
    stage, at cost ||a - b||; composing atoms left-to-right enumerates all
    aligned factorizations whose partial products stay in the ambient word
    set (length <= ambient_expansion * word_cap).
    """
    store = universe.store
    # alphabet: signed letters that occur in prev-stage members' words
    alphabet: list[tuple[int, int]] = []
    seen = set()
    for m in prev.members:
        for letter in store.word_of(m):
            if letter not in seen:
                seen.add(letter)
                alphabet.append(letter)
    amb_len = cfg.ambient_expansion * stage.word_cap
    space = WordSpace(alphabet, amb_len)
    if len(space) ** 2 > cfg.pair_cell_budget:
        raise MetricExtensionError(
            f"rank-0 closure space {len(space)}^2 exceeds pair_cell_budget"
        )
    engine = PairComposition(len(space), space.product_table())
    prev_members = list(prev.members)
    atom_cells = set()
    for a in prev_members:
        wa = space.idx(store.word_of(a))
        for b in prev_members:
            wb = space.idx(store.word_of(b))
            if wa is None or wb is None:
                continue
            val = Fraction(0) if a == b else _norm_of_diff(universe, prev, a, b)
            if val is None:
                continue
            engine.seed(wa, wb, val)
            atom_cells.add((wa, wb))
    for cell in sorted(atom_cells):
        engine.add_generator(*cell)
    closure, _ = engine.solve()

    table = DeltaTable()
    word_idx = {m: space.idx(store.word_of(m)) for m in stage.members}
    for i, a in enumerate(stage.members):
        wa = word_idx[a]
        if wa is None:
            continue
        for b in stage.members[i:]:
            wb = word_idx[b]
            if wb is None:
                continue
            val = closure.get((wa, wb))
            if val is None and (wb, wa) in closure:
                val = closure[(wb, wa)]
            if val is not None:
                table.put_min(a, b, val)
    return table


def delta_general(universe, stage, prev, cfg, rank0: DeltaTable) -> DeltaTable:
    """Full delta: rank-0 cells from the closure, the four membership cases
    for positive-rank pairs, and the convex recursion for mixed ranks.
    Dispatch is exclusive by rank: closure cells touching positive-rank
    elements are factor bookkeeping, not delta values."""
    store = universe.store
    table = DeltaTable()
    members = stage.members
    ranks = {m: store.rank(m) for m in members}
    prev_set = prev.member_set
    # z candidates with both z and its inverse in the previous stage
    z_pairs = []
    for z in prev.members:
        zi = store.lookup(store.group_inv(z))
        if zi is not None and zi in prev_set:
            z_pairs.append((z, zi))

    inv_cache: dict[int, Optional[int]] = {}

    def inv_member(a: int) -> Optional[int]:
        if a not in inv_cache:
            inv_cache[a] = store.lookup(store.group_inv(a))
        return inv_cache[a]

    def positive_pair(x: int, y: int) -> Optional[Fraction]:
        xi, yi = inv_member(x), inv_member(y)
        for z, zi in ((x, xi), (y, yi)):
            if z not in prev_set and (zi is None or zi not in prev_set):
                raise MetricExtensionError(
                    f"positive-rank element {z} has neither itself nor its "
                    "inverse in the previous stage; construction invariant broken"
                )
        best: Optional[Fraction] = None

        def consider(v: Optional[Fraction]):
            nonlocal best
            if v is not None and (best is None or v < best):
                best = v

        if x in prev_set and y in prev_set:
            consider(_norm_of_diff(universe, prev, x, y))
        if xi in prev_set and yi in prev_set:
            consider(_norm_of_diff(universe, prev, xi, yi))
        if x in prev_set and yi in prev_set:
            for z, zi in z_pairs:
                left = _norm_of_diff(universe, prev, x, z)
                right = _norm_of_diff(universe, prev, zi, yi)
                if left is not None and right is not None:
                    consider(left + right)
        if xi in prev_set and y in prev_set:
            for z, zi in z_pairs:
                left = _norm_of_diff(universe, prev, xi, zi)
                right = _norm_of_diff(universe, prev, z, y)
                if left is not None and right is not None:
                    consider(left + right)
        return best

    memo: dict[tuple[int, int], Optional[Fraction]] = {}

    def delta(x: int, y: int) -> Optional[Fraction]:
        if x == y:
            return Fraction(0)
        key = DeltaTable.key(x, y)
        if key in memo:
            return memo[key]
        rx, ry = ranks.get(x, store.rank(x)), ranks.get(y, store.rank(y))
        out: Optional[Fraction]
        if rx == 0 and ry == 0:
            out = rank0.get(x, y)
        elif rx > 0 and ry > 0:
            out = positive_pair(x, y)
        else:
            if rx > ry:
                x, y = y, x  # keep the rank-0 element first
            out = None
            dec = store.convex_decomposition(y)
            if dec is not None:
                total = Fraction(0)
                for basis_id, coeff in dec:
                    sub = delta(x, basis_id)
                    if sub is None:
                        total = None
                        break
                    total += coeff.as_fraction() * sub
                out = total
            else:
                dec = store.inverse_convex_decomposition(y)
                if dec is None:
                    raise MetricExtensionError(
                        f"positive-rank element {y} admits no convex form"
                    )
                total = Fraction(0)
                for basis_id, coeff in dec:
                    zi = inv_member(basis_id)
                    sub = delta(x, zi) if zi is not None else None
                    if sub is None:
                        total = None
                        break
                    total += coeff.as_fraction() * sub
                out = total
        memo[key] = out
        return out

    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            v = delta(a, b)
            if v is not None:
                table.put_min(a, b, v)
    return table


def delta_rank0(universe, x: int, y: int, stage, prev, cfg) -> Fraction:
    """Spec operation: the rank-0 factorization minimum for one pair."""
    store = universe.store
    if store.rank(x) != 0 or store.rank(y) != 0:
        raise MetricExtensionError("delta_rank0 requires both ranks zero")
    closure = delta_rank0_closure(universe, stage, prev, cfg)
    v = closure.get(x, y)
    if v is None:
        raise MetricExtensionError(
            f"no factorization of pair ({x}, {y}) within the configured caps"
        )
    return v


# ---------------------------------------------------------------------------
# the metric relaxation
# ---------------------------------------------------------------------------


def _convex_instances(universe, stage):
    """(d)/(e) rule instances: (target pair, ((alpha, source pair), ...))."""
    store = universe.store
    out = []
    for b in stage.members:
        dec = store.convex_decomposition(b)
        if dec is not None:
            for a in stage.members:
                terms = []
                ok = True
                for basis_id, coeff in dec:
                    if basis_id not in stage.member_set:
                        ok = False
                        break
                    terms.append((coeff.as_fraction(), (a, basis_id)))
                if ok:
                    out.append(((a, b), tuple(terms)))
        dec = store.inverse_convex_decomposition(b)
        if dec is not None:
            for a in stage.members:
                terms = []
                ok = True
                for basis_id, coeff in dec:
                    zi = store.lookup(store.group_inv(basis_id))
                    if zi is None or zi not in stage.member_set:
                        ok = False
                        break
                    terms.append((coeff.as_fraction(), (a, zi)))
                if ok:
                    out.append(((a, b), tuple(terms)))
    return out


def _base_case_table(universe, stage) -> dict[tuple[int, int], Fraction]:
    """Stage 1: the defining values rho(x, e) = rho(x^-1, e) = 1 and
    rho(x, x^-1) = 2, confirmed to be relaxation-stable."""
    store = universe.store
    e = UNIT_ID
    x = universe.x_id
    xi = store.lookup(store.group_inv(x))
    pairs = [DeltaTable.key(x, e), DeltaTable.key(xi, e), DeltaTable.key(x, xi)]
    bounds = {
        pairs[0]: Fraction(1),
        pairs[1]: Fraction(1),
        pairs[2]: Fraction(2),
    }
    rules = [
        Equality(pairs[0], pairs[1]),
        UpperCombo(pairs[2], ((Fraction(1), pairs[0]), (Fraction(1), pairs[1]))),
    ]
    sys = ConstraintSystem(indices=tuple(pairs), bounds=bounds, rules=rules)
    result = relax_fixpoint(sys)
    if result.values != bounds:
        raise MetricExtensionError("base-case values are not relaxation-stable")
    return dict(result.values)


def rho_extend(universe, stage, prev, cfg) -> dict[tuple[int, int], Fraction]:
    """The greatest symmetric function below delta satisfying inversion
    equality, product splitting, and convexity; keys are unordered member
    pairs, the diagonal is implicitly zero."""
    store = universe.store
    if stage.index == 1:
        return _base_case_table(universe, stage)

    rank0 = delta_rank0_closure(universe, stage, prev, cfg)
    delta = delta_general(universe, stage, prev, cfg, rank0)

    # rule (a) bounds overlay
    for i, a in enumerate(prev.members):
        for b in prev.members[i + 1 :]:
            v = _norm_of_diff(universe, prev, a, b)
            if v is not None:
                delta.put_min(a, b, v)

    members = stage.members
    alphabet: list[tuple[int, int]] = []
    seen = set()
    for m in members:
        for letter in store.word_of(m):
            if letter not in seen:
                seen.add(letter)
                alphabet.append(letter)
    amb_len = cfg.ambient_expansion * stage.word_cap
    space = WordSpace(alphabet, amb_len)

    if len(space) ** 2 <= cfg.pair_cell_budget:
        table, sweeps = _rho_ambient(universe, stage, delta, space)
    else:
        table, sweeps = _rho_members_only(universe, stage, delta)
    stage.notes["rho_sweeps"] = sweeps
    stage.notes["rho_mode"] = "ambient" if len(space) ** 2 <= cfg.pair_cell_budget else "members"

    for i, a in enumerate(members):
        for b in members[i + 1 :]:
            v = table.get(DeltaTable.key(a, b))
            if v is None:
                raise MetricExtensionError(f"metric not finite on pair ({a}, {b})")
            if v <= 0:
                raise MetricExtensionError(f"zero off-diagonal metric value at ({a}, {b})")
    return table


def _rho_ambient(universe, stage, delta: DeltaTable, space: WordSpace):
    """Full ambient-pair composition closure (small alphabets)."""
    store = universe.store
    engine = PairComposition(len(space), space.product_table(), space.inverse_map())
    word_idx = {m: space.idx(store.word_of(m)) for m in stage.members}

    for (a, b), val in delta.values.items():
        engine.seed(word_idx[a], word_idx[b], val)
        engine.seed(word_idx[b], word_idx[a], val)
    for i in range(len(space)):
        engine.seed(i, i, Fraction(0))
        engine.add_generator(i, i)
    for a in stage.members:
        for b in stage.members:
            if a != b:
                engine.add_generator(word_idx[a], word_idx[b])
    for (a, b), terms in _convex_instances(universe, stage):
        for pair in ((a, b), (b, a)):
            engine.add_convex(
                (word_idx[pair[0]], word_idx[pair[1]]),
                [
                    (c, (word_idx[p], word_idx[q]) if pair == (a, b) else (word_idx[q], word_idx[p]))
                    for c, (p, q) in terms
                ],
            )
    closure, sweeps = engine.solve()

    table: dict[tuple[int, int], Fraction] = {}
    for i, a in enumerate(stage.members):
        for b in stage.members[i + 1 :]:
            vals = [
                v
                for v in (
                    closure.get((word_idx[a], word_idx[b])),
                    closure.get((word_idx[b], word_idx[a])),
                )
                if v is not None
            ]
            if vals:
                table[DeltaTable.key(a, b)] = min(vals)
    return table, sweeps


def _rho_members_only(universe, stage, delta: DeltaTable):
    """Explicit-rule relaxation over member pairs: inversion equalities,
    dense triangle rules, in-stage product splitting, and convexity.
    Used when the ambient pair space exceeds the cell budget; decomposition
    minima over out-of-stage partial products come from delta only."""
    store = universe.store
    members = stage.members
    mset = stage.member_set
    pairs = [
        DeltaTable.key(a, b)
        for i, a in enumerate(members)
        for b in members[i + 1 :]
    ]
    pair_set = set(pairs)

    def key(a, b):
        return DeltaTable.key(a, b)

    bounds: dict[tuple[int, int], Optional[Fraction]] = {p: delta.values.get(p) for p in pairs}
    rules: list = []
    inv_of = {m: store.lookup(store.group_inv(m)) for m in members}
    for a, b in pairs:
        ia, ib = inv_of[a], inv_of[b]
        if ia in mset and ib in mset and key(ia, ib) != (a, b):
            rules.append(Equality((a, b), key(ia, ib)))
    one = Fraction(1)
    for a, b in pairs:
        for m in members:
            if m == a or m == b:
                continue
            rules.append(UpperCombo((a, b), ((one, key(a, m)), (one, key(m, b)))))
    # in-stage product splits
    products = []
    for u in members:
        for v in members:
            p = store.lookup(store.group_mul(u, v))
            if p is not None and p in mset:
                products.append((u, v, p))
    for u, v, p1 in products:
        for s, t, p2 in products:
            if p1 == p2:
                continue
            target = key(p1, p2)
            terms = []
            if u != s:
                terms.append((one, key(u, s)))
            if v != t:
                terms.append((one, key(v, t)))
            if not terms or target in [j for _, j in terms]:
                continue
            rules.append(UpperCombo(target, tuple(terms)))
    for (a, b), terms in _convex_instances(universe, stage):
        if a == b:
            continue
        combo = tuple((c, key(p, q)) for c, (p, q) in terms if p != q)
        rules.append(UpperCombo(key(a, b), combo))

    sys = ConstraintSystem(indices=tuple(pairs), bounds=bounds, rules=rules)
    result = relax_fixpoint(sys)
    return dict(result.values), result.sweeps


# ---------------------------------------------------------------------------
# extension check and decomposition oracle
# ---------------------------------------------------------------------------


def check_extension_metric(universe, stage, prev):
    """Condition: the new metric agrees exactly with the previous norm on
    pairs whose difference lies in the previous stage."""
    from .verify import VerificationReport

    report = VerificationReport(suite=f"extension rho_{stage.index}")
    for i, a in enumerate(prev.members):
        for b in prev.members[i + 1 :]:
            want = _norm_of_diff(universe, prev, a, b)
            if want is None:
                continue
            got = stage.table.get(DeltaTable.key(a, b))
            report.attempted += 1
            if got == want:
                report.passed += 1
            else:
                report.add_counterexample(
                    pair=(a, b), expected=str(want), got=str(got)
                )
    return report


def rho_decomposition_oracle(universe, stage, prev, cfg, delta: Optional[DeltaTable] = None):
    """Independent minimization over aligned member factorizations.

    Dijkstra from the empty pair over aligned prefix products kept within
    the ambient length: appending a member pair (a, b) costs delta(a, b),
    so settled distances are exactly the factorization minima.  Pure
    dict/heap/Fraction code, no shared machinery with the production
    closure.  Returns the table plus the largest factor count used on any
    optimal path."""
    import heapq

    store = universe.store
    if delta is None:
        rank0 = delta_rank0_closure(universe, stage, prev, cfg)
        delta = delta_general(universe, stage, prev, cfg, rank0)
        for i, a in enumerate(prev.members):
            for b in prev.members[i + 1 :]:
                v = _norm_of_diff(universe, prev, a, b)
                if v is not None:
                    delta.put_min(a, b, v)
    amb_len = cfg.ambient_expansion * stage.word_cap
    steps = []
    for a in stage.members:
        wa = store.word_of(a)
        for b in stage.members:
            v = delta.get(a, b)
            if v is not None:
                steps.append((wa, store.word_of(b), v))
    start = ((), ())
    dist: dict[tuple[Letters, Letters], Fraction] = {start: Fraction(0)}
    depth: dict[tuple[Letters, Letters], int] = {start: 0}
    heap: list = [(Fraction(0), 0, start)]
    settled = set()
    while heap:
        d, k, node = heapq.heappop(heap)
        if node in settled:
            continue
        settled.add(node)
        u, v = node
        for wa, wb, cost in steps:
            nu = _reduce_concat(u, wa)
            if len(nu) > amb_len:
                continue
            nv = _reduce_concat(v, wb)
            if len(nv) > amb_len:
                continue
            nd = d + cost
            key = (nu, nv)
            cur = dist.get(key)
            if cur is None or nd < cur:
                dist[key] = nd
                depth[key] = k + 1
                heapq.heappush(heap, (nd, k + 1, key))
    out: dict[tuple[int, int], Fraction] = {}
    max_depth = 0
    for i, a in enumerate(stage.members):
        wa = store.word_of(a)
        for b in stage.members[i + 1 :]:
            wb = store.word_of(b)
            candidates = [
                (dist[k], depth[k]) for k in ((wa, wb), (wb, wa)) if k in dist
            ]
            if candidates:
                val, dep = min(candidates)
                out[DeltaTable.key(a, b)] = val
                max_depth = max(max_depth, dep)
    return out, max_depth
