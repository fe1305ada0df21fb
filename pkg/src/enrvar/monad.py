"""Finite truncations of arity-indexed relative monads: law checking, the
induced equational theory, algebras, free algebras, and the round trip from
theories back to truncations.

A truncation tabulates, for each arity J in a finite set, the value object TJ,
the unit tuple into it, and the Kleisli extension table of every map J -> TK;
nothing is derived, so hand-entered data can be audited directly.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .budget import Budget, ensure_budget
from .algebra import (
    Algebra,
    EnrichedSignature,
    EnrichedTheory,
    OpDecl,
    Theory,
    classical_symbol,
    classical_symbols,
    context_power,
    enumerate_algebras,
    eval_term,
    hom_family,
    theory_parts,
)
from .isoenum import model_families
from .relcore import (
    FinStructure,
    HornTheory,
    StructureError,
    as_image_tuple,
    chase,
    enumerate_morphisms,
    induced_substructure,
    is_pi_morphism,
    relabel,
    render_id,
)
from .syntax import (
    App,
    Arity,
    Equation,
    SortSet,
    Term,
    Var,
    canonical_context,
    term_vars,
)
from .translate import CarrierRow, EquivalenceReport, _describe_family

KRep = tuple  # per-sort tuples of target elements, in sort-set order


@dataclass
class RelMonadData:
    base: HornTheory
    sorts: SortSet
    arities: tuple[Arity, ...]
    obj: dict[Arity, dict[str, FinStructure]]
    unit: dict[Arity, KRep]
    ext: dict[tuple[Arity, Arity, KRep], dict[str, dict]]
    name: str | None = None

    def count(self, J: Arity, s: str) -> int:
        return dict(J.counts).get(s, 0)


def arity_object(base: HornTheory, sorts: SortSet, J: Arity) -> dict[str, FinStructure]:
    """The arity as a sort-indexed object: per sort, the free base model on
    that many bare elements (integer ids 1..n)."""
    counts = dict(J.counts)
    out = {}
    for s in sorts.sorts:
        n = counts.get(s, 0)
        bare = FinStructure(base.signature, tuple(range(1, n + 1)), frozenset())
        out[s] = chase(bare, base).model
    return out


def all_maps_into(J: Arity, target: Mapping[str, FinStructure], sorts: SortSet) -> list[KRep]:
    """All tuples J -> target, i.e. one target element per input position,
    grouped per sort in sort-set order."""
    counts = dict(J.counts)
    per_sort = [
        list(itertools.product(target[s].carrier, repeat=counts.get(s, 0)))
        for s in sorts.sorts
    ]
    return [tuple(combo) for combo in itertools.product(*per_sort)]


def flatten_map(k: KRep) -> tuple:
    return tuple(x for block in k for x in block)


def compose_ext_with_map(M: RelMonadData, ext_table: Mapping[str, Mapping], k: KRep) -> KRep:
    """Postcompose the tuple k with a Kleisli extension table, sortwise."""
    return tuple(
        tuple(ext_table[s][x] for x in block)
        for s, block in zip(M.sorts.sorts, k)
    )


@dataclass
class MonadReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_relative_monad(M: RelMonadData) -> MonadReport:
    """Pointwise law check: unit extension is the identity, extensions restrict
    to their tuples along the unit, extension is associative, and the map
    k -> k* is admissible between the hom families."""
    v: list[str] = []
    sorts = M.sorts.sorts
    for J in M.arities:
        for s in sorts:
            X = M.obj[J][s]
            if X.signature != M.base.signature:
                v.append(f"T{J.label()} at {s}: wrong signature")
            from .relcore import is_model

            if not is_model(X, M.base):
                v.append(f"T{J.label()} at {s}: not a base model")
        eta = M.unit.get(J)
        if eta is None:
            v.append(f"missing unit for {J.label()}")
            continue
        for s, block in zip(sorts, eta):
            if len(block) != M.count(J, s):
                v.append(f"unit for {J.label()} has wrong shape at {s}")
            elif any(x not in M.obj[J][s].index for x in block):
                v.append(f"unit for {J.label()} leaves T{J.label()} at {s}")
    for J, K in itertools.product(M.arities, repeat=2):
        for k in all_maps_into(J, M.obj[K], M.sorts):
            table = M.ext.get((J, K, k))
            if table is None:
                v.append(f"missing extension for a map {J.label()} -> T{K.label()}")
                continue
            for s in sorts:
                tj, tk = M.obj[J][s], M.obj[K][s]
                ts = table.get(s, {})
                if set(ts) != set(tj.carrier):
                    v.append(f"extension table not total at {s} for {J.label()}->{K.label()}")
                elif not is_pi_morphism(ts, tj, tk):
                    v.append(
                        f"extension of a map {J.label()}->{K.label()} is not a morphism at {s}"
                    )
    if v:
        return MonadReport(v)
    # unit laws
    for J in M.arities:
        eta = M.unit[J]
        table = M.ext[(J, J, eta)]
        for s in sorts:
            for x in M.obj[J][s].carrier:
                if table[s][x] != x:
                    v.append(f"unit extension is not the identity on T{J.label()} at {s}")
        for K in M.arities:
            etaK = M.unit[K]
            for k in all_maps_into(K, M.obj[J], M.sorts):
                table = M.ext[(K, J, k)]
                for s, block in zip(sorts, k):
                    for pos, x in enumerate(block):
                        if table[s][etaK[sorts.index(s)][pos]] != x:
                            v.append(
                                f"extension of a map {K.label()}->T{J.label()} "
                                f"does not restrict to it along the unit (witness {render_id(x)})"
                            )
    # associativity
    for J, K, L in itertools.product(M.arities, repeat=3):
        for k in all_maps_into(J, M.obj[K], M.sorts):
            kstar = M.ext[(J, K, k)]
            for l in all_maps_into(K, M.obj[L], M.sorts):
                lstar = M.ext[(K, L, l)]
                lk = compose_ext_with_map(M, lstar, k)
                lhs = M.ext[(J, L, lk)]
                for s in sorts:
                    for x in M.obj[J][s].carrier:
                        if lhs[s][x] != lstar[s][kstar[s][x]]:
                            v.append(
                                f"associativity fails for ({J.label()},{K.label()},{L.label()}) "
                                f"at {s}, element {render_id(x)}"
                            )
    # admissibility of ext
    for J, K in itertools.product(M.arities, repeat=2):
        jobj = arity_object(M.base, M.sorts, J)
        ks = all_maps_into(J, M.obj[K], M.sorts)
        if not ks:
            continue
        dom = hom_family(jobj, M.obj[K], M.base, M.sorts)
        cod = hom_family(M.obj[J], M.obj[K], M.base, M.sorts)
        star = {
            k: tuple(
                as_image_tuple(M.ext[(J, K, k)][s], M.obj[J][s]) for s in sorts
            )
            for k in ks
        }
        codset = set(cod.carrier)
        for k in ks:
            if star[k] not in codset:
                v.append(f"extension image leaves the hom family for {J.label()}->{K.label()}")
        for rel, ar in M.base.signature.symbols:
            for tup in dom.edges_by_rel[rel]:
                image = (rel, tuple(star[k] for k in tup))
                if image not in cod.edges:
                    v.append(
                        f"k -> k* breaks a {rel} edge between maps {J.label()}->T{K.label()}"
                    )
    return MonadReport(v)


def _op_name(J: Arity, s: str) -> str:
    return f"op{J.label()}_{s}"


def theory_from_monad(M: RelMonadData) -> EnrichedTheory:
    """The induced equational theory: one operation per (arity, sort) with the
    value object as parameter; unit equations return variables, extension
    equations fold Kleisli composition into nested applications."""
    report = check_relative_monad(M)
    if not report.ok:
        raise StructureError("monad laws fail: " + "; ".join(report.violations[:3]))
    sorts = M.sorts
    ops = tuple(
        OpDecl(_op_name(J, s), J, s, M.obj[J][s])
        for J in M.arities
        for s in sorts.sorts
    )
    sig = EnrichedSignature(sorts, M.base, ops)
    bysym = {op.name: op for op in ops}
    equations: list[Equation] = []
    # unit equations
    for J in M.arities:
        ctx = canonical_context(J)
        argvars = tuple(Var(i) for i in range(len(ctx)))
        eta = M.unit[J]
        offset = 0
        for s, n in J.counts:
            sidx = sorts.position[s]
            for j in range(n):
                p = eta[sidx][j]
                op = bysym[_op_name(J, s)]
                equations.append(
                    Equation(
                        ctx,
                        App(classical_symbol(op, p), argvars),
                        Var(offset + j),
                        s,
                    )
                )
            offset += n
    # extension equations
    for J, K in itertools.product(M.arities, repeat=2):
        ctxK = canonical_context(K)
        argvarsK = tuple(Var(i) for i in range(len(ctxK)))
        for k in all_maps_into(J, M.obj[K], M.sorts):
            kstar = M.ext[(J, K, k)]
            inner = []
            for s, n in J.counts:
                sidx = sorts.position[s]
                opK = bysym[_op_name(K, s)]
                for j in range(n):
                    inner.append(App(classical_symbol(opK, k[sidx][j]), argvarsK))
            inner = tuple(inner)
            for s in sorts.sorts:
                opJ = bysym[_op_name(J, s)]
                opK = bysym[_op_name(K, s)]
                for p in M.obj[J][s].carrier:
                    equations.append(
                        Equation(
                            ctxK,
                            App(classical_symbol(opK, kstar[s][p]), argvarsK),
                            App(classical_symbol(opJ, p), inner),
                            s,
                        )
                    )
    # deterministic dedup
    seen: dict[Equation, None] = {}
    for eq in equations:
        seen.setdefault(eq, None)
    return EnrichedTheory(sig, tuple(seen), name=(M.name or "monad") + "_theory")


@dataclass
class TjAlgebra:
    """Carrier plus, per arity J, a structure map sending each tuple
    x : J -> A to a sortwise morphism TJ -> A (stored as image tuples)."""

    carrier: dict[str, FinStructure]
    structure: dict[Arity, dict[KRep, tuple]]

    def component(self, M: RelMonadData, J: Arity, s: str, p, x: KRep):
        sidx = M.sorts.position[s]
        return self.structure[J][x][sidx][M.obj[J][s].index[p]]


def is_tj_algebra(A: TjAlgebra, M: RelMonadData) -> bool:
    sorts = M.sorts.sorts
    for J in M.arities:
        xs = all_maps_into(J, A.carrier, M.sorts)
        sig = A.structure.get(J)
        if sig is None or set(sig) != set(xs):
            return False
        # unit law
        eta = M.unit[J]
        for x in xs:
            for s, n in J.counts:
                sidx = M.sorts.position[s]
                for j in range(n):
                    if A.component(M, J, s, eta[sidx][j], x) != x[sidx][j]:
                        return False
        # admissibility of the structure map
        jobj = arity_object(M.base, M.sorts, J)
        dom = hom_family(jobj, A.carrier, M.base, M.sorts)
        cod = hom_family(M.obj[J], A.carrier, M.base, M.sorts)
        codset = set(cod.carrier)
        for x in xs:
            if A.structure[J][x] not in codset:
                return False
        for rel in M.base.signature.names:
            for tup in dom.edges_by_rel[rel]:
                if (rel, tuple(A.structure[J][x] for x in tup)) not in cod.edges:
                    return False
    # extension law
    for J, K in itertools.product(M.arities, repeat=2):
        for k in all_maps_into(J, M.obj[K], M.sorts):
            kstar = M.ext[(J, K, k)]
            for x in all_maps_into(K, A.carrier, M.sorts):
                xprime = tuple(
                    tuple(
                        A.component(M, K, s, k[M.sorts.position[s]][j], x)
                        for j in range(M.count(J, s))
                    )
                    for s in sorts
                )
                for s in sorts:
                    for p in M.obj[J][s].carrier:
                        lhs = A.component(M, K, s, kstar[s][p], x)
                        rhs = A.component(M, J, s, p, xprime)
                        if lhs != rhs:
                            return False
    return True


def enumerate_tj_algebras(
    M: RelMonadData,
    carrier: Mapping[str, FinStructure],
    budget: Budget | int | None = None,
) -> list[TjAlgebra]:
    """All algebras for the truncation on the fixed carrier, by slotwise
    backtracking with the unit law folded into candidate generation and the
    other laws checked as soon as their slots are assigned."""
    bgt = ensure_budget(budget)
    sorts = M.sorts.sorts
    carrier = dict(carrier)

    slots: list[tuple[Arity, KRep]] = []
    for J in M.arities:
        for x in all_maps_into(J, carrier, M.sorts):
            slots.append((J, x))
    slot_pos = {slot: i for i, slot in enumerate(slots)}

    # per-arity raw candidates (sortwise morphism families TJ -> A)
    raw: dict[Arity, list[tuple]] = {}
    eta_positions: dict[Arity, list[tuple[int, int, int]]] = {}
    for J in M.arities:
        per_sort = [
            [as_image_tuple(m, M.obj[J][s]) for m in enumerate_morphisms(M.obj[J][s], carrier[s])]
            for s in sorts
        ]
        raw[J] = [tuple(c) for c in itertools.product(*per_sort)]
        positions = []
        eta = M.unit[J]
        for s, n in J.counts:
            sidx = M.sorts.position[s]
            for j in range(n):
                positions.append((sidx, M.obj[J][s].index[eta[sidx][j]], j))
        eta_positions[J] = positions

    # admissibility edges, triggered at their last slot
    adm_at: list[list[tuple[Arity, str, tuple]]] = [[] for _ in slots]
    hom_cod: dict[Arity, FinStructure] = {}
    for J in M.arities:
        jobj = arity_object(M.base, M.sorts, J)
        xs = all_maps_into(J, carrier, M.sorts)
        if not xs:
            continue
        dom = hom_family(jobj, carrier, M.base, M.sorts)
        hom_cod[J] = hom_family(M.obj[J], carrier, M.base, M.sorts)
        for rel in M.base.signature.names:
            for tup in dom.edges_by_rel[rel]:
                adm_at[max(slot_pos[(J, x)] for x in tup)].append((J, rel, tup))

    # extension-law instances
    instances = []
    for J, K in itertools.product(M.arities, repeat=2):
        for k in all_maps_into(J, M.obj[K], M.sorts):
            kstar = M.ext[(J, K, k)]
            for x in all_maps_into(K, carrier, M.sorts):
                instances.append((J, K, k, kstar, x))

    assigned: dict[tuple[Arity, KRep], tuple] = {}
    out: list[TjAlgebra] = []

    def value(J: Arity, x: KRep, s_idx: int, p) -> object:
        return assigned[(J, x)][s_idx][M.obj[J][sorts[s_idx]].index[p]]

    def instance_ok(J, K, k, kstar, x) -> bool | None:
        """True/False when decidable with the current assignment, else None."""
        if (K, x) not in assigned:
            return None
        xprime = tuple(
            tuple(
                value(K, x, M.sorts.position[s], k[M.sorts.position[s]][j])
                for j in range(M.count(J, s))
            )
            for s in sorts
        )
        if (J, xprime) not in assigned:
            return None
        for s_idx, s in enumerate(sorts):
            for p in M.obj[J][s].carrier:
                if value(K, x, s_idx, kstar[s][p]) != value(J, xprime, s_idx, p):
                    return False
        return True

    def rec(i: int):
        if i == len(slots):
            structure: dict[Arity, dict[KRep, tuple]] = {J: {} for J in M.arities}
            for (J, x), val in assigned.items():
                structure[J][x] = val
            out.append(TjAlgebra(carrier, structure))
            return
        J, x = slots[i]
        for cand in raw[J]:
            bgt.charge()
            if any(
                cand[sidx][pos] != x[sidx][j] for sidx, pos, j in eta_positions[J]
            ):
                continue
            assigned[(J, x)] = cand
            ok = True
            for aj, rel, tup in adm_at[i]:
                fam = tuple(assigned[(aj, xx)] for xx in tup)
                if (rel, fam) not in hom_cod[aj].edges:
                    ok = False
                    break
            if ok:
                for inst in instances:
                    res = instance_ok(*inst)
                    if res is False:
                        ok = False
                        break
            if ok:
                rec(i + 1)
            del assigned[(J, x)]

    rec(0)
    return out


def verify_presentation(
    M: RelMonadData,
    carrier_bound: int,
    budget: Budget | int | None = None,
) -> EquivalenceReport:
    """Desk-scale check that the truncation's algebras coincide with the
    algebras of its induced theory on every carrier family up to the bound,
    including hom structures."""
    bgt = ensure_budget(budget)
    T = theory_from_monad(M)
    sig = T.signature
    report = EquivalenceReport(label="structure-map unfolding")
    for fam in model_families(M.base, M.sorts, carrier_bound, budget=bgt):
        tj = enumerate_tj_algebras(M, fam, bgt)
        th = enumerate_algebras(T, fam, bgt)
        th_keys = {A.key(): i for i, A in enumerate(th)}
        ok = len(tj) == len(th)
        detail = "" if ok else "algebra counts differ"
        bijection: list[tuple[int, int]] = []
        mapped: list[Algebra] = []
        if ok:
            seen = set()
            for i, A in enumerate(tj):
                image = tj_to_algebra(M, T, A)
                j = th_keys.get(image.key())
                if j is None or j in seen:
                    ok = False
                    detail = f"no fresh partner for truncation algebra {i}"
                    break
                seen.add(j)
                bijection.append((i, j))
                mapped.append(image)
        pairs_checked = 0
        if ok:
            for i, j in itertools.product(range(len(tj)), repeat=2):
                bgt.charge()
                h_theory = _algebra_hom_structure(mapped[i], mapped[j])
                h_tj = _tj_hom_structure(M, tj[i], tj[j])
                if h_theory.carrier != h_tj.carrier or h_theory.edges != h_tj.edges:
                    ok = False
                    detail = f"hom structures differ at pair ({i},{j})"
                    break
                pairs_checked += 1
        report.rows.append(
            CarrierRow(
                _describe_family(fam), len(tj), len(th), bijection, pairs_checked, ok, detail
            )
        )
    return report


def tj_to_algebra(M: RelMonadData, T: EnrichedTheory, A: TjAlgebra) -> Algebra:
    """Unfold structure maps into operation tables."""
    sig = T.signature
    interp: dict[str, dict] = {}
    for J in M.arities:
        ctx = canonical_context(J)
        dom = context_power(A.carrier, ctx)
        for s in M.sorts.sorts:
            op = sig.by_name[_op_name(J, s)]
            for p in M.obj[J][s].carrier:
                table = {}
                for point in dom.carrier:
                    x = _regroup(M, J, point)
                    table[point] = A.component(M, J, s, p, x)
                interp[classical_symbol(op, p)] = table
    return Algebra(sig, A.carrier, interp)


def _regroup(M: RelMonadData, J: Arity, flat: tuple) -> KRep:
    counts = dict(J.counts)
    out = []
    i = 0
    for s in M.sorts.sorts:
        n = counts.get(s, 0)
        out.append(tuple(flat[i : i + n]))
        i += n
    return tuple(out)


def _algebra_hom_structure(A: Algebra, B: Algebra) -> FinStructure:
    from .algebra import hom_object

    return hom_object(A, B)


def _tj_hom_structure(M: RelMonadData, A: TjAlgebra, B: TjAlgebra) -> FinStructure:
    fam = hom_family(A.carrier, B.carrier, M.base, M.sorts)
    keep = []
    for elem in fam.carrier:
        maps = {
            s: dict(zip(A.carrier[s].carrier, elem[i]))
            for i, s in enumerate(M.sorts.sorts)
        }
        if _is_tj_morphism(M, maps, A, B):
            keep.append(elem)
    return induced_substructure(fam, keep)


def _is_tj_morphism(M: RelMonadData, f: Mapping[str, Mapping], A: TjAlgebra, B: TjAlgebra) -> bool:
    for s in M.sorts.sorts:
        if not is_pi_morphism(f[s], A.carrier[s], B.carrier[s]):
            return False
    for J in M.arities:
        for x in all_maps_into(J, A.carrier, M.sorts):
            fx = tuple(
                tuple(f[s][v] for v in block)
                for s, block in zip(M.sorts.sorts, x)
            )
            for s_idx, s in enumerate(M.sorts.sorts):
                for p in M.obj[J][s].carrier:
                    if f[s][A.component(M, J, s, p, x)] != B.component(M, J, s, p, fx):
                        return False
    return True


# -- free algebras and the theory-to-truncation direction ------------------------

@dataclass
class FreeAlgebraResult:
    algebra: Algebra
    generators: KRep
    saturated: bool
    class_count: int


class _TermModel:
    """Growing partial quotient of the term algebra: classes carry a
    representative term (earliest created, hence of minimal depth) and a
    partial operation table over class ids."""

    def __init__(self):
        self.reps: list[Term] = []
        self.sort: list[str] = []
        self.depth: list[int] = []
        self.parent: list[int] = []
        self.table: dict[tuple, int] = {}  # (symbol, arg class ids) -> class id

    def create(self, rep: Term, sort: str, depth: int) -> int:
        i = len(self.reps)
        self.reps.append(rep)
        self.sort.append(sort)
        self.depth.append(depth)
        self.parent.append(i)
        return i

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        if ri > rj:
            ri, rj = rj, ri
        self.parent[rj] = ri
        return True

    def classes(self) -> list[int]:
        return [i for i in range(len(self.reps)) if self.find(i) == i]

    def canonicalize(self) -> bool:
        """Remap the table through find; colliding entries merge their values
        (congruence); iterate to a fixpoint.  Returns whether anything merged."""
        merged_any = False
        changed = True
        while changed:
            changed = False
            fresh: dict[tuple, int] = {}
            for (sym, args), val in self.table.items():
                key = (sym, tuple(self.find(a) for a in args))
                v = self.find(val)
                seen = fresh.get(key)
                if seen is None:
                    fresh[key] = v
                elif seen != v:
                    self.union(seen, v)
                    changed = True
                    merged_any = True
            self.table = {
                (sym, tuple(self.find(a) for a in args)): self.find(v)
                for (sym, args), v in fresh.items()
            }
        return merged_any

    def eval(self, t: Term, env: Mapping[int, int]) -> int | None:
        if isinstance(t, Var):
            return self.find(env[t.index])
        args = []
        for a in t.args:
            v = self.eval(a, env)
            if v is None:
                return None
            args.append(v)
        got = self.table.get((t.op, tuple(args)))
        return None if got is None else self.find(got)


def free_algebra(
    T: Theory,
    J: Arity,
    depth_bound: int = 3,
    size_bound: int = 4000,
) -> FreeAlgebraResult:
    """Bounded term model on the canonical context of J: classes are grown by
    applying operations to representatives up to the depth bound and quotiented
    by equation instances over classes (ground congruence closure), interleaved
    with the base chase over edges induced by the relations.

    Saturated means every operation applied to class representatives lands back
    in a known class; when it does not, the returned tables are partial.
    """
    sig, equations, relations, chains = theory_parts(T)
    if chains:
        raise StructureError("free_algebra does not support chain relations")
    base = sig.base
    ctx = canonical_context(J)
    tm = _TermModel()
    gen_class: list[int] = []
    for i, (_, s) in enumerate(ctx.entries):
        gen_class.append(tm.create(Var(i), s, 0))

    symbols = classical_symbols(sig)
    flat_inputs = {
        name: canonical_context(op.inputs).entries for name, op, _ in symbols
    }
    outputs = {name: op.output for name, op, _ in symbols}

    def class_pool(sort: str) -> list[int]:
        return [c for c in tm.classes() if tm.sort[c] == sort]

    def grow() -> bool:
        added = False
        for name, op, _ in symbols:
            pools = [class_pool(s) for _, s in flat_inputs[name]]
            for args in itertools.product(*pools):
                key = (name, tuple(args))
                if key in tm.table:
                    continue
                depth = 1 + max((tm.depth[a] for a in args), default=0)
                if depth > depth_bound:
                    continue
                if len(tm.reps) >= size_bound:
                    raise StructureError(
                        f"free algebra exceeded the size bound {size_bound}"
                    )
                rep = App(name, tuple(tm.reps[a] for a in args))
                tm.table[key] = tm.create(rep, outputs[name], depth)
                added = True
        return added

    def equation_pass() -> bool:
        merged = False
        for eq in equations:
            used = sorted(term_vars(eq.lhs) | term_vars(eq.rhs))
            pools = [class_pool(eq.context.entries[i][1]) for i in used]
            for combo in itertools.product(*pools):
                env = dict(zip(used, combo))
                l = tm.eval(eq.lhs, env)
                r = tm.eval(eq.rhs, env)
                if l is not None and r is not None and l != r:
                    tm.union(l, r)
                    merged = True
        if merged:
            tm.canonicalize()
        return merged

    edges_final: dict[str, frozenset] = {s: frozenset() for s in sig.sorts.sorts}

    def relation_pass() -> bool:
        merged = False
        for s in sig.sorts.sorts:
            reps = [tm.reps[c] for c in class_pool(s)]
            rep_class = {tm.reps[c]: c for c in class_pool(s)}
            edges = set()
            for atom in relations:
                if atom.sort != s:
                    continue
                used = sorted(set().union(set(), *(term_vars(a) for a in atom.args)))
                pools = [class_pool(atom.context.entries[i][1]) for i in used]
                for combo in itertools.product(*pools):
                    env = dict(zip(used, combo))
                    vals = [tm.eval(a, env) for a in atom.args]
                    if any(v is None for v in vals):
                        continue
                    edges.add((atom.relation, tuple(tm.reps[v] for v in vals)))
            structure = FinStructure(base.signature, tuple(reps), frozenset(edges))
            model, unit = chase(structure, base)
            edges_final[s] = model.edges
            for t, r in unit.items():
                if t != r and tm.union(rep_class[t], rep_class[r]):
                    merged = True
        if merged:
            tm.canonicalize()
        return merged

    while True:
        changed = grow()
        changed |= equation_pass()
        changed |= relation_pass()
        if not changed:
            break

    carrier = {
        s: FinStructure(
            base.signature,
            tuple(tm.reps[c] for c in class_pool(s)),
            edges_final[s],
        )
        for s in sig.sorts.sorts
    }
    saturated = True
    interp: dict[str, dict] = {}
    for name, op, _ in symbols:
        pools = [class_pool(s) for _, s in flat_inputs[name]]
        table: dict[tuple, Term] = {}
        for args in itertools.product(*pools):
            got = tm.table.get((name, tuple(args)))
            if got is None:
                saturated = False
            else:
                table[tuple(tm.reps[a] for a in args)] = tm.reps[tm.find(got)]
        interp[name] = table
    generators = tuple(
        tuple(
            tm.reps[tm.find(gen_class[i])]
            for i, (_, es) in enumerate(ctx.entries)
            if es == s
        )
        for s in sig.sorts.sorts
    )
    algebra = Algebra(sig, carrier, interp)
    return FreeAlgebraResult(algebra, generators, saturated, len(tm.classes()))


def monad_from_theory(
    T: Theory,
    arities: Iterable[Arity],
    depth_bound: int = 3,
    size_bound: int = 4000,
    name: str | None = None,
) -> RelMonadData:
    """Finite truncation induced by free algebras: value objects are free
    carriers, units the generators, extensions the evaluation of class
    representatives."""
    sig = theory_parts(T)[0]
    arities = tuple(arities)
    frees: dict[Arity, FreeAlgebraResult] = {}
    for J in arities:
        res = free_algebra(T, J, depth_bound, size_bound)
        if not res.saturated:
            raise StructureError(
                f"free algebra for arity {J.label()} does not saturate at depth {depth_bound}"
            )
        frees[J] = res
    obj = {J: frees[J].algebra.carrier for J in arities}
    unit = {J: frees[J].generators for J in arities}
    ext: dict[tuple[Arity, Arity, KRep], dict[str, dict]] = {}
    for J, K in itertools.product(arities, repeat=2):
        ctxJ = canonical_context(J)
        for k in all_maps_into(J, obj[K], sig.sorts):
            flat = flatten_map(k)
            table = {
                s: {
                    t: eval_term(frees[K].algebra, ctxJ, t, flat)
                    for t in obj[J][s].carrier
                }
                for s in sig.sorts.sorts
            }
            ext[(J, K, k)] = table
    # printable string ids for the value objects
    rename = {
        J: {s: {t: str(t) for t in obj[J][s].carrier} for s in sig.sorts.sorts}
        for J in arities
    }
    sorts = sig.sorts.sorts
    obj2 = {
        J: {s: relabel(obj[J][s], rename[J][s]) for s in sorts} for J in arities
    }
    unit2 = {
        J: tuple(
            tuple(rename[J][s][x] for x in block)
            for s, block in zip(sorts, unit[J])
        )
        for J in arities
    }
    ext2: dict[tuple[Arity, Arity, KRep], dict[str, dict]] = {}
    for (J, K, k), table in ext.items():
        k2 = tuple(
            tuple(rename[K][s][x] for x in block) for s, block in zip(sorts, k)
        )
        ext2[(J, K, k2)] = {
            s: {rename[J][s][x]: rename[K][s][v] for x, v in table[s].items()}
            for s in sorts
        }
    return RelMonadData(
        sig.base, sig.sorts, arities, obj2, unit2, ext2, name=name or "derived"
    )


# -- builtin truncations -----------------------------------------------------------

def identity_truncation(base: HornTheory, sorts: SortSet, arities: Iterable[Arity]) -> RelMonadData:
    """TJ = J, units are identities, extension is application."""
    arities = tuple(arities)
    obj = {J: arity_object(base, sorts, J) for J in arities}
    unit = {
        J: tuple(tuple(obj[J][s].carrier) for s in sorts.sorts) for J in arities
    }
    ext: dict[tuple[Arity, Arity, KRep], dict[str, dict]] = {}
    for J, K in itertools.product(arities, repeat=2):
        for k in all_maps_into(J, obj[K], sorts):
            ext[(J, K, k)] = {
                s: dict(zip(obj[J][s].carrier, k[sorts.position[s]]))
                for s in sorts.sorts
            }
    return RelMonadData(base, sorts, arities, obj, unit, ext, name="identity")


def exception_truncation(
    base: HornTheory, sorts: SortSet, arities: Iterable[Arity], error: str = "e"
) -> RelMonadData:
    """TJ = J plus one error point per sort; extension keeps the error."""
    arities = tuple(arities)
    obj: dict[Arity, dict[str, FinStructure]] = {}
    for J in arities:
        jo = arity_object(base, sorts, J)
        out = {}
        for s in sorts.sorts:
            bare = FinStructure(
                base.signature, jo[s].carrier + (error,), frozenset()
            )
            out[s] = chase(bare, base).model
        obj[J] = out
    unit = {
        J: tuple(tuple(obj[J][s].carrier[:-1]) for s in sorts.sorts)
        for J in arities
    }
    ext = {}
    for J, K in itertools.product(arities, repeat=2):
        for k in all_maps_into(J, obj[K], sorts):
            table = {}
            for s in sorts.sorts:
                block = dict(zip(obj[J][s].carrier[:-1], k[sorts.position[s]]))
                block[error] = error
                table[s] = block
            ext[(J, K, k)] = table
    return RelMonadData(base, sorts, arities, obj, unit, ext, name="exception")
