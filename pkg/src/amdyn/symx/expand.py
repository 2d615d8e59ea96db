"""Expansion to a polynomial normal form, op counting, and CSE.

Expansion distributes products over sums, collecting like terms in a
dictionary keyed by monomials over "atoms" (symbols and the opaque
sin/cos/sqrt/div nodes, whose arguments are expanded internally).  Op counting
uses tree semantics (shared subtrees count once per occurrence), matching how
a CAS counts a fully expanded expression.  CSE, by contrast, works on the
hash-consed DAG: every node statically referenced more than once becomes a
numbered temporary in topological order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import ADD, CONST, COS, DIV, MUL, NEG, POW, SIN, SQRT, SYM, Graph

DEFAULT_TERM_BUDGET = 10_000_000


class ExpansionBudgetError(RuntimeError):
    """Raised when distributing products would exceed the term budget."""


def _poly_mul(pa, pb, budget_state):
    out = {}
    for ma, ca in pa.items():
        for mb, cb in pb.items():
            if mb:
                merged = dict(ma)
                for atom, k in mb:
                    merged[atom] = merged.get(atom, 0) + k
                key = tuple(sorted(merged.items()))
            else:
                key = ma
            c = out.get(key, 0.0) + ca * cb
            if c == 0.0:
                out.pop(key, None)
            else:
                out[key] = c
    budget_state[0] += len(out)
    if budget_state[0] > budget_state[1]:
        raise ExpansionBudgetError(
            f"expansion exceeds the term budget of {budget_state[1]} terms")
    return out


def _poly_add(pa, pb):
    out = dict(pa)
    for m, c in pb.items():
        nc = out.get(m, 0.0) + c
        if nc == 0.0:
            out.pop(m, None)
        else:
            out[m] = nc
    return out


def _rebuild(graph: Graph, poly) -> int:
    """Deterministic sum-of-products graph node from a polynomial."""
    if not poly:
        return graph.constant(0.0)
    terms = []
    for mono in sorted(poly):
        coeff = poly[mono]
        nid = None
        for atom, k in mono:
            f = graph.pow_int(atom, k) if k > 1 else atom
            nid = f if nid is None else graph.mul(nid, f)
        if nid is None:
            term = graph.constant(coeff)
        elif coeff == 1.0:
            term = nid
        elif coeff == -1.0:
            term = graph.neg(nid)
        else:
            term = graph.mul(graph.constant(coeff), nid)
        terms.append(term)
    out = terms[0]
    for t in terms[1:]:
        out = graph.add(out, t)
    return out


def _fold_trig_poly(graph: Graph, poly):
    """Rewrite sin(u)^2 -> 1 - cos(u)^2 until all sin exponents are <= 1.

    Operates on an expanded polynomial; this is the one trig identity applied
    (optionally) before counting, so rotation-matrix orthogonality products
    collapse instead of inflating the count.
    """
    out = {}
    work = list(poly.items())
    while work:
        mono, coeff = work.pop()
        target = None
        for atom, k in mono:
            if k >= 2 and graph.nodes[atom][0] == SIN:
                target = atom
                break
        if target is None:
            c = out.get(mono, 0.0) + coeff
            if c == 0.0:
                out.pop(mono, None)
            else:
                out[mono] = c
            continue
        cos_atom = graph.cos(graph.nodes[target][1])
        rest = {a: k for a, k in mono}
        rest[target] -= 2
        if rest[target] == 0:
            del rest[target]
        m1 = tuple(sorted(rest.items()))
        rest_c = dict(rest)
        rest_c[cos_atom] = rest_c.get(cos_atom, 0) + 2
        m2 = tuple(sorted(rest_c.items()))
        work.append((m1, coeff))
        work.append((m2, -coeff))
    return out


def expand(graph: Graph, roots, term_budget=DEFAULT_TERM_BUDGET, fold_trig=False):
    """Distribute products over sums; returns normal-form root ids."""
    needed = graph._reachable(roots)
    budget_state = [0, term_budget]
    poly = {}
    hi = max(needed) if needed else -1
    nid = 0
    while nid <= hi:
        if nid not in needed:
            nid += 1
            continue
        op, *rest = graph.nodes[nid]
        if op == CONST:
            poly[nid] = {} if rest[0] == 0.0 else {(): rest[0]}
        elif op == SYM:
            poly[nid] = {((nid, 1),): 1.0}
        elif op == ADD:
            poly[nid] = _poly_add(poly[rest[0]], poly[rest[1]])
        elif op == MUL:
            poly[nid] = _poly_mul(poly[rest[0]], poly[rest[1]], budget_state)
        elif op == NEG:
            poly[nid] = {m: -c for m, c in poly[rest[0]].items()}
        elif op == POW:
            base, k = poly[rest[0]], rest[1]
            if len(base) == 1:
                ((mono, c),) = base.items()
                poly[nid] = {tuple((a, e * k) for a, e in mono): c ** k}
            else:
                acc = {(): 1.0}
                for _ in range(k):
                    acc = _poly_mul(acc, base, budget_state)
                poly[nid] = acc
        else:
            # opaque atoms: rebuild the (expanded) argument inside
            if op == DIV:
                arg = graph.div(_rebuild(graph, poly[rest[0]]),
                                _rebuild(graph, poly[rest[1]]))
            else:
                inner = _rebuild(graph, poly[rest[0]])
                arg = getattr(graph, op)(inner)
            if graph.nodes[arg][0] == CONST:
                poly[nid] = {(): graph.nodes[arg][1]} if graph.nodes[arg][1] else {}
            else:
                poly[nid] = {((arg, 1),): 1.0}
        if fold_trig and op in (MUL, POW):
            poly[nid] = _fold_trig_poly(graph, poly[nid])
        nid += 1
    if fold_trig:
        return [_rebuild(graph, _fold_trig_poly(graph, poly[r])) for r in roots]
    return [_rebuild(graph, poly[r]) for r in roots]


_OP_COST = {CONST: 0, SYM: 0}


def count_ops(graph: Graph, roots) -> int:
    """Total operation count with tree semantics (1 op per node occurrence)."""
    counts = {}
    for nid in sorted(graph._reachable(roots)):
        op, *rest = graph.nodes[nid]
        if op in (CONST, SYM):
            counts[nid] = 0
        elif op in (POW, NEG, SIN, COS, SQRT):
            counts[nid] = 1 + counts[rest[0]]
        else:
            counts[nid] = 1 + counts[rest[0]] + counts[rest[1]]
    return sum(counts[r] for r in roots)


def cse(graph: Graph, roots):
    """Common subexpression elimination over the DAG.

    Returns (assignments, order) where assignments is a topologically ordered
    list of (temp_index, node_id) for every non-leaf node referenced at least
    twice, and order is the full topological evaluation order.
    """
    needed = sorted(graph._reachable(roots))
    refs = {nid: 0 for nid in needed}
    for nid in needed:
        for c in graph.children(nid):
            refs[c] += 1
    for r in roots:
        refs[r] += 1
    shared = [nid for nid in needed
              if refs[nid] > 1 and graph.nodes[nid][0] not in (CONST, SYM)]
    assignments = [(i, nid) for i, nid in enumerate(shared)]
    return assignments, needed


def expand_and_cse(graph: Graph, roots, do_expand=False,
                   term_budget=DEFAULT_TERM_BUDGET):
    """Optional expansion followed by CSE; returns (roots', assignments).

    Expansion is used for op counting (mirroring a CAS 'expand' before
    'count_ops'); emission normally runs CSE on the compact graph, so
    expansion defaults to off.
    """
    if do_expand:
        roots = expand(graph, roots, term_budget=term_budget)
    assignments, _ = cse(graph, roots)
    return roots, assignments


@dataclass
class OpCountReport:
    """Per-matrix op counts for one model/method/parameterization combo."""

    model: str
    links: int
    parameterization: str      # "quaternion" | "euler"
    method: str                # "christoffel" | "energy" | "mixed"
    counts: dict = field(default_factory=dict)   # matrix name -> ops
    gen_seconds: float = 0.0

    @property
    def total(self):
        return sum(self.counts.values())

    def rows(self):
        for matrix, ops in self.counts.items():
            yield {"model": self.model, "links": self.links,
                   "parameterization": self.parameterization,
                   "method": self.method, "matrix": matrix, "ops": ops,
                   "gen_seconds": self.gen_seconds}
