"""Symbolic scalar expression graphs.

A Graph owns an append-only arena of nodes.  Structural hashing deduplicates
identical subtrees, so the arena is a DAG and node ids are topologically
ordered (children always precede parents).  The Expr wrapper provides Python
operators plus sin/cos/sqrt, which lets symbolic scalars flow through the same
generic assembly code as floats and dual numbers.
"""

from __future__ import annotations

import math

import numpy as np

# node ops
CONST = "const"
SYM = "sym"
ADD = "add"
MUL = "mul"
NEG = "neg"
POW = "pow"     # integer exponent >= 2
SIN = "sin"
COS = "cos"
SQRT = "sqrt"
DIV = "div"

_UNARY = (NEG, SIN, COS, SQRT)


class Graph:
    """Node arena with hash consing and light construction-time folding."""

    def __init__(self):
        self.nodes = []      # tuples: (op, payload...) referencing child ids
        self._memo = {}
        self.symbols = {}    # name -> node id

    def _intern(self, node):
        nid = self._memo.get(node)
        if nid is None:
            nid = len(self.nodes)
            self.nodes.append(node)
            self._memo[node] = nid
        return nid

    def constant(self, v) -> int:
        return self._intern((CONST, float(v)))

    def symbol(self, name: str) -> int:
        nid = self.symbols.get(name)
        if nid is None:
            nid = self._intern((SYM, name))
            self.symbols[name] = nid
        return nid

    def _const_val(self, nid):
        node = self.nodes[nid]
        return node[1] if node[0] == CONST else None

    def add(self, a: int, b: int) -> int:
        ca, cb = self._const_val(a), self._const_val(b)
        if ca is not None and cb is not None:
            return self.constant(ca + cb)
        if ca == 0.0:
            return b
        if cb == 0.0:
            return a
        if a > b:
            a, b = b, a
        return self._intern((ADD, a, b))

    def mul(self, a: int, b: int) -> int:
        ca, cb = self._const_val(a), self._const_val(b)
        if ca is not None and cb is not None:
            return self.constant(ca * cb)
        if ca == 0.0 or cb == 0.0:
            return self.constant(0.0)
        if ca == 1.0:
            return b
        if cb == 1.0:
            return a
        if ca == -1.0:
            return self.neg(b)
        if cb == -1.0:
            return self.neg(a)
        if a > b:
            a, b = b, a
        return self._intern((MUL, a, b))

    def neg(self, a: int) -> int:
        ca = self._const_val(a)
        if ca is not None:
            return self.constant(-ca)
        if self.nodes[a][0] == NEG:
            return self.nodes[a][1]
        return self._intern((NEG, a))

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def pow_int(self, a: int, k: int) -> int:
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k < 0:
            return self.div(self.constant(1.0), self.pow_int(a, -k))
        if k == 0:
            return self.constant(1.0)
        if k == 1:
            return a
        ca = self._const_val(a)
        if ca is not None:
            return self.constant(ca ** k)
        return self._intern((POW, a, k))

    def sin(self, a: int) -> int:
        ca = self._const_val(a)
        if ca is not None:
            return self.constant(math.sin(ca))
        return self._intern((SIN, a))

    def cos(self, a: int) -> int:
        ca = self._const_val(a)
        if ca is not None:
            return self.constant(math.cos(ca))
        return self._intern((COS, a))

    def sqrt(self, a: int) -> int:
        ca = self._const_val(a)
        if ca is not None:
            return self.constant(math.sqrt(ca))
        return self._intern((SQRT, a))

    def div(self, a: int, b: int) -> int:
        ca, cb = self._const_val(a), self._const_val(b)
        if cb is not None:
            if cb == 0.0:
                raise ZeroDivisionError("symbolic division by constant zero")
            if ca is not None:
                return self.constant(ca / cb)
            return self.mul(a, self.constant(1.0 / cb))
        if ca == 0.0:
            return self.constant(0.0)
        return self._intern((DIV, a, b))

    def children(self, nid: int):
        node = self.nodes[nid]
        op = node[0]
        if op in (CONST, SYM):
            return ()
        if op in _UNARY:
            return (node[1],)
        if op == POW:
            return (node[1],)
        return (node[1], node[2])

    def evaluate(self, roots, env: dict) -> np.ndarray:
        """Evaluate root ids with symbol values from env (name -> float)."""
        vals = {}
        needed = self._reachable(roots)
        for nid in sorted(needed):
            op, *rest = self.nodes[nid]
            if op == CONST:
                vals[nid] = rest[0]
            elif op == SYM:
                vals[nid] = float(env[rest[0]])
            elif op == ADD:
                vals[nid] = vals[rest[0]] + vals[rest[1]]
            elif op == MUL:
                vals[nid] = vals[rest[0]] * vals[rest[1]]
            elif op == NEG:
                vals[nid] = -vals[rest[0]]
            elif op == POW:
                # multiplication chain, matching the emitted C bit-for-bit
                base = vals[rest[0]]
                acc = base
                for _ in range(rest[1] - 1):
                    acc = acc * base
                vals[nid] = acc
            elif op == SIN:
                vals[nid] = math.sin(vals[rest[0]])
            elif op == COS:
                vals[nid] = math.cos(vals[rest[0]])
            elif op == SQRT:
                vals[nid] = math.sqrt(vals[rest[0]])
            elif op == DIV:
                vals[nid] = vals[rest[0]] / vals[rest[1]]
        return np.array([vals[r] for r in roots])

    def _reachable(self, roots) -> set:
        seen = set()
        stack = list(roots)
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            seen.add(nid)
            stack.extend(self.children(nid))
        return seen

    def differentiate(self, roots, sym_name: str) -> list:
        """Partial derivatives of all roots with respect to one symbol.

        Single arena pass; returns new root ids in the same graph.
        """
        if sym_name not in self.symbols:
            raise KeyError(f"symbol {sym_name!r} not registered")
        sid = self.symbols[sym_name]
        needed = self._reachable(roots)
        d = {}
        zero = self.constant(0.0)
        hi = max(needed) if needed else -1
        for nid in range(hi + 1):
            if nid not in needed:
                continue
            op, *rest = self.nodes[nid]
            if op == CONST:
                d[nid] = zero
            elif op == SYM:
                d[nid] = self.constant(1.0) if nid == sid else zero
            elif op == ADD:
                d[nid] = self.add(d[rest[0]], d[rest[1]])
            elif op == MUL:
                a, b = rest
                d[nid] = self.add(self.mul(d[a], b), self.mul(a, d[b]))
            elif op == NEG:
                d[nid] = self.neg(d[rest[0]])
            elif op == POW:
                a, k = rest
                d[nid] = self.mul(self.mul(self.constant(k), self.pow_int(a, k - 1)),
                                  d[a])
            elif op == SIN:
                d[nid] = self.mul(self.cos(rest[0]), d[rest[0]])
            elif op == COS:
                d[nid] = self.neg(self.mul(self.sin(rest[0]), d[rest[0]]))
            elif op == SQRT:
                d[nid] = self.div(d[rest[0]],
                                  self.mul(self.constant(2.0), self.sqrt(rest[0])))
            elif op == DIV:
                a, b = rest
                num = self.sub(self.mul(d[a], b), self.mul(a, d[b]))
                d[nid] = self.div(num, self.pow_int(b, 2))
        return [d[r] for r in roots]


class Expr:
    """Scalar wrapper around a graph node, implementing the generic scalar API."""

    __slots__ = ("graph", "nid")
    __array_ufunc__ = None

    def __init__(self, graph: Graph, nid: int):
        self.graph = graph
        self.nid = nid

    def _wrap(self, nid):
        return Expr(self.graph, nid)

    def _id(self, other):
        if isinstance(other, Expr):
            if other.graph is not self.graph:
                raise ValueError("mixing expressions from different graphs")
            return other.nid
        return self.graph.constant(other)

    def __add__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return self._wrap(self.graph.add(self.nid, self._id(other)))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return self._wrap(self.graph.sub(self.nid, self._id(other)))

    def __rsub__(self, other):
        return self._wrap(self.graph.sub(self._id(other), self.nid))

    def __mul__(self, other):
        if isinstance(other, np.ndarray):
            return NotImplemented
        return self._wrap(self.graph.mul(self.nid, self._id(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.graph.div(self.nid, self._id(other)))

    def __rtruediv__(self, other):
        return self._wrap(self.graph.div(self._id(other), self.nid))

    def __neg__(self):
        return self._wrap(self.graph.neg(self.nid))

    def __pos__(self):
        return self

    def __pow__(self, k):
        return self._wrap(self.graph.pow_int(self.nid, k))

    def sin(self):
        return self._wrap(self.graph.sin(self.nid))

    def cos(self):
        return self._wrap(self.graph.cos(self.nid))

    def sqrt(self):
        return self._wrap(self.graph.sqrt(self.nid))

    def __repr__(self):
        return f"Expr({to_string(self.graph, self.nid)})"


def symbols(graph: Graph, names) -> list:
    return [Expr(graph, graph.symbol(n)) for n in names]


def to_string(graph: Graph, nid: int, max_nodes=500) -> str:
    """Readable infix form (truncated for large graphs)."""
    count = [0]

    def rec(i):
        count[0] += 1
        if count[0] > max_nodes:
            return "..."
        op, *rest = graph.nodes[i]
        if op == CONST:
            return f"{rest[0]:g}"
        if op == SYM:
            return rest[0]
        if op == ADD:
            return f"({rec(rest[0])} + {rec(rest[1])})"
        if op == MUL:
            return f"({rec(rest[0])}*{rec(rest[1])})"
        if op == NEG:
            return f"(-{rec(rest[0])})"
        if op == POW:
            return f"{rec(rest[0])}**{rest[1]}"
        if op == DIV:
            return f"({rec(rest[0])}/{rec(rest[1])})"
        return f"{op}({rec(rest[0])})"

    return rec(nid)
