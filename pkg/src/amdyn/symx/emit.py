"""C code emission for expression graphs.

Emits straight-line C89 functions of the form

    void <model>_<matrix>_<method>(const double *in, double *out);

where ``in`` packs the state as [x0..x{N-1}, v0..v{N-1}] and ``out`` receives
the matrix in column-major order.  Common subexpressions become numbered
temporaries; floating literals are printed with %.17g so the compiled code
reproduces the Python evaluation bit-for-bit up to reassociation-free
arithmetic.  A small gcc + ctypes helper compiles and loads the result.
"""

from __future__ import annotations

import ctypes
import subprocess
import sys
import tempfile
from pathlib import Path

from .builder import SymbolicDynamics
from .expand import cse
from .graph import ADD, CONST, DIV, MUL, NEG, POW, SYM, Graph


def _literal(v: float) -> str:
    out = f"{v:.17g}"
    if "." not in out and "e" not in out and "inf" not in out and "nan" not in out:
        out += ".0"
    return out


def _emit_roots(graph: Graph, roots, sym_index, lines, prefix="t"):
    """Append temp assignments for the graph; returns per-root C expressions."""
    assignments, order = cse(graph, roots)
    temp = {nid: f"{prefix}{i}" for i, nid in assignments}

    def ref(nid):
        if nid in temp:
            return temp[nid]
        return rec(nid)

    def rec(nid):
        op, *rest = graph.nodes[nid]
        if op == CONST:
            return _literal(rest[0])
        if op == SYM:
            return f"in[{sym_index[rest[0]]}]"
        if op == ADD:
            a, b = ref(rest[0]), ref(rest[1])
            if b.startswith("-"):
                return f"({a} {b})"
            return f"({a} + {b})"
        if op == MUL:
            return f"({ref(rest[0])}*{ref(rest[1])})"
        if op == NEG:
            return f"-{ref(rest[0])}"
        if op == POW:
            base = ref(rest[0])
            return "(" + "*".join([base] * rest[1]) + ")"
        if op == DIV:
            return f"({ref(rest[0])}/{ref(rest[1])})"
        return f"{op}({ref(rest[0])})"

    for _, nid in assignments:
        op, *rest = graph.nodes[nid]
        saved = temp.pop(nid)
        expr = rec(nid)
        temp[nid] = saved
        lines.append(f"    const double {saved} = {expr};")
    return [ref(r) for r in roots]


def emit_function(graph: Graph, roots, name: str, n_in: int, sym_index) -> str:
    """One C function writing the roots (column-major caller ordering)."""
    lines = [f"void {name}(const double *in, double *out)", "{"]
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 100_000))
    try:
        exprs = _emit_roots(graph, roots, sym_index, lines)
    finally:
        sys.setrecursionlimit(limit)
    for i, e in enumerate(exprs):
        lines.append(f"    out[{i}] = {e};")
    lines.append("}")
    return "\n".join(lines)


def emit_dynamics(sd: SymbolicDynamics) -> str:
    """C source with one function per matrix of a SymbolicDynamics bundle."""
    sym_index = {name: i for i, name in enumerate(sd.state_names)}
    parts = ["#include <math.h>", ""]
    for mat_name, (shape, roots) in sorted(sd.matrices.items()):
        if len(shape) == 2:
            # column-major output ordering
            rows, cols = shape
            ordered = [roots[i * cols + j] for j in range(cols) for i in range(rows)]
        else:
            ordered = list(roots)
        fn = f"{sd.model}_{mat_name}_{sd.method}"
        parts.append(emit_function(sd.graph, ordered, fn, 2 * sd.n, sym_index))
        parts.append("")
    return "\n".join(parts)


class CompiledDynamics:
    """ctypes wrapper around a gcc-compiled dynamics source."""

    def __init__(self, sd: SymbolicDynamics, workdir=None):
        self.sd = sd
        self._dir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="amdyn_gen_"))
        self._dir.mkdir(parents=True, exist_ok=True)
        src = self._dir / f"{sd.model}_{sd.method}.c"
        lib = self._dir / f"{sd.model}_{sd.method}.so"
        src.write_text(emit_dynamics(sd) + "\n")
        subprocess.run(
            ["gcc", "-O1", "-fPIC", "-shared", "-o", str(lib), str(src), "-lm"],
            check=True, capture_output=True)
        self._lib = ctypes.CDLL(str(lib))
        self._fns = {}
        for mat_name in sd.matrices:
            fn = getattr(self._lib, f"{sd.model}_{mat_name}_{sd.method}")
            fn.argtypes = [ctypes.POINTER(ctypes.c_double),
                           ctypes.POINTER(ctypes.c_double)]
            fn.restype = None
            self._fns[mat_name] = fn
        self.source_path = src

    def __call__(self, name, x, v):
        import numpy as np

        shape, roots = self.sd.matrices[name]
        buf_in = np.concatenate([np.asarray(x, dtype=float),
                                 np.asarray(v, dtype=float)])
        buf_out = np.empty(len(roots))
        self._fns[name](buf_in.ctypes.data_as(ctypes.POINTER(ctypes.c_double)),
                        buf_out.ctypes.data_as(ctypes.POINTER(ctypes.c_double)))
        if len(shape) == 2:
            return buf_out.reshape(shape, order="F")
        return buf_out.reshape(shape)
