"""Symbolic expression engine: graphs, expansion, CSE, C emission, timing."""

from .bench import TimingReport, benchmark_backends, benchmark_dynamics  # noqa: F401
from .builder import (  # noqa: F401
    SymbolicDynamics,
    build_symbolic_dynamics,
    check_link_budget,
    euler_rate_matrix,
    op_count_report,
)
from .emit import CompiledDynamics, emit_dynamics, emit_function  # noqa: F401
from .expand import (  # noqa: F401
    ExpansionBudgetError,
    OpCountReport,
    count_ops,
    cse,
    expand,
    expand_and_cse,
)
from .graph import Expr, Graph, symbols, to_string  # noqa: F401
