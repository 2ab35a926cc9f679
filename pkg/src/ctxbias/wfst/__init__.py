from .core import EPS_SYMBOL, EPSILON, ONE, ZERO, Arc, Fst, FstBuilder, SymbolTable, linear_fst
from .ops import (
    Path,
    compose,
    connect,
    determinize,
    enumerate_relation,
    is_deterministic,
    is_input_deterministic,
    minimize,
    path_to_fst,
    push_weights,
    relations_close,
    shortest_path,
    shortest_path_fst,
    top_sort,
    union_of_paths,
)
from .textio import fst_from_text, fst_to_text, read_fst, symbols_from_text, symbols_to_text, write_fst

__all__ = [
    "EPS_SYMBOL", "EPSILON", "ONE", "ZERO", "Arc", "Fst", "FstBuilder", "SymbolTable", "linear_fst",
    "Path", "compose", "connect", "determinize", "enumerate_relation", "is_deterministic",
    "is_input_deterministic", "minimize", "path_to_fst", "push_weights", "relations_close",
    "shortest_path", "shortest_path_fst", "top_sort", "union_of_paths",
    "fst_from_text", "fst_to_text", "read_fst", "symbols_from_text", "symbols_to_text", "write_fst",
]
