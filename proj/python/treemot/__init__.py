"""Entropy-regularized multi-marginal optimal transport on factor trees."""

from ._core import (
    CountingError,
    DenseCapError,
    GraphError,
    InfeasibleError,
    Problem,
    ProblemError,
    bench_problem,
    brute_marginals,
    counting_numbers,
    run_cli,
    solve,
)

__all__ = [
    "CountingError",
    "DenseCapError",
    "GraphError",
    "InfeasibleError",
    "Problem",
    "ProblemError",
    "bench_problem",
    "brute_marginals",
    "counting_numbers",
    "run_cli",
    "solve",
]
