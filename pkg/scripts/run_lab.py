"""Completion laboratory: the Q and Q x Q counterexamples, then the shipped catalog."""

from ordercomp.lab import (
    PI,
    SQRT2,
    Const,
    Harmonic,
    characterization,
    converges_in_product_of_completions,
    converges_in_QQsharp,
    converges_in_Qsharp,
    neighborhood,
    sequence_tail,
)
from ordercomp.lab.catalog import format_table, load_default, run_catalog


def main():
    print("neighbourhood filter of sqrt2 converges in Q#:",
          converges_in_Qsharp(neighborhood(SQRT2), SQRT2))
    print("characterisation filter of sqrt2 converges in Q#:",
          converges_in_Qsharp(characterization(SQRT2), SQRT2))
    H = sequence_tail(Harmonic(0), Const(PI))
    print("tail of (1/n, pi) converges in Q# x Q#:", converges_in_product_of_completions(H, (0, PI)))
    print("tail of (1/n, pi) converges in (Q x Q)#:", converges_in_QQsharp(H, (0, PI)))
    print()
    print(format_table(run_catalog(load_default())))


if __name__ == "__main__":
    main()
