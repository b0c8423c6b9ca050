#!/usr/bin/env python3
"""Two routes to the weak limit: g -> 0 at fixed pointer spread versus
spread -> infinity at fixed g.  The coupling strength belongs to the
interaction and the spread to the device, so these are different
experiments; both trajectories converge to the analytic weak value."""

import math

from tsvflab import (
    PrePostSelection,
    compare_limits,
    pauli_x,
    pauli_z,
    spin_up_x,
    spin_up_z,
)


def show(label: str, op) -> None:
    sel = PrePostSelection(spin_up_x(), spin_up_z())
    comparison = compare_limits(sel, op, spread_schedule=(1, 2, 4, 8, 16, 32))
    print(f"\n{label}: analytic weak value {comparison.analytic:.6f}")
    print(f"  g -> 0 at spread {comparison.fixed_spread}:")
    for point in comparison.coupling_branch:
        print(f"    g = {point.parameter:<8.4g} estimate {point.estimate.real:+.8f}"
              f"  deviation {point.deviation:.3e}")
    print(f"  spread -> infinity at g = {comparison.fixed_coupling}:")
    for point in comparison.spread_branch:
        print(f"    spread = {point.parameter:<6.4g} estimate {point.estimate.real:+.8f}"
              f"  deviation {point.deviation:.3e}")


def main() -> None:
    show("sz", pauli_z())
    show("splus", (pauli_z() + pauli_x()) / math.sqrt(2))


if __name__ == "__main__":
    main()
