#!/usr/bin/env python3
"""Spin-1/2 weak-value walkthrough.

Pre-select along +x, post-select along +z, and measure the z component
directly and through its decomposition into the two diagonal components.
Prints analytic weak values, pointer-extracted estimates, the
time-reversed selection, and the derail/continuity sweeps next to the
weak values (which stay finite while every disturbance metric dies off
like a power of g).
"""

import math

import numpy as np

from tsvflab import (
    PrePostSelection,
    continuity_metric,
    default_g_decade,
    derail_metric,
    estimate_weak_value,
    expectation,
    gaussian_pointer,
    initial_state,
    pauli_x,
    pauli_z,
    spin_up_x,
    spin_up_z,
    sweep_metric,
    time_reverse,
    translation_generator,
    weak_value,
)


def main() -> None:
    sel = PrePostSelection(spin_up_x(), spin_up_z())
    sz = pauli_z()
    splus = (pauli_z() + pauli_x()) / math.sqrt(2)
    sminus = (pauli_z() - pauli_x()) / math.sqrt(2)
    model = gaussian_pointer(2.0)

    print("selection: pre = up_x, post = up_z")
    print(f"<out|in> = {sel.overlap:.6f}\n")

    print(f"{'observable':<12}{'<in|S|in>':>12}{'weak value':>22}{'pointer estimate':>26}")
    for name, op in (("sz", sz), ("splus", splus), ("sminus", sminus)):
        w = weak_value(sel, op)
        est = estimate_weak_value(sel, op, model)
        print(
            f"{name:<12}{expectation(sel.pre, op):>12.6f}"
            f"{w.real:>14.6f}{w.imag:>+.4f}i"
            f"{est.value.real:>18.6f}{est.value.imag:>+.2e}i"
        )
    w_sum = (weak_value(sel, splus) + weak_value(sel, sminus)) / math.sqrt(2)
    print(f"\n(w(splus) + w(sminus)) / sqrt(2) = {w_sum.real:.12f}  (= w(sz))")

    flipped = time_reverse(sel)
    print(
        f"time-reversed selection: <in|sz|in> = "
        f"{expectation(flipped.pre, sz):.6f}, w = {weak_value(flipped, sz):.6f}"
    )

    print("\ndisturbance sweeps for sz (both vanish smoothly as g -> 0):")
    ready = initial_state(model)
    generator = translation_generator(model)
    gs = default_g_decade()
    for label, metric in (("continuity", continuity_metric), ("derail", derail_metric)):
        sweep = sweep_metric(
            lambda g, m=metric: m(sel.pre, ready, sz, generator, g), gs
        )
        print(
            f"  {label:<11} order {sweep.fitted_order:.4f}  "
            f"coefficient {sweep.fitted_coefficient:.4f}  "
            f"values {np.array(sweep.metric_values).round(8)}"
        )
    print(
        "\nthe weak value stays 1 while every disturbance metric goes to zero;"
        "\nno metric distinguishes the <in|S|in> = 0 case from any other."
    )


if __name__ == "__main__":
    main()
