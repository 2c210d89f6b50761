"""Extracting a maximally entangled pair from a catalyst state.

A single unitary on one side of the catalyst turns |phi>|00> into something
close to chi = phi' x (singlet-like pair), where phi' regroups the catalyst.
The fidelity approaches 1 like 1/log(n); the table shows the computed value,
the grouped-harmonic comparison form, and the certified trace-distance bound
sqrt(1 - (1 - log(m_hat)/log(n))^2).

Run: python3 demos/extraction_fidelity.py
"""

from parind_lab import embezzle as ez


def sweep(squares: tuple[str, ...]) -> None:
    print(f"target block weights: {', '.join(squares)}")
    header = f"{'n':>7}  {'fidelity':>10}  {'z-form':>10}  {'1-F':>9}  {'D':>8}  {'bound':>8}"
    print(header)
    for n in (100, 1000, 10000, 100000):
        spec = ez.EmbezzleSpec.from_exact(squares, n=n)
        report = ez.embezzlement_fidelity(spec)
        assert report.distance_bound_holds and report.lower_bound_holds
        print(
            f"{n:>7}  {report.computed_fidelity:>10.6f}  {report.z_form_fidelity:>10.6f}"
            f"  {1 - report.computed_fidelity:>9.6f}  {report.trace_distance:>8.5f}"
            f"  {report.distance_bound:>8.5f}"
        )
    print()


def main() -> None:
    sweep(("1/3", "2/3"))
    sweep(("1/6", "1/3", "1/2"))
    print(
        "The computed fidelity sits strictly above the grouped-harmonic form\n"
        "(the z-form floors each block before averaging); both converge to 1."
    )


if __name__ == "__main__":
    main()
