"""Smoke test for the pybranchworlds extension module.

Build with `cargo build -p branchworlds-py --features extension-module --release`,
then copy target/release/libpybranchworlds.so next to this script as
pybranchworlds.so (or install with maturin).
"""

import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pybranchworlds as bw


def main():
    g = bw.Game([("1", "0"), ("4", "1")], p="2")
    assert g.probabilities() == ["1/5", "4/5"]
    assert g.value() == "4/5"
    assert g.value_via_symmetrization() == g.value()

    sym, trace = bw.Game([("1", "3"), ("2", "5")], p="1").symmetrize()
    assert sym.is_symmetric() and len(sym) == 3
    assert Fraction(sym.value()) == Fraction(13, 3)
    assert trace["common_denominator"] == "1"
    assert trace["multiplicities"] == ["1", "2"]

    reports = bw.check_axioms("max", trials=20)
    assert [r["passed"] for r in reports] == [True] * 5 + [False]

    m = bw.Game([("1", "3"), ("2", "7")], p="max")
    assert m.value() == "7"

    assert bw.once_or_twice("1", "1", "kent") == ["1/3", "1/3", "1/3"]
    assert bw.once_or_twice("1", "1", "mw") == ["1/2", "1/4", "1/4"]

    masses = bw.frequency_distribution(["1", "2"], 3)
    assert masses == ["8/27", "4/9", "2/9", "1/27"]
    report = bw.hoeffding(["1", "1"], 10, "1/2")
    assert report["tail_mass"] == "1/512" and report["holds"]

    counts = bw.sample_frequencies(["1", "1"], 100, 1000, seed=42)
    assert sum(counts) == 1000
    assert counts == bw.sample_frequencies(["1", "1"], 100, 1000, seed=42)

    for _, _, payoff in bw.dutch_book("1", "1"):
        assert payoff == "-1"

    assert abs(bw.estimate_p("p2")["mean"] - 2.0) < 1e-6
    try:
        bw.estimate_p("max")
    except ValueError:
        pass
    else:
        raise AssertionError("max norm should be degenerate")

    witness = (
        '{"rows": [{"coeff": {"magp": "1"}, "subgame": {"rows": ['
        '{"coeff": {"magp": "1"}, "terminal": "6"}, {"coeff": {"magp": "1"}, "terminal": "0"}]}},'
        '{"coeff": {"magp": "1"}, "terminal": "0"}]}'
    )
    assert not bw.check_substitution(witness, "kent")["holds"]
    assert bw.check_substitution(witness, "mw")["holds"]

    print("pybranchworlds smoke test passed")


if __name__ == "__main__":
    main()
