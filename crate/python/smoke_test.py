"""Smoke test for the Python bindings.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

from pathlib import Path

import rexpand_py as rx

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main():
    spec = rx.Spec.load(str(FIXTURES / "example1.lf"))
    base = spec.matrix
    assert base.labels == ["0", "1"]

    holds, cm = base.consequence(["p1", "neg(p1)"], ["p2"])
    assert not holds and cm["p2"] == "0"

    sharp = spec.strengthen()
    assert len(sharp) == 4
    golden = rx.Spec.load(str(FIXTURES / "example1.sharp.lf")).matrix
    assert sharp.same_up_to_labels(golden)
    assert golden.entry("imp", ["11", "00"]) == []
    assert sorted(golden.refinements()) == [["00", "01", "10"], ["11"]]
    assert sharp.consequence(["p1", "neg(p1)"], ["p2"]) == (True, None)

    calc = rx.Calculus.generate(sharp)
    proof = calc.prove([], ["imp(p1, imp(neg(p1), p2))"])
    assert proof is not None and "done:" in proof
    assert calc.prove(["p1"], ["p2"]) is None

    listed = rx.Calculus.parse((FIXTURES / "example1.listed.calc").read_text())
    assert "rexp" in listed.prove([], ["imp(p1, imp(neg(p1), p2))"])
    assert any(r.startswith("rexp:") for r in listed.rules)

    report = spec.verify()
    assert report["disagreements"] == 0, report

    try:
        rx.Spec.parse("signature { and/1 }")
    except ValueError:
        pass
    else:
        raise AssertionError("bad file accepted")
    print("python smoke test passed")


if __name__ == "__main__":
    main()
