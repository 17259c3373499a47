import cmath
import json
from fractions import Fraction

import pytest

import zlab


def test_continuant_and_value():
    assert zlab.continuant([1, 2, 3]) == 10
    assert zlab.continuant([1] * 100) == 573147844013817084101
    assert zlab.cf_value([1, 2, 3]) == Fraction(7, 10)
    assert zlab.word_matrix([1, 2]) == (1, 2, 1, 3)


def test_separation_check():
    r = zlab.separation_check("1,2,3,4", [1], [2, 1], [1, 3])
    assert r["holds"]
    assert Fraction(r["gap"]) >= Fraction(r["lower_bound"])


def test_census():
    r = zlab.census("1,2", 10)
    assert r["count"] == 8
    assert r["missing"] == [6, 9]
    assert zlab.missing_denominators([1, 2, 3, 4, 5], 1000) == []
    m = zlab.census([1, 2], 5, multiplicity=True)["multiplicity"]
    assert m[3] == 2
    rows = zlab.proportion_table("1,2", [10])
    assert rows[0][1] == 8


def test_dimension():
    d = zlab.hausdorff_dimension("1,2")
    assert abs(d["delta"] - 0.5312805) < 1e-6
    assert abs(d["gamma"] + d["delta"] - 1) < 1e-15
    assert abs(zlab.transfer_eigenvalue([1, 2], d["delta"]) - 1) < 1e-6


def test_ladder_and_arcs():
    lad = zlab.build_ladder(1e6, 0.1, 2)
    assert lad["rungs"][-1] == {"j": lad["J"] + 1, "value": 1e6}
    p = zlab.dirichlet_decompose(0.3, 1e6, 4.0)
    assert (p["a"], p["q"]) == (3, 10)
    l, lam = zlab.split_K(1.3)
    assert l / 2 + lam == pytest.approx(1.3)


def test_trig_sum_and_parseval():
    h = {1: 2, 3: 1}
    s = zlab.trig_sum(h, 0.25)
    assert s == pytest.approx(2 * cmath.exp(2j * cmath.pi * 0.25) + cmath.exp(2j * cmath.pi * 0.75))
    r = zlab.parseval_check(h, 7, 100.0)
    assert r["exact"] == 5
    assert r["relative_error"] < 1e-12
    with pytest.raises(ValueError):
        zlab.parseval_check(h, 6, 100.0)


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        zlab.census("0,1", 10)
    with pytest.raises(ValueError):
        zlab.build_ladder(1e6, 1.5, 2)
    assert issubclass(zlab.InputError, ValueError)


def test_run_cli():
    code, out, err = zlab.run_cli(["--format", "json", "census", "--alphabet", "1,2", "--limit", "10"])
    assert code == 0, err
    assert json.loads(out)["results"]["count"] == 8
    code, _, err = zlab.run_cli(["census"])
    assert code == 1
    assert err
