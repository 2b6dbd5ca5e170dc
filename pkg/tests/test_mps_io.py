import gzip
import io
import warnings

import numpy as np
import numpy.testing as npt
import pytest

from hprlp import LpProblem, MpsParseError, SparseMatrix, build_problem, parse_mps

from conftest import random_lp

INF = np.inf


def load(fixtures_dir, name, expect_warnings=False):
    doc = parse_mps(fixtures_dir / name)
    if expect_warnings:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob = build_problem(doc)
    else:
        prob = build_problem(doc)
        assert doc.warnings == []
    return doc, prob


# ---------------------------------------------------------------------------
# fixture corpus, bit-exact


def test_simple_l(fixtures_dir):
    doc, prob = load(fixtures_dir, "simple_l.mps")
    assert doc.name == "SIMPLE"
    assert doc.obj_sense == "minimize"
    assert doc.objective_row == "COST"
    npt.assert_array_equal(prob.c, [2.0, 1.0])
    npt.assert_array_equal(prob.A.to_dense(), [[1.0, 1.0]])
    npt.assert_array_equal(prob.l_con, [-INF])
    npt.assert_array_equal(prob.u_con, [4.0])
    npt.assert_array_equal(prob.l_var, [0.0, 0.0])
    npt.assert_array_equal(prob.u_var, [INF, INF])
    assert prob.obj_constant == 0.0


def test_rows_lge(fixtures_dir):
    doc, prob = load(fixtures_dir, "rows_lge.mps")
    assert doc.constraint_rows == ["CAP", "DEM", "BAL"]
    npt.assert_array_equal(prob.c, [1.0, -1.0])
    npt.assert_array_equal(
        prob.A.to_dense(), [[2.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
    )
    npt.assert_array_equal(prob.l_con, [-INF, 0.5, 2.0])
    npt.assert_array_equal(prob.u_con, [8.0, INF, 2.0])


def test_ranges_on_l_rows(fixtures_dir):
    _, prob = load(fixtures_dir, "ranges_l.mps")
    # rhs 4 with range +-1: [4 - |R|, 4] either sign
    npt.assert_array_equal(prob.l_con, [3.0, 3.0])
    npt.assert_array_equal(prob.u_con, [4.0, 4.0])


def test_ranges_on_g_rows(fixtures_dir):
    _, prob = load(fixtures_dir, "ranges_g.mps")
    npt.assert_array_equal(prob.l_con, [2.0, 2.0])
    npt.assert_array_equal(prob.u_con, [5.0, 5.0])


def test_ranges_on_e_rows_sign_sensitive(fixtures_dir):
    _, prob = load(fixtures_dir, "ranges_e.mps")
    # E with R >= 0 gives [r, r + R]; R < 0 gives [r + R, r]
    npt.assert_array_equal(prob.l_con, [1.0, -1.0])
    npt.assert_array_equal(prob.u_con, [3.0, 1.0])


def test_bounds_all_plain_keys(fixtures_dir):
    _, prob = load(fixtures_dir, "bounds_all.mps")
    npt.assert_array_equal(prob.l_var, [0.0, -1.5, 0.25, -INF, -INF, 0.0])
    npt.assert_array_equal(prob.u_var, [2.5, INF, 0.25, INF, INF, INF])


def test_bounds_integer_keys(fixtures_dir):
    doc, prob = load(fixtures_dir, "bounds_int.mps", expect_warnings=True)
    npt.assert_array_equal(prob.l_var, [0.0, 1.0])
    npt.assert_array_equal(prob.u_var, [1.0, 3.0])
    assert any("integrality relaxed for 2" in w for w in doc.warnings)


def test_negative_upper_without_lower(fixtures_dir):
    doc, prob = load(fixtures_dir, "bounds_neg_up.mps", expect_warnings=True)
    # X: UP -2 alone pushes the default lower bound to -inf (flagged);
    # Y: explicit LO -5 is kept
    npt.assert_array_equal(prob.l_var, [-INF, -5.0])
    npt.assert_array_equal(prob.u_var, [-2.0, -2.0])
    assert any("UP bound" in w and "'X'" in w for w in doc.warnings)


def test_objsense_max(fixtures_dir):
    doc, prob = load(fixtures_dir, "objsense_max.mps")
    assert prob.obj_sense == "maximize"
    # stored in minimize form: coefficients negated
    npt.assert_array_equal(prob.c, [-3.0, -2.0])
    npt.assert_array_equal(prob.u_var, [3.0, 3.0])


def test_integer_markers(fixtures_dir):
    doc, prob = load(fixtures_dir, "int_markers.mps", expect_warnings=True)
    assert doc.integer_columns == ["X1"]
    npt.assert_array_equal(prob.c, [1.0, 2.0])
    assert any("integrality relaxed for 1" in w for w in doc.warnings)


def test_objective_constant_from_rhs(fixtures_dir):
    _, prob = load(fixtures_dir, "obj_const.mps")
    assert prob.obj_constant == -5.0
    npt.assert_array_equal(prob.l_con, [2.0])


def test_duplicate_entries_summed(fixtures_dir):
    doc, prob = load(fixtures_dir, "dup_entries.mps", expect_warnings=True)
    npt.assert_array_equal(prob.A.to_dense(), [[5.0]])
    npt.assert_array_equal(prob.l_con, [2.5])  # last RHS wins
    assert any("duplicate matrix" in w for w in doc.warnings)
    assert any("duplicate RHS" in w for w in doc.warnings)


def test_free_format_and_missing_endata(fixtures_dir):
    doc, prob = load(fixtures_dir, "free_format.mps", expect_warnings=True)
    assert doc.name == "FREEFORM"
    assert any("missing ENDATA" in w for w in doc.warnings)
    assert any("free row 'extra' dropped" in w for w in doc.warnings)
    npt.assert_array_equal(prob.c, [1.5])
    npt.assert_array_equal(prob.l_con, [3.5])
    npt.assert_array_equal(prob.u_con, [INF])


def test_fixed_format(fixtures_dir):
    _, prob = load(fixtures_dir, "fixed_format.mps")
    npt.assert_array_equal(prob.c, [1.0, 2.0])
    npt.assert_array_equal(prob.A.to_dense(), [[1.0, 1.0], [1.0, 0.0]])
    npt.assert_array_equal(prob.l_con, [2.0, 0.5])
    npt.assert_array_equal(prob.u_con, [4.0, INF])
    npt.assert_array_equal(prob.u_var, [3.0, INF])


def test_gzip_input(fixtures_dir, tmp_path):
    raw = (fixtures_dir / "simple_l.mps").read_bytes()
    gz = tmp_path / "simple_l.mps.gz"
    with gzip.open(gz, "wb") as fh:
        fh.write(raw)
    doc = parse_mps(gz)
    ref = parse_mps(fixtures_dir / "simple_l.mps")
    assert doc.entries == ref.entries
    assert doc.rhs_entries == ref.rhs_entries


def test_stream_input(fixtures_dir):
    text = (fixtures_dir / "simple_l.mps").read_text()
    doc = parse_mps(io.StringIO(text))
    assert doc.name == "SIMPLE"
    with open(fixtures_dir / "simple_l.mps") as fh:
        doc2 = parse_mps(fh)
    assert doc2.entries == doc.entries


# ---------------------------------------------------------------------------
# parse errors carry line numbers


def perr(text):
    with pytest.raises(MpsParseError) as ei:
        parse_mps(io.StringIO(text))
    return ei.value


def test_error_unknown_section():
    err = perr("NAME T\nGARBAGE\n")
    assert err.line_no == 2
    assert "unknown section" in str(err)


def test_error_data_before_section():
    err = perr("    X1 OBJ 1.0\n")
    assert err.line_no == 1


def test_error_data_in_name_section():
    err = perr("NAME\n    STRAY\n")
    assert err.line_no == 2
    assert "NAME" in str(err)


def test_error_unknown_row_type():
    err = perr("ROWS\n Q  R1\n")
    assert err.line_no == 2
    assert "row type" in str(err)


def test_error_duplicate_row():
    err = perr("ROWS\n N  OBJ\n L  R1\n L  R1\n")
    assert err.line_no == 4
    assert "duplicate row" in str(err)


def test_error_unknown_row_in_columns():
    err = perr("ROWS\n N  OBJ\nCOLUMNS\n    X1 NOPE 1.0\n")
    assert err.line_no == 4
    assert "unknown row" in str(err)


def test_error_even_token_columns_line():
    err = perr("ROWS\n N  OBJ\nCOLUMNS\n    X1 OBJ\n")
    assert err.line_no == 4


def test_error_malformed_number():
    err = perr("ROWS\n N  OBJ\nCOLUMNS\n    X1 OBJ abc\n")
    assert err.line_no == 4
    assert "malformed numeric" in str(err)


def test_error_unknown_row_in_rhs():
    err = perr("ROWS\n N  OBJ\nRHS\n    RHS NOPE 1.0\n")
    assert err.line_no == 4


def test_error_ranges_on_objective_row():
    err = perr("ROWS\n N  OBJ\nRANGES\n    RNG OBJ 1.0\n")
    assert err.line_no == 4
    assert "RANGES" in str(err)


def test_error_unknown_bound_key():
    text = "ROWS\n N  OBJ\nCOLUMNS\n    X1 OBJ 1.0\nBOUNDS\n XX BND X1 1.0\n"
    err = perr(text)
    assert err.line_no == 6
    assert "bound key" in str(err)


def test_error_unknown_column_in_bounds():
    text = "ROWS\n N  OBJ\nCOLUMNS\n    X1 OBJ 1.0\nBOUNDS\n UP BND NOPE 1.0\n"
    err = perr(text)
    assert err.line_no == 6


def test_error_unknown_marker():
    text = "ROWS\n N  OBJ\nCOLUMNS\n    M 'MARKER' 'INTWAT'\n"
    err = perr(text)
    assert err.line_no == 4
    assert "marker" in str(err)


def test_error_bad_objsense():
    err = perr("OBJSENSE\n    SIDEWAYS\n")
    assert err.line_no == 2


def test_build_rejects_crossed_bounds():
    text = (
        "ROWS\n N  OBJ\nCOLUMNS\n    X1 OBJ 1.0\n"
        "BOUNDS\n LO BND X1 5.0\n UP BND X1 1.0\nENDATA\n"
    )
    doc = parse_mps(io.StringIO(text))
    with pytest.raises(ValueError, match="exceeds"):
        build_problem(doc)


# ---------------------------------------------------------------------------
# write-then-read round trip


def emit_mps(prob: LpProblem) -> str:
    """Minimal writer used to close the loop on the reader."""
    out = ["NAME          ROUNDTRIP", "ROWS", " N  OBJ"]
    rows = []
    for i in range(prob.m):
        lo, hi = prob.l_con[i], prob.u_con[i]
        name = f"R{i}"
        if lo == hi:
            rows.append((name, "E", lo, None))
        elif np.isinf(hi):
            rows.append((name, "G", lo, None))
        elif np.isinf(lo):
            rows.append((name, "L", hi, None))
        else:
            rows.append((name, "L", hi, hi - lo))
        out.append(f" {rows[-1][1]}  {name}")
    out.append("COLUMNS")
    dense = prob.A.to_dense()
    for j in range(prob.n):
        out.append(f"    C{j}  OBJ  {float(prob.c[j])!r}")
        for i in range(prob.m):
            if dense[i, j] != 0.0:
                out.append(f"    C{j}  R{i}  {float(dense[i, j])!r}")
    out.append("RHS")
    for name, _, rhs, _ in rows:
        if rhs != 0.0:
            out.append(f"    RHS  {name}  {float(rhs)!r}")
    ranged = [(name, rng) for name, _, _, rng in rows if rng is not None]
    if ranged:
        out.append("RANGES")
        for name, rng in ranged:
            out.append(f"    RNG  {name}  {float(rng)!r}")
    out.append("BOUNDS")
    for j in range(prob.n):
        lo, hi = prob.l_var[j], prob.u_var[j]
        if lo == hi:
            out.append(f" FX BND  C{j}  {float(lo)!r}")
            continue
        if np.isinf(lo):
            out.append(f" MI BND  C{j}")
        elif lo != 0.0:
            out.append(f" LO BND  C{j}  {float(lo)!r}")
        if not np.isinf(hi):
            out.append(f" UP BND  C{j}  {float(hi)!r}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def test_round_trip_random_instances():
    rng = np.random.default_rng(123)
    for trial in range(10):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(1, 5))
        style = ("two_sided", "upper", "equality")[trial % 3]
        prob = random_lp(rng, n, m, style=style)
        back = build_problem(parse_mps(io.StringIO(emit_mps(prob))))
        npt.assert_array_equal(back.c, prob.c)
        npt.assert_array_equal(back.A.to_dense(), prob.A.to_dense())
        # two-sided rows rebuild the lower bound as rhs - range, which can
        # differ from the original by one rounding of the subtraction
        npt.assert_allclose(back.l_con, prob.l_con, rtol=1e-15, atol=1e-15)
        npt.assert_array_equal(back.u_con, prob.u_con)
        npt.assert_array_equal(back.l_var, prob.l_var)
        npt.assert_array_equal(back.u_var, prob.u_var)


def test_round_trip_infinite_bounds():
    prob = LpProblem(
        c=[1.0, -2.0],
        A=SparseMatrix.from_dense([[1.0, 0.5], [0.0, 1.0]]),
        l_con=[-np.inf, 1.0],
        u_con=[3.0, 1.0],
        l_var=[-np.inf, 0.5],
        u_var=[np.inf, 4.0],
    )
    back = build_problem(parse_mps(io.StringIO(emit_mps(prob))))
    npt.assert_array_equal(back.l_con, prob.l_con)
    npt.assert_array_equal(back.u_con, prob.u_con)
    npt.assert_array_equal(back.l_var, prob.l_var)
    npt.assert_array_equal(back.u_var, prob.u_var)
