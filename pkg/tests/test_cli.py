"""File format, output formatting and the command-line surface."""

from fractions import Fraction

import pytest

from orthospec.cli import (BadMatrix, ParseError, UnknownLetter, fmt, main, parse_manifold,
                           parse_manifold_text)
from orthospec.rigor import Enclosure

from conftest import fixture_path

GOOD = """name toy
generator a 2.000000 0 0 0 0 0 0.500000 0
generator b 1.000000 0 1.000000 0 1.000000 0 2.000000 0
"""
ONE = "generator a 1.0000 0 0 0 0 0 1.0000 0\n"


def _run(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


# --- parsing ----------------------------------------------------------------------


def test_printed_n2_trace():
    """[PAPER] the displayed f has trace 0.99999 - 1.00000i."""
    mf = parse_manifold(fixture_path("N2"))
    tr = mf.generators["f"].trace()
    assert tr.re.contains(Fraction(99999, 100000)) and tr.im.contains(-1)
    assert set(mf.generators) == {"f", "w"}


def test_truncated_volume_line():
    """[DERIVED] '3.6638...' is read as [3.6638, 3.6639]."""
    v = parse_manifold(fixture_path("N2")).volume
    assert v.contains(Fraction(36638, 10000)) and v.contains(Fraction(366389, 100000))
    assert not v.contains(Fraction(36637, 10000))


def test_undeclared_letter():
    """[TRIVIAL]"""
    with pytest.raises(UnknownLetter) as exc:
        parse_manifold_text(GOOD + "facepairing aBx\n")
    assert (exc.value.line, exc.value.col) == (4, 15)


def test_bad_determinant():
    """[TRIVIAL] determinant 3 cannot be normalised to the stated entries."""
    with pytest.raises(BadMatrix):
        parse_manifold_text("name t\ngenerator a 2.0000 0 1.0000 0 1.0000 0 2.0000 0\n")


@pytest.mark.parametrize("text,line", [
    (ONE, 1),  # no name
    ("name t\n" + ONE.replace(" a ", " A "), 2),
    ("name t\n" + ONE[:-3] + "\n", 2),
    ("name t\n" + ONE[:-2] + "zero\n", 2),
    ("name t\n" + ONE + ONE, 3),
    ("name t\n" + ONE + "basepoint 0 0 -1\n", 3),
    ("name t\n" + ONE + "colour red\n", 3),
])
def test_parse_errors_carry_position(text, line):
    with pytest.raises(ParseError) as exc:
        parse_manifold_text(text)
    assert exc.value.line == line


def test_comments_and_blank_lines():
    mf = parse_manifold_text("# header\n\n" + GOOD + "facepairing aB  # trailing\n")
    assert mf.name == "toy" and mf.facepairings == ["aB"]


# --- output formatting ---------------------------------------------------------------


def test_fmt_certifies_rounding():
    """[DERIVED] a digit is certified only when the whole enclosure rounds the same way."""
    assert fmt(Enclosure(Fraction(1234567, 10**6), Fraction(1, 10**9)), 5) == ("1.23457", True)
    assert fmt(Enclosure(Fraction(1234565, 10**6), Fraction(1, 10**9)), 5)[1] is False
    assert fmt(Enclosure(Fraction(-1, 10**9)), 5) == ("0.00000", True)


# --- commands ------------------------------------------------------------------------


def test_missing_file_is_parse_error(capsys, tmp_path):
    code, _, err = _run(capsys, "domain", tmp_path / "nope.mfd")
    assert code == 2 and "nope.mfd" in err


def test_malformed_file_exit_code(capsys, tmp_path):
    p = tmp_path / "bad.mfd"
    p.write_text(GOOD + "facepairing az\n")
    code, _, err = _run(capsys, "domain", p)
    assert code == 2 and "line 4" in err


def test_elementary_group_is_not_closed(capsys, tmp_path):
    """[TRIVIAL] a single loxodromic generator has no compact domain: exit 4."""
    p = tmp_path / "cyclic.mfd"
    p.write_text("name cyclic\ngenerator a 2 0 0 0 0 0 0.5 0\n")
    code, _, err = _run(capsys, "domain", p, "--cap", 4)
    assert code == 4 and "not closed" in err


def test_printed_fixture_undecidable_at_cap(capsys):
    """[DERIVED] five printed decimals cannot certify the domain: exit 3, never a wrong answer."""
    code, out, err = _run(capsys, "--precision-cap", 212, "domain", fixture_path("N2"))
    assert code == 3 and out == "" and "undecidable" in err


def test_domain_command(capsys):
    """[PAPER] 24 faces for N2."""
    code, out, _ = _run(capsys, "domain", fixture_path("N2_hp"))
    rows = dict(line.split("\t")[:2] for line in out.splitlines())
    assert code == 0 and rows["faces"] == "24"
    assert rows["spine_radius"] == "1.12229"


def test_spectrum_tsv_deterministic(capsys, tmp_path):
    """[PAPER] the N2 table's leading groups; [DERIVED] bit-identical TSV across runs."""
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    assert _run(capsys, "spectrum", fixture_path("N2_hp"), "--cutoff", "3.18385", "--tsv", a)[0] == 0
    assert _run(capsys, "spectrum", fixture_path("N2_hp"), "--cutoff", "3.18385", "--tsv", b)[0] == 0
    assert a.read_bytes() == b.read_bytes()
    rows = [r.split("\t") for r in a.read_text().splitlines()]
    assert rows[0] == ["group", "length_re", "length_im", "multiplicity", "warnings"]
    lead = sorted((r[1], r[3]) for r in rows[1:5])
    assert lead == [("1.06128", "3"), ("1.06128", "6"), ("1.76275", "3"), ("2.13862", "6")]
    assert sorted(r[2].lstrip("-") for r in rows[1:5]) == ["0.79928", "2.23704", "2.23704", "3.14159"]


def test_tube_command(capsys):
    """[PAPER] orbit-1 tube radius 0.764285..., printed rounded to five places."""
    code, out, _ = _run(capsys, "tube", fixture_path("N2_hp"), "--geodesic", "1")
    assert code == 0 and out.strip() == "0.76429"
    code, out, _ = _run(capsys, "--decimals", "7", "tube", fixture_path("N2_hp"), "--geodesic", "1")
    assert out.strip() == "0.7642855"


def test_ortho_command(capsys):
    """[PAPER] orbit-1 self-ortholines up to 1.6: the shortest pair 1.52857 - 1.14372i."""
    code, out, _ = _run(capsys, "ortho", fixture_path("N2_hp"), "--source", "1", "--cutoff", "1.6")
    rows = [r.split("\t") for r in out.splitlines()]
    assert code == 0 and len(rows) == 3
    for r in rows[1:]:
        assert r[:2] == ["1.52857", "-1.14372"] and r[6] == "2"


def test_cover_report_command(capsys):
    """[PAPER] N2: degree 2 on orbit 1 is the only survivor."""
    code, out, _ = _run(capsys, "cover-report", fixture_path("N2_hp"), "--cutoff", "3.18385")
    assert code == 0
    assert "max cover degree: 3" in out
    surv = [ln for ln in out.splitlines() if ln.endswith("not excluded by these criteria") and ln.startswith("class")]
    assert len(surv) == 3 and all("degree 2" in ln for ln in surv)


def test_bad_cutoff_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", str(fixture_path("N2_hp")), "--cutoff", "three"])
    assert exc.value.code == 2
