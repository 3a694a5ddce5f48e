"""Manifold files and the ``orthospec`` command line."""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from flint import acb

from .isometry import Isometry, UhpPoint, invert_word
from .rigor import (DEFAULT_BITS, DEFAULT_CAP, ComplexEnclosure, DomainViolation, Enclosure, RigorError,
                    complex_from_decimals, decimal_enclosure, exact_rational, working_precision)


class ParseError(ValueError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line, self.col = line, col


class UnknownLetter(ParseError):
    pass


class BadMatrix(ParseError):
    pass


@dataclass
class ManifoldFile:
    name: str
    generators: dict  # letter -> Isometry (det-1 normalised)
    facepairings: list = field(default_factory=list)
    basepoint: UhpPoint | None = None
    volume: Enclosure | None = None
    volume_text: str | None = None
    notes: list = field(default_factory=list)

    def alphabet(self) -> dict:
        """Generators and their inverses keyed by letter (inverse = uppercase)."""
        out = {}
        for k, g in self.generators.items():
            out[k] = g
            out[k.upper()] = g.inverse().with_word(k.upper())
        return out

    def centred_generators(self) -> dict:
        """Generators conjugated so that the file's basepoint sits at ``(0,0,1)``."""
        if self.basepoint is None:
            return dict(self.generators)
        m = _basepoint_map(self.basepoint)
        mi = m.inverse()
        return {k: (mi @ g @ m).with_word(k) for k, g in self.generators.items()}

    def centred_pairings(self) -> list:
        from .isometry import evaluate_word

        gens = self.centred_generators()
        return [evaluate_word(w, gens) for w in _inverse_closed(self.facepairings)]


def _basepoint_map(p: UhpPoint) -> Isometry:
    # [[sqrt h, zeta/sqrt h], [0, 1/sqrt h]] sends (0,0,1) to (zeta, h)
    s = p.z.ball.sqrt()
    return Isometry(acb(s), p.zeta / s, 0, acb(1 / s))


_NUM = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_TRUNC = re.compile(r"[+-]?(\d+\.\d+)\.\.\.$")
_WORD = re.compile(r"[A-Za-z]+$")


def parse_manifold(path) -> ManifoldFile:
    text = Path(path).read_text(encoding="utf-8")
    return parse_manifold_text(text)


def parse_manifold_text(text: str) -> ManifoldFile:
    name = None
    gens: dict = {}
    words: list[tuple[str, int, int]] = []
    basepoint = None
    volume = None
    volume_text = None
    notes: list[str] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        toks = [(m.group(), m.start() + 1) for m in re.finditer(r"\S+", line)]
        if not toks:
            continue
        key, col = toks[0]
        args = toks[1:]

        def nums(count):
            if len(args) != count:
                raise ParseError(f"'{key}' takes {count} values, got {len(args)}", ln, col)
            for t, c in args:
                if not _NUM.match(t):
                    raise ParseError(f"not a decimal: {t!r}", ln, c)
            return [t for t, _ in args]

        if key == "name":
            if not args:
                raise ParseError("missing name", ln, col)
            name = " ".join(t for t, _ in args)
        elif key == "generator":
            if not args:
                raise ParseError("missing generator letter", ln, col)
            letter, lc = args[0]
            if not re.fullmatch(r"[a-z]", letter):
                raise ParseError(f"generator letter must be one lowercase ASCII letter, got {letter!r}", ln, lc)
            if letter in gens:
                raise ParseError(f"generator {letter!r} declared twice", ln, lc)
            args = args[1:]
            vals = nums(8)
            # printed digits may be truncated rather than rounded: widen once if needed
            for ulps in (Fraction(1, 2), Fraction(1)):
                entries = [complex_from_decimals(vals[2 * i], vals[2 * i + 1], ulps) for i in range(4)]
                g = Isometry(*entries, word=letter)
                det = g.det()
                if det.overlaps(ComplexEnclosure(1)):
                    break
            else:
                raise BadMatrix(f"determinant {complex(det):.6g} is not 1", ln, col)
            if ulps != Fraction(1, 2):
                notes.append(f"generator {letter}: entries read as truncated (radius one unit in the last digit)")
            try:
                gens[letter] = g.normalized().with_word(letter)
            except DomainViolation as exc:
                raise BadMatrix(str(exc), ln, col)
        elif key == "facepairing":
            if len(args) != 1 or not _WORD.match(args[0][0]):
                raise ParseError("facepairing takes one word of letters", ln, col)
            words.append((args[0][0], ln, args[0][1]))
        elif key == "basepoint":
            x, y, z = (decimal_enclosure(t) for t in nums(3))
            if not z.certainly_positive():
                raise ParseError("basepoint height must be positive", ln, args[2][1])
            basepoint = UhpPoint(x, y, z)
        elif key == "volume":
            if len(args) == 1 and _TRUNC.match(args[0][0]):
                v = args[0][0]
            else:
                (v,) = nums(1)
            volume = decimal_enclosure(v)
            volume_text = v
        else:
            raise ParseError(f"unknown keyword {key!r}", ln, col)
    if name is None:
        raise ParseError("missing 'name' line", 1, 1)
    if not gens:
        raise ParseError("no generators declared", 1, 1)
    for w, ln, c in words:
        for i, ch in enumerate(w):
            if ch.lower() not in gens:
                raise UnknownLetter(f"letter {ch!r} is not a declared generator", ln, c + i)
    return ManifoldFile(name, gens, [w for w, _, _ in words], basepoint, volume, volume_text, notes)


def _inverse_closed(words: list[str]) -> list[str]:
    out = list(words)
    for w in words:
        if invert_word(w) not in out:
            out.append(invert_word(w))
    return out


# ---------------------------------------------------------------------------
# output


def fmt(e, k: int) -> tuple[str, bool]:
    """``k``-decimal rounding of the midpoint, and whether the enclosure certifies it."""
    ball = e.ball if hasattr(e, "ball") else e
    text = f"{float(ball.mid()):.{k}f}"
    if text.startswith("-") and float(text) == 0:
        text = text[1:]
    q = exact_rational(text)
    half = Fraction(1, 2 * 10**k)
    lo, hi = Enclosure(q - half).ball, Enclosure(q + half).ball
    ok = bool(ball.lower() >= lo.upper() and ball.upper() <= hi.lower())
    return text, ok


class _Table:
    def __init__(self, header: list[str], k: int):
        self.header, self.k, self.rows = header, k, []

    def add(self, values: list, flags=()):
        cells, flags = [], list(flags)
        for v in values:
            if isinstance(v, (Enclosure,)):
                s, ok = fmt(v, self.k)
                if not ok and "width" not in flags:
                    flags.append("width")
                cells.append(s)
            else:
                cells.append(str(v))
        self.rows.append(cells + [",".join(flags)])

    def text(self) -> str:
        return "\n".join("\t".join(r) for r in [self.header] + self.rows) + "\n"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _domain(args, mf: ManifoldFile):
    from .dirichlet import auto_pairings, build_domain

    gens = mf.centred_generators()
    if args.auto or not mf.facepairings:
        pairings = auto_pairings(list(gens.values()), word_length_cap=args.cap)
    else:
        pairings = mf.centred_pairings()
    return build_domain(pairings)


def _spectrum(D, cutoff, args):
    from .spectrum import length_spectrum

    return length_spectrum(D, cutoff, workers=args.workers)


def _pick(table, spec: str):
    """Geodesic named ``I`` (group index, first class) or ``I.k`` (k-th class of group I)."""
    g, _, k = spec.partition(".")
    try:
        grp = table.groups[int(g)]
        return table.classes[grp[int(k) if k else 0]]
    except (ValueError, IndexError):
        raise SystemExit(f"orthospec: no geodesic {spec!r} below the spectrum cutoff {float(table.cutoff):g}")


def cmd_domain(args, mf):
    D = _domain(args, mf)
    if args.mesh:
        Path(args.mesh).write_text(D.mesh(), encoding="utf-8")
    s, ok = fmt(D.spine_radius, args.decimals)
    print(f"faces\t{len(D.faces)}")
    print(f"vertices\t{len(D.vertices)}")
    print(f"edges\t{len(D.edges)}")
    print(f"spine_radius\t{s}" + ("" if ok else "\twidth"))


def cmd_spectrum(args, mf):
    D = _domain(args, mf)
    T = _spectrum(D, args.cutoff, args)
    tab = _Table(["group", "length_re", "length_im", "multiplicity", "warnings"], args.decimals)
    for k, re_, im_, m, flags in T.rows():
        tab.add([k, re_, im_, m], [f for f in flags.split(",") if f])
    _emit(tab.text(), args.tsv)


def _levels(lines):
    sizes = []
    for o in lines:
        sizes.append(sum(1 for p in lines if p.length.overlaps(o.length)))
    return sizes


def cmd_ortho(args, mf):
    import warnings

    from .ortho import orthospectrum

    D = _domain(args, mf)
    T = _spectrum(D, args.lengths, args)
    f = _pick(T, args.source)
    g = _pick(T, args.target if args.target is not None else args.source)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lines = orthospectrum(f, g, D, args.cutoff)
    tab = _Table(["length_re", "length_im", "src_basing_re", "src_basing_im",
                  "tgt_basing_re", "tgt_basing_im", "multiplicity", "warnings"], args.decimals)
    for o, m in zip(lines, _levels(lines)):
        tab.add([o.length.re, o.length.im, o.source_basing.position.re, o.source_basing.position.im,
                 o.target_basing.position.re, o.target_basing.position.im, m], o.warnings)
    _emit(tab.text(), args.tsv)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def cmd_tube(args, mf):
    from .ortho import tube_radius

    D = _domain(args, mf)
    T = _spectrum(D, args.lengths, args)
    s, ok = fmt(tube_radius(_pick(T, args.geodesic), D), args.decimals)
    print(s + ("" if ok else "\twidth"))


def cmd_cover_report(args, mf):
    from .cover import DEFAULT_MIN_VOLUME, build_report, gather_inputs

    volume = _volume(args.volume) if args.volume else mf.volume
    if volume is None:
        raise SystemExit("orthospec: no volume given and none in the file")
    D = _domain(args, mf)
    T = _spectrum(D, args.cutoff, args)
    inputs = gather_inputs(D, T, volume,
                           min_volume=_volume(args.min_volume) if args.min_volume else DEFAULT_MIN_VOLUME,
                           density=args.density)
    sys.stdout.write(build_report(inputs).text())


def _volume(text: str) -> Enclosure:
    if not (_NUM.match(text) or _TRUNC.match(text)):
        raise SystemExit(f"orthospec: not a decimal volume: {text!r}")
    return decimal_enclosure(text)


def _rational(text: str) -> Fraction:
    try:
        return exact_rational(text)
    except (ArithmeticError, ValueError, TypeError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orthospec", description="Certified length and ortholine spectra.")
    p.add_argument("--bits", type=int, default=DEFAULT_BITS, help="working precision in bits")
    p.add_argument("--precision-cap", type=int, default=DEFAULT_CAP,
                   help="retry undecided runs at doubled precision up to this many bits")
    p.add_argument("--decimals", type=int, default=5, help="decimal places in output")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file")
        sp.add_argument("--auto", action="store_true", help="derive face pairings from the generators")
        sp.add_argument("--cap", type=int, default=12, help="word-length cap for --auto")
        sp.add_argument("--workers", type=int, default=1, help="processes for the element search")
        return sp

    d = common(sub.add_parser("domain", help="Dirichlet domain summary"))
    d.add_argument("--mesh", help="write the domain as an OBJ-style mesh")
    d.set_defaults(func=cmd_domain)

    s = common(sub.add_parser("spectrum", help="length spectrum as TSV"))
    s.add_argument("--cutoff", type=_rational, required=True, help="real length bound")
    s.add_argument("--tsv", help="also write the table to this file")
    s.set_defaults(func=cmd_spectrum)

    o = common(sub.add_parser("ortho", help="ortholine spectrum as TSV"))
    o.add_argument("--cutoff", type=_rational, required=True, help="real length bound for ortholines")
    o.add_argument("--source", required=True, help="group index I or I.k")
    o.add_argument("--target", help="second geodesic (default: the source)")
    o.add_argument("--lengths", type=_rational, default=Fraction(3),
                   help="spectrum cutoff used to index geodesics")
    o.add_argument("--tsv", help="also write the table to this file")
    o.set_defaults(func=cmd_ortho)

    t = common(sub.add_parser("tube", help="tube radius of a geodesic"))
    t.add_argument("--geodesic", required=True, help="group index I or I.k")
    t.add_argument("--lengths", type=_rational, default=Fraction(3), help="spectrum cutoff used to index geodesics")
    t.set_defaults(func=cmd_tube)

    c = common(sub.add_parser("cover-report", help="covering obstruction report"))
    c.add_argument("--volume", help="manifold volume; a trailing '...' marks truncated digits")
    c.add_argument("--min-volume", help="lower bound on the volume of any closed manifold")
    c.add_argument("--density", type=_rational, default=Fraction(91, 100), help="tube packing density bound")
    c.add_argument("--cutoff", type=_rational, required=True, help="length cutoff for the spectra")
    c.set_defaults(func=cmd_cover_report)
    return p


def main(argv=None) -> int:
    from .dirichlet import CapExceeded, NotClosed

    args = build_parser().parse_args(argv)
    try:
        mf = parse_manifold(args.file)
    except (ParseError, OSError, UnicodeDecodeError) as exc:
        print(f"orthospec: {args.file}: {exc}", file=sys.stderr)
        return 2
    for n in mf.notes:
        print(f"note: {n}", file=sys.stderr)
    bits = args.bits
    while True:
        try:
            with working_precision(bits):
                args.func(args, mf)
            return 0
        except (NotClosed, CapExceeded) as exc:
            print(f"orthospec: domain not closed: {exc}", file=sys.stderr)
            return 4
        except RigorError as exc:
            if bits >= args.precision_cap:
                print(f"orthospec: undecidable at {bits} bits: {exc}", file=sys.stderr)
                return 3
            bits = min(2 * bits, args.precision_cap)


if __name__ == "__main__":
    sys.exit(main())
