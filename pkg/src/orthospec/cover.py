"""Covering obstructions: degree bounds, thick-tube cutoffs and ortholine counting.

Everything here is advisory.  A (class, degree) pair that survives is only
"not excluded by these criteria"; nothing in this module asserts that a
cover exists.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from flint import arb

from .rigor import Enclosure, RigorError, decimal_enclosure, exact_rational

DEFAULT_DENSITY = Fraction(91, 100)
# smallest volume of a closed orientable hyperbolic 3-manifold, 0.9427..., read as truncated
DEFAULT_MIN_VOLUME = decimal_enclosure("0.9427...")
# exact rational just above log 3 (log 3 = 1.09861228866...)
LOG3_UP = Fraction(10986123, 10000000)


class Undecided(RigorError):
    """An enclosure straddles the value a decision depends on."""


class Verdict(enum.Enum):
    EXCLUDED = "excluded"
    NOT_EXCLUDED = "not-excluded"
    UNDECIDED = "undecided"


DEGREE_BOUND = "degree bound"
LENGTH_RATIO = "length ratio"
ORTHOLINE_COUNT = "ortholine count"
INTER_GEODESIC = "inter-geodesic distance"


def _log3() -> arb:
    return arb(3).log()


def _enc(x) -> Enclosure:
    if isinstance(x, Enclosure):
        return x
    q = exact_rational(x)
    return Enclosure(arb(q.numerator) / q.denominator)


def tube_volume(l, r) -> Enclosure:
    """Volume ``pi l sinh^2 r`` of the tube of radius ``r`` about a geodesic of length ``l``."""
    l, r = _enc(l), _enc(r)
    if not l.ball > 0 or r.ball < 0:
        raise ValueError("need l > 0 and r >= 0")
    s = r.ball.sinh()
    return Enclosure(arb.pi() * l.ball * s * s)


def max_cover_degree(vol, min_vol=DEFAULT_MIN_VOLUME) -> int:
    """Largest ``p`` with ``p * min_vol <= vol`` certified."""
    vol, min_vol = _enc(vol), _enc(min_vol)
    if not (vol.ball > 0 and min_vol.ball > 0):
        raise ValueError("volumes must be positive")
    ratio = vol.ball / min_vol.ball
    p = math.floor(float(ratio.mid()))
    if not (p * min_vol.ball <= vol.ball and (p + 1) * min_vol.ball > vol.ball):
        raise Undecided(f"volume ratio {ratio.str(8)} straddles an integer")
    return p


def thick_length_cutoff(vol, density=DEFAULT_DENSITY) -> Enclosure:
    """Length bound for geodesics carrying an embedded tube of radius ``log(3)/2``.

    Solves ``pi l sinh^2(log(3)/2) = density * vol`` for ``l``.
    """
    vol = _enc(vol)
    rho = exact_rational(density)
    if not 0 < rho < 1:
        raise ValueError("density must lie in (0, 1)")
    s = (_log3() / 2).sinh()
    return Enclosure(arb(rho.numerator) / rho.denominator * vol.ball / (arb.pi() * s * s))


# ---------------------------------------------------------------------------
# individual rules


def degree_candidates_by_length(spectrum, shortest, degrees, labels=None) -> dict:
    """For each class and degree ``x``: can ``Re(length)/x`` be a shortest length of the quotient?

    A shortest geodesic of the quotient is no longer than the image of the
    shortest geodesic here, so ``Re(length)/x > shortest`` excludes ``x``.
    Returns ``{label: {x: (Verdict, detail)}}``.
    """
    shortest = _enc(shortest)
    out: dict = {}
    for c in spectrum.classes:
        if labels is not None and c.label not in labels:
            continue
        row = {}
        for x in degrees:
            q = c.length.re.ball / x
            if q > shortest.ball:
                row[x] = (Verdict.EXCLUDED, f"length/{x} exceeds the shortest length {shortest.str(6)}")
            elif q <= shortest.ball:  # equality is allowed
                row[x] = (Verdict.NOT_EXCLUDED, "")
            else:
                row[x] = (Verdict.UNDECIDED, f"length/{x} overlaps the shortest length")
        out[c.label] = row
    return out


def _levels(orthos) -> list[list]:
    """Ortholines grouped by complex length (enclosure overlap), shortest first."""
    groups: list[list] = []
    for o in sorted(orthos, key=lambda o: o.key()):
        for g in groups:
            if g[0].length.overlaps(o.length):
                g.append(o)
                break
        else:
            groups.append([o])
    return groups


def _levels_separated(levels) -> bool:
    for i, g in enumerate(levels):
        for h in levels[i + 1:]:
            if any(a.length.overlaps(b.length) for a in g for b in h):
                return False
    return True


def _shift_invariant(positions: list, lam: arb, shift: arb) -> Verdict:
    """Whether the multiset of real positions (mod ``lam``) is invariant under ``+shift``."""
    verdict = Verdict.NOT_EXCLUDED
    for p in positions:
        hits = 0
        certain = False
        for q in positions:
            d = p + shift - q
            k = math.floor(float((d / lam).mid()) + 0.5)
            d = d - k * lam
            if d.contains(0):
                hits += 1
                if d.rad() < lam / 1000:
                    certain = True
        if hits == 0:
            return Verdict.EXCLUDED
        if not certain:
            verdict = Verdict.UNDECIDED
    return verdict


def ortholine_count_check(self_orthos, degree: int, geodesic) -> tuple:
    """Test each complex-length level of self-ortholines against a degree-``degree`` covering.

    If the geodesic covers a quotient geodesic ``degree`` times and all lifts
    of a quotient ortholine starting on it return to it, a level holds at
    least ``degree`` ortholines and their endpoint positions are invariant
    under translation by ``Re(length)/degree``.  The caller passes only
    complete levels that have no ortholine to another possible preimage
    component.
    """
    if degree < 2:
        raise ValueError("degree must be at least 2")
    levels = _levels(self_orthos)
    if not levels:
        return Verdict.NOT_EXCLUDED, "no complete level"
    if not _levels_separated(levels):
        return Verdict.UNDECIDED, "ortholine levels are not separated"
    lam = geodesic.length.re.ball
    shift = lam / degree
    undecided = []
    for g in levels:
        L = complex(g[0].length)
        tag = f"{L.real:.5f}{L.imag:+.5f}i"
        if len(g) < degree:
            return Verdict.EXCLUDED, f"{len(g)} ortholine(s) of length {tag}, fewer than {degree}"
        pos = []
        for o in g:
            pos += [o.source_basing.position.re.ball, o.target_basing.position.re.ball]
        v = _shift_invariant(pos, lam, shift)
        if v is Verdict.EXCLUDED:
            return Verdict.EXCLUDED, f"endpoints at length {tag} are not spaced by length/{degree}"
        if v is Verdict.UNDECIDED:
            undecided.append(tag)
    if undecided:
        return Verdict.UNDECIDED, "spacing undecided at " + ", ".join(undecided)
    return Verdict.NOT_EXCLUDED, ""


def inter_geodesic_distance_check(cross_orthos, threshold=None) -> tuple:
    """Excluded (the two geodesics cannot both be preimage components) when some
    ortholine between them is certifiably shorter than ``threshold`` (default log 3)."""
    thr = _log3() if threshold is None else _enc(threshold).ball
    undecided = False
    for o in cross_orthos:
        re = o.length.re.ball
        if re < thr:
            return Verdict.EXCLUDED, f"ortholine of real length {o.length.re.str(6)} < log 3"
        if not re >= thr:
            undecided = True
    if undecided:
        return Verdict.UNDECIDED, "an ortholine length overlaps log 3"
    return Verdict.NOT_EXCLUDED, ""


# ---------------------------------------------------------------------------
# report


@dataclass
class CoverInputs:
    volume: Enclosure
    spectrum: object  # SpectrumTable
    tube_radii: dict  # label -> Enclosure (thick classes at least)
    self_orthos: dict = field(default_factory=dict)  # label -> complete list up to ``windows[label]``
    cross_orthos: dict = field(default_factory=dict)  # (label, label) -> list up to ``windows[first]``
    windows: dict = field(default_factory=dict)  # label -> Fraction
    min_volume: Enclosure = DEFAULT_MIN_VOLUME
    density: Fraction = DEFAULT_DENSITY
    notes: list = field(default_factory=list)

    def __post_init__(self):
        if not self.volume.ball > 0:
            raise ValueError("volume must be positive")
        if not 0 < exact_rational(self.density) < 1:
            raise ValueError("density must lie in (0, 1)")


@dataclass
class Finding:
    label: int
    degree: int
    verdict: Verdict
    rule: str
    detail: str = ""


@dataclass
class ObstructionReport:
    max_degree: int
    thick_length_cutoff: Enclosure
    findings: list
    thick: list
    undecided: list
    notes: list

    def survivors(self) -> list[tuple[int, int]]:
        return [(f.label, f.degree) for f in self.findings if f.verdict is Verdict.NOT_EXCLUDED]

    def text(self) -> str:
        lines = [f"max cover degree: {self.max_degree}",
                 f"thick length cutoff: {self.thick_length_cutoff.str(8)}",
                 f"thick classes: {', '.join(map(str, self.thick)) or 'none'}", ""]
        lines.append("class\tdegree\tverdict\trule\tdetail")
        for f in self.findings:
            lines.append(f"{f.label}\t{f.degree}\t{f.verdict.value}\t{f.rule}\t{f.detail}")
        lines.append("")
        for f in self.findings:
            if f.verdict is Verdict.NOT_EXCLUDED:
                lines.append(f"class {f.label}, degree {f.degree}: not excluded by these criteria")
        if self.undecided:
            lines += ["", "undecided:"] + [f"  class {f.label}, degree {f.degree}: {f.detail}"
                                          for f in self.undecided]
        if self.notes:
            lines += ["", "notes:"] + [f"  {n}" for n in self.notes]
        return "\n".join(lines) + "\n"


def thick_classes(inputs: CoverInputs) -> tuple[list[int], list[int]]:
    """Labels with tube radius certifiably above log(3)/2, and those undecided."""
    half = _log3() / 2
    thick, unsure = [], []
    for label, r in sorted(inputs.tube_radii.items()):
        if r.ball > half:
            thick.append(label)
        elif not r.ball < half:
            unsure.append(label)
    return thick, unsure


def _length_groups(classes) -> list[list]:
    groups: list[list] = []
    for c in classes:
        for g in groups:
            if g[0].length.value.overlaps(c.length.value):
                g.append(c)
                break
        else:
            groups.append([c])
    return groups


def _compatible(a, b, x: int, max_degree: int) -> bool:
    """Whether ``b`` could cover the same quotient geodesic as ``a`` (degree ``x``) within the bound."""
    for xp in range(1, max_degree - x + 1):
        if (a.length.re.ball * xp - b.length.re.ball * x).contains(0):
            return True
    return False


def co_candidates(inputs: CoverInputs, label: int, x: int, max_degree: int, thick: list) -> list[int]:
    cls = {c.label: c for c in inputs.spectrum.classes}
    a = cls[label]
    return [m for m in thick if m != label and _compatible(a, cls[m], x, max_degree)]


def build_report(inputs: CoverInputs) -> ObstructionReport:
    """Run every rule over the thick classes and degrees ``1..max_degree``.

    A pair's verdict is the first rule that excludes it; otherwise undecided if
    any rule was undecided, otherwise not excluded.
    """
    spec = inputs.spectrum
    notes = list(inputs.notes)
    maxdeg = max_cover_degree(inputs.volume, inputs.min_volume)
    cutoff = thick_length_cutoff(inputs.volume, inputs.density)
    if exact_rational(spec.cutoff) < float(cutoff.ball.upper()):
        notes.append(f"spectrum examined to {float(spec.cutoff):g}, below the thick cutoff "
                     f"{cutoff.str(7)}; classes of length in between are not covered by this report")
    cls = {c.label: c for c in spec.classes}
    thick, unsure = thick_classes(inputs)
    missing = [c.label for c in spec.classes if c.label not in inputs.tube_radii]
    if missing:
        notes.append(f"no tube radius supplied for classes {missing}; they are not examined")
    for u in unsure:
        notes.append(f"class {u}: tube radius overlaps log(3)/2, treated as thick")
    examined = thick + unsure
    shortest = min((c.length.re for c in spec.classes), key=lambda e: float(e.mid))
    by_len = degree_candidates_by_length(spec, shortest, range(1, maxdeg + 1), set(examined))
    groups = _length_groups(spec.classes)

    findings, undecided = [], []
    for label in examined:
        c = cls[label]
        window = inputs.windows.get(label)
        for x in range(1, maxdeg + 1):
            results: list[tuple[Verdict, str, str]] = []
            v, why = by_len[label][x]
            results.append((v, LENGTH_RATIO, why))

            cands = co_candidates(inputs, label, x, maxdeg, examined)
            remaining, inter_undecided = [], False
            for m in cands:
                key = (label, m)
                if key not in inputs.cross_orthos:
                    remaining.append(m)
                    inter_undecided = True
                    continue
                iv, _ = inter_geodesic_distance_check(inputs.cross_orthos[key])
                if iv is not Verdict.EXCLUDED:
                    remaining.append(m)
                    inter_undecided |= iv is Verdict.UNDECIDED
            single = not remaining
            if x == 1 and single:
                results.append((Verdict.EXCLUDED, INTER_GEODESIC,
                                "no other preimage component possible, so the cover would be trivial"))
            elif inter_undecided:
                results.append((Verdict.UNDECIDED, INTER_GEODESIC, "cross ortholines undecided or missing"))

            if x == 2 and single:
                # a free involution fixes a member of every odd-sized length group; that
                # member double covers a geodesic which must not be shorter than the target
                for g in groups:
                    if len(g) % 2 and g[0].length.re.ball < c.length.re.ball:
                        L = complex(g[0].length)
                        results.append((Verdict.EXCLUDED, LENGTH_RATIO,
                                        f"{len(g)} geodesics of length {L.real:.5f}{L.imag:+.5f}i: one is "
                                        f"fixed by the involution and its image is shorter"))
                        break

            if x >= 2:
                if label not in inputs.self_orthos or window is None:
                    results.append((Verdict.UNDECIDED, ORTHOLINE_COUNT, "self-ortholines not supplied"))
                else:
                    results.append(_count_rule(inputs, label, x, remaining, window))

            f = _decide(label, x, results)
            findings.append(f)
            if f.verdict is Verdict.UNDECIDED:
                undecided.append(f)
    notes.append("classes with tube radius below log(3)/2 cannot contain the preimage of a shortest "
                 "geodesic of a non-exceptional quotient; exceptional quotients are outside this report")
    return ObstructionReport(maxdeg, cutoff, findings, thick, undecided, notes)


def _count_rule(inputs: CoverInputs, label: int, x: int, remaining: list, window) -> tuple:
    cut = _enc(window).ball
    lines = [o for o in inputs.self_orthos[label] if o.length.re.ball <= cut]
    cross = []
    for m in remaining:
        if (label, m) not in inputs.cross_orthos:
            return Verdict.UNDECIDED, ORTHOLINE_COUNT, f"cross ortholines to class {m} missing"
        cross += inputs.cross_orthos[(label, m)]
    levels = [g for g in _levels(lines) if not any(o.length.overlaps(g[0].length) for o in cross)]
    v, why = ortholine_count_check([o for g in levels for o in g], x, inputs.spectrum.classes[
        [c.label for c in inputs.spectrum.classes].index(label)])
    return v, ORTHOLINE_COUNT, why


def _decide(label: int, x: int, results) -> Finding:
    for v, rule, why in results:
        if v is Verdict.EXCLUDED:
            return Finding(label, x, v, rule, why)
    for v, rule, why in results:
        if v is Verdict.UNDECIDED:
            return Finding(label, x, v, rule, why)
    return Finding(label, x, Verdict.NOT_EXCLUDED, "", "not excluded by these criteria")


# ---------------------------------------------------------------------------
# gathering inputs from a domain


def gather_inputs(D, spectrum, volume, window=Fraction(1, 4), min_volume=DEFAULT_MIN_VOLUME,
                  density=DEFAULT_DENSITY, notes=None) -> CoverInputs:
    """Compute tube radii, self- and cross-ortholines needed by :func:`build_report`."""
    from .ortho import orthospectrum, tube_radius

    radii = {}
    half = _log3() / 2
    for c in spectrum.classes:
        lines = orthospectrum(c, c, D, LOG3_UP)
        if lines and min(o.length.re.ball.upper() for o in lines) < 2 * half:
            radii[c.label] = Enclosure(min((o.length.re for o in lines), key=lambda e: float(e.mid)).ball / 2)
        else:
            radii[c.label] = tube_radius(c, D)
    inputs = CoverInputs(_enc(volume), spectrum, radii, min_volume=_enc(min_volume), density=density,
                         notes=list(notes or []))
    thick, unsure = thick_classes(inputs)
    examined = thick + unsure
    maxdeg = max_cover_degree(inputs.volume, inputs.min_volume)
    cls = {c.label: c for c in spectrum.classes}
    for label in examined:
        w = Fraction(math.ceil((2 * float(radii[label].ball.upper()) + float(window)) * 10**6), 10**6)
        inputs.windows[label] = w
        inputs.self_orthos[label] = orthospectrum(cls[label], cls[label], D, w)
        partners = set()
        for x in range(1, maxdeg + 1):
            partners.update(co_candidates(inputs, label, x, maxdeg, examined))
        for m in sorted(partners):
            inputs.cross_orthos[(label, m)] = orthospectrum(cls[label], cls[m], D, max(w, LOG3_UP))
    return inputs
