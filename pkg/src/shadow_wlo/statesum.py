"""Ribbon link state sums: the holonomy side and the shadow side.

Two independent evaluations of the same observable for colored simplicial
ribbon links on a closed oriented surface times a time circle.  The
holonomy side sums an integer weight vector per link complement face,
weighted by sine determinant factors, regularity indicators and winding
phases.  The shadow side colors the faces with level-k labels and
multiplies fusion coefficients, quantum dimensions and gleam phases.
Neither side is normalized; the certified statement is the equality of
their ratios against the empty link.

Links come in two presentations.  The abstract one records only the
nesting forest of the ribbons with a color, a winding number and an
orientation sign per ribbon.  The embedded one realizes every ribbon as a
closed strip of tetragons in the doubled complex, and every derived
quantity (face potentials, region structure, Euler characteristics,
adjacency) is recomputed from the cells and checked against the abstract
data; any disagreement is a structural error, never a warning.
"""

import cmath
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .complex import (build_standard_surface, coboundary, default_sigma0,
                      face_euler_characteristics, hodge_star_signs,
                      project_to_K)
from .discrete import RibbonStep
from .lie import (alcove_decompose, fusion_coefficient, inner, is_regular,
                  lattice_points_in_scaled_box, level_labels, quantum_dim,
                  sine_product, weight_multiplicities)


@dataclass(frozen=True)
class ColoredRibbon:
    """One ribbon: a color, a time winding and an orientation sign.

    orientation is the jump of the ribbon's face potential on the enclosed
    side: +1 when the potential steps up going inward, -1 when it steps
    down.  parent is the index of the enclosing face (0 is the base face,
    j >= 1 the inner face of ribbon j).  Embedded ribbons additionally
    carry their boundary walk as RibbonStep entries and the quarter cells
    covered by the strip.
    """

    color: tuple
    winding: int
    orientation: int = 1
    parent: int = 0
    steps: tuple = ()
    strip_quarters: tuple = ()


@dataclass(frozen=True)
class RibbonLink:
    """A colored link of non-crossing ribbons on a genus-g surface.

    Face j for j >= 1 is the face directly inside ribbon j; face 0 is the
    face of the basepoint.  Embedded links carry the surface complex and
    the time resolution n; abstract links leave both at their defaults.
    """

    genus: int
    ribbons: tuple = ()
    complex: object = None
    n: int = 1


@dataclass(frozen=True)
class StateSumResult:
    """Value and term census of one state sum evaluation."""

    value: complex
    terms_total: int
    terms_skipped_singular: int
    flag: str = None
    histogram: tuple = None
    terms: tuple = None


@dataclass(frozen=True, order=True)
class WloTerm:
    """One surviving holonomy-side term, in exact rational form.

    holonomies lists the face values of B as coordinate tuples, in face
    order; phase is the total winding phase exponent as a multiple of pi,
    reduced mod 2.  Equality of term multisets between the abstract and
    the embedded evaluation of the same link is exact, not approximate.
    """

    alpha0: tuple
    alphas: tuple
    multiplicity: int
    holonomies: tuple
    phase: Fraction


@dataclass(frozen=True)
class TheoremReport:
    """Both normalized ratios and their difference."""

    wlo_link: complex
    wlo_empty: complex
    shadow_link: complex
    shadow_empty: complex
    wlo_ratio: complex
    shadow_ratio: complex
    abs_difference: float
    rel_difference: float


@dataclass(frozen=True)
class Step6Term:
    """Alcove reduction of one holonomy term to shadow data.

    labels are the level-k face colors, signs the Weyl determinants of the
    reducing maps, class_key the coloring the term aggregates into, and
    det_residual / phase_residual the numerical defects of the two
    square-identities checked during the transform.
    """

    labels: tuple
    signs: tuple
    value: complex
    class_key: tuple
    det_residual: float
    phase_residual: float


def face_count(link):
    return len(link.ribbons) + 1


def _parents(link):
    """Per-face parent index, validating the nesting forest."""
    m = len(link.ribbons)
    par = [-1] * (m + 1)
    for pos, rib in enumerate(link.ribbons, start=1):
        p = rib.parent
        if not isinstance(p, int) or not 0 <= p <= m or p == pos:
            raise ValueError(f"ribbon {pos - 1}: invalid parent face {p!r}")
        if rib.orientation not in (1, -1):
            raise ValueError(f"ribbon {pos - 1}: orientation must be +-1")
        if int(rib.winding) != rib.winding:
            raise ValueError(f"ribbon {pos - 1}: winding must be an integer")
        par[pos] = p
    for start in range(1, m + 1):
        seen = set()
        j = start
        while j != 0:
            if j in seen:
                raise ValueError("ribbon nesting relation has a cycle")
            seen.add(j)
            j = par[j]
    return tuple(par)


def face_chi(link):
    """Euler characteristic of each closed link complement face.

    The base face is the genus-g surface minus one disk per child; every
    other face is a disk minus one disk per child.
    """
    par = _parents(link)
    m = len(link.ribbons)
    kids = [0] * (m + 1)
    for j in range(1, m + 1):
        kids[par[j]] += 1
    chi = [1 - kids[j] for j in range(m + 1)]
    chi[0] = 2 - 2 * link.genus - kids[0]
    return tuple(chi)


def face_weights(link):
    """Face potential table u_i(Y_j): rows are ribbons, columns faces.

    The i-th potential takes the ribbon's orientation value on every face
    enclosed by ribbon i and vanishes outside, which normalizes it to zero
    on the base face.
    """
    par = _parents(link)
    m = len(link.ribbons)
    table = []
    for pos, rib in enumerate(link.ribbons, start=1):
        row = [0] * (m + 1)
        for j in range(1, m + 1):
            x = j
            while x != 0:
                if x == pos:
                    row[j] = rib.orientation
                    break
                x = par[x]
        table.append(tuple(row))
    return tuple(table)


def gleam(link, face):
    """Winding-weighted boundary orientation count of one face.

    Each ribbon adds winding*orientation to its inner face and subtracts
    the same from its parent face, so the gleams of any link sum to zero.
    """
    par = _parents(link)
    m = len(link.ribbons)
    if not 0 <= face <= m:
        raise ValueError(f"no face {face} in a link with {m} ribbons")
    out = 0
    for pos, rib in enumerate(link.ribbons, start=1):
        g = rib.winding * rib.orientation
        if face == pos:
            out += g
        if par[pos] == face:
            out -= g
    return out


def fusion_faces(link, i):
    """(Y+, Y-) face indices of ribbon i.

    Y+ is the adjacent face whose induced boundary orientation agrees with
    the ribbon's first loop; with the orientation convention used here that
    is the side on which the face potential jumps up.
    """
    par = _parents(link)
    pos = i + 1
    if link.ribbons[i].orientation == 1:
        return pos, par[pos]
    return par[pos], pos


# ---------------------------------------------------------------------------
# embedded links: arcs, strips, potentials, regions


def _chain_vertices(cx, chain):
    """Ordered vertices visited by a dart chain, with closure validation."""
    if not chain:
        raise ValueError("empty boundary chain")
    verts = []
    for qe, sgn in chain:
        if qe not in cx.qk_edges:
            raise ValueError(f"chain uses unknown edge {qe!r}")
        if sgn not in (1, -1):
            raise ValueError(f"chain sign must be +-1, got {sgn!r}")
        t, h = cx.qk_edges[qe]
        if sgn == -1:
            t, h = h, t
        if verts and verts[-1] != t:
            raise ValueError(f"chain breaks at {qe!r}")
        if not verts:
            verts.append(t)
        verts.append(h)
    if verts[0] != verts[-1]:
        raise ValueError("boundary chain does not close")
    return verts[:-1]


def _ribbon_chains(rib):
    """The two boundary dart chains and the time profile of a ribbon."""
    l_chain = []
    lp_chain = []
    dts = []
    for st in rib.steps:
        if st.dt:
            if st.l_sigma or st.lp_sigma:
                raise ValueError("a step may move in time or in the surface,"
                                 " not both")
            if st.dt not in (1, -1):
                raise ValueError("time steps move one slice at a time")
            if st.l_vertex is None or st.lp_vertex is None:
                raise ValueError("time steps need both loop positions")
            dts.append(st.dt)
        else:
            l_chain.extend(st.l_sigma)
            lp_chain.extend(st.lp_sigma)
    return l_chain, lp_chain, dts


def _arc_data(cx, rib):
    """Vertex and edge sets of both arcs of one embedded ribbon."""
    l_chain, lp_chain, dts = _ribbon_chains(rib)
    lv = _chain_vertices(cx, l_chain)
    lpv = _chain_vertices(cx, lp_chain)
    kinds_l = {qe[0] for qe, _ in l_chain}
    kinds_lp = {qe[0] for qe, _ in lp_chain}
    # the two loops live on opposite halves of the doubled complex
    if not (kinds_l <= {"h1", "h2"} and kinds_lp <= {"d1", "d2"}) and \
       not (kinds_l <= {"d1", "d2"} and kinds_lp <= {"h1", "h2"}):
        raise ValueError("ribbon loops must project to opposite halves of"
                         " the edge double")
    return {
        "l_chain": tuple(l_chain),
        "lp_chain": tuple(lp_chain),
        "l_vertices": frozenset(lv),
        "lp_vertices": frozenset(lpv),
        "l_edges": frozenset(qe for qe, _ in l_chain),
        "lp_edges": frozenset(qe for qe, _ in lp_chain),
        "sigma": lv[0],
        "sigma_prime": lpv[0],
        "dts": tuple(dts),
    }


def _quarter_sides(cx):
    return {qid: frozenset(qe for qe, _ in darts)
            for qid, darts in cx.quarters.items()}


def _strip_quarters(cx, arcs, declared=None):
    """Quarters with one side on each arc; checked against the declaration."""
    sides = _quarter_sides(cx)
    found = frozenset(qid for qid, ss in sides.items()
                      if ss & arcs["l_edges"] and ss & arcs["lp_edges"])
    if declared:
        if frozenset(declared) != found:
            raise ValueError("declared strip quarters disagree with the"
                             " quarters spanned by the ribbon arcs")
    return found


def _components(cx, quarters):
    """Connected components of a quarter set, glued along shared edges."""
    sides = _quarter_sides(cx)
    parent = {qid: qid for qid in quarters}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    by_edge = {}
    for qid in quarters:
        for qe in sides[qid]:
            by_edge.setdefault(qe, []).append(qid)
    for group in by_edge.values():
        for other in group[1:]:
            ra, rb = find(group[0]), find(other)
            if ra != rb:
                parent[ra] = rb
    comps = {}
    for qid in quarters:
        comps.setdefault(find(qid), set()).add(qid)
    return [frozenset(c) for c in comps.values()]


def _star_projected_differential(cx, f):
    """Apply the marked-complex star to the projected coboundary of f.

    Returns (primal, dual) coefficient dicts over the base edges.  This is
    the holonomy-side momentum map whose value on a valid ribbon potential
    is the half-sum chain of the two boundary loops.
    """
    x, y = project_to_K(cx, coboundary(cx, f))
    s1 = hodge_star_signs["K1"]
    s2 = hodge_star_signs["K2"]
    primal = {e: s2 * y[e] for e in cx.edges}
    dual = {e: s1 * x[e] for e in cx.edges}
    return primal, dual


def _half_sum_chain(cx, arcs):
    """Projected half-sum of the two boundary loops, by base edge and side."""
    quarter = Fraction(1, 4)
    primal = {e: Fraction(0) for e in cx.edges}
    dual = {e: Fraction(0) for e in cx.edges}
    for chain in (arcs["l_chain"], arcs["lp_chain"]):
        for (kind, e), sgn in chain:
            if kind in ("h1", "h2"):
                primal[e] += quarter * sgn
            else:
                dual[e] += quarter * sgn
    return primal, dual


def _ribbon_potential(cx, arcs, strip):
    """Unit-jump potential of one ribbon, with its derived jump sign.

    The potential is constant on each side of the strip, affine across it,
    and solves the defining equation: star of the projected differential
    equals the half-sum boundary chain.  Both unit jumps are tried; exactly
    one satisfies the equation, and that sign is the ribbon orientation the
    embedding realizes.
    """
    rest = [qid for qid in cx.quarters if qid not in strip]
    comps = _components(cx, rest)
    if len(comps) != 2:
        raise ValueError(f"ribbon strip complement has {len(comps)}"
                         " components, expected 2: the ribbon is not an"
                         " embedded annulus with two sides")
    sides = _quarter_sides(cx)

    def closure_vertices(comp):
        out = set()
        for qid in comp:
            out.update(cx.quarter_corners[qid])
        return out

    side_l = side_lp = None
    for comp in comps:
        edges = set()
        for qid in comp:
            edges |= sides[qid]
        if edges & arcs["l_edges"]:
            side_l = comp
        if edges & arcs["lp_edges"]:
            side_lp = comp
    if side_l is None or side_lp is None or side_l is side_lp:
        raise ValueError("ribbon arcs do not separate the two strip sides")

    target = _half_sum_chain(cx, arcs)
    for jump in (1, -1):
        f = {}
        for v in closure_vertices(side_lp):
            f[v] = Fraction(0)
        for v in closure_vertices(side_l):
            f[v] = Fraction(jump)
        if set(f) != set(cx.qk_vertices):
            raise ValueError("strip interior contains vertices off the"
                             " ribbon arcs")
        if _star_projected_differential(cx, f) == target:
            df = coboundary(cx, f)
            transverse = set()
            for qid in strip:
                for qe in sides[qid]:
                    if qe not in arcs["l_edges"] and \
                       qe not in arcs["lp_edges"]:
                        transverse.add(qe)
            support = {qe for qe, val in df.items() if val}
            # unit jumps exactly on the strip crossing edges
            if support != transverse:
                raise ValueError("potential differential is not supported"
                                 " on the strip crossing edges")
            if any(abs(df[qe]) != 1 for qe in support):
                raise ValueError("potential jump is not a unit on some"
                                 " strip crossing edge")
            for qid, corners in sorted(cx.quarter_corners.items()):
                v, m_in, m_out, c = corners
                if f[v] + f[c] != f[m_in] + f[m_out]:
                    raise ValueError(f"potential is not affine on quarter"
                                     f" {qid!r}")
            return f, jump
    raise ValueError("no unit-jump potential satisfies the defining"
                     " equation for this ribbon")


def build_ribbon_potential(cx, ribbon, base=None):
    """Face potential of one embedded ribbon, normalized at the basepoint.

    Constructs the locally constant unit-jump potential of the ribbon's
    strip, verifies the defining equation against the half-sum boundary
    chain, checks tetragon affinity and the unit edge census, and shifts
    the result to vanish at base (the first admissible vertex off the
    ribbon when not given).  Returns a dict over the doubled-complex
    vertices with values in {0, +-1} before the shift; after the shift the
    two sides differ by the ribbon's realized jump sign.
    """
    arcs = _arc_data(cx, ribbon)
    strip = _strip_quarters(cx, arcs, ribbon.strip_quarters)
    if not strip:
        raise ValueError("ribbon has no strip quarters: the arcs do not"
                         " bound a tetragon strip")
    f, _ = _ribbon_potential(cx, arcs, strip)
    if base is None:
        base = default_sigma0(cx, excluded=arcs["l_vertices"]
                              | arcs["lp_vertices"])
    if base not in f:
        raise ValueError(f"basepoint {base!r} is not a vertex")
    shift = f[base]
    return {v: val - shift for v, val in f.items()}


class _EmbeddedFaces:
    """Derived face structure of an embedded link.

    Carries the per-ribbon potentials, the strip complement regions
    matched one-to-one against the abstract faces, the census Euler
    characteristics, and the two marked faces of every ribbon.  All checks
    that compare the derived data with the abstract link data raise on the
    first disagreement.
    """

    def __init__(self, link):
        cx = link.complex
        if cx is None:
            raise ValueError("link carries no surface complex")
        if link.n < 2:
            raise ValueError("embedded links need at least two time slices")
        if cx.genus != link.genus:
            raise ValueError(f"link genus {link.genus} disagrees with the"
                             f" complex genus {cx.genus}")
        m = len(link.ribbons)
        self.cx = cx
        self.arcs = []
        self.strips = []
        for pos, rib in enumerate(link.ribbons):
            if not rib.steps:
                raise ValueError(f"ribbon {pos} has no embedding steps")
            arcs = _arc_data(cx, rib)
            if sum(arcs["dts"]) != rib.winding * link.n:
                raise ValueError(f"ribbon {pos}: time profile winds"
                                 f" {sum(arcs['dts'])}/{link.n}, declared"
                                 f" winding is {rib.winding}")
            self.arcs.append(arcs)
            self.strips.append(_strip_quarters(cx, arcs, rib.strip_quarters))

        self._check_disjointness()
        self._check_strip_tetragons()

        occupied = set()
        for arcs in self.arcs:
            occupied |= arcs["l_vertices"] | arcs["lp_vertices"]
        self.sigma0 = default_sigma0(cx, excluded=occupied)

        self.potentials = []
        self.jumps = []
        for pos, rib in enumerate(link.ribbons):
            f, jump = _ribbon_potential(cx, self.arcs[pos], self.strips[pos])
            shift = f[self.sigma0]
            if shift not in (0, jump):
                raise ValueError(f"ribbon {pos}: basepoint value {shift}"
                                 " is off both strip sides")
            self.potentials.append({v: val - shift for v, val in f.items()})
            # after normalizing at the basepoint the nonzero side is the
            # enclosed one, whichever loop the embedding put there
            inside = jump if shift == 0 else -jump
            self.jumps.append(inside)
            if inside != rib.orientation:
                raise ValueError(f"ribbon {pos}: embedded jump sign"
                                 f" {inside} disagrees with declared"
                                 f" orientation {rib.orientation}")

        all_strips = set()
        for strip in self.strips:
            all_strips |= strip
        regions = _components(cx, [qid for qid in cx.quarters
                                   if qid not in all_strips])
        if len(regions) != m + 1:
            raise ValueError(f"strip complement has {len(regions)} regions"
                             f" for {m} ribbons, expected {m + 1}")

        table = face_weights(link)
        want = {}
        for j in range(m + 1):
            vec = tuple(table[i][j] for i in range(m))
            if vec in want:
                raise ValueError("abstract face weight vectors are not"
                                 " distinct")
            want[vec] = j

        ordered = [None] * (m + 1)
        for comp in regions:
            rep = min(v for qid in comp for v in cx.quarter_corners[qid])
            vec = tuple(f[rep] for f in self.potentials)
            j = want.get(vec)
            if j is None or ordered[j] is not None:
                raise ValueError(f"region weight vector {vec} does not"
                                 " match the abstract nesting forest")
            ordered[j] = comp
        self.regions = tuple(ordered)

        census = face_euler_characteristics(
            cx, {j: set(comp) for j, comp in enumerate(self.regions)})
        self.chi = tuple(census[j] for j in range(m + 1))
        abstract = face_chi(link)
        if self.chi != abstract:
            raise ValueError(f"face Euler characteristics {self.chi}"
                             f" disagree with the abstract values"
                             f" {abstract}")

        par = _parents(link)
        self.face_vectors = tuple(
            tuple(table[i][j] for i in range(m)) for j in range(m + 1))
        self.marked = []
        for pos in range(m):
            sig = self.arcs[pos]["sigma"]
            sigp = self.arcs[pos]["sigma_prime"]
            vec_l = tuple(f[sig] for f in self.potentials)
            vec_lp = tuple(f[sigp] for f in self.potentials)
            l_face = want.get(vec_l)
            lp_face = want.get(vec_lp)
            if l_face is None or lp_face is None:
                raise ValueError(f"ribbon {pos}: loop basepoints do not"
                                 " evaluate to face potential vectors")
            if {l_face, lp_face} != {pos + 1, par[pos + 1]}:
                raise ValueError(f"ribbon {pos}: adjacent faces"
                                 f" {{{l_face}, {lp_face}}} disagree with"
                                 " the nesting forest")
            self.marked.append((l_face, lp_face))

    def _check_disjointness(self):
        closures = []
        for arcs in self.arcs:
            closures.append(("l", arcs["l_vertices"], arcs["l_edges"]))
            closures.append(("lp", arcs["lp_vertices"], arcs["lp_edges"]))
        for a in range(len(closures)):
            for b in range(a + 1, len(closures)):
                _, va, ea = closures[a]
                _, vb, eb = closures[b]
                if va & vb or ea & eb:
                    raise ValueError("ribbon boundary arcs intersect: the"
                                     " link is not non-crossing")
        for a in range(len(self.strips)):
            for b in range(a + 1, len(self.strips)):
                if self.strips[a] & self.strips[b]:
                    raise ValueError("ribbon strips overlap")

    def _check_strip_tetragons(self):
        sides = _quarter_sides(self.cx)
        for pos, strip in enumerate(self.strips):
            arcs = self.arcs[pos]
            arc_verts = arcs["l_vertices"] | arcs["lp_vertices"]
            for qid in strip:
                on_l = len(sides[qid] & arcs["l_edges"])
                on_lp = len(sides[qid] & arcs["lp_edges"])
                if on_l != 1 or on_lp != 1:
                    raise ValueError(
                        f"strip quarter {qid!r} of ribbon {pos} has"
                        f" {on_l} sides on the first loop and {on_lp} on"
                        " the second, expected exactly one each")
                for v in self.cx.quarter_corners[qid]:
                    if v not in arc_verts:
                        raise ValueError(
                            f"strip of ribbon {pos} contains the interior"
                            f" vertex {v!r}")


def validate_link(link):
    """Structural validation of a link presentation.

    Abstract links get their nesting forest checked; embedded links
    additionally get the full battery: loop closure in space and time,
    sidedness of the two loops, arc and strip disjointness, strip tetragon
    counts, absence of interior strip vertices, separation by each strip,
    winding consistency, and exact agreement of the derived potentials,
    regions, Euler characteristics and marked faces with the abstract
    data.
    """
    _parents(link)
    if link.complex is not None:
        _EmbeddedFaces(link)


# ---------------------------------------------------------------------------
# the holonomy side


class _Accumulator:
    """Compensated complex accumulator with a deterministic merge order."""

    __slots__ = ("re", "im", "cre", "cim")

    def __init__(self):
        self.re = self.im = self.cre = self.cim = 0.0

    def add(self, z):
        for attr_s, attr_c, x in (("re", "cre", z.real),
                                  ("im", "cim", z.imag)):
            s = getattr(self, attr_s)
            t = s + x
            if abs(s) >= abs(x):
                c = (s - t) + x
            else:
                c = (x - t) + s
            setattr(self, attr_s, t)
            setattr(self, attr_c, getattr(self, attr_c) + c)

    def merge(self, other):
        self.add(complex(other.re, other.im))
        self.add(complex(other.cre, other.cim))

    def value(self):
        return complex(self.re + self.cre, self.im + self.cim)


def _phase(q):
    """exp(i pi q) for rational q, evaluated at the reduced argument."""
    q = q % 2
    return complex(math.cos(math.pi * float(q)), math.sin(math.pi * float(q)))


def _combo_table(lie, k, link, face_vecs):
    """Precomputed per-combination data for the holonomy sum.

    One entry per choice of weights from the ribbon color supports: the
    total multiplicity, the per-face shift vector sum u_i(Y) alpha_i, the
    winding-weighted weight sum for the alpha0-dependent phase part, and
    the alpha0-independent phase part.
    """
    m = len(link.ribbons)
    r = lie.rank
    supports = []
    for rib in link.ribbons:
        table = weight_multiplicities(lie, rib.color)
        supports.append(sorted(table.items()))
    marked = [fusion_faces(link, i) for i in range(m)]
    combos = []
    for choice in product(*supports):
        alphas = tuple(w for w, _ in choice)
        mult = 1
        for _, cnt in choice:
            mult *= cnt
        shifts = []
        for vec in face_vecs:
            shifts.append(tuple(
                sum(vec[i] * alphas[i][a] for i in range(m))
                for a in range(r)))
        wsum = tuple(
            sum(link.ribbons[i].winding * alphas[i][a] for i in range(m))
            for a in range(r))
        q0 = Fraction(0)
        for i in range(m):
            jp, jz = marked[i]
            both = tuple(shifts[jp][a] + shifts[jz][a] for a in range(r))
            q0 += link.ribbons[i].winding * Fraction(inner(lie, alphas[i],
                                                           both))
        combos.append((alphas, mult, tuple(shifts), wsum, q0))
    return combos


def _eval_alpha0(lie, k, chi, combos, alpha0, record):
    """All surviving terms at one holonomy lattice point."""
    r = lie.rank
    acc = _Accumulator()
    skipped = 0
    terms = [] if record else None
    for alphas, mult, shifts, wsum, q0 in combos:
        faces = []
        regular = True
        for shift in shifts:
            b = tuple(Fraction(alpha0[a] + shift[a], k) for a in range(r))
            if not is_regular(lie, b):
                regular = False
                break
            faces.append(b)
        if not regular:
            skipped += 1
            continue
        det = 1.0
        for b, x in zip(faces, chi):
            det *= sine_product(lie, b) ** x
        q = (2 * Fraction(inner(lie, wsum, alpha0)) + q0) / k
        acc.add(mult * det * _phase(q))
        if record:
            terms.append(WloTerm(tuple(alpha0), alphas, mult,
                                 tuple(faces), q % 2))
    return acc, skipped, terms


def wlo_unnormalized(lie, k, link, mode="abstract", threads=1,
                     record_terms=False):
    """Unnormalized holonomy-side state sum of a colored ribbon link.

    Sums over one representative per coset of the k-scaled coroot lattice
    for the base face and over the full color weight support of every
    ribbon, with sine determinant factors per face and winding phases per
    ribbon; summands whose face holonomy meets an affine wall contribute
    zero and are counted separately.  mode "abstract" reads the nesting
    forest; mode "embedded" recomputes the face structure from the cells
    of the carried complex and fails loudly on any disagreement with the
    forest, then evaluates the identical term set.  Only ratios of values
    returned by this function are meaningful.
    """
    k = int(k)
    if k < 1:
        raise ValueError("level must be a positive integer")
    if mode not in ("abstract", "embedded"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "embedded":
        emb = _EmbeddedFaces(link)
        face_vecs = emb.face_vectors
        chi = emb.chi
    else:
        _parents(link)
        m = len(link.ribbons)
        table = face_weights(link)
        face_vecs = tuple(tuple(table[i][j] for i in range(m))
                          for j in range(m + 1))
        chi = face_chi(link)
    if k < lie.dual_coxeter:
        return StateSumResult(0j, 0, 0, flag="empty label set")

    combos = _combo_table(lie, k, link, face_vecs)
    alpha0s = lattice_points_in_scaled_box(lie, k)
    total = len(alpha0s) * len(combos)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(
                lambda a0: _eval_alpha0(lie, k, chi, combos, a0,
                                        record_terms), alpha0s))
    else:
        parts = [_eval_alpha0(lie, k, chi, combos, a0, record_terms)
                 for a0 in alpha0s]

    acc = _Accumulator()
    skipped = 0
    terms = [] if record_terms else None
    # reduction in lattice order, independent of the thread count
    for part_acc, part_skipped, part_terms in parts:
        acc.merge(part_acc)
        skipped += part_skipped
        if record_terms:
            terms.extend(part_terms)
    return StateSumResult(acc.value(), total, skipped,
                          terms=tuple(terms) if record_terms else None)


# ---------------------------------------------------------------------------
# the shadow side


def _label_phase_exponents(lie, k, labels):
    exps = {}
    two_rho = tuple(2 * c for c in lie.rho)
    for lam in labels:
        shifted = tuple(l + t for l, t in zip(lam, two_rho))
        exps[lam] = Fraction(inner(lie, lam, shifted)) / k
    return exps


def _shadow_chunk(lie, k, link, labels, first, chi, gl, marked, dims, exps,
                  histogram):
    m = len(link.ribbons)
    acc = _Accumulator()
    hist = [dict() for _ in range(m + 1)] if histogram else None
    for rest in product(labels, repeat=m):
        phi = (first,) + rest
        nfac = 1
        for i in range(m):
            jp, jn = marked[i]
            nfac *= fusion_coefficient(lie, k, link.ribbons[i].color,
                                       phi[jp], phi[jn])
            if nfac == 0:
                break
        if nfac == 0:
            continue
        val = float(nfac)
        q = Fraction(0)
        for j in range(m + 1):
            val *= dims[phi[j]] ** chi[j]
            if gl[j]:
                q += gl[j] * exps[phi[j]]
        acc.add(val * _phase(q))
        if histogram:
            for j in range(m + 1):
                hist[j][phi[j]] = hist[j].get(phi[j], 0) + 1
    return acc, hist


def shadow_invariant(lie, k, link, threads=1, histogram=False):
    """Shadow state sum of a colored ribbon link at level k.

    Sums over all level-k colorings of the link complement faces the
    product of one fusion coefficient per ribbon, quantum dimensions to
    the face Euler characteristics, and gleam phases.  The empty label
    set below the dual Coxeter number gives an empty sum, flagged as
    such.  Exact in the number of terms: every coloring is visited.
    """
    k = int(k)
    if k < 1:
        raise ValueError("level must be a positive integer")
    _parents(link)
    m = len(link.ribbons)
    labels = level_labels(lie, k)
    if not labels:
        return StateSumResult(0j, 0, 0, flag="empty label set")
    chi = face_chi(link)
    gl = tuple(gleam(link, j) for j in range(m + 1))
    marked = [fusion_faces(link, i) for i in range(m)]
    dims = {lam: quantum_dim(lie, k, lam) for lam in labels}
    exps = _label_phase_exponents(lie, k, labels)

    work = [(lie, k, link, labels, first, chi, gl, marked, dims, exps,
             histogram) for first in labels]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda args: _shadow_chunk(*args), work))
    else:
        parts = [_shadow_chunk(*args) for args in work]

    acc = _Accumulator()
    hist = [dict() for _ in range(m + 1)] if histogram else None
    for part_acc, part_hist in parts:
        acc.merge(part_acc)
        if histogram:
            for j in range(m + 1):
                for lam, cnt in part_hist[j].items():
                    hist[j][lam] = hist[j].get(lam, 0) + cnt
    out_hist = tuple(dict(sorted(h.items())) for h in hist) if histogram \
        else None
    return StateSumResult(acc.value(), len(labels) ** (m + 1), 0,
                          histogram=out_hist)


def compare_theorem(lie, k, link, mode="abstract", threads=1):
    """Both normalized ratios of a link against the empty link.

    Evaluates the holonomy sum and the shadow sum for the link and for the
    empty link of the same genus, and reports the two ratios with their
    absolute and relative difference.  Below the dual Coxeter number both
    sides have an empty label set and no ratio exists; the empty-link
    normalization vanishing at an admissible level is likewise an error.
    """
    k = int(k)
    if k < lie.dual_coxeter:
        raise ValueError(f"level {k} is below the dual Coxeter number"
                         f" {lie.dual_coxeter}: the label set is empty and"
                         " the normalized observable is undefined")
    empty = RibbonLink(genus=link.genus)
    wlo_link = wlo_unnormalized(lie, k, link, mode=mode, threads=threads)
    wlo_empty = wlo_unnormalized(lie, k, empty, threads=threads)
    shadow_link = shadow_invariant(lie, k, link, threads=threads)
    shadow_empty = shadow_invariant(lie, k, empty, threads=threads)
    if wlo_empty.value == 0:
        raise ValueError("empty-link holonomy normalization vanishes at an"
                         " admissible level")
    if shadow_empty.value == 0:
        raise ValueError("empty-link shadow normalization vanishes at an"
                         " admissible level")
    wr = wlo_link.value / wlo_empty.value
    sr = shadow_link.value / shadow_empty.value
    diff = abs(wr - sr)
    rel = diff / abs(sr) if abs(sr) > 1e-12 else diff
    return TheoremReport(wlo_link.value, wlo_empty.value, shadow_link.value,
                         shadow_empty.value, wr, sr, diff, rel)


# ---------------------------------------------------------------------------
# the transform from holonomy terms to shadow data


def step6_transform(lie, k, link, term, tol=1e-10):
    """Alcove reduction of one surviving holonomy term.

    Scales each face holonomy to the affine Weyl chamber structure, reads
    off the level-k label and the sign of the reducing map, and verifies
    the two identities that drive the passage to the shadow sum: the sine
    determinant of each face equals the squared quantum dimension of its
    label times a face-independent constant, and the total winding phase
    equals the gleam phase of the labels exactly.  Any violation raises
    with the offending term in the message.
    """
    k = int(k)
    chi = face_chi(link)
    gl = tuple(gleam(link, j) for j in range(len(chi)))
    const = 1.0
    for alpha in lie.positive_roots:
        const *= 4.0 * math.sin(math.pi * float(inner(lie, lie.rho,
                                                      alpha)) / k) ** 2
    labels = []
    signs = []
    det_residual = 0.0
    for j, b in enumerate(term.holonomies):
        beta = tuple(c * k for c in b)
        lam, sign, _ = alcove_decompose(lie, k, beta)
        if sign == 0:
            raise ValueError(f"term {term.alpha0}: face {j} holonomy lies"
                             " on an affine wall")
        labels.append(lam)
        signs.append(sign)
        det = sine_product(lie, b) ** 2
        dimsq = quantum_dim(lie, k, lam) ** 2 * const
        res = abs(det / dimsq - 1.0)
        det_residual = max(det_residual, res)
        if res > tol:
            raise ValueError(f"term {term.alpha0}: face {j} determinant"
                             f" misses the squared dimension by {res:.3e}")
    exps = _label_phase_exponents(lie, k, sorted(set(labels)))
    q = Fraction(0)
    for j, lam in enumerate(labels):
        q += gl[j] * exps[lam]
    phase_residual = abs(_phase(q) - _phase(term.phase))
    if phase_residual > tol:
        raise ValueError(f"term {term.alpha0}: winding phase disagrees"
                         f" with the gleam phase by {phase_residual:.3e}")
    det = 1.0
    for b, x in zip(term.holonomies, chi):
        det *= sine_product(lie, b) ** x
    value = term.multiplicity * det * _phase(term.phase)
    return Step6Term(tuple(labels), tuple(signs), value, tuple(labels),
                     det_residual, phase_residual)


def step6_aggregate(lie, k, link, tol=1e-10):
    """Holonomy terms grouped by their reduced face coloring.

    Runs the transform over every surviving term of the link and sums the
    term values per coloring class.  Together with the per-class shadow
    summands this exhibits the state sum identity class by class.
    """
    res = wlo_unnormalized(lie, k, link, record_terms=True)
    out = {}
    for term in res.terms:
        st = step6_transform(lie, k, link, term, tol=tol)
        acc = out.setdefault(st.class_key, _Accumulator())
        acc.add(st.value)
    return {key: acc.value() for key, acc in sorted(out.items())}


def shadow_terms(lie, k, link):
    """Per-coloring summands of the shadow sum, as a dict."""
    k = int(k)
    m = len(link.ribbons)
    labels = level_labels(lie, k)
    chi = face_chi(link)
    gl = tuple(gleam(link, j) for j in range(m + 1))
    marked = [fusion_faces(link, i) for i in range(m)]
    dims = {lam: quantum_dim(lie, k, lam) for lam in labels}
    exps = _label_phase_exponents(lie, k, labels)
    out = {}
    for phi in product(labels, repeat=m + 1):
        nfac = 1
        for i in range(m):
            jp, jn = marked[i]
            nfac *= fusion_coefficient(lie, k, link.ribbons[i].color,
                                       phi[jp], phi[jn])
        val = float(nfac)
        q = Fraction(0)
        for j in range(m + 1):
            val *= dims[phi[j]] ** chi[j]
            q += gl[j] * exps[phi[j]]
        out[phi] = val * _phase(q)
    return out


# ---------------------------------------------------------------------------
# standard embeddings and the shipped corpus


def _ring_loop_chains(tag, ring, reverse):
    """Boundary dart chains of the standard ring ribbon.

    The first loop walks the ring sides on the vertex half of the doubled
    complex, the second walks the adjacent trapezoid centers on the face
    half, both in the rotation direction fixed by reverse.
    """
    l_chain = []
    lp_chain = []
    for i in range(4):
        l_chain.append((("h1", ("rs", tag, ring, i)), 1))
        l_chain.append((("h2", ("rs", tag, ring, i)), 1))
        e = ("diag", tag, ring, (i + 1) % 4)
        lp_chain.append((("d1", e), 1))
        lp_chain.append((("d2", e), 1))
    if reverse:
        l_chain = [(qe, -s) for qe, s in reversed(l_chain)]
        lp_chain = [(qe, -s) for qe, s in reversed(lp_chain)]
    return l_chain, lp_chain


def embed_link(link, refinement=None, n=2):
    """Standard embedding of an abstract chain-nested link.

    Realizes ribbon i as the i-th concentric ring of a carved site on the
    standard genus-g surface, with the two boundary loops on opposite
    halves of the edge double and the declared winding walked one time
    slice at a time.  Only a single chain of nested ribbons is supported;
    the loop rotation direction per ribbon is chosen so that the realized
    jump sign equals the declared orientation.
    """
    if link.genus not in (0, 1):
        raise ValueError("standard embeddings cover genus 0 and 1 only")
    m = len(link.ribbons)
    for pos, rib in enumerate(link.ribbons, start=1):
        if rib.parent != pos - 1:
            raise ValueError("standard embeddings support a single chain"
                             " of nested ribbons")
    if refinement is None:
        refinement = 1 if link.genus == 0 else 2
    cx = build_standard_surface(link.genus, refinement,
                                sites=(m,) if m else ())
    ribbons = []
    for pos, rib in enumerate(link.ribbons, start=1):
        strip = tuple(sorted(
            (("trap", 0, pos, i), p) for i in range(4) for p in (1, 2)))
        chosen = None
        for reverse in (False, True):
            l_chain, lp_chain = _ring_loop_chains(0, pos, reverse)
            steps = [RibbonStep(t=0, l_sigma=tuple(l_chain),
                                lp_sigma=tuple(lp_chain))]
            probe = ColoredRibbon(rib.color, rib.winding, rib.orientation,
                                  rib.parent, tuple(steps), strip)
            arcs = _arc_data(cx, probe)
            _, jump = _ribbon_potential(cx, arcs,
                                        _strip_quarters(cx, arcs, strip))
            if jump == rib.orientation:
                chosen = (l_chain, lp_chain, arcs)
                break
        if chosen is None:
            raise ValueError(f"ribbon {pos - 1}: no rotation direction"
                             " realizes the declared orientation")
        l_chain, lp_chain, arcs = chosen
        steps = [RibbonStep(t=0, l_sigma=tuple(l_chain),
                            lp_sigma=tuple(lp_chain))]
        direction = 1 if rib.winding >= 0 else -1
        for j in range(n * abs(rib.winding)):
            steps.append(RibbonStep(t=(j * direction) % n, dt=direction,
                                    l_vertex=arcs["sigma"],
                                    lp_vertex=arcs["sigma_prime"]))
        ribbons.append(ColoredRibbon(rib.color, rib.winding,
                                     rib.orientation, rib.parent,
                                     tuple(steps), strip))
    out = RibbonLink(link.genus, tuple(ribbons), complex=cx, n=n)
    validate_link(out)
    return out


@dataclass(frozen=True)
class CorpusEntry:
    """One shipped test link: name, algebra series, level, both forms."""

    name: str
    series: str
    level: int
    link: RibbonLink
    embedded: RibbonLink


def _chain(genus, specs):
    ribbons = tuple(
        ColoredRibbon(tuple(color), winding, orientation, parent)
        for parent, (color, winding, orientation)
        in enumerate(specs))
    return RibbonLink(genus, ribbons)


_CORPUS_SPECS = (
    ("a1_g0_empty_k2", "A1", 2, 0, ()),
    ("a1_g0_empty_k4", "A1", 4, 0, ()),
    ("a1_g0_empty_k6", "A1", 6, 0, ()),
    ("a1_g0_one_k4", "A1", 4, 0, (((1,), 1, 1),)),
    ("a1_g0_one_heavy_k3", "A1", 3, 0, (((2,), -2, -1),)),
    ("a1_g0_one_top_k6", "A1", 6, 0, (((3,), 2, 1),)),
    ("a1_g0_one_flat_k4", "A1", 4, 0, (((2,), 0, 1),)),
    ("a1_g0_two_k5", "A1", 5, 0, (((1,), 1, 1), ((2,), -1, -1))),
    ("a1_g0_three_k4", "A1", 4, 0,
     (((1,), 2, 1), ((1,), -2, -1), ((2,), 1, 1))),
    ("a1_g0_three_k6", "A1", 6, 0,
     (((2,), 1, -1), ((1,), 1, 1), ((3,), -1, 1))),
    ("a2_g0_one_k4", "A2", 4, 0, (((1, 0), 1, 1),)),
    ("a2_g0_one_low_k3", "A2", 3, 0, (((0, 1), 1, 1),)),
    ("a2_g0_one_adj_k5", "A2", 5, 0, (((1, 1), -2, -1),)),
    ("a2_g0_two_k6", "A2", 6, 0, (((1, 0), 2, 1), ((0, 2), 1, -1))),
    ("a2_g0_three_k7", "A2", 7, 0,
     (((1, 0), 1, 1), ((0, 1), -1, -1), ((2, 1), 2, 1))),
    ("a1_g1_empty_k3", "A1", 3, 1, ()),
    ("a1_g1_one_k4", "A1", 4, 1, (((1,), 1, 1),)),
    ("a1_g1_one_k5", "A1", 5, 1, (((2,), 1, 1),)),
    ("a1_g1_two_k5", "A1", 5, 1, (((2,), 1, 1), ((2,), -2, -1))),
    ("a2_g1_empty_k4", "A2", 4, 1, ()),
    ("a2_g1_one_k5", "A2", 5, 1, (((0, 1), -1, -1),)),
    ("a2_g1_two_k6", "A2", 6, 1, (((1, 0), 2, 1), ((1, 0), -2, 1))),
)


def corpus_links():
    """The shipped link corpus, each entry in abstract and embedded form.

    Covers zero to three nested ribbons, windings from -2 to 2, colors up
    to three levels, both algebra series, genus zero and one, and levels
    from the dual Coxeter number to four above it.
    """
    out = []
    for name, series, level, genus, specs in _CORPUS_SPECS:
        link = _chain(genus, specs)
        out.append(CorpusEntry(name, series, level, link, embed_link(link)))
    return tuple(out)
