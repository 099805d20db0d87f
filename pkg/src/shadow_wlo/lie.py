"""Root-system data and level-k combinatorics for the A_r series.

All pairing computations use the normalization in which short coroots have
squared length 2.  For A_r every root is short, the coroot lattice equals the
root lattice, and the Gram matrix of the fundamental weights is
G_ij = min(i,j) - i*j/(r+1), obtained from the hyperplane model of A_r in
R^(r+1) and already correctly scaled.

Weights are integer coordinate tuples in the fundamental weight basis.
General Cartan-subalgebra elements are tuples of Fractions (or floats on
explicitly approximate paths) in the same basis.  Everything that feeds the
state sum is exact rational arithmetic; transcendental evaluations (sines,
phases) happen once per cached argument at the outermost layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

__all__ = [
    "LieData",
    "lie_data",
    "inner",
    "norm_sq",
    "level_labels",
    "quantum_dim",
    "weight_multiplicity",
    "weight_multiplicities",
    "fusion_coefficient",
    "is_regular",
    "ad_det_k",
    "sine_product",
    "alcove_decompose",
    "apply_affine",
    "dominant_representative",
    "lattice_points_in_scaled_box",
]

Vec = tuple
Mat = tuple


def _frac_vec(x):
    return tuple(Fraction(c) for c in x)


def _mat_vec(m, v):
    return tuple(sum(m[i][j] * v[j] for j in range(len(v))) for i in range(len(m)))


def _mat_mul(a, b):
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _mat_inv(m):
    """Exact inverse of a small rational matrix by Gauss-Jordan."""
    n = len(m)
    aug = [[Fraction(m[i][j]) for j in range(n)] + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [c / pv for c in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


@dataclass(frozen=True)
class LieData:
    """Immutable root data of A_r in the short-coroot normalization."""

    series: str
    rank: int
    gram: Mat                  # Gram matrix of fundamental weights, Fractions
    cartan: Mat                # cartan[i][j] = coordinate i of simple root alpha_j
    simple_roots: tuple        # weight-basis coordinates, integer tuples
    simple_coroots: tuple      # equal to simple_roots for A_r
    positive_roots: tuple
    rho: Vec
    theta: Vec                 # highest root
    dual_coxeter: int
    weyl: tuple = field(repr=False)          # tuples (matrix, sign)
    cartan_inv: Mat = field(repr=False)      # coroot-basis coordinates of a weight

    def coroot_coordinates(self, x):
        """Coordinates of x in the simple-coroot basis of the coroot lattice."""
        return _mat_vec(self.cartan_inv, _frac_vec(x))


def _build_a_series(rank):
    r = rank
    gram = tuple(
        tuple(Fraction(min(i + 1, j + 1)) - Fraction((i + 1) * (j + 1), r + 1)
              for j in range(r))
        for i in range(r)
    )
    cartan = tuple(
        tuple(2 if i == j else (-1 if abs(i - j) == 1 else 0) for j in range(r))
        for i in range(r)
    )
    simple = tuple(tuple(cartan[i][j] for i in range(r)) for j in range(r))
    positive = []
    for i in range(r):
        for j in range(i, r):
            root = [0] * r
            for a in range(i, j + 1):
                for c in range(r):
                    root[c] += simple[a][c]
            positive.append(tuple(root))
    rho = tuple(1 for _ in range(r))
    # Highest root of A_r is the sum of all simple roots.
    theta = tuple(sum(simple[a][c] for a in range(r)) for c in range(r))

    gens = []
    for i in range(r):
        rows = []
        for a in range(r):
            row = [0] * r
            row[a] = 1
            rows.append(row)
        for a in range(r):
            rows[a][i] -= simple[i][a]
        gens.append(tuple(tuple(row) for row in rows))

    ident = tuple(tuple(1 if a == b else 0 for b in range(r)) for a in range(r))
    seen = {ident: 1}
    frontier = [ident]
    while frontier:
        nxt = []
        for m in frontier:
            for g in gens:
                prod_m = _mat_mul(g, m)
                if prod_m not in seen:
                    seen[prod_m] = -seen[m]
                    nxt.append(prod_m)
        frontier = nxt
    weyl = tuple(sorted(seen.items()))

    theta_pair = sum(theta[i] * rho[j] * gram[i][j] for i in range(r) for j in range(r))
    cg = 1 + int(theta_pair)
    return LieData(
        series=f"A{r}",
        rank=r,
        gram=gram,
        cartan=cartan,
        simple_roots=simple,
        simple_coroots=simple,
        positive_roots=tuple(positive),
        rho=rho,
        theta=theta,
        dual_coxeter=cg,
        weyl=weyl,
        cartan_inv=_mat_inv(cartan),
    )


@lru_cache(maxsize=None)
def lie_data(series):
    """Parse a series name like "A1" or "A2" into LieData."""
    s = str(series).strip().upper()
    if not s.startswith("A") or not s[1:].isdigit():
        raise ValueError(f"unsupported series {series!r}, expected A<rank>")
    r = int(s[1:])
    if r < 1:
        raise ValueError("rank must be >= 1")
    return _build_a_series(r)


def inner(lie, x, y):
    """Normalized invariant pairing of two weight-basis coordinate vectors."""
    g = lie.gram
    r = lie.rank
    return sum(g[i][j] * x[i] * y[j] for i in range(r) for j in range(r))


def norm_sq(lie, x):
    return inner(lie, x, x)


def _pair_coroot(lie, x, i):
    # <x, simple_coroot_i> is the i-th weight coordinate of x
    return x[i]


def dominant_representative(lie, x):
    """Weyl-dominant representative of x, with the sign of the used element.

    Returns (dominant, sign).  Exact for rational input.
    """
    v = list(x)
    sign = 1
    moved = True
    guard = 0
    while moved:
        moved = False
        for i in range(lie.rank):
            if v[i] < 0:
                coef = v[i]
                alpha = lie.simple_roots[i]
                for a in range(lie.rank):
                    v[a] -= coef * alpha[a]
                sign = -sign
                moved = True
        guard += 1
        if guard > 100000:
            raise RuntimeError("dominant reduction did not terminate")
    return tuple(v), sign


def level_labels(lie, k):
    """Dominant weights admissible at level k, lexicographically ordered.

    The set is empty below the dual Coxeter number; at k equal to it only the
    zero label survives.
    """
    k = int(k)
    if k < 1:
        raise ValueError("level must be a positive integer")
    budget = k - lie.dual_coxeter
    if budget < 0:
        return []
    r = lie.rank
    theta_w = [inner(lie, tuple(1 if a == i else 0 for a in range(r)), lie.theta)
               for i in range(r)]
    out = []

    def rec(prefix, used):
        if len(prefix) == r:
            out.append(tuple(prefix))
            return
        i = len(prefix)
        n = 0
        while used + n * theta_w[i] <= budget:
            rec(prefix + [n], used + n * theta_w[i])
            n += 1

    rec([], Fraction(0))
    return sorted(out)


def _angle_args(lie, k, x):
    return [inner(lie, alpha, x) / k for alpha in lie.positive_roots]


def quantum_dim(lie, k, lam):
    """sin-product dimension of a level-k label."""
    num = 1.0
    den = 1.0
    for alpha in lie.positive_roots:
        a = float(inner(lie, alpha, tuple(l + p for l, p in zip(lam, lie.rho)))) / k
        b = float(inner(lie, alpha, lie.rho)) / k
        num *= math.sin(math.pi * a)
        den *= math.sin(math.pi * b)
    return num / den


def sine_product(lie, b):
    """Signed product of 2*sin(pi*<alpha, b>) over positive roots.

    This is the square-root branch used for the half-power of the adjoint
    determinant: it is odd under alcove-wall reflections, which is what makes
    alternating Weyl signs come out of the face determinant factors.
    """
    out = 1.0
    for alpha in lie.positive_roots:
        out *= 2.0 * math.sin(math.pi * float(inner(lie, alpha, b)))
    return out


def ad_det_k(lie, b):
    """det(1 - exp(ad b)) on the complement of the Cartan subalgebra."""
    out = 1.0
    for alpha in lie.positive_roots:
        out *= 4.0 * math.sin(math.pi * float(inner(lie, alpha, b))) ** 2
    return out


def is_regular(lie, b, tol=1e-9):
    """True when no root pairing with b is an integer.

    Rational input is decided exactly; float input uses the tolerance.
    """
    exact = all(isinstance(c, (int, Fraction)) for c in b)
    for alpha in lie.positive_roots:
        a = inner(lie, alpha, b)
        if exact:
            if Fraction(a).denominator == 1:
                return False
        else:
            if abs(a - round(a)) <= tol:
                return False
    return True


@lru_cache(maxsize=None)
def _dominant_weight_table(lie, gamma):
    """Freudenthal multiplicities on the dominant support of irrep gamma.

    Every weight of the irrep sits between the lowest weight w0(gamma) and
    gamma in the root order, so the candidate set is the integer box
    0 <= c <= C in simple-root coordinates of gamma - v, where
    C = coords(gamma - w0(gamma)).
    """
    r = lie.rank
    gamma = tuple(int(c) for c in gamma)
    if any(c < 0 for c in gamma):
        raise ValueError("highest weight must be dominant")
    neg_dom, _ = dominant_representative(lie, tuple(-c for c in gamma))
    lowest = tuple(-c for c in neg_dom)
    span = _mat_vec(lie.cartan_inv, tuple(a - b for a, b in zip(gamma, lowest)))
    cmax = [int(c) for c in span]
    assert all(c == int(c) for c in span)

    def point(coords):
        v = list(gamma)
        for j, c in enumerate(coords):
            if c:
                alpha = lie.simple_roots[j]
                for a in range(r):
                    v[a] -= c * alpha[a]
        return tuple(v)

    candidates = {}
    for coords in product(*[range(c + 1) for c in cmax]):
        v = point(coords)
        if all(c >= 0 for c in v):
            candidates[v] = sum(coords)
    in_box = {}
    for coords in product(*[range(c + 1) for c in cmax]):
        in_box[point(coords)] = True

    order = sorted(candidates, key=lambda v: (candidates[v], v))
    mult = {}
    rho = lie.rho
    cas_top = norm_sq(lie, tuple(a + b for a, b in zip(gamma, rho)))

    def lookup(v):
        dom, _ = dominant_representative(lie, v)
        return mult.get(dom, 0)

    for v in order:
        if candidates[v] == 0:
            mult[v] = 1
            continue
        acc = Fraction(0)
        for alpha in lie.positive_roots:
            j = 1
            while True:
                w = tuple(a + j * al for a, al in zip(v, alpha))
                if w not in in_box:
                    break
                m = lookup(w)
                if m:
                    acc += 2 * m * inner(lie, w, alpha)
                j += 1
        denom = cas_top - norm_sq(lie, tuple(a + b for a, b in zip(v, rho)))
        if denom == 0:
            mult[v] = 0
            continue
        val = acc / denom
        assert val.denominator == 1, "Freudenthal recursion must stay integral"
        mult[v] = int(val)
    return {v: m for v, m in mult.items() if m}


@lru_cache(maxsize=None)
def _full_weight_table(lie, gamma):
    dom = _dominant_weight_table(lie, gamma)
    out = {}
    for v, m in dom.items():
        for w, _sign in lie.weyl:
            out[_mat_vec(w, v)] = m
    return out


def weight_multiplicities(lie, gamma):
    """Full weight system of the irrep with highest weight gamma, as a dict."""
    return dict(_full_weight_table(lie, tuple(int(c) for c in gamma)))


def weight_multiplicity(lie, gamma, beta):
    """Multiplicity of the weight beta in the irrep with highest weight gamma."""
    beta = tuple(int(c) for c in beta)
    return _full_weight_table(lie, tuple(int(c) for c in gamma)).get(beta, 0)


def _norm(lie, x):
    return math.sqrt(float(norm_sq(lie, x)))


def fusion_coefficient(lie, k, mu, nu, lam):
    """Level-k fusion coefficient N_{mu,nu}^lam.

    Alternating sum of weight multiplicities of mu over the level-k affine
    Weyl group action on lam, with the translation window
    ||k*x|| <= ||mu|| + ||nu|| + ||lam|| + 2*||rho||.
    """
    return _fusion_cached(lie, int(k),
                          tuple(int(c) for c in mu),
                          tuple(int(c) for c in nu),
                          tuple(int(c) for c in lam))


@lru_cache(maxsize=None)
def _fusion_cached(lie, k, mu, nu, lam):
    r = lie.rank
    table = _full_weight_table(lie, mu)
    rho = lie.rho
    lam_s = tuple(a + b for a, b in zip(lam, rho))
    nu_s = tuple(a + b for a, b in zip(nu, rho))
    bound = _norm(lie, mu) + _norm(lie, nu) + _norm(lie, lam) + 2 * _norm(lie, rho)
    bound2 = bound * bound + 1e-9
    # Translation vectors k*x with x in the coroot lattice, enumerated by a
    # safe coordinate box around the window.
    lengths = [_norm(lie, cr) for cr in lie.simple_coroots]
    gram_c = [[float(inner(lie, a, b)) for b in lie.simple_coroots]
              for a in lie.simple_coroots]
    # Smallest eigenvalue of the coroot Gram bounds the coordinate box.
    lam_min = _min_eig(gram_c)
    cmax = int(math.ceil(bound / (k * math.sqrt(lam_min)))) + 1
    total = 0
    for w, sign in lie.weyl:
        wls = _mat_vec(w, lam_s)
        for coords in product(range(-cmax, cmax + 1), repeat=r):
            shift = [0] * r
            for j, c in enumerate(coords):
                if c:
                    cr = lie.simple_coroots[j]
                    for a in range(r):
                        shift[a] += c * cr[a]
            kx = tuple(k * s for s in shift)
            n2 = float(norm_sq(lie, kx))
            if n2 > bound2:
                continue
            target = tuple(nu_s[a] - wls[a] - kx[a] for a in range(r))
            m = table.get(target)
            if m:
                total += sign * m
    return total


def _min_eig(m):
    """Smallest eigenvalue of a small symmetric positive matrix (Jacobi-free)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    # Power iteration on the inverse via solving, adequate for tiny matrices.
    import numpy as _np

    vals = _np.linalg.eigvalsh(_np.array(m, dtype=float))
    return float(vals[0])


def apply_affine(lie, affine, x):
    """Apply an affine map (matrix, translation) to a coordinate vector."""
    mat, tr = affine
    y = _mat_vec(mat, _frac_vec(x))
    return tuple(a + b for a, b in zip(y, tr))


def alcove_decompose(lie, k, beta):
    """Write beta = w(lam + rho) + k*x with lam a level-k label.

    Input is a rational coordinate vector on the k-scaled Cartan algebra
    (typically k times a face holonomy value).  Returns (lam, sign, affine)
    where sign is the determinant of the linear part of the reducing map and
    affine = (matrix, translation) maps lam + rho back to beta exactly.
    sign is 0 when beta lies on an affine wall; lam is then the boundary
    label reached by the reduction.
    """
    k = int(k)
    r = lie.rank
    v = list(_frac_vec(beta))
    # Accumulated map sigma with v = sigma(beta).
    mat = [[Fraction(int(i == j)) for j in range(r)] for i in range(r)]
    tr = [Fraction(0)] * r
    sign = 1
    guard = 0
    while True:
        guard += 1
        if guard > 100000:
            raise RuntimeError("alcove reduction did not terminate")
        moved = False
        for i in range(r):
            if v[i] < 0:
                coef = v[i]
                alpha = lie.simple_roots[i]
                for a in range(r):
                    v[a] -= coef * alpha[a]
                refl = _reflection_matrix(lie, i)
                mat = [list(row) for row in _mat_mul(refl, tuple(tuple(row) for row in mat))]
                tr = list(_mat_vec(refl, tuple(tr)))
                sign = -sign
                moved = True
                break
        if moved:
            continue
        h = inner(lie, tuple(v), lie.theta)
        if h > k:
            coef = h - k
            for a in range(r):
                v[a] -= coef * lie.theta[a]
            refl = _theta_reflection_matrix(lie)
            mat = [list(row) for row in _mat_mul(refl, tuple(tuple(row) for row in mat))]
            tr = list(_mat_vec(refl, tuple(tr)))
            for a in range(r):
                tr[a] += k * lie.theta[a]
            sign = -sign
            continue
        break
    on_wall = any(c == 0 for c in v) or inner(lie, tuple(v), lie.theta) == k
    lam = tuple(c - p for c, p in zip(v, lie.rho))
    inv = _mat_inv(tuple(tuple(row) for row in mat))
    back_tr = _mat_vec(inv, tuple(-t for t in tr))
    affine = (inv, tuple(back_tr))
    return lam, (0 if on_wall else sign), affine


@lru_cache(maxsize=None)
def _reflection_matrix(lie, i):
    r = lie.rank
    rows = []
    for a in range(r):
        row = [Fraction(int(a == b)) for b in range(r)]
        row[i] -= lie.simple_roots[i][a]
        rows.append(tuple(row))
    return tuple(rows)


@lru_cache(maxsize=None)
def _theta_reflection_matrix(lie):
    r = lie.rank
    theta = lie.theta
    rows = []
    for a in range(r):
        row = [Fraction(int(a == b)) for b in range(r)]
        for b in range(r):
            row[b] -= theta[a] * _theta_dual_coeff(lie, b)
        rows.append(tuple(row))
    return tuple(rows)


def _theta_dual_coeff(lie, b):
    # <e_b, theta_check> where e_b is the b-th weight coordinate direction:
    # the pairing <x, theta> is linear with coefficient inner(omega_b, theta).
    r = lie.rank
    unit = tuple(1 if a == b else 0 for a in range(r))
    return inner(lie, unit, lie.theta)


def lattice_points_in_scaled_box(lie, k, basis=None, mode="half_open"):
    """Weight-lattice points inside the k-scaled coroot-basis box.

    mode "half_open" keeps coordinates in [0, k) per axis, which picks exactly
    one representative of every coset of the k-scaled coroot lattice; this is
    the enumeration the state sum uses, since its summand is periodic under
    those translations.  mode "open" is the strict interior (0, k)^r, which
    for rank >= 2 can miss entire regular cosets whose representatives all
    have a coordinate on a box face.  basis may override the simple-coroot
    basis by another basis of the same lattice, given as weight-coordinate
    integer vectors.  Returns a sorted list of integer weight-coordinate
    tuples.
    """
    k = int(k)
    r = lie.rank
    if basis is None:
        bmat = tuple(tuple(lie.simple_coroots[j][i] for j in range(r)) for i in range(r))
    else:
        bmat = tuple(tuple(int(basis[j][i]) for j in range(r)) for i in range(r))
    binv = _mat_inv(bmat)
    bounds = []
    for i in range(r):
        bounds.append(k * sum(abs(bmat[i][j]) for j in range(r)))
    out = []
    for n in product(*[range(-b, b + 1) for b in bounds]):
        t = _mat_vec(binv, _frac_vec(n))
        if mode == "half_open":
            ok = all(0 <= c < k for c in t)
        elif mode == "open":
            ok = all(0 < c < k for c in t)
        elif mode == "closed":
            ok = all(0 <= c <= k for c in t)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        if ok:
            out.append(tuple(int(c) for c in n))
    return sorted(out)
