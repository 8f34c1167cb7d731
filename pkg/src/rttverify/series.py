"""Windowed multivariate Laurent series with exactness masks.

A ``WindowSeries`` stores exact rational coefficients of monomials
h^a * v1^e1 * ... * vk^ek inside declared per-variable exponent windows.
Since windowed arithmetic cannot be globally sound for doubly infinite
supports, every series carries two extra pieces of data per coordinate:

* ``box``  -- an interval certified to contain the true support,
* ``know`` -- the set of exponents at which the stored coefficient is
  provably the true one (known-zero outside the box counts as known).

Every operation propagates both; identity checks only ever inspect known
monomials.  Multiplicative variables may hold negative exponents, additive
variables enter polynomially (their exponentials are expanded on the way in
by :func:`rttverify.rational.iota_expand`).
"""

from __future__ import annotations

import math
from fractions import Fraction

from .scalars import Frac, HSeries

INF = None  # open interval end


# ---------------------------------------------------------------------------
# interval sets: tuples of disjoint, sorted (lo, hi) with None = +-infinity
# ---------------------------------------------------------------------------

def _le(a, b):
    # a <= b with None meaning -inf on the left slot and +inf on the right
    if a is INF or b is INF:
        return True
    return a <= b


def ivs_norm(intervals):
    ivs = [iv for iv in intervals if iv is not None]
    ivs = [iv for iv in ivs if iv[0] is INF or iv[1] is INF or iv[0] <= iv[1]]
    key = lambda iv: -10 ** 18 if iv[0] is INF else iv[0]
    ivs.sort(key=key)
    out = []
    for lo, hi in ivs:
        if out:
            plo, phi = out[-1]
            # merge if overlapping or adjacent
            if phi is INF or (lo is not INF and lo <= phi + 1):
                if phi is INF or hi is INF:
                    out[-1] = (plo, INF)
                else:
                    out[-1] = (plo, max(phi, hi))
                continue
            if lo is INF:
                out[-1] = (INF, INF if (phi is INF or hi is INF) else max(phi, hi))
                continue
        out.append((lo, hi))
    return tuple(out)


IVS_ALL = ((INF, INF),)
IVS_NONE = ()


def ivs_contains(ivs, x):
    for lo, hi in ivs:
        if (lo is INF or lo <= x) and (hi is INF or x <= hi):
            return True
    return False


def ivs_contains_range(ivs, lo, hi):
    """Whether the whole integer range [lo, hi] (None = infinite) lies in ivs."""
    if lo is not INF and hi is not INF and lo > hi:
        return True
    for ilo, ihi in ivs:
        lo_ok = (ilo is INF) or (lo is not INF and ilo <= lo)
        hi_ok = (ihi is INF) or (hi is not INF and hi <= ihi)
        if lo_ok and hi_ok:
            return True
    return False


def ivs_intersect(a, b):
    out = []
    for alo, ahi in a:
        for blo, bhi in b:
            lo = blo if alo is INF else (alo if blo is INF else max(alo, blo))
            hi = bhi if ahi is INF else (ahi if bhi is INF else min(ahi, bhi))
            if lo is INF or hi is INF or lo <= hi:
                out.append((lo, hi))
    return ivs_norm(out)


def ivs_union(a, b):
    return ivs_norm(list(a) + list(b))


def iv_complement(lo, hi):
    """Complement of a single interval (the known-zero region outside a box)."""
    out = []
    if lo is not INF:
        out.append((INF, lo - 1))
    if hi is not INF:
        out.append((hi + 1, INF))
    return tuple(out)


def iv_minkowski(a, b):
    lo = INF if (a[0] is INF or b[0] is INF) else a[0] + b[0]
    hi = INF if (a[1] is INF or b[1] is INF) else a[1] + b[1]
    return (lo, hi)


def iv_intersect(a, b):
    lo = b[0] if a[0] is INF else (a[0] if b[0] is INF else max(a[0], b[0]))
    hi = b[1] if a[1] is INF else (a[1] if b[1] is INF else min(a[1], b[1]))
    return (lo, hi)


def iv_empty(iv):
    return iv[0] is not INF and iv[1] is not INF and iv[0] > iv[1]


# ---------------------------------------------------------------------------
# variable specifications
# ---------------------------------------------------------------------------

MULT = "m"
ADD = "a"


class VarSpec:
    """Ordered variable list with kinds, windows, h-cap and expansion order.

    ``order`` is a tuple of (name, sign) pairs, a permutation of the names.
    It fixes the iterated-Laurent embedding: earlier variables dominate
    later ones, and sign -1 expands a multiplicative variable around
    infinity instead of zero.  Expansion directions are never inferred; a
    factor whose direction the order cannot decide is an error.
    """

    __slots__ = ("names", "kinds", "windows", "hcap", "order", "_idx")

    def __init__(self, names, kinds, windows, hcap, order=None):
        self.names = tuple(names)
        self.kinds = dict(kinds)
        self.windows = {v: (int(w[0]), int(w[1])) for v, w in dict(windows).items()}
        self.hcap = int(hcap)
        if order is None:
            order = tuple((v, 1) for v in self.names)
        else:
            order = tuple((v, int(s)) for v, s in order)
        self.order = order
        if self.hcap < 1:
            raise ValueError("hcap must be >= 1")
        if sorted(v for v, _ in order) != sorted(self.names):
            raise ValueError("expansion order must be a permutation of the variables")
        for v in self.names:
            if v not in self.kinds or v not in self.windows:
                raise ValueError(f"variable {v!r} lacks kind or window")
            lo, hi = self.windows[v]
            if lo > hi:
                raise ValueError(f"empty window for {v!r}")
        self._idx = {v: i + 1 for i, v in enumerate(self.names)}  # 0 is h

    @staticmethod
    def make(hcap, order=(), mult=(), add=(), window=4, windows=None):
        """Convenience constructor; ``order`` lists (name, sign) or names."""
        names = list(mult) + [v for v in add if v not in mult]
        kinds = {v: MULT for v in mult}
        kinds.update({v: ADD for v in add})
        win = {}
        for v in names:
            win[v] = (-window, window)
        if windows:
            for v, w in windows.items():
                win[v] = w
        od = []
        for entry in order:
            if isinstance(entry, str):
                od.append((entry, 1))
            else:
                od.append(entry)
        for v in names:
            if v not in [x for x, _ in od]:
                od.append((v, 1))
        return VarSpec(names, kinds, win, hcap, od)

    @property
    def ncoords(self):
        return len(self.names) + 1

    def index(self, v):
        return self._idx[v]

    def kind(self, v):
        return self.kinds[v]

    def window(self, coord):
        """Window of a coordinate index (0 = h)."""
        if coord == 0:
            return (0, self.hcap - 1)
        return self.windows[self.names[coord - 1]]

    def compatible(self, other):
        return (
            self.names == other.names
            and self.kinds == other.kinds
            and self.windows == other.windows
            and self.hcap == other.hcap
            and self.order == other.order
        )

    def without(self, drop):
        drop = set(drop)
        names = [v for v in self.names if v not in drop]
        return VarSpec(
            names,
            {v: self.kinds[v] for v in names},
            {v: self.windows[v] for v in names},
            self.hcap,
            tuple((v, s) for v, s in self.order if v not in drop),
        )

    def extended(self, name, kind, window, sign=1, first=False):
        if name in self.names:
            raise ValueError(f"{name!r} already declared")
        names = self.names + (name,)
        kinds = dict(self.kinds)
        kinds[name] = kind
        windows = dict(self.windows)
        windows[name] = window
        order = ((name, sign),) + self.order if first else self.order + ((name, sign),)
        return VarSpec(names, kinds, windows, self.hcap, order)

    def __repr__(self):
        vs = ",".join(f"{v}:{self.kinds[v]}{self.windows[v]}" for v in self.names)
        return f"VarSpec[h<{self.hcap}; {vs}]"


# ---------------------------------------------------------------------------
# the windowed series proper
# ---------------------------------------------------------------------------

class WindowSeries:
    __slots__ = ("spec", "coeffs", "box", "know")

    def __init__(self, spec, coeffs, box, know):
        self.spec = spec
        self.coeffs = coeffs
        self.box = tuple(box)
        self.know = tuple(ivs_norm(k) for k in know)

    # -- constructors ------------------------------------------------------

    @staticmethod
    def zero(spec):
        n = spec.ncoords
        return WindowSeries(spec, {}, tuple((0, -1) for _ in range(n)), (IVS_ALL,) * n)

    @staticmethod
    def monomial(spec, exps=None, h=0, coeff=Frac(1)):
        """Single monomial; known everywhere (zero outside its point)."""
        if not coeff:
            return WindowSeries.zero(spec)
        exps = exps or {}
        vec = [0] * spec.ncoords
        vec[0] = h
        for v, e in exps.items():
            vec[spec.index(v)] = e
        vec = tuple(vec)
        coeffs = {}
        if coeff and _in_window(spec, vec):
            coeffs[vec] = Frac(coeff)
        box = tuple((x, x) for x in vec)
        if coeff and not _in_window(spec, vec):
            # representable knowledge only outside the window
            know = tuple(iv_complement(x, x) for x in vec)
            return WindowSeries(spec, {}, box, know)
        return WindowSeries(spec, coeffs, box, (IVS_ALL,) * spec.ncoords)

    @staticmethod
    def one(spec):
        return WindowSeries.monomial(spec)

    @staticmethod
    def from_hseries(spec, hs: HSeries):
        if hs.hcap != spec.hcap:
            raise ValueError("hcap mismatch")
        coeffs = {}
        for k, c in enumerate(hs.c):
            if c:
                coeffs[(k,) + (0,) * (spec.ncoords - 1)] = c
        box = ((0, spec.hcap - 1),) + ((0, 0),) * (spec.ncoords - 1)
        return WindowSeries(spec, coeffs, box, (IVS_ALL,) * spec.ncoords)

    # -- bookkeeping helpers -------------------------------------------------

    def known_at(self, vec):
        return all(ivs_contains(self.know[i], e) for i, e in enumerate(vec))

    def copy_with(self, coeffs=None, box=None, know=None):
        return WindowSeries(
            self.spec,
            self.coeffs if coeffs is None else coeffs,
            self.box if box is None else box,
            self.know if know is None else know,
        )

    def nonzero_known(self, hmax=None):
        """Sorted (exps, coeff) list of nonzero coefficients on the known region."""
        out = []
        for vec, c in self.coeffs.items():
            if not c:
                continue
            if hmax is not None and vec[0] >= hmax:
                continue
            if self.known_at(vec):
                out.append((vec, c))
        out.sort(key=lambda t: t[0])
        return out

    def known_count(self, hmax=None):
        """Number of known monomial slots inside the window (mask size)."""
        total = 1
        for i in range(self.spec.ncoords):
            lo, hi = self.spec.window(i)
            if i == 0 and hmax is not None:
                hi = min(hi, hmax - 1)
            cnt = sum(1 for e in range(lo, hi + 1) if ivs_contains(self.know[i], e))
            total *= cnt
        return total

    def is_zero_on_known(self, hmax=None):
        return not self.nonzero_known(hmax=hmax)

    # -- ring operations -----------------------------------------------------

    def _chk(self, other):
        if not self.spec.compatible(other.spec):
            raise ValueError("incompatible variable specifications")

    def __add__(self, other):
        self._chk(other)
        coeffs = dict(self.coeffs)
        for vec, c in other.coeffs.items():
            v = coeffs.get(vec, Frac(0)) + c
            if v:
                coeffs[vec] = v
            else:
                coeffs.pop(vec, None)
        box = tuple(_iv_hull(a, b) for a, b in zip(self.box, other.box))
        know = tuple(ivs_intersect(a, b) for a, b in zip(self.know, other.know))
        return WindowSeries(self.spec, coeffs, box, know)

    def __neg__(self):
        return self.copy_with(coeffs={v: -c for v, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, r):
        r = Frac(r)
        if not r:
            return WindowSeries.zero(self.spec)
        return self.copy_with(coeffs={v: c * r for v, c in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        self._chk(other)
        if box_empty(self.box) or box_empty(other.box):
            return WindowSeries.zero(self.spec)
        spec = self.spec
        n = spec.ncoords
        wins = [spec.window(i) for i in range(n)]
        coeffs = {}
        bkeys = list(other.coeffs.items())
        for va, ca in self.coeffs.items():
            for vb, cb in bkeys:
                out = tuple(x + y for x, y in zip(va, vb))
                ok = True
                for i in range(n):
                    lo, hi = wins[i]
                    if out[i] < lo or out[i] > hi:
                        ok = False
                        break
                if not ok:
                    continue
                v = coeffs.get(out, Frac(0)) + ca * cb
                if v:
                    coeffs[out] = v
                else:
                    coeffs.pop(out, None)
        box = tuple(iv_minkowski(a, b) for a, b in zip(self.box, other.box))
        know = tuple(
            _mul_know(self.box[i], self.know[i], other.box[i], other.know[i], wins[i], box[i])
            for i in range(n)
        )
        return WindowSeries(self.spec, coeffs, box, know)

    __rmul__ = __mul__

    def mul_hseries(self, hs: HSeries):
        return self * WindowSeries.from_hseries(self.spec, hs)

    def pow(self, k: int):
        if k < 0:
            raise ValueError("negative power on a series; invert first")
        out = WindowSeries.one(self.spec)
        for _ in range(k):
            out = out * self
        return out

    def invert_unit(self):
        """Inverse of a series whose constant term is a nonzero rational.

        Geometric series in (1 - self/c0); exactness masks propagate through
        the underlying products.
        """
        c0 = self.coeffs.get((0,) * self.spec.ncoords, Frac(0))
        if not c0:
            raise ArithmeticError("constant term is zero; not a unit")
        if not self.known_at((0,) * self.spec.ncoords):
            raise ArithmeticError("constant term is not on the exactness mask")
        t = WindowSeries.one(self.spec) - self.scale(1 / c0)  # no constant term
        # sum t^k; terminates once t^k has no representable monomials left
        out = WindowSeries.one(self.spec)
        term = WindowSeries.one(self.spec)
        bound = self.spec.hcap + sum(
            (self.spec.window(i)[1] - self.spec.window(i)[0]) for i in range(1, self.spec.ncoords)
        )
        know = out.know
        for _ in range(bound + 1):
            term = term * t
            know = tuple(ivs_intersect(a, b) for a, b in zip(know, term.know))
            if not term.coeffs:
                break
            out = out + term
        out = out.copy_with(know=tuple(ivs_intersect(a, b) for a, b in zip(out.know, know)))
        return out.scale(1 / c0)

    # -- h-direction helpers ---------------------------------------------------

    def truncate_h(self, nh: int):
        """The class modulo h^nh: higher coefficients dropped and known zero."""
        coeffs = {v: c for v, c in self.coeffs.items() if v[0] < nh}
        know0 = ivs_union(ivs_intersect(self.know[0], ((INF, nh - 1),)), ((nh, INF),))
        box0 = iv_intersect(self.box[0], (0, nh - 1))
        return WindowSeries(self.spec, coeffs, (box0,) + self.box[1:], (know0,) + self.know[1:])

    def divide_h(self, k: int):
        """Divide by h^k; low-order coefficients must be known zero."""
        if k == 0:
            return self
        for vec, c in self.coeffs.items():
            if vec[0] < k and c:
                raise ArithmeticError("h-division with nonzero low-order term")
        if not ivs_contains_range(self.know[0], 0, k - 1):
            raise ArithmeticError("cannot certify h-divisibility on the mask")
        coeffs = {(vec[0] - k,) + vec[1:]: c for vec, c in self.coeffs.items() if vec[0] >= k}
        know0 = []
        for lo, hi in self.know[0]:
            nlo = INF if lo is INF else lo - k
            nhi = INF if hi is INF else hi - k
            know0.append((nlo, nhi))
        know0 = ivs_intersect(ivs_norm(know0), ((0, self.spec.hcap - 1 - k),))
        blo, bhi = self.box[0]
        box0 = (max(0, (blo or 0) - k), INF if bhi is INF else bhi - k)
        return WindowSeries(self.spec, coeffs, (box0,) + self.box[1:], (know0,) + self.know[1:])

    def h_valuation_known(self):
        """Smallest h-order with a nonzero known coefficient (hcap if none)."""
        val = self.spec.hcap
        for vec, c in self.coeffs.items():
            if c and self.known_at(vec) and vec[0] < val:
                val = vec[0]
        return val

    # -- variable plumbing ------------------------------------------------------

    def extract_coeff(self, assignments):
        """Coefficient of a fixed power of some variables, as a smaller series."""
        spec = self.spec
        idx = {spec.index(v): e for v, e in assignments.items()}
        new_spec = spec.without(assignments.keys())
        keep = [i for i in range(spec.ncoords) if i not in idx]
        ok = all(ivs_contains(self.know[i], e) for i, e in idx.items())
        coeffs = {}
        for vec, c in self.coeffs.items():
            if all(vec[i] == e for i, e in idx.items()):
                coeffs[tuple(vec[i] for i in keep)] = c
        box = tuple(self.box[i] for i in keep)
        if ok:
            know = tuple(self.know[i] for i in keep)
        else:
            know = tuple(IVS_NONE for _ in keep)
        return WindowSeries(new_spec, coeffs, box, know)

    def extend(self, new_spec):
        """Reinterpret over a larger spec (new variables enter with exponent 0)."""
        pos = [0] + [new_spec.index(v) for v in self.spec.names]
        n = new_spec.ncoords
        coeffs = {}
        for vec, c in self.coeffs.items():
            out = [0] * n
            for p, e in zip(pos, vec):
                out[p] = e
            coeffs[tuple(out)] = c
        box = [(0, 0)] * n
        know = [IVS_ALL] * n
        for p, i in zip(pos, range(self.spec.ncoords)):
            box[p] = self.box[i]
            know[p] = self.know[i]
        return WindowSeries(new_spec, coeffs, tuple(box), tuple(know))

    def assume_support_in_observed_box(self, margin=1, coords=None):
        """Adopt the observed support bounds as the true box.

        Valid only under the window-faithfulness convention: the caller has
        established (e.g. by a positive split_mod_h witness after clearing
        denominators) that the true support lies inside the window.  Each
        adopted bound must sit at least ``margin`` away from the window edge.
        """
        if not self.coeffs:
            box = tuple((0, -1) for _ in range(self.spec.ncoords))
            return WindowSeries(self.spec, {}, box, (IVS_ALL,) * self.spec.ncoords)
        names = set(coords) if coords is not None else None
        box = list(self.box)
        know = list(self.know)
        for i in range(self.spec.ncoords):
            if i == 0 or (names is not None and self.spec.names[i - 1] not in names):
                continue
            lo, hi = self.spec.window(i)
            smin = min(vec[i] for vec in self.coeffs)
            smax = max(vec[i] for vec in self.coeffs)
            if smin - lo < margin or hi - smax < margin:
                raise ArithmeticError(
                    f"observed support touches the window edge on {self.spec.names[i-1]!r}"
                )
            box[i] = iv_intersect(box[i], (smin, smax))
            know[i] = ivs_union(know[i], iv_complement(*box[i]))
        return WindowSeries(self.spec, dict(self.coeffs), tuple(box), tuple(know))

    # -- dumps -------------------------------------------------------------------

    def dump(self):
        """Canonical text dump, one monomial per line."""
        lines = []
        for vec, c in sorted(self.coeffs.items()):
            if not c:
                continue
            parts = []
            if vec[0]:
                parts.append(f"h^{vec[0]}")
            for v, e in zip(self.spec.names, vec[1:]):
                if e:
                    parts.append(f"{v}^{e}")
            mono = " ".join(parts) if parts else "1"
            lines.append(f"{c} * {mono}")
        return "\n".join(lines)

    def __repr__(self):
        d = self.dump()
        return "WindowSeries(0)" if not d else "WindowSeries[" + d.replace("\n", "; ") + "]"


def _in_window(spec, vec):
    for i, e in enumerate(vec):
        lo, hi = spec.window(i)
        if e < lo or e > hi:
            return False
    return True


def _iv_hull(a, b):
    if iv_empty(a):
        return b
    if iv_empty(b):
        return a
    lo = INF if (a[0] is INF or b[0] is INF) else min(a[0], b[0])
    hi = INF if (a[1] is INF or b[1] is INF) else max(a[1], b[1])
    return (lo, hi)


def _mul_know(boxa, knowa, boxb, knowb, win, boxc):
    """Known set of a product along one coordinate.

    An output exponent c is known when every split c = a + b with a in boxa
    and b in boxb draws both factors from known exponents; infinitely many
    candidate splits make c unknown.
    """
    out = list(iv_complement(*boxc))
    lo, hi = win
    run_start = None
    for c in range(lo, hi + 1):
        alo = boxa[0] if boxb[1] is INF else (INF if boxa[0] is INF else max(boxa[0], c - boxb[1]))
        if boxb[1] is not INF and boxa[0] is not INF:
            alo = max(boxa[0], c - boxb[1])
        elif boxb[1] is not INF:
            alo = c - boxb[1]
        else:
            alo = boxa[0]
        if boxb[0] is not INF and boxa[1] is not INF:
            ahi = min(boxa[1], c - boxb[0])
        elif boxb[0] is not INF:
            ahi = c - boxb[0]
        else:
            ahi = boxa[1]
        if alo is not INF and ahi is not INF and alo > ahi:
            good = True  # no possible split: coefficient known zero
        elif alo is INF or ahi is INF:
            good = False  # unboundedly many splits
        else:
            good = ivs_contains_range(knowa, alo, ahi) and ivs_contains_range(
                knowb, c - ahi, c - alo
            )
        if good and run_start is None:
            run_start = c
        if not good and run_start is not None:
            out.append((run_start, c - 1))
            run_start = None
    if run_start is not None:
        out.append((run_start, hi))
    return ivs_norm(out)


# ---------------------------------------------------------------------------
# named series operations
# ---------------------------------------------------------------------------

def taylor_shift(a: WindowSeries, var: str, svar: str) -> WindowSeries:
    """a(.., var, ..) -> a(.., var + svar, ..), truncated to the windows.

    Implements the formal Taylor expansion sum z0^k/k! d^k/dz^k; the shift
    variable must be additive with a window starting at 0 and must not occur
    in ``a``.
    """
    spec = a.spec
    if spec.kind(var) != ADD:
        raise ValueError("taylor shift target must be an additive variable")
    if spec.kind(svar) != ADD or spec.windows[svar][0] != 0:
        raise ValueError("shift variable must be additive with window starting at 0")
    iv = spec.index(var)
    isv = spec.index(svar)
    if any(vec[isv] for vec in a.coeffs) or a.box[isv] not in ((0, 0), (0, -1)):
        raise ValueError("shift variable already occurs in the series")
    slo, shi = spec.windows[svar]
    wlo, whi = spec.windows[var]
    coeffs = {}
    for vec, c in a.coeffs.items():
        m = vec[iv]
        for k in range(0, shi + 1):
            e = m - k
            if e < wlo or e > whi:
                continue
            binom = _gbinom(m, k)
            if not binom:
                continue
            out = list(vec)
            out[iv] = e
            out[isv] = k
            out = tuple(out)
            vv = coeffs.get(out, Frac(0)) + c * binom
            if vv:
                coeffs[out] = vv
            else:
                coeffs.pop(out, None)
    # var-exponent e at svar-power k comes solely from source exponent e + k
    knowv = []
    for e in range(wlo, whi + 1):
        if ivs_contains_range(a.know[iv], e, e + shi):
            knowv.append((e, e))
    blo, bhi = a.box[iv]
    has_neg = blo is INF or blo < 0
    boxv = (INF if blo is INF else blo - shi, bhi)
    boxs = (0, INF if has_neg else max(0, (bhi or 0)))
    know = list(a.know)
    know[iv] = ivs_union(ivs_norm(knowv), iv_complement(*boxv))
    know[isv] = IVS_ALL
    box = list(a.box)
    box[iv] = boxv
    box[isv] = boxs
    return WindowSeries(spec, coeffs, tuple(box), tuple(know))


def _gbinom(m: int, k: int) -> Frac:
    """Generalized binomial coefficient C(m, k) for integer m, k >= 0."""
    num = Frac(1)
    for j in range(k):
        num *= Frac(m - j)
    return num / math.factorial(k)


def split_mod_h(a: WindowSeries, nh: int):
    """Split off the part of h-order < nh and report a support witness.

    The witness asserts the windowed analogue of "lies in W((z1,...,zn))
    modulo h^nh": along the outermost expansion variable the support of the
    low part stays strictly above the lower window edge (or is certified
    bounded below by the box).  Inner variables are Laurent per outer slice
    inside a window by construction.
    """
    if nh > a.spec.hcap:
        raise ValueError("h-order beyond the cap")
    low = a.truncate_h(nh)
    outer = None
    for v, _ in reversed(a.spec.order):
        if a.spec.kind(v) == MULT:
            outer = v
            break
    witness = True
    detail = ""
    if outer is not None:
        i = a.spec.index(outer)
        lo, _ = a.spec.windows[outer]
        blo = low.box[i][0]
        if blo is not INF and not iv_empty(low.box[i]):
            witness = True
        else:
            support = [vec[i] for vec, c in low.coeffs.items() if c]
            if support and min(support) <= lo:
                witness = False
                detail = f"support of the h<{nh} part touches the lower {outer} window edge"
    return low, SplitWitness(witness, detail)


class SplitWitness:
    __slots__ = ("positive", "detail")

    def __init__(self, positive, detail=""):
        self.positive = positive
        self.detail = detail

    def __bool__(self):
        return self.positive

    def __repr__(self):
        return f"SplitWitness({self.positive}{', ' + self.detail if self.detail else ''})"


def subst_phi(a: WindowSeries, z1: str, z2: str, z0: str, nh: int):
    """Substitute z1 = z2*e^{z0} into the h-order < nh part of ``a``.

    Returns (result, remainder_flag); the flag records whether an h^nh tail
    was discarded.  The low part must have certified bounded support in z1
    and z2 (clear denominators and adopt the observed box first, after a
    positive split witness).
    """
    spec = a.spec
    if spec.kind(z1) != MULT or spec.kind(z2) != MULT:
        raise ValueError("phi substitution needs multiplicative z1, z2")
    low, _w = split_mod_h(a, nh)
    remainder = any(c for vec, c in a.coeffs.items() if vec[0] >= nh)
    i1, i2 = spec.index(z1), spec.index(z2)
    if low.box[i1][0] is INF or low.box[i1][1] is INF or low.box[i2][0] is INF or low.box[i2][1] is INF:
        raise ArithmeticError(
            "substitution needs bounded z1/z2 support; adopt the observed box first"
        )
    new_spec = spec.without([z1]).extended(z0, ADD, (0, spec.window(0)[1] + 8), first=False) \
        if z0 not in spec.names else spec.without([z1])
    if z0 in spec.names:
        new_spec = spec.without([z1])
    z0lo, z0hi = new_spec.windows[z0]
    if z0lo != 0:
        raise ValueError("z0 window must start at 0")
    keep = [i for i in range(spec.ncoords) if i != i1]
    j2 = keep.index(i2)
    j0 = new_spec.index(z0)
    coeffs = {}
    for vec, c in low.coeffs.items():
        e1 = vec[i1]
        base = [vec[i] for i in keep]
        base[j2] = base[j2] + e1
        lo2, hi2 = new_spec.windows[z2]
        if base[j2] < lo2 or base[j2] > hi2:
            continue
        for k in range(0, z0hi + 1):
            coef = c * Frac(e1) ** k / math.factorial(k)
            if not coef:
                continue
            out = list(base)
            out[j0] = out[j0] + k
            if out[j0] > z0hi:
                continue
            out = tuple(out)
            v = coeffs.get(out, Frac(0)) + coef
            if v:
                coeffs[out] = v
            else:
                coeffs.pop(out, None)
    # knowledge: output z2-exponent t receives splits e1 + e2 = t with
    # e1 in box1, e2 in box2; all must be known in the low part.
    b1, b2 = low.box[i1], low.box[i2]
    lo, hi = new_spec.windows[z2]
    knows2 = []
    for t in range(lo, hi + 1):
        alo = max(b1[0], t - b2[1])
        ahi = min(b1[1], t - b2[0])
        if alo > ahi:
            knows2.append((t, t))
            continue
        if ivs_contains_range(low.know[i1], alo, ahi) and ivs_contains_range(
            low.know[i2], t - ahi, t - alo
        ):
            knows2.append((t, t))
    box = [low.box[i] for i in keep]
    box[j2] = iv_minkowski(b1, b2)
    know = [low.know[i] for i in keep]
    know[j2] = ivs_union(ivs_norm(knows2), iv_complement(*box[j2]))
    if z0 not in spec.names:
        box = box + [(0, INF)]
        know = know + [IVS_ALL]
    else:
        # merged with pre-existing z0 powers is not supported
        raise ValueError("z0 must be a fresh variable")
    return WindowSeries(new_spec, coeffs, tuple(box), tuple(know)), remainder
