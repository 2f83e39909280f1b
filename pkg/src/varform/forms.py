"""Bigraded forms on the jet bundle.

A ``BiForm`` of bidegree ``(p, q)`` is a finite sum of coefficient expressions
times basis words ``dx^{m1} ^ ... ^ dx^{mp} ^ th^{a1}_{I1} ^ ... ^ th^{aq}_{Iq}``,
where ``th^a_I`` is the contact form (written ``δu^a_I``). Words are stored
horizontal factors first, each block in ascending canonical order; reordering
signs are absorbed into the coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .jetcore import (
    Expr,
    Jet,
    JetSpace,
    MultiIndex,
    mi_add,
    mi_key,
    mi_steps,
    mi_zero,
    partial,
    suffix,
    total_derivative,
    total_derivative_multi,
)

Vertical = tuple  # (field, multi-index)


class DegreeError(ValueError):
    pass


def vkey(v: Vertical) -> tuple:
    return (v[0],) + mi_key(v[1])


class Word(NamedTuple):
    horizontal: tuple
    vertical: tuple

    @property
    def degree(self) -> tuple:
        return (len(self.horizontal), len(self.vertical))


def _perm_sign(keys: list) -> int:
    """Sign of the permutation sorting ``keys``; 0 if any key repeats."""
    if len(set(keys)) != len(keys):
        return 0
    sign = 1
    keys = list(keys)
    # insertion sort counting transpositions; words are short
    for i in range(1, len(keys)):
        j = i
        while j > 0 and keys[j - 1] > keys[j]:
            keys[j - 1], keys[j] = keys[j], keys[j - 1]
            sign = -sign
            j -= 1
    return sign


def canonical_word(horizontal: Sequence[int], vertical: Sequence[Vertical]) -> tuple:
    """Sort both blocks; return ``(sign, Word)`` with sign 0 for repeated factors."""
    sh = _perm_sign(list(horizontal))
    if not sh:
        return 0, None
    vk = [vkey(v) for v in vertical]
    sv = _perm_sign(vk)
    if not sv:
        return 0, None
    verts = tuple(v for _, v in sorted(zip(vk, vertical), key=lambda t: t[0]))
    return sh * sv, Word(tuple(sorted(horizontal)), verts)


class BiForm:
    """Immutable homogeneous form of bidegree ``(p, q)``."""

    __slots__ = ("space", "p", "q", "terms")

    def __init__(self, space: JetSpace, p: int, q: int, terms: Mapping[Word, Expr] = None):
        self.space = space
        self.p = p
        self.q = q
        self.terms = {w: c for w, c in (terms or {}).items() if not c.is_zero}
        if p < 0 or q < 0:
            raise DegreeError(f"negative degree ({p},{q})")

    # constructors
    @staticmethod
    def zero(space: JetSpace, p: int, q: int) -> "BiForm":
        return BiForm(space, p, q)

    @staticmethod
    def function(space: JetSpace, f) -> "BiForm":
        return BiForm(space, 0, 0, {Word((), ()): Expr.coerce(f)})

    @staticmethod
    def dx(space: JetSpace, mu) -> "BiForm":
        if isinstance(mu, str):
            mu = space.coords.index(mu)
        return BiForm(space, 1, 0, {Word((mu,), ()): Expr.const(1)})

    @staticmethod
    def theta(space: JetSpace, field: str, index=None) -> "BiForm":
        index = mi_zero(space.dim) if index is None else space.index(index)
        return BiForm(space, 0, 1, {Word((), ((field, index),)): Expr.const(1)})

    @staticmethod
    def volume(space: JetSpace, coeff=1) -> "BiForm":
        return BiForm(space, space.dim, 0, {Word(tuple(range(space.dim)), ()): Expr.coerce(coeff)})

    @staticmethod
    def codim_one(space: JetSpace, coeffs: Mapping) -> "BiForm":
        """``sum_mu coeffs[mu] * iota_{d/dx^mu} vol`` (a (d-1,0)-form)."""
        d = space.dim
        terms = {}
        for mu, c in coeffs.items():
            if isinstance(mu, str):
                mu = space.coords.index(mu)
            w = Word(tuple(i for i in range(d) if i != mu), ())
            terms[w] = terms.get(w, Expr()) + (-1) ** mu * Expr.coerce(c)
        return BiForm(space, d - 1, 0, terms)

    def codim_one_coefficients(self) -> dict:
        """Inverse of :meth:`codim_one` on (d-1,0)-forms."""
        d = self.space.dim
        if (self.p, self.q) != (d - 1, 0):
            raise DegreeError("codim_one_coefficients needs a (d-1,0)-form")
        out = {}
        for w, c in self.terms.items():
            (mu,) = set(range(d)) - set(w.horizontal)
            out[mu] = (-1) ** mu * c
        return out

    # identity and vector-space structure
    @property
    def degree(self) -> tuple:
        return (self.p, self.q)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_top_degree(self) -> bool:
        return self.p > self.space.dim

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BiForm):
            return NotImplemented
        if self.is_zero and other.is_zero:
            return True
        return self.degree == other.degree and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.degree, frozenset(self.terms.items())))

    def _check_same(self, other: "BiForm") -> None:
        if self.degree != other.degree and not (self.is_zero or other.is_zero):
            raise DegreeError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other: "BiForm") -> "BiForm":
        self._check_same(other)
        if other.is_zero:
            return self
        if self.is_zero:
            return other
        terms = dict(self.terms)
        for w, c in other.terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return BiForm(self.space, self.p, self.q, terms)

    def __neg__(self) -> "BiForm":
        return BiForm(self.space, self.p, self.q, {w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "BiForm") -> "BiForm":
        return self + (-other)

    def scale(self, f) -> "BiForm":
        f = Expr.coerce(f)
        return BiForm(self.space, self.p, self.q, {w: f * c for w, c in self.terms.items()})

    def __mul__(self, f) -> "BiForm":
        return self.scale(f)

    __rmul__ = __mul__

    def map_coefficients(self, fn) -> "BiForm":
        return BiForm(self.space, self.p, self.q, {w: fn(c) for w, c in self.terms.items()})

    def coefficient(self, word: Word) -> Expr:
        return self.terms.get(word, Expr())

    def scalar(self) -> Expr:
        """Coefficient of a (0,0)-form, or of the volume word of a (d,0)-form."""
        if self.q:
            raise DegreeError("scalar() needs a horizontal form of degree 0 or d")
        if self.p == 0:
            return self.coefficient(Word((), ()))
        if self.p == self.space.dim:
            return self.coefficient(Word(tuple(range(self.p)), ()))
        raise DegreeError("scalar() needs a horizontal form of degree 0 or d")

    def max_jet_order(self) -> int:
        orders = [max((j.order for j in c.jets()), default=0) for c in self.terms.values()]
        orders += [sum(v[1]) for w in self.terms for v in w.vertical]
        return max(orders, default=0)

    def items(self):
        return sorted(self.terms.items(), key=lambda t: (t[0].horizontal, tuple(vkey(v) for v in t[0].vertical)))

    def word_text(self, w: Word) -> str:
        coords = self.space.coords
        parts = ["d" + coords[mu] for mu in w.horizontal]
        for field, idx in w.vertical:
            s = suffix(idx, coords)
            parts.append("δ" + (f"{field}_{s}" if s else field))
        return "∧".join(parts) if parts else "1"

    def as_dict(self) -> dict:
        return {self.word_text(w): str(c) for w, c in self.items()}

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        return " + ".join(f"({c})·{self.word_text(w)}" for w, c in self.items())

    def __repr__(self) -> str:
        return f"BiForm{self.degree}[{self}]"


def _accumulate(terms: dict, sign: int, word: Word, coeff: Expr) -> None:
    if not sign or coeff.is_zero:
        return
    c = coeff if sign > 0 else -coeff
    if word in terms:
        s = terms[word] + c
        if s.is_zero:
            del terms[word]
        else:
            terms[word] = s
    else:
        terms[word] = c


def wedge(alpha: BiForm, beta: BiForm) -> BiForm:
    p, q = alpha.p + beta.p, alpha.q + beta.q
    d = alpha.space.dim
    if p > d:
        raise DegreeError(f"wedge of horizontal degree {p} exceeds d={d}")
    terms: dict = {}
    for wa, ca in alpha.terms.items():
        for wb, cb in beta.terms.items():
            # move beta's horizontal block across alpha's vertical block
            cross = -1 if (len(wa.vertical) * len(wb.horizontal)) % 2 else 1
            sign, w = canonical_word(wa.horizontal + wb.horizontal, wa.vertical + wb.vertical)
            if sign:
                _accumulate(terms, sign * cross, w, ca * cb)
    return BiForm(alpha.space, p, q, terms)


def _vertical_shift(v: Vertical, mu: int) -> Vertical:
    return (v[0], mi_add(v[1], mu))


def lie_total(alpha: BiForm, mu: int) -> BiForm:
    """Lie derivative along the total derivative ``D_mu`` (horizontal lift of d/dx^mu)."""
    terms: dict = {}
    for w, c in alpha.terms.items():
        _accumulate(terms, 1, w, total_derivative(c, mu))
        for k, v in enumerate(w.vertical):
            verts = w.vertical[:k] + (_vertical_shift(v, mu),) + w.vertical[k + 1:]
            sign, nw = canonical_word(w.horizontal, verts)
            _accumulate(terms, sign, nw, c)
    return BiForm(alpha.space, alpha.p, alpha.q, terms)


def lie_total_multi(alpha: BiForm, index: MultiIndex) -> BiForm:
    for mu in mi_steps(index):
        if alpha.is_zero:
            break
        alpha = lie_total(alpha, mu)
    return alpha


def d_H(alpha: BiForm) -> BiForm:
    """Horizontal differential; the zero form of degree (d+1, q) at top degree."""
    d = alpha.space.dim
    if alpha.p >= d:
        return BiForm(alpha.space, d + 1, alpha.q)
    terms: dict = {}
    for mu in range(d):
        dx = (mu,)
        for w, c in lie_total(BiForm(alpha.space, alpha.p, alpha.q, alpha.terms), mu).terms.items():
            sign, nw = canonical_word(dx + w.horizontal, w.vertical)
            _accumulate(terms, sign, nw, c)
    return BiForm(alpha.space, alpha.p + 1, alpha.q, terms)


def vertical_coordinates(f: Expr, fields: Optional[Iterable[str]] = None) -> list:
    jets = f.jets()
    if fields is not None:
        fields = set(fields)
        jets = {j for j in jets if j.field in fields}
    return sorted(jets, key=lambda j: j.key)


def d_V(alpha: BiForm, fields: Optional[Iterable[str]] = None) -> BiForm:
    """Vertical differential; ``fields`` restricts which jets vary (default: all)."""
    fields = None if fields is None else tuple(fields)
    terms: dict = {}
    p = alpha.p
    for w, c in alpha.terms.items():
        for j in vertical_coordinates(c, fields):
            dc = partial(c, j)
            sign, nw = canonical_word(w.horizontal, ((j.field, j.index),) + w.vertical)
            # th_J moves past p horizontal factors
            _accumulate(terms, sign * (-1) ** p, nw, dc)
    return BiForm(alpha.space, p, alpha.q + 1, terms)


def contract_coordinate(alpha: BiForm, field: str, index: MultiIndex) -> BiForm:
    """Interior product with the coordinate field ``d/du^field_index``."""
    if alpha.q == 0:
        return BiForm(alpha.space, alpha.p, 0)
    terms: dict = {}
    target = (field, tuple(index))
    for w, c in alpha.terms.items():
        for k, v in enumerate(w.vertical):
            if v == target:
                sign = (-1) ** (alpha.p + k)
                nw = Word(w.horizontal, w.vertical[:k] + w.vertical[k + 1:])
                _accumulate(terms, sign, nw, c)
    return BiForm(alpha.space, alpha.p, alpha.q - 1, terms)


@dataclass(frozen=True)
class EvoField:
    """Evolutionary vector field ``Z^a d/du^a``; absent components are zero."""

    space: JetSpace
    components: tuple  # ((field, Expr), ...) sorted by field

    @staticmethod
    def make(space: JetSpace, components: Mapping) -> "EvoField":
        comps = tuple(sorted((f, Expr.coerce(e)) for f, e in components.items() if not Expr.coerce(e).is_zero))
        return EvoField(space, comps)

    def __getitem__(self, field: str) -> Expr:
        return dict(self.components).get(field, Expr())

    def as_dict(self) -> dict:
        return dict(self.components)

    @property
    def fields(self) -> tuple:
        return tuple(f for f, _ in self.components)

    @property
    def is_zero(self) -> bool:
        return not self.components

    def prolong(self, field: str, index: MultiIndex) -> Expr:
        """Component of ``pr Z`` along ``d/du^field_index``: ``D_I Z^field``."""
        return total_derivative_multi(self[field], index)

    def __add__(self, other: "EvoField") -> "EvoField":
        out = self.as_dict()
        for f, e in other.components:
            out[f] = out.get(f, Expr()) + e
        return EvoField.make(self.space, out)

    def __neg__(self) -> "EvoField":
        return EvoField.make(self.space, {f: -e for f, e in self.components})

    def __sub__(self, other: "EvoField") -> "EvoField":
        return self + (-other)

    def scale(self, f) -> "EvoField":
        return EvoField.make(self.space, {a: Expr.coerce(f) * e for a, e in self.components})

    def __str__(self) -> str:
        return "{" + ", ".join(f"{f}: {e}" for f, e in self.components) + "}"


def contract_prolonged(Z: EvoField, alpha: BiForm) -> BiForm:
    """Interior product with ``pr Z``."""
    if alpha.q == 0:
        return BiForm(alpha.space, alpha.p, 0)
    cache: dict = {}
    terms: dict = {}
    comps = Z.as_dict()
    for w, c in alpha.terms.items():
        for k, v in enumerate(w.vertical):
            if v[0] not in comps:
                continue
            if v not in cache:
                cache[v] = total_derivative_multi(comps[v[0]], v[1])
            val = cache[v]
            if val.is_zero:
                continue
            sign = (-1) ** (alpha.p + k)
            nw = Word(w.horizontal, w.vertical[:k] + w.vertical[k + 1:])
            _accumulate(terms, sign, nw, c * val)
    return BiForm(alpha.space, alpha.p, alpha.q - 1, terms)


def lie_evolutionary(Z: EvoField, alpha: BiForm) -> BiForm:
    """``L_{pr Z} = iota_{pr Z} d_V + d_V iota_{pr Z}``."""
    out = contract_prolonged(Z, d_V(alpha))
    if alpha.q:
        out = out + d_V(contract_prolonged(Z, alpha))
    return out


def prolonged_action(Z: EvoField, f: Expr) -> Expr:
    """``pr Z (f) = sum D_I(Z^a) df/du^a_I``."""
    comps = Z.as_dict()
    out = Expr()
    for j in f.jets():
        if j.field in comps:
            out = out + total_derivative_multi(comps[j.field], j.index) * partial(f, j)
    return out


def evo_bracket(Z1: EvoField, Z2: EvoField) -> EvoField:
    """Evolutionary field whose prolongation is ``[pr Z1, pr Z2]``."""
    fields = set(Z1.fields) | set(Z2.fields)
    return EvoField.make(
        Z1.space,
        {a: prolonged_action(Z1, Z2[a]) - prolonged_action(Z2, Z1[a]) for a in fields},
    )
