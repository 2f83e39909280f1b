"""Exact expression kernel over jet-bundle coordinates.

Expressions are kept in a canonical sum-of-products form: a mapping from
monomials (sorted tuples of ``(atom, exponent)``) to rational coefficients.
Two polynomial expressions are equal exactly when their term maps are equal.
Transcendental functions and reciprocals of sums are carried as opaque atoms.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

MultiIndex = tuple  # tuple[int, ...], one exponent per base coordinate

Number = Union[int, Fraction]

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class DomainError(ValueError):
    """Raised on out-of-range coordinate indices and similar misuse."""


class EvaluationError(ArithmeticError):
    """Raised when an expression cannot be evaluated numerically."""


# -- multi-indices ---------------------------------------------------------


def mi_zero(d: int) -> MultiIndex:
    return (0,) * d


def mi_unit(d: int, mu: int) -> MultiIndex:
    return mi_add(mi_zero(d), mu)


def mi_add(index: MultiIndex, mu: int) -> MultiIndex:
    """Increment exponent ``mu`` of a multi-index."""
    if not 0 <= mu < len(index):
        raise DomainError(f"coordinate index {mu} out of range for d={len(index)}")
    return index[:mu] + (index[mu] + 1,) + index[mu + 1:]


def mi_sum(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> Optional[MultiIndex]:
    """Return ``a - b`` or None when some exponent would go negative."""
    out = tuple(x - y for x, y in zip(a, b))
    return None if any(x < 0 for x in out) else out


def mi_order(index: MultiIndex) -> int:
    return sum(index)


def mi_key(index: MultiIndex) -> tuple:
    # graded, then earlier coordinates first
    return (sum(index), tuple(-i for i in index))


def mi_steps(index: MultiIndex) -> list[int]:
    """Coordinates to differentiate along, one entry per derivative."""
    return [mu for mu, k in enumerate(index) for _ in range(k)]


def mi_all(d: int, max_order: int) -> list[MultiIndex]:
    """All multi-indices with order <= max_order, in graded order."""
    out = [mi_zero(d)]
    frontier = [mi_zero(d)]
    seen = {mi_zero(d)}
    for _ in range(max_order):
        nxt = []
        for idx in frontier:
            for mu in range(d):
                j = mi_add(idx, mu)
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        out.extend(nxt)
        frontier = nxt
    return sorted(out, key=mi_key)


def suffix(index: MultiIndex, coords: Sequence[str]) -> str:
    return "".join(name * k for name, k in zip(coords, index))


# -- atoms -----------------------------------------------------------------


class Atom:
    """Base class for the indivisible factors of a monomial."""

    __slots__ = ("key", "_hash")
    special = False

    def _set_key(self, key: tuple) -> None:
        self.key = key
        self._hash = hash(key)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Atom) and self.key == other.key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Atom") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return self.name

    @property
    def name(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError


class Symbol(Atom):
    __slots__ = ()


class BaseCoord(Symbol):
    __slots__ = ("index", "coords")

    def __init__(self, index: int, coords: Sequence[str]):
        self.index = index
        self.coords = tuple(coords)
        self._set_key((0, index))

    @property
    def name(self) -> str:
        return self.coords[self.index]


class Jet(Symbol):
    """Jet coordinate ``u^a_I``."""

    __slots__ = ("field", "index", "coords")

    def __init__(self, field: str, index: MultiIndex, coords: Sequence[str]):
        self.field = field
        self.index = tuple(index)
        self.coords = tuple(coords)
        self._set_key((1, field) + mi_key(self.index))

    @property
    def order(self) -> int:
        return sum(self.index)

    @property
    def name(self) -> str:
        s = suffix(self.index, self.coords)
        return f"{self.field}_{s}" if s else self.field

    def shifted(self, mu: int) -> "Jet":
        return Jet(self.field, mi_add(self.index, mu), self.coords)


class Background(Symbol):
    """Fixed function of the base coordinates, with its partial-derivative index."""

    __slots__ = ("label", "deps", "index", "coords")

    def __init__(self, label: str, deps: Iterable[int], index: MultiIndex, coords: Sequence[str]):
        self.label = label
        self.deps = tuple(sorted(set(deps)))
        self.index = tuple(index)
        self.coords = tuple(coords)
        self._set_key((2, label) + mi_key(self.index))

    @property
    def name(self) -> str:
        s = suffix(self.index, self.coords)
        return f"{self.label}_{s}" if s else self.label

    def shifted(self, mu: int) -> Optional["Background"]:
        if mu not in self.deps:
            return None
        return Background(self.label, self.deps, mi_add(self.index, mu), self.coords)


class Param(Symbol):
    """Constant symbol (coupling constant or free solution constant)."""

    __slots__ = ("label",)

    def __init__(self, label: str):
        self.label = label
        self._set_key((3, label))

    @property
    def name(self) -> str:
        return self.label


class Func(Atom):
    """Opaque application of one of the elementary functions."""

    __slots__ = ("fname", "arg")

    def __init__(self, fname: str, arg: "Expr"):
        if fname not in FUNCTIONS:
            raise DomainError(f"unknown function {fname}")
        self.fname = fname
        self.arg = arg
        self._set_key((4, fname, arg.key))

    @property
    def special(self) -> bool:
        return self.fname == "sqrt"

    @property
    def name(self) -> str:
        return f"{self.fname}({self.arg})"


class Recip(Atom):
    """``base^k`` for a multi-term base; only negative exponents are stored."""

    __slots__ = ("base",)
    special = True

    def __init__(self, base: "Expr"):
        self.base = base
        self._set_key((5, base.key))

    @property
    def name(self) -> str:
        return f"({self.base})"


# -- expressions -----------------------------------------------------------

Monomial = tuple  # tuple[tuple[Atom, int], ...] sorted by atom key


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    out = []
    i = j = 0
    n1, n2 = len(m1), len(m2)
    while i < n1 and j < n2:
        a, ea = m1[i]
        b, eb = m2[j]
        if a.key == b.key:
            e = ea + eb
            if e:
                out.append((a, e))
            i += 1
            j += 1
        elif a.key < b.key:
            out.append(m1[i])
            i += 1
        else:
            out.append(m2[j])
            j += 1
    out.extend(m1[i:])
    out.extend(m2[j:])
    return tuple(out)


def _needs_fixup(mono: Monomial) -> bool:
    for a, e in mono:
        if a.special:
            if isinstance(a, Recip) and e > 0:
                return True
            if isinstance(a, Func) and (e >= 2 or e <= -2):
                return True
    return False


def _fixup(mono: Monomial, coeff: Fraction) -> "Expr":
    """Expand sqrt powers and positive powers of reciprocal atoms."""
    out = Expr.const(coeff)
    rest = []
    for a, e in mono:
        if isinstance(a, Recip) and e > 0:
            out = out * (a.base ** e)
        elif isinstance(a, Func) and a.fname == "sqrt" and (e >= 2 or e <= -2):
            q, r = divmod(e, 2)
            out = out * (a.arg ** q)
            if r:
                rest.append((a, r))
        else:
            rest.append((a, e))
    return out * Expr({tuple(rest): Fraction(1)})


def _frac(x: Number) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected exact rational, got {type(x).__name__}")


class Expr:
    """Immutable exact expression in canonical sum-of-products form."""

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] = None):
        # caller guarantees: monomials canonical, coefficients non-zero
        self.terms = dict(terms) if terms else {}
        self._key = None
        self._hash = None

    # construction
    @staticmethod
    def const(value: Number) -> "Expr":
        value = _frac(value)
        return Expr({(): value}) if value else Expr()

    @staticmethod
    def of(atom: Atom, exponent: int = 1) -> "Expr":
        return Expr({((atom, exponent),): Fraction(1)}) if exponent else Expr.const(1)

    @staticmethod
    def coerce(x) -> "Expr":
        if isinstance(x, Expr):
            return x
        if isinstance(x, Atom):
            return Expr.of(x)
        return Expr.const(x)

    # identity
    @property
    def key(self) -> tuple:
        if self._key is None:
            items = sorted(
                ((tuple((a.key, e) for a, e in m), c) for m, c in self.terms.items()),
                key=lambda t: t[0],
            )
            self._key = tuple((m, c.numerator, c.denominator) for m, c in items)
        return self._key

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(self.key)
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Expr.const(other)
        if not isinstance(other, Expr):
            return NotImplemented
        return self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant:
            raise ValueError(f"{self} is not a rational constant")
        return self.terms.get((), Fraction(0))

    @property
    def is_polynomial(self) -> bool:
        """True when no opaque atoms and no negative powers occur."""
        return all(
            isinstance(a, Symbol) and e > 0 for m in self.terms for a, e in m
        )

    # arithmetic
    def __add__(self, other) -> "Expr":
        other = Expr.coerce(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            v = out.get(m)
            if v is None:
                out[m] = c
            else:
                v = v + c
                if v:
                    out[m] = v
                else:
                    del out[m]
        return Expr(out)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr({m: -c for m, c in self.terms.items()})

    def __sub__(self, other) -> "Expr":
        return self + (-Expr.coerce(other))

    def __rsub__(self, other) -> "Expr":
        return Expr.coerce(other) - self

    def __mul__(self, other) -> "Expr":
        other = Expr.coerce(other)
        if not self.terms or not other.terms:
            return Expr()
        out: dict = {}
        slow = []
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                c = c1 * c2
                if _needs_fixup(m):
                    slow.append(_fixup(m, c))
                    continue
                v = out.get(m)
                if v is None:
                    out[m] = c
                else:
                    v = v + c
                    if v:
                        out[m] = v
                    else:
                        del out[m]
        res = Expr(out)
        for s in slow:
            res = res + s
        return res

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Expr":
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        if k == 0:
            return Expr.const(1)
        if k < 0:
            return self.reciprocal() ** (-k)
        result = Expr.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def reciprocal(self) -> "Expr":
        if not self.terms:
            raise ZeroDivisionError("division by zero expression")
        if len(self.terms) == 1:
            (m, c), = self.terms.items()
            inv = tuple((a, -e) for a, e in m)
            if _needs_fixup(inv):
                return _fixup(inv, 1 / c)
            return Expr({inv: 1 / c})
        return Expr.of(Recip(self), -1)

    def __truediv__(self, other) -> "Expr":
        return self * Expr.coerce(other).reciprocal()

    def __rtruediv__(self, other) -> "Expr":
        return Expr.coerce(other) * self.reciprocal()

    # inspection
    def atoms(self) -> set:
        out = set()
        for m in self.terms:
            for a, _ in m:
                out.add(a)
        return out

    def free_symbols(self) -> set:
        out = set()
        for a in self.atoms():
            if isinstance(a, Symbol):
                out.add(a)
            elif isinstance(a, Func):
                out |= a.arg.free_symbols()
            elif isinstance(a, Recip):
                out |= a.base.free_symbols()
        return out

    def jets(self) -> set:
        return {s for s in self.free_symbols() if isinstance(s, Jet)}

    def coefficient_items(self):
        """Terms as (Expr monomial, Fraction) pairs in canonical order."""
        for m in sorted(self.terms, key=lambda m: tuple((a.key, e) for a, e in m)):
            yield Expr({m: Fraction(1)}), self.terms[m]

    # substitution
    def subs(self, mapping: Mapping[Symbol, "Expr"]) -> "Expr":
        if not mapping or not self.terms:
            return self
        cache: dict = {}

        def image(a: Atom):
            if a in cache:
                return cache[a]
            if a in mapping:
                r = Expr.coerce(mapping[a])
            elif isinstance(a, Func):
                r = apply_function(a.fname, a.arg.subs(mapping))
            elif isinstance(a, Recip):
                r = a.base.subs(mapping)
            else:
                r = None
            cache[a] = r
            return r

        out = Expr()
        for m, c in self.terms.items():
            keep = []
            factor = Expr.const(c)
            for a, e in m:
                r = image(a)
                if r is None:
                    keep.append((a, e))
                elif isinstance(a, Recip):
                    factor = factor * (r ** e)
                else:
                    factor = factor * (r ** e)
            if keep:
                factor = factor * Expr({tuple(keep): Fraction(1)})
            out = out + factor
        return out

    def evaluate(self, values: Mapping[Symbol, float]) -> float:
        total = 0.0
        for m, c in self.terms.items():
            v = float(c)
            for a, e in m:
                v *= _eval_atom(a, values) ** e
            total += v
        return total

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"Expr({render(self)})"


def _eval_atom(a: Atom, values: Mapping[Symbol, float]) -> float:
    if isinstance(a, Symbol):
        try:
            return float(values[a])
        except KeyError:
            raise EvaluationError(f"no numeric value for {a.name}") from None
    try:
        if isinstance(a, Recip):
            v = a.base.evaluate(values)
            if v == 0.0:
                raise EvaluationError(f"singular reciprocal of {a.base}")
            return v
        x = a.arg.evaluate(values)
        if a.fname == "sin":
            return math.sin(x)
        if a.fname == "cos":
            return math.cos(x)
        if a.fname == "exp":
            return math.exp(x)
        if a.fname == "ln":
            return math.log(x)
        return math.sqrt(x)
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise EvaluationError(f"cannot evaluate {a.name}: {exc}") from None


def _rational_sqrt(q: Fraction) -> Optional[Fraction]:
    if q < 0:
        return None
    n, d = math.isqrt(q.numerator), math.isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def apply_function(fname: str, arg) -> Expr:
    """Build ``fname(arg)`` with constant folding at the obvious points."""
    arg = Expr.coerce(arg)
    if arg.is_constant:
        v = arg.constant_value()
        if fname == "sin" and v == 0:
            return Expr()
        if fname == "cos" and v == 0:
            return Expr.const(1)
        if fname == "exp" and v == 0:
            return Expr.const(1)
        if fname == "ln" and v == 1:
            return Expr()
        if fname == "sqrt":
            r = _rational_sqrt(v)
            if r is not None:
                return Expr.const(r)
    return Expr.of(Func(fname, arg))


# -- differentiation -------------------------------------------------------


def _derive(e: Expr, atom_derivative: Callable[[Atom], Optional[Expr]]) -> Expr:
    """Apply the derivation determined by its action on atoms."""
    cache: dict = {}
    out = Expr()
    for m, c in e.terms.items():
        for i, (a, k) in enumerate(m):
            if a in cache:
                da = cache[a]
            else:
                da = cache[a] = atom_derivative(a)
            if da is None or da.is_zero:
                continue
            if k == 1:
                rest = m[:i] + m[i + 1:]
            else:
                rest = m[:i] + ((a, k - 1),) + m[i + 1:]
            out = out + Expr({rest: c * k}) * da
    return out


def _chain(a: Atom, inner: Callable[[Expr], Expr]) -> Optional[Expr]:
    if isinstance(a, Recip):
        # d(base^-1) handled through the exponent rule with base' as atom derivative
        return inner(a.base)
    darg = inner(a.arg)
    if darg.is_zero:
        return None
    f = a.fname
    if f == "sin":
        outer = apply_function("cos", a.arg)
    elif f == "cos":
        outer = -apply_function("sin", a.arg)
    elif f == "exp":
        outer = Expr.of(a)
    elif f == "ln":
        outer = a.arg.reciprocal()
    else:
        outer = Fraction(1, 2) * Expr.of(a, -1)
    return outer * darg


def partial(e: Expr, s: Symbol) -> Expr:
    """Formal partial derivative, all distinct symbols independent."""

    def d_atom(a: Atom) -> Optional[Expr]:
        if isinstance(a, Symbol):
            if a == s:
                return Expr.const(1)
            if isinstance(a, Background) and isinstance(s, BaseCoord):
                b = a.shifted(s.index)
                return Expr.of(b) if b is not None else None
            return None
        return _chain(a, lambda x: partial(x, s))

    return _derive(e, d_atom)


def total_derivative(e: Expr, mu: int) -> Expr:
    """``D_mu e = d e/d x^mu + sum u^a_{I+mu} d e / d u^a_I``."""

    def d_atom(a: Atom) -> Optional[Expr]:
        if isinstance(a, BaseCoord):
            if not 0 <= mu < len(a.coords):
                raise DomainError(f"coordinate index {mu} out of range")
            return Expr.const(1) if a.index == mu else None
        if isinstance(a, Jet):
            return Expr.of(a.shifted(mu))
        if isinstance(a, Background):
            b = a.shifted(mu)
            return Expr.of(b) if b is not None else None
        if isinstance(a, Param):
            return None
        return _chain(a, lambda x: total_derivative(x, mu))

    return _derive(e, d_atom)


def total_derivative_multi(e: Expr, index: MultiIndex) -> Expr:
    for mu in mi_steps(index):
        if e.is_zero:
            break
        e = total_derivative(e, mu)
    return e


def max_jet_order(e: Expr) -> int:
    return max((j.order for j in e.jets()), default=0)


def jet_degree(mono: Monomial) -> int:
    """Total polynomial degree of a monomial in jet coordinates."""
    deg = 0
    for a, k in mono:
        if isinstance(a, Jet):
            if k < 0:
                raise DomainError("negative power of a jet coordinate")
            deg += k
        elif not isinstance(a, Symbol) and any(isinstance(s, Jet) for s in Expr.of(a).free_symbols()):
            raise DomainError(f"jet coordinates inside opaque factor {a.name}")
    return deg


# -- rendering -------------------------------------------------------------


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _render_atom(a: Atom, e: int) -> str:
    if isinstance(a, Recip):
        s = f"({render(a.base)})"
    else:
        s = a.name
    if e == 1:
        return s
    return f"{s}^{e}" if e > 0 else f"{s}^({e})"


def render(e: Expr) -> str:
    """Canonical text of an expression; re-parseable by the theory DSL."""
    if not e.terms:
        return "0"
    parts = []
    for m in sorted(e.terms, key=lambda m: (-sum(abs(k) for _, k in m), tuple((a.key, k) for a, k in m))):
        c = e.terms[m]
        sign = "-" if c < 0 else "+"
        c = abs(c)
        factors = [_render_atom(a, k) for a, k in m]
        if not factors:
            body = _fmt_coeff(c)
        elif c == 1:
            body = "*".join(factors)
        else:
            body = _fmt_coeff(c) + "*" + "*".join(factors)
        parts.append((sign, body))
    first_sign, first = parts[0]
    text = ("-" if first_sign == "-" else "") + first
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


# -- coordinate context ----------------------------------------------------


class JetSpace:
    """Base coordinate names and field component names of a jet bundle."""

    __slots__ = ("coords", "fields")

    def __init__(self, coords: Sequence[str], fields: Sequence[str] = ()):
        self.coords = tuple(coords)
        self.fields = tuple(fields)
        if not self.coords:
            raise DomainError("at least one base coordinate is required")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, JetSpace) and (self.coords, self.fields) == (other.coords, other.fields)

    def __hash__(self) -> int:
        return hash((self.coords, self.fields))

    def __repr__(self) -> str:
        return f"JetSpace(coords={self.coords}, fields={self.fields})"

    def with_fields(self, extra: Iterable[str]) -> "JetSpace":
        fields = list(self.fields)
        for f in extra:
            if f not in fields:
                fields.append(f)
        return JetSpace(self.coords, fields)

    def coord(self, mu) -> BaseCoord:
        if isinstance(mu, str):
            mu = self.coords.index(mu)
        if not 0 <= mu < self.dim:
            raise DomainError(f"coordinate index {mu} out of range")
        return BaseCoord(mu, self.coords)

    def x(self, mu) -> Expr:
        return Expr.of(self.coord(mu))

    def index(self, which) -> MultiIndex:
        """Multi-index from a tuple, or from a string of coordinate names like ``"tx"``."""
        if isinstance(which, str):
            idx = [0] * self.dim
            rest = which
            names = sorted(self.coords, key=len, reverse=True)
            while rest:
                for name in names:
                    if rest.startswith(name):
                        idx[self.coords.index(name)] += 1
                        rest = rest[len(name):]
                        break
                else:
                    raise DomainError(f"cannot read derivative suffix {which!r}")
            return tuple(idx)
        which = tuple(which)
        if len(which) != self.dim or any(k < 0 for k in which):
            raise DomainError(f"bad multi-index {which} for d={self.dim}")
        return which

    def jet_symbol(self, field: str, index=None) -> Jet:
        index = mi_zero(self.dim) if index is None else self.index(index)
        return Jet(field, index, self.coords)

    def u(self, field: str, index=None) -> Expr:
        return Expr.of(self.jet_symbol(field, index))

    def param(self, name: str) -> Expr:
        return Expr.of(Param(name))

    def background(self, name: str, deps: Iterable = None, index=None) -> Expr:
        deps = range(self.dim) if deps is None else [self.coords.index(d) if isinstance(d, str) else d for d in deps]
        index = mi_zero(self.dim) if index is None else self.index(index)
        return Expr.of(Background(name, deps, index, self.coords))
