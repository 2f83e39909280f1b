"""Recursive-descent parser for theory files."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from ..jetcore import (
    FUNCTIONS,
    Background,
    DomainError,
    Expr,
    Jet,
    JetSpace,
    Param,
    apply_function,
    mi_zero,
)
from .lexer import ParseError, Token, tokenize
from .theory import (
    BackgroundDecl,
    GaugeDecl,
    HamiltonianDecl,
    SolutionDecl,
    SymmetryDecl,
    Theory,
    TransgressionDecl,
)

KEYWORDS = {
    "theory", "dim", "coords", "fields", "background", "param", "lagrangian",
    "symmetry", "gauge", "solution", "shell", "hamiltonian", "transgression",
} | set(FUNCTIONS)

MAX_DEPTH = 100
MAX_EXPONENT = 64
MAX_TERMS = 20000


@dataclass
class _PendingTransgression:
    name: str
    tangents: tuple  # tokens, resolved once all solutions are known
    at: Fraction
    base: Optional[Token]


class _Scope:
    """Names visible inside expressions."""

    def __init__(self, coords, fields, backgrounds, params, jets=True):
        self.coords = tuple(coords)
        self.fields = tuple(fields)
        self.backgrounds = dict(backgrounds)  # name -> deps (coordinate indices)
        self.params = tuple(params)
        self.jets = jets


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.depth = 0

    # token helpers
    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Optional[Token] = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "EOF":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("SYM", "IDENT") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        if self.tok.kind != "IDENT":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found {found!r}")
        return self.advance()

    def new_name(self, taken: dict, what: str) -> Token:
        t = self.ident(what)
        if t.text in KEYWORDS:
            raise self.error(f"reserved word {t.text} cannot name a {what}", t)
        if "_" in t.text:
            raise self.error(f"{what} name {t.text} must not contain '_'", t)
        if t.text in taken:
            raise self.error(f"duplicate declaration {t.text}", t)
        taken[t.text] = what
        return t

    def ident_list(self, taken: dict, what: str) -> list:
        names = [self.new_name(taken, what).text]
        while self.at(","):
            self.advance()
            names.append(self.new_name(taken, what).text)
        return names

    # theory
    def parse(self) -> Theory:
        self.expect("theory")
        name = self.ident("theory name").text
        self.expect("{")
        taken: dict = {}
        dim = None
        dim_tok = None
        coords = fields = None
        backgrounds = []
        params = []
        lagrangian = None
        symmetries, gauges, solutions, hams, trans = [], [], [], [], []
        shell = None
        block_names: dict = {}
        deferred = []  # blocks parsed after the header is complete
        while not self.at("}"):
            t = self.tok
            if t.kind == "EOF":
                raise self.error("unexpected end of input, missing '}'")
            kw = self.ident("declaration").text
            if kw == "dim":
                if dim is not None:
                    raise self.error("duplicate declaration dim", t)
                num = self.tok
                if num.kind != "NUMBER" or "." in num.text:
                    raise self.error("dim needs an integer")
                self.advance()
                dim, dim_tok = int(num.text), num
                self.expect(";")
            elif kw == "coords":
                if coords is not None:
                    raise self.error("duplicate declaration coords", t)
                coords = self.ident_list(taken, "coordinate")
                self.expect(";")
            elif kw == "fields":
                if fields is not None:
                    raise self.error("duplicate declaration fields", t)
                fields = self.ident_list(taken, "field")
                self.expect(";")
            elif kw == "param":
                params.extend(self.ident_list(taken, "parameter"))
                self.expect(";")
            elif kw == "background":
                bname = self.new_name(taken, "background").text
                self.expect("(")
                deps = []
                if not self.at(")"):
                    deps.append(self.ident("coordinate"))
                    while self.at(","):
                        self.advance()
                        deps.append(self.ident("coordinate"))
                self.expect(")")
                attrs = []
                if self.at("["):
                    self.advance()
                    if not self.at("]"):
                        attrs.append(self.ident("attribute").text)
                        while self.at(","):
                            self.advance()
                            attrs.append(self.ident("attribute").text)
                    self.expect("]")
                self.expect(";")
                backgrounds.append((bname, deps, tuple(attrs), t))
            elif kw in ("lagrangian", "symmetry", "gauge", "solution", "shell", "hamiltonian", "transgression"):
                # skip to the matching end; parse once declarations are known
                start = self.pos - 1
                self._skip_decl(kw)
                deferred.append((kw, start, t))
            else:
                raise self.error(f"unknown declaration {kw}", t)
        self.expect("}")
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r} after theory")
        end = self.pos

        if coords is None:
            raise self.error("missing coords declaration", self.tokens[0])
        if fields is None:
            raise self.error("missing fields declaration", self.tokens[0])
        if dim is not None and dim != len(coords):
            raise self.error(f"arity mismatch: dim {dim} but {len(coords)} coordinates", dim_tok)
        bg_decls = []
        bg_scope = {}
        for bname, deps, attrs, tok in backgrounds:
            names = []
            for d in deps:
                if d.text not in coords:
                    raise self.error(f"unknown identifier {d.text}", d)
                if d.text in names:
                    raise self.error(f"duplicate dependency {d.text}", d)
                names.append(d.text)
            names.sort(key=coords.index)
            bg_decls.append(BackgroundDecl(bname, tuple(names), attrs))
            bg_scope[bname] = [coords.index(n) for n in names]

        scope = _Scope(coords, fields, bg_scope, params)
        gauge_params: list = []
        for kw, start, t in deferred:
            self.pos = start
            if kw == "gauge":
                g = self._gauge(scope, taken, block_names, gauge_params)
                gauges.append(g)
        for kw, start, t in deferred:
            self.pos = start
            if kw == "lagrangian":
                if lagrangian is not None:
                    raise self.error("duplicate declaration lagrangian", t)
                self.expect("lagrangian")
                self.expect(":")
                lagrangian = self.expr(scope)
                self.expect(";")
            elif kw == "symmetry":
                symmetries.append(self._symmetry(scope, block_names))
            elif kw == "solution":
                solutions.append(self._solution(scope, block_names))
            elif kw == "shell":
                if shell is not None:
                    raise self.error("duplicate declaration shell", t)
                shell = self._shell(scope)
            elif kw == "hamiltonian":
                hams.append(self._hamiltonian(scope, block_names))
            elif kw == "transgression":
                trans.append(self._transgression(scope, block_names))
        self.pos = end
        if lagrangian is None:
            raise self.error("missing lagrangian declaration", self.tokens[0])
        sol_names = {s.name for s in solutions}
        for tr, tok in trans:
            for ref in tr.tangents + ((tr.base,) if tr.base else ()):
                if ref.text not in sol_names:
                    raise self.error(f"unknown identifier {ref.text}", ref)
        return Theory(
            name=name,
            coords=tuple(coords),
            fields=tuple(fields),
            backgrounds=tuple(bg_decls),
            params=tuple(params),
            lagrangian=lagrangian,
            symmetries=tuple(symmetries),
            gauges=tuple(gauges),
            solutions=tuple(solutions),
            shell=shell or (),
            hamiltonians=tuple(hams),
            transgressions=tuple(
                TransgressionDecl(tr.name, tuple(r.text for r in tr.tangents), tr.at, tr.base.text if tr.base else None)
                for tr, _ in trans
            ),
        )

    def _skip_decl(self, kw: str) -> None:
        if kw == "lagrangian":
            while not self.at(";"):
                if self.tok.kind == "EOF":
                    raise self.error("unexpected end of input, missing ';'")
                self.advance()
            self.advance()
            return
        # NAME? { ... } with balanced braces
        while not self.at("{"):
            if self.tok.kind == "EOF" or self.at("}") or self.at(";"):
                raise self.error(f"expected '{{' in {kw} declaration")
            self.advance()
        depth = 0
        while True:
            t = self.advance()
            if t.kind == "EOF":
                raise self.error("unexpected end of input, missing '}'", t)
            if t.text == "{" and t.kind == "SYM":
                depth += 1
            elif t.text == "}" and t.kind == "SYM":
                depth -= 1
                if depth == 0:
                    return

    def _block_name(self, block_names: dict, what: str) -> str:
        t = self.ident(f"{what} name")
        if (what, t.text) in block_names:
            raise self.error(f"duplicate declaration {what} {t.text}", t)
        block_names[(what, t.text)] = t
        return t.text

    def _field_ref(self, scope: _Scope, fields=None) -> str:
        t = self.ident("field")
        if t.text not in (fields or scope.fields):
            raise self.error(f"unknown identifier {t.text}", t)
        return t.text

    def _components(self, scope: _Scope, label: str, seen: dict) -> tuple:
        self.expect(label)
        self.expect("[")
        ftok = self.tok
        f = self._field_ref(scope)
        self.expect("]")
        self.expect("=")
        e = self.expr(scope)
        self.expect(";")
        if f in seen:
            raise self.error(f"duplicate declaration {label}[{f}]", ftok)
        seen[f] = e
        return f, e

    def _kform(self, scope: _Scope) -> tuple:
        if not self.at("{"):
            if len(scope.coords) != 1:
                raise self.error("a (d-1)-form needs the {coord: expr, ...} notation")
            e = self.expr(scope)
            return ((scope.coords[0], e),)
        self.expect("{")
        out: dict = {}
        while True:
            t = self.ident("coordinate")
            if t.text not in scope.coords:
                raise self.error(f"unknown identifier {t.text}", t)
            if t.text in out:
                raise self.error(f"duplicate declaration {t.text}", t)
            self.expect(":")
            out[t.text] = self.expr(scope)
            if self.at(","):
                self.advance()
                continue
            break
        self.expect("}")
        return tuple((c, out[c]) for c in scope.coords if c in out and not out[c].is_zero)

    def _symmetry(self, scope: _Scope, block_names: dict) -> SymmetryDecl:
        self.expect("symmetry")
        name = self._block_name(block_names, "symmetry")
        self.expect("{")
        comps: dict = {}
        K = None
        while not self.at("}"):
            if self.at("K"):
                kt = self.advance()
                if K is not None:
                    raise self.error("duplicate declaration K", kt)
                self.expect("=")
                K = self._kform(scope)
                self.expect(";")
            elif self.at("Z"):
                self._components(scope, "Z", comps)
            else:
                raise self.error(f"expected 'Z[' or 'K =', found {self.tok.text or 'end of input'!r}")
        self.expect("}")
        if not comps:
            raise self.error(f"symmetry {name} declares no components")
        order = [f for f in scope.fields if f in comps]
        return SymmetryDecl(name, tuple((f, comps[f]) for f in order), K)

    def _gauge(self, scope: _Scope, taken: dict, block_names: dict, gauge_params: list) -> GaugeDecl:
        self.expect("gauge")
        name = self._block_name(block_names, "gauge")
        self.expect("{")
        self.expect("param")
        pname = self.new_name(taken, "gauge parameter").text
        self.expect(";")
        gauge_params.append(pname)
        coeffs: dict = {}
        while not self.at("}"):
            self.expect("R")
            self.expect("[")
            ftok = self.tok
            f = self._field_ref(scope)
            self.expect(",")
            mt = self.tok
            idx = self._midx(scope)
            self.expect("]")
            self.expect("=")
            e = self.expr(scope)
            self.expect(";")
            if (f, idx) in coeffs:
                raise self.error(f"duplicate declaration R[{f}, {mt.text}]", ftok)
            coeffs[(f, idx)] = e
        self.expect("}")
        if not coeffs:
            raise self.error(f"gauge {name} declares no coefficients")
        ordered = sorted(coeffs.items(), key=lambda kv: (scope.fields.index(kv[0][0]), sum(kv[0][1]), tuple(-k for k in kv[0][1])))
        return GaugeDecl(name, pname, tuple((f, idx, e) for (f, idx), e in ordered))

    def _midx(self, scope: _Scope) -> tuple:
        t = self.advance()
        d = len(scope.coords)
        if t.kind == "NUMBER" and t.text == "0":
            return mi_zero(d)
        if t.kind != "IDENT":
            raise self.error("expected a derivative multi-index such as t, tx or 0", t)
        try:
            return JetSpace(scope.coords).index(t.text)
        except DomainError:
            raise self.error(f"unknown identifier {t.text}", t) from None

    def _solution(self, scope: _Scope, block_names: dict) -> SolutionDecl:
        self.expect("solution")
        name = self._block_name(block_names, "solution")
        self.expect("{")
        comps: dict = {}
        pvals: dict = {}
        inner = _Scope(scope.coords, scope.fields, scope.backgrounds, scope.params, jets=False)
        while not self.at("}"):
            t = self.ident("field or parameter")
            if t.text in scope.fields:
                target = comps
            elif t.text in scope.params:
                target = pvals
            else:
                raise self.error(f"unknown identifier {t.text}", t)
            if t.text in target:
                raise self.error(f"duplicate declaration {t.text}", t)
            self.expect("=")
            target[t.text] = self.expr(inner)
            self.expect(";")
        close = self.tok
        self.expect("}")
        missing = [f for f in scope.fields if f not in comps]
        if missing:
            raise self.error(
                f"arity mismatch: solution {name} assigns {len(comps)} of {len(scope.fields)} fields", close
            )
        return SolutionDecl(
            name,
            tuple((f, comps[f]) for f in scope.fields),
            tuple((p, pvals[p]) for p in scope.params if p in pvals),
        )

    def _shell(self, scope: _Scope) -> tuple:
        self.expect("shell")
        self.expect("{")
        out: dict = {}
        while not self.at("}"):
            t = self.tok
            e = self.expr(scope)
            atoms = e.atoms()
            if len(e.terms) != 1 or len(atoms) != 1 or not isinstance(next(iter(atoms)), Jet) or e != Expr.of(next(iter(atoms))):
                raise self.error("shell entries must solve for a jet coordinate", t)
            jet = next(iter(atoms))
            if jet.name in out:
                raise self.error(f"duplicate declaration {jet.name}", t)
            self.expect("=")
            out[jet.name] = self.expr(scope)
            self.expect(";")
        self.expect("}")
        return tuple(out.items())

    def _hamiltonian(self, scope: _Scope, block_names: dict) -> HamiltonianDecl:
        self.expect("hamiltonian")
        name = self._block_name(block_names, "hamiltonian")
        self.expect("{")
        H = None
        comps: dict = {}
        while not self.at("}"):
            if self.at("H"):
                ht = self.advance()
                if H is not None:
                    raise self.error("duplicate declaration H", ht)
                self.expect("=")
                H = self._kform(scope)
                self.expect(";")
            elif self.at("Z"):
                self._components(scope, "Z", comps)
            else:
                raise self.error(f"expected 'H =' or 'Z[', found {self.tok.text or 'end of input'!r}")
        self.expect("}")
        order = [f for f in scope.fields if f in comps]
        return HamiltonianDecl(name, H or (), tuple((f, comps[f]) for f in order))

    def _transgression(self, scope: _Scope, block_names: dict):
        self.expect("transgression")
        name = self._block_name(block_names, "transgression")
        self.expect("{")
        tangents = None
        at = None
        base = None
        while not self.at("}"):
            key = self.ident("'tangents', 'at' or 'base'")
            self.expect("=")
            if key.text == "tangents":
                if tangents is not None:
                    raise self.error("duplicate declaration tangents", key)
                first = self.ident("solution name")
                self.expect(",")
                second = self.ident("solution name")
                tangents = (first, second)
            elif key.text == "at":
                if at is not None:
                    raise self.error("duplicate declaration at", key)
                vt = self.tok
                v = self.expr(_Scope(scope.coords, (), {}, (), jets=False))
                if not v.is_constant:
                    raise self.error("'at' needs a rational constant", vt)
                at = v.constant_value()
            elif key.text == "base":
                if base is not None:
                    raise self.error("duplicate declaration base", key)
                base = self.ident("solution name")
            else:
                raise self.error(f"unknown transgression entry {key.text}", key)
            self.expect(";")
        close = self.tok
        self.expect("}")
        if tangents is None:
            raise self.error(f"transgression {name} needs tangents", close)

        return _PendingTransgression(name, tangents, at if at is not None else Fraction(0), base), close

    # expressions
    def expr(self, scope: _Scope) -> Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")
        try:
            out = self.term(scope)
            while self.at("+") or self.at("-"):
                op = self.advance()
                rhs = self.term(scope)
                out = out + rhs if op.text == "+" else out - rhs
                self._guard_size(out, op)
            return out
        finally:
            self.depth -= 1

    def term(self, scope: _Scope) -> Expr:
        out = self.unary(scope)
        while self.at("*") or self.at("/"):
            op = self.advance()
            rhs = self.unary(scope)
            if op.text == "*":
                out = out * rhs
            else:
                if rhs.is_zero:
                    raise self.error("division by zero", op)
                out = out / rhs
            self._guard_size(out, op)
        return out

    def unary(self, scope: _Scope) -> Expr:
        if self.at("-") or self.at("+"):
            op = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self.error("expression nested too deeply", op)
            try:
                inner = self.unary(scope)
            finally:
                self.depth -= 1
            return -inner if op.text == "-" else inner
        return self.power(scope)

    def power(self, scope: _Scope) -> Expr:
        base = self.atom(scope)
        if self.at("^"):
            op = self.advance()
            et = self.tok
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self.error("expression nested too deeply", op)
            try:
                exp = self.unary(scope)
            finally:
                self.depth -= 1
            if not exp.is_constant or exp.constant_value().denominator != 1:
                raise self.error("exponents must be integer constants", et)
            k = int(exp.constant_value())
            if abs(k) > MAX_EXPONENT:
                raise self.error(f"exponent {k} out of range", et)
            if k < 0 and base.is_zero:
                raise self.error("division by zero", op)
            if len(base.terms) > 1 and abs(k) > 12:
                raise self.error("expansion too large", et)
            base = base ** k
            self._guard_size(base, op)
        return base

    def atom(self, scope: _Scope) -> Expr:
        t = self.tok
        if t.kind == "NUMBER":
            self.advance()
            return Expr.const(Fraction(t.text))
        if self.at("("):
            self.advance()
            e = self.expr(scope)
            self.expect(")")
            return e
        if t.kind == "IDENT":
            self.advance()
            if t.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr(scope)
                self.expect(")")
                try:
                    return apply_function(t.text, arg)
                except (DomainError, ValueError, ZeroDivisionError) as exc:
                    raise self.error(f"invalid argument to {t.text}: {exc}", t) from None
            return self.resolve(t, scope)
        found = t.text or "end of input"
        raise self.error(f"unexpected {found!r} in expression")

    def resolve(self, t: Token, scope: _Scope) -> Expr:
        name = t.text
        if name in scope.coords:
            return Expr.of(JetSpace(scope.coords).coord(name))
        if name in scope.params:
            return Expr.of(Param(name))
        head, sep, suffix = name.partition("_")
        space = JetSpace(scope.coords)
        if head in scope.fields:
            if not scope.jets:
                raise self.error(f"jet coordinate {name} not allowed here", t)
            idx = self._suffix(space, suffix, sep, t)
            return Expr.of(Jet(head, idx, scope.coords))
        if head in scope.backgrounds:
            idx = self._suffix(space, suffix, sep, t)
            deps = scope.backgrounds[head]
            if any(k and mu not in deps for mu, k in enumerate(idx)):
                return Expr()
            return Expr.of(Background(head, deps, idx, scope.coords))
        raise self.error(f"unknown identifier {name}", t)

    def _suffix(self, space: JetSpace, suffix: str, sep: str, t: Token) -> tuple:
        if sep and not suffix:
            raise self.error(f"empty derivative suffix in {t.text}", t)
        if not suffix:
            return mi_zero(space.dim)
        try:
            return space.index(suffix)
        except DomainError:
            raise self.error(f"unknown identifier {t.text}", t) from None

    def _guard_size(self, e: Expr, tok: Token) -> None:
        if len(e.terms) > MAX_TERMS:
            raise self.error("expression too large", tok)


def parse_theory(text: str) -> Theory:
    """Parse a theory file; every failure is a ``ParseError`` with a position."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc.reason}", 1, 1) from None
    parser = Parser(text)
    try:
        return parser.parse()
    except ParseError:
        raise
    except RecursionError:
        raise parser.error("input nested too deeply") from None
    except (DomainError, ArithmeticError, ValueError, KeyError, IndexError) as exc:
        raise parser.error(f"invalid input: {exc}") from None
