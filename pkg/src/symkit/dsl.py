"""Problem-file DSL: declarations, one equation, and a task block.

Grammar (semicolon-terminated statements, # starts a line comment):

    problem      := statement*
    statement    := "vars" idlist ";" | "unknowns" idlist ";"
                  | "translations" idlist ";"
                  | "eq" expr "=" expr ";"
                  | "task" ident option* ";"
    option       := "order" "=" int | "qmax" "=" int
                  | "caps" "=" int ("," int)*
                  | "lambda" "=" weight ("," weight)*
    weight       := scalar | "(" scalar ("," scalar)* ")"
    expr         := term (("+" | "-") term)*
    term         := factor ("*" factor)*
    factor       := "-" factor | base ("^" nat)?
    base         := rational | "i" | ident
                  | "D" "[" ident ("," ident)+ "]" | "(" expr ")"

Expressions are parsed straight into exact ExpPoly values over a jet
context sized to the derivatives that actually occur, so rendering a
parsed problem and parsing it again reproduces it bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .errors import DslSyntaxError, SemanticError, VariableMismatch
from .field import GaussRat, I, ONE
from .jet import JetContext
from .poly import ExpPoly

PROBLEM_FILE_EXTENSION = ".pde"


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_PUNCT = {";", ",", "=", "+", "-", "*", "^", "/", "(", ")", "[", "]"}


@dataclass(frozen=True)
class Token:
    kind: str  # "ident" | "number" | punctuation literal | "eof"
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line = 1
    col = 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(ch, ch, line, col))
            i += 1
            col += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and text[i].isdigit():
                i += 1
            tokens.append(Token("number", text[start:i], line, col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(Token("ident", text[start:i], line, col))
            col += i - start
            continue
        raise DslSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


# ---------------------------------------------------------------------------
# parsed problem
# ---------------------------------------------------------------------------

@dataclass
class TaskSpec:
    name: str = "solve"
    order: Optional[int] = None
    qmax: Optional[int] = None
    caps: Optional[Tuple[int, ...]] = None
    lambdas: Optional[Tuple[Tuple[GaussRat, ...], ...]] = None

    def __eq__(self, other):
        return isinstance(other, TaskSpec) and (
            (self.name, self.order, self.qmax, self.caps, self.lambdas)
            == (other.name, other.order, other.qmax, other.caps, other.lambdas)
        )


@dataclass
class ProblemFile:
    """Declarations plus one equation lhs = rhs over an exact jet context."""

    axes: Tuple[str, ...]
    unknowns: Tuple[str, ...]
    translations: Tuple[str, ...]
    jctx: JetContext
    lhs: ExpPoly
    rhs: ExpPoly
    task: TaskSpec

    def __eq__(self, other):
        # canonical expression text is independent of the jet-order padding
        # of the underlying contexts
        return isinstance(other, ProblemFile) and (
            self.axes == other.axes
            and self.unknowns == other.unknowns
            and self.translations == other.translations
            and _render_expr(self.lhs, self.jctx) == _render_expr(other.lhs, other.jctx)
            and _render_expr(self.rhs, self.jctx) == _render_expr(other.rhs, other.jctx)
            and self.task == other.task
        )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, expected=()):
        tok = self.peek()
        raise DslSyntaxError(message, tok.line, tok.column, expected)

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"got {tok.text or 'end of input'!r}", expected={kind})
        return self.advance()

    def accept(self, kind: str) -> Optional[Token]:
        if self.peek().kind == kind:
            return self.advance()
        return None

    # -- statements ---------------------------------------------------

    def parse_problem(self) -> ProblemFile:
        axes: List[str] = []
        unknowns: List[str] = []
        translations: List[str] = []
        equation_tokens: Optional[Tuple[int, int, int]] = None
        task = TaskSpec()
        saw_task = False
        saw_eq = False
        while self.peek().kind != "eof":
            tok = self.expect("ident")
            if tok.text == "vars":
                axes.extend(self.parse_idlist())
            elif tok.text == "unknowns":
                unknowns.extend(self.parse_idlist())
            elif tok.text == "translations":
                translations.extend(self.parse_idlist())
            elif tok.text == "eq":
                if saw_eq:
                    raise SemanticError("exactly one equation block is allowed")
                saw_eq = True
                start = self.pos
                depth = 0
                eq_pos = None
                while True:
                    t = self.peek()
                    if t.kind == "eof":
                        self.fail("unterminated equation", expected={";"})
                    if t.kind in ("(", "["):
                        depth += 1
                    elif t.kind in (")", "]"):
                        depth -= 1
                    elif t.kind == "=" and depth == 0:
                        eq_pos = self.pos
                    elif t.kind == ";" and depth == 0:
                        break
                    self.advance()
                end = self.pos
                self.expect(";")
                if eq_pos is None:
                    tok_at = self.tokens[end]
                    raise DslSyntaxError(
                        "equation has no '='", tok_at.line, tok_at.column, {"="}
                    )
                equation_tokens = (start, eq_pos, end)
            elif tok.text == "task":
                if saw_task:
                    raise SemanticError("exactly one task block is allowed")
                saw_task = True
                task = self.parse_task()
            else:
                self.fail(
                    f"unknown statement {tok.text!r}",
                    expected={"vars", "unknowns", "translations", "eq", "task"},
                )
        if not axes or not unknowns:
            raise SemanticError("need at least one declared variable and unknown")
        if not saw_eq or equation_tokens is None:
            raise SemanticError("missing equation block")
        for name in translations:
            if name not in axes and name not in unknowns:
                raise SemanticError(f"translation {name!r} is not a declared variable")
        seen = set()
        for name in list(axes) + list(unknowns):
            if name in seen or name in ("i", "D"):
                raise SemanticError(f"bad or duplicate declaration {name!r}")
            seen.add(name)

        start, eq_pos, end = equation_tokens
        max_order = _scan_max_order(self.tokens[start:end])
        jctx = JetContext(axes, unknowns, max_order, translations)
        lhs = _ExprParser(self.tokens, start, eq_pos, jctx).parse()
        rhs = _ExprParser(self.tokens, eq_pos + 1, end, jctx).parse()
        if lhs.is_zero and rhs.is_zero:
            raise SemanticError("equation is identically 0 = 0")
        return ProblemFile(
            axes=tuple(axes),
            unknowns=tuple(unknowns),
            translations=tuple(translations),
            jctx=jctx,
            lhs=lhs,
            rhs=rhs,
            task=task,
        )

    def parse_idlist(self) -> List[str]:
        names = [self.expect("ident").text]
        while self.accept(","):
            names.append(self.expect("ident").text)
        self.expect(";")
        return names

    def parse_task(self) -> TaskSpec:
        name = self.expect("ident").text
        task = TaskSpec(name=name)
        while self.peek().kind != ";":
            key = self.expect("ident").text
            self.expect("=")
            if key == "order":
                task.order = int(self.expect("number").text)
            elif key == "qmax":
                task.qmax = int(self.expect("number").text)
            elif key == "caps":
                caps = [int(self.expect("number").text)]
                while self.accept(","):
                    caps.append(int(self.expect("number").text))
                task.caps = tuple(caps)
            elif key == "lambda":
                weights = [self.parse_weight()]
                while self.accept(","):
                    weights.append(self.parse_weight())
                task.lambdas = tuple(weights)
            else:
                self.fail(
                    f"unknown task option {key!r}",
                    expected={"order", "qmax", "caps", "lambda"},
                )
        self.expect(";")
        return task

    def parse_weight(self) -> Tuple[GaussRat, ...]:
        if self.accept("("):
            vals = [self.parse_scalar()]
            while self.accept(","):
                vals.append(self.parse_scalar())
            self.expect(")")
            return tuple(vals)
        return (self.parse_scalar(),)

    def parse_scalar(self) -> GaussRat:
        value = self.parse_signed_atom()
        while self.peek().kind in ("+", "-"):
            value = value + self.parse_signed_atom()
        return value

    def parse_signed_atom(self) -> GaussRat:
        sign = ONE
        while True:
            if self.accept("-"):
                sign = -sign
                continue
            if self.accept("+"):
                continue
            break
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            num = int(tok.text)
            den = 1
            if self.accept("/"):
                den = int(self.expect("number").text)
            value = GaussRat(Fraction(num, den))
            if self.accept("*"):
                itok = self.expect("ident")
                if itok.text != "i":
                    raise DslSyntaxError("expected i", itok.line, itok.column, {"i"})
                value = value * I
            return sign * value
        if tok.kind == "ident" and tok.text == "i":
            self.advance()
            return sign * I
        self.fail("expected a scalar", expected={"number", "i"})


def _scan_max_order(tokens: Sequence[Token]) -> int:
    """Highest derivative count inside any D[...] form (cheap pre-pass)."""
    best = 1
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind == "ident" and tok.text == "D" and i + 1 < len(tokens) and tokens[i + 1].kind == "[":
            j = i + 2
            count = -1  # first ident is the unknown
            while j < len(tokens) and tokens[j].kind != "]":
                if tokens[j].kind == "ident":
                    count += 1
                j += 1
            best = max(best, count)
            i = j
        i += 1
    return best


class _ExprParser:
    """Recursive-descent expression parser over a token slice."""

    def __init__(self, tokens: Sequence[Token], start: int, end: int, jctx: JetContext):
        stop = tokens[end]
        self.tokens = list(tokens[start:end]) + [Token("eof", "", stop.line, stop.column)]
        self.pos = 0
        self.jctx = jctx

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, expected=()):
        tok = self.peek()
        raise DslSyntaxError(message, tok.line, tok.column, expected)

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            self.fail(f"got {tok.text or 'end of expression'!r}", expected={kind})
        return self.advance()

    def accept(self, kind: str) -> Optional[Token]:
        if self.peek().kind == kind:
            return self.advance()
        return None

    def parse(self) -> ExpPoly:
        value = self.parse_expr()
        if self.peek().kind != "eof":
            self.fail(f"trailing {self.peek().text!r}", expected={"+", "-", "*", "^"})
        return value

    def parse_expr(self) -> ExpPoly:
        value = self.parse_term()
        while True:
            if self.accept("+"):
                value = value + self.parse_term()
            elif self.accept("-"):
                value = value - self.parse_term()
            else:
                return value

    def parse_term(self) -> ExpPoly:
        value = self.parse_factor()
        while self.accept("*"):
            value = value * self.parse_factor()
        return value

    def parse_factor(self) -> ExpPoly:
        if self.accept("-"):
            return -self.parse_factor()
        base = self.parse_base()
        if self.accept("^"):
            tok = self.expect("number")
            return base ** int(tok.text)
        return base

    def parse_base(self) -> ExpPoly:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            num = int(tok.text)
            if self.accept("/"):
                den_tok = self.expect("number")
                return ExpPoly.const(self.jctx.ctx, GaussRat(Fraction(num, int(den_tok.text))))
            return ExpPoly.const(self.jctx.ctx, num)
        if tok.kind == "(":
            self.advance()
            value = self.parse_expr()
            self.expect(")")
            return value
        if tok.kind == "ident":
            self.advance()
            if tok.text == "i":
                return ExpPoly.const(self.jctx.ctx, I)
            if tok.text == "D":
                return self.parse_derivative(tok)
            try:
                return ExpPoly.variable(self.jctx.ctx, tok.text)
            except VariableMismatch:
                raise SemanticError(
                    f"{tok.line}:{tok.column}: undeclared variable {tok.text!r}"
                ) from None
        self.fail(
            f"got {tok.text or 'end of expression'!r}",
            expected={"number", "ident", "(", "-"},
        )

    def parse_derivative(self, d_tok: Token) -> ExpPoly:
        self.expect("[")
        name_tok = self.expect("ident")
        if name_tok.text not in self.jctx.unknowns:
            raise SemanticError(
                f"{name_tok.line}:{name_tok.column}: D[...] needs a declared unknown, "
                f"got {name_tok.text!r}"
            )
        alpha = self.jctx.unknowns.index(name_tok.text)
        J = [0] * self.jctx.m
        count = 0
        while self.accept(","):
            axis_tok = self.expect("ident")
            if axis_tok.text not in self.jctx.axes:
                raise SemanticError(
                    f"{axis_tok.line}:{axis_tok.column}: {axis_tok.text!r} is not an axis"
                )
            J[self.jctx.axes.index(axis_tok.text)] += 1
            count += 1
        self.expect("]")
        if count == 0:
            raise SemanticError(
                f"{d_tok.line}:{d_tok.column}: D[...] needs at least one axis"
            )
        return self.jctx.jet_poly(alpha, tuple(J))


def parse(text: str) -> ProblemFile:
    """Parse problem-file text; DslSyntaxError / SemanticError on bad input."""
    return _Parser(tokenize(text)).parse_problem()


# ---------------------------------------------------------------------------
# rendering (canonical; parse(render(p)) == p)
# ---------------------------------------------------------------------------

def _render_expr(p: ExpPoly, jctx: JetContext) -> str:
    """Expression text within the DSL grammar (no exp factors occur here)."""
    if p.is_zero:
        return "0"
    if any(any(w) for w in p.parts):
        raise SemanticError("equation expressions cannot carry exponential weights")
    (_, mp), = p.parts.items()
    pieces = []
    for exps, coeff in mp.sorted_terms():
        factors = []
        for idx, e in enumerate(exps):
            if not e:
                continue
            var = jctx.ctx.vars[idx]
            info = jctx.jet_info(idx)
            if info is not None and sum(info[1]) > 0:
                alpha, J = info
                inner = [jctx.unknowns[alpha]]
                for axis, cnt in enumerate(J):
                    inner.extend([jctx.axes[axis]] * cnt)
                name = f"D[{','.join(inner)}]"
            else:
                name = var.name
            factors.append(name if e == 1 else f"{name}^{e}")
        negative = (coeff.re < 0) if coeff.re else (coeff.im < 0)
        mag = -coeff if negative else coeff
        coeff_part = _render_scalar_factor(mag)
        if factors and coeff_part == "1":
            body = "*".join(factors)
        elif factors:
            body = "*".join([coeff_part] + factors)
        else:
            body = coeff_part
        if not pieces:
            pieces.append(f"-{body}" if negative else body)
        else:
            pieces.append(f" - {body}" if negative else f" + {body}")
    return "".join(pieces)


def _render_scalar_factor(c: GaussRat) -> str:
    """A scalar as a grammar-conformant product factor."""
    if c.re and c.im:
        re_s = _rat_str(c.re)
        if c.im == 1:
            return f"({re_s} + i)"
        if c.im == -1:
            return f"({re_s} - i)"
        im_s = _rat_str(abs(c.im))
        sign = "+" if c.im > 0 else "-"
        return f"({re_s} {sign} {im_s}*i)"
    if c.im:
        if c.im == 1:
            return "i"
        if c.im == -1:
            return "(-i)"
        return f"{_rat_str(c.im)}*i" if c.im > 0 else f"(-{_rat_str(-c.im)}*i)"
    return _rat_str(c.re) if c.re >= 0 else f"(-{_rat_str(-c.re)})"


def _rat_str(x: Fraction) -> str:
    return str(x)


def _render_weight_entry(w: Tuple[GaussRat, ...]) -> str:
    def one(v: GaussRat) -> str:
        if v.re and v.im:
            sign = "+" if v.im > 0 else "-"
            im = abs(v.im)
            im_s = "i" if im == 1 else f"{_rat_str(im)}*i"
            return f"{_rat_str(v.re)}{sign}{im_s}"
        if v.im:
            if abs(v.im) == 1:
                return "i" if v.im > 0 else "-i"
            return f"{_rat_str(v.im)}*i"
        return _rat_str(v.re)

    if len(w) == 1:
        return one(w[0])
    return "(" + ",".join(one(v) for v in w) + ")"


def render(problem: ProblemFile) -> str:
    lines = [
        f"vars {', '.join(problem.axes)};",
        f"unknowns {', '.join(problem.unknowns)};",
    ]
    if problem.translations:
        lines.append(f"translations {', '.join(problem.translations)};")
    lhs = _render_expr(problem.lhs, problem.jctx)
    rhs = _render_expr(problem.rhs, problem.jctx)
    lines.append(f"eq {lhs} = {rhs};")
    task = problem.task
    opts = []
    if task.order is not None:
        opts.append(f"order={task.order}")
    if task.qmax is not None:
        opts.append(f"qmax={task.qmax}")
    if task.caps is not None:
        opts.append("caps=" + ",".join(str(c) for c in task.caps))
    if task.lambdas is not None:
        opts.append("lambda=" + ",".join(_render_weight_entry(w) for w in task.lambdas))
    lines.append(f"task {task.name}" + (" " + " ".join(opts) if opts else "") + ";")
    return "\n".join(lines) + "\n"
