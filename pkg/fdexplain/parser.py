"""Text format for CSP models, and its canonical printer.

    # comments run to the end of the line
    var x in {0, 1, 2};
    constraint x < y;                 # also x <= y
    constraint x = y + 1;             # x = y - 1 is the same as x = y + -1
    constraint x = y ++ z;            # ternary sum x = y + z
    constraint table(x, y) { (0, 1), (1, 1) };

Statements end with ';' and may span lines. Constraints get the ids c1, c2, ... in order.
"""

import dataclasses
import enum
import logging
import re
from typing import NamedTuple

from fdexplain.model import (
    ConstraintDef,
    CspModel,
    Form,
    InputError,
    VariableId,
    format_domain,
    int_max,
    int_min,
)

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)

keywords = {'var', 'in', 'constraint', 'table'}

token_re = re.compile(
    r'''
    (?P<space>[ \t\r]+)
    | (?P<newline>\n)
    | (?P<comment>\#[^\n]*)
    | (?P<int>\d+)
    | (?P<name>[A-Za-z_]\w*)
    | (?P<op>\+\+|<=|[{}(),;<=+-])
    | (?P<bad>.)
    ''',
    re.VERBOSE,
)


class Severity(enum.Enum):
    ERROR = 'error'
    WARNING = 'warning'


@dataclasses.dataclass(frozen=True)
class Diagnostic:
    severity: Severity
    line: int
    column: int
    message: str

    def format(self, provenance: str) -> str:
        return f"{provenance}:{self.line}:{self.column}: {self.severity.value}: {self.message}"


@dataclasses.dataclass(frozen=True)
class ModelSource:
    text: str
    provenance: str = '<inline>'  # file path, or '<inline>'


class DiagnosticsError(InputError):
    def __init__(self, source: ModelSource, diagnostics: list[Diagnostic]) -> None:
        self.source = source
        self.diagnostics = diagnostics
        super().__init__('\n'.join(d.format(source.provenance) for d in diagnostics))


class Token(NamedTuple):
    kind: str  # 'int', 'name', 'op' or 'end'
    text: str
    line: int
    column: int


class _Recover(Exception):
    pass  # abandon the current statement


def tokenize(text: str) -> tuple[list[Token], list[Diagnostic]]:
    tokens = []
    diagnostics = []
    line, line_start = 1, 0
    for m in token_re.finditer(text):
        kind = m.lastgroup
        column = m.start() - line_start + 1
        if kind == 'newline':
            line, line_start = line + 1, m.end()
        elif kind == 'bad':
            diagnostics.append(
                Diagnostic(Severity.ERROR, line, column, f"unexpected character {m.group()!r}")
            )
        elif kind not in ('space', 'comment'):
            tokens.append(Token(kind, m.group(), line, column))
    if tokens:
        last = tokens[-1]
        tokens.append(Token('end', '', last.line, last.column + len(last.text)))
    else:
        tokens.append(Token('end', '', line, 1))
    return tokens, diagnostics


class _Parser:
    def __init__(self, source: ModelSource) -> None:
        self.source = source
        self.tokens, self.diagnostics = tokenize(source.text)
        self.pos = 0
        self.variables: dict[str, VariableId] = dict()
        self.rejected: set[str] = set()  # declared with an empty domain, already reported
        self.domains: list[frozenset[int]] = list()
        self.constraints: list[ConstraintDef] = list()

    ### token helpers

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        if token.kind != 'end':
            self.pos += 1
        return token

    def report(self, token: Token, message: str, severity=Severity.ERROR) -> None:
        self.diagnostics.append(Diagnostic(severity, token.line, token.column, message))

    def fail(self, token: Token, message: str):
        self.report(token, message)
        raise _Recover()

    def expect(self, text: str) -> Token:
        token = self.advance()
        if token.text != text or token.kind == 'end':
            where = 'end of input' if token.kind == 'end' else repr(token.text)
            self.fail(token, f"expected '{text}', found {where}")
        return token

    def accept(self, text: str) -> bool:
        if self.peek().kind == 'op' and self.peek().text == text:
            self.advance()
            return True
        return False

    def name(self) -> Token:
        token = self.advance()
        if token.kind != 'name' or token.text in keywords:
            self.fail(token, f"expected a variable name, found {token.text or 'end of input'!r}")
        return token

    def value(self) -> tuple[int, Token]:
        negative = self.accept('-')
        token = self.advance()
        if token.kind != 'int':
            self.fail(token, f"expected an integer, found {token.text or 'end of input'!r}")
        v = -int(token.text) if negative else int(token.text)
        if not int_min <= v <= int_max:
            self.fail(token, f"integer {v} does not fit in a signed 64-bit word")
        return v, token

    def skip_statement(self) -> None:
        while self.peek().kind != 'end':
            if self.advance().text == ';':
                return

    ### grammar

    def parse(self) -> None:
        while self.peek().kind != 'end':
            start = self.pos
            try:
                self.statement()
            except _Recover:
                if self.pos == start:
                    self.advance()
                if self.tokens[self.pos - 1].text != ';':
                    self.skip_statement()

    def statement(self) -> None:
        token = self.advance()
        if token.text == 'var' and token.kind == 'name':
            self.var_statement()
        elif token.text == 'constraint' and token.kind == 'name':
            self.constraint_statement()
        else:
            self.fail(token, f"expected 'var' or 'constraint', found {token.text!r}")

    def var_statement(self) -> None:
        name = self.name()
        self.expect('in')
        brace = self.expect('{')
        values = []
        if not self.accept('}'):
            while True:
                v, token = self.value()
                if v in values:
                    self.report(
                        token, f"value {v} repeated in the domain of {name.text}", Severity.WARNING
                    )
                else:
                    values.append(v)
                if self.accept('}'):
                    break
                self.expect(',')
        self.expect(';')
        if name.text in self.variables:
            self.fail(name, f"duplicate variable '{name.text}'")
        if not values:
            self.rejected.add(name.text)
            self.fail(brace, f"domain of '{name.text}' is empty; domains must be non-empty")
        self.variables[name.text] = VariableId(len(self.variables), name.text)
        self.domains.append(frozenset(values))

    def scope(self, tokens: list[Token]) -> tuple[VariableId, ...]:
        unknown = [token for token in tokens if token.text not in self.variables]
        for token in unknown:
            if token.text not in self.rejected:
                self.report(token, f"unknown variable '{token.text}'")
        if unknown:
            raise _Recover()
        scope = []
        for token in tokens:
            var = self.variables[token.text]
            if var in scope:
                self.fail(token, f"variable '{token.text}' appears twice in one constraint")
            scope.append(var)
        return tuple(scope)

    def constraint_statement(self) -> None:
        cid = f'c{len(self.constraints) + 1}'
        if self.peek().kind == 'name' and self.peek().text == 'table':
            self.advance()
            self.constraints.append(self.table(cid))
            return
        x = self.name()
        op = self.advance()
        if op.text in ('<', '<='):
            y = self.name()
            self.expect(';')
            form = Form.LESS_THAN if op.text == '<' else Form.LESS_EQ
            self.constraints.append(ConstraintDef(cid, form, self.scope([x, y])))
        elif op.text == '=':
            y = self.name()
            sign = self.advance()
            if sign.text == '++':
                z = self.name()
                self.expect(';')
                self.constraints.append(ConstraintDef(cid, Form.SUM3, self.scope([x, y, z])))
            elif sign.text in ('+', '-'):
                if self.peek().kind == 'name':
                    self.fail(self.peek(), "expected an integer; write 'x = y ++ z' for a sum")
                offset, _ = self.value()
                self.expect(';')
                offset = -offset if sign.text == '-' else offset
                self.constraints.append(
                    ConstraintDef(cid, Form.OFFSET_EQ, self.scope([x, y]), offset=offset)
                )
            else:
                self.fail(sign, f"expected '+', '-' or '++', found {sign.text!r}")
        else:
            self.fail(op, f"expected '<', '<=' or '=', found {op.text!r}")

    def table(self, cid: str) -> ConstraintDef:
        self.expect('(')
        names = [self.name()]
        while self.accept(','):
            names.append(self.name())
        self.expect(')')
        scope = self.scope(names)
        if len(scope) < 2:
            self.fail(names[0], "a table needs at least two variables")
        self.expect('{')
        tuples = set()
        if not self.accept('}'):
            while True:
                tuples.add(self.table_tuple(scope))
                if self.accept('}'):
                    break
                self.expect(',')
        self.expect(';')
        return ConstraintDef(cid, Form.TABLE, scope, table=frozenset(tuples))

    def table_tuple(self, scope: tuple[VariableId, ...]) -> tuple[int, ...]:
        paren = self.expect('(')
        items = [self.value()]
        while self.accept(','):
            items.append(self.value())
        self.expect(')')
        if len(items) != len(scope):
            self.fail(paren, f"tuple has {len(items)} values, the table has {len(scope)} variables")
        for var, (v, token) in zip(scope, items):
            if v not in self.domains[var.index]:
                self.fail(token, f"value {v} is not in the domain of {var}")
        return tuple(v for v, _ in items)


def parse_model(source: ModelSource) -> CspModel:
    """Parse a whole model; any error raises DiagnosticsError carrying every diagnostic."""
    parser = _Parser(source)
    parser.parse()
    errors = [d for d in parser.diagnostics if d.severity is Severity.ERROR]
    for d in parser.diagnostics:
        if d.severity is Severity.WARNING:
            logger.warning(d.format(source.provenance))
    if errors:
        raise DiagnosticsError(source, sorted(errors, key=lambda d: (d.line, d.column)))
    return CspModel(
        tuple(parser.variables.values()),
        tuple(parser.domains),
        tuple(parser.constraints),
    )


def load_model(path: str) -> CspModel:
    try:
        with open(path, 'r') as f:
            text = f.read()
    except OSError as e:
        raise InputError(f"F66101 cannot read model {path}: {e.strerror}")
    return parse_model(ModelSource(text, path))


def format_model(model: CspModel) -> str:
    """Canonical text: parse(format_model(m)) == m."""
    lines = [f"var {v} in {format_domain(model.domain(v))};" for v in model.variables]
    for c in model.constraints:
        names = [v.name for v in c.scope]
        if c.form is Form.TABLE:
            rows = ', '.join('(' + ', '.join(str(e) for e in t) + ')' for t in sorted(c.table))
            rows = f" {rows} " if rows else ' '
            body = f"table({', '.join(names)}) {{{rows}}}"
        elif c.form is Form.OFFSET_EQ:
            sign = '+' if c.offset >= 0 else '-'
            body = f"{names[0]} = {names[1]} {sign} {abs(c.offset)}"
        else:
            body = str(c)
        lines.append(f"constraint {body};")
    return '\n'.join(lines) + '\n'
