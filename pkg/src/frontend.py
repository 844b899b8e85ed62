"""Source frontends: tokenize and parse the supported JS/TS and Java subsets into IR.

The supported subset is imports, top-level functions, classes and their methods,
variable declarations and assignments, member access, calls, returns and
literals. Control-flow statements (if/for/while/try) are flattened: their
bodies are parsed into the enclosing statement list. Anything else is skipped
one statement at a time and recorded as a diagnostic.
"""
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fnmatch import fnmatch
from pathlib import Path, PurePosixPath
from typing import List, Optional, Sequence, Tuple

from .config import ScanConfig, config
from .errors import RootNotFound, UnreadableFile
from .logger import logger
from .models import (Call, Diagnostic, Expr, Identifier, ImportDecl, IRFunction, IRModule,
                     Language, Literal, Member, MethodRef, Operation, SourceFile, Span,
                     Statement, StmtKind, member_chain, walk_expr)
from .utils import LineIndex

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>//[^\n]*|/\*.*?(?:\*/|\Z))
  | (?P<string>"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*'|`(?:[^`\\]|\\.)*`)
  | (?P<number>0[xX][0-9a-fA-F_]+[lLn]?|\d[\d_]*(?:\.\d+)?(?:[eE][+-]?\d+)?[lLfFdDn]?|\.\d+)
  | (?P<ident>[A-Za-z_$][\w$]*)
  | (?P<punct>\.\.\.|\?\.|=>|->|===|!==|==|!=|<=|>=|&&=|\|\|=|\?\?=|&&|\|\||\?\?|\+\+|--
              |[-+*/%]=|::|[{}()\[\];,.<>=!?:+\-*/%&|^~@\#])
  | (?P<error>.)
""", re.S | re.X)

_OPENERS = {'(': ')', '[': ']', '{': '}'}
_CLOSERS = {')', ']', '}'}
_ASSIGN_OPS = {'=', '+=', '-=', '*=', '/=', '%=', '??=', '||=', '&&='}
_BINARY_OPS = {'+', '-', '*', '/', '%', '==', '!=', '===', '!==', '<', '>', '<=', '>=',
               '&&', '||', '??', '&', '|', '^', 'instanceof', 'in'}
_UNARY_OPS = {'!', '-', '+', '~', '++', '--', 'typeof', 'void', 'delete'}
_LITERAL_KEYWORDS = {'true', 'false', 'null', 'undefined'}
_JS_MEMBER_MODIFIERS = {'static', 'public', 'private', 'protected', 'readonly', 'async',
                        'abstract', 'override', 'declare'}
_JAVA_MODIFIERS = {'public', 'private', 'protected', 'static', 'final', 'abstract',
                   'synchronized', 'native', 'transient', 'volatile', 'default', 'strictfp',
                   'sealed', 'non'}
_EXTENSIONS = {ext: Language.JS for ext in config.JS_EXTENSIONS}
_EXTENSIONS.update({ext: Language.JAVA for ext in config.JAVA_EXTENSIONS})


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int
    nl_before: bool = False


def tokenize(text: str, start: int = 0, end: Optional[int] = None) -> List[Token]:
    """Split text[start:end] into tokens; whitespace and comments are dropped"""
    end = len(text) if end is None else end
    tokens: List[Token] = []
    pos = start
    newline = True
    while pos < end:
        match = _TOKEN_RE.match(text, pos, end)
        kind = match.lastgroup
        if kind in ('ws', 'comment'):
            newline = newline or '\n' in match.group()
        else:
            tokens.append(Token(kind, match.group(), match.start(), match.end(), newline))
            newline = False
        pos = match.end()
    return tokens


class _Unsupported(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


def module_name_for(path: str, language: Language) -> str:
    """Path-derived module name (Java files normally override it with their package)"""
    pure = PurePosixPath(path)
    if language == Language.JAVA:
        parent = str(pure.parent)
        return parent.replace('/', '.') if parent != '.' else '<default>'
    return str(pure.with_suffix(''))


class _Parser:
    dialect = Language.JS

    def __init__(self, file: SourceFile):
        self.file = file
        self.text = file.text
        self.lines = LineIndex(file.text)
        self.toks = tokenize(file.text)
        self.pos = 0
        self.module_name = module_name_for(file.path, file.language)
        self.imports: List[ImportDecl] = []
        self.functions: List[IRFunction] = []
        self.diagnostics: List[Diagnostic] = []
        self.classes: List[str] = []
        self.field_types: List[Tuple[str, str, str]] = []
        self.top_level: List[Statement] = []
        self._class_stack: List[str] = []
        self._name_hint: Optional[str] = None
        self._exported_names: set = set()
        self._eof = Token('eof', '', len(file.text), len(file.text), True)

    # ---- token helpers ----

    def peek(self, k: int = 0) -> Token:
        index = self.pos + k
        return self.toks[index] if index < len(self.toks) else self._eof

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind in ('punct', 'ident') and tok.text in texts

    def at_eof(self) -> bool:
        return self.pos >= len(self.toks)

    def advance(self) -> Token:
        tok = self.peek()
        if not self.at_eof():
            self.pos += 1
        return tok

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise _Unsupported(f"expected '{text}' but found {self.peek().text or 'end of file'!r}")
        return self.advance()

    def ident(self) -> str:
        tok = self.peek()
        if tok.kind != 'ident':
            raise _Unsupported(f"expected identifier but found {tok.text or 'end of file'!r}")
        self.pos += 1
        return tok.text

    def span_from(self, index: int) -> Span:
        first = self.toks[index] if index < len(self.toks) else self._eof
        last_end = self.toks[self.pos - 1].end if self.pos > index else first.start
        line, col = self.lines.position(first.start)
        return Span(first.start, max(last_end, first.start), line, col)

    def _matching(self, index: int) -> int:
        """Index of the token closing the bracket at `index`, or len(toks)"""
        depth = 0
        for i in range(index, len(self.toks)):
            tok = self.toks[i]
            if tok.kind != 'punct':
                continue
            if tok.text in _OPENERS:
                depth += 1
            elif tok.text in _CLOSERS:
                depth -= 1
                if depth == 0:
                    return i
        return len(self.toks)

    def _skip_balanced(self) -> None:
        self.pos = min(self._matching(self.pos) + 1, len(self.toks))

    def _skip_angle(self) -> None:
        """Skip a generic argument list such as <String, List<User>>"""
        depth = 0
        while not self.at_eof():
            tok = self.advance()
            if tok.text == '<':
                depth += 1
            elif tok.text == '>':
                depth -= 1
                if depth == 0:
                    return
            elif tok.kind != 'ident' and tok.text not in (',', '.', '?', '&', '[', ']', '|'):
                raise _Unsupported('generic type arguments')
        raise _Unsupported('unterminated generic type arguments')

    def _skip_type(self, stops: Sequence[str]) -> None:
        """Skip a TypeScript annotation up to one of `stops` at bracket depth 0"""
        depth = 0
        while not self.at_eof():
            tok = self.peek()
            if depth == 0 and tok.kind == 'punct' and tok.text in stops:
                return
            if tok.text in ('(', '[', '{', '<'):
                depth += 1
            elif tok.text in (')', ']', '}', '>'):
                if depth == 0:
                    return
                depth -= 1
            self.advance()

    # ---- recovery ----

    def _diagnose(self, index: int, reason: str) -> None:
        tok = self.toks[index] if index < len(self.toks) else self._eof
        line, col = self.lines.position(tok.start)
        self.diagnostics.append(Diagnostic(self.file.path, line, col, reason))

    def _skip_statement(self, start: int, reason: str) -> None:
        """Record a skip diagnostic and resynchronize after the offending statement"""
        self._diagnose(start, reason)
        self.pos = start
        depth = 0
        while not self.at_eof():
            tok = self.peek()
            if tok.kind == 'punct' and tok.text in _OPENERS:
                depth += 1
            elif tok.kind == 'punct' and tok.text in _CLOSERS:
                if depth == 0:
                    break
                depth -= 1
                if depth == 0 and tok.text == '}':
                    self.advance()
                    if self.at('else', 'catch', 'finally'):
                        continue
                    self.accept(';')
                    break
            elif tok.text == ';' and tok.kind == 'punct' and depth == 0:
                self.advance()
                break
            self.advance()
        if self.pos == start:
            self.advance()

    def _skip_annotation(self) -> None:
        """Drop a Java annotation or TS decorator (@Name, @a.b.Name(...)), recording it"""
        start = self.pos
        self.expect('@')
        self.ident()
        while self.at('.') and self.peek(1).kind == 'ident':
            self.advance()
            self.advance()
        if self.at('('):
            self._skip_balanced()
        self._diagnose(start, 'annotation')

    # ---- functions ----

    def _make_function(self, local_name: str, start: int, params, body: List[Statement],
                       exported: bool = False) -> IRFunction:
        names, types, spans = params
        span = self.span_from(start)
        ref = MethodRef(f"{self.module_name}::{local_name}", self.module_name, span, self.file.path)
        fn = IRFunction(ref=ref, params=tuple(names), body=tuple(body), span=span,
                        is_exported=exported or local_name in self._exported_names,
                        param_types=tuple(types), param_spans=tuple(spans),
                        class_name=self._class_stack[-1] if self._class_stack else None)
        self.functions.append(fn)
        return fn

    def _anon_name(self, index: int) -> str:
        tok = self.toks[index] if index < len(self.toks) else self._eof
        line, col = self.lines.position(tok.start)
        return f"<anon@{line}:{col}>"

    def _block_body(self) -> List[Statement]:
        """Statements up to the closing brace; the opening brace is already consumed"""
        out: List[Statement] = []
        while not self.at_eof() and not self.at('}'):
            self._statement_into(out)
        self.accept('}')
        return out

    def _params(self):
        """Parse a parenthesized parameter list into (names, types, spans)"""
        self.expect('(')
        names: List[str] = []
        types: List[Optional[str]] = []
        spans: List[Span] = []
        while not self.at_eof() and not self.at(')'):
            start = self.pos
            name, type_name = self._param()
            if name in names:
                raise _Unsupported(f"duplicate parameter '{name}'")
            names.append(name)
            types.append(type_name)
            spans.append(self.span_from(start))
            if not self.accept(','):
                break
        self.expect(')')
        return names, types, spans

    def _param(self) -> Tuple[str, Optional[str]]:
        raise NotImplementedError

    def _lambda_arrow(self) -> str:
        return '=>'

    def _function_expression(self, start: int, params, local_name: Optional[str] = None) -> Identifier:
        """Parse an arrow/lambda body after its parameters and register the function"""
        if self.accept('{'):
            body = self._block_body()
        else:
            expr_start = self.pos
            expr = self._expression()
            body = [Statement(StmtKind.RETURN, self.span_from(expr_start), expr=expr,
                              calls=_calls_in(expr))]
        name = local_name or self._anon_name(start)
        fn = self._make_function(name, start, params, body)
        return Identifier(fn.ref.local_name, fn.span)

    # ---- statements ----

    def _statement_into(self, out: List[Statement]) -> None:
        start = self.pos
        mark, fn_mark = len(out), len(self.functions)
        try:
            self._statement(out)
        except (_Unsupported, RecursionError) as exc:
            del out[mark:]
            del self.functions[fn_mark:]
            reason = exc.reason if isinstance(exc, _Unsupported) else 'nesting too deep'
            self._skip_statement(start, reason)
        if self.pos == start:
            self.advance()

    def _statement(self, out: List[Statement]) -> None:
        tok = self.peek()
        if tok.kind == 'punct':
            if tok.text == ';':
                self.advance()
                return
            if tok.text == '{':
                self.advance()
                out.extend(self._block_body())
                return
            if tok.text == '@':
                raise _Unsupported('annotation')
        if tok.kind == 'ident':
            handler = getattr(self, f"_stmt_{tok.text}", None)
            if handler is not None and not self._is_plain_identifier_use():
                handler(out)
                return
            if self._declaration_ahead():
                self._declaration(out)
                return
        self._expression_statement(out)

    def _is_plain_identifier_use(self) -> bool:
        """`return.x` never happens, but a JS variable named `type` or `get` does"""
        return self.peek(1).text in ('=', '.', '(') and self.peek().text not in (
            'if', 'for', 'while', 'switch', 'return', 'throw', 'do', 'try')

    def _declaration_ahead(self) -> bool:
        raise NotImplementedError

    def _declaration(self, out: List[Statement]) -> None:
        raise NotImplementedError

    def _end_statement(self) -> None:
        raise NotImplementedError

    def _header(self, out: List[Statement]) -> None:
        """Parenthesized condition: kept only when it contains calls"""
        start = self.pos
        close = self._matching(start)
        self.expect('(')
        try:
            expr = self._expression()
            if self.pos != close:
                raise _Unsupported('complex condition')
        except _Unsupported:
            self.pos = min(close + 1, len(self.toks))
            return
        self.expect(')')
        calls = _calls_in(expr)
        if calls:
            out.append(Statement(StmtKind.CALL, self.span_from(start), expr=expr, calls=calls))

    def _nested(self, out: List[Statement], body: List[Statement], loop: Optional[int] = None) -> None:
        """Append branch or loop statements marked conditional, tagged with the enclosing loop"""
        for stmt in body:
            loops = stmt.loops if loop is None else (loop,) + stmt.loops
            out.append(replace(stmt, conditional=True, loops=loops))

    def _branch(self, out: List[Statement]) -> None:
        body: List[Statement] = []
        self._statement_into(body)
        self._nested(out, body)

    def _stmt_if(self, out: List[Statement]) -> None:
        self.advance()
        self._header(out)
        self._branch(out)
        if self.accept('else'):
            self._branch(out)

    def _stmt_while(self, out: List[Statement]) -> None:
        loop = self.advance().start
        body: List[Statement] = []
        self._header(body)
        self._statement_into(body)
        self._nested(out, body, loop)

    def _stmt_do(self, out: List[Statement]) -> None:
        loop = self.advance().start
        body: List[Statement] = []
        self._statement_into(body)
        self.expect('while')
        self._header(body)
        self._end_statement()
        self._nested(out, body, loop)

    def _stmt_for(self, out: List[Statement]) -> None:
        loop = self.advance().start
        self.accept('await')
        if not self.at('('):
            raise _Unsupported('for statement')
        close = self._matching(self.pos)
        start = self.pos
        self.advance()
        body: List[Statement] = []
        stmt = self._for_each_binding(start, close)
        if stmt is not None:
            body.append(stmt)
        self.pos = min(close + 1, len(self.toks))
        self._statement_into(body)
        self._nested(out, body, loop)

    def _for_each_binding(self, start: int, close: int) -> Optional[Statement]:
        raise NotImplementedError

    def _stmt_try(self, out: List[Statement]) -> None:
        self.advance()
        if self.at('('):
            self._resources(out)
        self.expect('{')
        out.extend(self._block_body())
        while self.accept('catch'):
            if self.at('('):
                self._skip_balanced()
            self.expect('{')
            self._nested(out, self._block_body())
        if self.accept('finally'):
            self.expect('{')
            out.extend(self._block_body())

    def _resources(self, out: List[Statement]) -> None:
        raise _Unsupported('try-with-resources')

    def _stmt_return(self, out: List[Statement]) -> None:
        start = self.pos
        self.advance()
        expr = None
        tok = self.peek()
        if not (self.at(';', '}') or tok.kind == 'eof' or (tok.nl_before and self.dialect == Language.JS)):
            expr = self._expression()
        self._end_statement()
        out.append(Statement(StmtKind.RETURN, self.span_from(start), expr=expr, calls=_calls_in(expr)))

    def _stmt_break(self, out: List[Statement]) -> None:
        self.advance()
        if self.peek().kind == 'ident' and not self.peek().nl_before:
            self.advance()
        self._end_statement()

    _stmt_continue = _stmt_break

    def _stmt_switch(self, out: List[Statement]) -> None:
        raise _Unsupported('switch statement')

    def _stmt_throw(self, out: List[Statement]) -> None:
        raise _Unsupported('throw statement')

    def _stmt_yield(self, out: List[Statement]) -> None:
        raise _Unsupported('generator')

    def _stmt_class(self, out: List[Statement]) -> None:
        raise _Unsupported('nested class')

    def _expression_statement(self, out: List[Statement]) -> None:
        start = self.pos
        expr = self._expression()
        if self.at(*_ASSIGN_OPS):
            op = self.advance().text
            rhs = self._expression()
            if self.at(*_ASSIGN_OPS):
                raise _Unsupported('chained assignment')
            self._end_statement()
            root = _assign_root(expr)
            value = rhs if op == '=' else Operation(op[:-1], (expr, rhs), rhs.span)
            target = expr if isinstance(expr, (Member, Operation)) else None
            self._note_field_type(target, rhs)
            out.append(Statement(StmtKind.ASSIGN, self.span_from(start), lhs=root, expr=value,
                                 calls=_calls_in(target) + _calls_in(rhs), target=target))
            return
        self._end_statement()
        calls = _calls_in(expr)
        if calls:
            out.append(Statement(StmtKind.CALL, self.span_from(start), expr=expr, calls=calls))

    def _note_field_type(self, target: Optional[Expr], rhs: Expr) -> None:
        """`this.repo = new Repo()` types the field for call resolution"""
        if not self._class_stack or not isinstance(target, Member):
            return
        if isinstance(target.base, Identifier) and target.base.name == 'this':
            type_name = _constructed_type(rhs)
            if type_name:
                self.field_types.append((self._class_stack[-1], target.field, type_name))

    # ---- expressions ----

    def _expression(self) -> Expr:
        start = self.pos
        cond = self._binary()
        if self.accept('?'):
            then = self._expression()
            self.expect(':')
            other = self._expression()
            return Operation('?:', (cond, then, other), self.span_from(start))
        return cond

    def _binary(self) -> Expr:
        start = self.pos
        operands = [self._unary()]
        while self.at(*_BINARY_OPS):
            op = self.advance().text
            if op == 'instanceof' and self.dialect == Language.JAVA:
                self._type()
                if self.peek().kind == 'ident' and not self.at(*_BINARY_OPS):
                    self.advance()
                continue
            operands.append(self._unary())
        if len(operands) == 1:
            return operands[0]
        return Operation('binary', tuple(operands), self.span_from(start))

    def _unary(self) -> Expr:
        start = self.pos
        if self.at(*_UNARY_OPS):
            op = self.advance().text
            operand = self._unary()
            return Operation(op, (operand,), self.span_from(start))
        if self.at('await') and self.dialect == Language.JS:
            self.advance()
            return self._unary()
        return self._postfix()

    def _postfix(self) -> Expr:
        start = self.pos
        expr = self._primary()
        while True:
            if self.at('.', '?.'):
                self.advance()
                if self.at('('):
                    continue
                self.accept('#')
                name = self.ident()
                expr = Member(expr, name, self.span_from(start))
            elif self.at('('):
                args = self._arguments()
                expr = Call(expr, args, self.span_from(start))
            elif self.at('['):
                self.advance()
                index = self._expression()
                self.expect(']')
                expr = Operation('[]', (expr, index), self.span_from(start))
            elif self.at('++', '--') and not self.peek().nl_before:
                op = self.advance().text
                expr = Operation(op, (expr,), self.span_from(start))
            elif not self._postfix_extra():
                return expr

    def _postfix_extra(self) -> bool:
        return False

    def _arguments(self) -> Tuple[Expr, ...]:
        self.expect('(')
        args: List[Expr] = []
        while not self.at_eof() and not self.at(')'):
            self.accept('...')
            args.append(self._expression())
            if not self.accept(','):
                break
        self.expect(')')
        return tuple(args)

    def _primary(self) -> Expr:
        start = self.pos
        tok = self.peek()
        if tok.kind == 'string':
            if tok.text.startswith('`'):
                return self._template()
            self.advance()
            return Literal(tok.text[1:-1], 'string', self.span_from(start))
        if tok.kind == 'number':
            self.advance()
            return Literal(tok.text, 'number', self.span_from(start))
        if tok.kind == 'ident':
            return self._primary_word(tok)
        if tok.text == '(':
            if self._is_arrow():
                params = self._lambda_params()
                self.expect(self._lambda_arrow())
                return self._function_expression(start, params, self._take_hint())
            self.advance()
            items = [self._expression()]
            while self.accept(','):
                items.append(self._expression())
            self.expect(')')
            inner = items[0] if len(items) == 1 else Operation(',', tuple(items), self.span_from(start))
            return self._after_parenthesized(inner)
        if tok.text == '[':
            self.advance()
            items = []
            while not self.at_eof() and not self.at(']'):
                if self.accept(','):
                    continue
                self.accept('...')
                items.append(self._expression())
                if not self.accept(','):
                    break
            self.expect(']')
            return Operation('[]', tuple(items), self.span_from(start))
        if tok.text == '{':
            return self._object_literal()
        raise _Unsupported(f"unexpected token {tok.text or 'end of file'!r}")

    def _after_parenthesized(self, inner: Expr) -> Expr:
        return inner

    def _primary_word(self, tok: Token) -> Expr:
        start = self.pos
        word = tok.text
        if word in _LITERAL_KEYWORDS:
            self.advance()
            return Literal(word, 'keyword', self.span_from(start))
        if word == 'new':
            return self._new()
        if word in ('yield',):
            raise _Unsupported('generator')
        if word == 'class':
            raise _Unsupported('class expression')
        if self.peek(1).text == self._lambda_arrow():
            self.advance()
            params = ([word], [None], [self.span_from(start)])
            self.advance()
            return self._function_expression(start, params, self._take_hint())
        self.advance()
        return Identifier(word, self.span_from(start))

    def _new(self) -> Expr:
        start = self.pos
        self.expect('new')
        callee_start = self.pos
        callee: Expr = Identifier(self.ident(), self.span_from(callee_start))
        while self.at('.') and self.peek(1).kind == 'ident':
            self.advance()
            callee = Member(callee, self.ident(), self.span_from(callee_start))
        if self.at('<'):
            self._skip_angle()
        if self.at('['):
            while self.at('['):
                self._skip_balanced()
            if self.at('{'):
                self._skip_balanced()
            return Operation('new[]', (), self.span_from(start))
        args = self._arguments() if self.at('(') else ()
        if self.at('{') and self.dialect == Language.JAVA:
            raise _Unsupported('anonymous class')
        return Call(callee, args, self.span_from(start), constructor=True)

    def _object_literal(self) -> Expr:
        start = self.pos
        self.expect('{')
        values: List[Expr] = []
        while not self.at_eof() and not self.at('}'):
            if self.accept('...'):
                values.append(self._expression())
            elif self.at('['):
                self.advance()
                values.append(self._expression())
                self.expect(']')
                self.expect(':')
                values.append(self._expression())
            elif self.peek().kind in ('ident', 'string', 'number') and self.peek(1).text == '(':
                method_start = self.pos
                self.advance()
                params = self._params()
                self.expect('{')
                body = self._block_body()
                fn = self._make_function(self._anon_name(method_start), method_start, params, body)
                values.append(Identifier(fn.ref.local_name, fn.span))
            else:
                key_tok = self.peek()
                value = self._expression()
                if self.accept(':'):
                    value = self._expression()
                elif not isinstance(value, Identifier) and key_tok.kind != 'number':
                    raise _Unsupported('object literal entry')
                values.append(value)
            if not self.accept(','):
                break
        self.expect('}')
        return Operation('{}', tuple(values), self.span_from(start))

    def _template(self) -> Expr:
        """Template literal; `${...}` holes are parsed as expressions"""
        start = self.pos
        tok = self.advance()
        holes: List[Expr] = []
        text = tok.text
        i = 1
        while True:
            i = text.find('${', i)
            if i < 0:
                break
            depth, j = 0, i + 1
            while j < len(text) - 1:
                if text[j] == '{':
                    depth += 1
                elif text[j] == '}':
                    depth -= 1
                    if depth == 0:
                        break
                j += 1
            holes.append(self._sub_expression(tok.start + i + 2, tok.start + j))
            i = j + 1
        literal = Literal(text[1:-1], 'template', self.span_from(start))
        if not holes:
            return literal
        return Operation('template', (literal, *holes), literal.span)

    def _sub_expression(self, start: int, end: int) -> Expr:
        saved_toks, saved_pos = self.toks, self.pos
        self.toks, self.pos = tokenize(self.text, start, end), 0
        try:
            expr = self._expression()
            if not self.at_eof():
                raise _Unsupported('template hole')
            return expr
        finally:
            self.toks, self.pos = saved_toks, saved_pos

    def _is_arrow(self) -> bool:
        close = self._matching(self.pos)
        after = self.toks[close + 1] if close + 1 < len(self.toks) else self._eof
        return after.text == self._lambda_arrow()

    def _lambda_params(self):
        return self._params()

    def _take_hint(self) -> Optional[str]:
        hint, self._name_hint = self._name_hint, None
        return hint

    def _type(self) -> str:
        """Java-style type: dotted name, generic arguments and array dims; returns the simple name"""
        name = self.ident()
        while self.at('.') and self.peek(1).kind == 'ident':
            self.advance()
            name = self.ident()
        if self.at('<'):
            self._skip_angle()
        while self.at('[') and self.peek(1).text == ']':
            self.advance()
            self.advance()
        self.accept('...')
        return name

    # ---- module ----

    def parse_module(self) -> None:
        raise NotImplementedError

    def build(self) -> IRModule:
        self.parse_module()
        functions = list(self.functions)
        if self.top_level:
            span = Span(0, len(self.text), 1, 1)
            ref = MethodRef(f"{self.module_name}::<module>", self.module_name, span, self.file.path)
            functions.append(IRFunction(ref=ref, params=(), body=tuple(self.top_level), span=span,
                                        module_scope=True))
        if self._exported_names:
            functions = [_with_export(fn, self._exported_names) for fn in functions]
        functions.sort(key=lambda fn: (fn.span.start, fn.ref.qualified_name))
        return IRModule(file=self.file, module_name=self.module_name, imports=tuple(self.imports),
                        functions=tuple(functions), diagnostics=tuple(self.diagnostics),
                        classes=tuple(self.classes), field_types=tuple(self.field_types))

    def _run_items(self, item) -> None:
        """Top-level loop: parse items, skipping unsupported ones"""
        while not self.at_eof():
            start = self.pos
            mark, fn_mark = len(self.top_level), len(self.functions)
            try:
                item()
            except (_Unsupported, RecursionError) as exc:
                del self.top_level[mark:]
                del self.functions[fn_mark:]
                reason = exc.reason if isinstance(exc, _Unsupported) else 'nesting too deep'
                self._skip_statement(start, reason)
            if self.pos == start:
                self.advance()


class JsParser(_Parser):
    """JavaScript / TypeScript subset; type annotations are stripped"""
    dialect = Language.JS

    def parse_module(self) -> None:
        self._run_items(self._top_level_item)
        self.imports.append(ImportDecl('globalThis', (), Span(0, 0, 1, 1), wildcard=True, implicit=True))

    def _top_level_item(self) -> None:
        start = self.pos
        if self.at('@'):
            self._skip_annotation()
            return
        if self.at('import') and self.peek(1).text not in ('(', '.'):
            self._import()
            return
        exported = False
        if self.at('export'):
            self.advance()
            exported = True
            if self.at('{', '*'):
                self._export_list(start)
                return
            if self.accept('default') and not self.at('function', 'class', 'async', 'abstract'):
                if self.peek().kind == 'ident' and self.peek(1).text in (';', '') :
                    self._exported_names.add(self.ident())
                    self._end_statement()
                    return
                self._statement(self.top_level)
                return
        if self.at('async') and self.peek(1).text == 'function':
            self.advance()
        if self.at('function'):
            self._function_decl(start, exported)
        elif self.at('class', 'abstract'):
            self.accept('abstract')
            self._class_decl(start, exported)
        elif self.at('const', 'let', 'var'):
            self._top_level_var(exported)
        elif self.at('interface', 'enum', 'declare', 'namespace') or (
                self.at('type', 'module') and self.peek(1).kind == 'ident'):
            raise _Unsupported(f"TypeScript {self.peek().text} declaration")
        else:
            self._statement(self.top_level)

    def _import(self) -> None:
        start = self.pos
        self.expect('import')
        if self.at('type') and self.peek(1).text in ('{', '*') or (
                self.at('type') and self.peek(1).kind == 'ident' and self.peek(2).text != 'from'):
            self.advance()
        symbols: List[Tuple[str, str]] = []
        wildcard = False
        if self.peek().kind != 'string':
            if self.peek().kind == 'ident' and not self.at('from'):
                symbols.append(('default', self.ident()))
                self.accept(',')
            if self.accept('*'):
                self.expect('as')
                symbols.append(('*', self.ident()))
                wildcard = True
            elif self.accept('{'):
                while not self.at_eof() and not self.at('}'):
                    if self.at('type') and self.peek(1).kind == 'ident':
                        self.advance()
                    external = self._name_or_string()
                    alias = self.ident() if self.accept('as') else external
                    symbols.append((external, alias))
                    if not self.accept(','):
                        break
                self.expect('}')
            self.expect('from')
        else:
            wildcard = True
        target = self._string()
        self._end_statement()
        self.imports.append(ImportDecl(target, tuple(symbols), self.span_from(start), wildcard=wildcard))

    def _name_or_string(self) -> str:
        if self.peek().kind == 'string':
            return self._string()
        return self.ident()

    def _string(self) -> str:
        tok = self.peek()
        if tok.kind != 'string':
            raise _Unsupported('expected module name')
        self.advance()
        return tok.text[1:-1]

    def _export_list(self, start: int) -> None:
        if self.accept('*'):
            if self.accept('as'):
                self.ident()
            self.expect('from')
            target = self._string()
            self.imports.append(ImportDecl(target, (), self.span_from(start), wildcard=True))
            self._end_statement()
            return
        self.expect('{')
        names: List[Tuple[str, str]] = []
        while not self.at_eof() and not self.at('}'):
            name = self.ident()
            alias = self.ident() if self.accept('as') else name
            names.append((name, alias))
            if not self.accept(','):
                break
        self.expect('}')
        if self.accept('from'):
            target = self._string()
            self.imports.append(ImportDecl(target, tuple(names), self.span_from(start),
                                           wildcard=not names))
        else:
            self._exported_names.update(name for name, _ in names)
        self._end_statement()

    def _function_decl(self, start: int, exported: bool) -> None:
        self.expect('function')
        if self.at('*'):
            raise _Unsupported('generator function')
        name = self.ident()
        if self.at('<'):
            self._skip_angle()
        params = self._params()
        if self.accept(':'):
            self._skip_type(('{',))
        self.expect('{')
        body = self._block_body()
        self._make_function(name, start, params, body, exported)

    def _stmt_function(self, out: List[Statement]) -> None:
        self._function_decl(self.pos, False)

    def _stmt_async(self, out: List[Statement]) -> None:
        if self.peek(1).text == 'function':
            start = self.pos
            self.advance()
            self._function_decl(start, False)
        else:
            self._expression_statement(out)

    def _class_decl(self, start: int, exported: bool) -> None:
        self.expect('class')
        name = self.ident()
        if self.at('<'):
            self._skip_angle()
        while not self.at_eof() and not self.at('{'):
            self.advance()
        self.expect('{')
        self.classes.append(name)
        self._class_stack.append(name)
        try:
            while not self.at_eof() and not self.at('}'):
                member_start = self.pos
                fn_mark, top_mark = len(self.functions), len(self.top_level)
                try:
                    self._class_member(name, exported)
                except (_Unsupported, RecursionError) as exc:
                    del self.functions[fn_mark:]
                    del self.top_level[top_mark:]
                    reason = exc.reason if isinstance(exc, _Unsupported) else 'nesting too deep'
                    self._skip_statement(member_start, reason)
                if self.pos == member_start:
                    self.advance()
            self.accept('}')
        finally:
            self._class_stack.pop()

    def _class_member(self, cls: str, exported: bool) -> None:
        start = self.pos
        if self.at('@'):
            self._skip_annotation()
            return
        if self.accept(';'):
            return
        while self.at(*_JS_MEMBER_MODIFIERS) and self.peek(1).text not in ('(', '=', ';', ':', '<', '?', '!'):
            self.advance()
        if self.at('get', 'set') and self.peek(1).kind == 'ident':
            self.advance()
        if self.at('*'):
            raise _Unsupported('generator method')
        self.accept('#')
        name = self._name_or_string()
        self.accept('?')
        if self.at('(', '<'):
            if self.at('<'):
                self._skip_angle()
            params = self._params()
            if self.accept(':'):
                self._skip_type(('{', ';'))
            if self.accept(';'):
                return  # overload signature
            self.expect('{')
            body = self._block_body()
            self._make_function(f"{cls}.{name}", start, params, body, exported)
            return
        self.accept('!')
        if self.accept(':'):
            self._skip_type(('=', ';', '}'))
        if self.accept('='):
            init_start = self.pos
            if self._function_init_ahead():
                self._name_hint = f"{cls}.{name}"
            value = self._expression()
            self._name_hint = None
            type_name = _constructed_type(value)
            if type_name:
                self.field_types.append((cls, name, type_name))
            if not (isinstance(value, Identifier) and value.name == f"{cls}.{name}"):
                self.top_level.append(Statement(StmtKind.VAR_DECL, self.span_from(init_start), lhs=name,
                                                expr=value, calls=_calls_in(value),
                                                declared_type=type_name))
        self._end_statement()

    def _top_level_var(self, exported: bool) -> None:
        self.advance()
        if self._require_ahead():
            return
        while True:
            decl_start = self.pos
            if self.at('{', '['):
                raise _Unsupported('destructuring declaration')
            name = self.ident()
            if self.accept(':'):
                self._skip_type(('=', ',', ';'))
            if self.accept('='):
                if self._function_init_ahead():
                    self._name_hint = name
                    self._expression()
                    if self._name_hint is None and exported:
                        self._exported_names.add(name)
                    self._name_hint = None
                else:
                    init = self._expression()
                    self.top_level.append(Statement(StmtKind.VAR_DECL, self.span_from(decl_start),
                                                    lhs=name, expr=init, calls=_calls_in(init),
                                                    declared_type=_constructed_type(init)))
            else:
                self.top_level.append(Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name))
            if not self.accept(','):
                break
        self._end_statement()

    def _function_init_ahead(self) -> bool:
        if self.at('async'):
            return self.peek(1).text in ('function', '(') or self.peek(2).text == '=>'
        if self.at('function'):
            return self.peek(1).text != '*'
        if self.at('('):
            return self._is_arrow()
        return self.peek().kind == 'ident' and self.peek(1).text == '=>'

    def _require_ahead(self) -> bool:
        """`const x = require("m")` and `const {a, b: c} = require("m")` are imports"""
        start = self.pos
        symbols: List[Tuple[str, str]] = []
        wildcard = False
        try:
            if self.accept('{'):
                while not self.at('}'):
                    external = self.ident()
                    alias = self.ident() if self.accept(':') else external
                    symbols.append((external, alias))
                    if not self.accept(','):
                        break
                self.expect('}')
            else:
                symbols.append(('*', self.ident()))
                wildcard = True
            self.expect('=')
            self.expect('require')
            self.expect('(')
            target = self._string()
            self.expect(')')
            self._end_statement()
        except _Unsupported:
            self.pos = start
            return False
        self.imports.append(ImportDecl(target, tuple(symbols), self.span_from(start - 1), wildcard=wildcard))
        return True

    # statements

    def _declaration_ahead(self) -> bool:
        return self.at('const', 'let', 'var') and self.peek(1).text not in ('.', '(', '=')

    def _declaration(self, out: List[Statement]) -> None:
        self.advance()
        while True:
            decl_start = self.pos
            if self.at('{', '['):
                raise _Unsupported('destructuring declaration')
            name = self.ident()
            if self.accept(':'):
                self._skip_type(('=', ',', ';'))
            init = self._expression() if self.accept('=') else None
            out.append(Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name, expr=init,
                                 calls=_calls_in(init), declared_type=_constructed_type(init)))
            if not self.accept(','):
                break
        self._end_statement()

    def _end_statement(self) -> None:
        if self.accept(';'):
            return
        tok = self.peek()
        if tok.kind == 'eof' or tok.text == '}' or tok.nl_before:
            return
        raise _Unsupported(f"unexpected token {tok.text!r}")

    def _for_each_binding(self, start: int, close: int) -> Optional[Statement]:
        decl_start = self.pos
        self.accept('const') or self.accept('let') or self.accept('var')
        if self.peek().kind != 'ident' or self.peek(1).text not in ('of', 'in'):
            return None
        name = self.ident()
        self.advance()
        try:
            source = self._expression()
        except _Unsupported:
            return None
        if self.pos != close:
            return None
        return Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name, expr=source,
                         calls=_calls_in(source))

    def _param(self) -> Tuple[str, Optional[str]]:
        while self.at('public', 'private', 'protected', 'readonly') and self.peek(1).kind == 'ident':
            self.advance()
        self.accept('...')
        if self.at('{', '['):
            raise _Unsupported('destructured parameter')
        name = self.ident()
        self.accept('?')
        if self.accept(':'):
            self._skip_type((',', ')', '='))
        if self.accept('='):
            self._expression()
        return name, None

    def _postfix_extra(self) -> bool:
        tok = self.peek()
        if tok.text == '!' and not tok.nl_before and self.peek(1).text in ('.', ')', ';', ',', ']', '?.', '('):
            self.advance()
            return True
        if tok.text == 'as' and tok.kind == 'ident' and not tok.nl_before:
            self.advance()
            self._skip_type((',', ')', ';', ']', '}', '=', '.'))
            return True
        return False

    def _primary_word(self, tok: Token) -> Expr:
        start = self.pos
        if tok.text == 'async' and self.peek(1).text in ('function', '(') or (
                tok.text == 'async' and self.peek(2).text == '=>'):
            self.advance()
            return self._primary()
        if tok.text == 'function':
            self.advance()
            if self.at('*'):
                raise _Unsupported('generator function')
            if self.peek().kind == 'ident':
                self.advance()
            params = self._params()
            if self.accept(':'):
                self._skip_type(('{',))
            return self._function_expression(start, params, self._take_hint())
        if tok.text == 'import':
            raise _Unsupported('dynamic import')
        return super()._primary_word(tok)

    def _primary(self) -> Expr:
        if self.at('<'):
            raise _Unsupported('JSX or type assertion')
        if self.at('/', '/='):
            raise _Unsupported('regular expression literal')
        return super()._primary()


class JavaParser(_Parser):
    """Java subset: package, imports, classes/interfaces with fields, constructors and methods"""
    dialect = Language.JAVA

    def parse_module(self) -> None:
        self._run_items(self._top_level_item)
        self.imports.append(ImportDecl('java.lang', (), Span(0, 0, 1, 1), wildcard=True, implicit=True))

    def _lambda_arrow(self) -> str:
        return '->'

    def _top_level_item(self) -> None:
        start = self.pos
        if self.accept(';'):
            return
        if self.at('package'):
            self.advance()
            self.module_name = self._dotted()
            self.expect(';')
            return
        if self.at('import'):
            self._import(start)
            return
        if self.at('@'):
            if self.peek(1).text == 'interface':
                raise _Unsupported('annotation type declaration')
            self._skip_annotation()
            return
        modifiers = self._modifiers()
        if self.at('class', 'interface'):
            self._class_decl(start, 'public' in modifiers)
        elif self.at('enum', 'record'):
            raise _Unsupported(f"{self.peek().text} declaration")
        else:
            raise _Unsupported(f"unexpected token {self.peek().text or 'end of file'!r}")

    def _dotted(self) -> str:
        parts = [self.ident()]
        while self.accept('.'):
            parts.append(self.ident())
        return '.'.join(parts)

    def _import(self, start: int) -> None:
        self.expect('import')
        self.accept('static')
        parts = [self.ident()]
        wildcard = False
        while self.accept('.'):
            if self.accept('*'):
                wildcard = True
                break
            parts.append(self.ident())
        self.expect(';')
        if wildcard:
            decl = ImportDecl('.'.join(parts), (), self.span_from(start), wildcard=True)
        else:
            decl = ImportDecl('.'.join(parts[:-1]), ((parts[-1], parts[-1]),), self.span_from(start))
        self.imports.append(decl)

    def _modifiers(self) -> List[str]:
        found = []
        while self.at(*_JAVA_MODIFIERS):
            found.append(self.advance().text)
            if found[-1] == 'non' and self.accept('-'):
                self.advance()
        return found

    def _class_decl(self, start: int, exported: bool) -> None:
        self.advance()
        name = self.ident()
        if self.at('<'):
            self._skip_angle()
        while not self.at_eof() and not self.at('{'):
            self.advance()
        self.expect('{')
        self.classes.append(name)
        self._class_stack.append(name)
        try:
            while not self.at_eof() and not self.at('}'):
                member_start = self.pos
                fn_mark, top_mark = len(self.functions), len(self.top_level)
                try:
                    self._class_member(name)
                except (_Unsupported, RecursionError) as exc:
                    del self.functions[fn_mark:]
                    del self.top_level[top_mark:]
                    reason = exc.reason if isinstance(exc, _Unsupported) else 'nesting too deep'
                    self._skip_statement(member_start, reason)
                if self.pos == member_start:
                    self.advance()
            self.accept('}')
        finally:
            self._class_stack.pop()

    def _class_member(self, cls: str) -> None:
        start = self.pos
        if self.at('@'):
            self._skip_annotation()
            return
        if self.accept(';'):
            return
        if self.at('{') or (self.at('static') and self.peek(1).text == '{'):
            raise _Unsupported('initializer block')
        modifiers = self._modifiers()
        if self.at('class', 'interface', 'enum', 'record'):
            raise _Unsupported('nested type declaration')
        if self.at('<'):
            raise _Unsupported('generic method')
        if self.at(cls) and self.peek(1).text == '(':
            self.advance()
            name, type_name = '<init>', None
        else:
            type_name = self._type()
            name = self.ident()
        if self.at('('):
            params = self._params()
            while self.at('[') and self.peek(1).text == ']':
                self.advance()
                self.advance()
            if self.accept('throws'):
                while not self.at_eof() and not self.at('{', ';'):
                    self.advance()
            if self.accept(';'):
                return  # abstract or interface method
            self.expect('{')
            body = self._block_body()
            self._make_function(f"{cls}.{name}", start, params, body,
                                exported='public' in modifiers or 'protected' in modifiers)
            return
        while True:
            decl_start = start
            self.field_types.append((cls, name, type_name))
            while self.at('[') and self.peek(1).text == ']':
                self.advance()
                self.advance()
            if self.accept('='):
                init = self._expression()
                self.top_level.append(Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name,
                                                expr=init, calls=_calls_in(init), declared_type=type_name))
            if not self.accept(','):
                break
            start = self.pos
            name = self.ident()
        self.expect(';')

    # statements

    def _declaration_ahead(self) -> bool:
        if self.at('final'):
            return True
        save = self.pos
        try:
            self._type()
            return self.peek().kind == 'ident' and self.peek(1).text in ('=', ';', ',', ':', '[')
        except _Unsupported:
            return False
        finally:
            self.pos = save

    def _local_declarators(self, out: List[Statement]) -> None:
        while self.at('final') or self.at('@'):
            if self.at('@'):
                self._skip_annotation()
            else:
                self.advance()
        type_name = self._type()
        while True:
            decl_start = self.pos
            name = self.ident()
            while self.at('[') and self.peek(1).text == ']':
                self.advance()
                self.advance()
            init = self._expression() if self.accept('=') else None
            declared = _constructed_type(init) if type_name == 'var' else type_name
            out.append(Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name, expr=init,
                                 calls=_calls_in(init), declared_type=declared))
            if not self.accept(','):
                break

    def _declaration(self, out: List[Statement]) -> None:
        self._local_declarators(out)
        self._end_statement()

    def _resources(self, out: List[Statement]) -> None:
        self.expect('(')
        while not self.at_eof() and not self.at(')'):
            self._local_declarators(out)
            if not self.accept(';'):
                break
        self.expect(')')

    def _end_statement(self) -> None:
        self.expect(';')

    def _for_each_binding(self, start: int, close: int) -> Optional[Statement]:
        decl_start = self.pos
        try:
            self.accept('final')
            type_name = self._type()
            name = self.ident()
            if not self.accept(':'):
                return None
            source = self._expression()
        except _Unsupported:
            return None
        if self.pos != close:
            return None
        return Statement(StmtKind.VAR_DECL, self.span_from(decl_start), lhs=name, expr=source,
                         calls=_calls_in(source), declared_type=type_name)

    def _param(self) -> Tuple[str, Optional[str]]:
        while self.at('final', '@'):
            if self.at('@'):
                self._skip_annotation()
            else:
                self.advance()
        if self.peek().kind == 'ident' and self.peek(1).text in (',', ')'):
            return self.ident(), None  # untyped lambda parameter
        type_name = self._type()
        return self.ident(), type_name

    def _lambda_params(self):
        return self._params()

    def _after_parenthesized(self, inner: Expr) -> Expr:
        tok = self.peek()
        is_cast = isinstance(inner, (Identifier, Member)) and (
            tok.kind in ('ident', 'string', 'number') or tok.text == '(') and not self.at(*_BINARY_OPS)
        if is_cast:
            return self._unary()
        return inner

    def _postfix_extra(self) -> bool:
        if self.at('::'):
            raise _Unsupported('method reference')
        return False


def _with_export(fn: IRFunction, names: set) -> IRFunction:
    if fn.is_exported or fn.ref.local_name not in names:
        return fn
    return replace(fn, is_exported=True)


def _calls_in(expr: Optional[Expr]) -> Tuple[Call, ...]:
    return tuple(node for node in walk_expr(expr) if isinstance(node, Call))


def _assign_root(target: Expr) -> str:
    node = target
    while isinstance(node, Operation) and node.op == '[]':
        node = node.operands[0]
    root, _ = member_chain(node)
    while isinstance(root, Operation) and root.op == '[]':
        root, _ = member_chain(root.operands[0])
    if isinstance(root, Identifier):
        return root.name
    raise _Unsupported('assignment target')


def _constructed_type(expr: Optional[Expr]) -> Optional[str]:
    """Class name of `new T(...)`"""
    if isinstance(expr, Call) and expr.constructor:
        callee = expr.callee
        if isinstance(callee, Member):
            return callee.field
        if isinstance(callee, Identifier):
            return callee.name
    return None


def language_for(path: str) -> Optional[Language]:
    return _EXTENSIONS.get(PurePosixPath(path).suffix.lower())


def parse_file(file: SourceFile) -> IRModule:
    """Parse one source file; syntax problems only ever produce diagnostics"""
    parser_class = JavaParser if file.language == Language.JAVA else JsParser
    try:
        module = parser_class(file).build()
    except Exception as e:
        logger.error(f"Parser failure in {file.path}: {str(e)}")
        module = IRModule(file=file, module_name=module_name_for(file.path, file.language),
                          imports=(), functions=(),
                          diagnostics=(Diagnostic(file.path, 1, 1, f"parser failure: {e}"),))
    logger.debug(f"Parsed {file.path}: {len(module.functions)} functions, "
                 f"{len(module.diagnostics)} skips")
    return module


def read_source(path: Path, rel: str, language: Language) -> SourceFile:
    try:
        raw = path.read_bytes()
    except OSError as e:
        raise UnreadableFile(rel, str(e)) from e
    return SourceFile(rel, language, raw.decode('utf-8', errors='replace'))


def _is_excluded(rel: str, globs: Sequence[str]) -> bool:
    parts = PurePosixPath(rel).parts
    return any(fnmatch(rel, glob) or any(fnmatch(part, glob) for part in parts) for glob in globs)


def discover_files(root: Path, overrides: Optional[ScanConfig] = None) -> List[SourceFile]:
    """Source files under root, sorted by relative path"""
    root = Path(root)
    if not root.is_dir():
        raise RootNotFound(str(root))
    globs = list(config.DEFAULT_EXCLUDES)
    forced = None
    if overrides is not None:
        globs.extend(overrides.excludes)
        if overrides.exclude_tests:
            globs.extend(config.TEST_EXCLUDES)
        forced = overrides.language
    files: List[SourceFile] = []
    for path in sorted(root.rglob('*')):
        if not path.is_file():
            continue
        rel = path.relative_to(root).as_posix()
        language = language_for(rel)
        if language is None:
            continue
        if _is_excluded(rel, globs):
            continue
        files.append(read_source(path, rel, forced or language))
    files.sort(key=lambda f: f.path)
    logger.info(f"Discovered {len(files)} source files under {root}")
    return files


def parse_all(files: Sequence[SourceFile], workers: Optional[int] = None) -> List[IRModule]:
    """Parse files in parallel; the result is sorted by path"""
    workers = workers or config.WORKERS
    if workers <= 1 or len(files) < 2:
        modules = [parse_file(f) for f in files]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            modules = list(pool.map(parse_file, files))
    modules.sort(key=lambda m: m.file.path)
    return modules
