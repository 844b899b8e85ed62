"""Intermediate representation shared by every analysis stage.

All values are frozen dataclasses: once the frontend has built a module it is
never mutated, so modules can be shared freely between worker threads.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional, Tuple, Union


class Language(str, Enum):
    JS = 'js'
    JAVA = 'java'


@dataclass(frozen=True, order=True)
class Span:
    """Code-point range [start, end) in the decoded file text, plus the 1-based start position.

    Offsets equal byte offsets only for ASCII text; multi-byte characters count once.
    """
    start: int
    end: int
    line: int = 1
    col: int = 1

    def contains(self, other: 'Span') -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class SourceFile:
    path: str  # relative, forward slashes
    language: Language
    text: str


@dataclass(frozen=True, order=True)
class MethodRef:
    """Canonical identity of a method.

    Scanned methods are `module::local` (local is `name` or `Class.name`);
    library methods are their dotted name and carry no span.
    """
    qualified_name: str
    module: str = field(default='', compare=False)
    span: Optional[Span] = field(default=None, compare=False)
    file: Optional[str] = field(default=None, compare=False)

    @property
    def is_external(self) -> bool:
        return self.span is None

    @property
    def local_name(self) -> str:
        return self.qualified_name.split('::', 1)[-1]

    @property
    def dotted(self) -> str:
        """Dotted form used for catalog matching"""
        if '::' not in self.qualified_name:
            return self.qualified_name
        module, local = self.qualified_name.split('::', 1)
        return f"{module.replace('/', '.')}.{local}"

    def __str__(self) -> str:
        return self.qualified_name


@dataclass(frozen=True)
class ImportDecl:
    target: str
    symbols: Tuple[Tuple[str, str], ...]  # (external name, local alias)
    span: Span
    wildcard: bool = False
    implicit: bool = False  # e.g. java.lang, never written in source


@dataclass(frozen=True)
class Identifier:
    name: str
    span: Span


@dataclass(frozen=True)
class Literal:
    text: str
    kind: str  # 'string' | 'number' | 'keyword' | 'template'
    span: Span


@dataclass(frozen=True)
class Member:
    base: 'Expr'
    field: str
    span: Span


@dataclass(frozen=True)
class Call:
    callee: 'Expr'
    args: Tuple['Expr', ...]
    span: Span
    constructor: bool = False


@dataclass(frozen=True)
class Operation:
    """Any other composite expression (operators, object/array literals, templates)"""
    op: str
    operands: Tuple['Expr', ...]
    span: Span


Expr = Union[Identifier, Literal, Member, Call, Operation]


class StmtKind(str, Enum):
    VAR_DECL = 'VarDecl'
    ASSIGN = 'Assign'
    CALL = 'CallStmt'
    RETURN = 'Return'


@dataclass(frozen=True)
class Statement:
    kind: StmtKind
    span: Span
    lhs: Optional[str] = None  # variable written (root variable for member targets)
    expr: Optional[Expr] = None
    calls: Tuple[Call, ...] = ()  # every call nested anywhere in the statement, pre-order
    declared_type: Optional[str] = None
    target: Optional[Expr] = None  # full assignment target when it is a member chain
    conditional: bool = False  # inside a branch, loop or catch block: updates are weak
    loops: Tuple[int, ...] = ()  # enclosing loops, outermost first, by keyword offset


@dataclass(frozen=True)
class IRFunction:
    ref: MethodRef
    params: Tuple[str, ...]
    body: Tuple[Statement, ...]
    span: Span
    is_exported: bool = False
    param_types: Tuple[Optional[str], ...] = ()
    param_spans: Tuple[Span, ...] = ()
    class_name: Optional[str] = None
    module_scope: bool = False  # synthetic holder for top-level statements


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    col: int
    reason: str

    def __str__(self) -> str:
        return f"{self.path}:{self.line}:{self.col}: skip: {self.reason}"


@dataclass(frozen=True)
class IRModule:
    file: SourceFile
    module_name: str
    imports: Tuple[ImportDecl, ...]
    functions: Tuple[IRFunction, ...]
    diagnostics: Tuple[Diagnostic, ...] = ()
    classes: Tuple[str, ...] = ()
    field_types: Tuple[Tuple[str, str, str], ...] = ()  # (class, field, type)

    @property
    def language(self) -> Language:
        return self.file.language

    def methods(self) -> Tuple[IRFunction, ...]:
        """Real functions, without the module-scope holder"""
        return tuple(fn for fn in self.functions if not fn.module_scope)

    def field_type(self, class_name: Optional[str], name: str) -> Optional[str]:
        for owner, fld, type_name in self.field_types:
            if owner == class_name and fld == name:
                return type_name
        return None


def walk_expr(expr: Optional[Expr]) -> Iterator[Expr]:
    """Pre-order traversal of an expression tree"""
    if expr is None:
        return
    stack = [expr]
    while stack:
        node = stack.pop()
        yield node
        if isinstance(node, Member):
            stack.append(node.base)
        elif isinstance(node, Call):
            stack.extend(reversed(node.args))
            stack.append(node.callee)
        elif isinstance(node, Operation):
            stack.extend(reversed(node.operands))


def member_chain(expr: Expr) -> Tuple[Expr, Tuple[str, ...]]:
    """Split `a.b.c` into (root, ('b', 'c'))"""
    path = []
    node = expr
    while isinstance(node, Member):
        path.append(node.field)
        node = node.base
    return node, tuple(reversed(path))
