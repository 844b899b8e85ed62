"""Personal-data source detection over IR: identifiers and literal text"""
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Pattern, Sequence, Tuple, Union

from pydantic import BaseModel, Field

from .catalog import valid_pattern
from .config import config
from .errors import BadRegex, SchemaError
from .logger import logger
from .models import Call, Identifier, IRFunction, IRModule, Literal, MethodRef, Span, walk_expr
from .utils import excerpt, load_json_model, normalize_identifier

EXPECTED_CATEGORIES = 10

NAME_RULE = re.compile(r'(?i)(?:^|_|\b)(?:first|given|full|last|sur(?!geon))[_]?name')


class SourceKind(str, Enum):
    LITERAL = 'LiteralText'
    IDENTIFIER = 'VariableIdentifier'


@dataclass(frozen=True)
class PdCategory:
    name: str
    is_pii: bool
    identifier_patterns: Tuple[Pattern, ...]
    literal_patterns: Tuple[Pattern, ...]
    reconstructed: bool = False

    def matches_identifier(self, identifier: str) -> bool:
        normalized = normalize_identifier(identifier)
        return any(p.search(normalized) for p in self.identifier_patterns)

    def matches_literal(self, text: str) -> bool:
        return any(p.search(text) for p in self.literal_patterns)


@dataclass(frozen=True)
class RuleSet:
    categories: Tuple[PdCategory, ...]
    sanitizers: Tuple[str, ...] = ()
    comment: str = ''

    def category(self, name: str) -> Optional[PdCategory]:
        return next((c for c in self.categories if c.name == name), None)

    def pii_names(self) -> Tuple[str, ...]:
        return tuple(c.name for c in self.categories if c.is_pii)


@dataclass(frozen=True)
class PersonalDataSource:
    category: str
    kind: SourceKind
    file: str
    span: Span
    symbol: str
    function: MethodRef = field(compare=False)
    is_pii: bool = False
    text: str = field(default='', compare=False)  # full literal text; symbol is its excerpt

    @property
    def source_id(self) -> str:
        return f"{self.file}:{self.span.line}:{self.span.col}:{self.category}:{self.symbol}"

    def sort_key(self) -> Tuple:
        return self.file, self.span.start, self.category, self.symbol


class _CategoryModel(BaseModel):
    name: str = Field(min_length=1)
    pii: bool
    identifier_patterns: List[str] = Field(default_factory=list)
    literal_patterns: List[str] = Field(default_factory=list)
    reconstructed: bool = False

    model_config = {'extra': 'forbid'}


class _RulesModel(BaseModel):
    comment: str = ''
    categories: List[_CategoryModel]
    sanitizers: List[str] = Field(default_factory=list)

    model_config = {'extra': 'forbid'}


def _compile(category: str, pattern: str) -> Pattern:
    try:
        return re.compile(pattern)
    except re.error as e:
        raise BadRegex(category, pattern, str(e)) from e


def load_rule_file(path: Union[str, Path]) -> RuleSet:
    model, lines = load_json_model(Path(path), _RulesModel, 'categories')
    names = set()
    categories = []
    for index, raw in enumerate(model.categories):
        line = lines[index] if index < len(lines) else 1
        if raw.name in names:
            raise SchemaError(line, f"duplicate category {raw.name!r}", str(path))
        names.add(raw.name)
        if not raw.identifier_patterns and not raw.literal_patterns:
            raise SchemaError(line, f"category {raw.name!r} has no patterns", str(path))
        categories.append(PdCategory(
            name=raw.name,
            is_pii=raw.pii,
            identifier_patterns=tuple(_compile(raw.name, p) for p in raw.identifier_patterns),
            literal_patterns=tuple(_compile(raw.name, p) for p in raw.literal_patterns),
            reconstructed=raw.reconstructed,
        ))
    for sanitizer in model.sanitizers:
        if not valid_pattern(sanitizer):
            raise SchemaError(1, f"invalid sanitizer pattern {sanitizer!r}", str(path))
    if len(categories) != EXPECTED_CATEGORIES:
        logger.warning(f"Rule file {Path(path).name} defines {len(categories)} categories "
                       f"(default set has {EXPECTED_CATEGORIES})")
    logger.info(f"Loaded {len(categories)} personal-data categories from {Path(path).name}")
    return RuleSet(tuple(categories), tuple(model.sanitizers), model.comment)


def load_rules(path: Union[str, Path]) -> List[PdCategory]:
    return list(load_rule_file(path).categories)


@lru_cache(maxsize=1)
def default_rules() -> RuleSet:
    return load_rule_file(config.RULES_PATH)


def name_rule_reference(identifier: str) -> bool:
    """Human-name rule: first/given/full/last/sur (not surgeon) directly followed by name"""
    return bool(NAME_RULE.search(normalize_identifier(identifier)))


def _occurrences(fn: IRFunction) -> Iterator[Tuple[str, Span, bool]]:
    """(text, span, is_literal) for every tested surface of a function, in source order"""
    for name, span in zip(fn.params, fn.param_spans):
        yield name, span, False
    for stmt in fn.body:
        if stmt.lhs and stmt.lhs != 'this':
            yield stmt.lhs, stmt.span, False
        for root in (stmt.target, stmt.expr):
            callees = {id(node.callee) for node in walk_expr(root) if isinstance(node, Call)}
            for node in walk_expr(root):
                if isinstance(node, Identifier) and not node.name.startswith('<'):
                    if node.name not in ('this', 'super') and id(node) not in callees:
                        yield node.name, node.span, False
                elif isinstance(node, Literal) and node.kind in ('string', 'template'):
                    yield node.text, node.span, True


def detect_sources(module: IRModule, rules: Union[RuleSet, Sequence[PdCategory]]) -> List[PersonalDataSource]:
    """Personal-data sources of a module, one per (symbol, function, category), ordered by span"""
    categories = rules.categories if isinstance(rules, RuleSet) else tuple(rules)
    found: Dict[Tuple[str, str, str], PersonalDataSource] = {}
    for fn in module.functions:
        for text, span, is_literal in _occurrences(fn):
            for category in categories:
                if is_literal:
                    if not category.matches_literal(text):
                        continue
                    symbol, kind = excerpt(text), SourceKind.LITERAL
                else:
                    if not category.matches_identifier(text):
                        continue
                    symbol, kind = text, SourceKind.IDENTIFIER
                key = (symbol, fn.ref.qualified_name, category.name)
                source = PersonalDataSource(category.name, kind, module.file.path, span, symbol,
                                            fn.ref, category.is_pii, text)
                if key not in found or span.start < found[key].span.start:
                    found[key] = source
    sources = sorted(found.values(), key=PersonalDataSource.sort_key)
    logger.debug(f"{module.file.path}: {len(sources)} personal-data sources")
    return sources
