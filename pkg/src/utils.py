import json
import re
from bisect import bisect_right
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

from .errors import SchemaError, UnreadableFile

M = TypeVar('M', bound=BaseModel)

_CAMEL_1 = re.compile(r'(.)([A-Z][a-z]+)')
_CAMEL_2 = re.compile(r'([a-z0-9])([A-Z])')


def normalize_identifier(name: str) -> str:
    """Convert an identifier to snake_case (e.g. firstName -> first_name)"""
    name = name.replace('-', '_').lstrip('$')
    s1 = _CAMEL_1.sub(r'\1_\2', name)
    return _CAMEL_2.sub(r'\1_\2', s1).lower()


def round_half_up(value: Fraction, places: int = 1) -> float:
    """Round exactly, half away from zero, to `places` decimals"""
    exact = Decimal(value.numerator) / Decimal(value.denominator)
    quantum = Decimal(1).scaleb(-places)
    return float(exact.quantize(quantum, rounding=ROUND_HALF_UP))


def percent(part: int, whole: int) -> float:
    """Percentage of part in whole, half-up at one decimal"""
    return round_half_up(Fraction(100 * part, whole))


class LineIndex:
    """Maps character offsets of a text to 1-based (line, col)"""

    def __init__(self, text: str):
        self._starts: List[int] = [0]
        for match in re.finditer('\n', text):
            self._starts.append(match.end())

    def position(self, offset: int) -> Tuple[int, int]:
        line = bisect_right(self._starts, offset)
        return line, offset - self._starts[line - 1] + 1


def excerpt(text: str, limit: int = 40) -> str:
    """Shorten a literal for display"""
    text = text.replace('\n', ' ')
    return text if len(text) <= limit else text[:limit - 3] + '...'


def array_item_lines(text: str, key: Optional[str]) -> List[int]:
    """1-based line of each element of the array stored under top-level `key` in a JSON text.

    With key=None the document itself is the array.
    """
    lines: List[int] = []
    depth, line, i, n = 0, 1, 0, len(text)
    pending, done = key is None, False
    array_depth: Optional[int] = None
    target_depth = 1 if key is None else 2
    expecting = False
    while i < n:
        ch = text[i]
        starts_item = array_depth is not None and expecting and depth == array_depth
        if ch == '\n':
            line += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == '\\' else 1
            if starts_item:
                lines.append(line)
                expecting = False
            elif depth == 1 and not done and text[i + 1:j] == key:
                pending = True
            i = j + 1
            continue
        elif ch in '[{':
            if starts_item:
                lines.append(line)
                expecting = False
            depth += 1
            if ch == '[' and pending and depth == target_depth:
                array_depth, expecting, pending, done = target_depth, True, False, True
        elif ch in ']}':
            depth -= 1
            if array_depth is not None and depth < array_depth:
                array_depth = None
        elif ch == ',' and array_depth is not None and depth == array_depth:
            expecting = True
        elif starts_item and not ch.isspace() and ch != ':':
            lines.append(line)
            expecting = False
        i += 1
    return lines


def load_json_model(path: Path, model: Type[M], items_key: Optional[str]) -> Tuple[M, List[int]]:
    """Read a JSON data file and validate it against a pydantic model.

    Returns the model and the source line of every element of `items_key`, so
    callers can point later semantic errors at the offending entry.
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise UnreadableFile(str(path), str(e)) from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(e.lineno, e.msg, str(path)) from e
    lines = array_item_lines(text, items_key)
    try:
        return model.model_validate(data), lines
    except ValidationError as e:
        error = e.errors()[0]
        loc = error['loc']
        line = 1
        index_loc = loc if items_key is None else loc[1:] if loc and loc[0] == items_key else ()
        if index_loc and isinstance(index_loc[0], int) and index_loc[0] < len(lines):
            line = lines[index_loc[0]]
        reason = f"{'.'.join(str(part) for part in loc)}: {error['msg']}"
        raise SchemaError(line, reason, str(path)) from e
