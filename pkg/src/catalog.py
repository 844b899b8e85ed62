"""Privacy catalog: native privacy-relevant methods, API entries and the label taxonomy"""
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple, Union

from pydantic import BaseModel, Field, field_validator

from .config import config
from .errors import DuplicateEntry, SchemaError
from .logger import logger
from .models import Language, MethodRef
from .utils import load_json_model


class NativeDomain(str, Enum):
    IO = 'IO'
    DATABASE = 'Database'
    NETWORK = 'Network'
    SECURITY = 'Security'


class ProcessingLabel(str, Enum):
    IAM = 'IAM'
    DEC = 'DEC'
    DSMD = 'DSMD'
    DPT = 'DPT'
    NC = 'NC'
    LM = 'LM'

    @property
    def gdpr_refs(self) -> Tuple[str, ...]:
        return _LABEL_INFO[self][0]

    @property
    def long_name(self) -> str:
        return _LABEL_INFO[self][1]

    @property
    def description(self) -> str:
        return _LABEL_INFO[self][2]


_LABEL_INFO = {
    ProcessingLabel.IAM: (('Art. 32',), 'Identity and access management',
                          'Authenticates users or controls their access to data and services'),
    ProcessingLabel.DEC: (('Art. 32',), 'Data encryption',
                          'Encrypts, hashes or otherwise protects personal data'),
    ProcessingLabel.DSMD: (('Art. 5(1)(e)',), 'Data storage and modification or deletion',
                           'Stores, updates or erases personal data'),
    ProcessingLabel.DPT: (('Art. 30',), 'Data processing and transfer',
                          'Processes personal data or transfers it between components'),
    ProcessingLabel.NC: (('Art. 44',), 'Network communication',
                         'Sends personal data over the network, possibly across borders'),
    ProcessingLabel.LM: (('Art. 5(1)(c)', 'Art. 5(1)(e)'), 'Logging and monitoring',
                         'Writes personal data to logs or monitoring systems'),
}

# Labels a native method of each domain may carry
DOMAIN_LABELS: Dict[NativeDomain, FrozenSet[ProcessingLabel]] = {
    NativeDomain.IO: frozenset({ProcessingLabel.DPT, ProcessingLabel.LM, ProcessingLabel.DSMD}),
    NativeDomain.SECURITY: frozenset({ProcessingLabel.IAM, ProcessingLabel.DEC}),
    NativeDomain.DATABASE: frozenset({ProcessingLabel.DSMD, ProcessingLabel.DPT}),
    NativeDomain.NETWORK: frozenset({ProcessingLabel.NC}),
}


class Origin(str, Enum):
    NATIVE = 'native'
    API = 'api'


_SEGMENT = r'[^\s.*]+'
_PATTERN_RE = re.compile(rf'^(?:\*\.)?{_SEGMENT}(?:\.{_SEGMENT})*(?:\.\*)?$')


def valid_pattern(pattern: str) -> bool:
    """Exact name, or a single wildcard segment at the start or the end"""
    if not _PATTERN_RE.match(pattern):
        return False
    return not (pattern.startswith('*.') and pattern.endswith('.*'))


def pattern_matches(pattern: str, dotted: str) -> bool:
    if '*' not in pattern:
        return dotted == pattern
    fixed = pattern.strip('*').strip('.')
    if pattern.startswith('*.'):
        return dotted.endswith('.' + fixed) and len(dotted) > len(fixed) + 1
    return dotted.startswith(fixed + '.')


@dataclass(frozen=True)
class CatalogEntry:
    pattern: str
    library: str
    origin: Origin
    labels: FrozenSet[ProcessingLabel]
    domain: Optional[NativeDomain] = None
    language: Optional[Language] = None

    @property
    def is_wildcard(self) -> bool:
        return '*' in self.pattern

    @property
    def fixed_segments(self) -> Tuple[str, ...]:
        return tuple(seg for seg in self.pattern.split('.') if seg != '*')

    def specificity(self) -> Tuple[int, int, str]:
        """Sort key: more fixed segments first, exact before wildcard, then by pattern"""
        return -len(self.fixed_segments), int(self.is_wildcard), self.pattern

    def matches(self, dotted: str) -> bool:
        return pattern_matches(self.pattern, dotted)


@dataclass(frozen=True)
class PrivacyCatalog:
    entries: Tuple[CatalogEntry, ...]
    version: str
    _exact: Dict[str, Tuple[CatalogEntry, ...]] = field(default_factory=dict, init=False,
                                                        repr=False, compare=False)
    _wildcards: Tuple[CatalogEntry, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        exact: Dict[str, List[CatalogEntry]] = {}
        for entry in self.entries:
            if not entry.is_wildcard:
                exact.setdefault(entry.pattern, []).append(entry)
        object.__setattr__(self, '_exact', {k: tuple(v) for k, v in exact.items()})
        object.__setattr__(self, '_wildcards', tuple(e for e in self.entries if e.is_wildcard))

    def __len__(self) -> int:
        return len(self.entries)

    def candidates(self, dotted: str) -> List[CatalogEntry]:
        found = list(self._exact.get(dotted, ()))
        found.extend(e for e in self._wildcards if e.matches(dotted))
        return sorted(found, key=CatalogEntry.specificity)

    def with_suffix(self, suffix: str) -> List[CatalogEntry]:
        """Exact entries whose pattern ends with `.suffix` (case-insensitive on the class segment)"""
        wanted = suffix.lower()
        return sorted((e for e in self.entries if not e.is_wildcard and
                       (e.pattern.lower().endswith('.' + wanted) or e.pattern.lower() == wanted)),
                      key=CatalogEntry.specificity)

    def natives(self) -> Tuple[CatalogEntry, ...]:
        return tuple(e for e in self.entries if e.origin == Origin.NATIVE)

    def label_counts(self) -> Dict[str, int]:
        counts = {label.value: 0 for label in ProcessingLabel}
        for entry in self.entries:
            for label in entry.labels:
                counts[label.value] += 1
        return counts

    def language_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for entry in self.entries:
            key = entry.language.value if entry.language else 'any'
            counts[key] = counts.get(key, 0) + 1
        return dict(sorted(counts.items()))


class _EntryModel(BaseModel):
    pattern: str
    library: str = Field(min_length=1)
    origin: Origin
    domain: Optional[NativeDomain] = None
    labels: List[ProcessingLabel] = Field(min_length=1)
    language: Optional[Language] = None

    model_config = {'extra': 'forbid'}

    @field_validator('pattern')
    @classmethod
    def check_pattern(cls, v):
        if not valid_pattern(v):
            raise ValueError(f"invalid pattern {v!r}")
        return v


class _CatalogModel(BaseModel):
    version: str
    entries: List[_EntryModel]

    model_config = {'extra': 'forbid'}


def load_catalog(path: Union[str, Path], libraries: Optional[Iterable[str]] = None) -> PrivacyCatalog:
    """Load and validate a catalog file.

    When `libraries` is given, every API entry must belong to one of them.
    """
    model, lines = load_json_model(Path(path), _CatalogModel, 'entries')
    known = set(libraries) if libraries is not None else None
    seen = set()
    entries = []
    for index, raw in enumerate(model.entries):
        line = lines[index] if index < len(lines) else 1
        key = (raw.pattern, raw.origin)
        if key in seen:
            raise DuplicateEntry(raw.pattern)
        seen.add(key)
        labels = frozenset(raw.labels)
        if raw.origin == Origin.NATIVE:
            if raw.domain is None:
                raise SchemaError(line, f"native entry {raw.pattern!r} has no domain", str(path))
            extra = labels - DOMAIN_LABELS[raw.domain]
            if extra:
                names = ', '.join(sorted(label.value for label in extra))
                raise SchemaError(line, f"labels {names} not allowed for domain {raw.domain.value}",
                                  str(path))
        else:
            if raw.domain is not None:
                raise SchemaError(line, f"api entry {raw.pattern!r} must not have a domain", str(path))
            if known is not None and raw.library not in known:
                raise SchemaError(line, f"library {raw.library!r} is not in the library list", str(path))
        entries.append(CatalogEntry(raw.pattern, raw.library, raw.origin, labels, raw.domain, raw.language))
    catalog = PrivacyCatalog(tuple(entries), model.version)
    logger.info(f"Loaded catalog {Path(path).name} v{catalog.version}: {len(catalog)} entries")
    return catalog


@lru_cache(maxsize=1)
def default_catalog() -> PrivacyCatalog:
    return load_catalog(config.CATALOG_PATH)


def match_method(catalog: PrivacyCatalog, method: Union[MethodRef, str]) -> Optional[CatalogEntry]:
    """Most specific entry matching the method, or None"""
    dotted = method.dotted if isinstance(method, MethodRef) else method
    found = catalog.candidates(dotted)
    return found[0] if found else None
