"""API closure: which methods transitively reach native privacy-relevant methods.

Propagation runs backwards over resolved call edges. Nodes are seeded in
dependency order (libraries before their dependents) and the worklist keeps
going until nothing changes, so the result is the least fixed point whatever
the seeding order.
"""
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path, PurePosixPath
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, Field, RootModel

from .catalog import CatalogEntry, Origin, PrivacyCatalog, ProcessingLabel, match_method
from .config import config
from .errors import SchemaError
from .graphs import CallGraph
from .logger import logger
from .models import Language, MethodRef
from .utils import load_json_model


class MethodClass(str, Enum):
    NATIVE = 'NativeEntry'
    API = 'ApiPrivacyRelevant'
    APPLICATION = 'Application'


@dataclass(frozen=True)
class Library:
    name: str
    language: Language
    category: ProcessingLabel
    packages: Tuple[str, ...] = ()
    selected: bool = True  # one of the pre-selected popular libraries

    def prefixes(self) -> Tuple[str, ...]:
        return (self.name, *self.packages)


class _LibraryModel(BaseModel):
    name: str = Field(min_length=1)
    language: Language
    category: ProcessingLabel
    packages: List[str] = Field(default_factory=list)
    selected: bool = True

    model_config = {'extra': 'forbid'}


class _LibraryList(RootModel[List[_LibraryModel]]):
    pass


def load_libraries(path: Union[str, Path]) -> Tuple[Library, ...]:
    model, lines = load_json_model(Path(path), _LibraryList, None)
    seen = set()
    libraries = []
    for index, raw in enumerate(model.root):
        if (raw.name, raw.category) in seen:
            line = lines[index] if index < len(lines) else 1
            raise SchemaError(line, f"duplicate library {raw.name!r} in category {raw.category.value}",
                              str(path))
        seen.add((raw.name, raw.category))
        libraries.append(Library(raw.name, raw.language, raw.category, tuple(raw.packages), raw.selected))
    logger.info(f"Loaded {len(libraries)} library rows from {Path(path).name}")
    return tuple(libraries)


@lru_cache(maxsize=1)
def default_libraries() -> Tuple[Library, ...]:
    return load_libraries(config.LIBRARIES_PATH)


def library_aliases(libraries: Sequence[Library]) -> Dict[str, Tuple[str, ...]]:
    """Library name -> package prefixes, merged over rows sharing a name"""
    aliases: Dict[str, Set[str]] = {}
    for library in libraries:
        aliases.setdefault(library.name, set()).update(library.packages)
    return {name: tuple(sorted(prefixes)) for name, prefixes in aliases.items()}


def library_for_module(module_name: str, path: Optional[str], libraries: Sequence[Library]) -> Optional[str]:
    """Library a scanned module belongs to: package prefix (Java) or a path segment (JS)"""
    segments = set(PurePosixPath(path).parts) if path else set()
    for library in sorted(libraries, key=lambda lib: lib.name):
        for prefix in library.prefixes():
            if module_name == prefix or module_name.startswith(prefix + '.'):
                return library.name
            if prefix in segments:
                return library.name
    return None


@dataclass(frozen=True)
class PrivacySets:
    native_hits: FrozenSet[str]  # methods with a direct call into a native entry
    api_set: FrozenSet[str]
    labels_of: Dict[str, FrozenSet[ProcessingLabel]]
    native_entries: Dict[str, CatalogEntry]  # graph node -> matching native entry
    library_of: Dict[str, str]
    configured: FrozenSet[str]
    catalog: PrivacyCatalog = field(repr=False, compare=False)

    def labels(self, method: Union[MethodRef, str]) -> FrozenSet[ProcessingLabel]:
        name = method.qualified_name if isinstance(method, MethodRef) else method
        return self.labels_of.get(name, frozenset())


def compute_api_set(cg: CallGraph, catalog: PrivacyCatalog, order: Sequence[Sequence[str]],
                    libraries: Sequence[Library] = ()) -> PrivacySets:
    """Backward fixed point of native reachability and label union"""
    graph = cg.graph
    labels: Dict[str, Set[ProcessingLabel]] = {}
    reaches: Dict[str, bool] = {}
    native_entries: Dict[str, CatalogEntry] = {}
    library_of: Dict[str, str] = {}
    configured = frozenset(lib.name for lib in libraries)

    for name in graph.nodes:
        ref: MethodRef = graph.nodes[name]['ref']
        entry = match_method(catalog, ref)
        labels[name] = set(entry.labels) if entry else set()
        reaches[name] = entry is not None
        if entry is not None and entry.origin == Origin.NATIVE:
            native_entries[name] = entry
        if ref.is_external:
            if entry is not None:
                library_of[name] = entry.library
        else:
            owner = library_for_module(ref.module, ref.file, libraries)
            if owner is not None:
                library_of[name] = owner

    rank = {module: index for index, group in enumerate(order) for module in group}
    seeded = sorted(graph.nodes, key=lambda n: (rank.get(graph.nodes[n]['ref'].module, -1), n))
    queue = deque(seeded)
    queued = set(seeded)
    while queue:
        node = queue.popleft()
        queued.discard(node)
        if not reaches[node]:
            continue
        for pred in sorted(graph.predecessors(node)):
            before = (reaches[pred], len(labels[pred]))
            reaches[pred] = True
            labels[pred] |= labels[node]
            if (reaches[pred], len(labels[pred])) != before and pred not in queued:
                queue.append(pred)
                queued.add(pred)

    api_set = frozenset(n for n, hit in reaches.items() if hit and n not in native_entries)
    labels_of = {n: frozenset(labels[n]) for n, hit in reaches.items() if hit}
    native_hits = frozenset(edge.caller.qualified_name for edge in cg.resolved_edges()
                            if edge.callee.qualified_name in native_entries)
    logger.info(f"API closure: {len(native_entries)} native callees, {len(api_set)} API methods, "
                f"{len(native_hits)} methods calling native entries directly")
    return PrivacySets(native_hits, api_set, labels_of, native_entries, library_of, configured, catalog)


def classify_method(sets: PrivacySets, m: Union[MethodRef, str]) -> MethodClass:
    name = m.qualified_name if isinstance(m, MethodRef) else m
    if name in sets.native_entries:
        return MethodClass.NATIVE
    entry = match_method(sets.catalog, m)
    if entry is not None and entry.origin == Origin.NATIVE:
        return MethodClass.NATIVE
    if name in sets.api_set and sets.library_of.get(name) in sets.configured:
        return MethodClass.API
    return MethodClass.APPLICATION


def privacy_relevant(sets: PrivacySets, m: Union[MethodRef, str]) -> bool:
    return classify_method(sets, m) != MethodClass.APPLICATION