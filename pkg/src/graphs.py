"""Import graph, dependency ordering and call graph construction"""
import posixpath
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import networkx as nx

from .catalog import CatalogEntry, PrivacyCatalog, match_method
from .logger import logger
from .models import (Call, Expr, Identifier, ImportDecl, IRFunction, IRModule, Language,
                     MethodRef, Span, StmtKind, member_chain)


class Resolution(str, Enum):
    EXACT = 'Exact'
    IMPORT = 'ImportResolved'
    SUFFIX = 'SuffixHeuristic'
    UNRESOLVED = 'Unresolved'


@dataclass(frozen=True, order=True)
class CallEdge:
    caller: MethodRef
    site: Span
    callee: MethodRef
    resolution: Resolution = field(compare=False)

    @property
    def resolved(self) -> bool:
        return self.resolution != Resolution.UNRESOLVED


@dataclass
class ImportGraph:
    graph: nx.DiGraph
    modules: Set[str]  # scanned module names; other nodes are libraries

    def nodes(self) -> List[str]:
        return sorted(self.graph.nodes)

    def edges(self) -> List[Tuple[str, str]]:
        return sorted(self.graph.edges)

    def to_dot(self) -> str:
        lines = ['digraph imports {']
        for node in self.nodes():
            shape = 'box' if node in self.modules else 'ellipse'
            lines.append(f'  "{node}" [shape={shape}];')
        for src, dst in self.edges():
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append('}')
        return '\n'.join(lines) + '\n'


@dataclass
class CallGraph:
    nodes: Tuple[MethodRef, ...]
    edges: Tuple[CallEdge, ...]
    functions: Dict[str, IRFunction]
    graph: nx.DiGraph  # resolved edges only, keyed by qualified name
    _sites: Dict[Tuple[str, Span], CallEdge] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for edge in self.edges:
            self._sites.setdefault((edge.caller.qualified_name, edge.site), edge)

    def edge_at(self, caller: str, site: Span) -> Optional[CallEdge]:
        return self._sites.get((caller, site))

    def resolved_edges(self) -> List[CallEdge]:
        return [e for e in self.edges if e.resolved]

    def unresolved_edges(self) -> List[CallEdge]:
        return [e for e in self.edges if not e.resolved]

    def node(self, qualified_name: str) -> Optional[MethodRef]:
        fn = self.functions.get(qualified_name)
        if fn is not None:
            return fn.ref
        return self.graph.nodes[qualified_name].get('ref') if qualified_name in self.graph else None

    def to_dot(self) -> str:
        lines = ['digraph calls {']
        for edge in sorted(self.edges):
            style = '' if edge.resolved else ' [style=dashed]'
            lines.append(f'  "{edge.caller}" -> "{edge.callee}"{style};')
        lines.append('}')
        return '\n'.join(lines) + '\n'


def canonical_target(module: IRModule, decl: ImportDecl, scanned: Iterable[str]) -> str:
    """Map an import target to a scanned module name or a library name"""
    target = decl.target
    if module.language == Language.JAVA:
        return target
    if target.startswith('node:'):
        return target[len('node:'):]
    if not target.startswith('.'):
        return target
    base = posixpath.dirname(module.file.path)
    joined = posixpath.normpath(posixpath.join(base, target))
    stem, ext = posixpath.splitext(joined)
    names = set(scanned)
    for candidate in (joined, stem, posixpath.join(joined, 'index')):
        if candidate in names:
            return candidate
    return stem if ext in ('.js', '.jsx', '.ts', '.tsx') else joined


def build_import_graph(modules: Sequence[IRModule]) -> ImportGraph:
    scanned = {m.module_name for m in modules}
    graph = nx.DiGraph()
    for module in sorted(modules, key=lambda m: m.file.path):
        graph.add_node(module.module_name)
        for decl in module.imports:
            if decl.implicit:
                continue
            target = canonical_target(module, decl, scanned)
            graph.add_node(target)
            if target != module.module_name:
                graph.add_edge(module.module_name, target)
    logger.info(f"Import graph: {graph.number_of_nodes()} nodes, {graph.number_of_edges()} edges")
    return ImportGraph(graph, scanned)


def import_cycles(g: ImportGraph) -> List[List[str]]:
    return sorted(sorted(scc) for scc in nx.strongly_connected_components(g.graph) if len(scc) > 1)


def dependency_order(g: ImportGraph) -> List[List[str]]:
    """SCC groups, dependencies first; ties broken by the smallest member name"""
    for cycle in import_cycles(g):
        logger.warning(f"Import cycle condensed: {', '.join(cycle)}")
    condensed = nx.condensation(g.graph)
    members = {c: sorted(condensed.nodes[c]['members']) for c in condensed.nodes}
    order = nx.lexicographical_topological_sort(condensed.reverse(copy=False),
                                                key=lambda c: members[c][0])
    return [members[c] for c in order]


def library_imported(targets: Iterable[str], entry: CatalogEntry,
                     aliases: Mapping[str, Sequence[str]]) -> bool:
    """True if one of the module's import targets belongs to the entry's library"""
    prefixes = (entry.library, *aliases.get(entry.library, ()))
    for target in targets:
        for prefix in prefixes:
            if target == prefix or target.startswith(prefix + '.') or target.startswith(prefix + '/'):
                return True
        if entry.pattern.startswith(target + '.') or entry.pattern == target:
            return True
    return False


class _ModuleResolver:
    """Call resolution for the functions of one module"""

    def __init__(self, module: IRModule, defs: Mapping[str, Mapping[str, MethodRef]],
                 classes: Mapping[str, Set[str]], catalog: PrivacyCatalog,
                 aliases: Mapping[str, Sequence[str]]):
        self.module = module
        self.name = module.module_name
        self.java = module.language == Language.JAVA
        self.defs = defs
        self.classes = classes
        self.catalog = catalog
        self.aliases = aliases
        self.bindings: Dict[str, Tuple[str, str]] = {}  # alias -> (target, external name)
        self.wildcards: List[str] = []
        self.targets: List[str] = []  # explicit imports only; they gate the suffix heuristic
        scanned = defs.keys()
        for decl in module.imports:
            target = canonical_target(module, decl, scanned)
            if not decl.implicit:
                self.targets.append(target)
            for external, alias in decl.symbols:
                self.bindings[alias] = (target, external)
            if decl.wildcard and (self.java or decl.implicit):
                self.wildcards.append(target)

    # ---- lookups ----

    def _scanned(self, module: str, local: str) -> Optional[MethodRef]:
        return self.defs.get(module, {}).get(local)

    def _catalog(self, dotted: str) -> Optional[MethodRef]:
        if match_method(self.catalog, dotted) is not None:
            return MethodRef(dotted)
        return None

    def _through(self, target: str, local: str) -> Optional[MethodRef]:
        """Method `local` of import target: a scanned module or a catalogued library"""
        if target in self.defs:
            return self._scanned(target, local)
        if self.java and '.' in target:
            package, cls = target.rsplit('.', 1)
            found = self._scanned(package, f"{cls}.{local}")
            if found is not None:
                return found
        return self._catalog(f"{target}.{local}")

    def _ctor(self) -> str:
        return '<init>' if self.java else 'constructor'

    def _type_method(self, type_name: str, method: str) -> Optional[Tuple[MethodRef, Resolution]]:
        local = f"{type_name}.{method}"
        if type_name in self.classes.get(self.name, ()):
            found = self._scanned(self.name, local)
            if found is not None:
                return found, Resolution.EXACT
        if type_name in self.bindings:
            target, external = self.bindings[type_name]
            found = self._through(target, _imported_local(external, type_name, method))
            if found is not None:
                return found, Resolution.IMPORT
        for target in self.wildcards:
            found = self._through(target, local)
            if found is not None:
                return found, Resolution.IMPORT
        return None

    def _suffix(self, receiver: Optional[str], method: str) -> Optional[MethodRef]:
        if not receiver:
            return None
        matches = {e.pattern for e in self.catalog.with_suffix(f"{receiver}.{method}")
                   if library_imported(self.targets, e, self.aliases)}
        if len(matches) == 1:
            return MethodRef(matches.pop())
        return None

    # ---- resolution ----

    def resolve(self, fn: IRFunction, types: Mapping[str, Optional[str]], call: Call) -> Tuple[MethodRef, Resolution]:
        root, path = member_chain(call.callee)
        receiver: Optional[str] = None
        if isinstance(root, Call) and root.constructor and len(path) == 1:
            type_name = _callee_name(root.callee)
            if type_name:
                hit = self._type_method(type_name, path[0])
                if hit:
                    return hit
                receiver = type_name
        elif isinstance(root, Identifier):
            hit, receiver = self._resolve_named(fn, types, root.name, path, call.constructor)
            if hit:
                return hit
        if path:
            if receiver is None and len(path) >= 2:
                receiver = path[-2]
            found = self._suffix(receiver, path[-1])
            if found is not None:
                return found, Resolution.SUFFIX
        return MethodRef(_display_name(call.callee)), Resolution.UNRESOLVED

    def _resolve_named(self, fn: IRFunction, types: Mapping[str, Optional[str]], name: str,
                       path: Tuple[str, ...], constructor: bool):
        """Returns (hit or None, receiver name for the suffix heuristic)"""
        cls = fn.class_name
        local_var = name in types
        if not path:
            if constructor:
                hit = self._type_method(name, self._ctor())
                return hit, None
            if local_var:
                return None, None
            candidates = [name] if not (self.java and cls) else [f"{cls}.{name}", name]
            for local in candidates:
                found = self._scanned(self.name, local)
                if found is not None:
                    return (found, Resolution.EXACT), None
            if name in self.bindings:
                target, external = self.bindings[name]
                if external in ('*', 'default'):
                    found = self._scanned(target, name) if target in self.defs else self._catalog(target)
                else:
                    found = self._through(target, external)
                if found is not None:
                    return (found, Resolution.IMPORT), None
            for target in self.wildcards:
                found = self._through(target, name)
                if found is not None:
                    return (found, Resolution.IMPORT), None
            return None, None

        method = path[-1]
        if name in ('this', 'super'):
            if len(path) == 1 and cls:
                found = self._scanned(self.name, f"{cls}.{method}")
                if found is not None:
                    return (found, Resolution.EXACT), None
                return None, cls
            if len(path) == 2 and cls:
                field_type = self.module.field_type(cls, path[0])
                if field_type:
                    return self._type_method(field_type, method), field_type
                return None, path[0]
            return None, None
        if local_var:
            declared = types.get(name)
            if declared and len(path) == 1:
                return self._type_method(declared, method), declared
            return None, declared or name
        if cls and len(path) == 1:
            field_type = self.module.field_type(cls, name)
            if field_type:
                return self._type_method(field_type, method), field_type
        dotted = '.'.join(path)
        if name in self.bindings:
            target, external = self.bindings[name]
            found = self._through(target, _imported_local(external, name, dotted))
            if found is None and external == 'default':
                found = self._through(target, dotted)
            if found is not None:
                return (found, Resolution.IMPORT), None
            return None, name
        if name in self.classes.get(self.name, ()):
            found = self._scanned(self.name, f"{name}.{dotted}")
            if found is not None:
                return (found, Resolution.EXACT), None
        for target in self.wildcards:
            found = self._through(target, f"{name}.{dotted}")
            if found is not None:
                return (found, Resolution.IMPORT), None
        return None, name


def _imported_local(external: str, alias: str, rest: str) -> str:
    """Local name inside the import target for `alias.rest`"""
    if external == '*':
        return rest
    if external == 'default':
        return f"{alias}.{rest}"
    return f"{external}.{rest}"


def _callee_name(expr: Expr) -> Optional[str]:
    root, path = member_chain(expr)
    if path:
        return path[-1]
    return root.name if isinstance(root, Identifier) else None


def _display_name(expr: Expr) -> str:
    root, path = member_chain(expr)
    head = root.name if isinstance(root, Identifier) else '<expr>'
    return '.'.join((head, *path))


def local_types(fn: IRFunction) -> Dict[str, Optional[str]]:
    """Parameters and declared locals with their declared type, if any"""
    types: Dict[str, Optional[str]] = {}
    for index, param in enumerate(fn.params):
        types[param] = fn.param_types[index] if index < len(fn.param_types) else None
    for stmt in fn.body:
        if stmt.kind == StmtKind.VAR_DECL and stmt.lhs:
            if stmt.declared_type or stmt.lhs not in types:
                types[stmt.lhs] = stmt.declared_type
    return types


def build_call_graph(modules: Sequence[IRModule], catalog: PrivacyCatalog,
                     aliases: Optional[Mapping[str, Sequence[str]]] = None) -> CallGraph:
    """Resolve every call expression into an edge.

    `aliases` maps a library name to the package prefixes that belong to it.
    """
    aliases = aliases or {}
    modules = sorted(modules, key=lambda m: m.file.path)
    defs: Dict[str, Dict[str, MethodRef]] = defaultdict(dict)
    classes: Dict[str, Set[str]] = defaultdict(set)
    functions: Dict[str, IRFunction] = {}
    for module in modules:
        classes[module.module_name].update(module.classes)
        defs.setdefault(module.module_name, {})
        for fn in module.functions:
            functions[fn.ref.qualified_name] = fn
            if not fn.module_scope:
                defs[module.module_name].setdefault(fn.ref.local_name, fn.ref)

    edges: Dict[Tuple[str, Span, str], CallEdge] = {}
    for module in modules:
        resolver = _ModuleResolver(module, defs, classes, catalog, aliases)
        for fn in module.functions:
            types = local_types(fn)
            for stmt in fn.body:
                for call in stmt.calls:
                    callee, resolution = resolver.resolve(fn, types, call)
                    key = (fn.ref.qualified_name, call.span, callee.qualified_name)
                    edges.setdefault(key, CallEdge(fn.ref, call.span, callee, resolution))

    graph = nx.DiGraph()
    for qname, fn in functions.items():
        graph.add_node(qname, ref=fn.ref)
    externals = {}
    for edge in edges.values():
        if not edge.resolved:
            continue
        if edge.callee.qualified_name not in functions:
            externals[edge.callee.qualified_name] = edge.callee
            graph.add_node(edge.callee.qualified_name, ref=edge.callee)
        graph.add_edge(edge.caller.qualified_name, edge.callee.qualified_name)
    nodes = tuple(sorted([fn.ref for fn in functions.values()] + list(externals.values())))
    ordered = tuple(sorted(edges.values()))
    unresolved = sum(1 for e in ordered if not e.resolved)
    logger.info(f"Call graph: {len(nodes)} nodes, {len(ordered)} edges ({unresolved} unresolved)")
    return CallGraph(nodes, ordered, functions, graph)
