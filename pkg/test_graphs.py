import random
from collections import deque

import networkx as nx

from src.catalog import default_catalog
from src.frontend import parse_file
from src.graphs import (ImportGraph, Resolution, build_call_graph, build_import_graph, canonical_target,
                        dependency_order, import_cycles)
from src.logger import logger
from src.models import Language, SourceFile


def _reachable(graph: nx.DiGraph, start) -> set:
    seen = {start}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for nxt in graph.successors(node):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def _check_order(graph: nx.DiGraph):
    order = dependency_order(ImportGraph(graph, set(graph.nodes)))
    position = {node: index for index, group in enumerate(order) for node in group}

    assert sorted(position) == sorted(graph.nodes)
    assert sum(len(group) for group in order) == graph.number_of_nodes()
    for group in order:
        assert group == sorted(group)
    if graph.number_of_nodes() <= 30:
        reach = {node: _reachable(graph, node) for node in graph.nodes}
        for group in order:
            for a in group:
                for b in group:
                    assert b in reach[a] and a in reach[b]
    else:
        components = {frozenset(c) for c in nx.strongly_connected_components(graph)}
        assert {frozenset(group) for group in order} == components
    for src, dst in graph.edges:
        # dependencies come first
        assert position[dst] <= position[src]


def test_dependency_order_random_graphs():
    rng = random.Random(20240521)
    for trial in range(1000):
        n = rng.randint(1, 14) if trial % 2 else rng.randint(1, 200)
        graph = nx.DiGraph()
        graph.add_nodes_from(f"m{i:03d}" for i in range(n))
        for _ in range(rng.randint(0, 2 * n)):
            a, b = rng.randrange(n), rng.randrange(n)
            if a != b:
                graph.add_edge(f"m{a:03d}", f"m{b:03d}")
        _check_order(graph)
    logger.info("Dependency order verified on 1000 random graphs")


def test_dependency_order_ties_break_by_name():
    graph = nx.DiGraph()
    graph.add_edges_from([('app', 'zlib'), ('app', 'alib'), ('b', 'c'), ('c', 'b')])
    order = dependency_order(ImportGraph(graph, set(graph.nodes)))
    assert order == [['alib'], ['b', 'c'], ['zlib'], ['app']]
    assert import_cycles(ImportGraph(graph, set(graph.nodes))) == [['b', 'c']]


def test_demo_import_graph(demo_modules):
    g = build_import_graph(demo_modules)
    assert ('src/users/profile', 'src/audit/logger') in g.edges()
    assert ('src/notify/mailer', 'src/util/format') in g.edges()
    assert ('src/users/auth', 'jsonwebtoken') in g.edges()
    assert 'globalThis' not in g.nodes()
    order = [m for group in dependency_order(g) for m in group]
    assert order.index('src/audit/logger') < order.index('src/users/profile')
    assert 'shape=ellipse' in g.to_dot()


def test_relative_targets_resolve_to_scanned_modules(demo_modules):
    auth = next(m for m in demo_modules if m.module_name == 'src/users/auth')
    names = [m.module_name for m in demo_modules]
    targets = {canonical_target(auth, decl, names) for decl in auth.imports if not decl.implicit}
    assert targets == {'bcrypt', 'jsonwebtoken', 'src/audit/logger'}


def test_demo_call_resolution(demo_modules):
    cg = build_call_graph(demo_modules, default_catalog())
    edges = {(e.caller.qualified_name, e.callee.qualified_name): e.resolution for e in cg.edges}

    assert edges[('src/users/profile::updateProfile', 'src/audit/logger::record')] == Resolution.IMPORT
    assert edges[('src/users/auth::register', 'src/audit/logger::trace')] == Resolution.IMPORT
    assert edges[('src/users/auth::register', 'bcrypt.hash')] == Resolution.IMPORT
    assert edges[('src/audit/logger::trace', 'globalThis.console.log')] == Resolution.IMPORT
    assert edges[('src/notify/mailer::notifyUser', 'src/util/format::normalize')] == Resolution.IMPORT
    assert edges[('src/notify/mailer::notifyUser', 'globalThis.localStorage.setItem')] == Resolution.IMPORT

    unresolved = sorted(e.callee.qualified_name for e in cg.unresolved_edges())
    assert unresolved == ['JSON.stringify', 'bio.trim', 'value.replace']
    assert cg.graph.has_edge('src/users/profile::updateProfile', 'src/audit/logger::record')
    assert not any(e.callee.qualified_name == 'bio.trim' for e in cg.resolved_edges())
    assert 'style=dashed' in cg.to_dot()


def _java(path: str, text: str):
    return parse_file(SourceFile(path, Language.JAVA, text))


def test_java_resolution_through_types_and_java_lang():
    module = _java('app/Svc.java', """package app;

import java.io.FileWriter;

public class Svc {
    public void save(String email) throws Exception {
        FileWriter writer = new FileWriter("out.txt");
        writer.write(email);
        System.out.println(email);
        helper(email);
    }

    private void helper(String value) {
    }
}
""")
    cg = build_call_graph([module], default_catalog())
    found = {e.callee.qualified_name: e.resolution for e in cg.edges}
    assert found['java.io.FileWriter.<init>'] == Resolution.IMPORT
    assert found['java.io.FileWriter.write'] == Resolution.IMPORT
    assert found['java.lang.System.out.println'] == Resolution.IMPORT
    assert found['app::Svc.helper'] == Resolution.EXACT


def test_suffix_heuristic_needs_an_imported_library():
    source = """package app;

import org.slf4j.LoggerFactory;

public class Svc {
    public void run(String email) {
        Logger log = LoggerFactory.getLogger("svc");
        log.info(email);
    }
}
"""
    cg = build_call_graph([_java('app/Svc.java', source)], default_catalog())
    found = {e.callee.qualified_name: e.resolution for e in cg.edges}
    assert found['org.slf4j.LoggerFactory.getLogger'] == Resolution.IMPORT
    assert found['org.slf4j.Logger.info'] == Resolution.SUFFIX

    bare = source.replace('import org.slf4j.LoggerFactory;\n', '')
    cg = build_call_graph([_java('app/Svc.java', bare)], default_catalog())
    assert {e.resolution for e in cg.edges} == {Resolution.UNRESOLVED}


def test_duplicate_imports_collapse_into_one_edge():
    sources = {
        'app/a.js': "const b = require('./b');\nconst c = require('./c');\nconst again = require('./b');\n",
        'app/b.js': "const c = require('./c');\nconst d = require('./d');\n",
        'app/c.js': "const e = require('./e');\n",
        'app/d.js': "const e = require('./e');\nconst f = require('./f');\nconst twice = require('./e');\n",
        'app/e.js': "function e() {}\n",
        'app/f.js': "function f() {}\n",
    }
    modules = [parse_file(SourceFile(path, Language.JS, text)) for path, text in sources.items()]
    assert sum(1 for m in modules for decl in m.imports if not decl.implicit) == 9

    g = build_import_graph(modules)
    assert sorted(g.nodes()) == ['app/a', 'app/b', 'app/c', 'app/d', 'app/e', 'app/f']
    assert sorted(g.edges()) == [('app/a', 'app/b'), ('app/a', 'app/c'), ('app/b', 'app/c'), ('app/b', 'app/d'),
                                 ('app/c', 'app/e'), ('app/d', 'app/e'), ('app/d', 'app/f')]
    order = [group[0] for group in dependency_order(g)]
    assert order == ['app/e', 'app/c', 'app/f', 'app/d', 'app/b', 'app/a']
