"""Personal-data taint tracking.

Intra-procedural passes walk a function body in statement order with a running
variable environment. Plain variables are strongly updated; member targets and
statements inside branches, loops or catch blocks are weakly updated, and loop
bodies are re-run until their environment stops growing.

Scanned callees are summarized: each function's return value is described by
the sources it returns on its own plus the parameters that reach it, so a call
site only receives taint from the arguments that actually flow back. The
inter-procedural driver also moves argument taint into callee parameters,
re-running affected functions until no parameter or return summary grows.
"""
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from .api_closure import MethodClass, PrivacySets, classify_method
from .catalog import pattern_matches
from .errors import ConfigError
from .graphs import CallGraph
from .logger import logger
from .models import (Call, Identifier, IRFunction, IRModule, Literal, Member, MethodRef, Operation, Span,
                     Statement, StmtKind)
from .pd_sources import PersonalDataSource, SourceKind

_PARAM = '<param:'


@dataclass(frozen=True)
class Hop:
    file: str
    span: Span
    variable: str

    def render(self) -> str:
        return f"{self.file}:{self.span.line} {self.variable}"


Chain = Tuple[Hop, ...]
Taint = Dict[str, Chain]  # source id -> first witness chain


def _merge(into: Taint, other: Mapping[str, Chain]) -> bool:
    """First chain wins; True when a new source id arrived"""
    grew = False
    for sid, chain in other.items():
        if sid not in into:
            into[sid] = chain
            grew = True
    return grew


def _extend(taint: Mapping[str, Chain], hop: Hop) -> Taint:
    return {sid: chain if chain and chain[-1] == hop else chain + (hop,) for sid, chain in taint.items()}


def _join(head: Chain, tail: Chain) -> Chain:
    if head and tail and head[-1] == tail[0]:
        return head + tail[1:]
    return head + tail


def _param_key(index: int) -> str:
    return f"{_PARAM}{index}>"


def _param_index(sid: str) -> Optional[int]:
    if sid.startswith(_PARAM):
        return int(sid[len(_PARAM):-1])
    return None


def apply_summary(summary: Mapping[str, Chain], arguments: Sequence[Mapping[str, Chain]]) -> Taint:
    """Taint of a call result: the callee's own returned sources plus the arguments its summary returns"""
    result: Taint = {}
    for sid, chain in summary.items():
        index = _param_index(sid)
        if index is None:
            _merge(result, {sid: chain})
        elif index < len(arguments):
            _merge(result, {arg_sid: _join(arg_chain, chain) for arg_sid, arg_chain in arguments[index].items()})
    return result


def _shape(env: Mapping[str, Taint]) -> Dict[str, FrozenSet[str]]:
    return {name: frozenset(taint) for name, taint in env.items()}


@dataclass
class TaintState:
    """Taint of every (function, variable) seen so far, plus per-function summaries"""
    tainted: Dict[Tuple[str, str], Set[str]] = field(default_factory=dict)
    params: Dict[str, Dict[str, Taint]] = field(default_factory=dict)
    returns: Dict[str, Taint] = field(default_factory=dict)

    def record(self, function: str, variable: str, taint: Mapping[str, Chain]):
        if taint:
            self.tainted.setdefault((function, variable), set()).update(taint)

    def is_tainted(self, function: Union[MethodRef, str], variable: str) -> bool:
        name = function.qualified_name if isinstance(function, MethodRef) else function
        return bool(self.tainted.get((name, variable)))

    def variables(self, function: Union[MethodRef, str]) -> Set[str]:
        name = function.qualified_name if isinstance(function, MethodRef) else function
        return {var for (fn, var), ids in self.tainted.items() if fn == name and ids}


@dataclass(frozen=True)
class SinkCall:
    caller: MethodRef
    site: Span
    callee: MethodRef
    file: str


@dataclass(frozen=True)
class TaintFlow:
    source: PersonalDataSource
    sink: SinkCall
    path: Tuple[Hop, ...]
    crosses_files: bool
    pii: bool
    flow_id: str = field(default='', compare=False)

    def sort_key(self) -> Tuple:
        return (self.sink.file, self.sink.site.start, self.sink.callee.qualified_name,
                self.source.sort_key())

    def witness(self) -> str:
        hops = ' → '.join(hop.render() for hop in self.path)
        return f"{hops} → {self.sink.file}:{self.sink.site.line} {self.sink.callee.qualified_name}"

    def to_dict(self) -> dict:
        return {
            'id': self.flow_id,
            'category': self.source.category,
            'kind': self.source.kind.value,
            'pii': self.pii,
            'crosses_files': self.crosses_files,
            'source': {
                'file': self.source.file,
                'line': self.source.span.line,
                'col': self.source.span.col,
                'symbol': self.source.symbol,
                'function': self.source.function.qualified_name,
            },
            'sink': {
                'caller': self.sink.caller.qualified_name,
                'callee': self.sink.callee.qualified_name,
                'file': self.sink.file,
                'line': self.sink.site.line,
                'col': self.sink.site.col,
            },
            'path': [{'file': h.file, 'line': h.span.line, 'col': h.span.col, 'variable': h.variable}
                     for h in self.path],
        }


@dataclass(frozen=True)
class CallObservation:
    """Taint of a call's arguments and receiver, before the enclosing statement writes"""
    call: Call
    statement: Statement
    arguments: Tuple[Taint, ...]
    receiver: Taint


Summary = Callable[[Call], Optional[Taint]]


class _FunctionPass:
    def __init__(self, fn: IRFunction, file: str, sources: Iterable[PersonalDataSource],
                 summary: Summary, sanitized: Callable[[Call], bool]):
        self.fn = fn
        self.file = file
        self.summary = summary
        self.sanitized = sanitized
        self.bound = set(fn.params) | {stmt.lhs for stmt in fn.body if stmt.lhs}
        self.named: Dict[str, List[PersonalDataSource]] = {}
        self.literals: Dict[str, List[PersonalDataSource]] = {}
        for source in sources:
            if source.kind == SourceKind.LITERAL:
                self.literals.setdefault(source.text or source.symbol, []).append(source)
            else:
                self.named.setdefault(source.symbol, []).append(source)

    def _own(self, span: Span, variable: str) -> Taint:
        return {s.source_id: (Hop(self.file, span, variable),) for s in self.named.get(variable, ())}

    def evaluate(self, expr, env: Mapping[str, Taint]) -> Taint:
        taint: Taint = {}
        if expr is None:
            return taint
        if isinstance(expr, Identifier):
            _merge(taint, env.get(expr.name, {}))
            if expr.name not in self.bound:
                _merge(taint, self._own(expr.span, expr.name))
        elif isinstance(expr, Literal):
            if expr.kind in ('string', 'template'):
                for source in self.literals.get(expr.text, ()):
                    _merge(taint, {source.source_id: (Hop(self.file, expr.span, source.symbol),)})
        elif isinstance(expr, Member):
            _merge(taint, self.evaluate(expr.base, env))
        elif isinstance(expr, Call):
            if self.sanitized(expr):
                return taint
            arguments = [self.evaluate(arg, env) for arg in expr.args]
            summary = self.summary(expr)
            if summary is not None:
                return apply_summary(summary, arguments)
            for arg_taint in arguments:
                _merge(taint, arg_taint)
            if isinstance(expr.callee, Member):
                _merge(taint, self.evaluate(expr.callee.base, env))
        elif isinstance(expr, Operation):
            for operand in expr.operands:
                _merge(taint, self.evaluate(operand, env))
        return taint

    def run(self, entry: Mapping[str, Taint], state: TaintState) -> Tuple[Taint, List[CallObservation]]:
        env: Dict[str, Taint] = {}
        for name, span in zip(self.fn.params, self.fn.param_spans):
            taint = dict(entry.get(name, {}))
            _merge(taint, self._own(span, name))
            if taint:
                env[name] = taint
                state.record(self.fn.ref.qualified_name, name, taint)
        returned: Taint = {}
        observations: List[CallObservation] = []
        self._block(self.fn.body, 0, env, state, returned, observations)
        return returned, observations

    def _block(self, body: Sequence[Statement], depth: int, env: Dict[str, Taint], state: TaintState,
               returned: Taint, observations: List[CallObservation]):
        i = 0
        while i < len(body):
            stmt = body[i]
            if len(stmt.loops) > depth:
                loop = stmt.loops[depth]
                j = i
                while j < len(body) and len(body[j].loops) > depth and body[j].loops[depth] == loop:
                    j += 1
                self._loop(body[i:j], depth + 1, env, state, returned, observations)
                i = j
                continue
            self._step(stmt, env, state, returned, observations)
            i += 1

    def _loop(self, body: Sequence[Statement], depth: int, env: Dict[str, Taint], state: TaintState,
              returned: Taint, observations: List[CallObservation]):
        """Re-run a loop body until its environment stops growing; the last round's calls are kept"""
        while True:
            before = _shape(env)
            latest: List[CallObservation] = []
            self._block(body, depth, env, state, returned, latest)
            if _shape(env) == before:
                break
        observations.extend(latest)

    def _step(self, stmt: Statement, env: Dict[str, Taint], state: TaintState, returned: Taint,
              observations: List[CallObservation]):
        for call in stmt.calls:
            receiver = self.evaluate(call.callee.base, env) if isinstance(call.callee, Member) else {}
            observations.append(CallObservation(
                call, stmt, tuple(self.evaluate(arg, env) for arg in call.args), receiver))
        if stmt.kind in (StmtKind.VAR_DECL, StmtKind.ASSIGN) and stmt.lhs:
            hop = Hop(self.file, stmt.span, stmt.lhs)
            value = _extend(self.evaluate(stmt.expr, env), hop)
            _merge(value, self._own(stmt.span, stmt.lhs))
            if stmt.target is not None or stmt.conditional:
                merged = dict(env.get(stmt.lhs, {}))
                _merge(merged, value)
                value = merged
            if value:
                env[stmt.lhs] = value
                state.record(self.fn.ref.qualified_name, stmt.lhs, value)
            else:
                env.pop(stmt.lhs, None)
        elif stmt.kind == StmtKind.RETURN:
            _merge(returned, self.evaluate(stmt.expr, env))


def _never(call: Call) -> bool:
    return False


def _black_box(call: Call) -> Optional[Taint]:
    return None


def propagate_intra(fn: IRFunction, sources: Sequence[PersonalDataSource], state: Optional[TaintState] = None,
                    file: Optional[str] = None) -> TaintState:
    """Single-function propagation with every callee treated as a black box"""
    state = state if state is not None else TaintState()
    qname = fn.ref.qualified_name
    own = [s for s in sources if s.function.qualified_name == qname]
    fn_pass = _FunctionPass(fn, file or fn.ref.file or '', own, _black_box, _never)
    returned, _ = fn_pass.run(state.params.get(qname, {}), state)
    _merge(state.returns.setdefault(qname, {}), returned)
    return state


class _Driver:
    def __init__(self, cg: CallGraph, modules: Sequence[IRModule], sources: Sequence[PersonalDataSource],
                 sanitizers: Sequence[str]):
        self.cg = cg
        self.sanitizers = tuple(sanitizers)
        self.state = TaintState()
        self.observations: Dict[str, List[CallObservation]] = {}
        self.passes: Dict[str, _FunctionPass] = {}
        by_function: Dict[str, List[PersonalDataSource]] = {}
        for source in sources:
            by_function.setdefault(source.function.qualified_name, []).append(source)
        for module in modules:
            for fn in module.functions:
                qname = fn.ref.qualified_name
                self.passes[qname] = _FunctionPass(
                    fn, module.file.path, by_function.get(qname, ()),
                    lambda call, caller=qname: self._summary(caller, call),
                    lambda call, caller=qname: self._sanitized(caller, call))

    def _callee(self, caller: str, call: Call) -> Optional[str]:
        edge = self.cg.edge_at(caller, call.span)
        if edge is None or not edge.resolved:
            return None
        return edge.callee.qualified_name

    def _summary(self, caller: str, call: Call) -> Optional[Taint]:
        """Return summary of a scanned callee; None for library and unresolved calls"""
        callee = self._callee(caller, call)
        if callee is None or callee not in self.passes:
            return None
        return self.state.returns.get(callee, {})

    def _sanitized(self, caller: str, call: Call) -> bool:
        if not self.sanitizers:
            return False
        edge = self.cg.edge_at(caller, call.span)
        dotted = edge.callee.dotted if edge is not None else None
        return dotted is not None and any(pattern_matches(p, dotted) for p in self.sanitizers)

    def _symbolic_entry(self, fn_pass: _FunctionPass) -> Dict[str, Taint]:
        fn = fn_pass.fn
        return {name: {_param_key(index): (Hop(fn_pass.file, span, name),)}
                for index, (name, span) in enumerate(zip(fn.params, fn.param_spans))}

    def run(self):
        queue = deque(sorted(self.passes))
        queued = set(queue)
        rounds = 0
        while queue:
            qname = queue.popleft()
            queued.discard(qname)
            rounds += 1
            fn_pass = self.passes[qname]
            summary, _ = fn_pass.run(self._symbolic_entry(fn_pass), TaintState())
            _, observations = fn_pass.run(self.state.params.get(qname, {}), self.state)
            self.observations[qname] = observations
            wake: Set[str] = set()
            if _merge(self.state.returns.setdefault(qname, {}), summary) and qname in self.cg.graph:
                wake.update(p for p in self.cg.graph.predecessors(qname) if p in self.passes)
            for obs in observations:
                callee = self._callee(qname, obs.call)
                target = self.passes.get(callee) if callee else None
                if target is None:
                    continue
                entry = self.state.params.setdefault(callee, {})
                for name, span, taint in zip(target.fn.params, target.fn.param_spans, obs.arguments):
                    if taint and _merge(entry.setdefault(name, {}), _extend(taint, Hop(target.file, span, name))):
                        wake.add(callee)
            for name in sorted(wake):
                if name not in queued:
                    queue.append(name)
                    queued.add(name)
        logger.debug(f"Taint fixed point after {rounds} function passes")


def propagate_inter(cg: CallGraph, modules: Sequence[IRModule], sources: Sequence[PersonalDataSource],
                    sets: PrivacySets, sanitizers: Sequence[str] = ()) -> List[TaintFlow]:
    """Flows from personal-data sources into calls of privacy-relevant methods, with stable ids"""
    driver = _Driver(cg, modules, sources, sanitizers)
    driver.run()
    by_id = {s.source_id: s for s in sources}
    flows: Dict[Tuple[str, str, Span, str], TaintFlow] = {}
    for qname in sorted(driver.observations):
        fn_pass = driver.passes[qname]
        for obs in driver.observations[qname]:
            edge = cg.edge_at(qname, obs.call.span)
            if edge is None or not edge.resolved:
                continue
            if classify_method(sets, edge.callee) == MethodClass.APPLICATION:
                continue
            sink = SinkCall(fn_pass.fn.ref, obs.call.span, edge.callee, fn_pass.file)
            for taint in (*obs.arguments, obs.receiver):
                for sid, chain in taint.items():
                    key = (sid, qname, obs.call.span, edge.callee.qualified_name)
                    if key in flows:
                        continue
                    source = by_id[sid]
                    files = {hop.file for hop in chain} | {sink.file}
                    flows[key] = TaintFlow(source, sink, chain, len(files) > 1, source.is_pii)
    ordered = sorted(flows.values(), key=TaintFlow.sort_key)
    numbered = [replace(flow, flow_id=f"F{index:04d}") for index, flow in enumerate(ordered, start=1)]
    logger.info(f"Taint analysis: {len(numbered)} flows, {sum(f.pii for f in numbered)} PII")
    return numbered


def collect_am(flows: Iterable[TaintFlow], modules: Sequence[IRModule] = (),
               sets: Optional[PrivacySets] = None) -> Set[MethodRef]:
    """Application methods that call a privacy-relevant method with personal data.

    Module-scope holders never count; with `sets`, neither do methods of scanned library code.
    """
    holders = {fn.ref.qualified_name for module in modules for fn in module.functions if fn.module_scope}
    if sets is not None:
        holders |= set(sets.library_of)
    return {flow.sink.caller for flow in flows if flow.sink.caller.qualified_name not in holders}


def explain_flow(report: Union[Mapping, Sequence[TaintFlow]], flow_id: str) -> str:
    """`file:line variable → …` witness of one flow, from a report dict or a flow list"""
    if isinstance(report, Mapping):
        for finding in report.get('findings', ()):
            if finding.get('id') == flow_id:
                hops = [f"{h['file']}:{h['line']} {h['variable']}" for h in finding['path']]
                sink = finding['sink']
                hops.append(f"{sink['file']}:{sink['line']} {sink['callee']}")
                return ' → '.join(hops)
    else:
        for flow in report:
            if flow.flow_id == flow_id:
                return flow.witness()
    raise ConfigError(f"unknown flow id {flow_id}")

