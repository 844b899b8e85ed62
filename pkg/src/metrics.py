"""Usage-based rankings of privacy-relevant methods and categories, and AM/Total proportions"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, TypeVar, Union

import numpy as np
import pandas as pd

from .api_closure import PrivacySets
from .catalog import ProcessingLabel
from .config import config
from .errors import InvariantViolation, ZeroTotal
from .logger import logger
from .models import IRModule, Language, MethodRef
from .taint import TaintFlow
from .utils import percent, round_half_up

_SITE = ['caller', 'file', 'start']


@dataclass(frozen=True)
class MethodStats:
    method: MethodRef
    occurrence: int
    pii_occurrence: int

    @property
    def name(self) -> str:
        return self.method.qualified_name

    @property
    def pii_frequency(self) -> float:
        return self.pii_occurrence / self.occurrence if self.occurrence else 0.0

    def to_dict(self, labels: Iterable[ProcessingLabel] = ()) -> dict:
        return {
            'method': self.name,
            'occurrence': self.occurrence,
            'pii_occurrence': self.pii_occurrence,
            'pii_frequency': round_half_up(Fraction(self.pii_occurrence, self.occurrence), 3),
            'labels': sorted(label.value for label in labels),
        }


@dataclass(frozen=True)
class CategoryStats:
    label: ProcessingLabel
    occurrence: int
    pii_occurrence: int
    methods: int
    pii_methods: int

    @property
    def name(self) -> str:
        return self.label.value

    @property
    def pii_frequency(self) -> float:
        return self.pii_methods / self.methods if self.methods else 0.0

    @property
    def involvement(self) -> float:
        """PII involvement in percent"""
        return percent(self.pii_methods, self.methods) if self.methods else 0.0

    def to_dict(self) -> dict:
        return {
            'label': self.name,
            'name': self.label.long_name,
            'gdpr_refs': list(self.label.gdpr_refs),
            'occurrence': self.occurrence,
            'pii_occurrence': self.pii_occurrence,
            'methods': self.methods,
            'pii_methods': self.pii_methods,
            'involvement': self.involvement,
        }


@dataclass(frozen=True)
class ProportionResult:
    am_count: int
    total_methods: int
    percent: float
    pii_am: int = 0
    pii_percent: float = 0.0

    def to_dict(self) -> dict:
        return {
            'am_count': self.am_count,
            'total_methods': self.total_methods,
            'percent': self.percent,
            'pii_am': self.pii_am,
            'pii_percent': self.pii_percent,
        }


def _site_frame(flows: Iterable[TaintFlow]) -> pd.DataFrame:
    rows = [{
        'callee': flow.sink.callee.qualified_name,
        'caller': flow.sink.caller.qualified_name,
        'file': flow.sink.file,
        'start': flow.sink.site.start,
        'pii': flow.pii,
    } for flow in flows]
    df = pd.DataFrame(rows, columns=['callee', *_SITE, 'pii'])
    # one row per call site; a site is PII when any of its flows is
    return df.groupby(['callee', *_SITE], as_index=False)['pii'].any()


def method_stats(flows: Sequence[TaintFlow], sets: Optional[PrivacySets] = None) -> List[MethodStats]:
    """Per privacy-relevant callee: distinct call sites with a flow, and how many carry PII"""
    refs = {flow.sink.callee.qualified_name: flow.sink.callee for flow in flows}
    sites = _site_frame(flows)
    if sites.empty:
        return []
    grouped = sites.groupby('callee').agg(occurrence=('pii', 'size'), pii_occurrence=('pii', 'sum'))
    stats = [MethodStats(refs[callee], int(row.occurrence), int(row.pii_occurrence))
             for callee, row in grouped.iterrows()]
    if sets is not None:
        unknown = [s.name for s in stats if not sets.labels(s.name)]
        if unknown:
            logger.warning(f"{len(unknown)} sink methods have no processing label: {', '.join(unknown[:3])}")
    return rank(stats)


def category_stats(stats: Sequence[MethodStats],
                   labels_of: Union[PrivacySets, Mapping[str, Iterable[ProcessingLabel]]]) -> List[CategoryStats]:
    """Aggregate method stats per processing label; multi-label methods count fully in each"""
    lookup = labels_of.labels if isinstance(labels_of, PrivacySets) else (lambda n: labels_of.get(n, ()))
    rows = [{'label': label, 'occurrence': s.occurrence, 'pii_occurrence': s.pii_occurrence,
             'has_pii': s.pii_occurrence > 0}
            for s in stats for label in lookup(s.name)]
    if not rows:
        return []
    df = pd.DataFrame(rows)
    result = []
    for label, group in df.groupby('label', sort=False):
        result.append(CategoryStats(
            label=ProcessingLabel(label),
            occurrence=int(group['occurrence'].sum()),
            pii_occurrence=int(group['pii_occurrence'].sum()),
            methods=len(group),
            pii_methods=int(np.count_nonzero(group['has_pii'].to_numpy())),
        ))
    return rank(result)


def proportion(am_count: int, total: int, pii_am: int = 0) -> ProportionResult:
    if total == 0:
        raise ZeroTotal()
    if not 0 <= pii_am <= am_count <= total:
        raise InvariantViolation(f"inconsistent counts am={am_count} pii_am={pii_am} total={total}")
    return ProportionResult(am_count, total, percent(am_count, total), pii_am, percent(pii_am, total))


S = TypeVar('S', MethodStats, CategoryStats)


def rank(stats: Iterable[S]) -> List[S]:
    """Occurrence descending, then PII occurrence descending, then name"""
    return sorted(stats, key=lambda s: (-s.occurrence, -s.pii_occurrence, s.name))


def rank_by_pii(stats: Iterable[S]) -> List[S]:
    return sorted(stats, key=lambda s: (-s.pii_occurrence, -s.occurrence, s.name))


def package_of(method: MethodRef, language: Optional[Language] = None) -> str:
    """Package prefix of a sink: first segment for JS, first two for Java"""
    segments = method.dotted.split('.')
    if segments[0] == 'globalThis' and len(segments) > 2:
        segments = segments[1:]
    if language == Language.JAVA or (language is None and segments[0] in ('java', 'javax', 'org', 'com')):
        return '.'.join(segments[:2])
    return segments[0]


def _ranked_counts(counts: Mapping[str, int], n: int) -> List[Tuple[str, int]]:
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:n]


def _languages(flows: Iterable[TaintFlow], modules: Sequence[IRModule]) -> Dict[str, Language]:
    by_file = {m.file.path: m.language for m in modules}
    return {f.sink.file: by_file.get(f.sink.file) for f in flows}


def top_packages(flows: Sequence[TaintFlow], modules: Sequence[IRModule] = (),
                 n: int = config.TOP_N) -> List[Tuple[str, int]]:
    """Most used sink packages, counted over distinct call sites"""
    languages = _languages(flows, modules)
    sites: Dict[str, Set[Tuple]] = {}
    for flow in flows:
        package = package_of(flow.sink.callee, languages.get(flow.sink.file))
        sites.setdefault(package, set()).add((flow.sink.caller.qualified_name, flow.sink.file,
                                              flow.sink.site.start))
    return _ranked_counts({p: len(s) for p, s in sites.items()}, n)


def top_classes(flows: Sequence[TaintFlow], modules: Sequence[IRModule] = (),
                n: int = config.TOP_N) -> List[Tuple[str, int]]:
    """Most used receiver classes of Java sinks"""
    languages = _languages(flows, modules)
    sites: Dict[str, Set[Tuple]] = {}
    for flow in flows:
        if languages.get(flow.sink.file) != Language.JAVA:
            continue
        owner = flow.sink.callee.dotted.rsplit('.', 1)[0]
        sites.setdefault(owner, set()).add((flow.sink.caller.qualified_name, flow.sink.file,
                                            flow.sink.site.start))
    return _ranked_counts({c: len(s) for c, s in sites.items()}, n)


def language_split(flows: Sequence[TaintFlow], am: Set[MethodRef],
                   modules: Sequence[IRModule]) -> Dict[Language, ProportionResult]:
    """Personal-data and PII proportions per subject language"""
    pii_callers = {f.sink.caller for f in flows if f.pii}
    result = {}
    for language in Language:
        files = {m.file.path for m in modules if m.language == language}
        total = sum(len(m.methods()) for m in modules if m.language == language)
        if not total:
            continue
        mine = {ref for ref in am if ref.file in files}
        result[language] = proportion(len(mine), total, len(mine & pii_callers))
    return result


def corpus_average(results: Sequence[ProportionResult]) -> float:
    """Mean of per-application percentages, half-up at one decimal"""
    if not results:
        raise ZeroTotal()
    exact = sum((Fraction(100 * r.am_count, r.total_methods) for r in results), Fraction(0))
    return round_half_up(exact / len(results))
