"""Privacy review report: assembly, JSON serialization and Markdown rendering"""
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import jsonschema

from .api_closure import PrivacySets
from .catalog import ProcessingLabel
from .config import config
from .errors import InvariantViolation
from .metrics import CategoryStats, MethodStats, ProportionResult
from .models import Diagnostic, Language
from .taint import TaintFlow
from .utils import percent


@dataclass
class ScanTotals:
    files: int = 0
    functions: int = 0
    skipped_statements: int = 0
    unresolved_calls: int = 0
    sources: int = 0
    flows: int = 0
    pii_flows: int = 0

    def to_dict(self) -> dict:
        return dict(vars(self))


@dataclass
class ScanReport:
    config_echo: dict
    totals: ScanTotals
    catalog_version: str = ''
    proportion: Optional[ProportionResult] = None
    proportion_error: Optional[str] = None
    by_language: Dict[Language, ProportionResult] = field(default_factory=dict)
    method_ranking: List[MethodStats] = field(default_factory=list)
    category_ranking: List[CategoryStats] = field(default_factory=list)
    pii_category_ranking: List[CategoryStats] = field(default_factory=list)
    top_packages: List[Tuple[str, int]] = field(default_factory=list)
    top_classes: List[Tuple[str, int]] = field(default_factory=list)
    findings: List[TaintFlow] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    sets: Optional[PrivacySets] = field(default=None, repr=False)
    tool_version: str = config.TOOL_VERSION

    def labels(self, method: str) -> List[ProcessingLabel]:
        if self.sets is None:
            return []
        return sorted(self.sets.labels(method), key=lambda label: label.value)

    def _finding(self, flow: TaintFlow) -> dict:
        data = flow.to_dict()
        labels = self.labels(flow.sink.callee.qualified_name)
        data['labels'] = [label.value for label in labels]
        data['gdpr_refs'] = sorted({ref for label in labels for ref in label.gdpr_refs})
        return data

    def to_dict(self) -> dict:
        return {
            'schema_version': config.SCHEMA_VERSION,
            'tool_version': self.tool_version,
            'catalog_version': self.catalog_version,
            'config': self.config_echo,
            'totals': self.totals.to_dict(),
            'proportion': self.proportion.to_dict() if self.proportion else None,
            'proportion_error': self.proportion_error,
            'by_language': {lang.value: result.to_dict() for lang, result in self.by_language.items()},
            'method_ranking': [s.to_dict(self.labels(s.name)) for s in self.method_ranking],
            'category_ranking': [c.to_dict() for c in self.category_ranking],
            'pii_category_ranking': [c.to_dict() for c in self.pii_category_ranking],
            'top_packages': [{'package': p, 'count': n} for p, n in self.top_packages],
            'top_classes': [{'class': c, 'count': n} for c, n in self.top_classes],
            'findings': [self._finding(flow) for flow in self.findings],
            'diagnostics': [str(d) for d in self.diagnostics],
        }


@lru_cache(maxsize=1)
def report_schema() -> dict:
    with open(config.REPORT_SCHEMA_PATH, encoding='utf-8') as f:
        return json.load(f)


def validate_report(payload: dict):
    try:
        jsonschema.validate(instance=payload, schema=report_schema())
    except jsonschema.ValidationError as e:
        raise InvariantViolation(f"report does not match its schema: {e.message}") from e


def to_json(report: ScanReport) -> str:
    payload = report.to_dict()
    validate_report(payload)
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def _table(header: Sequence[str], rows: Sequence[Sequence]) -> List[str]:
    lines = ['| ' + ' | '.join(header) + ' |', '|' + '---|' * len(header)]
    lines.extend('| ' + ' | '.join(str(cell) for cell in row) + ' |' for row in rows)
    return lines


def _share(part: int, whole: int) -> str:
    return f"{percent(part, whole):.1f}%" if whole else '0.0%'


def render_markdown(report: ScanReport) -> str:
    """Markdown privacy review: summary, categories, methods, findings, analysis gaps"""
    totals = report.totals
    lines = ['# Privacy Review Report', '',
             f"Scanned {totals.files} files, {totals.functions} methods "
             f"(privacy-lens {report.tool_version}, catalog {report.catalog_version or 'n/a'}).", '']

    lines += ['## Summary', '']
    if report.proportion is not None:
        p = report.proportion
        lines.append(f"- Privacy-relevant application methods: {p.am_count}/{p.total_methods} ({p.percent:.1f}%)")
        lines.append(f"- Handling PII: {p.pii_am}/{p.total_methods} ({p.pii_percent:.1f}%)")
    else:
        lines.append(f"- Proportion: {report.proportion_error}")
    lines.append(f"- Personal-data flows: {totals.flows} ({totals.pii_flows} PII)")
    for language, result in sorted(report.by_language.items(), key=lambda kv: kv[0].value):
        lines.append(f"- {language.value}: {result.percent:.1f}% personal data, {result.pii_percent:.1f}% PII")
    lines.append('')

    lines += ['## Category Breakdown', '']
    total_occ = sum(c.occurrence for c in report.category_ranking)
    lines += _table(
        ['Category', 'Name', 'Occurrence', 'Share', 'PII involvement', 'GDPR'],
        [(c.name, c.label.long_name, c.occurrence, _share(c.occurrence, total_occ),
          f"{c.involvement:.1f}%", ', '.join(c.label.gdpr_refs))
         for c in report.category_ranking])
    lines.append('')

    lines += ['## Top Privacy-relevant Methods', '']
    lines += _table(
        ['Method', 'Labels', 'Occurrence', 'PII occurrence'],
        [(f"`{s.name}`", ', '.join(label.value for label in report.labels(s.name)),
          s.occurrence, s.pii_occurrence)
         for s in report.method_ranking])
    lines.append('')
    if report.top_packages:
        lines += _table(['Package', 'Call sites'], report.top_packages)
        lines.append('')

    lines += ['## Findings', '']
    if not report.findings:
        lines.append('No personal-data flows into privacy-relevant methods.')
    for flow in report.findings:
        marker = ' **PII**' if flow.pii else ''
        labels = ', '.join(label.value for label in report.labels(flow.sink.callee.qualified_name))
        lines.append(f"- {flow.flow_id} `{flow.source.category}`{marker} → "
                     f"`{flow.sink.callee.qualified_name}` [{labels}] in `{flow.sink.caller.qualified_name}`")
        lines.append(f"  - {flow.witness()}")
    lines.append('')

    lines += ['## Analysis Gaps', '',
              f"- Skipped statements: {totals.skipped_statements}",
              f"- Unresolved calls: {totals.unresolved_calls}"]
    lines += [f"  - {d}" for d in report.diagnostics]
    return '\n'.join(lines) + '\n'
