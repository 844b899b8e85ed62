import json
import sys
from pathlib import Path
from typing import Callable, List, Optional, TypeVar

import click
from rich.console import Console
from rich.table import Table

from .api_closure import PrivacySets, compute_api_set, library_aliases, load_libraries
from .catalog import load_catalog
from .config import OutputFormat, ScanConfig, config
from .errors import LensError, StageError, UnreadableFile, ZeroTotal
from .frontend import discover_files, parse_all
from .graphs import build_call_graph, build_import_graph, dependency_order
from .logger import logger
from .metrics import (category_stats, language_split, method_stats, proportion, rank_by_pii, top_classes,
                      top_packages)
from .models import Language
from .pd_sources import detect_sources, load_rule_file
from .report import ScanReport, ScanTotals, render_markdown, to_json
from .taint import collect_am, explain_flow, propagate_inter

T = TypeVar('T')

console = Console(no_color=config.NO_COLOR, highlight=False)


def _stage(name: str, step: Callable[..., T], *args, **kwargs) -> T:
    try:
        return step(*args, **kwargs)
    except LensError as e:
        if e.stage is None:
            e.stage = name
            logger.error(str(e))
        raise
    except Exception as e:
        error = StageError(name, e)
        logger.error(str(error))
        raise error from e


class PrivacyScanner:
    """Runs the analysis pipeline over one source tree"""

    def __init__(self, scan_config: ScanConfig):
        self.config = scan_config.resolve()
        self.libraries = load_libraries(self.config.libraries_path)
        self.catalog = load_catalog(self.config.catalog_path, {lib.name for lib in self.libraries})
        self.rules = load_rule_file(self.config.rules_path)
        self.import_graph = None
        self.call_graph = None
        logger.info("Privacy scanner initialized")

    def run(self) -> ScanReport:
        files = _stage('discover', discover_files, self.config.root, self.config)
        modules = _stage('parse', parse_all, files)
        self.import_graph = _stage('graphs', build_import_graph, modules)
        order = _stage('graphs', dependency_order, self.import_graph)
        self.call_graph = _stage('graphs', build_call_graph, modules, self.catalog,
                                 library_aliases(self.libraries))
        sets: PrivacySets = _stage('closure', compute_api_set, self.call_graph, self.catalog, order,
                                   self.libraries)
        sources = _stage('sources', lambda: [s for m in modules for s in detect_sources(m, self.rules)])
        flows = _stage('taint', propagate_inter, self.call_graph, modules, sources, sets, self.rules.sanitizers)

        totals = ScanTotals(
            files=len(files),
            functions=sum(len(m.methods()) for m in modules),
            skipped_statements=sum(len(m.diagnostics) for m in modules),
            unresolved_calls=len(self.call_graph.unresolved_edges()),
            sources=len(sources),
            flows=len(flows),
            pii_flows=sum(1 for f in flows if f.pii),
        )
        report = ScanReport(self.config.echo(), totals, catalog_version=self.catalog.version, findings=flows,
                            diagnostics=[d for m in modules for d in m.diagnostics], sets=sets)
        _stage('metrics', self._metrics, report, flows, modules, sets)
        logger.info(f"Scan complete: {totals.functions} methods, {totals.flows} flows")
        return report

    def _metrics(self, report: ScanReport, flows, modules, sets: PrivacySets):
        am = collect_am(flows, modules, sets)
        pii_callers = {f.sink.caller for f in flows if f.pii}
        try:
            report.proportion = proportion(len(am), report.totals.functions, len(am & pii_callers))
        except ZeroTotal as e:
            report.proportion_error = str(e)
        report.by_language = language_split(flows, am, modules)
        report.method_ranking = method_stats(flows, sets)
        report.category_ranking = category_stats(report.method_ranking, sets)
        report.pii_category_ranking = rank_by_pii(c for c in report.category_ranking if c.pii_occurrence)
        report.top_packages = top_packages(flows, modules)
        report.top_classes = top_classes(flows, modules)

    def emit_graphs(self, directory: Path):
        directory.mkdir(parents=True, exist_ok=True)
        (directory / 'imports.dot').write_text(self.import_graph.to_dot(), encoding='utf-8')
        (directory / 'calls.dot').write_text(self.call_graph.to_dot(), encoding='utf-8')
        logger.info(f"Graphs written to {directory}")


def run_scan(scan_config: ScanConfig) -> ScanReport:
    scanner = PrivacyScanner(scan_config)
    report = scanner.run()
    if scanner.config.emit_graphs is not None:
        scanner.emit_graphs(scanner.config.emit_graphs)
    return report


def write_outputs(report: ScanReport, output_dir: Path, fmt: OutputFormat) -> List[Path]:
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt in (OutputFormat.JSON, OutputFormat.BOTH):
        path = output_dir / 'report.json'
        path.write_text(to_json(report), encoding='utf-8')
        written.append(path)
    if fmt in (OutputFormat.MARKDOWN, OutputFormat.BOTH):
        path = output_dir / 'report.md'
        path.write_text(render_markdown(report), encoding='utf-8')
        written.append(path)
    return written


def _summary(report: ScanReport):
    totals = report.totals
    if report.proportion is not None:
        p = report.proportion
        console.print(f"[bold green]Privacy-relevant methods:[/bold green] {p.am_count}/{p.total_methods} "
                      f"({p.percent:.1f}%), PII {p.pii_percent:.1f}%")
    else:
        console.print(f"[bold yellow]Proportion:[/bold yellow] {report.proportion_error}")
    console.print(f"{totals.files} files, {totals.flows} flows ({totals.pii_flows} PII), "
                  f"{totals.skipped_statements} skipped statements, {totals.unresolved_calls} unresolved calls")
    if report.category_ranking:
        table = Table(title='Categories')
        for column in ('Label', 'Occurrence', 'PII involvement', 'GDPR'):
            table.add_column(column)
        for c in report.category_ranking:
            table.add_row(c.name, str(c.occurrence), f"{c.involvement:.1f}%", ', '.join(c.label.gdpr_refs))
        console.print(table)


def _fail(e: Exception):
    if isinstance(e, LensError):
        console.print(f"[bold red][Error][/bold red] {e}")
        sys.exit(e.exit_code)
    logger.error(f"Unexpected failure: {str(e)}")
    console.print(f"[bold red][Error][/bold red] internal error: {e}")
    sys.exit(3)


@click.group()
@click.version_option(config.TOOL_VERSION, prog_name='privacy-lens')
def cli():
    """privacy-lens - privacy-relevant code and personal-data flow scanner"""


@cli.command()
@click.argument('root', type=click.Path())
@click.option('--lang', type=click.Choice(['js', 'java', 'auto']), default='auto',
              help='Parse every source file with this frontend (auto: by extension).')
@click.option('--catalog', 'catalog_path', type=click.Path(), help='Privacy catalog JSON file.')
@click.option('--rules', 'rules_path', type=click.Path(), help='Personal-data rule file.')
@click.option('--libraries', 'libraries_path', type=click.Path(), help='Library list JSON file.')
@click.option('--format', 'fmt', type=click.Choice([f.value for f in OutputFormat]), default='both',
              help='Report format.')
@click.option('--output', type=click.Path(), default='.', help='Directory for report.json / report.md.')
@click.option('--emit-graphs', type=click.Path(), help='Write imports.dot and calls.dot to this directory.')
@click.option('--exclude', multiple=True, help='Glob of paths to skip (repeatable).')
@click.option('--exclude-tests', is_flag=True, help='Skip test directories and test files.')
@click.option('--explain', 'explain_id', help='Print the witness path of a flow id.')
def scan(root, lang, catalog_path, rules_path, libraries_path, fmt, output, emit_graphs, exclude, exclude_tests,
         explain_id):
    """Scan ROOT and write the privacy review report"""
    try:
        scan_config = ScanConfig(
            root=Path(root),
            language=None if lang == 'auto' else Language(lang),
            catalog_path=Path(catalog_path) if catalog_path else None,
            rules_path=Path(rules_path) if rules_path else None,
            libraries_path=Path(libraries_path) if libraries_path else None,
            output_dir=Path(output),
            format=OutputFormat(fmt),
            excludes=list(exclude),
            exclude_tests=exclude_tests,
            emit_graphs=Path(emit_graphs) if emit_graphs else None,
            explain=explain_id,
        )
        report = run_scan(scan_config)
        for path in write_outputs(report, Path(output), OutputFormat(fmt)):
            console.print(f"[bold blue][Info][/bold blue] Report written to {path}")
        _summary(report)
        if explain_id:
            console.print(explain_flow(report.findings, explain_id), soft_wrap=True)
    except Exception as e:
        _fail(e)


@cli.command()
@click.argument('report_path', type=click.Path())
@click.argument('flow_id')
def explain(report_path, flow_id):
    """Print the witness path of FLOW_ID from a saved report.json"""
    try:
        try:
            with open(report_path, encoding='utf-8') as f:
                payload = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise UnreadableFile(report_path, str(e)) from e
        console.print(explain_flow(payload, flow_id), soft_wrap=True)
    except Exception as e:
        _fail(e)


@cli.command('catalog')
@click.option('--check', 'check_path', type=click.Path(), required=True, help='Catalog JSON file to validate.')
@click.option('--libraries', 'libraries_path', type=click.Path(), help='Library list the API entries refer to.')
def catalog_cmd(check_path, libraries_path):
    """Validate a privacy catalog file"""
    try:
        libraries = load_libraries(libraries_path or config.LIBRARIES_PATH)
        catalog = load_catalog(check_path, {lib.name for lib in libraries})
        console.print(f"[bold green]OK[/bold green] {len(catalog)} entries (version {catalog.version})")
        for label, count in sorted(catalog.label_counts().items()):
            console.print(f"  {label}: {count}")
        languages = catalog.language_counts()
        console.print('  languages: ' + ', '.join(f"{name} {count}" for name, count in languages.items()))
    except Exception as e:
        _fail(e)


def main(argv: Optional[List[str]] = None):
    cli.main(args=argv, prog_name='privacy-lens')


if __name__ == "__main__":
    main()
