import json
import random
import time

import pytest
from click.testing import CliRunner

import src.main
from conftest import DEMO_APP, FIXTURES, GOLDEN_APP
from src.catalog import ProcessingLabel
from src.config import ScanConfig, config
from src.errors import ConfigError, InvariantViolation
from src.main import PrivacyScanner, cli
from src.metrics import MethodStats, category_stats
from src.models import MethodRef
from src.report import ScanReport, ScanTotals, render_markdown, to_json, validate_report


@pytest.fixture
def runner():
    return CliRunner()


def _scan(runner, tmp_path, *extra, root=DEMO_APP):
    out = tmp_path / 'out'
    result = runner.invoke(cli, ['scan', str(root), '--output', str(out), *extra])
    return result, out


def test_scan_writes_both_reports(runner, tmp_path, demo_truth):
    result, out = _scan(runner, tmp_path)
    assert result.exit_code == 0, result.output
    payload = json.loads((out / 'report.json').read_text(encoding='utf-8'))
    validate_report(payload)

    totals = payload['totals']
    assert (totals['files'], totals['functions'], totals['skipped_statements']) == (
        demo_truth['files'], demo_truth['functions'], demo_truth['diagnostics'])
    assert (totals['flows'], totals['pii_flows']) == (demo_truth['flows'], demo_truth['pii_flows'])
    assert payload['proportion']['percent'] == demo_truth['percent']
    assert payload['proportion_error'] is None
    assert payload['category_ranking'][0]['label'] == demo_truth['top_category']
    assert payload['config']['catalog'] == 'default'
    assert (out / 'report.md').is_file()
    assert 'Privacy-relevant methods:' in result.output


def test_findings_carry_labels_and_gdpr_articles(demo_report):
    payload = demo_report.to_dict()
    first = payload['findings'][0]
    assert first['id'] == 'F0001'
    assert first['labels'] == ['DSMD', 'LM']
    assert first['gdpr_refs'] == ['Art. 5(1)(c)', 'Art. 5(1)(e)']
    assert first['crosses_files'] is True
    nc = payload['category_ranking'][0]
    assert (nc['occurrence'], nc['pii_occurrence'], nc['methods'], nc['pii_methods']) == (3, 2, 2, 1)
    assert nc['gdpr_refs'] == ['Art. 44']


def test_json_is_byte_identical_across_runs(runner, tmp_path):
    first, out_a = _scan(runner, tmp_path / 'a', '--format', 'json')
    second, out_b = _scan(runner, tmp_path / 'b', '--format', 'json')
    assert first.exit_code == second.exit_code == 0
    assert (out_a / 'report.json').read_bytes() == (out_b / 'report.json').read_bytes()
    assert not (out_a / 'report.md').exists()


def test_to_json_is_sorted_and_indented(demo_report):
    text = to_json(demo_report)
    assert text.endswith('\n')
    assert text == json.dumps(json.loads(text), indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def test_schema_rejects_a_broken_report(demo_report):
    payload = demo_report.to_dict()
    payload['findings'][0]['id'] = 'flow-1'
    with pytest.raises(InvariantViolation, match='schema'):
        validate_report(payload)


def test_markdown_sections(demo_report):
    text = render_markdown(demo_report)
    for heading in ('# Privacy Review Report', '## Summary', '## Category Breakdown',
                    '## Top Privacy-relevant Methods', '## Findings', '## Analysis Gaps'):
        assert heading in text
    assert '7/150 (4.7%)' in text
    assert '| NC | Network communication | 3 |' in text
    assert '- F0001 `PersonalID` **PII**' in text
    assert '- Unresolved calls: 3' in text


def test_missing_root_exits_with_config_error(runner, tmp_path):
    result, _ = _scan(runner, tmp_path, root=tmp_path / 'missing')
    assert result.exit_code == 2
    assert 'not found' in result.output


def test_malformed_catalog_exits_with_config_error(runner, tmp_path):
    catalog = tmp_path / 'catalog.json'
    catalog.write_text('{"version": "x", "entries": [\n', encoding='utf-8')
    result, out = _scan(runner, tmp_path, '--catalog', str(catalog))
    assert result.exit_code == 2
    assert not (out / 'report.json').exists()


def test_bad_rule_regex_exits_with_config_error(runner, tmp_path):
    rules = tmp_path / 'rules.json'
    rules.write_text(json.dumps({'categories': [{'name': 'Broken', 'pii': True,
                                                 'identifier_patterns': ['(unclosed']}]}), encoding='utf-8')
    result, _ = _scan(runner, tmp_path, '--rules', str(rules))
    assert result.exit_code == 2
    assert 'Broken' in result.output


def test_internal_failure_exits_with_code_3(runner, tmp_path, monkeypatch):
    def explode(*args, **kwargs):
        raise RuntimeError('worklist exploded')

    monkeypatch.setattr(src.main, 'propagate_inter', explode)
    result, _ = _scan(runner, tmp_path)
    assert result.exit_code == 3
    assert 'taint' in result.output


def test_data_errors_inside_a_stage_name_the_stage(runner, tmp_path, monkeypatch):
    def reject(*args, **kwargs):
        raise ConfigError('unknown sanitizer')

    monkeypatch.setattr(src.main, 'propagate_inter', reject)
    result, _ = _scan(runner, tmp_path)
    assert result.exit_code == 2
    assert "Stage 'taint' failed: unknown sanitizer" in result.output


def test_empty_tree_reports_no_methods(runner, tmp_path):
    empty = tmp_path / 'empty'
    empty.mkdir()
    result, out = _scan(runner, tmp_path, '--format', 'json', root=empty)
    assert result.exit_code == 0, result.output
    payload = json.loads((out / 'report.json').read_text(encoding='utf-8'))
    assert payload['proportion'] is None
    assert payload['proportion_error'] == 'no methods'
    assert payload['findings'] == []


def test_emit_graphs(runner, tmp_path):
    graphs = tmp_path / 'graphs'
    result, _ = _scan(runner, tmp_path, '--format', 'json', '--emit-graphs', str(graphs))
    assert result.exit_code == 0, result.output
    imports = (graphs / 'imports.dot').read_text(encoding='utf-8')
    calls = (graphs / 'calls.dot').read_text(encoding='utf-8')
    assert imports.startswith('digraph imports {')
    assert '"src/users/profile" -> "src/audit/logger";' in imports
    assert '"src/users/profile::updateProfile" -> "src/audit/logger::record";' in calls


def test_explain_a_saved_flow(runner, tmp_path, demo_truth):
    _, out = _scan(runner, tmp_path, '--format', 'json')
    result = runner.invoke(cli, ['explain', str(out / 'report.json'), 'F0001'])
    assert result.exit_code == 0
    assert demo_truth['cross_file_witness'] in result.output

    result = runner.invoke(cli, ['explain', str(out / 'report.json'), 'F0999'])
    assert result.exit_code == 2
    result = runner.invoke(cli, ['explain', str(tmp_path / 'nope.json'), 'F0001'])
    assert result.exit_code == 2


def test_scan_with_explain_option(runner, tmp_path, demo_truth):
    result, _ = _scan(runner, tmp_path, '--format', 'json', '--explain', 'F0001')
    assert result.exit_code == 0
    assert demo_truth['cross_file_witness'] in result.output


def test_catalog_check(runner, tmp_path):
    result = runner.invoke(cli, ['catalog', '--check', str(config.CATALOG_PATH)])
    assert result.exit_code == 0
    assert 'OK' in result.output
    assert 'DSMD:' in result.output

    broken = tmp_path / 'catalog.json'
    broken.write_text(json.dumps({'version': '1', 'entries': [
        {'pattern': 'fs.writeFile', 'library': 'node', 'origin': 'native', 'labels': ['DSMD']}]}),
        encoding='utf-8')
    result = runner.invoke(cli, ['catalog', '--check', str(broken)])
    assert result.exit_code == 2


def test_catalog_check_counts_entries_per_language(runner, tmp_path):
    small = tmp_path / 'catalog.json'
    small.write_text(json.dumps({'version': '2', 'entries': [
        {'pattern': 'fs.writeFile', 'library': 'node', 'origin': 'native', 'domain': 'IO',
         'labels': ['DSMD'], 'language': 'js'},
        {'pattern': 'java.io.FileWriter.write', 'library': 'jdk', 'origin': 'native', 'domain': 'IO',
         'labels': ['DSMD'], 'language': 'java'},
        {'pattern': 'globalThis.console.log', 'library': 'web', 'origin': 'native', 'domain': 'IO',
         'labels': ['LM']}]}), encoding='utf-8')
    result = runner.invoke(cli, ['catalog', '--check', str(small)])
    assert result.exit_code == 0, result.output
    assert '3 entries (version 2)' in result.output
    assert 'languages: any 1, java 1, js 1' in result.output
    assert 'DSMD: 2' in result.output


def test_markdown_matches_the_golden_report():
    report = PrivacyScanner(ScanConfig(root=GOLDEN_APP)).run()
    assert render_markdown(report) == (FIXTURES / 'golden_report.md').read_text(encoding='utf-8')


def test_category_rows_follow_usage():
    stats = [MethodStats(MethodRef('net.Http.post'), 15, 3), MethodStats(MethodRef('auth.Jwt.sign'), 17, 2),
             MethodStats(MethodRef('dp.Mapper.map'), 26, 5)]
    labels = {'net.Http.post': [ProcessingLabel.NC], 'auth.Jwt.sign': [ProcessingLabel.IAM],
              'dp.Mapper.map': [ProcessingLabel.DPT]}
    report = ScanReport({}, ScanTotals(), category_ranking=category_stats(stats, labels))
    text = render_markdown(report)
    rows = [line for line in text.splitlines() if line.startswith(('| DPT ', '| IAM ', '| NC '))]
    assert [row.split(' | ')[0] for row in rows] == ['| DPT', '| IAM', '| NC']
    assert '| 26 | 44.8% |' in rows[0]
    assert '| 15 | 25.9% |' in rows[2]


def test_empty_report_keeps_every_section():
    text = render_markdown(ScanReport({}, ScanTotals(), proportion_error='no methods'))
    for heading in ('# Privacy Review Report', '## Summary', '## Category Breakdown',
                    '## Top Privacy-relevant Methods', '## Findings', '## Analysis Gaps'):
        assert heading in text
    assert 'No personal-data flows into privacy-relevant methods.' in text


def test_shuffled_discovery_order_gives_identical_json(monkeypatch, demo_report):
    discover = src.main.discover_files

    def shuffled(*args, **kwargs):
        files = discover(*args, **kwargs)
        random.Random(11).shuffle(files)
        return files

    monkeypatch.setattr(src.main, 'discover_files', shuffled)
    assert to_json(PrivacyScanner(ScanConfig(root=DEMO_APP)).run()) == to_json(demo_report)


def test_ten_thousand_functions_scan_within_a_minute(tmp_path):
    for index in range(20):
        helpers = '\n'.join(f"function f{index}_{n}(a, b) {{\n  const c = a + b;\n  return c;\n}}\n"
                            for n in range(499))
        sender = f"function send{index}(email) {{\n  console.log(email);\n}}\n"
        (tmp_path / f"part{index:02d}.js").write_text(helpers + '\n' + sender, encoding='utf-8')

    started = time.perf_counter()
    report = PrivacyScanner(ScanConfig(root=tmp_path)).run()
    elapsed = time.perf_counter() - started
    assert report.totals.functions == 10000
    assert report.totals.flows == 20
    assert elapsed < 60, f"scan took {elapsed:.1f}s"
