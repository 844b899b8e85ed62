import pytest

from conftest import JAVA_APP
from src.catalog import ProcessingLabel
from src.config import ScanConfig
from src.errors import InvariantViolation, ZeroTotal
from src.main import PrivacyScanner
from src.metrics import (CategoryStats, MethodStats, category_stats, corpus_average, package_of, proportion, rank,
                         rank_by_pii)
from src.models import Language, MethodRef

# (|AM|, |Total|, printed percentage) for the evaluated applications
PUBLISHED = [
    (531, 18332, 2.9), (376, 10448, 3.6), (141, 5769, 2.4), (591, 11586, 5.1), (336, 8621, 3.9),
    (18, 2194, 0.8), (154, 9621, 1.6), (112, 1983, 5.6), (843, 17562, 4.8), (446, 13932, 3.2),
    (11, 2093, 0.5), (20, 14231, 0.1), (58, 7949, 0.7), (400, 6452, 6.2), (226, 3905, 5.8),
    (145, 1882, 7.7), (462, 4921, 9.4), (347, 6796, 5.1), (241, 10042, 2.4), (784, 18231, 4.3),
    (99, 1896, 5.2), (511, 6721, 7.6), (36, 1194, 3.0), (1066, 12845, 8.3), (134, 4956, 2.7),
]

# rows whose printed percentage disagrees with their own counts
MISPRINTED = [
    (492, 10318, 4.7, 4.8),
    (198, 20471, 0.9, 1.0),
    (490, 12841, 3.7, 3.8),
    (82, 2175, 3.7, 3.8),
    (428, 6291, 6.9, 6.8),
]


@pytest.mark.parametrize('am, total, expected', PUBLISHED)
def test_published_proportions(am, total, expected):
    result = proportion(am, total)
    assert result.percent == expected
    assert (result.am_count, result.total_methods) == (am, total)


@pytest.mark.parametrize('am, total, printed, exact', MISPRINTED)
def test_misprinted_rows_follow_the_counts(am, total, printed, exact):
    assert proportion(am, total).percent == exact != printed


def test_proportion_rounds_half_up():
    assert proportion(1, 8).percent == 12.5
    assert proportion(1, 16).percent == 6.3
    assert proportion(1, 3).percent == 33.3
    assert proportion(2, 3).percent == 66.7
    assert proportion(0, 5).percent == 0.0


def test_proportion_rejects_bad_counts():
    with pytest.raises(ZeroTotal, match='no methods'):
        proportion(0, 0)
    with pytest.raises(InvariantViolation):
        proportion(11, 10)
    with pytest.raises(InvariantViolation):
        proportion(3, 10, pii_am=4)
    with pytest.raises(InvariantViolation):
        proportion(-1, 10)


def test_corpus_average():
    rows = [proportion(am, total) for am, total, _ in PUBLISHED]
    rows += [proportion(am, total) for am, total, _, _ in MISPRINTED]
    assert corpus_average(rows) == 4.1
    assert corpus_average([proportion(1, 4), proportion(1, 2)]) == 37.5
    with pytest.raises(ZeroTotal):
        corpus_average([])


def _stats(name: str, occurrence: int, pii: int) -> MethodStats:
    return MethodStats(MethodRef(name), occurrence, pii)


def test_rank_tie_breaks():
    stats = [_stats('b.send', 3, 1), _stats('a.send', 3, 1), _stats('c.send', 3, 2), _stats('d.send', 4, 0)]
    assert [s.name for s in rank(stats)] == ['d.send', 'c.send', 'a.send', 'b.send']
    assert [s.name for s in rank_by_pii(stats)] == ['c.send', 'a.send', 'b.send', 'd.send']


def test_category_orders_by_usage_and_by_pii():
    stats = [_stats('net.Http.post', 7, 3), _stats('log.Logger.info', 8, 1), _stats('dp.Mapper.map', 10, 6),
             _stats('db.Repo.save', 5, 4)]
    labels = {
        'net.Http.post': [ProcessingLabel.NC],
        'log.Logger.info': [ProcessingLabel.LM],
        'dp.Mapper.map': [ProcessingLabel.DPT],
        'db.Repo.save': [ProcessingLabel.DSMD],
    }
    categories = category_stats(stats, labels)
    assert [c.name for c in categories][:3] == ['DPT', 'LM', 'NC']
    assert [c.name for c in rank_by_pii(categories)][:3] == ['DPT', 'DSMD', 'NC']


def test_multi_label_methods_count_in_each_category():
    stats = [_stats('jwt.sign', 2, 1), _stats('crypto.hash', 3, 0)]
    labels = {'jwt.sign': [ProcessingLabel.IAM, ProcessingLabel.DEC], 'crypto.hash': [ProcessingLabel.DEC]}
    by_label = {c.label: c for c in category_stats(stats, labels)}
    assert by_label[ProcessingLabel.DEC] == CategoryStats(ProcessingLabel.DEC, 5, 1, 2, 1)
    assert by_label[ProcessingLabel.IAM] == CategoryStats(ProcessingLabel.IAM, 2, 1, 1, 1)
    assert by_label[ProcessingLabel.DEC].involvement == 50.0
    assert category_stats(stats, {}) == []


@pytest.mark.parametrize('name, language, package', [
    ('axios.post', None, 'axios'),
    ('globalThis.console.log', None, 'console'),
    ('globalThis.fetch', None, 'globalThis'),
    ('org.slf4j.Logger.info', None, 'org.slf4j'),
    ('java.io.FileWriter.write', Language.JAVA, 'java.io'),
    ('src/users/auth::issueToken', Language.JS, 'src'),
])
def test_package_of(name, language, package):
    assert package_of(MethodRef(name), language) == package


def test_demo_rankings(demo_report, demo_truth):
    ranking = [[s.name, s.occurrence, s.pii_occurrence] for s in demo_report.method_ranking]
    assert ranking == demo_truth['method_ranking']
    assert [c.name for c in demo_report.category_ranking] == demo_truth['category_order']
    assert [c.name for c in demo_report.pii_category_ranking] == demo_truth['pii_category_order']
    assert demo_report.category_ranking[0].involvement == 50.0
    assert [list(p) for p in demo_report.top_packages] == demo_truth['top_packages']
    assert demo_report.top_classes == []


def test_demo_proportion(demo_report, demo_truth):
    p = demo_report.proportion
    assert (p.am_count, p.total_methods, p.pii_am) == (demo_truth['am_count'], demo_truth['functions'],
                                                       demo_truth['pii_am'])
    assert (p.percent, p.pii_percent) == (demo_truth['percent'], demo_truth['pii_percent'])
    assert demo_report.by_language == {Language.JS: p}


def test_java_packages_and_classes():
    report = PrivacyScanner(ScanConfig(root=JAVA_APP)).run()
    assert report.totals.flows == 2
    assert report.totals.pii_flows == 2
    assert report.top_classes == [('java.io.FileWriter', 1), ('java.lang.System.out', 1)]
    assert report.top_packages == [('java.io', 1), ('java.lang', 1)]
    assert report.proportion.percent == 50.0
    assert list(report.by_language) == [Language.JAVA]
