import json
from pathlib import Path

import pytest

from src.config import ScanConfig
from src.frontend import discover_files, parse_all
from src.main import PrivacyScanner

FIXTURES = Path(__file__).resolve().parent / 'fixtures'
DEMO_APP = FIXTURES / 'demo_app'
JAVA_APP = FIXTURES / 'java_app'
GOLDEN_APP = FIXTURES / 'golden_app'


@pytest.fixture(scope='session')
def demo_truth() -> dict:
    with open(DEMO_APP / 'ground_truth.json', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture(scope='session')
def demo_modules():
    return parse_all(discover_files(DEMO_APP))


@pytest.fixture(scope='session')
def demo_scan():
    """(scanner, report) for one full pipeline run over the demo application"""
    scanner = PrivacyScanner(ScanConfig(root=DEMO_APP))
    return scanner, scanner.run()


@pytest.fixture(scope='session')
def demo_report(demo_scan):
    return demo_scan[1]
