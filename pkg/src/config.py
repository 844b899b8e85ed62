import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

from .errors import ConfigError, RootNotFound
from .models import Language

DATA_DIR = Path(__file__).resolve().parent / 'data'


@dataclass
class LensConfig:
    # Shipped data files
    CATALOG_PATH: Path = DATA_DIR / 'default_catalog.json'
    RULES_PATH: Path = DATA_DIR / 'default_rules.json'
    LIBRARIES_PATH: Path = DATA_DIR / 'libraries.json'
    REPORT_SCHEMA_PATH: Path = DATA_DIR / 'report_schema.json'

    # Discovery
    DEFAULT_EXCLUDES: Tuple[str, ...] = ('node_modules', 'target', 'build', 'dist')
    TEST_EXCLUDES: Tuple[str, ...] = ('test', 'tests', '__tests__', 'spec', '__mocks__',
                                      '*.test.js', '*.test.ts', '*.spec.js', '*.spec.ts',
                                      '*.test.jsx', '*.test.tsx', '*Test.java', '*Tests.java')
    JS_EXTENSIONS: Tuple[str, ...] = ('.js', '.jsx', '.ts', '.tsx')
    JAVA_EXTENSIONS: Tuple[str, ...] = ('.java',)

    # Runtime
    WORKERS: int = int(os.getenv('PRIVACY_LENS_WORKERS', '4'))
    LOG_LEVEL: str = os.getenv('PRIVACY_LENS_LOG_LEVEL', 'WARNING')
    LOG_FILE: Optional[str] = os.getenv('PRIVACY_LENS_LOG_FILE')
    NO_COLOR: bool = bool(os.getenv('PRIVACY_LENS_NO_COLOR'))

    # Report
    TOOL_VERSION: str = '0.3.0'
    SCHEMA_VERSION: str = '1'
    TOP_N: int = 5  # packages / classes listed in the report


config = LensConfig()


class OutputFormat(str, Enum):
    JSON = 'json'
    MARKDOWN = 'md'
    BOTH = 'both'


@dataclass
class ScanConfig:
    root: Path
    language: Optional[Language] = None  # None = infer from extension
    catalog_path: Optional[Path] = None
    rules_path: Optional[Path] = None
    libraries_path: Optional[Path] = None
    output_dir: Optional[Path] = None
    format: OutputFormat = OutputFormat.BOTH
    excludes: List[str] = field(default_factory=list)
    exclude_tests: bool = False
    emit_graphs: Optional[Path] = None
    explain: Optional[str] = None

    def resolve(self) -> 'ScanConfig':
        """Resolve and validate every path before the pipeline starts"""
        root = Path(self.root).expanduser()
        if not root.is_dir():
            raise RootNotFound(str(self.root))
        resolved = ScanConfig(
            root=root.resolve(),
            language=self.language,
            catalog_path=self._data_file(self.catalog_path, config.CATALOG_PATH, 'catalog'),
            rules_path=self._data_file(self.rules_path, config.RULES_PATH, 'rules'),
            libraries_path=self._data_file(self.libraries_path, config.LIBRARIES_PATH, 'libraries'),
            output_dir=Path(self.output_dir).expanduser() if self.output_dir else None,
            format=OutputFormat(self.format),
            excludes=list(self.excludes),
            exclude_tests=self.exclude_tests,
            emit_graphs=Path(self.emit_graphs).expanduser() if self.emit_graphs else None,
            explain=self.explain,
        )
        for directory in (resolved.output_dir, resolved.emit_graphs):
            if directory is not None and directory.exists() and not directory.is_dir():
                raise ConfigError(f"Not a directory: {directory}")
        return resolved

    @staticmethod
    def _data_file(given: Optional[Path], default: Path, what: str) -> Path:
        path = Path(given).expanduser() if given else default
        if not path.is_file():
            raise ConfigError(f"{what} file not found: {path}")
        return path

    def echo(self) -> dict:
        """Configuration as echoed in the report; default data files are shown as 'default'"""
        def shown(path: Optional[Path], default: Path) -> Optional[str]:
            if path is None or Path(path) == default:
                return 'default'
            return Path(path).name

        return {
            'language': self.language.value if self.language else 'auto',
            'catalog': shown(self.catalog_path, config.CATALOG_PATH),
            'rules': shown(self.rules_path, config.RULES_PATH),
            'libraries': shown(self.libraries_path, config.LIBRARIES_PATH),
            'excludes': sorted(self.excludes),
            'exclude_tests': self.exclude_tests,
        }
