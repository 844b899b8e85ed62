import json
import logging

import pytest

from conftest import DEMO_APP
from src.errors import BadRegex, SchemaError
from src.frontend import parse_file
from src.models import Language, SourceFile
from src.pd_sources import (SourceKind, default_rules, detect_sources, load_rule_file, load_rules,
                            name_rule_reference)


def _module(rel: str, text: str = None):
    if text is None:
        text = (DEMO_APP / rel).read_text(encoding='utf-8')
    return parse_file(SourceFile(rel, Language.JS, text))


def _write_rules(tmp_path, categories, sanitizers=()):
    path = tmp_path / 'rules.json'
    path.write_text(json.dumps({'categories': categories, 'sanitizers': list(sanitizers)}, indent=2),
                    encoding='utf-8')
    return path


@pytest.mark.parametrize('identifier', ['firstName', 'first_name', 'given_name', 'fullName', 'lastName',
                                        'surname', 'FIRST_NAME'])
def test_name_rule_accepts_human_names(identifier):
    assert name_rule_reference(identifier)


@pytest.mark.parametrize('identifier', ['surgeonName', 'surgeonname', 'nickname', 'rename', 'username',
                                        'fileName'])
def test_name_rule_rejects_lookalikes(identifier):
    assert not name_rule_reference(identifier)


def test_default_rule_set():
    rules = default_rules()
    assert len(rules.categories) == 10
    assert rules.pii_names() == ('Account', 'Contact', 'PersonalID', 'NationalID')
    assert rules.category('Financial').reconstructed
    assert rules.sanitizers == ()


@pytest.mark.parametrize('identifier, category', [
    ('accountName', 'Account'),
    ('homeAddress', 'Contact'),
    ('emailAddress', 'Contact'),
    ('dateOfBirth', 'PersonalID'),
    ('geoLocation', 'Location'),
    ('ssn', 'NationalID'),
    ('creditCardNumber', 'Financial'),
    ('bloodType', 'Health'),
    ('apiKey', 'Credentials'),
    ('sessionId', 'OnlineIdentifier'),
    ('maritalStatus', 'Demographic'),
])
def test_identifier_categories(identifier, category):
    matched = {c.name for c in default_rules().categories if c.matches_identifier(identifier)}
    assert category in matched


@pytest.mark.parametrize('identifier', ['recipient', 'description', 'message', 'summary', 'payload'])
def test_identifiers_without_personal_data(identifier):
    assert not any(c.matches_identifier(identifier) for c in default_rules().categories)


@pytest.mark.parametrize('text, category', [
    ('contact us at help@example.org', 'Contact'),
    ('+1 555 123 4567', 'Contact'),
    ('123-45-6789', 'NationalID'),
    ('48.8584, 2.2945', 'Location'),
    ('client 203.0.113.7 connected', 'OnlineIdentifier'),
])
def test_literal_categories(text, category):
    matched = {c.name for c in default_rules().categories if c.matches_literal(text)}
    assert category in matched


def test_parameters_are_sources():
    sources = detect_sources(_module('src/users/profile.js'), default_rules())
    assert [(s.symbol, s.category, s.kind) for s in sources] == [
        ('userId', 'Account', SourceKind.IDENTIFIER),
        ('fullName', 'PersonalID', SourceKind.IDENTIFIER),
    ]
    assert all(s.is_pii for s in sources)
    assert sources[0].source_id == 'src/users/profile.js:4:24:Account:userId'
    assert sources[0].function.qualified_name == 'src/users/profile::updateProfile'


def test_literal_text_is_a_source():
    sources = detect_sources(_module('src/notify/mailer.js'), default_rules())
    assert [(s.symbol, s.category, s.kind) for s in sources] == [
        ('phoneNumber', 'Contact', SourceKind.IDENTIFIER),
        ('visitorIp', 'OnlineIdentifier', SourceKind.IDENTIFIER),
        ('help@example.org', 'Contact', SourceKind.LITERAL),
    ]
    assert [s.is_pii for s in sources] == [True, False, True]
    assert sources[2].span.line == 7


def test_one_source_per_symbol_function_and_category():
    module = _module('src/app/save.js', """function save(req) {
  const email = req.body.address;
  const copy = email;
  return copy;
}
""")
    sources = detect_sources(module, default_rules())
    assert len(sources) == 1
    source = sources[0]
    assert (source.symbol, source.span.line, source.span.col) == ('email', 2, 9)
    assert source.span == module.methods()[0].body[0].span


def test_called_functions_are_not_sources():
    module = _module('src/app/call.js', """function run(data) {
  return email(data);
}
""")
    assert detect_sources(module, default_rules()) == []


def test_bad_regex_names_its_category(tmp_path):
    path = _write_rules(tmp_path, [{'name': 'Broken', 'pii': False, 'identifier_patterns': ['(unclosed']}])
    with pytest.raises(BadRegex) as info:
        load_rule_file(path)
    assert info.value.category == 'Broken'
    assert info.value.exit_code == 2


def test_rule_file_schema_errors(tmp_path):
    duplicate = [{'name': 'A', 'pii': True, 'identifier_patterns': ['a']},
                 {'name': 'A', 'pii': False, 'identifier_patterns': ['b']}]
    with pytest.raises(SchemaError, match='duplicate category'):
        load_rule_file(_write_rules(tmp_path, duplicate))

    empty = [{'name': 'Nothing', 'pii': True}]
    with pytest.raises(SchemaError, match='has no patterns'):
        load_rule_file(_write_rules(tmp_path, empty))

    unknown_key = [{'name': 'A', 'pii': True, 'identifier_patterns': ['a'], 'weight': 3}]
    with pytest.raises(SchemaError):
        load_rule_file(_write_rules(tmp_path, unknown_key))

    bad_sanitizer = [{'name': 'A', 'pii': True, 'identifier_patterns': ['a']}]
    with pytest.raises(SchemaError, match='sanitizer'):
        load_rule_file(_write_rules(tmp_path, bad_sanitizer, ['a.*.b']))


def test_unusual_category_count_is_only_a_warning(tmp_path, caplog):
    path = _write_rules(tmp_path, [{'name': 'Email', 'pii': True, 'identifier_patterns': ['e_?mail']}],
                        ['crypto.hash'])
    with caplog.at_level(logging.WARNING, logger='privacy_lens'):
        categories = load_rules(path)
    assert [c.name for c in categories] == ['Email']
    assert 'defines 1 categories' in caplog.text
    assert load_rule_file(path).sanitizers == ('crypto.hash',)


RULE_FIXTURES = [
    ('Account', 'userName', 'usernames'),
    ('Contact', 'phoneNumber', 'phoneme'),
    ('PersonalID', 'birthDate', 'surgeonName'),
    ('Location', 'latitude', 'translate'),
    ('NationalID', 'ssn', 'lessons'),
    ('Financial', 'iban', 'cardboard'),
    ('Health', 'diagnosis', 'diagnostics'),
    ('Credentials', 'password', 'passwordless'),
    ('OnlineIdentifier', 'ipAddress', 'zip'),
    ('Demographic', 'gender', 'page'),
]


def _sources_for(identifier: str):
    module = _module('rule.js', f"function check({identifier}) {{\n  return {identifier};\n}}\n")
    return detect_sources(module, default_rules())


def test_every_shipped_category_has_a_rule_fixture():
    assert sorted(c for c, _, _ in RULE_FIXTURES) == sorted(c.name for c in default_rules().categories)


@pytest.mark.parametrize('category, hit, near_miss', RULE_FIXTURES)
def test_rule_fixture_and_near_miss(category, hit, near_miss):
    assert category in {s.category for s in _sources_for(hit)}
    assert _sources_for(near_miss) == []
