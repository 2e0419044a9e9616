"""Reference parser for the flat key-tree configuration format.

Grammar (one statement per line, UTF-8)::

    file       : line*
    line       : blank | comment | assignment
    comment    : '#' any-text            (also allowed after a value)
    assignment : keypath '=' value
    keypath    : ident ('.' ident)*      nesting by dotted path
    ident      : [A-Za-z_][A-Za-z0-9_-]*
    value      : list | scalar
    list       : '[' (scalar (',' scalar)*)? ']'
    scalar     : 'true' | 'false'        boolean
               | integer | float        decimal, '.' decimal point
               | '"' chars '"'          quoted string ('\\"' and '\\\\')
               | bare-word              unquoted string, no ',' '[' ']' '#'

Duplicate key paths and assignments through an existing scalar are errors.
The parser returns nested dictionaries; lists contain scalars only.
"""

from __future__ import annotations

import re

from .errors import ConfigError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*")
_INT = re.compile(r"[+-]?\d+$")
_FLOAT = re.compile(r"[+-]?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$")


def _strip_comment(line: str) -> str:
    out = []
    in_quote = False
    i = 0
    while i < len(line):
        ch = line[i]
        if ch == '"' and (i == 0 or line[i - 1] != "\\"):
            in_quote = not in_quote
        if ch == "#" and not in_quote:
            break
        out.append(ch)
        i += 1
    return "".join(out)


def _parse_scalar(token: str, line_no: int):
    token = token.strip()
    if token == "":
        raise ConfigError(f"empty value on line {line_no}", module="config")
    if token == "true":
        return True
    if token == "false":
        return False
    if _INT.match(token):
        return int(token)
    if _FLOAT.match(token):
        return float(token)
    if token.startswith('"'):
        if not token.endswith('"') or len(token) < 2:
            raise ConfigError(f"unterminated string on line {line_no}", module="config")
        body = token[1:-1]
        return body.replace('\\"', '"').replace("\\\\", "\\")
    if any(c in token for c in ",[]"):
        raise ConfigError(f"bad bare value {token!r} on line {line_no}", module="config")
    return token


def _split_list_items(body: str, line_no: int) -> list[str]:
    items = []
    current = []
    in_quote = False
    for ch in body:
        if ch == '"':
            in_quote = not in_quote
        if ch == "," and not in_quote:
            items.append("".join(current))
            current = []
        else:
            current.append(ch)
    items.append("".join(current))
    if in_quote:
        raise ConfigError(f"unterminated string on line {line_no}", module="config")
    return items


def _parse_value(text: str, line_no: int):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ConfigError(f"unterminated list on line {line_no}", module="config")
        body = text[1:-1].strip()
        if body == "":
            return []
        return [_parse_scalar(item, line_no) for item in _split_list_items(body, line_no)]
    return _parse_scalar(text, line_no)


def parse_config(text: str) -> dict:
    tree: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' on line {line_no}", module="config")
        key_text, value_text = line.split("=", 1)
        keys = [k.strip() for k in key_text.strip().split(".")]
        if not all(_IDENT.fullmatch(k) for k in keys):
            raise ConfigError(f"bad key path {key_text.strip()!r} on line {line_no}", module="config")
        value = _parse_value(value_text, line_no)
        node = tree
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(
                    f"key {k!r} already holds a value (line {line_no})", module="config"
                )
        leaf = keys[-1]
        if leaf in node:
            raise ConfigError(f"duplicate key {'.'.join(keys)!r} (line {line_no})", module="config")
        node[leaf] = value
    return tree


def load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", module="config") from exc


def get_path(tree: dict, dotted: str, default=None, required: bool = False):
    node = tree
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node:
            if required:
                raise ConfigError(f"missing config key {dotted!r}", module="config")
            return default
        node = node[key]
    return node
