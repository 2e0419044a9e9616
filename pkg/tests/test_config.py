import pytest

from rrtransport.config import get_path, parse_config
from rrtransport.errors import ConfigError


def test_scalars_and_nesting():
    tree = parse_config(
        """
        # comment line
        dgm.case = 2
        dgm.n0 = 5000            # trailing comment
        level = 0.95
        name = figure2
        title = "quoted # string"
        active = true
        off = false
        """
    )
    assert tree["dgm"]["case"] == 2
    assert tree["dgm"]["n0"] == 5000
    assert tree["level"] == 0.95
    assert tree["name"] == "figure2"
    assert tree["title"] == "quoted # string"
    assert tree["active"] is True
    assert tree["off"] is False


def test_lists():
    tree = parse_config('sizes = [250, 500, 1000]\nnames = [if, or, "ip w"]\nempty = []\n')
    assert tree["sizes"] == [250, 500, 1000]
    assert tree["names"] == ["if", "or", "ip w"]
    assert tree["empty"] == []


def test_duplicate_key_rejected():
    with pytest.raises(ConfigError):
        parse_config("a = 1\na = 2\n")


def test_scalar_then_subtree_rejected():
    with pytest.raises(ConfigError):
        parse_config("a = 1\na.b = 2\n")


def test_missing_equals_rejected():
    with pytest.raises(ConfigError):
        parse_config("just a line\n")


def test_bad_identifier_rejected():
    with pytest.raises(ConfigError):
        parse_config("9lives = 1\n")


def test_unterminated_list_rejected():
    with pytest.raises(ConfigError):
        parse_config("xs = [1, 2\n")


def test_get_path():
    tree = parse_config("a.b.c = 7\n")
    assert get_path(tree, "a.b.c") == 7
    assert get_path(tree, "a.b.missing", default=3) == 3
    with pytest.raises(ConfigError):
        get_path(tree, "a.b.missing", required=True)
