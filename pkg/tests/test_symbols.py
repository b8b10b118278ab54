import pytest

from sip_forge.symbols import (
    DEFAULT_TABLE,
    EPSILON,
    EXCLUDED_CHARS,
    FIRST_CHAR_ID,
    IDENTITY,
    LOWER_TO_UPPER,
    PAD,
    UPPER_TO_LOWER,
    SymbolTable,
)


class TestReservedIds:
    def test_fixed_assignments(self):
        assert PAD == 0
        assert EPSILON == 1
        assert IDENTITY == 2
        assert LOWER_TO_UPPER == 3
        assert UPPER_TO_LOWER == 4
        assert FIRST_CHAR_ID == 5


class TestDefaultTable:
    def test_printable_ascii_and_ipa(self):
        t = DEFAULT_TABLE
        assert t.id_of(" ") == FIRST_CHAR_ID
        assert t.char_of(t.id_of("a")) == "a"
        assert t.id_of("ɐ") > t.id_of("~")
        for c in EXCLUDED_CHARS:
            with pytest.raises(KeyError):
                t.id_of(c)

    def test_encode_decode_roundtrip(self):
        t = DEFAULT_TABLE
        for s in ("", "abc", "Hello, World!", "aɔbʃ"):
            assert t.decode(t.encode(s)) == s

    def test_case_maps(self):
        t = DEFAULT_TABLE
        assert t.to_upper(t.id_of("a")) == t.id_of("A")
        assert t.to_lower(t.id_of("Z")) == t.id_of("z")
        assert t.is_lower_ascii(t.id_of("m"))
        assert not t.is_lower_ascii(t.id_of("M"))
        assert not t.is_lower_ascii(t.id_of("0"))

    def test_tokens(self):
        t = DEFAULT_TABLE
        assert t.token_of(EPSILON) == "<eps>"
        assert t.token_of(IDENTITY) == "<id>"
        assert t.id_of_token("<l2u>") == LOWER_TO_UPPER
        assert t.id_of_token(t.token_of(t.id_of("q"))) == t.id_of("q")

    def test_mapping_roundtrip(self):
        t = DEFAULT_TABLE
        again = SymbolTable.from_mapping(t.to_mapping())
        assert again.encode("abɐ") == t.encode("abɐ")
