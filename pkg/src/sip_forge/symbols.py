"""Global symbol table shared by all tasks in a corpus.

Integer ids are stable across the whole corpus: 0 is padding, 1 is the
empty string, 2-4 are the shorthand labels, and ids >= 5 map bijectively
to Unicode code points.  The characters ``[``, ``]`` and ``\\`` are never
part of the alphabet.
"""

from __future__ import annotations

from dataclasses import dataclass

PAD = 0
EPSILON = 1
IDENTITY = 2
LOWER_TO_UPPER = 3
UPPER_TO_LOWER = 4
FIRST_CHAR_ID = 5

SHORTHANDS = frozenset({IDENTITY, LOWER_TO_UPPER, UPPER_TO_LOWER})
RESERVED_TOKENS = {
    EPSILON: "<eps>",
    IDENTITY: "<id>",
    LOWER_TO_UPPER: "<l2u>",
    UPPER_TO_LOWER: "<u2l>",
    PAD: "<pad>",
}
_TOKEN_TO_ID = {tok: sid for sid, tok in RESERVED_TOKENS.items()}

EXCLUDED_CHARS = frozenset({"[", "]", "\\"})

# Printable ASCII (space through tilde) plus the IPA extensions block.
_ASCII = [chr(c) for c in range(0x20, 0x7F)]
_IPA = [chr(c) for c in range(0x250, 0x2B0)]


def is_shorthand(sid: int) -> bool:
    return sid in SHORTHANDS


def is_concrete(sid: int) -> bool:
    return sid >= FIRST_CHAR_ID


@dataclass(frozen=True)
class SymbolTable:
    """Bijection between symbol ids >= 5 and characters."""

    chars: tuple[str, ...]

    def __post_init__(self):
        bad = set(self.chars) & EXCLUDED_CHARS
        if bad:
            raise ValueError(f"excluded characters in symbol table: {sorted(bad)}")
        if len(set(self.chars)) != len(self.chars):
            raise ValueError("duplicate characters in symbol table")
        object.__setattr__(self, "_char_to_id",
                           {c: FIRST_CHAR_ID + i for i, c in enumerate(self.chars)})

    @classmethod
    def default(cls) -> "SymbolTable":
        chars = [c for c in _ASCII + _IPA if c not in EXCLUDED_CHARS]
        return cls(tuple(chars))

    def __len__(self) -> int:
        return FIRST_CHAR_ID + len(self.chars)

    @property
    def char_ids(self) -> range:
        return range(FIRST_CHAR_ID, len(self))

    @property
    def ascii_char_ids(self) -> list[int]:
        return [self.id_of(c) for c in self.chars if ord(c) < 0x7F]

    def id_of(self, char: str) -> int:
        try:
            return self._char_to_id[char]
        except KeyError:
            raise KeyError(f"character {char!r} not in symbol table") from None

    def char_of(self, sid: int) -> str:
        if not is_concrete(sid) or sid >= len(self):
            raise KeyError(f"id {sid} is not a concrete symbol")
        return self.chars[sid - FIRST_CHAR_ID]

    def encode(self, text: str) -> tuple[int, ...]:
        return tuple(self.id_of(c) for c in text)

    def decode(self, ids) -> str:
        return "".join(self.char_of(s) for s in ids)

    def token_of(self, sid: int) -> str:
        """Serialized form: reserved token for special ids, the character otherwise."""
        if sid in RESERVED_TOKENS:
            return RESERVED_TOKENS[sid]
        return self.char_of(sid)

    def id_of_token(self, token: str) -> int:
        if token in _TOKEN_TO_ID:
            return _TOKEN_TO_ID[token]
        if len(token) != 1:
            raise KeyError(f"unknown symbol token {token!r}")
        return self.id_of(token)

    def is_lower_ascii(self, sid: int) -> bool:
        return is_concrete(sid) and "a" <= self.char_of(sid) <= "z"

    def is_upper_ascii(self, sid: int) -> bool:
        return is_concrete(sid) and "A" <= self.char_of(sid) <= "Z"

    def to_upper(self, sid: int) -> int:
        return self.id_of(self.char_of(sid).upper())

    def to_lower(self, sid: int) -> int:
        return self.id_of(self.char_of(sid).lower())

    def to_mapping(self) -> dict[str, str]:
        return {str(FIRST_CHAR_ID + i): c for i, c in enumerate(self.chars)}

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "SymbolTable":
        items = sorted(((int(k), v) for k, v in mapping.items()))
        ids = [k for k, _ in items]
        if ids != list(range(FIRST_CHAR_ID, FIRST_CHAR_ID + len(ids))):
            raise ValueError("symbol table ids must be contiguous starting at 5")
        return cls(tuple(v for _, v in items))


DEFAULT_TABLE = SymbolTable.default()
