from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List
import math
import re

KEYWORDS = frozenset({"module", "weight", "if", "and", "or", "not"})

_NUMBER = re.compile(r"(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERATORS = ("<=", ">=", "==", "+", "-", "*", "/", "(", ")", ",", ":", "<", ">")


class ParseError(Exception):
    """Lexical or syntax error in reward program text, with its position."""

    def __init__(
        self,
        message: str,
        line: int,
        column: int,
        expected: FrozenSet[str] = frozenset(),
    ):
        self.message = message
        self.line = line
        self.column = column
        self.expected = frozenset(expected)
        super().__init__(f"line {line}, column {column}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int
    value: float = field(default=0.0, compare=False)

    def describe(self) -> str:
        return "end of input" if self.kind == "EOF" else repr(self.text)


@dataclass
class TokenStream:
    tokens: List[Token]
    # line number -> text of a comment occupying that whole line
    comment_lines: Dict[int, str]


def tokenize(source: str) -> TokenStream:
    """
    Splits reward program text into tokens.

    Args:
        source: Program text.

    Returns:
        TokenStream: Tokens ending with EOF, plus full-line comments by line.

    Raises:
        ParseError: On a character or number the language does not accept.
    """
    tokens: List[Token] = []
    comment_lines: Dict[int, str] = {}
    for line_no, line in enumerate(source.splitlines(), start=1):
        pos = 0
        while pos < len(line):
            char = line[pos]
            column = pos + 1
            if char in " \t\r\f\v":
                pos += 1
                continue
            if char == "#":
                if not line[:pos].strip():
                    comment_lines[line_no] = line[pos + 1 :].strip()
                break
            number = _NUMBER.match(line, pos)
            if number:
                text = number.group()
                value = float(text)
                if not math.isfinite(value):
                    raise ParseError(f"number {text} is out of range", line_no, column)
                tokens.append(Token("NUMBER", text, line_no, column, value))
                pos = number.end()
                continue
            ident = _IDENT.match(line, pos)
            if ident:
                text = ident.group()
                kind = text if text in KEYWORDS else "IDENT"
                tokens.append(Token(kind, text, line_no, column))
                pos = ident.end()
                continue
            for op in _OPERATORS:
                if line.startswith(op, pos):
                    tokens.append(Token(op, op, line_no, column))
                    pos += len(op)
                    break
            else:
                hint = " (did you mean '=='?)" if char == "=" else ""
                raise ParseError(f"unexpected character {char!r}{hint}", line_no, column)

    lines = source.splitlines()
    end_line = max(len(lines), 1)
    end_column = (len(lines[-1]) + 1) if lines else 1
    tokens.append(Token("EOF", "", end_line, end_column))
    return TokenStream(tokens=tokens, comment_lines=comment_lines)
