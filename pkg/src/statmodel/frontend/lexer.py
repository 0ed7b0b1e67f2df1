"""Tokenizer for the C subset, with annotation-pragma extraction."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import SourceSyntaxError, UnsupportedConstruct

KEYWORDS = {
    "class",
    "for",
    "if",
    "else",
    "return",
    "void",
    "int",
    "double",
    "public",
    "private",
    "protected",
    # recognized so the parser can reject them by name
    "while",
    "do",
    "goto",
    "switch",
    "break",
    "continue",
}

MULTI_OPS = ("==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "::")
SINGLE_OPS = "+-*/%<>=!()[]{};,.:"


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, INT, FLOAT, KW, PRAGMA, EOF, or the operator text
    text: str
    line: int
    col: int

    @property
    def end_line(self) -> int:
        return self.line + self.text.count("\n")

    @property
    def end_col(self) -> int:
        if "\n" in self.text:
            return len(self.text) - self.text.rfind("\n")
        return self.col + len(self.text) - 1


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            start_line, start_col = line, col
            advance(2)
            while i < n and not text.startswith("*/", i):
                advance(1)
            if i >= n:
                raise SourceSyntaxError("unterminated block comment", start_line, start_col)
            advance(2)
            continue
        if ch == "#":
            start_line, start_col = line, col
            raw = []
            while i < n:
                if text[i] == "\\" and i + 1 < n and text[i + 1] == "\n":
                    raw.append(" ")
                    advance(2)
                    continue
                if text[i] == "\n":
                    break
                raw.append(text[i])
                advance(1)
            directive = "".join(raw)
            stripped = directive.strip()
            if stripped.startswith("#pragma") and "@Annotation" in stripped:
                tokens.append(Token("PRAGMA", directive, start_line, start_col))
                continue
            name = stripped.split(None, 1)[0] if stripped else "#"
            raise UnsupportedConstruct(name, start_line)
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            start_line, start_col = line, col
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    # a digit must follow, otherwise it is member access
                    if j + 1 >= n or not text[j + 1].isdigit():
                        break
                    seen_dot = True
                j += 1
            lit = text[i:j]
            advance(j - i)
            tokens.append(Token("FLOAT" if seen_dot else "INT", lit, start_line, start_col))
            continue
        if ch.isalpha() or ch == "_":
            start_line, start_col = line, col
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            advance(j - i)
            kind = "KW" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, start_line, start_col))
            continue
        matched = False
        for op in MULTI_OPS:
            if text.startswith(op, i):
                tokens.append(Token(op, op, line, col))
                advance(len(op))
                matched = True
                break
        if matched:
            continue
        if ch in SINGLE_OPS:
            tokens.append(Token(ch, ch, line, col))
            advance(1)
            continue
        raise SourceSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens
