"""Recursive-descent parser producing a SourceUnit with SCoPs extracted.

Grammar (informally):

    unit   := { class | func }
    class  := "class" IDENT "{" { access ":" | func } "}" ";"?
    func   := type IDENT "(" params? ")" block
    stmt   := pragma* ( decl | for | if | return | block | expr ";" )
    for    := "for" "(" assign ";" expr ";" incr ")" stmt
    pragma := "#pragma @Annotation {" key ":" value { "," ... } "}"

Annotations attach to the next non-pragma statement. Class declarations only
scope method names; fields, templates and out-of-line definitions are not
supported. Preprocessor directives other than annotation pragmas, and
while/do/goto/switch/break/continue, are rejected by name.
"""

from __future__ import annotations

from ..errors import SourceSyntaxError, UnsupportedConstruct
from .annotations import merge_annotations, parse_annotation
from .ast import (
    Assign,
    BinOp,
    Block,
    Call,
    CallStmt,
    Decl,
    Expr,
    ExprStmt,
    FloatLit,
    ForLoop,
    FunctionDecl,
    IfStmt,
    IncDec,
    IntLit,
    Index,
    Name,
    ParamDecl,
    Return,
    SourceUnit,
    SrcSpan,
    Stmt,
    Unary,
    walk_statements,
)
from .lexer import Token, tokenize
from .scop import extract_scop

_TYPE_KEYWORDS = ("void", "int", "double")
_REJECTED_STMT_KEYWORDS = ("while", "do", "goto", "switch", "break", "continue")


class _Parser:
    def __init__(self, text: str, file_name: str):
        self.text = text
        self.file_name = file_name
        self.tokens = tokenize(text)
        self.pos = 0
        self.loop_indices: list[str] = []

    # --- token plumbing ---

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, what: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            expected = what or f"'{kind}'"
            raise SourceSyntaxError(
                f"expected {expected}, found {tok.text!r}", tok.line, tok.col
            )
        return self.next()

    def error(self, message: str) -> SourceSyntaxError:
        tok = self.peek()
        return SourceSyntaxError(message, tok.line, tok.col)

    def span_from(self, start: Token) -> SrcSpan:
        end = self.tokens[max(self.pos - 1, 0)]
        return SrcSpan(start.line, start.col, end.end_line, end.end_col)

    # --- top level ---

    def parse_unit(self) -> SourceUnit:
        functions: list[FunctionDecl] = []
        while not self.at("EOF"):
            if self.at("KW", "class"):
                functions.extend(self.parse_class())
            else:
                fn = self.parse_function(None)
                if fn is not None:  # prototypes carry no body to analyze
                    functions.append(fn)
        seen: set[tuple] = set()
        for fn in functions:
            key = (fn.class_name, fn.name, fn.arity)
            if key in seen:
                raise SourceSyntaxError(
                    f"duplicate function '{fn.mangled_name}'", fn.span.line, fn.span.col
                )
            seen.add(key)
        line_count = self.text.count("\n") + 1
        unit = SourceUnit(self.file_name, functions, line_count)
        self._number_statements(unit)
        return unit

    def _number_statements(self, unit: SourceUnit) -> None:
        counter = 0
        for fn in unit.functions:
            for stmt in walk_statements(fn.body):
                stmt.stmt_id = counter
                for ann in stmt.annotations:
                    ann.attach_site = counter
                counter += 1

    def parse_class(self) -> list[FunctionDecl]:
        self.expect("KW")  # class
        name = self.expect("IDENT", "class name").text
        self.expect("{")
        methods: list[FunctionDecl] = []
        while not self.at("}"):
            if self.at("KW") and self.peek().text in ("public", "private", "protected"):
                self.next()
                self.expect(":")
                continue
            fn = self.parse_function(name)
            if fn is not None:
                methods.append(fn)
        self.expect("}")
        if self.at(";"):
            self.next()
        return methods

    def parse_function(self, class_name: str | None) -> FunctionDecl | None:
        start = self.peek()
        ret_type = self._parse_type_name()
        name = self.expect("IDENT", "function name").text
        self.expect("(")
        params: list[ParamDecl] = []
        if not self.at(")"):
            if self.at("KW", "void") and self.peek(1).kind == ")":
                self.next()
            else:
                params.append(self._parse_param())
                while self.at(","):
                    self.next()
                    params.append(self._parse_param())
        self.expect(")")
        if self.at(";"):  # prototype: declaration only, nothing to analyze
            self.next()
            return None
        body = self.parse_block()
        return FunctionDecl(name, class_name, params, body, ret_type, self.span_from(start))

    def _parse_type_name(self) -> str:
        tok = self.peek()
        if tok.kind == "KW" and tok.text in _TYPE_KEYWORDS:
            return self.next().text
        if tok.kind == "IDENT":  # class type
            return self.next().text
        raise self.error(f"expected a type name, found {tok.text!r}")

    def _parse_param(self) -> ParamDecl:
        type_tag = self._parse_type_name()
        name = self.expect("IDENT", "parameter name").text
        is_array = False
        if self.at("["):
            self.next()
            if self.at("INT"):
                self.next()
            self.expect("]")
            is_array = True
        return ParamDecl(name, type_tag, is_array)

    # --- statements ---

    def parse_block(self) -> Block:
        start = self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.at("EOF"):
                raise self.error("unexpected end of input inside a block")
            stmts.extend(self.parse_statement())
        self.expect("}")
        block = Block(self.span_from(start), stmts)
        return block

    def parse_statement(self) -> list[Stmt]:
        pragmas = []
        while self.at("PRAGMA"):
            tok = self.next()
            pragmas.append(parse_annotation(tok.text, tok.line))
        if pragmas and (self.at("}") or self.at("EOF")):
            raise self.error("annotation pragma is not followed by a statement")
        stmts = self._parse_real_statement()
        if pragmas:
            stmts[0].annotations = merge_annotations(pragmas)
        return stmts

    def _parse_real_statement(self) -> list[Stmt]:
        tok = self.peek()
        if tok.kind == "KW":
            if tok.text in _REJECTED_STMT_KEYWORDS:
                raise UnsupportedConstruct(tok.text, tok.line)
            if tok.text == "for":
                return [self.parse_for()]
            if tok.text == "if":
                return [self.parse_if()]
            if tok.text == "return":
                return [self.parse_return()]
            if tok.text in _TYPE_KEYWORDS:
                return self.parse_decl()
            raise self.error(f"unexpected keyword '{tok.text}'")
        if tok.kind == "{":
            return [self.parse_block()]
        if tok.kind == "IDENT" and self.peek(1).kind == "IDENT":
            return self.parse_decl()  # class-typed declaration
        start = tok
        expr = self.parse_expression()
        self.expect(";")
        span = self.span_from(start)
        if isinstance(expr, Call):
            return [CallStmt(span, expr)]
        return [ExprStmt(span, expr)]

    def parse_decl(self) -> list[Stmt]:
        start = self.peek()
        type_tag = self._parse_type_name()
        decls: list[Stmt] = []
        while True:
            name = self.expect("IDENT", "declared name").text
            array_size = None
            if self.at("["):
                self.next()
                array_size = int(self.expect("INT", "array size").text)
                self.expect("]")
            init = None
            if self.at("="):
                self.next()
                init = self.parse_expression()
            decls.append((name, array_size, init))
            if self.at(","):
                self.next()
                continue
            break
        self.expect(";")
        span = self.span_from(start)
        return [Decl(span, type_tag, name, size, init) for name, size, init in decls]

    def parse_for(self) -> ForLoop:
        start = self.next()  # for
        self.expect("(")
        init = self.parse_expression()
        if not isinstance(init, Assign) or init.op != "=":
            raise SourceSyntaxError(
                "for-loop initialization must be an assignment", start.line, start.col
            )
        self.expect(";")
        cond = self.parse_expression()
        self.expect(";")
        step = self.parse_expression()
        self.expect(")")
        index = init.target.ident if isinstance(init.target, Name) else None
        if index is not None:
            self.loop_indices.append(index)
        body = self._parse_single_statement()
        if index is not None:
            self.loop_indices.pop()
        loop = ForLoop(self.span_from(start), init, cond, step, body)
        outer = frozenset(self.loop_indices)
        result = extract_scop(loop, outer)
        if isinstance(result, str):
            loop.scop_failure = result
        else:
            loop.scop = result
        return loop

    def parse_if(self) -> IfStmt:
        start = self.next()  # if
        self.expect("(")
        cond_start = self.peek()
        cond = self.parse_expression()
        cond_end = self.tokens[self.pos - 1]
        self.expect(")")
        then = self._parse_single_statement()
        orelse = None
        if self.at("KW", "else"):
            self.next()
            orelse = self._parse_single_statement()
        cond_text = self._slice_source(cond_start, cond_end)
        return IfStmt(self.span_from(start), cond, then, orelse, cond_text)

    def parse_return(self) -> Return:
        start = self.next()
        value = None
        if not self.at(";"):
            value = self.parse_expression()
        self.expect(";")
        return Return(self.span_from(start), value)

    def _parse_single_statement(self) -> Stmt:
        stmts = self.parse_statement()
        if len(stmts) != 1:
            # a multi-declarator declaration as a loop/branch body
            span = SrcSpan(
                stmts[0].span.line, stmts[0].span.col,
                stmts[-1].span.end_line, stmts[-1].span.end_col,
            )
            return Block(span, stmts)
        return stmts[0]

    def _slice_source(self, first: Token, last: Token) -> str:
        lines = self.text.split("\n")
        if first.line == last.end_line:
            return lines[first.line - 1][first.col - 1 : last.end_col]
        parts = [lines[first.line - 1][first.col - 1 :]]
        parts.extend(lines[first.line : last.end_line - 1])
        parts.append(lines[last.end_line - 1][: last.end_col])
        return "\n".join(parts)

    # --- expressions (precedence climbing) ---

    def parse_expression(self) -> Expr:
        return self.parse_assignment()

    def parse_assignment(self) -> Expr:
        left = self.parse_logical_or()
        if self.peek().kind in ("=", "+=", "-=", "*=", "/="):
            op_tok = self.next()
            if not isinstance(left, (Name, Index)):
                raise SourceSyntaxError(
                    "assignment target must be a variable or array element",
                    op_tok.line,
                    op_tok.col,
                )
            value = self.parse_assignment()
            span = SrcSpan(left.span.line, left.span.col, value.span.end_line, value.span.end_col)
            return Assign(span, left, op_tok.kind, value)
        return left

    def _binary_level(self, ops: tuple[str, ...], next_level) -> Expr:
        left = next_level()
        while self.peek().kind in ops:
            op = self.next().kind
            right = next_level()
            span = SrcSpan(left.span.line, left.span.col, right.span.end_line, right.span.end_col)
            left = BinOp(span, op, left, right)
        return left

    def parse_logical_or(self) -> Expr:
        return self._binary_level(("||",), self.parse_logical_and)

    def parse_logical_and(self) -> Expr:
        return self._binary_level(("&&",), self.parse_equality)

    def parse_equality(self) -> Expr:
        return self._binary_level(("==", "!="), self.parse_relational)

    def parse_relational(self) -> Expr:
        return self._binary_level(("<", "<=", ">", ">="), self.parse_additive)

    def parse_additive(self) -> Expr:
        return self._binary_level(("+", "-"), self.parse_multiplicative)

    def parse_multiplicative(self) -> Expr:
        return self._binary_level(("*", "/", "%"), self.parse_unary)

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind in ("-", "+", "!"):
            self.next()
            operand = self.parse_unary()
            span = SrcSpan(tok.line, tok.col, operand.span.end_line, operand.span.end_col)
            return Unary(span, tok.kind, operand)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.kind == "(":
                if not isinstance(expr, Name):
                    raise SourceSyntaxError("only named functions can be called", tok.line, tok.col)
                args = self._parse_args()
                span = self.span_from_expr(expr)
                expr = Call(span, expr.ident, args)
            elif tok.kind == "[":
                self.next()
                idx = self.parse_expression()
                end = self.expect("]")
                span = SrcSpan(expr.span.line, expr.span.col, end.end_line, end.end_col)
                expr = Index(span, expr, idx)
            elif tok.kind == ".":
                self.next()
                method = self.expect("IDENT", "method name").text
                if not self.at("("):
                    raise self.error("member access is only supported as a method call")
                args = self._parse_args()
                span = self.span_from_expr(expr)
                expr = Call(span, method, args, receiver=expr)
            elif tok.kind in ("++", "--"):
                self.next()
                if not isinstance(expr, Name):
                    raise SourceSyntaxError(
                        f"'{tok.kind}' applies only to simple variables", tok.line, tok.col
                    )
                span = SrcSpan(expr.span.line, expr.span.col, tok.end_line, tok.end_col)
                expr = IncDec(span, expr, tok.kind)
            else:
                return expr

    def span_from_expr(self, expr: Expr) -> SrcSpan:
        end = self.tokens[self.pos - 1]
        return SrcSpan(expr.span.line, expr.span.col, end.end_line, end.end_col)

    def _parse_args(self) -> list[Expr]:
        self.expect("(")
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.parse_expression())
            while self.at(","):
                self.next()
                args.append(self.parse_expression())
        self.expect(")")
        return args

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "INT":
            self.next()
            return IntLit(_tok_span(tok), int(tok.text))
        if tok.kind == "FLOAT":
            self.next()
            return FloatLit(_tok_span(tok), tok.text)
        if tok.kind == "IDENT":
            self.next()
            return Name(_tok_span(tok), tok.text)
        if tok.kind == "(":
            self.next()
            expr = self.parse_expression()
            self.expect(")")
            return expr
        if tok.kind == "KW" and tok.text in _REJECTED_STMT_KEYWORDS:
            raise UnsupportedConstruct(tok.text, tok.line)
        raise self.error(f"expected an expression, found {tok.text!r}")


def _tok_span(tok: Token) -> SrcSpan:
    return SrcSpan(tok.line, tok.col, tok.end_line, tok.end_col)


def parse_source(text: str, file_name: str = "<source>") -> SourceUnit:
    """Parse C-subset source text into a SourceUnit with line attribution."""
    return _Parser(text, file_name).parse_unit()
