from typing import List, Optional

from src.reward_dsl.ast_nodes import (
    BinaryOp,
    BoolOp,
    Call,
    Compare,
    Condition,
    Expr,
    IfExpr,
    Name,
    Not,
    Number,
    RewardModule,
    RewardProgram,
    UnaryOp,
)
from src.reward_dsl.lexer import ParseError, Token, TokenStream, tokenize

MAX_DEPTH = 64
RELATIONS = ("<", "<=", ">", ">=", "==")


class Parser:
    """
    Recursive-descent parser for reward programs.

    program   := ("module" IDENT "weight" ["-"] NUMBER ":" expr)+
    expr      := term (("+" | "-") term)*
    term      := unary (("*" | "/") unary)*
    unary     := "-" unary | primary
    primary   := NUMBER | IDENT | IDENT "(" [expr ("," expr)*] ")"
               | "if" "(" condition "," expr "," expr ")" | "(" expr ")"
    condition := conj ("or" conj)*
    conj      := neg ("and" neg)*
    neg       := "not" neg | "(" condition ")" | expr RELATION expr
    """

    def __init__(self, stream: TokenStream):
        self.tokens = stream.tokens
        self.comment_lines = stream.comment_lines
        self.current = 0
        self.nesting = 0
        # memo tables keep backtracking over nested parentheses linear
        self.failed_groups: set = set()
        self.relations: dict = {}

    # token helpers

    def peek(self) -> Token:
        return self.tokens[self.current]

    def previous(self) -> Token:
        return self.tokens[self.current - 1]

    def check(self, kind: str) -> bool:
        return self.peek().kind == kind

    def advance(self) -> Token:
        if not self.check("EOF"):
            self.current += 1
        return self.previous()

    def match(self, *kinds: str) -> bool:
        for kind in kinds:
            if self.check(kind):
                self.advance()
                return True
        return False

    def expect(self, kind: str, *also: str) -> Token:
        if self.check(kind):
            return self.advance()
        self.fail({kind, *also})

    def fail(self, expected: set, message: Optional[str] = None):
        token = self.peek()
        wanted = " or ".join(sorted(expected))
        raise ParseError(
            message or f"expected {wanted}, found {token.describe()}",
            token.line,
            token.column,
            frozenset(expected),
        )

    def enter(self) -> None:
        self.nesting += 1
        if self.nesting > MAX_DEPTH:
            token = self.peek()
            raise ParseError(
                f"expression nested deeper than {MAX_DEPTH} levels", token.line, token.column
            )

    def leave(self) -> None:
        self.nesting -= 1

    def build(self, node):
        if node.depth > MAX_DEPTH:
            raise ParseError(
                f"expression tree deeper than {MAX_DEPTH} levels", node.line, node.column
            )
        return node

    # grammar

    def program(self) -> List[RewardModule]:
        modules = [self.module()]
        while not self.check("EOF"):
            if not self.check("module"):
                self.fail({"module", "EOF"})
            modules.append(self.module())
        return modules

    def module(self) -> RewardModule:
        header = self.expect("module")
        name = self.expect("IDENT").text
        self.expect("weight")
        negative = self.match("-")
        weight = self.expect("NUMBER").value
        self.expect(":")
        body = self.expression()
        return RewardModule(
            name=name,
            weight=-weight if negative else weight,
            body=body,
            insight_text=self.insight_above(header.line),
            line=header.line,
        )

    def insight_above(self, line: int) -> str:
        collected = []
        line -= 1
        while line in self.comment_lines:
            collected.append(self.comment_lines[line])
            line -= 1
        return "\n".join(reversed(collected))

    def expression(self) -> Expr:
        self.enter()
        try:
            node = self.term()
            while self.check("+") or self.check("-"):
                op = self.advance()
                right = self.term()
                node = self.build(
                    BinaryOp(
                        op.text, node, right, op.line, op.column,
                        1 + max(node.depth, right.depth),
                    )
                )
            return node
        finally:
            self.leave()

    def term(self) -> Expr:
        node = self.unary()
        while self.check("*") or self.check("/"):
            op = self.advance()
            right = self.unary()
            node = self.build(
                BinaryOp(
                    op.text, node, right, op.line, op.column,
                    1 + max(node.depth, right.depth),
                )
            )
        return node

    def unary(self) -> Expr:
        if self.check("-"):
            op = self.advance()
            self.enter()
            try:
                operand = self.unary()
            finally:
                self.leave()
            return self.build(UnaryOp("-", operand, op.line, op.column, operand.depth + 1))
        return self.primary()

    def primary(self) -> Expr:
        token = self.peek()
        if self.match("NUMBER"):
            return Number(token.value, token.line, token.column)
        if self.match("IDENT"):
            if not self.match("("):
                return Name(token.text, token.line, token.column)
            args = []
            if not self.check(")"):
                args.append(self.expression())
                while self.match(","):
                    args.append(self.expression())
            self.expect(")", ",")
            depth = 1 + max((arg.depth for arg in args), default=0)
            return self.build(Call(token.text, tuple(args), token.line, token.column, depth))
        if self.match("if"):
            self.expect("(")
            self.enter()
            try:
                condition = self.condition()
                self.expect(",")
                then = self.expression()
                self.expect(",")
                otherwise = self.expression()
                self.expect(")")
            finally:
                self.leave()
            depth = 1 + max(condition.depth, then.depth, otherwise.depth)
            return self.build(
                IfExpr(condition, then, otherwise, token.line, token.column, depth)
            )
        if self.match("("):
            node = self.expression()
            self.expect(")")
            return node
        self.fail({"NUMBER", "IDENT", "if", "(", "-"})

    def condition(self) -> Condition:
        self.enter()
        try:
            node = self.conjunction()
            while self.check("or"):
                op = self.advance()
                right = self.conjunction()
                node = self.build(
                    BoolOp("or", node, right, op.line, op.column, 1 + max(node.depth, right.depth))
                )
            return node
        finally:
            self.leave()

    def conjunction(self) -> Condition:
        node = self.negation()
        while self.check("and"):
            op = self.advance()
            right = self.negation()
            node = self.build(
                BoolOp("and", node, right, op.line, op.column, 1 + max(node.depth, right.depth))
            )
        return node

    def negation(self) -> Condition:
        token = self.peek()
        if self.match("not"):
            self.enter()
            try:
                operand = self.negation()
            finally:
                self.leave()
            return self.build(Not(operand, token.line, token.column, operand.depth + 1))
        start = self.current
        if self.check("(") and start not in self.failed_groups:
            # "(" may open a grouped condition or an arithmetic operand; try the
            # condition first and fall back to a relation.
            nesting = self.nesting
            try:
                self.advance()
                grouped = self.condition()
                self.expect(")")
                if self.peek().kind not in RELATIONS + ("+", "-", "*", "/"):
                    return grouped
                group_error = None
            except ParseError as e:
                group_error = e
            self.failed_groups.add(start)
            self.current, self.nesting = start, nesting
            try:
                return self.relation()
            except ParseError as relation_error:
                if group_error is None:
                    raise
                raise max(
                    (group_error, relation_error), key=lambda e: (e.line, e.column)
                ) from None
        return self.relation()

    def relation(self) -> Compare:
        start = self.current
        if start in self.relations:
            outcome, end = self.relations[start]
            if isinstance(outcome, ParseError):
                raise outcome
            self.current = end
            return outcome
        try:
            left = self.expression()
            op = self.peek()
            if op.kind not in RELATIONS:
                self.fail(set(RELATIONS))
            self.advance()
            right = self.expression()
            node = self.build(
                Compare(op.kind, left, right, op.line, op.column, 1 + max(left.depth, right.depth))
            )
        except ParseError as e:
            self.relations[start] = (e, start)
            raise
        self.relations[start] = (node, self.current)
        return node


def parse_program(source: str, name: str = "reward") -> RewardProgram:
    """
    Parses reward program text.

    Args:
        source: Program text in the reward language.
        name: Program name recorded on the result.

    Returns:
        RewardProgram: The parsed program.

    Raises:
        ParseError: With line, column and expected-token set.
    """
    parser = Parser(tokenize(source))
    modules = parser.program()
    return RewardProgram(modules=tuple(modules), name=name, source_text=source)
