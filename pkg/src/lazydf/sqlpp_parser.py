"""Parser for the statement subset the dialects emit.

The in-memory oracle receives statements over the same HTTP contract as a
real query service, so it must turn rendered text back into executable
form. The grammar deliberately covers only what the renderers produce:
single-level SELECT blocks (optionally nested once in FROM), INSERT INTO,
and the dataset/type/index/load DDL. Anything else is a ParseError.
"""

from __future__ import annotations

import json
import re
from typing import Optional

from . import expr as x
from .blocks import (
    DatasetSource,
    JoinSource,
    SelectAgg,
    SelectBlock,
    SelectGroup,
    SelectItems,
    SelectValue,
    SubquerySource,
)
from .errors import LazyDfError, ParseError
from .memory import MemoryCatalog, execute_block
from .plan import AggFn, SortDir

_KEYWORDS = {
    "select", "value", "from", "where", "group", "by", "order", "limit",
    "as", "join", "on", "and", "or", "not", "asc", "desc", "insert",
    "into", "create", "dataset", "table", "type", "index", "primary",
    "key", "load", "using", "with", "closed", "of", "true", "false",
}

_AGG_NAMES = {"count": AggFn.COUNT, "max": AggFn.MAX, "min": AggFn.MIN}

_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<int>\d+)
      | (?P<sstr>'(?:[^']|'')*')
      | (?P<dstr>"[^"]*")
      | (?P<punct><=|>=|!=|<>|[(),;.*{}:=<>+\-/])
    )""",
    re.X,
)


class _Token:
    __slots__ = ("kind", "text")

    def __init__(self, kind: str, text: str):
        self.kind = kind
        self.text = text

    def __repr__(self):
        return f"{self.kind}:{self.text}"


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].lstrip()
            if not rest:
                break
            raise ParseError(f"cannot tokenize near {rest[:20]!r}")
        pos = m.end()
        for kind in ("ident", "int", "sstr", "dstr", "punct"):
            val = m.group(kind)
            if val is not None:
                tokens.append(_Token(kind, val))
                break
    return tokens


from dataclasses import dataclass


@dataclass(frozen=True)
class _RawName(x.Expr):
    """Bare identifier whose meaning (binding vs column) is only known
    once the FROM clause has been parsed."""

    name: str


def _map_leaves(e: x.Expr, fn) -> x.Expr:
    """Rebuild an expression, replacing leaves; iterative for deep chains."""
    rebuilt: dict[int, x.Expr] = {}
    stack = [(e, False)]
    while stack:
        node, ready = stack.pop()
        if not ready:
            stack.append((node, True))
            for child in node.children():
                stack.append((child, False))
            continue
        if isinstance(node, _RawName):
            rebuilt[id(node)] = fn(node.name)
        elif isinstance(node, x.Compare):
            rebuilt[id(node)] = x.Compare(node.op, rebuilt[id(node.lhs)], rebuilt[id(node.rhs)])
        elif isinstance(node, x.BoolOp):
            rebuilt[id(node)] = x.BoolOp(node.op, rebuilt[id(node.lhs)], rebuilt[id(node.rhs)])
        elif isinstance(node, x.Not):
            rebuilt[id(node)] = x.Not(rebuilt[id(node.operand)])
        elif isinstance(node, x.Arith):
            rebuilt[id(node)] = x.Arith(node.op, rebuilt[id(node.lhs)], rebuilt[id(node.rhs)])
        elif isinstance(node, x.FuncCall):
            rebuilt[id(node)] = x.FuncCall(node.name, tuple(rebuilt[id(a)] for a in node.args))
        else:
            rebuilt[id(node)] = node
    return rebuilt[id(e)]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    def _peek(self) -> Optional[_Token]:
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        return None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of statement")
        self.pos += 1
        return tok

    def _at_keyword(self, *words: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "ident" and tok.text.lower() in words

    def _eat_keyword(self, word: str) -> None:
        tok = self._next()
        if tok.kind != "ident" or tok.text.lower() != word:
            raise ParseError(f"expected {word.upper()}, found {tok.text!r}")

    def _try_keyword(self, word: str) -> bool:
        if self._at_keyword(word):
            self.pos += 1
            return True
        return False

    def _at_punct(self, p: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "punct" and tok.text == p

    def _eat_punct(self, p: str) -> None:
        tok = self._next()
        if tok.kind != "punct" or tok.text != p:
            raise ParseError(f"expected {p!r}, found {tok.text!r}")

    def _try_punct(self, p: str) -> bool:
        if self._at_punct(p):
            self.pos += 1
            return True
        return False

    def _ident(self, allow_keyword: bool = False) -> str:
        tok = self._next()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.text!r}")
        if not allow_keyword and tok.text.lower() in _KEYWORDS:
            raise ParseError(f"unexpected keyword {tok.text!r}")
        return tok.text

    def _int(self) -> int:
        tok = self._next()
        if tok.kind != "int":
            raise ParseError(f"expected integer, found {tok.text!r}")
        return int(tok.text)

    # -- statements ------------------------------------------------------------

    def parse_statement(self):
        if self._at_keyword("select"):
            block = self.parse_select()
            self._finish()
            return ("query", block)
        if self._at_keyword("insert"):
            stmt = self._parse_insert()
            self._finish()
            return stmt
        if self._at_keyword("create"):
            stmt = self._parse_create()
            self._finish()
            return stmt
        if self._at_keyword("load"):
            stmt = self._parse_load()
            self._finish()
            return stmt
        tok = self._peek()
        raise ParseError(f"unsupported statement starting with {tok.text!r}"
                         if tok else "empty statement")

    def _finish(self):
        self._try_punct(";")
        if self._peek() is not None:
            raise ParseError(f"trailing input at {self._peek().text!r}")

    # -- SELECT ------------------------------------------------------------------

    def parse_select(self) -> SelectBlock:
        self._eat_keyword("select")
        items, value_item, star = self._parse_select_clause()

        self._eat_keyword("from")
        source, bindings = self._parse_from()

        where: tuple = ()
        if self._try_keyword("where"):
            where = (self._parse_expr(),)

        group_key = group_alias = None
        if self._try_keyword("group"):
            self._eat_keyword("by")
            group_key = self._parse_expr()
            if self._try_keyword("as"):
                group_alias = self._ident(allow_keyword=True)

        order_by = None
        if self._try_keyword("order"):
            self._eat_keyword("by")
            key = self._parse_expr()
            direction = SortDir.ASC
            if self._try_keyword("desc"):
                direction = SortDir.DESC
            else:
                self._try_keyword("asc")
            order_by = (key, direction)

        limit = None
        if self._try_keyword("limit"):
            limit = self._int()

        resolve = self._resolver(bindings)
        select = self._assemble_select(items, value_item, star, group_key,
                                       group_alias, resolve, bindings)
        where = tuple(resolve(w) for w in where)
        if order_by is not None:
            order_by = (resolve(order_by[0]), order_by[1])

        return SelectBlock(source=source, where=where, select=select,
                           order_by=order_by, limit=limit)

    def _parse_select_clause(self):
        """Returns (items, value_item, star): items is a list of
        ('agg', fn, arg, alias) / ('expr', expr, alias) entries."""
        if self._try_keyword("value"):
            if self._at_agg():
                fn, arg = self._parse_agg_call()
                return [("agg", fn, arg, None)], None, False
            return None, self._parse_expr(), False
        if self._at_punct("*"):
            self._eat_punct("*")
            return None, None, True
        items = []
        while True:
            items.append(self._parse_select_item())
            if not self._try_punct(","):
                break
        return items, None, False

    def _at_agg(self) -> bool:
        tok = self._peek()
        if tok is None or tok.kind != "ident":
            return False
        if tok.text.lower() not in _AGG_NAMES:
            return False
        nxt = self.tokens[self.pos + 1] if self.pos + 1 < len(self.tokens) else None
        return nxt is not None and nxt.kind == "punct" and nxt.text == "("

    def _parse_agg_call(self):
        fn = _AGG_NAMES[self._next().text.lower()]
        self._eat_punct("(")
        if self._try_punct("*"):
            arg = None
        else:
            arg = self._parse_expr()
        self._eat_punct(")")
        return fn, arg

    def _parse_select_item(self):
        if self._at_agg():
            fn, arg = self._parse_agg_call()
            alias = self._ident(allow_keyword=True) if self._try_keyword("as") else None
            return ("agg", fn, arg, alias)
        expr = self._parse_expr()
        alias = self._ident(allow_keyword=True) if self._try_keyword("as") else None
        return ("expr", expr, alias)

    def _resolver(self, bindings):
        def leaf(name: str) -> x.Expr:
            if name in bindings:
                return x.BindingRef(name)
            return x.Column(name)

        def resolve(e: Optional[x.Expr]) -> Optional[x.Expr]:
            if e is None:
                return None
            return _map_leaves(e, leaf)

        return resolve

    def _assemble_select(self, items, value_item, star, group_key,
                         group_alias, resolve, bindings):
        if star:
            if len(bindings) != 1:
                raise ParseError("SELECT * requires a single source")
            return SelectValue(x.BindingRef(bindings[0]))
        if value_item is not None:
            return SelectValue(resolve(value_item))
        if items is None:
            raise ParseError("missing select clause")

        agg_items = [(fn, resolve(arg), alias) for kind, fn, arg, alias in
                     (i for i in items if i[0] == "agg")]
        expr_items = [(resolve(e), alias) for kind, e, alias in
                      (i for i in items if i[0] == "expr")]

        if group_key is not None:
            key = resolve(group_key)
            alias = group_alias
            if alias is None:
                # ANSI shape: the key is a select item carrying the alias.
                for e, a in expr_items:
                    if a is not None and e == key:
                        alias = a
                        break
            if alias is None:
                raise ParseError("GROUP BY requires a key alias")
            if not agg_items:
                raise ParseError("GROUP BY requires aggregate select items")
            aggs = tuple((fn, arg, a) for fn, arg, a in agg_items)
            if any(a is None for _, _, a in aggs):
                raise ParseError("grouped aggregates require AS names")
            return SelectGroup(key, alias, aggs)

        if agg_items:
            if expr_items:
                raise ParseError("cannot mix aggregates and plain items")
            return SelectAgg(tuple(agg_items))

        return SelectItems(tuple(expr_items))

    # -- FROM -----------------------------------------------------------------

    def _parse_from(self):
        left, left_binding = self._parse_source()
        if self._try_keyword("join"):
            right, right_binding = self._parse_source()
            if left_binding is None or right_binding is None:
                raise ParseError("join sides require aliases")
            self._eat_keyword("on")
            on = self._parse_expr()
            lk, rk = self._split_join_keys(on, left_binding, right_binding)
            left_src = self._as_side(left, left_binding)
            right_src = self._as_side(right, right_binding)
            source = JoinSource(left_src, right_src, lk, rk)
            return source, (left_binding, right_binding)
        binding = left_binding if left_binding is not None else "t"
        return self._as_side(left, binding), (binding,)

    def _parse_source(self):
        if self._try_punct("("):
            inner = self.parse_select()
            self._eat_punct(")")
            alias = self._maybe_alias()
            return inner, alias
        name = self._ident()
        if self._try_punct("."):
            name = f"{name}.{self._ident(allow_keyword=True)}"
        return name, self._maybe_alias()

    def _maybe_alias(self) -> Optional[str]:
        tok = self._peek()
        if tok is not None and tok.kind == "ident" and tok.text.lower() not in _KEYWORDS:
            self.pos += 1
            return tok.text
        return None

    def _as_side(self, source, binding: str):
        if isinstance(source, SelectBlock):
            return SubquerySource(source, binding)
        if "." in source:
            dataverse, dataset = source.split(".", 1)
        else:
            dataverse, dataset = None, source
        return DatasetSource(dataverse, dataset, binding)

    def _split_join_keys(self, on: x.Expr, lb: str, rb: str):
        if not (isinstance(on, x.Compare) and on.op == "="):
            raise ParseError("only equality join conditions are supported")

        def side_key(e: x.Expr) -> tuple[str, x.Expr]:
            if isinstance(e, x.QualifiedColumn):
                return e.binding, x.Column(e.name)
            raise ParseError("join keys must be qualified columns")

        lhs_b, lhs = side_key(on.lhs)
        rhs_b, rhs = side_key(on.rhs)
        if lhs_b == lb and rhs_b == rb:
            return lhs, rhs
        if lhs_b == rb and rhs_b == lb:
            return rhs, lhs
        raise ParseError("join keys must reference both sides")

    # -- expressions -------------------------------------------------------------

    def _parse_expr(self) -> x.Expr:
        return self._parse_or()

    def _parse_or(self) -> x.Expr:
        node = self._parse_and()
        while self._try_keyword("or"):
            node = x.BoolOp("OR", node, self._parse_and())
        return node

    def _parse_and(self) -> x.Expr:
        node = self._parse_not()
        while self._try_keyword("and"):
            node = x.BoolOp("AND", node, self._parse_not())
        return node

    def _parse_not(self) -> x.Expr:
        if self._try_keyword("not"):
            return x.Not(self._parse_not())
        return self._parse_comparison()

    def _parse_comparison(self) -> x.Expr:
        node = self._parse_additive()
        tok = self._peek()
        if tok is not None and tok.kind == "punct" and tok.text in ("=", "!=", "<>", "<", "<=", ">", ">="):
            op = "!=" if tok.text == "<>" else tok.text
            self.pos += 1
            node = x.Compare(op, node, self._parse_additive())
        return node

    def _parse_additive(self) -> x.Expr:
        node = self._parse_multiplicative()
        while True:
            if self._at_punct("+"):
                self.pos += 1
                node = x.Arith("+", node, self._parse_multiplicative())
            elif self._at_punct("-"):
                self.pos += 1
                node = x.Arith("-", node, self._parse_multiplicative())
            else:
                return node

    def _parse_multiplicative(self) -> x.Expr:
        node = self._parse_unary()
        while True:
            if self._at_punct("*"):
                self.pos += 1
                node = x.Arith("*", node, self._parse_unary())
            elif self._at_punct("/"):
                self.pos += 1
                node = x.Arith("/", node, self._parse_unary())
            else:
                return node

    def _parse_unary(self) -> x.Expr:
        if self._try_punct("-"):
            operand = self._parse_unary()
            if isinstance(operand, x.Literal) and isinstance(operand.value, int):
                return x.Literal(-operand.value)
            return x.Arith("-", x.Literal(0), operand)
        return self._parse_primary()

    def _parse_primary(self) -> x.Expr:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of expression")
        if tok.kind == "int":
            self.pos += 1
            return x.Literal(int(tok.text))
        if tok.kind == "sstr":
            self.pos += 1
            return x.Literal(tok.text[1:-1].replace("''", "'"))
        if tok.kind == "punct" and tok.text == "(":
            self.pos += 1
            inner = self._parse_expr()
            self._eat_punct(")")
            return inner
        if tok.kind == "ident":
            word = tok.text.lower()
            if word == "true":
                self.pos += 1
                return x.Literal(True)
            if word == "false":
                self.pos += 1
                return x.Literal(False)
            if word in _KEYWORDS and word not in _AGG_NAMES:
                raise ParseError(f"unexpected keyword {tok.text!r} in expression")
            name = tok.text
            self.pos += 1
            if self._try_punct("("):
                args = []
                if not self._at_punct(")"):
                    while True:
                        args.append(self._parse_expr())
                        if not self._try_punct(","):
                            break
                self._eat_punct(")")
                return x.FuncCall(name.lower(), tuple(args))
            if self._try_punct("."):
                field = self._ident(allow_keyword=True)
                return x.QualifiedColumn(name, field)
            return _RawName(name)
        raise ParseError(f"unexpected token {tok.text!r} in expression")

    # -- INSERT / DDL -------------------------------------------------------------

    def _parse_insert(self):
        self._eat_keyword("insert")
        self._eat_keyword("into")
        target = self._qualified_name()
        block = self.parse_select()
        return ("insert", target, block)

    def _qualified_name(self) -> str:
        name = self._ident()
        if self._try_punct("."):
            name = f"{name}.{self._ident(allow_keyword=True)}"
        return name

    def _parse_create(self):
        self._eat_keyword("create")
        if self._try_keyword("dataset") or self._try_keyword("table"):
            name = self._qualified_name()
            type_name = None
            primary_key = None
            if self._try_punct("("):
                if self._try_keyword("primary"):
                    self._eat_keyword("key")
                    self._eat_punct("(")
                    primary_key = self._ident(allow_keyword=True)
                    self._eat_punct(")")
                else:
                    type_name = self._ident(allow_keyword=True)
                self._eat_punct(")")
            if self._try_keyword("of"):
                type_name = self._ident(allow_keyword=True)
            if self._try_punct("("):
                self._eat_keyword("primary")
                self._eat_keyword("key")
                self._eat_punct("(")
                primary_key = self._ident(allow_keyword=True)
                self._eat_punct(")")
                self._eat_punct(")")
            if self._try_keyword("primary"):
                self._eat_keyword("key")
                primary_key = self._ident(allow_keyword=True)
            options = None
            if self._try_keyword("with"):
                options = self._parse_json_object()
            return ("create_dataset", name, type_name, primary_key, options)
        if self._try_keyword("type"):
            name = self._ident()
            self._eat_keyword("as")
            is_open = not self._try_keyword("closed")
            if self._try_punct("("):
                fields = self._parse_ansi_fields()
                is_open = False
            else:
                fields = self._parse_field_block()
            return ("create_type", name, tuple(fields), is_open)
        if self._try_keyword("primary"):
            self._eat_keyword("index")
            self._eat_keyword("on")
            dataset = self._qualified_name()
            return ("create_index", dataset, None, None, True)
        if self._try_keyword("index"):
            name = self._ident()
            self._eat_keyword("on")
            dataset = self._qualified_name()
            self._eat_punct("(")
            field = self._ident(allow_keyword=True)
            self._eat_punct(")")
            return ("create_index", dataset, field, name, False)
        tok = self._peek()
        raise ParseError(f"unsupported CREATE statement near {tok.text!r}"
                         if tok else "truncated CREATE statement")

    def _parse_field_block(self):
        self._eat_punct("{")
        fields = []
        if not self._at_punct("}"):
            while True:
                fname = self._ident(allow_keyword=True)
                self._eat_punct(":")
                ftype = self._ident(allow_keyword=True)
                fields.append((fname, ftype))
                if not self._try_punct(","):
                    break
        self._eat_punct("}")
        return fields

    def _parse_ansi_fields(self):
        reverse_types = {"BIGINT": "int64", "VARCHAR": "string",
                         "BOOLEAN": "boolean"}
        fields = []
        while True:
            fname = self._ident(allow_keyword=True)
            ftype = self._ident(allow_keyword=True).upper()
            if ftype == "DOUBLE":
                self._try_keyword("precision")
                ftype = "double"
            else:
                ftype = reverse_types.get(ftype, "string")
            fields.append((fname, ftype))
            if not self._try_punct(","):
                break
        self._eat_punct(")")
        return fields

    def _parse_json_object(self) -> dict:
        depth = 0
        parts = []
        while True:
            tok = self._next()
            if tok.kind == "punct" and tok.text == "{":
                depth += 1
            elif tok.kind == "punct" and tok.text == "}":
                depth -= 1
            parts.append(tok.text)
            if depth == 0:
                break
        raw = " ".join(parts)
        # Token joining loses the original spacing; JSON does not care.
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad options object: {exc}") from None

    def _parse_load(self):
        self._eat_keyword("load")
        self._eat_keyword("dataset")
        dataset = self._qualified_name()
        self._eat_keyword("using")
        self._ident(allow_keyword=True)  # adapter name, e.g. localfs
        params = {}
        self._eat_punct("(")
        while True:
            self._eat_punct("(")
            key_tok = self._next()
            if key_tok.kind != "dstr":
                raise ParseError("load parameters use double-quoted keys")
            self._eat_punct("=")
            val_tok = self._next()
            if val_tok.kind != "dstr":
                raise ParseError("load parameters use double-quoted values")
            params[key_tok.text[1:-1]] = val_tok.text[1:-1]
            self._eat_punct(")")
            if not self._try_punct(","):
                break
        self._eat_punct(")")
        return ("load", dataset, params)


def parse_statement(text: str):
    """Parse one statement; returns a tagged tuple consumed by execute."""
    return _Parser(text).parse_statement()


def execute_statement(catalog: MemoryCatalog, text: str) -> list:
    """Parse and run a statement against the catalog, returning rows."""
    try:
        stmt = parse_statement(text)
    except RecursionError:
        raise ParseError("statement nests too deeply") from None

    kind = stmt[0]
    if kind == "query":
        return execute_block(catalog, stmt[1])
    if kind == "insert":
        _, target, block = stmt
        rows = execute_block(catalog, block)
        if not all(isinstance(r, dict) for r in rows):
            raise LazyDfError("cannot insert non-record values")
        catalog.load(target, rows)
        return [len(rows)]
    if kind == "create_dataset":
        _, name, type_name, primary_key, _options = stmt
        catalog.create_dataset(name, type_name, primary_key)
        return []
    if kind == "create_type":
        from .dialect import CreateType

        _, name, fields, is_open = stmt
        catalog.create_type(CreateType(name, fields, open=is_open))
        return []
    if kind == "create_index":
        _, dataset, field, _name, primary = stmt
        catalog.create_index(dataset, field, primary)
        return []
    if kind == "load":
        from .wisconsin import read_records

        _, dataset, params = stmt
        path = params.get("path", "")
        # Strip the host prefix of localfs paths like 1.1.1.1:///data.json
        if ":///" in path:
            path = "/" + path.split(":///", 1)[1].lstrip("/")
        if not catalog.has_dataset(dataset):
            catalog.create_dataset(dataset)
        count = catalog.load(dataset, read_records(path))
        return [count]
    raise ParseError(f"unsupported statement kind {kind!r}")
