"""Grammar-based frontend for a TypeScript-like language (ArkTS, TS, JS).

A small tokenizer plus structural scanning recovers the signature, imports,
namespace, doc-comment annotations, and behavior facts of one function.
Known limitations, acceptable for declaration-style sources: object-literal
type annotations and regex literals containing braces are not understood.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .code_model import MetadataSet, ParameterField
from .errors import ParseFailure

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<line_comment>//[^\n]*)
    | (?P<block_comment>/\*.*?\*/)
    | (?P<string>'(?:\\.|[^'\\\n])*'|"(?:\\.|[^"\\\n])*")
    | (?P<template>`(?:\\.|[^`\\])*`)
    | (?P<number>\d[\w]*(?:\.\d+)?)
    | (?P<ident>[A-Za-z_$][\w$]*)
    | (?P<punct>===|!==|==|!=|<=|>=|=>|\+\+|--|\+=|-=|\*=|/=|%=|&&|\|\||\?\?|\.\.\.|[{}()\[\];,.:?=<>+\-*/%&|^!~@#])
    """,
    re.VERBOSE | re.DOTALL,
)

_KEYWORDS = frozenset(
    "if else for while do try catch finally switch case return function "
    "const let var new typeof instanceof in of break continue throw class "
    "export import declare namespace module async await static public "
    "private protected readonly interface enum extends implements this "
    "default delete void yield".split()
)

_CALLBACK_NAMES = frozenset(
    {"on", "once", "addEventListener", "addListener", "subscribe"}
)

_IO_VERBS = ("read", "write", "open", "close", "print")

_ANNOTATION_RE = re.compile(r"^\s*(@[A-Za-z][\w.]*)\b\s*(.*)$")


@dataclass
class Token:
    kind: str
    text: str
    pos: int

    @property
    def end(self) -> int:
        return self.pos + len(self.text)


def tokenize(source: str) -> list[Token]:
    """Full token stream including comments; whitespace dropped."""
    tokens: list[Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseFailure(
                f"unrecognized or unterminated token at offset {pos}: "
                f"{source[pos:pos + 20]!r}"
            )
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


def _comment_lines(token: Token) -> list[str]:
    text = token.text
    if text.startswith("/*"):
        body = text[2:-2]
        lines = []
        for raw in body.splitlines():
            stripped = raw.strip()
            if stripped.startswith("*"):
                stripped = stripped[1:].strip()
            lines.append(stripped)
        return lines
    return [text[2:].strip()]


def harvest_annotations(tokens: list[Token]) -> dict[str, str]:
    """Collect ``@tag value`` annotations from all comments.

    A value continues over following lines until the next tag; a bare tag
    stores ``"true"``. Later occurrences of a tag override earlier ones.
    """
    annotations: dict[str, str] = {}
    for token in tokens:
        if token.kind not in ("block_comment", "line_comment"):
            continue
        current: str | None = None
        parts: list[str] = []
        for line in _comment_lines(token):
            m = _ANNOTATION_RE.match(line)
            if m:
                if current is not None:
                    annotations[current] = " ".join(parts).strip() or "true"
                current = m.group(1)
                parts = [m.group(2).strip()] if m.group(2).strip() else []
            elif current is not None and line:
                parts.append(line)
        if current is not None:
            annotations[current] = " ".join(parts).strip() or "true"
    return annotations


def _strip_quotes(text: str) -> str:
    return text[1:-1] if len(text) >= 2 else text


def _split_camel(word: str) -> list[str]:
    return re.findall(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+", word)


class TypeScriptLikeFrontend:
    """Parses one function from TypeScript-like source into a metadata set."""

    def parse(self, source: str, file_path: str) -> MetadataSet:
        if not source.strip():
            raise ParseFailure("empty source text")
        all_tokens = tokenize(source)
        annotations = harvest_annotations(all_tokens)
        code = [t for t in all_tokens if t.kind not in ("block_comment", "line_comment")]

        dependency = self._scan_imports(code)
        package_module = self._scan_namespace(code)
        name, params, return_type, body = self._parse_function(code, source)

        skeleton = self._scan_constructs(body)
        io_behavior = self._scan_io(body)
        variable_modification = self._scan_modifications(body, params)

        return MetadataSet(
            function_name=name,
            parameters=params,
            return_type=return_type,
            file_path=file_path,
            package_module=package_module,
            dependency=dependency,
            control_flow_skeleton=skeleton,
            io_behavior=io_behavior,
            variable_modification=variable_modification,
            dmt=annotations,
        )

    def control_flow_skeleton(self, source: str) -> str:
        """Skeleton of a bare statement sequence (no function wrapper needed)."""
        tokens = [
            t for t in tokenize(source)
            if t.kind not in ("block_comment", "line_comment")
        ]
        return self._scan_constructs(tokens)

    # -- structural scanning ------------------------------------------------

    def _scan_imports(self, code: list[Token]) -> list[str]:
        modules: list[str] = []
        for i, t in enumerate(code):
            if t.kind == "ident" and t.text == "import":
                j = i + 1
                while j < len(code) and code[j].text != ";":
                    if code[j].kind == "string":
                        mod = _strip_quotes(code[j].text)
                        if mod and mod not in modules:
                            modules.append(mod)
                        break
                    j += 1
        return modules

    def _scan_namespace(self, code: list[Token]) -> str | None:
        for i, t in enumerate(code):
            if t.kind == "ident" and t.text in ("namespace", "module"):
                j = i + 1
                if j < len(code) and code[j].kind == "string":
                    return _strip_quotes(code[j].text)
                parts: list[str] = []
                while j < len(code) and code[j].text != "{":
                    if code[j].kind == "ident":
                        parts.append(code[j].text)
                    elif code[j].text != ".":
                        break
                    j += 1
                if parts:
                    return ".".join(parts)
        return None

    def _parse_function(
        self, code: list[Token], source: str
    ) -> tuple[str, list[ParameterField], str | None, list[Token]]:
        idx = None
        for i, t in enumerate(code):
            if (
                t.kind == "ident"
                and t.text == "function"
                and i + 1 < len(code)
                and code[i + 1].kind == "ident"
            ):
                idx = i
                break
        if idx is not None:
            name = code[idx + 1].text
            open_paren = idx + 2
            if open_paren >= len(code) or code[open_paren].text != "(":
                raise ParseFailure(f"malformed parameter list for {name!r}")
            params, close = self._parse_params(code, open_paren, source)
            return_type, body_start = self._parse_return_type(code, close + 1, source)
            body = self._parse_body(code, body_start)
            return name, params, return_type, body

        arrow = self._parse_arrow_function(code, source)
        if arrow is not None:
            return arrow
        raise ParseFailure("no function declaration found")

    def _parse_arrow_function(self, code, source):
        # const name = (params): ret => { ... }
        for i, t in enumerate(code):
            if t.kind == "ident" and t.text in ("const", "let", "var"):
                if (
                    i + 2 < len(code)
                    and code[i + 1].kind == "ident"
                    and code[i + 2].text == "="
                    and i + 3 < len(code)
                    and code[i + 3].text == "("
                ):
                    rest = code[i + 4 :]
                    if not any(tok.text == "=>" for tok in rest[:80]):
                        continue
                    name = code[i + 1].text
                    params, close = self._parse_params(code, i + 3, source)
                    return_type, arrow_at = self._parse_return_type(
                        code, close + 1, source, stop_at_arrow=True
                    )
                    if arrow_at >= len(code) or code[arrow_at].text != "=>":
                        continue
                    after = arrow_at + 1
                    if after < len(code) and code[after].text == "{":
                        body = self._parse_body(code, after)
                    else:
                        body = self._expression_tokens(code, after)
                    return name, params, return_type, body
        return None

    def _parse_params(
        self, code: list[Token], open_paren: int, source: str
    ) -> tuple[list[ParameterField], int]:
        depth = 0
        close = None
        for j in range(open_paren, len(code)):
            text = code[j].text
            if text in "([{":
                depth += 1
            elif text in ")]}":
                depth -= 1
                if depth == 0:
                    close = j
                    break
        if close is None:
            raise ParseFailure("unbalanced parameter list")

        groups: list[list[Token]] = [[]]
        depth = 0
        angle = 0
        for tok in code[open_paren + 1 : close]:
            if tok.text in "([{":
                depth += 1
            elif tok.text in ")]}":
                depth -= 1
            elif tok.text == "<":
                angle += 1
            elif tok.text == ">" and angle > 0:
                angle -= 1
            if tok.text == "," and depth == 0 and angle == 0:
                groups.append([])
            else:
                groups[-1].append(tok)

        params = [self._parse_param(g, source) for g in groups if g]
        return params, close

    def _parse_param(self, group: list[Token], source: str) -> ParameterField:
        i = 0
        if group[i].text == "...":
            i += 1
        name = ""
        if i < len(group) and group[i].kind == "ident":
            name = group[i].text
            i += 1
        else:
            # destructuring pattern: skip to its end; name stays empty
            depth = 0
            while i < len(group):
                if group[i].text in "([{":
                    depth += 1
                elif group[i].text in ")]}":
                    depth -= 1
                    if depth == 0:
                        i += 1
                        break
                i += 1
        optional = i < len(group) and group[i].text == "?"
        if optional:
            i += 1
        type_annotation = None
        default_value = None
        if i < len(group) and group[i].text == ":":
            i += 1
            start = i
            depth = 0
            while i < len(group):
                text = group[i].text
                if text in "([{<":
                    depth += 1
                elif text in ")]}>":
                    depth -= 1
                elif text == "=" and depth == 0:
                    break
                i += 1
            if i > start:
                type_annotation = source[group[start].pos : group[i - 1].end].strip()
        if i < len(group) and group[i].text == "=":
            i += 1
            if i < len(group):
                default_value = source[group[i].pos : group[-1].end].strip()
                i = len(group)
        if optional and type_annotation:
            type_annotation = "?" + type_annotation
        if not name and type_annotation is None:
            raise ParseFailure("parameter with neither name nor type annotation")
        return ParameterField(name, type_annotation, default_value)

    def _parse_return_type(
        self, code: list[Token], start: int, source: str, stop_at_arrow: bool = False
    ) -> tuple[str | None, int]:
        i = start
        if i < len(code) and code[i].text == ":":
            i += 1
            type_start = i
            depth = 0
            while i < len(code):
                text = code[i].text
                if text in "([<":
                    depth += 1
                elif text in ")]>":
                    depth -= 1
                elif depth == 0 and (text == "{" or text == ";" or text == "=>"):
                    break
                i += 1
            if i > type_start:
                annotation = source[code[type_start].pos : code[i - 1].end].strip()
                return annotation or None, i
        return None, i

    def _parse_body(self, code: list[Token], start: int) -> list[Token]:
        if start >= len(code) or code[start].text != "{":
            # declaration without a body
            if start < len(code) and code[start].text == ";":
                return []
            return []
        depth = 0
        for j in range(start, len(code)):
            if code[j].text == "{":
                depth += 1
            elif code[j].text == "}":
                depth -= 1
                if depth == 0:
                    return code[start + 1 : j]
        raise ParseFailure("unbalanced braces in function body")

    def _expression_tokens(self, code: list[Token], start: int) -> list[Token]:
        depth = 0
        for j in range(start, len(code)):
            text = code[j].text
            if text in "([{":
                depth += 1
            elif text in ")]}":
                if depth == 0:
                    return code[start:j]
                depth -= 1
            elif text == ";" and depth == 0:
                return code[start:j]
        return code[start:]

    def _scan_constructs(self, body: list[Token]) -> str:
        labels: list[str] = []
        do_depth = 0
        for i, t in enumerate(body):
            prev = body[i - 1] if i > 0 else None
            nxt = body[i + 1] if i + 1 < len(body) else None
            if t.kind == "ident":
                if t.text == "if":
                    if not (prev is not None and prev.text == "else"):
                        labels.append("conditional")
                elif t.text == "for":
                    labels.append("loop")
                elif t.text == "do":
                    labels.append("loop")
                    do_depth += 1
                elif t.text == "while":
                    if do_depth > 0 and prev is not None and prev.text == "}":
                        do_depth -= 1
                    else:
                        labels.append("loop")
                elif t.text == "try":
                    labels.append("try")
                elif t.text == "switch":
                    labels.append("switch")
                elif t.text == "return":
                    labels.append("return statement")
                elif (
                    t.text in _CALLBACK_NAMES
                    and nxt is not None
                    and nxt.text == "("
                ):
                    labels.append("callback registration")
        return "; ".join(labels)

    def _scan_io(self, body: list[Token]) -> str | None:
        found: list[str] = []
        for t in body:
            if t.kind != "ident" or t.text in _KEYWORDS:
                continue
            segments = {s.lower() for s in _split_camel(t.text)}
            for verb in _IO_VERBS:
                if verb in segments and verb not in found:
                    found.append(verb)
        return "; ".join(found) if found else None

    def _scan_modifications(
        self, body: list[Token], params: list[ParameterField]
    ) -> str | None:
        locals_ = {p.name for p in params if p.name}
        collecting = False
        in_initializer = False
        decl_depth = 0
        depth = 0
        for t in body:
            if t.text in "([{":
                depth += 1
            elif t.text in ")]}":
                depth -= 1
            if t.kind == "ident" and t.text in ("let", "const", "var"):
                collecting = True
                in_initializer = False
                decl_depth = depth
                continue
            if not collecting:
                continue
            if in_initializer:
                # `let i = 0, j = 1;`: resume collecting at the declarator comma
                if depth == decl_depth and t.text == ",":
                    in_initializer = False
                elif depth <= decl_depth and t.text == ";":
                    collecting = False
            else:
                if t.kind == "ident" and t.text not in _KEYWORDS:
                    locals_.add(t.text)
                elif t.text == "=":
                    in_initializer = True
                elif t.text in (";", "of", "in"):
                    collecting = False

        assign_ops = {"=", "+=", "-=", "*=", "/=", "%="}
        targets: list[str] = []

        def chain_before(index: int) -> tuple[str | None, int]:
            # walk (ident|this)(.ident)* ending right before `index`
            j = index - 1
            parts: list[str] = []
            while j >= 0:
                tok = body[j]
                if tok.kind == "ident" and (tok.text not in _KEYWORDS or tok.text == "this"):
                    parts.insert(0, tok.text)
                    if j - 1 >= 0 and body[j - 1].text == ".":
                        j -= 2
                        continue
                    return ".".join(parts), j
                return (".".join(parts) if parts else None), j + 1
            return (".".join(parts) if parts else None), 0

        for i, t in enumerate(body):
            lhs = None
            if t.text in assign_ops and t.kind == "punct":
                lhs, start = chain_before(i)
                if lhs and start - 1 >= 0 and body[start - 1].text in ("let", "const", "var"):
                    lhs = None
            elif t.text in ("++", "--"):
                lhs, _ = chain_before(i)
                if lhs is None and i + 1 < len(body) and body[i + 1].kind == "ident":
                    lhs = body[i + 1].text
            if lhs:
                base = lhs.split(".", 1)[0]
                if base != "this" and base in locals_:
                    continue
                if base in _KEYWORDS and base != "this":
                    continue
                if lhs not in targets:
                    targets.append(lhs)
        return ", ".join(targets) if targets else None
