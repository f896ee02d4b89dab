import pytest

from expsum.errors import ParseFailure
from expsum.frontends import TypeScriptLikeFrontend, harvest_annotations, tokenize


@pytest.fixture
def frontend():
    return TypeScriptLikeFrontend()


class TestTokenizer:
    def test_strings_and_comments_are_atomic(self):
        tokens = tokenize("f('a;b') /* x { */ // tail\n g")
        kinds = [t.kind for t in tokens]
        assert kinds == ["ident", "punct", "string", "punct", "block_comment",
                         "line_comment", "ident"]

    def test_unterminated_string_fails(self):
        with pytest.raises(ParseFailure):
            tokenize("let s = 'oops")

    def test_multi_char_operators(self):
        texts = [t.text for t in tokenize("a === b != c += 1")]
        assert texts == ["a", "===", "b", "!=", "c", "+=", "1"]


class TestAnnotations:
    def test_block_comment_tags(self):
        tokens = tokenize("/**\n * @since API version 9\n * @deprecated\n */")
        tags = harvest_annotations(tokens)
        assert tags == {"@since": "API version 9", "@deprecated": "true"}

    def test_multiline_tag_value(self):
        tokens = tokenize(
            "/**\n * @officialdoc Monitor power consumption.\n"
            " * Frequent invocation may increase overhead.\n * @since 9\n */"
        )
        tags = harvest_annotations(tokens)
        assert tags["@officialdoc"] == (
            "Monitor power consumption. Frequent invocation may increase overhead."
        )
        assert tags["@since"] == "9"


class TestSignatureParsing:
    def test_optional_and_default_params(self, frontend):
        m = frontend.parse(
            "function f(a: string[], b?: number, c: number = 0): void {}", "f.ts"
        )
        assert [(p.name, p.type_annotation, p.default_value) for p in m.parameters] == [
            ("a", "string[]", None),
            ("b", "?number", None),
            ("c", "number", "0"),
        ]

    def test_destructured_param_has_empty_name(self, frontend):
        m = frontend.parse("function f({a, b}: Options): void {}", "f.ts")
        assert m.parameters[0].name == ""
        assert m.parameters[0].type_annotation == "Options"

    def test_generic_param_types_keep_commas(self, frontend):
        m = frontend.parse("function f(m: Map<string, number>, x: number) {}", "f.ts")
        assert [p.name for p in m.parameters] == ["m", "x"]
        assert m.parameters[0].type_annotation == "Map<string, number>"

    def test_rest_param(self, frontend):
        m = frontend.parse("function f(...items: string[]) {}", "f.ts")
        assert m.parameters[0].name == "items"

    def test_declaration_without_body(self, frontend):
        m = frontend.parse("declare function f(x: number): string;", "f.ts")
        assert m.function_name == "f"
        assert m.control_flow_skeleton == ""

    def test_arrow_function(self, frontend):
        m = frontend.parse(
            "export const toHex = (value: number): string => { return value.toString(16); };",
            "f.ts",
        )
        assert m.function_name == "toHex"
        assert m.return_type == "string"
        assert m.control_flow_skeleton == "return statement"

    def test_unbalanced_body_fails(self, frontend):
        with pytest.raises(ParseFailure):
            frontend.parse("function f() { if (x) {", "f.ts")

    def test_no_function_fails(self, frontend):
        with pytest.raises(ParseFailure):
            frontend.parse("const x = 1;", "f.ts")


class TestImportsAndNamespace:
    def test_import_forms(self, frontend):
        source = """
        import def from 'mod.a';
        import {x, y} from "mod.b";
        import * as ns from 'mod.c';
        import 'mod.d';
        function f() {}
        """
        m = frontend.parse(source, "f.ts")
        assert m.dependency == ["mod.a", "mod.b", "mod.c", "mod.d"]

    def test_quoted_module_declaration(self, frontend):
        m = frontend.parse('declare module "ohos.wifi" { function f() {} }', "f.ts")
        assert m.package_module == "ohos.wifi"

    def test_no_namespace(self, frontend):
        assert frontend.parse("function f() {}", "f.ts").package_module is None


class TestBehaviorScanning:
    def test_do_while_counts_once(self, frontend):
        skeleton = frontend.control_flow_skeleton("do { step(); } while (busy);")
        assert skeleton == "loop"

    def test_callback_registration_via_property(self, frontend):
        skeleton = frontend.control_flow_skeleton("emitter.on('x', handler);")
        assert skeleton == "callback registration"

    def test_io_families(self, frontend):
        m = frontend.parse(
            "function sync() { readFileSync(p); fs.writeFile(p, d); printLine(s); }",
            "f.ts",
        )
        assert m.io_behavior == "read; write; print"

    def test_local_assignments_not_reported(self, frontend):
        m = frontend.parse(
            "function f(n: number) { let i = 0; i += n; this.total = n; cache.hits++; }",
            "f.ts",
        )
        assert m.variable_modification == "this.total, cache.hits"

    def test_multi_declarator_statement_declares_all_names(self, frontend):
        m = frontend.parse(
            "function f() { let i = 0, j = 1; j = 2; i += 1; total = i + j; }",
            "f.ts",
        )
        assert m.variable_modification == "total"

    def test_compound_assignment_to_nonlocal(self, frontend):
        m = frontend.parse("function f() { counter += 1; }", "f.ts")
        assert m.variable_modification == "counter"

    def test_comparisons_are_not_assignments(self, frontend):
        m = frontend.parse("function f(x: number) { if (x == limit) { g(); } }", "f.ts")
        assert m.variable_modification is None
