#include <gtest/gtest.h>

#include <random>

#include "support/generators.hpp"
#include "wflow/parser.hpp"

using namespace wflow;

namespace {

WorkflowAst parse_ok(const std::string& text) {
    ParseResult r = parse({text});
    EXPECT_TRUE(r.ok()) << (r.diagnostics.empty() ? "" : r.diagnostics.front().message);
    return r.ast.value_or(WorkflowAst{});
}

std::vector<std::string> messages(const DiagnosticList& diags, Severity sev = Severity::Error) {
    std::vector<std::string> out;
    for (const auto& d : diags) {
        if (d.severity == sev) out.push_back(d.message);
    }
    return out;
}

}  // namespace

TEST(Parse, EmptyInput) {
    WorkflowAst ast = parse_ok("");
    EXPECT_TRUE(ast.file_decls.empty());
    EXPECT_TRUE(ast.app_calls.empty());
}

TEST(Parse, TwoStatementExample) {
    WorkflowAst ast = parse_ok(
        "file a <\"in.dat\"> @size(100 MB); b = f(a) @compute_complex(linear, 0.5) @input_output_ratio(0.1);");
    ASSERT_EQ(ast.file_decls.size(), 1u);
    ASSERT_EQ(ast.app_calls.size(), 1u);
    const FileDecl& a = ast.file_decls[0];
    EXPECT_EQ(a.name, "a");
    EXPECT_EQ(a.external_path, "in.dat");
    EXPECT_EQ(a.size_hint, 100'000'000);
    const AppCall& b = ast.app_calls[0];
    EXPECT_EQ(b.outputs, std::vector<std::string>{"b"});
    EXPECT_EQ(b.app_name, "f");
    EXPECT_EQ(b.inputs, std::vector<std::string>{"a"});
    EXPECT_EQ(b.complexity.form, ComplexityForm::Linear);
    EXPECT_DOUBLE_EQ(b.complexity.coefficient, 0.5);
    EXPECT_DOUBLE_EQ(b.io_ratio, 0.1);
    EXPECT_EQ(b.procs, 1);
    EXPECT_TRUE(validate(ast).empty());
}

TEST(Parse, SiUnits) {
    WorkflowAst ast = parse_ok("file a @size(3 B); file b @size(2 KB); file c @size(1.5 GB); file d @size(1 TB);");
    EXPECT_EQ(ast.file_decls[0].size_hint, 3);
    EXPECT_EQ(ast.file_decls[1].size_hint, 2'000);
    EXPECT_EQ(ast.file_decls[2].size_hint, 1'500'000'000);
    EXPECT_EQ(ast.file_decls[3].size_hint, 1'000'000'000'000);
}

TEST(Parse, DefaultsAndWarning) {
    ParseResult r = parse({"file a @size(1 MB);\nb = f(a);"});
    ASSERT_TRUE(r.ok());
    const AppCall& call = r.ast->app_calls[0];
    EXPECT_EQ(call.procs, 1);
    EXPECT_DOUBLE_EQ(call.io_ratio, 1.0);
    EXPECT_EQ(call.complexity, (ComplexityHint{ComplexityForm::Const, 1.0}));
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_EQ(r.diagnostics[0].severity, Severity::Warning);
    EXPECT_EQ(r.diagnostics[0].pos, (SourcePos{2, 1}));
}

TEST(Parse, MissingCoefficientDefaultsToOne) {
    WorkflowAst ast = parse_ok("b = f() @compute_complex(linear);");
    EXPECT_EQ(ast.app_calls[0].complexity, (ComplexityHint{ComplexityForm::Linear, 1.0}));
}

TEST(Parse, MultipleOutputsTaskAndLocation) {
    WorkflowAst ast = parse_ok("(x, y) = split(a, b) @task(procs=4) @location(n2) @compute_complex(const, 3);");
    const AppCall& call = ast.app_calls[0];
    EXPECT_EQ(call.outputs, (std::vector<std::string>{"x", "y"}));
    EXPECT_EQ(call.inputs, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(call.procs, 4);
    EXPECT_EQ(call.location_hint, "n2");
}

TEST(Parse, CommentsAndFileNamedOutput) {
    WorkflowAst ast = parse_ok("# header\nfile = f() @compute_complex(const, 1); // trailing\n");
    ASSERT_EQ(ast.app_calls.size(), 1u);
    EXPECT_EQ(ast.app_calls[0].outputs.front(), "file");
}

TEST(ParseErrors, UnterminatedStatement) {
    ParseResult r = parse({"file a @size(1 MB)"});
    EXPECT_FALSE(r.ok());
    ASSERT_EQ(r.diagnostics.size(), 1u);
    EXPECT_NE(r.diagnostics[0].message.find("unterminated statement"), std::string::npos);
}

TEST(ParseErrors, UnknownHint) {
    ParseResult r = parse({"b = f(a) @speed(3);"});
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(messages(r.diagnostics), std::vector<std::string>{"unknown hint name '@speed'"});
    EXPECT_EQ(r.diagnostics[0].pos, (SourcePos{1, 10}));
}

TEST(ParseErrors, MalformedSize) {
    for (const char* text : {"file a @size(MB);", "file a @size(10 XB);", "file a @size(10);", "file a @size(0 MB);"}) {
        ParseResult r = parse({text});
        EXPECT_FALSE(r.ok()) << text;
        ASSERT_FALSE(r.diagnostics.empty()) << text;
    }
    EXPECT_NE(parse({"file a @size(10 XB);"}).diagnostics[0].message.find("malformed size literal"), std::string::npos);
}

TEST(ParseErrors, DuplicateHint) {
    ParseResult r = parse({"b = f(a) @input_output_ratio(1) @input_output_ratio(2);"});
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(messages(r.diagnostics), std::vector<std::string>{"duplicate hint '@input_output_ratio'"});
}

TEST(ParseErrors, UnknownTaskParameter) {
    ParseResult r = parse({"b = f(a) @task(threads=2);"});
    EXPECT_FALSE(r.ok());
    EXPECT_EQ(messages(r.diagnostics), std::vector<std::string>{"unknown @task parameter 'threads'"});
}

TEST(ParseErrors, RecoversAndReportsEachStatement) {
    ParseResult r = parse({"b = f(a) @bogus(1);\nfile c @size(1 ZB);\nd = g(b);"});
    EXPECT_FALSE(r.ok());
    auto errs = messages(r.diagnostics);
    ASSERT_EQ(errs.size(), 2u);
    EXPECT_EQ(r.diagnostics[0].pos.line, 1);
    EXPECT_EQ(r.diagnostics[1].pos.line, 2);
}

TEST(ParseErrors, DiagnosticFormat) {
    ParseResult r = parse({"b = f(a) @speed(3);", "wf.wdsl"});
    EXPECT_EQ(format_diagnostic(r.diagnostics[0], "wf.wdsl"), "wf.wdsl:1:10: error: unknown hint name '@speed'");
}

TEST(Validate, UndefinedInput) {
    WorkflowAst ast = parse_ok("b = f(a) @compute_complex(const, 1);");
    EXPECT_EQ(messages(validate(ast)), std::vector<std::string>{"undefined input 'a'"});
}

TEST(Validate, SourceMissingSize) {
    WorkflowAst ast = parse_ok("file a; b = f(a) @compute_complex(const, 1);");
    EXPECT_EQ(messages(validate(ast)), std::vector<std::string>{"source file 'a' missing @size hint"});
}

TEST(Validate, ProducedFileNeedsNoSize) {
    WorkflowAst ast = parse_ok("file a @size(1 MB); file b <\"out.dat\">; b = f(a) @compute_complex(const, 1);");
    EXPECT_TRUE(validate(ast).empty());
}

TEST(Validate, MultipleProducers) {
    WorkflowAst ast =
        parse_ok("file a @size(1 MB); b = f(a) @compute_complex(const, 1); b = g(a) @compute_complex(const, 1);");
    EXPECT_EQ(messages(validate(ast)), std::vector<std::string>{"identifier 'b' has multiple producers"});
}

TEST(Validate, DuplicateDeclarationAndInput) {
    WorkflowAst ast = parse_ok("file a @size(1 MB); file a @size(2 MB); b = f(a, a) @compute_complex(const, 1);");
    auto errs = messages(validate(ast));
    ASSERT_EQ(errs.size(), 2u);
    EXPECT_EQ(errs[0], "duplicate declaration of file 'a'");
    EXPECT_EQ(errs[1], "input 'a' listed more than once in call to 'f'");
}

TEST(Validate, ProgrammaticAstRanges) {
    WorkflowAst ast;
    ast.file_decls.push_back({"a", {}, 10, std::string("bad node"), {}});
    AppCall call;
    call.outputs = {"b"};
    call.app_name = "f";
    call.inputs = {"a"};
    call.procs = 0;
    call.io_ratio = -1;
    ast.app_calls.push_back(call);
    EXPECT_EQ(validate(ast).size(), 3u);
}

TEST(ParseProperties, TotalityOnRandomBytes) {
    std::mt19937_64 rng(7);
    const std::string alphabet = "file=();,<>\"@ sizeMBKtaskprocs01234.5linearconst\n#\\\x01\xff";
    for (int i = 0; i < 2000; ++i) {
        std::string text;
        int len = std::uniform_int_distribution<int>(0, 80)(rng);
        for (int j = 0; j < len; ++j) {
            text += i % 2 ? alphabet[rng() % alphabet.size()] : static_cast<char>(rng() % 256);
        }
        ParseResult r = parse({text});
        EXPECT_EQ(r.ok(), !has_errors(r.diagnostics));
        for (const auto& d : r.diagnostics) {
            EXPECT_GE(d.pos.line, 1);
            EXPECT_GE(d.pos.column, 1);
        }
    }
}

TEST(ParseProperties, RoundTripGeneratedScripts) {
    wflow::testing::Rng rng(11);
    for (int i = 0; i < 300; ++i) {
        wflow::testing::WorkflowShape shape;
        shape.max_procs = 3;
        WorkflowAst ast = wflow::testing::random_workflow(rng, shape);
        if (i % 3 == 0) ast.file_decls.front().external_path = "dir/with \"quotes\"\\x.dat";
        if (i % 4 == 0) ast.app_calls.front().location_hint = "n1";
        std::string text = pretty_print(ast);
        ParseResult r = parse({text});
        ASSERT_TRUE(r.ok()) << text;
        EXPECT_TRUE(structurally_equal(ast, *r.ast)) << text;
        EXPECT_EQ(pretty_print(*r.ast), text);
    }
}

TEST(ParseProperties, Deterministic) {
    const std::string text = "file a @size(1 XB);\nb = f(a) @nope(1);\nc = g(b)";
    ParseResult r1 = parse({text});
    ParseResult r2 = parse({text});
    EXPECT_EQ(r1.diagnostics, r2.diagnostics);
}
