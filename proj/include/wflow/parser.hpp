#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "wflow/ast.hpp"
#include "wflow/diagnostics.hpp"

namespace wflow {

// Grammar of the workflow DSL (`.wdsl`):
//
//   script    := statement*
//   statement := file_decl | app_call
//   file_decl := "file" IDENT [ "<" STRING ">" ] hint* ";"
//   app_call  := outlist "=" IDENT "(" [ IDENT { "," IDENT } ] ")" hint* ";"
//   outlist   := IDENT | "(" IDENT { "," IDENT } ")"
//   hint      := "@size(" NUMBER UNIT ")"            UNIT in B KB MB GB TB (SI)
//              | "@task(procs=" INT ")"
//              | "@compute_complex(" ("const"|"linear") [ "," NUMBER ] ")"
//              | "@input_output_ratio(" NUMBER ")"
//              | "@location(" IDENT ")"
//
// `#` and `//` start a comment that runs to end of line.

struct ParseResult {
    std::optional<WorkflowAst> ast;  // empty iff diagnostics contain an error
    DiagnosticList diagnostics;      // errors, or warnings on success

    bool ok() const { return ast.has_value(); }
};

ParseResult parse(const SourceScript& source);

// Semantic checks: reference resolution, single producer, sized sources,
// node-name syntax and numeric ranges. Empty result means valid.
DiagnosticList validate(const WorkflowAst& ast);

// Canonical text form; parse(pretty_print(ast)) is structurally equal to ast.
std::string pretty_print(const WorkflowAst& ast);

bool is_identifier(std::string_view text);

// Throws std::runtime_error if the file cannot be read.
SourceScript load_script(const std::filesystem::path& path);

}  // namespace wflow
