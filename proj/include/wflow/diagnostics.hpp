#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wflow {

enum class Severity { Error, Warning };

struct SourcePos {
    int line = 0;
    int column = 0;

    bool operator==(const SourcePos&) const = default;
};

struct Diagnostic {
    Severity severity = Severity::Error;
    SourcePos pos;
    std::string message;

    bool operator==(const Diagnostic&) const = default;
};

using DiagnosticList = std::vector<Diagnostic>;

bool has_errors(const DiagnosticList& diags);

// `origin:line:col: severity: message`
std::string format_diagnostic(const Diagnostic& diag, std::string_view origin);

}  // namespace wflow
