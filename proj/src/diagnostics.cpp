#include "wflow/diagnostics.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace wflow {

bool has_errors(const DiagnosticList& diags) {
    return std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

std::string format_diagnostic(const Diagnostic& diag, std::string_view origin) {
    return fmt::format("{}:{}:{}: {}: {}", origin, diag.pos.line, diag.pos.column,
                       diag.severity == Severity::Error ? "error" : "warning", diag.message);
}

}  // namespace wflow
