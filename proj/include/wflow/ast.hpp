#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wflow/diagnostics.hpp"

namespace wflow {

using ByteCount = std::int64_t;

// Simulation and estimate times are integer microseconds throughout.
using SimTime = std::int64_t;
inline constexpr SimTime kMicrosPerSecond = 1'000'000;

inline double to_seconds(SimTime us) { return static_cast<double>(us) / kMicrosPerSecond; }

struct SourceScript {
    std::string text;
    std::string origin = "<inline>";
};

enum class ComplexityForm { Const, Linear };

// Const: `coefficient` seconds. Linear: `coefficient` seconds per MB (10^6 B)
// of total input.
struct ComplexityHint {
    ComplexityForm form = ComplexityForm::Const;
    double coefficient = 1.0;

    bool operator==(const ComplexityHint&) const = default;
};

struct FileDecl {
    std::string name;
    std::optional<std::string> external_path;
    std::optional<ByteCount> size_hint;
    std::optional<std::string> location_hint;
    SourcePos pos;
};

struct AppCall {
    std::vector<std::string> outputs;
    std::string app_name;
    std::vector<std::string> inputs;
    int procs = 1;
    ComplexityHint complexity;
    double io_ratio = 1.0;
    std::optional<std::string> location_hint;
    SourcePos pos;
};

struct WorkflowAst {
    std::vector<FileDecl> file_decls;
    std::vector<AppCall> app_calls;
};

// Equality over everything except source positions.
bool structurally_equal(const FileDecl& a, const FileDecl& b);
bool structurally_equal(const AppCall& a, const AppCall& b);
bool structurally_equal(const WorkflowAst& a, const WorkflowAst& b);

}  // namespace wflow
