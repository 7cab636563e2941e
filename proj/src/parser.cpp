#include "wflow/parser.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace wflow {

namespace {

enum class Tok { Ident, String, Number, Semi, Comma, LParen, RParen, Less, Greater, Equals, At, End, Invalid };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    SourcePos pos;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    std::vector<Token> run(DiagnosticList& diags) {
        std::vector<Token> out;
        for (;;) {
            skip_space_and_comments();
            Token tok;
            tok.pos = {line_, col_};
            if (at_end()) {
                tok.kind = Tok::End;
                out.push_back(tok);
                return out;
            }
            char c = peek();
            if (ident_start(c)) {
                tok.kind = Tok::Ident;
                while (!at_end() && ident_char(peek())) tok.text += advance();
            } else if (digit(c)) {
                tok.kind = Tok::Number;
                lex_number(tok);
            } else if (c == '"') {
                lex_string(tok, diags);
            } else {
                advance();
                tok.text = std::string(1, c);
                switch (c) {
                    case ';': tok.kind = Tok::Semi; break;
                    case ',': tok.kind = Tok::Comma; break;
                    case '(': tok.kind = Tok::LParen; break;
                    case ')': tok.kind = Tok::RParen; break;
                    case '<': tok.kind = Tok::Less; break;
                    case '>': tok.kind = Tok::Greater; break;
                    case '=': tok.kind = Tok::Equals; break;
                    case '@': tok.kind = Tok::At; break;
                    default:
                        tok.kind = Tok::Invalid;
                        if (std::isprint(static_cast<unsigned char>(c))) {
                            diags.push_back({Severity::Error, tok.pos, fmt::format("unexpected character '{}'", c)});
                        } else {
                            diags.push_back({Severity::Error, tok.pos,
                                             fmt::format("unexpected byte 0x{:02x}", static_cast<unsigned char>(c))});
                        }
                }
            }
            out.push_back(std::move(tok));
        }
    }

private:
    bool at_end() const { return i_ >= text_.size(); }
    char peek(std::size_t ahead = 0) const { return i_ + ahead < text_.size() ? text_[i_ + ahead] : '\0'; }

    char advance() {
        char c = text_[i_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space_and_comments() {
        while (!at_end()) {
            char c = peek();
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#' || (c == '/' && peek(1) == '/')) {
                while (!at_end() && peek() != '\n') advance();
            } else {
                return;
            }
        }
    }

    void lex_number(Token& tok) {
        while (!at_end() && digit(peek())) tok.text += advance();
        if (peek() == '.' && digit(peek(1))) {
            tok.text += advance();
            while (!at_end() && digit(peek())) tok.text += advance();
        }
        if ((peek() == 'e' || peek() == 'E') &&
            (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
            tok.text += advance();
            if (peek() == '+' || peek() == '-') tok.text += advance();
            while (!at_end() && digit(peek())) tok.text += advance();
        }
    }

    void lex_string(Token& tok, DiagnosticList& diags) {
        advance();  // opening quote
        for (;;) {
            if (at_end() || peek() == '\n') {
                tok.kind = Tok::Invalid;
                diags.push_back({Severity::Error, tok.pos, "unterminated string literal"});
                return;
            }
            char c = advance();
            if (c == '"') break;
            if (c == '\\' && (peek() == '"' || peek() == '\\')) c = advance();
            tok.text += c;
        }
        tok.kind = Tok::String;
    }

    std::string_view text_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;
};

struct SyntaxError {
    SourcePos pos;
    std::string message;
};

const std::map<std::string, ByteCount, std::less<>> kUnits = {
    {"B", 1}, {"KB", 1'000}, {"MB", 1'000'000}, {"GB", 1'000'000'000}, {"TB", 1'000'000'000'000}};

class Parser {
public:
    Parser(std::vector<Token> tokens, DiagnosticList& diags) : toks_(std::move(tokens)), diags_(diags) {}

    WorkflowAst run() {
        WorkflowAst ast;
        while (cur().kind != Tok::End) {
            std::size_t start = i_;
            try {
                statement(ast);
            } catch (const SyntaxError& err) {
                diags_.push_back({Severity::Error, err.pos, err.message});
                recover();
            }
            if (i_ == start) ++i_;  // guarantee progress
        }
        return ast;
    }

private:
    const Token& cur() const { return toks_[std::min(i_, toks_.size() - 1)]; }
    const Token& peek_tok(std::size_t ahead) const { return toks_[std::min(i_ + ahead, toks_.size() - 1)]; }

    [[noreturn]] void fail(const Token& at, std::string message) const {
        if (at.kind == Tok::End) throw SyntaxError{at.pos, "unterminated statement (missing ';')"};
        throw SyntaxError{at.pos, std::move(message)};
    }

    const Token& expect(Tok kind, std::string_view what) {
        const Token& t = cur();
        if (t.kind != kind) fail(t, fmt::format("expected {}, found {}", what, describe(t)));
        ++i_;
        return t;
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Tok::End: return "end of input";
            case Tok::Ident: return fmt::format("'{}'", t.text);
            case Tok::String: return "string literal";
            case Tok::Number: return fmt::format("number {}", t.text);
            default: return fmt::format("'{}'", t.text);
        }
    }

    void recover() {
        while (cur().kind != Tok::End && cur().kind != Tok::Semi) ++i_;
        if (cur().kind == Tok::Semi) ++i_;
    }

    void statement(WorkflowAst& ast) {
        const Token& first = cur();
        if (first.kind == Tok::Ident && first.text == "file" && peek_tok(1).kind == Tok::Ident) {
            ast.file_decls.push_back(file_decl());
        } else {
            ast.app_calls.push_back(app_call());
        }
    }

    FileDecl file_decl() {
        FileDecl decl;
        decl.pos = cur().pos;
        ++i_;  // "file"
        decl.name = expect(Tok::Ident, "file name").text;
        if (cur().kind == Tok::Less) {
            ++i_;
            decl.external_path = expect(Tok::String, "quoted path").text;
            expect(Tok::Greater, "'>'");
        }
        std::set<std::string> seen;
        while (cur().kind == Tok::At) {
            const Token& at = cur();
            ++i_;
            const Token& name = expect(Tok::Ident, "hint name");
            if (!seen.insert(name.text).second) fail(at, fmt::format("duplicate hint '@{}'", name.text));
            expect(Tok::LParen, "'('");
            if (name.text == "size") {
                decl.size_hint = size_literal(at);
            } else if (name.text == "location") {
                decl.location_hint = expect(Tok::Ident, "node name").text;
            } else if (is_app_hint(name.text)) {
                fail(at, fmt::format("hint '@{}' is not allowed on a file declaration", name.text));
            } else {
                fail(at, fmt::format("unknown hint name '@{}'", name.text));
            }
            expect(Tok::RParen, "')'");
        }
        expect(Tok::Semi, "';'");
        return decl;
    }

    static bool is_app_hint(const std::string& name) {
        return name == "task" || name == "compute_complex" || name == "input_output_ratio";
    }

    ByteCount size_literal(const Token& at) {
        const Token& num = cur();
        const Token& unit = peek_tok(1);
        if (num.kind != Tok::Number || unit.kind != Tok::Ident || peek_tok(2).kind != Tok::RParen) {
            fail(num.kind == Tok::End ? num : at, "malformed size literal (expected '<number> <B|KB|MB|GB|TB>')");
        }
        auto it = kUnits.find(unit.text);
        if (it == kUnits.end()) fail(unit, fmt::format("malformed size literal: unknown unit '{}'", unit.text));
        double value = std::strtod(num.text.c_str(), nullptr);
        double bytes = value * static_cast<double>(it->second);
        if (!std::isfinite(bytes) || bytes >= 9.0e18) fail(num, "malformed size literal: value out of range");
        auto rounded = static_cast<ByteCount>(std::llround(bytes));
        if (rounded <= 0) fail(num, "@size must be positive");
        i_ += 2;
        return rounded;
    }

    double number(std::string_view what) {
        const Token& t = expect(Tok::Number, what);
        double v = std::strtod(t.text.c_str(), nullptr);
        if (!std::isfinite(v)) fail(t, fmt::format("{} out of range", what));
        return v;
    }

    AppCall app_call() {
        AppCall call;
        call.pos = cur().pos;
        if (cur().kind == Tok::LParen) {
            ++i_;
            call.outputs.push_back(expect(Tok::Ident, "output name").text);
            while (cur().kind == Tok::Comma) {
                ++i_;
                call.outputs.push_back(expect(Tok::Ident, "output name").text);
            }
            expect(Tok::RParen, "')'");
        } else {
            call.outputs.push_back(expect(Tok::Ident, "statement").text);
        }
        expect(Tok::Equals, "'='");
        call.app_name = expect(Tok::Ident, "app name").text;
        expect(Tok::LParen, "'('");
        if (cur().kind != Tok::RParen) {
            call.inputs.push_back(expect(Tok::Ident, "input name").text);
            while (cur().kind == Tok::Comma) {
                ++i_;
                call.inputs.push_back(expect(Tok::Ident, "input name").text);
            }
        }
        expect(Tok::RParen, "')'");

        std::set<std::string> seen;
        while (cur().kind == Tok::At) {
            const Token& at = cur();
            ++i_;
            const Token& name = expect(Tok::Ident, "hint name");
            if (!seen.insert(name.text).second) fail(at, fmt::format("duplicate hint '@{}'", name.text));
            expect(Tok::LParen, "'('");
            if (name.text == "task") {
                const Token& key = expect(Tok::Ident, "@task parameter");
                if (key.text != "procs") fail(key, fmt::format("unknown @task parameter '{}'", key.text));
                expect(Tok::Equals, "'='");
                const Token& n = expect(Tok::Number, "process count");
                bool integral = n.text.find_first_not_of("0123456789") == std::string::npos;
                long value = integral && n.text.size() <= 9 ? std::strtol(n.text.c_str(), nullptr, 10) : -1;
                if (value < 1) fail(n, "@task procs must be a positive integer");
                call.procs = static_cast<int>(value);
            } else if (name.text == "compute_complex") {
                const Token& form = expect(Tok::Ident, "'const' or 'linear'");
                if (form.text == "const") {
                    call.complexity.form = ComplexityForm::Const;
                } else if (form.text == "linear") {
                    call.complexity.form = ComplexityForm::Linear;
                } else {
                    fail(form, fmt::format("malformed @compute_complex: unknown form '{}'", form.text));
                }
                call.complexity.coefficient = 1.0;
                if (cur().kind == Tok::Comma) {
                    ++i_;
                    call.complexity.coefficient = number("complexity coefficient");
                }
            } else if (name.text == "input_output_ratio") {
                call.io_ratio = number("input/output ratio");
            } else if (name.text == "location") {
                call.location_hint = expect(Tok::Ident, "node name").text;
            } else if (name.text == "size") {
                fail(at, "hint '@size' is not allowed on an app call");
            } else {
                fail(at, fmt::format("unknown hint name '@{}'", name.text));
            }
            expect(Tok::RParen, "')'");
        }
        expect(Tok::Semi, "';'");
        if (!seen.contains("compute_complex")) {
            diags_.push_back({Severity::Warning, call.pos,
                              fmt::format("call to '{}' has no @compute_complex hint; assuming const 1.0 s",
                                          call.app_name)});
        }
        return call;
    }

    std::vector<Token> toks_;
    std::size_t i_ = 0;
    DiagnosticList& diags_;
};

std::string format_number(double v) { return fmt::format("{}", v); }

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

}  // namespace

bool is_identifier(std::string_view text) {
    if (text.empty() || !ident_start(text.front())) return false;
    for (char c : text) {
        if (!ident_char(c)) return false;
    }
    return true;
}

ParseResult parse(const SourceScript& source) {
    ParseResult result;
    Lexer lexer(source.text);
    auto tokens = lexer.run(result.diagnostics);
    Parser parser(std::move(tokens), result.diagnostics);
    WorkflowAst ast = parser.run();
    // lexer and parser diagnostics interleave; order them by position
    std::stable_sort(result.diagnostics.begin(), result.diagnostics.end(), [](const auto& a, const auto& b) {
        return std::tie(a.pos.line, a.pos.column) < std::tie(b.pos.line, b.pos.column);
    });
    if (!has_errors(result.diagnostics)) result.ast = std::move(ast);
    return result;
}

DiagnosticList validate(const WorkflowAst& ast) {
    DiagnosticList out;
    auto error = [&out](SourcePos pos, std::string msg) { out.push_back({Severity::Error, pos, std::move(msg)}); };

    std::set<std::string> declared;
    for (const auto& decl : ast.file_decls) {
        if (!declared.insert(decl.name).second) error(decl.pos, fmt::format("duplicate declaration of file '{}'", decl.name));
        if (decl.size_hint && *decl.size_hint <= 0) error(decl.pos, fmt::format("file '{}' has non-positive @size", decl.name));
        if (decl.location_hint && !is_identifier(*decl.location_hint)) {
            error(decl.pos, fmt::format("invalid node name '{}'", *decl.location_hint));
        }
    }

    std::set<std::string> produced;
    for (const auto& call : ast.app_calls) {
        for (const auto& o : call.outputs) {
            if (!produced.insert(o).second) error(call.pos, fmt::format("identifier '{}' has multiple producers", o));
        }
    }

    for (const auto& call : ast.app_calls) {
        if (call.outputs.empty()) error(call.pos, fmt::format("call to '{}' has no outputs", call.app_name));
        std::set<std::string> seen_inputs;
        for (const auto& in : call.inputs) {
            if (!declared.contains(in) && !produced.contains(in)) error(call.pos, fmt::format("undefined input '{}'", in));
            if (!seen_inputs.insert(in).second) {
                error(call.pos, fmt::format("input '{}' listed more than once in call to '{}'", in, call.app_name));
            }
        }
        if (call.procs < 1) error(call.pos, fmt::format("call to '{}' has procs < 1", call.app_name));
        if (!(call.io_ratio >= 0.0) || !std::isfinite(call.io_ratio)) {
            error(call.pos, fmt::format("call to '{}' has invalid @input_output_ratio", call.app_name));
        }
        if (!(call.complexity.coefficient >= 0.0) || !std::isfinite(call.complexity.coefficient)) {
            error(call.pos, fmt::format("call to '{}' has invalid @compute_complex coefficient", call.app_name));
        }
        if (call.location_hint && !is_identifier(*call.location_hint)) {
            error(call.pos, fmt::format("invalid node name '{}'", *call.location_hint));
        }
    }

    for (const auto& decl : ast.file_decls) {
        if (!produced.contains(decl.name) && !decl.size_hint) {
            error(decl.pos, fmt::format("source file '{}' missing @size hint", decl.name));
        }
    }
    return out;
}

std::string pretty_print(const WorkflowAst& ast) {
    std::ostringstream os;
    for (const auto& decl : ast.file_decls) {
        os << "file " << decl.name;
        if (decl.external_path) os << " <" << quote(*decl.external_path) << ">";
        if (decl.size_hint) os << " @size(" << *decl.size_hint << " B)";
        if (decl.location_hint) os << " @location(" << *decl.location_hint << ")";
        os << ";\n";
    }
    for (const auto& call : ast.app_calls) {
        if (call.outputs.size() == 1) {
            os << call.outputs.front();
        } else {
            os << "(";
            for (std::size_t i = 0; i < call.outputs.size(); ++i) os << (i ? ", " : "") << call.outputs[i];
            os << ")";
        }
        os << " = " << call.app_name << "(";
        for (std::size_t i = 0; i < call.inputs.size(); ++i) os << (i ? ", " : "") << call.inputs[i];
        os << ")";
        if (call.procs != 1) os << " @task(procs=" << call.procs << ")";
        os << " @compute_complex(" << (call.complexity.form == ComplexityForm::Const ? "const" : "linear") << ", "
           << format_number(call.complexity.coefficient) << ")";
        if (call.io_ratio != 1.0) os << " @input_output_ratio(" << format_number(call.io_ratio) << ")";
        if (call.location_hint) os << " @location(" << *call.location_hint << ")";
        os << ";\n";
    }
    return os.str();
}

SourceScript load_script(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error(fmt::format("cannot open workflow '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return SourceScript{buf.str(), path.string()};
}

bool structurally_equal(const FileDecl& a, const FileDecl& b) {
    return a.name == b.name && a.external_path == b.external_path && a.size_hint == b.size_hint &&
           a.location_hint == b.location_hint;
}

bool structurally_equal(const AppCall& a, const AppCall& b) {
    return a.outputs == b.outputs && a.app_name == b.app_name && a.inputs == b.inputs && a.procs == b.procs &&
           a.complexity == b.complexity && a.io_ratio == b.io_ratio && a.location_hint == b.location_hint;
}

bool structurally_equal(const WorkflowAst& a, const WorkflowAst& b) {
    auto eq = [](const auto& xs, const auto& ys) {
        return std::equal(xs.begin(), xs.end(), ys.begin(), ys.end(),
                          [](const auto& x, const auto& y) { return structurally_equal(x, y); });
    };
    return eq(a.file_decls, b.file_decls) && eq(a.app_calls, b.app_calls);
}

}  // namespace wflow
