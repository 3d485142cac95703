#pragma once

// Shape description language.
//
//   program    := { statement }
//   statement  := IDENT "=" expr ";"
//               | "field" "=" expr ";"
//               | "morph" "(" named { "," named } ")" ";"
//   expr       := IDENT                        (reference to an earlier binding)
//               | IDENT "(" [ arg { "," arg } ] ")"   (constructor call)
//   arg        := named | expr
//   named      := IDENT "=" value
//   value      := NUMBER | tuple | "true" | "false" | expr
//   tuple      := "(" NUMBER { "," NUMBER } ")"
//
// The ";" after the last statement is optional.
// `#` starts a comment running to the end of the line. A program exports
// exactly one `field = ...;` or `morph(initial=..., final=..., p=...);`.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rfield/field.hpp"
#include "rfield/morph.hpp"

namespace rfield::shapelang {

struct SourcePos {
    int line = 1;
    int column = 1;
    bool operator==(const SourcePos&) const = default;
};

/// Syntax error with the position of the offending token.
class ParseError : public Error {
  public:
    ParseError(SourcePos pos, std::string message, std::vector<std::string> expected = {})
        : Error(format(pos, message, expected)), pos_{pos}, message_{std::move(message)},
          expected_{std::move(expected)} {}

    [[nodiscard]] int line() const noexcept { return pos_.line; }
    [[nodiscard]] int column() const noexcept { return pos_.column; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }
    [[nodiscard]] const std::vector<std::string>& expected() const noexcept { return expected_; }

  private:
    static std::string format(SourcePos pos, const std::string& msg, const std::vector<std::string>& expected) {
        std::string s = "line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) + ": " + msg;
        if (!expected.empty()) {
            s += " (expected ";
            for (std::size_t i = 0; i < expected.size(); ++i) s += (i ? ", " : "") + expected[i];
            s += ")";
        }
        return s;
    }

    SourcePos pos_;
    std::string message_;
    std::vector<std::string> expected_;
};

/// Well-formed syntax with an invalid meaning: unknown name, dimension
/// mismatch, parameter out of range, missing export.
class SemanticError : public Error {
  public:
    SemanticError(SourcePos pos, std::string message)
        : Error("line " + std::to_string(pos.line) + ", column " + std::to_string(pos.column) + ": " + message),
          pos_{pos}, message_{std::move(message)} {}

    [[nodiscard]] int line() const noexcept { return pos_.line; }
    [[nodiscard]] int column() const noexcept { return pos_.column; }
    [[nodiscard]] const std::string& message() const noexcept { return message_; }

  private:
    SourcePos pos_;
    std::string message_;
};

// ---------------------------------------------------------------------------
// Numbers

/// Shortest decimal that parses back to exactly `v` (at most 17 significant
/// digits).
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Tokens

enum class TokenKind { ident, keyword, number, lparen, rparen, comma, eq, semicolon, end };

inline const char* to_string(TokenKind k) {
    switch (k) {
        case TokenKind::ident: return "identifier";
        case TokenKind::keyword: return "keyword";
        case TokenKind::number: return "number";
        case TokenKind::lparen: return "'('";
        case TokenKind::rparen: return "')'";
        case TokenKind::comma: return "','";
        case TokenKind::eq: return "'='";
        case TokenKind::semicolon: return "';'";
        case TokenKind::end: return "end of input";
    }
    return "?";
}

struct Token {
    TokenKind kind;
    std::string text;
    double number = 0.0;
    SourcePos pos;
};

inline bool is_keyword(std::string_view s) { return s == "field" || s == "morph" || s == "true" || s == "false"; }

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    int line = 1;
    int col = 1;
    auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
    auto is_ident_start = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
    auto is_ident_char = [&](char c) { return is_ident_start(c) || is_digit(c); };
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };

    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        const SourcePos pos{line, col};
        auto punct = [&](TokenKind k) {
            out.push_back({k, std::string(1, c), 0.0, pos});
            advance(1);
        };
        switch (c) {
            case '(': punct(TokenKind::lparen); continue;
            case ')': punct(TokenKind::rparen); continue;
            case ',': punct(TokenKind::comma); continue;
            case '=': punct(TokenKind::eq); continue;
            case ';': punct(TokenKind::semicolon); continue;
            default: break;
        }
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && is_ident_char(src[j])) ++j;
            std::string word(src.substr(i, j - i));
            const TokenKind k = is_keyword(word) ? TokenKind::keyword : TokenKind::ident;
            out.push_back({k, std::move(word), 0.0, pos});
            advance(j - i);
            continue;
        }
        const bool starts_number = is_digit(c) || (c == '.' && i + 1 < src.size() && is_digit(src[i + 1])) ||
                                   (c == '-' && i + 1 < src.size() &&
                                    (is_digit(src[i + 1]) || (src[i + 1] == '.' && i + 2 < src.size() &&
                                                              is_digit(src[i + 2]))));
        if (starts_number) {
            std::size_t j = i;
            auto bad_at = [&](std::size_t at, const std::string& why) {
                // column of byte `at` on the current line
                throw ParseError({line, col + static_cast<int>(at - i)}, why, {"number"});
            };
            if (src[j] == '-') ++j;
            while (j < src.size() && is_digit(src[j])) ++j;
            if (j < src.size() && src[j] == '.') {
                ++j;
                while (j < src.size() && is_digit(src[j])) ++j;
            }
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && is_digit(src[k])) {
                    while (k < src.size() && is_digit(src[k])) ++k;
                    j = k;
                } else {
                    bad_at(j, "malformed exponent in numeral");
                }
            }
            if (j < src.size() && (is_ident_char(src[j]) || src[j] == '.')) {
                bad_at(j, std::string("illegal character '") + src[j] + "' in numeral");
            }
            const std::string_view lex = src.substr(i, j - i);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(lex.data(), lex.data() + lex.size(), v);
            if (ec == std::errc::result_out_of_range || !std::isfinite(v)) bad_at(i, "number out of range");
            if (ec != std::errc() || ptr != lex.data() + lex.size()) bad_at(i, "malformed numeral");
            out.push_back({TokenKind::number, std::string(lex), v, pos});
            advance(j - i);
            continue;
        }
        std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
                                ? "byte 0x" + std::to_string(static_cast<unsigned char>(c))
                                : std::string("'") + c + "'";
        throw ParseError(pos, "illegal character " + shown);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Program

struct Definition {
    std::string name;
    FieldExpr expr;
    SourcePos pos;
};

struct MorphExport {
    std::string initial;
    std::string target;
    double p = 0.2;
    double s = 0.0;
    double t_start = 0.0;
    bool operator==(const MorphExport&) const = default;
};

/// Parsed `.shape` source: ordered bindings plus exactly one export.
struct ShapeProgram {
    std::vector<Definition> definitions;
    std::optional<FieldExpr> field;
    std::optional<MorphExport> morph;
    /// Source position of each constructor call, keyed by node identity.
    std::map<const FieldNode*, SourcePos> spans;

    [[nodiscard]] const FieldExpr* find(std::string_view name) const {
        for (const auto& d : definitions)
            if (d.name == name) return &d.expr;
        return nullptr;
    }

    /// Structural equality: names, expressions and export; spans ignored.
    friend bool operator==(const ShapeProgram& a, const ShapeProgram& b) {
        if (a.definitions.size() != b.definitions.size()) return false;
        for (std::size_t i = 0; i < a.definitions.size(); ++i) {
            if (a.definitions[i].name != b.definitions[i].name) return false;
            if (!(a.definitions[i].expr == b.definitions[i].expr)) return false;
        }
        return a.field == b.field && a.morph == b.morph;
    }
};

inline const std::set<std::string, std::less<>>& constructor_names() {
    static const std::set<std::string, std::less<>> names{"circle", "segment", "sphere", "plane",  "halfplane",
                                                          "neg",    "union",   "inter",  "requiv", "trim"};
    return names;
}

namespace detail {

inline const FieldNode* node_id(const FieldExpr& e) { return &e.node(); }

class Parser {
  public:
    explicit Parser(std::string_view src) : src_{src}, toks_{tokenize(src)} {
        SourcePos last{1, 1};
        // end-of-input errors point at the last byte of the source
        int line = 1, col = 1;
        for (std::size_t i = 0; i < src.size(); ++i) {
            last = {line, col};
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        toks_.push_back({TokenKind::end, "", 0.0, last});
    }

    ShapeProgram run() {
        SourcePos export_pos{};
        while (peek().kind != TokenKind::end) {
            const Token& t = peek();
            if (t.kind == TokenKind::keyword && t.text == "field") {
                if (prog_.field || prog_.morph) throw SemanticError(t.pos, "more than one export");
                export_pos = t.pos;
                next();
                expect(TokenKind::eq);
                FieldExpr e = expr();
                terminator();
                prog_.field = std::move(e);
            } else if (t.kind == TokenKind::keyword && t.text == "morph") {
                if (prog_.field || prog_.morph) throw SemanticError(t.pos, "more than one export");
                export_pos = t.pos;
                next();
                prog_.morph = morph_statement(t.pos);
                terminator();
            } else if (t.kind == TokenKind::ident) {
                const Token name = next();
                if (constructor_names().contains(name.text))
                    throw SemanticError(name.pos, "'" + name.text + "' is a constructor and cannot be rebound");
                if (prog_.find(name.text) != nullptr)
                    throw SemanticError(name.pos, "'" + name.text + "' is already defined");
                expect(TokenKind::eq);
                FieldExpr e = expr();
                terminator();
                prog_.definitions.push_back({name.text, std::move(e), name.pos});
            } else {
                throw ParseError(t.pos, "unexpected " + describe(t), {"identifier", "'field'", "'morph'"});
            }
        }
        if (!prog_.field && !prog_.morph)
            throw SemanticError(peek().pos, "program has no `field` or `morph` export");
        (void)export_pos;
        return std::move(prog_);
    }

  private:
    // ";" ends every statement; the last one may omit it.
    void terminator() {
        if (peek().kind == TokenKind::end) return;
        expect(TokenKind::semicolon);
    }

    static std::string describe(const Token& t) {
        if (t.kind == TokenKind::end) return "end of input";
        return std::string(to_string(t.kind)) + " '" + t.text + "'";
    }

    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    Token next() {
        Token t = peek();
        if (pos_ < toks_.size() - 1) ++pos_;
        return t;
    }
    Token expect(TokenKind k) {
        if (peek().kind != k) throw ParseError(peek().pos, "unexpected " + describe(peek()), {to_string(k)});
        return next();
    }

    MorphExport morph_statement(SourcePos at) {
        expect(TokenKind::lparen);
        MorphExport m;
        std::set<std::string> seen;
        bool first = true;
        while (first || peek().kind == TokenKind::comma) {
            if (!first) next();
            first = false;
            const Token key = expect(TokenKind::ident);
            expect(TokenKind::eq);
            if (!seen.insert(key.text).second) throw SemanticError(key.pos, "duplicate argument '" + key.text + "'");
            if (key.text == "initial" || key.text == "final") {
                const Token ref = peek();
                if (ref.kind != TokenKind::ident)
                    throw ParseError(ref.pos, "unexpected " + describe(ref), {"identifier"});
                next();
                if (prog_.find(ref.text) == nullptr)
                    throw SemanticError(ref.pos, "unknown name '" + ref.text + "'");
                (key.text == "initial" ? m.initial : m.target) = ref.text;
            } else if (key.text == "p" || key.text == "s" || key.text == "t_start") {
                const Token num = expect(TokenKind::number);
                if (key.text == "p") {
                    if (!(num.number > 0.0)) throw SemanticError(num.pos, "morph p must be > 0");
                    m.p = num.number;
                } else if (key.text == "s") {
                    if (!(num.number >= 0.0 && num.number <= 1.0))
                        throw SemanticError(num.pos, "morph s must lie in [0, 1]");
                    m.s = num.number;
                } else {
                    m.t_start = num.number;
                }
            } else {
                throw SemanticError(key.pos, "unknown morph argument '" + key.text + "'");
            }
        }
        expect(TokenKind::rparen);
        if (!seen.contains("initial") || !seen.contains("final") || !seen.contains("p"))
            throw SemanticError(at, "morph requires initial=, final= and p=");
        if (prog_.find(m.initial)->dimension() != prog_.find(m.target)->dimension())
            throw SemanticError(at, "morph endpoints have different dimensions");
        return m;
    }

    struct Value {
        enum class Kind { number, tuple, boolean, expr } kind;
        double number = 0.0;
        std::vector<double> tuple;
        bool boolean = false;
        FieldExpr expr;
        SourcePos pos;
    };

    struct Args {
        std::vector<std::pair<FieldExpr, SourcePos>> positional;
        std::map<std::string, Value> named;
    };

    FieldExpr expr() {
        const Token& t = peek();
        if (t.kind != TokenKind::ident) throw ParseError(t.pos, "unexpected " + describe(t), {"identifier"});
        const Token name = next();
        if (constructor_names().contains(name.text)) {
            if (peek().kind != TokenKind::lparen)
                throw ParseError(peek().pos, "unexpected " + describe(peek()), {"'('"});
            next();
            Args args = arguments();
            expect(TokenKind::rparen);
            FieldExpr e = build(name, std::move(args));
            prog_.spans.emplace(node_id(e), name.pos);
            return e;
        }
        if (peek().kind == TokenKind::lparen) throw SemanticError(name.pos, "unknown constructor '" + name.text + "'");
        const FieldExpr* ref = prog_.find(name.text);
        if (ref == nullptr) throw SemanticError(name.pos, "unknown name '" + name.text + "'");
        return *ref;
    }

    Args arguments() {
        Args args;
        if (peek().kind == TokenKind::rparen) return args;
        while (true) {
            if (peek().kind == TokenKind::ident && peek(1).kind == TokenKind::eq) {
                const Token key = next();
                next();
                if (args.named.contains(key.text))
                    throw SemanticError(key.pos, "duplicate argument '" + key.text + "'");
                args.named.emplace(key.text, value());
            } else {
                const SourcePos at = peek().pos;
                args.positional.emplace_back(expr(), at);
            }
            if (peek().kind != TokenKind::comma) break;
            next();
        }
        return args;
    }

    Value value() {
        const Token& t = peek();
        Value v;
        v.pos = t.pos;
        if (t.kind == TokenKind::number) {
            v.kind = Value::Kind::number;
            v.number = next().number;
        } else if (t.kind == TokenKind::keyword && (t.text == "true" || t.text == "false")) {
            v.kind = Value::Kind::boolean;
            v.boolean = next().text == "true";
        } else if (t.kind == TokenKind::lparen) {
            next();
            v.kind = Value::Kind::tuple;
            v.tuple.push_back(expect(TokenKind::number).number);
            while (peek().kind == TokenKind::comma) {
                next();
                v.tuple.push_back(expect(TokenKind::number).number);
            }
            expect(TokenKind::rparen);
        } else if (t.kind == TokenKind::ident) {
            v.kind = Value::Kind::expr;
            v.expr = expr();
        } else {
            throw ParseError(t.pos, "unexpected " + describe(t), {"number", "'('", "identifier", "'true'", "'false'"});
        }
        return v;
    }

    // -- argument helpers ---------------------------------------------------

    static void allow_only(const Token& ctor, const Args& a, std::initializer_list<std::string_view> keys) {
        for (const auto& [k, v] : a.named)
            if (std::find(keys.begin(), keys.end(), k) == keys.end())
                throw SemanticError(v.pos, "'" + ctor.text + "' has no argument '" + k + "'");
    }

    static const Value& need(const Token& ctor, const Args& a, const std::string& key) {
        auto it = a.named.find(key);
        if (it == a.named.end()) throw SemanticError(ctor.pos, "'" + ctor.text + "' requires " + key + "=");
        return it->second;
    }

    static double number_arg(const Token& ctor, const Args& a, const std::string& key,
                             std::optional<double> fallback = std::nullopt) {
        auto it = a.named.find(key);
        if (it == a.named.end()) {
            if (fallback) return *fallback;
            throw SemanticError(ctor.pos, "'" + ctor.text + "' requires " + key + "=");
        }
        if (it->second.kind != Value::Kind::number)
            throw SemanticError(it->second.pos, key + "= must be a number");
        return it->second.number;
    }

    static Point point_arg(const Token& ctor, const Args& a, const std::string& key, std::size_t dim) {
        const Value& v = need(ctor, a, key);
        if (v.kind != Value::Kind::tuple || v.tuple.size() != dim)
            throw SemanticError(v.pos, key + "= must be a " + std::to_string(dim) + "-tuple");
        return dim == 2 ? Point{v.tuple[0], v.tuple[1]} : Point{v.tuple[0], v.tuple[1], v.tuple[2]};
    }

    static void positional_count(const Token& ctor, const Args& a, std::size_t lo, std::size_t hi) {
        const std::size_t n = a.positional.size();
        if (n < lo || n > hi) {
            const std::string want = lo == hi ? std::to_string(lo) : "at least " + std::to_string(lo);
            throw SemanticError(ctor.pos, "'" + ctor.text + "' takes " + want + " field argument(s), got " +
                                              std::to_string(n));
        }
    }

    static void same_dimension(const Token& ctor, const Args& a) {
        const std::size_t d = a.positional.front().first.dimension();
        for (const auto& [e, pos] : a.positional)
            if (e.dimension() != d) throw SemanticError(pos, "dimension mismatch in '" + ctor.text + "'");
    }

    static Vec unit_normal(const Value& v, Vec n) {
        const double len = norm(n);
        if (!(len > 0.0) || !std::isfinite(len)) throw SemanticError(v.pos, "normal must be non-zero");
        if (std::fabs(len - 1.0) > default_tolerances.unit_normal) n *= 1.0 / len;
        if (std::fabs(norm(n) - 1.0) > default_tolerances.unit_normal)
            throw SemanticError(v.pos, "normal cannot be normalized");
        return n;
    }

    FieldExpr build(const Token& ctor, Args a) {
        const std::string& c = ctor.text;
        if (c == "circle") {
            allow_only(ctor, a, {"c", "r"});
            positional_count(ctor, a, 0, 0);
            const Point center = point_arg(ctor, a, "c", 2);
            const double r = number_arg(ctor, a, "r");
            if (!(r > 0.0)) throw SemanticError(a.named.at("r").pos, "radius must be > 0");
            return circle(center, r);
        }
        if (c == "segment") {
            allow_only(ctor, a, {"p1", "p2"});
            positional_count(ctor, a, 0, 0);
            const Point p1 = point_arg(ctor, a, "p1", 2);
            const Point p2 = point_arg(ctor, a, "p2", 2);
            if (!std::isfinite(norm(p2 - p1)) || norm(p2 - p1) < default_tolerances.min_segment_length)
                throw SemanticError(ctor.pos, "segment endpoints must differ");
            return segment(p1, p2);
        }
        if (c == "sphere") {
            allow_only(ctor, a, {"c", "r", "normalized"});
            positional_count(ctor, a, 0, 0);
            const Point center = point_arg(ctor, a, "c", 3);
            const double r = number_arg(ctor, a, "r");
            if (!(r > 0.0)) throw SemanticError(a.named.at("r").pos, "radius must be > 0");
            bool normalized = true;
            if (auto it = a.named.find("normalized"); it != a.named.end()) {
                if (it->second.kind != Value::Kind::boolean)
                    throw SemanticError(it->second.pos, "normalized= must be true or false");
                normalized = it->second.boolean;
            }
            return sphere(center, r, normalized);
        }
        if (c == "plane" || c == "halfplane") {
            const std::size_t dim = c == "plane" ? 3 : 2;
            allow_only(ctor, a, {"o", "n"});
            positional_count(ctor, a, 0, 0);
            const Point o = point_arg(ctor, a, "o", dim);
            const Vec raw = point_arg(ctor, a, "n", dim);
            const Vec n = unit_normal(a.named.at("n"), raw);
            return plane(o, n);
        }
        if (c == "neg") {
            allow_only(ctor, a, {});
            positional_count(ctor, a, 1, 1);
            return negate(a.positional[0].first);
        }
        if (c == "union" || c == "inter") {
            allow_only(ctor, a, {"s"});
            positional_count(ctor, a, 2, 2);
            same_dimension(ctor, a);
            const double s = number_arg(ctor, a, "s", 0.0);
            if (!(s >= 0.0 && s <= 1.0)) throw SemanticError(a.named.at("s").pos, "s must lie in [0, 1]");
            return c == "union" ? disjunction(a.positional[0].first, a.positional[1].first, s)
                                : conjunction(a.positional[0].first, a.positional[1].first, s);
        }
        if (c == "requiv") {
            allow_only(ctor, a, {"m"});
            positional_count(ctor, a, 2, static_cast<std::size_t>(-1));
            same_dimension(ctor, a);
            const double m = number_arg(ctor, a, "m");
            if (!(m >= 1.0) || m != std::floor(m) || m > 64.0)
                throw SemanticError(a.named.at("m").pos, "m must be an integer in [1, 64]");
            std::vector<FieldExpr> kids;
            for (auto& [e, pos] : a.positional) kids.push_back(std::move(e));
            return equivalence(static_cast<int>(m), std::move(kids));
        }
        // trim
        allow_only(ctor, a, {});
        positional_count(ctor, a, 2, 2);
        same_dimension(ctor, a);
        return trimmed(a.positional[0].first, a.positional[1].first);
    }

    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    ShapeProgram prog_;
};

}  // namespace detail

/// Parse and check a `.shape` source. Throws ParseError or SemanticError.
inline ShapeProgram parse(std::string_view source) { return detail::Parser(source).run(); }

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

class Writer {
  public:
    explicit Writer(const std::unordered_map<const FieldNode*, std::string>& names) : names_{names} {}

    std::string expr(const FieldExpr& e, bool allow_name = true) const {
        if (allow_name) {
            if (auto it = names_.find(node_id(e)); it != names_.end()) return it->second;
        }
        return std::visit(
            overloaded{
                [&](const Circle& c) { return "circle(c=" + tuple(c.center) + ", r=" + format_number(c.radius) + ")"; },
                [&](const Segment& s) { return "segment(p1=" + tuple(s.p1) + ", p2=" + tuple(s.p2) + ")"; },
                [&](const Sphere& s) {
                    return "sphere(c=" + tuple(s.center) + ", r=" + format_number(s.radius) +
                           (s.normalized ? "" : ", normalized=false") + ")";
                },
                [&](const Plane& p) {
                    return std::string(p.origin.dim() == 2 ? "halfplane" : "plane") + "(o=" + tuple(p.origin) +
                           ", n=" + tuple(p.normal) + ")";
                },
                [&](const Negation& n) { return "neg(" + expr(n.child) + ")"; },
                [&](const Disjunction& d) { return "union(" + expr(d.left) + ", " + expr(d.right) + s_arg(d.s) + ")"; },
                [&](const Conjunction& c) { return "inter(" + expr(c.left) + ", " + expr(c.right) + s_arg(c.s) + ")"; },
                [&](const Equivalence& q) {
                    std::string out = "requiv(m=" + std::to_string(q.m);
                    for (const auto& ch : q.children) out += ", " + expr(ch);
                    return out + ")";
                },
                [&](const Trim& t) { return "trim(" + expr(t.base) + ", " + expr(t.trimmer) + ")"; },
            },
            e.node().v);
    }

  private:
    static std::string tuple(const Vec& v) {
        std::string out = "(";
        for (std::size_t i = 0; i < v.dim(); ++i) out += (i ? ", " : "") + format_number(v[i]);
        return out + ")";
    }
    static std::string s_arg(double s) { return s == 0.0 ? "" : ", s=" + format_number(s); }

    const std::unordered_map<const FieldNode*, std::string>& names_;
};

}  // namespace detail

/// Canonical text. Subtrees shared with an earlier binding are written by name.
inline std::string serialize(const ShapeProgram& prog) {
    std::unordered_map<const FieldNode*, std::string> names;
    std::string out;
    for (const auto& d : prog.definitions) {
        const detail::Writer w(names);
        // a binding that aliases an earlier one is written as that name
        out += d.name + " = " + w.expr(d.expr) + ";\n";
        names.emplace(detail::node_id(d.expr), d.name);
    }
    const detail::Writer w(names);
    if (prog.field) out += "field = " + w.expr(*prog.field) + ";\n";
    if (prog.morph) {
        const auto& m = *prog.morph;
        out += "morph(initial=" + m.initial + ", final=" + m.target + ", p=" + format_number(m.p);
        if (m.s != 0.0) out += ", s=" + format_number(m.s);
        if (m.t_start != 0.0) out += ", t_start=" + format_number(m.t_start);
        out += ");\n";
    }
    return out;
}

/// Compile the program's export into something the simulator can steer by.
inline TimeField compile(const ShapeProgram& prog) {
    if (prog.field) return TimeField(*prog.field);
    if (!prog.morph) throw SemanticError({1, 1}, "program has no export");
    const auto& m = *prog.morph;
    return TimeField(make_morph(*prog.find(m.initial), *prog.find(m.target), m.p, m.s, m.t_start));
}

/// The morph export as a schedule, if present.
inline std::optional<MorphSchedule> morph_schedule(const ShapeProgram& prog) {
    if (!prog.morph) return std::nullopt;
    const auto& m = *prog.morph;
    return make_morph(*prog.find(m.initial), *prog.find(m.target), m.p, m.s, m.t_start);
}

}  // namespace rfield::shapelang
