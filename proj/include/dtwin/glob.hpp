#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dtwin {

/// Compiled shell-style pattern: `*` any run, `?` one char, `[a-z]` / `[!x]`
/// classes, `\` escapes the next character. Throws InputError on malformed
/// patterns (empty, unterminated class, dangling escape).
class Glob {
public:
    explicit Glob(std::string_view pattern);

    bool matches(std::string_view text) const;

    /// Literal characters before the first wildcard; lets sorted stores skip ahead.
    const std::string& literal_prefix() const { return prefix_; }
    bool is_literal() const { return literal_; }
    const std::string& pattern() const { return pattern_; }

private:
    enum class Kind { literal, any_one, any_run, char_class };
    struct Token {
        Kind kind = Kind::literal;
        char ch = 0;
        bool negated = false;
        std::vector<std::pair<char, char>> ranges;
    };

    static Token make(Kind kind, char ch = 0)
    {
        Token t;
        t.kind = kind;
        t.ch = ch;
        return t;
    }

    bool class_matches(const Token& token, char c) const;

    std::string pattern_;
    std::string prefix_;
    bool literal_ = true;
    std::vector<Token> tokens_;
};

inline bool glob_match(std::string_view pattern, std::string_view text)
{
    return Glob(pattern).matches(text);
}

} // namespace dtwin
