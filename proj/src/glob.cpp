#include "dtwin/glob.hpp"

#include "dtwin/error.hpp"

namespace dtwin {

Glob::Glob(std::string_view pattern) : pattern_(pattern)
{
    if (pattern.empty())
        throw InputError("malformed glob: empty pattern");

    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const char c = pattern[i];
        if (c == '\\') {
            if (i + 1 == pattern.size())
                throw InputError("malformed glob '" + pattern_ + "': dangling escape");
            tokens_.push_back(make(Kind::literal, pattern[++i]));
        } else if (c == '*') {
            // collapse runs of '*'
            if (tokens_.empty() || tokens_.back().kind != Kind::any_run)
                tokens_.push_back(make(Kind::any_run));
        } else if (c == '?') {
            tokens_.push_back(make(Kind::any_one));
        } else if (c == '[') {
            Token token = make(Kind::char_class);
            std::size_t j = i + 1;
            if (j < pattern.size() && (pattern[j] == '!' || pattern[j] == '^')) {
                token.negated = true;
                ++j;
            }
            bool closed = false;
            bool first = true;
            while (j < pattern.size()) {
                char lo = pattern[j];
                if (lo == ']' && !first) {
                    closed = true;
                    break;
                }
                first = false;
                if (lo == '\\') {
                    if (j + 1 == pattern.size())
                        break;
                    lo = pattern[++j];
                }
                char hi = lo;
                if (j + 2 < pattern.size() && pattern[j + 1] == '-' && pattern[j + 2] != ']') {
                    hi = pattern[j + 2];
                    j += 2;
                    if (hi < lo)
                        throw InputError("malformed glob '" + pattern_ + "': reversed range");
                }
                token.ranges.emplace_back(lo, hi);
                ++j;
            }
            if (!closed)
                throw InputError("malformed glob '" + pattern_ + "': unterminated class");
            tokens_.push_back(std::move(token));
            i = j;
        } else {
            tokens_.push_back(make(Kind::literal, c));
        }
    }

    for (const auto& token : tokens_) {
        if (token.kind != Kind::literal) {
            literal_ = false;
            break;
        }
        prefix_.push_back(token.ch);
    }
}

bool Glob::class_matches(const Token& token, char c) const
{
    bool hit = false;
    for (auto [lo, hi] : token.ranges) {
        if (c >= lo && c <= hi) {
            hit = true;
            break;
        }
    }
    return hit != token.negated;
}

bool Glob::matches(std::string_view text) const
{
    // Iterative matcher with single-star backtracking (linear in practice).
    std::size_t ti = 0;
    std::size_t pi = 0;
    std::size_t star_pi = tokens_.size();
    std::size_t star_ti = 0;

    while (ti < text.size()) {
        if (pi < tokens_.size()) {
            const Token& token = tokens_[pi];
            bool step = false;
            switch (token.kind) {
            case Kind::literal: step = token.ch == text[ti]; break;
            case Kind::any_one: step = true; break;
            case Kind::char_class: step = class_matches(token, text[ti]); break;
            case Kind::any_run:
                star_pi = pi++;
                star_ti = ti;
                continue;
            }
            if (step) {
                ++pi;
                ++ti;
                continue;
            }
        }
        if (star_pi == tokens_.size())
            return false;
        pi = star_pi + 1;
        ti = ++star_ti;
    }
    while (pi < tokens_.size() && tokens_[pi].kind == Kind::any_run)
        ++pi;
    return pi == tokens_.size();
}

} // namespace dtwin
