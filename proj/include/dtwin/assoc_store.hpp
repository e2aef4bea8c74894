#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace dtwin {

/// Cell value of the associative store: text or number.
///
/// Values read from delimited files are untyped; `from_text` keeps numbers
/// numeric so comparisons between two numeric cells are numeric.
class Value {
public:
    Value() = default;
    Value(double number) : data_(number) {}
    Value(int number) : data_(static_cast<double>(number)) {}
    Value(std::string text) : data_(std::move(text)) {}
    Value(const char* text) : data_(std::string(text)) {}

    /// Numeric when the whole text parses as a finite number, otherwise text.
    static Value from_text(std::string_view text);

    bool is_number() const { return std::holds_alternative<double>(data_); }
    double number() const { return std::get<double>(data_); }
    const std::string& text() const { return std::get<std::string>(data_); }
    std::optional<double> as_number() const;

    /// Shortest text that parses back to the same value.
    std::string to_text() const;

    friend bool operator==(const Value& a, const Value& b);
    friend bool operator<(const Value& a, const Value& b);

private:
    std::variant<std::string, double> data_;
    std::string raw_; ///< original spelling of a number parsed from text
};

std::string format_number(double value);

/// Sparse (row, col) -> value map in the style of a D4M associative array.
///
/// Iteration is lexicographic by (row, col). Concurrent readers are safe;
/// writers must be serialized by the caller.
class AssocStore {
public:
    using Key = std::pair<std::string, std::string>;

    /// Orders any (row, col) pair of string-like types, so lookups avoid copies.
    struct KeyLess {
        using is_transparent = void;
        template <class A, class B>
        bool operator()(const A& a, const B& b) const
        {
            const int c = std::string_view(a.first).compare(std::string_view(b.first));
            return c != 0 ? c < 0 : std::string_view(a.second) < std::string_view(b.second);
        }
    };
    using Map = std::map<Key, Value, KeyLess>;

    /// Last write wins. Throws InputError on empty row or col.
    void insert(std::string_view row, std::string_view col, Value val);

    std::optional<Value> get(std::string_view row, std::string_view col) const;

    /// Triples whose row and col match the globs. Throws InputError on malformed globs.
    AssocStore query(std::string_view row_pattern, std::string_view col_pattern) const;

    std::size_t size() const { return cells_.size(); }
    bool empty() const { return cells_.empty(); }
    Map::const_iterator begin() const { return cells_.begin(); }
    Map::const_iterator end() const { return cells_.end(); }

    /// Tab-separated `row\tcol\tval\n` lines in sorted order.
    std::string serialize() const;
    static AssocStore parse(std::string_view text);

    /// Written through a temporary file and renamed into place.
    void save(const std::filesystem::path& path) const;
    static AssocStore load(const std::filesystem::path& path);

    bool operator==(const AssocStore& other) const { return cells_ == other.cells_; }

private:
    Map cells_;
};

/// Reads a whole file; throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);
/// Atomic replace via temp file + rename; throws IoError naming the path.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

} // namespace dtwin
