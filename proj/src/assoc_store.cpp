#include "dtwin/assoc_store.hpp"

#include "dtwin/error.hpp"
#include "dtwin/glob.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dtwin {

namespace {

std::string escape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

std::string unescape(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '\\' || i + 1 == text.size()) {
            out.push_back(text[i]);
            continue;
        }
        switch (text[++i]) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        default: out.push_back(text[i]);
        }
    }
    return out;
}

} // namespace

std::string format_number(double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

Value Value::from_text(std::string_view text)
{
    if (!text.empty()) {
        double number = 0.0;
        const char* first = text.data();
        if (*first == '+')
            ++first;
        auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), number);
        if (ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(number)) {
            Value v(number);
            v.raw_ = std::string(text);
            return v;
        }
    }
    return Value(std::string(text));
}

std::optional<double> Value::as_number() const
{
    if (is_number())
        return number();
    auto parsed = from_text(text());
    if (parsed.is_number())
        return parsed.number();
    return std::nullopt;
}

std::string Value::to_text() const
{
    if (!is_number())
        return text();
    return raw_.empty() ? format_number(number()) : raw_;
}

bool operator==(const Value& a, const Value& b)
{
    auto x = a.as_number();
    auto y = b.as_number();
    if (x && y)
        return *x == *y;
    return a.to_text() == b.to_text();
}

bool operator<(const Value& a, const Value& b)
{
    auto x = a.as_number();
    auto y = b.as_number();
    if (x && y)
        return *x < *y;
    return a.to_text() < b.to_text();
}

void AssocStore::insert(std::string_view row, std::string_view col, Value val)
{
    if (row.empty() || col.empty())
        throw InputError("assoc insert: row and col keys must be non-empty");
    auto it = cells_.find(std::pair{row, col});
    if (it != cells_.end())
        it->second = std::move(val);
    else
        cells_.emplace(Key{std::string(row), std::string(col)}, std::move(val));
}

std::optional<Value> AssocStore::get(std::string_view row, std::string_view col) const
{
    auto it = cells_.find(std::pair{row, col});
    if (it == cells_.end())
        return std::nullopt;
    return it->second;
}

AssocStore AssocStore::query(std::string_view row_pattern, std::string_view col_pattern) const
{
    const Glob rows(row_pattern);
    const Glob cols(col_pattern);

    AssocStore out;
    const std::string& prefix = rows.literal_prefix();
    auto it = cells_.lower_bound(std::pair{std::string_view(prefix), std::string_view()});
    for (; it != cells_.end(); ++it) {
        const auto& [row, col] = it->first;
        if (row.compare(0, prefix.size(), prefix) != 0)
            break;
        if (rows.matches(row) && cols.matches(col))
            out.cells_.emplace_hint(out.cells_.end(), it->first, it->second);
    }
    return out;
}

std::string AssocStore::serialize() const
{
    std::string out;
    for (const auto& [key, val] : cells_) {
        out += escape(key.first);
        out += '\t';
        out += escape(key.second);
        out += '\t';
        out += escape(val.to_text());
        out += '\n';
    }
    return out;
}

AssocStore AssocStore::parse(std::string_view text)
{
    AssocStore store;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view() : text.substr(eol + 1);
        if (line.empty())
            continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos)
            throw InputError("triple file line " + std::to_string(line_no) + ": expected 3 tab-separated fields");
        store.insert(unescape(line.substr(0, t1)), unescape(line.substr(t1 + 1, t2 - t1 - 1)),
                     Value::from_text(unescape(line.substr(t2 + 1))));
    }
    return store;
}

void AssocStore::save(const std::filesystem::path& path) const
{
    write_file_atomic(path, serialize());
}

AssocStore AssocStore::load(const std::filesystem::path& path)
{
    return parse(read_file(path));
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot write '" + path.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out)
            throw IoError("short write to '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("cannot replace '" + path.string() + "': " + ec.message());
}

} // namespace dtwin
