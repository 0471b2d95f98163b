#include "fkmc/toml_lite.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fkmc::toml {

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << "toml parse error at line " << line << ": " << what;
    throw std::runtime_error(msg.str());
}

struct Cursor {
    const std::string& s;
    std::size_t pos = 0;
    std::size_t line = 1;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    char take() {
        const char c = s[pos++];
        if (c == '\n') ++line;
        return c;
    }
    /// Skip spaces/tabs and comments; `newlines` also skips line breaks
    /// (inside arrays).
    void skip_ws(bool newlines) {
        while (!done()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r') {
                take();
            } else if (c == '#') {
                while (!done() && peek() != '\n') take();
            } else if (newlines && c == '\n') {
                take();
            } else {
                break;
            }
        }
    }
};

bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::vector<std::string> parse_key_path(Cursor& cur) {
    std::vector<std::string> parts;
    for (;;) {
        cur.skip_ws(false);
        std::string part;
        while (!cur.done() && bare_key_char(cur.peek())) part += cur.take();
        if (part.empty()) fail(cur.line, "expected a key");
        parts.push_back(part);
        cur.skip_ws(false);
        if (!cur.done() && cur.peek() == '.') {
            cur.take();
            continue;
        }
        return parts;
    }
}

std::string parse_string(Cursor& cur) {
    cur.take();  // opening quote
    std::string out;
    for (;;) {
        if (cur.done()) fail(cur.line, "unterminated string");
        const char c = cur.take();
        if (c == '"') return out;
        if (c == '\n') fail(cur.line - 1, "newline inside string");
        if (c == '\\') {
            if (cur.done()) fail(cur.line, "dangling escape");
            const char e = cur.take();
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                default: fail(cur.line, std::string("unsupported escape \\") + e);
            }
        } else {
            out += c;
        }
    }
}

nlohmann::json parse_scalar(Cursor& cur) {
    std::string tok;
    while (!cur.done()) {
        const char c = cur.peek();
        if (c == ',' || c == ']' || c == '\n' || c == '#' || c == ' ' || c == '\t' ||
            c == '\r')
            break;
        tok += cur.take();
    }
    if (tok.empty()) fail(cur.line, "expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    const bool floaty = tok.find_first_of(".eEnN") != std::string::npos &&
                        tok != "inf" && tok != "-inf";
    errno = 0;
    char* end = nullptr;
    if (!floaty && tok.find_first_of("iI") == std::string::npos) {
        const long long v = std::strtoll(tok.c_str(), &end, 10);
        if (end == tok.c_str() + tok.size() && errno == 0) return v;
    }
    end = nullptr;
    const double d = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail(cur.line, "malformed value '" + tok + "'");
    return d;
}

nlohmann::json parse_value(Cursor& cur);

nlohmann::json parse_array(Cursor& cur) {
    cur.take();  // '['
    nlohmann::json arr = nlohmann::json::array();
    for (;;) {
        cur.skip_ws(true);
        if (cur.done()) fail(cur.line, "unterminated array");
        if (cur.peek() == ']') {
            cur.take();
            return arr;
        }
        arr.push_back(parse_value(cur));
        cur.skip_ws(true);
        if (cur.done()) fail(cur.line, "unterminated array");
        if (cur.peek() == ',') {
            cur.take();
            continue;
        }
        if (cur.peek() == ']') {
            cur.take();
            return arr;
        }
        fail(cur.line, "expected ',' or ']' in array");
    }
}

nlohmann::json parse_value(Cursor& cur) {
    cur.skip_ws(false);
    if (cur.done()) fail(cur.line, "expected a value");
    const char c = cur.peek();
    if (c == '"') return parse_string(cur);
    if (c == '[') return parse_array(cur);
    return parse_scalar(cur);
}

nlohmann::json* descend(nlohmann::json& root, const std::vector<std::string>& path,
                        std::size_t line) {
    nlohmann::json* node = &root;
    for (const std::string& part : path) {
        if (!node->is_object()) fail(line, "key path crosses a non-table value");
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
    }
    return node;
}

}  // namespace

nlohmann::json parse(const std::string& text) {
    nlohmann::json root = nlohmann::json::object();
    nlohmann::json* table = &root;
    Cursor cur{text};
    for (;;) {
        cur.skip_ws(true);
        if (cur.done()) return root;
        if (cur.peek() == '[') {
            cur.take();
            const auto path = parse_key_path(cur);
            cur.skip_ws(false);
            if (cur.done() || cur.peek() != ']') fail(cur.line, "expected ']'");
            cur.take();
            table = descend(root, path, cur.line);
            if (!table->is_object()) fail(cur.line, "table name collides with a value");
            continue;
        }
        const std::size_t line = cur.line;
        const auto path = parse_key_path(cur);
        cur.skip_ws(false);
        if (cur.done() || cur.peek() != '=') fail(line, "expected '=' after key");
        cur.take();
        nlohmann::json value = parse_value(cur);
        nlohmann::json* slot = table;
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            slot = descend(*slot, {path[i]}, line);
        if (slot->contains(path.back())) fail(line, "duplicate key '" + path.back() + "'");
        (*slot)[path.back()] = std::move(value);
        cur.skip_ws(false);
        if (!cur.done() && cur.peek() != '\n') fail(line, "trailing characters after value");
    }
}

nlohmann::json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

}  // namespace fkmc::toml
