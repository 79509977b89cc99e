// SPDX-License-Identifier: Apache-2.0
#include "mocsim/kvfile.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mocsim {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

std::string strip(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

}  // namespace

bool parse_long(const std::string& token, long& out) {
    if (token.empty()) return false;
    errno = 0;
    char* end = nullptr;
    long v = std::strtol(token.c_str(), &end, 10);
    if (errno != 0 || end == token.c_str() || *end != '\0') return false;
    out = v;
    return true;
}

bool parse_double(const std::string& token, double& out) {
    if (token.empty()) return false;
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(token.c_str(), &end);
    if (errno != 0 || end == token.c_str() || *end != '\0') return false;
    out = v;
    return true;
}

Parsed<KvFile> KvFile::parse_text(const std::string& text) {
    Parsed<KvFile> result;
    KvFile file;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::string s = strip(raw);
        if (s.empty()) continue;
        auto eq = s.find('=');
        if (eq == std::string::npos) {
            result.issues.push_back({"ParseError", "expected `key = value`, got: " + s, line});
            continue;
        }
        KvEntry e;
        e.key = strip(s.substr(0, eq));
        e.values = split_ws(s.substr(eq + 1));
        e.line = line;
        if (e.key.empty()) {
            result.issues.push_back({"ParseError", "empty key", line});
            continue;
        }
        if (e.values.empty()) {
            result.issues.push_back({"ParseError", "key `" + e.key + "` has no value", line});
            continue;
        }
        file.entries.push_back(std::move(e));
    }
    if (result.issues.empty()) result.value = std::move(file);
    return result;
}

Parsed<KvFile> KvFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        Parsed<KvFile> result;
        result.issues.push_back({"MissingFile", "cannot open " + path, -1});
        return result;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

KvReader::KvReader(const KvFile& file) : file_(file), consumed_(file.entries.size(), false) {}

bool KvReader::has(const std::string& key) const {
    for (const auto& e : file_.entries)
        if (e.key == key) return true;
    return false;
}

const KvEntry* KvReader::find(const std::string& key) {
    const KvEntry* found = nullptr;
    for (size_t i = 0; i < file_.entries.size(); ++i) {
        if (file_.entries[i].key != key) continue;
        if (found) {
            add_issue("DuplicateKey", "key `" + key + "` given more than once",
                      file_.entries[i].line);
        } else {
            found = &file_.entries[i];
        }
        consumed_[i] = true;
    }
    return found;
}

long KvReader::get_int(const std::string& key, long fallback) {
    const KvEntry* e = find(key);
    if (!e) return fallback;
    long v;
    if (e->values.size() != 1 || !parse_long(e->values[0], v)) {
        add_issue("ParseError", "key `" + key + "` expects one integer", e->line);
        return fallback;
    }
    return v;
}

double KvReader::get_double(const std::string& key, double fallback) {
    const KvEntry* e = find(key);
    if (!e) return fallback;
    double v;
    if (e->values.size() != 1 || !parse_double(e->values[0], v)) {
        add_issue("ParseError", "key `" + key + "` expects one number", e->line);
        return fallback;
    }
    return v;
}

std::string KvReader::get_string(const std::string& key, const std::string& fallback) {
    const KvEntry* e = find(key);
    if (!e) return fallback;
    if (e->values.size() != 1) {
        add_issue("ParseError", "key `" + key + "` expects one token", e->line);
        return fallback;
    }
    return e->values[0];
}

bool KvReader::get_bool(const std::string& key, bool fallback) {
    const KvEntry* e = find(key);
    if (!e) return fallback;
    if (e->values.size() == 1) {
        if (e->values[0] == "true") return true;
        if (e->values[0] == "false") return false;
    }
    add_issue("ParseError", "key `" + key + "` expects true or false", e->line);
    return fallback;
}

std::vector<std::string> KvReader::get_tokens(const std::string& key) {
    const KvEntry* e = find(key);
    if (!e) return {};
    return e->values;
}

std::vector<const KvEntry*> KvReader::take_prefix(const std::string& prefix) {
    std::vector<const KvEntry*> out;
    for (size_t i = 0; i < file_.entries.size(); ++i) {
        if (!consumed_[i] && file_.entries[i].key.rfind(prefix, 0) == 0) {
            out.push_back(&file_.entries[i]);
            consumed_[i] = true;
        }
    }
    return out;
}

void KvReader::flag_unknown_keys() {
    for (size_t i = 0; i < file_.entries.size(); ++i) {
        if (!consumed_[i]) {
            add_issue("UnknownKey", "unrecognized key `" + file_.entries[i].key + "`",
                      file_.entries[i].line);
        }
    }
}

void KvReader::add_issue(std::string code, std::string message, int line) {
    issues_.push_back({std::move(code), std::move(message), line});
}

}  // namespace mocsim
