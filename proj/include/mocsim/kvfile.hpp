// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mocsim/common.hpp"

namespace mocsim {

// Hierarchical key-value text format shared by topology and plan files:
//
//   # comment
//   mesh.width = 3
//   seeds = 1 2 3
//
// One `dotted.key = token [token ...]` per line. Keys may repeat only if a
// reader expects it; readers flag unknown and duplicate keys themselves.
struct KvEntry {
    std::string key;
    std::vector<std::string> values;
    int line = 0;
};

struct KvFile {
    std::vector<KvEntry> entries;

    static Parsed<KvFile> parse_text(const std::string& text);
    static Parsed<KvFile> parse_file(const std::string& path);
};

// Typed accessor over a KvFile. Tracks which entries were consumed so a
// reader can reject misspelled keys instead of silently ignoring them.
class KvReader {
public:
    explicit KvReader(const KvFile& file);

    bool has(const std::string& key) const;
    const KvEntry* find(const std::string& key);  // marks consumed

    // Scalar getters: record an Issue and return fallback on bad input.
    long get_int(const std::string& key, long fallback);
    double get_double(const std::string& key, double fallback);
    std::string get_string(const std::string& key, const std::string& fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<std::string> get_tokens(const std::string& key);

    // All entries whose key starts with prefix, marked consumed.
    std::vector<const KvEntry*> take_prefix(const std::string& prefix);

    // Unconsumed entries become UnknownKey issues.
    void flag_unknown_keys();

    std::vector<Issue>& issues() { return issues_; }
    void add_issue(std::string code, std::string message, int line = -1);

private:
    const KvFile& file_;
    std::vector<bool> consumed_;
    std::vector<Issue> issues_;
};

bool parse_long(const std::string& token, long& out);
bool parse_double(const std::string& token, double& out);

}  // namespace mocsim
