#pragma once
// Uniform pass/fail reporting: checkers emit CheckResult rows, printed as
// stable single-line records that drivers can parse back.

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fglab {

struct CheckResult {
    std::string name;    // dotted path, no whitespace
    bool pass = false;
    std::string detail;  // free text, single line
};

inline std::string check_line(const CheckResult& c) {
    std::string n = c.name, d = c.detail;
    for (auto& ch : n)
        if (ch == ' ' || ch == '\t' || ch == '\n') ch = '_';
    for (auto& ch : d)
        if (ch == '\n') ch = ' ';
    return "CHECK " + n + (c.pass ? " PASS" : " FAIL") + (d.empty() ? "" : " " + d);
}

inline std::optional<CheckResult> parse_check_line(const std::string& line) {
    std::istringstream is(line);
    std::string tag, name, verdict;
    if (!(is >> tag >> name >> verdict) || tag != "CHECK") return std::nullopt;
    if (verdict != "PASS" && verdict != "FAIL") return std::nullopt;
    CheckResult c{name, verdict == "PASS", ""};
    std::string rest;
    std::getline(is, rest);
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    c.detail = rest;
    return c;
}

struct Report {
    std::vector<CheckResult> checks;

    void add(std::string name, bool pass, std::string detail = "") {
        checks.push_back({std::move(name), pass, std::move(detail)});
    }
    void merge(const Report& o) {
        checks.insert(checks.end(), o.checks.begin(), o.checks.end());
    }
    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    int failures() const {
        int n = 0;
        for (const auto& c : checks) n += c.pass ? 0 : 1;
        return n;
    }
    std::string to_text() const {
        std::string out;
        for (const auto& c : checks) out += check_line(c) + "\n";
        return out;
    }
};

}  // namespace fglab
