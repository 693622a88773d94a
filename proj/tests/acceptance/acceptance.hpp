#pragma once

#include <chrono>
#include <cstdio>
#include <string>

// One criterion per binary: detail lines for each check, then a single
// PASS/FAIL verdict line.
namespace polyglot::acceptance {

class Criterion {
public:
    Criterion(std::string id, std::string title)
        : id_(std::move(id)), title_(std::move(title)), start_(std::chrono::steady_clock::now()) {}

    bool check(const std::string& name, bool ok, const std::string& detail = {}) {
        std::printf("  [%s] %s%s%s\n", ok ? "ok" : "failed", name.c_str(), detail.empty() ? "" : ": ",
                    detail.c_str());
        std::fflush(stdout);
        ok_ = ok_ && ok;
        return ok;
    }

    [[nodiscard]] double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    /// Checks the runtime budget, prints the verdict, returns the exit code.
    int finish(double budget_seconds) {
        const double t = elapsed_seconds();
        char detail[64];
        std::snprintf(detail, sizeof detail, "%.1f s (limit %.0f s)", t, budget_seconds);
        check("runtime", t < budget_seconds, detail);
        std::printf("%s %s: %s\n", ok_ ? "PASS" : "FAIL", id_.c_str(), title_.c_str());
        std::fflush(stdout);
        return ok_ ? 0 : 1;
    }

private:
    std::string id_;
    std::string title_;
    std::chrono::steady_clock::time_point start_;
    bool ok_ = true;
};

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

}  // namespace polyglot::acceptance
