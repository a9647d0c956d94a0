#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <ostream>
#include <string>

namespace geotrace {

/// Warning counters keyed by category. Every warning emitted during a run
/// is counted here and echoed in the final summary line.
class Diagnostics {
public:
    explicit Diagnostics(std::ostream* sink = nullptr) : sink_(sink) {}

    void warn(const std::string& category, const std::string& message);
    /// One message standing for `n` occurrences; no-op when n is 0.
    void warn(const std::string& category, const std::string& message, std::size_t n);
    void info(const std::string& message);

    std::size_t count(const std::string& category) const;
    std::size_t total() const;
    std::map<std::string, std::size_t> counts() const;

    /// "warnings: total=N cat_a=x cat_b=y" with categories in sorted order.
    std::string summary_line() const;

private:
    std::ostream* sink_;
    mutable std::mutex mu_;
    std::map<std::string, std::size_t> counts_;
};

}  // namespace geotrace
