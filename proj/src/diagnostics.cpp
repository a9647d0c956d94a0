#include "geotrace/diagnostics.hpp"

namespace geotrace {

void Diagnostics::warn(const std::string& category, const std::string& message) {
    std::lock_guard lock(mu_);
    ++counts_[category];
    if (sink_) *sink_ << "warning [" << category << "] " << message << '\n';
}

void Diagnostics::warn(const std::string& category, const std::string& message, std::size_t n) {
    if (n == 0) return;
    std::lock_guard lock(mu_);
    counts_[category] += n;
    if (sink_) *sink_ << "warning [" << category << "] " << message << " (x" << n << ")\n";
}

void Diagnostics::info(const std::string& message) {
    std::lock_guard lock(mu_);
    if (sink_) *sink_ << message << '\n';
}

std::size_t Diagnostics::count(const std::string& category) const {
    std::lock_guard lock(mu_);
    auto it = counts_.find(category);
    return it == counts_.end() ? 0 : it->second;
}

std::size_t Diagnostics::total() const {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (const auto& [_, c] : counts_) n += c;
    return n;
}

std::map<std::string, std::size_t> Diagnostics::counts() const {
    std::lock_guard lock(mu_);
    return counts_;
}

std::string Diagnostics::summary_line() const {
    auto snapshot = counts();
    std::size_t n = 0;
    for (const auto& [_, c] : snapshot) n += c;
    std::string line = "warnings: total=" + std::to_string(n);
    for (const auto& [cat, c] : snapshot) line += " " + cat + "=" + std::to_string(c);
    return line;
}

}  // namespace geotrace
