#include "geotrace/ipv4.hpp"

#include <charconv>

namespace geotrace {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
    std::uint32_t value = 0;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    for (int octet = 0; octet < 4; ++octet) {
        if (octet > 0) {
            if (p == end || *p != '.') return std::nullopt;
            ++p;
        }
        if (p == end || *p < '0' || *p > '9') return std::nullopt;
        unsigned part = 0;
        auto [next, ec] = std::from_chars(p, end, part);
        if (ec != std::errc{} || part > 255 || next - p > 3) return std::nullopt;
        p = next;
        value = (value << 8) | part;
    }
    if (p != end) return std::nullopt;
    return Ipv4{value};
}

std::string Ipv4::to_string() const {
    std::string out;
    out.reserve(15);
    for (int shift = 24; shift >= 0; shift -= 8) {
        out += std::to_string((value >> shift) & 0xffu);
        if (shift) out += '.';
    }
    return out;
}

bool Ipv4Prefix::contains(Ipv4 ip) const {
    if (length == 0) return true;
    const std::uint32_t mask = length >= 32 ? 0xffffffffu : ~((1u << (32 - length)) - 1u);
    return (ip.value & mask) == (network.value & mask);
}

std::optional<Ipv4Prefix> Ipv4Prefix::parse(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto ip = Ipv4::parse(text.substr(0, slash));
    if (!ip) return std::nullopt;
    auto len_text = text.substr(slash + 1);
    int len = -1;
    auto [ptr, ec] = std::from_chars(len_text.data(), len_text.data() + len_text.size(), len);
    if (ec != std::errc{} || ptr != len_text.data() + len_text.size() || len < 0 || len > 32) return std::nullopt;
    return Ipv4Prefix{*ip, len};
}

PrefixSet PrefixSet::default_bogons() {
    static constexpr const char* kBogons[] = {
        "0.0.0.0/8",       "10.0.0.0/8",      "100.64.0.0/10",   "127.0.0.0/8",
        "169.254.0.0/16",  "172.16.0.0/12",   "192.0.0.0/24",    "192.0.2.0/24",
        "192.168.0.0/16",  "198.18.0.0/15",   "198.51.100.0/24", "203.0.113.0/24",
        "224.0.0.0/4",     "240.0.0.0/4",
    };
    PrefixSet set;
    for (const char* text : kBogons) set.add(*Ipv4Prefix::parse(text));
    return set;
}

bool PrefixSet::contains(Ipv4 ip) const {
    for (const auto& p : prefixes_) {
        if (p.contains(ip)) return true;
    }
    return false;
}

}  // namespace geotrace
