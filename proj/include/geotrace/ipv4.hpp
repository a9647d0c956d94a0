#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace geotrace {

/// IPv4 address held in host byte order so numeric comparison matches
/// dotted-quad ordering.
struct Ipv4 {
    std::uint32_t value = 0;

    constexpr Ipv4() = default;
    constexpr explicit Ipv4(std::uint32_t v) : value(v) {}
    constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
        : value((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) | (std::uint32_t{c} << 8) | d) {}

    static std::optional<Ipv4> parse(std::string_view text);
    std::string to_string() const;

    friend constexpr auto operator<=>(Ipv4, Ipv4) = default;
};

struct Ipv4Prefix {
    Ipv4 network;
    int length = 0;

    bool contains(Ipv4 ip) const;
    /// Accepts "a.b.c.d/len".
    static std::optional<Ipv4Prefix> parse(std::string_view text);
};

/// Set of prefixes treated as non-geolocatable (private, loopback, bogon).
class PrefixSet {
public:
    PrefixSet() = default;
    explicit PrefixSet(std::vector<Ipv4Prefix> prefixes) : prefixes_(std::move(prefixes)) {}

    /// RFC1918, loopback, link-local, CGNAT, documentation, benchmarking,
    /// multicast and reserved space.
    static PrefixSet default_bogons();

    void add(Ipv4Prefix p) { prefixes_.push_back(p); }
    bool contains(Ipv4 ip) const;
    bool empty() const { return prefixes_.empty(); }

private:
    std::vector<Ipv4Prefix> prefixes_;
};

}  // namespace geotrace

template <>
struct std::hash<geotrace::Ipv4> {
    std::size_t operator()(geotrace::Ipv4 ip) const noexcept { return std::hash<std::uint32_t>{}(ip.value); }
};
