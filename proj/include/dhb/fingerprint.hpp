#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace dhb {

// 64-bit FNV-1a. Used to tie artifacts (scenarios, surfaces, checkpoints)
// to the configuration that produced them.
class Fingerprint {
public:
    Fingerprint& bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= p[i];
            h_ *= 0x100000001b3ULL;
        }
        return *this;
    }
    Fingerprint& add(double v) {
        auto u = std::bit_cast<std::uint64_t>(v);
        return bytes(&u, sizeof u);
    }
    Fingerprint& add(std::uint64_t v) { return bytes(&v, sizeof v); }
    Fingerprint& add(std::int64_t v) { return bytes(&v, sizeof v); }
    Fingerprint& add(int v) { return add(static_cast<std::int64_t>(v)); }
    Fingerprint& add(std::string_view s) {
        add(static_cast<std::uint64_t>(s.size()));
        return bytes(s.data(), s.size());
    }
    Fingerprint& add(std::span<const double> v) {
        add(static_cast<std::uint64_t>(v.size()));
        for (double x : v) add(x);
        return *this;
    }

    [[nodiscard]] std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace dhb
