#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace facematch {

/// 64-bit FNV-1a. Used for config digests and topology identifiers; not a
/// cryptographic hash.
class Fnv1a
{
public:
    Fnv1a& update(std::string_view bytes) noexcept
    {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= 0x100000001b3ULL;
        }
        return *this;
    }

    template <typename T>
    Fnv1a& update_value(const T& value) noexcept
    {
        return update(std::string_view(reinterpret_cast<const char*>(&value), sizeof(T)));
    }

    std::uint64_t value() const noexcept { return state_; }

    std::string hex() const
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
        return buf;
    }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string digest_hex(std::string_view bytes)
{
    return Fnv1a{}.update(bytes).hex();
}

} // namespace facematch
