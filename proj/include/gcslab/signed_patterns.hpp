#pragma once

// Enumeration of signed k-group-sparse patterns with exactly one non-zero per
// block (the hard family V and its scaled copies).
//
// Patterns are indexed by a mixed-radix code: block b contributes the digit
// d_b = 2 * index + (sign < 0), and block 0 is the most significant digit.
// Enumeration order is increasing code, i.e. lexicographic in (d_0, ..., d_{k-1}).

#include <gcslab/core_model.hpp>
#include <gcslab/error.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace gcslab {

// |V| = (2 n/k)^k as a double (may exceed integer range).
inline double signed_pattern_count(std::size_t block_len, std::size_t k)
{
    return std::pow(2.0 * static_cast<double>(block_len), static_cast<double>(k));
}

inline SignedSupport decode_pattern(std::uint64_t code, std::size_t block_len, std::size_t k)
{
    SignedSupport s;
    s.entries.resize(k);
    const std::uint64_t radix = 2 * block_len;
    for (std::size_t b = k; b-- > 0;) {
        const std::uint64_t d = code % radix;
        code /= radix;
        s.entries[b].index = static_cast<std::size_t>(d / 2);
        s.entries[b].sign = (d % 2 == 0) ? 1 : -1;
    }
    return s;
}

inline std::uint64_t encode_pattern(const SignedSupport& s, std::size_t block_len)
{
    const std::uint64_t radix = 2 * block_len;
    std::uint64_t code = 0;
    for (const auto& e : s.entries) {
        code = code * radix + 2 * e.index + (e.sign < 0 ? 1 : 0);
    }
    return code;
}

// Calls fn(code, support) for every pattern, in increasing code order.
// Rejects enumerations larger than cap.
template <class Fn>
void for_each_signed_pattern(std::size_t block_len, std::size_t k, double cap, Fn&& fn)
{
    detail::require(block_len > 0 && k > 0, "for_each_signed_pattern: empty shape");
    const double total = signed_pattern_count(block_len, k);
    if (total > cap) throw CapExceeded("signed pattern enumeration exceeds cap", total, cap);
    const auto count = static_cast<std::uint64_t>(total);
    SignedSupport s;
    s.entries.assign(k, SignedSupport::Entry{0, 1});
    std::vector<std::uint64_t> digit(k, 0);
    const std::uint64_t radix = 2 * block_len;
    for (std::uint64_t code = 0; code < count; ++code) {
        fn(code, static_cast<const SignedSupport&>(s));
        // increment the mixed-radix counter, least significant block last
        for (std::size_t b = k; b-- > 0;) {
            if (++digit[b] < radix) {
                s.entries[b].index = static_cast<std::size_t>(digit[b] / 2);
                s.entries[b].sign = (digit[b] % 2 == 0) ? 1 : -1;
                break;
            }
            digit[b] = 0;
            s.entries[b] = {0, 1};
        }
    }
}

} // namespace gcslab
