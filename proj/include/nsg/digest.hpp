#pragma once

#include <openssl/evp.h>

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nsg {

// SHA-256 as lowercase hex. Content addresses (record ids, transcript ids,
// config digests) all go through here so they are stable across runs and
// platforms.
inline std::string sha256_hex(std::string_view data) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &out_len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(out_len * 2);
    for (unsigned int i = 0; i < out_len; ++i) {
        s.push_back(hex[out[i] >> 4]);
        s.push_back(hex[out[i] & 0xf]);
    }
    return s;
}

// Short content id: first 16 hex chars of the sha256. Enough for the record
// and pair id spaces used here while keeping files readable.
inline std::string short_digest(std::string_view data) {
    return sha256_hex(data).substr(0, 16);
}

}  // namespace nsg
