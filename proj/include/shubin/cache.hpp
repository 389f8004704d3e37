#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "shubin/spectral.hpp"

namespace shubin {

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& p);

struct CachedEigenSystem {
    EigenSystem es;
    bool cached = false;
    std::string key;
    std::string warning;  // set when a stored entry failed its checksum
};

// Eigensystems stored under dir/<key>.eig, key = sha256 of (k, m, n, N, L, count, options).
// Each file ends with the sha256 of its payload; a mismatch triggers a recompute.
class EigenCache {
public:
    explicit EigenCache(std::filesystem::path dir);

    std::string key(const OperatorSpec& spec, const Grid& grid, int count, const EigenOptions& opts) const;
    CachedEigenSystem get(const OperatorSpec& spec, const Grid& grid, int count, const EigenOptions& opts = {});

private:
    std::filesystem::path dir_;
};

}  // namespace shubin
