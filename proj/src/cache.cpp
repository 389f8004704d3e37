#include "shubin/cache.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace shubin {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string sha256_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

namespace {

constexpr char magic[8] = {'S', 'H', 'B', 'E', 'I', 'G', '0', '1'};

template <class T>
void put(std::string& buf, const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_vec(std::string& buf, const double* p, std::size_t n) {
    put(buf, std::uint64_t(n));
    buf.append(reinterpret_cast<const char*>(p), n * sizeof(double));
}

struct Reader {
    std::string_view s;
    std::size_t pos = 0;

    template <class T>
    T get() {
        if (pos + sizeof(T) > s.size()) throw std::runtime_error("truncated cache entry");
        T v;
        std::memcpy(&v, s.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
    void get_vec(double* p, std::size_t n) {
        if (get<std::uint64_t>() != n) throw std::runtime_error("cache entry shape mismatch");
        if (pos + n * sizeof(double) > s.size()) throw std::runtime_error("truncated cache entry");
        std::memcpy(p, s.data() + pos, n * sizeof(double));
        pos += n * sizeof(double);
    }
};

std::string serialize(const EigenSystem& es) {
    std::string buf(magic, sizeof magic);
    put(buf, std::int32_t(es.grid.n));
    put(buf, std::int32_t(es.grid.N));
    put(buf, es.grid.L);
    put(buf, std::int32_t(es.requested));
    put(buf, std::int32_t(es.count()));
    put(buf, es.max_residual);
    put(buf, es.max_orthogonality_error);
    put_vec(buf, es.eigenvalues.data(), std::size_t(es.eigenvalues.size()));
    put_vec(buf, es.spatial_mass.data(), std::size_t(es.spatial_mass.size()));
    put_vec(buf, es.frequency_mass.data(), std::size_t(es.frequency_mass.size()));
    put_vec(buf, es.vectors.data(), std::size_t(es.vectors.size()));
    return buf;
}

EigenSystem deserialize(std::string_view payload, const OperatorSpec& spec, const Grid& grid) {
    if (payload.size() < sizeof magic || std::memcmp(payload.data(), magic, sizeof magic) != 0)
        throw std::runtime_error("bad cache magic");
    Reader r{payload, sizeof magic};
    EigenSystem es;
    es.spec = spec;
    int n = r.get<std::int32_t>(), N = r.get<std::int32_t>();
    double L = r.get<double>();
    if (n != grid.n || N != grid.N || L != grid.L) throw std::runtime_error("cache entry grid mismatch");
    es.grid = grid;
    es.requested = r.get<std::int32_t>();
    int count = r.get<std::int32_t>();
    es.max_residual = r.get<double>();
    es.max_orthogonality_error = r.get<double>();
    es.eigenvalues.resize(count);
    es.spatial_mass.resize(count);
    es.frequency_mass.resize(count);
    es.vectors.resize(Eigen::Index(grid.size()), count);
    r.get_vec(es.eigenvalues.data(), std::size_t(count));
    r.get_vec(es.spatial_mass.data(), std::size_t(count));
    r.get_vec(es.frequency_mass.data(), std::size_t(count));
    r.get_vec(es.vectors.data(), std::size_t(es.vectors.size()));
    if (r.pos != payload.size()) throw std::runtime_error("trailing bytes in cache entry");
    return es;
}

}  // namespace

EigenCache::EigenCache(fs::path dir) : dir_(std::move(dir)) {}

std::string EigenCache::key(const OperatorSpec& spec, const Grid& grid, int count, const EigenOptions& opts) const {
    // s does not enter the eigenpairs
    char buf[256];
    std::snprintf(buf, sizeof buf, "k=%d;m=%d;n=%d;N=%d;L=%.17g;count=%d;tol=%.17g;outer=%.17g;freq=%d", spec.k,
                  spec.m, spec.n, grid.N, grid.L, count, opts.boundary_tol, opts.outer_fraction,
                  int(opts.frequency_test));
    return sha256_hex(buf);
}

CachedEigenSystem EigenCache::get(const OperatorSpec& spec, const Grid& grid, int count, const EigenOptions& opts) {
    CachedEigenSystem out;
    out.key = key(spec, grid, count, opts);
    fs::path file = dir_ / (out.key + ".eig");

    if (fs::exists(file)) {
        std::ifstream in(file, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string blob = ss.str();
        try {
            if (blob.size() < 64) throw std::runtime_error("short cache entry");
            std::string_view payload(blob.data(), blob.size() - 64);
            if (sha256_hex(payload) != blob.substr(blob.size() - 64)) throw std::runtime_error("checksum mismatch");
            out.es = deserialize(payload, spec, grid);
            out.cached = true;
            return out;
        } catch (const std::exception& e) {
            out.warning = "cache entry " + file.filename().string() + " rejected (" + e.what() + "); recomputed";
        }
    }

    out.es = eigensystem(assemble(spec, grid, true), count, opts);
    fs::create_directories(dir_);
    std::string payload = serialize(out.es);
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
        o << payload << sha256_hex(payload);
        if (!o) throw std::runtime_error("cannot write cache entry " + tmp.string());
    }
    fs::rename(tmp, file);
    return out;
}

}  // namespace shubin
