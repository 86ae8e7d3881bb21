#include "scgan/params.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "scgan/errors.hpp"

namespace scgan {

std::size_t ParamStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (has(name)) throw UsageError("duplicate parameter name '" + name + "'");
    ParamEntry e;
    e.name = name;
    e.rows = rows;
    e.cols = cols;
    e.values.assign(rows * cols, 0.0);
    e.grad.assign(rows * cols, 0.0);
    entries_.push_back(std::move(e));
    return entries_.size() - 1;
}

bool ParamStore::has(const std::string& name) const {
    for (const auto& e : entries_)
        if (e.name == name) return true;
    return false;
}

std::size_t ParamStore::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw UsageError("unknown parameter name '" + name + "'");
}

std::size_t ParamStore::total_size() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.values.size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

namespace {

constexpr char kMagic[4] = {'S', 'C', 'G', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void write_f64(std::ostream& os, double v) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw CheckpointError("truncated file while reading u32");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double read_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw CheckpointError("truncated file while reading f64");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i) u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

constexpr std::uint32_t kMaxNameLen = 1u << 16;
constexpr std::uint64_t kMaxEntryElems = 1ull << 28;

}  // namespace

void save_params(const ParamStore& store, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(store.count()));
    for (std::size_t i = 0; i < store.count(); ++i) {
        const ParamEntry& e = store.entry(i);
        write_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        write_u32(os, static_cast<std::uint32_t>(e.rows));
        write_u32(os, static_cast<std::uint32_t>(e.cols));
        for (double v : e.values) write_f64(os, v);
    }
    if (!os) throw IoError("write failed for '" + path.string() + "'");
}

ParamStore load_params(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw CheckpointError("bad magic in '" + path.string() + "'");
    const std::uint32_t version = read_u32(is);
    if (version != kVersion)
        throw CheckpointError("unsupported version " + std::to_string(version) + " in '" +
                              path.string() + "'");
    const std::uint32_t count = read_u32(is);
    ParamStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(is);
        if (name_len > kMaxNameLen)
            throw CheckpointError("implausible name length in '" + path.string() + "'");
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len))
            throw CheckpointError("truncated name in '" + path.string() + "'");
        const std::uint32_t rows = read_u32(is);
        const std::uint32_t cols = read_u32(is);
        const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
        if (n > kMaxEntryElems)
            throw CheckpointError("implausible entry shape in '" + path.string() + "'");
        std::size_t idx;
        try {
            idx = store.add(name, rows, cols);
        } catch (const UsageError&) {
            throw CheckpointError("duplicate entry '" + name + "' in '" + path.string() + "'");
        }
        ParamEntry& e = store.entry(idx);
        for (std::uint64_t j = 0; j < n; ++j) e.values[j] = read_f64(is);
    }
    is.peek();
    if (!is.eof()) throw CheckpointError("trailing data in '" + path.string() + "'");
    return store;
}

ParamStore merge_stores(const std::vector<std::pair<std::string, const ParamStore*>>& parts) {
    ParamStore merged;
    for (const auto& [prefix, store] : parts) {
        for (std::size_t i = 0; i < store->count(); ++i) {
            const ParamEntry& e = store->entry(i);
            const std::size_t idx = merged.add(prefix + e.name, e.rows, e.cols);
            merged.entry(idx).values = e.values;
        }
    }
    return merged;
}

void split_store(const ParamStore& merged,
                 const std::vector<std::pair<std::string, ParamStore*>>& parts) {
    for (std::size_t i = 0; i < merged.count(); ++i) {
        const ParamEntry& e = merged.entry(i);
        bool routed = false;
        for (const auto& [prefix, store] : parts) {
            if (e.name.rfind(prefix, 0) != 0) continue;
            const std::string local = e.name.substr(prefix.size());
            if (!store->has(local))
                throw CheckpointError("entry '" + e.name + "' has no destination parameter");
            ParamEntry& dst = store->entry(local);
            if (dst.rows != e.rows || dst.cols != e.cols)
                throw CheckpointError("shape mismatch for '" + e.name + "': file has " +
                                      std::to_string(e.rows) + "x" + std::to_string(e.cols) +
                                      ", model has " + std::to_string(dst.rows) + "x" +
                                      std::to_string(dst.cols));
            dst.values = e.values;
            routed = true;
            break;
        }
        if (!routed) throw CheckpointError("entry '" + e.name + "' matches no known prefix");
    }
}

}  // namespace scgan
