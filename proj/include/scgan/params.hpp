#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace scgan {

// One named, shaped block of trainable parameters with a gradient slot.
struct ParamEntry {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<double> grad;
};

// Ordered collection of uniquely named parameter blocks. All networks keep
// their state here; gradients accumulate (add) until zero_grad.
class ParamStore {
public:
    // Appends a zero-initialized entry, returns its index.
    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

    bool has(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    ParamEntry& entry(std::size_t i) { return entries_[i]; }
    const ParamEntry& entry(std::size_t i) const { return entries_[i]; }
    ParamEntry& entry(const std::string& name) { return entries_[index_of(name)]; }
    const ParamEntry& entry(const std::string& name) const { return entries_[index_of(name)]; }

    std::size_t count() const { return entries_.size(); }
    std::size_t total_size() const;

    void zero_grad();

private:
    std::vector<ParamEntry> entries_;
};

// Checkpoint format: magic "SCG1", u32 version, u32 entry count, then per
// entry: u32 name length, UTF-8 name, u32 rows, u32 cols, little-endian
// IEEE-754 doubles. Gradient slots are not serialized.
void save_params(const ParamStore& store, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

// Combines several stores into one, prefixing entry names; used to keep a
// multi-network model in a single checkpoint file.
ParamStore merge_stores(const std::vector<std::pair<std::string, const ParamStore*>>& parts);

// Inverse of merge_stores: routes entries back by prefix into shape-matching
// stores. Throws CheckpointError on unknown names or shape mismatch.
void split_store(const ParamStore& merged,
                 const std::vector<std::pair<std::string, ParamStore*>>& parts);

}  // namespace scgan
