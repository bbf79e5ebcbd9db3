#pragma once

// Persistence: a self-describing binary tensor container shared by model
// checkpoints and bank exports, plain-text metadata sidecars, and CSV
// emission helpers. All binary payloads are little-endian doubles; loading
// is byte-exact with saving.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "alt/bank.hpp"
#include "alt/data.hpp"
#include "alt/model.hpp"

namespace alt {

// Container layout (version 1):
//   magic "ALTC" | u32 version | u32 tensor count | tensors...
// each tensor:
//   u32 name length | name bytes | u32 ndims | u64 dims... | f64 values...
// integers and doubles little-endian; values row-major.
inline constexpr std::uint32_t kContainerVersion = 1;

struct NamedTensor {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
};

void write_container(const std::filesystem::path& path,
                     std::span<const NamedTensor> tensors);

/// Throws on bad magic, unsupported version, truncation, or dims that do not
/// match the stored value count.
std::vector<NamedTensor> read_container(const std::filesystem::path& path);

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string config_hash;
    std::size_t iteration = 0;
    std::string config_json; // compact effective config, may be empty
};

/// Writes the container at `path` and a plain-text sidecar at `path` + ".meta"
/// (lines key=value: seed, config_hash, iteration, config).
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const OptimizerState& opt, const CheckpointMeta& meta);

struct Checkpoint {
    ModelParams params;
    OptimizerState opt;
    CheckpointMeta meta;
    bool has_meta = false; // sidecar present and parsed
};

/// Parameter values round-trip bit-exact. A missing sidecar is tolerated;
/// structural problems in the container are not.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Bank rows as two tensors ("bank.f", "bank.p") in the container format.
void export_bank(const std::filesystem::path& path, const FeatureBank& bank);

/// Validates unit-norm and simplex row invariants on load.
FeatureBank import_bank(const std::filesystem::path& path);

/// Shortest exact decimal for a double; infinities render as "inf"/"-inf".
/// Used for every CSV number so byte-level determinism is testable.
std::string format_double(double v);

/// One row per sample: feature columns, label, domain tag.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& ds);

} // namespace alt
