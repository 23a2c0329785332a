#pragma once

#include "gdq/tensor.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace gdq {

/// In-memory form of a `.gdq` model file.
///
/// Layout: 4-byte magic "GDQ1", u32 format version, u64 manifest length, the
/// JSON manifest, zero padding, then little-endian float32 blobs. Every blob
/// starts at an absolute file offset that is a multiple of 64. The manifest
/// carries a "tensors" table of {name, shape, offset, dtype}.
struct Container {
    nlohmann::ordered_json manifest = nlohmann::ordered_json::object();
    std::map<std::string, Tensor> tensors;
};

inline constexpr std::size_t kBlobAlignment = 64;

void write_container(const std::filesystem::path& path, const Container& container);

/// Reads and validates the whole file; throws LoadError naming the offending tensor.
Container read_container(const std::filesystem::path& path);

/// Tensor lookup with a shape check; throws LoadError on mismatch or absence.
const Tensor& require_tensor(const Container& c, const std::string& name,
                             const std::array<std::size_t, 4>& dims);

} // namespace gdq
