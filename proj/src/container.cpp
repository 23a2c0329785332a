#include "gdq/container.hpp"

#include "gdq/errors.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace gdq {
namespace {

constexpr char kMagic[4] = {'G', 'D', 'Q', '1'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 16;

static_assert(std::endian::native == std::endian::little,
              "container blobs are stored little-endian; big-endian hosts need byte swapping");

std::size_t align_up(std::size_t v) { return (v + kBlobAlignment - 1) / kBlobAlignment * kBlobAlignment; }

std::string shape_string(const std::array<std::size_t, 4>& d) {
    return "[" + std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) +
           "," + std::to_string(d[3]) + "]";
}

} // namespace

void write_container(const std::filesystem::path& path, const Container& container) {
    nlohmann::ordered_json manifest = container.manifest;
    nlohmann::ordered_json table = nlohmann::ordered_json::array();

    // Offsets depend on the manifest length, which depends on the offsets; the
    // fixed-width placeholder pass converges because offsets only grow.
    std::size_t data_start = 0;
    std::string text;
    for (int pass = 0; pass < 16; ++pass) {
        table = nlohmann::ordered_json::array();
        std::size_t offset = data_start;
        for (const auto& [name, t] : container.tensors) {
            table.push_back({{"name", name},
                             {"shape", t.dims()},
                             {"offset", offset},
                             {"dtype", "f32le"}});
            offset = align_up(offset + t.size() * sizeof(float));
        }
        manifest["tensors"] = table;
        text = manifest.dump();
        const std::size_t needed = align_up(kHeaderSize + text.size());
        if (needed == data_start) break;
        data_start = needed;
    }

    std::vector<char> bytes(data_start, 0);
    std::memcpy(bytes.data(), kMagic, 4);
    const std::uint32_t version = kVersion;
    const std::uint64_t manifest_len = text.size();
    std::memcpy(bytes.data() + 4, &version, 4);
    std::memcpy(bytes.data() + 8, &manifest_len, 8);
    std::memcpy(bytes.data() + kHeaderSize, text.data(), text.size());
    for (const auto& entry : table) {
        const auto& t = container.tensors.at(entry["name"].get<std::string>());
        const std::size_t offset = entry["offset"].get<std::size_t>();
        bytes.resize(std::max(bytes.size(), offset), 0);
        const char* raw = reinterpret_cast<const char*>(t.data());
        bytes.insert(bytes.end(), raw, raw + t.size() * sizeof(float));
        bytes.resize(align_up(bytes.size()), 0);
    }

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file " + path.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    const std::string where = path.string() + ": ";
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw LoadError(where + "bad magic, not a GDQ model container");
    }
    std::uint32_t version = 0;
    std::uint64_t manifest_len = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&manifest_len, bytes.data() + 8, 8);
    if (version != kVersion) {
        throw LoadError(where + "unsupported container version " + std::to_string(version));
    }
    if (manifest_len > bytes.size() - kHeaderSize) throw LoadError(where + "truncated manifest");

    Container c;
    try {
        c.manifest = nlohmann::ordered_json::parse(bytes.begin() + kHeaderSize,
                                                   bytes.begin() + kHeaderSize +
                                                       static_cast<std::ptrdiff_t>(manifest_len));
    } catch (const nlohmann::json::exception& e) {
        throw LoadError(where + "manifest is not valid JSON (" + e.what() + ")");
    }
    if (!c.manifest.contains("tensors") || !c.manifest["tensors"].is_array()) {
        throw LoadError(where + "manifest has no tensor table");
    }
    for (const auto& entry : c.manifest["tensors"]) {
        std::string name = "<unnamed>";
        try {
            name = entry.at("name").get<std::string>();
            if (entry.at("dtype").get<std::string>() != "f32le") {
                throw LoadError(where + "tensor '" + name + "' has unsupported dtype");
            }
            const auto shape = entry.at("shape").get<std::array<std::size_t, 4>>();
            const auto offset = entry.at("offset").get<std::size_t>();
            const std::size_t count = shape[0] * shape[1] * shape[2] * shape[3];
            if (offset % kBlobAlignment != 0) {
                throw LoadError(where + "tensor '" + name + "' is not 64-byte aligned");
            }
            if (offset > bytes.size() || count * sizeof(float) > bytes.size() - offset) {
                throw LoadError(where + "truncated data for tensor '" + name + "'");
            }
            std::vector<float> data(count);
            std::memcpy(data.data(), bytes.data() + offset, count * sizeof(float));
            c.tensors.emplace(name, Tensor(shape, std::move(data)));
        } catch (const nlohmann::json::exception& e) {
            throw LoadError(where + "malformed table entry for tensor '" + name + "' (" +
                            e.what() + ")");
        }
    }
    return c;
}

const Tensor& require_tensor(const Container& c, const std::string& name,
                             const std::array<std::size_t, 4>& dims) {
    const auto it = c.tensors.find(name);
    if (it == c.tensors.end()) throw LoadError("missing tensor '" + name + "'");
    if (it->second.dims() != dims) {
        throw LoadError("tensor '" + name + "' has shape " + shape_string(it->second.dims()) +
                        ", expected " + shape_string(dims));
    }
    return it->second;
}

} // namespace gdq
