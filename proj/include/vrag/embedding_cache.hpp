#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace vrag {

/// Append-only embedding store, one JSON record per line:
///   {"encoder_id": ..., "subject_id": ..., "dim": N, "vector_b64": ...}
/// vector_b64 is base64 of the little-endian 32-bit float entries, so a hit
/// returns bit-identical vectors on every platform. Writes are serialized;
/// reads are safe once loaded.
class EmbeddingCache {
public:
    /// In-memory only (no backing file).
    EmbeddingCache() = default;

    /// Backed by `path`; loads existing records (last record wins per key).
    explicit EmbeddingCache(std::filesystem::path path);

    /// Attach a backing file to a default-constructed cache and load it.
    void open(std::filesystem::path path);

    /// nullopt on miss.
    std::optional<std::vector<float>> get(const std::string& encoder_id,
                                          const std::string& subject_id) const;

    bool contains(const std::string& encoder_id, const std::string& subject_id) const;

    /// Insert or overwrite; appends to the backing file when one is set.
    void put(const std::string& encoder_id, const std::string& subject_id,
             const std::vector<float>& vector);

    std::size_t size() const;
    const std::filesystem::path& path() const { return path_; }

    static std::string encode_vector(const std::vector<float>& v);
    static std::vector<float> decode_vector(const std::string& b64, std::size_t dim);

private:
    void load();

    std::filesystem::path path_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, std::vector<float>> entries_;
};

} // namespace vrag
