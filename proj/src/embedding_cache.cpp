#include "vrag/embedding_cache.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"
#include "vrag/strutil.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace vrag {

namespace fs = std::filesystem;
using nlohmann::json;

std::string EmbeddingCache::encode_vector(const std::vector<float>& v) {
    std::vector<std::uint8_t> bytes;
    bytes.reserve(v.size() * 4);
    for (float f : v) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(f);
        bytes.push_back(static_cast<std::uint8_t>(bits & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xFF));
    }
    return base64_encode(bytes.data(), bytes.size());
}

std::vector<float> EmbeddingCache::decode_vector(const std::string& b64,
                                                 std::size_t dim) {
    std::vector<std::uint8_t> bytes = base64_decode(b64);
    if (bytes.size() != dim * 4) {
        throw ParseError("cache record: vector_b64 length does not match dim");
    }
    std::vector<float> out(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        std::uint32_t bits = static_cast<std::uint32_t>(bytes[4 * i]) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                             (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
        out[i] = std::bit_cast<float>(bits);
    }
    return out;
}

EmbeddingCache::EmbeddingCache(fs::path path) : path_(std::move(path)) {
    load();
}

void EmbeddingCache::open(fs::path path) {
    std::lock_guard<std::mutex> lock(mutex_);
    path_ = std::move(path);
    entries_.clear();
    load();
}

void EmbeddingCache::load() {
    std::error_code ec;
    if (!fs::exists(path_, ec) || ec) return;
    for_each_ndjson(path_, [&](std::size_t line_no, const json& obj) {
        auto enc = obj.find("encoder_id");
        auto sub = obj.find("subject_id");
        auto dim = obj.find("dim");
        auto vec = obj.find("vector_b64");
        if (enc == obj.end() || !enc->is_string() || sub == obj.end() ||
            !sub->is_string() || dim == obj.end() || !dim->is_number_unsigned() ||
            vec == obj.end() || !vec->is_string()) {
            throw ParseError(path_.string() + ":" + std::to_string(line_no) +
                             ": malformed cache record");
        }
        entries_[{enc->get<std::string>(), sub->get<std::string>()}] =
            decode_vector(vec->get<std::string>(), dim->get<std::size_t>());
    });
}

std::optional<std::vector<float>> EmbeddingCache::get(
    const std::string& encoder_id, const std::string& subject_id) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find({encoder_id, subject_id});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

bool EmbeddingCache::contains(const std::string& encoder_id,
                              const std::string& subject_id) const {
    std::lock_guard lock(mutex_);
    return entries_.count({encoder_id, subject_id}) > 0;
}

void EmbeddingCache::put(const std::string& encoder_id, const std::string& subject_id,
                         const std::vector<float>& vector) {
    std::lock_guard lock(mutex_);
    entries_[{encoder_id, subject_id}] = vector;
    if (path_.empty()) return;
    json obj;
    obj["encoder_id"] = encoder_id;
    obj["subject_id"] = subject_id;
    obj["dim"] = vector.size();
    obj["vector_b64"] = encode_vector(vector);
    fs::path dir = path_.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error("cannot append to cache: " + path_.string());
    }
    out << obj.dump() << '\n';
    out.flush();
    if (!out) {
        throw Error("cache write failed: " + path_.string());
    }
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

} // namespace vrag
