#include "vrag/encoder.hpp"

#include "vrag/corpus.hpp"
#include "vrag/embedding_cache.hpp"
#include "vrag/errors.hpp"
#include "vrag/io.hpp"
#include "vrag/parallel.hpp"
#include "vrag/strutil.hpp"

#include "http_util.hpp"

#include <cmath>

#include <json.hpp>

namespace vrag {

using nlohmann::json;

// ---------------------------------------------------------------------------
// MockEncoderClient
// ---------------------------------------------------------------------------

MockEncoderClient::MockEncoderClient(std::string encoder_id, std::size_t dim,
                                     std::uint64_t seed)
    : encoder_id_(std::move(encoder_id)), dim_(dim), seed_(seed) {
    if (dim_ == 0) throw ConfigError("encoder dim must be positive");
}

std::vector<float> MockEncoderClient::vector_for(const std::string& input) const {
    // Seed from (encoder_id, input) so distinct encoders disagree about the
    // same input. 0x1f separator keeps ("a","bc") and ("ab","c") apart.
    std::string key = encoder_id_;
    key.push_back('\x1f');
    key += input;
    SplitMix64 gen(fnv1a64(key) ^ seed_);
    std::vector<double> raw(dim_);
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        raw[i] = 2.0 * gen.next_unit() - 1.0;
        norm_sq += raw[i] * raw[i];
    }
    std::vector<float> out(dim_);
    if (norm_sq == 0.0) {
        out[0] = 1.0f; // unreachable in practice; keeps the unit-norm contract
        return out;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < dim_; ++i) {
        out[i] = static_cast<float>(raw[i] * inv);
    }
    return out;
}

Embedding MockEncoderClient::embed_text(const std::string& text,
                                        const std::string& subject_id) {
    if (text.empty()) throw DegenerateInputError("embed_text: empty input");
    requests_.fetch_add(1);
    return Embedding{vector_for(text), subject_id, encoder_id_};
}

Embedding MockEncoderClient::embed_image(const std::string& image_path,
                                         const std::string& subject_id) {
    if (image_path.empty()) throw DegenerateInputError("embed_image: empty path");
    requests_.fetch_add(1);
    return Embedding{vector_for(image_path), subject_id, encoder_id_};
}

// ---------------------------------------------------------------------------
// HttpEncoderClient
// ---------------------------------------------------------------------------

HttpEncoderClient::HttpEncoderClient(std::string encoder_id, std::size_t dim,
                                     std::string endpoint, HttpClientOptions options)
    : encoder_id_(std::move(encoder_id)),
      dim_(dim),
      endpoint_(std::move(endpoint)),
      options_(options) {
    if (dim_ == 0) throw ConfigError("encoder dim must be positive");
    if (endpoint_.empty()) {
        throw ConfigError("encoder \"" + encoder_id_ + "\" has no endpoint");
    }
}

Embedding HttpEncoderClient::request(const std::string& input,
                                     const std::string& modality,
                                     const std::string& subject_id) {
    json req;
    req["model"] = encoder_id_;
    req["input"] = json::array({input});
    req["modality"] = modality;
    requests_.fetch_add(1);
    std::string body;
    try {
        body = detail::post_json(endpoint_, req.dump(), options_);
    } catch (const TransportError& e) {
        throw TransportError("encoder \"" + encoder_id_ + "\": " + e.what());
    }
    json res = json::parse(body, nullptr, false);
    if (res.is_discarded() || !res.contains("data") || !res["data"].is_array() ||
        res["data"].empty() || !res["data"][0].contains("embedding") ||
        !res["data"][0]["embedding"].is_array()) {
        throw ProtocolError("encoder \"" + encoder_id_ +
                            "\": response is not {\"data\":[{\"embedding\":[...]}]}");
    }
    const json& emb = res["data"][0]["embedding"];
    if (emb.size() != dim_) {
        throw ProtocolError("encoder \"" + encoder_id_ + "\": expected dim " +
                            std::to_string(dim_) + ", got " +
                            std::to_string(emb.size()));
    }
    Embedding out;
    out.subject_id = subject_id;
    out.encoder_id = encoder_id_;
    out.vector.reserve(dim_);
    for (const auto& v : emb) {
        if (!v.is_number()) {
            throw ProtocolError("encoder \"" + encoder_id_ +
                                "\": non-numeric embedding entry");
        }
        float f = v.get<float>();
        if (!std::isfinite(f)) {
            throw ProtocolError("encoder \"" + encoder_id_ +
                                "\": non-finite embedding entry");
        }
        out.vector.push_back(f);
    }
    return out;
}

Embedding HttpEncoderClient::embed_text(const std::string& text,
                                        const std::string& subject_id) {
    if (text.empty()) throw DegenerateInputError("embed_text: empty input");
    return request(text, "text", subject_id);
}

Embedding HttpEncoderClient::embed_image(const std::string& image_path,
                                         const std::string& subject_id) {
    if (image_path.empty()) throw DegenerateInputError("embed_image: empty path");
    std::string bytes = read_file(image_path);
    return request(base64_encode(bytes), "image", subject_id);
}

// ---------------------------------------------------------------------------
// Cache-backed helpers
// ---------------------------------------------------------------------------

namespace {

Embedding from_cache(EncoderClient& client, const std::string& subject_id,
                     std::vector<float> vector) {
    if (vector.size() != client.dim()) {
        throw ProtocolError("cache entry for \"" + subject_id + "\" has dim " +
                            std::to_string(vector.size()) + ", encoder \"" +
                            client.encoder_id() + "\" expects " +
                            std::to_string(client.dim()));
    }
    return Embedding{std::move(vector), subject_id, client.encoder_id()};
}

} // namespace

Embedding embed_text_cached(EncoderClient& client, EmbeddingCache& cache,
                            const std::string& text, const std::string& subject_id) {
    if (auto hit = cache.get(client.encoder_id(), subject_id)) {
        return from_cache(client, subject_id, std::move(*hit));
    }
    Embedding e = client.embed_text(text, subject_id);
    cache.put(client.encoder_id(), subject_id, e.vector);
    return e;
}

Embedding embed_image_cached(EncoderClient& client, EmbeddingCache& cache,
                             const std::string& image_path,
                             const std::string& subject_id) {
    if (auto hit = cache.get(client.encoder_id(), subject_id)) {
        return from_cache(client, subject_id, std::move(*hit));
    }
    Embedding e = client.embed_image(image_path, subject_id);
    cache.put(client.encoder_id(), subject_id, e.vector);
    return e;
}

HaystackEmbeddings embed_haystack(EncoderClient& client, const Haystack& haystack,
                                  EmbeddingCache& cache, int parallelism) {
    const auto& docs = haystack.documents();
    struct Slot {
        bool from_cache = false;
        bool ok = false;
        Embedding embedding;
        std::string error;
    };
    std::vector<Slot> slots(docs.size());

    parallel_for(docs.size(), parallelism, [&](std::size_t i) {
        const Document& doc = docs[i];
        Slot& slot = slots[i];
        try {
            if (auto hit = cache.get(client.encoder_id(), doc.id)) {
                slot.embedding = from_cache(client, doc.id, std::move(*hit));
                slot.from_cache = true;
            } else {
                slot.embedding = client.embed_image(doc.image_path, doc.id);
                cache.put(client.encoder_id(), doc.id, slot.embedding.vector);
            }
            slot.ok = true;
        } catch (const Error& e) {
            slot.error = e.what();
        }
    });

    HaystackEmbeddings result;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        Slot& slot = slots[i];
        if (slot.ok) {
            if (slot.from_cache) {
                ++result.served_from_cache;
            } else {
                ++result.fetched;
            }
            result.by_doc.emplace(docs[i].id, std::move(slot.embedding));
        } else {
            result.failures.emplace_back(docs[i].id, std::move(slot.error));
        }
    }
    return result;
}

} // namespace vrag
