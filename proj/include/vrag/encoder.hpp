#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace vrag {

class EmbeddingCache;
class Haystack;

/// A fixed-width vector tied to the subject (document or question) and the
/// encoder that produced it. Stored at 32-bit precision; similarity
/// arithmetic happens in 64-bit downstream.
struct Embedding {
    std::vector<float> vector;
    std::string subject_id;
    std::string encoder_id;

    std::size_t dim() const { return vector.size(); }
};

/// Client for one text/image embedding service pair. Implementations must be
/// safe for concurrent use. Every vector returned has exactly dim() entries,
/// all finite; anything else is a protocol error raised by the implementation.
class EncoderClient {
public:
    virtual ~EncoderClient() = default;

    virtual const std::string& encoder_id() const = 0;
    virtual std::size_t dim() const = 0;

    /// Embed a query string. `subject_id` labels the resulting Embedding.
    virtual Embedding embed_text(const std::string& text,
                                 const std::string& subject_id) = 0;

    /// Embed a document image referenced by path.
    virtual Embedding embed_image(const std::string& image_path,
                                  const std::string& subject_id) = 0;

    /// Number of service requests issued so far (cache tests observe this).
    virtual std::uint64_t request_count() const = 0;
};

/// Deterministic offline encoder: vectors are a pure function of
/// (encoder_id, input string), reproducible across platforms. Image inputs
/// hash the file path, so no file needs to exist. Vectors are L2-normalized.
class MockEncoderClient : public EncoderClient {
public:
    MockEncoderClient(std::string encoder_id, std::size_t dim,
                      std::uint64_t seed = 0);

    const std::string& encoder_id() const override { return encoder_id_; }
    std::size_t dim() const override { return dim_; }

    Embedding embed_text(const std::string& text,
                         const std::string& subject_id) override;
    Embedding embed_image(const std::string& image_path,
                          const std::string& subject_id) override;

    std::uint64_t request_count() const override { return requests_.load(); }

    /// The deterministic vector for an input string; exposed so tests can
    /// reason about collisions directly.
    std::vector<float> vector_for(const std::string& input) const;

private:
    std::string encoder_id_;
    std::size_t dim_;
    std::uint64_t seed_;
    std::atomic<std::uint64_t> requests_{0};
};

struct HttpClientOptions {
    int timeout_seconds = 60;
    int retries = 2;                // attempts = retries + 1
    int backoff_initial_ms = 250;   // doubled per retry
    std::string api_key;            // sent as a bearer token when non-empty
};

/// Client for the embedding wire protocol:
///   POST <endpoint>
///   {"model": id, "input": [text-or-base64], "modality": "text"|"image"}
///   -> {"data": [{"embedding": [...]}]}
class HttpEncoderClient : public EncoderClient {
public:
    HttpEncoderClient(std::string encoder_id, std::size_t dim, std::string endpoint,
                      HttpClientOptions options = {});

    const std::string& encoder_id() const override { return encoder_id_; }
    std::size_t dim() const override { return dim_; }
    const std::string& endpoint() const { return endpoint_; }

    Embedding embed_text(const std::string& text,
                         const std::string& subject_id) override;
    Embedding embed_image(const std::string& image_path,
                          const std::string& subject_id) override;

    std::uint64_t request_count() const override { return requests_.load(); }

private:
    Embedding request(const std::string& input, const std::string& modality,
                      const std::string& subject_id);

    std::string encoder_id_;
    std::size_t dim_;
    std::string endpoint_;
    HttpClientOptions options_;
    std::atomic<std::uint64_t> requests_{0};
};

/// Cached embed: serve from the cache when present (bit-exact), otherwise
/// call the client and store the result.
Embedding embed_text_cached(EncoderClient& client, EmbeddingCache& cache,
                            const std::string& text, const std::string& subject_id);
Embedding embed_image_cached(EncoderClient& client, EmbeddingCache& cache,
                             const std::string& image_path,
                             const std::string& subject_id);

struct HaystackEmbeddings {
    /// doc_id -> embedding, for every document that succeeded.
    std::map<std::string, Embedding> by_doc;
    /// (doc_id, error) for every document that failed.
    std::vector<std::pair<std::string, std::string>> failures;
    std::size_t served_from_cache = 0;
    std::size_t fetched = 0;

    bool complete() const { return failures.empty(); }
};

/// Embed every document of a haystack through one encoder, using the cache.
/// Successes are kept even when some documents fail; the result is
/// independent of internal request ordering.
HaystackEmbeddings embed_haystack(EncoderClient& client, const Haystack& haystack,
                                  EmbeddingCache& cache, int parallelism = 8);

} // namespace vrag
