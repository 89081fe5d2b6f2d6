#pragma once

#include "vrag/curation.hpp"
#include "vrag/evaluate.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace vrag {

struct EncoderConfig {
    std::string encoder_id;
    std::size_t dim = 256;
    std::string endpoint; // empty = deterministic mock
};

struct ModelConfig {
    std::string model_id;
    std::string endpoint;    // empty = scripted mock
    std::string mock_script; // ndjson responses for the mock
    std::size_t max_images = 16;
};

struct PipelineConfig {
    std::vector<EncoderConfig> encoders;
    std::size_t m = 60;
    std::size_t k = 5;
    bool filter_enabled = true;
    ModelConfig filter_model{"filter-lmm"};
    ModelConfig vqa_model{"vqa-lmm"};
    ModelConfig judge_model{"judge-llm"};
    std::string cache_dir;   // empty = in-memory caches
    int parallelism = 8;
    int timeout_seconds = 60;
    int retries = 2;
    std::uint64_t seed = 0;
    std::string api_key;

    // Structural invariants; throws ConfigError.
    void validate() const;

    // Everything needed to rerun the command, api_key redacted.
    nlohmann::json snapshot() const;
};

// Three mock encoders (clip, openclip, siglip), mock models, m=60, k=5.
PipelineConfig default_config();

// Strict JSON load: unknown keys are ConfigError, malformed JSON ParseError.
PipelineConfig load_config_file(const std::filesystem::path& path);

// VRAG_* fallbacks for fields the file left empty: VRAG_API_KEY,
// VRAG_EMBED_ENDPOINT (encoders without one), VRAG_FILTER_ENDPOINT,
// VRAG_VQA_ENDPOINT, VRAG_JUDGE_ENDPOINT, VRAG_CACHE_DIR.
void apply_env_overrides(PipelineConfig& config);

// Instantiate the clients: HTTP where an endpoint is set, mocks elsewhere.
BenchmarkServices build_services(const PipelineConfig& config);

// Stage 1 and stage 3 both route through the judge model's client.
CurationServices build_curation_services(const PipelineConfig& config,
                                         const BenchmarkServices& services);

} // namespace vrag
