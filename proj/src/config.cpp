#include "vrag/config.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"

#include <cstdlib>
#include <set>

namespace vrag {

using nlohmann::json;

void PipelineConfig::validate() const {
    if (encoders.empty()) {
        throw ConfigError("config: at least one encoder is required");
    }
    std::set<std::string> ids;
    for (const auto& enc : encoders) {
        if (enc.encoder_id.empty()) {
            throw ConfigError("config: encoder_id must be non-empty");
        }
        if (!ids.insert(enc.encoder_id).second) {
            throw ConfigError("config: duplicate encoder_id \"" + enc.encoder_id +
                              "\"");
        }
        if (enc.dim == 0) {
            throw ConfigError("config: encoder \"" + enc.encoder_id +
                              "\" dim must be positive");
        }
    }
    if (m == 0) throw ConfigError("config: m must be positive");
    if (k == 0) throw ConfigError("config: k must be positive");
    if (k > m) {
        throw ConfigError("config: k (" + std::to_string(k) + ") exceeds m (" +
                          std::to_string(m) + ")");
    }
    if (k > vqa_model.max_images) {
        throw ConfigError("config: k (" + std::to_string(k) +
                          ") exceeds the VQA model image limit (" +
                          std::to_string(vqa_model.max_images) + ")");
    }
    for (const ModelConfig* model : {&filter_model, &vqa_model, &judge_model}) {
        if (model->model_id.empty()) {
            throw ConfigError("config: model_id must be non-empty");
        }
    }
    if (parallelism < 1) throw ConfigError("config: parallelism must be >= 1");
    if (timeout_seconds < 1) throw ConfigError("config: timeout must be >= 1s");
    if (retries < 0) throw ConfigError("config: retries must be >= 0");
}

namespace {

json model_to_json(const ModelConfig& model) {
    return json{{"model_id", model.model_id},
                {"endpoint", model.endpoint},
                {"mock_script", model.mock_script},
                {"max_images", model.max_images}};
}

void model_from_json(const json& j, const std::string& key, ModelConfig& model) {
    static const std::set<std::string> known = {"model_id", "endpoint",
                                                "mock_script", "max_images"};
    for (const auto& [field, value] : j.items()) {
        (void)value;
        if (!known.count(field)) {
            throw ConfigError("config: unknown key \"" + key + "." + field + "\"");
        }
    }
    model.model_id = j.value("model_id", model.model_id);
    model.endpoint = j.value("endpoint", model.endpoint);
    model.mock_script = j.value("mock_script", model.mock_script);
    model.max_images = j.value("max_images", model.max_images);
}

} // namespace

json PipelineConfig::snapshot() const {
    json enc_list = json::array();
    for (const auto& enc : encoders) {
        enc_list.push_back(json{{"encoder_id", enc.encoder_id},
                                {"dim", enc.dim},
                                {"endpoint", enc.endpoint}});
    }
    return json{{"encoders", std::move(enc_list)},
                {"m", m},
                {"k", k},
                {"filter_enabled", filter_enabled},
                {"filter_model", model_to_json(filter_model)},
                {"vqa_model", model_to_json(vqa_model)},
                {"judge_model", model_to_json(judge_model)},
                {"cache_dir", cache_dir},
                {"parallelism", parallelism},
                {"timeout_seconds", timeout_seconds},
                {"retries", retries},
                {"seed", seed},
                {"api_key", api_key.empty() ? "" : "***"}};
}

PipelineConfig default_config() {
    PipelineConfig config;
    config.encoders = {EncoderConfig{"clip", 256, ""},
                       EncoderConfig{"openclip", 256, ""},
                       EncoderConfig{"siglip", 256, ""}};
    return config;
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError(path.string() + ": config must be a JSON object");
    }

    static const std::set<std::string> known = {
        "encoders",    "m",
        "k",           "filter_enabled",
        "filter_model", "vqa_model",
        "judge_model", "cache_dir",
        "parallelism", "timeout_seconds",
        "retries",     "seed",
        "api_key"};
    for (const auto& [field, value] : doc.items()) {
        (void)value;
        if (!known.count(field)) {
            throw ConfigError(path.string() + ": unknown key \"" + field + "\"");
        }
    }

    PipelineConfig config;
    try {
        if (doc.contains("encoders")) {
            if (!doc["encoders"].is_array()) {
                throw ConfigError(path.string() + ": encoders must be an array");
            }
            for (const auto& j : doc["encoders"]) {
                static const std::set<std::string> enc_known = {"encoder_id", "dim",
                                                                "endpoint"};
                for (const auto& [field, value] : j.items()) {
                    (void)value;
                    if (!enc_known.count(field)) {
                        throw ConfigError(path.string() +
                                          ": unknown key \"encoders[]." + field +
                                          "\"");
                    }
                }
                EncoderConfig enc;
                enc.encoder_id = j.value("encoder_id", std::string());
                enc.dim = j.value("dim", enc.dim);
                enc.endpoint = j.value("endpoint", std::string());
                config.encoders.push_back(std::move(enc));
            }
        }
        config.m = doc.value("m", config.m);
        config.k = doc.value("k", config.k);
        config.filter_enabled = doc.value("filter_enabled", config.filter_enabled);
        if (doc.contains("filter_model")) {
            model_from_json(doc["filter_model"], "filter_model",
                            config.filter_model);
        }
        if (doc.contains("vqa_model")) {
            model_from_json(doc["vqa_model"], "vqa_model", config.vqa_model);
        }
        if (doc.contains("judge_model")) {
            model_from_json(doc["judge_model"], "judge_model", config.judge_model);
        }
        config.cache_dir = doc.value("cache_dir", config.cache_dir);
        config.parallelism = doc.value("parallelism", config.parallelism);
        config.timeout_seconds =
            doc.value("timeout_seconds", config.timeout_seconds);
        config.retries = doc.value("retries", config.retries);
        config.seed = doc.value("seed", config.seed);
        config.api_key = doc.value("api_key", config.api_key);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return config;
}

void apply_env_overrides(PipelineConfig& config) {
    auto env = [](const char* name) -> std::string {
        const char* v = std::getenv(name);
        return v ? std::string(v) : std::string();
    };
    if (config.api_key.empty()) config.api_key = env("VRAG_API_KEY");
    if (config.cache_dir.empty()) config.cache_dir = env("VRAG_CACHE_DIR");
    const std::string embed = env("VRAG_EMBED_ENDPOINT");
    if (!embed.empty()) {
        for (auto& enc : config.encoders) {
            if (enc.endpoint.empty()) enc.endpoint = embed;
        }
    }
    if (config.filter_model.endpoint.empty()) {
        config.filter_model.endpoint = env("VRAG_FILTER_ENDPOINT");
    }
    if (config.vqa_model.endpoint.empty()) {
        config.vqa_model.endpoint = env("VRAG_VQA_ENDPOINT");
    }
    if (config.judge_model.endpoint.empty()) {
        config.judge_model.endpoint = env("VRAG_JUDGE_ENDPOINT");
    }
}

namespace {

std::shared_ptr<ChatClient> build_chat_client(const ModelConfig& model,
                                              const PipelineConfig& config) {
    if (!model.endpoint.empty()) {
        HttpClientOptions options;
        options.timeout_seconds = config.timeout_seconds;
        options.retries = config.retries;
        options.api_key = config.api_key;
        return std::make_shared<HttpChatClient>(model.model_id, model.endpoint,
                                                model.max_images, options);
    }
    if (!model.mock_script.empty()) {
        return MockChatClient::from_script(model.mock_script, model.model_id);
    }
    return std::make_shared<MockChatClient>(model.model_id, model.max_images);
}

} // namespace

BenchmarkServices build_services(const PipelineConfig& config) {
    config.validate();
    BenchmarkServices services;
    for (const auto& enc : config.encoders) {
        if (enc.endpoint.empty()) {
            services.encoders.push_back(std::make_shared<MockEncoderClient>(
                enc.encoder_id, enc.dim, config.seed));
        } else {
            HttpClientOptions options;
            options.timeout_seconds = config.timeout_seconds;
            options.retries = config.retries;
            options.api_key = config.api_key;
            services.encoders.push_back(std::make_shared<HttpEncoderClient>(
                enc.encoder_id, enc.dim, enc.endpoint, options));
        }
    }
    services.filter_client = build_chat_client(config.filter_model, config);
    services.vqa_client = build_chat_client(config.vqa_model, config);
    services.judge_client = build_chat_client(config.judge_model, config);
    return services;
}

CurationServices build_curation_services(const PipelineConfig& config,
                                         const BenchmarkServices& services) {
    (void)config;
    CurationServices curation;
    curation.classifier = services.judge_client;
    curation.answerer = services.judge_client;
    curation.judge = services.judge_client;
    return curation;
}

} // namespace vrag
