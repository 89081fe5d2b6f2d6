#include "vrag/chat.hpp"

#include "vrag/errors.hpp"
#include "vrag/io.hpp"
#include "vrag/strutil.hpp"

#include "http_util.hpp"

#include <json.hpp>

namespace vrag {

using nlohmann::json;

const char* to_string(ChatKind kind) {
    switch (kind) {
        case ChatKind::filter: return "filter";
        case ChatKind::vqa: return "vqa";
        case ChatKind::judge: return "judge";
        case ChatKind::classify: return "classify";
        case ChatKind::knowledge: return "knowledge";
    }
    return "unknown";
}

namespace {

std::optional<ChatKind> kind_from_string(const std::string& s) {
    if (s == "filter") return ChatKind::filter;
    if (s == "vqa") return ChatKind::vqa;
    if (s == "judge") return ChatKind::judge;
    if (s == "classify") return ChatKind::classify;
    if (s == "knowledge") return ChatKind::knowledge;
    return std::nullopt;
}

} // namespace

// ---------------------------------------------------------------------------
// HttpChatClient
// ---------------------------------------------------------------------------

HttpChatClient::HttpChatClient(std::string model_id, std::string endpoint,
                               std::size_t max_images_per_call,
                               HttpClientOptions options)
    : model_id_(std::move(model_id)),
      endpoint_(std::move(endpoint)),
      max_images_(max_images_per_call),
      options_(options) {
    if (endpoint_.empty()) {
        throw ConfigError("chat model \"" + model_id_ + "\" has no endpoint");
    }
    if (max_images_ == 0) {
        throw ConfigError("max_images_per_call must be positive");
    }
}

std::uint64_t HttpChatClient::request_count(ChatKind kind) const {
    return per_kind_[static_cast<int>(kind)].load();
}

std::string HttpChatClient::complete(const ChatRequest& request) {
    if (request.images.size() > max_images_) {
        throw ConfigError("chat model \"" + model_id_ + "\": request carries " +
                          std::to_string(request.images.size()) +
                          " images, limit is " + std::to_string(max_images_));
    }
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", request.text}});
    for (const auto& image : request.images) {
        std::string bytes = read_file(image.image_path);
        content.push_back({{"type", "image"}, {"image_b64", base64_encode(bytes)}});
    }
    json req;
    req["model"] = model_id_;
    req["messages"] = json::array({{{"role", "user"}, {"content", content}}});
    if (request.temperature.has_value()) {
        req["temperature"] = *request.temperature;
    }
    total_.fetch_add(1);
    per_kind_[static_cast<int>(request.kind)].fetch_add(1);
    std::string body;
    try {
        body = detail::post_json(endpoint_, req.dump(), options_);
    } catch (const TransportError& e) {
        throw TransportError("chat model \"" + model_id_ + "\": " + e.what());
    }
    json res = json::parse(body, nullptr, false);
    if (res.is_discarded() || !res.contains("choices") || !res["choices"].is_array() ||
        res["choices"].empty() || !res["choices"][0].contains("message") ||
        !res["choices"][0]["message"].contains("content") ||
        !res["choices"][0]["message"]["content"].is_string()) {
        throw ProtocolError(
            "chat model \"" + model_id_ +
            "\": response is not {\"choices\":[{\"message\":{\"content\":...}}]}");
    }
    return res["choices"][0]["message"]["content"].get<std::string>();
}

// ---------------------------------------------------------------------------
// MockChatClient
// ---------------------------------------------------------------------------

MockChatClient::MockChatClient(std::string model_id, std::size_t max_images_per_call)
    : model_id_(std::move(model_id)), max_images_(max_images_per_call) {}

std::shared_ptr<MockChatClient> MockChatClient::from_script(
    const std::filesystem::path& path, std::string model_id) {
    auto client = std::make_shared<MockChatClient>(std::move(model_id));
    for_each_ndjson(path, [&](std::size_t line_no, const json& obj) {
        auto resp_it = obj.find("response");
        if (resp_it == obj.end() || !resp_it->is_string()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": script record needs a string \"response\"");
        }
        std::string response = resp_it->get<std::string>();
        std::string kind_str = obj.value("kind", std::string("default"));
        if (kind_str == "default") {
            client->set_default_response(std::move(response));
            return;
        }
        auto kind = kind_from_string(kind_str);
        if (!kind) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": unknown script kind \"" + kind_str + "\"");
        }
        std::string question_id = obj.value("question_id", std::string());
        std::string doc_id = obj.value("doc_id", std::string());
        if (question_id.empty()) {
            client->set_kind_default(*kind, std::move(response));
        } else {
            client->add_response(*kind, question_id, doc_id, std::move(response));
        }
    });
    return client;
}

void MockChatClient::set_default_response(std::string response) {
    std::lock_guard lock(mutex_);
    default_response_ = std::move(response);
}

void MockChatClient::set_kind_default(ChatKind kind, std::string response) {
    std::lock_guard lock(mutex_);
    kind_defaults_[static_cast<int>(kind)] = std::move(response);
}

void MockChatClient::add_response(ChatKind kind, const std::string& question_id,
                                  const std::string& doc_id, std::string response) {
    std::lock_guard lock(mutex_);
    responses_[{static_cast<int>(kind), question_id, doc_id}] = std::move(response);
}

std::uint64_t MockChatClient::request_count(ChatKind kind) const {
    return per_kind_[static_cast<int>(kind)].load();
}

std::string MockChatClient::complete(const ChatRequest& request) {
    if (request.images.size() > max_images_) {
        throw ConfigError("chat model \"" + model_id_ + "\": request carries " +
                          std::to_string(request.images.size()) +
                          " images, limit is " + std::to_string(max_images_));
    }
    total_.fetch_add(1);
    per_kind_[static_cast<int>(request.kind)].fetch_add(1);

    std::string doc_id;
    if (request.kind == ChatKind::filter && !request.images.empty()) {
        doc_id = request.images.front().doc_id;
    }
    std::string response;
    {
        std::lock_guard lock(mutex_);
        auto it = responses_.find(
            {static_cast<int>(request.kind), request.question_id, doc_id});
        if (it == responses_.end() && !doc_id.empty()) {
            // fall back to a question-wide entry
            it = responses_.find(
                {static_cast<int>(request.kind), request.question_id, std::string()});
        }
        if (it != responses_.end()) {
            response = it->second;
        } else {
            auto kd = kind_defaults_.find(static_cast<int>(request.kind));
            response = kd != kind_defaults_.end() ? kd->second : default_response_;
        }
    }
    if (response == kTransportErrorMarker) {
        throw TransportError("chat model \"" + model_id_ + "\": scripted failure for " +
                             std::string(to_string(request.kind)) + "/" +
                             request.question_id);
    }
    return response;
}

} // namespace vrag
