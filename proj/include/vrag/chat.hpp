#pragma once

#include "vrag/encoder.hpp" // HttpClientOptions

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace vrag {

/// Which pipeline stage a chat request serves. Carried as routing metadata:
/// the HTTP client ignores it, the scripted mock keys its lookups on it.
enum class ChatKind { filter, vqa, judge, classify, knowledge };

const char* to_string(ChatKind kind);

/// Image attached to a chat request. The file is read (and base64-encoded)
/// only when a real HTTP request is built; mocks never touch the filesystem.
struct ChatImageRef {
    std::string doc_id;
    std::string image_path;
};

struct ChatRequest {
    ChatKind kind;
    std::string question_id;
    std::string text;
    std::vector<ChatImageRef> images;
    /// Deterministic decoding where the service honors it (the judge pins 0).
    std::optional<double> temperature;
};

/// Chat-LMM service client. Implementations must be safe for concurrent use.
class ChatClient {
public:
    virtual ~ChatClient() = default;

    virtual const std::string& model_id() const = 0;
    virtual std::size_t max_images_per_call() const = 0;

    /// Returns the model's message content. Throws TransportError /
    /// ProtocolError; callers enforce the max_images_per_call invariant
    /// before any request is sent.
    virtual std::string complete(const ChatRequest& request) = 0;

    virtual std::uint64_t request_count() const = 0;

    /// Requests issued for one stage kind (mock call-counter assertions).
    virtual std::uint64_t request_count(ChatKind kind) const = 0;
};

/// Client for the chat wire protocol:
///   POST <endpoint>
///   {"model", "messages":[{"role":"user","content":[
///       {"type":"text","text":...}, {"type":"image","image_b64":...}...]}]}
///   -> {"choices":[{"message":{"content": string}}]}
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string model_id, std::string endpoint,
                   std::size_t max_images_per_call = 16,
                   HttpClientOptions options = {});

    const std::string& model_id() const override { return model_id_; }
    std::size_t max_images_per_call() const override { return max_images_; }
    const std::string& endpoint() const { return endpoint_; }

    std::string complete(const ChatRequest& request) override;

    std::uint64_t request_count() const override { return total_.load(); }
    std::uint64_t request_count(ChatKind kind) const override;

private:
    std::string model_id_;
    std::string endpoint_;
    std::size_t max_images_;
    HttpClientOptions options_;
    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> per_kind_[5]{};
};

/// Scripted offline LMM. Responses are looked up by stage kind plus ids:
///   filter           -> (question_id, first image doc_id)
///   vqa/judge/...    -> question_id
/// falling back to a per-kind default, then the global default. A response of
/// the special marker "<transport-error>" raises TransportError instead,
/// so failure paths can be scripted too.
class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(std::string model_id = "mock-lmm",
                            std::size_t max_images_per_call = 64);

    /// Load script lines: {"kind": "filter"|"vqa"|"judge"|"classify"|
    /// "knowledge"|"default", "question_id"?, "doc_id"?, "response"}.
    /// A "default" line (or one without ids) sets the fallback.
    static std::shared_ptr<MockChatClient> from_script(
        const std::filesystem::path& path, std::string model_id = "mock-lmm");

    const std::string& model_id() const override { return model_id_; }
    std::size_t max_images_per_call() const override { return max_images_; }

    void set_default_response(std::string response);
    void set_kind_default(ChatKind kind, std::string response);
    void add_response(ChatKind kind, const std::string& question_id,
                      const std::string& doc_id, std::string response);

    std::string complete(const ChatRequest& request) override;

    std::uint64_t request_count() const override { return total_.load(); }
    std::uint64_t request_count(ChatKind kind) const override;

    /// Marker response that makes complete() throw TransportError.
    static constexpr const char* kTransportErrorMarker = "<transport-error>";

private:
    std::string model_id_;
    std::size_t max_images_;
    std::string default_response_ = "unscripted";
    std::map<int, std::string> kind_defaults_;
    std::map<std::tuple<int, std::string, std::string>, std::string> responses_;
    mutable std::mutex mutex_;
    std::atomic<std::uint64_t> total_{0};
    std::atomic<std::uint64_t> per_kind_[5]{};
};

} // namespace vrag
