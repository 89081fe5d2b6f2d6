#include "http_util.hpp"

#include "vrag/errors.hpp"

#include <chrono>
#include <thread>

#include <httplib.h>

namespace vrag::detail {

ParsedEndpoint parse_endpoint(const std::string& url) {
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint is not a URL: \"" + url + "\"");
    }
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string post_json(const std::string& endpoint, const std::string& body,
                      const HttpClientOptions& options) {
    ParsedEndpoint ep = parse_endpoint(endpoint);
    int attempts = options.retries + 1;
    int backoff_ms = options.backoff_initial_ms;
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        httplib::Client client(ep.base);
        client.set_connection_timeout(options.timeout_seconds, 0);
        client.set_read_timeout(options.timeout_seconds, 0);
        client.set_write_timeout(options.timeout_seconds, 0);
        httplib::Headers headers;
        if (!options.api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + options.api_key);
        }
        auto res = client.Post(ep.path, headers, body, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;
        }
        if (res->status == 200) {
            return res->body;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        throw ProtocolError("endpoint " + endpoint + " returned status " +
                            std::to_string(res->status));
    }
    throw TransportError("endpoint " + endpoint + " unreachable after " +
                         std::to_string(attempts) + " attempts: " + last_error);
}

} // namespace vrag::detail
