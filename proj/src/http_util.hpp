#pragma once

#include "vrag/encoder.hpp" // HttpClientOptions

#include <string>

namespace vrag::detail {

struct ParsedEndpoint {
    std::string base; // scheme://host:port
    std::string path; // leading '/', defaults to "/"
};

/// Split "http://host:port/some/path" into client base and request path.
ParsedEndpoint parse_endpoint(const std::string& url);

/// POST a JSON body. Retries transport failures and 5xx/429 responses with
/// exponential backoff per `options`. Returns the response body on 200.
/// Throws TransportError (unreachable/exhausted retries) or ProtocolError
/// (non-success status).
std::string post_json(const std::string& endpoint, const std::string& body,
                      const HttpClientOptions& options);

} // namespace vrag::detail
