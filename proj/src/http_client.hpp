#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace citeassist::http {

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string target;  // path plus query, at least "/"

  std::string origin() const;
};

// Throws InvalidInput for anything that is not http(s)://host[:port][/...].
Url parse_url(std::string_view url);

std::string percent_encode(std::string_view s, std::string_view keep = "");

struct Response {
  int status = 0;
  std::string body;
  std::string content_type;
};

struct Part {
  std::string name;
  std::string content;
  std::string filename;
  std::string content_type;
};

// Transport failures (refused, DNS, timeout) throw ServiceUnavailable. Any
// HTTP status is returned to the caller.
Response get(const std::string& url, int timeout_seconds,
             const std::map<std::string, std::string>& headers = {});
Response post(const std::string& url, const std::string& body, const std::string& content_type, int timeout_seconds,
              const std::map<std::string, std::string>& headers = {});
Response post_multipart(const std::string& url, const std::vector<Part>& parts, int timeout_seconds,
                        const std::map<std::string, std::string>& headers = {});

}  // namespace citeassist::http
