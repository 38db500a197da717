#include "http_client.hpp"

#include <httplib.h>

#include <cctype>
#include <charconv>

#include "citeassist/error.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::http {

std::string Url::origin() const { return scheme + "://" + host + ":" + std::to_string(port); }

Url parse_url(std::string_view url) {
  Url u;
  const auto sep = url.find("://");
  if (sep == std::string_view::npos) throw Error(ErrorCode::InvalidInput, "not an absolute URL: " + std::string(url));
  u.scheme = text::to_lower_ascii(url.substr(0, sep));
  if (u.scheme != "http" && u.scheme != "https") {
    throw Error(ErrorCode::InvalidInput, "unsupported URL scheme: " + u.scheme);
  }
  std::string_view rest = url.substr(sep + 3);
  const auto slash = rest.find_first_of("/?");
  std::string_view authority = rest.substr(0, slash);
  u.target = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  if (u.target[0] == '?') u.target.insert(0, "/");
  u.port = u.scheme == "https" ? 443 : 80;
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    const auto digits = authority.substr(colon + 1);
    int port = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
    if (ec != std::errc() || p != digits.data() + digits.size() || port <= 0 || port > 65535) {
      throw Error(ErrorCode::InvalidInput, "bad port in URL: " + std::string(url));
    }
    u.port = port;
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw Error(ErrorCode::InvalidInput, "URL has no host: " + std::string(url));
  u.host = std::string(authority);
  return u;
}

std::string percent_encode(std::string_view s, std::string_view keep) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~' || keep.find(static_cast<char>(c)) != std::string_view::npos) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 15];
    }
  }
  return out;
}

namespace {

httplib::Client make_client(const Url& u, int timeout_seconds) {
  httplib::Client client(u.origin());
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  client.set_follow_location(true);
  return client;
}

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

Response convert(const httplib::Result& res, const Url& u) {
  if (!res) {
    throw Error(ErrorCode::ServiceUnavailable,
                "request to " + u.host + " failed: " + httplib::to_string(res.error()));
  }
  Response out;
  out.status = res->status;
  out.body = res->body;
  out.content_type = res->get_header_value("Content-Type");
  return out;
}

}  // namespace

Response get(const std::string& url, int timeout_seconds, const std::map<std::string, std::string>& headers) {
  const Url u = parse_url(url);
  auto client = make_client(u, timeout_seconds);
  return convert(client.Get(u.target, to_headers(headers)), u);
}

Response post(const std::string& url, const std::string& body, const std::string& content_type, int timeout_seconds,
              const std::map<std::string, std::string>& headers) {
  const Url u = parse_url(url);
  auto client = make_client(u, timeout_seconds);
  return convert(client.Post(u.target, to_headers(headers), body, content_type), u);
}

Response post_multipart(const std::string& url, const std::vector<Part>& parts, int timeout_seconds,
                        const std::map<std::string, std::string>& headers) {
  const Url u = parse_url(url);
  auto client = make_client(u, timeout_seconds);
  httplib::MultipartFormDataItems items;
  for (const auto& p : parts) items.push_back({p.name, p.content, p.filename, p.content_type});
  return convert(client.Post(u.target, to_headers(headers), items), u);
}

}  // namespace citeassist::http
