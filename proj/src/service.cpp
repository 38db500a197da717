#include "citeassist/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "citeassist/annotator.hpp"
#include "citeassist/bibtex.hpp"
#include "citeassist/extraction.hpp"
#include "citeassist/json_io.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::service {

using json_io::json;

namespace {

// Upload over the configured limit; answered with 413.
struct PayloadTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

[[noreturn]] void bad_input(const std::string& what) { throw Error(ErrorCode::InvalidInput, what); }

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, {{"code", code}, {"message", message}}, status);
}

json record_json(const store::PreprintRecord& r, const std::string& base_url) {
  return {{"id", r.id},
          {"citation_key", r.citation_key},
          {"title", r.title},
          {"authors", r.authors},
          {"doi", r.doi ? json(*r.doi) : json(nullptr)},
          {"url", r.url ? json(*r.url) : json(nullptr)},
          {"year", r.year ? json(*r.year) : json(nullptr)},
          {"keywords", r.keywords},
          {"bibtex", r.bibtex},
          {"created_at", r.created_at},
          {"pdf_stored", r.pdf_stored},
          {"metadata", json_io::to_json(r.metadata)},
          {"webview_url", base_url + r.webview_path()}};
}

struct Upload {
  std::optional<std::string> pdf;
  std::string pdf_filename;
  std::map<std::string, std::string> fields;
};

Upload read_upload(const httplib::Request& req, const ServiceConfig& cfg) {
  Upload up;
  if (!req.is_multipart_form_data()) bad_input("expected a multipart/form-data body");
  for (const auto& [name, part] : req.files) {
    if (name == "pdf") {
      if (part.content.size() > cfg.max_upload_bytes) {
        throw PayloadTooLarge("PDF exceeds the upload limit of " + std::to_string(cfg.max_upload_bytes) + " bytes");
      }
      up.pdf = part.content;
      up.pdf_filename = part.filename;
    } else {
      up.fields[name] = part.content;
    }
  }
  return up;
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) bad_input("request body is empty");
  return json_io::parse(req.body);
}

bool as_bool(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return false;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_string()) {
    const std::string v = text::to_lower_ascii(it->get<std::string>());
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off" || v.empty()) return false;
  }
  bad_input(std::string(key) + " must be a boolean");
}

// Entry to store and the metadata describing it. "bibtex" (text), when
// present, is the entry verbatim; otherwise the entry is built from
// "metadata".
std::pair<PreprintMetadata, bibtex::Entry> entry_and_metadata(const json& j, int page_count) {
  std::optional<PreprintMetadata> meta;
  std::optional<bibtex::Entry> entry;
  if (auto it = j.find("metadata"); it != j.end() && !it->is_null()) meta = json_io::metadata_from_json(*it);
  if (auto it = j.find("bibtex"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) bad_input("bibtex must be a string");
    entry = bibtex::parse(it->get<std::string>());
  } else if (auto e = j.find("entry"); e != j.end() && !e->is_null()) {
    entry = json_io::entry_from_json(*e);
  }
  if (!meta && !entry) bad_input("request needs metadata or bibtex");
  if (!meta) {
    meta = extraction::merge_metadata(bibtex::entry_to_metadata(*entry), {}, {}, {}, "", page_count,
                                      extraction::today_utc());
  }
  if (!entry) entry = bibtex::build_entry(*meta);
  return {*meta, *entry};
}

std::vector<std::string> string_list(const json& j, const char* what) {
  if (!j.is_array()) bad_input(std::string(what) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) bad_input(std::string(what) + " must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

std::string webview_page(const store::PreprintRecord& r) {
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>" << html_escape(r.title)
    << "</title>\n<style>body{font-family:sans-serif;max-width:50rem;margin:2rem auto;padding:0 1rem}"
       "pre{background:#f4f4f4;padding:1rem;overflow-x:auto}</style>\n</head>\n<body>\n<h1>"
    << html_escape(r.title) << "</h1>\n";
  std::string authors;
  for (std::size_t i = 0; i < r.authors.size(); ++i) authors += (i ? ", " : "") + r.authors[i];
  if (!authors.empty()) h << "<p class=\"authors\">" << html_escape(authors) << "</p>\n";
  if (r.year) h << "<p class=\"year\">" << *r.year << "</p>\n";
  if (r.doi) {
    h << "<p class=\"doi\"><a href=\"https://doi.org/" << html_escape(*r.doi) << "\">doi:" << html_escape(*r.doi)
      << "</a></p>\n";
  }
  if (!r.keywords.empty()) {
    std::string kw;
    for (std::size_t i = 0; i < r.keywords.size(); ++i) kw += (i ? ", " : "") + r.keywords[i];
    h << "<p class=\"keywords\">Keywords: " << html_escape(kw) << "</p>\n";
  }
  h << "<h2>Citation</h2>\n<pre>" << html_escape(r.bibtex) << "</pre>\n";
  if (r.pdf_stored) h << "<p><a href=\"/api/preprints/" << r.id << "/pdf\">Download PDF</a></p>\n";
  h << "</body>\n</html>\n";
  return h.str();
}

}  // namespace

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::pair<std::string, int> split_bind_addr(const std::string& addr) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos || colon == 0) bad_input("bind address must be host:port, got \"" + addr + "\"");
  std::string host = addr.substr(0, colon);
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const std::string port_text = addr.substr(colon + 1);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) bad_input("invalid port in bind address \"" + addr + "\"");
  return {host, port};
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  ServiceConfig cfg;
  if (file) {
    std::ifstream in(*file, std::ios::binary);
    if (!in) bad_input("cannot read config file " + file->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    const json j = json_io::parse(ss.str());
    if (!j.is_object()) bad_input("config file must hold a JSON object");
    try {
      if (j.contains("bind_addr")) cfg.bind_addr = j["bind_addr"].get<std::string>();
      if (j.contains("db_url")) cfg.db_url = j["db_url"].get<std::string>();
      if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
      if (j.contains("extractor_url") && !j["extractor_url"].is_null()) {
        cfg.extractor_url = j["extractor_url"].get<std::string>();
      }
      if (j.contains("extractor_timeout_seconds")) cfg.extractor_timeout_seconds = j["extractor_timeout_seconds"];
      if (j.contains("max_upload_bytes")) cfg.max_upload_bytes = j["max_upload_bytes"].get<std::size_t>();
      if (j.contains("public_base_url")) cfg.public_base_url = j["public_base_url"].get<std::string>();
      if (j.contains("static_dir") && !j["static_dir"].is_null()) cfg.static_dir = j["static_dir"].get<std::string>();
      if (j.contains("threads")) cfg.threads = j["threads"];
      if (j.contains("resolver")) {
        const auto& r = j["resolver"];
        if (r.contains("doi_base")) cfg.resolver.doi_base = r["doi_base"].get<std::string>();
        if (r.contains("arxiv_base")) cfg.resolver.arxiv_base = r["arxiv_base"].get<std::string>();
        if (r.contains("timeout_seconds")) cfg.resolver.timeout_seconds = r["timeout_seconds"];
      }
    } catch (const json::exception& e) {
      bad_input(std::string("invalid config value: ") + e.what());
    }
  }
  if (auto v = env("CITEASSIST_DB_URL")) cfg.db_url = *v;
  if (auto v = env("CITEASSIST_DATA_DIR")) cfg.data_dir = *v;
  if (auto v = env("CITEASSIST_BIND_ADDR")) cfg.bind_addr = *v;
  if (auto v = env("CITEASSIST_EXTRACTOR_URL")) cfg.extractor_url = *v;
  while (!cfg.public_base_url.empty() && cfg.public_base_url.back() == '/') cfg.public_base_url.pop_back();
  if (cfg.threads < 1) cfg.threads = 1;
  split_bind_addr(cfg.bind_addr);
  return cfg;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput:
    case ErrorCode::NoEntryFound:
    case ErrorCode::UnbalancedDelimiters:
    case ErrorCode::MalformedDoi:
    case ErrorCode::MalformedArxivId:
    case ErrorCode::PageOutOfRange:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::MalformedPdf:
    case ErrorCode::EncryptedPdf:
      return 422;
    case ErrorCode::ServiceError:
      return 502;
    case ErrorCode::ServiceUnavailable:
      return 503;
    case ErrorCode::RenderFailure:
    case ErrorCode::StorageFailure:
    case ErrorCode::IntegrityFailure:
      return 500;
  }
  return 500;
}

struct Service::Impl {
  explicit Impl(ServiceConfig c) : cfg(std::move(c)), db(cfg.db_url, cfg.data_dir) {}

  ServiceConfig cfg;
  store::Store db;
  httplib::Server server;
  std::thread thread;
  int port = -1;
  std::mutex log_mutex;

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), to_string(e.code()), e.what());
      } catch (const PayloadTooLarge& e) {
        send_error(res, 413, "PAYLOAD_TOO_LARGE", e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, to_string(ErrorCode::InvalidInput), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "INTERNAL_ERROR", e.what());
      }
    };
  }

  void log(const httplib::Request& req, const httplib::Response& res) {
    json line = {{"ts", iso_now()},
                 {"method", req.method},
                 {"path", req.path},
                 {"status", res.status},
                 {"remote", req.remote_addr},
                 {"bytes_in", req.body.size()},
                 {"bytes_out", res.body.size()}};
    std::lock_guard lock(log_mutex);
    std::cout << line.dump() << '\n' << std::flush;
  }

  void routes() {
    // No SO_REUSEPORT: a second instance on the same port must fail to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
    });
    server.set_payload_max_length(cfg.max_upload_bytes + 1024 * 1024);
    server.new_task_queue = [n = cfg.threads] { return new httplib::ThreadPool(static_cast<std::size_t>(n)); };
    if (cfg.log_requests) {
      server.set_logger([this](const httplib::Request& req, const httplib::Response& res) { log(req, res); });
    }
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
      if (res.status == 413) {
        send_error(res, 413, "PAYLOAD_TOO_LARGE", "request body exceeds the upload limit");
      } else if (res.status == 404) {
        send_error(res, 404, to_string(ErrorCode::NotFound), "no such resource");
      } else {
        send_error(res, res.status, "HTTP_ERROR", httplib::status_message(res.status));
      }
      return httplib::Server::HandlerResponse::Handled;
    });
    if (cfg.static_dir) server.set_mount_point("/", cfg.static_dir->string());

    server.Get("/api/health", guarded([](const auto&, auto& res) { send_json(res, {{"status", "ok"}}); }));
    server.Post("/api/preprints", guarded([this](const auto& req, auto& res) { create(req, res); }));
    server.Get(R"(/api/preprints/([0-9a-fA-F-]+))", guarded([this](const auto& req, auto& res) {
                 auto rec = db.get_record(req.matches[1]);
                 if (!rec) throw Error(ErrorCode::NotFound, "no record " + std::string(req.matches[1]));
                 send_json(res, record_json(*rec, cfg.public_base_url));
               }));
    server.Get(R"(/api/preprints/([0-9a-fA-F-]+)/pdf)", guarded([this](const auto& req, auto& res) {
                 const std::string id = req.matches[1];
                 const auto rec = db.get_record(id);
                 if (!rec) throw Error(ErrorCode::NotFound, "no record " + id);
                 res.set_content(db.get_pdf(id), "application/pdf");
                 res.set_header("Content-Disposition", "inline; filename=\"" + rec->citation_key + ".pdf\"");
               }));
    server.Post("/api/related", guarded([this](const auto& req, auto& res) { related(req, res); }));
    server.Post("/api/extract", guarded([this](const auto& req, auto& res) { extract(req, res); }));
    server.Post("/api/annotate", guarded([this](const auto& req, auto& res) { annotate(req, res); }));
    server.Post("/api/resolve", guarded([this](const auto& req, auto& res) { resolve(req, res); }));
    server.Post("/api/bibtex/parse", guarded([](const auto& req, auto& res) {
                  const auto entry = bibtex::parse(req.body);
                  send_json(res, {{"entry", json_io::to_json(entry)},
                                  {"overrides", json_io::to_json(bibtex::entry_to_metadata(entry))}});
                }));
    server.Get(R"(/preprint/([0-9a-fA-F-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto rec = db.get_record(req.matches[1]);
      if (!rec) {
        res.status = 404;
        res.set_content("<!DOCTYPE html>\n<html><body><h1>Preprint not found</h1></body></html>\n",
                        "text/html; charset=utf-8");
        return;
      }
      res.set_content(webview_page(*rec), "text/html; charset=utf-8");
    });
  }

  // multipart: metadata (JSON), consent, bibtex (optional), pdf (optional);
  // or a JSON body {metadata, consent, bibtex} without a PDF.
  void create(const httplib::Request& req, httplib::Response& res) {
    json j = json::object();
    std::optional<std::string> pdf;
    if (req.is_multipart_form_data()) {
      auto up = read_upload(req, cfg);
      if (auto it = up.fields.find("metadata"); it != up.fields.end()) j["metadata"] = json_io::parse(it->second);
      if (auto it = up.fields.find("bibtex"); it != up.fields.end() && !it->second.empty()) j["bibtex"] = it->second;
      if (auto it = up.fields.find("consent"); it != up.fields.end()) j["consent"] = it->second;
      pdf = std::move(up.pdf);
    } else {
      j = body_json(req);
      if (!j.is_object()) bad_input("request body must be a JSON object");
    }
    int pages = 1;
    if (pdf) pages = static_cast<int>(pdf::parse_pdf(*pdf).page_count());
    const auto [meta, entry] = entry_and_metadata(j, pages);
    const auto rec = db.create_record(meta, entry, pdf ? std::optional<std::string_view>(*pdf) : std::nullopt,
                                      as_bool(j, "consent"));
    send_json(res, record_json(rec, cfg.public_base_url), 201);
  }

  // [..] or {"keywords": [..], "exclude": id}
  void related(const httplib::Request& req, httplib::Response& res) {
    const json j = body_json(req);
    std::vector<std::string> kw;
    std::optional<std::string> exclude;
    if (j.is_array()) {
      kw = string_list(j, "keywords");
    } else if (j.is_object()) {
      if (j.contains("keywords")) kw = string_list(j["keywords"], "keywords");
      if (j.contains("exclude") && !j["exclude"].is_null()) exclude = j["exclude"].get<std::string>();
    } else {
      bad_input("expected a keyword list");
    }
    json out = json::array();
    for (const auto& m : db.query_related(kw, exclude)) out.push_back(json_io::to_json(m));
    send_json(res, out);
  }

  // multipart: pdf, overrides (optional JSON). Returns the merged metadata.
  void extract(const httplib::Request& req, httplib::Response& res) {
    auto up = read_upload(req, cfg);
    if (!up.pdf) bad_input("missing pdf part");
    const auto doc = pdf::parse_pdf(*up.pdf);
    extraction::PipelineOptions opts;
    if (auto it = up.fields.find("overrides"); it != up.fields.end() && !it->second.empty()) {
      opts.overrides = json_io::overrides_from_json(json_io::parse(it->second));
    }
    opts.extractor_url = cfg.extractor_url;
    opts.extractor_timeout_seconds = cfg.extractor_timeout_seconds;
    const auto result = extraction::extract_metadata(doc, up.pdf_filename.empty() ? "document.pdf" : up.pdf_filename,
                                                     opts);
    const auto entry = bibtex::build_entry(result.metadata);
    send_json(res, {{"metadata", json_io::to_json(result.metadata)},
                    {"entry", json_io::to_json(entry)},
                    {"bibtex", bibtex::serialize(entry)},
                    {"page_count", doc.page_count()},
                    {"extractor_error", result.extractor_error ? json(*result.extractor_error) : json(nullptr)}});
  }

  // multipart: pdf, request (JSON {metadata | bibtex, related: [..],
  // format: "pdf" | "latex", consent, store, webview_url}). With consent the
  // record id is fixed first so the annotation can carry its webview link.
  void annotate(const httplib::Request& req, httplib::Response& res) {
    auto up = read_upload(req, cfg);
    auto it = up.fields.find("request");
    if (it == up.fields.end()) bad_input("missing request part");
    const json j = json_io::parse(it->second);
    if (!j.is_object()) bad_input("request must be a JSON object");
    const std::string format = j.value("format", std::string("pdf"));
    if (format != "pdf" && format != "latex") bad_input("format must be pdf or latex");
    if (format == "pdf" && !up.pdf) bad_input("missing pdf part");

    std::optional<pdf::PdfDocument> doc;
    if (up.pdf) doc = pdf::parse_pdf(*up.pdf);
    const auto [meta, entry] = entry_and_metadata(j, doc ? static_cast<int>(doc->page_count()) : 1);
    const bool consent = as_bool(j, "consent");
    const bool keep = j.contains("store") ? as_bool(j, "store") : consent;

    annotator::AnnotationBundle bundle;
    bundle.entry = entry;
    if (j.contains("related")) {
      if (!j["related"].is_array()) bad_input("related must be an array");
      for (const auto& p : j["related"]) bundle.related.push_back(json_io::paper_from_json(p));
    }
    std::optional<std::string> id;
    if (keep) id = store::new_uuid();
    if (keep && consent) {
      bundle.webview_url = cfg.public_base_url + "/preprint/" + *id;
    } else if (j.contains("webview_url") && j["webview_url"].is_string()) {
      bundle.webview_url = j["webview_url"].get<std::string>();
    }

    std::optional<std::string> annotated;
    if (doc) annotated = pdf::serialize(annotator::annotate_pdf(*doc, bundle));

    std::optional<store::PreprintRecord> rec;
    if (keep) {
      rec = db.create_record(meta, entry, annotated ? std::optional<std::string_view>(*annotated) : std::nullopt,
                             consent, id);
    }
    if (rec) {
      res.set_header("X-Record-Id", rec->id);
      if (bundle.webview_url) res.set_header("X-Webview-Url", *bundle.webview_url);
    }
    if (format == "pdf") {
      const std::string stem = extraction::filename_stem(up.pdf_filename.empty() ? "document.pdf" : up.pdf_filename);
      res.set_content(*annotated, "application/pdf");
      res.set_header("Content-Disposition", "attachment; filename=\"" + stem + "-annotated.pdf\"");
      return;
    }
    json out = {{"tex", annotator::render_latex(bundle)},
                {"sty", annotator::latex_style()},
                {"webview_url", bundle.webview_url ? json(*bundle.webview_url) : json(nullptr)},
                {"record", rec ? record_json(*rec, cfg.public_base_url) : json(nullptr)}};
    send_json(res, out);
  }

  // {"doi": ..} | {"arxiv": ..} | {"identifier": ..}
  void resolve(const httplib::Request& req, httplib::Response& res) {
    const json j = body_json(req);
    if (!j.is_object()) bad_input("expected an object");
    related::RelatedPaper p;
    if (j.contains("doi")) {
      p = related::resolve_doi(j["doi"].get<std::string>(), cfg.resolver);
    } else if (j.contains("arxiv")) {
      p = related::resolve_arxiv(j["arxiv"].get<std::string>(), cfg.resolver);
    } else if (j.contains("identifier")) {
      const std::string ident = j["identifier"].get<std::string>();
      if (related::normalize_doi(ident)) p = related::resolve_doi(ident, cfg.resolver);
      else if (related::normalize_arxiv_id(ident)) p = related::resolve_arxiv(ident, cfg.resolver);
      else throw Error(ErrorCode::MalformedDoi, "not a DOI or arXiv identifier: " + ident);
    } else {
      bad_input("expected doi, arxiv or identifier");
    }
    send_json(res, json_io::to_json(p));
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) { impl_->routes(); }

Service::~Service() { stop(); }

int Service::bind() {
  if (impl_->port >= 0) return impl_->port;
  const auto [host, port] = split_bind_addr(impl_->cfg.bind_addr);
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) bad_input("cannot bind " + impl_->cfg.bind_addr);
  impl_->port = bound;
  return bound;
}

void Service::listen() {
  bind();
  impl_->server.listen_after_bind();
}

int Service::start() {
  const int p = bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return p;
}

void Service::stop() {
  if (!impl_) return;
  if (impl_->thread.joinable()) {
    impl_->server.wait_until_ready();
    impl_->server.stop();
    impl_->thread.join();
  } else {
    impl_->server.stop();
  }
}

int Service::port() const { return impl_->port; }
store::Store& Service::store() { return impl_->db; }
const ServiceConfig& Service::config() const { return impl_->cfg; }

}  // namespace citeassist::service
