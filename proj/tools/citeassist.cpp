// citeassist command-line driver.
//
// Exit codes: 0 ok, 1 other failure, 2 input parse, 3 I/O, 4 resolver,
// 5 server, 6 serve start. Errors print one line on stderr:
//   citeassist: error: <CODE>: <message>

#include <signal.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <thread>

#include "citeassist/annotator.hpp"
#include "citeassist/bibtex.hpp"
#include "citeassist/error.hpp"
#include "citeassist/extraction.hpp"
#include "citeassist/json_io.hpp"
#include "citeassist/service.hpp"
#include "citeassist/store.hpp"
#include "citeassist/text_util.hpp"
#include "http_client.hpp"

namespace fs = std::filesystem;
using namespace citeassist;
using json_io::json;

namespace {

enum Exit { ok = 0, other = 1, parse = 2, io = 3, resolver = 4, server = 5, serve_start = 6 };

// Failure with an explicit exit code and stderr code.
struct Failure {
  int exit_code;
  std::string code;
  std::string message;
};

[[noreturn]] void fail(int exit_code, std::string code, std::string message) {
  throw Failure{exit_code, std::move(code), std::move(message)};
}

int report(const Failure& f) {
  const bool color = !std::getenv("NO_COLOR") && ::isatty(STDERR_FILENO);
  std::cerr << "citeassist: " << (color ? "\033[31merror\033[0m" : "error") << ": " << f.code << ": " << f.message
            << '\n';
  return f.exit_code;
}

int parse_exit(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedPdf:
    case ErrorCode::EncryptedPdf:
    case ErrorCode::PageOutOfRange:
    case ErrorCode::NoEntryFound:
    case ErrorCode::UnbalancedDelimiters:
    case ErrorCode::MalformedDoi:
    case ErrorCode::MalformedArxivId:
    case ErrorCode::InvalidInput:
      return Exit::parse;
    case ErrorCode::StorageFailure:
    case ErrorCode::IntegrityFailure:
      return Exit::io;
    case ErrorCode::ServiceUnavailable:
    case ErrorCode::ServiceError:
    case ErrorCode::NotFound:
      return Exit::resolver;
    case ErrorCode::RenderFailure:
      return Exit::other;
  }
  return Exit::other;
}

[[noreturn]] void fail(const Error& e, std::optional<int> exit_code = std::nullopt) {
  fail(exit_code.value_or(parse_exit(e.code())), std::string(to_string(e.code())), e.what());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Exit::io, "IO_ERROR", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(Exit::io, "IO_ERROR", "cannot read " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Exit::io, "IO_ERROR", "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) fail(Exit::io, "IO_ERROR", "cannot write " + path.string());
}

bool same_file(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::exists(b, ec) && fs::equivalent(a, b, ec);
}

pdf::PdfDocument load_pdf(const fs::path& path) {
  const std::string bytes = read_file(path);
  try {
    return pdf::parse_pdf(bytes);
  } catch (const Error& e) {
    fail(e, Exit::parse);
  }
}

CalendarDate parse_today(const std::string& s) {
  static const std::regex re(R"((\d{4})-(\d{2})(?:-(\d{2}))?)");
  std::smatch m;
  if (!std::regex_match(s, m, re)) fail(Exit::parse, "INVALID_INPUT", "--today must be YYYY-MM-DD, got " + s);
  CalendarDate d{std::stoi(m[1]), std::stoi(m[2]), 1};
  if (d.month < 1 || d.month > 12) fail(Exit::parse, "INVALID_INPUT", "month out of range in --today");
  return d;
}

int parse_int(const std::string& field, const std::string& value) {
  try {
    std::size_t used = 0;
    const int n = std::stoi(value, &used);
    if (used == value.size()) return n;
  } catch (const std::exception&) {
  }
  fail(Exit::parse, "INVALID_INPUT", field + " must be an integer, got \"" + value + "\"");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  for (auto& piece : text::split(value, ',')) {
    for (auto& p : text::split(piece, ';')) {
      auto t = text::trim(p);
      if (!t.empty()) out.push_back(t);
    }
  }
  return out;
}

// field=value; known names fill their slot, others become extra fields.
void apply_assignment(MetadataOverrides& o, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    fail(Exit::parse, "INVALID_INPUT", "--set expects field=value, got \"" + assignment + "\"");
  }
  const std::string field = text::to_lower_ascii(text::trim(assignment.substr(0, eq)));
  const std::string value = text::trim(assignment.substr(eq + 1));
  if (field == "title") {
    o.title = value;
  } else if (field == "author" || field == "authors") {
    o.authors = value.find(';') != std::string::npos ? split_list(value) : bibtex::split_authors(value);
  } else if (field == "year") {
    o.year = parse_int(field, value);
  } else if (field == "month") {
    const int m = parse_int(field, value);
    if (m < 1 || m > 12) fail(Exit::parse, "INVALID_INPUT", "month must be 1..12");
    o.month = m;
  } else if (field == "type" || field == "entry_type") {
    o.entry_type = text::to_lower_ascii(value);
  } else if (field == "venue" || field == "journal" || field == "booktitle") {
    o.venue = value;
  } else if (field == "doi") {
    o.doi = value;
  } else if (field == "keywords") {
    o.keywords = split_list(value);
  } else if (field == "pages") {
    o.pages = parse_int(field, value);
  } else {
    if (!bibtex::is_valid_key(field)) fail(Exit::parse, "INVALID_INPUT", "invalid field name \"" + field + "\"");
    o.extra_fields[field] = value;
  }
}

MetadataOverrides read_overrides(const std::optional<std::string>& meta_file, const std::vector<std::string>& sets) {
  MetadataOverrides o;
  try {
    if (meta_file) o = json_io::overrides_from_json(json_io::parse(read_file(*meta_file)));
  } catch (const Error& e) {
    fail(e, Exit::parse);
  }
  for (const auto& s : sets) apply_assignment(o, s);
  return o;
}

extraction::PipelineResult run_pipeline(const pdf::PdfDocument& doc, const fs::path& path, MetadataOverrides overrides,
                                        const std::optional<std::string>& extractor_url,
                                        const std::optional<std::string>& today) {
  extraction::PipelineOptions opts;
  opts.overrides = std::move(overrides);
  opts.extractor_url = extractor_url ? extractor_url : extraction::extractor_url_from_env();
  if (opts.extractor_url && opts.extractor_url->empty()) opts.extractor_url.reset();
  if (today) opts.today = parse_today(*today);
  try {
    auto result = extraction::extract_metadata(doc, path.filename().string(), opts);
    if (result.extractor_error) std::cerr << "citeassist: warning: extractor skipped: " << *result.extractor_error << '\n';
    return result;
  } catch (const Error& e) {
    fail(e);
  }
}

struct Sources {
  std::optional<std::string> server;
  std::optional<std::string> db;
};

std::unique_ptr<store::Store> open_db(const std::string& path) {
  if (!fs::exists(path)) fail(Exit::io, "IO_ERROR", "no store at " + path);
  try {
    const fs::path p(path);
    const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
    return std::make_unique<store::Store>("sqlite:" + path, dir);
  } catch (const Error& e) {
    fail(e, Exit::io);
  }
}

std::string trimmed_base(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

bool is_uuid(const std::string& s) {
  static const std::regex re("[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}");
  return std::regex_match(s, re);
}

related::RelatedPaper lookup_record(const std::string& id, const Sources& src) {
  if (src.db) {
    auto db = open_db(*src.db);
    auto rec = db->get_record(text::to_lower_ascii(id));
    if (!rec) fail(Exit::resolver, "NOT_FOUND", "no record " + id + " in " + *src.db);
    return rec->as_related();
  }
  if (src.server) {
    http::Response r;
    try {
      r = http::get(trimmed_base(*src.server) + "/api/preprints/" + id, 15);
    } catch (const Error& e) {
      fail(e, Exit::server);
    }
    if (r.status == 404) fail(Exit::resolver, "NOT_FOUND", "no record " + id + " on " + *src.server);
    if (r.status != 200) fail(Exit::server, "SERVICE_ERROR", "server answered " + std::to_string(r.status));
    const json j = json::parse(r.body, nullptr, false);
    if (j.is_discarded()) fail(Exit::server, "SERVICE_ERROR", "server sent invalid JSON");
    related::RelatedPaper p;
    p.id = j.value("id", id);
    p.title = j.value("title", "");
    std::string authors;
    for (const auto& a : j.value("authors", json::array())) authors += (authors.empty() ? "" : " and ") + a.get<std::string>();
    p.authors = authors;
    if (j.contains("doi") && j["doi"].is_string()) p.doi = j["doi"].get<std::string>();
    p.url = j["url"].is_string() ? j["url"].get<std::string>() : j.value("webview_url", "");
    if (j.contains("year") && j["year"].is_number_integer()) p.year = j["year"].get<int>();
    return p;
  }
  fail(Exit::parse, "INVALID_INPUT", "record id " + id + " needs --db or --server");
}

related::RelatedPaper resolve_one(const std::string& ident, const related::ResolverConfig& cfg, const Sources& src) {
  try {
    if (is_uuid(ident)) return lookup_record(ident, src);
    if (related::normalize_doi(ident)) return related::resolve_doi(ident, cfg);
    if (related::normalize_arxiv_id(ident)) return related::resolve_arxiv(ident, cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedDoi || e.code() == ErrorCode::MalformedArxivId) fail(e, Exit::parse);
    fail(e, Exit::resolver);
  }
  fail(Exit::parse, "MALFORMED_DOI", "not a DOI, arXiv identifier or record id: " + ident);
}

void print_matches(const std::vector<related::RankedMatch>& matches, bool as_json) {
  if (as_json) {
    json out = json::array();
    for (const auto& m : matches) out.push_back(json_io::to_json(m));
    std::cout << out.dump(2) << '\n';
    return;
  }
  for (const auto& m : matches) {
    std::cout << m.match_count << '\t' << m.paper.id << '\t' << m.paper.title;
    if (m.paper.year) std::cout << " (" << *m.paper.year << ')';
    std::cout << '\n';
  }
}

// ---- subcommands ----

struct ExtractArgs {
  std::string pdf;
  bool json_out = false;
  bool bibtex_out = false;
  std::optional<std::string> extractor_url;
  std::optional<std::string> today;
  std::optional<std::string> meta;
  std::vector<std::string> sets;
};

int cmd_extract(const ExtractArgs& a) {
  const auto doc = load_pdf(a.pdf);
  const auto result = run_pipeline(doc, a.pdf, read_overrides(a.meta, a.sets), a.extractor_url, a.today);
  if (a.json_out) {
    std::cout << json_io::to_json(result.metadata).dump(2) << '\n';
  } else {
    std::cout << bibtex::serialize(bibtex::build_entry(result.metadata)) << '\n';
  }
  return Exit::ok;
}

struct AnnotateArgs {
  std::string pdf;
  std::optional<std::string> meta;
  std::vector<std::string> sets;
  std::vector<std::string> related;
  std::string out = "pdf";
  std::optional<std::string> webview_url;
  std::optional<std::string> output;
  std::optional<std::string> extractor_url;
  std::optional<std::string> today;
  std::optional<std::string> bibtex_file;
  Sources src;
  related::ResolverConfig resolver;
};

int cmd_annotate(const AnnotateArgs& a) {
  const fs::path input(a.pdf);
  const auto doc = load_pdf(input);
  const auto overrides = read_overrides(a.meta, a.sets);

  annotator::AnnotationBundle bundle;
  if (a.bibtex_file) {
    try {
      bundle.entry = bibtex::parse(read_file(*a.bibtex_file));
    } catch (const Error& e) {
      fail(e, Exit::parse);
    }
  } else {
    const auto result = run_pipeline(doc, input, overrides, a.extractor_url, a.today);
    bundle.entry = bibtex::build_entry(result.metadata);
  }
  for (const auto& ident : a.related) bundle.related.push_back(resolve_one(ident, a.resolver, a.src));
  bundle.webview_url = a.webview_url;

  const std::string stem = extraction::filename_stem(input.filename().string());
  const fs::path dir = input.has_parent_path() ? input.parent_path() : fs::path(".");
  if (a.out == "pdf") {
    const fs::path target = a.output ? fs::path(*a.output) : dir / (stem + "-annotated.pdf");
    if (same_file(input, target)) fail(Exit::parse, "INVALID_INPUT", "refusing to overwrite the input file");
    std::string bytes;
    try {
      bytes = pdf::serialize(annotator::annotate_pdf(doc, bundle));
    } catch (const Error& e) {
      fail(e);
    }
    write_file(target, bytes);
    std::cout << target.string() << '\n';
  } else {
    fs::path tex = a.output ? fs::path(*a.output) : dir / (stem + "-annotation.tex");
    if (fs::is_directory(tex)) tex /= stem + "-annotation.tex";
    if (same_file(input, tex)) fail(Exit::parse, "INVALID_INPUT", "refusing to overwrite the input file");
    const fs::path sty = (tex.has_parent_path() ? tex.parent_path() : fs::path(".")) / "citeassist.sty";
    write_file(tex, annotator::render_latex(bundle));
    write_file(sty, annotator::latex_style());
    std::cout << tex.string() << '\n' << sty.string() << '\n';
  }
  return Exit::ok;
}

struct RelatedArgs {
  std::vector<std::string> keywords;
  std::optional<std::string> exclude;
  bool json_out = false;
  Sources src;
};

int cmd_related(const RelatedArgs& a) {
  std::vector<std::string> kw;
  for (const auto& k : a.keywords) {
    for (auto& piece : split_list(k)) kw.push_back(piece);
  }
  if (a.src.db) {
    auto db = open_db(*a.src.db);
    try {
      print_matches(db->query_related(kw, a.exclude), a.json_out);
    } catch (const Error& e) {
      fail(e, Exit::io);
    }
    return Exit::ok;
  }
  if (!a.src.server) fail(Exit::parse, "INVALID_INPUT", "related needs --server or --db");
  json body = {{"keywords", kw}, {"exclude", a.exclude ? json(*a.exclude) : json(nullptr)}};
  http::Response r;
  try {
    r = http::post(trimmed_base(*a.src.server) + "/api/related", body.dump(), "application/json", 15);
  } catch (const Error& e) {
    fail(e, Exit::server);
  }
  if (r.status != 200) fail(Exit::server, "SERVICE_ERROR", "server answered " + std::to_string(r.status));
  const json j = json::parse(r.body, nullptr, false);
  if (!j.is_array()) fail(Exit::server, "SERVICE_ERROR", "server sent an unexpected body");
  std::vector<related::RankedMatch> matches;
  try {
    for (const auto& m : j) matches.push_back({json_io::paper_from_json(m), m.value("match_count", std::size_t{0})});
  } catch (const std::exception& e) {
    fail(Exit::server, "SERVICE_ERROR", std::string("server sent an unexpected body: ") + e.what());
  }
  print_matches(matches, a.json_out);
  return Exit::ok;
}

struct ResolveArgs {
  std::string identifier;
  bool json_out = false;
  Sources src;
  related::ResolverConfig resolver;
};

int cmd_resolve(const ResolveArgs& a) {
  const auto p = resolve_one(a.identifier, a.resolver, a.src);
  if (a.json_out) std::cout << json_io::to_json(p).dump(2) << '\n';
  else std::cout << annotator::format_related(p) << '\n';
  return Exit::ok;
}

struct ServeArgs {
  std::optional<std::string> config;
  std::optional<std::string> bind;
};

int cmd_serve(const ServeArgs& a) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<service::Service> svc;
  try {
    auto cfg = service::load_config(a.config ? std::optional<fs::path>(*a.config) : std::nullopt);
    if (a.bind) cfg.bind_addr = *a.bind;
    svc = std::make_unique<service::Service>(std::move(cfg));
    svc->bind();
  } catch (const Error& e) {
    fail(e, Exit::serve_start);
  }
  std::cerr << "citeassist: listening on " << service::split_bind_addr(svc->config().bind_addr).first << ':'
            << svc->port() << '\n';
  std::thread listener([&] { svc->listen(); });
  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "citeassist: shutting down\n";
  svc->stop();
  listener.join();
  return Exit::ok;
}

void add_resolver_options(CLI::App* cmd, related::ResolverConfig& cfg) {
  cmd->add_option("--doi-base", cfg.doi_base, "DOI metadata endpoint (DOI is appended)");
  cmd->add_option("--arxiv-base", cfg.arxiv_base, "arXiv query endpoint");
}

void add_source_options(CLI::App* cmd, Sources& src) {
  auto* server = cmd->add_option("--server", src.server, "citeassist service base URL");
  auto* db = cmd->add_option("--db", src.db, "local SQLite store path");
  server->excludes(db);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Citation and BibTeX annotation for preprints"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "citeassist 0.1.0");

  ExtractArgs ex;
  auto* extract = app.add_subcommand("extract", "Print merged metadata for a PDF");
  extract->add_option("pdf", ex.pdf, "input PDF")->required();
  auto* as_json = extract->add_flag("--json", ex.json_out, "print metadata as JSON");
  auto* as_bib = extract->add_flag("--bibtex", ex.bibtex_out, "print a BibTeX entry (default)");
  as_json->excludes(as_bib);
  extract->add_option("--extractor-url", ex.extractor_url, "header extraction service (default $CITEASSIST_EXTRACTOR_URL)");
  extract->add_option("--today", ex.today, "date used when nothing else gives one (YYYY-MM-DD)");
  extract->add_option("--meta", ex.meta, "JSON file with metadata overrides");
  extract->add_option("--set", ex.sets, "override a field (field=value)");

  AnnotateArgs an;
  auto* annotate = app.add_subcommand("annotate", "Write an annotated PDF or a LaTeX bundle");
  annotate->add_option("pdf", an.pdf, "input PDF")->required();
  annotate->add_option("--meta", an.meta, "JSON file with metadata overrides");
  annotate->add_option("--set", an.sets, "override a field (field=value)");
  annotate->add_option("--bibtex", an.bibtex_file, "use this BibTeX entry verbatim");
  annotate->add_option("--related", an.related, "related paper: DOI, arXiv id or record id");
  annotate->add_option("--out", an.out, "output kind")->check(CLI::IsMember({"pdf", "latex"}));
  annotate->add_option("--webview-url", an.webview_url, "link printed as the online version");
  annotate->add_option("-o,--output", an.output, "output path");
  annotate->add_option("--extractor-url", an.extractor_url, "header extraction service");
  annotate->add_option("--today", an.today, "fallback date (YYYY-MM-DD)");
  add_source_options(annotate, an.src);
  add_resolver_options(annotate, an.resolver);

  RelatedArgs rel;
  auto* relcmd = app.add_subcommand("related", "List stored papers sharing keywords");
  relcmd->add_option("-k,--keywords", rel.keywords, "keywords")->required();
  relcmd->add_option("--exclude", rel.exclude, "record id to leave out");
  relcmd->add_flag("--json", rel.json_out, "print JSON");
  add_source_options(relcmd, rel.src);

  ResolveArgs res;
  auto* resolve = app.add_subcommand("resolve", "Look up a DOI, arXiv id or record id");
  resolve->add_option("identifier", res.identifier, "identifier")->required();
  resolve->add_flag("--json", res.json_out, "print JSON");
  add_source_options(resolve, res.src);
  add_resolver_options(resolve, res.resolver);

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", sv.config, "JSON config file");
  serve->add_option("--bind", sv.bind, "host:port, overrides the config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report({Exit::parse, "USAGE", e.what()});
  }

  try {
    if (*extract) return cmd_extract(ex);
    if (*annotate) return cmd_annotate(an);
    if (*relcmd) return cmd_related(rel);
    if (*resolve) return cmd_resolve(res);
    if (*serve) return cmd_serve(sv);
  } catch (const Failure& f) {
    return report(f);
  } catch (const Error& e) {
    return report({parse_exit(e.code()), std::string(to_string(e.code())), e.what()});
  } catch (const std::exception& e) {
    return report({Exit::other, "INTERNAL_ERROR", e.what()});
  }
  return Exit::other;
}
