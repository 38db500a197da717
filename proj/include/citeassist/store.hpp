#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "citeassist/bibtex.hpp"
#include "citeassist/keywords.hpp"
#include "citeassist/metadata.hpp"
#include "citeassist/related.hpp"

struct sqlite3;

namespace citeassist::store {

struct PreprintRecord {
  std::string id;  // UUIDv4
  std::string citation_key;
  std::string title;
  std::vector<std::string> authors;
  std::optional<std::string> doi;
  std::optional<std::string> url;
  std::optional<int> year;
  std::vector<std::string> keywords;
  std::string bibtex;
  std::string created_at;  // UTC, ISO 8601
  bool pdf_stored = false;
  PreprintMetadata metadata;

  bool operator==(const PreprintRecord&) const = default;
  std::string webview_path() const { return "/preprint/" + id; }
  related::RelatedPaper as_related() const;
};

std::string new_uuid();
std::string sha256_hex(std::string_view bytes);

// SQLite-backed record store with PDF blobs on disk under
// <data_dir>/pdfs/<id>.pdf. db_url is "sqlite:<path>", a plain path, or
// ":memory:"; empty means <data_dir>/citeassist.db. Opening removes
// leftovers of interrupted writes (temporary files, blobs without a
// committed record). All operations may be called from several threads.
class Store {
 public:
  Store(const std::string& db_url, const std::filesystem::path& data_dir,
        const keywords::Lexicon& lexicon = keywords::Lexicon::builtin());
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // The PDF is kept only when consent is given. A citation key already in
  // use gets a suffix (a, b, ..., z, aa, ...). Keywords are lemmatized.
  // id may be preassigned (it must be an unused UUID). Errors:
  // StorageFailure, InvalidInput.
  PreprintRecord create_record(const PreprintMetadata& meta, const bibtex::Entry& entry,
                               std::optional<std::string_view> pdf, bool consent,
                               std::optional<std::string> id = std::nullopt);

  std::optional<PreprintRecord> get_record(const std::string& id) const;

  // Errors: NotFound (unknown id or no stored PDF), IntegrityFailure.
  std::string get_pdf(const std::string& id) const;

  // Raw keywords are lemmatized first. Delegates to related::find_related.
  std::vector<related::RankedMatch> query_related(const std::vector<std::string>& raw_keywords,
                                                  const std::optional<std::string>& exclude = std::nullopt) const;

  std::vector<related::RelatedPaper> all_papers() const;
  std::size_t record_count() const;

  std::filesystem::path blob_path(const std::string& id) const;
  const std::filesystem::path& data_dir() const { return data_dir_; }

 private:
  void exec(const char* sql) const;
  void sweep();
  std::vector<PreprintRecord> load(const std::string& where, const std::vector<std::string>& args) const;

  std::filesystem::path data_dir_;
  const keywords::Lexicon& lexicon_;
  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

}  // namespace citeassist::store
