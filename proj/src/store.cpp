#include "citeassist/store.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sqlite3.h>
#include <unistd.h>

#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_generators.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_set>

#include "citeassist/error.hpp"
#include "citeassist/json_io.hpp"
#include "citeassist/text_util.hpp"

namespace citeassist::store {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void storage_failure(const std::string& what) { throw Error(ErrorCode::StorageFailure, what); }

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      storage_failure(std::string("cannot prepare statement: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& s) {
    check(sqlite3_bind_text(stmt_, i, s.data(), static_cast<int>(s.size()), SQLITE_TRANSIENT));
    return *this;
  }
  Stmt& bind(int i, const std::optional<std::string>& s) {
    if (s) return bind(i, *s);
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, i, v));
    return *this;
  }
  Stmt& bind(int i, std::optional<int> v) {
    if (v) return bind(i, static_cast<std::int64_t>(*v));
    check(sqlite3_bind_null(stmt_, i));
    return *this;
  }

  // true while rows are available
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    storage_failure(std::string("database error: ") + sqlite3_errmsg(db_));
  }

  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }
  std::optional<std::string> opt_text(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return text(col);
  }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  std::optional<int> opt_int(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    return static_cast<int>(integer(col));
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) storage_failure(std::string("cannot bind parameter: ") + sqlite3_errmsg(db_));
  }
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool is_uuid(const std::string& s) {
  static const std::regex re("[0-9a-f]{8}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{4}-[0-9a-f]{12}");
  return std::regex_match(s, re);
}

// a, b, ..., z, aa, ab, ...
std::string suffix(std::size_t n) {
  std::string s;
  ++n;
  while (n > 0) {
    --n;
    s.insert(s.begin(), static_cast<char>('a' + n % 26));
    n /= 26;
  }
  return s;
}

void write_all(int fd, std::string_view bytes, const fs::path& path) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      storage_failure("cannot write " + path.string() + ": " + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

// Temporary file, fsync, rename into place, fsync the directory.
void write_atomically(const fs::path& target, std::string_view bytes) {
  const fs::path tmp = target.parent_path() / (".tmp-" + target.filename().string() + "-" + new_uuid());
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) storage_failure("cannot create " + tmp.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, bytes, tmp);
    if (::fsync(fd) != 0) storage_failure("cannot sync " + tmp.string() + ": " + std::strerror(errno));
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    ::unlink(tmp.c_str());
    storage_failure("cannot move blob into place: " + ec.message());
  }
  const int dir = ::open(target.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dir >= 0) {
    ::fsync(dir);
    ::close(dir);
  }
}

std::string read_binary(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IntegrityFailure, "stored PDF is missing: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

constexpr const char* k_schema = R"sql(
CREATE TABLE IF NOT EXISTS records (
  id TEXT PRIMARY KEY,
  citation_key TEXT NOT NULL UNIQUE,
  title TEXT NOT NULL,
  authors TEXT NOT NULL,
  doi TEXT,
  url TEXT,
  year INTEGER,
  bibtex TEXT NOT NULL,
  created_at TEXT NOT NULL,
  pdf_stored INTEGER NOT NULL,
  pdf_sha256 TEXT,
  pdf_size INTEGER,
  metadata TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS keywords (
  record_id TEXT NOT NULL REFERENCES records(id),
  position INTEGER NOT NULL,
  keyword TEXT NOT NULL,
  PRIMARY KEY (record_id, position)
);
CREATE INDEX IF NOT EXISTS keywords_by_word ON keywords(keyword);
)sql";

constexpr const char* k_columns =
    "id, citation_key, title, authors, doi, url, year, bibtex, created_at, pdf_stored, metadata";

}  // namespace

std::string new_uuid() {
  thread_local boost::uuids::random_generator gen;
  return boost::uuids::to_string(gen());
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    storage_failure("SHA-256 computation failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

related::RelatedPaper PreprintRecord::as_related() const {
  related::RelatedPaper p;
  p.id = id;
  p.title = title;
  for (std::size_t i = 0; i < authors.size(); ++i) p.authors += (i ? " and " : "") + authors[i];
  p.doi = doi;
  p.url = url;
  p.year = year;
  p.keywords = keywords;
  return p;
}

Store::Store(const std::string& db_url, const fs::path& data_dir, const keywords::Lexicon& lexicon)
    : data_dir_(data_dir), lexicon_(lexicon) {
  std::string target = text::trim(db_url);
  if (text::starts_with_ci(target, "postgres://") || text::starts_with_ci(target, "postgresql://")) {
    storage_failure("PostgreSQL support is not built in; use sqlite:<path>");
  }
  if (text::starts_with_ci(target, "sqlite://")) target = target.substr(9);
  else if (text::starts_with_ci(target, "sqlite:")) target = target.substr(7);
  std::error_code ec;
  fs::create_directories(data_dir_ / "pdfs", ec);
  if (ec) storage_failure("cannot create data directory " + data_dir_.string() + ": " + ec.message());
  if (target.empty()) target = (data_dir_ / "citeassist.db").string();

  if (sqlite3_open_v2(target.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    storage_failure("cannot open database " + target + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  try {
    if (target != ":memory:") exec("PRAGMA journal_mode=WAL;");
    exec("PRAGMA foreign_keys=ON;");
    exec(k_schema);
    sweep();
  } catch (...) {
    sqlite3_close(db_);
    db_ = nullptr;
    throw;
  }
}

Store::~Store() {
  if (db_) sqlite3_close(db_);
}

void Store::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    storage_failure("database error: " + msg);
  }
}

fs::path Store::blob_path(const std::string& id) const { return data_dir_ / "pdfs" / (id + ".pdf"); }

void Store::sweep() {
  std::unordered_set<std::string> stored;
  {
    Stmt s(db_, "SELECT id FROM records WHERE pdf_stored = 1");
    while (s.step()) stored.insert(s.text(0));
  }
  std::error_code ec;
  for (const auto& item : fs::directory_iterator(data_dir_ / "pdfs", ec)) {
    const std::string name = item.path().filename().string();
    const bool tmp = name.rfind(".tmp-", 0) == 0;
    const bool orphan = name.size() > 4 && name.ends_with(".pdf") && !stored.contains(name.substr(0, name.size() - 4));
    if (tmp || orphan) fs::remove(item.path(), ec);
  }
}

PreprintRecord Store::create_record(const PreprintMetadata& meta, const bibtex::Entry& entry,
                                    std::optional<std::string_view> pdf, bool consent, std::optional<std::string> id) {
  PreprintRecord rec;
  rec.id = id ? *id : new_uuid();
  if (!is_uuid(rec.id)) throw Error(ErrorCode::InvalidInput, "record id is not a lowercase UUID: " + rec.id);
  if (text::trim(meta.title).empty()) throw Error(ErrorCode::InvalidInput, "record needs a title");
  rec.title = meta.title;
  rec.authors = meta.authors;
  rec.doi = meta.doi;
  if (auto it = meta.extra_fields.find("url"); it != meta.extra_fields.end() && !it->second.empty()) rec.url = it->second;
  rec.year = meta.date.year;
  rec.keywords = keywords::normalize_user_keywords(meta.keywords, lexicon_);
  rec.metadata = meta;
  rec.metadata.keywords = rec.keywords;
  rec.created_at = utc_timestamp();
  rec.pdf_stored = consent && pdf.has_value();

  const std::string base_key = bibtex::is_valid_key(entry.key) ? entry.key : bibtex::generate_key(meta);
  std::optional<std::string> hash;
  std::optional<int> size;
  if (rec.pdf_stored) {
    hash = sha256_hex(*pdf);
    size = static_cast<int>(pdf->size());
  }

  std::lock_guard lock(mutex_);
  exec("BEGIN IMMEDIATE;");
  bool blob_written = false;
  try {
    {
      Stmt dup(db_, "SELECT 1 FROM records WHERE id = ?");
      dup.bind(1, rec.id);
      if (dup.step()) throw Error(ErrorCode::InvalidInput, "record id already in use: " + rec.id);
    }
    rec.citation_key = base_key;
    for (std::size_t n = 0;; ++n) {
      Stmt q(db_, "SELECT 1 FROM records WHERE citation_key = ?");
      q.bind(1, rec.citation_key);
      if (!q.step()) break;
      rec.citation_key = base_key + suffix(n);
    }
    bibtex::Entry stored = entry;
    stored.key = rec.citation_key;
    rec.bibtex = bibtex::serialize(stored);

    if (rec.pdf_stored) {
      write_atomically(blob_path(rec.id), *pdf);
      blob_written = true;
    }
    std::string authors_json = json_io::json(rec.authors).dump();
    Stmt ins(db_,
             "INSERT INTO records (id, citation_key, title, authors, doi, url, year, bibtex, created_at, pdf_stored, "
             "pdf_sha256, pdf_size, metadata) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)");
    ins.bind(1, rec.id).bind(2, rec.citation_key).bind(3, rec.title).bind(4, authors_json).bind(5, rec.doi);
    ins.bind(6, rec.url).bind(7, rec.year).bind(8, rec.bibtex).bind(9, rec.created_at);
    ins.bind(10, static_cast<std::int64_t>(rec.pdf_stored)).bind(11, hash).bind(12, size);
    ins.bind(13, json_io::to_json(rec.metadata).dump());
    ins.step();
    for (std::size_t i = 0; i < rec.keywords.size(); ++i) {
      Stmt k(db_, "INSERT INTO keywords (record_id, position, keyword) VALUES (?, ?, ?)");
      k.bind(1, rec.id).bind(2, static_cast<std::int64_t>(i)).bind(3, rec.keywords[i]);
      k.step();
    }
    exec("COMMIT;");
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK;", nullptr, nullptr, nullptr);
    if (blob_written) {
      std::error_code ec;
      fs::remove(blob_path(rec.id), ec);
    }
    throw;
  }
  return rec;
}

std::vector<PreprintRecord> Store::load(const std::string& where, const std::vector<std::string>& args) const {
  std::vector<PreprintRecord> out;
  const std::string sql = std::string("SELECT ") + k_columns + " FROM records " + where + " ORDER BY created_at, id";
  Stmt s(db_, sql.c_str());
  for (std::size_t i = 0; i < args.size(); ++i) s.bind(static_cast<int>(i + 1), args[i]);
  while (s.step()) {
    PreprintRecord r;
    r.id = s.text(0);
    r.citation_key = s.text(1);
    r.title = s.text(2);
    for (const auto& a : json_io::parse(s.text(3))) r.authors.push_back(a.get<std::string>());
    r.doi = s.opt_text(4);
    r.url = s.opt_text(5);
    r.year = s.opt_int(6);
    r.bibtex = s.text(7);
    r.created_at = s.text(8);
    r.pdf_stored = s.integer(9) != 0;
    r.metadata = json_io::metadata_from_json(json_io::parse(s.text(10)));
    out.push_back(std::move(r));
  }
  for (auto& r : out) {
    Stmt k(db_, "SELECT keyword FROM keywords WHERE record_id = ? ORDER BY position");
    k.bind(1, r.id);
    while (k.step()) r.keywords.push_back(k.text(0));
  }
  return out;
}

std::optional<PreprintRecord> Store::get_record(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto rows = load("WHERE id = ?", {id});
  if (rows.empty()) return std::nullopt;
  return rows.front();
}

std::string Store::get_pdf(const std::string& id) const {
  std::string hash;
  std::int64_t size = 0;
  {
    std::lock_guard lock(mutex_);
    Stmt s(db_, "SELECT pdf_stored, pdf_sha256, pdf_size FROM records WHERE id = ?");
    s.bind(1, id);
    if (!s.step()) throw Error(ErrorCode::NotFound, "no record " + id);
    if (s.integer(0) == 0) throw Error(ErrorCode::NotFound, "no PDF stored for record " + id);
    hash = s.text(1);
    size = s.integer(2);
  }
  std::string bytes = read_binary(blob_path(id));
  if (static_cast<std::int64_t>(bytes.size()) != size || sha256_hex(bytes) != hash) {
    throw Error(ErrorCode::IntegrityFailure, "stored PDF for " + id + " does not match its hash");
  }
  return bytes;
}

std::vector<related::RankedMatch> Store::query_related(const std::vector<std::string>& raw_keywords,
                                                       const std::optional<std::string>& exclude) const {
  const auto query = keywords::normalize_user_keywords(raw_keywords, lexicon_);
  if (query.empty()) return {};
  std::string where = "WHERE id IN (SELECT record_id FROM keywords WHERE keyword IN (";
  for (std::size_t i = 0; i < query.size(); ++i) where += i ? ", ?" : "?";
  where += "))";
  std::vector<related::RelatedPaper> papers;
  {
    std::lock_guard lock(mutex_);
    for (const auto& r : load(where, query)) papers.push_back(r.as_related());
  }
  return related::find_related(query, papers, exclude);
}

std::vector<related::RelatedPaper> Store::all_papers() const {
  std::lock_guard lock(mutex_);
  std::vector<related::RelatedPaper> out;
  for (const auto& r : load("", {})) out.push_back(r.as_related());
  return out;
}

std::size_t Store::record_count() const {
  std::lock_guard lock(mutex_);
  Stmt s(db_, "SELECT COUNT(*) FROM records");
  s.step();
  return static_cast<std::size_t>(s.integer(0));
}

}  // namespace citeassist::store
