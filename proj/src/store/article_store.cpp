#include "retriever/store/article_store.hpp"

#include "retriever/common/error.hpp"

namespace retriever::store {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS article (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  outlet_id TEXT NOT NULL,
  url TEXT NOT NULL,
  title TEXT NOT NULL,
  body TEXT NOT NULL,
  published_at INTEGER,
  simhash INTEGER NOT NULL,
  features TEXT NOT NULL DEFAULT '{}',
  hidden INTEGER NOT NULL DEFAULT 0,
  first_seen_at INTEGER NOT NULL,
  updated_at INTEGER NOT NULL,
  revision INTEGER NOT NULL,
  content_version INTEGER NOT NULL DEFAULT 1
);
CREATE UNIQUE INDEX IF NOT EXISTS article_url ON article (outlet_id, url);
CREATE INDEX IF NOT EXISTS article_simhash ON article (outlet_id, simhash);
CREATE INDEX IF NOT EXISTS article_revision ON article (revision);
CREATE TABLE IF NOT EXISTS article_alias (
  outlet_id TEXT NOT NULL,
  url TEXT NOT NULL,
  article_id INTEGER NOT NULL REFERENCES article (id),
  PRIMARY KEY (outlet_id, url)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS article_alias_id ON article_alias (article_id);
CREATE TABLE IF NOT EXISTS store_meta (key TEXT PRIMARY KEY, value INTEGER NOT NULL) WITHOUT ROWID;
INSERT OR IGNORE INTO store_meta (key, value) VALUES ('revision', 0);
)sql";

constexpr const char* kColumns =
    "id, outlet_id, url, title, body, published_at, simhash, features, hidden, first_seen_at, updated_at, revision, "
    "content_version";

// SQLite integers are signed; the simhash keeps its bit pattern.
std::int64_t to_db(std::uint64_t h) { return static_cast<std::int64_t>(h); }
std::uint64_t from_db(std::int64_t h) { return static_cast<std::uint64_t>(h); }

}  // namespace

ArticleStore::ArticleStore(const std::string& db_path, std::shared_ptr<const Clock> clock)
    : clock_(std::move(clock)), db_(db_path) {
  sql::Transaction tx(db_);
  db_.exec(kSchema);
  tx.commit();
}

void ArticleStore::transaction(const std::function<void()>& fn) {
  std::lock_guard lock(mu_);
  if (tx_depth_ > 0) {
    fn();
    return;
  }
  sql::Transaction tx(db_);
  ++tx_depth_;
  try {
    fn();
  } catch (...) {
    --tx_depth_;
    throw;
  }
  --tx_depth_;
  tx.commit();
}

Article ArticleStore::read_row(sql::Statement& st) {
  Article a;
  a.id = st.column_int64(0);
  a.outlet_id = st.column_text(1);
  a.url = st.column_text(2);
  a.title = st.column_text(3);
  a.body = st.column_text(4);
  if (auto p = st.column_optional_int64(5)) a.published_at = from_millis(*p);
  a.simhash = from_db(st.column_int64(6));
  a.features = nlohmann::json::parse(st.column_text(7));
  a.hidden = st.column_int64(8) != 0;
  a.first_seen_at = from_millis(st.column_int64(9));
  a.updated_at = from_millis(st.column_int64(10));
  a.revision = st.column_int64(11);
  a.content_version = st.column_int64(12);
  return a;
}

std::optional<Article> ArticleStore::query_one(const std::string& sql,
                                               const std::function<void(sql::Statement&)>& bind) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare(sql);
  bind(st);
  std::optional<Article> out;
  if (st.step()) out = read_row(st);
  st.reset();
  return out;
}

std::optional<Article> ArticleStore::get(ArticleId id) {
  return query_one(std::string("SELECT ") + kColumns + " FROM article WHERE id = ?",
                   [&](sql::Statement& st) { st.bind(1, id); });
}

Article ArticleStore::require(ArticleId id) {
  auto a = get(id);
  if (!a) throw NotFound("no article " + std::to_string(id));
  return std::move(*a);
}

std::optional<Article> ArticleStore::find_by_url(std::string_view outlet_id, std::string_view url) {
  return query_one(std::string("SELECT ") + kColumns +
                       " FROM article WHERE id = (SELECT article_id FROM article_alias WHERE outlet_id = ? AND url = ?)",
                   [&](sql::Statement& st) { st.bind(1, outlet_id).bind(2, url); });
}

std::optional<Article> ArticleStore::find_by_simhash(std::string_view outlet_id, std::uint64_t simhash) {
  return query_one(std::string("SELECT ") + kColumns +
                       " FROM article WHERE outlet_id = ? AND simhash = ? ORDER BY id LIMIT 1",
                   [&](sql::Statement& st) { st.bind(1, outlet_id).bind(2, to_db(simhash)); });
}

std::int64_t ArticleStore::next_revision() {
  db_.prepare("UPDATE store_meta SET value = value + 1 WHERE key = 'revision'").run();
  auto& st = db_.prepare("SELECT value FROM store_meta WHERE key = 'revision'");
  st.step();
  std::int64_t r = st.column_int64(0);
  st.reset();
  return r;
}

ArticleId ArticleStore::insert(const NewArticle& a) {
  ArticleId id = 0;
  transaction([&] {
    std::int64_t now = to_millis(clock_->now());
    std::int64_t rev = next_revision();
    db_.prepare(
           "INSERT INTO article (outlet_id, url, title, body, published_at, simhash, first_seen_at, updated_at, "
           "revision) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)")
        .bind(1, a.outlet_id)
        .bind(2, a.url)
        .bind(3, a.title)
        .bind(4, a.body)
        .bind(5, a.published_at ? std::optional<std::int64_t>(to_millis(*a.published_at)) : std::nullopt)
        .bind(6, to_db(a.simhash))
        .bind(7, now)
        .bind(8, now)
        .bind(9, rev)
        .run();
    id = db_.last_insert_rowid();
    db_.prepare("INSERT INTO article_alias (outlet_id, url, article_id) VALUES (?, ?, ?)")
        .bind(1, a.outlet_id)
        .bind(2, a.url)
        .bind(3, id)
        .run();
  });
  return id;
}

bool ArticleStore::update_content(ArticleId id, std::string_view title, std::string_view body,
                                  std::optional<Timestamp> published_at, std::uint64_t simhash) {
  bool changed = false;
  transaction([&] {
    Article current = require(id);
    changed = current.title != title || current.body != body;
    std::int64_t rev = next_revision();
    auto published = published_at ? published_at : current.published_at;
    db_.prepare(
           "UPDATE article SET title = ?, body = ?, published_at = ?, simhash = ?, updated_at = ?, revision = ?, "
           "features = CASE WHEN ? THEN '{}' ELSE features END, "
           "hidden = CASE WHEN ? THEN 0 ELSE hidden END, "
           "content_version = content_version + ? WHERE id = ?")
        .bind(1, title)
        .bind(2, body)
        .bind(3, published ? std::optional<std::int64_t>(to_millis(*published)) : std::nullopt)
        .bind(4, to_db(simhash))
        .bind(5, to_millis(clock_->now()))
        .bind(6, rev)
        .bind(7, changed ? 1 : 0)
        .bind(8, changed ? 1 : 0)
        .bind(9, changed ? 1 : 0)
        .bind(10, id)
        .run();
  });
  return changed;
}

void ArticleStore::merge_url(ArticleId id, std::string_view url) {
  transaction([&] {
    Article current = require(id);
    db_.prepare("INSERT OR IGNORE INTO article_alias (outlet_id, url, article_id) VALUES (?, ?, ?)")
        .bind(1, current.outlet_id)
        .bind(2, url)
        .bind(3, id)
        .run();
    std::string canonical = url.size() < current.url.size() ? std::string(url) : current.url;
    db_.prepare("UPDATE article SET url = ?, updated_at = ?, revision = ? WHERE id = ?")
        .bind(1, canonical)
        .bind(2, to_millis(clock_->now()))
        .bind(3, next_revision())
        .bind(4, id)
        .run();
  });
}

bool ArticleStore::set_features(ArticleId id, std::int64_t content_version, const nlohmann::json& features,
                                bool hidden) {
  bool ok = false;
  transaction([&] {
    std::int64_t rev = next_revision();
    db_.prepare("UPDATE article SET features = ?, hidden = ?, revision = ? WHERE id = ? AND content_version = ?")
        .bind(1, features.dump())
        .bind(2, hidden ? 1 : 0)
        .bind(3, rev)
        .bind(4, id)
        .bind(5, content_version)
        .run();
    ok = db_.changes() == 1;
  });
  return ok;
}

std::vector<std::string> ArticleStore::urls_of(ArticleId id) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT url FROM article_alias WHERE article_id = ? ORDER BY length(url), url");
  st.bind(1, id);
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.column_text(0));
  return out;
}

std::size_t ArticleStore::count_hidden() {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT count(*) FROM article WHERE hidden != 0");
  st.step();
  auto n = static_cast<std::size_t>(st.column_int64(0));
  st.reset();
  return n;
}

std::size_t ArticleStore::count() {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT count(*) FROM article");
  st.step();
  auto n = static_cast<std::size_t>(st.column_int64(0));
  st.reset();
  return n;
}

std::size_t ArticleStore::count(std::string_view outlet_id) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT count(*) FROM article WHERE outlet_id = ?");
  st.bind(1, outlet_id);
  st.step();
  auto n = static_cast<std::size_t>(st.column_int64(0));
  st.reset();
  return n;
}

std::vector<ArticleId> ArticleStore::ids() {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT id FROM article ORDER BY id");
  std::vector<ArticleId> out;
  while (st.step()) out.push_back(st.column_int64(0));
  return out;
}

std::vector<Article> ArticleStore::changed_since(std::int64_t after, std::size_t limit) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare(std::string("SELECT ") + kColumns + " FROM article WHERE revision > ? ORDER BY revision LIMIT ?");
  st.bind(1, after).bind(2, static_cast<std::int64_t>(limit));
  std::vector<Article> out;
  while (st.step()) out.push_back(read_row(st));
  return out;
}

std::int64_t ArticleStore::revision() {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT value FROM store_meta WHERE key = 'revision'");
  st.step();
  std::int64_t r = st.column_int64(0);
  st.reset();
  return r;
}

std::vector<ArticleId> ArticleStore::stale_ids(std::string_view module, int version) {
  std::lock_guard lock(mu_);
  std::string path = "$.\"" + std::string(module) + "\".version";
  auto& st = db_.prepare(
      "SELECT id FROM article WHERE coalesce(json_extract(features, ?), -1) IS NOT ? ORDER BY id");
  st.bind(1, path).bind(2, version);
  std::vector<ArticleId> out;
  while (st.step()) out.push_back(st.column_int64(0));
  return out;
}

}  // namespace retriever::store
