#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retriever/common/clock.hpp"
#include "retriever/common/sqlite.hpp"
#include "retriever/common/time.hpp"

namespace retriever::store {

using ArticleId = std::int64_t;

struct Article {
  ArticleId id = 0;
  std::string outlet_id;
  std::string url;  // shortest URL ever merged into the article
  std::string title;
  std::string body;
  std::optional<Timestamp> published_at;
  std::uint64_t simhash = 0;
  nlohmann::json features = nlohmann::json::object();
  bool hidden = false;
  Timestamp first_seen_at;
  Timestamp updated_at;
  // Store-wide write sequence number of the last change to this row.
  std::int64_t revision = 0;
  // Incremented whenever title or body changes.
  std::int64_t content_version = 1;
};

struct NewArticle {
  std::string outlet_id;
  std::string url;
  std::string title;
  std::string body;
  std::optional<Timestamp> published_at;
  std::uint64_t simhash = 0;
};

// SQLite-backed article table. Every public method is atomic; transaction()
// groups several calls into one BEGIN IMMEDIATE transaction, which also
// serializes writers across processes sharing the file.
class ArticleStore {
 public:
  explicit ArticleStore(const std::string& db_path, std::shared_ptr<const Clock> clock = system_clock());

  // Runs `fn` inside a write transaction; rolls back if it throws.
  void transaction(const std::function<void()>& fn);

  std::optional<Article> get(ArticleId id);
  Article require(ArticleId id);
  // Looks up the canonical URL and every URL previously merged into an article.
  std::optional<Article> find_by_url(std::string_view outlet_id, std::string_view url);
  // Lowest-id article of the outlet with exactly this simhash.
  std::optional<Article> find_by_simhash(std::string_view outlet_id, std::uint64_t simhash);

  ArticleId insert(const NewArticle& a);
  // Replaces title, body, simhash and (when given) published_at. A change of
  // title or body resets features to {} and bumps content_version.
  // Returns true when title or body changed.
  bool update_content(ArticleId id, std::string_view title, std::string_view body,
                      std::optional<Timestamp> published_at, std::uint64_t simhash);
  // Records `url` as an alias and makes it canonical when it is shorter.
  void merge_url(ArticleId id, std::string_view url);
  // Stores analyzer output. Fails (returns false) when the article's content
  // changed after `content_version` was read.
  bool set_features(ArticleId id, std::int64_t content_version, const nlohmann::json& features, bool hidden);

  std::vector<std::string> urls_of(ArticleId id);
  std::size_t count();
  std::size_t count(std::string_view outlet_id);
  std::size_t count_hidden();
  std::vector<ArticleId> ids();
  // Articles whose revision is greater than `after`, in revision order.
  std::vector<Article> changed_since(std::int64_t after, std::size_t limit = 1000);
  std::int64_t revision();
  // Ids of articles whose record for `module` is missing or has a version
  // other than `version`.
  std::vector<ArticleId> stale_ids(std::string_view module, int version);
  const std::string& path() const { return db_.path(); }

 private:
  Article read_row(sql::Statement& st);
  std::int64_t next_revision();
  std::optional<Article> query_one(const std::string& sql, const std::function<void(sql::Statement&)>& bind);

  std::shared_ptr<const Clock> clock_;
  std::recursive_mutex mu_;
  sql::Database db_;
  int tx_depth_ = 0;
};

}  // namespace retriever::store
