#include "retriever/broker/broker.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <regex>
#include <thread>

#include "retriever/common/error.hpp"

namespace retriever::broker {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS queues (
  name TEXT PRIMARY KEY,
  lease_ms INTEGER NOT NULL,
  max_attempts INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS messages (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  queue TEXT NOT NULL,
  payload TEXT NOT NULL,
  priority INTEGER NOT NULL,
  available_at INTEGER NOT NULL,
  enqueued_at INTEGER NOT NULL,
  attempts INTEGER NOT NULL DEFAULT 0,
  state INTEGER NOT NULL DEFAULT 0,
  lease_until INTEGER,
  claim_token INTEGER
);
CREATE INDEX IF NOT EXISTS messages_ready ON messages (queue, state, priority DESC, id);
CREATE INDEX IF NOT EXISTS messages_lease ON messages (queue, state, lease_until);
CREATE TABLE IF NOT EXISTS message_errors (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  queue TEXT NOT NULL,
  message_id INTEGER NOT NULL,
  original TEXT NOT NULL,
  error TEXT NOT NULL,
  failed_at INTEGER NOT NULL,
  retry_after INTEGER
);
CREATE INDEX IF NOT EXISTS message_errors_queue ON message_errors (queue, id);
CREATE TABLE IF NOT EXISTS sequences (
  name TEXT PRIMARY KEY,
  value INTEGER NOT NULL
);
INSERT OR IGNORE INTO sequences (name, value) VALUES ('claim', 0);
)sql";

const std::regex& queue_name_re() {
  static const std::regex re(R"(^[A-Za-z0-9_-]+(\.[A-Za-z0-9_-]+)*$)");
  return re;
}

nlohmann::json to_json(const QueueMessage& m) {
  return {{"id", m.id},
          {"queue", m.queue},
          {"payload", m.payload},
          {"priority", m.priority},
          {"available_at", to_millis(m.available_at)},
          {"enqueued_at", to_millis(m.enqueued_at)},
          {"attempts", m.attempts},
          {"state", to_string(m.state)},
          {"claim_token", m.claim_token}};
}

QueueMessage message_from_json(const nlohmann::json& j) {
  QueueMessage m;
  m.id = j.at("id").get<std::int64_t>();
  m.queue = j.at("queue").get<std::string>();
  m.payload = j.at("payload");
  m.priority = j.at("priority").get<int>();
  m.available_at = from_millis(j.at("available_at").get<std::int64_t>());
  m.enqueued_at = from_millis(j.at("enqueued_at").get<std::int64_t>());
  m.attempts = j.at("attempts").get<int>();
  auto st = j.at("state").get<std::string>();
  m.state = st == "ready"     ? MessageState::ready
            : st == "claimed" ? MessageState::claimed
            : st == "acked"   ? MessageState::acked
                              : MessageState::failed;
  m.claim_token = j.value("claim_token", std::int64_t{0});
  return m;
}

}  // namespace

std::string_view to_string(MessageState s) {
  switch (s) {
    case MessageState::ready: return "ready";
    case MessageState::claimed: return "claimed";
    case MessageState::acked: return "acked";
    case MessageState::failed: return "failed";
  }
  return "unknown";
}

bool valid_queue_name(std::string_view name) {
  return std::regex_match(name.begin(), name.end(), queue_name_re());
}

Duration RetryPolicy::delay_for(int attempts) const {
  double ms = static_cast<double>(initial.count()) * std::pow(factor, std::max(0, attempts - 1));
  ms = std::min(ms, static_cast<double>(max.count()));
  return Duration{static_cast<std::int64_t>(ms)};
}

Broker::Broker(const std::string& db_path, std::shared_ptr<const Clock> clock)
    : clock_(std::move(clock)), db_(db_path) {
  sql::Transaction tx(db_);
  db_.exec(kSchema);
  tx.commit();
}

void Broker::register_queue(std::string_view name, QueueOptions options) {
  if (!valid_queue_name(name)) throw Rejected("invalid queue name: " + std::string(name));
  if (options.max_attempts < 1) throw Rejected("max_attempts must be positive");
  std::lock_guard lock(mu_);
  db_.prepare(
         "INSERT INTO queues (name, lease_ms, max_attempts) VALUES (?, ?, ?) "
         "ON CONFLICT(name) DO UPDATE SET lease_ms = excluded.lease_ms, max_attempts = excluded.max_attempts")
      .bind(1, name)
      .bind(2, options.lease.count())
      .bind(3, options.max_attempts)
      .run();
  known_[std::string(name)] = options;
}

QueueOptions Broker::options_locked(std::string_view queue) {
  if (auto it = known_.find(std::string(queue)); it != known_.end()) return it->second;
  auto& st = db_.prepare("SELECT lease_ms, max_attempts FROM queues WHERE name = ?");
  st.bind(1, queue);
  if (!st.step()) throw Rejected("unknown queue: " + std::string(queue));
  QueueOptions opts{Duration{st.column_int64(0)}, static_cast<int>(st.column_int64(1))};
  st.reset();
  known_[std::string(queue)] = opts;
  return opts;
}

bool Broker::has_queue(std::string_view name) {
  std::lock_guard lock(mu_);
  try {
    options_locked(name);
    return true;
  } catch (const Rejected&) {
    return false;
  }
}

std::vector<std::string> Broker::queues() {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  auto& st = db_.prepare("SELECT name FROM queues ORDER BY name");
  while (st.step()) out.push_back(st.column_text(0));
  return out;
}

std::int64_t Broker::enqueue(std::string_view queue, const nlohmann::json& payload, int priority,
                             std::optional<Timestamp> available_at) {
  std::string text = payload.dump();
  std::lock_guard lock(mu_);
  options_locked(queue);
  Timestamp now = clock_->now();
  auto& st = db_.prepare(
      "INSERT INTO messages (queue, payload, priority, available_at, enqueued_at) VALUES (?, ?, ?, ?, ?)");
  st.bind(1, queue).bind(2, text).bind(3, priority).bind(4, to_millis(available_at.value_or(now)))
      .bind(5, to_millis(now));
  st.run();
  return db_.last_insert_rowid();
}

std::int64_t Broker::enqueue_text(std::string_view queue, std::string_view payload, int priority,
                                  std::optional<Timestamp> available_at) {
  auto parsed = nlohmann::json::parse(payload, nullptr, false);
  if (parsed.is_discarded()) throw Rejected("malformed JSON payload");
  return enqueue(queue, parsed, priority, available_at);
}

QueueMessage Broker::read_message_locked(std::int64_t id) {
  auto& st = db_.prepare(
      "SELECT id, queue, payload, priority, available_at, enqueued_at, attempts, state, claim_token "
      "FROM messages WHERE id = ?");
  st.bind(1, id);
  if (!st.step()) throw NotFound("unknown message " + std::to_string(id));
  QueueMessage m;
  m.id = st.column_int64(0);
  m.queue = st.column_text(1);
  m.payload = nlohmann::json::parse(st.column_text(2));
  m.priority = static_cast<int>(st.column_int64(3));
  m.available_at = from_millis(st.column_int64(4));
  m.enqueued_at = from_millis(st.column_int64(5));
  m.attempts = static_cast<int>(st.column_int64(6));
  m.state = static_cast<MessageState>(st.column_int64(7));
  m.claim_token = st.column_optional_int64(8).value_or(0);
  st.reset();
  return m;
}

void Broker::record_error_locked(const QueueMessage& msg, std::string_view error, Timestamp now,
                                 std::optional<Timestamp> retry_at) {
  std::optional<std::int64_t> retry_ms;
  if (retry_at) retry_ms = to_millis(*retry_at);
  db_.prepare(
         "INSERT INTO message_errors (queue, message_id, original, error, failed_at, retry_after) "
         "VALUES (?, ?, ?, ?, ?, ?)")
      .bind(1, msg.queue)
      .bind(2, msg.id)
      .bind(3, to_json(msg).dump())
      .bind(4, error)
      .bind(5, to_millis(now))
      .bind(6, retry_ms)
      .run();
}

void Broker::expire_leases_locked(std::string_view queue, const QueueOptions& opts, Timestamp now) {
  auto& st = db_.prepare("SELECT id FROM messages WHERE queue = ? AND state = 1 AND lease_until <= ?");
  st.bind(1, queue).bind(2, to_millis(now));
  std::vector<std::int64_t> expired;
  while (st.step()) expired.push_back(st.column_int64(0));
  for (auto id : expired) {
    QueueMessage m = read_message_locked(id);
    if (m.attempts >= opts.max_attempts) {
      record_error_locked(m, "lease expired", now, std::nullopt);
      db_.prepare("UPDATE messages SET state = 3, lease_until = NULL, claim_token = NULL WHERE id = ?")
          .bind(1, id)
          .run();
    } else {
      db_.prepare("UPDATE messages SET state = 0, lease_until = NULL, claim_token = NULL WHERE id = ?")
          .bind(1, id)
          .run();
    }
  }
}

std::optional<QueueMessage> Broker::dequeue(std::string_view queue) {
  std::lock_guard lock(mu_);
  QueueOptions opts = options_locked(queue);
  Timestamp now = clock_->now();
  const auto now_ms = to_millis(now);

  // Cheap read-only probe so that idle polling never takes the write lock.
  auto& probe = db_.prepare(
      "SELECT EXISTS (SELECT 1 FROM messages WHERE queue = ?1 AND state = 0 AND available_at <= ?2) "
      "OR EXISTS (SELECT 1 FROM messages WHERE queue = ?1 AND state = 1 AND lease_until <= ?2)");
  probe.bind(1, queue).bind(2, now_ms);
  bool any = probe.step() && probe.column_int64(0) != 0;
  probe.reset();
  if (!any) return std::nullopt;

  sql::Transaction tx(db_);
  expire_leases_locked(queue, opts, now);
  auto& pick = db_.prepare(
      "SELECT id FROM messages WHERE queue = ? AND state = 0 AND available_at <= ? "
      "ORDER BY priority DESC, id ASC LIMIT 1");
  pick.bind(1, queue).bind(2, now_ms);
  if (!pick.step()) {
    tx.commit();
    return std::nullopt;
  }
  std::int64_t id = pick.column_int64(0);
  pick.reset();

  auto& seq = db_.prepare("UPDATE sequences SET value = value + 1 WHERE name = 'claim' RETURNING value");
  if (!seq.step()) throw Error("claim sequence missing");
  std::int64_t token = seq.column_int64(0);
  seq.reset();

  db_.prepare("UPDATE messages SET state = 1, attempts = attempts + 1, lease_until = ?, claim_token = ? WHERE id = ?")
      .bind(1, now_ms + opts.lease.count())
      .bind(2, token)
      .bind(3, id)
      .run();
  QueueMessage m = read_message_locked(id);
  tx.commit();
  return m;
}

void Broker::ack(const Receipt& receipt) {
  std::lock_guard lock(mu_);
  sql::Transaction tx(db_);
  db_.prepare("UPDATE messages SET state = 2, lease_until = NULL WHERE id = ? AND state = 1 AND claim_token = ?")
      .bind(1, receipt.id)
      .bind(2, receipt.claim_token)
      .run();
  if (db_.changes() != 1) throw Rejected("message " + std::to_string(receipt.id) + " is not claimed by this receipt");
  tx.commit();
}

void Broker::fail(const Receipt& receipt, std::string_view error, std::optional<Duration> retry_after) {
  std::lock_guard lock(mu_);
  sql::Transaction tx(db_);
  QueueMessage m = read_message_locked(receipt.id);
  if (m.state != MessageState::claimed || m.claim_token != receipt.claim_token) {
    throw Rejected("message " + std::to_string(receipt.id) + " is not claimed by this receipt");
  }
  QueueOptions opts = options_locked(m.queue);
  Timestamp now = clock_->now();
  const bool retry = retry_after.has_value() && m.attempts < opts.max_attempts;
  std::optional<Timestamp> retry_at;
  if (retry) retry_at = now + *retry_after;
  record_error_locked(m, error, now, retry_at);
  if (retry) {
    db_.prepare(
           "UPDATE messages SET state = 0, available_at = ?, lease_until = NULL, claim_token = NULL WHERE id = ?")
        .bind(1, to_millis(*retry_at))
        .bind(2, m.id)
        .run();
  } else {
    db_.prepare("UPDATE messages SET state = 3, lease_until = NULL, claim_token = NULL WHERE id = ?")
        .bind(1, m.id)
        .run();
  }
  tx.commit();
}

void Broker::fail_with_backoff(const Receipt& receipt, std::string_view error) {
  int attempts = 1;
  if (auto m = get(receipt.id)) attempts = m->attempts;
  fail(receipt, error, retry_policy_.delay_for(attempts));
}

QueueDepth Broker::depth(std::string_view queue) {
  std::lock_guard lock(mu_);
  options_locked(queue);
  QueueDepth d;
  auto& st = db_.prepare("SELECT state, COUNT(*) FROM messages WHERE queue = ? AND state IN (0, 1, 3) GROUP BY state");
  st.bind(1, queue);
  while (st.step()) {
    auto n = st.column_int64(1);
    switch (st.column_int64(0)) {
      case 0: d.ready = n; break;
      case 1: d.claimed = n; break;
      case 3: d.errored = n; break;
      default: break;
    }
  }
  return d;
}

std::int64_t Broker::due(std::string_view queue) {
  std::lock_guard lock(mu_);
  options_locked(queue);
  auto& st = db_.prepare("SELECT COUNT(*) FROM messages WHERE queue = ? AND state = 0 AND available_at <= ?");
  st.bind(1, queue).bind(2, to_millis(clock_->now()));
  st.step();
  auto n = st.column_int64(0);
  st.reset();
  return n;
}

std::vector<ErrorRecord> Broker::errors(std::string_view queue, std::size_t limit) {
  std::lock_guard lock(mu_);
  options_locked(queue);
  std::vector<ErrorRecord> out;
  auto& st = db_.prepare(
      "SELECT original, error, failed_at, retry_after FROM message_errors WHERE queue = ? ORDER BY id LIMIT ?");
  st.bind(1, queue).bind(2, static_cast<std::int64_t>(limit));
  while (st.step()) {
    ErrorRecord r;
    r.original = message_from_json(nlohmann::json::parse(st.column_text(0)));
    r.error = st.column_text(1);
    r.failed_at = from_millis(st.column_int64(2));
    if (auto v = st.column_optional_int64(3)) r.retry_after = from_millis(*v);
    out.push_back(std::move(r));
  }
  return out;
}

std::int64_t Broker::requeue_failed(std::string_view queue) {
  std::lock_guard lock(mu_);
  options_locked(queue);
  sql::Transaction tx(db_);
  db_.prepare("UPDATE messages SET state = 0, attempts = 0, available_at = ? WHERE queue = ? AND state = 3")
      .bind(1, to_millis(clock_->now()))
      .bind(2, queue)
      .run();
  auto n = db_.changes();
  tx.commit();
  return n;
}

std::optional<QueueMessage> Broker::get(std::int64_t id) {
  std::lock_guard lock(mu_);
  try {
    return read_message_locked(id);
  } catch (const NotFound&) {
    return std::nullopt;
  }
}

std::optional<QueueMessage> poll(Broker& broker, std::string_view queue, std::stop_token stop, Duration timeout,
                                 Duration interval) {
  thread_local std::mt19937 rng{std::random_device{}()};
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (!stop.stop_requested()) {
    if (auto m = broker.dequeue(queue)) return m;
    if (std::chrono::steady_clock::now() >= deadline) break;
    std::uniform_int_distribution<std::int64_t> jitter(0, interval.count() / 5);
    std::this_thread::sleep_for(interval + Duration{jitter(rng)});
  }
  return std::nullopt;
}

}  // namespace retriever::broker
