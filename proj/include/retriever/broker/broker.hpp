#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "retriever/common/clock.hpp"
#include "retriever/common/sqlite.hpp"

namespace retriever::broker {

using namespace std::chrono_literals;

enum class MessageState { ready = 0, claimed = 1, acked = 2, failed = 3 };

std::string_view to_string(MessageState s);

// Identifies one delivery of a message. A redelivery gets a new token, so a
// consumer whose lease expired cannot ack someone else's claim.
struct Receipt {
  std::int64_t id = 0;
  std::int64_t claim_token = 0;
};

struct QueueMessage {
  std::int64_t id = 0;
  std::string queue;
  nlohmann::json payload;
  int priority = 0;
  Timestamp available_at;
  Timestamp enqueued_at;
  int attempts = 0;
  MessageState state = MessageState::ready;
  std::int64_t claim_token = 0;

  Receipt receipt() const { return {id, claim_token}; }
};

struct ErrorRecord {
  QueueMessage original;
  std::string error;
  Timestamp failed_at;
  std::optional<Timestamp> retry_after;
};

struct QueueDepth {
  std::int64_t ready = 0;
  std::int64_t claimed = 0;
  std::int64_t errored = 0;

  bool operator==(const QueueDepth&) const = default;
};

struct QueueOptions {
  Duration lease = 300s;
  int max_attempts = 5;
};

// Exponential retry delay: initial * factor^(attempts-1), capped.
struct RetryPolicy {
  Duration initial = 60s;
  double factor = 2.0;
  Duration max = 1h;

  Duration delay_for(int attempts) const;
};

// Persistent priority queues on an embedded relational store. Any number of
// Broker instances (threads or processes) may open the same database file;
// claims are atomic across all of them. One instance is safe to share between
// threads, it serializes its own connection.
class Broker {
 public:
  explicit Broker(const std::string& db_path, std::shared_ptr<const Clock> clock = system_clock());

  // Idempotent. Re-registering updates the options.
  void register_queue(std::string_view name, QueueOptions options = {});
  bool has_queue(std::string_view name);
  std::vector<std::string> queues();

  std::int64_t enqueue(std::string_view queue, const nlohmann::json& payload, int priority,
                       std::optional<Timestamp> available_at = std::nullopt);
  // Same, for a payload still in text form; malformed JSON is rejected.
  std::int64_t enqueue_text(std::string_view queue, std::string_view payload, int priority,
                            std::optional<Timestamp> available_at = std::nullopt);

  // Never blocks waiting for work: returns nullopt when nothing is ready.
  std::optional<QueueMessage> dequeue(std::string_view queue);

  void ack(const Receipt& receipt);
  // Records an ErrorRecord; with retry_after the message becomes ready again
  // at now + retry_after unless it has used up max_attempts.
  void fail(const Receipt& receipt, std::string_view error, std::optional<Duration> retry_after = std::nullopt);
  // fail() with the delay taken from the retry policy.
  void fail_with_backoff(const Receipt& receipt, std::string_view error);

  QueueDepth depth(std::string_view queue);
  // Ready messages whose available_at has passed.
  std::int64_t due(std::string_view queue);
  std::vector<ErrorRecord> errors(std::string_view queue, std::size_t limit = 1000);
  // Moves permanently failed messages of a queue back to ready (human review).
  std::int64_t requeue_failed(std::string_view queue);

  std::optional<QueueMessage> get(std::int64_t id);

  void set_retry_policy(RetryPolicy policy) { retry_policy_ = policy; }
  const RetryPolicy& retry_policy() const { return retry_policy_; }
  const Clock& clock() const { return *clock_; }

 private:
  QueueOptions options_locked(std::string_view queue);
  void expire_leases_locked(std::string_view queue, const QueueOptions& opts, Timestamp now);
  QueueMessage read_message_locked(std::int64_t id);
  void record_error_locked(const QueueMessage& msg, std::string_view error, Timestamp now,
                           std::optional<Timestamp> retry_at);

  std::shared_ptr<const Clock> clock_;
  std::mutex mu_;
  sql::Database db_;
  std::unordered_map<std::string, QueueOptions> known_;
  RetryPolicy retry_policy_;
};

bool valid_queue_name(std::string_view name);
inline std::string error_queue_name(std::string_view queue) { return std::string(queue) + ".errors"; }

// Polls `queue` until a message arrives, `timeout` elapses or stop is
// requested. Sleeps `interval` (with up to 20% jitter) between empty polls.
std::optional<QueueMessage> poll(Broker& broker, std::string_view queue, std::stop_token stop,
                                 Duration timeout, Duration interval = 250ms);

}  // namespace retriever::broker
