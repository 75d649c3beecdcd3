// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "senseflow/clock.hpp"
#include "senseflow/reasoning.hpp"
#include "senseflow/record.hpp"

namespace senseflow {

enum class SinkKind { stream_endpoint, append_file };

std::string_view to_string(SinkKind kind);

struct SinkSpec {
  SinkKind kind = SinkKind::stream_endpoint;
  std::string target;
};

struct RequestDocument {
  std::string raw;
  std::string encoding = "json";
};

struct SubscriptionDraft {
  std::string request_id;
  std::string user_id;
  OutputFormat output_format = OutputFormat::json_lines;
  std::int64_t delivery_interval_ms = 1000;
  std::optional<std::int64_t> duration_ms;
  SinkSpec sink;
};

struct ValidatedRequest {
  Request request;
  SubscriptionDraft draft;
};

/// Validate a request document against the published schema and split it
/// into the planning-facing request and the delivery-facing draft.
/// Throws Error{schema_violation}, Error{unsupported_format},
/// Error{invalid_interval}.
ValidatedRequest validate_request(const RequestDocument& document, std::string request_id = "");

enum class SubscriptionStatus { active, degraded, expired, cancelled };

std::string_view to_string(SubscriptionStatus status);

struct Subscription {
  std::string subscription_id;
  std::string request_id;
  std::string user_id;
  OutputFormat output_format = OutputFormat::json_lines;
  std::int64_t delivery_interval_ms = 1000;
  SinkSpec sink;
  std::int64_t created_at_ms = 0;
  std::optional<std::int64_t> expires_at_ms;
  std::string canonical_key;
  std::string plan_id;
  SubscriptionStatus status = SubscriptionStatus::active;
  std::size_t deliveries = 0;
  std::size_t failures = 0;
};

// ---------------------------------------------------------------------------
// Formatting

/// Stateful formatter: csv emits its header row with the first record and
/// pins the column set from it.
class RecordFormatter {
 public:
  explicit RecordFormatter(OutputFormat format) : format_(format) {}

  std::string format(const DataRecord& record);
  OutputFormat output_format() const { return format_; }
  /// Re-arm the csv header after its bytes failed to reach the sink.
  void header_lost() { header_sent_ = false; }

 private:
  OutputFormat format_;
  std::optional<std::vector<std::string>> columns_;
  bool header_sent_ = false;
};

/// Stateless form; `with_header` controls the csv header row.
std::string format_record(const DataRecord& record, OutputFormat format, bool with_header = true);

/// Parse delivered bytes back into records.
std::vector<DataRecord> parse_json_lines(std::string_view text);
std::vector<DataRecord> parse_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Sinks

class Sink {
 public:
  virtual ~Sink() = default;
  /// Throws Error{sink_unavailable}.
  virtual void write(std::string_view bytes) = 0;
  virtual std::string describe() const = 0;
};

class AppendFileSink final : public Sink {
 public:
  explicit AppendFileSink(std::filesystem::path path) : path_(std::move(path)) {}
  void write(std::string_view bytes) override;
  std::string describe() const override { return path_.string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// In-memory buffer drained by the service endpoint.
class StreamSink final : public Sink {
 public:
  explicit StreamSink(std::string name = {}) : name_(std::move(name)) {}
  void write(std::string_view bytes) override;
  std::string describe() const override { return "stream:" + name_; }

  /// Everything written since the last drain.
  std::string drain();
  /// Everything ever written.
  std::string transcript() const;

 private:
  std::string name_;
  mutable std::mutex mutex_;
  std::string pending_;
  std::string transcript_;
};

/// append-file targets resolve against `base_directory`.
std::unique_ptr<Sink> make_sink(const SinkSpec& spec, const std::filesystem::path& base_directory);

// ---------------------------------------------------------------------------
// Dispatch

struct DispatchOutcome {
  bool delivered = false;
  bool expired = false;
  bool failed = false;
};

/// Per-subscription delivery loop state: a FIFO channel fed by the
/// discoverer and a rate-limited, latest-wins delivery step.
class SubscriptionDispatcher {
 public:
  static constexpr std::size_t kChannelCapacity = 256;

  SubscriptionDispatcher(Subscription subscription, std::unique_ptr<Sink> sink);

  /// Called from the discoverer's execution loop. Never blocks on the sink.
  void offer(const DataRecord& record);

  /// Next time a delivery may happen; nullopt when inactive or when waiting
  /// for a first record.
  std::optional<std::int64_t> next_due() const;

  /// Deliver the newest record if due. Sink failures mark the subscription
  /// degraded and are retried at the next interval.
  DispatchOutcome poll(std::int64_t now_ms);

  /// Blocks until a record arrives, `deadline_ms` on `clock` passes, or
  /// `wake()` is called. Used by real-time workers.
  void wait(const Clock& clock, std::int64_t deadline_ms);
  void wake();

  void cancel();
  /// Marks the subscription expired once `now_ms` reaches its expiry.
  void refresh(std::int64_t now_ms);
  Subscription snapshot() const;
  Sink& sink() { return *sink_; }

 private:
  mutable std::mutex mutex_;
  std::mutex write_mutex_;  // serializes formatter + sink; never held with mutex_
  std::condition_variable cv_;
  Subscription subscription_;
  std::unique_ptr<Sink> sink_;
  RecordFormatter formatter_;
  std::deque<DataRecord> channel_;
  std::int64_t next_due_ms_;
  std::uint64_t wake_epoch_ = 0;
};

/// Free-function form of one dispatch step.
DispatchOutcome dispatch(SubscriptionDispatcher& dispatcher, const Clock& clock);

/// Subscription records with their dispatchers. Concurrent reads,
/// serialized mutations.
class SubscriptionStore {
 public:
  struct Binding {
    std::string canonical_key;
    std::string plan_id;
  };

  std::string subscribe(const SubscriptionDraft& draft, const Binding& binding, std::int64_t now_ms,
                        std::unique_ptr<Sink> sink);

  /// Snapshot; an elapsed subscription is reported (and marked) expired.
  std::optional<Subscription> get(std::string_view id, std::optional<std::int64_t> now_ms = std::nullopt) const;
  std::shared_ptr<SubscriptionDispatcher> dispatcher(std::string_view id) const;
  std::vector<Subscription> list() const;
  std::vector<std::shared_ptr<SubscriptionDispatcher>> dispatchers() const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<SubscriptionDispatcher>, std::less<>> entries_;
  std::uint64_t next_id_ = 1;
};

}  // namespace senseflow
