// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "senseflow/dissemination.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "json_util.hpp"
#include "senseflow/error.hpp"

namespace senseflow {

namespace {

using detail::json;
using ordered = nlohmann::ordered_json;

constexpr std::string_view kTimestamp = "timestamp";
constexpr std::string_view kLocation = "geographicalLocation";
constexpr std::string_view kQuality = "quality";
constexpr std::string_view kQualityPrefix = "quality.";

[[noreturn]] void schema(const std::string& message) { throw Error(ErrorCode::schema_violation, message); }

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      schema(where + "." + it.key() + ": unknown field");
    }
  }
}

std::int64_t require_positive_int(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema(where + "." + key + ": missing");
  if (!it->is_number_integer()) schema(where + "." + key + ": must be an integer");
  auto v = it->get<std::int64_t>();
  if (v < 1) throw Error(ErrorCode::invalid_interval, where + "." + key + " must be >= 1");
  return v;
}

}  // namespace

std::string_view to_string(SinkKind kind) {
  return kind == SinkKind::append_file ? "append-file" : "stream-endpoint";
}

std::string_view to_string(SubscriptionStatus status) {
  switch (status) {
    case SubscriptionStatus::active: return "active";
    case SubscriptionStatus::degraded: return "degraded";
    case SubscriptionStatus::expired: return "expired";
    case SubscriptionStatus::cancelled: return "cancelled";
  }
  return "?";
}

ValidatedRequest validate_request(const RequestDocument& document, std::string request_id) {
  if (document.encoding != "json") {
    throw Error(ErrorCode::unsupported_format, "request encoding '" + document.encoding + "'");
  }
  json doc = detail::parse_json(document.raw, ErrorCode::schema_violation, "request document");
  if (!doc.is_object()) schema("document must be an object");
  reject_unknown_keys(doc, {"request", "user"}, "$");

  auto req = doc.find("request");
  if (req == doc.end() || !req->is_object()) schema("request: missing or not an object");
  reject_unknown_keys(*req, {"attributes", "location", "format", "interval_ms", "duration_ms", "annotations"},
                      "request");

  ValidatedRequest out;
  Request& r = out.request;
  r.request_id = std::move(request_id);

  auto attrs = req->find("attributes");
  if (attrs == req->end()) schema("request.attributes: missing");
  if (!attrs->is_array() || attrs->empty()) schema("request.attributes: must be a non-empty list");
  for (const auto& a : *attrs) {
    if (!a.is_string() || a.get<std::string>().empty()) schema("request.attributes: entries must be non-empty strings");
    r.requested_attributes.insert(a.get<std::string>());
  }

  if (auto loc = req->find("location"); loc != req->end() && !loc->is_null()) {
    if (!loc->is_string()) schema("request.location: must be a string");
    r.location_constraint = loc->get<std::string>();
  }

  auto fmt = req->find("format");
  if (fmt == req->end()) schema("request.format: missing");
  if (!fmt->is_string()) schema("request.format: must be a string");
  auto parsed_fmt = parse_output_format(fmt->get<std::string>());
  if (!parsed_fmt || (fmt->get<std::string>() != "json-lines" && fmt->get<std::string>() != "csv")) {
    throw Error(ErrorCode::unsupported_format, "request.format '" + fmt->get<std::string>() + "'");
  }
  r.output_format = *parsed_fmt;

  r.delivery_interval_ms = require_positive_int(*req, "interval_ms", "request");
  if (auto dur = req->find("duration_ms"); dur != req->end() && !dur->is_null()) {
    r.duration_ms = require_positive_int(*req, "duration_ms", "request");
  }
  if (auto ann = req->find("annotations"); ann != req->end()) {
    if (!ann->is_boolean()) schema("request.annotations: must be a boolean");
    r.include_context_annotations = ann->get<bool>();
  }
  senseflow::validate_request(r);

  auto user = doc.find("user");
  if (user == doc.end() || !user->is_object()) schema("user: missing or not an object");
  reject_unknown_keys(*user, {"id", "sink"}, "user");
  auto uid = user->find("id");
  if (uid == user->end() || !uid->is_string() || uid->get<std::string>().empty()) {
    schema("user.id: must be a non-empty string");
  }
  SubscriptionDraft& d = out.draft;
  d.request_id = r.request_id;
  d.user_id = uid->get<std::string>();
  d.output_format = r.output_format;
  d.delivery_interval_ms = r.delivery_interval_ms;
  d.duration_ms = r.duration_ms;

  auto sink = user->find("sink");
  if (sink == user->end() || !sink->is_object()) schema("user.sink: missing or not an object");
  reject_unknown_keys(*sink, {"kind", "target"}, "user.sink");
  auto kind = sink->value("kind", std::string());
  if (kind == "append-file") d.sink.kind = SinkKind::append_file;
  else if (kind == "stream-endpoint") d.sink.kind = SinkKind::stream_endpoint;
  else schema("user.sink.kind: expected 'append-file' or 'stream-endpoint'");
  if (auto t = sink->find("target"); t != sink->end()) {
    if (!t->is_string()) schema("user.sink.target: must be a string");
    d.sink.target = t->get<std::string>();
  }
  if (d.sink.kind == SinkKind::append_file && d.sink.target.empty()) {
    schema("user.sink.target: required for append-file");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Formatting

namespace {

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string csv_cell(const Value& v) {
  if (v.is_unknown()) return "null";
  if (v.is_boolean()) return v.as_boolean() ? "true" : "false";
  if (v.is_number()) return format_number(v.as_number());
  if (v.is_string()) return csv_quote(v.as_string());
  return "geo:" + format_number(v.as_geo().latitude) + ":" + format_number(v.as_geo().longitude);
}

std::string encode_locations(const std::map<std::string, std::string>& locs) {
  std::string s;
  for (const auto& [sensor, label] : locs) {
    if (!s.empty()) s += ';';
    s += sensor + "=" + label;
  }
  return s;
}

std::map<std::string, std::string> decode_locations(std::string_view s) {
  std::map<std::string, std::string> out;
  while (!s.empty()) {
    auto end = s.find(';');
    auto item = s.substr(0, end);
    auto eq = item.find('=');
    if (eq != std::string_view::npos) out[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    if (end == std::string_view::npos) break;
    s.remove_prefix(end + 1);
  }
  return out;
}

std::vector<std::string> attribute_columns(const DataRecord& r) {
  std::vector<std::string> cols;
  for (const auto& [name, v] : r.values) cols.push_back(name);
  return cols;  // std::map order: sorted
}

std::string csv_header(const std::vector<std::string>& cols) {
  std::string h = std::string(kTimestamp) + "," + std::string(kLocation);
  for (const auto& c : cols) h += "," + c;
  for (const auto& c : cols) h += "," + std::string(kQualityPrefix) + c;
  return h + "\n";
}

std::string csv_row(const DataRecord& r, const std::vector<std::string>& cols) {
  std::string row = std::to_string(r.timestamp_ms) + "," + csv_quote(encode_locations(r.annotations.geographical_location));
  for (const auto& c : cols) {
    auto it = r.values.find(c);
    row += "," + csv_cell(it == r.values.end() ? Value::unknown() : it->second);
  }
  for (const auto& c : cols) {
    auto it = r.annotations.quality.find(c);
    row += ",";
    row += to_string(it == r.annotations.quality.end() ? Quality::unknown : it->second);
  }
  return row + "\n";
}

std::string json_line(const DataRecord& r) {
  ordered obj;
  obj[std::string(kTimestamp)] = r.timestamp_ms;
  ordered locs = ordered::object();
  for (const auto& [sensor, label] : r.annotations.geographical_location) locs[sensor] = label;
  obj[std::string(kLocation)] = std::move(locs);
  for (const auto& [name, v] : r.values) obj[name] = detail::value_to_json<ordered>(v);
  ordered q = ordered::object();
  for (const auto& [name, v] : r.values) {
    auto it = r.annotations.quality.find(name);
    q[name] = std::string(to_string(it == r.annotations.quality.end() ? Quality::unknown : it->second));
  }
  obj[std::string(kQuality)] = std::move(q);
  return obj.dump() + "\n";
}

}  // namespace

std::string RecordFormatter::format(const DataRecord& record) {
  if (format_ == OutputFormat::json_lines) return json_line(record);
  if (!columns_) columns_ = attribute_columns(record);
  std::string out;
  if (!header_sent_) {
    out = csv_header(*columns_);
    header_sent_ = true;
  }
  return out + csv_row(record, *columns_);
}

std::string format_record(const DataRecord& record, OutputFormat format, bool with_header) {
  if (format == OutputFormat::json_lines) return json_line(record);
  auto cols = attribute_columns(record);
  return (with_header ? csv_header(cols) : std::string()) + csv_row(record, cols);
}

std::vector<DataRecord> parse_json_lines(std::string_view text) {
  std::vector<DataRecord> out;
  while (!text.empty()) {
    auto end = text.find('\n');
    auto line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    if (line.empty()) continue;
    json obj = detail::parse_json(line, ErrorCode::schema_violation, "json-lines record");
    DataRecord r;
    r.timestamp_ms = obj.at(std::string(kTimestamp)).get<std::int64_t>();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it.key() == kTimestamp) continue;
      if (it.key() == kLocation) {
        for (auto l = it->begin(); l != it->end(); ++l) {
          r.annotations.geographical_location[l.key()] = l->get<std::string>();
          r.annotations.source_sensor_ids.push_back(l.key());
        }
      } else if (it.key() == kQuality) {
        for (auto q = it->begin(); q != it->end(); ++q) {
          r.annotations.quality[q.key()] = parse_quality(q->get<std::string>()).value_or(Quality::unknown);
        }
      } else {
        auto v = detail::value_from_json(*it);
        if (!v) throw Error(ErrorCode::schema_violation, "unsupported value for " + it.key());
        r.values[it.key()] = *v;
      }
    }
    std::sort(r.annotations.source_sensor_ids.begin(), r.annotations.source_sensor_ids.end());
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct CsvCell {
  std::string text;
  bool quoted = false;
};

std::vector<std::vector<CsvCell>> split_csv(std::string_view text) {
  std::vector<std::vector<CsvCell>> rows;
  std::vector<CsvCell> row;
  CsvCell cell;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.text += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cell.text += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      cell.quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell = {};
      any = true;
    } else if (c == '\n') {
      if (any || !cell.text.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
      }
      row.clear();
      cell = {};
      any = false;
    } else if (c != '\r') {
      cell.text += c;
      any = true;
    }
  }
  if (any || !cell.text.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

Value decode_cell(const CsvCell& cell) {
  if (cell.quoted) return Value(cell.text);
  if (cell.text == "null") return Value::unknown();
  if (cell.text == "true") return Value(true);
  if (cell.text == "false") return Value(false);
  if (cell.text.rfind("geo:", 0) == 0) {
    auto rest = std::string_view(cell.text).substr(4);
    auto sep = rest.find(':');
    double lat = 0, lon = 0;
    std::from_chars(rest.data(), rest.data() + sep, lat);
    std::from_chars(rest.data() + sep + 1, rest.data() + rest.size(), lon);
    return Value(GeoPoint{lat, lon});
  }
  auto v = parse_value(cell.text, ValueKind::number);
  if (!v) throw Error(ErrorCode::schema_violation, "csv cell '" + cell.text + "' is not a value");
  return *v;
}

}  // namespace

std::vector<DataRecord> parse_csv(std::string_view text) {
  std::vector<DataRecord> out;
  auto rows = split_csv(text);
  if (rows.empty()) return out;
  std::vector<std::string> header;
  for (auto& c : rows.front()) header.push_back(c.text);
  if (header.size() < 2 || header[0] != kTimestamp || header[1] != kLocation) {
    throw Error(ErrorCode::schema_violation, "csv header must start with timestamp,geographicalLocation");
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != header.size()) throw Error(ErrorCode::schema_violation, "csv row width mismatch");
    DataRecord r;
    r.timestamp_ms = std::stoll(row[0].text);
    r.annotations.geographical_location = decode_locations(row[1].text);
    for (const auto& [sensor, label] : r.annotations.geographical_location) {
      r.annotations.source_sensor_ids.push_back(sensor);
    }
    for (std::size_t c = 2; c < header.size(); ++c) {
      if (header[c].rfind(kQualityPrefix, 0) == 0) {
        r.annotations.quality[header[c].substr(kQualityPrefix.size())] =
            parse_quality(row[c].text).value_or(Quality::unknown);
      } else {
        r.values[header[c]] = decode_cell(row[c]);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sinks

void AppendFileSink::write(std::string_view bytes) {
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw Error(ErrorCode::sink_unavailable, "cannot open " + path_.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::sink_unavailable, "write failed: " + path_.string());
}

void StreamSink::write(std::string_view bytes) {
  std::lock_guard lock(mutex_);
  pending_.append(bytes);
  transcript_.append(bytes);
}

std::string StreamSink::drain() {
  std::lock_guard lock(mutex_);
  std::string out;
  out.swap(pending_);
  return out;
}

std::string StreamSink::transcript() const {
  std::lock_guard lock(mutex_);
  return transcript_;
}

std::unique_ptr<Sink> make_sink(const SinkSpec& spec, const std::filesystem::path& base_directory) {
  if (spec.kind == SinkKind::stream_endpoint) return std::make_unique<StreamSink>(spec.target);
  std::filesystem::path p = spec.target;
  if (p.is_relative()) p = base_directory / p;
  return std::make_unique<AppendFileSink>(p);
}

// ---------------------------------------------------------------------------
// Dispatch

SubscriptionDispatcher::SubscriptionDispatcher(Subscription subscription, std::unique_ptr<Sink> sink)
    : subscription_(std::move(subscription)),
      sink_(std::move(sink)),
      formatter_(subscription_.output_format),
      next_due_ms_(subscription_.created_at_ms) {}

void SubscriptionDispatcher::offer(const DataRecord& record) {
  {
    std::lock_guard lock(mutex_);
    if (subscription_.status == SubscriptionStatus::expired ||
        subscription_.status == SubscriptionStatus::cancelled) {
      return;
    }
    channel_.push_back(record);
    while (channel_.size() > kChannelCapacity) channel_.pop_front();
  }
  cv_.notify_all();
}

std::optional<std::int64_t> SubscriptionDispatcher::next_due() const {
  std::lock_guard lock(mutex_);
  if (subscription_.status == SubscriptionStatus::expired ||
      subscription_.status == SubscriptionStatus::cancelled) {
    return std::nullopt;
  }
  std::optional<std::int64_t> due;
  if (!channel_.empty()) due = next_due_ms_;
  if (subscription_.expires_at_ms) due = due ? std::min(*due, *subscription_.expires_at_ms) : *subscription_.expires_at_ms;
  return due;
}

DispatchOutcome SubscriptionDispatcher::poll(std::int64_t now_ms) {
  DispatchOutcome outcome;
  DataRecord record;
  {
    std::lock_guard lock(mutex_);
    if (subscription_.status == SubscriptionStatus::expired ||
        subscription_.status == SubscriptionStatus::cancelled) {
      return outcome;
    }
    if (subscription_.expires_at_ms && now_ms >= *subscription_.expires_at_ms) {
      subscription_.status = SubscriptionStatus::expired;
      channel_.clear();
      outcome.expired = true;
      return outcome;
    }
    if (now_ms < next_due_ms_ || channel_.empty()) return outcome;
    // Latest record not newer than now wins; older ones are superseded.
    auto it = channel_.end();
    while (it != channel_.begin() && std::prev(it)->timestamp_ms > now_ms) --it;
    if (it == channel_.begin()) return outcome;
    record = std::move(*std::prev(it));
    channel_.erase(channel_.begin(), it);
    next_due_ms_ = now_ms + subscription_.delivery_interval_ms;
  }

  bool ok = true;
  {
    std::lock_guard write_lock(write_mutex_);
    const std::string bytes = formatter_.format(record);
    try {
      sink_->write(bytes);
    } catch (const std::exception& e) {
      ok = false;
      formatter_.header_lost();
      std::fprintf(stderr, "[dispatch] %s: %s\n", subscription_.subscription_id.c_str(), e.what());
    }
  }

  std::lock_guard lock(mutex_);
  if (ok) {
    ++subscription_.deliveries;
    if (subscription_.status == SubscriptionStatus::degraded) subscription_.status = SubscriptionStatus::active;
    outcome.delivered = true;
  } else {
    ++subscription_.failures;
    if (subscription_.status == SubscriptionStatus::active) subscription_.status = SubscriptionStatus::degraded;
    outcome.failed = true;
  }
  return outcome;
}

void SubscriptionDispatcher::wait(const Clock& clock, std::int64_t deadline_ms) {
  std::unique_lock lock(mutex_);
  const std::uint64_t epoch = wake_epoch_;
  const std::size_t queued = channel_.size();
  const std::int64_t now = clock.now_ms();
  if (deadline_ms <= now) return;
  cv_.wait_for(lock, std::chrono::milliseconds(deadline_ms - now),
               [&] { return wake_epoch_ != epoch || channel_.size() != queued; });
}

void SubscriptionDispatcher::wake() {
  {
    std::lock_guard lock(mutex_);
    ++wake_epoch_;
  }
  cv_.notify_all();
}

void SubscriptionDispatcher::cancel() {
  {
    std::lock_guard lock(mutex_);
    if (subscription_.status != SubscriptionStatus::expired) subscription_.status = SubscriptionStatus::cancelled;
    channel_.clear();
    ++wake_epoch_;
  }
  cv_.notify_all();
}

void SubscriptionDispatcher::refresh(std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  if (subscription_.expires_at_ms && now_ms >= *subscription_.expires_at_ms &&
      subscription_.status != SubscriptionStatus::cancelled) {
    subscription_.status = SubscriptionStatus::expired;
    channel_.clear();
  }
}

Subscription SubscriptionDispatcher::snapshot() const {
  std::lock_guard lock(mutex_);
  return subscription_;
}

DispatchOutcome dispatch(SubscriptionDispatcher& dispatcher, const Clock& clock) {
  return dispatcher.poll(clock.now_ms());
}

std::string SubscriptionStore::subscribe(const SubscriptionDraft& draft, const Binding& binding,
                                         std::int64_t now_ms, std::unique_ptr<Sink> sink) {
  Subscription s;
  s.request_id = draft.request_id;
  s.user_id = draft.user_id;
  s.output_format = draft.output_format;
  s.delivery_interval_ms = draft.delivery_interval_ms;
  s.sink = draft.sink;
  s.created_at_ms = now_ms;
  if (draft.duration_ms) s.expires_at_ms = now_ms + *draft.duration_ms;
  s.canonical_key = binding.canonical_key;
  s.plan_id = binding.plan_id;
  if (!sink) sink = std::make_unique<StreamSink>(draft.sink.target);

  std::unique_lock lock(mutex_);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sub-%04llu", static_cast<unsigned long long>(next_id_++));
  s.subscription_id = buf;
  auto d = std::make_shared<SubscriptionDispatcher>(s, std::move(sink));
  entries_.emplace(s.subscription_id, d);
  return s.subscription_id;
}

std::optional<Subscription> SubscriptionStore::get(std::string_view id, std::optional<std::int64_t> now_ms) const {
  auto d = dispatcher(id);
  if (!d) return std::nullopt;
  if (now_ms) d->refresh(*now_ms);
  return d->snapshot();
}

std::shared_ptr<SubscriptionDispatcher> SubscriptionStore::dispatcher(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : it->second;
}

std::vector<Subscription> SubscriptionStore::list() const {
  std::vector<Subscription> out;
  for (const auto& d : dispatchers()) out.push_back(d->snapshot());
  return out;
}

std::vector<std::shared_ptr<SubscriptionDispatcher>> SubscriptionStore::dispatchers() const {
  std::shared_lock lock(mutex_);
  std::vector<std::shared_ptr<SubscriptionDispatcher>> out;
  for (const auto& [id, d] : entries_) out.push_back(d);
  return out;
}

std::size_t SubscriptionStore::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace senseflow
