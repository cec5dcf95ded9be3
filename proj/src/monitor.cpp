#include "causal/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "causal/scm.hpp"

namespace causal
{

std::string_view to_string(WindowOutcome outcome)
{
  switch (outcome) {
    case WindowOutcome::ok: return "ok";
    case WindowOutcome::violation: return "violation";
    case WindowOutcome::indeterminate: return "indeterminate";
  }
  return "?";
}

MonitorState initial_state(const MonitorSpec & spec)
{
  validate_monitor(spec);
  MonitorState state;
  state.spec = spec;
  state.xs.reserve(spec.window);
  state.ys.reserve(spec.window);
  if (spec.stratified()) state.zs.reserve(spec.window);
  return state;
}

namespace
{

/// Average ranks, ties sharing the mean of their positions.
std::vector<double> ranks(std::span<const double> v)
{
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

std::vector<double> centred_within(std::span<const double> v, std::span<const double> z)
{
  std::map<long long, std::pair<double, std::size_t>> sums;
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto & s = sums[std::llround(z[i])];
    s.first += v[i];
    s.second += 1;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto & s = sums[std::llround(z[i])];
    out[i] = v[i] - s.first / static_cast<double>(s.second);
  }
  return out;
}

}  // namespace

double window_statistic(const MonitorSpec & spec, std::span<const double> xs, std::span<const double> ys,
                        std::span<const double> zs)
{
  std::vector<double> x(xs.begin(), xs.end());
  std::vector<double> y(ys.begin(), ys.end());
  if (spec.statistic == CorrelationKind::spearman) {
    x = ranks(x);
    y = ranks(y);
  }
  if (spec.stratified()) {
    x = centred_within(x, zs);
    y = centred_within(y, zs);
  }
  return pearson(x, y);
}

IngestResult ingest(MonitorState state, const StreamSample & sample)
{
  const CiStatement & s = state.spec.statement;
  auto value = [&](const std::string & name) {
    auto it = sample.values.find(name);
    if (it == sample.values.end()) {
      throw StreamError("sample at " + std::to_string(sample.timestamp) + " has no value for '" + name + "'");
    }
    if (!std::isfinite(it->second)) {
      throw StreamError("sample at " + std::to_string(sample.timestamp) + " has a non-finite value for '" + name + "'");
    }
    return it->second;
  };
  if (state.last_timestamp && sample.timestamp <= *state.last_timestamp) {
    throw StreamError("timestamp " + std::to_string(sample.timestamp) + " does not increase");
  }
  const double x = value(s.x);
  const double y = value(s.y);
  const double z = state.spec.stratified() ? value(*s.given.begin()) : 0.0;

  if (state.xs.empty()) state.window_start = sample.timestamp;
  state.last_timestamp = sample.timestamp;
  state.xs.push_back(x);
  state.ys.push_back(y);
  if (state.spec.stratified()) state.zs.push_back(z);

  IngestResult result;
  if (state.xs.size() == state.spec.window) {
    WindowStat w;
    w.monitor_id = state.spec.id;
    w.window_index = ++state.completed;
    w.statistic = window_statistic(state.spec, state.xs, state.ys, state.zs);
    w.first_timestamp = state.window_start;
    w.last_timestamp = sample.timestamp;
    if (std::isnan(w.statistic)) {
      w.outcome = WindowOutcome::indeterminate;
    } else if (std::abs(w.statistic) > state.spec.threshold) {
      w.outcome = WindowOutcome::violation;
    }
    state.streak = w.outcome == WindowOutcome::violation ? state.streak + 1 : 0;
    if (state.streak == state.spec.consecutive) {
      std::ostringstream msg;
      msg << state.spec.id << ": " << to_string(s) << " violated; |corr| = " << std::abs(w.statistic) << " > "
          << state.spec.threshold << " in " << state.spec.consecutive << " consecutive windows";
      result.alarm = Alarm{state.spec.id, w.window_index, w.statistic, state.spec.threshold, msg.str()};
      state.streak = 0;
    }
    result.window = std::move(w);
    state.xs.clear();
    state.ys.clear();
    state.zs.clear();
  }
  result.state = std::move(state);
  return result;
}

StreamReport run_stream(const std::vector<MonitorSpec> & specs, const std::vector<StreamSample> & samples)
{
  std::vector<MonitorState> states;
  for (const auto & spec : specs) states.push_back(initial_state(spec));
  StreamReport report;
  for (const auto & sample : samples) {
    for (auto & state : states) {
      auto r = ingest(std::move(state), sample);
      state = std::move(r.state);
      if (r.window) report.windows.push_back(std::move(*r.window));
      if (r.alarm) report.alarms.push_back(std::move(*r.alarm));
    }
    ++report.samples;
  }
  return report;
}

std::vector<StreamSample> read_samples_csv(std::string_view text)
{
  const Dataset table = read_csv(text);
  std::vector<StreamSample> out(table.n);
  for (std::size_t i = 0; i < table.n; ++i) {
    out[i].timestamp = i;
    for (const auto & name : table.names) {
      const double v = table.column(name)[i];
      if (name == "timestamp") {
        if (v < 0 || v != std::floor(v)) throw StreamError("row " + std::to_string(i + 1) + ": bad timestamp");
        out[i].timestamp = static_cast<std::uint64_t>(v);
      } else {
        out[i].values[name] = v;
      }
    }
  }
  return out;
}

std::vector<StreamSample> to_samples(const Dataset & data)
{
  std::vector<StreamSample> out(data.n);
  for (std::size_t i = 0; i < data.n; ++i) out[i].timestamp = i;
  for (const auto & name : data.names) {
    const auto & col = data.column(name);
    for (std::size_t i = 0; i < data.n; ++i) out[i].values[name] = col[i];
  }
  return out;
}

std::vector<StreamSample> read_samples_ndjson(std::string_view text)
{
  std::vector<StreamSample> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error & e) {
      throw StreamError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) throw StreamError("line " + std::to_string(line_no) + ": expected a JSON object");
    StreamSample s;
    s.timestamp = out.size();
    if (j.contains("timestamp")) {
      if (!j["timestamp"].is_number_unsigned()) {
        throw StreamError("line " + std::to_string(line_no) + ": timestamp must be a non-negative integer");
      }
      s.timestamp = j["timestamp"].get<std::uint64_t>();
    }
    const nlohmann::json & values = j.contains("values") ? j["values"] : j;
    for (const auto & [k, v] : values.items()) {
      if (&values == &j && k == "timestamp") continue;
      if (!v.is_number()) throw StreamError("line " + std::to_string(line_no) + ": value of '" + k + "' is not a number");
      s.values[k] = v.get<double>();
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string to_ndjson(const Alarm & alarm)
{
  nlohmann::ordered_json j;
  j["type"] = "alarm";
  j["monitor"] = alarm.monitor_id;
  j["window"] = alarm.window_index;
  j["statistic"] = alarm.statistic;
  j["threshold"] = alarm.threshold;
  j["message"] = alarm.message;
  return j.dump() + "\n";
}

std::string to_ndjson(const WindowStat & w)
{
  nlohmann::ordered_json j;
  j["type"] = "window";
  j["monitor"] = w.monitor_id;
  j["window"] = w.window_index;
  j["statistic"] = std::isnan(w.statistic) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(w.statistic);
  j["outcome"] = to_string(w.outcome);
  j["first_timestamp"] = w.first_timestamp;
  j["last_timestamp"] = w.last_timestamp;
  return j.dump() + "\n";
}

}  // namespace causal
