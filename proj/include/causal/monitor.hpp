// monitor.hpp - Runtime monitors over a sample stream. Each monitor computes a
// correlation per tumbling window and raises an alarm after `consecutive`
// windows in a row exceed its threshold.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "causal/derivation.hpp"

namespace causal
{

class StreamError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

struct StreamSample
{
  std::uint64_t timestamp = 0;
  std::map<std::string, double> values;
};

enum class WindowOutcome { ok, violation, indeterminate };

std::string_view to_string(WindowOutcome outcome);

struct WindowStat
{
  std::string monitor_id;
  std::size_t window_index = 0;  // 1-based
  double statistic = 0.0;        // NaN when indeterminate
  WindowOutcome outcome = WindowOutcome::ok;
  std::uint64_t first_timestamp = 0;
  std::uint64_t last_timestamp = 0;

  bool operator==(const WindowStat &) const = default;
};

struct Alarm
{
  std::string monitor_id;
  std::size_t window_index = 0;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string message;

  bool operator==(const Alarm &) const = default;
};

/// Plain value; copying a state forks the monitor.
struct MonitorState
{
  MonitorSpec spec;
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> zs;  // stratifying variable, stratified specs only
  std::uint64_t window_start = 0;
  std::size_t completed = 0;  // windows evaluated so far
  std::size_t streak = 0;     // current run of violating windows
  std::optional<std::uint64_t> last_timestamp;

  bool operator==(const MonitorState &) const = default;
};

/// Throws std::invalid_argument for an invalid spec.
MonitorState initial_state(const MonitorSpec & spec);

struct IngestResult
{
  MonitorState state;
  std::optional<WindowStat> window;  // set when the sample completed a window
  std::optional<Alarm> alarm;
};

/// Throws StreamError for a missing or non-finite monitored value or a
/// timestamp that does not increase; the input state is left untouched.
IngestResult ingest(MonitorState state, const StreamSample & sample);

/// Window statistic: pearson or spearman correlation of x and y, or for a
/// stratified spec the correlation of x and y after centring both within each
/// stratum (z rounded to the nearest integer). NaN when undefined.
double window_statistic(const MonitorSpec & spec, std::span<const double> xs, std::span<const double> ys,
                        std::span<const double> zs = {});

struct StreamReport
{
  std::vector<Alarm> alarms;
  std::vector<WindowStat> windows;
  std::size_t samples = 0;

  bool operator==(const StreamReport &) const = default;
};

StreamReport run_stream(const std::vector<MonitorSpec> & specs, const std::vector<StreamSample> & samples);

struct Dataset;

/// One sample per row, timestamps 0..n-1.
std::vector<StreamSample> to_samples(const Dataset & data);

/// CSV with a header row; a "timestamp" column is optional (row index otherwise).
std::vector<StreamSample> read_samples_csv(std::string_view text);
/// One JSON object per line, either {"timestamp": t, "values": {...}} or flat
/// {"timestamp": t, "X": 1.0, ...}; timestamp optional.
std::vector<StreamSample> read_samples_ndjson(std::string_view text);

std::string to_ndjson(const Alarm & alarm);
std::string to_ndjson(const WindowStat & window);

}  // namespace causal
