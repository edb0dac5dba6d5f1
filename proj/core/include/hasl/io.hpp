#pragma once

// File formats: models and automata as JSON, reports, histograms, traces.

#include <iosfwd>
#include <string>
#include <vector>

#include "hasl/desp.hpp"
#include "hasl/estimator.hpp"
#include "hasl/lha.hpp"
#include "hasl/oscillation.hpp"

namespace hasl {

/// Raised for malformed files; the message names the offending key or line.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

GspnModel model_from_json_text(const std::string& text);
std::string model_to_json_text(const GspnModel& model);

Lha lha_from_json_text(const std::string& text);
std::string lha_to_json_text(const Lha& lha);

std::string report_to_json_text(const EstimationReport& report);
std::string reports_to_json_text(const std::vector<EstimationReport>& reports);

/// `bin_low,bin_high,frequency,count`
void write_histogram_csv(std::ostream& os, const Histogram& h);

/// `level,frequency_max,frequency_min` from two array-valued reports.
void write_peak_histogram_csv(std::ostream& os, const EstimationReport& maxima, const EstimationReport& minima);

struct RecordedTrace {
  std::vector<std::string> places;
  Marking initial;
  std::vector<TimedEvent> events;
  std::string end_marker;  // "deadlock", "horizon" or empty
};

/// Line format `time<TAB>event<TAB>marking-csv`, preceded by `#places` and
/// `#initial` comment lines and followed by an `#end` line.
void write_trace(std::ostream& os, const RecordedTrace& trace);
RecordedTrace read_trace(std::istream& is);

/// CSV with a `time` column followed by one column per place. The initial
/// marking is written as a row at time 0 unless `include_initial` is false.
void write_time_series_csv(std::ostream& os, const RecordedTrace& trace, bool include_initial = true);

/// Two-column `time,value` CSV; a header line is optional.
std::vector<Sample> read_samples_csv(std::istream& is);

std::string read_file(const std::string& path);

}  // namespace hasl
