#pragma once

// Resolution of `--model` / `--lha` arguments: either a JSON file or
// `builtin:<name>[,key=value...]`.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hasl/desp.hpp"
#include "hasl/lha.hpp"

namespace hasl::cli {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SourceSpec {
  bool builtin = false;
  std::string name;  // builtin name or file path
  std::vector<std::pair<std::string, std::string>> params;

  bool has(const std::string& key) const;
  /// Copy with `key` set to `value` (replacing an earlier setting).
  SourceSpec with(const std::string& key, const std::string& value) const;
  std::string to_string() const;
};

SourceSpec parse_source(const std::string& text);

/// Names accepted as parameters of a builtin model or automaton.
std::vector<std::string> model_parameters(const SourceSpec& spec);
std::vector<std::string> lha_parameters(const SourceSpec& spec);

GspnModel load_model(const SourceSpec& spec);

/// Automata that depend on the model (peaks needs its event partition and a
/// pilot run for defaults) receive it here; `seed` drives the pilot.
Lha load_lha(const SourceSpec& spec, const GspnModel& model, std::uint64_t seed);

}  // namespace hasl::cli
