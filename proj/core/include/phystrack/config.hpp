#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "phystrack/baselines.hpp"
#include "phystrack/filter.hpp"

namespace phystrack {

struct Scenario;

/// Error in a configuration file. what() starts with "malformed config".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what);
  ConfigError(std::size_t line, const std::string& what);
};

struct IniEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::vector<IniEntry> entries;
  std::size_t line = 0;
};

/// Flat `key = value` text grouped under `[section]` headers. Keys may repeat
/// (obstacles, script segments, windows); order is preserved. `#` and `;`
/// start comment lines.
class IniDocument {
 public:
  static IniDocument parse(std::string_view text);
  std::string format() const;

  IniSection& section(std::string_view name);
  const IniSection* find(std::string_view name) const;
  void add(std::string_view section_name, std::string_view key, std::string value);

  const std::vector<IniSection>& sections() const noexcept { return sections_; }

 private:
  std::vector<IniSection> sections_;
};

/// Scenario sections: [scenario] [scene] [object] [true_params] [script]
/// [observer]. The seed is not written; runs derive it from the experiment.
void write_scenario(IniDocument& doc, const Scenario& s);
/// Overlays the scenario sections of `doc` on `base`. Unknown keys or bad
/// values throw ConfigError.
Scenario read_scenario(const IniDocument& doc, Scenario base);

void write_filter_config(IniDocument& doc, const FilterConfig& c);
FilterConfig read_filter_config(const IniDocument& doc, FilterConfig base);
void write_cvpf_config(IniDocument& doc, const CvpfConfig& c);
CvpfConfig read_cvpf_config(const IniDocument& doc, CvpfConfig base);

}  // namespace phystrack
