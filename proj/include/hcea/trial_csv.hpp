#pragma once

// CSV ingestion/export of trial records plus the JSON time-grid sidecar.
//
// Header: id,arm,u0,...,uJ,c1,...,cJ,age,ethnicity,employment
// Missing values are the literal token NA.

#include <charconv>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hcea/error.hpp"
#include "hcea/trial_data.hpp"

namespace hcea {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace csv_detail {

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace csv_detail

inline std::vector<std::string> trial_csv_header(const TimeGrid& grid) {
  std::vector<std::string> h{"id", "arm"};
  for (std::size_t j = 0; j < grid.size(); ++j) h.push_back("u" + std::to_string(j));
  for (std::size_t j = 1; j < grid.size(); ++j) h.push_back("c" + std::to_string(j));
  h.insert(h.end(), {"age", "ethnicity", "employment"});
  return h;
}

/// Parsed rows plus every schema violation found, each tagged with its
/// 1-based line number.
struct TrialCsvParse {
  TrialDataset dataset;
  std::vector<std::string> errors;
};

inline TrialCsvParse parse_trial_csv(std::istream& in, const TimeGrid& grid) {
  using namespace csv_detail;
  TrialCsvParse out;
  out.dataset.grid = grid;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  const auto expected = trial_csv_header(grid);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      have_header = true;
      if (fields != expected) {
        out.errors.push_back("line " + std::to_string(line_no) + ": header does not match the " +
                             std::to_string(grid.size()) + "-point time grid (expected " +
                             std::to_string(expected.size()) + " columns id,arm,u0..,c1..,age,ethnicity,employment)");
        return out;
      }
      continue;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != expected.size()) {
      out.errors.push_back(where + "expected " + std::to_string(expected.size()) + " fields, found " +
                           std::to_string(fields.size()));
      continue;
    }
    IndividualRecord r;
    std::size_t errors_before = out.errors.size();
    r.id = fields[0];
    if (r.id.empty()) out.errors.push_back(where + "empty id");
    if (!parse_int(fields[1], r.arm) || (r.arm != kControlArm && r.arm != kInterventionArm)) {
      out.errors.push_back(where + "arm must be 1 or 2, got '" + fields[1] + "'");
    }
    std::size_t col = 2;
    auto read_optional = [&](const std::string& name, double lo, double hi) -> std::optional<double> {
      const std::string& f = fields[col++];
      if (f == "NA") return std::nullopt;
      double v = 0.0;
      if (!parse_double(f, v)) {
        out.errors.push_back(where + name + ": not a number '" + f + "'");
        return std::nullopt;
      }
      if (!(v >= lo && v <= hi)) {
        out.errors.push_back(where + name + ": value " + f + " out of range");
        return std::nullopt;
      }
      return v;
    };
    for (std::size_t j = 0; j < grid.size(); ++j) {
      r.utilities.push_back(read_optional("u" + std::to_string(j), 0.0, 1.0));
    }
    for (std::size_t j = 1; j < grid.size(); ++j) {
      r.costs.push_back(read_optional("c" + std::to_string(j), 0.0, std::numeric_limits<double>::infinity()));
    }
    r.age = read_optional("age", 0.0, 150.0);
    auto read_level = [&](const std::string& name) -> std::optional<int> {
      const std::string& f = fields[col++];
      if (f == "NA") return std::nullopt;
      int v = 0;
      if (!parse_int(f, v) || v < 1) {
        out.errors.push_back(where + name + ": unknown categorical level '" + f + "'");
        return std::nullopt;
      }
      return v;
    };
    r.ethnicity = read_level("ethnicity");
    r.employment = read_level("employment");
    if (out.errors.size() == errors_before) out.dataset.records.push_back(std::move(r));
  }
  if (!have_header) out.errors.push_back("file is empty (no header)");
  return out;
}

inline TrialDataset load_trial_csv(const std::string& path, const TimeGrid& grid) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  auto parsed = parse_trial_csv(in, grid);
  if (!parsed.errors.empty()) {
    std::string msg = path + ":";
    for (const auto& e : parsed.errors) msg += "\n  " + e;
    throw InputError(msg);
  }
  return std::move(parsed.dataset);
}

inline void write_trial_csv(const TrialDataset& data, std::ostream& out) {
  const auto header = trial_csv_header(data.grid);
  for (std::size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  auto lvl = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("NA"); };
  for (const auto& r : data.records) {
    validate_record(r, data.grid);
    out << r.id << ',' << r.arm;
    for (const auto& u : r.utilities) out << ',' << opt(u);
    for (const auto& c : r.costs) out << ',' << opt(c);
    out << ',' << opt(r.age) << ',' << lvl(r.ethnicity) << ',' << lvl(r.employment) << '\n';
  }
}

inline void write_trial_csv(const TrialDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  write_trial_csv(data, out);
}

// Sidecar: {"times_months": [0, 3, 6, 12], "time_unit": 12}

inline nlohmann::json time_grid_to_json(const TimeGrid& grid) {
  return {{"times_months", grid.times()}, {"time_unit", grid.time_unit()}};
}

inline TimeGrid time_grid_from_json(const nlohmann::json& j) {
  if (!j.contains("times_months")) throw InputError("time grid JSON lacks 'times_months'");
  return TimeGrid(j.at("times_months").get<std::vector<double>>(), j.value("time_unit", 12.0));
}

inline TimeGrid load_time_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return time_grid_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline void save_time_grid(const TimeGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path);
  out << time_grid_to_json(grid).dump(2) << '\n';
}

}  // namespace hcea
