#include "windfc/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "windfc/error.hpp"

namespace windfc {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

bool parse_int(std::string_view s, long& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_value(std::string_view s) {
  if (s.empty()) return kMissing;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return kMissing;
  return v;
}

// Returns the intraday slot for "HH:MM", or -1.
int parse_slot(std::string_view s) {
  auto colon = s.find(':');
  if (colon == std::string_view::npos) return -1;
  long hh = 0;
  long mm = 0;
  if (!parse_int(s.substr(0, colon), hh)) return -1;
  auto rest = s.substr(colon + 1);
  // tolerate a trailing ":SS" of zeros
  if (auto c2 = rest.find(':'); c2 != std::string_view::npos) {
    long ss = 0;
    if (!parse_int(rest.substr(c2 + 1), ss) || ss != 0) return -1;
    rest = rest.substr(0, c2);
  }
  if (!parse_int(rest, mm)) return -1;
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || mm % kIntervalMinutes != 0) return -1;
  return static_cast<int>(hh * (60 / kIntervalMinutes) + mm / kIntervalMinutes);
}

}  // namespace

std::map<std::string, std::string> ColumnSchema::default_role_map() {
  return {
      {roles::kWindSpeed, "Wspd"},
      {roles::kWindDirection, "Wdir"},
      {roles::kTargetPower, "Patv"},
      {"external_temperature", "Etmp"},
      {"internal_temperature", "Itmp"},
      {"nacelle_direction", "Ndir"},
      {"pitch_angle_1", "Pab1"},
      {"pitch_angle_2", "Pab2"},
      {"pitch_angle_3", "Pab3"},
      {"reactive_power", "Prtv"},
  };
}

void ColumnSchema::validate() const {
  for (const char* required : {roles::kWindSpeed, roles::kWindDirection, roles::kTargetPower}) {
    if (!role_map.contains(required)) {
      throw Error(ErrorCode::InvalidSchema, std::string("role not mapped: ") + required);
    }
  }
  std::set<std::string> columns{turbine_id_column, day_column, time_of_day_column};
  if (columns.size() != 3) throw Error(ErrorCode::InvalidSchema, "key columns must be distinct");
  for (const auto& [role, column] : role_map) {
    if (column.empty()) throw Error(ErrorCode::InvalidSchema, "empty column for role " + role);
    if (!columns.insert(column).second) {
      throw Error(ErrorCode::InvalidSchema, "column mapped twice: " + column);
    }
  }
}

std::size_t TurbineSeriesSet::role_index(const std::string& role) const {
  auto it = std::find(roles.begin(), roles.end(), role);
  if (it == roles.end()) throw Error(ErrorCode::UnknownRole, role);
  return static_cast<std::size_t>(it - roles.begin());
}

bool TurbineSeriesSet::has_role(const std::string& role) const {
  return std::find(roles.begin(), roles.end(), role) != roles.end();
}

bool RolePredicate::holds(double value) const {
  if (std::isnan(value)) return false;
  switch (comparison) {
    case Comparison::Less: return value < threshold;
    case Comparison::LessEqual: return value <= threshold;
    case Comparison::Greater: return value > threshold;
    case Comparison::GreaterEqual: return value >= threshold;
    case Comparison::Equal: return value == threshold;
    case Comparison::NotEqual: return value != threshold;
  }
  return false;
}

Comparison parse_comparison(const std::string& text) {
  if (text == "<") return Comparison::Less;
  if (text == "<=") return Comparison::LessEqual;
  if (text == ">") return Comparison::Greater;
  if (text == ">=") return Comparison::GreaterEqual;
  if (text == "==") return Comparison::Equal;
  if (text == "!=") return Comparison::NotEqual;
  throw Error(ErrorCode::InvalidArgument, "unknown comparison '" + text + "'");
}

std::string to_string(Comparison comparison) {
  switch (comparison) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
    case Comparison::Equal: return "==";
    case Comparison::NotEqual: return "!=";
  }
  return "?";
}

TurbineSeriesSet parse_csv(const std::string& text, const ColumnSchema& schema,
                           const std::string& source) {
  schema.validate();

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedRow, source + ": empty file, line 1");
  ++line_no;
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM

  auto header = split_fields(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t col_turbine = column_of(schema.turbine_id_column);
  const std::size_t col_day = column_of(schema.day_column);
  const std::size_t col_time = column_of(schema.time_of_day_column);

  TurbineSeriesSet out;
  std::vector<std::size_t> role_columns;
  for (const auto& [role, column] : schema.role_map) {
    out.roles.push_back(role);
    role_columns.push_back(column_of(column));
  }
  const std::size_t n_roles = out.roles.size();
  const std::size_t target_role = out.role_index(roles::kTargetPower);

  struct Row {
    std::size_t step;
    std::vector<double> cells;
  };
  std::unordered_map<long, std::vector<Row>> rows_by_turbine;
  long max_day = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() < header.size()) {
      throw Error(ErrorCode::MalformedRow, source + ": line " + std::to_string(line_no));
    }
    long turbine = 0;
    long day = 0;
    if (!parse_int(fields[col_turbine], turbine) || !parse_int(fields[col_day], day) || day < 1) {
      throw Error(ErrorCode::MalformedRow, source + ": line " + std::to_string(line_no));
    }
    int slot = parse_slot(fields[col_time]);
    if (slot < 0) throw Error(ErrorCode::MalformedRow, source + ": line " + std::to_string(line_no));

    Row row{static_cast<std::size_t>(day - 1) * kRecordsPerDay + static_cast<std::size_t>(slot), {}};
    row.cells.reserve(n_roles);
    for (std::size_t c : role_columns) row.cells.push_back(parse_value(fields[c]));
    rows_by_turbine[turbine].push_back(std::move(row));
    max_day = std::max(max_day, day);
  }
  if (rows_by_turbine.empty()) throw Error(ErrorCode::MalformedRow, source + ": no data rows");

  for (const auto& [id, rows] : rows_by_turbine) out.turbine_ids.push_back(static_cast<int>(id));
  std::sort(out.turbine_ids.begin(), out.turbine_ids.end());
  out.n_steps = static_cast<std::size_t>(max_day) * kRecordsPerDay;

  const std::size_t n_turbines = out.turbine_ids.size();
  out.values.assign(n_turbines, std::vector<std::vector<double>>(n_roles, std::vector<double>(out.n_steps, kMissing)));
  out.present.assign(n_turbines, std::vector<std::uint8_t>(out.n_steps, 0));
  for (std::size_t t = 0; t < n_turbines; ++t) {
    std::vector<std::uint8_t> seen(out.n_steps, 0);
    for (const auto& row : rows_by_turbine[out.turbine_ids[t]]) {
      if (seen[row.step]) {
        const auto day = row.step / kRecordsPerDay + 1;
        const auto slot = row.step % kRecordsPerDay;
        char tod[8];
        std::snprintf(tod, sizeof tod, "%02zu:%02zu", slot / 6, (slot % 6) * 10);
        throw Error(ErrorCode::DuplicateRow, "turbine " + std::to_string(out.turbine_ids[t]) + ", day " +
                                                 std::to_string(day) + ", " + tod);
      }
      seen[row.step] = 1;
      for (std::size_t r = 0; r < n_roles; ++r) out.values[t][r][row.step] = row.cells[r];
      out.present[t][row.step] = std::isnan(row.cells[target_role]) ? 0 : 1;
    }
  }
  out.valid = out.present;
  return out;
}

TurbineSeriesSet load_csv(const std::string& path, const ColumnSchema& schema) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return parse_csv(buffer.str(), schema, path);
}

TurbineSeriesSet flag_invalid(TurbineSeriesSet series, const ValidityRules& rules) {
  std::vector<std::size_t> predicate_roles;
  for (const auto& p : rules.extra_predicates) predicate_roles.push_back(series.role_index(p.role));
  const std::size_t target_role = series.role_index(roles::kTargetPower);
  const std::size_t n_roles = series.roles.size();

  series.valid.assign(series.n_turbines(), std::vector<std::uint8_t>(series.n_steps, 0));
  for (std::size_t t = 0; t < series.n_turbines(); ++t) {
    const auto& vals = series.values[t];
    for (std::size_t s = 0; s < series.n_steps; ++s) {
      if (!series.present[t][s]) continue;
      bool ok = true;
      if (rules.treat_missing_invalid) {
        for (std::size_t r = 0; r < n_roles && ok; ++r) ok = !std::isnan(vals[r][s]);
      }
      if (ok && rules.treat_nonpositive_target_invalid) ok = vals[target_role][s] > 0.0;
      for (std::size_t i = 0; i < predicate_roles.size() && ok; ++i) {
        ok = rules.extra_predicates[i].holds(vals[predicate_roles[i]][s]);
      }
      series.valid[t][s] = ok ? 1 : 0;
    }
  }
  return series;
}

}  // namespace windfc
