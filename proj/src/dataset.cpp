#include "catebench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "catebench/error.hpp"
#include "catebench/format.hpp"

namespace catebench {

double covariate_bin(double x1, double precision) noexcept {
  return std::round(x1 / precision) * precision;
}

CovariateGroups group_by_covariate(std::span<const StudentRecord> records, double precision) {
  if (!(precision > 0.0) || !std::isfinite(precision)) {
    throw Error(ErrorKind::InvalidArgument, "bin precision must be positive, got " + format_real(precision));
  }
  CovariateGroups groups;
  for (std::size_t k = 0; k < records.size(); ++k) {
    groups[covariate_bin(records[k].x1, precision)].push_back(k);
  }
  return groups;
}

Cohort::Cohort(std::vector<StudentRecord> records, double bin_width)
    : records_(std::move(records)), bin_width_(bin_width) {
  for (std::size_t k = 0; k < records_.size(); ++k) {
    const auto& r = records_[k];
    if (!std::isfinite(r.x1) || !std::isfinite(r.y)) {
      throw Error(ErrorKind::InvalidArgument, "record " + r.id + ": x1 and y must be finite");
    }
    if (r.x2 < 0) throw Error(ErrorKind::InvalidArgument, "record " + r.id + ": x2 must be >= 0");
    for (const auto& [name, count] : r.aux) {
      if (count < 0) throw Error(ErrorKind::InvalidArgument, "record " + r.id + ": " + name + " must be >= 0");
    }
    (r.treated() ? r1_ : r0_).push_back(k);
  }
  groups_ = group_by_covariate(records_, bin_width_);
}

std::vector<double> Cohort::bin_values() const {
  std::vector<double> out;
  out.reserve(groups_.size());
  for (const auto& [bin, members] : groups_) out.push_back(bin);
  return out;
}

std::span<const std::size_t> Cohort::members(double bin) const {
  const auto it = groups_.find(bin);
  if (it == groups_.end()) return {};
  return it->second;
}

GroupSummary summarize(const Cohort& cohort) {
  if (cohort.empty()) throw Error(ErrorKind::EmptyInput, "cannot summarize an empty cohort");
  GroupSummary s;
  s.n_treated = cohort.treated().size();
  s.n_control = cohort.control().size();
  auto mean_of = [&](const std::vector<std::size_t>& idx, auto field) -> std::optional<double> {
    if (idx.empty()) return std::nullopt;
    double sum = 0.0;
    for (auto k : idx) sum += field(cohort[k]);
    return sum / static_cast<double>(idx.size());
  };
  auto y = [](const StudentRecord& r) { return r.y; };
  auto x1 = [](const StudentRecord& r) { return r.x1; };
  s.mean_y_treated = mean_of(cohort.treated(), y);
  s.mean_y_control = mean_of(cohort.control(), y);
  s.mean_x1_treated = mean_of(cohort.treated(), x1);
  s.mean_x1_control = mean_of(cohort.control(), x1);
  return s;
}

std::vector<double> to_deviation(std::span<const double> raw_scores) {
  const auto n = raw_scores.size();
  if (n < 2) throw Error(ErrorKind::EmptyOrSingleton, "need at least 2 scores, got " + std::to_string(n));
  double sum = 0.0;
  for (double v : raw_scores) sum += v;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : raw_scores) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw Error(ErrorKind::ZeroVariance, "all scores are equal");
  std::vector<double> out;
  out.reserve(n);
  for (double v : raw_scores) out.push_back(10.0 * (v - mean) / sd + 50.0);
  return out;
}

SchemaConfig::SchemaConfig() {
  for (auto f : kSchemaFields) columns.emplace(std::string(f), std::string(f));
}

const std::string& SchemaConfig::column(const std::string& field) const {
  const auto it = columns.find(field);
  if (it == columns.end()) throw Error(ErrorKind::SchemaError, "unknown schema field '" + field + "'");
  return it->second;
}

SchemaConfig SchemaConfig::from_key_values(const std::map<std::string, std::string>& kv) {
  SchemaConfig cfg;
  for (const auto& [key, value] : kv) {
    if (key.rfind("column.", 0) == 0) {
      const auto field = key.substr(7);
      if (!cfg.columns.contains(field)) throw Error(ErrorKind::SchemaError, "unknown schema field '" + field + "'");
      if (value.empty()) throw Error(ErrorKind::SchemaError, "empty column name for '" + field + "'");
      cfg.columns[field] = value;
    } else if (key == "bin") {
      try {
        cfg.bin_width = parse_real(value);
      } catch (const std::invalid_argument&) {
        throw Error(ErrorKind::SchemaError, "bin: '" + value + "' is not a number");
      }
      if (!(cfg.bin_width > 0.0)) throw Error(ErrorKind::SchemaError, "bin must be positive");
    }
  }
  return cfg;
}

SchemaConfig SchemaConfig::from_file(const std::string& path) {
  return from_key_values(parse_key_values(read_text_file(path)));
}

namespace {

std::string location(std::size_t line, const std::string& column) {
  return "line " + std::to_string(line) + ", column '" + column + "'";
}

}  // namespace

LoadResult parse_cohort_csv(std::string_view text, const SchemaConfig& config) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto eol = text.find('\n', pos);
      if (eol == std::string_view::npos) eol = text.size();
      lines.emplace_back(text.substr(pos, eol - pos));
      pos = eol + 1;
    }
  }
  if (lines.empty() || trim(lines.front()).empty()) throw Error(ErrorKind::SchemaError, "missing header row");

  const auto header = split_csv_line(lines.front());
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < header.size(); ++c) index.emplace(std::string(trim(header[c])), c);

  std::map<std::string, std::optional<std::size_t>> col;
  for (auto f : kSchemaFields) {
    const std::string field(f);
    const auto& name = config.column(field);
    const auto it = index.find(name);
    col[field] = it == index.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  }
  for (auto required : {"id", "proficiency", "f2f", "diff_deviation"}) {
    if (!col[required]) throw Error(ErrorKind::SchemaError, "missing required column '" + config.column(required) + "'");
  }

  std::vector<StudentRecord> records;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_lines;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t line_no = li + 1;
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != header.size()) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                             std::to_string(header.size()) + " cells, got " +
                                             std::to_string(cells.size()));
    }
    auto cell = [&](const char* field) -> std::string_view { return trim(cells[*col[field]]); };

    const auto x1_text = cell("proficiency");
    const auto y_text = cell("diff_deviation");
    if (x1_text.empty() || y_text.empty()) {
      ++dropped;
      dropped_lines.push_back(line_no);
      continue;
    }

    StudentRecord r;
    r.id = std::string(cell("id"));
    auto real = [&](std::string_view t, const char* field) {
      try {
        return parse_real(t);
      } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::ParseError, location(line_no, config.column(field)) + ": " + e.what());
      }
    };
    auto count = [&](std::string_view t, const std::string& field) -> int {
      if (t.empty()) return 0;
      long long v = 0;
      try {
        v = parse_integer(t);
      } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::ParseError, location(line_no, config.column(field)) + ": " + e.what());
      }
      if (v < 0 || v > 1'000'000'000) {
        throw Error(ErrorKind::ParseError, location(line_no, config.column(field)) + ": count out of range");
      }
      return static_cast<int>(v);
    };
    r.x1 = real(x1_text, "proficiency");
    r.y = real(y_text, "diff_deviation");
    r.x2 = count(cell("f2f"), "f2f");
    for (auto f : kAuxFeatures) {
      const std::string field(f);
      r.aux[field] = col[field] ? count(trim(cells[*col[field]]), field) : 0;
    }
    records.push_back(std::move(r));
  }
  return LoadResult{Cohort(std::move(records), config.bin_width), dropped, std::move(dropped_lines)};
}

LoadResult load_cohort(const std::string& path, const SchemaConfig& config) {
  return parse_cohort_csv(read_text_file(path), config);
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string cohort_to_csv(const Cohort& cohort, const SchemaConfig& config) {
  std::string out;
  for (std::size_t i = 0; i < kSchemaFields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(config.column(std::string(kSchemaFields[i])));
  }
  out += '\n';
  for (const auto& r : cohort.records()) {
    out += csv_escape(r.id);
    out += ',' + format_real(r.x1);
    out += ',' + std::to_string(r.x2);
    for (auto f : kAuxFeatures) {
      const auto it = r.aux.find(std::string(f));
      out += ',' + std::to_string(it == r.aux.end() ? 0 : it->second);
    }
    out += ',' + format_real(r.y);
    out += '\n';
  }
  return out;
}

void save_cohort(const Cohort& cohort, const std::string& path, const SchemaConfig& config) {
  write_text_file(path, cohort_to_csv(cohort, config));
}

}  // namespace catebench
