#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace catebench {

// Count features kept alongside (x1, x2, y); they feed the diagnostic tree.
inline constexpr std::array<std::string_view, 5> kAuxFeatures = {
    "remote", "basic_class", "exercises", "videos", "references"};

/// One student's observations.
///
/// x1 is the admission proficiency deviation, x2 the number of F2F sessions
/// and y the deviation on the outcome exam. Treatment is derived from x2.
struct StudentRecord {
  std::string id;
  double x1 = 0.0;
  int x2 = 0;
  double y = 0.0;
  std::map<std::string, int> aux;

  bool treated() const noexcept { return x2 >= 1; }

  friend bool operator==(const StudentRecord&, const StudentRecord&) = default;
};

// Bin value -> member record indices (ascending).
using CovariateGroups = std::map<double, std::vector<std::size_t>>;

double covariate_bin(double x1, double precision) noexcept;

CovariateGroups group_by_covariate(std::span<const StudentRecord> records, double precision = 1.0);

/// Immutable, validated set of records with its treated/control partition
/// and covariate grouping.
class Cohort {
 public:
  explicit Cohort(std::vector<StudentRecord> records, double bin_width = 1.0);

  const std::vector<StudentRecord>& records() const noexcept { return records_; }
  const StudentRecord& operator[](std::size_t k) const { return records_.at(k); }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const std::vector<std::size_t>& treated() const noexcept { return r1_; }
  const std::vector<std::size_t>& control() const noexcept { return r0_; }
  const CovariateGroups& groups() const noexcept { return groups_; }
  double bin_width() const noexcept { return bin_width_; }

  double bin_of(double x1) const noexcept { return covariate_bin(x1, bin_width_); }
  // Binned covariate of record k; the learners train and evaluate on this.
  double covariate(std::size_t k) const { return bin_of(records_.at(k).x1); }

  std::vector<double> bin_values() const;
  // Members of a bin, empty when the bin is unpopulated.
  std::span<const std::size_t> members(double bin) const;

  friend bool operator==(const Cohort& a, const Cohort& b) {
    return a.bin_width_ == b.bin_width_ && a.records_ == b.records_;
  }

 private:
  std::vector<StudentRecord> records_;
  double bin_width_;
  std::vector<std::size_t> r1_;
  std::vector<std::size_t> r0_;
  CovariateGroups groups_;
};

struct GroupSummary {
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  std::optional<double> mean_y_treated;
  std::optional<double> mean_y_control;
  std::optional<double> mean_x1_treated;
  std::optional<double> mean_x1_control;
};

GroupSummary summarize(const Cohort& cohort);

// 10 * (raw - mean) / sd + 50 with the population standard deviation.
std::vector<double> to_deviation(std::span<const double> raw_scores);

/// Column names for the CSV schema. Logical field names are `id`,
/// `proficiency`, `f2f`, the aux features and `diff_deviation`.
struct SchemaConfig {
  std::map<std::string, std::string> columns;
  double bin_width = 1.0;

  SchemaConfig();
  const std::string& column(const std::string& field) const;

  // Accepts `column.<field>=<name>` and `bin=<width>`; other keys are ignored
  // so one run config can carry schema and fit settings together.
  static SchemaConfig from_key_values(const std::map<std::string, std::string>& kv);
  static SchemaConfig from_file(const std::string& path);
};

inline constexpr std::array<std::string_view, 9> kSchemaFields = {
    "id", "proficiency", "f2f", "remote", "basic_class", "exercises", "videos", "references", "diff_deviation"};

struct LoadResult {
  Cohort cohort;
  std::size_t dropped = 0;
  std::vector<std::size_t> dropped_lines;  // 1-based file line numbers
};

LoadResult load_cohort(const std::string& path, const SchemaConfig& config = {});
LoadResult parse_cohort_csv(std::string_view text, const SchemaConfig& config = {});

std::string cohort_to_csv(const Cohort& cohort, const SchemaConfig& config = {});
void save_cohort(const Cohort& cohort, const std::string& path, const SchemaConfig& config = {});

}  // namespace catebench
