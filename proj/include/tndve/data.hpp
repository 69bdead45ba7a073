#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tndve {

// One subject of the underlying cohort. y is the tri-level outcome:
// 0 not tested, 1 test-negative, 2 test-positive.
struct CohortRecord {
  std::vector<double> x;
  int v = 0;
  int y = 0;
};

// One tested subject (S = 1). y_star = 1 for a test-positive case.
struct TndRecord {
  std::vector<double> x;
  int v = 0;
  int y_star = 0;
};

// Immutable collection of records sharing a covariate dimension.
template <class Record>
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::size_t covariate_dim, std::vector<Record> records,
          std::vector<std::string> covariate_names = {});

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t covariate_dim() const noexcept { return covariate_dim_; }
  std::span<const Record> records() const noexcept { return records_; }
  const Record& operator[](std::size_t i) const { return records_[i]; }
  const std::vector<std::string>& covariate_names() const noexcept { return names_; }

 private:
  std::size_t covariate_dim_ = 0;
  std::vector<Record> records_;
  std::vector<std::string> names_;
};

using CohortDataset = Dataset<CohortRecord>;
using TndDataset = Dataset<TndRecord>;

extern template class Dataset<CohortRecord>;
extern template class Dataset<TndRecord>;

// Keeps the tested subjects (y != 0) in order, with y_star = 1(y == 2).
TndDataset restrict_to_tested(const CohortDataset& cohort);

// Column mapping for CSV ingestion. outcome is y for cohort files and
// y_star for TND files.
struct CsvSchema {
  std::string vaccination = "v";
  std::string outcome = "y";
  std::vector<std::string> covariates;
  bool drop_missing = false;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
};

std::vector<std::string> read_csv_header(const std::filesystem::path& path);

CohortDataset load_cohort_csv(const std::filesystem::path& path, const CsvSchema& schema,
                              LoadReport* report = nullptr);
TndDataset load_tnd_csv(const std::filesystem::path& path, const CsvSchema& schema,
                        LoadReport* report = nullptr);

// Writes shortest round-trip decimal representations, so a reload is
// bit-identical. Header: covariate names (or x1..xk), then v, then y/y_star.
void write_csv(const std::filesystem::path& path, const CohortDataset& data);
void write_csv(const std::filesystem::path& path, const TndDataset& data);

// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace tndve
