#include "tndve/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "tndve/errors.hpp"

namespace tndve {

namespace {

void check_record(const CohortRecord& r, std::size_t dim, std::size_t index) {
  if (r.x.size() != dim)
    throw Error(ErrorCode::DimensionMismatch, "record " + std::to_string(index) + " has " +
                                                  std::to_string(r.x.size()) + " covariates, expected " +
                                                  std::to_string(dim));
  if (r.v != 0 && r.v != 1)
    throw Error(ErrorCode::Value, "record " + std::to_string(index) + ": v must be 0 or 1");
  if (r.y < 0 || r.y > 2)
    throw Error(ErrorCode::Value, "record " + std::to_string(index) + ": y must be in {0,1,2}");
}

void check_record(const TndRecord& r, std::size_t dim, std::size_t index) {
  if (r.x.size() != dim)
    throw Error(ErrorCode::DimensionMismatch, "record " + std::to_string(index) + " has " +
                                                  std::to_string(r.x.size()) + " covariates, expected " +
                                                  std::to_string(dim));
  if (r.v != 0 && r.v != 1)
    throw Error(ErrorCode::Value, "record " + std::to_string(index) + ": v must be 0 or 1");
  if (r.y_star != 0 && r.y_star != 1)
    throw Error(ErrorCode::Value, "record " + std::to_string(index) + ": y_star must be 0 or 1");
}

// Splits one CSV line. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cell));
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  out.push_back(std::move(cell));
  return out;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::optional<double> parse_number(const std::string& raw) {
  std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  const char* first = s.data();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

struct ParsedTable {
  std::vector<std::vector<double>> x;
  std::vector<double> v;
  std::vector<double> y;
  std::vector<std::size_t> line_numbers;
};

ParsedTable read_table(const std::filesystem::path& path, const CsvSchema& schema, LoadReport* report) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::File, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Schema, path.string() + " has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::Schema, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t v_col = column(schema.vaccination);
  const std::size_t y_col = column(schema.outcome);
  std::vector<std::size_t> x_cols;
  for (const auto& name : schema.covariates) x_cols.push_back(column(name));

  ParsedTable table;
  std::size_t row = 0;
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> cells = split_csv_line(line);
    auto cell = [&](std::size_t c) -> std::optional<double> {
      if (c >= cells.size()) return std::nullopt;
      return parse_number(cells[c]);
    };
    std::optional<double> v = cell(v_col);
    std::optional<double> y = cell(y_col);
    std::vector<double> x;
    bool complete = v && y;
    for (std::size_t c : x_cols) {
      auto value = cell(c);
      if (!value) {
        complete = false;
        break;
      }
      x.push_back(*value);
    }
    if (!complete) {
      if (schema.drop_missing) {
        ++dropped;
        continue;
      }
      throw Error(ErrorCode::Value, "row " + std::to_string(row) + ": missing or non-numeric value");
    }
    table.x.push_back(std::move(x));
    table.v.push_back(*v);
    table.y.push_back(*y);
    table.line_numbers.push_back(row);
  }
  if (report) {
    report->rows_read = row;
    report->rows_dropped = dropped;
  }
  return table;
}

int as_level(double value, int max_level, std::size_t row, const char* what) {
  if (value != std::floor(value) || value < 0 || value > max_level)
    throw Error(ErrorCode::Value, "row " + std::to_string(row) + ": " + what + " = " +
                                      format_double(value) + " outside {0.." +
                                      std::to_string(max_level) + "}");
  return static_cast<int>(value);
}

template <class Record>
std::vector<std::string> header_for(const Dataset<Record>& data) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < data.covariate_dim(); ++j)
    header.push_back(j < data.covariate_names().size() ? data.covariate_names()[j]
                                                       : "x" + std::to_string(j + 1));
  header.push_back("v");
  return header;
}

void write_rows(std::ofstream& out, const std::vector<std::string>& header) {
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  out << '\n';
}

}  // namespace

template <class Record>
Dataset<Record>::Dataset(std::size_t covariate_dim, std::vector<Record> records,
                         std::vector<std::string> covariate_names)
    : covariate_dim_(covariate_dim), records_(std::move(records)), names_(std::move(covariate_names)) {
  if (!names_.empty() && names_.size() != covariate_dim_)
    throw Error(ErrorCode::DimensionMismatch, "covariate name count does not match dimension");
  for (std::size_t i = 0; i < records_.size(); ++i) check_record(records_[i], covariate_dim_, i);
}

template class Dataset<CohortRecord>;
template class Dataset<TndRecord>;

TndDataset restrict_to_tested(const CohortDataset& cohort) {
  std::vector<TndRecord> tested;
  for (const auto& r : cohort.records()) {
    if (r.y == 0) continue;
    tested.push_back(TndRecord{r.x, r.v, r.y == 2 ? 1 : 0});
  }
  return TndDataset(cohort.covariate_dim(), std::move(tested), cohort.covariate_names());
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<std::string> read_csv_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::File, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Schema, path.string() + " has no header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);
  return header;
}

CohortDataset load_cohort_csv(const std::filesystem::path& path, const CsvSchema& schema,
                              LoadReport* report) {
  ParsedTable t = read_table(path, schema, report);
  std::vector<CohortRecord> records;
  records.reserve(t.v.size());
  for (std::size_t i = 0; i < t.v.size(); ++i) {
    records.push_back(CohortRecord{std::move(t.x[i]), as_level(t.v[i], 1, t.line_numbers[i], "v"),
                                   as_level(t.y[i], 2, t.line_numbers[i], "y")});
  }
  return CohortDataset(schema.covariates.size(), std::move(records), schema.covariates);
}

TndDataset load_tnd_csv(const std::filesystem::path& path, const CsvSchema& schema, LoadReport* report) {
  ParsedTable t = read_table(path, schema, report);
  std::vector<TndRecord> records;
  records.reserve(t.v.size());
  for (std::size_t i = 0; i < t.v.size(); ++i) {
    records.push_back(TndRecord{std::move(t.x[i]), as_level(t.v[i], 1, t.line_numbers[i], "v"),
                                as_level(t.y[i], 1, t.line_numbers[i], "y_star")});
  }
  return TndDataset(schema.covariates.size(), std::move(records), schema.covariates);
}

void write_csv(const std::filesystem::path& path, const CohortDataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::File, "cannot write " + path.string());
  auto header = header_for(data);
  header.push_back("y");
  write_rows(out, header);
  for (const auto& r : data.records()) {
    for (double x : r.x) out << format_double(x) << ',';
    out << r.v << ',' << r.y << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const TndDataset& data) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::File, "cannot write " + path.string());
  auto header = header_for(data);
  header.push_back("y_star");
  write_rows(out, header);
  for (const auto& r : data.records()) {
    for (double x : r.x) out << format_double(x) << ',';
    out << r.v << ',' << r.y_star << '\n';
  }
}

}  // namespace tndve
