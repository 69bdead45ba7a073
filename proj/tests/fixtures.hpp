#pragma once

#include <random>
#include <vector>

#include "tndve/data.hpp"

namespace fixtures {

// counts[v][y] copies of (v, y) with no covariates
inline tndve::CohortDataset cohort_from_counts(const int (&counts)[2][3]) {
  std::vector<tndve::CohortRecord> rows;
  for (int v = 1; v >= 0; --v)
    for (int y = 2; y >= 0; --y)
      for (int k = 0; k < counts[v][y]; ++k) rows.push_back({{}, v, y});
  return tndve::CohortDataset(0, std::move(rows));
}

// V=1: Y=2 x2, Y=1 x2, Y=0 x6; V=0: Y=2 x1, Y=1 x3, Y=0 x6
inline tndve::CohortDataset toy_cohort() {
  const int counts[2][3] = {{6, 3, 1}, {6, 2, 2}};
  return cohort_from_counts(counts);
}

inline tndve::TndDataset toy_tnd() { return tndve::restrict_to_tested(toy_cohort()); }

// X in {0,1}; keeps drawing until every (v, x, y) cell is populated
inline tndve::CohortDataset random_binary_cohort(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> size(60, 400);
  for (;;) {
    const int n = size(rng);
    double pv[2] = {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)};
    std::vector<tndve::CohortRecord> rows;
    int cells[2][2][3] = {};
    for (int i = 0; i < n; ++i) {
      int x = u(rng) < 0.5;
      int v = u(rng) < pv[x];
      double p1 = 0.1 + 0.3 * u(rng), p2 = 0.1 + 0.3 * u(rng);
      double w = u(rng);
      int y = w < p1 ? 1 : (w < p1 + p2 ? 2 : 0);
      ++cells[v][x][y];
      rows.push_back({{double(x)}, v, y});
    }
    bool full = true;
    for (int v = 0; v < 2; ++v)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 3; ++y) full = full && cells[v][x][y] > 0;
    if (full) return tndve::CohortDataset(1, std::move(rows), {"x"});
  }
}

// sum_x n[1,x,2] / sum_x n[1,x,1] n[0,x,2] / n[0,x,1]
inline double stratified_did(const tndve::CohortDataset& d) {
  double n[2][2][3] = {};
  for (std::size_t i = 0; i < d.size(); ++i) n[d[i].v][int(d[i].x[0])][d[i].y] += 1;
  double num = 0, den = 0;
  for (int x = 0; x < 2; ++x) {
    num += n[1][x][2];
    den += n[1][x][1] * n[0][x][2] / n[0][x][1];
  }
  return num / den;
}

}  // namespace fixtures
