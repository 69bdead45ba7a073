#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tndve/data.hpp"
#include "tndve/errors.hpp"
#include "tndve/glm.hpp"
#include "tndve/numerics.hpp"
#include "tndve/rng.hpp"

using namespace tndve;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Config;
}

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "tndve_tests";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p);
  f << text;
}

}  // namespace

// ------------------------------------------------------------------ rng

TEST_CASE("philox4x32-10 known answers") {
  auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(a == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(b == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(c == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("keyed uniforms are open-interval, keyed and roughly uniform") {
  KeyedUniform u(42), w(43);
  double sum = 0;
  const int n = 200000;
  bool open = true;
  for (int k = 0; k < n; ++k) {
    auto [a, b] = u.pair(0, k, Stream::Covariate);
    open = open && a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0;
    sum += a;
  }
  CHECK(open);
  CHECK(std::abs(sum / n - 0.5) < 4 * std::sqrt(1.0 / 12 / n));
  CHECK(u(0, 5, Stream::Vaccination) == u(0, 5, Stream::Vaccination));
  CHECK(u(0, 5, Stream::Vaccination) != u(0, 5, Stream::Infection));
  CHECK(u(0, 5, Stream::Vaccination) != u(1, 5, Stream::Vaccination));
  CHECK(u(0, 5, Stream::Vaccination) != w(0, 5, Stream::Vaccination));
}

// ------------------------------------------------------------- numerics

TEST_CASE("normal quantile and root finding") {
  CHECK(normal_quantile_two_sided(0.95) == doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(normal_quantile_two_sided(0.90) == doctest::Approx(1.644853626951472).epsilon(1e-12));
  VectorFn f = [](const Eigen::VectorXd& t) {
    Eigen::VectorXd r(2);
    r << t[0] * t[0] - 2.0, t[0] + t[1] - 3.0;
    return r;
  };
  RootResult r = solve_moment(f, Eigen::Vector2d(1.0, 1.0));
  CHECK(r.theta[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(r.theta[1] == doctest::Approx(3.0 - std::sqrt(2.0)).epsilon(1e-12));
  CHECK(bracket_root([](double x) { return std::exp(x) - 5.0; }, 0.0) == doctest::Approx(std::log(5.0)).epsilon(1e-8));
  CHECK(code_of([] { bracket_root([](double x) { return x * x + 1.0; }, 0.0); }) == ErrorCode::NotConverged);
}

// ------------------------------------------------------------------ glm

TEST_CASE("logistic intercept-only fit recovers the log odds") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 1, 1, 1, 0;
  FittedGlm fit = fit_logistic(d, y);
  CHECK(fit.converged);
  CHECK(fit.coefficients[0] == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("multinomial intercept-only fit recovers the class log ratios") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Ones(10, 1);
  Eigen::VectorXi y(10);
  y << 0, 0, 0, 0, 0, 0, 1, 1, 1, 2;
  FittedGlm fit = fit_multinomial3(d, y);
  CHECK(fit.coefficients[0] == doctest::Approx(std::log(3.0 / 6.0)).epsilon(1e-12));
  CHECK(fit.coefficients[1] == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-12));
  auto p = predict_prob3(fit, std::vector<double>{1.0});
  CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(p[2] == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("logistic fit matches a plain gradient-ascent maximizer") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  const int n = 300;
  Eigen::MatrixXd d(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    d(i, 0) = 1.0;
    d(i, 1) = z(rng);
    d(i, 2) = z(rng);
    double p = expit(-0.3 + 0.8 * d(i, 1) - 0.5 * d(i, 2));
    y[i] = std::uniform_real_distribution<double>()(rng) < p ? 1.0 : 0.0;
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3);
  for (int it = 0; it < 200000; ++it) {
    Eigen::VectorXd g = logistic_score_rows(d, y, b).colwise().sum().transpose() / n;
    b += 1.0 * g;
    if (g.cwiseAbs().maxCoeff() < 1e-13) break;
  }
  FittedGlm fit = fit_logistic(d, y);
  for (int k = 0; k < 3; ++k) CHECK(fit.coefficients[k] == doctest::Approx(b[k]).epsilon(1e-8));
}

TEST_CASE("score rows agree with finite-difference gradients of the log-likelihood") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  const int n = 200;
  Eigen::MatrixXd d(n, 3);
  Eigen::VectorXd y(n);
  Eigen::VectorXi y3(n);
  for (int i = 0; i < n; ++i) {
    d.row(i) << 1.0, u(rng), u(rng) > 0.5 ? 1.0 : 0.0;
    y[i] = u(rng) < 0.4;
    y3[i] = static_cast<int>(u(rng) * 3);
  }
  Eigen::VectorXd b(3);
  b << 0.2, -0.7, 0.4;
  Eigen::VectorXd score = logistic_score_rows(d, y, b).colwise().sum().transpose();
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd hi = b, lo = b;
    hi[k] += 1e-5;
    lo[k] -= 1e-5;
    double fd = (logistic_loglik(d, y, hi) - logistic_loglik(d, y, lo)) / 2e-5;
    CHECK(std::abs(fd - score[k]) <= 1e-4 * std::max(1.0, std::abs(score[k])));
  }
  Eigen::VectorXd b3(6);
  b3 << 0.1, -0.3, 0.2, -0.4, 0.5, 0.3;
  Eigen::VectorXd score3 = multinomial3_score_rows(d, y3, b3).colwise().sum().transpose();
  for (int k = 0; k < 6; ++k) {
    Eigen::VectorXd hi = b3, lo = b3;
    hi[k] += 1e-5;
    lo[k] -= 1e-5;
    double fd = (multinomial3_loglik(d, y3, hi) - multinomial3_loglik(d, y3, lo)) / 2e-5;
    CHECK(std::abs(fd - score3[k]) <= 1e-4 * std::max(1.0, std::abs(score3[k])));
  }
}

TEST_CASE("glm failures carry their error class") {
  Eigen::MatrixXd dup(6, 2);
  dup << 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1;
  Eigen::VectorXd y(6);
  y << 0, 1, 0, 1, 1, 0;
  CHECK(code_of([&] { fit_logistic(dup, y); }) == ErrorCode::RankDeficient);

  Eigen::MatrixXd sep(6, 2);
  sep << 1, -3, 1, -2, 1, -1, 1, 1, 1, 2, 1, 3;
  Eigen::VectorXd ys(6);
  ys << 0, 0, 0, 1, 1, 1;
  CHECK(code_of([&] { fit_logistic(sep, ys); }) == ErrorCode::Separation);

  Eigen::VectorXd short_y(5);
  short_y.setZero();
  CHECK(code_of([&] { fit_logistic(sep, short_y); }) == ErrorCode::DimensionMismatch);

  Eigen::VectorXi y3(6);
  y3 << 0, 0, 1, 1, 0, 1;
  CHECK(code_of([&] { fit_multinomial3(Eigen::MatrixXd::Ones(6, 1), y3); }) == ErrorCode::DegenerateData);
}

TEST_CASE("design specs build the documented regressors") {
  DesignSpec s = DesignSpec::interacted(1);
  std::vector<double> x{2.5};
  Eigen::RowVectorXd r = s.row(x, 1);
  REQUIRE(r.size() == 4);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 2.5);
  CHECK(r[3] == 2.5);
  CHECK(s.row(x, 0)[3] == 0.0);
  CHECK(s.without_treatment() == DesignSpec::covariates_only(1));
  CHECK(DesignSpec::main_effects(2).width() == 4);
  CHECK(code_of([&] { s.check_dim(0); }) == ErrorCode::DimensionMismatch);
}

// ----------------------------------------------------------------- data

TEST_CASE("CSV round trip is bit-identical") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<CohortRecord> rows;
  for (int i = 0; i < 50; ++i) rows.push_back({{u(rng), u(rng) * 1e-7}, i % 2, i % 3});
  CohortDataset d(2, rows, {"age", "tiny"});
  fs::path p = temp_file("roundtrip.csv");
  write_csv(p, d);
  CsvSchema schema;
  schema.covariates = {"age", "tiny"};
  CohortDataset back = load_cohort_csv(p, schema);
  REQUIRE(back.size() == d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    CHECK(back[i].x == d[i].x);
    CHECK(back[i].v == d[i].v);
    CHECK(back[i].y == d[i].y);
  }
  TndDataset t = restrict_to_tested(d);
  CHECK(t.size() == 33);
  fs::path pt = temp_file("roundtrip_tnd.csv");
  write_csv(pt, t);
  CsvSchema ts;
  ts.outcome = "y_star";
  ts.covariates = {"age", "tiny"};
  TndDataset tb = load_tnd_csv(pt, ts);
  REQUIRE(tb.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(tb[i].x == t[i].x);
    CHECK(tb[i].y_star == t[i].y_star);
  }
}

TEST_CASE("restrict_to_tested keeps tested records in order") {
  std::vector<CohortRecord> rows{{{0.1}, 1, 0}, {{0.2}, 0, 2}, {{0.3}, 1, 1}, {{0.4}, 0, 0}, {{0.5}, 1, 2}};
  TndDataset t = restrict_to_tested(CohortDataset(1, rows));
  REQUIRE(t.size() == 3);
  CHECK(t[0].x[0] == 0.2);
  CHECK(t[0].y_star == 1);
  CHECK(t[1].y_star == 0);
  CHECK(t[2].v == 1);
  CHECK(restrict_to_tested(CohortDataset(1, {})).size() == 0);
}

TEST_CASE("CSV ingestion errors") {
  CsvSchema schema;
  schema.covariates = {"x"};
  CHECK(code_of([&] { load_cohort_csv(temp_file("does_not_exist.csv"), schema); }) == ErrorCode::File);

  fs::path missing_col = temp_file("missing_col.csv");
  write_text(missing_col, "v,y\n1,0\n");
  CHECK(code_of([&] { load_cohort_csv(missing_col, schema); }) == ErrorCode::Schema);

  fs::path bad_y = temp_file("bad_y.csv");
  write_text(bad_y, "x,v,y\n0.1,1,3\n");
  CHECK(code_of([&] { load_cohort_csv(bad_y, schema); }) == ErrorCode::Value);
  CsvSchema ts = schema;
  ts.outcome = "y";
  write_text(bad_y, "x,v,y\n0.1,1,2\n");
  CHECK(code_of([&] { load_tnd_csv(bad_y, ts); }) == ErrorCode::Value);

  fs::path bad_v = temp_file("bad_v.csv");
  write_text(bad_v, "x,v,y\n0.1,0.5,1\n");
  CHECK(code_of([&] { load_cohort_csv(bad_v, schema); }) == ErrorCode::Value);

  fs::path holes = temp_file("holes.csv");
  write_text(holes, "x,v,y\n0.1,1,1\n,0,2\n0.3,NA,0\n0.4,0,0\n");
  CHECK(code_of([&] { load_cohort_csv(holes, schema); }) == ErrorCode::Value);
  schema.drop_missing = true;
  LoadReport report;
  CohortDataset d = load_cohort_csv(holes, schema, &report);
  CHECK(d.size() == 2);
  CHECK(report.rows_read == 4);
  CHECK(report.rows_dropped == 2);
}

TEST_CASE("format_double is shortest round-trip") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(3.0) == "3");
  double v = 0.1 + 0.2;
  CHECK(std::stod(format_double(v)) == v);
}
