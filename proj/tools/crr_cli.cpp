// Command-line front end: per-row prediction from CSV files, the
// standard-deviation curve table, and the seeded Monte Carlo experiments
// with JSON reports.
//
// Exit codes: 0 success, 2 usage/config error, 3 I/O error.

#include <charconv>
#include <cinttypes>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "crr/asymptotics.hpp"
#include "crr/bayes.hpp"
#include "crr/conformal.hpp"
#include "crr/simulation.hpp"

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& field, const std::string& where) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw IoError("cannot parse number '" + field + "' at " + where);
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> values;
  for (const std::string& f : split_csv_line(csv)) {
    values.push_back(parse_double(f, "list option"));
  }
  return values;
}

void write_text_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("error writing output file: " + path);
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t drawn =
      (static_cast<std::uint64_t>(rd()) << 32) ^ static_cast<std::uint64_t>(rd());
  std::fprintf(stderr, "seed: %" PRIu64 "\n", drawn);
  return drawn;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = lo + static_cast<double>(i) * step;
  }
  grid.back() = hi;
  return grid;
}

// ---------------------------------------------------------------------------
// predict

struct InputTable {
  std::size_t dimension = 0;
  crr::Dataset train;
  std::vector<std::pair<std::size_t, crr::Vector>> test_rows;  // (1-based row, x)
};

InputTable read_input_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty input file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y") {
    throw IoError("header must be x1,...,xp,y in " + path);
  }
  InputTable table;
  table.dimension = header.size() - 1;
  for (std::size_t j = 0; j < table.dimension; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) {
      throw IoError("feature column " + std::to_string(j + 1) +
                    " must be named x" + std::to_string(j + 1) + " in " + path);
    }
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw IoError("row " + std::to_string(row) + " has " +
                    std::to_string(fields.size()) + " fields, expected " +
                    std::to_string(header.size()));
    }
    crr::Vector x(table.dimension);
    for (std::size_t j = 0; j < table.dimension; ++j) {
      x[j] = parse_double(fields[j], "row " + std::to_string(row));
    }
    if (fields.back().empty()) {
      table.test_rows.emplace_back(row, std::move(x));
    } else {
      table.train.append(std::move(x),
                         parse_double(fields.back(), "row " + std::to_string(row)));
    }
  }
  return table;
}

int run_predict(const std::string& input, const std::string& output,
                const crr::RidgeConfig& cfg, std::size_t grid_steps) {
  const InputTable table = read_input_csv(input);
  if (table.train.size() == 0) throw IoError("no training rows in " + input);
  if (table.test_rows.empty()) throw IoError("no test rows (empty y) in " + input);

  // Fallback grid for irregular configurations, spanning well beyond the
  // training labels.
  double lo = table.train.labels.front(), hi = lo;
  for (double y : table.train.labels) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  const double pad = 2.0 * std::max(hi - lo, 1.0);
  const std::vector<double> fallback_grid =
      linspace(lo - pad, hi + pad, std::max<std::size_t>(grid_steps, 2));

  std::string out = "row,brr_lower,brr_upper,crr_lower,crr_upper,status\n";
  for (const auto& [row, x] : table.test_rows) {
    std::string brr_lo, brr_hi, crr_lo, crr_hi, status = "ok";
    try {
      const crr::PredictionInterval bayes = crr::brr_predict(table.train, x, cfg);
      brr_lo = format_double(bayes.lower);
      brr_hi = format_double(bayes.upper);
      const crr::ConformalPrediction conformal = crr::crr_predict_or_grid(
          table.train, x, cfg.a, cfg.epsilon, fallback_grid);
      crr_lo = format_double(conformal.interval.lower);
      crr_hi = format_double(conformal.interval.upper);
      if (conformal.grid_fallback) status = "grid_fallback";
    } catch (const crr::Error& e) {
      status = "error: ";
      status += e.what();
      for (char& c : status) {
        if (c == ',' || c == '\n') c = ';';
      }
    }
    out += std::to_string(row) + "," + brr_lo + "," + brr_hi + "," + crr_lo +
           "," + crr_hi + "," + status + "\n";
  }
  write_text_output(output, out);
  return 0;
}

// ---------------------------------------------------------------------------
// experiments

crr::GenerativeSpec build_spec(const std::string& law, std::size_t p,
                               const std::string& mean_csv,
                               const std::string& fixed_w_csv, double a,
                               double sigma, std::uint64_t seed) {
  crr::GenerativeSpec spec;
  spec.dimension = p;
  spec.sigma = sigma;
  spec.seed = seed;
  spec.prior_ridge_a = a;
  if (law == "standard_gaussian") {
    spec.object_law = crr::ObjectLaw::kStandardGaussian;
  } else if (law == "uniform_cube") {
    spec.object_law = crr::ObjectLaw::kUniformCube;
  } else if (law == "constant_one") {
    spec.object_law = crr::ObjectLaw::kConstantOne;
  } else if (law == "gaussian_mean") {
    spec.object_law = crr::ObjectLaw::kGaussianWithMean;
    spec.object_mean = parse_double_list(mean_csv);
  } else {
    throw crr::DomainError("unknown object law: " + law);
  }
  if (!fixed_w_csv.empty()) {
    spec.weight_law = crr::WeightLaw::kFixed;
    spec.fixed_weights = parse_double_list(fixed_w_csv);
  }
  spec.validate();
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian and conformalized ridge regression"};
  app.require_subcommand(1);

  // Shared option storage.
  std::string input, output;
  double a = 1.0, sigma = 1.0, epsilon = 0.05;
  std::size_t n = 100, trials = 1000, p = 1, threads = 0;
  std::optional<std::uint64_t> seed;
  std::string object_law = "standard_gaussian", mean_csv, fixed_w_csv;
  bool per_trial = false, smoothed = false;
  double grid_min = 0.01, grid_max = 0.99;
  std::size_t grid_steps = 0;

  CLI::App* predict = app.add_subcommand(
      "predict", "BRR and CRR intervals for the test rows of a CSV file");
  predict->add_option("--input", input, "input CSV (columns x1..xp,y; empty y marks a test row)")
      ->required()
      ->check(CLI::ExistingFile);
  predict->add_option("--output", output, "output CSV path (default: stdout)");
  predict->add_option("--a", a, "ridge parameter (>= 0)");
  predict->add_option("--sigma", sigma, "noise standard deviation (> 0)");
  predict->add_option("--epsilon", epsilon, "significance level in (0,1)");
  predict->add_option("--grid-steps", grid_steps, "fallback grid size for irregular configurations");
  predict->add_option("--seed", seed, "unused by predict; accepted for a uniform interface");

  CLI::App* curves = app.add_subcommand(
      "curves", "CSV table of the limiting standard deviation against epsilon");
  curves->add_option("--output", output, "output CSV path (default: stdout)");
  curves->add_option("--grid-min", grid_min, "smallest epsilon (default 0.01)");
  curves->add_option("--grid-max", grid_max, "largest epsilon (default 0.99)");
  curves->add_option("--grid-steps", grid_steps, "number of rows (default 99)");
  curves->add_option("--seed", seed, "unused by curves; accepted for a uniform interface");

  CLI::App* coverage = app.add_subcommand(
      "coverage", "Monte Carlo coverage of the conformal and Bayesian predictors");
  CLI::App* theorem1 = app.add_subcommand(
      "theorem1", "Monte Carlo distribution of sqrt(n)-scaled endpoint differences");
  for (CLI::App* cmd : {coverage, theorem1}) {
    cmd->add_option("--n", n, "observations per trial")->required();
    cmd->add_option("--trials", trials, "number of trials")->required();
    cmd->add_option("--epsilon", epsilon, "significance level in (0,1)");
    cmd->add_option("--a", a, "ridge parameter");
    cmd->add_option("--sigma", sigma, "noise standard deviation");
    cmd->add_option("--seed", seed, "experiment seed (drawn and printed when omitted)");
    cmd->add_option("--p", p, "object dimension");
    cmd->add_option("--object-law", object_law,
                    "standard_gaussian | uniform_cube | constant_one | gaussian_mean");
    cmd->add_option("--mean", mean_csv, "comma-separated mean for gaussian_mean");
    cmd->add_option("--fixed-w", fixed_w_csv,
                    "comma-separated weights; switches off the prior draw");
    cmd->add_option("--threads", threads, "worker threads (0 = hardware)");
    cmd->add_option("--output", output, "output JSON path (default: stdout)");
    cmd->add_flag("--per-trial", per_trial, "include per-trial arrays in the report");
  }
  coverage->add_flag("--smoothed", smoothed,
                     "print the smoothed variant in the summary line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*predict) {
      crr::RidgeConfig cfg{a, sigma, epsilon};
      cfg.validate();
      return run_predict(input, output,
                         cfg, grid_steps == 0 ? 1001 : grid_steps);
    }
    if (*curves) {
      const std::size_t rows = grid_steps == 0 ? 99 : grid_steps;
      const crr::CurveTable table = crr::curve_table(linspace(grid_min, grid_max, rows));
      write_text_output(output, table.to_csv());
      return 0;
    }
    if (*coverage) {
      const std::uint64_t s = resolve_seed(seed);
      const crr::GenerativeSpec spec =
          build_spec(object_law, p, mean_csv, fixed_w_csv, a, sigma, s);
      const crr::CoverageReport report =
          crr::coverage_experiment(spec, n, a, epsilon, trials, threads);
      write_text_output(output, report.to_json(per_trial).dump(2) + "\n");
      std::fprintf(stderr, "%s\n%s\n", crr::CoverageReport::csv_header().c_str(),
                   report.csv_line().c_str());
      if (smoothed) {
        std::fprintf(stderr, "smoothed coverage: %.6g (target %.6g)\n",
                     report.smoothed_coverage(), 1.0 - epsilon);
      }
      return 0;
    }
    if (*theorem1) {
      const std::uint64_t s = resolve_seed(seed);
      const crr::GenerativeSpec spec =
          build_spec(object_law, p, mean_csv, fixed_w_csv, a, sigma, s);
      const crr::EndpointDiffReport report =
          crr::endpoint_diff_experiment(spec, n, a, epsilon, trials, threads);
      write_text_output(output, report.to_json(per_trial).dump(2) + "\n");
      std::fprintf(stderr, "%s\n%s\n", crr::EndpointDiffReport::csv_header().c_str(),
                   report.csv_line().c_str());
      return 0;
    }
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const crr::DomainError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const crr::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
