#ifndef VDW_OTOC_CLI_PIPELINE_HPP
#define VDW_OTOC_CLI_PIPELINE_HPP

// Staged pipeline: solve -> otoc -> fit.  Each stage can start from the
// previous stage's artifacts on disk, and `report` chains all three in
// process.  Result files are identical either way.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdw_otoc/cli/artifacts.hpp"
#include "vdw_otoc/cli/config.hpp"
#include "vdw_otoc/dvr.hpp"
#include "vdw_otoc/potential.hpp"
#include "vdw_otoc/sensitivity.hpp"
#include "vdw_otoc/spectral.hpp"

namespace vdw_otoc::cli {

inline constexpr const char* tool_version = "0.1.0";

// Numerical failure that stops the run (exit code 3).
class PipelineError : public Error {
 public:
  using Error::Error;
};

struct RunOptions {
  std::optional<std::filesystem::path> out;
  std::vector<int> states;
  std::optional<double> r2_min;
  int threads = 1;
  bool no_recompute = false;
};

// Command-line overrides are folded into the configuration (and its echo).
inline void apply_overrides(RunConfig& cfg, const RunOptions& opts) {
  if (opts.out) {
    cfg.output.directory = *opts.out;
    cfg.echo["output"]["directory"] = opts.out->string();
  }
  if (!opts.states.empty()) {
    std::vector<int> states;
    for (int n : opts.states) {
      if (n < 0) throw ConfigError("--state", "must be non-negative");
      if (std::find(states.begin(), states.end(), n) != states.end()) {
        throw ConfigError("--state", "entries must be unique");
      }
      states.push_back(n);
    }
    cfg.otoc.all_reported = false;
    cfg.otoc.states = states;
    cfg.echo["otoc"]["states"] = states;
  }
  if (opts.r2_min) {
    if (!(*opts.r2_min > 0.0 && *opts.r2_min <= 1.0)) throw ConfigError("--r2-min", "must be in (0, 1]");
    cfg.fit.options.r2_min = *opts.r2_min;
    cfg.echo["fit"]["r2_min"] = *opts.r2_min;
  }
}

// Runs body(i) for i in [0, count) on up to `threads` workers.  Each index
// writes only its own slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(int count, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = next++; i < count; i = next++) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

// ---------------------------------------------------------------- solve

struct SolveResult {
  PotentialModel model;
  MatrixElements elements;
  nlohmann::json manifest;
};

struct StateProfile {
  double r_c = std::numeric_limits<double>::quiet_NaN();
  double lambda_c = std::numeric_limits<double>::quiet_NaN();
  int curvature_sign = 0;
  double lambda_sc = std::numeric_limits<double>::quiet_NaN();
  double r_m = std::numeric_limits<double>::quiet_NaN();
  double r_bar = std::numeric_limits<double>::quiet_NaN();
  std::string error;
};

inline StateProfile state_profile(const PotentialModel& model, double energy, double mass,
                                  AiryMaximum airy) {
  StateProfile p;
  try {
    const auto c = classical_sensitivity(model, energy, mass);
    p.r_c = c.r_c;
    p.lambda_c = c.lambda_c;
    p.curvature_sign = c.curvature_sign;
    const auto s = semiclassical_sensitivity(model, energy, mass, airy);
    p.lambda_sc = s.lambda_sc;
    p.r_m = s.r_m;
    p.r_bar = s.r_bar;
  } catch (const Error& e) {
    p.error = e.what();
  }
  return p;
}

inline PotentialModel make_model(const RunConfig& cfg) { return build_potential(cfg.potential); }

inline RadialGrid make_grid(const RunConfig& cfg, const PotentialModel& model) {
  try {
    return build_grid(model, cfg.grid.n, cfg.grid.policy());
  } catch (const DomainError& e) {
    throw ConfigError(cfg.grid.automatic ? "grid.policy" : "grid.a", e.what());
  } catch (const ArgumentError& e) {
    throw ConfigError("grid.policy", e.what());
  } catch (const BracketError& e) {
    throw ConfigError("grid.policy", e.what());
  }
}

inline SolveResult run_solve(const RunConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  PotentialModel model = make_model(cfg);
  const RadialGrid grid = make_grid(cfg, model);
  SolveOptions options;
  if (cfg.grid.energy_ceiling) options.energy_ceiling = *cfg.grid.energy_ceiling;
  BoundStateBasis basis = [&] {
    try {
      return solve_bound_states(model, grid, cfg.reduced_mass_au, options);
    } catch (const NoBoundStatesError& e) {
      throw PipelineError(std::string("no bound states: ") + e.what());
    }
  }();
  MatrixElements elements = position_matrix(basis);
  const int nb = elements.size();

  std::filesystem::create_directories(cfg.output.directory);
  if (cfg.output.csv) {
    CsvWriter spectrum({"n", "E_n", "r_nn", "r_c", "lambda_c", "lambda_sc"});
    for (int n = 0; n < nb; ++n) {
      const double e = elements.energies[n];
      const StateProfile p = state_profile(model, e, cfg.reduced_mass_au, cfg.fit.airy);
      spectrum.cell(n).cell(e).cell(elements.r(n, n)).cell(p.r_c).cell(p.lambda_c).cell(p.lambda_sc).end_row();
    }
    write_atomic(cfg.output.directory / spectrum_file, spectrum.str());

    CsvWriter matrix({"n", "l", "r_nl"});
    for (int n = 0; n < nb; ++n) {
      for (int l = n; l < nb; ++l) matrix.cell(n).cell(l).cell(elements.r(n, l)).end_row();
    }
    write_atomic(cfg.output.directory / position_file, matrix.str());
  }

  nlohmann::json manifest = {
      {"tool", "vdw-otoc"},
      {"version", tool_version},
      {"config", cfg.echo},
      {"solve",
       {{"physics", cfg.physics()},
        {"grid", {{"a", grid.a()}, {"b", grid.b()}, {"N", grid.size()}, {"spacing", grid.spacing()}}},
        {"bound_states", nb},
        {"threshold", number_or_null(basis.threshold)},
        {"seconds", seconds_since(start)}}},
  };
  return {std::move(model), std::move(elements), std::move(manifest)};
}

// Rebuild solve results from spectrum.csv and position_matrix.csv.
inline nlohmann::json read_manifest(const std::filesystem::path& dir, const char* producer) {
  if (!std::filesystem::exists(dir / manifest_file)) {
    throw ArtifactError(std::string("no artifacts in ") + dir.string() + "; run `" + producer + "` first");
  }
  return read_json(dir / manifest_file);
}

inline SolveResult load_solve(const RunConfig& cfg) {
  const auto& dir = cfg.output.directory;
  nlohmann::json manifest = read_manifest(dir, "solve");
  if (!manifest.contains("solve") || manifest["solve"].value("physics", nlohmann::json()) != cfg.physics()) {
    throw ArtifactError("solve artifacts in " + dir.string() +
                        " were produced with a different potential, mass or grid; run `solve` first");
  }
  const auto spectrum = read_numeric_csv(dir / spectrum_file, {"n", "E_n", "r_nn", "r_c", "lambda_c", "lambda_sc"});
  const auto matrix = read_numeric_csv(dir / position_file, {"n", "l", "r_nl"});
  const int nb = static_cast<int>(spectrum.size());
  if (nb == 0 || manifest["solve"].value("bound_states", -1) != nb ||
      matrix.size() != static_cast<std::size_t>(nb) * (nb + 1) / 2) {
    throw ArtifactError("solve artifacts in " + dir.string() + " are inconsistent; run `solve` again");
  }
  std::vector<double> energies(nb);
  for (int n = 0; n < nb; ++n) energies[n] = spectrum[n][1];
  Eigen::MatrixXd r(nb, nb);
  for (const auto& row : matrix) {
    const int n = static_cast<int>(row[0]);
    const int l = static_cast<int>(row[1]);
    if (n < 0 || l < n || l >= nb) throw ArtifactError(position_file + std::string(": index out of range"));
    r(n, l) = row[2];
    r(l, n) = row[2];
  }
  return {make_model(cfg), MatrixElements{std::move(r), std::move(energies), cfg.reduced_mass_au},
          nlohmann::json{{"tool", "vdw-otoc"}, {"version", tool_version}, {"config", cfg.echo},
                         {"solve", manifest["solve"]}}};
}

// ---------------------------------------------------------------- otoc

struct StateStatus {
  int n;
  std::string status;  // reported | unconverged | failed
  double estimate;
  std::string error;
};

struct OtocResult {
  std::vector<double> times;
  std::vector<StateStatus> states;
  std::map<int, std::vector<double>> series;
  nlohmann::json manifest;
};

inline std::vector<double> time_grid(const RunConfig& cfg, const PotentialModel& model) {
  double t_max;
  if (cfg.otoc.t_max) {
    t_max = *cfg.otoc.t_max;
  } else {
    if (model.kind() == PotentialKind::inverted_harmonic) {
      throw ConfigError("otoc.t_max", "required for potentials without a minimum");
    }
    const double r_min = potential_minimum(model).r_min;
    const double omega = std::sqrt(model.evaluate(r_min).second / cfg.reduced_mass_au);
    if (!(omega > 0.0)) throw ConfigError("otoc.t_max", "required when V''(r_min) is not positive");
    t_max = 50.0 * 2.0 * std::numbers::pi / omega;
  }
  const int count = cfg.otoc.t_points;
  std::vector<double> t(count);
  for (int j = 0; j < count; ++j) t[j] = t_max * j / (count - 1);
  return t;
}

// Candidate states: the requested list, or all but the top fraction.
inline std::vector<int> requested_states(const RunConfig& cfg, int nb) {
  if (!cfg.otoc.all_reported) return cfg.otoc.states;
  const int dropped = static_cast<int>(std::ceil(cfg.otoc.drop_top_fraction * nb));
  std::vector<int> states;
  for (int n = 0; n < nb - dropped; ++n) states.push_back(n);
  return states;
}

inline double convergence_estimate(int n, const MatrixElements& elements,
                                   std::span<const double> probes) {
  if (elements.size() >= 8) return otoc_truncation_error(n, elements, probes);
  const double zero = 0.0;
  if (n + 2 > elements.size()) return std::numeric_limits<double>::infinity();
  return std::abs(otoc_values(n, std::span(&zero, 1), elements, elements.size())[0] - 1.0);
}

inline nlohmann::json otoc_echo(const RunConfig& cfg) {
  return cfg.echo.value("otoc", nlohmann::json::object());
}

inline OtocResult run_otoc(const RunConfig& cfg, const SolveResult& solve, int threads) {
  const auto start = std::chrono::steady_clock::now();
  const MatrixElements& elements = solve.elements;
  const int nb = elements.size();
  const int truncation = cfg.otoc.truncation.value_or(nb);
  if (truncation > nb) {
    throw ConfigError("otoc.truncation", "exceeds the " + std::to_string(nb) + " bound states");
  }

  OtocResult out;
  out.times = time_grid(cfg, solve.model);
  const std::vector<double> probes = probe_subset(out.times);
  const std::vector<int> requested = requested_states(cfg, nb);
  out.states.resize(requested.size());
  std::vector<std::vector<double>> values(requested.size());

  parallel_for(static_cast<int>(requested.size()), threads, [&](int i) {
    const int n = requested[i];
    StateStatus& st = out.states[i];
    st = {n, "failed", std::numeric_limits<double>::quiet_NaN(), ""};
    try {
      if (n >= nb) throw IndexError("state " + std::to_string(n) + " is not bound (" + std::to_string(nb) + " bound states)");
      if (n + 2 > truncation) throw TruncationError("truncation " + std::to_string(truncation) + " cannot represent state " + std::to_string(n));
      st.estimate = convergence_estimate(n, elements, probes);
      if (!(st.estimate <= cfg.otoc.convergence_bound)) {
        st.status = "unconverged";
        return;
      }
      values[i] = otoc_values(n, out.times, elements, truncation);
      st.status = "reported";
    } catch (const Error& e) {
      st.error = e.what();
    }
  });

  for (std::size_t i = 0; i < requested.size(); ++i) {
    if (out.states[i].status == "reported") out.series[out.states[i].n] = std::move(values[i]);
  }
  if (out.series.empty()) {
    throw PipelineError("no requested state meets the convergence bound " +
                        format_double(cfg.otoc.convergence_bound));
  }

  if (cfg.output.csv) {
    CsvWriter csv({"n", "t", "C"});
    for (const auto& [n, c] : out.series) {
      for (std::size_t j = 0; j < out.times.size(); ++j) csv.cell(n).cell(out.times[j]).cell(c[j]).end_row();
    }
    write_atomic(cfg.output.directory / otoc_file, csv.str());
  }

  nlohmann::json states = nlohmann::json::array();
  std::vector<int> reported;
  for (const auto& st : out.states) {
    states.push_back({{"n", st.n},
                      {"status", st.status},
                      {"convergence_estimate", number_or_null(st.estimate)},
                      {"error", st.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(st.error)}});
    if (st.status == "reported") reported.push_back(st.n);
  }
  out.manifest = solve.manifest;
  out.manifest["otoc"] = {
      {"spec", otoc_echo(cfg)},
      {"truncation", truncation},
      {"t_max", out.times.back()},
      {"t_points", out.times.size()},
      {"reported_states", reported},
      {"reported_range", {reported.front(), reported.back()}},
      {"states", states},
      {"threads", threads},
      {"seconds", seconds_since(start)},
  };
  return out;
}

// Rebuild OTOC results from otoc.csv and the manifest.
inline OtocResult load_otoc(const RunConfig& cfg) {
  const auto& dir = cfg.output.directory;
  OtocResult out;
  out.manifest = read_manifest(dir, "otoc");
  const auto& m = out.manifest;
  if (!m.contains("otoc") || !m.contains("solve")) {
    throw ArtifactError("no otoc stage recorded in " + dir.string() + "; run `otoc` first");
  }
  if (m["solve"].value("physics", nlohmann::json()) != cfg.physics() ||
      m["otoc"].value("spec", nlohmann::json()) != otoc_echo(cfg)) {
    throw ArtifactError("otoc.csv in " + dir.string() +
                        " was produced with a different configuration; run `otoc` again");
  }
  for (const auto& st : m["otoc"]["states"]) {
    out.states.push_back({st["n"].get<int>(), st["status"].get<std::string>(),
                          st["convergence_estimate"].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                               : st["convergence_estimate"].get<double>(),
                          st["error"].is_null() ? std::string() : st["error"].get<std::string>()});
  }
  const auto rows = read_numeric_csv(dir / otoc_file, {"n", "t", "C"});
  const std::size_t points = m["otoc"]["t_points"].get<std::size_t>();
  // Rows are grouped by state; the first state's rows carry the time grid.
  const int first = rows.empty() ? -1 : static_cast<int>(rows.front()[0]);
  for (const auto& row : rows) {
    const int n = static_cast<int>(row[0]);
    if (n == first) out.times.push_back(row[1]);
    out.series[n].push_back(row[2]);
  }
  for (const auto& [n, c] : out.series) {
    if (c.size() != points) throw ArtifactError(std::string(otoc_file) + ": wrong row count for state " + std::to_string(n));
  }
  return out;
}

// ---------------------------------------------------------------- fit

inline nlohmann::json fit_state(const RunConfig& cfg, const PotentialModel& model, const StateStatus& st,
                                double energy, const std::vector<double>* times,
                                const std::vector<double>* values) {
  const StateProfile p = std::isfinite(energy)
                             ? state_profile(model, energy, cfg.reduced_mass_au, cfg.fit.airy)
                             : StateProfile{};
  nlohmann::json entry = {
      {"n", st.n},
      {"E_n", number_or_null(energy)},
      {"regime", st.status == "reported" ? "regular" : st.status},
      {"lambda_otoc", nullptr},
      {"alpha", nullptr},
      {"ci95", nullptr},
      {"delta_t", nullptr},
      {"lambda_dt_product", nullptr},
      {"window", nullptr},
      {"lambda_c", number_or_null(p.lambda_c)},
      {"lambda_sc", number_or_null(p.lambda_sc)},
      {"prediction_2lambda_c", number_or_null(2.0 * p.lambda_c)},
      {"prediction_2lambda_sc", number_or_null(2.0 * p.lambda_sc)},
      {"r_c", number_or_null(p.r_c)},
      {"r_m", number_or_null(p.r_m)},
      {"r_bar", number_or_null(p.r_bar)},
      {"curvature_sign", p.curvature_sign},
      {"convergence_estimate", number_or_null(st.estimate)},
      {"error", st.error.empty() ? (p.error.empty() ? nlohmann::json(nullptr) : nlohmann::json(p.error))
                                 : nlohmann::json(st.error)},
  };
  if (st.status != "reported" || times == nullptr || values == nullptr) return entry;

  const OtocSeries series{st.n, *times, *values, 0, st.estimate};
  try {
    const GrowthWindow w = detect_growth_window(series, cfg.fit.options);
    const ExponentialFit f = fit_exponential(series, w);
    entry["regime"] = "sensitive";
    entry["lambda_otoc"] = f.lambda_otoc;
    entry["alpha"] = f.alpha;
    entry["ci95"] = number_or_null(f.ci95);
    entry["delta_t"] = f.delta_t;
    entry["lambda_dt_product"] = f.lambda_dt_product;
    entry["window"] = {{"t_start", w.t_start}, {"t_end", w.t_end}, {"points", w.points}, {"r2", w.r2}};
  } catch (const NoWindowError&) {
    entry["regime"] = "regular";
  } catch (const Error& e) {
    entry["regime"] = "failed";
    entry["error"] = e.what();
  }
  return entry;
}

inline nlohmann::json run_fit(const RunConfig& cfg, const PotentialModel& model,
                              const std::vector<double>& energies, const OtocResult& otoc,
                              int threads) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<nlohmann::json> entries(otoc.states.size());
  parallel_for(static_cast<int>(otoc.states.size()), threads, [&](int i) {
    const StateStatus& st = otoc.states[i];
    const double e = st.n >= 0 && st.n < static_cast<int>(energies.size())
                         ? energies[st.n]
                         : std::numeric_limits<double>::quiet_NaN();
    const auto it = otoc.series.find(st.n);
    entries[i] = fit_state(cfg, model, st, e, &otoc.times, it == otoc.series.end() ? nullptr : &it->second);
  });
  // With "all_reported" the excluded states are listed only in the manifest;
  // an explicit request gets an entry for every state asked for.
  nlohmann::json report = nlohmann::json::array();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (cfg.otoc.all_reported && otoc.states[i].status != "reported") continue;
    report.push_back(std::move(entries[i]));
  }
  if (cfg.output.json) write_json(cfg.output.directory / sensitivity_file, report);

  nlohmann::json manifest = otoc.manifest;
  manifest["config"] = cfg.echo;
  manifest["fit"] = {{"r2_min", cfg.fit.options.r2_min},
                     {"min_window_points", cfg.fit.options.min_points},
                     {"slope_uniformity", cfg.fit.options.slope_uniformity},
                     {"prominence_fraction", cfg.fit.options.prominence_fraction},
                     {"airy_maximum", cfg.fit.airy == AiryMaximum::exact ? "exact" : "approximate"},
                     {"threads", threads},
                     {"seconds", seconds_since(start)}};
  write_json(cfg.output.directory / manifest_file, manifest);
  return report;
}

inline std::vector<double> load_energies(const RunConfig& cfg) {
  const auto rows = read_numeric_csv(cfg.output.directory / spectrum_file,
                                     {"n", "E_n", "r_nn", "r_c", "lambda_c", "lambda_sc"});
  std::vector<double> e;
  for (const auto& row : rows) e.push_back(row[1]);
  return e;
}

// ---------------------------------------------------------------- stages

enum class Stage { solve, otoc, fit, report };

inline void run_stage(Stage stage, RunConfig cfg, const RunOptions& opts) {
  apply_overrides(cfg, opts);
  std::filesystem::create_directories(cfg.output.directory);
  switch (stage) {
    case Stage::solve: {
      const SolveResult s = run_solve(cfg);
      write_json(cfg.output.directory / manifest_file, s.manifest);
      return;
    }
    case Stage::otoc: {
      std::optional<SolveResult> s;
      try {
        s = load_solve(cfg);
      } catch (const ArtifactError& e) {
        if (opts.no_recompute) {
          throw ArtifactError(std::string(e.what()) + " (or drop --no-recompute to solve now)");
        }
        s = run_solve(cfg);
      }
      const OtocResult o = run_otoc(cfg, *s, opts.threads);
      write_json(cfg.output.directory / manifest_file, o.manifest);
      return;
    }
    case Stage::fit: {
      const OtocResult o = load_otoc(cfg);
      run_fit(cfg, make_model(cfg), load_energies(cfg), o, opts.threads);
      return;
    }
    case Stage::report: {
      const SolveResult s = run_solve(cfg);
      const OtocResult o = run_otoc(cfg, s, opts.threads);
      run_fit(cfg, s.model, s.elements.energies, o, opts.threads);
      return;
    }
  }
}

}  // namespace vdw_otoc::cli

#endif  // VDW_OTOC_CLI_PIPELINE_HPP
