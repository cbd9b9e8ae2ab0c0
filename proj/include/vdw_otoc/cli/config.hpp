#ifndef VDW_OTOC_CLI_CONFIG_HPP
#define VDW_OTOC_CLI_CONFIG_HPP

// JSON run configuration.  All physical inputs are in atomic units.

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vdw_otoc/dvr.hpp"
#include "vdw_otoc/errors.hpp"
#include "vdw_otoc/potential.hpp"
#include "vdw_otoc/presets.hpp"
#include "vdw_otoc/sensitivity.hpp"

namespace vdw_otoc::cli {

// Invalid configuration; `field` is the dotted path of the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::lennard_jones;
  double center = 0.0;
  double curvature = 0.0;
  double c6 = 0.0;
  double c12 = 0.0;
  std::filesystem::path table;
  std::optional<double> asymptote;
};

struct GridSpec {
  bool automatic = true;
  double a = 0.0;
  double b = 0.0;
  int n = 0;
  std::optional<double> energy_ceiling;

  GridPolicy policy() const {
    if (automatic) return AutoGrid{};
    return ExplicitGrid{a, b};
  }
};

struct OtocSpec {
  bool all_reported = true;
  std::vector<int> states;
  std::optional<double> t_max;
  int t_points = 4000;
  std::optional<int> truncation;
  double convergence_bound = 0.01;
  double drop_top_fraction = 0.05;
};

struct FitSpec {
  FitOptions options;
  AiryMaximum airy = AiryMaximum::approximate;
};

struct OutputSpec {
  std::filesystem::path directory = "vdw_otoc_out";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  PotentialSpec potential;
  double reduced_mass_au = 0.0;
  GridSpec grid;
  OtocSpec otoc;
  FitSpec fit;
  OutputSpec output;
  // Fully resolved document (preset merged with overrides).
  nlohmann::json echo;

  // The part of the configuration that determines the bound-state basis.
  nlohmann::json physics() const {
    return {{"potential", echo.at("potential")},
            {"reduced_mass_au", echo.at("reduced_mass_au")},
            {"grid", echo.at("grid")}};
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!keys.contains(key)) {
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

inline const nlohmann::json& object_at(const nlohmann::json& doc, const std::string& key,
                                       const std::string& path) {
  if (!doc.contains(key)) throw ConfigError(path, "missing required section");
  const auto& v = doc.at(key);
  if (!v.is_object()) throw ConfigError(path, "must be an object");
  return v;
}

inline double number(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(path, "missing required number");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(path, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

inline std::optional<double> optional_number(const nlohmann::json& obj, const std::string& key,
                                              const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return number(obj, key, path);
}

inline int integer(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) throw ConfigError(path, "missing required integer");
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(path, "must be an integer");
  return v.get<int>();
}

inline PotentialSpec parse_potential(const nlohmann::json& p, const std::filesystem::path& base) {
  PotentialSpec spec;
  if (!p.contains("kind") || !p.at("kind").is_string()) {
    throw ConfigError("potential.kind", "must be one of harmonic, inverted_harmonic, "
                                        "lennard_jones, tabulated");
  }
  const std::string kind = p.at("kind").get<std::string>();
  if (kind == "harmonic") {
    reject_unknown(p, "potential", {"kind", "center", "k"});
    spec.kind = PotentialKind::harmonic;
    spec.center = number(p, "center", "potential.center");
    spec.curvature = number(p, "k", "potential.k");
    if (spec.curvature < 0.0) throw ConfigError("potential.k", "must be >= 0");
  } else if (kind == "inverted_harmonic") {
    reject_unknown(p, "potential", {"kind", "center", "kappa"});
    spec.kind = PotentialKind::inverted_harmonic;
    spec.center = number(p, "center", "potential.center");
    spec.curvature = number(p, "kappa", "potential.kappa");
    if (!(spec.curvature > 0.0)) throw ConfigError("potential.kappa", "must be > 0");
  } else if (kind == "lennard_jones") {
    reject_unknown(p, "potential", {"kind", "C6", "C12", "depth"});
    spec.kind = PotentialKind::lennard_jones;
    spec.c6 = number(p, "C6", "potential.C6");
    if (!(spec.c6 > 0.0)) throw ConfigError("potential.C6", "must be > 0");
    const bool has_c12 = p.contains("C12");
    const bool has_depth = p.contains("depth");
    if (has_c12 == has_depth) {
      throw ConfigError("potential.C12", "give exactly one of C12 or depth");
    }
    if (has_c12) {
      spec.c12 = number(p, "C12", "potential.C12");
      if (!(spec.c12 > 0.0)) throw ConfigError("potential.C12", "must be > 0");
    } else {
      const double depth = number(p, "depth", "potential.depth");
      if (!(depth > 0.0)) throw ConfigError("potential.depth", "must be > 0");
      spec.c12 = lj_c12_for_depth(spec.c6, depth);
    }
  } else if (kind == "tabulated") {
    reject_unknown(p, "potential", {"kind", "path", "asymptote"});
    spec.kind = PotentialKind::tabulated;
    if (!p.contains("path") || !p.at("path").is_string()) {
      throw ConfigError("potential.path", "must be a file path string");
    }
    std::filesystem::path path = p.at("path").get<std::string>();
    spec.table = path.is_absolute() ? path : base / path;
    spec.asymptote = optional_number(p, "asymptote", "potential.asymptote");
  } else {
    throw ConfigError("potential.kind", "unknown kind \"" + kind + "\"");
  }
  return spec;
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& input,
                              const std::filesystem::path& base_dir = ".") {
  if (!input.is_object()) throw ConfigError("(root)", "configuration must be a JSON object");
  nlohmann::json doc = nlohmann::json::object();
  if (input.contains("preset")) {
    if (!input.at("preset").is_string()) throw ConfigError("preset", "must be a string");
    auto preset = presets::find(input.at("preset").get<std::string>());
    if (!preset) throw ConfigError("preset", "unknown preset");
    doc = *preset;
  }
  doc.merge_patch(input);
  doc.erase("preset");
  detail::reject_unknown(doc, "", {"potential", "reduced_mass_au", "grid", "otoc", "fit", "output"});

  RunConfig cfg;
  cfg.potential = detail::parse_potential(detail::object_at(doc, "potential", "potential"), base_dir);

  cfg.reduced_mass_au = detail::number(doc, "reduced_mass_au", "reduced_mass_au");
  if (!(cfg.reduced_mass_au > 0.0)) throw ConfigError("reduced_mass_au", "must be > 0");

  const auto& g = detail::object_at(doc, "grid", "grid");
  detail::reject_unknown(g, "grid", {"policy", "N", "a", "b", "energy_ceiling"});
  const std::string policy = g.value("policy", std::string("auto"));
  cfg.grid.n = detail::integer(g, "N", "grid.N");
  if (cfg.grid.n < RadialGrid::min_points) throw ConfigError("grid.N", "must be >= 16");
  if (policy == "auto") {
    cfg.grid.automatic = true;
  } else if (policy == "explicit") {
    cfg.grid.automatic = false;
    cfg.grid.a = detail::number(g, "a", "grid.a");
    cfg.grid.b = detail::number(g, "b", "grid.b");
    if (!(cfg.grid.a < cfg.grid.b)) throw ConfigError("grid.a", "must be < grid.b");
  } else {
    throw ConfigError("grid.policy", "must be \"auto\" or \"explicit\"");
  }
  cfg.grid.energy_ceiling = detail::optional_number(g, "energy_ceiling", "grid.energy_ceiling");

  if (doc.contains("otoc")) {
    const auto& o = detail::object_at(doc, "otoc", "otoc");
    detail::reject_unknown(o, "otoc", {"states", "t_max", "t_points", "truncation",
                                       "convergence_bound", "drop_top_fraction"});
    if (o.contains("states")) {
      const auto& s = o.at("states");
      if (s.is_string()) {
        if (s.get<std::string>() != "all_reported") {
          throw ConfigError("otoc.states", "must be \"all_reported\" or a list of state indices");
        }
      } else if (s.is_array()) {
        cfg.otoc.all_reported = false;
        std::set<int> seen;
        for (const auto& v : s) {
          if (!v.is_number_integer() || v.get<int>() < 0) {
            throw ConfigError("otoc.states", "entries must be non-negative integers");
          }
          if (!seen.insert(v.get<int>()).second) {
            throw ConfigError("otoc.states", "entries must be unique");
          }
          cfg.otoc.states.push_back(v.get<int>());
        }
        if (cfg.otoc.states.empty()) throw ConfigError("otoc.states", "must not be empty");
      } else {
        throw ConfigError("otoc.states", "must be \"all_reported\" or a list of state indices");
      }
    }
    cfg.otoc.t_max = detail::optional_number(o, "t_max", "otoc.t_max");
    if (cfg.otoc.t_max && !(*cfg.otoc.t_max > 0.0)) throw ConfigError("otoc.t_max", "must be > 0");
    if (o.contains("t_points")) cfg.otoc.t_points = detail::integer(o, "t_points", "otoc.t_points");
    if (cfg.otoc.t_points < 100) throw ConfigError("otoc.t_points", "must be >= 100");
    if (o.contains("truncation") && !o.at("truncation").is_null()) {
      cfg.otoc.truncation = detail::integer(o, "truncation", "otoc.truncation");
      if (*cfg.otoc.truncation < 2) throw ConfigError("otoc.truncation", "must be >= 2");
    }
    if (o.contains("convergence_bound")) {
      cfg.otoc.convergence_bound = detail::number(o, "convergence_bound", "otoc.convergence_bound");
      if (!(cfg.otoc.convergence_bound > 0.0)) {
        throw ConfigError("otoc.convergence_bound", "must be > 0");
      }
    }
    if (o.contains("drop_top_fraction")) {
      cfg.otoc.drop_top_fraction = detail::number(o, "drop_top_fraction", "otoc.drop_top_fraction");
      if (cfg.otoc.drop_top_fraction < 0.0 || cfg.otoc.drop_top_fraction >= 1.0) {
        throw ConfigError("otoc.drop_top_fraction", "must be in [0, 1)");
      }
    }
  }

  if (doc.contains("fit")) {
    const auto& f = detail::object_at(doc, "fit", "fit");
    detail::reject_unknown(f, "fit", {"r2_min", "min_window_points", "slope_uniformity",
                                      "prominence_fraction", "airy_maximum"});
    auto& opt = cfg.fit.options;
    if (f.contains("r2_min")) opt.r2_min = detail::number(f, "r2_min", "fit.r2_min");
    if (!(opt.r2_min > 0.0 && opt.r2_min <= 1.0)) throw ConfigError("fit.r2_min", "must be in (0, 1]");
    if (f.contains("min_window_points")) {
      opt.min_points = detail::integer(f, "min_window_points", "fit.min_window_points");
    }
    if (opt.min_points < 3) throw ConfigError("fit.min_window_points", "must be >= 3");
    if (f.contains("slope_uniformity")) {
      opt.slope_uniformity = detail::number(f, "slope_uniformity", "fit.slope_uniformity");
    }
    if (!(opt.slope_uniformity >= 0.0 && opt.slope_uniformity <= 1.0)) {
      throw ConfigError("fit.slope_uniformity", "must be in [0, 1]");
    }
    if (f.contains("prominence_fraction")) {
      opt.prominence_fraction = detail::number(f, "prominence_fraction", "fit.prominence_fraction");
    }
    if (!(opt.prominence_fraction > 0.0 && opt.prominence_fraction <= 1.0)) {
      throw ConfigError("fit.prominence_fraction", "must be in (0, 1]");
    }
    if (f.contains("airy_maximum")) {
      const auto& a = f.at("airy_maximum");
      if (a == "approximate") cfg.fit.airy = AiryMaximum::approximate;
      else if (a == "exact") cfg.fit.airy = AiryMaximum::exact;
      else throw ConfigError("fit.airy_maximum", "must be \"approximate\" or \"exact\"");
    }
  }

  if (doc.contains("output")) {
    const auto& o = detail::object_at(doc, "output", "output");
    detail::reject_unknown(o, "output", {"directory", "formats"});
    if (o.contains("directory")) {
      if (!o.at("directory").is_string()) throw ConfigError("output.directory", "must be a string");
      std::filesystem::path dir = o.at("directory").get<std::string>();
      cfg.output.directory = dir.is_absolute() ? dir : base_dir / dir;
    }
    if (o.contains("formats")) {
      const auto& f = o.at("formats");
      if (!f.is_array() || f.empty()) throw ConfigError("output.formats", "must be a non-empty list");
      cfg.output.csv = cfg.output.json = false;
      for (const auto& v : f) {
        if (v == "csv") cfg.output.csv = true;
        else if (v == "json") cfg.output.json = true;
        else throw ConfigError("output.formats", "entries must be \"csv\" or \"json\"");
      }
    }
  }

  cfg.echo = doc;
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path().empty() ? "." : path.parent_path());
}

inline PotentialModel build_potential(const PotentialSpec& spec) {
  switch (spec.kind) {
    case PotentialKind::harmonic: return PotentialModel::harmonic(spec.center, spec.curvature);
    case PotentialKind::inverted_harmonic:
      return PotentialModel::inverted_harmonic(spec.center, spec.curvature);
    case PotentialKind::lennard_jones: return PotentialModel::lennard_jones(spec.c6, spec.c12);
    case PotentialKind::tabulated: {
      std::ifstream in(spec.table);
      if (!in) throw ConfigError("potential.path", "cannot open " + spec.table.string());
      try {
        return load_tabulated(in, spec.asymptote);
      } catch (const TableError& e) {
        throw ConfigError("potential.path", spec.table.string() + ": " + e.what());
      } catch (const TooFewPointsError& e) {
        throw ConfigError("potential.path", spec.table.string() + ": " + e.what());
      }
    }
  }
  throw ConfigError("potential.kind", "unsupported");
}

}  // namespace vdw_otoc::cli

#endif  // VDW_OTOC_CLI_CONFIG_HPP
