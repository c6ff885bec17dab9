#pragma once
/// Serialization: trajectory CSV, field dumps, JSON config parsing.
///
/// Field dumps are a pair <base>.f64 (flat little-endian doubles, row-major)
/// and <base>.json (sidecar {n, L, label, time}). Config files are strict:
/// unknown keys are rejected by name so a typo cannot silently fall back to a
/// default.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "json.hpp"

#include "kslab/dynamics.hpp"
#include "kslab/functionals.hpp"

namespace kslab {

static_assert(std::endian::native == std::endian::little,
              "field dumps are defined little-endian; big-endian hosts unsupported");

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Plain file helpers.

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// %.17g round-trips IEEE doubles; CSV output is bit-stable per platform.
inline std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// Trajectory CSV.

inline std::string format_trajectory_csv(const TrajectoryRecord& rec) {
  std::string s(kTrajectoryCsvHeader);
  s += '\n';
  for (const TrajectorySample& q : rec.samples) {
    const double cols[] = {q.t,  q.mass, q.m2, q.m4, q.H,    q.Hplus,
                           q.H2, q.F,    q.DF, q.I,  q.E,    q.DE,
                           q.l43, q.l2,  q.l3, q.linf, q.t14l43};
    for (std::size_t i = 0; i < std::size(cols); ++i) {
      if (i) s += ',';
      s += format_g17(cols[i]);
    }
    s += '\n';
  }
  return s;
}

inline void write_trajectory_csv(const std::string& path,
                                 const TrajectoryRecord& rec) {
  write_text_file(path, format_trajectory_csv(rec));
}

// ---------------------------------------------------------------------------
// Field dumps.

struct FieldDump {
  Field2D f;
  std::string label;
  double time = 0.0;
};

namespace detail {

inline std::string dump_base(const std::string& path) {
  std::filesystem::path p(path);
  if (p.extension() == ".json" || p.extension() == ".f64") p.replace_extension();
  return p.string();
}

} // namespace detail

inline void dump_field(const Field2D& f, const std::string& path,
                       const std::string& label, double time) {
  require_nonempty(f, "dump_field");
  const std::string base = detail::dump_base(path);
  {
    std::ofstream out(base + ".f64", std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + base + ".f64");
    out.write(reinterpret_cast<const char*>(f.v.data()),
              static_cast<std::streamsize>(f.v.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + base + ".f64");
  }
  json side;
  side["n"] = f.grid.n;
  side["L"] = f.grid.half_width;
  side["label"] = label;
  side["time"] = time;
  write_text_file(base + ".json", side.dump(2) + "\n");
}

inline FieldDump load_field(const std::string& path) {
  const std::string base = detail::dump_base(path);
  json side;
  try {
    side = json::parse(read_text_file(base + ".json"));
  } catch (const json::parse_error& e) {
    throw std::runtime_error("bad field sidecar " + base + ".json: " + e.what());
  }
  if (!side.is_object() || !side.contains("n") || !side.contains("L"))
    throw std::runtime_error("field sidecar missing n/L: " + base + ".json");
  const Grid2D grid = make_grid(side["n"].get<int>(), side["L"].get<double>());
  FieldDump d{Field2D(grid), side.value("label", std::string()),
              side.value("time", 0.0)};
  std::ifstream in(base + ".f64", std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + base + ".f64");
  const std::streamsize want =
      static_cast<std::streamsize>(d.f.v.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(d.f.v.data()), want);
  if (in.gcount() != want)
    throw std::runtime_error("field dump truncated: " + base + ".f64");
  // the dump must be exactly n*n doubles, not merely at least that many
  char extra;
  if (in.read(&extra, 1), in.gcount() != 0)
    throw std::runtime_error("field dump has trailing bytes: " + base + ".f64");
  return d;
}

// ---------------------------------------------------------------------------
// Config parsing. Strict schema: every key must be known and well-typed.

namespace detail {

[[noreturn]] inline void config_error(const std::string& key,
                                      const std::string& msg) {
  throw std::invalid_argument("config field \"" + key + "\": " + msg);
}

inline double num_field(const json& v, const std::string& key) {
  if (!v.is_number()) config_error(key, "expected a number");
  return v.get<double>();
}

inline long long int_field(const json& v, const std::string& key) {
  if (!v.is_number_integer()) config_error(key, "expected an integer");
  return v.get<long long>();
}

inline std::string str_field(const json& v, const std::string& key) {
  if (!v.is_string()) config_error(key, "expected a string");
  return v.get<std::string>();
}

} // namespace detail

/// Applies the JSON fields on top of `c` (defaults, or a scenario's tuned
/// base config).
inline SimConfig parse_sim_config(const json& j, SimConfig c = SimConfig{}) {
  if (!j.is_object())
    throw std::invalid_argument("config root must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "n") {
      const long long n = detail::int_field(value, key);
      if (n < 16 || (n & (n - 1)) != 0)
        detail::config_error(key, "power of two required (>= 16)");
      c.n = static_cast<int>(n);
    } else if (key == "half_width") {
      const double v = detail::num_field(value, key);
      if (!(v > 0.0)) detail::config_error(key, "must be positive");
      c.half_width = v;
    } else if (key == "mass") {
      const double v = detail::num_field(value, key);
      if (!(v > 0.0)) detail::config_error(key, "mass must be positive");
      c.mass = v;
    } else if (key == "sigma") {
      const double v = detail::num_field(value, key);
      if (!(v > 0.0)) detail::config_error(key, "must be positive");
      c.sigma = v;
    } else if (key == "center") {
      if (!value.is_array() || value.size() != 2 || !value[0].is_number() ||
          !value[1].is_number())
        detail::config_error(key, "expected [x, y]");
      c.center_x = value[0].get<double>();
      c.center_y = value[1].get<double>();
    } else if (key == "field_path") {
      c.field_path = detail::str_field(value, key);
    } else if (key == "dt") {
      const double v = detail::num_field(value, key);
      if (!(v > 0.0)) detail::config_error(key, "must be positive");
      c.dt = v;
    } else if (key == "t_end") {
      const double v = detail::num_field(value, key);
      if (!(v > 0.0)) detail::config_error(key, "must be positive");
      c.t_end = v;
    } else if (key == "regime") {
      const std::string v = detail::str_field(value, key);
      if (v == "physical") c.regime = Regime::physical;
      else if (v == "rescaled") c.regime = Regime::rescaled;
      else detail::config_error(key, "expected \"physical\" or \"rescaled\"");
    } else if (key == "record_every") {
      const long long v = detail::int_field(value, key);
      if (v < 1) detail::config_error(key, "must be >= 1");
      c.record_every = static_cast<int>(v);
    } else if (key == "neg_tol") {
      const double v = detail::num_field(value, key);
      if (!(v >= 0.0)) detail::config_error(key, "must be >= 0");
      c.neg_tol = v;
    } else if (key == "blowup_linf_factor") {
      const double v = detail::num_field(value, key);
      if (!(v > 1.0)) detail::config_error(key, "must be > 1");
      c.blowup_linf_factor = v;
    } else if (key == "relax_time") {
      const double v = detail::num_field(value, key);
      if (!(v >= 0.0)) detail::config_error(key, "must be >= 0");
      c.relax_time = v;
    } else if (key == "seed") {
      const long long v = detail::int_field(value, key);
      if (v < 0) detail::config_error(key, "must be >= 0");
      c.seed = static_cast<std::uint64_t>(v);
    } else if (key == "out_dir") {
      c.out_dir = detail::str_field(value, key);
    } else {
      throw std::invalid_argument("unknown config key: \"" + key + "\"");
    }
  }
  validate(c);
  return c;
}

inline SimConfig parse_config(const std::string& path, SimConfig base = SimConfig{}) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  return parse_sim_config(j, std::move(base));
}

inline json config_to_json(const SimConfig& c) {
  json j;
  j["n"] = c.n;
  j["half_width"] = c.half_width;
  j["mass"] = c.mass;
  j["sigma"] = c.sigma;
  j["center"] = {c.center_x, c.center_y};
  if (!c.field_path.empty()) j["field_path"] = c.field_path;
  j["dt"] = c.dt;
  j["t_end"] = c.t_end;
  j["regime"] = regime_name(c.regime);
  j["record_every"] = c.record_every;
  j["neg_tol"] = c.neg_tol;
  j["blowup_linf_factor"] = c.blowup_linf_factor;
  j["relax_time"] = c.relax_time;
  j["seed"] = c.seed;
  if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
  return j;
}

inline json report_to_json(const InequalityReport& r) {
  json j;
  j["name"] = r.name;
  j["kind"] = r.is_ratio ? "ratio" : "bound";
  j["pass"] = r.pass;
  if (r.skipped) {
    j["skipped"] = true;
    j["reason"] = r.witness;
    return j;
  }
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  if (!r.witness.empty()) j["witness"] = r.witness;
  return j;
}

} // namespace kslab
