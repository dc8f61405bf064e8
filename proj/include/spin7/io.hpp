#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "spin7/flow.hpp"

namespace spin7 {

inline constexpr const char* kCodeVersion = "spin7 0.1.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- atomic files

inline void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return ss.str();
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- config

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(where.empty() ? "config must be a JSON object" : where + ": must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key: " + (where.empty() ? "" : where + ".") + it.key());
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("invalid or missing field: " + path);
  }
}

inline double get_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ConfigError("field must be a number: " + path);
  return j.at(key).get<double>();
}

inline long get_integer(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_number_integer()) throw ConfigError("field must be an integer: " + path);
  return j.at(key).get<long>();
}

}  // namespace detail

// Schema (all keys optional unless noted; unknown keys are errors):
//   lattice: { active_axes: [1-based ints] (required), points_per_axis: int (required),
//              period: number | [8 numbers], stencil_order: 2|4 }
//   initial_data: { family (required), amplitude, mode, seed, width }
//   cfl, t_end, max_steps, diag_every, checkpoint_every,
//   tolerances: { convergence, blowup_factor },
//   integrator: "lie-euler" | "raw-euler",
//   diagnostics: { residuals: bool, metric_drift: bool }
inline FlowConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  detail::check_keys(j, "", {"lattice", "initial_data", "cfl", "t_end", "max_steps", "diag_every",
                             "checkpoint_every", "tolerances", "integrator", "diagnostics"});
  FlowConfig cfg;
  if (!j.contains("lattice")) throw ConfigError("missing field: lattice");
  const json& lj = j["lattice"];
  detail::check_keys(lj, "lattice", {"active_axes", "points_per_axis", "period", "stencil_order"});
  if (!lj.contains("active_axes") || !lj["active_axes"].is_array())
    throw ConfigError("field must be an array: lattice.active_axes");
  cfg.lattice.active_axes.clear();
  for (const auto& a : lj["active_axes"]) {
    if (!a.is_number_integer()) throw ConfigError("field must hold integers: lattice.active_axes");
    const int v = a.get<int>();
    if (v < 1 || v > 8) throw ConfigError("axis out of range 1..8: lattice.active_axes");
    cfg.lattice.active_axes.push_back(v - 1);
  }
  cfg.lattice.n = static_cast<int>(detail::get_integer(lj, "points_per_axis", "lattice.points_per_axis"));
  if (lj.contains("period")) {
    const json& pj = lj["period"];
    if (pj.is_number()) {
      cfg.lattice.period.fill(pj.get<double>());
    } else if (pj.is_array() && pj.size() == 8) {
      for (int i = 0; i < 8; ++i) {
        if (!pj[i].is_number()) throw ConfigError("field must hold numbers: lattice.period");
        cfg.lattice.period[i] = pj[i].get<double>();
      }
    } else {
      throw ConfigError("field must be a number or 8 numbers: lattice.period");
    }
  }
  if (lj.contains("stencil_order"))
    cfg.lattice.stencil_order = static_cast<int>(detail::get_integer(lj, "stencil_order", "lattice.stencil_order"));
  try {
    cfg.lattice.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  if (!j.contains("initial_data")) throw ConfigError("missing field: initial_data");
  const json& ij = j["initial_data"];
  detail::check_keys(ij, "initial_data", {"family", "amplitude", "mode", "seed", "width"});
  cfg.initial.family = detail::get_field<std::string>(ij, "family", "initial_data.family");
  static const std::set<std::string> families = {"constant", "rotation-field", "bryant-wave", "random-smooth", "bump"};
  if (!families.count(cfg.initial.family)) throw ConfigError("unknown value for initial_data.family: " + cfg.initial.family);
  if (ij.contains("amplitude")) cfg.initial.amplitude = detail::get_number(ij, "amplitude", "initial_data.amplitude");
  if (ij.contains("mode")) cfg.initial.mode = static_cast<int>(detail::get_integer(ij, "mode", "initial_data.mode"));
  if (ij.contains("seed")) {
    if (!ij["seed"].is_number_unsigned()) throw ConfigError("field must be a nonnegative integer: initial_data.seed");
    cfg.initial.seed = ij["seed"].get<std::uint64_t>();
  }
  if (ij.contains("width")) cfg.initial.width = detail::get_number(ij, "width", "initial_data.width");
  if (cfg.initial.mode < 1) throw ConfigError("initial_data.mode must be >= 1");

  if (j.contains("cfl")) cfg.cfl = detail::get_number(j, "cfl", "cfl");
  if (j.contains("t_end")) cfg.t_end = detail::get_number(j, "t_end", "t_end");
  if (j.contains("max_steps")) cfg.max_steps = detail::get_integer(j, "max_steps", "max_steps");
  if (j.contains("diag_every")) cfg.diag_every = static_cast<int>(detail::get_integer(j, "diag_every", "diag_every"));
  if (j.contains("checkpoint_every"))
    cfg.checkpoint_every = static_cast<int>(detail::get_integer(j, "checkpoint_every", "checkpoint_every"));
  if (j.contains("tolerances")) {
    const json& tj = j["tolerances"];
    detail::check_keys(tj, "tolerances", {"convergence", "blowup_factor"});
    if (tj.contains("convergence")) cfg.convergence_tol = detail::get_number(tj, "convergence", "tolerances.convergence");
    if (tj.contains("blowup_factor")) cfg.blowup_factor = detail::get_number(tj, "blowup_factor", "tolerances.blowup_factor");
  }
  if (j.contains("integrator")) {
    const auto s = detail::get_field<std::string>(j, "integrator", "integrator");
    if (s == "lie-euler") cfg.integrator = Integrator::LieEuler;
    else if (s == "raw-euler") cfg.integrator = Integrator::RawEuler;
    else throw ConfigError("unknown value for integrator: " + s);
  }
  if (j.contains("diagnostics")) {
    const json& dj = j["diagnostics"];
    detail::check_keys(dj, "diagnostics", {"residuals", "metric_drift"});
    if (dj.contains("residuals")) cfg.residuals = detail::get_field<bool>(dj, "residuals", "diagnostics.residuals");
    if (dj.contains("metric_drift")) cfg.metric_drift = detail::get_field<bool>(dj, "metric_drift", "diagnostics.metric_drift");
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline FlowConfig load_config(const std::filesystem::path& p) {
  std::string text;
  try {
    text = read_file(p);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

// ---------------------------------------------------------------- checkpoint

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("checkpoint truncated");
  unsigned char b[sizeof(T)];
  std::memcpy(b, in.data() + pos, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  pos += sizeof(T);
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

// Layout (little-endian): "S7FL", u32 version, u32 n_active, u32 axes bitmask (bit a = axis a),
// u32 N, 8 x f64 periods, u32 stencil order, f64 metric scale, f64 t, u64 step,
// then npoints x 70 f64 canonical components, grid row-major.
inline std::string encode_checkpoint(const FlowState& st) {
  const LatticeSpec& s = st.field.spec;
  std::string out = "S7FL";
  detail::put_le<std::uint32_t>(out, kCheckpointVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.dims()));
  std::uint32_t mask = 0;
  for (int a : s.active_axes) mask |= (1u << a);
  detail::put_le<std::uint32_t>(out, mask);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.n));
  for (double l : s.period) detail::put_le<double>(out, l);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.stencil_order));
  detail::put_le<double>(out, s.metric_scale);
  detail::put_le<double>(out, st.t);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(st.step));
  out.reserve(out.size() + st.field.size() * 70 * 8);
  for (const auto& v : st.field.values)
    for (double x : v.c) detail::put_le<double>(out, x);
  return out;
}

inline FlowState decode_checkpoint(const std::string& in) {
  if (in.size() < 4 || in.compare(0, 4, "S7FL") != 0) throw IoError("not a checkpoint (bad magic)");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(in, pos);
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  FlowState st;
  LatticeSpec s;
  const auto nact = detail::get_le<std::uint32_t>(in, pos);
  const auto mask = detail::get_le<std::uint32_t>(in, pos);
  s.active_axes.clear();
  for (int a = 0; a < 8; ++a)
    if (mask & (1u << a)) s.active_axes.push_back(a);
  if (s.active_axes.size() != nact) throw IoError("checkpoint axis mask disagrees with axis count");
  s.n = static_cast<int>(detail::get_le<std::uint32_t>(in, pos));
  for (double& l : s.period) l = detail::get_le<double>(in, pos);
  s.stencil_order = static_cast<int>(detail::get_le<std::uint32_t>(in, pos));
  s.metric_scale = detail::get_le<double>(in, pos);
  st.t = detail::get_le<double>(in, pos);
  st.step = static_cast<long>(detail::get_le<std::uint64_t>(in, pos));
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("checkpoint lattice invalid: ") + e.what());
  }
  st.field = FormField(s);
  if (in.size() - pos != st.field.size() * 70 * 8) throw IoError("checkpoint payload size mismatch");
  for (auto& v : st.field.values)
    for (double& x : v.c) x = detail::get_le<double>(in, pos);
  return st;
}

inline void write_checkpoint(const std::filesystem::path& p, const FlowState& st) {
  write_file_atomic(p, encode_checkpoint(st));
}

inline FlowState read_checkpoint(const std::filesystem::path& p) { return decode_checkpoint(read_file(p)); }

inline std::string checkpoint_name(long step) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "ckpt_%08ld.s7fl", step);
  return buf;
}

// ---------------------------------------------------------------- CSV

inline constexpr const char* kSeriesHeader = "t,E,dEdt,negDivT2,maxT,bianchi,ricci,scalar,metric_drift,omega21_defect";

inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

inline std::string csv_row(std::initializer_list<double> vals) {
  std::string s;
  bool first = true;
  for (double v : vals) {
    if (!first) s += ',';
    s += csv_number(v);
    first = false;
  }
  return s + "\n";
}

inline std::string series_row(const DiagRecord& r) {
  return csv_row({r.t, r.energy, r.dEdt, r.neg_div_sq, r.max_torsion, r.bianchi, r.ricci, r.scalar,
                  r.metric_drift, r.omega21_defect});
}

// ---------------------------------------------------------------- manifest

struct RunManifest {
  std::string config_hash, code_version = kCodeVersion, start_time, end_time, exit_reason = "running";
  std::uint64_t seed = 0;
  LatticeSpec lattice;
  long steps = 0;
  double final_t = 0, final_max_div = 0, max_generator_defect = 0;
  std::string resumed_from;

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["code_version"] = code_version;
    j["seed"] = seed;
    std::vector<int> axes;
    for (int a : lattice.active_axes) axes.push_back(a + 1);
    j["lattice"] = {{"active_axes", axes},
                    {"points_per_axis", lattice.n},
                    {"period", lattice.period},
                    {"stencil_order", lattice.stencil_order}};
    j["start_time"] = start_time;
    j["end_time"] = end_time;
    j["exit_reason"] = exit_reason;
    j["steps"] = steps;
    j["final_t"] = final_t;
    j["final_max_div"] = final_max_div;
    j["max_generator_defect"] = max_generator_defect;
    if (!resumed_from.empty()) j["resumed_from"] = resumed_from;
    return j.dump(2) + "\n";
  }
};

}  // namespace spin7
