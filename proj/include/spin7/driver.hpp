#pragma once

#include <cmath>
#include <filesystem>
#include <string>

#include "spin7/flow.hpp"
#include "spin7/io.hpp"

namespace spin7 {

// Output directory layout: config.json, manifest.json, series.csv, ckpt_<step>.s7fl.
// series.csv is rewritten atomically at every checkpoint and at exit.
struct RunDirectory {
  std::filesystem::path dir;
  std::filesystem::path config() const { return dir / "config.json"; }
  std::filesystem::path manifest() const { return dir / "manifest.json"; }
  std::filesystem::path series() const { return dir / "series.csv"; }
};

namespace detail {

inline RunResult run_into(const FlowConfig& cfg, const std::string& config_text, FlowState st,
                          const std::filesystem::path& out, std::string series, const std::string& resumed_from) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  const RunDirectory rd{out};
  write_file_atomic(rd.config(), config_text);
  RunManifest man;
  man.config_hash = sha256_hex(config_text);
  man.seed = cfg.initial.seed;
  man.lattice = cfg.lattice;
  man.start_time = utc_now();
  man.resumed_from = resumed_from;
  write_file_atomic(rd.manifest(), man.to_json());

  RunHooks hooks;
  hooks.on_record = [&](const DiagRecord& r) { series += series_row(r); };
  hooks.on_checkpoint = [&](const FlowState& s) {
    write_checkpoint(out / checkpoint_name(s.step), s);
    write_file_atomic(rd.series(), series);
  };
  RunResult res;
  try {
    res = run_flow(cfg, std::move(st), hooks);
  } catch (const std::exception& e) {
    write_file_atomic(rd.series(), series);
    man.end_time = utc_now();
    man.exit_reason = std::string("abort: ") + e.what();
    write_file_atomic(rd.manifest(), man.to_json());
    throw;
  }
  write_file_atomic(rd.series(), series);
  man.end_time = utc_now();
  man.exit_reason = res.exit_reason;
  man.steps = res.final_state.step;
  man.final_t = res.final_state.t;
  man.final_max_div = res.final_max_div;
  man.max_generator_defect = res.max_generator_defect;
  write_file_atomic(rd.manifest(), man.to_json());
  return res;
}

}  // namespace detail

inline RunResult run_to_directory(const std::string& config_text, const std::filesystem::path& out) {
  const FlowConfig cfg = parse_config(config_text);
  FlowState st = initial_data(cfg.initial, cfg.lattice);
  return detail::run_into(cfg, config_text, std::move(st), out, std::string(kSeriesHeader) + "\n", "");
}

// Continues the run that wrote `checkpoint`; its directory must hold config.json and series.csv.
// The series keeps the original rows for steps before the checkpoint, so an interrupted and
// resumed run reproduces the uninterrupted series.
inline RunResult resume_to_directory(const std::filesystem::path& checkpoint, const std::filesystem::path& out) {
  FlowState st = read_checkpoint(checkpoint);
  const RunDirectory src{checkpoint.parent_path()};
  const std::string config_text = read_file(src.config());
  const FlowConfig cfg = parse_config(config_text);
  if (!cfg.lattice.same_grid(st.field.spec) || st.field.spec.metric_scale != cfg.lattice.metric_scale)
    throw ConfigError("checkpoint lattice does not match config.json of its run directory");
  const std::string old = read_file(src.series());
  const long keep = (st.step + cfg.diag_every - 1) / cfg.diag_every;
  std::size_t pos = old.find('\n');
  if (pos == std::string::npos) throw IoError("series.csv has no header");
  for (long r = 0; r < keep; ++r) {
    pos = old.find('\n', pos + 1);
    if (pos == std::string::npos) throw IoError("series.csv is shorter than the checkpoint step implies");
  }
  return detail::run_into(cfg, config_text, std::move(st), out, old.substr(0, pos + 1), checkpoint.string());
}

}  // namespace spin7
