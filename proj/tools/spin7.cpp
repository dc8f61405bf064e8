// spin7 command-line driver. Exit codes: 0 success, 1 verification failure,
// 2 config or usage error, 3 runtime abort.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spin7/driver.hpp"
#include "spin7/verify.hpp"

namespace {

using namespace spin7;

constexpr int kOk = 0, kVerifyFailed = 1, kConfigError = 2, kRuntimeAbort = 3;

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

int cmd_verify(bool as_json, const std::string& table_path) {
  OctonionTable table = OctonionTable::standard();
  if (!table_path.empty()) {
    try {
      table = OctonionTable::load(table_path);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  const auto results = identity_suite(table);
  const IdentityResult* first_fail = nullptr;
  for (const auto& r : results)
    if (!r.passed() && !first_fail) first_fail = &r;
  if (as_json) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : results)
      j.push_back({{"identity", r.name}, {"max_error", r.max_error}, {"tolerance", r.tolerance}, {"passed", r.passed()}});
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& r : results) {
      std::printf("%-48s %12.3e  %s\n", r.name.c_str(), r.max_error, r.passed() ? "ok" : "FAIL");
    }
  }
  if (first_fail) {
    std::cerr << "verification failed: " << first_fail->name << " (max error " << first_fail->max_error << ")\n";
    return kVerifyFailed;
  }
  return kOk;
}

void print_run_summary(const RunResult& r, const std::string& out) {
  std::cerr << "exit_reason=" << r.exit_reason << " steps=" << r.final_state.step << " t=" << r.final_state.t
            << " out=" << out << "\n";
}

std::vector<FlowState> load_all(const std::vector<std::string>& paths) {
  std::vector<FlowState> st;
  for (const auto& p : paths) {
    st.push_back(read_checkpoint(p));
    if (!st.front().field.spec.same_grid(st.back().field.spec) ||
        st.front().field.spec.metric_scale != st.back().field.spec.metric_scale)
      throw ConfigError("incompatible lattice specs across inputs: " + p);
  }
  return st;
}

std::size_t centre_index(const LatticeSpec& s, const std::vector<int>& centre) {
  if (centre.empty()) return s.index(std::vector<int>(s.dims(), s.n / 2));
  if (static_cast<int>(centre.size()) != s.dims())
    throw ConfigError("--center needs one grid index per active axis");
  return s.index(centre);
}

int cmd_theta(const std::vector<std::string>& ckpts, double t0, const std::vector<int>& centre, const std::string& out) {
  const auto states = load_all(ckpts);
  const std::size_t x0 = centre_index(states.front().field.spec, centre);
  std::string csv = "t,theta\n";
  for (const auto& s : states) csv += csv_row({s.t, theta(s.field, x0, s.t, t0)});
  emit(csv, out);
  return kOk;
}

int cmd_entropy(const std::vector<std::string>& ckpts, double sigma, int samples, int stride, const std::string& out) {
  const auto states = load_all(ckpts);
  std::string csv = "t,entropy,center_index,scale\n";
  for (const auto& s : states) {
    const EntropyResult r = entropy(s.field, sigma, samples, stride);
    csv += csv_row({s.t, r.value, static_cast<double>(r.x), r.scale});
  }
  emit(csv, out);
  return kOk;
}

int cmd_rescale(const std::string& ckpt, double c, const std::string& ckpt_out, const std::string& out) {
  const FlowState st = read_checkpoint(ckpt);
  const FlowState sc = parabolic_rescale(st, c);
  if (!ckpt_out.empty()) write_checkpoint(ckpt_out, sc);
  const RescaleReport r = verify_rescale(st, sc, c);
  std::string csv = "c,torsion_rel,div_rel,norm0_rel,norm1_rel\n";
  csv += csv_row({c, r.torsion_rel, r.div_rel, r.norm0_rel, r.norm1_rel});
  emit(csv, out);
  return kOk;
}

int cmd_soliton(const std::vector<std::string>& ckpts, const std::vector<double>& xv, const std::string& out) {
  if (!xv.empty() && xv.size() != 8) throw ConfigError("--vector needs 8 components");
  const auto states = load_all(ckpts);
  std::string csv = "t,residual,max_div\n";
  for (const auto& s : states) {
    LatticeField<Vec8> x(s.field.spec);
    for (auto& v : x.values)
      for (std::size_t i = 0; i < xv.size(); ++i) v[static_cast<int>(i)] = xv[i];
    const Evaluation ev = evaluate(s.field);
    csv += csv_row({s.t, soliton_residual(s.field, x), ev.max_div});
  }
  emit(csv, out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin(7)-structure algebra and harmonic flow on flat tori"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: SPIN7_THREADS or hardware)");

  auto* verify = app.add_subcommand("verify", "run the algebraic identity suite");
  bool as_json = false;
  std::string table_path;
  verify->add_flag("--json", as_json, "machine-readable report");
  verify->add_option("--octonion-table", table_path, "file of 7 Fano triples replacing the built-in table");

  auto* flow = app.add_subcommand("flow", "run or resume a harmonic flow");
  flow->require_subcommand(1);
  auto* run = flow->add_subcommand("run", "start a run from a JSON config");
  std::string config_path, out_dir;
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  auto* resume = flow->add_subcommand("resume", "continue a run from a checkpoint");
  std::string resume_ckpt;
  resume->add_option("--checkpoint", resume_ckpt, "checkpoint inside a run directory")->required();
  resume->add_option("--out", out_dir, "output directory")->required();

  std::vector<std::string> ckpts;
  std::string csv_out;
  std::vector<int> centre;

  auto* th = app.add_subcommand("theta", "Theta functional on checkpoints; CSV t,theta");
  double t0 = 0.0;
  th->add_option("--checkpoint", ckpts, "checkpoint file(s)")->required();
  th->add_option("--t0", t0, "singular time t0 (> t of every input)")->required();
  th->add_option("--center", centre, "grid index per active axis (default: middle)")->delimiter(',');
  th->add_option("--out", csv_out, "CSV path (default: stdout)");

  auto* en = app.add_subcommand("entropy", "entropy on checkpoints; CSV t,entropy,center_index,scale");
  double sigma = 0.0;
  int samples = 16, stride = 1;
  en->add_option("--checkpoint", ckpts, "checkpoint file(s)")->required();
  en->add_option("--sigma", sigma, "largest scale")->required();
  en->add_option("--samples", samples, "number of scales in (0, sigma]");
  en->add_option("--stride", stride, "centre stride along each axis");
  en->add_option("--out", csv_out, "CSV path (default: stdout)");

  auto* rs = app.add_subcommand("rescale", "parabolic rescaling; CSV c,torsion_rel,div_rel,norm0_rel,norm1_rel");
  double c = 0.0;
  std::string rs_ckpt, rs_write;
  rs->add_option("--checkpoint", rs_ckpt, "input checkpoint")->required();
  rs->add_option("--c", c, "scale factor")->required();
  rs->add_option("--write", rs_write, "write the rescaled checkpoint here");
  rs->add_option("--out", csv_out, "CSV path (default: stdout)");

  auto* sol = app.add_subcommand("soliton-check", "soliton residual for a constant X; CSV t,residual,max_div");
  std::vector<double> xv;
  sol->add_option("--checkpoint", ckpts, "checkpoint file(s)")->required();
  sol->add_option("--vector", xv, "8 components of X (default 0)")->delimiter(',');
  sol->add_option("--out", csv_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (threads > 0) set_thread_count(threads);

  try {
    if (*verify) return cmd_verify(as_json, table_path);
    if (*run) {
      std::string text;
      try {
        text = read_file(config_path);
      } catch (const IoError& e) {
        throw ConfigError(e.what());
      }
      const auto r = run_to_directory(text, out_dir);
      print_run_summary(r, out_dir);
      return kOk;
    }
    if (*resume) {
      const auto r = resume_to_directory(resume_ckpt, out_dir);
      print_run_summary(r, out_dir);
      return kOk;
    }
    if (*th) return cmd_theta(ckpts, t0, centre, csv_out);
    if (*en) return cmd_entropy(ckpts, sigma, samples, stride, csv_out);
    if (*rs) return cmd_rescale(rs_ckpt, c, rs_write, csv_out);
    if (*sol) return cmd_soliton(ckpts, xv, csv_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kRuntimeAbort;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kRuntimeAbort;
  }
  return kConfigError;
}
