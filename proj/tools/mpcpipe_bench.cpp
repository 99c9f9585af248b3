// Benchmark harness: runs blocking vs pipelined private inference over the
// sim or socket backend, checks outputs against the plaintext replica, and
// writes report.json / report.txt. Socket mode spawns one OS process per
// party (hidden run-party subcommand); sim mode runs parties as threads.

#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpcpipe/engine/bench.hpp"
#include "mpcpipe/engine/reference.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mpcpipe;

namespace {

// ---- unit parsing ----------------------------------------------------------

double parse_with_unit(const std::string& text, const char* what,
                       const std::vector<std::pair<std::string, double>>& units) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad ") + what + ": " + text);
  }
  std::string unit = text.substr(pos);
  for (char& c : unit) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (unit.empty()) return value;
  for (const auto& [name, mult] : units)
    if (unit == name) return value * mult;
  throw ConfigError(std::string("bad ") + what + " unit in: " + text);
}

double parse_latency(const std::string& text) {
  const double v = parse_with_unit(
      text, "latency", {{"s", 1.0}, {"ms", 1e-3}, {"us", 1e-6}, {"ns", 1e-9}});
  if (v < 0) throw ConfigError("latency must be >= 0");
  return v;
}

double parse_bandwidth(const std::string& text) {
  const double v = parse_with_unit(text, "bandwidth",
                                   {{"bps", 1.0},
                                    {"b/s", 1.0},
                                    {"kbps", 1e3},
                                    {"kb/s", 1e3},
                                    {"mbps", 1e6},
                                    {"mb/s", 1e6},
                                    {"gbps", 1e9},
                                    {"gb/s", 1e9}});
  if (v <= 0) throw ConfigError("bandwidth must be > 0");
  return v;
}

// Threshold in bytes; accepts k/kib, m/mib suffixes or the literal "auto".
std::size_t parse_threshold(const std::string& text) {
  const double v = parse_with_unit(text, "threshold",
                                   {{"b", 1.0},
                                    {"k", 1024.0},
                                    {"kb", 1024.0},
                                    {"kib", 1024.0},
                                    {"m", 1024.0 * 1024.0},
                                    {"mb", 1024.0 * 1024.0},
                                    {"mib", 1024.0 * 1024.0}});
  if (v < 0) throw ConfigError("threshold must be >= 0");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> parse_sizes(const std::string& csv) {
  std::vector<std::size_t> sizes;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string item = csv.substr(start, comma - start);
    if (!item.empty()) sizes.push_back(static_cast<std::size_t>(std::stoull(item)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return sizes;
}

// ---- model / spec assembly -------------------------------------------------

ModelGraph resolve_model(const std::string& name) {
  // Accept a builtin name (plus the dashed aliases) or a path to a model json.
  if (name == "transformer-toy" || name == "toy-transformer") return toy_transformer();
  if (name == "cnn-toy" || name == "toy-cnn") return toy_cnn();
  if (name.find('/') != std::string::npos || name.size() > 5 &&
      name.compare(name.size() - 5, 5, ".json") == 0)
    return load_model(name);
  return builtin_model(name);
}

struct RunArgs {
  std::string model = "toy_transformer";
  int parties = 2;
  std::string mode = "both";
  std::string weights = "private";
  std::string backend = "sim";
  std::string latency = "1ms";
  std::string bandwidth = "1GBps";
  int chunks = 4;
  std::string threshold;  // empty = library default; "auto" = calibrate
  int iterations = 50;
  u64 seed = 1;
  std::string out = ".";
  int port_base = 18450;
  bool port_base_set = false;
  double tolerance = 0x1.0p-6;
};

BenchSpec make_spec(const RunArgs& a) {
  BenchSpec spec;
  spec.model = resolve_model(a.model);
  spec.weights = init_weights(spec.model, a.seed + 11);
  spec.input = demo_input(spec.model, a.seed + 12);
  spec.public_weights = a.weights == "public";
  spec.iterations = a.iterations;
  spec.session.n_parties = a.parties;
  spec.session.backend = a.backend == "socket" ? Backend::Socket : Backend::Sim;
  spec.session.latency_s = parse_latency(a.latency);
  spec.session.bandwidth_bps = parse_bandwidth(a.bandwidth);
  spec.session.seed = a.seed;
  spec.session.port_base = a.port_base;
  if (!a.port_base_set)
    if (const char* env = std::getenv("MPCPIPE_PORT_BASE")) spec.session.port_base = std::atoi(env);
  spec.session.validate();
  spec.exec.chunks = a.chunks;
  if (!a.threshold.empty() && a.threshold != "auto")
    spec.exec.chunk_threshold = parse_threshold(a.threshold);
  if (a.iterations < 1) throw ConfigError("iterations must be >= 1");
  return spec;
}

// ---- socket-backend process orchestration ----------------------------------

json party_result_to_json(const PartyResult& pr) {
  const PartyReport& p = pr.report;
  return json{{"party", p.party},
              {"iter_wall_s", p.iter_wall_s},
              {"wall_s", p.wall_s},
              {"bytes_sent", p.bytes_sent},
              {"collectives", p.collectives},
              {"p2p_sends", p.p2p_sends},
              {"stall_s", p.stall_s},
              {"occupancy_s", p.occupancy_s},
              {"delta_wait_s", p.delta_wait_s},
              {"first_delta_wait_s", p.first_delta_wait_s},
              {"linear_comm_s", p.linear_comm_s},
              {"linear_bytes", p.linear_bytes},
              {"logits", json{{"shape", pr.logits.shape()},
                              {"scale_bits", pr.logits.scale_bits()},
                              {"words", pr.logits.data()}}}};
}

PartyResult party_result_from_json(const json& j) {
  PartyResult pr;
  PartyReport& p = pr.report;
  p.party = j.at("party").get<int>();
  p.iter_wall_s = j.at("iter_wall_s").get<std::vector<double>>();
  p.wall_s = j.at("wall_s").get<double>();
  p.bytes_sent = j.at("bytes_sent").get<u64>();
  p.collectives = j.at("collectives").get<u64>();
  p.p2p_sends = j.at("p2p_sends").get<u64>();
  p.stall_s = j.at("stall_s").get<double>();
  p.occupancy_s = j.at("occupancy_s").get<double>();
  p.delta_wait_s = j.at("delta_wait_s").get<double>();
  p.first_delta_wait_s = j.at("first_delta_wait_s").get<double>();
  p.linear_comm_s = j.at("linear_comm_s").get<double>();
  p.linear_bytes = j.at("linear_bytes").get<u64>();
  const json& lj = j.at("logits");
  pr.logits = RingTensor(lj.at("shape").get<Shape>(), lj.at("words").get<std::vector<u64>>(),
                         lj.at("scale_bits").get<int>());
  return pr;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path.string());
  json j;
  is >> j;
  return j;
}

std::string self_exe() {
  char buf[4096];
  const ssize_t n = readlink("/proc/self/exe", buf, sizeof buf - 1);
  if (n <= 0) throw ConfigError("cannot resolve own executable path");
  buf[n] = '\0';
  return std::string(buf);
}

// Serialize everything a party process needs to reproduce the run.
json job_to_json(const BenchSpec& spec, const fs::path& weights_path) {
  return json{{"model", model_to_json(spec.model)},
              {"weights_path", weights_path.string()},
              {"public_weights", spec.public_weights},
              {"input", json{{"shape", spec.input.shape}, {"v", spec.input.v}}},
              {"session", session_to_json(spec.session)},
              // The parent already resolved flag/env precedence; pin the port
              // so the child does not re-apply MPCPIPE_PORT_BASE on top.
              {"port_base_resolved", spec.session.port_base},
              {"exec", json{{"mode", exec_mode_name(spec.exec.mode)},
                            {"chunks", spec.exec.chunks},
                            {"chunk_threshold", spec.exec.chunk_threshold},
                            {"merged_adder", spec.exec.merged_adder}}},
              {"iterations", spec.iterations}};
}

BenchSpec job_from_json(const json& j) {
  BenchSpec spec;
  spec.model = model_from_json(j.at("model"));
  spec.weights = load_weights(j.at("weights_path").get<std::string>());
  spec.public_weights = j.at("public_weights").get<bool>();
  spec.input.shape = j.at("input").at("shape").get<Shape>();
  spec.input.v = j.at("input").at("v").get<std::vector<double>>();
  spec.session = session_from_json(j.at("session"));
  spec.session.port_base = j.at("port_base_resolved").get<int>();
  const json& e = j.at("exec");
  spec.exec.mode =
      e.at("mode").get<std::string>() == "pipelined" ? ExecMode::Pipelined : ExecMode::Blocking;
  spec.exec.chunks = e.at("chunks").get<int>();
  spec.exec.chunk_threshold = e.at("chunk_threshold").get<std::size_t>();
  spec.exec.merged_adder = e.at("merged_adder").get<bool>();
  spec.iterations = j.at("iterations").get<int>();
  return spec;
}

RunReport run_socket_parent(const BenchSpec& spec, const fs::path& out_dir, int run_idx) {
  const std::string stem = ".mpcpipe_run" + std::to_string(run_idx);
  const fs::path job_path = out_dir / (stem + ".job.json");
  const fs::path weights_path = out_dir / (stem + ".weights.mpcw");

  // Space the port window per run so back-to-back sessions never collide.
  BenchSpec child = spec;
  child.session.port_base += run_idx * 8;
  save_weights(spec.weights, weights_path.string());
  write_json(job_path, job_to_json(child, weights_path));

  const std::string exe = self_exe();
  std::vector<fs::path> report_paths;
  std::vector<pid_t> pids;
  for (int p = 0; p < spec.session.n_parties; ++p) {
    report_paths.push_back(out_dir / (stem + ".party" + std::to_string(p) + ".json"));
    const pid_t pid = fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      const std::string party_str = std::to_string(p);
      const std::string job_str = job_path.string();
      const std::string rep_str = report_paths.back().string();
      const char* argv[] = {exe.c_str(), "run-party",          "--job",  job_str.c_str(),
                            "--party",  party_str.c_str(),     "--report", rep_str.c_str(),
                            nullptr};
      execv(exe.c_str(), const_cast<char* const*>(argv));
      std::perror("execv");
      _exit(127);
    }
    pids.push_back(pid);
  }

  bool ok = true;
  for (pid_t pid : pids) {
    int status = 0;
    if (waitpid(pid, &status, 0) < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) ok = false;
  }
  if (!ok) throw TransportError("a party process failed; see its stderr above");

  std::vector<PartyResult> results;
  for (const fs::path& rp : report_paths) results.push_back(party_result_from_json(read_json(rp)));
  for (const fs::path& rp : report_paths) fs::remove(rp);
  fs::remove(job_path);
  fs::remove(weights_path);
  return assemble_report(spec, std::move(results));
}

int cmd_run_party(const std::string& job_path, int party, const std::string& report_path) {
  const BenchSpec spec = job_from_json(read_json(job_path));
  SocketComm comm(spec.session, party);
  PartyResult pr = bench_party(spec, comm);
  write_json(report_path, party_result_to_json(pr));
  return 0;
}

// ---- run + verify ----------------------------------------------------------

RunReport run_one_mode(BenchSpec spec, ExecMode mode, const fs::path& out_dir, int run_idx) {
  spec.exec.mode = mode;
  if (spec.session.backend == Backend::Socket) return run_socket_parent(spec, out_dir, run_idx);
  return run_sim_bench(spec);
}

struct OracleCheck {
  double max_abs_err = 0;
  std::size_t argmax = 0;
  bool pass = false;
};

OracleCheck check_oracle(const BenchSpec& spec, const RunReport& r, double tolerance) {
  const DoubleTensor ref = reference_forward(spec.model, spec.weights, spec.input);
  OracleCheck c;
  if (ref.v.size() != r.logits.size()) return c;  // pass stays false
  for (std::size_t i = 0; i < ref.v.size(); ++i) {
    const double d = std::abs(ref.v[i] - r.logits[i]);
    if (d > c.max_abs_err) {
      c.max_abs_err = d;
      c.argmax = i;
    }
  }
  c.pass = c.max_abs_err <= tolerance;
  return c;
}

json comparison_json(const RunReport& b, const RunReport& p) {
  auto sum = [](const RunReport& r, auto field) {
    double s = 0;
    for (const PartyReport& pr : r.parties) s += field(pr);
    return s;
  };
  auto sum_u = [](const RunReport& r, auto field) {
    u64 s = 0;
    for (const PartyReport& pr : r.parties) s += field(pr);
    return s;
  };
  auto speedup = [](double blocking, double pipelined) {
    return blocking > 0 ? (blocking - pipelined) / blocking * 100.0 : 0.0;
  };
  const double bw = b.wall_s(), pw = p.wall_s();
  const double bl = sum(b, [](const PartyReport& x) { return x.linear_comm_s; });
  const double pl = sum(p, [](const PartyReport& x) { return x.linear_comm_s; });
  const double bd = sum(b, [](const PartyReport& x) { return x.delta_wait_s; });
  const double pd = sum(p, [](const PartyReport& x) { return x.delta_wait_s; });
  const double bs = sum(b, [](const PartyReport& x) { return x.stall_s; });
  const double ps = sum(p, [](const PartyReport& x) { return x.stall_s; });
  return json{{"hashes_equal", b.logits_hash == p.logits_hash},
              {"wall_s", json{{"blocking", bw}, {"pipelined", pw}, {"speedup_pct", speedup(bw, pw)}}},
              {"linear_comm_s", json{{"blocking", bl}, {"pipelined", pl}}},
              {"delta_wait_s",
               json{{"blocking", bd}, {"pipelined", pd}, {"speedup_pct", speedup(bd, pd)}}},
              {"stall_s", json{{"blocking", bs}, {"pipelined", ps}, {"speedup_pct", speedup(bs, ps)}}},
              {"bytes_sent", json{{"blocking", sum_u(b, [](const PartyReport& x) { return x.bytes_sent; })},
                                  {"pipelined", sum_u(p, [](const PartyReport& x) { return x.bytes_sent; })}}}};
}

std::string comparison_text(const json& c) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  auto row = [&](const char* name, const json& e, bool pct) {
    os << "  " << name << ": blocking " << e.at("blocking").get<double>() << "  pipelined "
       << e.at("pipelined").get<double>();
    if (pct) {
      os.precision(2);
      os << "  speedup " << e.at("speedup_pct").get<double>() << "%";
      os.precision(6);
    }
    os << "\n";
  };
  os << "blocking vs pipelined (" << (c.at("hashes_equal").get<bool>() ? "outputs identical"
                                                                        : "OUTPUT HASH MISMATCH")
     << ")\n";
  row("wall_s       ", c.at("wall_s"), true);
  row("linear_comm_s", c.at("linear_comm_s"), false);
  row("delta_wait_s ", c.at("delta_wait_s"), true);
  row("stall_s      ", c.at("stall_s"), true);
  os << "  bytes_sent   : blocking " << c.at("bytes_sent").at("blocking").get<u64>()
     << "  pipelined " << c.at("bytes_sent").at("pipelined").get<u64>() << "\n";
  return os.str();
}

int cmd_run(const RunArgs& args) {
  BenchSpec spec = make_spec(args);
  const fs::path out_dir = args.out;
  fs::create_directories(out_dir);

  if (args.threshold == "auto") {
    const std::size_t t = calibrate_threshold(spec.session, spec.exec.chunks);
    if (t == std::numeric_limits<std::size_t>::max()) {
      std::cout << "calibrated threshold: chunking never wins at this latency; "
                   "inner pipeline stays off\n";
    } else {
      spec.exec.chunk_threshold = t;
      std::cout << "calibrated threshold: " << t << " bytes\n";
    }
  }

  std::vector<ExecMode> modes;
  if (args.mode == "blocking" || args.mode == "both") modes.push_back(ExecMode::Blocking);
  if (args.mode == "pipelined" || args.mode == "both") modes.push_back(ExecMode::Pipelined);
  if (modes.empty()) throw ConfigError("mode must be blocking, pipelined, or both");

  std::vector<RunReport> reports;
  std::vector<OracleCheck> checks;
  bool all_pass = true;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    reports.push_back(run_one_mode(spec, modes[i], out_dir, static_cast<int>(i)));
    checks.push_back(check_oracle(spec, reports.back(), args.tolerance));
    all_pass = all_pass && checks.back().pass;
  }
  const bool hashes_equal =
      reports.size() < 2 || reports[0].logits_hash == reports[1].logits_hash;

  json out{{"schema", 1}, {"runs", json::array()}, {"oracle", json::array()}};
  std::ostringstream text;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    out["runs"].push_back(report_to_json(reports[i]));
    out["oracle"].push_back(json{{"mode", exec_mode_name(modes[i])},
                                 {"max_abs_err", checks[i].max_abs_err},
                                 {"tolerance", args.tolerance},
                                 {"pass", checks[i].pass}});
    text << report_to_text(reports[i]);
    text.setf(std::ios::scientific);
    text << "replica check: max |err| = " << checks[i].max_abs_err << " at logit "
         << checks[i].argmax << " (tolerance " << args.tolerance << ") -> "
         << (checks[i].pass ? "pass" : "FAIL") << "\n\n";
    text.unsetf(std::ios::scientific);
  }
  if (reports.size() == 2) {
    out["comparison"] = comparison_json(reports[0], reports[1]);
    text << comparison_text(out["comparison"]);
  }

  write_json(out_dir / "report.json", out);
  {
    std::ofstream os(out_dir / "report.txt");
    os << text.str();
  }
  std::cout << text.str();

  if (!hashes_equal) {
    std::cerr << "FAIL: blocking and pipelined output hashes differ\n";
    return 1;
  }
  if (!all_pass) {
    std::cerr << "FAIL: MPC output deviates from the plaintext replica beyond tolerance\n";
    return 1;
  }
  return 0;
}

int cmd_verify(RunArgs args) {
  // Values are independent of link timing; verify on a zero-latency sim.
  args.backend = "sim";
  args.mode = "blocking";
  args.latency = "0";
  args.iterations = 1;
  BenchSpec spec = make_spec(args);
  const RunReport r = run_sim_bench(spec);
  const OracleCheck c = check_oracle(spec, r, args.tolerance);
  std::cout << "model " << spec.model.name << "  parties " << args.parties << "  weights "
            << args.weights << "\n";
  std::cout << "max |MPC - replica| = " << std::scientific << c.max_abs_err << " at logit "
            << c.argmax << " (tolerance " << args.tolerance << ")\n";
  std::cout << (c.pass ? "verify PASS" : "verify FAIL") << "\n";
  return c.pass ? 0 : 1;
}

int cmd_sweep(const RunArgs& args, const std::string& op_name, const std::string& sizes_csv) {
  SessionConfig cfg;
  cfg.n_parties = args.parties;
  cfg.latency_s = parse_latency(args.latency);
  cfg.bandwidth_bps = parse_bandwidth(args.bandwidth);
  cfg.seed = args.seed;
  cfg.validate();
  const SweepOp op = op_name == "and" ? SweepOp::And : SweepOp::Relu;
  const SweepResult r = sweep_threshold(op, parse_sizes(sizes_csv), args.chunks, cfg, args.seed);

  std::cout << "op " << sweep_op_name(r.op) << "  chunks " << r.chunks << "  parties "
            << cfg.n_parties << "  latency " << cfg.latency_s * 1e3 << " ms  bandwidth "
            << cfg.bandwidth_bps / 1e9 << " GB/s\n";
  std::cout << "  elems      bytes        blocking_s   chunked_s    winner\n";
  for (const SweepPoint& p : r.points) {
    std::printf("  %-10zu %-12zu %-12.6f %-12.6f %s\n", p.elems, p.bytes, p.blocking_s,
                p.chunked_s, p.chunked_wins() ? "chunked" : "blocking");
  }
  if (r.finite())
    std::cout << "recommended threshold: " << r.threshold_bytes << " bytes\n";
  else
    std::cout << "chunking never won; threshold = inf (keep the inner pipeline off)\n";

  if (!args.out.empty() && args.out != ".") fs::create_directories(args.out);
  write_json(fs::path(args.out) / "sweep.json", sweep_to_json(r));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPC pipeline inference benchmark"};
  app.require_subcommand(1);
  RunArgs args;

  auto add_net_flags = [&](CLI::App* c) {
    c->add_option("--parties", args.parties, "party count (2 or 3)")
        ->check(CLI::IsMember({2, 3}));
    c->add_option("--latency", args.latency, "one-way link latency, e.g. 1ms, 200us, 0");
    c->add_option("--bandwidth", args.bandwidth, "per-link bandwidth, e.g. 1GBps, 100MBps");
    c->add_option("--seed", args.seed, "session seed (weights, input, shares, triples)");
    c->add_option("--chunks", args.chunks, "chunk count for pipelined collectives")
        ->check(CLI::PositiveNumber);
    c->add_option("--out", args.out, "output directory");
  };

  CLI::App* run = app.add_subcommand("run", "run blocking/pipelined inference and report");
  add_net_flags(run);
  run->add_option("--model", args.model, "builtin (toy_transformer, toy_cnn) or model json path");
  run->add_option("--mode", args.mode, "blocking, pipelined, or both")
      ->check(CLI::IsMember({"blocking", "pipelined", "both"}));
  run->add_option("--weights", args.weights, "private (secret-shared) or public")
      ->check(CLI::IsMember({"private", "public"}));
  run->add_option("--backend", args.backend, "sim (threads) or socket (localhost processes)")
      ->check(CLI::IsMember({"sim", "socket"}));
  run->add_option("--threshold", args.threshold,
                  "inner-pipeline byte threshold (e.g. 8192, 2MiB) or 'auto' to calibrate");
  run->add_option("--iterations", args.iterations, "timed iterations per mode")
      ->check(CLI::PositiveNumber);
  run->add_option("--tolerance", args.tolerance, "replica-check tolerance on logits");
  CLI::Option* pb = run->add_option("--port-base", args.port_base,
                                    "socket backend base port (env MPCPIPE_PORT_BASE)");

  CLI::App* verify = app.add_subcommand("verify", "check MPC output against the plaintext replica");
  add_net_flags(verify);
  verify->add_option("--model", args.model, "builtin name or model json path");
  verify->add_option("--weights", args.weights, "private or public")
      ->check(CLI::IsMember({"private", "public"}));
  verify->add_option("--tolerance", args.tolerance, "replica-check tolerance on logits");

  std::string sweep_op = "relu";
  std::string sweep_sizes = "1024,4096,16384,65536,262144";
  CLI::App* sweep =
      app.add_subcommand("sweep_threshold", "time blocking vs chunked across operand sizes");
  sweep->alias("sweep-threshold");
  add_net_flags(sweep);
  sweep->add_option("--op", sweep_op, "probe op: relu or and")
      ->check(CLI::IsMember({"relu", "and"}));
  sweep->add_option("--sizes", sweep_sizes, "comma-separated operand element counts");

  std::string job_path, party_report;
  int party = 0;
  CLI::App* run_party = app.add_subcommand("run-party", "");
  run_party->group("");  // internal: spawned by the socket-backend parent
  run_party->add_option("--job", job_path)->required();
  run_party->add_option("--party", party)->required();
  run_party->add_option("--report", party_report)->required();

  CLI11_PARSE(app, argc, argv);
  args.port_base_set = pb->count() > 0;

  try {
    if (run->parsed()) return cmd_run(args);
    if (verify->parsed()) return cmd_verify(args);
    if (sweep->parsed()) return cmd_sweep(args, sweep_op, sweep_sizes);
    if (run_party->parsed()) return cmd_run_party(job_path, party, party_report);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
