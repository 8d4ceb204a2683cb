#include "avgopt/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "avgopt/harness.hpp"
#include "json.hpp"

namespace avgopt {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string_view> kCommands = {"solve", "learn", "plan", "sweep", "interrupt", "model"};

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

class Output {
 public:
  Output(const std::string& dir, std::ostream* progress) : dir_(dir), progress_(progress) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    std::ofstream os(dir_ / name);
    if (!os) throw std::runtime_error("cannot write '" + (dir_ / name).string() + "'");
    artifacts_.push_back(name);
    return os;
  }

  void log(const std::string& line) {
    if (progress_) *progress_ << line << std::endl;
  }

  CommandResult finish(std::string_view command, const ExperimentConfig& cfg, std::string summary) {
    {
      auto os = open("config.json");
      os << to_json(cfg);
    }
    {
      auto os = open("summary.txt");
      os << summary;
    }
    nlohmann::json manifest;
    manifest["command"] = std::string(command);
    manifest["artifacts"] = artifacts_;
    std::ofstream os(dir_ / "manifest.json");
    if (!os) throw std::runtime_error("cannot write manifest");
    os << manifest.dump(2) << "\n";
    CommandResult res{std::move(summary), artifacts_};
    res.artifacts.push_back("manifest.json");
    return res;
  }

 private:
  fs::path dir_;
  std::ostream* progress_;
  std::vector<std::string> artifacts_;
};

void write_run_summaries(const std::vector<RunRecord>& records, std::ostream& os) {
  os.precision(10);
  os << "run_id,seed,mean_reward,final_window_rate,final_rbar,final_greedy_rate\n";
  for (const auto& r : records) {
    os << r.run_id << ',' << r.seed << ',' << r.mean_reward << ',' << final_window_rate(r) << ','
       << r.final_rbar << ',';
    if (r.final_greedy_rate) os << *r.final_greedy_rate;
    os << '\n';
  }
}

std::string describe_runs(const std::vector<RunRecord>& records, const ExperimentContext& ctx) {
  std::vector<double> mean, rbar, greedy;
  std::size_t optimal = 0;
  for (const auto& r : records) {
    mean.push_back(r.mean_reward);
    rbar.push_back(r.final_rbar);
    if (r.final_greedy_rate) {
      greedy.push_back(*r.final_greedy_rate);
      if (std::abs(*r.final_greedy_rate - ctx.optimal.rate) < 1e-9) ++optimal;
    }
  }
  const auto [m, se] = mean_and_stderr(mean);
  const auto [rb, rbse] = mean_and_stderr(rbar);
  std::ostringstream os;
  os << "runs = " << records.size() << "\n";
  os << "r* = " << fixed(ctx.optimal.rate) << "\n";
  os << "mean reward = " << fixed(m) << " +- " << fixed(se) << "\n";
  os << "final rbar = " << fixed(rb) << " +- " << fixed(rbse) << "\n";
  if (!greedy.empty()) {
    const auto [g, gse] = mean_and_stderr(greedy);
    os << "final greedy rate = " << fixed(g) << " +- " << fixed(gse) << "\n";
    os << "runs with optimal greedy policy = " << optimal << "/" << greedy.size() << "\n";
  }
  return os.str();
}

CommandResult cmd_solve(const ExperimentConfig& cfg, Output& out) {
  const ExperimentContext ctx = ExperimentContext::build(cfg);
  {
    auto os = out.open("models.csv");
    write_model_csv(os, ctx.models);
  }
  {
    auto os = out.open("q_star.csv");
    write_q_csv(os, ctx.optimal.q);
  }
  {
    nlohmann::json j;
    j["rate"] = ctx.optimal.rate;
    j["residual"] = ctx.optimal.residual;
    j["normalization"] = ctx.optimal.normalization;
    j["policy"] = ctx.optimal.policy;
    j["option_labels"] = ctx.options.labels;
    auto os = out.open("solution.json");
    os << j.dump(2) << "\n";
  }
  std::ostringstream s;
  s << "r* = " << fixed(ctx.optimal.rate) << "\n";
  s << "bellman residual = " << ctx.optimal.residual << "\n";
  s << "states = " << ctx.env.mdp.num_states << ", options = " << ctx.options.size() << " ("
    << cfg.options.set << "), goal = " << goal_name(cfg.env.goal) << "\n";
  return out.finish("solve", cfg, s.str());
}

CommandResult cmd_runs(std::string_view command, const ExperimentConfig& cfg, Output& out) {
  const ExperimentContext ctx = ExperimentContext::build(cfg);
  out.log(std::string(command) + ": " + cfg.algorithm.name + ", " + std::to_string(cfg.execution.runs) +
          " runs x " + std::to_string(cfg.execution.steps) + " steps");
  const auto records = run_experiment(ctx, cfg);
  {
    auto os = out.open("results.csv");
    write_results(records, os);
  }
  {
    auto os = out.open("runs.csv");
    write_run_summaries(records, os);
  }
  std::string summary = describe_runs(records, ctx);
  if (command == "model" || cfg.algorithm.name == "combined") {
    auto os = out.open("model_error.csv");
    os.precision(10);
    os << "run_id,seed,mp,mr,ml\n";
    double worst_p = 0, worst_r = 0, worst_l = 0;
    for (const auto& r : records) {
      if (!r.model_error) continue;
      os << r.run_id << ',' << r.seed << ',' << r.model_error->mp << ',' << r.model_error->mr << ','
         << r.model_error->ml << '\n';
      worst_p = std::max(worst_p, r.model_error->mp);
      worst_r = std::max(worst_r, r.model_error->mr);
      worst_l = std::max(worst_l, r.model_error->ml);
    }
    summary += "max model error (mp, mr, ml) = (" + fixed(worst_p) + ", " + fixed(worst_r) + ", " +
               fixed(worst_l) + ")\n";
  }
  return out.finish(command, cfg, summary);
}

CommandResult cmd_sweep(const ExperimentConfig& cfg, Output& out) {
  out.log("sweep: " + cfg.algorithm.name);
  const auto points = sweep(cfg);
  {
    auto os = out.open("sweep_summary.csv");
    write_sweep_summary(points, os);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto os = out.open("results_" + std::to_string(i) + ".csv");
    write_results(points[i].records, os);
  }
  std::ostringstream s;
  s << "grid points = " << points.size() << "\n";
  for (const auto& p : points)
    s << "alpha=" << p.alpha << " beta=" << p.beta << " eta=" << p.eta << ": " << fixed(p.mean) << " +- "
      << fixed(p.std_error) << "\n";
  return out.finish("sweep", cfg, s.str());
}

CommandResult cmd_interrupt(const ExperimentConfig& cfg, Output& out) {
  ExperimentConfig base = cfg;
  base.algorithm.name = "intra_dql";
  base.algorithm.interrupt = false;
  ExperimentConfig with = base;
  with.algorithm.interrupt = true;
  const ExperimentContext ctx = ExperimentContext::build(base);

  out.log("interrupt: running without interruption");
  const auto plain = run_experiment(ctx, base);
  out.log("interrupt: running with interruption");
  const auto interrupted = run_experiment(ctx, with);
  {
    auto os = out.open("no_interrupt.csv");
    write_results(plain, os);
  }
  {
    auto os = out.open("interrupt.csv");
    write_results(interrupted, os);
  }
  std::size_t wins = 0;
  std::vector<double> a, b;
  {
    auto os = out.open("comparison.csv");
    os.precision(10);
    os << "run_id,seed,final_rate_no_interrupt,final_rate_interrupt\n";
    for (std::size_t i = 0; i < plain.size(); ++i) {
      const double x = final_window_rate(plain[i]);
      const double y = final_window_rate(interrupted[i]);
      a.push_back(x);
      b.push_back(y);
      wins += y > x;
      os << i << ',' << plain[i].seed << ',' << x << ',' << y << '\n';
    }
  }
  const Table mu = to_table(ctx.optimal.policy, ctx.options.size());
  const InterruptionResult oracle = interrupted_policy_rate(ctx.env.mdp, ctx.options, mu);

  std::ostringstream s;
  const auto [ma, sa] = mean_and_stderr(a);
  const auto [mb, sb] = mean_and_stderr(b);
  s << "final windowed rate without interruption = " << fixed(ma) << " +- " << fixed(sa) << "\n";
  s << "final windowed rate with interruption = " << fixed(mb) << " +- " << fixed(sb) << "\n";
  s << "runs where interruption is higher = " << wins << "/" << plain.size() << "\n";
  s << "oracle: r(mu) = " << fixed(oracle.r_mu) << ", r(mu') = " << fixed(oracle.r_mu_prime)
    << " (" << oracle.flipped << " terminations set to 1)\n";
  return out.finish("interrupt", cfg, s.str());
}

}  // namespace

const std::vector<std::string_view>& command_names() { return kCommands; }

CommandResult run_command(std::string_view command, const ExperimentConfig& cfg, const std::string& out_dir,
                          std::ostream* progress) {
  if (std::find(kCommands.begin(), kCommands.end(), command) == kCommands.end())
    throw UsageError("unknown command '" + std::string(command) + "'");
  cfg.validate();
  ExperimentConfig effective = cfg;
  if (command == "learn") {
    if (is_planning_algorithm(cfg.algorithm.name) || cfg.algorithm.name == "model_learning")
      throw UsageError("learn needs a learning algorithm, got '" + cfg.algorithm.name + "'");
  } else if (command == "plan") {
    if (!is_planning_algorithm(cfg.algorithm.name))
      throw UsageError("plan needs combined, inter_planning or intra_planning, got '" + cfg.algorithm.name + "'");
  } else if (command == "model") {
    effective.algorithm.name = "model_learning";
    effective.execution.eval_greedy = false;
  }

  Output out(out_dir, progress);
  if (command == "solve") return cmd_solve(effective, out);
  if (command == "sweep") return cmd_sweep(effective, out);
  if (command == "interrupt") return cmd_interrupt(effective, out);
  return cmd_runs(command, effective, out);
}

}  // namespace avgopt
