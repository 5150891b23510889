#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dilemma/experiment_runner.hpp"
#include "dilemma/report.hpp"

namespace fs = std::filesystem;
using namespace dilemma;

namespace {

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kTransport = 3 };

struct RunFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> treatments;
  std::optional<int> replications;
  std::optional<int> concurrency;
  std::optional<bool> strict_paper;
};

struct AnalysisFlags {
  std::string covariance = "hc1";
  std::string reference_model;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", f.out, "transcript directory (overrides config output_dir)");
  cmd->add_option("--seed", f.seed, "base seed (overrides config base_seed)");
  cmd->add_option("--treatment", f.treatments, "restrict to treatment(s)");
  cmd->add_option("--replications", f.replications, "replications per cell")->check(CLI::PositiveNumber);
  cmd->add_option("--concurrency", f.concurrency, "games in flight")->check(CLI::PositiveNumber);
  cmd->add_flag("--strict-paper,!--no-strict-paper", f.strict_paper,
                "require the published game parameters");
}

void add_analysis_flags(CLI::App* cmd, AnalysisFlags& f) {
  cmd->add_option("--covariance", f.covariance, "robust covariance for the regression")
      ->check(CLI::IsMember({"hc0", "hc1", "hc2", "hc3"}, CLI::ignore_case));
  cmd->add_option("--reference-model", f.reference_model, "reference model for fixed effects");
}

RegressionSpec regression_spec(const AnalysisFlags& f) {
  RegressionSpec s;
  s.covariance = parse_covariance(f.covariance);
  if (!f.reference_model.empty()) s.reference_model = f.reference_model;
  return s;
}

ExperimentPlan load_with_overrides(const RunFlags& f) {
  auto plan = load_plan(f.config);
  if (!f.out.empty()) plan.output_dir = f.out;
  if (f.seed) plan.base_seed = *f.seed;
  if (!f.treatments.empty()) {
    plan.treatments.clear();
    for (const auto& t : f.treatments) plan.treatments.push_back(parse_treatment(t));
  }
  if (f.replications) plan.replications = *f.replications;
  if (f.concurrency) plan.concurrency_limit = *f.concurrency;
  if (f.strict_paper) plan.strict_paper = *f.strict_paper;
  validate(plan);
  return plan;
}

void print_summary(const ExecuteSummary& s, const fs::path& dir) {
  std::cout << "games: " << s.total << "  new complete: " << s.completed
            << "  new aborted: " << s.aborted << "  already present: " << s.skipped << "\n"
            << "transcripts: " << dir.string() << "\n";
}

int cmd_simulate(const RunFlags& f) {
  const auto plan = load_with_overrides(f);
  for (const auto& p : plan.providers) {
    if (!p.scripted()) {
      std::cerr << "simulate is offline only; provider '" << p.id
                << "' names a remote model (use `run`)\n";
      return kValidation;
    }
  }
  print_summary(execute(plan), plan.output_dir);
  return kOk;
}

int cmd_run(const RunFlags& f) {
  const auto plan = load_with_overrides(f);
  for (const auto& p : plan.providers) {
    if (p.scripted()) continue;
    const auto& spec = std::get<ProviderSpec>(p.agents);
    const char* v = std::getenv(spec.auth_env.c_str());
    if (v == nullptr || *v == '\0') {
      std::cerr << "environment variable " << spec.auth_env << " is not set (provider '" << p.id
                << "')\n";
      return kValidation;
    }
  }
  Gateway gateway;
  AuditLog audit(plan.output_dir / "audit" / "completions.jsonl");
  const auto summary = execute(plan, {&gateway, &audit, std::nullopt});
  print_summary(summary, plan.output_dir);
  std::cout << "requests: " << gateway.request_count() << "\n";
  if (summary.transport_failures > 0) {
    std::cerr << summary.transport_failures << " game(s) aborted on transport errors\n";
    return kTransport;
  }
  return kOk;
}

template <typename F>
void write_with(const fs::path& path, F&& fill) {
  std::ostringstream out;
  fill(out);
  write_text_file(path, out.str());
}

int cmd_code(const std::string& corpus_dir, const std::string& out_dir) {
  const auto coded = code_corpus(load_corpus(corpus_dir));
  const fs::path out(out_dir);
  fs::create_directories(out);
  write_with(out / "outcomes.csv", [&](auto& s) { write_outcomes_csv(s, coded.outcomes); });
  write_with(out / "reasoning_labels.csv", [&](auto& s) { write_label_csv(s, coded.reasoning); });
  write_with(out / "message_labels.csv", [&](auto& s) { write_label_csv(s, coded.messages); });
  write_with(out / "excluded.txt", [&](auto& s) {
    for (const auto& r : coded.rejected) s << r << '\n';
  });
  std::cout << "coded " << coded.outcomes.size() << " game(s), " << coded.reasoning.size()
            << " reasoning entries, " << coded.messages.size() << " public messages; excluded "
            << coded.rejected.size() << "\n";
  return kOk;
}

int cmd_stats(const std::string& input, const std::string& out_dir, const AnalysisFlags& a) {
  std::ifstream in(input, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + input);
  const auto outcomes = read_outcomes_csv(in);
  write_exhibits(out_dir, outcome_exhibits(outcomes, regression_spec(a)), "Outcome statistics");
  std::cout << "wrote tables for " << outcomes.size() << " game(s) to " << out_dir << "\n";
  return kOk;
}

int cmd_report(const std::string& corpus_dir, const std::string& out_dir, const AnalysisFlags& a) {
  const auto coded = code_corpus(load_corpus(corpus_dir));
  if (coded.outcomes.empty()) {
    throw EmptyReportError("corpus " + corpus_dir + " has no completed games");
  }
  write_exhibits(out_dir, corpus_exhibits(coded, regression_spec(a)), "Corpus report");
  std::cout << "report for " << coded.outcomes.size() << " game(s) written to " << out_dir << "\n";
  return kOk;
}

int cmd_replicate(const std::string& out_dir, const AnalysisFlags& a) {
  const auto exhibits = replication_exhibits(regression_spec(a));
  write_exhibits(out_dir, exhibits, "Replication of published exhibits");
  write_with(fs::path(out_dir) / "replication_dataset.csv",
             [&](auto& s) { write_outcomes_csv(s, paper_replication_dataset()); });
  int failed = 0;
  for (const auto& c : replication_checks(exhibits)) {
    if (!c.ok()) {
      ++failed;
      std::cerr << "MISMATCH " << c.describe() << "\n";
    }
  }
  if (failed) {
    std::cerr << failed << " cell(s) differ from the published values\n";
    return kValidation;
  }
  std::cout << "all published cells reproduced; tables in " << out_dir << "\n";
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Repeated security dilemma experiments with LLM and scripted agents"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dilemma 1.0");

  RunFlags sim_flags, run_flags;
  auto* simulate = app.add_subcommand("simulate", "play scripted-agent games offline");
  add_run_flags(simulate, sim_flags);
  auto* run = app.add_subcommand("run", "play games against remote models (credentials from env)");
  add_run_flags(run, run_flags);

  std::string corpus, out, input;
  AnalysisFlags analysis;
  auto* code = app.add_subcommand("code", "code a transcript directory into outcome and label tables");
  code->add_option("--corpus", corpus, "transcript directory")->required()->check(CLI::ExistingDirectory);
  code->add_option("--out", out, "output directory")->required();

  auto* stats = app.add_subcommand("stats", "tables and regression from an outcome CSV");
  stats->add_option("--input", input, "outcomes.csv from `code`")->required()->check(CLI::ExistingFile);
  stats->add_option("--out", out, "output directory")->required();
  add_analysis_flags(stats, analysis);

  auto* replicate = app.add_subcommand("replicate-paper", "rebuild the published exhibits offline");
  replicate->add_option("--out", out, "output directory")->required();
  add_analysis_flags(replicate, analysis);

  auto* report = app.add_subcommand("report", "tables and figures for a transcript directory");
  report->add_option("--corpus", corpus, "transcript directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out, "output directory")->required();
  add_analysis_flags(report, analysis);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim_flags);
    if (*run) return cmd_run(run_flags);
    if (*code) return cmd_code(corpus, out);
    if (*stats) return cmd_stats(input, out, analysis);
    if (*replicate) return cmd_replicate(out, analysis);
    if (*report) return cmd_report(corpus, out, analysis);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kTransport;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kUsage;
}
