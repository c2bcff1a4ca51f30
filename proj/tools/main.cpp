#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "topictrend/pipeline.hpp"

namespace tp = topictrend::pipeline;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string format = "both";
  std::vector<std::string> sections;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("-c,--config", o.config, "Pipeline configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the configured seed");
  cmd->add_option("-o,--out", o.out, "Override the output directory");
}

tp::PipelineConfig configure(const Options& o) {
  auto c = tp::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output = std::filesystem::absolute(*o.out);
  tp::validate(c);
  return c;
}

void print_manifest(const tp::Manifest& m, const std::string& stage) {
  for (const auto& a : m.artifacts)
    if (stage.empty() || a.stage == stage) std::cout << a.stage << '\t' << a.path << '\t' << a.sha256 << '\n';
  for (const auto& w : m.warnings)
    if (stage.empty() || w.rfind(stage + ": ", 0) == 0) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic prevalence trends: corpus ingestion, topic models, time-series and citation analyses"};
  app.require_subcommand(1);
  Options opts;

  std::map<std::string, CLI::App*> commands;
  for (const auto& stage : tp::stage_order()) {
    auto* cmd = app.add_subcommand(stage, "Run the '" + stage + "' stage");
    add_common(cmd, opts);
    commands[stage] = cmd;
  }
  auto* report = commands.at("report");
  report->add_option("--format", opts.format, "tables, plotdata or both")
      ->check(CLI::IsMember({"tables", "plotdata", "both"}));
  report->add_option("--section", opts.sections, "Restrict to these sections");
  auto* run = app.add_subcommand("run", "Run every configured stage in order");
  add_common(run, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  tp::PipelineConfig config;
  try {
    config = configure(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (run->parsed()) {
      print_manifest(tp::run(config), "");
      return 0;
    }
    for (const auto& [stage, cmd] : commands) {
      if (!cmd->parsed()) continue;
      if (stage == "report" && (opts.format != "both" || !opts.sections.empty())) {
        const auto dir = config.output.is_absolute() ? config.output : config.base_dir / config.output;
        if (opts.format != "plotdata")
          for (const auto& p : tp::emit_report(dir, tp::ReportFormat::Tables, opts.sections)) std::cout << p << '\n';
        if (opts.format != "tables")
          for (const auto& p : tp::emit_report(dir, tp::ReportFormat::PlotData, opts.sections)) std::cout << p << '\n';
        return 0;
      }
      print_manifest(tp::run_stage(config, stage), stage);
    }
  } catch (const tp::StageError& e) {
    std::cerr << "error: stage " << e.what() << '\n';
    return 2;
  } catch (const topictrend::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
