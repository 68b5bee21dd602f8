#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "lanegraph/pipeline.hpp"

namespace {

using lanegraph::pipeline::RunContext;

const std::map<std::string, std::function<int(const RunContext&)>>& commands() {
  static const std::map<std::string, std::function<int(const RunContext&)>> table{
      {"generate", lanegraph::pipeline::run_generate},
      {"preprocess", lanegraph::pipeline::run_preprocess},
      {"train", lanegraph::pipeline::run_train},
      {"eval", lanegraph::pipeline::run_eval},
      {"baseline", lanegraph::pipeline::run_baseline},
      {"ablate", lanegraph::pipeline::run_ablate},
      {"plot", lanegraph::pipeline::run_plot},
  };
  return table;
}

const char* description(const std::string& name) {
  if (name == "generate") return "synthesize fleet observations per hex tile";
  if (name == "preprocess") return "align, aggregate and label observations";
  if (name == "train") return "fit the model on the training split";
  if (name == "eval") return "score the model and baselines on held-out tiles";
  if (name == "baseline") return "score the geometric baselines only";
  if (name == "ablate") return "train and score decoder depth variants";
  return "render minimaps as SVG";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lane graph construction from fleet observations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  uint64_t seed = 0;

  for (const auto& [name, fn] : commands()) {
    CLI::App* sub = app.add_subcommand(name, description(name));
    sub->add_option("--config", config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override the config seeds");
    sub->add_option("--out", out_dir, "output directory");
  }

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().at(0);
  RunContext ctx;
  ctx.out_dir = out_dir;
  ctx.log = &std::cout;
  if (active->count("--seed") > 0) ctx.seed = seed;

  try {
    std::ifstream f(config_path);
    ctx.config = lanegraph::pipeline::Json::parse(f);
    return commands().at(active->get_name())(ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
