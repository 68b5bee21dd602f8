#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "lanegraph/preprocess.hpp"
#include "lanegraph/synthgen.hpp"
#include "lanegraph/train.hpp"

namespace lanegraph::pipeline {

using Json = nlohmann::json;

// Shared state for one CLI invocation. `seed` overrides the seeds found in
// the config; `log` receives one progress line per major step.
struct RunContext {
  Json config;
  std::string out_dir = "out";
  std::optional<uint64_t> seed;
  std::ostream* log = nullptr;
};

// Config section parsers; unknown fields are ignored, missing fields keep
// their defaults.
synth::GenConfig gen_config_from_json(const Json& j);
prep::PreprocessConfig prep_config_from_json(const Json& j);
nn::TrainConfig train_config_from_json(const Json& j);

// Deterministic record-index split: every 20th record is held out.
bool is_eval_index(size_t index);

// FNV-1a 64 over the file's bytes, as 16 hex digits.
std::string fnv1a_file(const std::string& path);

// Subcommand entry points. Each returns a process exit code and refreshes
// the output manifest for the files it wrote.
int run_generate(const RunContext& ctx);
int run_preprocess(const RunContext& ctx);
int run_train(const RunContext& ctx);
int run_eval(const RunContext& ctx);
int run_baseline(const RunContext& ctx);
int run_ablate(const RunContext& ctx);
int run_plot(const RunContext& ctx);

}  // namespace lanegraph::pipeline
