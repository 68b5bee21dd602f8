#include "lanegraph/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <stdexcept>

#include "lanegraph/baselines.hpp"
#include "lanegraph/metrics.hpp"
#include "lanegraph/model.hpp"
#include "lanegraph/plot.hpp"
#include "lanegraph/record.hpp"

namespace lanegraph::pipeline {

namespace fs = std::filesystem;

namespace {

Json section(const Json& root, const char* name) {
  if (root.is_object() && root.contains(name) && root[name].is_object())
    return root[name];
  return Json::object();
}

void log_line(const RunContext& ctx, const std::string& line) {
  if (ctx.log) *ctx.log << line << "\n";
}

std::string out_path(const RunContext& ctx, const std::string& name) {
  return (fs::path(ctx.out_dir) / name).string();
}

void require_input(const std::string& path, const char* command, const char* producer) {
  if (!fs::exists(path))
    throw std::runtime_error(std::string(command) + ": missing " + path + " (run `lanegraph " +
                             producer + "` first)");
}

void write_text(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

// Manifest of output hashes; merged across commands, no volatile fields.
void update_manifest(const RunContext& ctx, const std::vector<std::string>& names) {
  std::string mpath = out_path(ctx, "manifest.json");
  Json manifest = Json::object();
  if (fs::exists(mpath)) {
    std::ifstream f(mpath);
    try {
      f >> manifest;
    } catch (...) {
      manifest = Json::object();
    }
    if (!manifest.is_object()) manifest = Json::object();
  }
  if (!manifest.contains("files") || !manifest["files"].is_object())
    manifest["files"] = Json::object();
  for (const auto& name : names)
    manifest["files"][name] = fnv1a_file(out_path(ctx, name));
  write_text(mpath, manifest.dump(2) + "\n");
}

baseline::BaselineConfig baseline_config_from_json(const Json& j) {
  baseline::BaselineConfig c;
  c.half_width = j.value("half_width", c.half_width);
  c.match_radius = j.value("match_radius", c.match_radius);
  c.obs_step = j.value("obs_step", c.obs_step);
  c.conn_angle_deg = j.value("conn_angle_deg", c.conn_angle_deg);
  c.conn_range = j.value("conn_range", c.conn_range);
  return c;
}

nn::Targets targets_of(const MinimapRecord& rec) {
  int n = static_cast<int>(rec.centers.size());
  nn::Targets t;
  t.pairs = nn::Mat(n, 4);
  t.labeled.resize(n);
  for (int i = 0; i < n; ++i) {
    const LanePair& lp = rec.gt_pairs[i];
    t.pairs.at(i, 0) = lp.left.x;
    t.pairs.at(i, 1) = lp.left.y;
    t.pairs.at(i, 2) = lp.right.x;
    t.pairs.at(i, 3) = lp.right.y;
    t.labeled[i] = lp.matched ? 1 : 0;
  }
  t.adjacency = nn::Mat(n, n);
  for (const auto& [a, b] : rec.gt_edges) t.adjacency.at(a, b) = 1.0;
  return t;
}

// Pooled metric accumulation per (group, method); group "all" plus the
// record's operational domain, insertion order preserved for output.
class Scoreboard {
 public:
  void add(const std::string& group, const std::string& method,
           const std::vector<LanePair>& pred_pairs, const std::vector<uint8_t>& pred_adj,
           const MinimapRecord& rec, const std::vector<uint8_t>& gt_adj) {
    metrics::GroupStats& g = stats_[group][method];
    g.pairs.add(pred_pairs, rec.gt_pairs);
    g.conn.add(pred_adj, gt_adj, static_cast<int>(rec.centers.size()));
  }

  std::vector<metrics::Row> rows(const std::vector<std::string>& group_order,
                                 const std::vector<std::string>& method_order) const {
    std::vector<metrics::Row> out;
    for (const auto& g : group_order) {
      auto git = stats_.find(g);
      if (git == stats_.end()) continue;
      for (const auto& m : method_order) {
        auto mit = git->second.find(m);
        if (mit == git->second.end()) continue;
        out.push_back(metrics::make_row(g, m, mit->second));
      }
    }
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, metrics::GroupStats>> stats_;
};

std::vector<std::string> tile_groups(const MinimapRecord& rec) {
  return {"all", rec.odd};
}

std::string tile_tag(const MinimapRecord& rec) {
  return "tile_" + std::to_string(rec.tile.q) + "_" + std::to_string(rec.tile.r);
}

// Evaluate the held-out subset with the geometric methods and optionally a
// trained model; returns pooled rows and fills per-minimap rows when asked.
std::vector<metrics::Row> evaluate_records(const RunContext& ctx,
                                           const std::vector<MinimapRecord>& recs,
                                           const nn::Model* model,
                                           std::vector<metrics::Row>* per_minimap) {
  baseline::BaselineConfig bcfg =
      baseline_config_from_json(section(ctx.config, "baseline"));
  int cap = model ? model->config().max_centers : 1 << 30;

  Scoreboard board;
  Scoreboard tiles;
  int used = 0, skipped = 0;
  for (size_t idx = 0; idx < recs.size(); ++idx) {
    if (!is_eval_index(idx)) continue;
    const MinimapRecord& rec = recs[idx];
    int n = static_cast<int>(rec.centers.size());
    if (n < 2 || n > cap) {
      ++skipped;
      continue;
    }
    ++used;
    std::vector<uint8_t> gt_adj = edges_to_adjacency(rec.gt_edges, n);

    auto score = [&](const std::string& method, const std::vector<LanePair>& pairs,
                     const std::vector<uint8_t>& adj) {
      for (const auto& g : tile_groups(rec)) board.add(g, method, pairs, adj, rec, gt_adj);
      if (per_minimap) tiles.add(tile_tag(rec), method, pairs, adj, rec, gt_adj);
    };

    if (model) {
      LaneGraph g = model->predict({rec.polylines, rec.centers});
      score("model", g.pairs, g.adj);
    }
    auto b1 = baseline::fixed_offset_pairs(rec.centers, bcfg);
    score("fixed_offset", b1, baseline::forward_adjacency(b1, bcfg));
    auto b2 = baseline::nearest_point_pairs(rec.centers, rec.polylines, bcfg);
    score("nearest_point", b2, baseline::forward_adjacency(b2, bcfg));
    auto b3 = baseline::perp_intersect_pairs(rec.centers, rec.polylines, bcfg);
    score("perp_intersect", b3, baseline::forward_adjacency(b3, bcfg));
  }
  log_line(ctx, "eval: " + std::to_string(used) + " held-out minimaps scored, " +
                    std::to_string(skipped) + " skipped");

  std::vector<std::string> methods{"model", "fixed_offset", "nearest_point",
                                   "perp_intersect"};
  std::vector<metrics::Row> rows = board.rows({"all", "highway", "nonhighway"}, methods);
  if (per_minimap) {
    std::vector<std::string> tags;
    for (size_t idx = 0; idx < recs.size(); ++idx)
      if (is_eval_index(idx)) tags.push_back(tile_tag(recs[idx]));
    *per_minimap = tiles.rows(tags, methods);
  }
  return rows;
}

std::vector<nn::TrainSample> training_samples(const std::vector<MinimapRecord>& recs,
                                              int cap, int* skipped) {
  std::vector<nn::TrainSample> samples;
  for (size_t idx = 0; idx < recs.size(); ++idx) {
    if (is_eval_index(idx)) continue;
    const MinimapRecord& rec = recs[idx];
    int n = static_cast<int>(rec.centers.size());
    if (n < 2 || n > cap) {
      if (skipped) ++*skipped;
      continue;
    }
    samples.push_back({{rec.polylines, rec.centers}, targets_of(rec)});
  }
  return samples;
}

std::string train_log_csv(const std::vector<nn::EpochStats>& stats) {
  std::string out = "epoch,lr,loss,boundary,connectivity\n";
  char buf[160];
  for (const auto& s : stats) {
    std::snprintf(buf, sizeof(buf), "%d,%.8g,%.8g,%.8g,%.8g\n", s.epoch, s.lr, s.loss,
                  s.boundary, s.connectivity);
    out += buf;
  }
  return out;
}

}  // namespace

synth::GenConfig gen_config_from_json(const Json& j) {
  synth::GenConfig c;
  c.n_minimaps = j.value("n_minimaps", c.n_minimaps);
  c.center_spacing = j.value("center_spacing", c.center_spacing);
  c.w_straight = j.value("w_straight", c.w_straight);
  c.w_curved = j.value("w_curved", c.w_curved);
  c.w_ramp = j.value("w_ramp", c.w_ramp);
  c.w_rural = j.value("w_rural", c.w_rural);
  c.w_tint = j.value("w_tint", c.w_tint);
  c.rural_zero_curv_prob = j.value("rural_zero_curv_prob", c.rural_zero_curv_prob);
  c.seed = j.value("seed", c.seed);
  if (j.contains("noise") && j["noise"].is_object()) {
    const Json& n = j["noise"];
    c.noise.trace_sigma = n.value("trace_sigma", c.noise.trace_sigma);
    c.noise.boundary_sigma = n.value("boundary_sigma", c.noise.boundary_sigma);
    c.noise.dropout = n.value("dropout", c.noise.dropout);
    c.noise.fp_per_100m = n.value("fp_per_100m", c.noise.fp_per_100m);
    c.noise.misalign_deg = n.value("misalign_deg", c.noise.misalign_deg);
    c.noise.misalign_m = n.value("misalign_m", c.noise.misalign_m);
    c.noise.traces_min = n.value("traces_min", c.noise.traces_min);
    c.noise.traces_max = n.value("traces_max", c.noise.traces_max);
  }
  return c;
}

prep::PreprocessConfig prep_config_from_json(const Json& j) {
  prep::PreprocessConfig c;
  c.icp_gate = j.value("icp_gate", c.icp_gate);
  c.icp_tol = j.value("icp_tol", c.icp_tol);
  c.icp_max_iter = j.value("icp_max_iter", c.icp_max_iter);
  c.icp_resample = j.value("icp_resample", c.icp_resample);
  c.align_rounds = j.value("align_rounds", c.align_rounds);
  c.ridge_iters = j.value("ridge_iters", c.ridge_iters);
  c.ridge_angle_deg = j.value("ridge_angle_deg", c.ridge_angle_deg);
  c.weld_radius = j.value("weld_radius", c.weld_radius);
  c.min_support = j.value("min_support", c.min_support);
  c.chain_gap = j.value("chain_gap", c.chain_gap);
  c.chain_angle_deg = j.value("chain_angle_deg", c.chain_angle_deg);
  c.min_chain = j.value("min_chain", c.min_chain);
  c.agg_resample = j.value("agg_resample", c.agg_resample);
  c.agg_lateral = j.value("agg_lateral", c.agg_lateral);
  c.agg_forward = j.value("agg_forward", c.agg_forward);
  c.ridge_resample = j.value("ridge_resample", c.ridge_resample);
  c.ridge_lateral = j.value("ridge_lateral", c.ridge_lateral);
  c.ridge_forward = j.value("ridge_forward", c.ridge_forward);
  c.rep_min_len = j.value("rep_min_len", c.rep_min_len);
  c.center_spacing = j.value("center_spacing", c.center_spacing);
  c.match_radius = j.value("match_radius", c.match_radius);
  c.label_radius = j.value("label_radius", c.label_radius);
  c.succ_gap_factor = j.value("succ_gap_factor", c.succ_gap_factor);
  c.conn_slack_factor = j.value("conn_slack_factor", c.conn_slack_factor);
  c.out_trace_pts = j.value("out_trace_pts", c.out_trace_pts);
  c.out_boundary_pts = j.value("out_boundary_pts", c.out_boundary_pts);
  return c;
}

nn::TrainConfig train_config_from_json(const Json& j) {
  nn::TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.lr_decay_epoch = j.value("lr_decay_epoch", c.lr_decay_epoch);
  c.alpha = j.value("alpha", c.alpha);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.augment_rotations = j.value("augment_rotations", c.augment_rotations);
  c.seed = j.value("seed", c.seed);
  return c;
}

bool is_eval_index(size_t index) { return index % 20 == 0; }

std::string fnv1a_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot hash " + path);
  uint64_t h = 14695981039346656037ULL;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!f) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

int run_generate(const RunContext& ctx) {
  synth::GenConfig cfg = gen_config_from_json(section(ctx.config, "generate"));
  if (ctx.seed) cfg.seed = *ctx.seed;
  std::vector<MinimapRecord> recs = synth::gen_dataset(cfg);
  fs::create_directories(ctx.out_dir);
  io::save_records(out_path(ctx, "generated.jsonl"), recs);
  log_line(ctx, "generate: wrote " + std::to_string(recs.size()) + " minimaps (seed " +
                    std::to_string(cfg.seed) + ")");
  update_manifest(ctx, {"generated.jsonl"});
  return 0;
}

int run_preprocess(const RunContext& ctx) {
  std::string in = out_path(ctx, "generated.jsonl");
  require_input(in, "preprocess", "generate");
  prep::PreprocessConfig cfg = prep_config_from_json(section(ctx.config, "preprocess"));
  std::vector<MinimapRecord> recs = io::load_records(in);
  for (size_t i = 0; i < recs.size(); ++i) {
    recs[i] = prep::preprocess_minimap(recs[i], cfg);
    if ((i + 1) % 50 == 0)
      log_line(ctx, "preprocess: " + std::to_string(i + 1) + "/" +
                        std::to_string(recs.size()));
  }
  io::save_records(out_path(ctx, "preprocessed.jsonl"), recs);
  log_line(ctx, "preprocess: wrote " + std::to_string(recs.size()) + " minimaps");
  update_manifest(ctx, {"preprocessed.jsonl"});
  return 0;
}

int run_train(const RunContext& ctx) {
  std::string in = out_path(ctx, "preprocessed.jsonl");
  require_input(in, "train", "preprocess");
  nn::ModelConfig mcfg = nn::config_from_json(section(ctx.config, "model").dump());
  nn::TrainConfig tcfg = train_config_from_json(section(ctx.config, "train"));
  if (ctx.seed) tcfg.seed = *ctx.seed;

  std::vector<MinimapRecord> recs = io::load_records(in);
  int skipped = 0;
  std::vector<nn::TrainSample> samples = training_samples(recs, mcfg.max_centers, &skipped);
  if (samples.empty()) throw std::runtime_error("train: no usable training records in " + in);
  log_line(ctx, "train: " + std::to_string(samples.size()) + " samples (" +
                    std::to_string(skipped) + " skipped), seed " +
                    std::to_string(tcfg.seed));

  nn::Model model(mcfg, tcfg.seed);
  log_line(ctx, "train: " + std::to_string(model.count_parameters()) + " parameters");
  std::vector<nn::EpochStats> stats = nn::train_model(model, samples, tcfg, ctx.log);
  nn::save_checkpoint(out_path(ctx, "model.ckpt"), model);
  write_text(out_path(ctx, "train_log.csv"), train_log_csv(stats));
  update_manifest(ctx, {"model.ckpt", "train_log.csv"});
  return 0;
}

int run_eval(const RunContext& ctx) {
  std::string in = out_path(ctx, "preprocessed.jsonl");
  require_input(in, "eval", "preprocess");
  std::string ckpt = out_path(ctx, "model.ckpt");
  require_input(ckpt, "eval", "train");
  nn::Model model = nn::load_checkpoint(ckpt, nullptr);
  std::vector<MinimapRecord> recs = io::load_records(in);

  bool per_map = section(ctx.config, "eval").value("per_minimap", false);
  std::vector<metrics::Row> tile_rows;
  std::vector<metrics::Row> rows =
      evaluate_records(ctx, recs, &model, per_map ? &tile_rows : nullptr);
  write_text(out_path(ctx, "metrics.csv"), metrics::to_csv(rows));
  write_text(out_path(ctx, "metrics.md"), metrics::to_markdown(rows));
  log_line(ctx, metrics::to_markdown(rows));
  std::vector<std::string> outputs{"metrics.csv", "metrics.md"};
  if (per_map) {
    write_text(out_path(ctx, "metrics_per_minimap.csv"), metrics::to_csv(tile_rows));
    outputs.push_back("metrics_per_minimap.csv");
  }
  update_manifest(ctx, outputs);
  return 0;
}

int run_baseline(const RunContext& ctx) {
  std::string in = out_path(ctx, "preprocessed.jsonl");
  require_input(in, "baseline", "preprocess");
  std::vector<MinimapRecord> recs = io::load_records(in);
  std::vector<metrics::Row> rows = evaluate_records(ctx, recs, nullptr, nullptr);
  write_text(out_path(ctx, "baseline_metrics.csv"), metrics::to_csv(rows));
  write_text(out_path(ctx, "baseline_metrics.md"), metrics::to_markdown(rows));
  log_line(ctx, metrics::to_markdown(rows));
  update_manifest(ctx, {"baseline_metrics.csv", "baseline_metrics.md"});
  return 0;
}

int run_ablate(const RunContext& ctx) {
  std::string in = out_path(ctx, "preprocessed.jsonl");
  require_input(in, "ablate", "preprocess");
  Json ab = section(ctx.config, "ablate");
  std::vector<int> depths = ab.value("dec_layers", std::vector<int>{1, 2, 4, 6});
  nn::ModelConfig base = nn::config_from_json(section(ctx.config, "model").dump());
  nn::TrainConfig tcfg = train_config_from_json(section(ctx.config, "train"));
  if (ctx.seed) tcfg.seed = *ctx.seed;

  std::vector<MinimapRecord> recs = io::load_records(in);
  std::vector<nn::TrainSample> samples = training_samples(recs, base.max_centers, nullptr);
  if (samples.empty()) throw std::runtime_error("ablate: no usable training records in " + in);

  std::vector<metrics::Row> rows;
  std::vector<std::string> outputs;
  for (int d : depths) {
    nn::ModelConfig mcfg = base;
    mcfg.dec_layers = d;
    log_line(ctx, "ablate: decoder depth " + std::to_string(d));
    nn::Model model(mcfg, tcfg.seed);
    nn::train_model(model, samples, tcfg, ctx.log);
    std::string name = "ablate_dec" + std::to_string(d) + ".ckpt";
    nn::save_checkpoint(out_path(ctx, name), model);
    outputs.push_back(name);
    for (metrics::Row& r : evaluate_records(ctx, recs, &model, nullptr)) {
      if (r.method != "model") continue;  // geometric rows repeat per depth
      r.method = "model_dec" + std::to_string(d);
      rows.push_back(std::move(r));
    }
  }
  write_text(out_path(ctx, "ablation.csv"), metrics::to_csv(rows));
  write_text(out_path(ctx, "ablation.md"), metrics::to_markdown(rows));
  log_line(ctx, metrics::to_markdown(rows));
  outputs.push_back("ablation.csv");
  outputs.push_back("ablation.md");
  update_manifest(ctx, outputs);
  return 0;
}

int run_plot(const RunContext& ctx) {
  Json pc = section(ctx.config, "plot");
  std::string name = pc.value("input", std::string("preprocessed.jsonl"));
  std::string in = out_path(ctx, name);
  require_input(in, "plot", name == "generated.jsonl" ? "generate" : "preprocess");
  std::vector<MinimapRecord> recs = io::load_records(in);
  size_t count = std::min(recs.size(), static_cast<size_t>(pc.value("count", 8)));

  std::unique_ptr<nn::Model> model;
  if (pc.value("with_model", false)) {
    std::string ckpt = out_path(ctx, "model.ckpt");
    require_input(ckpt, "plot", "train");
    model = std::make_unique<nn::Model>(nn::load_checkpoint(ckpt, nullptr));
  }

  plot::PlotOptions opts;
  opts.draw_gt = pc.value("draw_gt", true);
  std::vector<std::string> outputs;
  for (size_t i = 0; i < count; ++i) {
    const MinimapRecord& rec = recs[i];
    std::string svg;
    int n = static_cast<int>(rec.centers.size());
    if (model && n > 0 && n <= model->config().max_centers) {
      LaneGraph g = model->predict({rec.polylines, rec.centers});
      svg = plot::render_svg(rec, &g, opts);
    } else {
      svg = plot::render_svg(rec, nullptr, opts);
    }
    std::string fname = "plots/" + rec.stage + "_" + tile_tag(rec) + ".svg";
    write_text(out_path(ctx, fname), svg);
    outputs.push_back(fname);
  }
  log_line(ctx, "plot: wrote " + std::to_string(count) + " files under " +
                    out_path(ctx, "plots"));
  update_manifest(ctx, outputs);
  return 0;
}

}  // namespace lanegraph::pipeline
