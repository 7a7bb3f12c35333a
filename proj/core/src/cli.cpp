#include "dreamhone/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "dreamhone/checkpoint.hpp"
#include "dreamhone/config_io.hpp"
#include "dreamhone/http_service.hpp"
#include "dreamhone/image_io.hpp"
#include "dreamhone/metrics.hpp"
#include "dreamhone/painterly.hpp"
#include "dreamhone/run_store.hpp"
#include "dreamhone/session_manager.hpp"
#include "dreamhone/tiling.hpp"

namespace dreamhone {

namespace fs = std::filesystem;

namespace {

struct DreamFlags {
  std::string layer = DreamConfig{}.layer_name;
  std::string mode = loss_mode_name(DreamConfig{}.mode);
  double step = DreamConfig{}.step_size;
  std::size_t iterations = DreamConfig{}.iterations;
  std::size_t patch_size = DreamConfig{}.patch_size;
  std::size_t jitter = DreamConfig{}.jitter;
  bool no_clamp = false;
  std::uint64_t seed = DreamConfig{}.seed;
  double blend = DreamConfig{}.guide_blend;
  std::string schedule_path;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--layer", layer, "Layer whose features are matched")->capture_default_str();
    cmd.add_option("--mode", mode, "Patch loss: dot_max or dist_min")
        ->check(CLI::IsMember({"dot_max", "dist_min"}))
        ->capture_default_str();
    cmd.add_option("--step", step, "Step size")->capture_default_str();
    cmd.add_option("--iterations", iterations, "Iterations")->capture_default_str();
    cmd.add_option("--patch-size", patch_size, "Patch side in feature cells")->capture_default_str();
    cmd.add_option("--jitter", jitter, "Random wraparound shift in pixels")->capture_default_str();
    cmd.add_flag("--no-clamp", no_clamp, "Do not clip pixels to [0,1]");
    cmd.add_option("--seed", seed, "Random seed")->capture_default_str();
    cmd.add_option("--blend", blend, "Guided vs unguided loss weight")->capture_default_str();
    cmd.add_option("--schedule", schedule_path,
                   "JSON list of phases; the flags above supply defaults for missing fields")
        ->check(CLI::ExistingFile);
  }

  DreamConfig config() const {
    DreamConfig c;
    c.layer_name = layer;
    c.mode = parse_loss_mode(mode);
    c.step_size = step;
    c.iterations = iterations;
    c.patch_size = patch_size;
    c.jitter = jitter;
    c.clamp = !no_clamp;
    c.seed = seed;
    c.guide_blend = blend;
    return c;
  }

  Schedule schedule() const {
    if (!schedule_path.empty()) return load_schedule(schedule_path, config());
    return Schedule::single(config());
  }
};

std::vector<std::size_t> parse_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  if (out.empty()) throw InputError("empty list '" + text + "'");
  return out;
}

/// PNG files under `dir`, sorted by relative path.
std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no PNG files in " + dir.string());
  return out;
}

CorpusEncodings corpus_from_dir(const Network& net, const fs::path& dir, const std::string& layer) {
  std::vector<Tensor> images;
  std::vector<std::string> ids;
  for (const auto& p : png_files(dir)) {
    images.push_back(load_png(p));
    ids.push_back(fs::relative(p, dir).generic_string());
  }
  return encode_corpus(net, images, layer, dir.string(), std::move(ids));
}

std::optional<Tensor> optional_png(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_png(path);
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Guided feature-blending dream engine", "dreamhone"};
  app.require_subcommand(1);

  // tile
  std::string corpus_dir, manifest_path;
  std::uint64_t tile_seed_value = 0;
  std::string levels = "4,10,40";
  TilingConfig tiling;
  auto* tile = app.add_subcommand("tile", "Cut a category corpus into a tile manifest");
  tile->add_option("--corpus", corpus_dir, "Directory with one sub-directory of PNGs per category")->required();
  tile->add_option("--out", manifest_path, "Manifest file (JSON lines)")->required();
  tile->add_option("--seed", tile_seed_value, "Tiling seed")->capture_default_str();
  tile->add_option("--tiles-per-level", levels, "Comma-separated tile counts, coarsest level first")
      ->capture_default_str();
  tile->add_option("--min-tile", tiling.min_tile, "Smallest tile side in pixels")->capture_default_str();
  tile->add_option("--tile-size", tiling.tile_out_size, "Side of the resampled tiles")->capture_default_str();

  // train
  std::string train_manifest, train_corpus, train_out, train_init;
  TrainConfig train_cfg;
  double stop_at = 0.0;
  std::uint64_t init_seed = 0;
  auto* train = app.add_subcommand("train", "Train the style classifier on a tile manifest");
  train->add_option("--manifest", train_manifest, "Manifest written by `tile`")->required()->check(CLI::ExistingFile);
  train->add_option("--corpus", train_corpus, "Corpus directory the manifest refers to")->required();
  train->add_option("--out", train_out, "Checkpoint to write")->required();
  train->add_option("--init", train_init, "Start from this checkpoint instead of fresh weights");
  train->add_option("--init-seed", init_seed, "Weight initialization seed")->capture_default_str();
  train->add_option("--epochs", train_cfg.epochs, "Epochs")->capture_default_str();
  train->add_option("--lr", train_cfg.lr, "Learning rate")->capture_default_str();
  train->add_option("--seed", train_cfg.seed, "Shuffling seed")->capture_default_str();
  train->add_option("--batch-size", train_cfg.batch_size, "Mini-batch size")->capture_default_str();
  train->add_option("--holdout", train_cfg.holdout_fraction, "Held-out share per category")->capture_default_str();
  train->add_option("--stop-at", stop_at, "Stop once holdout accuracy reaches this value (0 disables)");

  // dream
  std::string net_path, source_path, guide_path, out_path, csv_path, data_dir;
  bool record = false;
  DreamFlags dream_flags;
  auto* dream = app.add_subcommand("dream", "Run a guided dream and write the final image and trajectory");
  dream->add_option("--net", net_path, "Network checkpoint")->required()->check(CLI::ExistingFile);
  dream->add_option("--source", source_path, "Source image (PNG)")->required()->check(CLI::ExistingFile);
  dream->add_option("--guide", guide_path, "Guide image (PNG)")->check(CLI::ExistingFile);
  dream->add_option("--out", out_path, "Output PNG")->required();
  dream->add_option("--csv", csv_path, "Trajectory CSV");
  dream->add_flag("--record", record, "Also store the run under the data directory");
  dream->add_option("--data-dir", data_dir, "Run store root (default: $DREAMHONE_DATA_DIR)");
  dream_flags.add_to(*dream);

  // paint
  std::size_t rounds = 1;
  PaintConfig paint_cfg;
  std::string orientation = "gradient";
  DreamFlags paint_dream;
  auto* paint = app.add_subcommand("paint", "Alternate dream passes with painterly stroke passes");
  paint->add_option("--net", net_path, "Network checkpoint")->required()->check(CLI::ExistingFile);
  paint->add_option("--source", source_path, "Source image (PNG)")->required()->check(CLI::ExistingFile);
  paint->add_option("--guide", guide_path, "Guide image (PNG)")->check(CLI::ExistingFile);
  paint->add_option("--out", out_path, "Output PNG")->required();
  paint->add_option("--rounds", rounds, "Dream/paint rounds")->capture_default_str();
  paint->add_option("--density", paint_cfg.stroke_density, "Strokes per 1000 pixels")->capture_default_str();
  paint->add_option("--opacity", paint_cfg.opacity, "Stroke opacity")->capture_default_str();
  paint->add_option("--orientation", orientation, "gradient or fixed")
      ->check(CLI::IsMember({"gradient", "fixed"}))
      ->capture_default_str();
  paint->add_option("--angle", paint_cfg.fixed_angle, "Stroke angle in radians for fixed orientation");
  paint->add_option("--paint-seed", paint_cfg.seed, "Stroke placement seed")->capture_default_str();
  paint_dream.add_to(*paint);

  // metrics
  std::string image_path, inspiring_dir, genre_dir, metrics_layer = DreamConfig{}.layer_name, json_out;
  std::string novelty_mode = "min";
  std::string format = "table";
  auto* metrics = app.add_subcommand("metrics", "Novelty, value and typicality of an image");
  metrics->add_option("--net", net_path, "Network checkpoint")->required()->check(CLI::ExistingFile);
  metrics->add_option("--image", image_path, "Image to evaluate")->required()->check(CLI::ExistingFile);
  metrics->add_option("--inspiring", inspiring_dir, "Directory of inspiring-set PNGs")->required();
  metrics->add_option("--genre", genre_dir, "Directory of genre PNGs (defaults to the inspiring set)");
  metrics->add_option("--layer", metrics_layer, "Encoding layer")->capture_default_str();
  metrics->add_option("--novelty", novelty_mode, "min or mean distance")
      ->check(CLI::IsMember({"min", "mean"}))
      ->capture_default_str();
  metrics->add_option("--format", format, "Standard output format: table or json")
      ->check(CLI::IsMember({"table", "json"}))
      ->capture_default_str();
  metrics->add_option("--out", json_out, "Write the JSON report here");

  // serve
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Start the live session service");
  serve->add_option("--net", net_path, "Network checkpoint")->required()->check(CLI::ExistingFile);
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--data-dir", data_dir, "Run store root (default: $DREAMHONE_DATA_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* scope = &app;
    for (auto* sub : app.get_subcommands()) scope = sub;
    err << scope->help();
    return 2;
  }

  auto store_root = [&] { return data_dir.empty() ? RunStore::default_root() : fs::path(data_dir); };

  try {
    if (*tile) {
      tiling.tiles_per_level = parse_list(levels);
      const Manifest m = build_manifest(corpus_dir, tiling, tile_seed_value);
      write_manifest(m, manifest_path);
      out << "wrote " << m.records.size() << " tiles over " << m.categories.size() << " categories to "
          << manifest_path << '\n';
    } else if (*train) {
      const Manifest m = read_manifest(train_manifest);
      Network net = train_init.empty()
                        ? Network::reference(m.categories.size(), init_seed, {3, m.tile_out_h, m.tile_out_w})
                        : load_checkpoint(train_init);
      if (stop_at > 0.0) train_cfg.stop_at_holdout_accuracy = stop_at;
      const LabeledSet data = tile_dataset(m, fs::path(train_corpus));
      const TrainResult r = train_classifier(std::move(net), data, train_cfg, [&](const EpochStats& s) {
        out << "epoch " << s.epoch << " loss " << s.train_loss << " train_acc " << s.train_accuracy
            << " holdout_acc " << s.holdout_accuracy << std::endl;
      });
      save_checkpoint(r.net, train_out);
    } else if (*dream) {
      const Network net = load_checkpoint(net_path);
      const Tensor source = load_png(source_path);
      const auto guide = optional_png(guide_path);
      const Schedule schedule = dream_flags.schedule();
      const std::string created = utc_timestamp();
      const DreamResult r = run_dream(net, source, guide, schedule);
      save_png(r.canvas, out_path);
      auto rows = r.trajectory;
      rows.push_back({schedule.total_iterations(), r.final_loss, r.final_phase});
      if (!csv_path.empty()) write_file(csv_path, trajectory_to_csv(rows));
      if (record) {
        RunStore store(store_root());
        std::map<std::string, std::string> inputs{{"source", encode_png(source)}};
        if (guide) inputs["guide"] = encode_png(*guide);
        const RunRecord rec = store.save(schedule, inputs, r.canvas, rows, created);
        out << "recorded " << rec.run_id << '\n';
      }
      out << "final loss " << format_double(r.final_loss) << '\n';
    } else if (*paint) {
      const Network net = load_checkpoint(net_path);
      const Tensor source = load_png(source_path);
      const auto guide = optional_png(guide_path);
      paint_cfg.orientation_source =
          orientation == "fixed" ? OrientationSource::Fixed : OrientationSource::ImageGradient;
      const Schedule schedule = paint_dream.schedule();
      const Tensor result = alternate_passes(net, source, guide, schedule, paint_cfg, rounds);
      save_png(result, out_path);
    } else if (*metrics) {
      const Network net = load_checkpoint(net_path);
      const Tensor image = load_png(image_path);
      const CorpusEncodings inspiring = corpus_from_dir(net, inspiring_dir, metrics_layer);
      const CorpusEncodings genre = genre_dir.empty() ? inspiring : corpus_from_dir(net, genre_dir, metrics_layer);
      const MetricsReport report = evaluate_metrics(net, image, inspiring, genre,
                                                    novelty_mode == "mean" ? NoveltyMode::Mean : NoveltyMode::Min);
      const std::string json = metrics_report_to_json(report);
      if (!json_out.empty()) write_file(json_out, json + "\n");
      out << (format == "json" ? json + "\n" : metrics_report_table(report));
    } else if (*serve) {
      RunStore store(store_root());
      SessionManager sessions(load_checkpoint(net_path), &store);
      HttpService service(sessions, &store);
      out << "serving on http://" << host << ':' << port << " (runs in " << store.root().string() << ")"
          << std::endl;
      if (!service.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cli_dispatch(int argc, const char* const* argv) { return cli_dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace dreamhone
