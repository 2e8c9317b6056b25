// curio: train / eval / replay / dtw-oracle

#include "curio/harness.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

curio::RunConfig load_run_config(const std::string& path, const std::string& scene, std::optional<std::uint64_t> seed) {
  curio::RunConfig cfg = path.empty() ? curio::RunConfig{} : curio::load_config(path);
  if (!scene.empty()) cfg.scene = curio::apply_config_text(cfg, curio::read_text_file(scene), "scene.").scene;
  if (seed) cfg.seed = *seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curiosity-driven quadrotor flight: train, evaluate, replay, audit DTW"};
  app.require_subcommand(1);

  std::string config_path, scene_path, checkpoint_path, out_dir = ".";
  std::vector<double> noise{0.0};
  int trials = 100;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  auto* train = app.add_subcommand("train", "train a policy");
  train->add_option("--config", config_path, "run configuration file")->check(CLI::ExistingFile);
  train->add_option("--scene", scene_path, "scene block overriding the config")->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "master seed");
  train->add_option("--out", out_dir, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint under attitude noise");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval->add_option("--scene", scene_path, "scene file (defaults to the training scene)")->check(CLI::ExistingFile);
  eval->add_option("--noise-deg", noise, "attitude noise std in degrees (repeatable)")->delimiter(',');
  eval->add_option("--trials", trials, "episodes per noise level")->check(CLI::NonNegativeNumber);
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--out", out_dir, "output directory");

  auto* replay = app.add_subcommand("replay", "write one deterministic episode as a CSV trajectory");
  replay->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required()->check(CLI::ExistingFile);
  replay->add_option("--scene", scene_path, "scene file")->check(CLI::ExistingFile);
  replay->add_option("--seed", seed, "scene seed");
  replay->add_option("--noise-deg", noise, "attitude noise std in degrees")->expected(1);
  replay->add_option("--out", out_dir, "output directory");

  std::string series_a, series_b;
  auto* dtw = app.add_subcommand("dtw-oracle", "compare DP DTW against brute-force path enumeration");
  dtw->add_option("a", series_a, "first series CSV")->required()->check(CLI::ExistingFile);
  dtw->add_option("b", series_b, "second series CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      auto cfg = load_run_config(config_path, scene_path,
                                 train->count("--seed") ? std::optional<std::uint64_t>(seed) : std::nullopt);
      const auto res = curio::cmd_train(cfg, out_dir, [&](int e, const curio::EpisodeStats& st) {
        if ((e + 1) % 50 == 0) {
          std::cerr << "episode " << e + 1 << " return " << st.extrinsic_return << " cause "
                    << curio::to_string(st.cause) << "\n";
        }
      });
      std::cout << "episodes: " << res.episodes.size() << "\n";
      if (!res.smoothed.empty()) std::cout << "final smoothed reward: " << res.smoothed.back() << "\n";
      std::cout << "checkpoint: " << (curio::fs::path(out_dir) / "checkpoint.bin").string() << "\n";
    } else if (*eval) {
      std::optional<curio::fs::path> scene;
      if (!scene_path.empty()) scene = scene_path;
      const auto rep = curio::cmd_eval(checkpoint_path, scene, noise, trials, seed, curio::fs::path(out_dir), workers);
      std::cout << "noise_deg,position_error,average_reward,success_rate,episodes\n";
      for (const auto& r : rep.rows) {
        std::cout << r.noise_deg << "," << r.position_error << "," << r.average_reward << "," << r.success_rate
                  << "," << r.episodes << "\n";
      }
    } else if (*replay) {
      std::optional<curio::fs::path> scene;
      if (!scene_path.empty()) scene = scene_path;
      const std::string csv = curio::cmd_replay(checkpoint_path, scene, seed, noise.empty() ? 0.0 : noise.front());
      curio::fs::create_directories(out_dir);
      const auto path = curio::fs::path(out_dir) / "trajectory.csv";
      std::ofstream(path) << csv;
      std::cout << "trajectory: " << path.string() << "\n";
    } else if (*dtw) {
      std::cout << curio::format_dtw_audit(curio::cmd_dtw_oracle(series_a, series_b));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
