#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "twvae/commands.hpp"

int main(int argc, char** argv) {
  using namespace twvae;
  CLI::App app{"Time-warped trajectory VAE toolkit"};
  app.require_subcommand(1);

  SynthArgs synth;
  std::string synth_out = "synth";
  auto* s = app.add_subcommand("synth", "write a synthetic glyph dataset");
  s->add_option("--count", synth.count, "number of trajectories")->capture_default_str();
  s->add_option("--latent-dims", synth.latent_dims, "true latent dimensionality (1-3)")->capture_default_str();
  s->add_option("--timing-spread", synth.timing_spread, "warp slopes lie in [1-s, 1+s]")->capture_default_str();
  s->add_option("--seed", synth.seed)->capture_default_str();
  s->add_option("--length", synth.length, "samples per trajectory")->capture_default_str();
  s->add_option("--test-fraction", synth.test_fraction, "trailing share labelled test")->capture_default_str();
  s->add_option("--out", synth_out, "output directory")->capture_default_str();

  TrainArgs train;
  std::string train_config, train_out;
  auto* t = app.add_subcommand("train", "train a model from a config file");
  t->add_option("--config", train_config)->required();
  t->add_option("--out", train_out, "output directory (overrides output_dir)");
  t->add_option("--checkpoint-every", train.checkpoint_every, "periodic checkpoint interval in epochs (0 = off)");

  std::string ck, dataset;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  e->add_option("--checkpoint", ck)->required();
  e->add_option("--dataset", dataset, "manifest.csv")->required();

  std::string ia, ib, iout;
  std::size_t steps = 5;
  auto* i = app.add_subcommand("interp", "export latent interpolations and averaging baselines");
  i->add_option("--checkpoint", ck)->required();
  i->add_option("--a", ia)->required();
  i->add_option("--b", ib)->required();
  i->add_option("--steps", steps)->capture_default_str();
  i->add_option("--out", iout, "output file (default stdout)");

  std::string wtraj, wout;
  auto* w = app.add_subcommand("warp", "export the learned warp of one trajectory");
  w->add_option("--checkpoint", ck)->required();
  w->add_option("--trajectory", wtraj)->required();
  w->add_option("--out", wout, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto optional_path = [](const std::string& p) -> std::optional<std::filesystem::path> {
    if (p.empty()) return std::nullopt;
    return p;
  };
  if (s->parsed()) {
    synth.out = synth_out;
    return cmd_synth(synth, std::cout, std::cerr);
  }
  if (t->parsed()) {
    train.config = train_config;
    train.out = optional_path(train_out);
    return cmd_train(train, std::cout, std::cerr);
  }
  if (e->parsed()) return cmd_eval(ck, dataset, std::cout, std::cerr);
  if (i->parsed()) return cmd_interp(ck, ia, ib, steps, optional_path(iout), std::cout, std::cerr);
  return cmd_warp(ck, wtraj, optional_path(wout), std::cout, std::cerr);
}
