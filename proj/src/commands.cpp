#include "twvae/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "twvae/alignment.hpp"
#include "twvae/checkpoint.hpp"
#include "twvae/csv_io.hpp"
#include "twvae/preprocess.hpp"
#include "twvae/synth.hpp"

namespace fs = std::filesystem;

namespace twvae {

namespace {

// Validation problems that should map to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_names(const Dataset& data, Split which) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.splits[i] != which) continue;
    out.push_back(i < data.names.size() && !data.names[i].empty() ? data.names[i] : "item" + std::to_string(i));
  }
  return out;
}

void check_channels(const Dataset& data, std::size_t channels) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.trajectories[i].dims() != channels) {
      const std::string name = i < data.names.size() ? data.names[i] : std::to_string(i);
      throw UsageError("trajectory " + name + " has " + std::to_string(data.trajectories[i].dims()) +
                       " channels, the model expects " + std::to_string(channels));
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void emit(const std::optional<fs::path>& output, std::ostream& out, const std::string& text) {
  if (output) {
    write_text(*output, text);
  } else {
    out << text;
  }
}

void write_rows(std::ostringstream& os, const std::string& title, const Trajectory& t) {
  os << "# " << title << " rows=" << t.length() << '\n';
  for (std::size_t i = 0; i < t.length(); ++i) {
    for (std::size_t d = 0; d < t.dims(); ++d) os << (d ? " " : "") << format_double(t.at(i, d));
    os << '\n';
  }
}

Trajectory model_input(const Checkpoint& ck, const fs::path& path) {
  const Trajectory raw = load_csv(path);
  if (raw.dims() != ck.config.model.channels) {
    throw UsageError(path.string() + " has " + std::to_string(raw.dims()) + " channels, the model expects " +
                     std::to_string(ck.config.model.channels));
  }
  return resample(ck.preprocess.apply(raw), ck.config.model.length);
}

}  // namespace

std::string format_eval_report(const EvalReport& report, const std::vector<std::string>& train_names,
                               const std::vector<std::string>& test_names) {
  std::ostringstream os;
  os << "epoch = " << report.epoch << '\n';
  if (report.rate_bits) os << "rate_bits = " << format_double(*report.rate_bits) << '\n';
  os << "train_aligned_rmse = " << format_double(report.train_aligned_rmse) << '\n';
  os << "test_aligned_rmse = " << format_double(report.test_aligned_rmse) << '\n';
  os << "train_count = " << report.train_errors.size() << '\n';
  os << "test_count = " << report.test_errors.size() << '\n';
  for (std::size_t i = 0; i < report.train_errors.size(); ++i) {
    os << "train_error." << (i < train_names.size() ? train_names[i] : std::to_string(i)) << " = "
       << format_double(report.train_errors[i]) << '\n';
  }
  for (std::size_t i = 0; i < report.test_errors.size(); ++i) {
    os << "test_error." << (i < test_names.size() ? test_names[i] : std::to_string(i)) << " = "
       << format_double(report.test_errors[i]) << '\n';
  }
  return os.str();
}

TrainRun run_training(const RunConfig& config, const fs::path& base_dir, const fs::path& out_dir,
                      std::size_t checkpoint_every, std::ostream& log) {
  const auto problems = config.validate();
  if (!problems.empty()) throw ConfigError(problems);
  fs::create_directories(out_dir);

  Dataset data;
  if (config.dataset.empty()) {
    Rng synth_rng(config.synth_seed);
    SynthOptions opts;
    opts.count = config.synth_count;
    opts.length = config.model.length;
    opts.latent_dims = config.synth_latent_dims;
    opts.timing_spread = config.synth_timing_spread;
    opts.test_fraction = config.synth_test_fraction;
    data = synth_dataset(synth_rng, opts).data;
    save_dataset(out_dir / "data", data);
    data = load_manifest(out_dir / "data" / "manifest.csv");
  } else {
    fs::path manifest = config.dataset;
    if (manifest.is_relative()) manifest = base_dir / manifest;
    data = load_manifest(manifest);
  }
  check_channels(data, config.model.channels);
  const auto train_raw = data.select(Split::train);
  const auto test_raw = data.select(Split::test);
  if (train_raw.empty()) throw UsageError("dataset has no training trajectories");

  const PreprocessStats stats = round_to_float(fit_preprocess(train_raw, config.preprocess));
  const auto train_set = stats.apply(train_raw);
  const auto test_set = stats.apply(test_raw);

  Rng root(config.seed);
  Rng init_rng = root.fork(1);
  Rng train_rng = root.fork(2);
  ModelBundle bundle(config.model, init_rng);

  TrainRun run;
  run.metrics = out_dir / "metrics.tsv";
  run.checkpoint = out_dir / "checkpoint.bin";
  std::ofstream metrics(run.metrics, std::ios::binary | std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + run.metrics.string());

  TrainOptions opts;
  opts.epochs = config.epochs;
  opts.batch_size = config.batch_size;
  opts.learning_rate = config.learning_rate;
  opts.augment = config.augment;
  opts.augment_eta = config.augment_eta;
  opts.augment_knots = config.augment_knots;
  opts.on_epoch = [&](const EpochMetrics& m) {
    metrics << m.epoch << '\t' << format_double(m.loss.reconstruction) << '\t' << format_double(m.loss.kl) << '\t'
            << format_double(m.loss.warp_reg) << '\t' << format_double(m.loss.total) << '\t'
            << (config.log_wallclock ? format_double(std::round(m.wallclock_ms)) : "0") << std::endl;
  };
  opts.checkpoint_every = checkpoint_every;
  opts.on_checkpoint = [&](std::size_t epoch, const ModelBundle& b) {
    char name[64];
    std::snprintf(name, sizeof name, "checkpoint_epoch%06zu.bin", epoch);
    save_checkpoint(out_dir / name, b, stats, config, epoch);
  };
  log << "training " << to_string(config.model.variant) << " (" << bundle.parameter_count() << " parameters) on "
      << train_set.size() << " trajectories for " << config.epochs << " epochs\n";
  run.history = train(bundle, train_set, opts, train_rng);

  // Evaluate exactly what the checkpoint stores.
  round_to_float(bundle);
  save_checkpoint(run.checkpoint, bundle, stats, config, config.epochs);
  run.report = evaluate(bundle, train_set, test_set);
  run.report.epoch = config.epochs;
  write_text(out_dir / "eval.txt", format_eval_report(run.report, split_names(data, Split::train), split_names(data, Split::test)));
  return run;
}

int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (args.count < 1) throw UsageError("--count must be >= 1");
    if (args.latent_dims < 1 || args.latent_dims > 3) throw UsageError("--latent-dims must lie in [1, 3]");
    if (!(args.timing_spread >= 0.0 && args.timing_spread < 1.0)) throw UsageError("--timing-spread must lie in [0, 1)");
    if (args.length < 2) throw UsageError("--length must be >= 2");
    if (!(args.test_fraction >= 0.0 && args.test_fraction <= 1.0)) throw UsageError("--test-fraction must lie in [0, 1]");
    Rng rng(args.seed);
    SynthOptions opts;
    opts.count = args.count;
    opts.length = args.length;
    opts.latent_dims = args.latent_dims;
    opts.timing_spread = args.timing_spread;
    opts.test_fraction = args.test_fraction;
    const SynthDataset ds = synth_dataset(rng, opts);
    save_dataset(args.out, ds.data);

    std::ostringstream truth;
    truth << "# name,split,latent...,warp slopes...\n";
    for (std::size_t i = 0; i < ds.data.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "traj_%04zu.csv", i);
      truth << name << ',' << (ds.data.splits[i] == Split::train ? "train" : "test");
      for (double z : ds.latents[i]) truth << ',' << format_double(z);
      for (double s : ds.warps[i].slopes()) truth << ',' << format_double(s);
      truth << '\n';
    }
    write_text(args.out / "ground_truth.csv", truth.str());
    out << "wrote " << ds.data.size() << " trajectories to " << args.out.string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ParsedConfig parsed = load_run_config(args.config);
    for (const auto& w : parsed.warnings) err << "warning: " << w << '\n';
    const fs::path out_dir = args.out ? *args.out : fs::path(parsed.config.output_dir);
    const TrainRun run = run_training(parsed.config, args.config.parent_path(), out_dir, args.checkpoint_every, err);
    out << "checkpoint = " << run.checkpoint.string() << '\n';
    out << "metrics = " << run.metrics.string() << '\n';
    if (run.report.rate_bits) out << "rate_bits = " << format_double(*run.report.rate_bits) << '\n';
    out << "train_aligned_rmse = " << format_double(run.report.train_aligned_rmse) << '\n';
    out << "test_aligned_rmse = " << format_double(run.report.test_aligned_rmse) << '\n';
    return kExitOk;
  });
}

int cmd_eval(const fs::path& checkpoint, const fs::path& manifest, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ck = load_checkpoint(checkpoint);
    const Dataset data = load_manifest(manifest);
    check_channels(data, ck.config.model.channels);
    EvalReport report =
        evaluate(ck.bundle, ck.preprocess.apply(data.select(Split::train)), ck.preprocess.apply(data.select(Split::test)));
    report.epoch = ck.epoch;
    out << format_eval_report(report, split_names(data, Split::train), split_names(data, Split::test));
    return kExitOk;
  });
}

int cmd_interp(const fs::path& checkpoint, const fs::path& traj_a, const fs::path& traj_b, std::size_t steps,
               const std::optional<fs::path>& output, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (steps < 1) throw UsageError("--steps must be >= 1");
    const Checkpoint ck = load_checkpoint(checkpoint);
    const std::size_t len = ck.config.model.length;
    const Trajectory a = model_input(ck, traj_a);
    const Trajectory b = model_input(ck, traj_b);

    std::ostringstream os;
    os << "# channels:";
    for (const auto& c : a.channels()) os << ' ' << c;
    os << '\n';
    write_rows(os, "recon_a", ck.preprocess.invert(interpolate_latent(ck.bundle, a, b, 0.0)));
    write_rows(os, "recon_b", ck.preprocess.invert(interpolate_latent(ck.bundle, a, b, 1.0)));
    for (std::size_t k = 1; k <= steps; ++k) {
      const double alpha = static_cast<double>(k) / static_cast<double>(steps + 1);
      write_rows(os, "interp alpha=" + format_double(alpha), ck.preprocess.invert(interpolate_latent(ck.bundle, a, b, alpha)));
    }
    const Trajectory raw_a = resample(load_csv(traj_a), len);
    const Trajectory raw_b = resample(load_csv(traj_b), len);
    write_rows(os, "uniform_average", uniform_time_average(raw_a, raw_b, 0.5, len));
    write_rows(os, "dtw_average", dtw_average(raw_a, raw_b, 0.5));
    emit(output, out, os.str());
    return kExitOk;
  });
}

int cmd_warp(const fs::path& checkpoint, const fs::path& trajectory, const std::optional<fs::path>& output,
             std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ck = load_checkpoint(checkpoint);
    if (!has_temporal_encoder(ck.config.model.variant)) {
      throw UsageError("variant " + to_string(ck.config.model.variant) + " has no time-warper");
    }
    const WarpCoefficients w = encode_temporal(ck.bundle, model_input(ck, trajectory));
    std::ostringstream os;
    os << "# theta\n";
    for (std::size_t j = 0; j < w.segments(); ++j) os << (j ? " " : "") << format_double(w.slopes()[j]);
    os << "\n# t phi\n";
    constexpr std::size_t kSteps = 1000;
    for (std::size_t i = 0; i <= kSteps; ++i) {
      const double t = static_cast<double>(i) / kSteps;
      os << format_double(t) << ' ' << format_double(warp_eval(w, t)) << '\n';
    }
    emit(output, out, os.str());
    return kExitOk;
  });
}

}  // namespace twvae
